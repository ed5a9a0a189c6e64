// Ready-list core of a small OSEK/VDX-style kernel, written in the mini-C
// analysis subset. The scheduler keeps one FIFO per priority in
// tpl_fifo_rw; tpl_h_prio caches the highest priority holding a ready job
// (-1 when the list is empty). Public services carry the /*@api*/ marker.

int tpl_h_prio;
struct fifo tpl_fifo_rw[8];
int tpl_running_prio;
int tpl_os_started;
int tpl_last_result;
int tpl_act_count;
int tpl_res_holder;
int tpl_evt_pending;
int tpl_evt_wait_mask;
int tpl_wait_prio;
int tpl_prio_of[8];

// Insert a newly activated job at the tail of its priority fifo.
void tpl_put_new_proc(int new_prio)
{
    tpl_fifo_rw[new_prio].size = tpl_fifo_rw[new_prio].size + 1;
    if (new_prio > tpl_h_prio) {
        tpl_h_prio = new_prio;
    }
}

// Re-insert the preempted running job at the head of its priority fifo.
void tpl_put_preempted_proc(void)
{
    tpl_fifo_rw[tpl_running_prio].size = tpl_fifo_rw[tpl_running_prio].size + 1;
    if (tpl_running_prio > tpl_h_prio) {
        tpl_h_prio = tpl_running_prio;
    }
}

// Pop the highest-priority job and refresh the head cache.
void tpl_get_proc(void)
{
    assert(tpl_fifo_rw[tpl_h_prio].size > 0);
    tpl_fifo_rw[tpl_h_prio].size = tpl_fifo_rw[tpl_h_prio].size - 1;
    while (tpl_h_prio >= 0 && tpl_fifo_rw[tpl_h_prio].size == 0) {
        tpl_h_prio = tpl_h_prio - 1;
    }
}

// Elect a new job from the running context when a higher priority is ready.
void tpl_schedule_from_running(void)
{
    assert(tpl_h_prio != -1);
    if (tpl_h_prio > tpl_running_prio) {
        tpl_put_preempted_proc();
        tpl_running_prio = tpl_h_prio;
        tpl_get_proc();
    }
}

void tpl_init_os(void)
{
    tpl_os_started = 1;
    tpl_last_result = 0;
    tpl_act_count = 0;
    tpl_put_new_proc(0);
}

void tpl_activate_task(int task_prio)
{
    tpl_act_count = tpl_act_count + 1;
    tpl_put_new_proc(task_prio);
}

// The dying job never returns to the ready list.
void tpl_schedule_from_dying(void)
{
    tpl_last_result = 0;
    tpl_get_proc();
}

void tpl_schedule_from_waiting(void)
{
    tpl_get_proc();
}

void tpl_get_resource(int res_id)
{
    tpl_res_holder = res_id;
}

void tpl_release_resource(void)
{
    tpl_res_holder = -1;
}

void tpl_set_event(int set_mask)
{
    tpl_evt_pending = tpl_evt_pending | set_mask;
    if ((tpl_evt_pending & tpl_evt_wait_mask) != 0) {
        tpl_evt_wait_mask = 0;
        tpl_put_new_proc(tpl_wait_prio);
        tpl_schedule_from_running();
    }
}

void tpl_clear_event(int clear_mask)
{
    tpl_evt_pending = tpl_evt_pending & ~clear_mask;
}

void tpl_wait_event(int wait_mask)
{
    tpl_evt_wait_mask = tpl_evt_wait_mask | wait_mask;
    tpl_wait_prio = tpl_prio_of[2];
    tpl_schedule_from_waiting();
}

/*@api*/
void StartOS(int app_mode)
{
    if (tpl_os_started == 0) {
        tpl_init_os();
        tpl_schedule_from_running();
    }
}

/*@api*/
void ActivateTask(int task_id)
{
    if (tpl_os_started == 1) {
        tpl_activate_task(tpl_prio_of[task_id]);
        tpl_schedule_from_running();
    }
}

/*@api*/
void TerminateTask(void)
{
    if (tpl_os_started == 1) {
        tpl_schedule_from_dying();
    }
}

/*@api*/
void ChainTask(int task_id)
{
    if (tpl_os_started == 1) {
        tpl_activate_task(tpl_prio_of[task_id]);
        tpl_schedule_from_dying();
    }
}

/*@api*/
void Schedule(void)
{
    if (tpl_os_started == 1) {
        tpl_schedule_from_running();
    }
}

/*@api*/
void GetResource(int res_id)
{
    if (tpl_os_started == 1) {
        tpl_get_resource(res_id);
    }
}

/*@api*/
void ReleaseResource(int res_id)
{
    if (tpl_os_started == 1) {
        tpl_release_resource();
        tpl_schedule_from_running();
    }
}

/*@api*/
void SetEvent(int task_id, int set_mask)
{
    if (tpl_os_started == 1) {
        tpl_set_event(set_mask);
    }
}

/*@api*/
void ClearEvent(int clear_mask)
{
    if (tpl_os_started == 1) {
        tpl_clear_event(clear_mask);
    }
}

/*@api*/
void WaitEvent(int wait_mask)
{
    if (tpl_os_started == 1) {
        tpl_wait_event(wait_mask);
    }
}
