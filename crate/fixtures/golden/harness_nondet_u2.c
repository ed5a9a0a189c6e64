/* generated nondeterministic end-level harness */
#include <assert.h>

extern unsigned int nondet_choice(void);
extern void tpl_get_proc();
extern void tpl_put_new_proc();
extern void tpl_put_preempted_proc();
extern void tpl_schedule_from_running();

static unsigned int cnt_tpl_get_proc = 0u;
static unsigned int cnt_tpl_put_new_proc = 0u;
static unsigned int cnt_tpl_schedule_from_running = 0u;

int main(void)
{
    unsigned int step;
    for (step = 0u; step < 2u; step = step + 1u) {
        switch (nondet_choice()) {
        case 0u:
            if (cnt_tpl_get_proc < cnt_tpl_put_new_proc && cnt_tpl_get_proc < cnt_tpl_schedule_from_running) {
                tpl_get_proc();
                cnt_tpl_get_proc = cnt_tpl_get_proc + 1u;
            }
            break;
        case 1u:
            tpl_put_new_proc();
            cnt_tpl_put_new_proc = cnt_tpl_put_new_proc + 1u;
            break;
        case 2u:
            tpl_put_preempted_proc();
            break;
        case 3u:
            tpl_schedule_from_running();
            cnt_tpl_schedule_from_running = cnt_tpl_schedule_from_running + 1u;
            break;
        default:
            break;
        }
    }
    assert(tpl_fifo_rw[tpl_h_prio].size > 0);
    return 0;
}
