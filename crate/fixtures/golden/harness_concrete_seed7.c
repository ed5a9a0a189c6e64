/* generated root-level replay harness, seed 7 */
int main(void)
{
    ActivateTask(task_io);
    TerminateTask();
    ActivateTask(task_io);
    Schedule();
    WaitEvent(evt_ready);
    TerminateTask();
    SetEvent(task_io, evt_ready);
    WaitEvent(evt_ready);
    Schedule();
    Schedule();
    ActivateTask(task_ctrl);
    ActivateTask(task_io);
    ClearEvent(evt_ready);
    ClearEvent(evt_ready);
    GetResource(res_bus);
    ActivateTask(task_io);
    ReleaseResource(res_bus);
    ClearEvent(evt_ready);
    WaitEvent(evt_ready);
    Schedule();
    TerminateTask();
    ActivateTask(task_ctrl);
    SetEvent(task_io, evt_ready);
    ChainTask(task_io);
    ActivateTask(task_ctrl);
    TerminateTask();
    GetResource(res_bus);
    ActivateTask(task_io);
    ActivateTask(task_io);
    ReleaseResource(res_bus);
    return 0;
}
