//! Behavioral OSEK/VDX simulator: task lifecycle, fixed-priority fully
//! preemptive scheduling with per-priority FIFO ready queues, events,
//! resources, API precondition checking, and assertion monitors.
//!
//! The simulator is the oracle scenario generation validates against. It
//! is deliberately faithful to one real-world defect: per-task activation
//! counters are `counter_bits` wide and wrap silently, while a 64-bit
//! shadow total keeps the ground truth. The monitors compare the two
//! views.
//!
//! Scheduling rules: full preemption, the preempted task goes back to the
//! FRONT of its priority queue, equal priorities never preempt, and tasks
//! of equal priority run in FIFO activation order. The resource ceiling
//! protocol is out of scope; resources are plain mutual exclusion with
//! LIFO release order.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::oil::OilConfig;

// ---------------------------------------------------------------------------
// API calls
// ---------------------------------------------------------------------------

/// The ten modeled kernel services.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Api {
    ActivateTask,
    TerminateTask,
    ChainTask,
    Schedule,
    GetResource,
    ReleaseResource,
    SetEvent,
    ClearEvent,
    WaitEvent,
    StartOs,
}

pub const ALL_APIS: [Api; 10] = [
    Api::ActivateTask,
    Api::TerminateTask,
    Api::ChainTask,
    Api::Schedule,
    Api::GetResource,
    Api::ReleaseResource,
    Api::SetEvent,
    Api::ClearEvent,
    Api::WaitEvent,
    Api::StartOs,
];

impl Api {
    pub fn name(self) -> &'static str {
        match self {
            Api::ActivateTask => "ActivateTask",
            Api::TerminateTask => "TerminateTask",
            Api::ChainTask => "ChainTask",
            Api::Schedule => "Schedule",
            Api::GetResource => "GetResource",
            Api::ReleaseResource => "ReleaseResource",
            Api::SetEvent => "SetEvent",
            Api::ClearEvent => "ClearEvent",
            Api::WaitEvent => "WaitEvent",
            Api::StartOs => "StartOS",
        }
    }

    pub fn from_name(name: &str) -> Result<Api> {
        ALL_APIS
            .into_iter()
            .find(|a| a.name() == name)
            .ok_or_else(|| Error::UnknownApi(name.to_string()))
    }

    /// Number of object arguments the service takes.
    pub fn arity(self) -> usize {
        match self {
            Api::TerminateTask | Api::Schedule | Api::StartOs => 0,
            Api::SetEvent => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Api {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One service invocation with its object arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiCall {
    pub api: Api,
    pub args: Vec<String>,
}

impl ApiCall {
    pub fn new(api: Api, args: &[&str]) -> Self {
        ApiCall {
            api,
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl fmt::Display for ApiCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.api, self.args.join(","))
    }
}

// ---------------------------------------------------------------------------
// External constraint table
// ---------------------------------------------------------------------------

/// One table row: the state predicate the simulator checks before a call,
/// and the projection of that predicate onto prior API calls (used for
/// internal-constraint derivation).
#[derive(Debug, Clone)]
pub struct ConstraintRow {
    pub api: Api,
    /// Identifier of the precondition predicate, documented in
    /// `docs/CONSTRAINTS.md`.
    pub predicate: &'static str,
    /// APIs at least one of which must have run before this one can
    /// succeed. Empty when the service has no API-shaped precondition.
    pub precondition_apis: &'static [Api],
    /// True when the row is reconstructed from the standard's error
    /// conditions rather than stated outright in its service description.
    pub reconstructed: bool,
}

/// Preconditions among the ten services.
#[derive(Debug, Clone)]
pub struct ExternalConstraintTable {
    rows: Vec<ConstraintRow>,
}

impl ExternalConstraintTable {
    /// The documented table (see `docs/CONSTRAINTS.md`).
    pub fn standard() -> Self {
        use Api::*;
        let rows = vec![
            ConstraintRow {
                api: StartOs,
                predicate: "os_not_yet_started",
                precondition_apis: &[],
                reconstructed: true,
            },
            ConstraintRow {
                api: ActivateTask,
                predicate: "os_started_and_target_below_activation_limit",
                precondition_apis: &[StartOs],
                reconstructed: true,
            },
            ConstraintRow {
                api: TerminateTask,
                predicate: "caller_activated_and_holds_no_resource",
                precondition_apis: &[ActivateTask, ChainTask],
                reconstructed: false,
            },
            ConstraintRow {
                api: ChainTask,
                predicate: "caller_activated_and_target_below_activation_limit",
                precondition_apis: &[ActivateTask, ChainTask],
                reconstructed: true,
            },
            ConstraintRow {
                api: Schedule,
                predicate: "caller_running_and_holds_no_resource",
                precondition_apis: &[ActivateTask, ChainTask],
                reconstructed: true,
            },
            ConstraintRow {
                api: GetResource,
                predicate: "caller_running_and_resource_free",
                precondition_apis: &[ActivateTask, ChainTask],
                reconstructed: true,
            },
            ConstraintRow {
                api: ReleaseResource,
                predicate: "caller_holds_resource_in_lifo_order",
                precondition_apis: &[GetResource],
                reconstructed: false,
            },
            ConstraintRow {
                api: SetEvent,
                predicate: "target_extended_owns_event_not_suspended",
                precondition_apis: &[ActivateTask, ChainTask],
                reconstructed: true,
            },
            ConstraintRow {
                api: ClearEvent,
                predicate: "caller_extended_and_owns_event",
                precondition_apis: &[SetEvent],
                reconstructed: true,
            },
            ConstraintRow {
                api: WaitEvent,
                predicate: "caller_extended_owns_event_holds_no_resource",
                precondition_apis: &[SetEvent],
                reconstructed: false,
            },
        ];
        ExternalConstraintTable { rows }
    }

    pub fn rows(&self) -> &[ConstraintRow] {
        &self.rows
    }

    pub fn row(&self, api: Api) -> &ConstraintRow {
        self.rows
            .iter()
            .find(|r| r.api == api)
            .expect("all APIs have rows")
    }

    /// Precondition APIs by name, for graph-level derivation. `None` when
    /// the name is not a table row.
    pub fn precondition_apis(&self, api_name: &str) -> Option<BTreeSet<String>> {
        self.rows
            .iter()
            .find(|r| r.api.name() == api_name)
            .map(|r| {
                r.precondition_apis
                    .iter()
                    .map(|a| a.name().to_string())
                    .collect()
            })
    }
}

// ---------------------------------------------------------------------------
// Tasks and state
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskState {
    Suspended,
    Ready,
    Running,
    Waiting,
}

impl fmt::Display for TaskState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TaskState::Suspended => "SUSPENDED",
            TaskState::Ready => "READY",
            TaskState::Running => "RUNNING",
            TaskState::Waiting => "WAITING",
        };
        f.write_str(s)
    }
}

/// Task control block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tcb {
    pub name: String,
    pub static_priority: u32,
    pub state: TaskState,
    /// Pending activations as the kernel sees them: wraps silently at
    /// `2^counter_bits`.
    pub activation_count: u64,
    /// Ground truth: every activation ever requested (64-bit, never wraps).
    pub activated_total: u64,
    /// Ground truth: every activation consumed by termination.
    pub consumed_total: u64,
    pub pending_events: u32,
    pub waiting_mask: u32,
    pub held_resources: Vec<String>,
    /// Calls queued against this task and not yet executed. Kept so the
    /// flush-on-preemption rule has something to operate on.
    pub body: VecDeque<ApiCall>,
    pub extended: bool,
    pub autostart: bool,
    pub max_activations: u64,
    pub owned_events: BTreeSet<String>,
}

impl Tcb {
    /// Activations the wide bookkeeping says are still alive.
    pub fn wide_pending(&self) -> u64 {
        self.activated_total - self.consumed_total
    }
}

/// Outcome flags of one applied call, consumed by coverage accounting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ApplyOutcome {
    /// A context switch happened (someone new became running).
    pub switched: bool,
    /// The previously running task was displaced while still ready.
    pub preempted: bool,
    /// A waiting task was released by an event.
    pub woke: bool,
    /// The terminated task had further pending activations and re-entered
    /// the ready queue.
    pub requeued: bool,
    /// WaitEvent actually blocked the caller.
    pub blocked: bool,
}

/// One line of the execution trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub step: u64,
    pub call: String,
    pub running_after: Option<String>,
    pub violations: usize,
}

/// Monitors mirroring the kernel assertions under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MonitorId {
    /// Ready queue empty and nothing running although the wide bookkeeping
    /// says some suspended task still has live activations: the wrapped
    /// counter lost them, so the highest-ready-priority sentinel is -1
    /// exactly when it must not be.
    M1LostActivations,
    /// Some task is ready but no task is running after an election.
    M2NoRunningTask,
    /// The running-task reference points at a task whose state is not
    /// RUNNING.
    M3RunningStateMismatch,
}

impl fmt::Display for MonitorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MonitorId::M1LostActivations => "M1",
            MonitorId::M2NoRunningTask => "M2",
            MonitorId::M3RunningStateMismatch => "M3",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonitorViolation {
    pub monitor: MonitorId,
    pub detail: String,
}

/// A precondition check either passes or names the violated table row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Precheck {
    Ok,
    Violation(Violation),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub api: Api,
    /// Predicate id of the violated row.
    pub rule: &'static str,
    pub reason: String,
}

/// Full simulator state. A value: clone freely, advance one instance from
/// one thread only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimState {
    tasks: BTreeMap<String, Tcb>,
    /// Declaration order, fixing FIFO tie-breaks at start-up.
    task_order: Vec<String>,
    /// Per-priority FIFO of ready task names.
    ready: BTreeMap<u32, VecDeque<String>>,
    running: Option<String>,
    resources: BTreeMap<String, Option<String>>,
    event_bits: BTreeMap<String, u32>,
    counter_bits: u32,
    os_started: bool,
    step: u64,
    trace: Vec<TraceEntry>,
}

impl SimState {
    /// Build a not-yet-started system: every task suspended, no trace.
    pub fn fresh(cfg: &OilConfig) -> Result<SimState> {
        if cfg.events.len() > 32 {
            return Err(Error::Validation("at most 32 events are supported".into()));
        }
        let event_bits: BTreeMap<String, u32> = cfg
            .events
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), 1u32 << i))
            .collect();
        let tasks = cfg
            .tasks
            .iter()
            .map(|t| {
                (
                    t.name.clone(),
                    Tcb {
                        name: t.name.clone(),
                        static_priority: t.priority,
                        state: TaskState::Suspended,
                        activation_count: 0,
                        activated_total: 0,
                        consumed_total: 0,
                        pending_events: 0,
                        waiting_mask: 0,
                        held_resources: Vec::new(),
                        body: VecDeque::new(),
                        extended: t.extended,
                        autostart: t.autostart,
                        max_activations: t.max_activations,
                        owned_events: t.events.iter().cloned().collect(),
                    },
                )
            })
            .collect();
        Ok(SimState {
            tasks,
            task_order: cfg.tasks.iter().map(|t| t.name.clone()).collect(),
            ready: BTreeMap::new(),
            running: None,
            resources: cfg.resources.iter().map(|r| (r.clone(), None)).collect(),
            event_bits,
            counter_bits: cfg.counter_bits,
            os_started: false,
            step: 0,
            trace: Vec::new(),
        })
    }

    /// Start-up state: `StartOS` applied to a fresh system, so autostart
    /// tasks are ready (activation count 1) and the highest-priority one is
    /// running.
    pub fn init(cfg: &OilConfig) -> Result<SimState> {
        let mut s = SimState::fresh(cfg)?;
        s.apply_api(&ApiCall::new(Api::StartOs, &[]))?;
        Ok(s)
    }

    pub fn running(&self) -> Option<&str> {
        self.running.as_deref()
    }

    pub fn task(&self, name: &str) -> Option<&Tcb> {
        self.tasks.get(name)
    }

    pub fn tasks(&self) -> impl Iterator<Item = &Tcb> {
        self.tasks.values()
    }

    pub fn counter_bits(&self) -> u32 {
        self.counter_bits
    }

    pub fn os_started(&self) -> bool {
        self.os_started
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    pub fn resource_holder(&self, r: &str) -> Option<&str> {
        self.resources.get(r).and_then(|h| h.as_deref())
    }

    /// Highest priority with a non-empty ready queue, the scheduler's
    /// sentinel: `None` plays the role of "-1, nothing ready".
    pub fn highest_ready_priority(&self) -> Option<u32> {
        self.ready
            .iter()
            .rev()
            .find(|(_, q)| !q.is_empty())
            .map(|(p, _)| *p)
    }

    fn ready_is_empty(&self) -> bool {
        self.highest_ready_priority().is_none()
    }

    /// Every task whose wide bookkeeping says it was ever started.
    pub fn started_tasks(&self) -> Vec<&Tcb> {
        self.tasks
            .values()
            .filter(|t| t.activated_total > 0)
            .collect()
    }

    /// Scenario-completion test: something ran, and every started task has
    /// finished via TerminateTask or ChainTask (the only paths back to
    /// SUSPENDED).
    pub fn all_started_terminated(&self) -> bool {
        let started = self.started_tasks();
        !started.is_empty() && started.iter().all(|t| t.state == TaskState::Suspended)
    }

    // -- queue plumbing ------------------------------------------------------

    fn enqueue_tail(&mut self, name: &str) {
        let prio = self.tasks[name].static_priority;
        self.ready
            .entry(prio)
            .or_default()
            .push_back(name.to_string());
    }

    fn enqueue_front(&mut self, name: &str) {
        let prio = self.tasks[name].static_priority;
        self.ready
            .entry(prio)
            .or_default()
            .push_front(name.to_string());
    }

    fn dequeue(&mut self, name: &str) {
        let prio = self.tasks[name].static_priority;
        if let Some(q) = self.ready.get_mut(&prio) {
            q.retain(|n| n != name);
        }
    }

    fn pop_highest(&mut self) -> Option<String> {
        let prio = self.highest_ready_priority()?;
        self.ready.get_mut(&prio).and_then(|q| q.pop_front())
    }

    // -- preconditions -------------------------------------------------------

    fn known_task(&self, name: &str) -> Result<&Tcb> {
        self.tasks
            .get(name)
            .ok_or_else(|| Error::UnknownObject(format!("task {name:?}")))
    }

    fn running_tcb(&self) -> Option<&Tcb> {
        self.running.as_ref().map(|r| &self.tasks[r])
    }

    /// Pure predicate over the current state; never changes it.
    pub fn check_precondition(&self, call: &ApiCall) -> Result<Precheck> {
        static TABLE: std::sync::LazyLock<ExternalConstraintTable> =
            std::sync::LazyLock::new(ExternalConstraintTable::standard);
        let rule = TABLE.row(call.api).predicate;
        if call.args.len() != call.api.arity() {
            return Err(Error::UnknownObject(format!(
                "{} takes {} argument(s), got {}",
                call.api,
                call.api.arity(),
                call.args.len()
            )));
        }
        let viol = |reason: String| {
            Ok(Precheck::Violation(Violation {
                api: call.api,
                rule,
                reason,
            }))
        };
        if call.api != Api::StartOs && !self.os_started {
            return viol("OS not started".into());
        }
        match call.api {
            Api::StartOs => {
                if self.os_started {
                    return viol("OS already started".into());
                }
            }
            Api::ActivateTask => {
                let t = self.known_task(&call.args[0])?;
                if t.activation_count >= t.max_activations {
                    return viol(format!(
                        "{} is at its activation limit {}",
                        t.name, t.max_activations
                    ));
                }
            }
            Api::TerminateTask => {
                let Some(r) = self.running_tcb() else {
                    return viol("no running task: nothing was activated".into());
                };
                if !r.held_resources.is_empty() {
                    return viol(format!("{} still holds resources", r.name));
                }
            }
            Api::ChainTask => {
                let t = self.known_task(&call.args[0])?;
                let Some(r) = self.running_tcb() else {
                    return viol("no running task: nothing was activated".into());
                };
                if !r.held_resources.is_empty() {
                    return viol(format!("{} still holds resources", r.name));
                }
                if t.name != r.name && t.activation_count >= t.max_activations {
                    return viol(format!(
                        "{} is at its activation limit {}",
                        t.name, t.max_activations
                    ));
                }
            }
            Api::Schedule => {
                let Some(r) = self.running_tcb() else {
                    return viol("no running task".into());
                };
                if !r.held_resources.is_empty() {
                    return viol(format!("{} still holds resources", r.name));
                }
            }
            Api::GetResource => {
                let res = &call.args[0];
                let holder = self
                    .resources
                    .get(res)
                    .ok_or_else(|| Error::UnknownObject(format!("resource {res:?}")))?;
                if self.running.is_none() {
                    return viol("no running task".into());
                }
                if let Some(h) = holder {
                    return viol(format!("{res} already held by {h}"));
                }
            }
            Api::ReleaseResource => {
                let res = &call.args[0];
                self.resources
                    .get(res)
                    .ok_or_else(|| Error::UnknownObject(format!("resource {res:?}")))?;
                let Some(r) = self.running_tcb() else {
                    return viol("no running task".into());
                };
                match r.held_resources.last() {
                    Some(last) if last == res => {}
                    Some(_) => {
                        return viol(format!("{res} is not the most recently taken resource"))
                    }
                    None => return viol(format!("{} holds no resources", r.name)),
                }
            }
            Api::SetEvent => {
                let t = self.known_task(&call.args[0])?;
                let ev = &call.args[1];
                if !self.event_bits.contains_key(ev) {
                    return Err(Error::UnknownObject(format!("event {ev:?}")));
                }
                if !t.extended {
                    return viol(format!("{} is a basic task", t.name));
                }
                if !t.owned_events.contains(ev) {
                    return viol(format!("{} does not own event {ev}", t.name));
                }
                if t.state == TaskState::Suspended {
                    return viol(format!("{} is suspended", t.name));
                }
            }
            Api::ClearEvent | Api::WaitEvent => {
                let ev = &call.args[0];
                if !self.event_bits.contains_key(ev) {
                    return Err(Error::UnknownObject(format!("event {ev:?}")));
                }
                let Some(r) = self.running_tcb() else {
                    return viol("no running task".into());
                };
                if !r.extended {
                    return viol(format!("{} is a basic task", r.name));
                }
                if !r.owned_events.contains(ev) {
                    return viol(format!("{} does not own event {ev}", r.name));
                }
                if call.api == Api::WaitEvent && !r.held_resources.is_empty() {
                    return viol(format!("{} still holds resources", r.name));
                }
            }
        }
        Ok(Precheck::Ok)
    }

    // -- core transitions ----------------------------------------------------

    fn counter_modulus(&self) -> u64 {
        1u64 << self.counter_bits
    }

    /// One activation: bump both counters; the wrapped counter drives the
    /// ready queue, so a wrap to zero silently drops the task's queued
    /// activations.
    fn activate_core(&mut self, name: &str) {
        let modulus = self.counter_modulus();
        let t = self.tasks.get_mut(name).expect("caller checked task");
        t.activation_count = (t.activation_count + 1) % modulus;
        t.activated_total += 1;
        if t.activation_count == 0 {
            // lost activations: the kernel now believes none are pending
            if t.state == TaskState::Ready {
                t.state = TaskState::Suspended;
                self.dequeue(name);
            }
        } else if t.state == TaskState::Suspended {
            t.state = TaskState::Ready;
            self.enqueue_tail(name);
        }
    }

    /// Consume the running task's current activation. Held resources are
    /// returned: the API preconditions forbid terminating while holding,
    /// but the end-level dispatch primitive can displace a holder.
    fn terminate_core(&mut self, outcome: &mut ApplyOutcome) {
        let Some(name) = self.running.take() else {
            return;
        };
        let t = self.tasks.get_mut(&name).expect("running task exists");
        if t.activation_count > 0 {
            t.activation_count -= 1;
        }
        t.consumed_total += 1;
        t.pending_events = 0;
        t.waiting_mask = 0;
        let released = std::mem::take(&mut t.held_resources);
        if t.activation_count > 0 {
            t.state = TaskState::Ready;
            outcome.requeued = true;
            self.enqueue_tail(&name);
        } else {
            t.state = TaskState::Suspended;
        }
        for r in released {
            self.resources.insert(r, None);
        }
    }

    /// Election: promote the head of the highest non-empty priority queue,
    /// preempting a strictly lower-priority running task. The preempted
    /// task goes to the FRONT of its queue, and any calls still queued in
    /// its body are executed at the preemption point.
    pub fn scheduler(&mut self) -> Result<ApplyOutcome> {
        let mut outcome = ApplyOutcome::default();
        self.elect(&mut outcome)?;
        Ok(outcome)
    }

    fn elect(&mut self, outcome: &mut ApplyOutcome) -> Result<()> {
        let Some(head_prio) = self.highest_ready_priority() else {
            return Ok(());
        };
        let preempted: Option<String> = match &self.running {
            None => None,
            Some(r) => {
                let rp = self.tasks[r].static_priority;
                if head_prio > rp {
                    let name = r.clone();
                    self.tasks.get_mut(&name).unwrap().state = TaskState::Ready;
                    self.enqueue_front(&name);
                    self.running = None;
                    outcome.preempted = true;
                    Some(name)
                } else {
                    return Ok(());
                }
            }
        };
        let next = self.pop_highest().expect("head priority was non-empty");
        self.tasks.get_mut(&next).unwrap().state = TaskState::Running;
        self.running = Some(next);
        outcome.switched = true;
        if let Some(name) = preempted {
            self.flush_body(&name)?;
        }
        Ok(())
    }

    /// Execute every call still pending in `name`'s body, in FIFO order.
    fn flush_body(&mut self, name: &str) -> Result<()> {
        while let Some(call) = self.tasks.get_mut(name).and_then(|t| t.body.pop_front()) {
            let mut outcome = ApplyOutcome::default();
            self.execute(&call, &mut outcome)?;
        }
        Ok(())
    }

    fn execute(&mut self, call: &ApiCall, outcome: &mut ApplyOutcome) -> Result<()> {
        match call.api {
            Api::StartOs => {
                self.start_core(outcome)?;
            }
            Api::ActivateTask => {
                self.activate_core(&call.args[0]);
                self.elect(outcome)?;
            }
            Api::TerminateTask => {
                self.terminate_core(outcome);
                self.elect(outcome)?;
            }
            Api::ChainTask => {
                self.terminate_core(outcome);
                self.activate_core(&call.args[0]);
                self.elect(outcome)?;
            }
            Api::Schedule => {
                self.elect(outcome)?;
            }
            Api::GetResource => {
                let r = self.running.clone().expect("precondition");
                self.resources.insert(call.args[0].clone(), Some(r.clone()));
                self.tasks
                    .get_mut(&r)
                    .unwrap()
                    .held_resources
                    .push(call.args[0].clone());
            }
            Api::ReleaseResource => {
                let r = self.running.clone().expect("precondition");
                self.tasks.get_mut(&r).unwrap().held_resources.pop();
                self.resources.insert(call.args[0].clone(), None);
                self.elect(outcome)?;
            }
            Api::SetEvent => {
                let bit = self.event_bits[&call.args[1]];
                let t = self.tasks.get_mut(&call.args[0]).expect("precondition");
                t.pending_events |= bit;
                if t.state == TaskState::Waiting && t.pending_events & t.waiting_mask != 0 {
                    t.waiting_mask = 0;
                    t.state = TaskState::Ready;
                    let name = t.name.clone();
                    self.enqueue_tail(&name);
                    outcome.woke = true;
                    self.elect(outcome)?;
                }
            }
            Api::ClearEvent => {
                let bit = self.event_bits[&call.args[0]];
                let r = self.running.clone().expect("precondition");
                self.tasks.get_mut(&r).unwrap().pending_events &= !bit;
            }
            Api::WaitEvent => {
                let bit = self.event_bits[&call.args[0]];
                let r = self.running.clone().expect("precondition");
                let t = self.tasks.get_mut(&r).unwrap();
                if t.pending_events & bit == 0 {
                    t.waiting_mask = bit;
                    t.state = TaskState::Waiting;
                    self.running = None;
                    outcome.blocked = true;
                    self.elect(outcome)?;
                }
            }
        }
        Ok(())
    }

    fn start_core(&mut self, outcome: &mut ApplyOutcome) -> Result<()> {
        self.os_started = true;
        let order = self.task_order.clone();
        for name in order {
            if self.tasks[&name].autostart {
                self.activate_core(&name);
            }
        }
        self.elect(outcome)
    }

    /// Apply one service call: check the precondition, queue the call on
    /// the running task's body, and run the system to quiescence. The trace
    /// gains one entry.
    pub fn apply_api(&mut self, call: &ApiCall) -> Result<ApplyOutcome> {
        match self.check_precondition(call)? {
            Precheck::Ok => {}
            Precheck::Violation(v) => {
                return Err(Error::Precondition(format!(
                    "{}: {} ({})",
                    v.api, v.reason, v.rule
                )))
            }
        }
        let mut outcome = ApplyOutcome::default();
        if let Some(r) = self.running.clone() {
            // the call is added to the running task's body, then executed
            // from there
            self.tasks.get_mut(&r).unwrap().body.push_back(call.clone());
            while let Some(next) = self
                .running
                .clone()
                .and_then(|r| self.tasks.get_mut(&r).unwrap().body.pop_front())
            {
                self.execute(&next, &mut outcome)?;
            }
        } else {
            // nothing is running: the call executes from the harness itself
            self.execute(call, &mut outcome)?;
        }
        self.push_trace(&call.to_string());
        Ok(outcome)
    }

    /// Test/demo hook for the flush-on-preemption rule: queue a call on a
    /// task's body without executing it.
    pub fn enqueue_body(&mut self, task: &str, call: ApiCall) -> Result<()> {
        self.tasks
            .get_mut(task)
            .ok_or_else(|| Error::UnknownObject(format!("task {task:?}")))?
            .body
            .push_back(call);
        Ok(())
    }

    fn push_trace(&mut self, call: &str) {
        self.step += 1;
        self.trace.push(TraceEntry {
            step: self.step,
            call: call.to_string(),
            running_after: self.running.clone(),
            violations: 0,
        });
    }

    /// Attach a violation count to the most recent trace entry.
    pub fn note_violations(&mut self, count: usize) {
        if let Some(last) = self.trace.last_mut() {
            last.violations = count;
        }
    }

    // -- end-level primitives -------------------------------------------------
    //
    // Direct queue/scheduler surgery, bypassing every API precondition.
    // These are the operations end-level scenarios bind to.

    /// Activation analog: exactly the counter-and-queue effect of an
    /// activation, without precondition or election.
    pub fn prim_enqueue_new(&mut self, task: &str) -> Result<()> {
        self.known_task(task)?;
        self.activate_core(task);
        self.push_trace(&format!("enqueue_new({task})"));
        Ok(())
    }

    /// Preemption analog: the running task re-enters the FRONT of its
    /// priority queue.
    pub fn prim_requeue_preempted(&mut self) -> Result<()> {
        if let Some(r) = self.running.take() {
            self.tasks.get_mut(&r).unwrap().state = TaskState::Ready;
            self.enqueue_front(&r);
        }
        self.push_trace("requeue_preempted()");
        Ok(())
    }

    /// Dispatch analog: consume the running task's activation and promote
    /// the head of the highest priority queue.
    pub fn prim_take_next(&mut self) -> Result<()> {
        let mut outcome = ApplyOutcome::default();
        self.terminate_core(&mut outcome);
        if let Some(next) = self.pop_highest() {
            self.tasks.get_mut(&next).unwrap().state = TaskState::Running;
            self.running = Some(next);
        }
        self.push_trace("take_next()");
        Ok(())
    }

    /// Election analog: run the scheduler.
    pub fn prim_elect(&mut self) -> Result<ApplyOutcome> {
        let mut outcome = ApplyOutcome::default();
        self.elect(&mut outcome)?;
        self.push_trace("elect()");
        Ok(outcome)
    }

    // -- monitors -------------------------------------------------------------

    /// Evaluate the three assertion monitors against the current state.
    ///
    /// The lost-activation monitor ignores the running task: a running
    /// task is not in the ready queue, so the highest-ready-priority
    /// sentinel reads -1 whenever the queues are empty, running task or
    /// not.
    pub fn check_monitors(&self) -> Vec<MonitorViolation> {
        let mut out = Vec::new();
        if self.ready_is_empty() {
            for t in self.tasks.values() {
                if t.state == TaskState::Suspended && t.wide_pending() > 0 {
                    out.push(MonitorViolation {
                        monitor: MonitorId::M1LostActivations,
                        detail: format!(
                            "highest ready priority is -1 but {} has {} live activation(s); \
                             its {}-bit counter reads {}",
                            t.name,
                            t.wide_pending(),
                            self.counter_bits,
                            t.activation_count
                        ),
                    });
                }
            }
        }
        if self.running.is_none() {
            if let Some(t) = self.tasks.values().find(|t| t.state == TaskState::Ready) {
                out.push(MonitorViolation {
                    monitor: MonitorId::M2NoRunningTask,
                    detail: format!("{} is ready but no task is running", t.name),
                });
            }
        }
        if let Some(r) = &self.running {
            let t = &self.tasks[r];
            if t.state != TaskState::Running {
                out.push(MonitorViolation {
                    monitor: MonitorId::M3RunningStateMismatch,
                    detail: format!("running task {} is in state {}", t.name, t.state),
                });
            }
        }
        out
    }

    /// Structural coherence check used by tests: single running task,
    /// ready-queue/state agreement, resource holder agreement.
    pub fn check_coherence(&self) -> std::result::Result<(), String> {
        let running_count = self
            .tasks
            .values()
            .filter(|t| t.state == TaskState::Running)
            .count();
        if running_count > 1 {
            return Err(format!("{running_count} tasks in state RUNNING"));
        }
        match &self.running {
            Some(r) => {
                if self.tasks[r].state != TaskState::Running {
                    return Err(format!("running reference {r} not in state RUNNING"));
                }
            }
            None => {
                if running_count != 0 {
                    return Err("a task is RUNNING but the running reference is unset".into());
                }
            }
        }
        let mut queued: BTreeMap<&str, usize> = BTreeMap::new();
        for q in self.ready.values() {
            for n in q {
                *queued.entry(n.as_str()).or_default() += 1;
            }
        }
        for t in self.tasks.values() {
            let count = queued.get(t.name.as_str()).copied().unwrap_or(0);
            match t.state {
                TaskState::Ready if count != 1 => {
                    return Err(format!("{} READY but queued {count} times", t.name))
                }
                TaskState::Suspended | TaskState::Running | TaskState::Waiting if count != 0 => {
                    return Err(format!("{} {} but queued", t.name, t.state))
                }
                _ => {}
            }
            if t.state == TaskState::Waiting && !t.extended {
                return Err(format!("basic task {} is WAITING", t.name));
            }
        }
        for (r, holder) in &self.resources {
            if let Some(h) = holder {
                let t = &self.tasks[h];
                if t.state == TaskState::Suspended {
                    return Err(format!("suspended task {h} holds {r}"));
                }
                if !t.held_resources.contains(r) {
                    return Err(format!(
                        "{h} recorded as holder of {r} but does not hold it"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Render the trace in the documented log format.
    pub fn export_trace(&self) -> String {
        let mut out = String::new();
        for e in &self.trace {
            out.push_str(&format!(
                "{}\t{}\trunning={}\tviolations={}\n",
                e.step,
                e.call,
                e.running_after.as_deref().unwrap_or("none"),
                e.violations
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oil::parse_oil;
    use proptest::prelude::*;

    fn cfg(src: &str) -> OilConfig {
        parse_oil(src, "test.oil").unwrap()
    }

    fn three_task_cfg() -> OilConfig {
        cfg("CPU c {
            TASK task_bg   { PRIORITY = 1; AUTOSTART = TRUE;  ACTIVATION = 8; };
            TASK task_ctrl { PRIORITY = 2; AUTOSTART = FALSE; ACTIVATION = 8; };
            TASK task_io   { PRIORITY = 2; AUTOSTART = FALSE; ACTIVATION = 8; EVENT = evt_ready; };
            EVENT evt_ready { MASK = AUTO; };
            RESOURCE res_bus { RESOURCEPROPERTY = STANDARD; };
        };")
    }

    fn call(api: Api, args: &[&str]) -> ApiCall {
        ApiCall::new(api, args)
    }

    #[test]
    fn init_promotes_single_autostart_task() {
        let c = cfg("CPU c { TASK t { PRIORITY = 1; AUTOSTART = TRUE; }; };");
        let s = SimState::init(&c).unwrap();
        assert_eq!(s.running(), Some("t"));
        assert_eq!(s.task("t").unwrap().state, TaskState::Running);
        assert_eq!(s.task("t").unwrap().activation_count, 1);
        assert!(s.highest_ready_priority().is_none());
    }

    #[test]
    fn init_without_autostart_leaves_everything_suspended() {
        let c = cfg("CPU c { TASK t { PRIORITY = 1; }; TASK u { PRIORITY = 2; }; };");
        let s = SimState::init(&c).unwrap();
        assert_eq!(s.running(), None);
        assert!(s.tasks().all(|t| t.state == TaskState::Suspended));
    }

    #[test]
    fn init_three_task_fixture_shape() {
        let s = SimState::init(&three_task_cfg()).unwrap();
        // only autostart task is the priority-1 background task
        assert_eq!(s.running(), Some("task_bg"));
        assert_eq!(s.task("task_ctrl").unwrap().state, TaskState::Suspended);
        assert_eq!(s.task("task_io").unwrap().state, TaskState::Suspended);
        s.check_coherence().unwrap();
        assert!(s.check_monitors().is_empty());
    }

    #[test]
    fn terminate_without_activation_is_a_violation() {
        let c = cfg("CPU c { TASK t { PRIORITY = 1; }; };");
        let s = SimState::init(&c).unwrap();
        match s
            .check_precondition(&call(Api::TerminateTask, &[]))
            .unwrap()
        {
            Precheck::Violation(v) => {
                assert_eq!(v.api, Api::TerminateTask);
                assert!(v.reason.contains("activated"), "{}", v.reason);
            }
            Precheck::Ok => panic!("expected violation"),
        }
    }

    #[test]
    fn release_resource_held_by_running_is_ok() {
        let c = cfg("CPU c { TASK t { PRIORITY = 1; AUTOSTART = TRUE; }; RESOURCE r {}; };");
        let mut s = SimState::init(&c).unwrap();
        s.apply_api(&call(Api::GetResource, &["r"])).unwrap();
        assert_eq!(s.resource_holder("r"), Some("t"));
        assert_eq!(
            s.check_precondition(&call(Api::ReleaseResource, &["r"]))
                .unwrap(),
            Precheck::Ok
        );
        s.apply_api(&call(Api::ReleaseResource, &["r"])).unwrap();
        assert_eq!(s.resource_holder("r"), None);
    }

    #[test]
    fn wait_event_by_basic_task_is_a_violation() {
        let c = cfg("CPU c { TASK t { PRIORITY = 1; AUTOSTART = TRUE; }; EVENT e {}; };");
        let s = SimState::init(&c).unwrap();
        match s.check_precondition(&call(Api::WaitEvent, &["e"])).unwrap() {
            Precheck::Violation(v) => assert!(v.reason.contains("basic"), "{}", v.reason),
            Precheck::Ok => panic!("expected violation"),
        }
    }

    #[test]
    fn activation_readies_suspended_task() {
        // higher-priority autostart task keeps running, target stays READY
        let c = cfg("CPU c {
            TASK hi { PRIORITY = 5; AUTOSTART = TRUE; };
            TASK lo { PRIORITY = 1; };
        };");
        let mut s = SimState::init(&c).unwrap();
        assert_eq!(s.task("lo").unwrap().activation_count, 0);
        s.apply_api(&call(Api::ActivateTask, &["lo"])).unwrap();
        assert_eq!(s.task("lo").unwrap().state, TaskState::Ready);
        assert_eq!(s.task("lo").unwrap().activation_count, 1);
        assert_eq!(s.running(), Some("hi"));
    }

    #[test]
    fn counter_wraps_at_width_boundary() {
        let c = cfg("CPU c { OS o { COUNTER_BITS = 8; }; TASK t { PRIORITY = 1; }; };");
        let mut s = SimState::init(&c).unwrap();
        for _ in 0..255 {
            s.prim_enqueue_new("t").unwrap();
        }
        assert_eq!(s.task("t").unwrap().activation_count, 255);
        s.prim_enqueue_new("t").unwrap();
        assert_eq!(s.task("t").unwrap().activation_count, 0);
        assert_eq!(s.task("t").unwrap().activated_total, 256);
    }

    #[test]
    fn api_level_activation_wraps_when_the_limit_allows_it() {
        // an activation limit above the counter modulus lets the wrap
        // happen through the public service as well: the 256th call on a
        // count-255 task rolls the counter to 0
        let c = cfg("CPU c {
            OS o { COUNTER_BITS = 8; };
            TASK hi { PRIORITY = 9; AUTOSTART = TRUE; };
            TASK t { PRIORITY = 1; ACTIVATION = 1000; };
        };");
        let mut s = SimState::init(&c).unwrap();
        for _ in 0..255 {
            s.apply_api(&call(Api::ActivateTask, &["t"])).unwrap();
        }
        assert_eq!(s.task("t").unwrap().activation_count, 255);
        assert_eq!(s.task("t").unwrap().state, TaskState::Ready);
        s.apply_api(&call(Api::ActivateTask, &["t"])).unwrap();
        let t = s.task("t").unwrap();
        assert_eq!(t.activation_count, 0);
        assert_eq!(t.state, TaskState::Suspended);
        assert_eq!(t.wide_pending(), 256);
        // the monitor sees the disagreement between the wrapped counter
        // and the wide bookkeeping
        assert!(s
            .check_monitors()
            .iter()
            .any(|v| v.monitor == MonitorId::M1LostActivations));
    }

    #[test]
    fn preempted_task_goes_to_queue_front() {
        let c = cfg("CPU c {
            TASK a { PRIORITY = 1; AUTOSTART = TRUE; ACTIVATION = 8; };
            TASK b { PRIORITY = 1; };
            TASK hi { PRIORITY = 9; };
        };");
        let mut s = SimState::init(&c).unwrap();
        // b waits behind nothing at priority 1; a runs
        s.apply_api(&call(Api::ActivateTask, &["b"])).unwrap();
        assert_eq!(s.running(), Some("a"));
        let out = s.apply_api(&call(Api::ActivateTask, &["hi"])).unwrap();
        assert!(out.preempted && out.switched);
        assert_eq!(s.running(), Some("hi"));
        // a must now be in FRONT of b in the priority-1 queue
        s.apply_api(&call(Api::TerminateTask, &[])).unwrap();
        assert_eq!(s.running(), Some("a"));
    }

    #[test]
    fn scheduler_on_empty_state_is_a_no_op() {
        let c = cfg("CPU c { TASK t { PRIORITY = 1; }; };");
        let mut s = SimState::init(&c).unwrap();
        let before = s.clone();
        s.scheduler().unwrap();
        assert_eq!(before, s);
    }

    #[test]
    fn scheduler_picks_highest_priority() {
        let c = cfg("CPU c {
            TASK lo { PRIORITY = 1; };
            TASK hi { PRIORITY = 3; };
        };");
        let mut s = SimState::init(&c).unwrap();
        s.apply_api(&call(Api::ActivateTask, &["lo"])).unwrap();
        assert_eq!(s.running(), Some("lo"));
        s.apply_api(&call(Api::ActivateTask, &["hi"])).unwrap();
        assert_eq!(s.running(), Some("hi"));
    }

    #[test]
    fn equal_priorities_run_in_fifo_order() {
        let c = cfg("CPU c {
            TASK a { PRIORITY = 2; };
            TASK b { PRIORITY = 2; };
        };");
        let mut s = SimState::init(&c).unwrap();
        s.apply_api(&call(Api::ActivateTask, &["b"])).unwrap();
        assert_eq!(s.running(), Some("b"));
        s.apply_api(&call(Api::ActivateTask, &["a"])).unwrap();
        // equal priority: no preemption, a queued behind the running b
        assert_eq!(s.running(), Some("b"));
        s.apply_api(&call(Api::TerminateTask, &[])).unwrap();
        assert_eq!(s.running(), Some("a"));
    }

    #[test]
    fn scheduler_is_idempotent() {
        let mut s = SimState::init(&three_task_cfg()).unwrap();
        s.apply_api(&call(Api::ActivateTask, &["task_ctrl"]))
            .unwrap();
        let once = {
            let mut c = s.clone();
            c.scheduler().unwrap();
            c
        };
        let twice = {
            let mut c = once.clone();
            c.scheduler().unwrap();
            c
        };
        assert_eq!(once, twice);
    }

    #[test]
    fn precondition_check_never_mutates_state() {
        let mut s = SimState::init(&three_task_cfg()).unwrap();
        s.apply_api(&call(Api::ActivateTask, &["task_ctrl"]))
            .unwrap();
        let before = s.clone();
        for api in ALL_APIS {
            let args: Vec<&str> = match api.arity() {
                0 => vec![],
                1 => vec!["task_ctrl"],
                _ => vec!["task_io", "evt_ready"],
            };
            let _ = s.check_precondition(&ApiCall::new(api, &args));
        }
        assert_eq!(before, s);
    }

    #[test]
    fn apply_is_deterministic() {
        let c = three_task_cfg();
        let run = || {
            let mut s = SimState::init(&c).unwrap();
            s.apply_api(&call(Api::ActivateTask, &["task_ctrl"]))
                .unwrap();
            s.apply_api(&call(Api::Schedule, &[])).unwrap();
            s.apply_api(&call(Api::TerminateTask, &[])).unwrap();
            s
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn overflow_fires_m1_once_and_wider_counter_does_not() {
        for (bits, expect) in [(8u32, 1usize), (16, 0)] {
            let c = cfg(&format!(
                "CPU c {{ OS o {{ COUNTER_BITS = {bits}; }}; TASK t {{ PRIORITY = 1; }}; }};"
            ));
            let mut s = SimState::init(&c).unwrap();
            let mut fired = 0;
            for _ in 0..257 {
                s.prim_enqueue_new("t").unwrap();
                fired += s
                    .check_monitors()
                    .iter()
                    .filter(|v| v.monitor == MonitorId::M1LostActivations)
                    .count();
            }
            assert_eq!(fired, expect, "counter_bits={bits}");
        }
    }

    #[test]
    fn chain_task_to_self_restarts_the_task() {
        let c = cfg("CPU c { TASK t { PRIORITY = 1; AUTOSTART = TRUE; }; };");
        let mut s = SimState::init(&c).unwrap();
        s.apply_api(&call(Api::ChainTask, &["t"])).unwrap();
        assert_eq!(s.running(), Some("t"));
        assert_eq!(s.task("t").unwrap().activation_count, 1);
        assert_eq!(s.task("t").unwrap().consumed_total, 1);
    }

    #[test]
    fn set_event_wakes_waiting_task() {
        let c = cfg("CPU c {
            TASK w { PRIORITY = 5; AUTOSTART = TRUE; EVENT = e; };
            TASK bg { PRIORITY = 1; AUTOSTART = TRUE; };
            EVENT e {};
        };");
        let mut s = SimState::init(&c).unwrap();
        assert_eq!(s.running(), Some("w"));
        let out = s.apply_api(&call(Api::WaitEvent, &["e"])).unwrap();
        assert!(out.blocked);
        assert_eq!(s.running(), Some("bg"));
        assert_eq!(s.task("w").unwrap().state, TaskState::Waiting);
        let out = s.apply_api(&call(Api::SetEvent, &["w", "e"])).unwrap();
        assert!(out.woke);
        assert_eq!(s.running(), Some("w"));
        s.check_coherence().unwrap();
    }

    #[test]
    fn wait_on_already_pending_event_does_not_block() {
        let c =
            cfg("CPU c { TASK w { PRIORITY = 2; AUTOSTART = TRUE; EVENT = e; }; EVENT e {}; };");
        let mut s = SimState::init(&c).unwrap();
        s.apply_api(&call(Api::SetEvent, &["w", "e"])).unwrap();
        let out = s.apply_api(&call(Api::WaitEvent, &["e"])).unwrap();
        assert!(!out.blocked);
        assert_eq!(s.running(), Some("w"));
        s.apply_api(&call(Api::ClearEvent, &["e"])).unwrap();
        assert_eq!(s.task("w").unwrap().pending_events, 0);
    }

    #[test]
    fn body_queue_flushes_on_preemption() {
        let c = cfg("CPU c {
            TASK a { PRIORITY = 1; AUTOSTART = TRUE; };
            TASK hi { PRIORITY = 9; };
            RESOURCE r {};
        };");
        let mut s = SimState::init(&c).unwrap();
        // a still has two unexecuted calls in its body when the first one
        // (the activation) preempts it; the flush rule executes the rest
        // at the preemption point, i.e. after hi took over
        s.enqueue_body("a", call(Api::ActivateTask, &["hi"]))
            .unwrap();
        s.enqueue_body("a", call(Api::GetResource, &["r"])).unwrap();
        s.apply_api(&call(Api::Schedule, &[])).unwrap();
        assert_eq!(s.running(), Some("hi"));
        assert_eq!(s.resource_holder("r"), Some("hi"));
        assert!(s.task("a").unwrap().body.is_empty());
    }

    #[test]
    fn displacing_a_resource_holder_returns_its_resources() {
        let c = cfg("CPU c {
            TASK a { PRIORITY = 1; AUTOSTART = TRUE; };
            TASK b { PRIORITY = 2; };
            RESOURCE r {};
        };");
        let mut s = SimState::init(&c).unwrap();
        s.apply_api(&call(Api::GetResource, &["r"])).unwrap();
        s.prim_enqueue_new("b").unwrap();
        // dispatch displaces a while it still holds r
        s.prim_take_next().unwrap();
        assert_eq!(s.running(), Some("b"));
        assert_eq!(s.resource_holder("r"), None);
        s.check_coherence().unwrap();
    }

    #[test]
    fn trace_export_format() {
        let c = cfg("CPU c { TASK t { PRIORITY = 1; }; };");
        let mut s = SimState::init(&c).unwrap();
        s.apply_api(&call(Api::ActivateTask, &["t"])).unwrap();
        let text = s.export_trace();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "1\tStartOS()\trunning=none\tviolations=0");
        assert_eq!(lines[1], "2\tActivateTask(t)\trunning=t\tviolations=0");
    }

    proptest! {
        #[test]
        fn random_valid_sequences_preserve_coherence(seedcalls in proptest::collection::vec((0usize..10, 0usize..3, 0usize..2), 0..60)) {
            let c = three_task_cfg();
            let tasks = ["task_bg", "task_ctrl", "task_io"];
            let mut s = SimState::init(&c).unwrap();
            for (api_idx, t_idx, e_idx) in seedcalls {
                let api = ALL_APIS[api_idx];
                let args: Vec<&str> = match api {
                    Api::SetEvent => vec![tasks[t_idx], "evt_ready"],
                    Api::GetResource | Api::ReleaseResource => vec!["res_bus"],
                    Api::ClearEvent | Api::WaitEvent => vec!["evt_ready"],
                    a if a.arity() == 1 => vec![tasks[(t_idx + e_idx) % 3]],
                    _ => vec![],
                };
                let call = ApiCall::new(api, &args);
                if let Ok(Precheck::Ok) = s.check_precondition(&call) {
                    s.apply_api(&call).unwrap();
                    prop_assert!(s.check_coherence().is_ok(), "{:?}", s.check_coherence());
                    // single-running invariant holds after every apply
                    prop_assert!(s.tasks().filter(|t| t.state == TaskState::Running).count() <= 1);
                }
            }
        }
    }
}
