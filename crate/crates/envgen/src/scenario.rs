//! Constraint-guided random scenario generation, replay, and coverage
//! accounting.
//!
//! Root-level scenarios draw API calls uniformly, keep only those passing
//! the simulator's precondition checks, and stop when every started task
//! has terminated or the length bound is hit. End-level scenarios draw
//! directly from the end-level function set under the derived count
//! constraints (strict `<` at every prefix).
//!
//! Everything is a pure function of `(seed, configuration)`: the generator
//! RNG is a seeded ChaCha8 stream and index draws use `next_u64 % n`, so
//! identical seeds give byte-identical scenarios on every platform.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::CodeGraph;
use crate::oil::OilConfig;
use crate::sim::{
    Api, ApiCall, ApplyOutcome, MonitorId, MonitorViolation, Precheck, SimState, Violation,
    ALL_APIS,
};
use crate::slicer::{CountConstraint, SliceResult};

/// Consecutive rejected draws before generation gives up. The selection
/// loop has no natural bound; this one guarantees termination.
pub const RESAMPLE_BOUND: u32 = 100;

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Root,
    End,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Root => "root",
            Level::End => "end",
        }
    }

    pub fn parse(s: &str) -> Result<Level> {
        match s {
            "root" => Ok(Level::Root),
            "end" => Ok(Level::End),
            other => Err(Error::Config(format!(
                "level must be root or end, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioCall {
    pub name: String,
    pub args: Vec<String>,
}

/// A finite, seeded, replayable call sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub level: Level,
    pub seed: u64,
    pub calls: Vec<ScenarioCall>,
    /// Root level: every started task terminated. End level: the full
    /// requested length was generated.
    pub complete: bool,
}

/// Scenario file rendering (header line, then `idx TAB name TAB args`).
pub fn serialize_scenario(s: &Scenario) -> String {
    let mut out = format!(
        "level={}\tseed={}\tcomplete={}\n",
        s.level.as_str(),
        s.seed,
        s.complete
    );
    for (i, c) in s.calls.iter().enumerate() {
        out.push_str(&format!("{i}\t{}\t{}\n", c.name, c.args.join(",")));
    }
    out
}

pub fn parse_scenario(text: &str, file: &str) -> Result<Scenario> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::syntax(file, 1, "missing scenario header"))?;
    let mut level = None;
    let mut seed = None;
    let mut complete = None;
    for field in header.split('\t') {
        match field.split_once('=') {
            Some(("level", v)) => level = Some(Level::parse(v)?),
            Some(("seed", v)) => {
                seed = Some(
                    v.parse::<u64>()
                        .map_err(|_| Error::syntax(file, 1, format!("bad seed {v:?}")))?,
                )
            }
            Some(("complete", v)) => complete = Some(v == "true"),
            _ => {
                return Err(Error::syntax(
                    file,
                    1,
                    format!("bad header field {field:?}"),
                ))
            }
        }
    }
    let mut scenario = Scenario {
        level: level.ok_or_else(|| Error::syntax(file, 1, "header missing level"))?,
        seed: seed.ok_or_else(|| Error::syntax(file, 1, "header missing seed"))?,
        complete: complete.unwrap_or(false),
        calls: Vec::new(),
    };
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = idx as u32 + 1;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::syntax(file, lineno, "expected idx, function, args"));
        }
        let args = if cols[2].is_empty() {
            Vec::new()
        } else {
            cols[2].split(',').map(|s| s.to_string()).collect()
        };
        scenario.calls.push(ScenarioCall {
            name: cols[1].to_string(),
            args,
        });
    }
    Ok(scenario)
}

// ---------------------------------------------------------------------------
// End-level binding table
// ---------------------------------------------------------------------------

/// Simulator primitive an end-level function binds to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Primitive {
    /// Activation analog (takes one task argument).
    EnqueueNew,
    RequeuePreempted,
    TakeNext,
    Elect,
}

impl Primitive {
    pub fn parse(s: &str) -> Option<Primitive> {
        Some(match s {
            "enqueue_new" => Primitive::EnqueueNew,
            "requeue_preempted" => Primitive::RequeuePreempted,
            "take_next" => Primitive::TakeNext,
            "elect" => Primitive::Elect,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Primitive::EnqueueNew => "enqueue_new",
            Primitive::RequeuePreempted => "requeue_preempted",
            Primitive::TakeNext => "take_next",
            Primitive::Elect => "elect",
        }
    }
}

/// Maps end-level function names to simulator primitives. Data, not code:
/// new fixtures bring their own table.
#[derive(Debug, Clone, Default)]
pub struct BindingTable {
    map: BTreeMap<String, Primitive>,
}

impl BindingTable {
    pub fn get(&self, elf: &str) -> Option<Primitive> {
        self.map.get(elf).copied()
    }

    pub fn require(&self, elf: &str) -> Result<Primitive> {
        self.get(elf).ok_or_else(|| Error::Binding(elf.to_string()))
    }
}

/// Parse a binding table: `elf_name TAB primitive` per line, `#` comments.
pub fn parse_bindings(text: &str, file: &str) -> Result<BindingTable> {
    let mut map = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx as u32 + 1;
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, prim) = line
            .split_once('\t')
            .ok_or_else(|| Error::syntax(file, lineno, "expected name TAB primitive"))?;
        let prim = Primitive::parse(prim.trim())
            .ok_or_else(|| Error::syntax(file, lineno, format!("unknown primitive {prim:?}")))?;
        map.insert(name.to_string(), prim);
    }
    Ok(BindingTable { map })
}

// ---------------------------------------------------------------------------
// Coverage
// ---------------------------------------------------------------------------

/// Executed-path table: which graph functions and call edges one applied
/// call covers, keyed by call name and outcome condition. Data shipped
/// with the fixture (`coverage_paths.tsv`).
#[derive(Debug, Clone, Default)]
pub struct PathTable {
    /// (level, key, condition) -> call chains.
    rows: Vec<PathRow>,
}

#[derive(Debug, Clone)]
struct PathRow {
    level: Level,
    key: String,
    when: PathCondition,
    chains: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PathCondition {
    Always,
    Switched,
    Preempted,
    Woke,
    Requeued,
    Blocked,
}

impl PathCondition {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "always" => PathCondition::Always,
            "switched" => PathCondition::Switched,
            "preempted" => PathCondition::Preempted,
            "woke" => PathCondition::Woke,
            "requeued" => PathCondition::Requeued,
            "blocked" => PathCondition::Blocked,
            _ => return None,
        })
    }

    fn holds(self, o: &ApplyOutcome) -> bool {
        match self {
            PathCondition::Always => true,
            PathCondition::Switched => o.switched,
            PathCondition::Preempted => o.preempted,
            PathCondition::Woke => o.woke,
            PathCondition::Requeued => o.requeued,
            PathCondition::Blocked => o.blocked,
        }
    }
}

/// Parse a path table: `level TAB key TAB condition TAB chains` where
/// chains are `;`-separated `a>b>c` call chains.
pub fn parse_paths(text: &str, file: &str) -> Result<PathTable> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx as u32 + 1;
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::syntax(file, lineno, "expected 4 fields"));
        }
        let level = Level::parse(cols[0])?;
        let when = PathCondition::parse(cols[2]).ok_or_else(|| {
            Error::syntax(file, lineno, format!("unknown condition {:?}", cols[2]))
        })?;
        let chains = cols[3]
            .split(';')
            .filter(|c| !c.is_empty())
            .map(|c| c.split('>').map(|s| s.to_string()).collect())
            .collect();
        rows.push(PathRow {
            level,
            key: cols[1].to_string(),
            when,
            chains,
        });
    }
    Ok(PathTable { rows })
}

impl PathTable {
    fn mark(
        &self,
        level: Level,
        key: &str,
        outcome: &ApplyOutcome,
        length: usize,
        acc: &mut CoverageAccumulator,
    ) {
        for row in &self.rows {
            if row.level != level || row.key != key || !row.when.holds(outcome) {
                continue;
            }
            for chain in &row.chains {
                for f in chain {
                    acc.mark_fn(f, length);
                }
                for pair in chain.windows(2) {
                    acc.mark_edge(&pair[0], &pair[1], length);
                }
            }
        }
    }
}

/// Point of the cumulative coverage curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub length: usize,
    pub functions: f64,
    pub edges: f64,
    pub constraints: f64,
}

/// Coverage over the code graph and constraint table.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub functions_covered: BTreeSet<String>,
    pub function_ratio: f64,
    pub edges_covered: BTreeSet<(String, String)>,
    pub edge_ratio: f64,
    pub rows_exercised: BTreeSet<String>,
    pub row_ratio: f64,
    pub curve: Vec<CurvePoint>,
}

impl CoverageReport {
    pub fn empty() -> Self {
        CoverageReport {
            functions_covered: BTreeSet::new(),
            function_ratio: 0.0,
            edges_covered: BTreeSet::new(),
            edge_ratio: 0.0,
            rows_exercised: BTreeSet::new(),
            row_ratio: 0.0,
            curve: Vec::new(),
        }
    }

    /// CSV rendering: `length,functions,edges,constraints`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("length,functions,edges,constraints\n");
        for p in &self.curve {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6}\n",
                p.length, p.functions, p.edges, p.constraints
            ));
        }
        out
    }
}

/// Tracks the first prefix length at which each item was covered;
/// merging takes the minimum, so aggregation order cannot matter.
#[derive(Debug, Clone)]
pub struct CoverageAccumulator {
    fn_total: usize,
    edge_total: usize,
    row_total: usize,
    first_fn: BTreeMap<String, usize>,
    first_edge: BTreeMap<(String, String), usize>,
    first_row: BTreeMap<String, usize>,
    max_len: usize,
}

impl CoverageAccumulator {
    pub fn new(graph: Option<&CodeGraph>, row_total: usize) -> Self {
        CoverageAccumulator {
            fn_total: graph.map(|g| g.function_count()).unwrap_or(0),
            edge_total: graph.map(|g| g.call_edges().len()).unwrap_or(0),
            row_total,
            first_fn: BTreeMap::new(),
            first_edge: BTreeMap::new(),
            first_row: BTreeMap::new(),
            max_len: 0,
        }
    }

    fn mark_fn(&mut self, f: &str, len: usize) {
        let e = self.first_fn.entry(f.to_string()).or_insert(len);
        *e = (*e).min(len);
    }

    fn mark_edge(&mut self, a: &str, b: &str, len: usize) {
        let e = self
            .first_edge
            .entry((a.to_string(), b.to_string()))
            .or_insert(len);
        *e = (*e).min(len);
    }

    fn mark_row(&mut self, api: &str, len: usize) {
        let e = self.first_row.entry(api.to_string()).or_insert(len);
        *e = (*e).min(len);
    }

    fn saw_length(&mut self, len: usize) {
        self.max_len = self.max_len.max(len);
    }

    /// Commutative merge of two accumulators.
    pub fn merge(&mut self, other: &CoverageAccumulator) {
        for (k, v) in &other.first_fn {
            let e = self.first_fn.entry(k.clone()).or_insert(*v);
            *e = (*e).min(*v);
        }
        for (k, v) in &other.first_edge {
            let e = self.first_edge.entry(k.clone()).or_insert(*v);
            *e = (*e).min(*v);
        }
        for (k, v) in &other.first_row {
            let e = self.first_row.entry(k.clone()).or_insert(*v);
            *e = (*e).min(*v);
        }
        self.max_len = self.max_len.max(other.max_len);
    }

    /// Cumulative ratio of items first covered at or below each length.
    pub fn ratio_at(&self, len: usize) -> (f64, f64, f64) {
        fn count<K>(m: &BTreeMap<K, usize>, len: usize) -> usize {
            m.values().filter(|&&v| v <= len).count()
        }
        let div = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        (
            div(count(&self.first_fn, len), self.fn_total),
            div(count(&self.first_edge, len), self.edge_total),
            div(count(&self.first_row, len), self.row_total),
        )
    }

    pub fn report(&self) -> CoverageReport {
        let mut curve = Vec::with_capacity(self.max_len + 1);
        for len in 0..=self.max_len {
            let (functions, edges, constraints) = self.ratio_at(len);
            curve.push(CurvePoint {
                length: len,
                functions,
                edges,
                constraints,
            });
        }
        let (function_ratio, edge_ratio, row_ratio) = self.ratio_at(self.max_len);
        CoverageReport {
            functions_covered: self.first_fn.keys().cloned().collect(),
            function_ratio,
            edges_covered: self.first_edge.keys().cloned().collect(),
            edge_ratio,
            rows_exercised: self.first_row.keys().cloned().collect(),
            row_ratio,
            curve,
        }
    }
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

fn draw(rng: &mut ChaCha8Rng, n: usize) -> usize {
    debug_assert!(n > 0);
    (rng.next_u64() % n as u64) as usize
}

/// Generator result: the scenario plus how generation ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenReport {
    pub scenario: Scenario,
    /// Root level: no candidate passed the preconditions within the
    /// resampling bound.
    pub stuck: bool,
    /// End level: no candidate was admissible within the resampling bound.
    pub deadlocked: bool,
}

/// Generate a root-level scenario: uniform draws over API and argument
/// domains, candidates failing their precondition are resampled, accepted
/// calls run the simulator to quiescence. Stops when every started task
/// has terminated or after `max_len` accepted calls.
pub fn gen_root_level(cfg: &OilConfig, seed: u64, max_len: usize) -> Result<GenReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = SimState::init(cfg)?;
    let mut scenario = Scenario {
        level: Level::Root,
        seed,
        calls: Vec::new(),
        complete: false,
    };
    let mut stuck = false;
    let task_names: Vec<&str> = cfg.tasks.iter().map(|t| t.name.as_str()).collect();
    let mut rejected = 0u32;
    while scenario.calls.len() < max_len {
        if state.all_started_terminated() {
            scenario.complete = true;
            break;
        }
        if rejected >= RESAMPLE_BOUND {
            stuck = true;
            break;
        }
        let api = ALL_APIS[draw(&mut rng, ALL_APIS.len())];
        let args: Option<Vec<String>> = match api {
            Api::ActivateTask | Api::ChainTask => (!task_names.is_empty())
                .then(|| vec![task_names[draw(&mut rng, task_names.len())].to_string()]),
            Api::GetResource | Api::ReleaseResource => (!cfg.resources.is_empty())
                .then(|| vec![cfg.resources[draw(&mut rng, cfg.resources.len())].clone()]),
            Api::SetEvent => (!task_names.is_empty() && !cfg.events.is_empty()).then(|| {
                vec![
                    task_names[draw(&mut rng, task_names.len())].to_string(),
                    cfg.events[draw(&mut rng, cfg.events.len())].clone(),
                ]
            }),
            Api::ClearEvent | Api::WaitEvent => (!cfg.events.is_empty())
                .then(|| vec![cfg.events[draw(&mut rng, cfg.events.len())].clone()]),
            Api::TerminateTask | Api::Schedule | Api::StartOs => Some(Vec::new()),
        };
        let Some(args) = args else {
            rejected += 1;
            continue;
        };
        let arg_refs: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
        let call = ApiCall::new(api, &arg_refs);
        match state.check_precondition(&call)? {
            Precheck::Ok => {
                state.apply_api(&call)?;
                scenario.calls.push(ScenarioCall {
                    name: api.name().to_string(),
                    args,
                });
                rejected = 0;
            }
            Precheck::Violation(_) => rejected += 1,
        }
    }
    if state.all_started_terminated() {
        scenario.complete = true;
    }
    Ok(GenReport {
        scenario,
        stuck,
        deadlocked: false,
    })
}

/// Count-constraint admissibility: `count(successor)` strictly below every
/// predecessor count, checked at the moment of selection.
fn admissible(
    candidate: &str,
    counts: &BTreeMap<String, u64>,
    constraints: &[CountConstraint],
) -> bool {
    for c in constraints {
        if c.successor == candidate {
            let mine = counts.get(candidate).copied().unwrap_or(0);
            for p in &c.predecessors {
                if mine >= counts.get(p).copied().unwrap_or(0) {
                    return false;
                }
            }
        }
    }
    true
}

/// Generate an end-level scenario of exactly `length` calls (unless the
/// constraints deadlock): uniform draws over the end-level set, resampling
/// candidates whose count constraint does not hold.
pub fn gen_end_level(
    elf: &BTreeSet<String>,
    constraints: &[CountConstraint],
    seed: u64,
    length: usize,
    bindings: &BindingTable,
    cfg: &OilConfig,
) -> Result<GenReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<&String> = elf.iter().collect();
    let task_names: Vec<&str> = cfg.tasks.iter().map(|t| t.name.as_str()).collect();
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut scenario = Scenario {
        level: Level::End,
        seed,
        calls: Vec::new(),
        complete: false,
    };
    let mut deadlocked = false;
    let mut rejected = 0u32;
    while scenario.calls.len() < length {
        if names.is_empty() || rejected >= RESAMPLE_BOUND {
            deadlocked = true;
            break;
        }
        let candidate = names[draw(&mut rng, names.len())].clone();
        if !admissible(&candidate, &counts, constraints) {
            rejected += 1;
            continue;
        }
        let args = match bindings.require(&candidate)? {
            Primitive::EnqueueNew => {
                if task_names.is_empty() {
                    rejected += 1;
                    continue;
                }
                vec![task_names[draw(&mut rng, task_names.len())].to_string()]
            }
            _ => Vec::new(),
        };
        *counts.entry(candidate.clone()).or_insert(0) += 1;
        scenario.calls.push(ScenarioCall {
            name: candidate,
            args,
        });
        rejected = 0;
    }
    scenario.complete = scenario.calls.len() == length;
    Ok(GenReport {
        scenario,
        stuck: false,
        deadlocked,
    })
}

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

/// Everything replay needs besides the scenario itself.
pub struct ReplayContext<'a> {
    pub cfg: &'a OilConfig,
    /// Graph and path table enable coverage accounting.
    pub graph: Option<&'a CodeGraph>,
    pub paths: Option<&'a PathTable>,
    /// Required for end-level scenarios.
    pub bindings: Option<&'a BindingTable>,
    /// Overrides the configuration's activation counter width.
    pub counter_bits: Option<u32>,
    /// Stop at the first recorded violation instead of continuing.
    pub halt_on_violation: bool,
}

impl<'a> ReplayContext<'a> {
    pub fn new(cfg: &'a OilConfig) -> Self {
        ReplayContext {
            cfg,
            graph: None,
            paths: None,
            bindings: None,
            counter_bits: None,
            halt_on_violation: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReplayResult {
    /// (1-based call index, violation); calls that violate are recorded
    /// and skipped, never applied.
    pub precondition_violations: Vec<(usize, Violation)>,
    pub monitor_violations: Vec<(usize, MonitorViolation)>,
    pub coverage: CoverageReport,
    /// First-seen bookkeeping behind `coverage`, kept for aggregation.
    pub coverage_acc: CoverageAccumulator,
    pub final_state: SimState,
}

impl ReplayResult {
    pub fn violation_count(&self) -> usize {
        self.precondition_violations.len() + self.monitor_violations.len()
    }
}

fn config_with_bits(cfg: &OilConfig, bits: Option<u32>) -> OilConfig {
    match bits {
        None => cfg.clone(),
        Some(b) => {
            let mut c = cfg.clone();
            c.counter_bits = b;
            c
        }
    }
}

/// Replay a scenario from the start-up state, recording precondition and
/// monitor violations and accumulating coverage. Never panics on a
/// violation.
pub fn replay(scn: &Scenario, ctx: &ReplayContext) -> Result<ReplayResult> {
    let cfg = config_with_bits(ctx.cfg, ctx.counter_bits);
    let mut acc = CoverageAccumulator::new(ctx.graph, 10);
    let mut state = SimState::init(&cfg)?;
    let mut pre_violations = Vec::new();
    let mut mon_violations = Vec::new();

    // start-up covers the StartOS row and its paths
    if let Some(paths) = ctx.paths {
        let boot = ApplyOutcome {
            switched: state.running().is_some(),
            ..ApplyOutcome::default()
        };
        paths.mark(Level::Root, Api::StartOs.name(), &boot, 0, &mut acc);
    }
    acc.mark_row(Api::StartOs.name(), 0);
    acc.saw_length(0);

    for (i, call) in scn.calls.iter().enumerate() {
        let idx = i + 1;
        acc.saw_length(idx);
        let mut step_violations = 0usize;
        match scn.level {
            Level::Root => {
                let api = Api::from_name(&call.name)?;
                let arg_refs: Vec<&str> = call.args.iter().map(|s| s.as_str()).collect();
                let api_call = ApiCall::new(api, &arg_refs);
                match state.check_precondition(&api_call)? {
                    Precheck::Violation(v) => {
                        acc.mark_row(api.name(), idx);
                        pre_violations.push((idx, v));
                        if ctx.halt_on_violation {
                            break;
                        }
                        continue;
                    }
                    Precheck::Ok => {}
                }
                let outcome = state.apply_api(&api_call)?;
                acc.mark_row(api.name(), idx);
                if let Some(paths) = ctx.paths {
                    paths.mark(Level::Root, api.name(), &outcome, idx, &mut acc);
                }
                for v in state.check_monitors() {
                    mon_violations.push((idx, v));
                    step_violations += 1;
                }
            }
            Level::End => {
                let bindings = ctx
                    .bindings
                    .ok_or_else(|| Error::Binding(format!("{} (no binding table)", call.name)))?;
                let prim = bindings.require(&call.name)?;
                let outcome = match prim {
                    Primitive::EnqueueNew => {
                        let task = call.args.first().ok_or_else(|| {
                            Error::UnknownObject(format!("{} needs a task argument", call.name))
                        })?;
                        state.prim_enqueue_new(task)?;
                        ApplyOutcome::default()
                    }
                    Primitive::RequeuePreempted => {
                        state.prim_requeue_preempted()?;
                        ApplyOutcome::default()
                    }
                    Primitive::TakeNext => {
                        state.prim_take_next()?;
                        ApplyOutcome {
                            switched: state.running().is_some(),
                            ..ApplyOutcome::default()
                        }
                    }
                    Primitive::Elect => state.prim_elect()?,
                };
                acc.mark_fn(&call.name, idx);
                if let Some(paths) = ctx.paths {
                    paths.mark(Level::End, prim.as_str(), &outcome, idx, &mut acc);
                }
                // elections probe all monitors; queue surgery probes only
                // the lost-activation monitor
                let electing = matches!(prim, Primitive::TakeNext | Primitive::Elect);
                for v in state.check_monitors() {
                    if electing || v.monitor == MonitorId::M1LostActivations {
                        mon_violations.push((idx, v));
                        step_violations += 1;
                    }
                }
            }
        }
        state.note_violations(step_violations);
        if ctx.halt_on_violation && step_violations > 0 {
            break;
        }
    }

    Ok(ReplayResult {
        precondition_violations: pre_violations,
        monitor_violations: mon_violations,
        coverage: acc.report(),
        coverage_acc: acc,
        final_state: state,
    })
}

// ---------------------------------------------------------------------------
// Batch
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct BatchParams {
    pub level: Level,
    pub seed0: u64,
    pub n: u64,
    pub max_len: usize,
}

/// Per-run statistics. Wall time and peak memory are observational and
/// excluded from the deterministic report files.
#[derive(Debug, Clone)]
pub struct RunStat {
    pub seed: u64,
    pub calls: usize,
    pub complete: bool,
    pub stuck: bool,
    pub deadlocked: bool,
    pub precondition_violations: usize,
    pub monitor_violations: usize,
    pub wall: Duration,
    pub peak_mem_kb: u64,
}

#[derive(Debug, Clone)]
pub struct BatchReport {
    pub runs: Vec<RunStat>,
    pub coverage: CoverageReport,
}

impl BatchReport {
    pub fn total_violations(&self) -> usize {
        self.runs
            .iter()
            .map(|r| r.precondition_violations + r.monitor_violations)
            .sum()
    }

    /// Deterministic violation summary.
    pub fn summary(&self) -> String {
        let mut out = String::from("seed\tcalls\tcomplete\tstuck\tdeadlocked\tprecond\tmonitor\n");
        for r in &self.runs {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                r.seed,
                r.calls,
                r.complete,
                r.stuck,
                r.deadlocked,
                r.precondition_violations,
                r.monitor_violations
            ));
        }
        out
    }
}

fn peak_memory_kb() -> u64 {
    #[cfg(target_os = "linux")]
    {
        if let Ok(status) = std::fs::read_to_string("/proc/self/status") {
            for line in status.lines() {
                if let Some(rest) = line.strip_prefix("VmHWM:") {
                    return rest
                        .trim()
                        .trim_end_matches(" kB")
                        .trim()
                        .parse()
                        .unwrap_or(0);
                }
            }
        }
    }
    0
}

/// Run `n` independent scenarios with seeds `seed0..seed0+n` and aggregate
/// coverage and violations. Merge order does not affect the report.
pub fn batch(
    params: &BatchParams,
    ctx: &ReplayContext,
    slice: Option<&SliceResult>,
) -> Result<BatchReport> {
    let mut runs = Vec::new();
    let mut acc = CoverageAccumulator::new(ctx.graph, 10);
    for seed in params.seed0..params.seed0 + params.n {
        let started = std::time::Instant::now();
        let gen = match params.level {
            Level::Root => gen_root_level(ctx.cfg, seed, params.max_len)?,
            Level::End => {
                let sr = slice
                    .ok_or_else(|| Error::Config("end-level batch needs a slice result".into()))?;
                let bindings = ctx
                    .bindings
                    .ok_or_else(|| Error::Config("end-level batch needs a binding table".into()))?;
                gen_end_level(
                    &sr.elf,
                    &sr.internal_constraints,
                    seed,
                    params.max_len,
                    bindings,
                    ctx.cfg,
                )?
            }
        };
        let result = replay(&gen.scenario, ctx)?;
        acc.merge(&result.coverage_acc);
        runs.push(RunStat {
            seed,
            calls: gen.scenario.calls.len(),
            complete: gen.scenario.complete,
            stuck: gen.stuck,
            deadlocked: gen.deadlocked,
            precondition_violations: result.precondition_violations.len(),
            monitor_violations: result.monitor_violations.len(),
            wall: started.elapsed(),
            peak_mem_kb: peak_memory_kb(),
        });
    }
    Ok(BatchReport {
        runs,
        coverage: acc.report(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oil::parse_oil;

    fn cfg() -> OilConfig {
        parse_oil(
            "CPU c {
                TASK task_bg   { PRIORITY = 1; AUTOSTART = TRUE;  ACTIVATION = 8; };
                TASK task_ctrl { PRIORITY = 2; AUTOSTART = FALSE; ACTIVATION = 8; };
                TASK task_io   { PRIORITY = 2; AUTOSTART = FALSE; ACTIVATION = 8; EVENT = evt_ready; };
                EVENT evt_ready { MASK = AUTO; };
                RESOURCE res_bus { RESOURCEPROPERTY = STANDARD; };
            };",
            "test.oil",
        )
        .unwrap()
    }

    fn bindings() -> BindingTable {
        parse_bindings(
            "tpl_put_new_proc\tenqueue_new\n\
             tpl_put_preempted_proc\trequeue_preempted\n\
             tpl_get_proc\ttake_next\n\
             tpl_schedule_from_running\telect\n",
            "bindings.tsv",
        )
        .unwrap()
    }

    fn fixture_constraints() -> Vec<CountConstraint> {
        vec![CountConstraint {
            successor: "tpl_get_proc".into(),
            predecessors: ["tpl_put_new_proc", "tpl_schedule_from_running"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }]
    }

    fn elf_set() -> BTreeSet<String> {
        [
            "tpl_get_proc",
            "tpl_put_new_proc",
            "tpl_put_preempted_proc",
            "tpl_schedule_from_running",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    }

    #[test]
    fn same_seed_gives_identical_scenarios() {
        let c = cfg();
        let a = gen_root_level(&c, 42, 50).unwrap();
        let b = gen_root_level(&c, 42, 50).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serialize_scenario(&a.scenario),
            serialize_scenario(&b.scenario)
        );
        let other = gen_root_level(&c, 43, 50).unwrap();
        assert_ne!(a.scenario.calls, other.scenario.calls);
    }

    #[test]
    fn generated_root_scenarios_replay_cleanly() {
        let c = cfg();
        for seed in 0..50 {
            let gen = gen_root_level(&c, seed, 60).unwrap();
            let result = replay(&gen.scenario, &ReplayContext::new(&c)).unwrap();
            assert!(
                result.precondition_violations.is_empty(),
                "seed {seed}: {:?}",
                result.precondition_violations
            );
            if gen.scenario.complete {
                assert!(result.final_state.all_started_terminated(), "seed {seed}");
            }
        }
    }

    #[test]
    fn truncated_scenario_is_marked_incomplete() {
        // max_len 1: a single call cannot terminate the autostart task
        // unless that call is TerminateTask or ChainTask, so pick the
        // first seed whose accepted call is neither
        let c = cfg();
        let gen = (0..100u64)
            .map(|seed| gen_root_level(&c, seed, 1).unwrap())
            .find(|g| {
                let name = g.scenario.calls[0].name.as_str();
                name != "TerminateTask" && name != "ChainTask"
            })
            .expect("some seed starts with a non-terminating call");
        assert!(!gen.scenario.complete);
    }

    #[test]
    fn generation_with_no_candidates_reports_stuck() {
        // a system with no tasks leaves every draw precondition-blocked
        let empty = parse_oil("CPU c { RESOURCE r {}; };", "t.oil").unwrap();
        let gen = gen_root_level(&empty, 1, 10).unwrap();
        assert!(gen.stuck);
        assert!(gen.scenario.calls.is_empty());
    }

    #[test]
    fn end_level_length_zero_is_empty() {
        let gen = gen_end_level(
            &elf_set(),
            &fixture_constraints(),
            7,
            0,
            &bindings(),
            &cfg(),
        )
        .unwrap();
        assert!(gen.scenario.calls.is_empty());
        assert!(gen.scenario.complete);
    }

    /// Independent recount: walk the prefix and re-check every constraint
    /// from scratch.
    fn recount_ok(calls: &[ScenarioCall], constraints: &[CountConstraint]) -> bool {
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for c in calls {
            for k in constraints {
                if k.successor == c.name {
                    let mine = counts.get(c.name.as_str()).copied().unwrap_or(0);
                    for p in &k.predecessors {
                        if mine >= counts.get(p.as_str()).copied().unwrap_or(0) {
                            return false;
                        }
                    }
                }
            }
            *counts.entry(c.name.as_str()).or_insert(0) += 1;
        }
        true
    }

    #[test]
    fn end_level_prefixes_respect_constraints() {
        let constraints = fixture_constraints();
        for seed in 0..50 {
            let gen =
                gen_end_level(&elf_set(), &constraints, seed, 200, &bindings(), &cfg()).unwrap();
            assert!(gen.scenario.complete);
            assert!(recount_ok(&gen.scenario.calls, &constraints), "seed {seed}");
        }
    }

    #[test]
    fn cyclic_constraints_deadlock_and_are_reported() {
        let constraints = vec![
            CountConstraint {
                successor: "a".into(),
                predecessors: std::iter::once("b".to_string()).collect(),
            },
            CountConstraint {
                successor: "b".into(),
                predecessors: std::iter::once("a".to_string()).collect(),
            },
        ];
        let elf: BTreeSet<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let bindings = parse_bindings("a\telect\nb\telect\n", "b.tsv").unwrap();
        let gen = gen_end_level(&elf, &constraints, 3, 10, &bindings, &cfg()).unwrap();
        assert!(gen.deadlocked);
        assert!(!gen.scenario.complete);
        assert!(gen.scenario.calls.is_empty());
    }

    #[test]
    fn scenario_file_round_trips() {
        let c = cfg();
        let gen = gen_root_level(&c, 11, 30).unwrap();
        let text = serialize_scenario(&gen.scenario);
        let back = parse_scenario(&text, "<memory>").unwrap();
        assert_eq!(gen.scenario, back);
    }

    #[test]
    fn empty_scenario_replays_with_nothing_to_report() {
        let c = cfg();
        let scn = Scenario {
            level: Level::Root,
            seed: 0,
            calls: Vec::new(),
            complete: false,
        };
        let result = replay(&scn, &ReplayContext::new(&c)).unwrap();
        assert!(result.precondition_violations.is_empty());
        assert!(result.monitor_violations.is_empty());
        assert!(result.coverage.functions_covered.is_empty());
    }

    #[test]
    fn end_replay_without_binding_is_an_error() {
        let c = cfg();
        let scn = Scenario {
            level: Level::End,
            seed: 0,
            calls: vec![ScenarioCall {
                name: "mystery_fn".into(),
                args: vec![],
            }],
            complete: true,
        };
        let mut ctx = ReplayContext::new(&c);
        let table = bindings();
        ctx.bindings = Some(&table);
        assert!(matches!(replay(&scn, &ctx), Err(Error::Binding(_))));
    }

    #[test]
    fn overflow_stress_fires_exactly_one_m1_and_wider_counter_none() {
        let c = cfg();
        let stress = Scenario {
            level: Level::End,
            seed: 0,
            calls: (0..257)
                .map(|_| ScenarioCall {
                    name: "tpl_put_new_proc".into(),
                    args: vec!["task_ctrl".into()],
                })
                .collect(),
            complete: true,
        };
        let table = bindings();
        let mut ctx = ReplayContext::new(&c);
        ctx.bindings = Some(&table);
        ctx.counter_bits = Some(8);
        let result = replay(&stress, &ctx).unwrap();
        let m1: Vec<_> = result
            .monitor_violations
            .iter()
            .filter(|(_, v)| v.monitor == MonitorId::M1LostActivations)
            .collect();
        assert_eq!(m1.len(), 1, "{:?}", result.monitor_violations);
        assert_eq!(m1[0].0, 256);
        ctx.counter_bits = Some(16);
        let result = replay(&stress, &ctx).unwrap();
        assert_eq!(result.monitor_violations.len(), 0);
    }

    #[test]
    fn batch_of_one_equals_single_replay() {
        let c = cfg();
        let params = BatchParams {
            level: Level::Root,
            seed0: 5,
            n: 1,
            max_len: 40,
        };
        let report = batch(&params, &ReplayContext::new(&c), None).unwrap();
        assert_eq!(report.runs.len(), 1);
        let gen = gen_root_level(&c, 5, 40).unwrap();
        let single = replay(&gen.scenario, &ReplayContext::new(&c)).unwrap();
        assert_eq!(report.runs[0].calls, gen.scenario.calls.len());
        assert_eq!(
            report.runs[0].precondition_violations,
            single.precondition_violations.len()
        );
        assert_eq!(
            report.coverage.rows_exercised,
            single.coverage.rows_exercised
        );
    }

    #[test]
    fn coverage_curve_is_nondecreasing() {
        let c = cfg();
        let params = BatchParams {
            level: Level::Root,
            seed0: 0,
            n: 5,
            max_len: 60,
        };
        let report = batch(&params, &ReplayContext::new(&c), None).unwrap();
        let curve = &report.coverage.curve;
        for w in curve.windows(2) {
            assert!(w[1].functions >= w[0].functions);
            assert!(w[1].edges >= w[0].edges);
            assert!(w[1].constraints >= w[0].constraints);
        }
    }
}
