//! Browser bindings for the envgen pipeline, backing the static demo page
//! in `www/`. The bundled fixture kernel and system configuration are
//! embedded at build time; every exported function returns JSON.

use std::collections::BTreeSet;

use wasm_bindgen::prelude::*;

use envgen::graph::{build_graph, CodeGraph};
use envgen::minic::parse_minic;
use envgen::oil::{parse_oil, OilConfig};
use envgen::property::Property;
use envgen::scenario::{
    batch, gen_end_level, gen_root_level, parse_bindings, parse_paths, replay, BatchParams,
    BindingTable, Level, PathTable, ReplayContext, Scenario, ScenarioCall,
};
use envgen::sim::ExternalConstraintTable;
use envgen::slicer::{slice, ElfMode};

const KERNEL_SRC: &str = include_str!("../../../fixtures/mini_kernel.c");
const OIL_SRC: &str = include_str!("../../../fixtures/system.oil");
const BINDINGS_SRC: &str = include_str!("../../../fixtures/bindings.tsv");
const PATHS_SRC: &str = include_str!("../../../fixtures/coverage_paths.tsv");

fn graph() -> Result<CodeGraph, JsValue> {
    let facts = parse_minic(KERNEL_SRC, "mini_kernel.c").map_err(err_js)?;
    build_graph(&facts).map_err(err_js)
}

fn oil(counter_bits: u32) -> Result<OilConfig, JsValue> {
    let mut cfg = parse_oil(OIL_SRC, "system.oil").map_err(err_js)?;
    if counter_bits > 0 {
        cfg.counter_bits = counter_bits;
    }
    Ok(cfg)
}

fn bindings() -> Result<BindingTable, JsValue> {
    parse_bindings(BINDINGS_SRC, "bindings.tsv").map_err(err_js)
}

fn paths() -> Result<PathTable, JsValue> {
    parse_paths(PATHS_SRC, "coverage_paths.tsv").map_err(err_js)
}

fn err_js(e: envgen::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn set_json(s: &BTreeSet<String>) -> serde_json::Value {
    serde_json::Value::Array(
        s.iter()
            .map(|v| serde_json::Value::String(v.clone()))
            .collect(),
    )
}

/// The bundled fixture kernel source, for display.
#[wasm_bindgen]
pub fn fixture_kernel() -> String {
    KERNEL_SRC.to_string()
}

/// Slice the fixture kernel for a property expression. Returns JSON with
/// the extracted sets and derived count constraints.
#[wasm_bindgen]
pub fn slice_property(property: &str, mode: &str) -> Result<String, JsValue> {
    let g = graph()?;
    let mode = ElfMode::parse(mode).map_err(err_js)?;
    let p = Property::new(property);
    let sr = slice(&p, &g, &ExternalConstraintTable::standard(), mode).map_err(err_js)?;
    let constraints: Vec<serde_json::Value> = sr
        .internal_constraints
        .iter()
        .map(|c| {
            serde_json::json!({
                "successor": c.successor,
                "predecessors": c.predecessors.iter().collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(serde_json::json!({
        "vtv": set_json(&sr.vtv),
        "evtv": set_json(&sr.evtv),
        "elf": set_json(&sr.elf),
        "rlf": set_json(&sr.rlf),
        "abstract": set_json(&sr.abstract_fns),
        "constraints": constraints,
        "unknown": sr.unknown_identifiers,
    })
    .to_string())
}

fn scenario_json(scn: &Scenario, cfg: &OilConfig, ctx_bits: u32) -> Result<String, JsValue> {
    let table = bindings()?;
    let g = graph()?;
    let pt = paths()?;
    let mut ctx = ReplayContext::new(cfg);
    ctx.bindings = Some(&table);
    ctx.graph = Some(&g);
    ctx.paths = Some(&pt);
    if ctx_bits > 0 {
        ctx.counter_bits = Some(ctx_bits);
    }
    let result = replay(scn, &ctx).map_err(err_js)?;
    let trace: Vec<String> = result
        .final_state
        .export_trace()
        .lines()
        .map(|l| l.to_string())
        .collect();
    let monitor: Vec<serde_json::Value> = result
        .monitor_violations
        .iter()
        .map(|(idx, v)| {
            serde_json::json!({
                "call": idx,
                "monitor": v.monitor.to_string(),
                "detail": v.detail,
            })
        })
        .collect();
    let precondition: Vec<serde_json::Value> = result
        .precondition_violations
        .iter()
        .map(|(idx, v)| {
            serde_json::json!({
                "call": idx,
                "api": v.api.name(),
                "reason": v.reason,
            })
        })
        .collect();
    Ok(serde_json::json!({
        "calls": scn.calls.iter().map(|c| format!("{}({})", c.name, c.args.join(","))).collect::<Vec<_>>(),
        "complete": scn.complete,
        "trace": trace,
        "monitor_violations": monitor,
        "precondition_violations": precondition,
        "coverage": {
            "functions": result.coverage.function_ratio,
            "edges": result.coverage.edge_ratio,
            "rows": result.coverage.row_ratio,
        },
    })
    .to_string())
}

/// Generate and replay one scenario on the fixture. `level` is "root" or
/// "end"; `counter_bits` of 0 keeps the configured width.
#[wasm_bindgen]
pub fn run_scenario(
    level: &str,
    seed: u32,
    len: u32,
    counter_bits: u32,
) -> Result<String, JsValue> {
    let cfg = oil(counter_bits)?;
    let level = Level::parse(level).map_err(err_js)?;
    let scn = match level {
        Level::Root => {
            gen_root_level(&cfg, seed as u64, len as usize)
                .map_err(err_js)?
                .scenario
        }
        Level::End => {
            let g = graph()?;
            let p = Property::new("tpl_fifo_rw[tpl_h_prio].size > 0");
            let sr = slice(
                &p,
                &g,
                &ExternalConstraintTable::standard(),
                ElfMode::ModifyOrUse,
            )
            .map_err(err_js)?;
            gen_end_level(
                &sr.elf,
                &sr.internal_constraints,
                seed as u64,
                len as usize,
                &bindings()?,
                &cfg,
            )
            .map_err(err_js)?
            .scenario
        }
    };
    scenario_json(&scn, &cfg, counter_bits)
}

/// The activation-counter stress: `n` activation analogs of one task at
/// the end level, then replayed under the given counter width.
#[wasm_bindgen]
pub fn overflow_stress(n: u32, counter_bits: u32) -> Result<String, JsValue> {
    let cfg = oil(counter_bits)?;
    let scn = Scenario {
        level: Level::End,
        seed: 0,
        calls: (0..n)
            .map(|_| ScenarioCall {
                name: "tpl_put_new_proc".to_string(),
                args: vec!["task_ctrl".to_string()],
            })
            .collect(),
        complete: true,
    };
    scenario_json(&scn, &cfg, counter_bits)
}

/// Aggregate coverage curve over `n` root-level scenarios of `max_len`
/// calls. Returns JSON rows of the cumulative curve.
#[wasm_bindgen]
pub fn coverage_curve(n: u32, seed: u32, max_len: u32) -> Result<String, JsValue> {
    let cfg = oil(0)?;
    let g = graph()?;
    let pt = paths()?;
    let mut ctx = ReplayContext::new(&cfg);
    ctx.graph = Some(&g);
    ctx.paths = Some(&pt);
    let params = BatchParams {
        level: Level::Root,
        seed0: seed as u64,
        n: n as u64,
        max_len: max_len as usize,
    };
    let report = batch(&params, &ctx, None).map_err(err_js)?;
    let rows: Vec<serde_json::Value> = report
        .coverage
        .curve
        .iter()
        .map(|p| {
            serde_json::json!({
                "length": p.length,
                "functions": p.functions,
                "edges": p.edges,
                "constraints": p.constraints,
            })
        })
        .collect();
    Ok(serde_json::json!({
        "curve": rows,
        "function_ratio": report.coverage.function_ratio,
        "edge_ratio": report.coverage.edge_ratio,
    })
    .to_string())
}
