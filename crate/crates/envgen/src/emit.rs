//! Verification artifact emitters: a nondeterministic bounded-model-checking
//! harness, concrete replay harnesses, and the reduced-target manifest.
//!
//! All emitters are pure and byte-deterministic: identical inputs give
//! identical bytes (UTF-8, LF endings, trailing newline). Nothing here
//! compiles or runs the emitted text; the harness dialect targets a generic
//! bounded model checker with nondeterministic choice expressed as an
//! uninterpreted extern function. Prototypes use empty parameter lists
//! because the fact model does not carry signatures.

use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::slicer::SliceResult;

/// Emit a nondeterministic harness: `unwind` iterations, each making a
/// nondeterministic choice among the end-level functions guarded by the
/// derived count constraints, followed by the property assertion.
pub fn emit_nondet_harness(sr: &SliceResult, unwind: u32) -> Result<String> {
    if sr.elf.is_empty() {
        return Err(Error::EmptySlice);
    }
    let elf: Vec<&String> = sr.elf.iter().collect();
    // counters exist for every function named by a count constraint
    let mut counted: Vec<&String> = Vec::new();
    for c in &sr.internal_constraints {
        for name in std::iter::once(&c.successor).chain(c.predecessors.iter()) {
            if !counted.contains(&name) {
                counted.push(name);
            }
        }
    }
    counted.sort();

    let mut out = String::new();
    out.push_str("/* generated nondeterministic end-level harness */\n");
    out.push_str("#include <assert.h>\n\n");
    out.push_str("extern unsigned int nondet_choice(void);\n");
    for f in &elf {
        out.push_str(&format!("extern void {f}();\n"));
    }
    out.push('\n');
    for f in &counted {
        out.push_str(&format!("static unsigned int cnt_{f} = 0u;\n"));
    }
    if !counted.is_empty() {
        out.push('\n');
    }
    out.push_str("int main(void)\n{\n");
    if unwind > 0 {
        out.push_str("    unsigned int step;\n");
        out.push_str(&format!(
            "    for (step = 0u; step < {unwind}u; step = step + 1u) {{\n"
        ));
        out.push_str("        switch (nondet_choice()) {\n");
        for (i, f) in elf.iter().enumerate() {
            out.push_str(&format!("        case {i}u:\n"));
            let guards: Vec<String> = sr
                .internal_constraints
                .iter()
                .filter(|c| &c.successor == *f)
                .flat_map(|c| {
                    c.predecessors
                        .iter()
                        .map(|p| format!("cnt_{} < cnt_{p}", c.successor))
                })
                .collect();
            let body_indent = if guards.is_empty() {
                "            ".to_string()
            } else {
                out.push_str(&format!("            if ({}) {{\n", guards.join(" && ")));
                "                ".to_string()
            };
            out.push_str(&format!("{body_indent}{f}();\n"));
            if counted.contains(f) {
                out.push_str(&format!("{body_indent}cnt_{f} = cnt_{f} + 1u;\n"));
            }
            if !guards.is_empty() {
                out.push_str("            }\n");
            }
            out.push_str("            break;\n");
        }
        out.push_str("        default:\n            break;\n");
        out.push_str("        }\n");
        out.push_str("    }\n");
    }
    out.push_str(&format!("    assert({});\n", sr.property.raw_text));
    out.push_str("    return 0;\n}\n");
    Ok(out)
}

/// Emit a straight-line replay harness: the scenario's calls in order, one
/// per line.
pub fn emit_concrete_harness(scn: &Scenario) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "/* generated {}-level replay harness, seed {} */\n",
        scn.level.as_str(),
        scn.seed
    ));
    out.push_str("int main(void)\n{\n");
    for c in &scn.calls {
        out.push_str(&format!("    {}({});\n", c.name, c.args.join(", ")));
    }
    out.push_str("    return 0;\n}\n");
    out
}

/// Parse the call lines back out of a concrete harness. Inverse of
/// [`emit_concrete_harness`] on the call list.
pub fn parse_concrete_harness(text: &str) -> Vec<(String, Vec<String>)> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if !line.ends_with(");") || line.starts_with("return") || !line.contains('(') {
            continue;
        }
        let Some((name, rest)) = line.split_once('(') else {
            continue;
        };
        if name.contains(' ') {
            continue; // declarations like `int main(void)`
        }
        let args_text = rest.trim_end_matches(");");
        let args = if args_text.is_empty() {
            Vec::new()
        } else {
            args_text.split(", ").map(|s| s.to_string()).collect()
        };
        out.push((name.to_string(), args));
    }
    out
}

/// Emit the reduced-target manifest: every abstract-kernel function with
/// its definition site, sorted, one per line.
pub fn emit_abstraction_manifest(sr: &SliceResult) -> String {
    let mut out = String::new();
    for f in &sr.abstract_fns {
        match sr.fn_locations.get(f) {
            Some(loc) => out.push_str(&format!("{f}\t{loc}\n")),
            None => out.push_str(&format!("{f}\t\n")),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facts::Location;
    use crate::property::Property;
    use crate::scenario::{Level, ScenarioCall};
    use crate::slicer::{CountConstraint, ElfMode};
    use std::collections::{BTreeMap, BTreeSet};

    fn sample_slice() -> SliceResult {
        let elf: BTreeSet<String> = ["f_get", "f_put"].iter().map(|s| s.to_string()).collect();
        SliceResult {
            property: Property::new("q_size > 0"),
            mode: ElfMode::ModifyOrUse,
            vtv: std::iter::once("q_size".to_string()).collect(),
            evtv: std::iter::once("q_size".to_string()).collect(),
            elf,
            rlf: BTreeSet::new(),
            abstract_fns: ["f_get", "f_put"].iter().map(|s| s.to_string()).collect(),
            fn_locations: BTreeMap::from([
                ("f_get".to_string(), Location::new("k.c", 10)),
                ("f_put".to_string(), Location::new("k.c", 20)),
            ]),
            internal_constraints: vec![CountConstraint {
                successor: "f_get".into(),
                predecessors: std::iter::once("f_put".to_string()).collect(),
            }],
            unknown_identifiers: Vec::new(),
        }
    }

    #[test]
    fn nondet_harness_is_deterministic_and_guarded() {
        let sr = sample_slice();
        let a = emit_nondet_harness(&sr, 2).unwrap();
        let b = emit_nondet_harness(&sr, 2).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("cnt_f_get < cnt_f_put"));
        assert!(a.contains("extern void f_get();"));
        assert!(a.ends_with('\n'));
    }

    #[test]
    fn unwind_zero_emits_assertion_only() {
        let sr = sample_slice();
        let text = emit_nondet_harness(&sr, 0).unwrap();
        assert!(!text.contains("for ("));
        assert!(text.contains("assert(q_size > 0);"));
    }

    #[test]
    fn harness_contains_exactly_one_assert_with_property_text() {
        let sr = sample_slice();
        let text = emit_nondet_harness(&sr, 3).unwrap();
        assert_eq!(text.matches("assert(").count(), 1);
        assert!(text.contains("assert(q_size > 0);"));
    }

    #[test]
    fn empty_slice_is_rejected() {
        let mut sr = sample_slice();
        sr.elf.clear();
        assert!(matches!(
            emit_nondet_harness(&sr, 2),
            Err(Error::EmptySlice)
        ));
    }

    #[test]
    fn concrete_harness_round_trips_calls() {
        let scn = Scenario {
            level: Level::Root,
            seed: 9,
            calls: vec![
                ScenarioCall {
                    name: "ActivateTask".into(),
                    args: vec!["task_ctrl".into()],
                },
                ScenarioCall {
                    name: "SetEvent".into(),
                    args: vec!["task_io".into(), "evt_ready".into()],
                },
                ScenarioCall {
                    name: "TerminateTask".into(),
                    args: vec![],
                },
            ],
            complete: true,
        };
        let text = emit_concrete_harness(&scn);
        assert_eq!(text.lines().filter(|l| l.contains("Task(")).count(), 2);
        let parsed = parse_concrete_harness(&text);
        let expect: Vec<(String, Vec<String>)> = scn
            .calls
            .iter()
            .map(|c| (c.name.clone(), c.args.clone()))
            .collect();
        assert_eq!(parsed, expect);
    }

    #[test]
    fn empty_scenario_harness_has_empty_body() {
        let scn = Scenario {
            level: Level::End,
            seed: 0,
            calls: vec![],
            complete: false,
        };
        let text = emit_concrete_harness(&scn);
        assert!(parse_concrete_harness(&text).is_empty());
    }

    #[test]
    fn manifest_matches_abstract_set_exactly() {
        let sr = sample_slice();
        let text = emit_abstraction_manifest(&sr);
        let names: BTreeSet<String> = text
            .lines()
            .map(|l| l.split('\t').next().unwrap().to_string())
            .collect();
        assert_eq!(names, sr.abstract_fns);
        assert!(text.contains("f_get\tk.c:10"));
    }

    #[test]
    fn empty_slice_manifest_is_empty() {
        let mut sr = sample_slice();
        sr.abstract_fns.clear();
        assert_eq!(emit_abstraction_manifest(&sr), "");
    }
}
