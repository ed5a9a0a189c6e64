//! Property-based extraction pipeline: target variables, their dependency
//! closure, end-level functions, root-level functions, the abstract kernel
//! set, and the internal count constraints that order end-level calls.
//!
//! Each stage is exposed on its own; [`slice`] composes them. All outputs
//! are sorted sets so repeated runs are byte-identical.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::facts::Location;
use crate::graph::{
    backward_call_closure, forward_call_closure, variable_dependency_closure, CodeGraph,
};
use crate::property::Property;
use crate::sim::ExternalConstraintTable;

/// Which def/use relation qualifies a function as end-level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ElfMode {
    /// Only functions that write a target variable.
    ModifyOnly,
    /// Functions that write or read a target variable (the default).
    #[default]
    ModifyOrUse,
}

impl ElfMode {
    pub fn parse(s: &str) -> Result<ElfMode> {
        match s {
            "modify_only" => Ok(ElfMode::ModifyOnly),
            "modify_or_use" => Ok(ElfMode::ModifyOrUse),
            other => Err(Error::Config(format!(
                "mode must be modify_only or modify_or_use, got {other:?}"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ElfMode::ModifyOnly => "modify_only",
            ElfMode::ModifyOrUse => "modify_or_use",
        }
    }
}

/// `count(successor)` must stay strictly below `count(p)` for every
/// predecessor `p`, at every prefix of an end-level scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountConstraint {
    pub successor: String,
    pub predecessors: BTreeSet<String>,
}

/// Everything extracted for one property.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceResult {
    pub property: Property,
    pub mode: ElfMode,
    /// Variables named in the property.
    pub vtv: BTreeSet<String>,
    /// Dependency closure of the target variables.
    pub evtv: BTreeSet<String>,
    /// End-level functions.
    pub elf: BTreeSet<String>,
    /// Root-level functions (public APIs reaching some end-level function).
    pub rlf: BTreeSet<String>,
    /// The reduced verification target: everything reachable from the
    /// root-level set plus the end-level functions themselves.
    pub abstract_fns: BTreeSet<String>,
    /// Definition sites for the abstract kernel, for manifest emission.
    pub fn_locations: BTreeMap<String, Location>,
    pub internal_constraints: Vec<CountConstraint>,
    /// Identifiers in the property that name nothing in the graph
    /// (reported, never silently dropped).
    pub unknown_identifiers: Vec<String>,
}

/// Variables of the graph named by the property. Identifiers that name no
/// graph variable (member names resolved as enum constants, typos) are
/// returned separately as warnings.
pub fn extract_target_variables(
    p: &Property,
    g: &CodeGraph,
) -> Result<(BTreeSet<String>, Vec<String>)> {
    let idents = p.identifiers()?;
    let mut vars = BTreeSet::new();
    let mut unknown = Vec::new();
    for id in idents {
        if g.has_variable(&id) {
            vars.insert(id);
        } else {
            unknown.push(id);
        }
    }
    Ok((vars, unknown))
}

/// Functions that directly touch a target variable: writers always,
/// readers too under [`ElfMode::ModifyOrUse`].
pub fn end_level_functions(
    g: &CodeGraph,
    evtv: &BTreeSet<String>,
    mode: ElfMode,
) -> Result<BTreeSet<String>> {
    for v in evtv {
        if !g.has_variable(v) {
            return Err(Error::UnknownVariable(v.clone()));
        }
    }
    let mut out = BTreeSet::new();
    for v in evtv {
        out.extend(g.writers_of(v));
        if mode == ElfMode::ModifyOrUse {
            out.extend(g.readers_of(v));
        }
    }
    Ok(out)
}

/// Public APIs from which some end-level function is reachable. An
/// end-level function that is itself an API is included.
pub fn root_level_functions(g: &CodeGraph, elf: &BTreeSet<String>) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    for e in elf {
        let callers = backward_call_closure(g, e)?;
        out.extend(callers.intersection(g.api_set()).cloned());
    }
    Ok(out)
}

/// Union of the forward call closures of `roots`: the code a verification
/// run actually needs.
pub fn abstract_kernel(g: &CodeGraph, roots: &BTreeSet<String>) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    for r in roots {
        out.extend(forward_call_closure(g, r)?);
    }
    Ok(out)
}

/// The end-level functions a call from `from` reaches before passing
/// through any other end-level function. This is the set of end-level
/// entry points of `from`: deeper end-level functions are reached only
/// through another member of `elf` and are that member's business.
fn entry_elfs(g: &CodeGraph, elf: &BTreeSet<String>, from: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut work = vec![from.to_string()];
    seen.insert(from.to_string());
    while let Some(cur) = work.pop() {
        if elf.contains(&cur) {
            out.insert(cur);
            continue; // do not look through an end-level function
        }
        for n in g.callees_of(&cur) {
            if seen.insert(n.clone()) {
                work.push(n.clone());
            }
        }
    }
    out
}

/// Derive count constraints over end-level functions from the API
/// precondition table.
///
/// Rule: for each end-level function `e`, its API callers are the APIs
/// that reach `e` as an end-level entry point. If `e` has API callers and
/// every one of them has a non-empty precondition API set, then whichever
/// caller invoked `e`, some precondition API ran first, so the end-level
/// entry points of those precondition APIs precede `e`. Only functions
/// implied by *every* caller are kept (a caller with no preconditions
/// implies nothing and cancels the constraint): a false ordering would
/// wrongly prune scenarios, a missing one only costs efficiency.
pub fn derive_internal_constraints(
    g: &CodeGraph,
    ext: &ExternalConstraintTable,
    elf: &BTreeSet<String>,
) -> Result<Vec<CountConstraint>> {
    let entry_map: BTreeMap<String, BTreeSet<String>> = g
        .api_set()
        .iter()
        .map(|a| (a.clone(), entry_elfs(g, elf, a)))
        .collect();
    let mut out = Vec::new();
    for e in elf {
        let callers: Vec<&String> = entry_map
            .iter()
            .filter(|(_, entries)| entries.contains(e))
            .map(|(a, _)| a)
            .collect();
        if callers.is_empty() {
            continue;
        }
        let mut implied: Option<BTreeSet<String>> = None;
        let mut all_have_preconditions = true;
        for a in &callers {
            // an API without a table row has no known preconditions, which
            // cancels the constraint just like an empty set does
            let pre = ext.precondition_apis(a).unwrap_or_default();
            if pre.is_empty() {
                all_have_preconditions = false;
                break;
            }
            let mut via_this_caller = BTreeSet::new();
            for p in &pre {
                if let Some(entries) = entry_map.get(p) {
                    via_this_caller.extend(entries.iter().cloned());
                }
            }
            implied = Some(match implied {
                None => via_this_caller,
                Some(acc) => acc.intersection(&via_this_caller).cloned().collect(),
            });
        }
        if !all_have_preconditions {
            continue;
        }
        let mut predecessors = implied.unwrap_or_default();
        predecessors.remove(e);
        if !predecessors.is_empty() {
            out.push(CountConstraint {
                successor: e.clone(),
                predecessors,
            });
        }
    }
    Ok(out)
}

/// Run the whole extraction pipeline for one property.
pub fn slice(
    p: &Property,
    g: &CodeGraph,
    ext: &ExternalConstraintTable,
    mode: ElfMode,
) -> Result<SliceResult> {
    let (vtv, unknown_identifiers) = extract_target_variables(p, g)?;
    let evtv = variable_dependency_closure(g, &vtv)?;
    let elf = end_level_functions(g, &evtv, mode)?;
    let rlf = root_level_functions(g, &elf)?;
    let mut abstract_fns = abstract_kernel(g, &rlf)?;
    // end-level functions belong to the verification target even when no
    // API reaches them
    abstract_fns.extend(abstract_kernel(g, &elf)?);
    let fn_locations = abstract_fns
        .iter()
        .filter_map(|f| g.function_location(f).map(|l| (f.clone(), l.clone())))
        .collect();
    let internal_constraints = derive_internal_constraints(g, ext, &elf)?;
    let mut property = p.clone();
    property.variables = vtv.iter().cloned().collect();
    Ok(SliceResult {
        property,
        mode,
        vtv,
        evtv,
        elf,
        rlf,
        abstract_fns,
        fn_locations,
        internal_constraints,
        unknown_identifiers,
    })
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

/// Render a slice report (tab-separated sections, documented in
/// `docs/FORMATS.md`). Byte-deterministic.
pub fn serialize_slice(sr: &SliceResult) -> String {
    let mut out = String::new();
    out.push_str(&format!("property\t{}\n", sr.property.raw_text));
    out.push_str(&format!("mode\t{}\n", sr.mode.as_str()));
    for v in &sr.vtv {
        out.push_str(&format!("vtv\t{v}\n"));
    }
    for v in &sr.evtv {
        out.push_str(&format!("evtv\t{v}\n"));
    }
    for f in &sr.elf {
        out.push_str(&format!("elf\t{f}\n"));
    }
    for f in &sr.rlf {
        out.push_str(&format!("rlf\t{f}\n"));
    }
    for f in &sr.abstract_fns {
        match sr.fn_locations.get(f) {
            Some(loc) => out.push_str(&format!("abstract\t{f}\t{loc}\n")),
            None => out.push_str(&format!("abstract\t{f}\t\n")),
        }
    }
    for c in &sr.internal_constraints {
        let preds: Vec<&str> = c.predecessors.iter().map(|s| s.as_str()).collect();
        out.push_str(&format!(
            "constraint\t{}\t{}\n",
            c.successor,
            preds.join(",")
        ));
    }
    for w in &sr.unknown_identifiers {
        out.push_str(&format!("warning\tunknown identifier {w}\n"));
    }
    out
}

/// Parse a slice report produced by [`serialize_slice`].
pub fn parse_slice(text: &str, file: &str) -> Result<SliceResult> {
    let mut property: Option<Property> = None;
    let mut mode = ElfMode::default();
    let mut sr = SliceResult {
        property: Property::new(""),
        mode,
        vtv: BTreeSet::new(),
        evtv: BTreeSet::new(),
        elf: BTreeSet::new(),
        rlf: BTreeSet::new(),
        abstract_fns: BTreeSet::new(),
        fn_locations: BTreeMap::new(),
        internal_constraints: Vec::new(),
        unknown_identifiers: Vec::new(),
    };
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx as u32 + 1;
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        let tag = cols.next().unwrap_or("");
        let rest: Vec<&str> = cols.collect();
        let first = |what: &str| -> Result<&str> {
            rest.first()
                .copied()
                .ok_or_else(|| Error::syntax(file, lineno, format!("{tag} line needs {what}")))
        };
        match tag {
            // expression text is taken whole, tabs included
            "property" => property = Some(Property::new(rest.join("\t"))),
            "mode" => mode = ElfMode::parse(first("a mode")?)?,
            "vtv" => {
                sr.vtv.insert(first("a name")?.to_string());
            }
            "evtv" => {
                sr.evtv.insert(first("a name")?.to_string());
            }
            "elf" => {
                sr.elf.insert(first("a name")?.to_string());
            }
            "rlf" => {
                sr.rlf.insert(first("a name")?.to_string());
            }
            "abstract" => {
                let name = first("a name")?.to_string();
                if let Some(loc) = rest.get(1) {
                    if let Some((f, l)) = loc.rsplit_once(':') {
                        if let Ok(l) = l.parse() {
                            sr.fn_locations.insert(name.clone(), Location::new(f, l));
                        }
                    }
                }
                sr.abstract_fns.insert(name);
            }
            "constraint" => {
                let successor = first("a successor")?.to_string();
                let preds = rest
                    .get(1)
                    .copied()
                    .unwrap_or("")
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(|s| s.to_string())
                    .collect::<BTreeSet<String>>();
                if preds.is_empty() {
                    return Err(Error::syntax(file, lineno, "constraint needs predecessors"));
                }
                sr.internal_constraints.push(CountConstraint {
                    successor,
                    predecessors: preds,
                });
            }
            "warning" => sr.unknown_identifiers.push(
                first("text")?
                    .trim_start_matches("unknown identifier ")
                    .to_string(),
            ),
            other => {
                return Err(Error::syntax(
                    file,
                    lineno,
                    format!("unknown report tag {other:?}"),
                ))
            }
        }
    }
    sr.property =
        property.ok_or_else(|| Error::syntax(file, 0, "report is missing its property line"))?;
    sr.property.variables = sr.vtv.iter().cloned().collect();
    sr.mode = mode;
    Ok(sr)
}
