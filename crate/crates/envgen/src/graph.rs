//! Entity/relation graph over extracted facts: call graph, called-by graph,
//! and variable dependency graph, plus the reachability queries the slicer
//! is built on.
//!
//! The graph is immutable after construction; all queries are read-only.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::facts::{FactKind, FactRecord, Location};

/// Immutable entity/relation graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CodeGraph {
    functions: BTreeMap<String, Location>,
    variables: BTreeMap<String, Location>,
    api_set: BTreeSet<String>,
    /// caller -> callee, duplicates collapsed.
    calls: BTreeSet<(String, String)>,
    /// function -> variable it writes.
    sets_edges: BTreeSet<(String, String)>,
    /// function -> variable it reads.
    uses_edges: BTreeSet<(String, String)>,
    /// assigned variable -> variable it is computed from.
    dep_edges: BTreeSet<(String, String)>,
    /// function -> assertion expression texts, in fact order.
    assertions: BTreeMap<String, Vec<String>>,
    callees: BTreeMap<String, BTreeSet<String>>,
    callers: BTreeMap<String, BTreeSet<String>>,
    dep_out: BTreeMap<String, BTreeSet<String>>,
}

impl CodeGraph {
    pub fn functions(&self) -> impl Iterator<Item = &String> {
        self.functions.keys()
    }

    pub fn variables(&self) -> impl Iterator<Item = &String> {
        self.variables.keys()
    }

    pub fn function_count(&self) -> usize {
        self.functions.len()
    }

    pub fn variable_count(&self) -> usize {
        self.variables.len()
    }

    pub fn has_function(&self, name: &str) -> bool {
        self.functions.contains_key(name)
    }

    pub fn has_variable(&self, name: &str) -> bool {
        self.variables.contains_key(name)
    }

    pub fn function_location(&self, name: &str) -> Option<&Location> {
        self.functions.get(name)
    }

    pub fn api_set(&self) -> &BTreeSet<String> {
        &self.api_set
    }

    pub fn call_edges(&self) -> &BTreeSet<(String, String)> {
        &self.calls
    }

    pub fn sets_edges(&self) -> &BTreeSet<(String, String)> {
        &self.sets_edges
    }

    pub fn uses_edges(&self) -> &BTreeSet<(String, String)> {
        &self.uses_edges
    }

    pub fn dep_edges(&self) -> &BTreeSet<(String, String)> {
        &self.dep_edges
    }

    pub fn assertions(&self) -> &BTreeMap<String, Vec<String>> {
        &self.assertions
    }

    pub fn callees_of(&self, f: &str) -> impl Iterator<Item = &String> {
        self.callees.get(f).into_iter().flatten()
    }

    pub fn callers_of(&self, f: &str) -> impl Iterator<Item = &String> {
        self.callers.get(f).into_iter().flatten()
    }

    /// Functions with a `Sets` edge into `var`.
    pub fn writers_of(&self, var: &str) -> BTreeSet<String> {
        self.sets_edges
            .iter()
            .filter(|(_, v)| v == var)
            .map(|(f, _)| f.clone())
            .collect()
    }

    /// Functions with a `Uses` edge into `var`.
    pub fn readers_of(&self, var: &str) -> BTreeSet<String> {
        self.uses_edges
            .iter()
            .filter(|(_, v)| v == var)
            .map(|(f, _)| f.clone())
            .collect()
    }
}

/// Build a graph from a fact set. Every relation endpoint must be declared
/// by a `FUNC`/`VAR` fact; otherwise a [`Error::Consistency`] listing every
/// dangling reference is returned. Duplicate declarations collapse to one
/// node (first location wins); duplicate edges collapse to one edge.
pub fn build_graph(facts: &[FactRecord]) -> Result<CodeGraph> {
    let mut g = CodeGraph::default();
    for f in facts {
        match f.kind {
            FactKind::FunctionDef => {
                g.functions
                    .entry(f.subject.clone())
                    .or_insert_with(|| f.location.clone());
            }
            FactKind::VariableDef => {
                g.variables
                    .entry(f.subject.clone())
                    .or_insert_with(|| f.location.clone());
            }
            _ => {}
        }
    }
    let mut dangling: Vec<String> = Vec::new();
    let check_fn = |name: &str, role: &str, loc: &Location, dangling: &mut Vec<String>| {
        if !g.functions.contains_key(name) {
            dangling.push(format!("{role} {name} at {loc}"));
        }
    };
    for f in facts {
        match f.kind {
            FactKind::Call => {
                check_fn(&f.subject, "caller", &f.location, &mut dangling);
                check_fn(&f.object, "callee", &f.location, &mut dangling);
            }
            FactKind::Sets | FactKind::Uses => {
                check_fn(&f.subject, "function", &f.location, &mut dangling);
                if !g.variables.contains_key(&f.object) {
                    dangling.push(format!("variable {} at {}", f.object, f.location));
                }
            }
            FactKind::DependsOn => {
                for name in [&f.subject, &f.object] {
                    if !g.variables.contains_key(name.as_str()) {
                        dangling.push(format!("variable {name} at {}", f.location));
                    }
                }
            }
            FactKind::ApiMarker | FactKind::Assertion => {
                check_fn(&f.subject, "function", &f.location, &mut dangling);
            }
            FactKind::FunctionDef | FactKind::VariableDef => {}
        }
    }
    if !dangling.is_empty() {
        return Err(Error::Consistency(dangling));
    }
    for f in facts {
        match f.kind {
            FactKind::Call => {
                g.calls.insert((f.subject.clone(), f.object.clone()));
                g.callees
                    .entry(f.subject.clone())
                    .or_default()
                    .insert(f.object.clone());
                g.callers
                    .entry(f.object.clone())
                    .or_default()
                    .insert(f.subject.clone());
            }
            FactKind::Sets => {
                g.sets_edges.insert((f.subject.clone(), f.object.clone()));
            }
            FactKind::Uses => {
                g.uses_edges.insert((f.subject.clone(), f.object.clone()));
            }
            FactKind::DependsOn => {
                g.dep_edges.insert((f.subject.clone(), f.object.clone()));
                g.dep_out
                    .entry(f.subject.clone())
                    .or_default()
                    .insert(f.object.clone());
            }
            FactKind::ApiMarker => {
                g.api_set.insert(f.subject.clone());
            }
            FactKind::Assertion => {
                g.assertions
                    .entry(f.subject.clone())
                    .or_default()
                    .push(f.object.clone());
            }
            FactKind::FunctionDef | FactKind::VariableDef => {}
        }
    }
    Ok(g)
}

fn closure_over(seed: &str, next: impl Fn(&str) -> BTreeSet<String>) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = BTreeSet::new();
    let mut work = vec![seed.to_string()];
    out.insert(seed.to_string());
    while let Some(cur) = work.pop() {
        for n in next(&cur) {
            if out.insert(n.clone()) {
                work.push(n);
            }
        }
    }
    out
}

/// All functions from which `f` is reachable along call edges, including `f`
/// itself. Terminates on cycles.
pub fn backward_call_closure(g: &CodeGraph, f: &str) -> Result<BTreeSet<String>> {
    if !g.has_function(f) {
        return Err(Error::UnknownFunction(f.to_string()));
    }
    Ok(closure_over(f, |n| g.callers_of(n).cloned().collect()))
}

/// All functions reachable from `f` along call edges, including `f` itself.
pub fn forward_call_closure(g: &CodeGraph, f: &str) -> Result<BTreeSet<String>> {
    if !g.has_function(f) {
        return Err(Error::UnknownFunction(f.to_string()));
    }
    Ok(closure_over(f, |n| g.callees_of(n).cloned().collect()))
}

/// Closure of `vars` under the assigned-from relation (an assigned variable
/// depends on every variable read on the right-hand side), including the
/// seeds.
pub fn variable_dependency_closure(
    g: &CodeGraph,
    vars: &BTreeSet<String>,
) -> Result<BTreeSet<String>> {
    for v in vars {
        if !g.has_variable(v) {
            return Err(Error::UnknownVariable(v.clone()));
        }
    }
    let mut out: BTreeSet<String> = vars.clone();
    let mut work: Vec<String> = vars.iter().cloned().collect();
    while let Some(cur) = work.pop() {
        if let Some(next) = g.dep_out.get(&cur) {
            for n in next {
                if out.insert(n.clone()) {
                    work.push(n.clone());
                }
            }
        }
    }
    Ok(out)
}

/// DOT rendering for inspection: functions as boxes (APIs double-bordered),
/// variables as ellipses; solid edges are calls, dashed edges def/use,
/// dotted edges variable dependencies.
pub fn to_dot(g: &CodeGraph) -> String {
    let mut out = String::from("digraph code {\n  rankdir=LR;\n");
    for f in g.functions.keys() {
        let peripheries = if g.api_set.contains(f) { 2 } else { 1 };
        out.push_str(&format!(
            "  \"{f}\" [shape=box, peripheries={peripheries}];\n"
        ));
    }
    for v in g.variables.keys() {
        out.push_str(&format!("  \"{v}\" [shape=ellipse];\n"));
    }
    for (a, b) in &g.calls {
        out.push_str(&format!("  \"{a}\" -> \"{b}\";\n"));
    }
    for (f, v) in &g.sets_edges {
        out.push_str(&format!(
            "  \"{f}\" -> \"{v}\" [style=dashed, label=\"sets\"];\n"
        ));
    }
    for (f, v) in &g.uses_edges {
        out.push_str(&format!(
            "  \"{f}\" -> \"{v}\" [style=dashed, label=\"uses\"];\n"
        ));
    }
    for (a, b) in &g.dep_edges {
        out.push_str(&format!("  \"{a}\" -> \"{b}\" [style=dotted];\n"));
    }
    out.push_str("}\n");
    out
}
