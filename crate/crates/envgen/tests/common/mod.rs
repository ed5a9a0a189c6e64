//! Shared test support: brute-force oracles, random fact-set generation,
//! fixture loading, and golden-file comparison.
#![allow(dead_code)] // each test binary uses a different subset
//!
//! The oracles are deliberately independent of the library's query
//! implementations: reachability is recomputed by boolean matrix repeated
//! squaring, set definitions by direct scans over the fact list, and
//! count-constraint checks by a from-scratch prefix recount.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use envgen::facts::{FactKind, FactRecord, Location};
use envgen::scenario::ScenarioCall;
use envgen::slicer::CountConstraint;

// ---------------------------------------------------------------------------
// Fixture access
// ---------------------------------------------------------------------------

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(name: &str) -> String {
    let path = fixture_dir().join(name);
    std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("cannot read fixture {}: {e}", path.display()))
}

/// Compare `actual` against a golden file; `UPDATE_GOLDEN=1` rewrites the
/// golden instead.
pub fn assert_golden(actual: &str, name: &str) {
    let path = fixture_dir().join("golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing golden {} ({e}); run with UPDATE_GOLDEN=1", name));
    assert!(
        expected == actual,
        "output differs from golden {name}; run with UPDATE_GOLDEN=1 after reviewing"
    );
}

// ---------------------------------------------------------------------------
// Reachability oracle
// ---------------------------------------------------------------------------

/// Reflexive-transitive closure by repeated squaring of the boolean
/// adjacency matrix.
#[allow(clippy::needless_range_loop)] // oracle clarity beats iterator adaptors
pub fn matrix_closure(n: usize, edges: &BTreeSet<(usize, usize)>) -> Vec<Vec<bool>> {
    let mut m = vec![vec![false; n]; n];
    for i in 0..n {
        m[i][i] = true;
    }
    for &(a, b) in edges {
        if a < n && b < n {
            m[a][b] = true;
        }
    }
    loop {
        let mut next = m.clone();
        for i in 0..n {
            for k in 0..n {
                if m[i][k] {
                    for j in 0..n {
                        if m[k][j] {
                            next[i][j] = true;
                        }
                    }
                }
            }
        }
        if next == m {
            return m;
        }
        m = next;
    }
}

// ---------------------------------------------------------------------------
// Random fact sets
// ---------------------------------------------------------------------------

/// A randomly generated fact set with the index structures the oracles
/// need.
pub struct RandomCode {
    pub facts: Vec<FactRecord>,
    pub fn_names: Vec<String>,
    pub var_names: Vec<String>,
    pub call_edges: BTreeSet<(usize, usize)>,
    pub dep_edges: BTreeSet<(usize, usize)>,
    pub sets_pairs: BTreeSet<(usize, usize)>,
    pub uses_pairs: BTreeSet<(usize, usize)>,
    pub api: BTreeSet<usize>,
}

fn draw(rng: &mut ChaCha8Rng, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

/// Deterministic random code shape: up to 25 functions, up to 15
/// variables, random call/def-use/dependency relations, a random API
/// subset.
pub fn random_code(seed: u64) -> RandomCode {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = 1 + draw(&mut rng, 25);
    let nv = draw(&mut rng, 16);
    let fn_names: Vec<String> = (0..nf).map(|i| format!("fn_{i}")).collect();
    let var_names: Vec<String> = (0..nv).map(|i| format!("var_{i}")).collect();
    let loc = Location::new("random.c", 1);

    let mut facts: Vec<FactRecord> = Vec::new();
    for name in &fn_names {
        facts.push(FactRecord::new(
            FactKind::FunctionDef,
            name,
            "",
            loc.clone(),
        ));
    }
    for name in &var_names {
        facts.push(FactRecord::new(
            FactKind::VariableDef,
            name,
            "",
            loc.clone(),
        ));
    }

    let mut call_edges = BTreeSet::new();
    for _ in 0..draw(&mut rng, nf * 2 + 1) {
        call_edges.insert((draw(&mut rng, nf), draw(&mut rng, nf)));
    }
    let mut api = BTreeSet::new();
    for i in 0..nf {
        if draw(&mut rng, 10) < 3 {
            api.insert(i);
        }
    }
    let mut sets_pairs = BTreeSet::new();
    let mut uses_pairs = BTreeSet::new();
    let mut dep_edges = BTreeSet::new();
    if nv > 0 {
        for _ in 0..draw(&mut rng, nf + nv + 1) {
            sets_pairs.insert((draw(&mut rng, nf), draw(&mut rng, nv)));
        }
        for _ in 0..draw(&mut rng, nf + nv + 1) {
            uses_pairs.insert((draw(&mut rng, nf), draw(&mut rng, nv)));
        }
        for _ in 0..draw(&mut rng, nv * 2 + 1) {
            dep_edges.insert((draw(&mut rng, nv), draw(&mut rng, nv)));
        }
    }

    for &(a, b) in &call_edges {
        facts.push(FactRecord::new(
            FactKind::Call,
            &fn_names[a],
            &fn_names[b],
            loc.clone(),
        ));
    }
    for &i in &api {
        facts.push(FactRecord::new(
            FactKind::ApiMarker,
            &fn_names[i],
            "",
            loc.clone(),
        ));
    }
    for &(f, v) in &sets_pairs {
        facts.push(FactRecord::new(
            FactKind::Sets,
            &fn_names[f],
            &var_names[v],
            loc.clone(),
        ));
    }
    for &(f, v) in &uses_pairs {
        facts.push(FactRecord::new(
            FactKind::Uses,
            &fn_names[f],
            &var_names[v],
            loc.clone(),
        ));
    }
    for &(a, b) in &dep_edges {
        facts.push(FactRecord::new(
            FactKind::DependsOn,
            &var_names[a],
            &var_names[b],
            loc.clone(),
        ));
    }

    RandomCode {
        facts,
        fn_names,
        var_names,
        call_edges,
        dep_edges,
        sets_pairs,
        uses_pairs,
        api,
    }
}

#[allow(clippy::needless_range_loop)]
impl RandomCode {
    pub fn fn_index(&self, name: &str) -> usize {
        self.fn_names.iter().position(|n| n == name).unwrap()
    }

    /// Oracle end-level set: direct definition scan over the def/use pairs.
    pub fn elf_oracle(&self, evtv: &BTreeSet<usize>, include_uses: bool) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for &(f, v) in &self.sets_pairs {
            if evtv.contains(&v) {
                out.insert(self.fn_names[f].clone());
            }
        }
        if include_uses {
            for &(f, v) in &self.uses_pairs {
                if evtv.contains(&v) {
                    out.insert(self.fn_names[f].clone());
                }
            }
        }
        out
    }

    /// Oracle root-level set: APIs from which some end-level function is
    /// reachable, by matrix closure.
    pub fn rlf_oracle(&self, elf: &BTreeSet<String>) -> BTreeSet<String> {
        let reach = matrix_closure(self.fn_names.len(), &self.call_edges);
        let elf_idx: BTreeSet<usize> = elf.iter().map(|e| self.fn_index(e)).collect();
        self.api
            .iter()
            .filter(|&&a| elf_idx.iter().any(|&e| reach[a][e]))
            .map(|&a| self.fn_names[a].clone())
            .collect()
    }

    /// Oracle abstract kernel: everything reachable from the root-level
    /// set or the end-level set.
    pub fn abstract_oracle(
        &self,
        rlf: &BTreeSet<String>,
        elf: &BTreeSet<String>,
    ) -> BTreeSet<String> {
        let reach = matrix_closure(self.fn_names.len(), &self.call_edges);
        let mut out = BTreeSet::new();
        for name in rlf.iter().chain(elf.iter()) {
            let i = self.fn_index(name);
            for j in 0..self.fn_names.len() {
                if reach[i][j] {
                    out.insert(self.fn_names[j].clone());
                }
            }
        }
        out
    }

    /// Oracle variable dependency closure by matrix closure over dep edges.
    pub fn var_closure_oracle(&self, seeds: &BTreeSet<usize>) -> BTreeSet<String> {
        let reach = matrix_closure(self.var_names.len(), &self.dep_edges);
        let mut out = BTreeSet::new();
        for &s in seeds {
            for j in 0..self.var_names.len() {
                if reach[s][j] {
                    out.insert(self.var_names[j].clone());
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Count-constraint recount oracle
// ---------------------------------------------------------------------------

/// From-scratch prefix recount: at each position, before counting the
/// call, every constraint whose successor is being called must hold with
/// strict `<` against every predecessor.
pub fn recount_all_prefixes(calls: &[ScenarioCall], constraints: &[CountConstraint]) -> bool {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for call in calls {
        for c in constraints {
            if c.successor == call.name {
                let mine = counts.get(call.name.as_str()).copied().unwrap_or(0);
                for p in &c.predecessors {
                    if mine >= counts.get(p.as_str()).copied().unwrap_or(0) {
                        return false;
                    }
                }
            }
        }
        *counts.entry(call.name.as_str()).or_insert(0) += 1;
    }
    true
}
