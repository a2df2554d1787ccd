use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use crate::ir::{MethodId, Program, ReflectiveKind, SiteId};
use crate::reflect::{Analysis, Rule, SiteReport, SiteStatus};

pub use crate::pta::{CallEdge, CallKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CallGraphError {
    #[error("reachable set mismatch: solver found {solver} methods, graph traversal {graph}")]
    ReachabilityMismatch { solver: usize, graph: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallGraph {
    pub entry: MethodId,
    pub edges: BTreeSet<CallEdge>,
    pub reachable: BTreeSet<MethodId>,
    /// Rules behind each reflective edge, keyed by `(site, callee)`.
    pub chains: BTreeMap<(SiteId, MethodId), BTreeSet<Rule>>,
    reports: Vec<SiteReport>,
}

impl CallGraph {
    /// Materializes the graph and recomputes reachability from the entry,
    /// which must agree with the set the solver grew on the fly.
    pub fn build(a: &Analysis<'_>) -> Result<Self, CallGraphError> {
        Self::with_reports(a, a.site_reports())
    }

    pub fn with_reports(a: &Analysis<'_>, reports: Vec<SiteReport>) -> Result<Self, CallGraphError> {
        let reachable = traverse(a.entry, &a.calls);
        if reachable != a.reachable {
            return Err(CallGraphError::ReachabilityMismatch { solver: a.reachable.len(), graph: reachable.len() });
        }
        let p = a.program;
        let mut chains = BTreeMap::new();
        for e in a.calls.iter().filter(|e| e.kind == CallKind::Reflective) {
            let sig = p.method_sig(e.callee);
            let rules = reports
                .iter()
                .find(|r| r.site == e.site)
                .and_then(|r| r.targets.iter().find(|t| t.name == sig))
                .map(|t| t.rules.clone())
                .unwrap_or_default();
            chains.insert((e.site, e.callee), rules);
        }
        Ok(CallGraph { entry: a.entry, edges: a.calls.clone(), reachable, chains, reports })
    }

    pub fn reports(&self) -> &[SiteReport] {
        &self.reports
    }

    pub fn edges_at(&self, site: SiteId) -> impl Iterator<Item = &CallEdge> {
        self.edges.iter().filter(move |e| e.site == site)
    }

    pub fn reflective_edges(&self) -> impl Iterator<Item = &CallEdge> {
        self.edges.iter().filter(|e| e.kind == CallKind::Reflective)
    }

    /// Reflective sites in reachable methods, optionally of one kind.
    pub fn reachable_sites(&self, kind: Option<ReflectiveKind>) -> Vec<SiteId> {
        self.reports.iter().filter(|r| kind.is_none_or(|k| r.kind == k)).map(|r| r.site).collect()
    }

    /// Reachable sites split into (resolved or partially resolved, unresolved).
    pub fn partition_sites(&self, kind: Option<ReflectiveKind>) -> (Vec<SiteId>, Vec<SiteId>) {
        let (res, unres): (Vec<&SiteReport>, Vec<&SiteReport>) = self
            .reports
            .iter()
            .filter(|r| kind.is_none_or(|k| r.kind == k))
            .partition(|r| r.status != SiteStatus::Unresolved);
        (res.iter().map(|r| r.site).collect(), unres.iter().map(|r| r.site).collect())
    }

    /// Graphviz rendering: reflective edges dashed, nodes ordered by id.
    pub fn to_dot(&self, p: &Program) -> String {
        let mut nodes: BTreeSet<MethodId> = self.reachable.clone();
        for e in &self.edges {
            nodes.insert(e.caller);
            nodes.insert(e.callee);
        }
        let mut out = String::from("digraph callgraph {\n  node [shape=box];\n");
        for m in &nodes {
            let _ = writeln!(out, "  m{} [label={:?}];", m.0, p.method_label(*m));
        }
        // Several sites may connect the same pair; draw one edge per pair and kind.
        let pairs: BTreeSet<(MethodId, MethodId, CallKind)> =
            self.edges.iter().map(|e| (e.caller, e.callee, e.kind)).collect();
        for (from, to, kind) in pairs {
            let style = if kind == CallKind::Reflective { "dashed" } else { "solid" };
            let _ = writeln!(out, "  m{} -> m{} [style={style}];", from.0, to.0);
        }
        out.push_str("}\n");
        out
    }
}

fn traverse(entry: MethodId, edges: &BTreeSet<CallEdge>) -> BTreeSet<MethodId> {
    let mut succ: BTreeMap<MethodId, Vec<MethodId>> = BTreeMap::new();
    for e in edges {
        succ.entry(e.caller).or_default().push(e.callee);
    }
    let mut seen = BTreeSet::from([entry]);
    let mut queue = VecDeque::from([entry]);
    while let Some(m) = queue.pop_front() {
        for &n in succ.get(&m).into_iter().flatten() {
            if seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen
}
