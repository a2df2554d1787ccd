//! Flow-insensitive source/sink taint tracking over a finished analysis.
//!
//! Taint lives on variables and field slots. Heap flows use the computed
//! points-to sets, calls use the computed call graph, so reflective edges
//! found by the stronger modes directly expose more leaks.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::ir::{render_stmt, MethodId, Operand, Program, SiteId, StmtKind, VarId};
use crate::pta::{AbstractObject, CallKind, FieldKey, ObjId};
use crate::reflect::Analysis;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaintError {
    #[error("taint config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("taint config line {line}: no method `{name}` in the program")]
    UnknownMethod { line: usize, name: String },
    #[error("taint config line {line}: `{name}` has no parameter {index}")]
    BadPosition { line: usize, name: String, index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaintConfig {
    /// `(line, Class.method)`.
    pub sources: Vec<(usize, String)>,
    /// `(line, Class.method, parameter index)`.
    pub sinks: Vec<(usize, String, usize)>,
}

impl TaintConfig {
    pub fn parse(text: &str) -> Result<Self, TaintError> {
        let mut cfg = TaintConfig { sources: Vec::new(), sinks: Vec::new() };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let words: Vec<&str> = content.split_whitespace().collect();
            let err = |message: &str| TaintError::Syntax { line, message: message.to_string() };
            match words.as_slice() {
                ["source", m] => cfg.sources.push((line, m.to_string())),
                ["sink", m, idx] => {
                    let idx = idx.parse().map_err(|_| err("parameter index must be a non-negative integer"))?;
                    cfg.sinks.push((line, m.to_string(), idx));
                }
                ["source", ..] => return Err(err("expected `source <Class.method>`")),
                ["sink", ..] => return Err(err("expected `sink <Class.method> <param-index>`")),
                _ => return Err(err("expected `source` or `sink`")),
            }
        }
        Ok(cfg)
    }

    /// Binds the configured names to program methods; every overload of a
    /// name is included.
    pub fn resolve(&self, p: &Program) -> Result<ResolvedConfig, TaintError> {
        let mut out = ResolvedConfig::default();
        for (line, name) in &self.sources {
            let ms = p.methods_named(name);
            if ms.is_empty() {
                return Err(TaintError::UnknownMethod { line: *line, name: name.clone() });
            }
            out.sources.extend(ms);
        }
        for (line, name, index) in &self.sinks {
            let ms = p.methods_named(name);
            if ms.is_empty() {
                return Err(TaintError::UnknownMethod { line: *line, name: name.clone() });
            }
            let fitting: Vec<MethodId> = ms.into_iter().filter(|&m| p.method(m).arity() > *index).collect();
            if fitting.is_empty() {
                return Err(TaintError::BadPosition { line: *line, name: name.clone(), index: *index });
            }
            for m in fitting {
                out.sinks.entry(m).or_default().insert(*index);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResolvedConfig {
    pub sources: BTreeSet<MethodId>,
    pub sinks: BTreeMap<MethodId, BTreeSet<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Leak {
    pub source_site: SiteId,
    pub source: String,
    pub sink_site: SiteId,
    pub sink: String,
    pub param: usize,
    /// Assignments and bindings from the source call to the sink argument.
    pub witness: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TaintReport {
    pub leaks: Vec<Leak>,
    /// Reachable source call sites whose result is used.
    pub sources_reached: usize,
    pub tainted_vars: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum TNode {
    Var(VarId),
    Field(ObjId, FieldKey),
}

struct Graph {
    succ: BTreeMap<TNode, BTreeMap<TNode, String>>,
}

impl Graph {
    fn add(&mut self, from: TNode, to: TNode, why: String) {
        self.succ.entry(from).or_default().entry(to).or_insert(why);
    }
}

fn ids(a: &Analysis<'_>, v: VarId) -> Vec<ObjId> {
    a.pta.var_pts.get(&v).map(|s| s.iter().copied().collect()).unwrap_or_default()
}

fn arrays(a: &Analysis<'_>, v: VarId) -> Vec<ObjId> {
    ids(a, v).into_iter().filter(|&o| matches!(a.pta.object(o), AbstractObject::Array { .. })).collect()
}

fn build_graph(a: &Analysis<'_>) -> Graph {
    let p = a.program;
    let mut g = Graph { succ: BTreeMap::new() };
    for &m in &a.reachable {
        let mm = p.method(m);
        for s in mm.body.statements() {
            let why = || format!("{} @{}", render_stmt(p, &s.kind), s.site);
            match &s.kind {
                StmtKind::Copy { lhs, rhs } | StmtKind::Cast { lhs, rhs, .. } => {
                    g.add(TNode::Var(*rhs), TNode::Var(*lhs), why());
                }
                StmtKind::Load { lhs, base, field } => {
                    for o in ids(a, *base) {
                        g.add(TNode::Field(o, FieldKey::Named(field.clone())), TNode::Var(*lhs), why());
                    }
                }
                StmtKind::Store { base, field, rhs } => {
                    for o in ids(a, *base) {
                        g.add(TNode::Var(*rhs), TNode::Field(o, FieldKey::Named(field.clone())), why());
                    }
                }
                StmtKind::ArrayLoad { lhs, base } => {
                    for o in ids(a, *base) {
                        g.add(TNode::Field(o, FieldKey::Arr), TNode::Var(*lhs), why());
                    }
                }
                StmtKind::ArrayStore { base, rhs, .. } => {
                    for o in ids(a, *base) {
                        g.add(TNode::Var(*rhs), TNode::Field(o, FieldKey::Arr), why());
                    }
                }
                StmtKind::Return { value: Some(v) } => {
                    if let Some(r) = mm.ret_var {
                        g.add(TNode::Var(*v), TNode::Var(r), why());
                    }
                }
                _ => {}
            }
        }
    }
    for e in &a.calls {
        let callee = p.method(e.callee);
        let Some(stmt) = p.stmt(e.site) else { continue };
        let bind = |from: String, to: VarId| format!("bind {from} -> {} @{}", p.var_label(to), e.site);
        let lhs = match &stmt.kind {
            StmtKind::VirtualCall { lhs, recv, args, .. } => {
                if let Some(this) = callee.this_var {
                    g.add(TNode::Var(*recv), TNode::Var(this), bind(p.var_label(*recv), this));
                }
                for (&x, &param) in args.iter().zip(&callee.params) {
                    g.add(TNode::Var(x), TNode::Var(param), bind(p.var_label(x), param));
                }
                *lhs
            }
            StmtKind::StaticCall { lhs, args, .. } => {
                for (&x, &param) in args.iter().zip(&callee.params) {
                    g.add(TNode::Var(x), TNode::Var(param), bind(p.var_label(x), param));
                }
                *lhs
            }
            StmtKind::Invoke { lhs, recv, args, .. } => {
                if let (Operand::Var(y), Some(this)) = (recv, callee.this_var) {
                    g.add(TNode::Var(*y), TNode::Var(this), bind(p.var_label(*y), this));
                }
                if let Operand::Var(x) = args {
                    for arr in arrays(a, *x) {
                        for &param in &callee.params {
                            let from = format!("{}[*]", p.var_label(*x));
                            g.add(TNode::Field(arr, FieldKey::Arr), TNode::Var(param), bind(from, param));
                        }
                    }
                }
                *lhs
            }
            _ => None,
        };
        if let (Some(l), Some(r)) = (lhs, callee.ret_var) {
            g.add(TNode::Var(r), TNode::Var(l), format!("return {} -> {} @{}", p.var_label(r), p.var_label(l), e.site));
        }
    }
    g
}

/// Nodes holding the value passed at position `k` of a call edge.
fn argument_nodes(a: &Analysis<'_>, site: SiteId, kind: CallKind, k: usize) -> Vec<TNode> {
    let Some(stmt) = a.program.stmt(site) else { return Vec::new() };
    match (&stmt.kind, kind) {
        (StmtKind::VirtualCall { args, .. } | StmtKind::StaticCall { args, .. }, _) => {
            args.get(k).map(|&v| vec![TNode::Var(v)]).unwrap_or_default()
        }
        (StmtKind::Invoke { args: Operand::Var(x), .. }, CallKind::Reflective) => {
            arrays(a, *x).into_iter().map(|o| TNode::Field(o, FieldKey::Arr)).collect()
        }
        _ => Vec::new(),
    }
}

pub fn analyze_taint(a: &Analysis<'_>, cfg: &ResolvedConfig) -> TaintReport {
    let p = a.program;
    let g = build_graph(a);
    // Source sites: call edges to a source whose result is assigned.
    let mut sources: BTreeMap<SiteId, (String, VarId, String)> = BTreeMap::new();
    for e in a.calls.iter().filter(|e| cfg.sources.contains(&e.callee)) {
        if let Some(s) = p.stmt(e.site) {
            if let Some(lhs) = s.kind.def() {
                let text = format!("{} @{}", render_stmt(p, &s.kind), e.site);
                sources.entry(e.site).or_insert((p.method_sig(e.callee), lhs, text));
            }
        }
    }
    let sink_edges: Vec<_> = a.calls.iter().filter(|e| cfg.sinks.contains_key(&e.callee)).collect();
    let mut leaks = Vec::new();
    let mut tainted_all = BTreeSet::new();
    for (&src_site, (src_name, lhs, text)) in &sources {
        let parent = reach(&g, TNode::Var(*lhs));
        tainted_all.extend(parent.keys().filter_map(|n| match n {
            TNode::Var(v) => Some(*v),
            TNode::Field(..) => None,
        }));
        for e in &sink_edges {
            for &k in &cfg.sinks[&e.callee] {
                let hit = argument_nodes(a, e.site, e.kind, k).into_iter().find(|n| parent.contains_key(n));
                let Some(hit) = hit else { continue };
                let mut witness = vec![text.clone()];
                witness.extend(path(&parent, &hit));
                witness.push(format!("sink {} arg {k} @{}", p.method_sig(e.callee), e.site));
                leaks.push(Leak {
                    source_site: src_site,
                    source: src_name.clone(),
                    sink_site: e.site,
                    sink: p.method_sig(e.callee),
                    param: k,
                    witness,
                });
            }
        }
    }
    leaks.sort_by(|x, y| (x.source_site, x.sink_site, &x.sink, x.param).cmp(&(y.source_site, y.sink_site, &y.sink, y.param)));
    leaks.dedup_by(|x, y| (x.source_site, x.sink_site, &x.sink) == (y.source_site, y.sink_site, &y.sink));
    TaintReport { leaks, sources_reached: sources.len(), tainted_vars: tainted_all.len() }
}

/// BFS tree from `start`: node → (predecessor, step label).
fn reach(g: &Graph, start: TNode) -> BTreeMap<TNode, Option<(TNode, String)>> {
    let mut parent = BTreeMap::from([(start.clone(), None)]);
    let mut queue = VecDeque::from([start]);
    while let Some(n) = queue.pop_front() {
        for (m, why) in g.succ.get(&n).into_iter().flatten() {
            if !parent.contains_key(m) {
                parent.insert(m.clone(), Some((n.clone(), why.clone())));
                queue.push_back(m.clone());
            }
        }
    }
    parent
}

fn path(parent: &BTreeMap<TNode, Option<(TNode, String)>>, end: &TNode) -> Vec<String> {
    let mut steps = Vec::new();
    let mut cur = end.clone();
    while let Some(Some((prev, why))) = parent.get(&cur) {
        steps.push(why.clone());
        cur = prev.clone();
    }
    steps.reverse();
    steps
}
