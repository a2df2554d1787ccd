//! Inclusion-based, flow- and context-insensitive points-to analysis with
//! on-the-fly call-graph construction.
//!
//! The solver is a difference-propagation worklist over pointer nodes
//! (variables and object field slots). Reflective statements are not
//! interpreted here; instead their sites are handed to a [`ReflectionHook`]
//! whenever one of their operand variables gains objects.

mod object;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use object::{AbstractObject, MethodMeta, ObjectKind, StrValue};

use crate::hierarchy::Hierarchy;
use crate::ir::{MethodId, Program, SiteId, StmtKind, Ty, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ObjId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FieldKey {
    Named(String),
    /// The collapsed element slot of an array object.
    Arr,
}

impl FieldKey {
    pub fn name(&self) -> &str {
        match self {
            FieldKey::Named(s) => s,
            FieldKey::Arr => "arr",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Var(VarId),
    Field(ObjId, FieldKey),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CallKind {
    Static,
    Virtual,
    Reflective,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CallEdge {
    pub site: SiteId,
    pub caller: MethodId,
    pub callee: MethodId,
    pub kind: CallKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PtaError {
    #[error("entry method `{0}` not found (expected a static method with no parameters)")]
    MissingEntry(String),
}

/// Receives reflective sites whose operands changed. Implementations read
/// current points-to sets and add facts through the solver API.
pub trait ReflectionHook {
    fn fire(&mut self, solver: &mut Solver<'_>, site: SiteId);
}

/// Leaves every reflective statement inert.
pub struct NoReflection;

impl ReflectionHook for NoReflection {
    fn fire(&mut self, _: &mut Solver<'_>, _: SiteId) {}
}

type NodeId = usize;

#[derive(Debug, Clone)]
enum Complex {
    Load { field: FieldKey, lhs: NodeId },
    Store { field: FieldKey, rhs: NodeId },
    Call { site: SiteId, caller: MethodId, name: String, params: Vec<Ty>, args: Vec<VarId>, lhs: Option<VarId> },
}

pub struct Solver<'p> {
    program: &'p Program,
    hierarchy: &'p Hierarchy,
    entry: MethodId,
    objects: Vec<AbstractObject>,
    object_ids: HashMap<AbstractObject, ObjId>,
    nodes: Vec<Node>,
    node_ids: HashMap<Node, NodeId>,
    pts: Vec<BTreeSet<ObjId>>,
    delta: Vec<Vec<ObjId>>,
    succs: Vec<Vec<(NodeId, Option<Ty>)>>,
    edge_set: HashSet<(NodeId, NodeId, Option<Ty>)>,
    complex: Vec<Vec<Complex>>,
    watchers: Vec<Vec<SiteId>>,
    worklist: VecDeque<NodeId>,
    queued: Vec<bool>,
    fire_queue: VecDeque<SiteId>,
    fire_queued: HashSet<SiteId>,
    reachable: BTreeSet<MethodId>,
    calls: BTreeSet<CallEdge>,
    call_keys: HashSet<(SiteId, MethodId)>,
    warnings: BTreeSet<String>,
    insertions: u64,
    rng: Option<ChaCha8Rng>,
}

impl<'p> Solver<'p> {
    pub fn new(program: &'p Program, hierarchy: &'p Hierarchy, entry: &str) -> Result<Self, PtaError> {
        let entry_id = program.entry(entry).ok_or_else(|| PtaError::MissingEntry(entry.to_string()))?;
        let mut s = Solver {
            program,
            hierarchy,
            entry: entry_id,
            objects: Vec::new(),
            object_ids: HashMap::new(),
            nodes: Vec::new(),
            node_ids: HashMap::new(),
            pts: Vec::new(),
            delta: Vec::new(),
            succs: Vec::new(),
            edge_set: HashSet::new(),
            complex: Vec::new(),
            watchers: Vec::new(),
            worklist: VecDeque::new(),
            queued: Vec::new(),
            fire_queue: VecDeque::new(),
            fire_queued: HashSet::new(),
            reachable: BTreeSet::new(),
            calls: BTreeSet::new(),
            call_keys: HashSet::new(),
            warnings: BTreeSet::new(),
            insertions: 0,
            rng: None,
        };
        s.make_reachable(entry_id);
        Ok(s)
    }

    /// Processes the worklist in a seeded-random order. The fixpoint does
    /// not depend on the order; this exists to test exactly that.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng = Some(ChaCha8Rng::seed_from_u64(seed));
        self
    }

    pub fn program(&self) -> &'p Program {
        self.program
    }

    pub fn hierarchy(&self) -> &'p Hierarchy {
        self.hierarchy
    }

    pub fn entry(&self) -> MethodId {
        self.entry
    }

    // -- objects and nodes -------------------------------------------------

    pub fn intern(&mut self, obj: AbstractObject) -> ObjId {
        if let Some(&id) = self.object_ids.get(&obj) {
            return id;
        }
        let id = ObjId(self.objects.len() as u32);
        self.objects.push(obj.clone());
        self.object_ids.insert(obj, id);
        id
    }

    pub fn object(&self, id: ObjId) -> &AbstractObject {
        &self.objects[id.0 as usize]
    }

    pub fn object_ty(&self, id: ObjId) -> Ty {
        self.object(id).ty(&self.program.builtins)
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    fn node(&mut self, n: Node) -> NodeId {
        if let Some(&id) = self.node_ids.get(&n) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(n.clone());
        self.node_ids.insert(n, id);
        self.pts.push(BTreeSet::new());
        self.delta.push(Vec::new());
        self.succs.push(Vec::new());
        self.complex.push(Vec::new());
        self.watchers.push(Vec::new());
        self.queued.push(false);
        id
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Whether `field` exists on `obj`: declared fields on instances (up
    /// the superclass chain), `arr` on arrays only.
    pub fn field_valid(&self, obj: ObjId, field: &FieldKey) -> bool {
        let o = self.object(obj);
        match (o, field) {
            (AbstractObject::Array { .. }, FieldKey::Arr) => true,
            (_, FieldKey::Named(f)) => match o.instance_class() {
                Some(t) => {
                    let mut cur = Some(t);
                    while let Some(c) = cur {
                        let cm = self.program.class(c);
                        if cm.fields.iter().any(|d| d.name == *f) {
                            return true;
                        }
                        cur = cm.superclass;
                    }
                    false
                }
                None => false,
            },
            _ => false,
        }
    }

    pub fn pts(&self, n: &Node) -> impl Iterator<Item = ObjId> + '_ {
        self.node_ids.get(n).into_iter().flat_map(move |&id| self.pts[id].iter().copied())
    }

    pub fn pts_var(&self, v: VarId) -> Vec<ObjId> {
        self.pts(&Node::Var(v)).collect()
    }

    pub fn pts_objects(&self, v: VarId) -> Vec<&AbstractObject> {
        self.pts(&Node::Var(v)).map(|o| self.object(o)).collect()
    }

    pub fn var_is_empty(&self, v: VarId) -> bool {
        self.pts(&Node::Var(v)).next().is_none()
    }

    fn insert_ids(&mut self, n: NodeId, objs: impl IntoIterator<Item = ObjId>) -> bool {
        let mut changed = false;
        for o in objs {
            if self.pts[n].insert(o) {
                self.insertions += 1;
                self.delta[n].push(o);
                changed = true;
            }
        }
        if changed && !self.queued[n] {
            self.queued[n] = true;
            self.worklist.push_back(n);
        }
        changed
    }

    pub fn insert(&mut self, n: Node, obj: AbstractObject) -> bool {
        let o = self.intern(obj);
        let id = self.node(n);
        self.insert_ids(id, [o])
    }

    pub fn insert_var(&mut self, v: VarId, obj: AbstractObject) -> bool {
        self.insert(Node::Var(v), obj)
    }

    pub fn insert_id(&mut self, n: Node, o: ObjId) -> bool {
        let id = self.node(n);
        self.insert_ids(id, [o])
    }

    fn passes(&self, o: ObjId, filter: Option<Ty>) -> bool {
        match filter {
            None => true,
            Some(t) => self.hierarchy.ty_subtype(self.object_ty(o), t),
        }
    }

    /// Adds `pts(from) ⊆ pts(to)`, optionally restricted to objects whose
    /// type is a subtype of `filter`.
    pub fn add_flow(&mut self, from: Node, to: Node, filter: Option<Ty>) -> bool {
        let (f, t) = (self.node(from), self.node(to));
        self.add_edge(f, t, filter)
    }

    fn add_edge(&mut self, f: NodeId, t: NodeId, filter: Option<Ty>) -> bool {
        if f == t && filter.is_none() {
            return false;
        }
        if !self.edge_set.insert((f, t, filter)) {
            return false;
        }
        self.succs[f].push((t, filter));
        let current: Vec<ObjId> = self.pts[f].iter().copied().filter(|&o| self.passes(o, filter)).collect();
        self.insert_ids(t, current);
        true
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.insert(msg.into());
    }

    pub fn warnings(&self) -> &BTreeSet<String> {
        &self.warnings
    }

    // -- calls and reachability ------------------------------------------

    pub fn reachable(&self) -> &BTreeSet<MethodId> {
        &self.reachable
    }

    pub fn calls(&self) -> &BTreeSet<CallEdge> {
        &self.calls
    }

    /// Records a call edge and makes the callee reachable. Returns whether
    /// the edge is new.
    pub fn add_call(&mut self, site: SiteId, caller: MethodId, callee: MethodId, kind: CallKind) -> bool {
        if !self.call_keys.insert((site, callee)) {
            return false;
        }
        self.calls.insert(CallEdge { site, caller, callee, kind });
        self.make_reachable(callee);
        true
    }

    /// Argument and return bindings of a resolved call. `args` flow into
    /// the callee's parameters positionally.
    pub fn bind_call(&mut self, callee: MethodId, args: &[VarId], lhs: Option<VarId>) {
        let m = self.program.method(callee);
        let (params, ret) = (m.params.clone(), m.ret_var);
        for (&a, &p) in args.iter().zip(&params) {
            self.add_flow(Node::Var(a), Node::Var(p), None);
        }
        if let (Some(r), Some(l)) = (ret, lhs) {
            self.add_flow(Node::Var(r), Node::Var(l), None);
        }
    }

    fn make_reachable(&mut self, m: MethodId) {
        if !self.reachable.insert(m) {
            return;
        }
        let p = self.program;
        let mm = p.method(m);
        for s in mm.body.statements() {
            let site = s.site;
            match &s.kind {
                StmtKind::Alloc { lhs, ty } => {
                    self.insert_var(*lhs, AbstractObject::Heap { site, ty: *ty });
                }
                StmtKind::ArrayAlloc { lhs, elem } => {
                    self.insert_var(*lhs, AbstractObject::Array { site, elem: *elem });
                }
                StmtKind::StringConst { lhs, value } => {
                    self.insert_var(*lhs, AbstractObject::Str { value: StrValue::Constant(value.clone()), site });
                }
                StmtKind::UnknownString { lhs } => {
                    self.insert_var(*lhs, AbstractObject::Str { value: StrValue::UnknownNonNull, site });
                }
                StmtKind::NullAssign { .. } => {}
                StmtKind::Copy { lhs, rhs } => {
                    self.add_flow(Node::Var(*rhs), Node::Var(*lhs), None);
                }
                StmtKind::Cast { lhs, ty, rhs } => {
                    self.add_flow(Node::Var(*rhs), Node::Var(*lhs), Some(*ty));
                }
                StmtKind::Load { lhs, base, field } => {
                    let l = self.node(Node::Var(*lhs));
                    self.add_complex(*base, Complex::Load { field: FieldKey::Named(field.clone()), lhs: l });
                }
                StmtKind::Store { base, field, rhs } => {
                    let r = self.node(Node::Var(*rhs));
                    self.add_complex(*base, Complex::Store { field: FieldKey::Named(field.clone()), rhs: r });
                }
                StmtKind::ArrayLoad { lhs, base } => {
                    let l = self.node(Node::Var(*lhs));
                    self.add_complex(*base, Complex::Load { field: FieldKey::Arr, lhs: l });
                }
                StmtKind::ArrayStore { base, rhs, .. } => {
                    let r = self.node(Node::Var(*rhs));
                    self.add_complex(*base, Complex::Store { field: FieldKey::Arr, rhs: r });
                }
                StmtKind::VirtualCall { lhs, recv, name, param_types, args } => {
                    self.add_complex(
                        *recv,
                        Complex::Call {
                            site,
                            caller: m,
                            name: name.clone(),
                            params: param_types.clone(),
                            args: args.clone(),
                            lhs: *lhs,
                        },
                    );
                }
                StmtKind::StaticCall { lhs, callee, args } => {
                    self.add_call(site, m, *callee, CallKind::Static);
                    self.bind_call(*callee, args, *lhs);
                }
                StmtKind::Return { value: Some(v) } => {
                    if let Some(r) = mm.ret_var {
                        self.add_flow(Node::Var(*v), Node::Var(r), None);
                    }
                }
                StmtKind::ForName { name, .. } => self.watch(site, &[*name]),
                StmtKind::NewInstance { class, .. } => self.watch(site, &[*class]),
                StmtKind::GetMethod { class, name, .. } => self.watch(site, &[*class, *name]),
                StmtKind::GetMethods { class, .. } => self.watch(site, &[*class]),
                StmtKind::Invoke { method, recv, args, .. } => {
                    let vars: Vec<VarId> = [Some(*method), recv.var(), args.var()].into_iter().flatten().collect();
                    self.watch(site, &vars);
                }
                StmtKind::Return { value: None }
                | StmtKind::Branch { .. }
                | StmtKind::Goto { .. }
                | StmtKind::Label { .. } => {}
            }
        }
    }

    fn add_complex(&mut self, base: VarId, c: Complex) {
        let b = self.node(Node::Var(base));
        let existing: Vec<ObjId> = self.pts[b].iter().copied().collect();
        for o in existing {
            self.apply_complex(&c, o);
        }
        self.complex[b].push(c);
    }

    fn watch(&mut self, site: SiteId, vars: &[VarId]) {
        for &v in vars {
            let n = self.node(Node::Var(v));
            self.watchers[n].push(site);
        }
        self.schedule(site);
    }

    fn schedule(&mut self, site: SiteId) {
        if self.fire_queued.insert(site) {
            self.fire_queue.push_back(site);
        }
    }

    fn apply_complex(&mut self, c: &Complex, o: ObjId) {
        match c {
            Complex::Load { field, lhs } => {
                if self.field_valid(o, field) {
                    let f = self.node(Node::Field(o, field.clone()));
                    self.add_edge(f, *lhs, None);
                } else {
                    let msg = format!("load of `{}` from {} dropped", field.name(), self.object(o).label(self.program));
                    self.warn(msg);
                }
            }
            Complex::Store { field, rhs } => {
                if self.field_valid(o, field) {
                    let f = self.node(Node::Field(o, field.clone()));
                    self.add_edge(*rhs, f, None);
                } else {
                    let msg = format!("store to `{}` of {} dropped", field.name(), self.object(o).label(self.program));
                    self.warn(msg);
                }
            }
            Complex::Call { site, caller, name, params, args, lhs } => {
                let target = self
                    .object(o)
                    .instance_class()
                    .and_then(|t| self.hierarchy.dispatch(self.program, t, name, params));
                match target {
                    Some(callee) => {
                        self.add_call(*site, *caller, callee, CallKind::Virtual);
                        if let Some(this) = self.program.method(callee).this_var {
                            self.insert_id(Node::Var(this), o);
                        }
                        self.bind_call(callee, args, *lhs);
                    }
                    None => {
                        let msg = format!(
                            "site {site}: no target for `{name}` on {}",
                            self.object(o).label(self.program)
                        );
                        self.warn(msg);
                    }
                }
            }
        }
    }

    // -- solving ------------------------------------------------------------

    /// Performs one unit of work: a pending reflective site or one node's
    /// delta. Returns false once at fixpoint.
    pub fn step(&mut self, hook: &mut dyn ReflectionHook) -> bool {
        if let Some(site) = self.fire_queue.pop_front() {
            self.fire_queued.remove(&site);
            hook.fire(self, site);
            return true;
        }
        let next = match &mut self.rng {
            Some(rng) if !self.worklist.is_empty() => {
                let i = rng.gen_range(0..self.worklist.len());
                self.worklist.swap_remove_back(i)
            }
            _ => self.worklist.pop_front(),
        };
        let Some(n) = next else { return false };
        self.queued[n] = false;
        let delta = std::mem::take(&mut self.delta[n]);
        if delta.is_empty() {
            return true;
        }
        for i in 0..self.succs[n].len() {
            let (t, filter) = self.succs[n][i];
            let pass: Vec<ObjId> = delta.iter().copied().filter(|&o| self.passes(o, filter)).collect();
            self.insert_ids(t, pass);
        }
        let mut i = 0;
        while i < self.complex[n].len() {
            let c = self.complex[n][i].clone();
            for &o in &delta {
                self.apply_complex(&c, o);
            }
            i += 1;
        }
        for i in 0..self.watchers[n].len() {
            let site = self.watchers[n][i];
            self.schedule(site);
        }
        true
    }

    pub fn solve(&mut self, hook: &mut dyn ReflectionHook) {
        while self.step(hook) {}
    }

    /// Total set insertions so far.
    pub fn insertions(&self) -> u64 {
        self.insertions
    }

    /// Upper bound on insertions: every object in every node.
    pub fn insertion_bound(&self) -> u64 {
        self.objects.len() as u64 * self.nodes.len() as u64
    }

    /// Freezes the current state with objects renumbered in their natural
    /// order, so graphs from different worklist orders compare equal.
    pub fn freeze(&self) -> PointsToGraph {
        let mut order: Vec<usize> = (0..self.objects.len()).collect();
        order.sort_by(|&a, &b| self.objects[a].cmp(&self.objects[b]));
        let mut remap = vec![ObjId(0); self.objects.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = ObjId(new as u32);
        }
        let objects: Vec<AbstractObject> = order.iter().map(|&i| self.objects[i].clone()).collect();
        let mut var_pts = BTreeMap::new();
        let mut field_pts = BTreeMap::new();
        for (id, n) in self.nodes.iter().enumerate() {
            if self.pts[id].is_empty() {
                continue;
            }
            let set: BTreeSet<ObjId> = self.pts[id].iter().map(|o| remap[o.0 as usize]).collect();
            match n {
                Node::Var(v) => {
                    var_pts.insert(*v, set);
                }
                Node::Field(o, f) => {
                    field_pts.insert((remap[o.0 as usize], f.clone()), set);
                }
            }
        }
        PointsToGraph { objects, var_pts, field_pts }
    }
}

/// Frozen points-to result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointsToGraph {
    pub objects: Vec<AbstractObject>,
    pub var_pts: BTreeMap<VarId, BTreeSet<ObjId>>,
    pub field_pts: BTreeMap<(ObjId, FieldKey), BTreeSet<ObjId>>,
}

impl PointsToGraph {
    pub fn object(&self, id: ObjId) -> &AbstractObject {
        &self.objects[id.0 as usize]
    }

    pub fn var(&self, v: VarId) -> impl Iterator<Item = &AbstractObject> {
        self.var_pts.get(&v).into_iter().flatten().map(|&o| self.object(o))
    }

    pub fn var_set(&self, v: VarId) -> BTreeSet<AbstractObject> {
        self.var(v).cloned().collect()
    }

    pub fn field(&self, o: ObjId, f: &FieldKey) -> impl Iterator<Item = &AbstractObject> {
        self.field_pts.get(&(o, f.clone())).into_iter().flatten().map(|&o| self.object(o))
    }

    pub fn is_empty(&self) -> bool {
        self.var_pts.is_empty() && self.field_pts.is_empty()
    }

    /// `var → objects` with objects spelled out; independent of numbering.
    pub fn var_objects(&self) -> BTreeMap<VarId, BTreeSet<AbstractObject>> {
        self.var_pts.keys().map(|&v| (v, self.var_set(v))).collect()
    }
}

/// Solves a program without any reflection handling.
pub fn analyze_plain(p: &Program, h: &Hierarchy, entry: &str) -> Result<(PointsToGraph, BTreeSet<CallEdge>), PtaError> {
    let mut s = Solver::new(p, h, entry)?;
    s.solve(&mut NoReflection);
    Ok((s.freeze(), s.calls().clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;

    fn run(src: &str) -> (Program, Hierarchy) {
        let p = parse_program(src).unwrap();
        let h = Hierarchy::new(&p);
        (p, h)
    }

    fn var(p: &Program, m: &str, name: &str) -> VarId {
        let mid = p.methods_named(m)[0];
        VarId(p.vars.iter().position(|v| v.method == mid && v.name == name).unwrap() as u32)
    }

    const CALLS: &str = r#"
class B {
  field f : java.lang.Object
  method m(x: java.lang.Object) : java.lang.Object {
    return x
  }
}
class A extends B {
  method m(x: java.lang.Object) : java.lang.Object {
    var y : java.lang.Object
    y = this.f
    return y
  }
}
class Main {
  method static main() : void {
    var a : B
    var o : java.lang.Object
    var r : java.lang.Object
    var arr : java.lang.Object[]
    var e : java.lang.Object
    a = new A
    o = new Main
    a.f = o
    r = a.m(o)
    arr = newarray java.lang.Object
    arr[*] = o
    arr[*] = a
    e = arr[*]
    e = a.missing
  }
}
"#;

    #[test]
    fn basic_rules() {
        let (p, h) = run(CALLS);
        let mut s = Solver::new(&p, &h, "Main.main").unwrap();
        s.solve(&mut NoReflection);
        let g = s.freeze();
        let r: Vec<String> = g.var(var(&p, "Main.main", "r")).map(|o| o.label(&p)).collect();
        assert_eq!(r, vec!["new Main@5"]);
        let this = p.method(p.methods_named("A.m")[0]).this_var.unwrap();
        assert_eq!(g.var(this).count(), 1);
        let e: Vec<String> = g.var(var(&p, "Main.main", "e")).map(|o| o.label(&p)).collect();
        assert_eq!(e, vec!["new A@4", "new Main@5"]);
        assert_eq!(s.calls().len(), 1);
        assert!(s.warnings().iter().any(|w| w.contains("missing")));
        assert!(s.insertions() <= s.insertion_bound());
    }

    #[test]
    fn empty_entry_gives_empty_graph() {
        let (p, h) = run("class Main {\n method static main() : void {\n }\n}");
        let (g, calls) = analyze_plain(&p, &h, "Main.main").unwrap();
        assert!(g.is_empty() && calls.is_empty());
    }

    #[test]
    fn missing_entry() {
        let (p, h) = run("class Main {\n method main() : void {\n }\n}");
        assert!(matches!(Solver::new(&p, &h, "Main.main"), Err(PtaError::MissingEntry(_))));
    }

    #[test]
    fn casts_filter() {
        let src = r#"
class B {}
class C {}
class Main {
  method static main() : void {
    var o : java.lang.Object
    var b : B
    o = new B
    o = new C
    b = (B) o
  }
}
"#;
        let (p, h) = run(src);
        let (g, _) = analyze_plain(&p, &h, "Main.main").unwrap();
        assert_eq!(g.var(var(&p, "Main.main", "b")).count(), 1);
    }

    #[test]
    fn seeded_orders_agree_and_snapshots_are_monotone() {
        let (p, h) = run(CALLS);
        let base = analyze_plain(&p, &h, "Main.main").unwrap().0;
        for seed in 0..8 {
            let mut s = Solver::new(&p, &h, "Main.main").unwrap().with_seed(seed);
            let mut snaps = Vec::new();
            while s.step(&mut NoReflection) {
                snaps.push(s.freeze().var_objects());
            }
            let fin = s.freeze();
            assert_eq!(fin, base);
            let fin_objs = fin.var_objects();
            for snap in snaps {
                for (v, set) in snap {
                    assert!(set.is_subset(&fin_objs[&v]));
                }
            }
        }
    }
}
