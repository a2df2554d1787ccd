//! Bounded concrete interpreter with real reflection semantics, used as
//! ground truth for the static analysis.
//!
//! Every `if *` forks; exploration is depth-first over cloned states until
//! the fuel runs out. Paths that die on a failed cast are dropped entirely:
//! the static side filters at casts too, so an object that only exists on
//! such a path is not a fact the analysis promises to find.

pub mod generate;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::hierarchy::{Hierarchy, TypeOrUnknown};
use crate::ir::{ArrayIndex, Body, MethodId, Operand, Program, SiteId, StmtKind, Ty, TypeId, TypeLits, VarId};
use crate::pta::{AbstractObject, FieldKey};
use crate::reflect::Analysis;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("entry method `{0}` not found")]
    MissingEntry(String),
    #[error("program uses `unknownstring`; the oracle only runs fully concrete programs")]
    UnknownString,
    #[error("environment method `{0}` not found")]
    MissingEnvMethod(String),
}

/// A class or method metaobject seen at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DynMeta {
    Class(TypeId),
    Method(MethodId),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DynTrace {
    /// Class instances created, by `new` or `newInstance`.
    pub allocations: BTreeSet<(SiteId, TypeId)>,
    /// Calls made, including reflective and unmodeled callees.
    pub calls: BTreeSet<(SiteId, MethodId)>,
    /// Reflective targets per site, named like static site reports.
    pub reflective: BTreeMap<SiteId, BTreeSet<String>>,
    /// Metaobjects produced at forName/getMethod sites.
    pub metaobjects: BTreeMap<SiteId, BTreeSet<DynMeta>>,
    pub paths: usize,
    pub discarded_paths: usize,
    /// Every path ran to completion within the fuel.
    pub exhausted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Val {
    Null,
    Ref(usize),
}

#[derive(Debug, Clone)]
enum HObj {
    Obj { ty: TypeId, fields: BTreeMap<String, Val> },
    Arr { items: Vec<Val> },
    Str(String),
    Class(TypeId),
    Method(MethodId),
}

#[derive(Debug, Clone)]
struct Frame {
    method: MethodId,
    pc: usize,
    locals: HashMap<VarId, Val>,
    ret_to: Option<VarId>,
}

#[derive(Debug, Clone, Default)]
struct Facts {
    allocations: BTreeSet<(SiteId, TypeId)>,
    calls: BTreeSet<(SiteId, MethodId)>,
    reflective: BTreeMap<SiteId, BTreeSet<String>>,
    metaobjects: BTreeMap<SiteId, BTreeSet<DynMeta>>,
}

#[derive(Debug, Clone)]
struct State {
    heap: Vec<HObj>,
    frames: Vec<Frame>,
    facts: Facts,
}

enum End {
    Finished,
    /// Runtime error other than a failed cast (null dereference, missing
    /// method, bad arguments): the path stops, its facts stand.
    Stuck,
    CastFailed,
}

enum Step {
    Next,
    Fork(Vec<State>),
    End(End),
}

pub struct Oracle<'p> {
    program: &'p Program,
    hierarchy: &'p Hierarchy,
    fuel: u64,
    max_depth: usize,
    env_method: Option<MethodId>,
    env: BTreeMap<String, Vec<String>>,
}

impl<'p> Oracle<'p> {
    pub fn new(program: &'p Program, hierarchy: &'p Hierarchy) -> Self {
        Oracle { program, hierarchy, fuel: 200_000, max_depth: 32, env_method: None, env: BTreeMap::new() }
    }

    /// Total statement budget over all paths.
    pub fn with_fuel(mut self, fuel: u64) -> Self {
        self.fuel = fuel;
        self
    }

    /// Makes calls to the unmodeled method `method` (one string parameter)
    /// return, on separate paths, each value listed for the argument.
    /// This models data the static analysis cannot see.
    pub fn with_env(mut self, method: &str, env: BTreeMap<String, Vec<String>>) -> Result<Self, OracleError> {
        let m = *self.program.methods_named(method).first().ok_or_else(|| OracleError::MissingEnvMethod(method.into()))?;
        self.env_method = Some(m);
        self.env = env;
        Ok(self)
    }

    pub fn run(&self, entry: &str) -> Result<DynTrace, OracleError> {
        let p = self.program;
        if p.has_unknown_strings() {
            return Err(OracleError::UnknownString);
        }
        let entry = p.entry(entry).ok_or_else(|| OracleError::MissingEntry(entry.into()))?;
        let start = State {
            heap: Vec::new(),
            frames: vec![Frame { method: entry, pc: 0, locals: HashMap::new(), ret_to: None }],
            facts: Facts::default(),
        };
        let mut trace = DynTrace { exhausted: true, ..DynTrace::default() };
        let mut stack = vec![start];
        let mut fuel = self.fuel;
        'paths: while let Some(mut st) = stack.pop() {
            let end = loop {
                if fuel == 0 {
                    trace.exhausted = false;
                    merge(&mut trace, st.facts);
                    break 'paths;
                }
                fuel -= 1;
                match self.step(&mut st) {
                    Step::Next => {}
                    Step::Fork(mut alts) => {
                        st = alts.remove(0);
                        stack.extend(alts.into_iter().rev());
                    }
                    Step::End(e) => break e,
                }
            };
            trace.paths += 1;
            match end {
                End::CastFailed => trace.discarded_paths += 1,
                End::Finished | End::Stuck => merge(&mut trace, st.facts),
            }
        }
        Ok(trace)
    }

    fn ty_of(&self, st: &State, v: Val) -> Option<Ty> {
        let b = &self.program.builtins;
        let Val::Ref(i) = v else { return None };
        Some(match &st.heap[i] {
            HObj::Obj { ty, .. } => Ty::Class(*ty),
            // Element types are not tracked; arrays only ever flow to
            // `Object[]` slots in checked positions.
            HObj::Arr { .. } => Ty::Array(b.object),
            HObj::Str(_) => Ty::Class(b.string),
            HObj::Class(_) => Ty::Class(b.class),
            HObj::Method(_) => Ty::Class(b.method),
        })
    }

    fn alloc(st: &mut State, o: HObj) -> Val {
        st.heap.push(o);
        Val::Ref(st.heap.len() - 1)
    }

    fn get(st: &State, v: VarId) -> Val {
        st.frames.last().and_then(|f| f.locals.get(&v).copied()).unwrap_or(Val::Null)
    }

    fn set(st: &mut State, v: VarId, val: Val) {
        if let Some(f) = st.frames.last_mut() {
            f.locals.insert(v, val);
        }
    }

    /// Pushes a frame for `callee`, or for a body-less callee returns at
    /// once (with environment values where configured).
    fn call(&self, st: &mut State, site: SiteId, callee: MethodId, this: Option<Val>, args: Vec<Val>, lhs: Option<VarId>) -> Step {
        let p = self.program;
        st.facts.calls.insert((site, callee));
        let m = p.method(callee);
        if !matches!(m.body, Body::Statements(_)) {
            if Some(callee) == self.env_method {
                let key = match args.first() {
                    Some(Val::Ref(i)) => match &st.heap[*i] {
                        HObj::Str(s) => Some(s.clone()),
                        _ => None,
                    },
                    _ => None,
                };
                let values = key.and_then(|k| self.env.get(&k)).cloned().unwrap_or_default();
                if let (Some(l), false) = (lhs, values.is_empty()) {
                    let forks = values
                        .into_iter()
                        .map(|s| {
                            let mut alt = st.clone();
                            let v = Self::alloc(&mut alt, HObj::Str(s));
                            Self::set(&mut alt, l, v);
                            alt
                        })
                        .collect();
                    return Step::Fork(forks);
                }
            }
            if let Some(l) = lhs {
                Self::set(st, l, Val::Null);
            }
            return Step::Next;
        }
        if st.frames.len() >= self.max_depth {
            return Step::End(End::Stuck);
        }
        let mut locals = HashMap::new();
        if let (Some(t), Some(v)) = (m.this_var, this) {
            locals.insert(t, v);
        }
        for (&param, v) in m.params.iter().zip(args) {
            locals.insert(param, v);
        }
        st.frames.push(Frame { method: callee, pc: 0, locals, ret_to: lhs });
        Step::Next
    }

    fn ret(st: &mut State, val: Val) -> Step {
        let f = st.frames.pop().expect("frame");
        if st.frames.is_empty() {
            return Step::End(End::Finished);
        }
        if let Some(l) = f.ret_to {
            Self::set(st, l, val);
        }
        Step::Next
    }

    fn step(&self, st: &mut State) -> Step {
        let p = self.program;
        let h = self.hierarchy;
        let (method, pc) = {
            let f = st.frames.last().expect("frame");
            (f.method, f.pc)
        };
        let body = p.method(method).body.statements();
        let Some(stmt) = body.get(pc) else { return Self::ret(st, Val::Null) };
        let site = stmt.site;
        st.frames.last_mut().expect("frame").pc += 1;
        let stuck = Step::End(End::Stuck);
        match &stmt.kind {
            StmtKind::Alloc { lhs, ty } => {
                st.facts.allocations.insert((site, *ty));
                let v = Self::alloc(st, HObj::Obj { ty: *ty, fields: BTreeMap::new() });
                Self::set(st, *lhs, v);
            }
            StmtKind::ArrayAlloc { lhs, .. } => {
                let v = Self::alloc(st, HObj::Arr { items: Vec::new() });
                Self::set(st, *lhs, v);
            }
            StmtKind::Copy { lhs, rhs } => {
                let v = Self::get(st, *rhs);
                Self::set(st, *lhs, v);
            }
            StmtKind::Cast { lhs, ty, rhs } => {
                let v = Self::get(st, *rhs);
                if let Some(t) = self.ty_of(st, v) {
                    if !h.ty_subtype(t, *ty) {
                        return Step::End(End::CastFailed);
                    }
                }
                Self::set(st, *lhs, v);
            }
            StmtKind::Load { lhs, base, field } => {
                let Val::Ref(i) = Self::get(st, *base) else { return stuck };
                let HObj::Obj { fields, .. } = &st.heap[i] else { return stuck };
                let v = fields.get(field).copied().unwrap_or(Val::Null);
                Self::set(st, *lhs, v);
            }
            StmtKind::Store { base, field, rhs } => {
                let v = Self::get(st, *rhs);
                let Val::Ref(i) = Self::get(st, *base) else { return stuck };
                let HObj::Obj { fields, .. } = &mut st.heap[i] else { return stuck };
                fields.insert(field.clone(), v);
            }
            StmtKind::ArrayLoad { lhs, base } => {
                let Val::Ref(i) = Self::get(st, *base) else { return stuck };
                let HObj::Arr { items } = &st.heap[i] else { return stuck };
                let items = items.clone();
                if items.is_empty() {
                    return stuck;
                }
                let lhs = *lhs;
                return Step::Fork(
                    items
                        .into_iter()
                        .map(|v| {
                            let mut alt = st.clone();
                            Self::set(&mut alt, lhs, v);
                            alt
                        })
                        .collect(),
                );
            }
            StmtKind::ArrayStore { base, index, rhs } => {
                let v = Self::get(st, *rhs);
                let Val::Ref(i) = Self::get(st, *base) else { return stuck };
                let HObj::Arr { items } = &mut st.heap[i] else { return stuck };
                match index {
                    ArrayIndex::Any => items.push(v),
                    ArrayIndex::At(k) => {
                        let k = *k as usize;
                        if items.len() <= k {
                            items.resize(k + 1, Val::Null);
                        }
                        items[k] = v;
                    }
                }
            }
            StmtKind::StringConst { lhs, value } => {
                let v = Self::alloc(st, HObj::Str(value.clone()));
                Self::set(st, *lhs, v);
            }
            StmtKind::UnknownString { .. } => return stuck,
            StmtKind::NullAssign { lhs } => Self::set(st, *lhs, Val::Null),
            StmtKind::VirtualCall { lhs, recv, name, param_types, args } => {
                let r = Self::get(st, *recv);
                let Some(Ty::Class(rt)) = self.ty_of(st, r) else { return stuck };
                let Some(callee) = h.dispatch(p, rt, name, param_types) else { return stuck };
                let args = args.iter().map(|&a| Self::get(st, a)).collect();
                return self.call(st, site, callee, Some(r), args, *lhs);
            }
            StmtKind::StaticCall { lhs, callee, args } => {
                let args = args.iter().map(|&a| Self::get(st, a)).collect();
                return self.call(st, site, *callee, None, args, *lhs);
            }
            StmtKind::ForName { lhs, name } => {
                let Val::Ref(i) = Self::get(st, *name) else { return stuck };
                let HObj::Str(s) = &st.heap[i] else { return stuck };
                let Some(t) = p.type_named(s) else { return stuck };
                st.facts.reflective.entry(site).or_default().insert(p.type_name(t).to_string());
                st.facts.metaobjects.entry(site).or_default().insert(DynMeta::Class(t));
                let v = Self::alloc(st, HObj::Class(t));
                Self::set(st, *lhs, v);
            }
            StmtKind::NewInstance { lhs, class } => {
                let Val::Ref(i) = Self::get(st, *class) else { return stuck };
                let HObj::Class(t) = st.heap[i] else { return stuck };
                if !h.is_concrete(t) {
                    return stuck;
                }
                st.facts.allocations.insert((site, t));
                st.facts.reflective.entry(site).or_default().insert(p.type_name(t).to_string());
                let v = Self::alloc(st, HObj::Obj { ty: t, fields: BTreeMap::new() });
                Self::set(st, *lhs, v);
            }
            StmtKind::GetMethod { lhs, class, name, lits, kind } => {
                let Val::Ref(ci) = Self::get(st, *class) else { return stuck };
                let HObj::Class(t) = st.heap[ci] else { return stuck };
                let Val::Ref(ni) = Self::get(st, *name) else { return stuck };
                let HObj::Str(n) = &st.heap[ni] else { return stuck };
                let found: Vec<MethodId> = h
                    .scope_methods(p, t, *kind)
                    .into_iter()
                    .filter(|&m| {
                        let mm = p.method(m);
                        mm.name == *n
                            && match lits {
                                TypeLits::Unknown => true,
                                TypeLits::Exact(ts) => *ts == mm.param_types,
                            }
                    })
                    .collect();
                if found.is_empty() {
                    return stuck;
                }
                // Unknown parameter types stand for whichever overload the
                // real call named: explore each.
                let lhs = *lhs;
                let forks = found
                    .into_iter()
                    .map(|m| {
                        let mut alt = st.clone();
                        alt.facts.reflective.entry(site).or_default().insert(p.method_sig(m));
                        alt.facts.metaobjects.entry(site).or_default().insert(DynMeta::Method(m));
                        let v = Self::alloc(&mut alt, HObj::Method(m));
                        Self::set(&mut alt, lhs, v);
                        alt
                    })
                    .collect();
                return Step::Fork(forks);
            }
            StmtKind::GetMethods { lhs, class, kind } => {
                let Val::Ref(ci) = Self::get(st, *class) else { return stuck };
                let HObj::Class(t) = st.heap[ci] else { return stuck };
                let mut items = Vec::new();
                for m in h.scope_methods(p, t, *kind) {
                    st.facts.reflective.entry(site).or_default().insert(p.method_sig(m));
                    st.facts.metaobjects.entry(site).or_default().insert(DynMeta::Method(m));
                    items.push(Self::alloc(st, HObj::Method(m)));
                }
                let v = Self::alloc(st, HObj::Arr { items });
                Self::set(st, *lhs, v);
            }
            StmtKind::Invoke { lhs, method, recv, args } => {
                let Val::Ref(mi) = Self::get(st, *method) else { return stuck };
                let HObj::Method(m) = st.heap[mi] else { return stuck };
                let args: Vec<Val> = match args {
                    Operand::Null => Vec::new(),
                    Operand::Var(a) => {
                        let Val::Ref(ai) = Self::get(st, *a) else { return stuck };
                        let HObj::Arr { items } = &st.heap[ai] else { return stuck };
                        items.clone()
                    }
                };
                let mm = p.method(m);
                if args.len() != mm.arity() {
                    return stuck;
                }
                for (&a, &pt) in args.iter().zip(&mm.param_types) {
                    if let Some(t) = self.ty_of(st, a) {
                        if !h.ty_subtype(t, pt) {
                            return stuck;
                        }
                    }
                }
                let (callee, this) = if mm.is_static {
                    (m, None)
                } else {
                    let r = match recv {
                        Operand::Var(y) => Self::get(st, *y),
                        Operand::Null => Val::Null,
                    };
                    let Some(Ty::Class(rt)) = self.ty_of(st, r) else { return stuck };
                    if !h.subtype_of(rt, mm.owner) {
                        return stuck;
                    }
                    let Some(c) = h.dispatch(p, rt, &mm.name, &mm.param_types) else { return stuck };
                    (c, Some(r))
                };
                st.facts.reflective.entry(site).or_default().insert(p.method_sig(callee));
                return self.call(st, site, callee, this, args, *lhs);
            }
            StmtKind::Branch { target } => {
                let Some(to) = label_index(body, target) else { return stuck };
                let mut alt = st.clone();
                alt.frames.last_mut().expect("frame").pc = to;
                return Step::Fork(vec![st.clone(), alt]);
            }
            StmtKind::Goto { target } => {
                let Some(to) = label_index(body, target) else { return stuck };
                st.frames.last_mut().expect("frame").pc = to;
            }
            StmtKind::Label { .. } => {}
            StmtKind::Return { value } => {
                let v = value.map_or(Val::Null, |v| Self::get(st, v));
                return Self::ret(st, v);
            }
        }
        Step::Next
    }
}

fn label_index(body: &[crate::ir::Stmt], name: &str) -> Option<usize> {
    body.iter().position(|s| matches!(&s.kind, StmtKind::Label { name: n } if n == name))
}

fn merge(t: &mut DynTrace, f: Facts) {
    t.allocations.extend(f.allocations);
    t.calls.extend(f.calls);
    for (s, v) in f.reflective {
        t.reflective.entry(s).or_default().extend(v);
    }
    for (s, v) in f.metaobjects {
        t.metaobjects.entry(s).or_default().extend(v);
    }
}

/// Interprets `entry` with the given statement budget.
pub fn interpret(p: &Program, h: &Hierarchy, entry: &str, fuel: u64) -> Result<DynTrace, OracleError> {
    Oracle::new(p, h).with_fuel(fuel).run(entry)
}

impl DynTrace {
    /// Observed facts the static result does not cover, described in text.
    /// Allocations must appear as heap objects of the allocating site in
    /// its target variable, calls as edges, and metaobjects must be
    /// denoted by some abstract metaobject at the site.
    pub fn violations(&self, a: &Analysis<'_>) -> Vec<String> {
        let p = a.program;
        let h = a.hierarchy;
        let mut out = Vec::new();
        for &(site, ty) in &self.allocations {
            let lhs = p.stmt(site).and_then(|s| s.kind.def());
            let covered = lhs.is_some_and(|l| a.pta.var(l).any(|o| *o == AbstractObject::Heap { site, ty }));
            if !covered {
                out.push(format!("allocation of {} at site {site} missing", p.type_name(ty)));
            }
        }
        let static_calls: BTreeSet<(SiteId, MethodId)> = a.calls.iter().map(|e| (e.site, e.callee)).collect();
        for &(site, m) in &self.calls {
            if !static_calls.contains(&(site, m)) {
                out.push(format!("call to {} at site {site} missing", p.method_sig(m)));
            }
        }
        for (&site, metas) in &self.metaobjects {
            let abstract_objs = site_metaobjects(a, site);
            for &d in metas {
                let covered = abstract_objs.iter().any(|o| match (o, d) {
                    (AbstractObject::ClassMeta(TypeOrUnknown::Known(t)), DynMeta::Class(u)) => *t == u,
                    (AbstractObject::ClassMeta(TypeOrUnknown::Unknown), DynMeta::Class(_)) => true,
                    (AbstractObject::MethodMeta(mm), DynMeta::Method(m)) => match mm.class {
                        TypeOrUnknown::Known(_) => h.mtd_lookup(p, mm.class, &mm.sig, mm.scope).contains(&m),
                        TypeOrUnknown::Unknown => h.matches(p, m, &mm.sig),
                    },
                    _ => false,
                });
                if !covered {
                    let what = match d {
                        DynMeta::Class(t) => format!("class {}", p.type_name(t)),
                        DynMeta::Method(m) => format!("method {}", p.method_sig(m)),
                    };
                    out.push(format!("metaobject {what} at site {site} not denoted"));
                }
            }
        }
        out
    }
}

/// Abstract metaobjects a reflective site produced: its result variable,
/// or for `getMethods` the element slot of its array.
fn site_metaobjects(a: &Analysis<'_>, site: SiteId) -> Vec<AbstractObject> {
    let Some(stmt) = a.program.stmt(site) else { return Vec::new() };
    match &stmt.kind {
        StmtKind::GetMethods { lhs, .. } => {
            let mut out = Vec::new();
            for &o in a.pta.var_pts.get(lhs).into_iter().flatten() {
                if matches!(a.pta.object(o), AbstractObject::Array { site: s, .. } if *s == site) {
                    out.extend(a.pta.field(o, &FieldKey::Arr).cloned());
                }
            }
            out
        }
        k => k.def().map(|l| a.pta.var(l).cloned().collect()).unwrap_or_default(),
    }
}
