//! Reference points-to analysis for reflection-free programs: applies every
//! rule to every statement of every reachable method until nothing changes.
//! No worklist, no deltas, no node graph. Shares only the program model and
//! the hierarchy's subtype and dispatch queries with the real solver.

use std::collections::{BTreeMap, BTreeSet};

use refract_core::hierarchy::Hierarchy;
use refract_core::ir::{MethodId, Program, StmtKind, Ty, TypeId, VarId};
use refract_core::pta::{AbstractObject, StrValue};

type Set = BTreeSet<AbstractObject>;

#[derive(Default)]
pub struct Naive {
    pub vars: BTreeMap<VarId, Set>,
    pub fields: BTreeMap<(AbstractObject, String), Set>,
    pub reachable: BTreeSet<MethodId>,
    pub calls: BTreeSet<(u32, MethodId)>,
}

const ARR: &str = "[]";

fn ty_of(p: &Program, o: &AbstractObject) -> Ty {
    match o {
        AbstractObject::Heap { ty, .. } => Ty::Class(*ty),
        AbstractObject::Array { elem, .. } => Ty::Array(*elem),
        AbstractObject::Str { .. } => Ty::Class(p.builtins.string),
        other => panic!("unexpected object in reflection-free run: {other:?}"),
    }
}

fn class_of(o: &AbstractObject) -> Option<TypeId> {
    match o {
        AbstractObject::Heap { ty, .. } => Some(*ty),
        _ => None,
    }
}

fn has_field(p: &Program, o: &AbstractObject, f: &str) -> bool {
    if f == ARR {
        return matches!(o, AbstractObject::Array { .. });
    }
    let mut cur = class_of(o);
    while let Some(t) = cur {
        if p.class(t).fields.iter().any(|d| d.name == f) {
            return true;
        }
        cur = p.class(t).superclass;
    }
    false
}

fn add(into: &mut BTreeMap<VarId, Set>, v: VarId, objs: impl IntoIterator<Item = AbstractObject>) -> bool {
    let s = into.entry(v).or_default();
    let before = s.len();
    s.extend(objs);
    s.len() != before
}

impl Naive {
    fn get(&self, v: VarId) -> Set {
        self.vars.get(&v).cloned().unwrap_or_default()
    }

    fn flow(&mut self, from: VarId, to: VarId) -> bool {
        let s = self.get(from);
        add(&mut self.vars, to, s)
    }

    fn bind(&mut self, p: &Program, callee: MethodId, args: &[VarId], lhs: Option<VarId>) -> bool {
        let m = p.method(callee);
        let mut changed = false;
        for (&a, &f) in args.iter().zip(&m.params) {
            changed |= self.flow(a, f);
        }
        if let (Some(r), Some(l)) = (m.ret_var, lhs) {
            changed |= self.flow(r, l);
        }
        changed
    }

    fn round(&mut self, p: &Program, h: &Hierarchy) -> bool {
        let mut changed = false;
        for m in self.reachable.clone() {
            let mm = p.method(m);
            for s in mm.body.statements() {
                let site = s.site;
                changed |= match &s.kind {
                    StmtKind::Alloc { lhs, ty } => add(&mut self.vars, *lhs, [AbstractObject::Heap { site, ty: *ty }]),
                    StmtKind::ArrayAlloc { lhs, elem } => {
                        add(&mut self.vars, *lhs, [AbstractObject::Array { site, elem: *elem }])
                    }
                    StmtKind::StringConst { lhs, value } => add(
                        &mut self.vars,
                        *lhs,
                        [AbstractObject::Str { value: StrValue::Constant(value.clone()), site }],
                    ),
                    StmtKind::UnknownString { lhs } => {
                        add(&mut self.vars, *lhs, [AbstractObject::Str { value: StrValue::UnknownNonNull, site }])
                    }
                    StmtKind::Copy { lhs, rhs } => self.flow(*rhs, *lhs),
                    StmtKind::Cast { lhs, ty, rhs } => {
                        let kept: Vec<_> = self.get(*rhs).into_iter().filter(|o| h.ty_subtype(ty_of(p, o), *ty)).collect();
                        add(&mut self.vars, *lhs, kept)
                    }
                    StmtKind::Load { lhs, base, field } => self.load(p, *lhs, *base, field),
                    StmtKind::ArrayLoad { lhs, base } => self.load(p, *lhs, *base, ARR),
                    StmtKind::Store { base, field, rhs } => self.store(p, *base, field, *rhs),
                    StmtKind::ArrayStore { base, rhs, .. } => self.store(p, *base, ARR, *rhs),
                    StmtKind::StaticCall { lhs, callee, args } => {
                        let mut c = self.calls.insert((site.0, *callee));
                        c |= self.reachable.insert(*callee);
                        c | self.bind(p, *callee, args, *lhs)
                    }
                    StmtKind::VirtualCall { lhs, recv, name, param_types, args } => {
                        let mut c = false;
                        for o in self.get(*recv) {
                            let Some(callee) = class_of(&o).and_then(|t| h.dispatch(p, t, name, param_types)) else {
                                continue;
                            };
                            c |= self.calls.insert((site.0, callee));
                            c |= self.reachable.insert(callee);
                            if let Some(this) = p.method(callee).this_var {
                                c |= add(&mut self.vars, this, [o.clone()]);
                            }
                            c |= self.bind(p, callee, args, *lhs);
                        }
                        c
                    }
                    StmtKind::Return { value: Some(v) } => match mm.ret_var {
                        Some(r) => self.flow(*v, r),
                        None => false,
                    },
                    StmtKind::ForName { .. }
                    | StmtKind::NewInstance { .. }
                    | StmtKind::GetMethod { .. }
                    | StmtKind::GetMethods { .. }
                    | StmtKind::Invoke { .. } => panic!("reflective statement in a reflection-free program"),
                    _ => false,
                };
            }
        }
        changed
    }

    fn load(&mut self, p: &Program, lhs: VarId, base: VarId, f: &str) -> bool {
        let mut objs = Set::new();
        for o in self.get(base).into_iter().filter(|o| has_field(p, o, f)) {
            objs.extend(self.fields.get(&(o, f.to_string())).into_iter().flatten().cloned());
        }
        add(&mut self.vars, lhs, objs)
    }

    fn store(&mut self, p: &Program, base: VarId, f: &str, rhs: VarId) -> bool {
        let val = self.get(rhs);
        let mut changed = false;
        for o in self.get(base).into_iter().filter(|o| has_field(p, o, f)) {
            let slot = self.fields.entry((o, f.to_string())).or_default();
            let before = slot.len();
            slot.extend(val.iter().cloned());
            changed |= slot.len() != before;
        }
        changed
    }
}

pub fn solve(p: &Program, h: &Hierarchy, entry: &str) -> Naive {
    let mut n = Naive::default();
    n.reachable.insert(p.entry(entry).expect("entry"));
    while n.round(p, h) {}
    n.vars.retain(|_, s| !s.is_empty());
    n
}
