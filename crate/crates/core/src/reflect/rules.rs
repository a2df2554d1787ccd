use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Serialize, Serializer};

use super::Mode;
use crate::hierarchy::{Hierarchy, ParamSpec, RetSpec, Signature, Slot, TypeOrUnknown};
use crate::ir::{
    post_dominating_cast, ArrayIndex, Introspect, MethodId, Operand, Program, RetType, SiteId, StmtKind, Ty, TypeId, TypeLits,
    VarId,
};
use crate::pta::{AbstractObject, CallKind, FieldKey, MethodMeta, Node, ObjId, ReflectionHook, Solver, StrValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    C12ForName,
    C12GetMtd,
    C12New,
    C12InvType,
    C12InvSig,
    C3ForName,
    C3GetMtd,
    C3InvRecv,
    C3InvRet,
    TInv,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::C12ForName => "C12-ForName",
            Rule::C12GetMtd => "C12-GetMtd",
            Rule::C12New => "C12-New",
            Rule::C12InvType => "C12-InvType",
            Rule::C12InvSig => "C12-InvSig",
            Rule::C3ForName => "C3-ForName",
            Rule::C3GetMtd => "C3-GetMtd",
            Rule::C3InvRecv => "C3-InvRecv",
            Rule::C3InvRet => "C3-InvRet",
            Rule::TInv => "T-Inv",
        }
    }
}

impl Serialize for Rule {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Class metaobject named by a string object: a declared constant name
/// gives `c^t`, a non-constant string gives `c^u`, anything else nothing.
pub fn to_class(p: &Program, obj: &AbstractObject) -> Option<TypeOrUnknown> {
    match obj {
        AbstractObject::Str { value: StrValue::Constant(name), .. } => p.type_named(name).map(TypeOrUnknown::Known),
        AbstractObject::Str { value: StrValue::UnknownNonNull, .. } => Some(TypeOrUnknown::Unknown),
        _ => None,
    }
}

fn lit_params(lits: &TypeLits) -> ParamSpec {
    match lits {
        TypeLits::Unknown => ParamSpec::Unknown,
        TypeLits::Exact(tys) => ParamSpec::Slots(tys.iter().map(|&t| Slot::Exact(t)).collect()),
    }
}

/// Signatures a `getMethod` call may denote for a class metaobject and a
/// name string. Type literals, when present, always pin the parameters.
pub fn to_mtd_sig(
    p: &Program,
    h: &Hierarchy,
    class: TypeOrUnknown,
    name: &StrValue,
    lits: &TypeLits,
    kind: Introspect,
) -> Vec<Signature> {
    match (class, name) {
        (TypeOrUnknown::Known(t), StrValue::Constant(n)) => {
            let sigs: BTreeSet<Signature> = h
                .scope_methods(p, t, kind)
                .into_iter()
                .filter(|&m| {
                    let mm = p.method(m);
                    mm.name == *n
                        && match lits {
                            TypeLits::Unknown => true,
                            TypeLits::Exact(ts) => *ts == mm.param_types,
                        }
                })
                .map(|m| Signature::of(p, m))
                .collect();
            sigs.into_iter().collect()
        }
        (TypeOrUnknown::Unknown, StrValue::Constant(n)) => {
            vec![Signature { ret: RetSpec::Unknown, name: Some(n.clone()), params: lit_params(lits) }]
        }
        (_, StrValue::UnknownNonNull) => {
            vec![Signature { ret: RetSpec::Unknown, name: None, params: lit_params(lits) }]
        }
    }
}

/// Parameter-type tuples inferred from the argument array of an invoke
/// site. Empty means nothing can be inferred; `null` arguments give the
/// single empty tuple.
///
/// Inference requires the array variable to be defined only by local
/// `newarray` statements and written only through constant-index stores;
/// any other use (copies, calls, `[*]` stores) could hide elements.
pub fn to_para_tys(p: &Program, site: SiteId) -> Vec<Vec<Slot>> {
    let Some(loc) = p.site(site) else { return Vec::new() };
    let Some(StmtKind::Invoke { args, .. }) = p.stmt(site).map(|s| &s.kind) else { return Vec::new() };
    let a = match args {
        Operand::Null => return vec![Vec::new()],
        Operand::Var(a) => *a,
    };
    let m = p.method(loc.method);
    if m.params.contains(&a) || m.this_var == Some(a) {
        return Vec::new();
    }
    let mut allocated = false;
    let mut slots: BTreeMap<u32, BTreeSet<Ty>> = BTreeMap::new();
    for s in m.body.statements() {
        if s.site == site {
            continue;
        }
        match &s.kind {
            StmtKind::ArrayAlloc { lhs, .. } if *lhs == a => allocated = true,
            StmtKind::ArrayStore { base, index, rhs } if *base == a => match index {
                ArrayIndex::At(i) => {
                    slots.entry(*i).or_default().insert(p.var(*rhs).ty);
                }
                ArrayIndex::Any => return Vec::new(),
            },
            k => {
                if k.def() == Some(a) || uses(k, a) {
                    return Vec::new();
                }
            }
        }
    }
    if !allocated {
        return Vec::new();
    }
    let n = slots.keys().next_back().map_or(0, |&i| i + 1);
    let mut tuple = Vec::with_capacity(n as usize);
    for i in 0..n {
        match slots.remove(&i) {
            Some(ds) => tuple.push(Slot::Compatible(ds)),
            None => return Vec::new(),
        }
    }
    vec![tuple]
}

fn uses(k: &StmtKind, v: VarId) -> bool {
    match k {
        StmtKind::Copy { rhs, .. } | StmtKind::Cast { rhs, .. } => *rhs == v,
        StmtKind::Load { base, .. } | StmtKind::ArrayLoad { base, .. } => *base == v,
        StmtKind::Store { base, rhs, .. } => *base == v || *rhs == v,
        StmtKind::ArrayStore { base, rhs, .. } => *base == v || *rhs == v,
        StmtKind::VirtualCall { recv, args, .. } => *recv == v || args.contains(&v),
        StmtKind::StaticCall { args, .. } => args.contains(&v),
        StmtKind::ForName { name, .. } => *name == v,
        StmtKind::NewInstance { class, .. } | StmtKind::GetMethods { class, .. } => *class == v,
        StmtKind::GetMethod { class, name, .. } => *class == v || *name == v,
        StmtKind::Invoke { method, recv, args, .. } => {
            *method == v || recv.var() == Some(v) || args.var() == Some(v)
        }
        StmtKind::Return { value } => *value == Some(v),
        _ => false,
    }
}

/// Per-site facts the reflection rules need repeatedly.
#[derive(Debug, Default)]
pub(crate) struct SiteCache {
    casts: HashMap<SiteId, TypeId>,
    paras: HashMap<SiteId, Vec<Vec<Slot>>>,
}

impl SiteCache {
    pub(crate) fn cast(&mut self, p: &Program, site: SiteId) -> TypeId {
        *self.casts.entry(site).or_insert_with(|| post_dominating_cast(p, site))
    }

    pub(crate) fn paras(&mut self, p: &Program, site: SiteId) -> &[Vec<Slot>] {
        self.paras.entry(site).or_insert_with(|| to_para_tys(p, site))
    }

    /// Signature refined by argument and cast information at an invoke
    /// site, if that adds anything. Only unknown components are filled.
    pub(crate) fn refine(&mut self, p: &Program, mode: Mode, site: SiteId, sig: &Signature) -> Option<Signature> {
        if mode < Mode::Typeinf {
            return None;
        }
        let mut ns = sig.clone();
        if sig.params == ParamSpec::Unknown {
            if let Some(tuple) = self.paras(p, site).first() {
                ns.params = ParamSpec::Slots(tuple.clone());
            }
        }
        if sig.ret == RetSpec::Unknown {
            let t = self.cast(p, site);
            if t != p.builtins.object {
                ns.ret = RetSpec::CastBound(t);
            }
        }
        (ns != *sig).then_some(ns)
    }
}

/// Reflection rules plugged into the solver.
pub(crate) struct Engine<'p> {
    program: &'p Program,
    hierarchy: &'p Hierarchy,
    mode: Mode,
    exhaustive: bool,
    pub(crate) cache: SiteCache,
    /// Every rule that derived each object, at any site.
    pub(crate) obj_rules: BTreeMap<AbstractObject, BTreeSet<Rule>>,
}

impl<'p> Engine<'p> {
    pub(crate) fn new(program: &'p Program, hierarchy: &'p Hierarchy, mode: Mode, exhaustive: bool) -> Self {
        Engine { program, hierarchy, mode, exhaustive, cache: SiteCache::default(), obj_rules: BTreeMap::new() }
    }

    fn derive(&mut self, s: &mut Solver<'_>, node: Node, obj: AbstractObject, rule: Rule) -> bool {
        self.obj_rules.entry(obj.clone()).or_default().insert(rule);
        s.insert(node, obj)
    }

    fn objects(s: &Solver<'_>, v: VarId) -> Vec<(ObjId, AbstractObject)> {
        s.pts_var(v).into_iter().map(|o| (o, s.object(o).clone())).collect()
    }

    fn caller(&self, site: SiteId) -> MethodId {
        self.program.site(site).expect("site exists").method
    }

    fn for_name(&mut self, s: &mut Solver<'_>, site: SiteId, lhs: VarId, name: VarId) {
        for (_, o) in Self::objects(s, name) {
            let AbstractObject::Str { value, .. } = &o else { continue };
            if *value == StrValue::UnknownNonNull && self.mode < Mode::Typeinf {
                continue;
            }
            match to_class(self.program, &o) {
                Some(c) => {
                    self.derive(s, Node::Var(lhs), AbstractObject::ClassMeta(c), Rule::C12ForName);
                }
                None => {
                    if let StrValue::Constant(n) = value {
                        s.warn(format!("site {site}: Class.forName on undeclared class {n:?}"));
                    }
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn get_method(
        &mut self,
        s: &mut Solver<'_>,
        lhs: VarId,
        class: VarId,
        name_objs: &[StrValue],
        lits: &TypeLits,
        kind: Introspect,
        rule: Rule,
    ) {
        for (_, c) in Self::objects(s, class) {
            let AbstractObject::ClassMeta(cp) = c else { continue };
            for name in name_objs {
                if *name == StrValue::UnknownNonNull && self.mode < Mode::Typeinf && rule != Rule::C3GetMtd {
                    continue;
                }
                for sig in to_mtd_sig(self.program, self.hierarchy, cp, name, lits, kind) {
                    let meta = AbstractObject::MethodMeta(MethodMeta { class: cp, sig, scope: kind });
                    self.derive(s, Node::Var(lhs), meta, rule);
                }
            }
        }
    }

    fn get_methods(&mut self, s: &mut Solver<'_>, site: SiteId, lhs: VarId, class: VarId, kind: Introspect) {
        let classes: Vec<TypeOrUnknown> = Self::objects(s, class)
            .into_iter()
            .filter_map(|(_, o)| match o {
                AbstractObject::ClassMeta(c) => Some(c),
                _ => None,
            })
            .collect();
        if classes.is_empty() {
            return;
        }
        let arr = AbstractObject::Array { site, elem: self.program.builtins.method };
        self.derive(s, Node::Var(lhs), arr.clone(), Rule::C12GetMtd);
        let arr_id = s.intern(arr);
        for c in classes {
            let metas: Vec<MethodMeta> = match c {
                TypeOrUnknown::Known(t) => self
                    .hierarchy
                    .scope_methods(self.program, t, kind)
                    .into_iter()
                    .map(|m| MethodMeta { class: c, sig: Signature::of(self.program, m), scope: kind })
                    .collect(),
                TypeOrUnknown::Unknown if self.mode >= Mode::Typeinf => {
                    vec![MethodMeta { class: c, sig: Signature::unknown(), scope: kind }]
                }
                TypeOrUnknown::Unknown => Vec::new(),
            };
            for m in metas {
                self.derive(s, Node::Field(arr_id, FieldKey::Arr), AbstractObject::MethodMeta(m), Rule::C12GetMtd);
            }
        }
    }

    fn new_instance(&mut self, s: &mut Solver<'_>, site: SiteId, lhs: VarId, class: VarId) {
        let h = self.hierarchy;
        for (_, c) in Self::objects(s, class) {
            let types: Vec<TypeId> = match c {
                AbstractObject::ClassMeta(TypeOrUnknown::Known(t)) => {
                    if h.is_concrete(t) {
                        vec![t]
                    } else {
                        s.warn(format!("site {site}: newInstance on non-instantiable {}", self.program.type_name(t)));
                        Vec::new()
                    }
                }
                AbstractObject::ClassMeta(TypeOrUnknown::Unknown) if self.mode >= Mode::Typeinf => {
                    let bound = self.cache.cast(self.program, site);
                    if bound != h.object() || self.exhaustive {
                        h.concrete_subtypes(bound)
                    } else {
                        Vec::new()
                    }
                }
                _ => Vec::new(),
            };
            for ty in types {
                self.derive(s, Node::Var(lhs), AbstractObject::Heap { site, ty }, Rule::C12New);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn invoke(&mut self, s: &mut Solver<'_>, site: SiteId, lhs: Option<VarId>, method: VarId, recv: Operand, args: Operand) {
        let p = self.program;
        let h = self.hierarchy;
        let metas: Vec<MethodMeta> = Self::objects(s, method)
            .into_iter()
            .filter_map(|(_, o)| match o {
                AbstractObject::MethodMeta(m) => Some(m),
                _ => None,
            })
            .collect();
        let recvs: Vec<(ObjId, Ty)> = match recv {
            Operand::Var(y) => s.pts_var(y).into_iter().map(|o| (o, s.object_ty(o))).collect(),
            Operand::Null => Vec::new(),
        };
        if self.mode >= Mode::Typeinf {
            for m in &metas {
                if m.class == TypeOrUnknown::Unknown {
                    for &(_, ty) in &recvs {
                        if let Ty::Class(t) = ty {
                            let refined = MethodMeta { class: TypeOrUnknown::Known(t), ..m.clone() };
                            self.derive(s, Node::Var(method), AbstractObject::MethodMeta(refined), Rule::C12InvType);
                        }
                    }
                }
                if let Some(sig) = self.cache.refine(p, self.mode, site, &m.sig) {
                    let refined = MethodMeta { sig, ..m.clone() };
                    self.derive(s, Node::Var(method), AbstractObject::MethodMeta(refined), Rule::C12InvSig);
                }
            }
        }
        let arrays: Vec<ObjId> = match args {
            Operand::Var(a) => s
                .pts_var(a)
                .into_iter()
                .filter(|&o| matches!(s.object(o), AbstractObject::Array { .. }))
                .collect(),
            Operand::Null => Vec::new(),
        };
        let caller = self.caller(site);
        for m in &metas {
            let TypeOrUnknown::Known(t) = m.class else { continue };
            if self.cache.refine(p, self.mode, site, &m.sig).is_some() {
                // A refined copy of this metaobject exists; it stands in.
                continue;
            }
            for target in h.mtd_lookup(p, m.class, &m.sig, m.scope) {
                let tm = p.method(target);
                if tm.is_static {
                    s.add_call(site, caller, target, CallKind::Reflective);
                    self.bind(s, target, &arrays, lhs);
                    continue;
                }
                for &(o, ty) in &recvs {
                    let Ty::Class(rt) = ty else { continue };
                    if !h.subtype_of(rt, t) {
                        continue;
                    }
                    let Some(callee) = h.dispatch(p, rt, &tm.name, &tm.param_types) else { continue };
                    s.add_call(site, caller, callee, CallKind::Reflective);
                    if let Some(this) = p.method(callee).this_var {
                        s.insert_id(Node::Var(this), o);
                    }
                    self.bind(s, callee, &arrays, lhs);
                }
            }
        }
    }

    /// Argument-array elements flow into every parameter they are
    /// assignable to; the return slot flows into the invoke result.
    fn bind(&mut self, s: &mut Solver<'_>, callee: MethodId, arrays: &[ObjId], lhs: Option<VarId>) {
        let m = self.program.method(callee);
        for &a in arrays {
            for (&param, &pty) in m.params.iter().zip(&m.param_types) {
                s.add_flow(Node::Field(a, FieldKey::Arr), Node::Var(param), Some(pty));
            }
        }
        if let (Some(r), Some(l)) = (m.ret_var, lhs) {
            s.add_flow(Node::Var(r), Node::Var(l), None);
        }
    }

    /// Reflective sites in reachable methods, in site order.
    fn reachable_sites(&self, s: &Solver<'_>) -> Vec<SiteId> {
        let mut v: Vec<SiteId> = self.program.reflective_sites(s.reachable().iter().copied()).map(|(x, _)| x).collect();
        v.sort();
        v
    }

    /// Case-3 rules over the current fixpoint. Strata run in order and the
    /// first one that adds anything ends the round, so that cheaper
    /// evidence (names, then return values) is propagated before receivers
    /// are synthesized.
    pub(crate) fn phase_b(&mut self, s: &mut Solver<'_>) -> bool {
        let sites = self.reachable_sites(s);
        let p = self.program;
        let h = self.hierarchy;

        // Stratum 1: null names.
        let mut added = false;
        for &site in &sites {
            match p.stmt(site).map(|x| x.kind.clone()) {
                Some(StmtKind::ForName { lhs, name }) if s.var_is_empty(name) => {
                    added |= self.derive(s, Node::Var(lhs), AbstractObject::ClassMeta(TypeOrUnknown::Unknown), Rule::C3ForName);
                }
                Some(StmtKind::GetMethod { lhs, class, name, lits, kind }) if s.var_is_empty(name) => {
                    let before = s.pts_var(lhs).len();
                    self.get_method(s, lhs, class, &[StrValue::UnknownNonNull], &lits, kind, Rule::C3GetMtd);
                    added |= s.pts_var(lhs).len() > before;
                }
                _ => {}
            }
        }
        if added {
            return true;
        }

        // Stratum 2: missing return values of unmodeled targets.
        for &site in &sites {
            let Some(StmtKind::Invoke { lhs: Some(x), method, .. }) = p.stmt(site).map(|x| x.kind.clone()) else {
                continue;
            };
            let mut bounds = BTreeSet::new();
            for (_, o) in Self::objects(s, method) {
                let AbstractObject::MethodMeta(m) = o else { continue };
                let t = match m.sig.ret {
                    RetSpec::Exact(RetType::Value(Ty::Class(t))) | RetSpec::CastBound(t) => t,
                    _ => continue,
                };
                if t == h.object() {
                    continue;
                }
                let unmodeled = h
                    .mtd_lookup(p, m.class, &m.sig, m.scope)
                    .into_iter()
                    .any(|m2| !p.method(m2).body.is_modeled());
                if unmodeled {
                    bounds.insert(t);
                }
            }
            for t in bounds {
                let covered = s.pts_var(x).into_iter().any(|o| h.ty_subtype(s.object_ty(o), Ty::Class(t)));
                if covered {
                    continue;
                }
                for ty in h.concrete_subtypes(t) {
                    added |= self.derive(s, Node::Var(x), AbstractObject::SynthRet { site, ty }, Rule::C3InvRet);
                }
            }
        }
        if added {
            return true;
        }

        // Stratum 3: missing receivers.
        for &site in &sites {
            let Some(StmtKind::Invoke { method, recv: Operand::Var(y), .. }) = p.stmt(site).map(|x| x.kind.clone())
            else {
                continue;
            };
            let recv_types: Vec<Ty> = s.pts_var(y).into_iter().map(|o| s.object_ty(o)).collect();
            let mut wanted = BTreeSet::new();
            for (_, o) in Self::objects(s, method) {
                let AbstractObject::MethodMeta(m) = o else { continue };
                let TypeOrUnknown::Known(t) = m.class else { continue };
                if t == h.object() || self.cache.refine(p, self.mode, site, &m.sig).is_some() {
                    continue;
                }
                let has_instance_target =
                    h.mtd_lookup(p, m.class, &m.sig, m.scope).into_iter().any(|m2| !p.method(m2).is_static);
                if !has_instance_target {
                    continue;
                }
                if recv_types.iter().any(|&rt| h.ty_subtype(rt, Ty::Class(t))) {
                    continue;
                }
                wanted.insert(t);
            }
            for t in wanted {
                for ty in h.concrete_compatible(t) {
                    added |= self.derive(s, Node::Var(y), AbstractObject::SynthRecv { site, ty }, Rule::C3InvRecv);
                }
            }
        }
        added
    }
}

impl ReflectionHook for Engine<'_> {
    fn fire(&mut self, s: &mut Solver<'_>, site: SiteId) {
        let Some(stmt) = self.program.stmt(site) else { return };
        match stmt.kind.clone() {
            StmtKind::ForName { lhs, name } => self.for_name(s, site, lhs, name),
            StmtKind::GetMethod { lhs, class, name, lits, kind } => {
                let names: Vec<StrValue> = Self::objects(s, name)
                    .into_iter()
                    .filter_map(|(_, o)| match o {
                        AbstractObject::Str { value, .. } => Some(value),
                        _ => None,
                    })
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                self.get_method(s, lhs, class, &names, &lits, kind, Rule::C12GetMtd);
            }
            StmtKind::GetMethods { lhs, class, kind } => self.get_methods(s, site, lhs, class, kind),
            StmtKind::NewInstance { lhs, class } => self.new_instance(s, site, lhs, class),
            StmtKind::Invoke { lhs, method, recv, args } => self.invoke(s, site, lhs, method, recv, args),
            _ => {}
        }
    }
}
