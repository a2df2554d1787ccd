//! Subtyping, the `≲` compatibility relation, virtual dispatch and
//! metaobject-to-method lookup.

use std::collections::{BTreeSet, HashSet};

use serde::Serialize;

use crate::ir::{Introspect, MethodId, Program, RetType, Ty, TypeId, Visibility};

/// A class type or the distinguished unknown type `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum TypeOrUnknown {
    Known(TypeId),
    Unknown,
}

impl TypeOrUnknown {
    pub fn known(self) -> Option<TypeId> {
        match self {
            TypeOrUnknown::Known(t) => Some(t),
            TypeOrUnknown::Unknown => None,
        }
    }
}

/// Return-type component of a signature.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RetSpec {
    Unknown,
    Exact(RetType),
    /// Any return type `r` with `r ≲ T`, inferred from a cast to `T`.
    CastBound(TypeId),
}

/// One parameter slot of a signature.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    /// Exactly this type (from a type-literal list or a declared method).
    Exact(Ty),
    /// Any type that is a sub- or supertype of one of these declared types.
    Compatible(BTreeSet<Ty>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamSpec {
    Unknown,
    Slots(Vec<Slot>),
}

/// Method signature whose components may each be unknown.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature {
    pub ret: RetSpec,
    pub name: Option<String>,
    pub params: ParamSpec,
}

impl Signature {
    /// The fully unknown signature `(u)`.
    pub fn unknown() -> Self {
        Signature { ret: RetSpec::Unknown, name: None, params: ParamSpec::Unknown }
    }

    pub fn named(name: &str) -> Self {
        Signature { name: Some(name.to_string()), ..Self::unknown() }
    }

    /// The exact signature of a declared method.
    pub fn of(p: &Program, m: MethodId) -> Self {
        let mm = p.method(m);
        Signature {
            ret: RetSpec::Exact(mm.ret),
            name: Some(mm.name.clone()),
            params: ParamSpec::Slots(mm.param_types.iter().map(|&t| Slot::Exact(t)).collect()),
        }
    }

    pub fn is_unknown(&self) -> bool {
        *self == Self::unknown()
    }

    pub fn render(&self, p: &Program) -> String {
        let ret = match &self.ret {
            RetSpec::Unknown => "u".to_string(),
            RetSpec::Exact(r) => p.ret_name(*r),
            RetSpec::CastBound(t) => format!("≲{}", p.type_name(*t)),
        };
        let name = self.name.clone().unwrap_or_else(|| "u".to_string());
        let params = match &self.params {
            ParamSpec::Unknown => "u".to_string(),
            ParamSpec::Slots(slots) => {
                let parts: Vec<String> = slots
                    .iter()
                    .map(|s| match s {
                        Slot::Exact(t) => p.ty_name(*t),
                        Slot::Compatible(ds) => {
                            let names: Vec<String> = ds.iter().map(|t| p.ty_name(*t)).collect();
                            format!("≲{{{}}}", names.join("|"))
                        }
                    })
                    .collect();
                format!("({})", parts.join(","))
            }
        };
        format!("{ret} {name}{params}")
    }
}

/// Precomputed subtype closure over all declared types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hierarchy {
    n: usize,
    sub: Vec<bool>,
    object: TypeId,
    concrete: Vec<bool>,
    /// Supertypes in lookup order: the class itself, its superclass chain,
    /// then interfaces breadth-first.
    lookup_order: Vec<Vec<TypeId>>,
}

impl Hierarchy {
    pub fn new(p: &Program) -> Self {
        let n = p.classes.len();
        let mut sub = vec![false; n * n];
        let mut lookup_order = Vec::with_capacity(n);
        for c in &p.classes {
            let mut order = Vec::new();
            let mut seen = HashSet::new();
            let mut cur = Some(c.id);
            while let Some(t) = cur {
                if !seen.insert(t) {
                    break;
                }
                order.push(t);
                cur = p.class(t).superclass;
            }
            let mut i = 0;
            while i < order.len() {
                for &itf in &p.class(order[i]).interfaces {
                    if seen.insert(itf) {
                        order.push(itf);
                    }
                }
                i += 1;
            }
            if seen.insert(p.builtins.object) {
                order.push(p.builtins.object);
            }
            for &s in &order {
                sub[c.id.0 as usize * n + s.0 as usize] = true;
            }
            lookup_order.push(order);
        }
        let b = p.builtins;
        let concrete = p
            .classes
            .iter()
            .map(|c| !c.is_interface && c.id != b.class && c.id != b.method)
            .collect();
        Hierarchy { n, sub, object: b.object, concrete, lookup_order }
    }

    pub fn object(&self) -> TypeId {
        self.object
    }

    pub fn subtype_of(&self, a: TypeId, b: TypeId) -> bool {
        self.sub[a.0 as usize * self.n + b.0 as usize]
    }

    /// Subtyping lifted to array types: arrays are covariant and every
    /// array is an `Object`.
    pub fn ty_subtype(&self, a: Ty, b: Ty) -> bool {
        match (a, b) {
            (Ty::Class(x), Ty::Class(y)) | (Ty::Array(x), Ty::Array(y)) => self.subtype_of(x, y),
            (Ty::Array(_), Ty::Class(y)) => y == self.object,
            (Ty::Class(_), Ty::Array(_)) => false,
        }
    }

    pub fn ty_related(&self, a: Ty, b: Ty) -> bool {
        self.ty_subtype(a, b) || self.ty_subtype(b, a)
    }

    /// `t' ≲ t`: for `t = Object` only `u` is compatible; otherwise a known
    /// `t'` is compatible when it is a sub- or supertype of `t`.
    pub fn compatible(&self, t_prime: TypeOrUnknown, t: TypeId) -> bool {
        match t_prime {
            TypeOrUnknown::Unknown => t == self.object,
            TypeOrUnknown::Known(tp) => t != self.object && (self.subtype_of(tp, t) || self.subtype_of(t, tp)),
        }
    }

    pub fn is_concrete(&self, t: TypeId) -> bool {
        self.concrete[t.0 as usize]
    }

    /// All types `t' <: t`, including `t`, in id order.
    pub fn subtypes(&self, t: TypeId) -> impl Iterator<Item = TypeId> + '_ {
        (0..self.n as u32).map(TypeId).filter(move |&s| self.subtype_of(s, t))
    }

    /// Concrete classes that are subtypes of `t`.
    pub fn concrete_subtypes(&self, t: TypeId) -> Vec<TypeId> {
        self.subtypes(t).filter(|&s| self.is_concrete(s)).collect()
    }

    /// Concrete classes `t'` with `t' ≲ t`, excluding `Object` itself.
    pub fn concrete_compatible(&self, t: TypeId) -> Vec<TypeId> {
        (0..self.n as u32)
            .map(TypeId)
            .filter(|&s| s != self.object && self.is_concrete(s) && self.compatible(TypeOrUnknown::Known(s), t))
            .collect()
    }

    /// Virtual dispatch: the first instance method along the superclass
    /// chain with this name and parameter tuple.
    pub fn dispatch(&self, p: &Program, recv: TypeId, name: &str, params: &[Ty]) -> Option<MethodId> {
        let mut cur = Some(recv);
        while let Some(t) = cur {
            let c = p.class(t);
            if let Some(&m) = c.methods.iter().find(|&&m| {
                let mm = p.method(m);
                !mm.is_static && mm.name == name && mm.param_types == params
            }) {
                return Some(m);
            }
            cur = c.superclass;
        }
        None
    }

    /// Candidate methods for an introspection call on class `t`: public
    /// declared-and-inherited (most derived first) or declared-only.
    pub fn scope_methods(&self, p: &Program, t: TypeId, kind: Introspect) -> Vec<MethodId> {
        if kind.declared_only() {
            return p.class(t).methods.clone();
        }
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for &s in &self.lookup_order[t.0 as usize] {
            for &m in &p.class(s).methods {
                let mm = p.method(m);
                if mm.visibility == Visibility::Public && seen.insert((mm.name.as_str(), &mm.param_types)) {
                    out.push(m);
                }
            }
        }
        out
    }

    pub fn matches(&self, p: &Program, m: MethodId, sig: &Signature) -> bool {
        let mm = p.method(m);
        if sig.name.as_ref().is_some_and(|n| *n != mm.name) {
            return false;
        }
        let ret_ok = match &sig.ret {
            RetSpec::Unknown => true,
            RetSpec::Exact(r) => *r == mm.ret,
            RetSpec::CastBound(t) => match mm.ret {
                RetType::Void => true,
                RetType::Value(Ty::Class(r)) => self.compatible(TypeOrUnknown::Known(r), *t),
                RetType::Value(Ty::Array(_)) => false,
            },
        };
        if !ret_ok {
            return false;
        }
        match &sig.params {
            ParamSpec::Unknown => true,
            ParamSpec::Slots(slots) => {
                slots.len() == mm.param_types.len()
                    && slots.iter().zip(&mm.param_types).all(|(s, &pt)| match s {
                        Slot::Exact(t) => *t == pt,
                        Slot::Compatible(ds) => ds.iter().any(|&d| self.ty_related(pt, d)),
                    })
            }
        }
    }

    /// Methods a metaobject `m^t_s` may denote. An unknown class part yields
    /// nothing: lookup never scans the whole program.
    pub fn mtd_lookup(&self, p: &Program, class: TypeOrUnknown, sig: &Signature, kind: Introspect) -> Vec<MethodId> {
        let Some(t) = class.known() else { return Vec::new() };
        self.scope_methods(p, t, kind).into_iter().filter(|&m| self.matches(p, m, sig)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;

    const SRC: &str = r#"
interface I {}
class B {
  method m() : void unmodeled
  method k(x: java.lang.String) : B unmodeled
  method nonpublic hidden() : void unmodeled
}
class A extends B implements I {
  method m() : void unmodeled
  method static s() : java.lang.String unmodeled
}
class C {}
"#;

    fn setup() -> (Program, Hierarchy) {
        let p = parse_program(SRC).unwrap();
        let h = Hierarchy::new(&p);
        (p, h)
    }

    fn t(p: &Program, n: &str) -> TypeId {
        p.type_named(n).unwrap()
    }

    #[test]
    fn subtyping_basics() {
        let (p, h) = setup();
        let (a, b, i, o) = (t(&p, "A"), t(&p, "B"), t(&p, "I"), p.builtins.object);
        assert!(h.subtype_of(a, a) && h.subtype_of(a, b) && !h.subtype_of(b, a));
        assert!(h.subtype_of(a, i) && h.subtype_of(i, o));
        for c in &p.classes {
            assert!(h.subtype_of(c.id, o));
        }
        assert!(h.ty_subtype(Ty::Array(a), Ty::Array(b)));
        assert!(h.ty_subtype(Ty::Array(a), Ty::Class(o)));
        assert!(!h.ty_subtype(Ty::Array(a), Ty::Class(b)));
    }

    #[test]
    fn compatibility_relation() {
        let (p, h) = setup();
        let (a, b, c, o) = (t(&p, "A"), t(&p, "B"), t(&p, "C"), p.builtins.object);
        assert!(h.compatible(TypeOrUnknown::Unknown, o));
        assert!(!h.compatible(TypeOrUnknown::Known(a), o));
        assert!(h.compatible(TypeOrUnknown::Known(a), b) && h.compatible(TypeOrUnknown::Known(b), a));
        assert!(!h.compatible(TypeOrUnknown::Known(c), b));
        assert!(!h.compatible(TypeOrUnknown::Unknown, b));
    }

    #[test]
    fn concrete_sets() {
        let (p, h) = setup();
        let (a, b, i) = (t(&p, "A"), t(&p, "B"), t(&p, "I"));
        assert_eq!(h.concrete_subtypes(b), vec![b, a]);
        assert_eq!(h.concrete_subtypes(i), vec![a]);
        assert!(!h.is_concrete(p.builtins.class));
        assert_eq!(h.concrete_compatible(a), vec![b, a]);
    }

    #[test]
    fn dispatch_walks_superclasses() {
        let (p, h) = setup();
        let (a, b) = (t(&p, "A"), t(&p, "B"));
        let am = p.methods_named("A.m")[0];
        let bm = p.methods_named("B.m")[0];
        let bk = p.methods_named("B.k")[0];
        assert_eq!(h.dispatch(&p, a, "m", &[]), Some(am));
        assert_eq!(h.dispatch(&p, b, "m", &[]), Some(bm));
        assert_eq!(h.dispatch(&p, a, "k", &[Ty::Class(p.builtins.string)]), Some(bk));
        assert_eq!(h.dispatch(&p, a, "s", &[]), None);
    }

    #[test]
    fn lookup_scopes() {
        let (p, h) = setup();
        let a = TypeOrUnknown::Known(t(&p, "A"));
        let b = TypeOrUnknown::Known(t(&p, "B"));
        let all = Signature::unknown();
        let public: Vec<String> =
            h.mtd_lookup(&p, a, &all, Introspect::GetMethod).iter().map(|&m| p.method_sig(m)).collect();
        assert_eq!(public, vec!["A.m()", "A.s()", "B.k(java.lang.String)"]);
        assert_eq!(h.mtd_lookup(&p, a, &all, Introspect::GetDeclaredMethod).len(), 2);
        assert_eq!(h.mtd_lookup(&p, b, &all, Introspect::GetDeclaredMethod).len(), 3);
        assert!(h.mtd_lookup(&p, TypeOrUnknown::Unknown, &all, Introspect::GetMethod).is_empty());
        assert!(h.mtd_lookup(&p, a, &Signature::named("zzz"), Introspect::GetMethod).is_empty());
    }

    #[test]
    fn lookup_return_and_param_matching() {
        let (p, h) = setup();
        let a = TypeOrUnknown::Known(t(&p, "A"));
        let s = Ty::Class(p.builtins.string);
        let exact = Signature { params: ParamSpec::Slots(vec![Slot::Exact(s)]), ..Signature::unknown() };
        assert_eq!(h.mtd_lookup(&p, a, &exact, Introspect::GetMethod).len(), 1);
        let compat = Signature {
            params: ParamSpec::Slots(vec![Slot::Compatible(BTreeSet::from([Ty::Class(p.builtins.object)]))]),
            ..Signature::unknown()
        };
        assert_eq!(h.mtd_lookup(&p, a, &compat, Introspect::GetMethod).len(), 1);
        let by_ret = Signature { ret: RetSpec::CastBound(t(&p, "A")), ..Signature::unknown() };
        // k returns B (a supertype of A); m is void; s returns String (unrelated).
        let got: Vec<String> =
            h.mtd_lookup(&p, a, &by_ret, Introspect::GetMethod).iter().map(|&m| p.method_sig(m)).collect();
        assert_eq!(got, vec!["A.m()", "B.k(java.lang.String)"]);
    }

    #[test]
    fn rebuild_is_identical() {
        let (p, h) = setup();
        assert_eq!(h, Hierarchy::new(&p));
    }
}
