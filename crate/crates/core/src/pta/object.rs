use serde::Serialize;

use crate::hierarchy::{Signature, TypeOrUnknown};
use crate::ir::{Builtins, Introspect, Program, SiteId, Ty, TypeId};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrValue {
    Constant(String),
    UnknownNonNull,
}

/// Method metaobject `m^t_s`. `scope` remembers which introspection call
/// minted it, since declared-only and public lookups differ.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MethodMeta {
    pub class: TypeOrUnknown,
    pub sig: Signature,
    pub scope: Introspect,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AbstractObject {
    Heap { site: SiteId, ty: TypeId },
    Array { site: SiteId, elem: TypeId },
    Str { value: StrValue, site: SiteId },
    ClassMeta(TypeOrUnknown),
    MethodMeta(MethodMeta),
    /// Receiver synthesized at an invoke site whose receiver set was empty.
    SynthRecv { site: SiteId, ty: TypeId },
    /// Return value synthesized at an invoke site targeting unmodeled code.
    SynthRet { site: SiteId, ty: TypeId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectKind {
    Heap,
    Array,
    String,
    ClassMeta,
    MethodMeta,
    SynthRecv,
    SynthRet,
}

impl AbstractObject {
    pub fn kind(&self) -> ObjectKind {
        match self {
            AbstractObject::Heap { .. } => ObjectKind::Heap,
            AbstractObject::Array { .. } => ObjectKind::Array,
            AbstractObject::Str { .. } => ObjectKind::String,
            AbstractObject::ClassMeta(_) => ObjectKind::ClassMeta,
            AbstractObject::MethodMeta(_) => ObjectKind::MethodMeta,
            AbstractObject::SynthRecv { .. } => ObjectKind::SynthRecv,
            AbstractObject::SynthRet { .. } => ObjectKind::SynthRet,
        }
    }

    /// Runtime type of the object.
    pub fn ty(&self, b: &Builtins) -> Ty {
        match self {
            AbstractObject::Heap { ty, .. }
            | AbstractObject::SynthRecv { ty, .. }
            | AbstractObject::SynthRet { ty, .. } => Ty::Class(*ty),
            AbstractObject::Array { elem, .. } => Ty::Array(*elem),
            AbstractObject::Str { .. } => Ty::Class(b.string),
            AbstractObject::ClassMeta(_) => Ty::Class(b.class),
            AbstractObject::MethodMeta(_) => Ty::Class(b.method),
        }
    }

    /// Class type of an ordinary (non-array) object that can carry fields
    /// and receive calls.
    pub fn instance_class(&self) -> Option<TypeId> {
        match self {
            AbstractObject::Heap { ty, .. }
            | AbstractObject::SynthRecv { ty, .. }
            | AbstractObject::SynthRet { ty, .. } => Some(*ty),
            _ => None,
        }
    }

    pub fn site(&self) -> Option<SiteId> {
        match self {
            AbstractObject::Heap { site, .. }
            | AbstractObject::Array { site, .. }
            | AbstractObject::Str { site, .. }
            | AbstractObject::SynthRecv { site, .. }
            | AbstractObject::SynthRet { site, .. } => Some(*site),
            AbstractObject::ClassMeta(_) | AbstractObject::MethodMeta(_) => None,
        }
    }

    pub fn label(&self, p: &Program) -> String {
        let class = |c: &TypeOrUnknown| match c {
            TypeOrUnknown::Known(t) => p.type_name(*t).to_string(),
            TypeOrUnknown::Unknown => "u".to_string(),
        };
        match self {
            AbstractObject::Heap { site, ty } => format!("new {}@{site}", p.type_name(*ty)),
            AbstractObject::Array { site, elem } => format!("newarray {}@{site}", p.type_name(*elem)),
            AbstractObject::Str { value: StrValue::Constant(s), site } => format!("{s:?}@{site}"),
            AbstractObject::Str { value: StrValue::UnknownNonNull, site } => format!("unknownstring@{site}"),
            AbstractObject::ClassMeta(c) => format!("class {}", class(c)),
            AbstractObject::MethodMeta(m) => {
                let scope = if m.scope.declared_only() { " declared" } else { "" };
                format!("method {} [{}]{scope}", class(&m.class), m.sig.render(p))
            }
            AbstractObject::SynthRecv { site, ty } => format!("synth-recv {}@{site}", p.type_name(*ty)),
            AbstractObject::SynthRet { site, ty } => format!("synth-ret {}@{site}", p.type_name(*ty)),
        }
    }
}
