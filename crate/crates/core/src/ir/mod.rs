//! Textual intermediate representation: program model, parser, printer and
//! per-method control-flow graphs.
//!
//! A program is a closed world of classes and interfaces. Every statement in
//! a method body carries a site id that is unique across the whole program
//! and assigned in textual order starting at 1, so ids are stable across runs
//! and across a print/re-parse cycle.

mod cfg;
mod lexer;
mod parser;
mod printer;

use std::collections::HashMap;
use std::fmt;

pub use cfg::{post_dominating_cast, Cfg, CfgError, CfgNode};
pub use parser::{parse_program, ErrorCode, ParseError};
pub(crate) use printer::render_stmt;
pub use printer::print_program;

pub const OBJECT: &str = "java.lang.Object";
pub const STRING: &str = "java.lang.String";
pub const CLASS: &str = "java.lang.Class";
pub const METHOD: &str = "java.lang.reflect.Method";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct TypeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct MethodId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct VarId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct SiteId(pub u32);

impl fmt::Display for SiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A reference type: a declared class/interface or a one-dimensional array
/// of one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ty {
    Class(TypeId),
    Array(TypeId),
}

impl Ty {
    pub fn class(self) -> Option<TypeId> {
        match self {
            Ty::Class(t) => Some(t),
            Ty::Array(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RetType {
    Void,
    Value(Ty),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Visibility {
    Public,
    NonPublic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: String,
    pub ty: Ty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassModel {
    pub id: TypeId,
    pub name: String,
    pub superclass: Option<TypeId>,
    pub interfaces: Vec<TypeId>,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodId>,
    pub is_interface: bool,
    pub builtin: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Body {
    Statements(Vec<Stmt>),
    Unmodeled,
    Native,
}

impl Body {
    pub fn statements(&self) -> &[Stmt] {
        match self {
            Body::Statements(s) => s,
            _ => &[],
        }
    }

    pub fn is_modeled(&self) -> bool {
        matches!(self, Body::Statements(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodModel {
    pub id: MethodId,
    pub owner: TypeId,
    pub name: String,
    pub params: Vec<VarId>,
    pub param_types: Vec<Ty>,
    pub ret: RetType,
    pub is_static: bool,
    pub visibility: Visibility,
    pub body: Body,
    /// Receiver slot; present iff the method is not static.
    pub this_var: Option<VarId>,
    /// Return slot; present iff the return type is not void.
    pub ret_var: Option<VarId>,
    /// Locals declared with `var`, in declaration order.
    pub locals: Vec<VarId>,
}

impl MethodModel {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarInfo {
    pub name: String,
    pub ty: Ty,
    pub method: MethodId,
}

/// Parameter type list of a `getMethod` family call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeLits {
    Unknown,
    Exact(Vec<Ty>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum Introspect {
    GetMethod,
    GetDeclaredMethod,
}

impl Introspect {
    pub fn declared_only(self) -> bool {
        matches!(self, Introspect::GetDeclaredMethod)
    }
}

/// Where an `ArrayStore` writes. Indices are only used by argument-type
/// inference; the pointer analysis collapses all elements into one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrayIndex {
    Any,
    At(u32),
}

/// Receiver or argument operand that may be the literal `null`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operand {
    Null,
    Var(VarId),
}

impl Operand {
    pub fn var(self) -> Option<VarId> {
        match self {
            Operand::Null => None,
            Operand::Var(v) => Some(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Alloc { lhs: VarId, ty: TypeId },
    ArrayAlloc { lhs: VarId, elem: TypeId },
    Copy { lhs: VarId, rhs: VarId },
    Load { lhs: VarId, base: VarId, field: String },
    Store { base: VarId, field: String, rhs: VarId },
    ArrayLoad { lhs: VarId, base: VarId },
    ArrayStore { base: VarId, index: ArrayIndex, rhs: VarId },
    StringConst { lhs: VarId, value: String },
    UnknownString { lhs: VarId },
    NullAssign { lhs: VarId },
    Cast { lhs: VarId, ty: Ty, rhs: VarId },
    /// `name` and `param_types` identify the statically resolved target
    /// signature; dispatch happens on the receiver objects' dynamic types.
    VirtualCall { lhs: Option<VarId>, recv: VarId, name: String, param_types: Vec<Ty>, args: Vec<VarId> },
    StaticCall { lhs: Option<VarId>, callee: MethodId, args: Vec<VarId> },
    ForName { lhs: VarId, name: VarId },
    NewInstance { lhs: VarId, class: VarId },
    GetMethod { lhs: VarId, class: VarId, name: VarId, lits: TypeLits, kind: Introspect },
    GetMethods { lhs: VarId, class: VarId, kind: Introspect },
    Invoke { lhs: Option<VarId>, method: VarId, recv: Operand, args: Operand },
    Branch { target: String },
    Goto { target: String },
    Label { name: String },
    Return { value: Option<VarId> },
}

impl StmtKind {
    /// The variable this statement assigns, if any.
    pub fn def(&self) -> Option<VarId> {
        use StmtKind::*;
        match self {
            Alloc { lhs, .. }
            | ArrayAlloc { lhs, .. }
            | Copy { lhs, .. }
            | Load { lhs, .. }
            | ArrayLoad { lhs, .. }
            | StringConst { lhs, .. }
            | UnknownString { lhs }
            | NullAssign { lhs }
            | Cast { lhs, .. }
            | ForName { lhs, .. }
            | NewInstance { lhs, .. }
            | GetMethod { lhs, .. }
            | GetMethods { lhs, .. } => Some(*lhs),
            VirtualCall { lhs, .. } | StaticCall { lhs, .. } | Invoke { lhs, .. } => *lhs,
            Store { .. } | ArrayStore { .. } | Branch { .. } | Goto { .. } | Label { .. } | Return { .. } => None,
        }
    }

    pub fn reflective_kind(&self) -> Option<ReflectiveKind> {
        match self {
            StmtKind::ForName { .. } => Some(ReflectiveKind::ForName),
            StmtKind::GetMethod { .. } | StmtKind::GetMethods { .. } => Some(ReflectiveKind::GetMethod),
            StmtKind::NewInstance { .. } => Some(ReflectiveKind::NewInstance),
            StmtKind::Invoke { .. } => Some(ReflectiveKind::Invoke),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "camelCase")]
pub enum ReflectiveKind {
    ForName,
    GetMethod,
    NewInstance,
    Invoke,
}

impl fmt::Display for ReflectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReflectiveKind::ForName => "forName",
            ReflectiveKind::GetMethod => "getMethod",
            ReflectiveKind::NewInstance => "newInstance",
            ReflectiveKind::Invoke => "invoke",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub site: SiteId,
    pub kind: StmtKind,
}

/// Location of a site: owning method and index into its statement list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteLoc {
    pub method: MethodId,
    pub index: usize,
}

/// Builtin type ids, always present and always the first four types.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Builtins {
    pub object: TypeId,
    pub string: TypeId,
    pub class: TypeId,
    pub method: TypeId,
}

/// Closed-world program: immutable once parsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub classes: Vec<ClassModel>,
    pub methods: Vec<MethodModel>,
    pub vars: Vec<VarInfo>,
    pub builtins: Builtins,
    type_index: HashMap<String, TypeId>,
    sites: Vec<SiteLoc>,
}

impl Program {
    pub(crate) fn new(
        classes: Vec<ClassModel>,
        methods: Vec<MethodModel>,
        vars: Vec<VarInfo>,
        builtins: Builtins,
    ) -> Self {
        let type_index = classes.iter().map(|c| (c.name.clone(), c.id)).collect();
        let mut sites = Vec::new();
        for m in &methods {
            for (index, stmt) in m.body.statements().iter().enumerate() {
                let slot = stmt.site.0 as usize;
                if sites.len() <= slot {
                    sites.resize(slot + 1, SiteLoc { method: MethodId(u32::MAX), index: usize::MAX });
                }
                sites[slot] = SiteLoc { method: m.id, index };
            }
        }
        Program { classes, methods, vars, builtins, type_index, sites }
    }

    pub fn class(&self, id: TypeId) -> &ClassModel {
        &self.classes[id.0 as usize]
    }

    pub fn method(&self, id: MethodId) -> &MethodModel {
        &self.methods[id.0 as usize]
    }

    pub fn var(&self, id: VarId) -> &VarInfo {
        &self.vars[id.0 as usize]
    }

    pub fn type_named(&self, name: &str) -> Option<TypeId> {
        self.type_index.get(name).copied()
    }

    pub fn type_name(&self, id: TypeId) -> &str {
        &self.class(id).name
    }

    pub fn ty_name(&self, ty: Ty) -> String {
        match ty {
            Ty::Class(t) => self.type_name(t).to_string(),
            Ty::Array(t) => format!("{}[]", self.type_name(t)),
        }
    }

    pub fn ret_name(&self, ret: RetType) -> String {
        match ret {
            RetType::Void => "void".to_string(),
            RetType::Value(t) => self.ty_name(t),
        }
    }

    /// Number of statements in the program; site ids run from 1 to this.
    pub fn site_count(&self) -> usize {
        self.sites.len().saturating_sub(1)
    }

    pub fn site(&self, site: SiteId) -> Option<SiteLoc> {
        self.sites
            .get(site.0 as usize)
            .copied()
            .filter(|l| l.method.0 != u32::MAX)
    }

    pub fn stmt(&self, site: SiteId) -> Option<&Stmt> {
        let loc = self.site(site)?;
        self.method(loc.method).body.statements().get(loc.index)
    }

    /// Finds a method by `Class.name`, where the class may be qualified.
    pub fn methods_named(&self, qualified: &str) -> Vec<MethodId> {
        let Some((class, name)) = qualified.rsplit_once('.') else {
            return Vec::new();
        };
        let Some(t) = self.type_named(class) else {
            return Vec::new();
        };
        self.class(t)
            .methods
            .iter()
            .copied()
            .filter(|&m| self.method(m).name == name)
            .collect()
    }

    /// Resolves a harness entry point: a static method with no parameters.
    pub fn entry(&self, qualified: &str) -> Option<MethodId> {
        self.methods_named(qualified)
            .into_iter()
            .find(|&m| self.method(m).is_static && self.method(m).params.is_empty())
    }

    /// `Class.name(T1,T2)`, unambiguous across overloads.
    pub fn method_sig(&self, id: MethodId) -> String {
        let m = self.method(id);
        let params: Vec<String> = m.param_types.iter().map(|t| self.ty_name(*t)).collect();
        format!("{}.{}({})", self.type_name(m.owner), m.name, params.join(","))
    }

    /// `Class.name/arity`.
    pub fn method_label(&self, id: MethodId) -> String {
        let m = self.method(id);
        format!("{}.{}/{}", self.type_name(m.owner), m.name, m.arity())
    }

    pub fn var_label(&self, id: VarId) -> String {
        let v = self.var(id);
        format!("{}:{}", self.method_label(v.method), v.name)
    }

    /// All reflective sites of methods in `methods`, in site order.
    pub fn reflective_sites<'a>(
        &'a self,
        methods: impl IntoIterator<Item = MethodId> + 'a,
    ) -> impl Iterator<Item = (SiteId, ReflectiveKind)> + 'a {
        methods.into_iter().flat_map(move |m| {
            self.method(m)
                .body
                .statements()
                .iter()
                .filter_map(|s| s.kind.reflective_kind().map(|k| (s.site, k)))
        })
    }

    pub fn has_unknown_strings(&self) -> bool {
        self.methods
            .iter()
            .flat_map(|m| m.body.statements())
            .any(|s| matches!(s.kind, StmtKind::UnknownString { .. }))
    }
}
