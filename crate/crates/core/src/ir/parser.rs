//! Two-stage parser: a line-oriented syntax pass producing an unresolved
//! AST, followed by name resolution into a [`Program`].

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use super::lexer::{tokenize, Tok, Token};
use super::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum ErrorCode {
    Syntax,
    UnknownType,
    DuplicateClass,
    DuplicateLabel,
    UndeclaredVariable,
    InheritanceCycle,
    DuplicateMethod,
    DuplicateVariable,
    UndefinedLabel,
    NestedArray,
    UnknownMethod,
    AmbiguousCall,
    InvalidHierarchy,
    InvalidStatement,
}

impl ErrorCode {
    /// Stable diagnostic code printed with every error.
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Syntax => "E001",
            ErrorCode::UnknownType => "E002",
            ErrorCode::DuplicateClass => "E003",
            ErrorCode::DuplicateLabel => "E004",
            ErrorCode::UndeclaredVariable => "E005",
            ErrorCode::InheritanceCycle => "E006",
            ErrorCode::DuplicateMethod => "E007",
            ErrorCode::DuplicateVariable => "E008",
            ErrorCode::UndefinedLabel => "E009",
            ErrorCode::NestedArray => "E010",
            ErrorCode::UnknownMethod => "E011",
            ErrorCode::AmbiguousCall => "E012",
            ErrorCode::InvalidHierarchy => "E013",
            ErrorCode::InvalidStatement => "E014",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub code: ErrorCode,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(code: ErrorCode, line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError { code, line, col, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}] {}:{}: {}", self.code.as_str(), self.line, self.col, self.message)
    }
}

type Result<T> = std::result::Result<T, ParseError>;

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    col: usize,
}

impl Pos {
    fn err(self, code: ErrorCode, msg: impl Into<String>) -> ParseError {
        ParseError::new(code, self.line, self.col, msg)
    }
}

// ---------------------------------------------------------------------------
// Syntax pass
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct AstTy {
    name: String,
    array: bool,
    pos: Pos,
}

#[derive(Debug)]
struct AstClass {
    name: String,
    pos: Pos,
    is_interface: bool,
    extends: Vec<(String, Pos)>,
    implements: Vec<(String, Pos)>,
    fields: Vec<(String, AstTy)>,
    methods: Vec<AstMethod>,
}

#[derive(Debug)]
struct AstMethod {
    name: String,
    pos: Pos,
    is_static: bool,
    visibility: Visibility,
    params: Vec<(String, AstTy, Pos)>,
    ret: Option<AstTy>,
    body: AstBody,
}

#[derive(Debug)]
enum AstBody {
    Items(Vec<(AstItem, Pos)>),
    Unmodeled,
    Native,
}

#[derive(Debug, Clone)]
enum AstArg {
    Var(String, Pos),
    Null(Pos),
    Unknown(Pos),
    Types(Vec<AstTy>, Pos),
}

#[derive(Debug)]
enum AstRhs {
    New(AstTy),
    NewArray(AstTy),
    Null,
    UnknownString,
    Str(String),
    Cast(AstTy, String, Pos),
    Call { target: String, method: String, args: Vec<AstArg> },
    ArrayLoad(String),
    Name(String),
}

#[derive(Debug)]
enum AstLhs {
    Var(String),
    Field(String, String),
    Elem(String, ArrayIndex),
}

#[derive(Debug)]
enum AstItem {
    Var(String, AstTy),
    Label(String),
    Branch(String),
    Goto(String),
    Return(Option<String>),
    Assign(AstLhs, AstRhs),
    Call { target: String, method: String, args: Vec<AstArg> },
}

const KEYWORDS: &[&str] = &[
    "class", "interface", "extends", "implements", "field", "method", "static", "public",
    "nonpublic", "void", "unmodeled", "native", "var", "new", "newarray", "null",
    "unknownstring", "unknown", "if", "goto", "return", "this", "ret",
];

struct Syntax {
    toks: Vec<Token>,
    i: usize,
}

impl Syntax {
    fn peek(&self) -> &Tok {
        &self.toks[self.i.min(self.toks.len() - 1)].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.i + n).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        match self.toks.get(self.i) {
            Some(t) => Pos { line: t.line, col: t.col },
            None => self
                .toks
                .last()
                .map(|t| Pos { line: t.line, col: t.col })
                .unwrap_or(Pos { line: 1, col: 1 }),
        }
    }

    fn at_end(&self) -> bool {
        self.i >= self.toks.len()
    }

    fn bump(&mut self) -> Tok {
        let t = self.peek().clone();
        self.i += 1;
        t
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Number(n) => format!("number {n}"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Star => "`*`".into(),
            Tok::Newline => "end of line".into(),
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let found = if self.at_end() { "end of input".to_string() } else { Self::describe(self.peek()) };
        self.pos().err(ErrorCode::Syntax, format!("expected {wanted}, found {found}"))
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Result<()> {
        if !self.at_end() && *self.peek() == tok {
            self.i += 1;
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn skip_newlines(&mut self) {
        while !self.at_end() && *self.peek() == Tok::Newline {
            self.i += 1;
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if !self.at_end() && self.is_kw(kw) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self, wanted: &str) -> Result<(String, Pos)> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) if !self.at_end() => {
                self.i += 1;
                Ok((s, pos))
            }
            _ => Err(self.unexpected(wanted)),
        }
    }

    /// A simple (undotted, non-keyword) name.
    fn simple_name(&mut self, wanted: &str) -> Result<(String, Pos)> {
        let (s, pos) = self.ident(wanted)?;
        if s.contains('.') {
            return Err(pos.err(ErrorCode::Syntax, format!("`{s}` must be a simple name")));
        }
        if KEYWORDS.contains(&s.as_str()) {
            return Err(pos.err(ErrorCode::Syntax, format!("`{s}` is a reserved word")));
        }
        Ok((s, pos))
    }

    fn ty(&mut self) -> Result<AstTy> {
        let (name, pos) = self.ident("a type name")?;
        let mut array = false;
        if !self.at_end() && *self.peek() == Tok::LBracket && *self.peek_at(1) == Tok::RBracket {
            self.i += 2;
            array = true;
            if !self.at_end() && *self.peek() == Tok::LBracket {
                return Err(pos.err(ErrorCode::NestedArray, format!("nested array type `{name}[][]` is not supported")));
            }
        }
        Ok(AstTy { name, array, pos })
    }

    fn end_of_item(&mut self) -> Result<()> {
        if self.at_end() || *self.peek() == Tok::RBrace {
            return Ok(());
        }
        self.expect(Tok::Newline, "end of line")
    }

    fn program(&mut self) -> Result<Vec<AstClass>> {
        let mut classes = Vec::new();
        loop {
            self.skip_newlines();
            if self.at_end() {
                return Ok(classes);
            }
            classes.push(self.class()?);
        }
    }

    fn name_list(&mut self) -> Result<Vec<(String, Pos)>> {
        let mut out = vec![self.ident("a type name")?];
        while !self.at_end() && *self.peek() == Tok::Comma {
            self.i += 1;
            out.push(self.ident("a type name")?);
        }
        Ok(out)
    }

    fn class(&mut self) -> Result<AstClass> {
        let pos = self.pos();
        let is_interface = if self.eat_kw("class") {
            false
        } else if self.eat_kw("interface") {
            true
        } else {
            return Err(self.unexpected("`class` or `interface`"));
        };
        let (name, _) = self.ident("a class name")?;
        let mut extends = Vec::new();
        let mut implements = Vec::new();
        if self.eat_kw("extends") {
            extends = if is_interface { self.name_list()? } else { vec![self.ident("a class name")?] };
        }
        if !is_interface && self.eat_kw("implements") {
            implements = self.name_list()?;
        }
        self.skip_newlines();
        self.expect(Tok::LBrace, "`{`")?;
        let mut fields = Vec::new();
        let mut methods = Vec::new();
        loop {
            self.skip_newlines();
            if self.at_end() {
                return Err(self.unexpected("`}`"));
            }
            if *self.peek() == Tok::RBrace {
                self.i += 1;
                break;
            }
            if self.eat_kw("field") {
                let (fname, _) = self.simple_name("a field name")?;
                self.expect(Tok::Colon, "`:`")?;
                let ty = self.ty()?;
                fields.push((fname, ty));
                self.end_of_item()?;
            } else if self.is_kw("method") {
                methods.push(self.method()?);
            } else {
                return Err(self.unexpected("`field`, `method` or `}`"));
            }
        }
        self.end_of_item()?;
        Ok(AstClass { name, pos, is_interface, extends, implements, fields, methods })
    }

    fn method(&mut self) -> Result<AstMethod> {
        let pos = self.pos();
        self.eat_kw("method");
        let is_static = self.eat_kw("static");
        let visibility = if self.eat_kw("nonpublic") {
            Visibility::NonPublic
        } else {
            self.eat_kw("public");
            Visibility::Public
        };
        let (name, _) = self.simple_name("a method name")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let (p, ppos) = self.simple_name("a parameter name")?;
                self.expect(Tok::Colon, "`:`")?;
                let ty = self.ty()?;
                params.push((p, ty, ppos));
                if *self.peek() == Tok::Comma {
                    self.i += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        self.expect(Tok::Colon, "`:`")?;
        let ret = if self.eat_kw("void") { None } else { Some(self.ty()?) };
        let body = if self.eat_kw("unmodeled") {
            self.end_of_item()?;
            AstBody::Unmodeled
        } else if self.eat_kw("native") {
            self.end_of_item()?;
            AstBody::Native
        } else {
            self.skip_newlines();
            self.expect(Tok::LBrace, "`{`, `unmodeled` or `native`")?;
            let mut items = Vec::new();
            loop {
                self.skip_newlines();
                if self.at_end() {
                    return Err(self.unexpected("`}`"));
                }
                if *self.peek() == Tok::RBrace {
                    self.i += 1;
                    break;
                }
                let ipos = self.pos();
                let item = self.item()?;
                items.push((item, ipos));
                self.end_of_item()?;
            }
            self.end_of_item()?;
            AstBody::Items(items)
        };
        Ok(AstMethod { name, pos, is_static, visibility, params, ret, body })
    }

    fn item(&mut self) -> Result<AstItem> {
        if self.eat_kw("var") {
            let (name, _) = self.simple_name("a variable name")?;
            self.expect(Tok::Colon, "`:`")?;
            return Ok(AstItem::Var(name, self.ty()?));
        }
        if self.eat_kw("if") {
            self.expect(Tok::Star, "`*`")?;
            if !self.eat_kw("goto") {
                return Err(self.unexpected("`goto`"));
            }
            return Ok(AstItem::Branch(self.simple_name("a label")?.0));
        }
        if self.eat_kw("goto") {
            return Ok(AstItem::Goto(self.simple_name("a label")?.0));
        }
        if self.eat_kw("return") {
            if matches!(self.peek(), Tok::Newline | Tok::RBrace) || self.at_end() {
                return Ok(AstItem::Return(None));
            }
            return Ok(AstItem::Return(Some(self.simple_name("a variable")?.0)));
        }
        let (head, hpos) = self.ident("a statement")?;
        match self.peek().clone() {
            Tok::Colon => {
                self.i += 1;
                if head.contains('.') || KEYWORDS.contains(&head.as_str()) {
                    return Err(hpos.err(ErrorCode::Syntax, format!("invalid label `{head}`")));
                }
                Ok(AstItem::Label(head))
            }
            Tok::LParen => {
                let (target, method) = split_call(&head, hpos)?;
                let args = self.args()?;
                Ok(AstItem::Call { target, method, args })
            }
            Tok::LBracket => {
                self.i += 1;
                let index = match self.bump() {
                    Tok::Star => ArrayIndex::Any,
                    Tok::Number(n) => ArrayIndex::At(n),
                    _ => {
                        self.i -= 1;
                        return Err(self.unexpected("`*` or an index"));
                    }
                };
                self.expect(Tok::RBracket, "`]`")?;
                self.expect(Tok::Eq, "`=`")?;
                let rhs = self.simple_name("a variable")?.0;
                Ok(AstItem::Assign(AstLhs::Elem(head, index), AstRhs::Name(rhs)))
            }
            Tok::Eq => {
                self.i += 1;
                let lhs = match head.split_once('.') {
                    None => AstLhs::Var(head),
                    Some((base, field)) if !field.contains('.') => AstLhs::Field(base.into(), field.into()),
                    Some(_) => return Err(hpos.err(ErrorCode::Syntax, format!("invalid assignment target `{head}`"))),
                };
                let rhs = self.rhs()?;
                if !matches!(lhs, AstLhs::Var(_)) && !matches!(rhs, AstRhs::Name(ref n) if !n.contains('.')) {
                    return Err(hpos.err(ErrorCode::Syntax, "stores take a plain variable on the right-hand side"));
                }
                Ok(AstItem::Assign(lhs, rhs))
            }
            _ => Err(self.unexpected("`=`, `(`, `[` or `:`")),
        }
    }

    fn rhs(&mut self) -> Result<AstRhs> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Str(s) => {
                self.i += 1;
                Ok(AstRhs::Str(s))
            }
            Tok::LParen => {
                self.i += 1;
                let ty = self.ty()?;
                self.expect(Tok::RParen, "`)`")?;
                let (v, vpos) = self.simple_name("a variable")?;
                Ok(AstRhs::Cast(ty, v, vpos))
            }
            Tok::Ident(s) => {
                self.i += 1;
                match s.as_str() {
                    "new" => return Ok(AstRhs::New(self.ty()?)),
                    "newarray" => {
                        let ty = self.ty()?;
                        if ty.array {
                            return Err(ty.pos.err(ErrorCode::NestedArray, "array element type cannot be an array"));
                        }
                        return Ok(AstRhs::NewArray(ty));
                    }
                    "null" => return Ok(AstRhs::Null),
                    "unknownstring" => return Ok(AstRhs::UnknownString),
                    _ => {}
                }
                match self.peek() {
                    Tok::LParen => {
                        let (target, method) = split_call(&s, pos)?;
                        let args = self.args()?;
                        Ok(AstRhs::Call { target, method, args })
                    }
                    Tok::LBracket => {
                        self.i += 1;
                        self.expect(Tok::Star, "`*`")?;
                        self.expect(Tok::RBracket, "`]`")?;
                        Ok(AstRhs::ArrayLoad(s))
                    }
                    _ => Ok(AstRhs::Name(s)),
                }
            }
            _ => Err(self.unexpected("an expression")),
        }
    }

    fn args(&mut self) -> Result<Vec<AstArg>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut out = Vec::new();
        if *self.peek() == Tok::RParen {
            self.i += 1;
            return Ok(out);
        }
        loop {
            let pos = self.pos();
            let arg = match self.peek().clone() {
                Tok::LBracket => {
                    self.i += 1;
                    let mut tys = Vec::new();
                    if *self.peek() != Tok::RBracket {
                        loop {
                            tys.push(self.ty()?);
                            if *self.peek() == Tok::Comma {
                                self.i += 1;
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RBracket, "`]`")?;
                    AstArg::Types(tys, pos)
                }
                Tok::Ident(s) if s == "null" => {
                    self.i += 1;
                    AstArg::Null(pos)
                }
                Tok::Ident(s) if s == "unknown" => {
                    self.i += 1;
                    AstArg::Unknown(pos)
                }
                Tok::Ident(_) => AstArg::Var(self.simple_name("an argument")?.0, pos),
                _ => return Err(self.unexpected("an argument")),
            };
            out.push(arg);
            match self.bump() {
                Tok::Comma => continue,
                Tok::RParen => return Ok(out),
                _ => {
                    self.i -= 1;
                    return Err(self.unexpected("`,` or `)`"));
                }
            }
        }
    }
}

fn split_call(head: &str, pos: Pos) -> Result<(String, String)> {
    match head.rsplit_once('.') {
        Some((t, m)) => Ok((t.to_string(), m.to_string())),
        None => Err(pos.err(ErrorCode::Syntax, format!("call `{head}` needs a receiver or class"))),
    }
}

// ---------------------------------------------------------------------------
// Resolution pass
// ---------------------------------------------------------------------------

struct Resolver {
    classes: Vec<ClassModel>,
    methods: Vec<MethodModel>,
    vars: Vec<VarInfo>,
    index: HashMap<String, TypeId>,
    next_site: u32,
}

const REFLECTIVE_CALLS: &[&str] =
    &["newInstance", "getMethod", "getDeclaredMethod", "getMethods", "getDeclaredMethods", "invoke"];

impl Resolver {
    fn type_id(&self, name: &str, pos: Pos) -> Result<TypeId> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| pos.err(ErrorCode::UnknownType, format!("unknown type `{name}`")))
    }

    fn ty(&self, t: &AstTy) -> Result<Ty> {
        let id = self.type_id(&t.name, t.pos)?;
        Ok(if t.array { Ty::Array(id) } else { Ty::Class(id) })
    }

    fn supertypes(&self, t: TypeId) -> Vec<TypeId> {
        let c = &self.classes[t.0 as usize];
        c.superclass.into_iter().chain(c.interfaces.iter().copied()).collect()
    }

    fn is_subclass(&self, a: TypeId, b: TypeId) -> bool {
        if a == b || b.0 == 0 {
            return true;
        }
        let mut seen = HashSet::new();
        let mut stack = vec![a];
        while let Some(t) = stack.pop() {
            if t == b {
                return true;
            }
            if seen.insert(t) {
                stack.extend(self.supertypes(t));
            }
        }
        false
    }

    fn is_subtype(&self, a: Ty, b: Ty) -> bool {
        match (a, b) {
            (Ty::Class(x), Ty::Class(y)) => self.is_subclass(x, y),
            (Ty::Array(x), Ty::Array(y)) => self.is_subclass(x, y),
            (Ty::Array(_), Ty::Class(y)) => y.0 == 0,
            (Ty::Class(_), Ty::Array(_)) => false,
        }
    }

    /// Methods named `name` with `arity` params visible from `t`: declared in
    /// `t` or any supertype, first occurrence of each parameter tuple wins.
    fn visible(&self, t: TypeId, name: &str, arity: usize, want_static: bool) -> Vec<MethodId> {
        let mut order = vec![t];
        let mut seen: HashSet<TypeId> = order.iter().copied().collect();
        let mut i = 0;
        while i < order.len() {
            for s in self.supertypes(order[i]) {
                if seen.insert(s) {
                    order.push(s);
                }
            }
            i += 1;
        }
        let mut tuples = HashSet::new();
        let mut out = Vec::new();
        for c in order {
            for &m in &self.classes[c.0 as usize].methods {
                let mm = &self.methods[m.0 as usize];
                if mm.name == name && mm.arity() == arity && mm.is_static == want_static && tuples.insert(mm.param_types.clone()) {
                    out.push(m);
                }
            }
        }
        out
    }

    fn pick(&self, cands: Vec<MethodId>, arg_tys: &[Ty], what: &str, pos: Pos) -> Result<MethodId> {
        match cands.len() {
            0 => Err(pos.err(ErrorCode::UnknownMethod, format!("no method matches `{what}`"))),
            1 => Ok(cands[0]),
            _ => {
                let applicable: Vec<MethodId> = cands
                    .into_iter()
                    .filter(|&m| {
                        self.methods[m.0 as usize]
                            .param_types
                            .iter()
                            .zip(arg_tys)
                            .all(|(p, a)| self.is_subtype(*a, *p))
                    })
                    .collect();
                match applicable.as_slice() {
                    [m] => Ok(*m),
                    [] => Err(pos.err(ErrorCode::UnknownMethod, format!("no overload of `{what}` accepts these arguments"))),
                    _ => Err(pos.err(ErrorCode::AmbiguousCall, format!("call to `{what}` is ambiguous"))),
                }
            }
        }
    }

    fn new_var(&mut self, name: &str, ty: Ty, method: MethodId) -> VarId {
        let id = VarId(self.vars.len() as u32);
        self.vars.push(VarInfo { name: name.to_string(), ty, method });
        id
    }
}

struct Scope<'a> {
    names: HashMap<String, VarId>,
    labels: &'a HashSet<String>,
}

impl Scope<'_> {
    fn get(&self, name: &str, pos: Pos) -> Result<VarId> {
        self.names
            .get(name)
            .copied()
            .ok_or_else(|| pos.err(ErrorCode::UndeclaredVariable, format!("use of undeclared variable `{name}`")))
    }

    fn label(&self, name: &str, pos: Pos) -> Result<String> {
        if self.labels.contains(name) {
            Ok(name.to_string())
        } else {
            Err(pos.err(ErrorCode::UndefinedLabel, format!("undefined label `{name}`")))
        }
    }
}

/// Parses IR source text into a resolved [`Program`].
pub fn parse_program(src: &str) -> Result<Program> {
    let toks = tokenize(src)?;
    let ast = Syntax { toks, i: 0 }.program()?;
    resolve(ast)
}

fn builtin(id: u32, name: &str, superclass: Option<TypeId>) -> ClassModel {
    ClassModel {
        id: TypeId(id),
        name: name.to_string(),
        superclass,
        interfaces: Vec::new(),
        fields: Vec::new(),
        methods: Vec::new(),
        is_interface: false,
        builtin: true,
    }
}

fn resolve(ast: Vec<AstClass>) -> Result<Program> {
    let object = TypeId(0);
    let mut r = Resolver {
        classes: vec![
            builtin(0, OBJECT, None),
            builtin(1, STRING, Some(object)),
            builtin(2, CLASS, Some(object)),
            builtin(3, METHOD, Some(object)),
        ],
        methods: Vec::new(),
        vars: Vec::new(),
        index: HashMap::new(),
        next_site: 1,
    };
    for c in &r.classes {
        r.index.insert(c.name.clone(), c.id);
    }
    let builtins = Builtins { object, string: TypeId(1), class: TypeId(2), method: TypeId(3) };

    for c in &ast {
        if r.index.contains_key(&c.name) {
            return Err(c.pos.err(ErrorCode::DuplicateClass, format!("duplicate class `{}`", c.name)));
        }
        let id = TypeId(r.classes.len() as u32);
        r.index.insert(c.name.clone(), id);
        r.classes.push(ClassModel {
            id,
            name: c.name.clone(),
            superclass: None,
            interfaces: Vec::new(),
            fields: Vec::new(),
            methods: Vec::new(),
            is_interface: c.is_interface,
            builtin: false,
        });
    }

    // Inheritance edges.
    for (k, c) in ast.iter().enumerate() {
        let id = TypeId((4 + k) as u32);
        let mut superclass = if c.is_interface { None } else { Some(object) };
        let mut interfaces = Vec::new();
        for (name, pos) in &c.extends {
            let t = r.type_id(name, *pos)?;
            let target_is_iface = r.classes[t.0 as usize].is_interface;
            if c.is_interface {
                if !target_is_iface {
                    return Err(pos.err(ErrorCode::InvalidHierarchy, format!("interface `{}` cannot extend class `{name}`", c.name)));
                }
                interfaces.push(t);
            } else {
                if target_is_iface {
                    return Err(pos.err(ErrorCode::InvalidHierarchy, format!("class `{}` cannot extend interface `{name}`", c.name)));
                }
                superclass = Some(t);
            }
        }
        for (name, pos) in &c.implements {
            let t = r.type_id(name, *pos)?;
            if !r.classes[t.0 as usize].is_interface {
                return Err(pos.err(ErrorCode::InvalidHierarchy, format!("`{name}` is not an interface")));
            }
            interfaces.push(t);
        }
        let cm = &mut r.classes[id.0 as usize];
        cm.superclass = superclass;
        cm.interfaces = interfaces;
    }

    // Acyclicity: iterative DFS with colors.
    {
        let n = r.classes.len();
        let mut color = vec![0u8; n];
        for start in 0..n {
            if color[start] != 0 {
                continue;
            }
            let mut stack = vec![(TypeId(start as u32), 0usize)];
            color[start] = 1;
            while let Some((t, i)) = stack.pop() {
                let sups = r.supertypes(t);
                if i < sups.len() {
                    stack.push((t, i + 1));
                    let s = sups[i];
                    match color[s.0 as usize] {
                        0 => {
                            color[s.0 as usize] = 1;
                            stack.push((s, 0));
                        }
                        1 => {
                            let pos = ast
                                .get((t.0 as usize).wrapping_sub(4))
                                .map(|c| c.pos)
                                .unwrap_or(Pos { line: 1, col: 1 });
                            return Err(pos.err(
                                ErrorCode::InheritanceCycle,
                                format!("inheritance cycle through `{}`", r.classes[t.0 as usize].name),
                            ));
                        }
                        _ => {}
                    }
                } else {
                    color[t.0 as usize] = 2;
                }
            }
        }
    }

    // Fields and method signatures.
    for (k, c) in ast.iter().enumerate() {
        let owner = TypeId((4 + k) as u32);
        let mut fields = Vec::new();
        let mut fnames = HashSet::new();
        for (fname, fty) in &c.fields {
            if !fnames.insert(fname.clone()) {
                return Err(fty.pos.err(ErrorCode::DuplicateVariable, format!("duplicate field `{fname}`")));
            }
            fields.push(FieldDecl { name: fname.clone(), ty: r.ty(fty)? });
        }
        r.classes[owner.0 as usize].fields = fields;
        let mut seen = HashSet::new();
        for m in &c.methods {
            let param_types = m.params.iter().map(|(_, t, _)| r.ty(t)).collect::<Result<Vec<_>>>()?;
            if !seen.insert((m.name.clone(), param_types.clone())) {
                return Err(m.pos.err(ErrorCode::DuplicateMethod, format!("duplicate method `{}` in `{}`", m.name, c.name)));
            }
            if c.is_interface && matches!(m.body, AstBody::Items(_)) {
                return Err(m.pos.err(ErrorCode::InvalidHierarchy, "interface methods must be `unmodeled` or `native`"));
            }
            let ret = match &m.ret {
                None => RetType::Void,
                Some(t) => RetType::Value(r.ty(t)?),
            };
            let id = MethodId(r.methods.len() as u32);
            let this_var = (!m.is_static).then(|| r.new_var("this", Ty::Class(owner), id));
            let mut params = Vec::new();
            let mut pnames = HashSet::new();
            for ((pname, _, ppos), pty) in m.params.iter().zip(&param_types) {
                if !pnames.insert(pname.clone()) {
                    return Err(ppos.err(ErrorCode::DuplicateVariable, format!("duplicate parameter `{pname}`")));
                }
                params.push(r.new_var(pname, *pty, id));
            }
            let ret_var = match ret {
                RetType::Value(t) => Some(r.new_var("ret", t, id)),
                RetType::Void => None,
            };
            let body = match m.body {
                AstBody::Unmodeled => Body::Unmodeled,
                AstBody::Native => Body::Native,
                AstBody::Items(_) => Body::Statements(Vec::new()),
            };
            r.methods.push(MethodModel {
                id,
                owner,
                name: m.name.clone(),
                params,
                param_types,
                ret,
                is_static: m.is_static,
                visibility: m.visibility,
                body,
                this_var,
                ret_var,
                locals: Vec::new(),
            });
            r.classes[owner.0 as usize].methods.push(id);
        }
    }

    // Bodies, in textual order so site ids follow the file.
    let mut mid = 0u32;
    for c in &ast {
        for m in &c.methods {
            let id = MethodId(mid);
            mid += 1;
            if let AstBody::Items(items) = &m.body {
                resolve_body(&mut r, id, items)?;
            }
        }
    }

    Ok(Program::new(r.classes, r.methods, r.vars, builtins))
}

fn resolve_body(r: &mut Resolver, id: MethodId, items: &[(AstItem, Pos)]) -> Result<()> {
    let mut labels = HashSet::new();
    for (item, pos) in items {
        if let AstItem::Label(l) = item {
            if !labels.insert(l.clone()) {
                return Err(pos.err(ErrorCode::DuplicateLabel, format!("duplicate label `{l}`")));
            }
        }
    }
    let mut scope = Scope { names: HashMap::new(), labels: &labels };
    {
        let mm = &r.methods[id.0 as usize];
        if let Some(t) = mm.this_var {
            scope.names.insert("this".into(), t);
        }
        for &p in &mm.params {
            scope.names.insert(r.vars[p.0 as usize].name.clone(), p);
        }
    }
    let ret_var = r.methods[id.0 as usize].ret_var;
    let mut locals = Vec::new();
    let mut stmts = Vec::new();
    for (item, pos) in items {
        let pos = *pos;
        let kind = match item {
            AstItem::Var(name, ty) => {
                if scope.names.contains_key(name) {
                    return Err(pos.err(ErrorCode::DuplicateVariable, format!("duplicate variable `{name}`")));
                }
                let ty = r.ty(ty)?;
                let v = r.new_var(name, ty, id);
                scope.names.insert(name.clone(), v);
                locals.push(v);
                continue;
            }
            AstItem::Label(l) => StmtKind::Label { name: l.clone() },
            AstItem::Branch(l) => StmtKind::Branch { target: scope.label(l, pos)? },
            AstItem::Goto(l) => StmtKind::Goto { target: scope.label(l, pos)? },
            AstItem::Return(v) => {
                let value = v.as_ref().map(|v| scope.get(v, pos)).transpose()?;
                if value.is_some() && ret_var.is_none() {
                    return Err(pos.err(ErrorCode::InvalidStatement, "void method cannot return a value"));
                }
                StmtKind::Return { value }
            }
            AstItem::Call { target, method, args } => resolve_call(r, &scope, None, target, method, args, pos)?,
            AstItem::Assign(lhs, rhs) => match lhs {
                AstLhs::Field(base, field) => {
                    let AstRhs::Name(v) = rhs else { unreachable!() };
                    StmtKind::Store { base: scope.get(base, pos)?, field: field.clone(), rhs: scope.get(v, pos)? }
                }
                AstLhs::Elem(base, index) => {
                    let AstRhs::Name(v) = rhs else { unreachable!() };
                    StmtKind::ArrayStore { base: scope.get(base, pos)?, index: *index, rhs: scope.get(v, pos)? }
                }
                AstLhs::Var(x) => {
                    let lhs = scope.get(x, pos)?;
                    resolve_rhs(r, &scope, lhs, rhs, pos)?
                }
            },
        };
        stmts.push(Stmt { site: SiteId(r.next_site), kind });
        r.next_site += 1;
    }
    let mm = &mut r.methods[id.0 as usize];
    mm.body = Body::Statements(stmts);
    mm.locals = locals;
    Ok(())
}

fn resolve_rhs(r: &mut Resolver, scope: &Scope, lhs: VarId, rhs: &AstRhs, pos: Pos) -> Result<StmtKind> {
    Ok(match rhs {
        AstRhs::New(t) => {
            if t.array {
                return Err(t.pos.err(ErrorCode::InvalidStatement, "use `newarray` to allocate arrays"));
            }
            let ty = r.type_id(&t.name, t.pos)?;
            if r.classes[ty.0 as usize].is_interface {
                return Err(t.pos.err(ErrorCode::InvalidStatement, format!("cannot instantiate interface `{}`", t.name)));
            }
            StmtKind::Alloc { lhs, ty }
        }
        AstRhs::NewArray(t) => StmtKind::ArrayAlloc { lhs, elem: r.type_id(&t.name, t.pos)? },
        AstRhs::Null => StmtKind::NullAssign { lhs },
        AstRhs::UnknownString => StmtKind::UnknownString { lhs },
        AstRhs::Str(s) => StmtKind::StringConst { lhs, value: s.clone() },
        AstRhs::Cast(t, v, vpos) => StmtKind::Cast { lhs, ty: r.ty(t)?, rhs: scope.get(v, *vpos)? },
        AstRhs::ArrayLoad(base) => StmtKind::ArrayLoad { lhs, base: scope.get(base, pos)? },
        AstRhs::Name(n) => match n.split_once('.') {
            None => StmtKind::Copy { lhs, rhs: scope.get(n, pos)? },
            Some((base, field)) if !field.contains('.') => {
                StmtKind::Load { lhs, base: scope.get(base, pos)?, field: field.to_string() }
            }
            Some(_) => return Err(pos.err(ErrorCode::Syntax, format!("invalid field access `{n}`"))),
        },
        AstRhs::Call { target, method, args } => resolve_call(r, scope, Some(lhs), target, method, args, pos)?,
    })
}

fn var_args(scope: &Scope, args: &[AstArg]) -> Result<Vec<VarId>> {
    args.iter()
        .map(|a| match a {
            AstArg::Var(v, p) => scope.get(v, *p),
            AstArg::Null(p) | AstArg::Unknown(p) | AstArg::Types(_, p) => {
                Err(p.err(ErrorCode::InvalidStatement, "call arguments must be variables"))
            }
        })
        .collect()
}

fn resolve_call(
    r: &mut Resolver,
    scope: &Scope,
    lhs: Option<VarId>,
    target: &str,
    method: &str,
    args: &[AstArg],
    pos: Pos,
) -> Result<StmtKind> {
    let need_lhs = |what: &str| {
        lhs.ok_or_else(|| pos.err(ErrorCode::InvalidStatement, format!("result of `{what}` must be assigned")))
    };
    let bad_args = |what: &str| pos.err(ErrorCode::InvalidStatement, format!("wrong arguments to `{what}`"));

    if target == "Class" && method == "forName" {
        let [AstArg::Var(v, p)] = args else { return Err(bad_args("Class.forName")) };
        return Ok(StmtKind::ForName { lhs: need_lhs("Class.forName")?, name: scope.get(v, *p)? });
    }

    if let Some(&recv) = scope.names.get(target) {
        if REFLECTIVE_CALLS.contains(&method) {
            return match method {
                "newInstance" => {
                    if !args.is_empty() {
                        return Err(bad_args(method));
                    }
                    Ok(StmtKind::NewInstance { lhs: need_lhs(method)?, class: recv })
                }
                "getMethod" | "getDeclaredMethod" => {
                    let kind = if method == "getMethod" { Introspect::GetMethod } else { Introspect::GetDeclaredMethod };
                    let (name, lits) = match args {
                        [AstArg::Var(n, p)] => (scope.get(n, *p)?, TypeLits::Unknown),
                        [AstArg::Var(n, p), AstArg::Unknown(_)] => (scope.get(n, *p)?, TypeLits::Unknown),
                        [AstArg::Var(n, p), AstArg::Types(tys, _)] => {
                            (scope.get(n, *p)?, TypeLits::Exact(tys.iter().map(|t| r.ty(t)).collect::<Result<_>>()?))
                        }
                        _ => return Err(bad_args(method)),
                    };
                    Ok(StmtKind::GetMethod { lhs: need_lhs(method)?, class: recv, name, lits, kind })
                }
                "getMethods" | "getDeclaredMethods" => {
                    if !args.is_empty() {
                        return Err(bad_args(method));
                    }
                    let kind = if method == "getMethods" { Introspect::GetMethod } else { Introspect::GetDeclaredMethod };
                    Ok(StmtKind::GetMethods { lhs: need_lhs(method)?, class: recv, kind })
                }
                _ => {
                    let operand = |a: &AstArg| match a {
                        AstArg::Null(_) => Ok(Operand::Null),
                        AstArg::Var(v, p) => Ok(Operand::Var(scope.get(v, *p)?)),
                        _ => Err(bad_args("invoke")),
                    };
                    let [a, b] = args else { return Err(bad_args("invoke")) };
                    Ok(StmtKind::Invoke { lhs, method: recv, recv: operand(a)?, args: operand(b)? })
                }
            };
        }
        let args = var_args(scope, args)?;
        let arg_tys: Vec<Ty> = args.iter().map(|a| r.vars[a.0 as usize].ty).collect();
        let Ty::Class(static_ty) = r.vars[recv.0 as usize].ty else {
            return Err(pos.err(ErrorCode::UnknownMethod, format!("arrays have no method `{method}`")));
        };
        let cands = r.visible(static_ty, method, args.len(), false);
        let what = format!("{}.{}", r.classes[static_ty.0 as usize].name, method);
        let m = r.pick(cands, &arg_tys, &what, pos)?;
        let param_types = r.methods[m.0 as usize].param_types.clone();
        return Ok(StmtKind::VirtualCall { lhs, recv, name: method.to_string(), param_types, args });
    }

    if !target.contains('.') && !r.index.contains_key(target) {
        return Err(pos.err(ErrorCode::UndeclaredVariable, format!("use of undeclared variable `{target}`")));
    }
    let class = r.type_id(target, pos)?;
    let args = var_args(scope, args)?;
    let arg_tys: Vec<Ty> = args.iter().map(|a| r.vars[a.0 as usize].ty).collect();
    // Static methods are inherited along superclass chains only.
    let mut cands = Vec::new();
    let mut tuples = BTreeSet::new();
    let mut cur = Some(class);
    while let Some(t) = cur {
        for &m in &r.classes[t.0 as usize].methods {
            let mm = &r.methods[m.0 as usize];
            if mm.is_static && mm.name == method && mm.arity() == args.len() && tuples.insert(mm.param_types.clone()) {
                cands.push(m);
            }
        }
        cur = r.classes[t.0 as usize].superclass;
    }
    let callee = r.pick(cands, &arg_tys, &format!("{target}.{method}"), pos)?;
    Ok(StmtKind::StaticCall { lhs, callee, args })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err(src: &str) -> ParseError {
        parse_program(src).unwrap_err()
    }

    #[test]
    fn minimal_class_extends_object() {
        let p = parse_program("class A {}").unwrap();
        let a = p.type_named("A").unwrap();
        assert_eq!(p.classes.len(), 5);
        assert_eq!(p.class(a).superclass, Some(p.builtins.object));
        assert!(p.class(p.builtins.object).builtin);
    }

    #[test]
    fn self_extension_is_a_cycle() {
        assert_eq!(err("class A extends A {}").code, ErrorCode::InheritanceCycle);
        assert_eq!(err("class A extends B {}\nclass B extends A {}").code, ErrorCode::InheritanceCycle);
        assert_eq!(err("interface I extends J {}\ninterface J extends I {}").code, ErrorCode::InheritanceCycle);
    }

    #[test]
    fn distinct_error_codes() {
        assert_eq!(err("class A {\n field f T\n}").code, ErrorCode::Syntax);
        assert_eq!(err("class A extends Nope {}").code, ErrorCode::UnknownType);
        assert_eq!(err("class A {}\nclass A {}").code, ErrorCode::DuplicateClass);
        assert_eq!(err("class java.lang.String {}").code, ErrorCode::DuplicateClass);
        let dup_label = "class A {\n method static f() : void {\n L:\n L:\n }\n}";
        assert_eq!(err(dup_label).code, ErrorCode::DuplicateLabel);
        let undeclared = "class A {\n method static f() : void {\n x = y\n }\n}";
        assert_eq!(err(undeclared).code, ErrorCode::UndeclaredVariable);
        let undefined = "class A {\n method static f() : void {\n goto L\n }\n}";
        assert_eq!(err(undefined).code, ErrorCode::UndefinedLabel);
        assert_eq!(err("class A {\n field f : A[][]\n}").code, ErrorCode::NestedArray);
        let dup_m = "class A {\n method f(x: A) : void unmodeled\n method f(y: A) : void native\n}";
        assert_eq!(err(dup_m).code, ErrorCode::DuplicateMethod);
        let unknown_m = "class A {\n method static f() : void {\n var a : A\n a.g()\n }\n}";
        assert_eq!(err(unknown_m).code, ErrorCode::UnknownMethod);
    }

    #[test]
    fn error_positions_are_reported() {
        let e = err("class A {\n  method static f() : void {\n    x = new A\n  }\n}");
        assert_eq!((e.line, e.col), (3, 5));
        assert!(e.to_string().starts_with("error[E005] 3:5"));
    }

    #[test]
    fn use_before_declaration_is_rejected() {
        let src = "class A {\n method static f() : void {\n x = null\n var x : A\n }\n}";
        assert_eq!(err(src).code, ErrorCode::UndeclaredVariable);
    }

    #[test]
    fn overloads_resolved_by_argument_types() {
        let src = r#"
class B {}
class C {}
class A {
  method f(b: B) : void unmodeled
  method f(c: C) : void unmodeled
  method static main() : void {
    var a : A
    var c : C
    a = new A
    c = new C
    a.f(c)
  }
}
"#;
        let p = parse_program(src).unwrap();
        let main = p.entry("A.main").unwrap();
        let last = p.method(main).body.statements().last().unwrap();
        let StmtKind::VirtualCall { param_types, .. } = &last.kind else { panic!() };
        assert_eq!(param_types, &vec![Ty::Class(p.type_named("C").unwrap())]);
    }

    #[test]
    fn ambiguous_overloads_rejected() {
        let src = r#"
class A {
  method f(b: java.lang.Object) : void unmodeled
  method f(c: java.lang.String) : void unmodeled
  method static main() : void {
    var a : A
    var o : java.lang.Object
    a = new A
    a.f(o)
  }
}
"#;
        // Only one overload accepts an Object argument.
        assert!(parse_program(src).is_ok());
        let src2 = src.replace("var o : java.lang.Object", "var o : java.lang.String");
        assert_eq!(err(&src2).code, ErrorCode::AmbiguousCall);
    }

    #[test]
    fn reflective_forms() {
        let src = r#"
class A {
  method static main() : void {
    var n : java.lang.String
    var c : java.lang.Class
    var m : java.lang.reflect.Method
    var ms : java.lang.reflect.Method[]
    var o : java.lang.Object
    var args : java.lang.Object[]
    n = "A"
    c = Class.forName(n)
    o = c.newInstance()
    m = c.getMethod(n, [A, java.lang.String])
    m = c.getDeclaredMethod(n, unknown)
    m = c.getMethod(n)
    ms = c.getMethods()
    ms = c.getDeclaredMethods()
    args = newarray java.lang.Object
    args[0] = o
    args[*] = o
    o = m.invoke(o, args)
    m.invoke(null, null)
  }
}
"#;
        let p = parse_program(src).unwrap();
        let body = p.method(p.entry("A.main").unwrap()).body.statements();
        assert_eq!(body.len(), 13);
        assert!(matches!(body[3].kind, StmtKind::GetMethod { lits: TypeLits::Exact(ref v), kind: Introspect::GetMethod, .. } if v.len() == 2));
        assert!(matches!(body[4].kind, StmtKind::GetMethod { lits: TypeLits::Unknown, kind: Introspect::GetDeclaredMethod, .. }));
        assert!(matches!(body[7].kind, StmtKind::GetMethods { kind: Introspect::GetDeclaredMethod, .. }));
        assert!(matches!(body[9].kind, StmtKind::ArrayStore { index: ArrayIndex::At(0), .. }));
        assert!(matches!(body[12].kind, StmtKind::Invoke { lhs: None, recv: Operand::Null, args: Operand::Null, .. }));
    }

    #[test]
    fn pseudo_slots() {
        let src = "class A {\n method f() : A unmodeled\n method static g() : void native\n}";
        let p = parse_program(src).unwrap();
        let a = p.type_named("A").unwrap();
        let f = p.method(p.class(a).methods[0]);
        let g = p.method(p.class(a).methods[1]);
        assert!(f.this_var.is_some() && f.ret_var.is_some());
        assert!(g.this_var.is_none() && g.ret_var.is_none());
        assert!(f.body.statements().is_empty() && g.body == Body::Native);
    }

    #[test]
    fn interfaces_cannot_hold_bodies_or_be_extended_by_classes() {
        assert_eq!(err("interface I {\n method f() : void {\n }\n}").code, ErrorCode::InvalidHierarchy);
        assert_eq!(err("interface I {}\nclass A extends I {}").code, ErrorCode::InvalidHierarchy);
        assert_eq!(err("class B {}\nclass A implements B {}").code, ErrorCode::InvalidHierarchy);
    }
}
