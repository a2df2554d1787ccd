use std::fmt::Write;

use super::*;

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Prints a program in canonical form. Re-parsing the output yields a
/// structurally identical [`Program`]: locals are hoisted to the top of each
/// body, which does not disturb site or variable numbering.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for c in p.classes.iter().filter(|c| !c.builtin) {
        let kw = if c.is_interface { "interface" } else { "class" };
        let _ = write!(out, "{kw} {}", c.name);
        if c.is_interface {
            if !c.interfaces.is_empty() {
                let names: Vec<&str> = c.interfaces.iter().map(|&t| p.type_name(t)).collect();
                let _ = write!(out, " extends {}", names.join(", "));
            }
        } else {
            if let Some(s) = c.superclass.filter(|&s| s != p.builtins.object) {
                let _ = write!(out, " extends {}", p.type_name(s));
            }
            if !c.interfaces.is_empty() {
                let names: Vec<&str> = c.interfaces.iter().map(|&t| p.type_name(t)).collect();
                let _ = write!(out, " implements {}", names.join(", "));
            }
        }
        out.push_str(" {\n");
        for f in &c.fields {
            let _ = writeln!(out, "  field {} : {}", f.name, p.ty_name(f.ty));
        }
        for &m in &c.methods {
            print_method(p, m, &mut out);
        }
        out.push_str("}\n");
    }
    out
}

fn print_method(p: &Program, id: MethodId, out: &mut String) {
    let m = p.method(id);
    let params: Vec<String> = m
        .params
        .iter()
        .map(|&v| format!("{}: {}", p.var(v).name, p.ty_name(p.var(v).ty)))
        .collect();
    let _ = write!(
        out,
        "  method {}{}{}({}) : {}",
        if m.is_static { "static " } else { "" },
        if m.visibility == Visibility::NonPublic { "nonpublic " } else { "" },
        m.name,
        params.join(", "),
        p.ret_name(m.ret)
    );
    match &m.body {
        Body::Unmodeled => out.push_str(" unmodeled\n"),
        Body::Native => out.push_str(" native\n"),
        Body::Statements(stmts) => {
            out.push_str(" {\n");
            for &v in &m.locals {
                let _ = writeln!(out, "    var {} : {}", p.var(v).name, p.ty_name(p.var(v).ty));
            }
            for s in stmts {
                let _ = writeln!(out, "    {}", render_stmt(p, &s.kind));
            }
            out.push_str("  }\n");
        }
    }
}

/// One statement in surface syntax.
pub(crate) fn render_stmt(p: &Program, k: &StmtKind) -> String {
    let n = |v: VarId| p.var(v).name.clone();
    let list = |vs: &[VarId]| vs.iter().map(|&v| n(v)).collect::<Vec<_>>().join(", ");
    let assign = |lhs: Option<VarId>, rhs: String| match lhs {
        Some(l) => format!("{} = {rhs}", n(l)),
        None => rhs,
    };
    let operand = |o: Operand| match o {
        Operand::Null => "null".to_string(),
        Operand::Var(v) => n(v),
    };
    match k {
        StmtKind::Alloc { lhs, ty } => format!("{} = new {}", n(*lhs), p.type_name(*ty)),
        StmtKind::ArrayAlloc { lhs, elem } => format!("{} = newarray {}", n(*lhs), p.type_name(*elem)),
        StmtKind::Copy { lhs, rhs } => format!("{} = {}", n(*lhs), n(*rhs)),
        StmtKind::Load { lhs, base, field } => format!("{} = {}.{field}", n(*lhs), n(*base)),
        StmtKind::Store { base, field, rhs } => format!("{}.{field} = {}", n(*base), n(*rhs)),
        StmtKind::ArrayLoad { lhs, base } => format!("{} = {}[*]", n(*lhs), n(*base)),
        StmtKind::ArrayStore { base, index, rhs } => match index {
            ArrayIndex::Any => format!("{}[*] = {}", n(*base), n(*rhs)),
            ArrayIndex::At(i) => format!("{}[{i}] = {}", n(*base), n(*rhs)),
        },
        StmtKind::StringConst { lhs, value } => format!("{} = {}", n(*lhs), quote(value)),
        StmtKind::UnknownString { lhs } => format!("{} = unknownstring", n(*lhs)),
        StmtKind::NullAssign { lhs } => format!("{} = null", n(*lhs)),
        StmtKind::Cast { lhs, ty, rhs } => format!("{} = ({}) {}", n(*lhs), p.ty_name(*ty), n(*rhs)),
        StmtKind::VirtualCall { lhs, recv, name, args, .. } => {
            assign(*lhs, format!("{}.{name}({})", n(*recv), list(args)))
        }
        StmtKind::StaticCall { lhs, callee, args } => {
            let m = p.method(*callee);
            assign(*lhs, format!("{}.{}({})", p.type_name(m.owner), m.name, list(args)))
        }
        StmtKind::ForName { lhs, name } => format!("{} = Class.forName({})", n(*lhs), n(*name)),
        StmtKind::NewInstance { lhs, class } => format!("{} = {}.newInstance()", n(*lhs), n(*class)),
        StmtKind::GetMethod { lhs, class, name, lits, kind } => {
            let call = if kind.declared_only() { "getDeclaredMethod" } else { "getMethod" };
            let lits = match lits {
                TypeLits::Unknown => String::new(),
                TypeLits::Exact(tys) => {
                    format!(", [{}]", tys.iter().map(|t| p.ty_name(*t)).collect::<Vec<_>>().join(", "))
                }
            };
            format!("{} = {}.{call}({}{lits})", n(*lhs), n(*class), n(*name))
        }
        StmtKind::GetMethods { lhs, class, kind } => {
            let call = if kind.declared_only() { "getDeclaredMethods" } else { "getMethods" };
            format!("{} = {}.{call}()", n(*lhs), n(*class))
        }
        StmtKind::Invoke { lhs, method, recv, args } => {
            assign(*lhs, format!("{}.invoke({}, {})", n(*method), operand(*recv), operand(*args)))
        }
        StmtKind::Branch { target } => format!("if * goto {target}"),
        StmtKind::Goto { target } => format!("goto {target}"),
        StmtKind::Label { name } => format!("{name}:"),
        StmtKind::Return { value: Some(v) } => format!("return {}", n(*v)),
        StmtKind::Return { value: None } => "return".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_structure() {
        let src = r#"
interface I {
  method run() : void unmodeled
}
class B {
  field next : B
  method nonpublic m(x: B) : B {
    var y : B
    y = x.next
    return y
  }
}
class A extends B implements I {
  method run() : void {
    var s : java.lang.String
    L:
    s = "quote\"tab\t"
    if * goto L
  }
  method static main() : void {
    var a : A
    var arr : java.lang.Object[]
    a = new A
    arr = newarray java.lang.Object
    arr[2] = a
    var c : java.lang.Class
    var n : java.lang.String
    n = unknownstring
    c = Class.forName(n)
    a.run()
  }
}
"#;
        let p1 = parse_program(src).unwrap();
        let printed = print_program(&p1);
        let p2 = parse_program(&printed).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(printed, print_program(&p2));
    }
}
