//! Random closed programs for differential testing.
//!
//! Programs have at most eight classes in single-inheritance trees at most
//! three levels deep. Instance method names fix their arity (`m0`, `m3`
//! take none, `m1` one, `m2` two), so there is no overloading; every
//! parameter, field and return is `Object`-typed to keep reflective calls
//! well-typed. Reflective names are constants, branch-selected constants,
//! or (with `env`) values only the interpreter's environment supplies.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

pub const ENV_METHOD: &str = "Env.str";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenConfig {
    pub max_classes: usize,
    /// Upper bound on statements over all bodies, labels and returns
    /// included.
    pub max_stmts: usize,
    pub reflection: bool,
    /// Draw some reflective names from the environment method.
    pub env: bool,
}

impl GenConfig {
    pub fn plain() -> Self {
        GenConfig { max_classes: 6, max_stmts: 50, reflection: false, env: false }
    }

    pub fn reflective() -> Self {
        GenConfig { max_classes: 8, max_stmts: 80, reflection: true, env: false }
    }

    pub fn with_env() -> Self {
        GenConfig { env: true, ..Self::reflective() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub source: String,
    pub entry: &'static str,
    /// Values the environment method returns for each key.
    pub env: BTreeMap<String, Vec<String>>,
    pub stmt_count: usize,
}

const METHODS: [(&str, usize); 4] = [("m0", 0), ("m1", 1), ("m2", 2), ("m3", 0)];
const OBJ: &str = "java.lang.Object";
const NOBJ: usize = 4;
/// Environment results each get their own variable: a variable that also
/// receives a constant elsewhere never looks empty to the analysis.
const NENV: usize = 4;

struct Class {
    parent: Option<usize>,
    methods: Vec<usize>,
    statics: usize,
}

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    classes: Vec<Class>,
    budget: usize,
    labels: usize,
    keys: usize,
    env_vars: usize,
    /// Variables assigned so far in the current body; reads prefer these so
    /// that most points-to sets end up non-empty.
    defined: Vec<String>,
    defined_t: Vec<usize>,
    env: BTreeMap<String, Vec<String>>,
    cfg: GenConfig,
}

impl<R: Rng> Gen<'_, R> {
    fn ancestors(&self, k: usize) -> Vec<usize> {
        let mut out = vec![k];
        let mut cur = self.classes[k].parent;
        while let Some(c) = cur {
            out.push(c);
            cur = self.classes[c].parent;
        }
        out
    }

    fn depth(&self, k: usize) -> usize {
        self.ancestors(k).len()
    }

    /// Instance methods callable on `Ck`: declared there or inherited.
    fn callable(&self, k: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.ancestors(k).iter().flat_map(|&a| self.classes[a].methods.clone()).collect();
        v.sort();
        v.dedup();
        v
    }

    /// A variable to assign.
    fn obj(&mut self) -> String {
        let o = format!("o{}", self.rng.gen_range(0..NOBJ));
        if !self.defined.contains(&o) {
            self.defined.push(o.clone());
        }
        o
    }

    /// A variable to read.
    fn read(&mut self) -> String {
        match self.defined.choose(self.rng) {
            Some(o) if self.rng.gen_bool(0.8) => o.clone(),
            _ => format!("o{}", self.rng.gen_range(0..NOBJ)),
        }
    }

    fn class(&mut self) -> usize {
        self.rng.gen_range(0..self.classes.len())
    }

    /// A class whose `t` variable is read.
    fn read_class(&mut self) -> usize {
        match self.defined_t.choose(self.rng) {
            Some(&k) if self.rng.gen_bool(0.8) => k,
            _ => self.class(),
        }
    }

    fn define_t(&mut self, k: usize) {
        if !self.defined_t.contains(&k) {
            self.defined_t.push(k);
        }
    }

    fn fresh_label(&mut self) -> String {
        self.labels += 1;
        format!("L{}", self.labels)
    }

    fn env_var(&mut self) -> Option<String> {
        (self.env_vars < NENV).then(|| {
            self.env_vars += 1;
            format!("e{}", self.env_vars - 1)
        })
    }

    fn args(&mut self, n: usize) -> String {
        (0..n).map(|_| self.read()).collect::<Vec<_>>().join(", ")
    }

    /// Loads a class name into a string variable: a constant, one of two
    /// constants, or an environment value. Returns the variable and whether
    /// the environment was used.
    fn class_name(&mut self, out: &mut Vec<String>, bound: Option<usize>) -> (String, bool) {
        let env_var = if self.cfg.env && self.rng.gen_bool(1.0 / 3.0) { self.env_var() } else { None };
        let choice = if env_var.is_some() { 2 } else { self.rng.gen_range(0..2) };
        let pick = |g: &mut Self| -> usize {
            match bound {
                Some(b) => {
                    let subs: Vec<usize> = (0..g.classes.len()).filter(|&c| g.ancestors(c).contains(&b)).collect();
                    *subs.choose(g.rng).expect("bound is its own subtype")
                }
                None => g.class(),
            }
        };
        match choice {
            0 => {
                let c = pick(self);
                out.push(format!("s1 = \"C{c}\""));
                ("s1".into(), false)
            }
            1 => {
                let (a, b) = (pick(self), pick(self));
                let l = self.fresh_label();
                out.push(format!("s1 = \"C{a}\""));
                out.push(format!("if * goto {l}"));
                out.push(format!("s1 = \"C{b}\""));
                out.push(format!("{l}:"));
                ("s1".into(), false)
            }
            _ => {
                self.keys += 1;
                let key = format!("k{}", self.keys);
                let n = self.rng.gen_range(1..=3);
                // Some values may fail the cast downstream; those paths are dropped.
                let values = (0..n).map(|_| format!("C{}", if self.rng.gen_bool(0.7) { pick(self) } else { self.class() })).collect();
                self.env.insert(key.clone(), values);
                out.push(format!("s0 = \"{key}\""));
                let v = env_var.expect("chosen above");
                out.push(format!("{v} = {ENV_METHOD}(s0)"));
                (v, true)
            }
        }
    }

    /// Picks a method reachable from `Ck` and loads its name into `s2`.
    /// Static targets are only offered when the class name is known: with
    /// neither class nor receiver there is nothing to resolve from.
    fn method_name(&mut self, out: &mut Vec<String>, class: usize, from_env: bool, statics: bool) -> Option<(String, usize, bool)> {
        let mut cands: Vec<(String, usize, bool)> =
            self.callable(class).into_iter().map(|i| (METHODS[i].0.to_string(), METHODS[i].1, false)).collect();
        if statics {
            for a in self.ancestors(class) {
                cands.push((format!("s{a}"), self.classes[a].statics, true));
            }
        }
        let (name, arity, is_static) = cands.choose(self.rng)?.clone();
        let var = match from_env.then(|| self.env_var()).flatten() {
            Some(v) => {
                self.keys += 1;
                let key = format!("k{}", self.keys);
                self.env.insert(key.clone(), vec![name.clone()]);
                out.push(format!("s0 = \"{key}\""));
                out.push(format!("{v} = {ENV_METHOD}(s0)"));
                v
            }
            None => {
                out.push(format!("s2 = \"{name}\""));
                "s2".into()
            }
        };
        Some((var, arity, is_static))
    }

    fn reflective(&mut self, out: &mut Vec<String>) {
        let bound = self.class();
        let (name_var, env) = self.class_name(out, Some(bound));
        out.push(format!("c0 = Class.forName({name_var})"));
        let o = self.obj();
        out.push(format!("{o} = c0.newInstance()"));
        // A cast right after newInstance bounds unknown classes.
        if env || self.rng.gen_bool(0.5) {
            self.define_t(bound);
            out.push(format!("t{bound} = (C{bound}) {o}"));
        }
        if !self.rng.gen_bool(0.6) {
            return;
        }
        let method_env = self.cfg.env && self.rng.gen_bool(0.3);
        let Some((mvar, arity, is_static)) = self.method_name(out, bound, method_env, !env) else { return };
        if self.rng.gen_bool(0.2) {
            out.push("ms = c0.getMethods()".into());
            out.push("mt = ms[*]".into());
        } else {
            let lits = if self.rng.gen_bool(0.5) {
                "unknown".to_string()
            } else {
                format!("[{}]", vec![OBJ; arity].join(", "))
            };
            out.push(format!("mt = c0.getMethod({mvar}, {lits})"));
        }
        let args = if arity == 0 && self.rng.gen_bool(0.5) {
            "null".to_string()
        } else {
            out.push("ar = newarray java.lang.Object".into());
            for i in 0..arity {
                let v = self.read();
                out.push(format!("ar[{i}] = {v}"));
            }
            "ar".to_string()
        };
        let recv = if is_static {
            "null".to_string()
        } else if env {
            format!("t{bound}")
        } else {
            o
        };
        let lhs = self.obj();
        out.push(format!("{lhs} = mt.invoke({recv}, {args})"));
    }

    fn stmt(&mut self, out: &mut Vec<String>, open: &mut Vec<String>) {
        let n = self.classes.len();
        match self.rng.gen_range(0..12) {
            0 | 1 => {
                let (o, k) = (self.obj(), self.class());
                out.push(format!("{o} = new C{k}"));
            }
            2 => {
                let k = self.class();
                self.define_t(k);
                out.push(format!("t{k} = new C{k}"));
            }
            3 => {
                let b = self.read();
                let a = self.obj();
                out.push(format!("{a} = {b}"));
            }
            4 => {
                if self.rng.gen_bool(0.5) {
                    let k = self.read_class();
                    let o = self.obj();
                    out.push(format!("{o} = t{k}"));
                } else {
                    let (o, k) = (self.read(), self.class());
                    self.define_t(k);
                    out.push(format!("t{k} = (C{k}) {o}"));
                }
            }
            5 => {
                let k = self.read_class();
                let anc = self.ancestors(k);
                let f = *anc.choose(self.rng).expect("nonempty");
                if self.rng.gen_bool(0.5) {
                    let o = self.obj();
                    out.push(format!("{o} = t{k}.g{f}"));
                } else {
                    let o = self.read();
                    out.push(format!("t{k}.g{f} = {o}"));
                }
            }
            6 | 7 => {
                let k = self.read_class();
                let ms = self.callable(k);
                if let Some(&m) = ms.choose(self.rng) {
                    let (name, arity) = METHODS[m];
                    let args = self.args(arity);
                    let o = self.obj();
                    out.push(format!("{o} = t{k}.{name}({args})"));
                }
            }
            8 => {
                let k = self.rng.gen_range(0..n);
                let arity = self.classes[k].statics;
                let args = self.args(arity);
                let o = self.obj();
                out.push(format!("{o} = C{k}.s{k}({args})"));
            }
            9 => {
                let l = self.fresh_label();
                out.push(format!("if * goto {l}"));
                open.push(l);
            }
            10 if !open.is_empty() => {
                let l = open.remove(0);
                out.push(format!("{l}:"));
            }
            _ => {
                if self.cfg.reflection {
                    self.reflective(out);
                } else {
                    let b = self.read();
                    let a = self.obj();
                    out.push(format!("{a} = {b}"));
                }
            }
        }
    }

    fn body(&mut self, size: usize, ret: bool, params: &[String]) -> Vec<String> {
        self.env_vars = 0;
        self.defined = params.to_vec();
        self.defined_t.clear();
        let mut out = Vec::new();
        let mut open = Vec::new();
        // Give calls and field accesses something to work on.
        for _ in 0..size / 4 {
            let k = self.class();
            self.define_t(k);
            out.push(format!("t{k} = new C{k}"));
        }
        while out.len() < size && self.budget > 0 {
            let before = out.len();
            self.stmt(&mut out, &mut open);
            self.budget = self.budget.saturating_sub(out.len() - before);
        }
        for l in open {
            out.push(format!("{l}:"));
        }
        if ret {
            let o = self.read();
            out.push(format!("return {o}"));
        }
        out
    }

    fn locals(&self, params: &[String]) -> String {
        let mut s = String::new();
        for i in 0..NOBJ {
            let name = format!("o{i}");
            if !params.contains(&name) {
                let _ = writeln!(s, "    var {name} : {OBJ}");
            }
        }
        for k in 0..self.classes.len() {
            let _ = writeln!(s, "    var t{k} : C{k}");
        }
        for i in 0..3 {
            let _ = writeln!(s, "    var s{i} : java.lang.String");
        }
        if self.cfg.env {
            for i in 0..NENV {
                let _ = writeln!(s, "    var e{i} : java.lang.String");
            }
        }
        s.push_str("    var c0 : java.lang.Class\n    var mt : java.lang.reflect.Method\n");
        s.push_str("    var ms : java.lang.reflect.Method[]\n    var ar : java.lang.Object[]\n");
        s
    }
}

pub fn generate<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Generated {
    // Rejection sampling keeps the statement bound exact.
    loop {
        let g = attempt(rng, cfg);
        if g.stmt_count <= cfg.max_stmts {
            return g;
        }
    }
}

fn attempt<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Generated {
    let n = rng.gen_range(2..=cfg.max_classes.max(2));
    let mut g = Gen { rng, classes: Vec::new(), budget: cfg.max_stmts * 3 / 4, labels: 0, keys: 0, env_vars: 0, defined: Vec::new(), defined_t: Vec::new(), env: BTreeMap::new(), cfg: *cfg };
    for k in 0..n {
        let parents: Vec<usize> = (0..k).filter(|&j| g.depth(j) < 3).collect();
        let parent = if !parents.is_empty() && g.rng.gen_bool(0.6) { parents.choose(g.rng).copied() } else { None };
        let methods: Vec<usize> = (0..METHODS.len()).filter(|_| g.rng.gen_bool(0.4)).collect();
        let statics = g.rng.gen_range(0..2);
        g.classes.push(Class { parent, methods, statics });
    }
    let mut src = String::new();
    let mut count = 0;
    if cfg.env {
        src.push_str("class Env {\n  method static str(k: java.lang.String) : java.lang.String unmodeled\n}\n\n");
    }
    let main_size = g.rng.gen_range(8..=16);
    let main = g.body(main_size, false, &[]);
    let _ = writeln!(src, "class Main {{\n  method static main() : void {{\n{}", g.locals(&[]));
    count += main.len();
    for l in &main {
        let _ = writeln!(src, "    {l}");
    }
    src.push_str("  }\n}\n\n");
    for k in 0..n {
        let head = match g.classes[k].parent {
            Some(p) => format!("class C{k} extends C{p} {{\n"),
            None => format!("class C{k} {{\n"),
        };
        src.push_str(&head);
        let _ = writeln!(src, "  field g{k} : {OBJ}");
        let ms = g.classes[k].methods.clone();
        for m in ms {
            let (name, arity) = METHODS[m];
            let params: Vec<String> = (0..arity).map(|i| format!("o{i}")).collect();
            let sig = params.iter().map(|p| format!("{p}: {OBJ}")).collect::<Vec<_>>().join(", ");
            let size = g.rng.gen_range(1..=5);
            let body = g.body(size, true, &params);
            count += body.len();
            let _ = writeln!(src, "  method {name}({sig}) : {OBJ} {{\n{}", g.locals(&params));
            for l in &body {
                let _ = writeln!(src, "    {l}");
            }
            src.push_str("  }\n");
        }
        let arity = g.classes[k].statics;
        let params: Vec<String> = (0..arity).map(|i| format!("o{i}")).collect();
        let sig = params.iter().map(|p| format!("{p}: {OBJ}")).collect::<Vec<_>>().join(", ");
        let size = g.rng.gen_range(0..=4);
        let body = g.body(size, true, &params);
        count += body.len();
        let _ = writeln!(src, "  method static s{k}({sig}) : {OBJ} {{\n{}", g.locals(&params));
        for l in &body {
            let _ = writeln!(src, "    {l}");
        }
        src.push_str("  }\n}\n\n");
    }
    Generated { source: src, entry: "Main.main", env: g.env, stmt_count: count }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_programs_parse() {
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for cfg in [GenConfig::plain(), GenConfig::reflective(), GenConfig::with_env()] {
                let g = generate(&mut rng, &cfg);
                if let Err(e) = parse_program(&g.source) {
                    panic!("seed {seed}: {e}\n{}", g.source);
                }
            }
        }
    }

    #[test]
    fn plain_programs_are_small_and_reflection_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let g = generate(&mut rng, &GenConfig::plain());
            let p = parse_program(&g.source).unwrap();
            let stmts: usize = p.methods.iter().map(|m| m.body.statements().len()).sum();
            assert_eq!(stmts, g.stmt_count);
            assert!(stmts <= 50, "{stmts}");
            assert_eq!(p.reflective_sites(p.methods.iter().map(|m| m.id)).count(), 0);
        }
    }
}
