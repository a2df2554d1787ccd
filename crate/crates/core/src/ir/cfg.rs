use std::collections::{BTreeSet, HashMap, VecDeque};

use super::*;

/// Node index: statement `i` of the body is node `i`; the synthetic exit is
/// node `len`.
pub type CfgNode = usize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CfgError {
    #[error("method has no statement body")]
    NoBody,
    #[error("jump to undefined label `{0}`")]
    UndefinedLabel(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfg {
    succs: Vec<Vec<CfgNode>>,
    preds: Vec<Vec<CfgNode>>,
}

impl Cfg {
    pub fn build(method: &MethodModel) -> Result<Cfg, CfgError> {
        let Body::Statements(stmts) = &method.body else {
            return Err(CfgError::NoBody);
        };
        Self::from_stmts(stmts)
    }

    pub fn from_stmts(stmts: &[Stmt]) -> Result<Cfg, CfgError> {
        let n = stmts.len();
        let labels: HashMap<&str, usize> = stmts
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match &s.kind {
                StmtKind::Label { name } => Some((name.as_str(), i)),
                _ => None,
            })
            .collect();
        let target = |l: &String| labels.get(l.as_str()).copied().ok_or_else(|| CfgError::UndefinedLabel(l.clone()));
        let mut succs = vec![Vec::new(); n + 1];
        for (i, s) in stmts.iter().enumerate() {
            succs[i] = match &s.kind {
                StmtKind::Goto { target: l } => vec![target(l)?],
                StmtKind::Branch { target: l } => {
                    let t = target(l)?;
                    if t == i + 1 { vec![i + 1] } else { vec![i + 1, t] }
                }
                StmtKind::Return { .. } => vec![n],
                _ => vec![i + 1],
            };
        }
        let mut preds = vec![Vec::new(); n + 1];
        for (i, ss) in succs.iter().enumerate() {
            for &s in ss {
                preds[s].push(i);
            }
        }
        Ok(Cfg { succs, preds })
    }

    pub fn exit(&self) -> CfgNode {
        self.succs.len() - 1
    }

    pub fn entry(&self) -> CfgNode {
        0
    }

    pub fn len(&self) -> usize {
        self.succs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succs.len() == 1
    }

    pub fn succs(&self, n: CfgNode) -> &[CfgNode] {
        &self.succs[n]
    }

    pub fn preds(&self, n: CfgNode) -> &[CfgNode] {
        &self.preds[n]
    }

    fn reach(&self, from: CfgNode, forward: bool) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut work = vec![from];
        seen[from] = true;
        while let Some(n) = work.pop() {
            let next = if forward { &self.succs[n] } else { &self.preds[n] };
            for &m in next {
                if !seen[m] {
                    seen[m] = true;
                    work.push(m);
                }
            }
        }
        seen
    }

    /// Statements not reachable from the entry.
    pub fn unreachable(&self) -> Vec<CfgNode> {
        let r = self.reach(self.entry(), true);
        (0..self.exit()).filter(|&i| !r[i]).collect()
    }

    /// Statements from which exit is not reachable (infinite loops).
    pub fn cannot_reach_exit(&self) -> Vec<CfgNode> {
        let r = self.reach(self.exit(), false);
        (0..self.exit()).filter(|&i| !r[i]).collect()
    }
}

/// Forward must-alias sets of the value defined at `site`, tracked through
/// copies and casts. `None` marks nodes not (yet) reached from the site.
fn alias_sets(stmts: &[Stmt], cfg: &Cfg, site: CfgNode, x: VarId) -> Vec<Option<BTreeSet<VarId>>> {
    let transfer = |n: CfgNode, mut set: BTreeSet<VarId>| {
        if n == site {
            return BTreeSet::from([x]);
        }
        if n == cfg.exit() {
            return set;
        }
        match &stmts[n].kind {
            StmtKind::Copy { lhs, rhs } | StmtKind::Cast { lhs, rhs, .. } => {
                if set.contains(rhs) {
                    set.insert(*lhs);
                } else {
                    set.remove(lhs);
                }
            }
            k => {
                if let Some(d) = k.def() {
                    set.remove(&d);
                }
            }
        }
        set
    };
    let mut ins: Vec<Option<BTreeSet<VarId>>> = vec![None; cfg.len()];
    let mut outs: Vec<Option<BTreeSet<VarId>>> = vec![None; cfg.len()];
    outs[site] = Some(BTreeSet::from([x]));
    let mut work: VecDeque<CfgNode> = cfg.succs(site).iter().copied().collect();
    while let Some(n) = work.pop_front() {
        let mut meet: Option<BTreeSet<VarId>> = None;
        for &p in cfg.preds(n) {
            if let Some(o) = &outs[p] {
                meet = Some(match meet {
                    None => o.clone(),
                    Some(m) => m.intersection(o).copied().collect(),
                });
            }
        }
        let Some(inset) = meet else { continue };
        let out = transfer(n, inset.clone());
        ins[n] = Some(inset);
        if outs[n].as_ref() != Some(&out) {
            outs[n] = Some(out);
            work.extend(cfg.succs(n).iter().copied());
        }
    }
    ins
}

/// Type bound implied by casts of the value produced at a `newInstance` or
/// `invoke` site: `T` if every path from the site to the method exit passes
/// a cast `_ = (T) y` where `y` must alias the site's result; `Object`
/// otherwise. Among the nearest casts, the most general type wins; if they
/// are unrelated the result degrades to `Object`.
pub fn post_dominating_cast(p: &Program, site: SiteId) -> TypeId {
    let object = p.builtins.object;
    let Some(loc) = p.site(site) else { return object };
    let stmts = p.method(loc.method).body.statements();
    let x = match &stmts[loc.index].kind {
        StmtKind::NewInstance { lhs, .. } => *lhs,
        StmtKind::Invoke { lhs: Some(lhs), .. } => *lhs,
        _ => return object,
    };
    let Ok(cfg) = Cfg::from_stmts(stmts) else { return object };
    let start = loc.index;
    let ins = alias_sets(stmts, &cfg, start, x);
    let qualifies = |n: CfgNode| {
        n != cfg.exit()
            && matches!(&stmts[n].kind, StmtKind::Cast { rhs, .. }
                if ins[n].as_ref().is_some_and(|s| s.contains(rhs)))
    };
    // Explore from the site, stopping at qualifying casts.
    let mut seen = vec![false; cfg.len()];
    let mut first_hit = BTreeSet::new();
    let mut work: Vec<CfgNode> = cfg.succs(start).to_vec();
    let mut reaches_exit = false;
    while let Some(n) = work.pop() {
        if seen[n] {
            continue;
        }
        seen[n] = true;
        if n == cfg.exit() {
            reaches_exit = true;
            continue;
        }
        if qualifies(n) {
            first_hit.insert(n);
            continue;
        }
        work.extend(cfg.succs(n).iter().copied());
    }
    if reaches_exit || first_hit.is_empty() {
        return object;
    }
    let tys: Vec<TypeId> = first_hit
        .iter()
        .filter_map(|&n| match &stmts[n].kind {
            StmtKind::Cast { ty: Ty::Class(t), .. } => Some(*t),
            _ => None,
        })
        .collect();
    if tys.len() != first_hit.len() {
        return object;
    }
    let sub = |a: TypeId, b: TypeId| is_subtype(p, a, b);
    tys.iter()
        .copied()
        .find(|&cand| tys.iter().all(|&t| sub(t, cand)))
        .unwrap_or(object)
}

fn is_subtype(p: &Program, a: TypeId, b: TypeId) -> bool {
    if a == b || b == p.builtins.object {
        return true;
    }
    let mut stack = vec![a];
    let mut seen = BTreeSet::new();
    while let Some(t) = stack.pop() {
        if t == b {
            return true;
        }
        if seen.insert(t) {
            let c = p.class(t);
            stack.extend(c.superclass);
            stack.extend(c.interfaces.iter().copied());
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prog(body: &str) -> Program {
        let src = format!(
            "class B {{}}\nclass C extends B {{}}\nclass A {{\n method static main() : void {{\n var c : java.lang.Class\n var x : java.lang.Object\n var y : B\n var z : java.lang.Object\n{body}\n }}\n}}"
        );
        parse_program(&src).unwrap()
    }

    fn main_cfg(p: &Program) -> Cfg {
        Cfg::build(p.method(p.entry("A.main").unwrap())).unwrap()
    }

    fn cast_at(p: &Program, site: u32) -> String {
        p.type_name(post_dominating_cast(p, SiteId(site))).to_string()
    }

    #[test]
    fn straight_line_chain() {
        let p = prog("x = null\nz = x\nx = z");
        let cfg = main_cfg(&p);
        assert_eq!(cfg.len(), 4);
        for i in 0..3 {
            assert_eq!(cfg.succs(i), &[i + 1]);
        }
        assert!(cfg.succs(cfg.exit()).is_empty());
        assert!(cfg.unreachable().is_empty() && cfg.cannot_reach_exit().is_empty());
    }

    #[test]
    fn branch_diamond() {
        let p = prog("if * goto L\nx = null\nL:\nz = x");
        let cfg = main_cfg(&p);
        assert_eq!(cfg.succs(0), &[1, 2]);
        assert_eq!(cfg.preds(2), &[0, 1]);
    }

    #[test]
    fn return_and_implicit_exit() {
        let p = prog("return\nx = null");
        let cfg = main_cfg(&p);
        assert_eq!(cfg.succs(0), &[2]);
        assert_eq!(cfg.succs(1), &[2]);
        assert_eq!(cfg.unreachable(), vec![1]);
    }

    #[test]
    fn infinite_loop_reported() {
        let p = prog("L:\ngoto L");
        assert_eq!(main_cfg(&p).cannot_reach_exit(), vec![0, 1]);
    }

    #[test]
    fn undefined_label() {
        let stmts = vec![Stmt { site: SiteId(1), kind: StmtKind::Goto { target: "Q".into() } }];
        assert_eq!(Cfg::from_stmts(&stmts), Err(CfgError::UndefinedLabel("Q".into())));
    }

    #[test]
    fn immediate_cast() {
        assert_eq!(cast_at(&prog("x = c.newInstance()\ny = (B) x"), 1), "B");
    }

    #[test]
    fn no_cast_is_object() {
        assert_eq!(cast_at(&prog("x = c.newInstance()"), 1), OBJECT);
    }

    #[test]
    fn cast_on_one_branch_only() {
        let p = prog("x = c.newInstance()\nif * goto L\ny = (B) x\nL:");
        assert_eq!(cast_at(&p, 1), OBJECT);
    }

    #[test]
    fn cast_on_both_branches() {
        let p = prog("x = c.newInstance()\nif * goto L\ny = (C) x\ngoto E\nL:\ny = (B) x\nE:");
        assert_eq!(cast_at(&p, 1), "B");
    }

    #[test]
    fn cast_through_copy_chain() {
        assert_eq!(cast_at(&prog("x = c.newInstance()\nz = x\ny = (B) z"), 1), "B");
    }

    #[test]
    fn redefinition_kills_alias() {
        assert_eq!(cast_at(&prog("x = c.newInstance()\nx = null\ny = (B) x"), 1), OBJECT);
        assert_eq!(cast_at(&prog("x = c.newInstance()\nz = x\nz = null\ny = (B) z"), 1), OBJECT);
    }

    #[test]
    fn alias_lost_on_one_path() {
        let p = prog("x = c.newInstance()\nif * goto L\nz = x\nL:\ny = (B) z");
        assert_eq!(cast_at(&p, 1), OBJECT);
    }
}
