use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::driver::Analysis;
use super::rules::{Rule, SiteCache};
use super::Mode;
use crate::hierarchy::TypeOrUnknown;
use crate::ir::{MethodId, Operand, ReflectiveKind, SiteId, StmtKind, Ty, VarId};
use crate::pta::{AbstractObject, CallKind, FieldKey, MethodMeta, ObjId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SiteStatus {
    Resolved,
    PartiallyResolved,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Target {
    pub name: String,
    pub rules: BTreeSet<Rule>,
    /// Weakest mode that already finds this target.
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SiteReport {
    pub site: SiteId,
    pub kind: ReflectiveKind,
    pub method: String,
    pub status: SiteStatus,
    pub targets: Vec<Target>,
    pub rules: BTreeSet<Rule>,
}

impl SiteReport {
    pub fn target_names(&self) -> BTreeSet<&str> {
        self.targets.iter().map(|t| t.name.as_str()).collect()
    }
}

#[derive(Default)]
struct Collect {
    targets: BTreeMap<String, BTreeSet<Rule>>,
    rules: BTreeSet<Rule>,
    /// Some input is still an unknown-class metaobject.
    residue: bool,
}

impl Analysis<'_> {
    fn ids(&self, v: VarId) -> Vec<ObjId> {
        self.pta.var_pts.get(&v).map(|s| s.iter().copied().collect()).unwrap_or_default()
    }

    fn rules_of(&self, o: &AbstractObject) -> BTreeSet<Rule> {
        self.obj_rules.get(o).cloned().unwrap_or_default()
    }

    fn metas(&self, objs: impl IntoIterator<Item = ObjId>) -> Vec<MethodMeta> {
        objs.into_iter()
            .filter_map(|o| match self.pta.object(o) {
                AbstractObject::MethodMeta(m) => Some(m.clone()),
                _ => None,
            })
            .collect()
    }

    fn meta_targets(&self, c: &mut Collect, metas: &[MethodMeta]) {
        let (p, h) = (self.program, self.hierarchy);
        for m in metas {
            let rules = self.rules_of(&AbstractObject::MethodMeta(m.clone()));
            c.rules.extend(&rules);
            if m.class == TypeOrUnknown::Unknown {
                c.residue = true;
                continue;
            }
            for t in h.mtd_lookup(p, m.class, &m.sig, m.scope) {
                c.targets.entry(p.method_sig(t)).or_default().extend(&rules);
            }
        }
    }

    fn collect(&self, cache: &mut SiteCache, site: SiteId) -> Collect {
        let (p, h) = (self.program, self.hierarchy);
        let mut c = Collect::default();
        let Some(stmt) = p.stmt(site) else { return c };
        match &stmt.kind {
            StmtKind::ForName { lhs, .. } => {
                for o in self.pta.var(*lhs) {
                    let AbstractObject::ClassMeta(cm) = o else { continue };
                    let rules = self.rules_of(o);
                    c.rules.extend(&rules);
                    match cm {
                        TypeOrUnknown::Known(t) => c.targets.entry(p.type_name(*t).to_string()).or_default().extend(rules),
                        TypeOrUnknown::Unknown => c.residue = true,
                    }
                }
            }
            StmtKind::GetMethod { lhs, .. } => {
                let metas = self.metas(self.ids(*lhs));
                self.meta_targets(&mut c, &metas);
            }
            StmtKind::GetMethods { lhs, .. } => {
                for a in self.ids(*lhs) {
                    if !matches!(self.pta.object(a), AbstractObject::Array { site: s, .. } if *s == site) {
                        continue;
                    }
                    let elems = self.pta.field_pts.get(&(a, FieldKey::Arr)).cloned().unwrap_or_default();
                    let metas = self.metas(elems);
                    self.meta_targets(&mut c, &metas);
                }
            }
            StmtKind::NewInstance { lhs, class } => {
                let mut class_rules = BTreeSet::new();
                let mut unknown = false;
                for o in self.pta.var(*class) {
                    if let AbstractObject::ClassMeta(cm) = o {
                        class_rules.extend(self.rules_of(o));
                        unknown |= *cm == TypeOrUnknown::Unknown;
                    }
                }
                for o in self.pta.var(*lhs) {
                    if let AbstractObject::Heap { site: s, ty } = o {
                        if *s == site {
                            let mut rules = self.rules_of(o);
                            rules.extend(&class_rules);
                            c.targets.entry(p.type_name(*ty).to_string()).or_default().extend(rules);
                        }
                    }
                }
                c.rules = class_rules;
                c.rules.insert(Rule::C12New);
                c.residue = unknown && cache.cast(p, site) == h.object() && !self.options.exhaustive;
            }
            StmtKind::Invoke { lhs, method, recv, .. } => {
                let metas = self.metas(self.ids(*method));
                let live: Vec<&MethodMeta> = metas
                    .iter()
                    .filter(|m| m.class != TypeOrUnknown::Unknown && cache.refine(p, self.mode(), site, &m.sig).is_none())
                    .collect();
                let no_receiver = match recv {
                    Operand::Var(y) => !self.pta.var_pts.contains_key(y),
                    Operand::Null => true,
                };
                c.residue = no_receiver && metas.iter().any(|m| m.class == TypeOrUnknown::Unknown);
                let synth_recv: Vec<Ty> = match recv {
                    Operand::Var(y) => self
                        .pta
                        .var(*y)
                        .filter_map(|o| match o {
                            AbstractObject::SynthRecv { site: s, ty } if *s == site => Some(Ty::Class(*ty)),
                            _ => None,
                        })
                        .collect(),
                    Operand::Null => Vec::new(),
                };
                let callees: BTreeSet<MethodId> = self
                    .calls
                    .iter()
                    .filter(|e| e.site == site && e.kind == CallKind::Reflective)
                    .map(|e| e.callee)
                    .collect();
                for callee in callees {
                    let cm = p.method(callee);
                    let mut rules = BTreeSet::from([Rule::TInv]);
                    for m in &live {
                        let denotes = h.mtd_lookup(p, m.class, &m.sig, m.scope).into_iter().any(|m2| {
                            let mm = p.method(m2);
                            if cm.is_static {
                                m2 == callee
                            } else {
                                mm.name == cm.name && mm.param_types == cm.param_types
                            }
                        });
                        if !denotes {
                            continue;
                        }
                        // Include the metaobjects this one was refined from.
                        for a in &metas {
                            let ancestor = (a.class == m.class || a.class == TypeOrUnknown::Unknown)
                                && a.scope == m.scope
                                && (a.sig == m.sig || cache.refine(p, self.mode(), site, &a.sig).as_ref() == Some(&m.sig));
                            if ancestor {
                                rules.extend(self.rules_of(&AbstractObject::MethodMeta(a.clone())));
                            }
                        }
                    }
                    if !cm.is_static
                        && synth_recv.iter().any(|&t| {
                            t.class().and_then(|t| h.dispatch(p, t, &cm.name, &cm.param_types)) == Some(callee)
                        })
                    {
                        rules.insert(Rule::C3InvRecv);
                    }
                    c.rules.extend(&rules);
                    c.targets.insert(p.method_sig(callee), rules);
                }
                if let Some(x) = lhs {
                    if self.pta.var(*x).any(|o| matches!(o, AbstractObject::SynthRet { site: s, .. } if *s == site)) {
                        c.rules.insert(Rule::C3InvRet);
                    }
                }
            }
            _ => {}
        }
        c
    }

    /// One report per reflective site in a reachable method, in site order.
    /// Every target is attributed to this run's mode.
    pub fn site_reports(&self) -> Vec<SiteReport> {
        self.attributed_reports(&[])
    }

    /// Like [`Analysis::site_reports`], attributing each target to the
    /// weakest of `lower` (runs in weaker modes) that already finds it.
    pub fn attributed_reports(&self, lower: &[Analysis<'_>]) -> Vec<SiteReport> {
        let found: Vec<(Mode, BTreeMap<SiteId, BTreeSet<String>>)> = lower
            .iter()
            .map(|a| {
                let m = a.site_reports().into_iter().map(|r| (r.site, r.targets.into_iter().map(|t| t.name).collect()));
                (a.mode(), m.collect())
            })
            .collect();
        let mut cache = SiteCache::default();
        let mut sites: Vec<(SiteId, ReflectiveKind)> =
            self.program.reflective_sites(self.reachable.iter().copied()).collect();
        sites.sort();
        sites
            .into_iter()
            .map(|(site, kind)| {
                let c = self.collect(&mut cache, site);
                let status = if c.targets.is_empty() {
                    SiteStatus::Unresolved
                } else if c.residue {
                    SiteStatus::PartiallyResolved
                } else {
                    SiteStatus::Resolved
                };
                let targets = c
                    .targets
                    .into_iter()
                    .map(|(name, rules)| {
                        let mode = found
                            .iter()
                            .filter(|(_, f)| f.get(&site).is_some_and(|s| s.contains(&name)))
                            .map(|(m, _)| *m)
                            .chain([self.mode()])
                            .min()
                            .expect("non-empty");
                        Target { name, rules, mode }
                    })
                    .collect();
                let method = self.program.method_label(self.program.site(site).expect("site").method);
                SiteReport { site, kind, method, status, targets, rules: c.rules }
            })
            .collect()
    }
}
