//! Serializable analysis reports and mode diffs.
//!
//! Reports go through `serde_json::Value`, whose maps are ordered, so keys
//! come out sorted; every list is built from ordered sets.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::callgraph::{CallGraph, CallGraphError, CallKind};
use crate::hierarchy::Hierarchy;
use crate::ir::{Program, ReflectiveKind, SiteId};
use crate::pta::PtaError;
use crate::reflect::{run_stratified, Analysis, Mode, Options, SiteReport, SiteStatus};
use crate::taint::{analyze_taint, Leak, ResolvedConfig, TaintReport};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Pta(#[from] PtaError),
    #[error(transparent)]
    CallGraph(#[from] CallGraphError),
    #[error("mode subsumption violated between {a} and {b}: {}", .violations.join("; "))]
    Subsumption { a: Mode, b: Mode, violations: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct EdgeEntry {
    pub site: SiteId,
    pub caller: String,
    pub callee: String,
    pub kind: CallKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallGraphSummary {
    pub edge_count: usize,
    pub reachable: Vec<String>,
    pub edges: Vec<EdgeEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnalysisReport {
    pub schema: u32,
    /// SHA-256 of the program text.
    pub digest: String,
    pub mode: Mode,
    pub entry: String,
    pub exhaustive: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points_to: Option<BTreeMap<String, Vec<String>>>,
    pub reflection_sites: Vec<SiteReport>,
    pub call_graph: CallGraphSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub taint: Option<TaintReport>,
    pub warnings: Vec<String>,
}

pub fn digest(source: &str) -> String {
    hex::encode(Sha256::digest(source.as_bytes()))
}

/// What to analyze and what to include in the report.
#[derive(Debug, Clone, Copy)]
pub struct Request<'a> {
    pub source: &'a str,
    pub entry: &'a str,
    pub options: Options,
    pub taint: Option<&'a ResolvedConfig>,
    pub dump_pts: bool,
}

/// Runs the requested mode plus every weaker one, so each target can name
/// the weakest mode that finds it.
pub fn analyze<'p>(p: &'p Program, h: &'p Hierarchy, req: &Request<'_>) -> Result<AnalysisReport, ReportError> {
    let mut lower = Vec::new();
    for m in Mode::ALL.into_iter().filter(|&m| m < req.options.mode) {
        lower.push(run_stratified(p, h, req.entry, &Options { mode: m, ..req.options })?);
    }
    let a = run_stratified(p, h, req.entry, &req.options)?;
    AnalysisReport::build(&a, &lower, req)
}

impl AnalysisReport {
    pub fn build(a: &Analysis<'_>, lower: &[Analysis<'_>], req: &Request<'_>) -> Result<Self, ReportError> {
        let p = a.program;
        let cg = CallGraph::with_reports(a, a.attributed_reports(lower))?;
        let points_to = req.dump_pts.then(|| {
            a.pta
                .var_objects()
                .into_iter()
                .map(|(v, objs)| {
                    let labels: BTreeSet<String> = objs.iter().map(|o| o.label(p)).collect();
                    (p.var_label(v), labels.into_iter().collect())
                })
                .collect()
        });
        let edges: BTreeSet<EdgeEntry> = cg
            .edges
            .iter()
            .map(|e| EdgeEntry { site: e.site, caller: p.method_sig(e.caller), callee: p.method_sig(e.callee), kind: e.kind })
            .collect();
        let reachable: BTreeSet<String> = cg.reachable.iter().map(|&m| p.method_sig(m)).collect();
        let mut warnings: BTreeSet<String> = a.warnings.clone();
        for r in cg.reports() {
            match r.status {
                SiteStatus::Resolved => {}
                SiteStatus::PartiallyResolved => {
                    warnings.insert(format!("site {} ({} in {}) partially resolved", r.site, r.kind, r.method));
                }
                SiteStatus::Unresolved => {
                    warnings.insert(format!("site {} ({} in {}) unresolved", r.site, r.kind, r.method));
                }
            }
        }
        Ok(AnalysisReport {
            schema: SCHEMA,
            digest: digest(req.source),
            mode: a.mode(),
            entry: req.entry.to_string(),
            exhaustive: a.options.exhaustive,
            points_to,
            reflection_sites: cg.reports().to_vec(),
            call_graph: CallGraphSummary {
                edge_count: edges.len(),
                reachable: reachable.into_iter().collect(),
                edges: edges.into_iter().collect(),
            },
            taint: req.taint.map(|cfg| analyze_taint(a, cfg)),
            warnings: warnings.into_iter().collect(),
        })
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report is plain data")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("report is plain data");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        let _ = writeln!(s, "mode {} entry {} digest {}", self.mode, self.entry, &self.digest[..12]);
        let _ = writeln!(
            s,
            "call graph: {} edges, {} reachable methods",
            self.call_graph.edge_count,
            self.call_graph.reachable.len()
        );
        for r in &self.reflection_sites {
            let status = match r.status {
                SiteStatus::Resolved => "resolved",
                SiteStatus::PartiallyResolved => "partially-resolved",
                SiteStatus::Unresolved => "unresolved",
            };
            let _ = writeln!(s, "site {} {} in {}: {status}, {} targets", r.site, r.kind, r.method, r.targets.len());
            for t in &r.targets {
                let rules: Vec<&str> = t.rules.iter().map(|r| r.name()).collect();
                let _ = writeln!(s, "  {} [{}] ({})", t.name, t.mode, rules.join(", "));
            }
        }
        if let Some(t) = &self.taint {
            let _ = writeln!(s, "taint: {} leaks", t.leaks.len());
            for l in &t.leaks {
                let _ = writeln!(s, "  {}@{} -> {}@{} arg {}", l.source, l.source_site, l.sink, l.sink_site, l.param);
            }
        }
        if let Some(pts) = &self.points_to {
            let _ = writeln!(s, "points-to:");
            for (v, objs) in pts {
                let _ = writeln!(s, "  {v} -> {{{}}}", objs.join(", "));
            }
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SiteDiff {
    pub site: SiteId,
    pub kind: ReflectiveKind,
    pub method: String,
    pub targets_only_in_b: Vec<String>,
    pub edges_only_in_b: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModeDiff {
    pub schema: u32,
    pub digest: String,
    pub mode_a: Mode,
    pub mode_b: Mode,
    /// Only sites where B finds something A does not.
    pub sites: Vec<SiteDiff>,
    /// Edges at ordinary call sites, e.g. in code only B reaches.
    pub other_edges_only_in_b: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leaks_only_in_b: Option<Vec<String>>,
}

impl ModeDiff {
    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
            && self.other_edges_only_in_b.is_empty()
            && self.leaks_only_in_b.as_ref().is_none_or(|l| l.is_empty())
    }

    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("diff is plain data");
        let mut s = serde_json::to_string_pretty(&v).expect("diff is plain data");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        let _ = writeln!(s, "{} -> {}", self.mode_a, self.mode_b);
        for d in &self.sites {
            let _ = writeln!(s, "site {} {} in {}:", d.site, d.kind, d.method);
            for t in &d.targets_only_in_b {
                let _ = writeln!(s, "  + target {t}");
            }
            for e in &d.edges_only_in_b {
                let _ = writeln!(s, "  + edge {e}");
            }
        }
        for e in &self.other_edges_only_in_b {
            let _ = writeln!(s, "+ edge {e}");
        }
        for l in self.leaks_only_in_b.iter().flatten() {
            let _ = writeln!(s, "+ leak {l}");
        }
        if self.is_empty() {
            s.push_str("no differences\n");
        }
        s
    }
}

fn edge_key(p: &Program, e: &crate::pta::CallEdge) -> String {
    format!("{} -> {} @{}", p.method_sig(e.caller), p.method_sig(e.callee), e.site)
}

fn leak_key(l: &Leak) -> String {
    format!("{}@{} -> {}@{}", l.source, l.source_site, l.sink, l.sink_site)
}

/// Facts B finds beyond A. When A is the weaker mode, anything A finds that
/// B lacks is a subsumption violation.
/// `req.options.mode` is ignored; `dump_pts` too.
pub fn diff_modes(p: &Program, h: &Hierarchy, req: &Request<'_>, a_mode: Mode, b_mode: Mode) -> Result<ModeDiff, ReportError> {
    let a = run_stratified(p, h, req.entry, &Options { mode: a_mode, ..req.options })?;
    let b = run_stratified(p, h, req.entry, &Options { mode: b_mode, ..req.options })?;
    let (ra, rb) = (a.site_reports(), b.site_reports());
    let targets = |rs: &[SiteReport]| -> BTreeMap<SiteId, BTreeSet<String>> {
        rs.iter().map(|r| (r.site, r.targets.iter().map(|t| t.name.clone()).collect())).collect()
    };
    let (ta, tb) = (targets(&ra), targets(&rb));
    let reflective_sites: BTreeSet<SiteId> = rb.iter().map(|r| r.site).chain(ra.iter().map(|r| r.site)).collect();

    let mut violations = Vec::new();
    for (site, names) in &ta {
        for n in names.difference(tb.get(site).unwrap_or(&BTreeSet::new())) {
            violations.push(format!("target {n} at site {site} missing from {b_mode}"));
        }
    }
    for e in a.calls.difference(&b.calls) {
        violations.push(format!("edge {} missing from {b_mode}", edge_key(p, e)));
    }

    let mut sites = Vec::new();
    for r in &rb {
        let empty = BTreeSet::new();
        let new_targets: Vec<String> = tb[&r.site].difference(ta.get(&r.site).unwrap_or(&empty)).cloned().collect();
        let new_edges: Vec<String> =
            b.calls.iter().filter(|e| e.site == r.site && !a.calls.contains(e)).map(|e| edge_key(p, e)).collect();
        if !new_targets.is_empty() || !new_edges.is_empty() {
            sites.push(SiteDiff {
                site: r.site,
                kind: r.kind,
                method: r.method.clone(),
                targets_only_in_b: new_targets,
                edges_only_in_b: new_edges,
            });
        }
    }
    let other_edges_only_in_b = b
        .calls
        .iter()
        .filter(|e| !reflective_sites.contains(&e.site) && !a.calls.contains(e))
        .map(|e| edge_key(p, e))
        .collect();

    let leaks_only_in_b = req.taint.map(|cfg| {
        let la: BTreeSet<String> = analyze_taint(&a, cfg).leaks.iter().map(leak_key).collect();
        let lb: BTreeSet<String> = analyze_taint(&b, cfg).leaks.iter().map(leak_key).collect();
        for l in la.difference(&lb) {
            violations.push(format!("leak {l} missing from {b_mode}"));
        }
        lb.difference(&la).cloned().collect()
    });

    if a_mode <= b_mode && !violations.is_empty() {
        return Err(ReportError::Subsumption { a: a_mode, b: b_mode, violations });
    }
    Ok(ModeDiff { schema: SCHEMA, digest: digest(req.source), mode_a: a_mode, mode_b: b_mode, sites, other_edges_only_in_b, leaks_only_in_b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::ir::parse_program;

    fn report(f: &fixtures::Fixture, mode: Mode, seed: Option<u64>) -> AnalysisReport {
        let p = parse_program(f.source).unwrap();
        let h = Hierarchy::new(&p);
        let opts = Options { seed, ..Options::new(mode) };
        analyze(&p, &h, &Request { source: f.source, entry: f.entry, options: opts, taint: None, dump_pts: true }).unwrap()
    }

    #[test]
    fn keys_sorted_and_schema_present() {
        let json = report(&fixtures::ACTIVITIES, Mode::Ripple, None).to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["schema"], 1);
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn seeds_do_not_change_bytes() {
        let a = report(&fixtures::MEDIA, Mode::Ripple, None).to_json();
        let b = report(&fixtures::MEDIA, Mode::Ripple, Some(7)).to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn targets_attributed_to_weakest_mode() {
        let modes = |r: &AnalysisReport| -> BTreeSet<Mode> {
            r.reflection_sites.iter().flat_map(|s| s.targets.iter().map(|t| t.mode)).collect()
        };
        let constant = fixtures::Fixture {
            name: "constant",
            source: "class B {\n}\nclass A {\n  method static main() : void {\n    var n : java.lang.String\n    var c : java.lang.Class\n    n = \"B\"\n    c = Class.forName(n)\n  }\n}\n",
            entry: "A.main",
            taint: None,
        };
        assert_eq!(modes(&report(&constant, Mode::Ripple, None)), BTreeSet::from([Mode::Strinf]));
        // Every newInstance target in activities needs the null-name rule.
        let r = report(&fixtures::ACTIVITIES, Mode::Ripple, None);
        let ni = r.reflection_sites.iter().find(|s| s.kind == ReflectiveKind::NewInstance).unwrap();
        assert!(ni.targets.iter().all(|t| t.mode == Mode::Ripple));
    }

    #[test]
    fn activities_diff_adds_five() {
        let f = &fixtures::ACTIVITIES;
        let p = parse_program(f.source).unwrap();
        let h = Hierarchy::new(&p);
        let req = Request { source: f.source, entry: f.entry, options: Options::default(), taint: None, dump_pts: false };
        let d = diff_modes(&p, &h, &req, Mode::Strinf, Mode::Ripple).unwrap();
        let n: usize = d.sites.iter().filter(|s| s.kind == ReflectiveKind::NewInstance).map(|s| s.targets_only_in_b.len()).sum();
        assert_eq!(n, 5);
        // Reversed, B finds less and nothing is reported as new.
        let r = diff_modes(&p, &h, &req, Mode::Ripple, Mode::Strinf).unwrap();
        assert!(r.sites.iter().all(|s| s.targets_only_in_b.is_empty()));
    }
}
