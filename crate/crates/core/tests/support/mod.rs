#![allow(dead_code)]

pub mod naive_pta;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use refract_core::oracle::generate::{generate, GenConfig, Generated};

/// Program `seed` of a corpus drawn with `cfg`.
pub fn program(cfg: &GenConfig, seed: u64) -> Generated {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate(&mut rng, cfg)
}

/// Reflective corpus: even seeds use constant and branch-chosen names,
/// odd seeds also draw names from the environment.
pub fn reflective(seed: u64) -> (GenConfig, Generated) {
    let cfg = if seed.is_multiple_of(2) { GenConfig::reflective() } else { GenConfig::with_env() };
    (cfg, program(&cfg, seed))
}

use std::collections::BTreeSet;

use refract_core::ir::Program;
use refract_core::reflect::Analysis;
use refract_core::taint::{analyze_taint, ResolvedConfig};

/// Taint setup for generated programs: static methods are sources, the
/// first parameter of every instance method with parameters is a sink.
pub fn generated_taint(p: &Program) -> ResolvedConfig {
    let mut cfg = ResolvedConfig::default();
    for m in &p.methods {
        if p.class(m.owner).builtin || p.type_name(m.owner) == "Main" {
            continue;
        }
        if m.is_static {
            cfg.sources.insert(m.id);
        } else if !m.params.is_empty() {
            cfg.sinks.insert(m.id, BTreeSet::from([0]));
        }
    }
    cfg
}

/// Everything mode subsumption talks about, spelled out so runs compare.
#[derive(Debug, PartialEq, Eq)]
pub struct Facts {
    pub targets: BTreeSet<(u32, String)>,
    pub edges: BTreeSet<(u32, String)>,
    pub leaks: BTreeSet<(u32, u32, String)>,
}

impl Facts {
    pub fn of(a: &Analysis<'_>, taint: Option<&ResolvedConfig>) -> Self {
        let p = a.program;
        let targets = a
            .site_reports()
            .into_iter()
            .flat_map(|r| r.targets.into_iter().map(move |t| (r.site.0, t.name)))
            .collect();
        let edges = a.calls.iter().map(|e| (e.site.0, p.method_sig(e.callee))).collect();
        let leaks = taint
            .map(|cfg| analyze_taint(a, cfg).leaks.into_iter().map(|l| (l.source_site.0, l.sink_site.0, l.sink)).collect())
            .unwrap_or_default();
        Facts { targets, edges, leaks }
    }

    /// Facts of `self` missing from `other`.
    pub fn missing_from(&self, other: &Facts) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        out.extend(self.targets.difference(&other.targets).map(|t| format!("target {t:?}")));
        out.extend(self.edges.difference(&other.edges).map(|e| format!("edge {e:?}")));
        out.extend(self.leaks.difference(&other.leaks).map(|l| format!("leak {l:?}")));
        out
    }
}
