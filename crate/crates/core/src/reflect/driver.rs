use std::collections::{BTreeMap, BTreeSet};

use super::rules::{Engine, Rule};
use super::{Mode, Options};
use crate::hierarchy::Hierarchy;
use crate::ir::{MethodId, Program};
use crate::pta::{AbstractObject, CallEdge, PointsToGraph, PtaError, Solver};

/// Result of one analysis run.
#[derive(Debug, Clone)]
pub struct Analysis<'p> {
    pub program: &'p Program,
    pub hierarchy: &'p Hierarchy,
    pub options: Options,
    pub entry: MethodId,
    pub pta: PointsToGraph,
    pub calls: BTreeSet<CallEdge>,
    pub reachable: BTreeSet<MethodId>,
    /// Rules that derived each reflective object.
    pub obj_rules: BTreeMap<AbstractObject, BTreeSet<Rule>>,
    pub warnings: BTreeSet<String>,
    /// Solver fixpoints computed; more than one only when null-input rules
    /// added facts.
    pub rounds: usize,
    pub insertions: u64,
    pub insertion_bound: u64,
}

impl Analysis<'_> {
    pub fn mode(&self) -> Mode {
        self.options.mode
    }
}

/// Runs the solver to a fixpoint, then, in `ripple` mode, alternates the
/// negative-premise rules with further fixpoints until neither adds facts.
pub fn run_stratified<'p>(
    p: &'p Program,
    h: &'p Hierarchy,
    entry: &str,
    opts: &Options,
) -> Result<Analysis<'p>, PtaError> {
    let mut solver = Solver::new(p, h, entry)?;
    if let Some(seed) = opts.seed {
        solver = solver.with_seed(seed);
    }
    let mut engine = Engine::new(p, h, opts.mode, opts.exhaustive);
    let mut rounds = 0;
    loop {
        solver.solve(&mut engine);
        rounds += 1;
        if opts.mode < Mode::Ripple || !engine.phase_b(&mut solver) {
            break;
        }
    }
    Ok(Analysis {
        program: p,
        hierarchy: h,
        options: *opts,
        entry: solver.entry(),
        pta: solver.freeze(),
        calls: solver.calls().clone(),
        reachable: solver.reachable().clone(),
        obj_rules: engine.obj_rules,
        warnings: solver.warnings().clone(),
        rounds,
        insertions: solver.insertions(),
        insertion_bound: solver.insertion_bound(),
    })
}
