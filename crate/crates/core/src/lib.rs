//! Joint points-to and reflection analysis for a small closed-world
//! Java-like IR.
//!
//! The pipeline: [`ir::parse_program`] → [`hierarchy::Hierarchy`] →
//! [`reflect::run_stratified`] in one of three [`Mode`]s → clients
//! ([`callgraph`], [`taint`]) and serialized [`report`]s. [`oracle`] is a
//! concrete interpreter used as ground truth in tests.

pub mod callgraph;
pub mod fixtures;
pub mod hierarchy;
pub mod ir;
pub mod oracle;
pub mod pta;
pub mod reflect;
pub mod report;
pub mod taint;

pub use callgraph::{CallEdge, CallGraph, CallGraphError, CallKind};
pub use hierarchy::{Hierarchy, Signature, TypeOrUnknown};
pub use ir::{parse_program, print_program, MethodId, ParseError, Program, ReflectiveKind, SiteId, Ty, TypeId, VarId};
pub use pta::{AbstractObject, PointsToGraph, PtaError};
pub use reflect::{run_stratified, Analysis, Mode, ModeError, Options, Rule, SiteReport, SiteStatus, Target};
pub use report::{analyze, diff_modes, AnalysisReport, ModeDiff, ReportError, Request};
pub use taint::{analyze_taint, Leak, ResolvedConfig, TaintConfig, TaintError, TaintReport};
