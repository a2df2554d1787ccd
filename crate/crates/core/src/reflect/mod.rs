//! Reflection resolution on top of the points-to solver.
//!
//! Three modes add rules cumulatively: `strinf` resolves constant names
//! only; `typeinf` also handles non-constant names and infers missing
//! metaobject parts from casts, receivers and argument lists; `ripple`
//! additionally treats empty (null) inputs, evaluating those rules between
//! fixpoints because their premises are negative.

mod driver;
mod report;
mod rules;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

pub use crate::hierarchy::{ParamSpec, RetSpec, Signature, Slot, TypeOrUnknown};
pub use crate::pta::{AbstractObject, MethodMeta, StrValue};
pub use driver::{run_stratified, Analysis};
pub use report::{SiteReport, SiteStatus, Target};
pub use rules::{to_class, to_mtd_sig, to_para_tys, Rule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Strinf,
    Typeinf,
    Ripple,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Strinf, Mode::Typeinf, Mode::Ripple];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Strinf => "strinf",
            Mode::Typeinf => "typeinf",
            Mode::Ripple => "ripple",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown mode `{0}` (expected strinf, typeinf or ripple)")]
pub struct ModeError(pub String);

impl FromStr for Mode {
    type Err = ModeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strinf" => Ok(Mode::Strinf),
            "typeinf" => Ok(Mode::Typeinf),
            "ripple" => Ok(Mode::Ripple),
            other => Err(ModeError(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Options {
    pub mode: Mode,
    /// Enumerate every concrete class for `newInstance` on an unknown class
    /// without a bounding cast, instead of leaving the site unresolved.
    pub exhaustive: bool,
    /// Shuffle the solver worklist with this seed.
    pub seed: Option<u64>,
}

impl Options {
    pub fn new(mode: Mode) -> Self {
        Options { mode, exhaustive: false, seed: None }
    }
}

impl Default for Options {
    fn default() -> Self {
        Options::new(Mode::Ripple)
    }
}
