//! Approximate constant-loss intervals of the dual loss `l(σ)`.
//!
//! The loss can only change where some soft label crosses ½, so each
//! interval is bracketed by the nearest crossings on either side of a query
//! point, located per node with [`root::search_root`].

mod interval;
pub mod root;

pub use interval::{approx_feedback_set, enumerate_intervals, FeedbackInterval, NodeRoot, RootDiagnostics};
pub use root::{hybrid_root_step, RootSearchState, StepKind, StepRule};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labelers::LabelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeedbackError {
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeedbackConfig {
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Distance between one interval's upper end and the next query point.
    pub step: f64,
    pub eps: f64,
    pub eta: f64,
    /// Outer iterations per node before the node is skipped.
    pub max_iterations: usize,
    /// A settled search counts as a crossing only if `|f_u − ½|` is at most this.
    pub root_tol: f64,
    /// ... and if the Newton estimate of the crossing, `|f_u − ½| / |∂f_u/∂σ|`,
    /// is at most this far away.
    pub root_reach: f64,
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        Self {
            sigma_min: 1.0,
            sigma_max: 7.0,
            step: 0.05,
            eps: 1e-4,
            eta: 1.0,
            max_iterations: 100,
            root_tol: 0.05,
            root_reach: 0.05,
        }
    }
}

impl FeedbackConfig {
    pub fn validate(&self) -> Result<(), FeedbackError> {
        let bad = |m: &str| Err(FeedbackError::InvalidParameter(m.into()));
        if !(self.sigma_min > 0.0 && self.sigma_min < self.sigma_max && self.sigma_max.is_finite()) {
            return bad("need 0 < sigma_min < sigma_max");
        }
        if !(self.step > 0.0) {
            return bad("step must be positive");
        }
        if !(self.eps > 0.0 && self.eta > 0.0 && self.root_tol > 0.0 && self.root_reach > 0.0) {
            return bad("eps, eta, root_tol and root_reach must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        Ok(())
    }
}
