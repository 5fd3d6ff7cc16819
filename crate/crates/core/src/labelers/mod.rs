//! Soft labels `f_u(σ)` and their σ-derivatives.
//!
//! Two objectives are implemented, each with an exact (dense LU) path and
//! approximate conjugate-gradient paths:
//!
//! * [`HarmonicLabeler`]: the harmonic solution `f_U = (I − P_UU)⁻¹ P_UL f_L`
//!   on the whole graph.
//! * [`DelalleauLabeler`]: the label-fidelity objective trained on a small
//!   subset `Ũ ∪ L` and extrapolated to the remaining nodes by a Parzen
//!   window average.
//!
//! Nodes that cannot reach a labeled node through edges of positive weight
//! get the prior soft label 1/2 with derivative 0 and are flagged degenerate.

mod delalleau;
mod harmonic;

pub use delalleau::{
    delalleau_approx, delalleau_exact, sample_subset, DelalleauLabeler, DelalleauSolution,
};
pub use harmonic::{harmonic_approx, harmonic_exact, HarmonicLabeler};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, ProblemInstance};
use crate::linalg::{LinalgError, SparseSymMatrix};

/// Soft label assigned to nodes with no path to a labeled node.
pub const PRIOR_SOFT_LABEL: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabelError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// How the linear systems are solved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SolverMode {
    /// Exactly `iterations` CG steps (unless the residual vanishes).
    Cg { iterations: usize },
    /// CG until the relative residual drops below `tol`.
    CgTolerance { tol: f64 },
    /// CG with the κ-based budget, κ and λ_min estimated once at `anchor_sigma`.
    CgScheduled { c: f64, eps: f64, anchor_sigma: f64 },
    /// Explicit dense inverse, reused for both right-hand sides.
    MatrixInverse,
    /// Dense LU solve.
    Exact,
}

impl SolverMode {
    pub fn is_exact(&self) -> bool {
        matches!(self, Self::MatrixInverse | Self::Exact)
    }

    pub fn label(&self) -> String {
        match self {
            Self::Cg { iterations } => format!("cg{iterations}"),
            Self::CgTolerance { .. } => "cg_tol".into(),
            Self::CgScheduled { .. } => "cg_sched".into(),
            Self::MatrixInverse => "direct".into(),
            Self::Exact => "exact".into(),
        }
    }
}

/// Budget and tolerance after any eigenvalue-based schedule is resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Resolved {
    Cg { budget: usize, tol: Option<f64> },
    Inverse,
    Lu,
}

impl Resolved {
    fn from_mode(
        mode: SolverMode,
        dim_hint: usize,
        schedule: impl FnOnce(f64, f64, f64) -> Result<usize, LabelError>,
    ) -> Result<Self, LabelError> {
        Ok(match mode {
            SolverMode::Cg { iterations } => Self::Cg {
                budget: iterations,
                tol: None,
            },
            SolverMode::CgTolerance { tol } => {
                if !(tol > 0.0) {
                    return Err(LabelError::InvalidParameter(format!("tol = {tol}")));
                }
                Self::Cg {
                    budget: 10 * dim_hint + 50,
                    tol: Some(tol),
                }
            }
            SolverMode::CgScheduled {
                c,
                eps,
                anchor_sigma,
            } => {
                if !(c > 0.0 && eps > 0.0 && anchor_sigma > 0.0) {
                    return Err(LabelError::InvalidParameter(
                        "schedule constants must be positive".into(),
                    ));
                }
                Self::Cg {
                    budget: schedule(c, eps, anchor_sigma)?,
                    tol: None,
                }
            }
            SolverMode::MatrixInverse => Self::Inverse,
            SolverMode::Exact => Self::Lu,
        })
    }

    fn is_exact(&self) -> bool {
        !matches!(self, Self::Cg { .. })
    }
}

/// Soft label and derivative for one unlabeled node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftLabelResult {
    pub f_u: f64,
    pub df_dsigma: f64,
    /// CG iterations spent (both systems); 0 for direct solves.
    pub iterations: usize,
    pub exact: bool,
    pub degenerate: bool,
}

/// Soft labels and derivatives for every unlabeled node, in `U` order.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelField {
    pub sigma: f64,
    pub f: Vec<f64>,
    pub df: Vec<f64>,
    pub degenerate: Vec<bool>,
    pub iterations: usize,
    pub exact: bool,
}

impl LabelField {
    pub fn at(&self, position: usize) -> SoftLabelResult {
        SoftLabelResult {
            f_u: self.f[position],
            df_dsigma: self.df[position],
            iterations: self.iterations,
            exact: self.exact,
            degenerate: self.degenerate[position],
        }
    }
}

/// A soft-label algorithm usable by the feedback-set search.
pub trait SoftLabeler: Sync {
    fn instance(&self) -> &ProblemInstance;

    /// Labels and derivatives for all of `U` at `sigma`.
    fn field(&self, sigma: f64) -> Result<LabelField, LabelError>;

    /// Label and derivative for the unlabeled node at `position` in `U`.
    fn soft_label(&self, position: usize, sigma: f64) -> Result<SoftLabelResult, LabelError> {
        Ok(self.field(sigma)?.at(position))
    }

    /// Smallest eigenvalue estimate of the system matrix, if one was computed.
    fn lambda_min(&self) -> Option<f64> {
        None
    }
}

/// Rounds at 1/2 (ties go to label 1) and returns the mean 0/1 disagreement
/// with the held-out targets.
pub fn dual_loss(instance: &ProblemInstance, soft_labels: &[f64]) -> f64 {
    assert_eq!(
        soft_labels.len(),
        instance.targets.len(),
        "one soft label per unlabeled node"
    );
    let wrong = soft_labels
        .iter()
        .zip(&instance.targets)
        .filter(|(&f, &t)| u8::from(f >= 0.5) != t)
        .count();
    wrong as f64 / instance.targets.len() as f64
}

/// Builds a CSR matrix row by row; caller guarantees sorted columns and symmetry.
pub(crate) struct CsrBuilder {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrBuilder {
    pub(crate) fn new(n: usize, nnz_hint: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        Self {
            n,
            row_ptr,
            col_idx: Vec::with_capacity(nnz_hint),
            values: Vec::with_capacity(nnz_hint),
        }
    }

    pub(crate) fn push(&mut self, col: usize, value: f64) {
        self.col_idx.push(col);
        self.values.push(value);
    }

    pub(crate) fn end_row(&mut self) {
        self.row_ptr.push(self.col_idx.len());
    }

    pub(crate) fn finish(self) -> SparseSymMatrix {
        debug_assert_eq!(self.row_ptr.len(), self.n + 1);
        SparseSymMatrix::from_csr_unchecked(self.n, self.row_ptr, self.col_idx, self.values)
    }
}
