//! Learning the Gaussian bandwidth of graph-based semi-supervised learners.
//!
//! The crate builds σ-independent mutual k-NN skeletons ([`graph`]), computes
//! soft labels and their σ-derivatives with conjugate gradient or dense
//! solves ([`labelers`]), turns those into piecewise-constant loss intervals
//! with a hybrid Newton/Nesterov root search ([`feedback`]), and tunes σ
//! online with a continuous Exp3-Set learner ([`online`]). [`data`] and
//! [`experiment`] hold ingestion and the experiment drivers used by the CLI.

pub mod data;
pub mod experiment;
pub mod feedback;
pub mod graph;
pub mod labelers;
pub mod linalg;
pub mod online;

pub use feedback::{approx_feedback_set, enumerate_intervals, FeedbackConfig, FeedbackInterval};
pub use graph::{
    build_complete, build_mutual_knn, build_threshold_graph, gaussian_weight,
    gaussian_weight_derivative, Dataset, GraphError, MutualKnnGraph, ProblemInstance,
};
pub use online::{exp3set_run, Exp3SetConfig, OnlineRunRecord, PiecewiseConstantDensity};
pub use labelers::{
    dual_loss, DelalleauLabeler, HarmonicLabeler, LabelError, LabelField, SoftLabelResult,
    SoftLabeler, SolverMode,
};
