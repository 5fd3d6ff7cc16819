use serde::{Deserialize, Serialize};

use super::root::{search_root, RootStatus, SearchSettings, StepRule};
use super::{FeedbackConfig, FeedbackError};
use crate::labelers::{dual_loss, LabelError, SoftLabeler};

/// Per-interval counts of how the node searches ended.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootDiagnostics {
    pub roots: usize,
    pub not_roots: usize,
    pub early_exits: usize,
    pub exhausted: usize,
    pub degenerate: usize,
    /// Labeler calls beyond the shared evaluation at σ₀.
    pub evaluations: usize,
}

/// A crossing of ½ found for the unlabeled node at `position` in `U`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeRoot {
    pub position: usize,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackInterval {
    pub sigma_l: f64,
    pub sigma_h: f64,
    pub sigma0: f64,
    /// Loss at σ₀ from the approximate soft labels.
    pub loss: f64,
    pub diagnostics: RootDiagnostics,
    pub roots: Vec<NodeRoot>,
    /// Every searched node hit the iteration cap; the interval is `[σ₀, σ₀]`.
    pub all_skipped: bool,
}

impl FeedbackInterval {
    pub fn contains(&self, sigma: f64) -> bool {
        self.sigma_l <= sigma && sigma <= self.sigma_h
    }

    pub fn width(&self) -> f64 {
        self.sigma_h - self.sigma_l
    }
}

/// The approximate constant-loss interval around `sigma0` and the loss there.
///
/// Starts from `[σ_min, σ_max]` and, for every unlabeled node, tightens the
/// lower end to a crossing found below σ₀ or the upper end to one found
/// above it. A node's search is abandoned as soon as it leaves the current
/// interval, since nothing it finds there can tighten it.
pub fn approx_feedback_set<L: SoftLabeler + ?Sized>(
    labeler: &L,
    sigma0: f64,
    config: &FeedbackConfig,
) -> Result<FeedbackInterval, FeedbackError> {
    config.validate()?;
    if !(config.sigma_min <= sigma0 && sigma0 <= config.sigma_max) {
        return Err(FeedbackError::InvalidParameter(format!(
            "σ₀ = {sigma0} outside [{}, {}]",
            config.sigma_min, config.sigma_max
        )));
    }
    let instance = labeler.instance();
    let at_query = labeler.field(sigma0)?;
    let loss = dual_loss(instance, &at_query.f);
    let settings = SearchSettings {
        eps: config.eps,
        eta: config.eta,
        max_iterations: config.max_iterations,
        root_tol: config.root_tol,
        root_reach: config.root_reach,
        rule: StepRule::Hybrid,
    };
    let (mut lo, mut hi) = (config.sigma_min, config.sigma_max);
    let mut diag = RootDiagnostics::default();
    let mut roots = Vec::new();
    for position in 0..instance.unlabeled.len() {
        if at_query.degenerate[position] {
            diag.degenerate += 1;
            continue;
        }
        let mut calls = 0;
        let eval = |sigma: f64| -> Result<Option<(f64, f64)>, LabelError> {
            calls += 1;
            let r = labeler.soft_label(position, sigma)?;
            Ok((!r.degenerate).then_some((r.f_u, r.df_dsigma)))
        };
        let first = (at_query.f[position], at_query.df[position]);
        let outcome = search_root(eval, sigma0, first, (lo, hi), &settings)?;
        diag.evaluations += calls;
        match outcome.status {
            RootStatus::Root { sigma } => {
                diag.roots += 1;
                roots.push(NodeRoot { position, sigma });
                if sigma < sigma0 {
                    lo = lo.max(sigma);
                } else if sigma > sigma0 {
                    hi = hi.min(sigma);
                }
            }
            RootStatus::NotARoot { .. } => diag.not_roots += 1,
            RootStatus::EarlyExit => diag.early_exits += 1,
            RootStatus::Exhausted => diag.exhausted += 1,
            RootStatus::Degenerate => diag.degenerate += 1,
        }
    }
    let searched = instance.unlabeled.len() - at_query.degenerate.iter().filter(|&&d| d).count();
    let all_skipped = searched > 0 && diag.exhausted == searched;
    if all_skipped {
        log::warn!("every node search at σ₀ = {sigma0} hit the iteration cap");
        lo = sigma0;
        hi = sigma0;
    }
    Ok(FeedbackInterval {
        sigma_l: lo,
        sigma_h: hi,
        sigma0,
        loss,
        diagnostics: diag,
        roots,
        all_skipped,
    })
}

/// Scans `[σ_min, σ_max]` left to right: the first query is σ_min and each
/// next one is the previous interval's upper end plus `step`.
pub fn enumerate_intervals<L: SoftLabeler + ?Sized>(
    labeler: &L,
    config: &FeedbackConfig,
) -> Result<Vec<FeedbackInterval>, FeedbackError> {
    config.validate()?;
    let mut out = Vec::new();
    let mut sigma0 = config.sigma_min;
    loop {
        let interval = approx_feedback_set(labeler, sigma0, config)?;
        let next = interval.sigma_h + config.step;
        log::debug!(
            "σ₀ = {sigma0:.4}: [{:.4}, {:.4}] loss {:.4}",
            interval.sigma_l,
            interval.sigma_h,
            interval.loss
        );
        out.push(interval);
        if next > config.sigma_max {
            break;
        }
        sigma0 = next;
    }
    Ok(out)
}
