use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{thread_pool, Experiment, ExperimentError, OnlineRow};
use crate::feedback::{approx_feedback_set, enumerate_intervals, FeedbackInterval};
use crate::graph::{MutualKnnGraph, ProblemInstance};
use crate::labelers::SolverMode;
use crate::online::{
    best_fixed_prefix, exp3set_run, Feedback, FeedbackProvider, OnlineError, OnlineRunRecord,
    PiecewiseConstantLoss,
};

/// Turns an interval enumeration into a loss on `[lo, hi]`. Each gap between
/// consecutive intervals is split at its midpoint, and adjacent pieces with
/// equal loss are merged.
pub fn intervals_to_loss(
    intervals: &[FeedbackInterval],
    lo: f64,
    hi: f64,
) -> Result<PiecewiseConstantLoss, OnlineError> {
    if intervals.is_empty() {
        return Err(OnlineError::InvalidParameter("no intervals".into()));
    }
    let mut breaks = vec![lo];
    let mut values: Vec<f64> = Vec::new();
    for (i, iv) in intervals.iter().enumerate() {
        let end = match intervals.get(i + 1) {
            // Keep the cut between the two queries so each piece contains its σ₀.
            Some(next) => (0.5 * (iv.sigma_h + next.sigma_l)).clamp(iv.sigma0, next.sigma0),
            None => hi,
        };
        let last = *breaks.last().unwrap();
        if end <= last {
            continue;
        }
        if values.last() == Some(&iv.loss) {
            *breaks.last_mut().unwrap() = end;
        } else {
            values.push(iv.loss);
            breaks.push(end);
        }
    }
    if values.is_empty() {
        return Err(OnlineError::InvalidParameter("intervals leave no width".into()));
    }
    *breaks.last_mut().unwrap() = hi;
    PiecewiseConstantLoss::new(breaks, values)
}

struct PoolEntry {
    seed: u64,
    instance: ProblemInstance,
    graph: Option<MutualKnnGraph>,
}

/// Semi-bandit feedback from graph instances: round `t` runs the configured
/// labeler on instance `t mod pool` and reports the interval around the
/// played σ. The true loss is read from a reference enumeration of the same
/// instance with the exact solver.
pub struct GraphFeedback<'e> {
    experiment: &'e Experiment,
    pool: Vec<PoolEntry>,
    references: Vec<PiecewiseConstantLoss>,
    rounds: usize,
}

impl<'e> GraphFeedback<'e> {
    pub fn new(experiment: &'e Experiment) -> Result<Self, ExperimentError> {
        let c = experiment.config();
        let pool = (0..c.online.pool.min(c.online.rounds))
            .map(|i| {
                let seed = experiment.seed(i);
                let instance = experiment.instance(seed)?;
                let graph = experiment.graph(&instance)?;
                Ok(PoolEntry { seed, instance, graph })
            })
            .collect::<Result<Vec<_>, ExperimentError>>()?;
        let references = thread_pool()?.install(|| {
            pool.par_iter()
                .map(|e| {
                    let lab = experiment.labeler(&e.instance, e.graph.as_ref(), SolverMode::Exact, e.seed)?;
                    let iv = enumerate_intervals(lab.as_ref(), &c.feedback)?;
                    Ok(intervals_to_loss(&iv, c.feedback.sigma_min, c.feedback.sigma_max)?)
                })
                .collect::<Result<Vec<_>, ExperimentError>>()
        })?;
        Ok(Self {
            experiment,
            pool,
            references,
            rounds: c.online.rounds,
        })
    }

    /// Reference loss of every round.
    pub fn round_losses(&self) -> Vec<PiecewiseConstantLoss> {
        (0..self.rounds)
            .map(|t| self.references[t % self.pool.len()].clone())
            .collect()
    }
}

impl FeedbackProvider for GraphFeedback<'_> {
    fn rounds(&self) -> usize {
        self.rounds
    }

    fn feedback(&mut self, round: usize, rho: f64) -> Result<Feedback, OnlineError> {
        let k = round % self.pool.len();
        let e = &self.pool[k];
        let c = self.experiment.config();
        let lab = self
            .experiment
            .labeler(&e.instance, e.graph.as_ref(), c.solver, e.seed)
            .map_err(|err| OnlineError::InvalidParameter(err.to_string()))?;
        let iv = approx_feedback_set(lab.as_ref(), rho, &c.feedback)?;
        Ok(Feedback {
            lo: iv.sigma_l,
            hi: iv.sigma_h,
            loss: iv.loss,
            true_loss: Some(self.references[k].eval(rho)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineReport {
    pub record: OnlineRunRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineSummary {
    pub rounds: usize,
    pub exp3_step: f64,
    pub average_regret: Option<f64>,
    pub flagged_rounds: usize,
    pub final_pieces: usize,
}

impl OnlineReport {
    pub fn rows(&self) -> Vec<OnlineRow> {
        let regret = self.record.regret_cum.as_ref();
        self.record
            .rounds
            .iter()
            .enumerate()
            .map(|(i, r)| OnlineRow {
                round: r.round,
                rho: r.rho,
                loss_approx: r.loss_approx,
                loss_true: r.loss_true,
                regret_cum: regret.map(|v| v[i]),
            })
            .collect()
    }

    pub fn summary(&self) -> OnlineSummary {
        OnlineSummary {
            rounds: self.record.rounds.len(),
            exp3_step: self.record.exp3_step,
            average_regret: self.record.average_regret(),
            flagged_rounds: self.record.rounds.iter().filter(|r| r.flagged).count(),
            final_pieces: self.record.final_density.piece_count(),
        }
    }
}

impl Experiment {
    /// Exp3-Set over graph instances, with regret against the best fixed σ
    /// of the reference losses.
    pub fn run_online(&self) -> Result<OnlineReport, ExperimentError> {
        let mut provider = GraphFeedback::new(self)?;
        let losses = provider.round_losses();
        let mut record = exp3set_run(&mut provider, &self.config().exp3())?;
        record.attach_regret(&best_fixed_prefix(&losses))?;
        Ok(OnlineReport { record })
    }
}
