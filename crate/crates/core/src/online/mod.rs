//! Online tuning of σ with semi-bandit interval feedback.
//!
//! [`exp3set_run`] keeps a piecewise-constant weight function over
//! `[σ_min, σ_max]`, samples the played σ from it, and downweights the
//! reported constant-loss interval by the importance-weighted loss.

mod density;
mod dispersion;
mod synthetic;

pub use density::{PiecewiseConstantDensity, UpdateReport};
pub use dispersion::{dispersion_diagnostic, DispersionRow};
pub use synthetic::{best_fixed_prefix, DispersedStream, LossListProvider, PiecewiseConstantLoss};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feedback::FeedbackError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OnlineError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("round {round}: feedback set [{lo}, {hi}] does not contain the played point {rho}")]
    ContractViolation { round: usize, rho: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Feedback(#[from] FeedbackError),
}

/// What the learner observes after playing a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feedback {
    pub lo: f64,
    pub hi: f64,
    /// Approximate loss, constant over `[lo, hi]`.
    pub loss: f64,
    /// Exact loss at the played point, when the provider knows it.
    pub true_loss: Option<f64>,
}

pub trait FeedbackProvider {
    fn rounds(&self) -> usize;
    fn feedback(&mut self, round: usize, rho: f64) -> Result<Feedback, OnlineError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Exp3SetConfig {
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Step size; `None` uses [`default_step`].
    pub exp3_step: Option<f64>,
    /// Dispersion exponent in the default step size.
    pub beta: f64,
    /// Estimated number of pieces per loss, `M̂`.
    pub system_size: f64,
    /// Cap on the importance weight `1/p(Ã)`.
    pub weight_cap: f64,
    pub seed: u64,
}

impl Default for Exp3SetConfig {
    fn default() -> Self {
        Self {
            sigma_min: 1.0,
            sigma_max: 7.0,
            exp3_step: None,
            beta: 0.5,
            system_size: 40.0,
            weight_cap: 1e4,
            seed: 0,
        }
    }
}

/// `√(2·d·log(R·T^β) / (T·M))` with `d = 1` and `R` the domain radius,
/// clipped to `[0, 1]`.
pub fn default_step(rounds: usize, radius: f64, beta: f64, system_size: f64) -> f64 {
    let t = rounds.max(1) as f64;
    let log_term = (radius * t.powf(beta)).ln().max(0.0);
    (2.0 * log_term / (t * system_size)).sqrt().min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub rho: f64,
    pub lo: f64,
    pub hi: f64,
    pub loss_approx: f64,
    pub loss_true: Option<f64>,
    pub importance_weight: f64,
    /// The importance weight hit the cap, or the set had no width and was skipped.
    pub flagged: bool,
    pub pieces: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineRunRecord {
    pub exp3_step: f64,
    pub rounds: Vec<RoundRecord>,
    /// Cumulative regret after each round, when the best fixed σ is known.
    pub regret_cum: Option<Vec<f64>>,
    pub final_density: PiecewiseConstantDensity,
}

impl OnlineRunRecord {
    /// Fills `regret_cum` from the true losses of the plays and the best
    /// fixed-σ loss of every prefix.
    pub fn attach_regret(&mut self, best_prefix: &[f64]) -> Result<(), OnlineError> {
        if best_prefix.len() != self.rounds.len() {
            return Err(OnlineError::InvalidParameter(
                "one best-prefix value per round".into(),
            ));
        }
        let mut played = 0.0;
        let mut trace = Vec::with_capacity(self.rounds.len());
        for (r, best) in self.rounds.iter().zip(best_prefix) {
            played += r.loss_true.ok_or_else(|| {
                OnlineError::InvalidParameter(format!("round {} has no true loss", r.round))
            })?;
            trace.push(played - best);
        }
        self.regret_cum = Some(trace);
        Ok(())
    }

    /// `R_T / T`, if regret is attached.
    pub fn average_regret(&self) -> Option<f64> {
        let trace = self.regret_cum.as_ref()?;
        trace.last().map(|r| r / trace.len() as f64)
    }
}

/// Runs `provider.rounds()` rounds of sample, play, observe, update.
pub fn exp3set_run<P: FeedbackProvider + ?Sized>(
    provider: &mut P,
    config: &Exp3SetConfig,
) -> Result<OnlineRunRecord, OnlineError> {
    let rounds = provider.rounds();
    if rounds == 0 {
        return Err(OnlineError::InvalidParameter("need at least one round".into()));
    }
    if !(config.system_size > 0.0 && config.weight_cap >= 1.0) {
        return Err(OnlineError::InvalidParameter(
            "system_size must be positive and weight_cap at least 1".into(),
        ));
    }
    let mut density = PiecewiseConstantDensity::uniform(config.sigma_min, config.sigma_max)?;
    let radius = 0.5 * (config.sigma_max - config.sigma_min);
    let step = config
        .exp3_step
        .unwrap_or_else(|| default_step(rounds, radius, config.beta, config.system_size));
    if !(0.0..=1.0).contains(&step) {
        return Err(OnlineError::InvalidParameter(format!(
            "step size {step} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut records = Vec::with_capacity(rounds);
    for round in 0..rounds {
        let rho = density.sample(&mut rng);
        let fb = provider.feedback(round, rho)?;
        if !(fb.lo <= rho && rho <= fb.hi) {
            return Err(OnlineError::ContractViolation {
                round,
                rho,
                lo: fb.lo,
                hi: fb.hi,
            });
        }
        let (importance_weight, flagged) = if fb.lo < fb.hi {
            let rep = density.update(fb.lo, fb.hi, fb.loss, step, config.weight_cap)?;
            (rep.importance_weight, rep.capped)
        } else {
            log::warn!("round {round}: empty feedback set at ρ = {rho}, update skipped");
            (0.0, true)
        };
        records.push(RoundRecord {
            round,
            rho,
            lo: fb.lo,
            hi: fb.hi,
            loss_approx: fb.loss,
            loss_true: fb.true_loss,
            importance_weight,
            flagged,
            pieces: density.piece_count(),
        });
    }
    Ok(OnlineRunRecord {
        exp3_step: step,
        rounds: records,
        regret_cum: None,
        final_density: density,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_size_formula() {
        // √(2·ln(3·√100)/(100·40)) = √(2·ln 30/4000).
        let expected = (2.0 * 30f64.ln() / 4000.0).sqrt();
        assert!((default_step(100, 3.0, 0.5, 40.0) - expected).abs() < 1e-15);
        assert_eq!(default_step(1, 0.5, 0.5, 40.0), 0.0);
        assert_eq!(default_step(1, 1e9, 0.5, 1e-9), 1.0);
    }

    #[test]
    fn single_round() {
        let losses = DispersedStream::default().generate(1, 0);
        let mut p = LossListProvider::exact(losses.clone());
        let mut rec = exp3set_run(&mut p, &Exp3SetConfig::default()).unwrap();
        assert!(rec.final_density.piece_count() <= 3);
        rec.attach_regret(&best_fixed_prefix(&losses)).unwrap();
        let r = rec.regret_cum.unwrap()[0];
        assert!((0.0..=1.0).contains(&r));
    }

    struct Liar;

    impl FeedbackProvider for Liar {
        fn rounds(&self) -> usize {
            3
        }

        fn feedback(&mut self, _: usize, rho: f64) -> Result<Feedback, OnlineError> {
            Ok(Feedback {
                lo: rho + 1.0,
                hi: rho + 2.0,
                loss: 0.5,
                true_loss: None,
            })
        }
    }

    #[test]
    fn feedback_must_contain_the_play() {
        let err = exp3set_run(&mut Liar, &Exp3SetConfig::default()).unwrap_err();
        assert!(matches!(err, OnlineError::ContractViolation { round: 0, .. }));
    }

    #[test]
    fn learns_the_zero_piece() {
        let stream = DispersedStream::default();
        let losses = stream.generate(2000, 5);
        let mut p = LossListProvider::exact(losses.clone());
        let cfg = Exp3SetConfig {
            system_size: stream.system_size() as f64,
            seed: 5,
            ..Default::default()
        };
        let mut rec = exp3set_run(&mut p, &cfg).unwrap();
        rec.attach_regret(&best_fixed_prefix(&losses)).unwrap();
        assert!(rec.average_regret().unwrap() < 0.2, "{:?}", rec.average_regret());
        let good = rec.final_density.mass(stream.good.0, stream.good.1);
        assert!(good > 0.5, "mass on the good region {good}");
        for r in &rec.rounds {
            assert!(r.lo <= r.rho && r.rho <= r.hi);
        }
    }
}
