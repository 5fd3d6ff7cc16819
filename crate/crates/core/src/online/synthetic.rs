use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Feedback, FeedbackProvider, OnlineError};

/// A loss on `[breaks[0], breaks[m]]` equal to `values[i]` on piece `i`.
/// Points on an interior breakpoint belong to the piece on their right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstantLoss {
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

impl PiecewiseConstantLoss {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self, OnlineError> {
        if breaks.len() != values.len() + 1 || values.is_empty() {
            return Err(OnlineError::InvalidParameter(
                "need m+1 breakpoints for m values".into(),
            ));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(OnlineError::InvalidParameter(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(Self { breaks, values })
    }

    fn piece(&self, rho: f64) -> usize {
        let k = self.breaks.partition_point(|&b| b <= rho);
        k.clamp(1, self.values.len()) - 1
    }

    pub fn eval(&self, rho: f64) -> f64 {
        self.values[self.piece(rho)]
    }

    /// `(lo, hi, value)` of the piece containing `rho`.
    pub fn piece_at(&self, rho: f64) -> (f64, f64, f64) {
        let i = self.piece(rho);
        (self.breaks[i], self.breaks[i + 1], self.values[i])
    }
}

/// `min_ρ Σ_{s ≤ t} l_s(ρ)` for every prefix `t`, evaluated on the midpoints
/// of all pieces cut by the union of every loss's breakpoints (the sum is
/// constant on each such piece).
pub fn best_fixed_prefix(losses: &[PiecewiseConstantLoss]) -> Vec<f64> {
    let mut cuts: Vec<f64> = losses.iter().flat_map(|l| l.breaks.iter().copied()).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let probes: Vec<f64> = cuts.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let mut totals = vec![0.0; probes.len()];
    let mut out = Vec::with_capacity(losses.len());
    for loss in losses {
        let mut piece = 0;
        for (total, &x) in totals.iter_mut().zip(&probes) {
            while piece + 1 < loss.values.len() && loss.breaks[piece + 1] <= x {
                piece += 1;
            }
            *total += loss.values[piece];
        }
        out.push(totals.iter().copied().fold(f64::INFINITY, f64::min));
    }
    out
}

/// A stream of piecewise-constant losses on `[lo, hi]` sharing one good
/// region where the loss is 0. Every loss cuts the domain at uniformly
/// random points; the piece covering the good region has loss 0 and every
/// other piece a uniform random loss in `[bad_min, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersedStream {
    pub lo: f64,
    pub hi: f64,
    pub good: (f64, f64),
    pub cuts_per_loss: usize,
    pub bad_min: f64,
}

impl Default for DispersedStream {
    fn default() -> Self {
        Self {
            lo: 1.0,
            hi: 7.0,
            good: (3.0, 3.5),
            cuts_per_loss: 5,
            bad_min: 0.3,
        }
    }
}

impl DispersedStream {
    pub fn generate(&self, rounds: usize, seed: u64) -> Vec<PiecewiseConstantLoss> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..rounds).map(|_| self.draw(&mut rng)).collect()
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> PiecewiseConstantLoss {
        let mut breaks = vec![self.lo, self.hi];
        for _ in 0..self.cuts_per_loss {
            let x = rng.random_range(self.lo..self.hi);
            if !(self.good.0 < x && x < self.good.1) {
                breaks.push(x);
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mid = 0.5 * (self.good.0 + self.good.1);
        let values = breaks
            .windows(2)
            .map(|w| {
                if w[0] <= mid && mid < w[1] {
                    0.0
                } else {
                    rng.random_range(self.bad_min..=1.0)
                }
            })
            .collect();
        PiecewiseConstantLoss { breaks, values }
    }

    /// Upper bound on the number of pieces of any loss in the stream.
    pub fn system_size(&self) -> usize {
        self.cuts_per_loss + 1
    }
}

/// Serves exact semi-bandit feedback from a list of losses, optionally with
/// `(ε, γ)` corruption: each endpoint of the returned piece moves by up to
/// `ε/2` (never past the played point) and the loss is shifted by `±γ`.
#[derive(Debug, Clone)]
pub struct LossListProvider {
    losses: Vec<PiecewiseConstantLoss>,
    corruption: Option<(f64, f64)>,
    rng: ChaCha8Rng,
}

impl LossListProvider {
    pub fn exact(losses: Vec<PiecewiseConstantLoss>) -> Self {
        Self {
            losses,
            corruption: None,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    pub fn corrupted(losses: Vec<PiecewiseConstantLoss>, eps: f64, gamma: f64, seed: u64) -> Self {
        Self {
            losses,
            corruption: Some((eps, gamma)),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn losses(&self) -> &[PiecewiseConstantLoss] {
        &self.losses
    }
}

impl FeedbackProvider for LossListProvider {
    fn rounds(&self) -> usize {
        self.losses.len()
    }

    fn feedback(&mut self, round: usize, rho: f64) -> Result<Feedback, OnlineError> {
        let loss = self.losses.get(round).ok_or_else(|| {
            OnlineError::InvalidParameter(format!("no loss for round {round}"))
        })?;
        let (mut lo, mut hi, value) = loss.piece_at(rho);
        let (dom_lo, dom_hi) = (loss.breaks[0], loss.breaks[loss.breaks.len() - 1]);
        let mut approx = value;
        if let Some((eps, gamma)) = self.corruption {
            let half = 0.5 * eps;
            if half > 0.0 {
                lo = (lo + self.rng.random_range(-half..=half)).clamp(dom_lo, rho);
                hi = (hi + self.rng.random_range(-half..=half)).clamp(rho, dom_hi);
            }
            let sign = if self.rng.random::<bool>() { 1.0 } else { -1.0 };
            approx = (value + sign * gamma).clamp(0.0, 1.0);
        }
        Ok(Feedback {
            lo,
            hi,
            loss: approx,
            true_loss: Some(value),
        })
    }
}
