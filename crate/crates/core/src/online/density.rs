use rand::Rng;
use serde::{Deserialize, Serialize};

use super::OnlineError;

/// Breakpoints closer than this (relative to the domain width) are merged.
const SNAP: f64 = 1e-12;

/// An unnormalized weight function on `[lo, hi]` that is constant on each
/// piece, stored as log-weights so that long runs of multiplicative updates
/// neither underflow nor overflow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstantDensity {
    breaks: Vec<f64>,
    log_w: Vec<f64>,
}

/// What one multiplicative update did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateReport {
    /// Probability of the feedback set before the update.
    pub set_mass: f64,
    /// `1/p(Ã)`, after capping.
    pub importance_weight: f64,
    pub capped: bool,
}

impl PiecewiseConstantDensity {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self, OnlineError> {
        Self::from_pieces(vec![lo, hi], vec![1.0])
    }

    /// `breaks` must be strictly increasing and `weights` positive, one per piece.
    pub fn from_pieces(breaks: Vec<f64>, weights: Vec<f64>) -> Result<Self, OnlineError> {
        if breaks.len() < 2 || weights.len() + 1 != breaks.len() {
            return Err(OnlineError::InvalidParameter(
                "need m+1 breakpoints for m weights".into(),
            ));
        }
        if !breaks.iter().all(|b| b.is_finite()) || breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(OnlineError::InvalidParameter(
                "breakpoints must be finite and strictly increasing".into(),
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(OnlineError::InvalidParameter("weights must be positive".into()));
        }
        Ok(Self {
            breaks,
            log_w: weights.iter().map(|w| w.ln()).collect(),
        })
    }

    pub fn lo(&self) -> f64 {
        self.breaks[0]
    }

    pub fn hi(&self) -> f64 {
        self.breaks[self.breaks.len() - 1]
    }

    pub fn piece_count(&self) -> usize {
        self.log_w.len()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    fn width(&self, i: usize) -> f64 {
        self.breaks[i + 1] - self.breaks[i]
    }

    /// `log ∫ w`.
    fn log_total(&self) -> f64 {
        let terms: Vec<f64> = (0..self.piece_count())
            .map(|i| self.log_w[i] + self.width(i).ln())
            .collect();
        let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
    }

    /// Probability mass of each piece.
    pub fn piece_masses(&self) -> Vec<f64> {
        let lt = self.log_total();
        (0..self.piece_count())
            .map(|i| (self.log_w[i] + self.width(i).ln() - lt).exp())
            .collect()
    }

    /// `∫ p` over the whole domain; 1 up to rounding.
    pub fn total_mass(&self) -> f64 {
        self.piece_masses().iter().sum()
    }

    /// Normalized density value at `rho`.
    pub fn density_at(&self, rho: f64) -> f64 {
        if rho < self.lo() || rho > self.hi() {
            return 0.0;
        }
        let i = self.piece_index(rho);
        (self.log_w[i] - self.log_total()).exp()
    }

    /// Probability of `[a, b]`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.max(self.lo()), b.min(self.hi()));
        if !(a < b) {
            return 0.0;
        }
        let lt = self.log_total();
        let mut total = 0.0;
        for i in 0..self.piece_count() {
            let overlap = b.min(self.breaks[i + 1]) - a.max(self.breaks[i]);
            if overlap > 0.0 {
                total += (self.log_w[i] + overlap.ln() - lt).exp();
            }
        }
        total
    }

    fn piece_index(&self, rho: f64) -> usize {
        let k = self.breaks.partition_point(|&b| b <= rho);
        k.clamp(1, self.piece_count()) - 1
    }

    /// Inverse-CDF sampling: pick a piece with probability equal to its mass,
    /// then a uniform point inside it.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let masses = self.piece_masses();
        let u: f64 = rng.random::<f64>();
        let mut acc = 0.0;
        let mut chosen = masses.len() - 1;
        for (i, m) in masses.iter().enumerate() {
            acc += m;
            if u < acc {
                chosen = i;
                break;
            }
        }
        let (a, b) = (self.breaks[chosen], self.breaks[chosen + 1]);
        a + (b - a) * rng.random::<f64>()
    }

    /// Inserts a breakpoint at `x` unless one already sits within the snap
    /// distance; returns the breakpoint actually used.
    fn split_at(&mut self, x: f64) -> f64 {
        let snap = SNAP * (self.hi() - self.lo());
        let k = self.breaks.partition_point(|&b| b < x);
        for j in [k.wrapping_sub(1), k] {
            if let Some(&b) = self.breaks.get(j) {
                if (b - x).abs() <= snap {
                    return b;
                }
            }
        }
        // x lies strictly inside piece k-1.
        self.breaks.insert(k, x);
        let w = self.log_w[k - 1];
        self.log_w.insert(k - 1, w);
        x
    }

    /// Multiplies the weight on `[a, b]` by `exp(−step · loss / p(Ã))`, with the
    /// importance weight `1/p(Ã)` capped at `weight_cap`.
    pub fn update(
        &mut self,
        a: f64,
        b: f64,
        loss: f64,
        step: f64,
        weight_cap: f64,
    ) -> Result<UpdateReport, OnlineError> {
        let (a, b) = (a.max(self.lo()), b.min(self.hi()));
        if !(a < b) {
            return Err(OnlineError::InvalidParameter(format!(
                "feedback set [{a}, {b}] has no width inside the domain"
            )));
        }
        if !(loss.is_finite() && step >= 0.0) {
            return Err(OnlineError::InvalidParameter(
                "loss must be finite and step nonnegative".into(),
            ));
        }
        let set_mass = self.mass(a, b);
        let raw = 1.0 / set_mass;
        let capped = !(raw <= weight_cap);
        let importance_weight = if capped { weight_cap } else { raw };
        let delta = -step * loss * importance_weight;
        if delta != 0.0 {
            let a = self.split_at(a);
            let b = self.split_at(b);
            for i in 0..self.piece_count() {
                if self.breaks[i] >= a && self.breaks[i + 1] <= b {
                    self.log_w[i] += delta;
                }
            }
            let m = self.log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            self.log_w.iter_mut().for_each(|v| *v -= m);
        }
        Ok(UpdateReport {
            set_mass,
            importance_weight,
            capped,
        })
    }
}
