use super::{cg_solve, dot, norm, LinalgError, SymOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenEstimate {
    pub min: f64,
    pub max: f64,
    pub converged: bool,
}

impl EigenEstimate {
    pub fn condition_number(&self) -> f64 {
        self.max / self.min
    }
}

const REL_CHANGE: f64 = 1e-6;

fn start_vector(n: usize) -> Vec<f64> {
    // Deterministic and unlikely to be orthogonal to any eigenvector.
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_7).fract())
        .collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

/// λ_max by power iteration, λ_min by inverse iteration with CG as the inner
/// solver. Each runs at most `iters` steps; the estimate is flagged
/// unconverged if either Rayleigh quotient still moved by more than 1e-6
/// (relative) on the last step.
pub fn estimate_eigen_extremes<A: SymOperator + ?Sized>(
    a: &A,
    iters: usize,
) -> Result<EigenEstimate, LinalgError> {
    let n = a.dim();
    if n == 0 {
        return Err(LinalgError::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    let mut av = vec![0.0; n];

    let mut v = start_vector(n);
    let mut max = f64::NAN;
    let mut max_done = false;
    for _ in 0..iters.max(1) {
        a.apply(&v, &mut av);
        let rq = dot(&v, &av);
        let nav = norm(&av);
        let settled = (rq - max).abs() <= REL_CHANGE * rq.abs();
        max = rq;
        if nav == 0.0 {
            break;
        }
        v.iter_mut().zip(&av).for_each(|(x, y)| *x = y / nav);
        if settled {
            max_done = true;
            break;
        }
    }

    let mut v = start_vector(n);
    let mut min = f64::NAN;
    let mut min_done = false;
    let inner_budget = 10 * n + 10;
    for _ in 0..iters.max(1) {
        a.apply(&v, &mut av);
        let rq = dot(&v, &av);
        let settled = (rq - min).abs() <= REL_CHANGE * rq.abs();
        min = rq;
        if settled {
            min_done = true;
            break;
        }
        let w = cg_solve(a, &v, inner_budget, Some(1e-12))?.solution;
        let nw = norm(&w);
        if nw == 0.0 || !nw.is_finite() {
            break;
        }
        v.iter_mut().zip(&w).for_each(|(x, y)| *x = y / nw);
    }

    Ok(EigenEstimate {
        min,
        max,
        converged: max_done && min_done,
    })
}
