use super::{dot, norm, LinalgError, SymOperator};

#[derive(Debug, Clone, PartialEq)]
pub struct CgReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
    /// The relative tolerance was met (or the residual vanished exactly).
    pub converged: bool,
}

/// Plain conjugate gradient from the zero vector.
///
/// Runs at most `budget` iterations. With `tol = Some(τ)` it stops at the
/// first iterate whose residual satisfies `‖b − Ax‖ ≤ τ‖b‖`; with `None` it
/// always spends the full budget unless the residual becomes exactly zero.
pub fn cg_solve<A: SymOperator + ?Sized>(
    a: &A,
    b: &[f64],
    budget: usize,
    tol: Option<f64>,
) -> Result<CgReport, LinalgError> {
    let n = a.dim();
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    let b_norm = norm(b);
    let threshold = tol.map(|t| t * b_norm);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rs = dot(&r, &r);
    let mut iterations = 0;

    let done = |rs: f64| rs == 0.0 || threshold.is_some_and(|th| rs.sqrt() <= th);

    while iterations < budget && !done(rs) {
        a.apply(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) {
            return Err(LinalgError::Indefinite {
                iteration: iterations,
                curvature,
                iterate: x,
            });
        }
        let alpha = rs / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_next = dot(&r, &r);
        let beta = rs_next / rs;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs = rs_next;
        iterations += 1;
    }

    Ok(CgReport {
        solution: x,
        iterations,
        residual_norm: rs.sqrt(),
        converged: done(rs),
    })
}
