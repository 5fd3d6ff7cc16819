//! CG iteration budgets `⌈c·√κ·log(·)⌉` for the two soft-label systems.

fn schedule(c: f64, kappa: f64, log_arg: f64, max_iterations: usize) -> usize {
    let raw = c * kappa.max(1.0).sqrt() * log_arg.ln();
    let cap = max_iterations.max(1);
    if !raw.is_finite() {
        return if raw == f64::NEG_INFINITY { 1 } else { cap };
    }
    (raw.ceil().max(1.0) as usize).min(cap)
}

/// `⌈c·√κ·log(n / (ε·λ_min))⌉`, clamped to `[1, max_iterations]`.
///
/// `n` is the node count inside the logarithm; `max_iterations` is the
/// dimension of the system being solved (CG is exact after that many steps).
pub fn cg_budget_harmonic(
    kappa: f64,
    n: usize,
    eps: f64,
    lambda_min: f64,
    c: f64,
    max_iterations: usize,
) -> usize {
    schedule(c, kappa, n as f64 / (eps * lambda_min), max_iterations)
}

/// `⌈c·√κ·log(λ·m / (ε·σ_min·λ_min))⌉` where `m = |L| + |Ũ|` and `λ` is the
/// label-fidelity regularizer, clamped to `[1, max_iterations]`.
#[allow(clippy::too_many_arguments)]
pub fn cg_budget_delalleau(
    kappa: f64,
    regularizer: f64,
    train_size: usize,
    eps: f64,
    sigma_min: f64,
    lambda_min: f64,
    c: f64,
    max_iterations: usize,
) -> usize {
    let arg = regularizer * train_size as f64 / (eps * sigma_min * lambda_min);
    schedule(c, kappa, arg, max_iterations)
}
