//! Hybrid Newton / Nesterov search for roots of `g(σ) = (f(σ) − ½)²`.

/// Below this `|g′|` the Newton step is treated as infinite.
pub const NEWTON_GUARD: f64 = 1e-12;

/// Which update rule a root search applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// The smaller-magnitude of the Nesterov gradient step and the Newton step.
    Hybrid,
    /// Nesterov-accelerated gradient descent only.
    Gradient,
    /// Newton only.
    Newton,
}

/// Which branch the last step took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Gradient,
    Newton,
    /// `g = 0` or no finite step was available; the iterate did not move.
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSearchState {
    pub iteration: usize,
    pub sigma: f64,
    pub y: f64,
    /// Nesterov momentum parameter, starting at 1.
    pub lambda: f64,
    /// Last momentum weight `γ_n`.
    pub gamma: f64,
    pub eta: f64,
}

impl RootSearchState {
    pub fn new(sigma0: f64, eta: f64) -> Self {
        Self {
            iteration: 0,
            sigma: sigma0,
            y: sigma0,
            lambda: 1.0,
            gamma: 0.0,
            eta,
        }
    }
}

/// `g = (f − ½)²` and `g′ = 2(f − ½)·∂f/∂σ`.
pub fn g_and_derivative(f: f64, df: f64) -> (f64, f64) {
    let c = f - 0.5;
    (c * c, 2.0 * c * df)
}

/// One update of the hybrid rule: `ξ_GD = η·g′`, `ξ_N = 2g/g′`, step by the
/// one of smaller magnitude; a gradient step is combined with the previous
/// `y` through Nesterov momentum.
pub fn hybrid_root_step(state: &mut RootSearchState, g: f64, dg: f64) -> StepKind {
    root_step(state, g, dg, StepRule::Hybrid)
}

pub fn root_step(state: &mut RootSearchState, g: f64, dg: f64, rule: StepRule) -> StepKind {
    debug_assert!(g >= 0.0, "g is a square");
    let xi_gd = state.eta * dg;
    let xi_newton = if dg.abs() < NEWTON_GUARD {
        f64::INFINITY
    } else {
        2.0 * g / dg
    };
    let use_gradient = match rule {
        StepRule::Hybrid => xi_gd.abs() < xi_newton.abs(),
        StepRule::Gradient => true,
        StepRule::Newton => false,
    };
    state.iteration += 1;
    if g == 0.0 {
        return StepKind::Stationary;
    }
    if use_gradient {
        let y_next = state.sigma - xi_gd;
        let lambda_next = (1.0 + (1.0 + 4.0 * state.lambda * state.lambda).sqrt()) / 2.0;
        let gamma = (1.0 - state.lambda) / lambda_next;
        state.sigma = (1.0 - gamma) * y_next + gamma * state.y;
        state.y = y_next;
        state.lambda = lambda_next;
        state.gamma = gamma;
        StepKind::Gradient
    } else if xi_newton.is_finite() {
        state.y = state.sigma - xi_newton;
        state.sigma = state.y;
        StepKind::Newton
    } else {
        StepKind::Stationary
    }
}

/// How a single-node search ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RootStatus {
    /// Both `|Δσ|` and `|Δf|` fell below ε at `sigma`, where the label is
    /// within the root tolerance of ½ and the Newton estimate of the crossing
    /// is within reach.
    Root { sigma: f64 },
    /// The search settled away from any crossing.
    NotARoot { sigma: f64, f: f64 },
    /// An iterate left the current bracket.
    EarlyExit,
    /// The iteration cap was reached.
    Exhausted,
    /// The labeler reported the node as disconnected from `L`.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOutcome {
    pub status: RootStatus,
    pub iterations: usize,
}

/// Settings shared by every per-node search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSettings {
    pub eps: f64,
    pub eta: f64,
    pub max_iterations: usize,
    pub root_tol: f64,
    pub root_reach: f64,
    pub rule: StepRule,
}

/// Runs the root search from `sigma0`, where `first = (f, ∂f/∂σ)` has already
/// been evaluated. The loop continues while `|σ_{n+1} − σ_n| ≥ ε` or
/// `|f(σ_{n+1}) − f(σ_n)| ≥ ε`, and stops early once an iterate leaves the
/// open bracket `(lo, hi)`.
pub fn search_root<E>(
    mut eval: impl FnMut(f64) -> Result<Option<(f64, f64)>, E>,
    sigma0: f64,
    first: (f64, f64),
    bracket: (f64, f64),
    settings: &SearchSettings,
) -> Result<RootOutcome, E> {
    let mut state = RootSearchState::new(sigma0, settings.eta);
    let (mut f, mut df) = first;
    for n in 1..=settings.max_iterations {
        let (g, dg) = g_and_derivative(f, df);
        let previous = state.sigma;
        root_step(&mut state, g, dg, settings.rule);
        let sigma = state.sigma;
        if !(sigma > bracket.0 && sigma < bracket.1) {
            return Ok(RootOutcome {
                status: RootStatus::EarlyExit,
                iterations: n,
            });
        }
        let (f_next, df_next) = if sigma == previous {
            (f, df)
        } else {
            match eval(sigma)? {
                Some(v) => v,
                None => {
                    return Ok(RootOutcome {
                        status: RootStatus::Degenerate,
                        iterations: n,
                    })
                }
            }
        };
        if (sigma - previous).abs() < settings.eps && (f_next - f).abs() < settings.eps {
            let miss = (f_next - 0.5).abs();
            let status = if miss <= settings.root_tol && miss <= settings.root_reach * df_next.abs() {
                RootStatus::Root { sigma }
            } else {
                RootStatus::NotARoot { sigma, f: f_next }
            };
            return Ok(RootOutcome {
                status,
                iterations: n,
            });
        }
        f = f_next;
        df = df_next;
    }
    Ok(RootOutcome {
        status: RootStatus::Exhausted,
        iterations: settings.max_iterations,
    })
}
