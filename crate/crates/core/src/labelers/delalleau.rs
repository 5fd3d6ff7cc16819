use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    CsrBuilder, LabelError, LabelField, Resolved, SoftLabelResult, SoftLabeler, SolverMode,
    PRIOR_SOFT_LABEL,
};
use crate::graph::{
    build_complete, build_mutual_knn, euclidean, weight, weight_derivative, MutualKnnGraph,
    ProblemInstance,
};
use crate::linalg::{
    cg_budget_delalleau, cg_solve, estimate_eigen_extremes, SparseSymMatrix, SymOperator,
};

const NONE: usize = usize::MAX;

/// Trained soft labels over the training nodes (labeled nodes first).
#[derive(Debug, Clone, PartialEq)]
pub struct DelalleauSolution {
    pub sigma: f64,
    pub f: Vec<f64>,
    pub df: Vec<f64>,
    /// Training nodes in components without a labeled node.
    pub degenerate: Vec<bool>,
    pub iterations: usize,
}

/// Label-fidelity objective
/// `½ Σ w(u,v)(f_u − f_v)² + λ Σ_{L} (f_w − y_w)²` on `L ∪ Ũ`, with every
/// other unlabeled node extrapolated by a Gaussian Parzen window over the
/// training nodes.
#[derive(Debug, Clone)]
pub struct DelalleauLabeler<'a> {
    instance: &'a ProblemInstance,
    /// Dataset indices of the training nodes, `L` first then `Ũ`.
    train_nodes: Vec<usize>,
    train_graph: MutualKnnGraph,
    labels: Vec<f64>,
    regularizer: f64,
    /// Training slot of each dataset node, or `NONE`.
    slot: Vec<usize>,
    resolved: Resolved,
    lambda_min: Option<f64>,
}

/// Draws `size` distinct unlabeled nodes uniformly at random.
pub fn sample_subset(instance: &ProblemInstance, size: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = size.min(instance.unlabeled.len());
    let mut picked: Vec<usize> = sample(&mut rng, instance.unlabeled.len(), size)
        .into_iter()
        .map(|p| instance.unlabeled[p])
        .collect();
    picked.sort_unstable();
    picked
}

struct System {
    active: Vec<usize>,
    slot: Vec<usize>,
    matrix: SparseSymMatrix,
    rhs: Vec<f64>,
}

fn assemble(
    graph: &MutualKnnGraph,
    labels: &[f64],
    regularizer: f64,
    sigma: f64,
) -> Result<System, LabelError> {
    crate::graph::gaussian_weight(0.0, sigma)?;
    let l = labels.len();
    let sources: Vec<usize> = (0..l).collect();
    let reach = graph.reachable_from(&sources, |_, _, d| weight(d, sigma) > 0.0);
    let mut slot = vec![NONE; graph.node_count()];
    let mut active = Vec::new();
    for (node, &r) in reach.iter().enumerate() {
        if r {
            slot[node] = active.len();
            active.push(node);
        }
    }
    let m = active.len();
    let mut b = CsrBuilder::new(m, m + 2 * graph.edge_count());
    let mut rhs = vec![0.0; m];
    for (i, &node) in active.iter().enumerate() {
        let mut diag = 0.0;
        if node < l {
            diag += regularizer;
            rhs[i] = regularizer * labels[node];
        }
        let nb = graph.neighbors(node);
        for &(_, d) in nb {
            diag += weight(d, sigma);
        }
        let mut diag_done = false;
        for &(v, d) in nb {
            let j = slot[v];
            if j == NONE {
                continue;
            }
            if !diag_done && j > i {
                b.push(i, diag);
                diag_done = true;
            }
            b.push(j, -weight(d, sigma));
        }
        if !diag_done {
            b.push(i, diag);
        }
        b.end_row();
    }
    Ok(System {
        active,
        slot,
        matrix: b.finish(),
        rhs,
    })
}

fn train(
    graph: &MutualKnnGraph,
    labels: &[f64],
    regularizer: f64,
    sigma: f64,
    resolved: Resolved,
) -> Result<DelalleauSolution, LabelError> {
    let sys = assemble(graph, labels, regularizer, sigma)?;
    let derivative_rhs = |f: &[f64]| -> Vec<f64> {
        sys.active
            .iter()
            .enumerate()
            .map(|(i, &node)| {
                let mut acc = 0.0;
                for &(v, d) in graph.neighbors(node) {
                    let j = sys.slot[v];
                    if j != NONE {
                        acc += weight_derivative(d, sigma) * (f[i] - f[j]);
                    }
                }
                -acc
            })
            .collect()
    };
    let (f, df, iterations) = match resolved {
        Resolved::Cg { budget, tol } => {
            let rep = cg_solve(&sys.matrix, &sys.rhs, budget, tol)?;
            let r = derivative_rhs(&rep.solution);
            let rep_d = cg_solve(&sys.matrix, &r, budget, tol)?;
            (rep.solution, rep_d.solution, rep.iterations + rep_d.iterations)
        }
        Resolved::Inverse => {
            let inv = sys.matrix.to_dense().inverse()?;
            let f = inv.matvec(&sys.rhs);
            let r = derivative_rhs(&f);
            (f, inv.matvec(&r), 0)
        }
        Resolved::Lu => {
            let lu = sys.matrix.to_dense().lu()?;
            let f = lu.solve(&sys.rhs)?;
            let r = derivative_rhs(&f);
            let df = lu.solve(&r)?;
            (f, df, 0)
        }
    };
    let n = graph.node_count();
    let mut out = DelalleauSolution {
        sigma,
        f: vec![PRIOR_SOFT_LABEL; n],
        df: vec![0.0; n],
        degenerate: vec![true; n],
        iterations,
    };
    for (i, &node) in sys.active.iter().enumerate() {
        out.f[node] = f[i];
        out.df[node] = df[i];
        out.degenerate[node] = false;
    }
    Ok(out)
}

/// Exact training labels on a graph whose first `labels.len()` nodes are the
/// labeled ones.
pub fn delalleau_exact(
    graph: &MutualKnnGraph,
    labels: &[u8],
    regularizer: f64,
    sigma: f64,
) -> Result<DelalleauSolution, LabelError> {
    check_regularizer(regularizer)?;
    if labels.is_empty() || labels.len() > graph.node_count() {
        return Err(LabelError::InvalidParameter(
            "need between 1 and n labeled nodes".into(),
        ));
    }
    let y: Vec<f64> = labels.iter().map(|&v| f64::from(v)).collect();
    train(graph, &y, regularizer, sigma, Resolved::Lu)
}

/// Soft label and derivative for the unlabeled node at `position`, training
/// on `L ∪ subset` with a mutual `k`-NN graph.
pub fn delalleau_approx(
    instance: &ProblemInstance,
    subset: &[usize],
    k: usize,
    regularizer: f64,
    position: usize,
    sigma: f64,
    mode: SolverMode,
) -> Result<SoftLabelResult, LabelError> {
    DelalleauLabeler::new(instance, subset, k, regularizer, mode)?.soft_label(position, sigma)
}

fn check_regularizer(regularizer: f64) -> Result<(), LabelError> {
    if regularizer > 0.0 && regularizer.is_finite() {
        Ok(())
    } else {
        Err(LabelError::InvalidParameter(format!(
            "regularizer must be positive, got {regularizer}"
        )))
    }
}

/// Parzen-window value and σ-derivative from squared distances to the
/// training nodes. Weights are rescaled by the nearest one, which leaves the
/// ratio unchanged and keeps it finite at small σ.
fn parzen(sq_dist: &[f64], f: &[f64], df: &[f64], sigma: f64) -> (f64, f64) {
    let nearest = sq_dist.iter().copied().fold(f64::INFINITY, f64::min);
    let s2 = sigma * sigma;
    let s3 = s2 * sigma;
    let (mut sw, mut swf, mut swdf) = (0.0, 0.0, 0.0);
    for ((&e, &fj), &dfj) in sq_dist.iter().zip(f).zip(df) {
        let w = (-(e - nearest) / s2).exp();
        sw += w;
        swf += w * fj;
        swdf += w * dfj;
    }
    let value = swf / sw;
    let mut spread = 0.0;
    for (&e, &fj) in sq_dist.iter().zip(f) {
        let w = (-(e - nearest) / s2).exp();
        spread += w * (2.0 * e / s3) * (fj - value);
    }
    (value, (spread + swdf) / sw)
}

impl<'a> DelalleauLabeler<'a> {
    /// `subset` holds dataset indices of unlabeled nodes. The training graph
    /// is the mutual `k`-NN graph on `L ∪ subset` (complete when `k` reaches
    /// its size). A scheduled CG mode uses `anchor_sigma` as `σ_min`.
    pub fn new(
        instance: &'a ProblemInstance,
        subset: &[usize],
        k: usize,
        regularizer: f64,
        mode: SolverMode,
    ) -> Result<Self, LabelError> {
        check_regularizer(regularizer)?;
        if subset.is_empty() {
            return Err(LabelError::InvalidParameter("Ũ must be nonempty".into()));
        }
        let n = instance.n();
        let mut in_u = vec![false; n];
        for &u in &instance.unlabeled {
            in_u[u] = true;
        }
        let mut slot = vec![NONE; n];
        let mut train_nodes = instance.labeled.clone();
        for &u in subset {
            if u >= n || !in_u[u] {
                return Err(LabelError::InvalidParameter(format!(
                    "node {u} is not unlabeled"
                )));
            }
            if slot[u] != NONE {
                return Err(LabelError::InvalidParameter(format!("node {u} repeated")));
            }
            slot[u] = 0;
            train_nodes.push(u);
        }
        for (i, &node) in train_nodes.iter().enumerate() {
            slot[node] = i;
        }
        let data = instance.dataset.subset(&train_nodes)?;
        let train_graph = if k + 1 >= train_nodes.len() {
            build_complete(&data)?
        } else {
            build_mutual_knn(&data, k)?
        };
        let labels = instance.label_values();
        let mut lambda_min = None;
        let resolved = Resolved::from_mode(mode, train_nodes.len(), |c, eps, anchor| {
            let sys = assemble(&train_graph, &labels, regularizer, anchor)?;
            let est = estimate_eigen_extremes(&sys.matrix, 50)?;
            if !est.converged {
                log::debug!("eigenvalue estimate at σ={anchor} did not settle: {est:?}");
            }
            lambda_min = Some(est.min);
            Ok(cg_budget_delalleau(
                est.condition_number(),
                regularizer,
                train_nodes.len(),
                eps,
                anchor,
                est.min,
                c,
                sys.matrix.dim(),
            ))
        })?;
        Ok(Self {
            instance,
            train_nodes,
            train_graph,
            labels,
            regularizer,
            slot,
            resolved,
            lambda_min,
        })
    }

    /// Dataset indices of the training nodes, labeled nodes first.
    pub fn train_nodes(&self) -> &[usize] {
        &self.train_nodes
    }

    pub fn cg_budget(&self) -> Option<usize> {
        match self.resolved {
            Resolved::Cg { budget, .. } => Some(budget),
            _ => None,
        }
    }

    /// The system matrix `A` at `sigma` over the training nodes connected to `L`.
    pub fn system_matrix(&self, sigma: f64) -> Result<SparseSymMatrix, LabelError> {
        Ok(assemble(&self.train_graph, &self.labels, self.regularizer, sigma)?.matrix)
    }

    pub fn train(&self, sigma: f64) -> Result<DelalleauSolution, LabelError> {
        train(
            &self.train_graph,
            &self.labels,
            self.regularizer,
            sigma,
            self.resolved,
        )
    }

    fn extrapolate(&self, node: usize, sol: &DelalleauSolution, sq: &mut Vec<f64>) -> (f64, f64) {
        let x = self.instance.dataset.point(node);
        sq.clear();
        sq.extend(self.train_nodes.iter().map(|&j| {
            let d = euclidean(x, self.instance.dataset.point(j));
            d * d
        }));
        parzen(sq, &sol.f, &sol.df, sol.sigma)
    }

    fn result_for(&self, node: usize, sol: &DelalleauSolution, sq: &mut Vec<f64>) -> (f64, f64, bool) {
        match self.slot[node] {
            NONE => {
                let (f, df) = self.extrapolate(node, sol, sq);
                (f, df, false)
            }
            j => (sol.f[j], sol.df[j], sol.degenerate[j]),
        }
    }
}

impl SoftLabeler for DelalleauLabeler<'_> {
    fn instance(&self) -> &ProblemInstance {
        self.instance
    }

    fn field(&self, sigma: f64) -> Result<LabelField, LabelError> {
        let sol = self.train(sigma)?;
        let u = self.instance.unlabeled.len();
        let mut out = LabelField {
            sigma,
            f: Vec::with_capacity(u),
            df: Vec::with_capacity(u),
            degenerate: Vec::with_capacity(u),
            iterations: sol.iterations,
            exact: self.resolved.is_exact(),
        };
        let mut sq = Vec::with_capacity(self.train_nodes.len());
        for &node in &self.instance.unlabeled {
            let (f, df, deg) = self.result_for(node, &sol, &mut sq);
            out.f.push(f);
            out.df.push(df);
            out.degenerate.push(deg);
        }
        Ok(out)
    }

    fn soft_label(&self, position: usize, sigma: f64) -> Result<SoftLabelResult, LabelError> {
        let node = *self.instance.unlabeled.get(position).ok_or_else(|| {
            LabelError::InvalidParameter(format!("position {position} outside U"))
        })?;
        let sol = self.train(sigma)?;
        let (f_u, df_dsigma, degenerate) = self.result_for(node, &sol, &mut Vec::new());
        Ok(SoftLabelResult {
            f_u,
            df_dsigma,
            iterations: sol.iterations,
            exact: self.resolved.is_exact(),
            degenerate,
        })
    }

    fn lambda_min(&self) -> Option<f64> {
        self.lambda_min
    }
}
