use super::{
    CsrBuilder, LabelError, LabelField, Resolved, SoftLabelResult, SoftLabeler, SolverMode,
    PRIOR_SOFT_LABEL,
};
use crate::graph::{weight, weight_derivative, MutualKnnGraph, ProblemInstance};
use crate::linalg::{
    cg_budget_harmonic, cg_solve, estimate_eigen_extremes, DenseMatrix, SparseSymMatrix,
    SymOperator,
};

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy)]
enum Role {
    Labeled,
    Unlabeled(usize),
}

/// Harmonic-objective soft labels on a fixed skeleton.
///
/// The CG paths solve the similarity-transformed symmetric form
/// `S = D^{1/2}(I − P_UU)D^{-1/2} = I − D^{-1/2} W_UU D^{-1/2}`, which shares
/// its spectrum with `I − P_UU`. The dense paths solve `I − P_UU` as is.
#[derive(Debug, Clone)]
pub struct HarmonicLabeler<'a> {
    instance: &'a ProblemInstance,
    graph: &'a MutualKnnGraph,
    roles: Vec<Role>,
    label_value: Vec<f64>,
    resolved: Resolved,
    lambda_min: Option<f64>,
    eps: Option<f64>,
}

/// Per-σ weights restricted to the unlabeled nodes connected to `L`.
struct Assembly {
    nodes: Vec<usize>,
    slot: Vec<usize>,
    degree: Vec<f64>,
    dsum: Vec<f64>,
    row_start: Vec<usize>,
    nbr: Vec<usize>,
    w: Vec<f64>,
    dw: Vec<f64>,
}

impl Assembly {
    fn row(&self, i: usize) -> std::ops::Range<usize> {
        self.row_start[i]..self.row_start[i + 1]
    }
}

impl<'a> HarmonicLabeler<'a> {
    pub fn new(
        instance: &'a ProblemInstance,
        graph: &'a MutualKnnGraph,
        mode: SolverMode,
    ) -> Result<Self, LabelError> {
        let n = instance.n();
        if graph.node_count() != n {
            return Err(LabelError::InvalidParameter(format!(
                "graph has {} nodes, instance has {n}",
                graph.node_count()
            )));
        }
        let mut roles = vec![Role::Unlabeled(0); n];
        let mut label_value = vec![f64::NAN; n];
        for (&node, &y) in instance.labeled.iter().zip(&instance.labels) {
            roles[node] = Role::Labeled;
            label_value[node] = f64::from(y);
        }
        for (pos, &node) in instance.unlabeled.iter().enumerate() {
            roles[node] = Role::Unlabeled(pos);
        }
        let mut labeler = Self {
            instance,
            graph,
            roles,
            label_value,
            resolved: Resolved::Lu,
            lambda_min: None,
            eps: None,
        };
        let mut lambda_min = None;
        let resolved = Resolved::from_mode(mode, instance.unlabeled.len(), |c, eps, anchor| {
            let s = labeler.system_matrix(anchor)?;
            let est = estimate_eigen_extremes(&s, 50)?;
            if !est.converged {
                log::debug!("eigenvalue estimate at σ={anchor} did not settle: {est:?}");
            }
            lambda_min = Some(est.min);
            Ok(cg_budget_harmonic(
                est.condition_number(),
                n,
                eps,
                est.min,
                c,
                s.dim(),
            ))
        })?;
        labeler.resolved = resolved;
        labeler.lambda_min = lambda_min;
        if let SolverMode::CgScheduled { eps, .. } = mode {
            labeler.eps = Some(eps);
        }
        Ok(labeler)
    }

    /// Iteration budget per CG solve, when running in a CG mode.
    pub fn cg_budget(&self) -> Option<usize> {
        match self.resolved {
            Resolved::Cg { budget, .. } => Some(budget),
            _ => None,
        }
    }

    fn assemble(&self, sigma: f64) -> Result<Assembly, LabelError> {
        crate::graph::gaussian_weight(0.0, sigma)?;
        let n = self.instance.n();
        let reach = self
            .graph
            .reachable_from(&self.instance.labeled, |_, _, d| weight(d, sigma) > 0.0);
        let mut slot = vec![NONE; n];
        let mut nodes = Vec::new();
        for node in 0..n {
            if matches!(self.roles[node], Role::Unlabeled(_)) && reach[node] {
                slot[node] = nodes.len();
                nodes.push(node);
            }
        }
        let cap: usize = nodes.iter().map(|&u| self.graph.neighbors(u).len()).sum();
        let mut a = Assembly {
            degree: Vec::with_capacity(nodes.len()),
            dsum: Vec::with_capacity(nodes.len()),
            row_start: Vec::with_capacity(nodes.len() + 1),
            nbr: Vec::with_capacity(cap),
            w: Vec::with_capacity(cap),
            dw: Vec::with_capacity(cap),
            nodes,
            slot,
        };
        a.row_start.push(0);
        for &u in &a.nodes {
            let (mut deg, mut ds) = (0.0, 0.0);
            for &(v, d) in self.graph.neighbors(u) {
                let w = weight(d, sigma);
                let dw = weight_derivative(d, sigma);
                deg += w;
                ds += dw;
                a.nbr.push(v);
                a.w.push(w);
                a.dw.push(dw);
            }
            a.degree.push(deg);
            a.dsum.push(ds);
            a.row_start.push(a.nbr.len());
        }
        Ok(a)
    }

    fn symmetric_form(&self, a: &Assembly) -> SparseSymMatrix {
        let m = a.nodes.len();
        let sqrt_deg: Vec<f64> = a.degree.iter().map(|d| d.sqrt()).collect();
        let mut b = CsrBuilder::new(m, a.nbr.len() + m);
        for i in 0..m {
            let mut diag_done = false;
            for e in a.row(i) {
                let j = a.slot[a.nbr[e]];
                if j == NONE {
                    continue;
                }
                if !diag_done && j > i {
                    b.push(i, 1.0);
                    diag_done = true;
                }
                b.push(j, -a.w[e] / (sqrt_deg[i] * sqrt_deg[j]));
            }
            if !diag_done {
                b.push(i, 1.0);
            }
            b.end_row();
        }
        b.finish()
    }

    /// `I − P_UU` over the active unlabeled nodes, as a dense matrix.
    fn dense_form(&self, a: &Assembly) -> DenseMatrix {
        let m = a.nodes.len();
        let mut mat = DenseMatrix::identity(m);
        for i in 0..m {
            for e in a.row(i) {
                let j = a.slot[a.nbr[e]];
                if j != NONE {
                    mat[(i, j)] -= a.w[e] / a.degree[i];
                }
            }
        }
        mat
    }

    /// The symmetric system matrix at `sigma` (active unlabeled nodes only).
    pub fn system_matrix(&self, sigma: f64) -> Result<SparseSymMatrix, LabelError> {
        let a = self.assemble(sigma)?;
        Ok(self.symmetric_form(&a))
    }

    /// `P_UL f_L` per active row.
    fn label_rhs(&self, a: &Assembly) -> Vec<f64> {
        (0..a.nodes.len())
            .map(|i| {
                let s: f64 = a
                    .row(i)
                    .filter(|&e| matches!(self.roles[a.nbr[e]], Role::Labeled))
                    .map(|e| a.w[e] * self.label_value[a.nbr[e]])
                    .sum();
                s / a.degree[i]
            })
            .collect()
    }

    /// `(∂P_UU/∂σ) f_U + (∂P_UL/∂σ) f_L` per active row.
    fn derivative_rhs(&self, a: &Assembly, f_active: &[f64]) -> Vec<f64> {
        let value = |node: usize| match self.roles[node] {
            Role::Labeled => self.label_value[node],
            Role::Unlabeled(_) => match a.slot[node] {
                NONE => PRIOR_SOFT_LABEL,
                j => f_active[j],
            },
        };
        (0..a.nodes.len())
            .map(|i| {
                let (mut wf, mut dwf) = (0.0, 0.0);
                for e in a.row(i) {
                    let fv = value(a.nbr[e]);
                    wf += a.w[e] * fv;
                    dwf += a.dw[e] * fv;
                }
                let deg = a.degree[i];
                (dwf - a.dsum[i] * wf / deg) / deg
            })
            .collect()
    }

    fn solve(&self, a: &Assembly) -> Result<(Vec<f64>, Vec<f64>, usize), LabelError> {
        let b = self.label_rhs(a);
        match self.resolved {
            Resolved::Cg { budget, tol } => {
                let s = self.symmetric_form(a);
                let sqrt_deg: Vec<f64> = a.degree.iter().map(|d| d.sqrt()).collect();
                let scaled: Vec<f64> = b.iter().zip(&sqrt_deg).map(|(v, s)| v * s).collect();
                let rep = cg_solve(&s, &scaled, budget, tol)?;
                let f: Vec<f64> = rep.solution.iter().zip(&sqrt_deg).map(|(z, s)| z / s).collect();
                let r = self.derivative_rhs(a, &f);
                let scaled: Vec<f64> = r.iter().zip(&sqrt_deg).map(|(v, s)| v * s).collect();
                let rep_d = cg_solve(&s, &scaled, budget, tol)?;
                let df = rep_d.solution.iter().zip(&sqrt_deg).map(|(z, s)| z / s).collect();
                Ok((f, df, rep.iterations + rep_d.iterations))
            }
            Resolved::Inverse => {
                let inv = self.dense_form(a).inverse()?;
                let f = inv.matvec(&b);
                let r = self.derivative_rhs(a, &f);
                Ok((f, inv.matvec(&r), 0))
            }
            Resolved::Lu => {
                let lu = self.dense_form(a).lu()?;
                let f = lu.solve(&b)?;
                let r = self.derivative_rhs(a, &f);
                Ok((f, lu.solve(&r)?, 0))
            }
        }
    }
}

impl SoftLabeler for HarmonicLabeler<'_> {
    fn instance(&self) -> &ProblemInstance {
        self.instance
    }

    fn field(&self, sigma: f64) -> Result<LabelField, LabelError> {
        let a = self.assemble(sigma)?;
        let u = self.instance.unlabeled.len();
        let mut out = LabelField {
            sigma,
            f: vec![PRIOR_SOFT_LABEL; u],
            df: vec![0.0; u],
            degenerate: vec![true; u],
            iterations: 0,
            exact: self.resolved.is_exact(),
        };
        if a.nodes.is_empty() {
            return Ok(out);
        }
        let (f, df, iterations) = self.solve(&a)?;
        out.iterations = iterations;
        for (i, &node) in a.nodes.iter().enumerate() {
            if let Role::Unlabeled(pos) = self.roles[node] {
                out.f[pos] = f[i];
                out.df[pos] = df[i];
                out.degenerate[pos] = false;
            }
        }
        if let (Some(eps), Some(lm)) = (self.eps, self.lambda_min) {
            let bound = 1.0 / (eps * lm);
            if let Some(worst) = out.df.iter().map(|d| d.abs()).reduce(f64::max) {
                if worst >= bound {
                    log::debug!("σ={sigma}: |∂f/∂σ| = {worst:e} exceeds 1/(ελ_min) = {bound:e}");
                }
            }
        }
        Ok(out)
    }

    fn lambda_min(&self) -> Option<f64> {
        self.lambda_min
    }
}

/// Exact harmonic soft labels and derivatives for all of `U` (dense LU).
pub fn harmonic_exact(
    graph: &MutualKnnGraph,
    instance: &ProblemInstance,
    sigma: f64,
) -> Result<LabelField, LabelError> {
    HarmonicLabeler::new(instance, graph, SolverMode::Exact)?.field(sigma)
}

/// Soft label and derivative of the unlabeled node at `position` using the
/// given solver mode.
pub fn harmonic_approx(
    graph: &MutualKnnGraph,
    instance: &ProblemInstance,
    position: usize,
    sigma: f64,
    mode: SolverMode,
) -> Result<SoftLabelResult, LabelError> {
    HarmonicLabeler::new(instance, graph, mode)?.soft_label(position, sigma)
}
