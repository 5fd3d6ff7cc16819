//! Acceptance checks. Prints one PASS/FAIL line per criterion and a tally.
//!
//! The process exits 0 when every check ran, whatever the verdicts; set
//! `GRAPHTUNE_ACCEPTANCE_STRICT=1` to turn any FAIL into a nonzero exit.

use std::time::Instant;

use graphtune::data::{read_idx, write_idx, BlobSpec, IdxArray};
use graphtune::experiment::{
    interval_stats, read_csv, read_json, sweep_optima, DataSource, Experiment, ExperimentConfig,
    IntervalRow, ResultTable, RunSummary, SweepConfig,
};
use graphtune::labelers::{harmonic_exact, sample_subset};
use graphtune::online::{
    best_fixed_prefix, DispersedStream, LossListProvider, PiecewiseConstantDensity,
};
use graphtune::{
    approx_feedback_set, build_complete, build_mutual_knn, enumerate_intervals, exp3set_run,
    DelalleauLabeler, Exp3SetConfig, FeedbackConfig, HarmonicLabeler, LabelField,
    MutualKnnGraph, ProblemInstance, SoftLabeler, SolverMode,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

fn w(d: f64, sigma: f64) -> f64 {
    (-d * d / (sigma * sigma)).exp()
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

fn random_blobs(rng: &mut ChaCha8Rng, n_lo: usize, n_hi: usize) -> ProblemInstance {
    let spec = BlobSpec {
        n: rng.random_range(n_lo..=n_hi),
        dim: rng.random_range(2..=4),
        separation: rng.random_range(1.0..4.0),
        noise: 1.0,
        labeled: None,
    };
    spec.generate(rng.random()).expect("valid blob spec")
}

/// Nodes reachable from `L` (positive weights at every σ used here).
fn reachable(graph: &MutualKnnGraph, sources: &[usize]) -> Vec<bool> {
    let mut seen = vec![false; graph.node_count()];
    let mut stack: Vec<usize> = sources.to_vec();
    for &s in sources {
        seen[s] = true;
    }
    while let Some(u) = stack.pop() {
        for &(v, _) in graph.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Dense harmonic solution `f_U = (D − W)_UU⁻¹ W_UL y` over the unlabeled
/// nodes connected to `L`; `None` elsewhere.
fn harmonic_oracle(graph: &MutualKnnGraph, inst: &ProblemInstance, sigma: f64) -> Vec<Option<f64>> {
    let reach = reachable(graph, &inst.labeled);
    let mut y = vec![None; inst.n()];
    for (&i, &l) in inst.labeled.iter().zip(&inst.labels) {
        y[i] = Some(f64::from(l));
    }
    let nodes: Vec<usize> = inst.unlabeled.iter().copied().filter(|&u| reach[u]).collect();
    let mut slot = vec![usize::MAX; inst.n()];
    for (i, &u) in nodes.iter().enumerate() {
        slot[u] = i;
    }
    let m = nodes.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (i, &u) in nodes.iter().enumerate() {
        for &(v, d) in graph.neighbors(u) {
            let wv = w(d, sigma);
            a[(i, i)] += wv;
            match y[v] {
                Some(val) => b[i] += wv * val,
                None => a[(i, slot[v])] -= wv,
            }
        }
    }
    let f = a.lu().solve(&b).expect("grounded Laplacian is nonsingular");
    inst.unlabeled
        .iter()
        .map(|&u| (slot[u] != usize::MAX).then(|| f[slot[u]]))
        .collect()
}

/// Dense Delalleau training solve `(λΔ_L + D − W) f = λΔ_L y` on the
/// training graph, then the Gaussian Parzen average for every other node.
fn delalleau_oracle(lab: &DelalleauLabeler, inst: &ProblemInstance, k: usize, lambda: f64, sigma: f64) -> Vec<f64> {
    let train = lab.train_nodes();
    let data = inst.dataset.subset(train).unwrap();
    let g = if k + 1 >= train.len() {
        build_complete(&data).unwrap()
    } else {
        build_mutual_knn(&data, k).unwrap()
    };
    let l = inst.labeled.len();
    let reach = reachable(&g, &(0..l).collect::<Vec<_>>());
    let active: Vec<usize> = (0..train.len()).filter(|&i| reach[i]).collect();
    let mut slot = vec![usize::MAX; train.len()];
    for (i, &node) in active.iter().enumerate() {
        slot[node] = i;
    }
    let m = active.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (i, &node) in active.iter().enumerate() {
        if node < l {
            a[(i, i)] += lambda;
            b[i] = lambda * f64::from(inst.labels[node]);
        }
        for &(v, d) in g.neighbors(node) {
            let wv = w(d, sigma);
            a[(i, i)] += wv;
            a[(i, slot[v])] -= wv;
        }
    }
    let sol = a.lu().solve(&b).unwrap();
    let ft: Vec<f64> = (0..train.len())
        .map(|i| if slot[i] == usize::MAX { 0.5 } else { sol[slot[i]] })
        .collect();
    inst.unlabeled
        .iter()
        .map(|&u| match train.iter().position(|&t| t == u) {
            Some(i) => ft[i],
            None => {
                let x = inst.dataset.point(u);
                let d2: Vec<f64> = train
                    .iter()
                    .map(|&t| x.iter().zip(inst.dataset.point(t)).map(|(p, q)| (p - q).powi(2)).sum())
                    .collect();
                let near = d2.iter().copied().fold(f64::INFINITY, f64::min);
                let ws: Vec<f64> = d2.iter().map(|e| (-(e - near) / (sigma * sigma)).exp()).collect();
                ws.iter().zip(&ft).map(|(a, b)| a * b).sum::<f64>() / ws.iter().sum::<f64>()
            }
        })
        .collect()
}

/// Worst violation of `f ∈ [0, 1]` and worst harmonic residual
/// `|f_u − Σ w f_v / Σ w|` over the non-degenerate nodes.
struct HarmonicAudit {
    bound: f64,
    residual: f64,
}

impl HarmonicAudit {
    fn new() -> Self {
        Self { bound: 0.0, residual: 0.0 }
    }

    fn bounds(&mut self, field: &LabelField) {
        for (&f, &deg) in field.f.iter().zip(&field.degenerate) {
            if !deg {
                self.bound = self.bound.max(-f).max(f - 1.0);
            }
        }
    }

    fn harmonic(&mut self, graph: &MutualKnnGraph, inst: &ProblemInstance, field: &LabelField) {
        self.bounds(field);
        let mut value = vec![f64::NAN; inst.n()];
        for (&i, &l) in inst.labeled.iter().zip(&inst.labels) {
            value[i] = f64::from(l);
        }
        for (p, &u) in inst.unlabeled.iter().enumerate() {
            value[u] = field.f[p];
        }
        for (p, &u) in inst.unlabeled.iter().enumerate() {
            if field.degenerate[p] {
                continue;
            }
            let (mut sw, mut swf) = (0.0, 0.0);
            for &(v, d) in graph.neighbors(u) {
                sw += w(d, field.sigma);
                swf += w(d, field.sigma) * value[v];
            }
            self.residual = self.residual.max((value[u] - swf / sw).abs());
        }
    }
}

const LAMBDA: f64 = 1.4;

fn delalleau_for(inst: &ProblemInstance, seed: u64, mode: SolverMode) -> DelalleauLabeler<'_> {
    let subset = sample_subset(inst, inst.unlabeled.len().div_ceil(2), seed);
    DelalleauLabeler::new(inst, &subset, 6, LAMBDA, mode).unwrap()
}

fn c1_oracle_equivalence(audit: &mut HarmonicAudit) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let tol = SolverMode::CgTolerance { tol: 1e-12 };
    let (mut worst_h, mut worst_d, mut worst_oracle) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..50 {
        let inst = random_blobs(&mut rng, 20, 100);
        let graph = build_mutual_knn(&inst.dataset, 6).map_err(|e| e.to_string())?;
        let sigma = rng.random_range(1.0..7.0);
        let exact = harmonic_exact(&graph, &inst, sigma).map_err(|e| e.to_string())?;
        audit.harmonic(&graph, &inst, &exact);
        let cg = HarmonicLabeler::new(&inst, &graph, tol).unwrap().field(sigma).unwrap();
        worst_h = worst_h.max(rel_l2(&cg.f, &exact.f));
        let oracle = harmonic_oracle(&graph, &inst, sigma);
        let (mut a, mut b) = (vec![], vec![]);
        for (p, o) in oracle.iter().enumerate() {
            if let Some(v) = o {
                a.push(exact.f[p]);
                b.push(*v);
            }
        }
        worst_oracle = worst_oracle.max(rel_l2(&a, &b));

        let d_exact = delalleau_for(&inst, i, SolverMode::Exact).field(sigma).unwrap();
        audit.bounds(&d_exact);
        let d_cg = delalleau_for(&inst, i, tol).field(sigma).unwrap();
        worst_d = worst_d.max(rel_l2(&d_cg.f, &d_exact.f));
        let d_oracle = delalleau_oracle(&delalleau_for(&inst, i, SolverMode::Exact), &inst, 6, LAMBDA, sigma);
        worst_oracle = worst_oracle.max(rel_l2(&d_exact.f, &d_oracle));
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = worst_h <= 1e-6 && worst_d <= 1e-6 && worst_oracle <= 1e-6 && secs < 60.0;
    Ok((
        ok,
        format!(
            "max rel L2: harmonic cg_tol {worst_h:.2e}, delalleau cg_tol {worst_d:.2e}, exact vs dense oracle {worst_oracle:.2e} (≤ 1e-6); {secs:.1}s (< 60s)"
        ),
    ))
}

/// Worst per-node `|∂f/∂σ − FD| / max(|FD|, 1e-6)`; the floor keeps nodes
/// whose label is locked at 0 or 1 (true derivative 0, FD pure roundoff)
/// from dividing noise by noise.
fn fd_check(lab: &dyn SoftLabeler, sigma: f64) -> f64 {
    let h = 1e-4 * sigma;
    let at = lab.field(sigma).unwrap();
    let up = lab.field(sigma + h).unwrap();
    let down = lab.field(sigma - h).unwrap();
    (0..at.f.len())
        .filter(|&p| !at.degenerate[p])
        .map(|p| {
            let fd = (up.f[p] - down.f[p]) / (2.0 * h);
            (at.df[p] - fd).abs() / fd.abs().max(1e-6)
        })
        .fold(0.0, f64::max)
}

fn c2_gradients(audit: &mut HarmonicAudit) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_h, mut worst_d) = (0.0f64, 0.0f64);
    for i in 0..10 {
        let inst = random_blobs(&mut rng, 12, 30);
        let graph = build_mutual_knn(&inst.dataset, 6).unwrap();
        let harm = HarmonicLabeler::new(&inst, &graph, SolverMode::Exact).unwrap();
        let del = delalleau_for(&inst, i, SolverMode::Exact);
        for _ in 0..10 {
            let sigma = rng.random_range(1.0..7.0);
            worst_h = worst_h.max(fd_check(&harm, sigma));
            worst_d = worst_d.max(fd_check(&del, sigma));
            audit.harmonic(&graph, &inst, &harm.field(sigma).unwrap());
            audit.bounds(&del.field(sigma).unwrap());
        }
    }
    Ok((
        worst_h <= 1e-3 && worst_d <= 1e-3,
        format!("max per-node rel error vs central differences: harmonic {worst_h:.2e}, delalleau {worst_d:.2e} (≤ 1e-3)"),
    ))
}

fn c3_harmonic_properties(audit: &HarmonicAudit) -> Outcome {
    Ok((
        audit.bound <= 1e-8 && audit.residual <= 1e-8,
        format!(
            "max excursion outside [0,1] {:.2e}, max harmonic residual {:.2e} (≤ 1e-8)",
            audit.bound, audit.residual
        ),
    ))
}

/// Every σ in `[lo, hi]` where some exact soft label crosses ½: sign scan on
/// a grid of 3000 cells, then bisection.
fn exact_boundaries(graph: &MutualKnnGraph, inst: &ProblemInstance, lo: f64, hi: f64) -> Vec<f64> {
    let cells = 3000;
    let grid: Vec<f64> = (0..=cells).map(|i| lo + (hi - lo) * i as f64 / cells as f64).collect();
    let fields: Vec<LabelField> = grid.iter().map(|&s| harmonic_exact(graph, inst, s).unwrap()).collect();
    let mut out = vec![];
    for u in 0..inst.unlabeled.len() {
        for j in 0..cells {
            if fields[j].degenerate[u] {
                continue;
            }
            let a = fields[j].f[u] - 0.5;
            let b = fields[j + 1].f[u] - 0.5;
            if (a < 0.0) != (b < 0.0) {
                let (mut x0, mut x1) = (grid[j], grid[j + 1]);
                while x1 - x0 > 1e-12 {
                    let mid = 0.5 * (x0 + x1);
                    let v = harmonic_exact(graph, inst, mid).unwrap().f[u] - 0.5;
                    if (v < 0.0) == (a < 0.0) {
                        x0 = mid;
                    } else {
                        x1 = mid;
                    }
                }
                out.push(0.5 * (x0 + x1));
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

fn c4_intervals() -> Outcome {
    let start = Instant::now();
    let cfg = FeedbackConfig::default();
    let margin = 10.0 * cfg.eps;
    let (mut clean, mut total, mut matched, mut boundaries) = (0, 0, 0, 0);
    for seed in 0..20u64 {
        let n = 30 + (seed as usize * 7) % 31;
        let inst = BlobSpec::new(n, 2.5, 1.0).generate(seed).unwrap();
        let graph = build_mutual_knn(&inst.dataset, 6).unwrap();
        let exact = exact_boundaries(&graph, &inst, cfg.sigma_min, cfg.sigma_max);
        let lab = HarmonicLabeler::new(&inst, &graph, SolverMode::Exact).unwrap();
        let ivs = enumerate_intervals(&lab, &cfg).map_err(|e| e.to_string())?;
        total += ivs.len();
        clean += ivs
            .iter()
            .filter(|iv| !exact.iter().any(|&b| b > iv.sigma_l + margin && b < iv.sigma_h - margin))
            .count();
        let ends: Vec<f64> = ivs.iter().flat_map(|iv| [iv.sigma_l, iv.sigma_h]).collect();
        boundaries += exact.len();
        matched += exact
            .iter()
            .filter(|&&b| ends.iter().any(|&e| (e - b).abs() <= margin + cfg.step))
            .count();
    }
    let secs = start.elapsed().as_secs_f64();
    let clean_rate = clean as f64 / total as f64;
    let match_rate = matched as f64 / boundaries.max(1) as f64;
    Ok((
        clean_rate >= 0.9 && match_rate >= 0.8 && secs < 300.0,
        format!(
            "clean intervals {clean}/{total} = {clean_rate:.3} (≥ 0.90), matched boundaries {matched}/{boundaries} = {match_rate:.3} (≥ 0.80); {secs:.1}s (< 300s)"
        ),
    ))
}

fn c5_cg_budget() -> Outcome {
    let (mut good, mut total) = (0usize, 0usize);
    let mut budgets = vec![];
    for seed in 0..3u64 {
        let inst = BlobSpec::new(300, 3.0, 1.0).generate(seed).unwrap();
        let graph = build_mutual_knn(&inst.dataset, 6).unwrap();
        for sigma in [1.5, 3.0, 5.0] {
            let mode = SolverMode::CgScheduled { c: 1.0, eps: 1e-3, anchor_sigma: sigma };
            let lab = HarmonicLabeler::new(&inst, &graph, mode).map_err(|e| e.to_string())?;
            budgets.push(lab.cg_budget().unwrap_or(0));
            let approx = lab.field(sigma).unwrap();
            let exact = harmonic_exact(&graph, &inst, sigma).unwrap();
            for p in 0..exact.f.len() {
                if !exact.degenerate[p] {
                    total += 1;
                    good += usize::from((approx.f[p] - exact.f[p]).abs() <= 1e-3);
                }
            }
        }
    }
    let rate = good as f64 / total as f64;
    Ok((
        rate >= 0.95,
        format!(
            "nodes within 1e-3 of the direct solve: {good}/{total} = {rate:.4} (≥ 0.95); budgets {}..{}",
            budgets.iter().min().unwrap(),
            budgets.iter().max().unwrap()
        ),
    ))
}

/// Seconds for one interval query at σ_max, single-threaded; best of three
/// runs to damp scheduler noise.
fn query_seconds(lab: &dyn SoftLabeler, cfg: &FeedbackConfig) -> Result<f64, String> {
    let mut best = f64::INFINITY;
    for _ in 0..3 {
        let start = Instant::now();
        approx_feedback_set(lab, cfg.sigma_max, cfg).map_err(|e| e.to_string())?;
        best = best.min(start.elapsed().as_secs_f64());
    }
    Ok(best)
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn c6_timing() -> Outcome {
    let cfg = FeedbackConfig::default();
    let sizes = [100usize, 300, 500];
    let (mut full, mut del) = (vec![], vec![]);
    let mut ratio = f64::NAN;
    for &n in &sizes {
        let inst = BlobSpec::new(n, 3.0, 1.0).generate(0).unwrap();
        let graph = build_complete(&inst.dataset).unwrap();
        let inverse = HarmonicLabeler::new(&inst, &graph, SolverMode::MatrixInverse).unwrap();
        let t_inv = query_seconds(&inverse, &cfg)?;
        full.push(t_inv);
        let subset = sample_subset(&inst, 50, 0);
        let d = DelalleauLabeler::new(&inst, &subset, 6, LAMBDA, SolverMode::Cg { iterations: 20 }).unwrap();
        del.push(query_seconds(&d, &cfg)?);
        if n == 500 {
            let cg = HarmonicLabeler::new(&inst, &graph, SolverMode::Cg { iterations: 20 }).unwrap();
            let t_cg = query_seconds(&cg, &cfg)?;
            ratio = t_inv / t_cg;
        }
    }
    let (s_full, s_del) = (slope(&sizes.map(|n| n as f64), &full), slope(&sizes.map(|n| n as f64), &del));
    Ok((
        ratio >= 5.0 && s_full - s_del >= 0.5,
        format!(
            "query at σ_max, n=500 complete: direct/cg20 time ratio {ratio:.1} (≥ 5); fit exponents full inverse {s_full:.2}, delalleau {s_del:.2}, gap {:.2} (≥ 0.5)",
            s_full - s_del
        ),
    ))
}

fn c7_sweep() -> Outcome {
    let cfg = ExperimentConfig {
        n: 100,
        source: DataSource::Blobs { dim: 2, separation: 3.0, noise: 1.0 },
        sweep: SweepConfig { sigma_points: 61, iterations: vec![5, 10, 20], direct: true, tolerance: None },
        ..Default::default()
    };
    let e = Experiment::new(cfg).map_err(|e| e.to_string())?;
    let optima = sweep_optima(&e.run_sweep().map_err(|e| e.to_string())?);
    let round4 = |x: f64| (x * 1e4).round();
    let cg: Vec<f64> = optima.iter().filter(|o| o.mode == "cg").map(|o| o.accuracy).collect();
    let direct = optima.iter().find(|o| o.mode == "direct").map(|o| o.accuracy).unwrap_or(f64::NAN);
    let equal = cg.len() == 3 && cg.iter().all(|&a| round4(a) == round4(cg[0]));
    let close = cg.iter().all(|&a| (a - direct).abs() <= 0.005);
    let listing: Vec<String> = optima
        .iter()
        .map(|o| format!("{}{}={:.4}", o.mode, o.t.map_or(String::new(), |t| t.to_string()), o.accuracy))
        .collect();
    Ok((equal && close, format!("optimal accuracy {} (cg equal to 4 dp, within 0.005 of direct)", listing.join(" "))))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

fn average_regret(losses: Vec<graphtune::online::PiecewiseConstantLoss>, corruption: Option<f64>, seed: u64, m: f64) -> Result<f64, String> {
    let best = best_fixed_prefix(&losses);
    let mut provider = match corruption {
        Some(g) => LossListProvider::corrupted(losses, g, g, seed),
        None => LossListProvider::exact(losses),
    };
    let cfg = Exp3SetConfig { system_size: m, seed, ..Default::default() };
    let mut rec = exp3set_run(&mut provider, &cfg).map_err(|e| e.to_string())?;
    rec.attach_regret(&best).map_err(|e| e.to_string())?;
    Ok(rec.average_regret().unwrap())
}

fn c8_regret() -> Outcome {
    let start = Instant::now();
    let stream = DispersedStream::default();
    let m = stream.system_size() as f64;
    let horizons = [250usize, 500, 1000, 2000];
    let mut medians = vec![];
    for &t in &horizons {
        let runs = (0..20u64)
            .map(|s| average_regret(stream.generate(t, 100 + s), None, s, m))
            .collect::<Result<Vec<_>, _>>()?;
        medians.push(median(runs));
    }
    let t = 2000usize;
    let gamma = (t as f64).powf(-0.5);
    let corrupted = median(
        (0..20u64)
            .map(|s| average_regret(stream.generate(t, 100 + s), Some(gamma), s, m))
            .collect::<Result<Vec<_>, _>>()?,
    );
    let clean = medians[3];
    let monotone = medians.windows(2).all(|p| p[1] <= p[0]);
    let secs = start.elapsed().as_secs_f64();
    Ok((
        clean <= 0.1 && monotone && corrupted <= 2.0 * clean && secs < 180.0,
        format!(
            "median R_T/T at T=250,500,1000,2000: {} (≤ 0.1 at 2000, non-increasing); corrupted γ=ε=T^-1/2: {corrupted:.4} (≤ 2×{clean:.4}); {secs:.1}s (< 180s)",
            medians.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>().join(", ")
        ),
    ))
}

fn c9_density() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut d = PiecewiseConstantDensity::uniform(1.0, 7.0).unwrap();
    let m0 = d.piece_count();
    let rounds = 10_000;
    let (mut worst_norm, mut worst_pieces_ok) = (0.0f64, true);
    for t in 1..=rounds {
        let a = rng.random_range(1.0..7.0);
        let b = (a + rng.random_range(1e-3..2.0f64)).min(7.0);
        if a < b {
            d.update(a, b, rng.random::<f64>(), 0.05, 1e4).map_err(|e| e.to_string())?;
        }
        worst_norm = worst_norm.max((d.piece_masses().iter().sum::<f64>() - 1.0).abs());
        worst_pieces_ok &= d.piece_count() <= m0 + 2 * t;
    }
    let fixed = [
        PiecewiseConstantDensity::from_pieces(vec![1.0, 2.0, 4.0, 7.0], vec![1.0, 0.25, 3.0]).unwrap(),
        PiecewiseConstantDensity::from_pieces(vec![0.0, 0.5, 0.6, 1.0], vec![1.0, 20.0, 0.1]).unwrap(),
    ];
    let draws = 100_000usize;
    let mut worst_z = 0.0f64;
    for dens in &fixed {
        let masses = dens.piece_masses();
        let br = dens.breakpoints();
        let mut counts = vec![0usize; masses.len()];
        for _ in 0..draws {
            let x = dens.sample(&mut rng);
            counts[br.partition_point(|&b| b <= x).clamp(1, masses.len()) - 1] += 1;
        }
        for (c, p) in counts.iter().zip(&masses) {
            let sd = (draws as f64 * p * (1.0 - p)).sqrt();
            worst_z = worst_z.max((*c as f64 - draws as f64 * p).abs() / sd);
        }
    }
    Ok((
        worst_norm <= 1e-9 && worst_pieces_ok && worst_z <= 3.0,
        format!(
            "max |Σp − 1| {worst_norm:.1e} (≤ 1e-9), {} pieces, within m0 + 2T every round: {worst_pieces_ok}; sampler max |z| {worst_z:.2} (≤ 3)",
            d.piece_count()
        ),
    ))
}

fn c10_round_trips() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut idx_ok = true;
    for dims in [vec![7u32], vec![3, 5], vec![4, 6, 2]] {
        let len: u32 = dims.iter().product();
        let data: Vec<u8> = (0..len).map(|_| rng.random()).collect();
        let arr = IdxArray::new(dims, data).map_err(|e| e.to_string())?;
        let path = dir.path().join("a.idx");
        write_idx(&path, &arr).map_err(|e| e.to_string())?;
        idx_ok &= read_idx(&path).map_err(|e| e.to_string())? == arr;
        idx_ok &= IdxArray::from_bytes(&arr.to_bytes()).map_err(|e| e.to_string())? == arr;
    }

    let cfg = ExperimentConfig {
        n: 40,
        subsets: 3,
        seed: 7,
        ..Default::default()
    };
    let run = |sub: &str| -> Result<(Vec<(u64, usize, f64, f64)>, Vec<(u64, usize, f64)>), String> {
        let e = Experiment::new(cfg.clone()).map_err(|e| e.to_string())?;
        let report = e.run_intervals().map_err(|e| e.to_string())?;
        let out = dir.path().join(sub);
        e.write_intervals(&report, Some(&out)).map_err(|e| e.to_string())?;
        let rows: Vec<IntervalRow> = read_csv(&out.join("intervals.csv")).map_err(|e| e.to_string())?;
        let summary: RunSummary<ResultTable> = read_json(&out.join("intervals.json")).map_err(|e| e.to_string())?;
        if interval_stats(&rows) != interval_stats(&report.rows) || summary.result != report.table {
            return Err("re-parsed artifacts differ from the in-memory run".into());
        }
        let table: Vec<(u64, usize, f64)> = summary
            .result
            .rows
            .iter()
            .map(|r| (r.seed, r.intervals, r.optimal_accuracy))
            .collect();
        Ok((interval_stats(&rows), table))
    };
    let first = run("a");
    let second = run("b");
    let (aggregates_ok, detail) = match (first, second) {
        (Ok(a), Ok(b)) => (a == b, format!("{} seeds re-aggregated", a.0.len())),
        (Err(e), _) | (_, Err(e)) => (false, e),
    };
    Ok((
        idx_ok && aggregates_ok,
        format!("IDX identity {idx_ok}; CSV/JSON aggregates identical across re-parse and reruns: {aggregates_ok} ({detail})"),
    ))
}

fn main() {
    let strict = std::env::var("GRAPHTUNE_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut audit = HarmonicAudit::new();
    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 oracle equivalence", c1_oracle_equivalence(&mut audit)),
        ("2 gradient checks", c2_gradients(&mut audit)),
    ];
    results.push(("3 harmonic properties", c3_harmonic_properties(&audit)));
    let rest: [(&str, fn() -> Outcome); 7] = [
        ("4 interval correctness", c4_intervals),
        ("5 CG iteration economy", c5_cg_budget),
        ("6 timing order", c6_timing),
        ("7 accuracy parity across t", c7_sweep),
        ("8 Exp3-Set regret", c8_regret),
        ("9 density machinery", c9_density),
        ("10 format round-trips", c10_round_trips),
    ];
    for (name, check) in rest {
        results.push((name, check()));
    }
    let mut passed = 0;
    let mut errored = false;
    for (name, r) in &results {
        match r {
            Ok((true, detail)) => {
                passed += 1;
                println!("PASS {name}: {detail}");
            }
            Ok((false, detail)) => println!("FAIL {name}: {detail}"),
            Err(e) => {
                errored = true;
                println!("FAIL {name}: error: {e}");
            }
        }
    }
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if errored || (strict && passed < results.len()) {
        std::process::exit(1);
    }
}
