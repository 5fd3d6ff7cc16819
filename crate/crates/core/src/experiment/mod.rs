//! Experiment orchestration: seeded instances, interval enumeration with
//! timing, accuracy sweeps over σ, online runs on graph instances, and the
//! CSV/JSON artifacts they emit.

mod config;
mod online_run;
mod output;

pub use config::{
    DataSource, ExperimentConfig, LabelerKind, OnlineConfig, SweepConfig, SCHEMA_VERSION,
};
pub use online_run::{intervals_to_loss, GraphFeedback, OnlineReport};
pub use output::{
    interval_stats, read_csv, read_json, sweep_optima, write_csv, write_json, IntervalRow,
    OnlineRow, ResultRow, ResultSummary, ResultTable, SweepOptimum, SweepRow,
};

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{load_csv, load_idx, make_binary_task, pca_project, BlobSpec, DataError};
use crate::feedback::{enumerate_intervals, FeedbackError, FeedbackInterval};
use crate::graph::{build_complete, build_mutual_knn, Dataset, GraphError, MutualKnnGraph, ProblemInstance};
use crate::labelers::{
    dual_loss, sample_subset, DelalleauLabeler, HarmonicLabeler, LabelError, SoftLabeler,
    SolverMode,
};
use crate::online::OnlineError;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "GRAPHTUNE_THREADS";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(String),
    #[error("json: {0}")]
    Json(String),
    #[error("rows from config {found} cannot be aggregated with config {expected}")]
    HashMismatch { expected: String, found: String },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Feedback(#[from] FeedbackError),
    #[error(transparent)]
    Online(#[from] OnlineError),
}

impl ExperimentError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        ExperimentError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// A rayon pool sized by `GRAPHTUNE_THREADS`, or rayon's default when unset.
pub fn thread_pool() -> Result<rayon::ThreadPool, ExperimentError> {
    pool_with(std::env::var(THREADS_ENV).ok().as_deref())
}

fn pool_with(threads: Option<&str>) -> Result<rayon::ThreadPool, ExperimentError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(v) = threads {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| ExperimentError::Config(format!("{THREADS_ENV}={v:?} is not a positive integer")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| ExperimentError::Config(format!("thread pool: {e}")))
}

/// Everything a run needs: the validated config, its hash and the loaded
/// source data (for file-backed sources).
pub struct Experiment {
    config: ExperimentConfig,
    hash: String,
    base: Option<Dataset>,
}

/// Per-interval rows and per-instance timing rows of an interval run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub rows: Vec<IntervalRow>,
    pub table: ResultTable,
}

/// JSON artifact written next to each CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary<T> {
    pub schema_version: u32,
    pub config_hash: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub result: T,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self, ExperimentError> {
        config.validate()?;
        let base = match &config.source {
            DataSource::Blobs { .. } => None,
            DataSource::Idx {
                images,
                labels,
                class_a,
                class_b,
                pca_components,
            } => Some(prepare(load_idx(images, labels)?, *class_a, *class_b, *pca_components)?),
            DataSource::Csv {
                path,
                options,
                class_a,
                class_b,
                pca_components,
            } => Some(prepare(load_csv(path, options)?, *class_a, *class_b, *pca_components)?),
        };
        Ok(Self {
            hash: config.hash(),
            config,
            base,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// Seed of the `i`-th instance.
    pub fn seed(&self, i: usize) -> u64 {
        self.config.seed.wrapping_add(i as u64)
    }

    pub fn instance(&self, seed: u64) -> Result<ProblemInstance, ExperimentError> {
        let c = &self.config;
        Ok(match (&c.source, &self.base) {
            (DataSource::Blobs { dim, separation, noise }, _) => BlobSpec {
                n: c.n,
                dim: *dim,
                separation: *separation,
                noise: *noise,
                labeled: Some(c.n_labeled()),
            }
            .generate(seed)?,
            (DataSource::Idx { class_a, class_b, .. }, Some(base))
            | (DataSource::Csv { class_a, class_b, .. }, Some(base)) => {
                make_binary_task(base, *class_a, *class_b, c.n, c.n_labeled(), seed)?
            }
            _ => unreachable!("file-backed sources are loaded in Experiment::new"),
        })
    }

    /// The harmonic labeler's graph; the Delalleau labeler builds its own.
    pub fn graph(&self, instance: &ProblemInstance) -> Result<Option<MutualKnnGraph>, ExperimentError> {
        if self.config.labeler == LabelerKind::Delalleau {
            return Ok(None);
        }
        let n = instance.n();
        Ok(Some(match self.config.k {
            Some(k) if k < n - 1 => build_mutual_knn(&instance.dataset, k)?,
            _ => build_complete(&instance.dataset)?,
        }))
    }

    pub fn labeler<'a>(
        &self,
        instance: &'a ProblemInstance,
        graph: Option<&'a MutualKnnGraph>,
        mode: SolverMode,
        seed: u64,
    ) -> Result<Box<dyn SoftLabeler + 'a>, ExperimentError> {
        let c = &self.config;
        Ok(match (c.labeler, graph) {
            (LabelerKind::Harmonic, Some(g)) => Box::new(HarmonicLabeler::new(instance, g, mode)?),
            (LabelerKind::Harmonic, None) => {
                return Err(ExperimentError::Config("harmonic labeler needs a graph".into()))
            }
            (LabelerKind::Delalleau, _) => {
                let subset = sample_subset(instance, c.subset_size, seed);
                Box::new(DelalleauLabeler::new(
                    instance,
                    &subset,
                    c.k.unwrap_or(instance.n()),
                    c.delalleau_lambda,
                    mode,
                )?)
            }
        })
    }

    pub fn method(&self, mode: &SolverMode) -> String {
        let kind = match self.config.labeler {
            LabelerKind::Harmonic => "harmonic",
            LabelerKind::Delalleau => "delalleau",
        };
        format!("{kind}/{}", mode.label())
    }

    /// Enumerates intervals on every seeded instance, one at a time so the
    /// timings are comparable. Graph construction is timed separately and
    /// excluded from time-per-interval. A failing instance yields a row with
    /// its error and the run continues.
    pub fn run_intervals(&self) -> Result<IntervalReport, ExperimentError> {
        let mut rows = Vec::new();
        let mut table = ResultTable::new(self.hash.clone());
        for i in 0..self.config.subsets {
            let seed = self.seed(i);
            let row = match self.interval_run(seed) {
                Ok((intervals, graph_seconds, measured_seconds)) => {
                    rows.extend(intervals.iter().map(|iv| IntervalRow {
                        seed,
                        sigma_l: iv.sigma_l,
                        sigma_h: iv.sigma_h,
                        loss: iv.loss,
                    }));
                    let best = intervals.iter().map(|iv| iv.loss).fold(f64::INFINITY, f64::min);
                    self.result_row(seed, intervals.len(), 1.0 - best, graph_seconds, measured_seconds, None)
                }
                Err(e) => {
                    log::error!("seed {seed}: {e}");
                    self.result_row(seed, 0, f64::NAN, 0.0, 0.0, Some(e.to_string()))
                }
            };
            table.push(row)?;
        }
        Ok(IntervalReport { rows, table })
    }

    fn result_row(
        &self,
        seed: u64,
        intervals: usize,
        optimal_accuracy: f64,
        graph_seconds: f64,
        measured_seconds: f64,
        failure: Option<String>,
    ) -> ResultRow {
        ResultRow {
            config_hash: self.hash.clone(),
            dataset: self.config.name.clone(),
            size: self.config.n,
            method: self.method(&self.config.solver),
            seed,
            tpi_seconds: if intervals > 0 {
                measured_seconds / intervals as f64
            } else {
                f64::NAN
            },
            intervals,
            optimal_accuracy,
            graph_seconds,
            measured_seconds,
            failure,
        }
    }

    /// Intervals, graph seconds and measured seconds for one instance.
    pub fn interval_run(&self, seed: u64) -> Result<(Vec<FeedbackInterval>, f64, f64), ExperimentError> {
        let instance = self.instance(seed)?;
        let start = Instant::now();
        let graph = self.graph(&instance)?;
        let graph_seconds = start.elapsed().as_secs_f64();
        let start = Instant::now();
        let labeler = self.labeler(&instance, graph.as_ref(), self.config.solver, seed)?;
        let intervals = enumerate_intervals(labeler.as_ref(), &self.config.feedback)?;
        Ok((intervals, graph_seconds, start.elapsed().as_secs_f64()))
    }

    /// Solver settings compared by a sweep, with their CSV mode and `t`.
    pub fn sweep_modes(&self) -> Vec<(SolverMode, String, Option<usize>)> {
        let s = &self.config.sweep;
        let mut modes: Vec<_> = s
            .iterations
            .iter()
            .map(|&t| (SolverMode::Cg { iterations: t }, "cg".to_string(), Some(t)))
            .collect();
        if let Some(tol) = s.tolerance {
            modes.push((SolverMode::CgTolerance { tol }, "cg_tol".into(), None));
        }
        if s.direct {
            modes.push((SolverMode::MatrixInverse, "direct".into(), None));
        }
        modes
    }

    pub fn sigma_grid(&self) -> Vec<f64> {
        let f = &self.config.feedback;
        let m = self.config.sweep.sigma_points;
        (0..m)
            .map(|j| f.sigma_min + (f.sigma_max - f.sigma_min) * j as f64 / (m - 1) as f64)
            .collect()
    }

    /// Unlabeled accuracy `1 − l(σ)` on the σ grid for every solver setting,
    /// averaged over the seeded instances.
    pub fn run_sweep(&self) -> Result<Vec<SweepRow>, ExperimentError> {
        let grid = self.sigma_grid();
        let modes = self.sweep_modes();
        let instances = (0..self.config.subsets)
            .map(|i| {
                let seed = self.seed(i);
                let inst = self.instance(seed)?;
                let graph = self.graph(&inst)?;
                Ok((seed, inst, graph))
            })
            .collect::<Result<Vec<_>, ExperimentError>>()?;
        let jobs: Vec<(usize, usize)> = (0..instances.len())
            .flat_map(|i| (0..modes.len()).map(move |m| (i, m)))
            .collect();
        let curves = thread_pool()?.install(|| {
            jobs.par_iter()
                .map(|&(i, m)| {
                    let (seed, inst, graph) = &instances[i];
                    let lab = self.labeler(inst, graph.as_ref(), modes[m].0, *seed)?;
                    grid.iter()
                        .map(|&s| Ok(1.0 - dual_loss(inst, &lab.field(s)?.f)))
                        .collect::<Result<Vec<f64>, ExperimentError>>()
                })
                .collect::<Result<Vec<_>, ExperimentError>>()
        })?;
        let mut rows = Vec::with_capacity(modes.len() * grid.len());
        for (m, (_, name, t)) in modes.iter().enumerate() {
            for (j, &sigma) in grid.iter().enumerate() {
                let total: f64 = jobs
                    .iter()
                    .zip(&curves)
                    .filter(|((_, mm), _)| *mm == m)
                    .map(|(_, c)| c[j])
                    .sum();
                rows.push(SweepRow {
                    sigma,
                    accuracy: total / instances.len() as f64,
                    mode: name.clone(),
                    t: *t,
                });
            }
        }
        Ok(rows)
    }

    fn out_path(&self, dir: Option<&Path>, file: &str) -> Result<std::path::PathBuf, ExperimentError> {
        let dir = dir
            .or(self.config.out_dir.as_deref())
            .ok_or_else(|| ExperimentError::Config("no output directory".into()))?;
        std::fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
        Ok(dir.join(file))
    }

    pub fn summary<T>(&self, command: &str, result: T) -> RunSummary<T> {
        RunSummary {
            schema_version: SCHEMA_VERSION,
            config_hash: self.hash.clone(),
            command: command.into(),
            config: self.config.clone(),
            result,
        }
    }

    /// Writes `intervals.csv` and `intervals.json` (the timing table).
    pub fn write_intervals(&self, report: &IntervalReport, dir: Option<&Path>) -> Result<(), ExperimentError> {
        write_csv(&self.out_path(dir, "intervals.csv")?, &report.rows)?;
        write_json(&self.out_path(dir, "intervals.json")?, &self.summary("intervals", &report.table))
    }

    /// Writes `sweep.csv` and `sweep.json` (the optimum per setting).
    pub fn write_sweep(&self, rows: &[SweepRow], dir: Option<&Path>) -> Result<(), ExperimentError> {
        write_csv(&self.out_path(dir, "sweep.csv")?, rows)?;
        write_json(&self.out_path(dir, "sweep.json")?, &self.summary("sweep", sweep_optima(rows)))
    }

    /// Writes `online.csv` and `online.json`.
    pub fn write_online(&self, report: &OnlineReport, dir: Option<&Path>) -> Result<(), ExperimentError> {
        write_csv(&self.out_path(dir, "online.csv")?, &report.rows())?;
        write_json(&self.out_path(dir, "online.json")?, &self.summary("online", report.summary()))
    }
}

fn prepare(
    dataset: Dataset,
    class_a: u32,
    class_b: u32,
    pca_components: Option<usize>,
) -> Result<Dataset, ExperimentError> {
    let classes = dataset
        .classes()
        .ok_or_else(|| ExperimentError::Config("source has no class labels".into()))?;
    let keep: Vec<usize> = (0..dataset.len())
        .filter(|&i| classes[i] == class_a || classes[i] == class_b)
        .collect();
    let two = dataset.subset(&keep)?;
    Ok(match pca_components {
        Some(c) => pca_project(&two, c)?,
        None => two,
    })
}
