use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::SCHEMA_VERSION;
use super::ExperimentError;

/// One line of `intervals.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub seed: u64,
    pub sigma_l: f64,
    pub sigma_h: f64,
    pub loss: f64,
}

/// One line of `sweep.csv`; `t` is empty for solvers without an iteration count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub accuracy: f64,
    pub mode: String,
    pub t: Option<usize>,
}

/// One line of `online.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnlineRow {
    pub round: usize,
    pub rho: f64,
    pub loss_approx: f64,
    pub loss_true: Option<f64>,
    pub regret_cum: Option<f64>,
}

/// Per-instance timing and accuracy for one interval-enumeration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub config_hash: String,
    pub dataset: String,
    pub size: usize,
    pub method: String,
    pub seed: u64,
    /// Measured seconds divided by the interval count.
    pub tpi_seconds: f64,
    pub intervals: usize,
    /// `1 − min loss` over the returned intervals.
    pub optimal_accuracy: f64,
    /// Graph construction, outside the measured phase.
    pub graph_seconds: f64,
    pub measured_seconds: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub schema_version: u32,
    pub config_hash: String,
    pub rows: Vec<ResultRow>,
}

/// Means over the completed rows of a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSummary {
    pub config_hash: String,
    pub completed: usize,
    pub failed: usize,
    pub mean_tpi_seconds: f64,
    pub mean_intervals: f64,
    pub mean_optimal_accuracy: f64,
}

impl ResultTable {
    pub fn new(config_hash: String) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config_hash,
            rows: Vec::new(),
        }
    }

    /// Refuses rows whose hash differs from the table's.
    pub fn push(&mut self, row: ResultRow) -> Result<(), ExperimentError> {
        if row.config_hash != self.config_hash {
            return Err(ExperimentError::HashMismatch {
                expected: self.config_hash.clone(),
                found: row.config_hash,
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn summary(&self) -> Result<ResultSummary, ExperimentError> {
        if let Some(r) = self.rows.iter().find(|r| r.config_hash != self.config_hash) {
            return Err(ExperimentError::HashMismatch {
                expected: self.config_hash.clone(),
                found: r.config_hash.clone(),
            });
        }
        let done: Vec<&ResultRow> = self.rows.iter().filter(|r| r.failure.is_none()).collect();
        let mean = |f: fn(&ResultRow) -> f64| {
            if done.is_empty() {
                f64::NAN
            } else {
                done.iter().map(|r| f(r)).sum::<f64>() / done.len() as f64
            }
        };
        Ok(ResultSummary {
            config_hash: self.config_hash.clone(),
            completed: done.len(),
            failed: self.rows.len() - done.len(),
            mean_tpi_seconds: mean(|r| r.tpi_seconds),
            mean_intervals: mean(|r| r.intervals as f64),
            mean_optimal_accuracy: mean(|r| r.optimal_accuracy),
        })
    }
}

/// Best accuracy and the σ attaining it for one solver setting of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptimum {
    pub mode: String,
    pub t: Option<usize>,
    pub accuracy: f64,
    pub sigma: f64,
}

/// Maximum accuracy per `(mode, t)`, in first-appearance order; ties go to
/// the smallest σ.
pub fn sweep_optima(rows: &[SweepRow]) -> Vec<SweepOptimum> {
    let mut out: Vec<SweepOptimum> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|o| o.mode == r.mode && o.t == r.t) {
            Some(o) => {
                if r.accuracy > o.accuracy || (r.accuracy == o.accuracy && r.sigma < o.sigma) {
                    o.accuracy = r.accuracy;
                    o.sigma = r.sigma;
                }
            }
            None => out.push(SweepOptimum {
                mode: r.mode.clone(),
                t: r.t,
                accuracy: r.accuracy,
                sigma: r.sigma,
            }),
        }
    }
    out
}

/// Interval count, mean loss and minimum loss per seed.
pub fn interval_stats(rows: &[IntervalRow]) -> Vec<(u64, usize, f64, f64)> {
    let mut out: Vec<(u64, usize, f64, f64)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|o| o.0 == r.seed) {
            Some(o) => {
                o.1 += 1;
                o.2 += r.loss;
                o.3 = o.3.min(r.loss);
            }
            None => out.push((r.seed, 1, r.loss, r.loss)),
        }
    }
    for o in &mut out {
        o.2 /= o.1 as f64;
    }
    out
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| ExperimentError::Csv(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| ExperimentError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| ExperimentError::io(path, e))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, ExperimentError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| ExperimentError::Csv(e.to_string()))?;
    r.deserialize()
        .map(|row| row.map_err(|e| ExperimentError::Csv(format!("{}: {e}", path.display()))))
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| ExperimentError::Json(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| ExperimentError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, ExperimentError> {
    let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| ExperimentError::Json(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(hash: &str, tpi: f64, failure: Option<&str>) -> ResultRow {
        ResultRow {
            config_hash: hash.into(),
            dataset: "d".into(),
            size: 10,
            method: "m".into(),
            seed: 0,
            tpi_seconds: tpi,
            intervals: 4,
            optimal_accuracy: 0.9,
            graph_seconds: 0.0,
            measured_seconds: 4.0 * tpi,
            failure: failure.map(String::from),
        }
    }

    #[test]
    fn csv_headers_are_fixed() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_csv(&p, &[IntervalRow { seed: 1, sigma_l: 1.0, sigma_h: 2.5, loss: 0.1 }]).unwrap();
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("seed,sigma_l,sigma_h,loss\n"));
        let rows = [SweepRow { sigma: 0.1 + 0.2, accuracy: 1.0 / 3.0, mode: "direct".into(), t: None }];
        write_csv(&p, &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("sigma,accuracy,mode,t\n"));
        assert_eq!(read_csv::<SweepRow>(&p).unwrap(), rows);
        let online = [OnlineRow { round: 0, rho: 2.0, loss_approx: 0.5, loss_true: Some(0.25), regret_cum: None }];
        write_csv(&p, &online).unwrap();
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("round,rho,loss_approx,loss_true,regret_cum\n"));
        assert_eq!(read_csv::<OnlineRow>(&p).unwrap(), online);
    }

    #[test]
    fn tables_refuse_mixed_hashes() {
        let mut t = ResultTable::new("aa".into());
        t.push(row("aa", 1.0, None)).unwrap();
        t.push(row("aa", 3.0, None)).unwrap();
        t.push(row("aa", 0.0, Some("boom"))).unwrap();
        assert!(t.push(row("bb", 1.0, None)).is_err());
        let s = t.summary().unwrap();
        assert_eq!((s.completed, s.failed, s.mean_tpi_seconds), (2, 1, 2.0));
        t.rows.push(row("bb", 1.0, None));
        assert!(t.summary().is_err());
    }

    #[test]
    fn optima_per_setting() {
        let r = |sigma, accuracy, mode: &str, t| SweepRow { sigma, accuracy, mode: mode.into(), t };
        let rows = [
            r(1.0, 0.8, "cg", Some(5)),
            r(2.0, 0.9, "cg", Some(5)),
            r(3.0, 0.9, "cg", Some(5)),
            r(1.0, 0.95, "direct", None),
        ];
        let o = sweep_optima(&rows);
        assert_eq!(o.len(), 2);
        assert_eq!((o[0].accuracy, o[0].sigma), (0.9, 2.0));
        assert_eq!(o[1].mode, "direct");
    }
}
