use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use graphtune::data::BlobSpec;
use graphtune::experiment::{
    write_json, DataSource, Experiment, ExperimentConfig, ExperimentError, LabelerKind,
};
use graphtune::SolverMode;

#[derive(Parser)]
#[command(name = "graphtune", version, about = "Tune the Gaussian bandwidth of graph-based semi-supervised learners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate constant-loss σ intervals and time them.
    Intervals(Overrides),
    /// Unlabeled accuracy over a σ grid for several solver settings.
    Sweep(Overrides),
    /// Online tuning of σ with Exp3-Set over a stream of instances.
    Online(Overrides),
    /// Write a synthetic two-blob dataset as CSV.
    Synth(Overrides),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Cg,
    Direct,
}

#[derive(Clone, Copy, ValueEnum)]
enum Labeler {
    Harmonic,
    Delalleau,
}

#[derive(Args)]
struct Overrides {
    /// JSON experiment config; defaults are used for missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// CG iterations.
    #[arg(long)]
    t: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, value_enum)]
    labeler: Option<Labeler>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn resolve(&self) -> Result<ExperimentConfig, ExperimentError> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::from_json_file(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(n) = self.n {
            c.n = n;
        }
        if let Some(k) = self.k {
            c.k = Some(k);
        }
        if let Some(l) = self.labeler {
            c.labeler = match l {
                Labeler::Harmonic => LabelerKind::Harmonic,
                Labeler::Delalleau => LabelerKind::Delalleau,
            };
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(o) = &self.out {
            c.out_dir = Some(o.clone());
        }
        let t = self.t.or(match c.solver {
            SolverMode::Cg { iterations } => Some(iterations),
            _ => None,
        });
        match self.mode {
            Some(Mode::Direct) => c.solver = SolverMode::MatrixInverse,
            Some(Mode::Cg) => c.solver = SolverMode::Cg { iterations: t.unwrap_or(20) },
            None => {
                if let Some(t) = self.t {
                    c.solver = SolverMode::Cg { iterations: t };
                }
            }
        }
        if c.out_dir.is_none() {
            c.out_dir = Some(PathBuf::from("out"));
        }
        c.validate()?;
        Ok(c)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<(), ExperimentError> {
    match command {
        Command::Intervals(o) => {
            let e = Experiment::new(o.resolve()?)?;
            let report = e.run_intervals()?;
            e.write_intervals(&report, None)?;
            let s = report.table.summary()?;
            println!(
                "{} [{}]: {} instances ({} failed), mean M = {:.1}, mean TpI = {:.4} s, mean best accuracy = {:.4}",
                e.method(&e.config().solver),
                e.hash(),
                s.completed,
                s.failed,
                s.mean_intervals,
                s.mean_tpi_seconds,
                s.mean_optimal_accuracy
            );
            if s.failed > 0 {
                return Err(ExperimentError::Config(format!("{} instances failed", s.failed)));
            }
        }
        Command::Sweep(o) => {
            let e = Experiment::new(o.resolve()?)?;
            let rows = e.run_sweep()?;
            e.write_sweep(&rows, None)?;
            for opt in graphtune::experiment::sweep_optima(&rows) {
                let t = opt.t.map_or(String::new(), |t| format!(" t={t}"));
                println!("{}{t}: best accuracy {:.4} at σ = {:.3}", opt.mode, opt.accuracy, opt.sigma);
            }
        }
        Command::Online(o) => {
            let e = Experiment::new(o.resolve()?)?;
            let report = e.run_online()?;
            e.write_online(&report, None)?;
            let s = report.summary();
            println!(
                "{} rounds, step {:.4}, average regret {}, {} flagged rounds",
                s.rounds,
                s.exp3_step,
                s.average_regret.map_or("n/a".into(), |r| format!("{r:.4}")),
                s.flagged_rounds
            );
        }
        Command::Synth(o) => synth(&o.resolve()?)?,
    }
    Ok(())
}

/// Writes `synth.csv` (class first, then features) and `synth.json`.
fn synth(c: &ExperimentConfig) -> Result<(), ExperimentError> {
    let (dim, separation, noise) = match c.source {
        DataSource::Blobs { dim, separation, noise } => (dim, separation, noise),
        _ => return Err(ExperimentError::Config("synth needs a blobs source".into())),
    };
    let spec = BlobSpec {
        n: c.n,
        dim,
        separation,
        noise,
        labeled: Some(c.n_labeled()),
    };
    let inst = spec.generate(c.seed)?;
    let dir = c.out_dir.as_deref().unwrap_or(Path::new("out"));
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let path = dir.join("synth.csv");
    let mut text = String::new();
    let classes = inst.dataset.classes().expect("blobs carry classes");
    for (i, p) in inst.dataset.points().enumerate() {
        text.push_str(&classes[i].to_string());
        for v in p {
            text.push(',');
            text.push_str(&v.to_string());
        }
        text.push('\n');
    }
    std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
    let e = Experiment::new(c.clone())?;
    write_json(&dir.join("synth.json"), &e.summary("synth", &spec))?;
    println!("wrote {} points of dimension {dim} to {}", c.n, path.display());
    Ok(())
}

fn io_error(path: &Path, source: std::io::Error) -> ExperimentError {
    ExperimentError::Io {
        path: path.display().to_string(),
        source,
    }
}
