use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tsallis_core::harness::{
    self, cmd_gen, cmd_oracle, cmd_run, cmd_sweep, cmd_verify, ExperimentConfig, QuantityKind,
    RunMode, SweepGrid, SweepRow, VerifyOptions,
};
use tsallis_core::{LabError, Result};

/// Quantum affinity, Tsallis relative entropy and Hellinger certification
/// experiments on simulated low-rank states.
#[derive(Parser, Debug)]
#[command(name = "tsallis-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random instance pair and its oracle manifest.
    Gen {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        point: Point,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the exact divergences of an instance as JSON.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run seeded estimator trials and write one CSV row per trial.
    Run {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a grid of configurations and write one aggregated CSV row per cell.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        rank: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        mode: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the numerical verification suites.
    Verify {
        /// Run only this suite.
        #[arg(long)]
        suite: Option<String>,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Random pairs per matrix inequality.
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
        /// Random tuples per proposition check.
        #[arg(long, default_value_t = 100)]
        tuples: usize,
        /// Negate p₁ in the proposition suites (mutation check).
        #[arg(long)]
        flip_p1_sign: bool,
    },
}

/// Settings shared by the experiment subcommands; flags override `--config`.
#[derive(Args, Debug)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// affinity, tsallis or hellinger.
    #[arg(long)]
    quantity: Option<String>,
    /// Certification thresholds as `eps1,eps2`.
    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<f64>>,
    /// Fixture name (identical-pure, orthogonal-pure, diag) or instance directory.
    #[arg(long)]
    instance: Option<String>,
    /// Record per-trial wall-clock milliseconds.
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
}

/// Single-valued grid coordinates.
#[derive(Args, Debug)]
struct Point {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    /// query, sample-ideal or sample-lmr.
    #[arg(long)]
    mode: Option<String>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.dim {
            cfg.dim = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.quantity {
            cfg.quantity = v.parse::<QuantityKind>()?;
        }
        if let Some(v) = &self.thresholds {
            let [a, b] = v[..] else {
                return Err(LabError::InvalidArgument(format!(
                    "--thresholds takes two values, got {}",
                    v.len()
                )));
            };
            cfg.thresholds = Some((a, b));
        }
        if let Some(v) = &self.instance {
            cfg.instance = Some(v.clone());
        }
        if self.timing {
            cfg.timing = true;
        }
        if let Some(v) = self.c0 {
            cfg.c0 = v;
        }
        if let Some(v) = self.c1 {
            cfg.c1 = v;
        }
        Ok(cfg)
    }
}

impl Point {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.rank {
            cfg.rank = v;
        }
        if let Some(v) = self.eps {
            cfg.eps = v;
        }
        if let Some(v) = &self.mode {
            cfg.mode = v.parse::<RunMode>()?;
        }
        Ok(())
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn point_config(common: &Common, point: &Point) -> Result<ExperimentConfig> {
    let mut cfg = common.config()?;
    point.apply(&mut cfg)?;
    Ok(cfg)
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Gen { common, point, out } => {
            let cfg = point_config(&common, &point)?;
            let manifest = cmd_gen(&cfg, &out)?;
            eprintln!(
                "wrote {} (affinity {:.12})",
                out.display(),
                manifest.oracle.affinity_alpha
            );
        }
        Command::Oracle { common, point, out } => {
            let cfg = point_config(&common, &point)?;
            let report = cmd_oracle(&cfg)?;
            let mut w = output(&out)?;
            writeln!(w, "{}", serde_json::to_string_pretty(&report).expect("report serializes"))?;
            w.flush()?;
        }
        Command::Run { common, point, out } => {
            let cfg = point_config(&common, &point)?;
            let report = cmd_run(&cfg)?;
            let mut w = output(&out.or_else(|| cfg.output_path.clone()))?;
            report.write_csv(&cfg, &mut w)?;
            w.flush()?;
            eprintln!(
                "{}: {}/{} trials within tolerance",
                report.instance,
                report.successes(),
                report.rows.len()
            );
        }
        Command::Sweep { common, alpha, rank, eps, mode, out } => {
            let base = common.config()?;
            let modes = if mode.is_empty() {
                vec![base.mode]
            } else {
                mode.iter().map(|m| m.parse::<RunMode>()).collect::<Result<Vec<_>>>()?
            };
            let grid = SweepGrid {
                alphas: if alpha.is_empty() { vec![base.alpha] } else { alpha },
                ranks: if rank.is_empty() { vec![base.rank] } else { rank },
                epss: if eps.is_empty() { vec![base.eps] } else { eps },
                modes,
            };
            let rows = cmd_sweep(&base, &grid)?;
            let mut w = output(&out)?;
            SweepRow::write_csv(&rows, &mut w)?;
            w.flush()?;
        }
        Command::Verify { suite, seed, pairs, tuples, flip_p1_sign } => {
            let opts = VerifyOptions { seed, pairs, tuples, flip_p1_sign };
            let report = cmd_verify(suite.as_deref(), &opts)?;
            print!("{}", report.render());
            if !report.passed() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}
