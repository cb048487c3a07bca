use std::io::Write;
use std::time::Instant;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use super::config::{ExperimentConfig, QuantityKind, RunMode};
use super::instance::{resolve_instance, Instance};
use super::{derive_seed, thread_pool};
use crate::error::{LabError, Result};
use crate::estimators::{
    certification_precision, Decision, Ledger, ParameterSchedule, PreparedCertification,
    PreparedEstimator, Quantity,
};
use crate::polyapprox::{neg_power_degree_formula, pos_power_degree_formula};

/// One trial, serialized as one CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRow {
    pub seed: u64,
    pub alpha: f64,
    pub dim: usize,
    pub rank: usize,
    pub eps: f64,
    pub value: f64,
    pub oracle: f64,
    pub abs_error: f64,
    pub queries_rho: u64,
    pub queries_sigma: u64,
    pub d1: usize,
    pub d2: usize,
    pub wall_ms: u64,
    pub samples_rho: Option<BigUint>,
    pub samples_sigma: Option<BigUint>,
    pub mode: RunMode,
    pub k: Option<u128>,
    pub decision: Option<Decision>,
    pub success: bool,
}

impl TrialRow {
    /// Oracle queries or state samples consumed.
    pub fn cost(&self) -> f64 {
        match (&self.samples_rho, &self.samples_sigma) {
            (Some(a), Some(b)) => (a + b).to_f64().unwrap_or(f64::INFINITY),
            _ => (self.queries_rho + self.queries_sigma) as f64,
        }
    }
}

/// Rows of a run plus the schedule they share.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub rows: Vec<TrialRow>,
    pub schedule: Option<ParameterSchedule>,
    pub instance: String,
}

impl RunReport {
    pub fn successes(&self) -> usize {
        self.rows.iter().filter(|r| r.success).count()
    }

    pub fn header(mode: RunMode, quantity: QuantityKind) -> Vec<&'static str> {
        let mut h = vec![
            "seed", "alpha", "dim", "rank", "eps", "value", "oracle", "abs_error", "queries_rho",
            "queries_sigma", "d1", "d2", "wall_ms",
        ];
        if mode.is_sample() {
            h.extend(["samples_rho", "samples_sigma", "mode", "k"]);
        }
        if quantity == QuantityKind::Hellinger {
            h.push("decision");
        }
        h
    }

    /// CSV with a header line; nothing at all when there are no rows.
    pub fn write_csv<W: Write>(&self, config: &ExperimentConfig, out: W) -> Result<()> {
        if self.rows.is_empty() {
            return Ok(());
        }
        let mut w = csv::Writer::from_writer(out);
        let header = Self::header(config.mode, config.quantity);
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![
                r.seed.to_string(),
                r.alpha.to_string(),
                r.dim.to_string(),
                r.rank.to_string(),
                r.eps.to_string(),
                r.value.to_string(),
                r.oracle.to_string(),
                r.abs_error.to_string(),
                r.queries_rho.to_string(),
                r.queries_sigma.to_string(),
                r.d1.to_string(),
                r.d2.to_string(),
                r.wall_ms.to_string(),
            ];
            if config.mode.is_sample() {
                let big = |b: &Option<BigUint>| b.as_ref().map(|x| x.to_string()).unwrap_or_default();
                rec.push(big(&r.samples_rho));
                rec.push(big(&r.samples_sigma));
                rec.push(r.mode.as_str().into());
                rec.push(r.k.map(|k| k.to_string()).unwrap_or_default());
            }
            if config.quantity == QuantityKind::Hellinger {
                rec.push(r.decision.map(|d| d.as_str().to_string()).unwrap_or_default());
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> LabError {
    LabError::Io(e.to_string())
}

enum Prepared {
    Estimate(PreparedEstimator),
    Certify(PreparedCertification, (f64, f64)),
}

fn base_row(config: &ExperimentConfig, inst: &Instance, seed: u64, s: &ParameterSchedule) -> TrialRow {
    TrialRow {
        seed,
        alpha: config.alpha,
        dim: inst.dim(),
        rank: config.rank,
        eps: config.eps,
        value: 0.0,
        oracle: 0.0,
        abs_error: 0.0,
        queries_rho: 0,
        queries_sigma: 0,
        d1: s.d1,
        d2: s.d2,
        wall_ms: 0,
        samples_rho: None,
        samples_sigma: None,
        mode: config.mode,
        k: s.k_repetitions,
        decision: None,
        success: false,
    }
}

fn fill_ledger(row: &mut TrialRow, ledger: &Ledger) {
    match ledger {
        Ledger::Query(l) => {
            row.queries_rho = l.queries_rho;
            row.queries_sigma = l.queries_sigma;
        }
        Ledger::Sample(l) => {
            row.samples_rho = Some(l.samples_rho.clone());
            row.samples_sigma = Some(l.samples_sigma.clone());
        }
    }
}

fn run_trial(config: &ExperimentConfig, inst: &Instance, prepared: &Prepared, index: u64) -> TrialRow {
    let seed = derive_seed(config.seed, index);
    let start = Instant::now();
    let mut row = match prepared {
        Prepared::Estimate(p) => {
            let out = p.run(seed);
            let mut row = base_row(config, inst, seed, p.schedule());
            row.value = out.value;
            row.oracle = out.oracle_value;
            row.abs_error = out.abs_error;
            row.success = out.abs_error <= config.eps;
            fill_ledger(&mut row, &out.ledger);
            row
        }
        Prepared::Certify(p, (lo, hi)) => {
            let out = p.run(seed);
            let mut row = base_row(config, inst, seed, p.estimator().schedule());
            row.alpha = 0.5;
            row.eps = p.estimator().schedule().eps;
            row.value = out.hellinger_estimate;
            row.oracle = out.hellinger_oracle;
            row.abs_error = (out.hellinger_estimate - out.hellinger_oracle).abs();
            row.decision = Some(out.decision);
            row.success = if out.hellinger_oracle <= *lo {
                out.decision == Decision::Close
            } else if out.hellinger_oracle >= *hi {
                out.decision == Decision::Far
            } else {
                true
            };
            fill_ledger(&mut row, &out.affinity.ledger);
            row
        }
    };
    if config.timing {
        row.wall_ms = start.elapsed().as_millis() as u64;
    }
    row
}

fn prepare(config: &ExperimentConfig, inst: &Instance) -> Result<Prepared> {
    let access = config.mode.access();
    let p = match config.quantity {
        QuantityKind::Hellinger => {
            let (lo, hi) = config.thresholds.expect("validated");
            certification_precision(lo, hi)?;
            Prepared::Certify(
                PreparedCertification::prepare(access, &inst.rho, &inst.sigma, config.rank, lo, hi)?,
                (lo, hi),
            )
        }
        q => {
            let quantity = if q == QuantityKind::Tsallis { Quantity::Tsallis } else { Quantity::Affinity };
            Prepared::Estimate(
                PreparedEstimator::prepare_with(
                    access,
                    quantity,
                    &inst.rho,
                    &inst.sigma,
                    config.rank,
                    config.eps,
                    config.alpha,
                    config.c1,
                    config.c0,
                )?,
            )
        }
    };
    Ok(p)
}

/// Runs `config.trials` seeded trials; rows come back in trial order.
pub fn cmd_run(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let inst = resolve_instance(config)?;
    if config.trials == 0 {
        return Ok(RunReport { rows: Vec::new(), schedule: None, instance: inst.name });
    }
    let prepared = prepare(config, &inst)?;
    let schedule = match &prepared {
        Prepared::Estimate(p) => p.schedule().clone(),
        Prepared::Certify(p, _) => p.estimator().schedule().clone(),
    };
    let pool = thread_pool()?;
    let rows: Vec<TrialRow> = pool.install(|| {
        (0..config.trials as u64)
            .into_par_iter()
            .map(|i| run_trial(config, &inst, &prepared, i))
            .collect()
    });
    Ok(RunReport { rows, schedule: Some(schedule), instance: inst.name })
}

/// Cartesian grid of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub alphas: Vec<f64>,
    pub ranks: Vec<usize>,
    pub epss: Vec<f64>,
    pub modes: Vec<RunMode>,
}

/// Aggregate of one sweep cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub rank: usize,
    pub eps: f64,
    pub mode: RunMode,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_abs_error: f64,
    pub mean_cost: f64,
    pub d1: usize,
    pub d2: usize,
    pub d1_formula: f64,
    pub d2_formula: f64,
}

impl SweepRow {
    pub const HEADER: [&'static str; 13] = [
        "alpha", "rank", "eps", "mode", "trials", "successes", "success_rate", "mean_abs_error",
        "mean_cost", "d1", "d2", "d1_formula", "d2_formula",
    ];

    pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::HEADER).map_err(csv_err)?;
        for r in rows {
            w.write_record([
                r.alpha.to_string(),
                r.rank.to_string(),
                r.eps.to_string(),
                r.mode.as_str().to_string(),
                r.trials.to_string(),
                r.successes.to_string(),
                r.success_rate.to_string(),
                r.mean_abs_error.to_string(),
                r.mean_cost.to_string(),
                r.d1.to_string(),
                r.d2.to_string(),
                r.d1_formula.to_string(),
                r.d2_formula.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn aggregate(config: &ExperimentConfig, report: &RunReport) -> SweepRow {
    let n = report.rows.len();
    let mean = |f: &dyn Fn(&TrialRow) -> f64| {
        if n == 0 {
            0.0
        } else {
            report.rows.iter().map(f).sum::<f64>() / n as f64
        }
    };
    let (d1, d2, d1_formula, d2_formula) = match &report.schedule {
        Some(s) => {
            let c = 1.0 - s.alpha_effective;
            (
                s.d1,
                s.d2,
                neg_power_degree_formula(c, s.delta1, s.eps1),
                pos_power_degree_formula(c, s.eps2),
            )
        }
        None => (0, 0, 0.0, 0.0),
    };
    let successes = report.successes();
    SweepRow {
        alpha: config.alpha,
        rank: config.rank,
        eps: config.eps,
        mode: config.mode,
        trials: n,
        successes,
        success_rate: if n == 0 { 0.0 } else { successes as f64 / n as f64 },
        mean_abs_error: mean(&|r| r.abs_error),
        mean_cost: mean(&|r| r.cost()),
        d1,
        d2,
        d1_formula,
        d2_formula,
    }
}

/// Runs every cell of the grid with the base config's seed, trials and instance.
pub fn cmd_sweep(base: &ExperimentConfig, grid: &SweepGrid) -> Result<Vec<SweepRow>> {
    if grid.alphas.is_empty() || grid.ranks.is_empty() || grid.epss.is_empty() || grid.modes.is_empty() {
        return Err(LabError::InvalidArgument("every sweep axis needs at least one value".into()));
    }
    let mut rows = Vec::new();
    for &mode in &grid.modes {
        for &alpha in &grid.alphas {
            for &rank in &grid.ranks {
                for &eps in &grid.epss {
                    let cfg = ExperimentConfig { alpha, rank, eps, mode, ..base.clone() };
                    let report = cmd_run(&cfg)?;
                    rows.push(aggregate(&cfg, &report));
                }
            }
        }
    }
    Ok(rows)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len()) as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}
