//! Amplitude estimation, the Hadamard-test pipeline and the affinity, Tsallis
//! and Hellinger estimators built on it.
//!
//! Bit convention: in the query model `X` estimates the probability of
//! outcome 0 and the affinity estimate is `16δ₁^{α−1}(2X − 1)`; in the sample
//! model `X` is the mean of the outcome bits and the estimate is
//! `16δ₁^{α−1}(1 − 2X)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blockenc::{
    block_product, density_block_encoding, eigen_transform, encoded_block, purified_oracle,
    BlockEncoding,
};
use crate::densityops::{affinity_exact, hellinger_exact, tsallis_exact, DensityOperator};
use crate::error::{LabError, Result};
use crate::linalg::{self, C64};
use crate::polyapprox::{build_neg_power_poly, build_pos_power_poly, ApproxPolynomial};
use crate::samplizer::{self, SampleLedger, SamplePlan, SamplizerMode};

/// Hoeffding constant: `k = ⌈c₁/ε_H²⌉` repetitions in the sample model.
pub const DEFAULT_C1: f64 = 8.0;
/// Failure probability handed to amplitude estimation.
pub const AMP_EST_FAILURE: f64 = 0.25;
/// Half-width of the exactly enumerated window of the QAE outcome distribution.
const QAE_WINDOW: u64 = 16_384;

/// Tolerances of one estimator run.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSchedule {
    /// `α` as requested by the caller.
    pub alpha_input: f64,
    /// `α` after the swap rule (always at least 1/2).
    pub alpha_effective: f64,
    /// Whether the roles of the two states were exchanged.
    pub swapped: bool,
    pub rank: usize,
    pub eps: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps_h: f64,
    pub delta1: f64,
    pub delta1p: f64,
    pub delta2p: f64,
    /// Samplizer deviation; sample model only.
    pub delta: Option<f64>,
    /// Bernoulli repetitions; sample model only.
    pub k_repetitions: Option<u128>,
    pub d1: usize,
    pub d2: usize,
}

fn validate_common(alpha: f64, r: usize, eps: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(LabError::InvalidArgument(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(LabError::InvalidArgument(format!("eps = {eps} must lie in (0, 1)")));
    }
    if r == 0 {
        return Err(LabError::InvalidArgument("rank bound r must be positive".into()));
    }
    Ok(())
}

fn effective_alpha(alpha: f64) -> (f64, bool) {
    if alpha < 0.5 {
        (1.0 - alpha, true)
    } else {
        (alpha, false)
    }
}

impl ParameterSchedule {
    /// Query-model tolerances.
    pub fn query(alpha: f64, r: usize, eps: f64) -> Result<Self> {
        validate_common(alpha, r, eps)?;
        let (a, swapped) = effective_alpha(alpha);
        let rf = r as f64;
        let root = eps.powf(1.0 / a);
        let c16 = 16f64.powf(1.0 / a);
        let delta1 = root / (c16 * rf);
        let small = root / (16.0 * c16 * rf.powf(1.0 - a));
        Ok(ParameterSchedule {
            alpha_input: alpha,
            alpha_effective: a,
            swapped,
            rank: r,
            eps,
            eps1: delta1,
            eps2: rf.powf(a - 1.0) * eps / 8.0,
            eps_h: root / (8.0 * c16 * rf.powf(1.0 - a)),
            delta1,
            delta1p: small,
            delta2p: small,
            delta: None,
            k_repetitions: None,
            d1: 0,
            d2: 0,
        })
    }

    /// Sample-model tolerances with `k = ⌈c₁/ε_H²⌉`.
    pub fn sample(alpha: f64, r: usize, eps: f64, c1: f64) -> Result<Self> {
        validate_common(alpha, r, eps)?;
        if !(c1 > 0.0) {
            return Err(LabError::InvalidArgument(format!("c1 = {c1} must be positive")));
        }
        let (a, swapped) = effective_alpha(alpha);
        let rf = r as f64;
        let root = eps.powf(1.0 / a);
        let c40 = 40f64.powf(1.0 / a);
        let delta1 = root / (c40 * rf);
        let eps_h = root / (256.0 * c40 * rf.powf(1.0 - a));
        let small = root / (128.0 * c40 * rf.powf(1.0 - a));
        let k = (c1 / (eps_h * eps_h)).ceil();
        Ok(ParameterSchedule {
            alpha_input: alpha,
            alpha_effective: a,
            swapped,
            rank: r,
            eps,
            eps1: delta1,
            eps2: rf.powf(a - 1.0) * eps / 8.0,
            eps_h,
            delta1,
            delta1p: small,
            delta2p: small,
            delta: Some(eps_h),
            k_repetitions: Some(k as u128),
            d1: 0,
            d2: 0,
        })
    }

    /// Output multiplier `16δ₁^{α−1}`.
    pub fn output_scale(&self) -> f64 {
        16.0 * self.delta1.powf(self.alpha_effective - 1.0)
    }

    /// Deviation bound of the query-model estimate when `|X − p₀| ≤ ε_H`.
    pub fn query_total_bound(&self) -> f64 {
        let a = self.alpha_effective;
        let r = self.rank as f64;
        let d = self.delta1;
        self.output_scale() * (2.0 * self.eps_h + self.delta1p + self.delta2p)
            + (r * self.eps2 + r.powf(a) / 2.0)
                * (6.0 * d.powf(a) + 4.0 * self.eps1 * d.powf(a - 1.0))
            + 2.0 * r.powf(1.0 - a) * self.eps2
    }

    /// Deviation bound of the sample-model estimate when `|X − Pr[1]| ≤ ε_H`.
    pub fn sample_total_bound(&self) -> f64 {
        let a = self.alpha_effective;
        let r = self.rank as f64;
        let d = self.delta1;
        let delta = self.delta.unwrap_or(0.0);
        self.output_scale() * (2.0 * (self.eps_h + delta) + self.delta1p + self.delta2p)
            + (r * self.eps2 + 2f64.powf(a - 2.0) * r.powf(a))
                * (16.0 * d.powf(a) + 4.0 * self.eps1 * d.powf(a - 1.0))
            + 2f64.powf(2.0 - a) * r.powf(1.0 - a) * self.eps2
    }
}

/// Oracle queries spent in the query model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct QueryLedger {
    pub queries_rho: u64,
    pub queries_sigma: u64,
}

/// Queries to each oracle per application of a unitary.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct QueryCost {
    pub rho: u64,
    pub sigma: u64,
}

impl QueryLedger {
    pub fn charge(&mut self, cost: QueryCost, times: u64) {
        self.queries_rho = self.queries_rho.saturating_add(cost.rho.saturating_mul(times));
        self.queries_sigma = self.queries_sigma.saturating_add(cost.sigma.saturating_mul(times));
    }

    pub fn total(&self) -> u64 {
        self.queries_rho.saturating_add(self.queries_sigma)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Ledger {
    Query(QueryLedger),
    Sample(SampleLedger),
}

/// Record of one estimator run.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateOutcome {
    pub value: f64,
    /// `value` clamped to the range of the estimated quantity.
    pub clamped: f64,
    pub oracle_value: f64,
    pub abs_error: f64,
    pub schedule: ParameterSchedule,
    pub ledger: Ledger,
    pub trial_seed: u64,
    /// The estimated outcome statistic `X`.
    pub statistic: f64,
    /// The exact probability that `X` estimates.
    pub statistic_target: f64,
}

/// `(1 + Re tr(Aρ))/2` for the block `A` of a scale-1 block-encoding.
pub fn hadamard_test_prob(be: &BlockEncoding, rho: &DensityOperator) -> Result<f64> {
    if be.system_dim() != rho.dim() {
        return Err(LabError::DimensionMismatch {
            left: be.system_dim(),
            right: rho.dim(),
        });
    }
    if (be.scale() - 1.0).abs() > 1e-12 {
        return Err(LabError::InvalidArgument(format!(
            "Hadamard test needs scale 1, got {}",
            be.scale()
        )));
    }
    let t = linalg::trace_product(&encoded_block(be), rho.matrix()).re;
    Ok((0.5 * (1.0 + t)).clamp(0.0, 1.0))
}

/// Number of grid points `M = 2^⌈log₂(π/ε)⌉` of canonical amplitude estimation.
pub fn qae_grid_size(eps: f64) -> u64 {
    let m = (std::f64::consts::PI / eps).log2().ceil().max(0.0);
    1u64 << (m as u32).min(62)
}

/// Rounds `⌈18 ln(1/δ)⌉` of the median amplification.
pub fn qae_rounds(delta: f64) -> u64 {
    (18.0 * (1.0 / delta).ln()).ceil().max(1.0) as u64
}

/// Fejér kernel `sin²(πΔ)/(M² sin²(πΔ/M))`: probability of landing `Δ` grid
/// steps away from the true phase.
fn fejer(delta: f64, m: f64) -> f64 {
    let den = (std::f64::consts::PI * delta / m).sin();
    if den.abs() < 1e-300 {
        return 1.0;
    }
    let num = (std::f64::consts::PI * delta).sin();
    (num * num) / (m * m * den * den)
}

/// Outcome sampler for one canonical QAE measurement.
struct QaeSampler {
    m: u64,
    base: i64,
    cdf: Vec<f64>,
    window_mass: f64,
    full: bool,
}

impl QaeSampler {
    fn new(p: f64, m: u64) -> Self {
        let theta = p.clamp(0.0, 1.0).sqrt().asin();
        let center = m as f64 * theta / std::f64::consts::PI;
        let full = m <= 2 * QAE_WINDOW + 2;
        let (base, len) = if full {
            (0i64, m as usize)
        } else {
            (center.floor() as i64 - QAE_WINDOW as i64, (2 * QAE_WINDOW + 2) as usize)
        };
        let mut cdf = Vec::with_capacity(len);
        let mut acc = 0.0;
        for i in 0..len {
            let y = base + i as i64;
            acc += fejer(y as f64 - center, m as f64);
            cdf.push(acc);
        }
        let window_mass = acc.min(1.0);
        QaeSampler {
            m,
            base,
            cdf,
            window_mass,
            full,
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let total = *self.cdf.last().unwrap();
        if self.full || u < self.window_mass {
            let target = if self.full { u * total } else { u };
            let i = self.cdf.partition_point(|&c| c <= target).min(self.cdf.len() - 1);
            return (self.base + i as i64).rem_euclid(self.m as i64) as u64;
        }
        // Far tail, mass below 1e-4: uniform over the grid outside the window.
        let outside = self.m - self.cdf.len() as u64;
        let j = rng.random_range(0..outside.max(1));
        (self.base + self.cdf.len() as i64 + j as i64).rem_euclid(self.m as i64) as u64
    }
}

/// Simulated canonical amplitude estimation of `p_true` with the median of
/// `⌈18 ln(1/δ)⌉` rounds; charges `M` applications of the unitary per round.
pub fn amp_est<R: Rng + ?Sized>(
    p_true: f64,
    eps: f64,
    delta: f64,
    rng: &mut R,
    cost: QueryCost,
    ledger: &mut QueryLedger,
) -> f64 {
    let m = qae_grid_size(eps);
    let rounds = qae_rounds(delta);
    let sampler = QaeSampler::new(p_true, m);
    let mut estimates: Vec<f64> = (0..rounds)
        .map(|_| {
            let y = sampler.draw(rng);
            let s = (std::f64::consts::PI * y as f64 / m as f64).sin();
            s * s
        })
        .collect();
    ledger.charge(cost, m.saturating_mul(rounds));
    estimates.sort_by(f64::total_cmp);
    estimates[estimates.len() / 2]
}

// ---------------------------------------------------------------------------
// Hadamard-test pipeline

/// The block-encoded product and its Hadamard-test statistics.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub p1: ApproxPolynomial,
    pub p2: ApproxPolynomial,
    pub product: BlockEncoding,
    /// Probability of outcome 0 of the exact Hadamard test on the first state.
    pub p0: f64,
}

/// Builds `U_{p₁(A)p₂(B)}` and its Hadamard-test probability. With
/// `halve_inputs` the inputs are block-encodings of `ρ/2`, `σ/2`.
pub fn build_pipeline(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    schedule: &mut ParameterSchedule,
    halve_inputs: bool,
) -> Result<Pipeline> {
    let a = schedule.alpha_effective;
    let p1 = build_neg_power_poly(1.0 - a, schedule.delta1, schedule.eps1)?;
    let p2 = build_pos_power_poly(1.0 - a, schedule.eps2)?;
    schedule.d1 = p1.degree();
    schedule.d2 = p2.degree();
    let (ua, ub) = if halve_inputs {
        let half = C64::new(0.5, 0.0);
        let ra = rho.matrix() * half;
        let sb = sigma.matrix() * half;
        (
            BlockEncoding::from_block(&ra, 1.0, 0.0, Some(ra.clone()))?,
            BlockEncoding::from_block(&sb, 1.0, 0.0, Some(sb.clone()))?,
        )
    } else {
        (
            density_block_encoding(&purified_oracle(rho))?,
            density_block_encoding(&purified_oracle(sigma))?,
        )
    };
    let t1 = eigen_transform(&ua, &p1.scaled(0.5), schedule.delta1p)?;
    let t2 = eigen_transform(&ub, &p2.scaled(0.5), schedule.delta2p)?;
    let product = block_product(&t1, &t2)?;
    let p0 = hadamard_test_prob(&product, rho)?;
    Ok(Pipeline { p1, p2, product, p0 })
}

/// Quantity reported by an estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Affinity,
    Tsallis,
}

/// Query or sample access to the states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Access {
    Query,
    Sample(SamplizerMode),
}

/// Everything about an estimator run that does not depend on randomness.
#[derive(Clone, Debug)]
pub struct PreparedEstimator {
    access: Access,
    quantity: Quantity,
    alpha: f64,
    schedule: ParameterSchedule,
    pipeline: Pipeline,
    oracle_value: f64,
    query_cost: QueryCost,
    sample_plan: Option<SamplePlan>,
}

fn check_inputs(rho: &DensityOperator, sigma: &DensityOperator, r: usize) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(LabError::DimensionMismatch {
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    let worst = rho.rank().max(sigma.rank());
    if worst > r {
        return Err(LabError::InvalidArgument(format!(
            "input rank {worst} exceeds the bound r = {r}"
        )));
    }
    Ok(())
}

impl PreparedEstimator {
    /// Schedule, polynomials, block-encodings and output statistics for
    /// estimating `quantity` to precision `eps`.
    pub fn prepare(
        access: Access,
        quantity: Quantity,
        rho: &DensityOperator,
        sigma: &DensityOperator,
        r: usize,
        eps: f64,
        alpha: f64,
    ) -> Result<Self> {
        Self::prepare_with(access, quantity, rho, sigma, r, eps, alpha, DEFAULT_C1, samplizer::DEFAULT_C0)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn prepare_with(
        access: Access,
        quantity: Quantity,
        rho: &DensityOperator,
        sigma: &DensityOperator,
        r: usize,
        eps: f64,
        alpha: f64,
        c1: f64,
        c0: f64,
    ) -> Result<Self> {
        check_inputs(rho, sigma, r)?;
        let affinity_eps = match quantity {
            Quantity::Affinity => eps,
            Quantity::Tsallis => (1.0 - alpha) * eps,
        };
        let mut schedule = match access {
            Access::Query => ParameterSchedule::query(alpha, r, affinity_eps)?,
            Access::Sample(_) => ParameterSchedule::sample(alpha, r, affinity_eps, c1)?,
        };
        let (first, second) = if schedule.swapped { (sigma, rho) } else { (rho, sigma) };
        let pipeline = build_pipeline(first, second, &mut schedule, matches!(access, Access::Sample(_)))?;
        let oracle_value = match quantity {
            Quantity::Affinity => affinity_exact(rho, sigma, alpha)?,
            Quantity::Tsallis => tsallis_exact(rho, sigma, alpha)?,
        };
        // Per Hadamard-test execution: U_{p₁} calls the density encoding d₁
        // times (O and O† each), plus one query preparing the input state.
        let (c_first, c_second) = (2 * schedule.d1 as u64 + 1, 2 * schedule.d2 as u64);
        let query_cost = if schedule.swapped {
            QueryCost { rho: c_second, sigma: c_first }
        } else {
            QueryCost { rho: c_first, sigma: c_second }
        };
        let sample_plan = match access {
            Access::Query => None,
            Access::Sample(mode) => {
                let register = 1 + pipeline.product.ancilla_qubits() + pipeline.product.system_qubits();
                Some(SamplePlan::new(&schedule, pipeline.p0, register, mode, c0)?)
            }
        };
        Ok(PreparedEstimator {
            access,
            quantity,
            alpha,
            schedule,
            pipeline,
            oracle_value,
            query_cost,
            sample_plan,
        })
    }

    pub fn schedule(&self) -> &ParameterSchedule {
        &self.schedule
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn oracle_value(&self) -> f64 {
        self.oracle_value
    }

    pub fn access(&self) -> Access {
        self.access
    }

    pub fn query_cost(&self) -> QueryCost {
        self.query_cost
    }

    pub fn sample_plan(&self) -> Option<&SamplePlan> {
        self.sample_plan.as_ref()
    }

    /// Exact probability that the outcome statistic `X` estimates.
    pub fn statistic_target(&self) -> f64 {
        match &self.sample_plan {
            None => self.pipeline.p0,
            Some(plan) => plan.prob_one,
        }
    }

    /// Affinity estimate obtained from a given value of the statistic.
    pub fn affinity_from_statistic(&self, x: f64) -> f64 {
        let s = self.schedule.output_scale();
        match self.access {
            Access::Query => s * (2.0 * x - 1.0),
            Access::Sample(_) => s * (1.0 - 2.0 * x),
        }
    }

    /// One run with its own random stream.
    pub fn run(&self, trial_seed: u64) -> EstimateOutcome {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let (x, ledger) = match &self.sample_plan {
            None => {
                let mut ledger = QueryLedger::default();
                let x = amp_est(
                    self.pipeline.p0,
                    self.schedule.eps_h,
                    AMP_EST_FAILURE,
                    &mut rng,
                    self.query_cost,
                    &mut ledger,
                );
                (x, Ledger::Query(ledger))
            }
            Some(plan) => {
                let x = plan.draw_mean(&mut rng);
                let mut ledger = plan.ledger_per_execution(self.schedule.swapped);
                ledger.scale(plan.k);
                (x, Ledger::Sample(ledger))
            }
        };
        let affinity = self.affinity_from_statistic(x);
        let (value, clamped) = match self.quantity {
            Quantity::Affinity => (affinity, affinity.clamp(0.0, 1.0)),
            Quantity::Tsallis => {
                let v = (1.0 - affinity) / (1.0 - self.alpha);
                (v, v.clamp(0.0, 1.0 / (1.0 - self.alpha)))
            }
        };
        EstimateOutcome {
            value,
            clamped,
            oracle_value: self.oracle_value,
            abs_error: (value - self.oracle_value).abs(),
            schedule: self.schedule.clone(),
            ledger,
            trial_seed,
            statistic: x,
            statistic_target: self.statistic_target(),
        }
    }
}

/// Affinity estimate with query access.
pub fn affinity_est_q<R: Rng + ?Sized>(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    r: usize,
    eps: f64,
    alpha: f64,
    rng: &mut R,
) -> Result<EstimateOutcome> {
    let p = PreparedEstimator::prepare(Access::Query, Quantity::Affinity, rho, sigma, r, eps, alpha)?;
    Ok(p.run(rng.random()))
}

/// Tsallis relative entropy estimate with query access.
pub fn tsallis_est_q<R: Rng + ?Sized>(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    r: usize,
    eps: f64,
    alpha: f64,
    rng: &mut R,
) -> Result<EstimateOutcome> {
    let p = PreparedEstimator::prepare(Access::Query, Quantity::Tsallis, rho, sigma, r, eps, alpha)?;
    Ok(p.run(rng.random()))
}

// ---------------------------------------------------------------------------
// Tolerant certification in Hellinger distance

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Close,
    Far,
}

impl Decision {
    pub fn as_str(&self) -> &'static str {
        match self {
            Decision::Close => "close",
            Decision::Far => "far",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificationOutcome {
    pub decision: Decision,
    pub hellinger_estimate: f64,
    pub hellinger_oracle: f64,
    /// Midpoint of the two thresholds.
    pub threshold: f64,
    pub affinity: EstimateOutcome,
}

/// Precision `(ε₂ − ε₁)²/9` of the affinity estimate behind a certification.
pub fn certification_precision(thr_close: f64, thr_far: f64) -> Result<f64> {
    if !(0.0 <= thr_close && thr_close < thr_far && thr_far <= 1.0) {
        return Err(LabError::InvalidArgument(format!(
            "thresholds must satisfy 0 ≤ {thr_close} < {thr_far} ≤ 1"
        )));
    }
    Ok((thr_far - thr_close).powi(2) / 9.0)
}

/// Prepared tolerant Hellinger certification.
#[derive(Clone, Debug)]
pub struct PreparedCertification {
    estimator: PreparedEstimator,
    threshold: f64,
    hellinger_oracle: f64,
}

impl PreparedCertification {
    pub fn prepare(
        access: Access,
        rho: &DensityOperator,
        sigma: &DensityOperator,
        r: usize,
        thr_close: f64,
        thr_far: f64,
    ) -> Result<Self> {
        let precision = certification_precision(thr_close, thr_far)?;
        let estimator =
            PreparedEstimator::prepare(access, Quantity::Affinity, rho, sigma, r, precision, 0.5)?;
        Ok(PreparedCertification {
            estimator,
            threshold: 0.5 * (thr_close + thr_far),
            hellinger_oracle: hellinger_exact(rho, sigma)?,
        })
    }

    pub fn estimator(&self) -> &PreparedEstimator {
        &self.estimator
    }

    pub fn run(&self, trial_seed: u64) -> CertificationOutcome {
        let affinity = self.estimator.run(trial_seed);
        let d_hat = (1.0 - affinity.value).max(0.0).sqrt();
        CertificationOutcome {
            decision: if d_hat <= self.threshold { Decision::Close } else { Decision::Far },
            hellinger_estimate: d_hat,
            hellinger_oracle: self.hellinger_oracle,
            threshold: self.threshold,
            affinity,
        }
    }
}

/// Tolerant certification with query access: `close` when `d_H ≤ ε₁`, `far` when `d_H ≥ ε₂`.
pub fn hellinger_certify_q<R: Rng + ?Sized>(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    r: usize,
    thr_close: f64,
    thr_far: f64,
    rng: &mut R,
) -> Result<CertificationOutcome> {
    let p = PreparedCertification::prepare(Access::Query, rho, sigma, r, thr_close, thr_far)?;
    Ok(p.run(rng.random()))
}
