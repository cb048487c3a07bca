//! Numerical verification suites. Each check records the largest observed
//! `lhs − rhs` of an inequality `lhs ≤ rhs`; it passes when that slack stays
//! below its tolerance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::blockenc::{
    block_product, density_block_encoding, eigen_transform, purified_oracle, verify as be_residual,
    BlockEncoding,
};
use crate::densityops::{
    affinity_exact, hellinger_exact, matrix_power, random_low_rank_state, schatten_norm,
    trace_distance_exact, tsallis_exact, DensityOperator,
};
use crate::error::{LabError, Result};
use crate::estimators::{Access, PreparedEstimator, Quantity};
use crate::linalg::{self, CMatrix, C64};
use crate::polyapprox::{
    build_neg_power_poly, build_pos_power_poly, eval_poly_matrix, for_each_grid_value,
    ApproxPolynomial,
};
use crate::samplizer::{
    channel_distance_upper, choi_distance, exact_channel, exact_evolution, lmr_channel,
    per_query_charge, samplize_channel, QueryCircuit, SampleLedger, SamplizerMode, DEFAULT_C0,
};

pub const SUITES: [&str; 12] = [
    "pinsker",
    "hellinger",
    "power-mean",
    "contractivity",
    "jordan-hahn",
    "holder",
    "faithfulness",
    "poly",
    "blockenc",
    "prop-query",
    "prop-sample",
    "samplizer",
];

const TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random pairs per inequality in the matrix-inequality suites.
    pub pairs: usize,
    /// Random tuples per proposition check.
    pub tuples: usize,
    /// Replace `p₁` by `−p₁` in the proposition suites.
    pub flip_p1_sign: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 2024,
            pairs: 1000,
            tuples: 100,
            flip_p1_sign: false,
        }
    }
}

/// Worst slack of one inequality.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub samples: usize,
    pub max_slack: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(suite: &'static str, name: &str) -> Self {
        Self::with_tolerance(suite, name, TOL)
    }

    fn with_tolerance(suite: &'static str, name: &str, tolerance: f64) -> Self {
        Check {
            suite,
            name: name.to_string(),
            samples: 0,
            max_slack: f64::NEG_INFINITY,
            tolerance,
        }
    }

    /// Records an instance of `lhs ≤ rhs`.
    fn observe(&mut self, lhs: f64, rhs: f64) {
        self.samples += 1;
        let slack = lhs - rhs;
        // NaN counts as a violation.
        self.max_slack = if slack.is_nan() { f64::INFINITY } else { self.max_slack.max(slack) };
    }

    pub fn passed(&self) -> bool {
        self.samples > 0 && self.max_slack <= self.tolerance
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn suite_passed(&self, suite: &str) -> bool {
        self.checks.iter().filter(|c| c.suite == suite).all(Check::passed)
    }

    /// One line per check.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{} {:<14} {:<44} n={:<6} max_slack={:+.3e}\n",
                if c.passed() { "PASS" } else { "FAIL" },
                c.suite,
                c.name,
                c.samples,
                c.max_slack
            ));
        }
        out
    }
}

/// Runs one suite, or all of them when `suite` is `None`.
pub fn cmd_verify(suite: Option<&str>, opts: &VerifyOptions) -> Result<VerifyReport> {
    let selected: Vec<&str> = match suite {
        None => SUITES.to_vec(),
        Some(s) if SUITES.contains(&s) => vec![s],
        Some(s) => {
            return Err(LabError::InvalidArgument(format!(
                "unknown suite '{s}' (expected one of {})",
                SUITES.join(", ")
            )))
        }
    };
    let mut report = VerifyReport::default();
    for (i, name) in selected.into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(i as u64));
        let checks = match name {
            "pinsker" => pinsker(opts, &mut rng)?,
            "hellinger" => hellinger(opts, &mut rng)?,
            "power-mean" => power_mean(opts, &mut rng)?,
            "contractivity" => contractivity(opts, &mut rng)?,
            "jordan-hahn" => jordan_hahn(opts, &mut rng)?,
            "holder" => holder(opts, &mut rng)?,
            "faithfulness" => faithfulness(opts, &mut rng)?,
            "poly" => poly()?,
            "blockenc" => blockenc(&mut rng)?,
            "prop-query" => propositions(opts, &mut rng, false)?,
            "prop-sample" => propositions(opts, &mut rng, true)?,
            "samplizer" => samplizer(&mut rng)?,
            _ => unreachable!(),
        };
        report.checks.extend(checks);
    }
    Ok(report)
}

fn random_state<R: Rng>(rng: &mut R, dims: &[usize]) -> Result<DensityOperator> {
    let d = dims[rng.random_range(0..dims.len())];
    let r = rng.random_range(1..=d);
    random_low_rank_state(d, r, rng.random())
}

fn random_pair<R: Rng>(rng: &mut R) -> Result<(DensityOperator, DensityOperator)> {
    let d = [2usize, 4][rng.random_range(0..2)];
    let r1 = rng.random_range(1..=d);
    let r2 = rng.random_range(1..=d);
    Ok((
        random_low_rank_state(d, r1, rng.random())?,
        random_low_rank_state(d, r2, rng.random())?,
    ))
}

fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

const ALPHAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

fn pinsker<R: Rng>(opts: &VerifyOptions, rng: &mut R) -> Result<Vec<Check>> {
    let mut lower = Check::new("pinsker", "2a·t² + (2/9)a(a+1)(2−a)·t⁴ ≤ D_T");
    let mut upper = Check::new("pinsker", "D_T ≤ t/(1−a)");
    for _ in 0..opts.pairs {
        let (rho, sigma) = random_pair(rng)?;
        let t = trace_distance_exact(&rho, &sigma)?;
        for a in ALPHAS {
            let d = tsallis_exact(&rho, &sigma, a)?;
            lower.observe(2.0 * a * t * t + 2.0 / 9.0 * a * (a + 1.0) * (2.0 - a) * t.powi(4), d);
            upper.observe(d, t / (1.0 - a));
        }
    }
    Ok(vec![lower, upper])
}

fn hellinger<R: Rng>(opts: &VerifyOptions, rng: &mut R) -> Result<Vec<Check>> {
    let mut lower = Check::new("hellinger", "d_H² ≤ d_tr");
    let mut upper = Check::new("hellinger", "d_tr ≤ √2·d_H");
    for _ in 0..opts.pairs {
        let (rho, sigma) = random_pair(rng)?;
        let h = hellinger_exact(&rho, &sigma)?;
        let t = trace_distance_exact(&rho, &sigma)?;
        lower.observe(h * h, t);
        upper.observe(t, std::f64::consts::SQRT_2 * h);
    }
    Ok(vec![lower, upper])
}

fn power_mean<R: Rng>(opts: &VerifyOptions, rng: &mut R) -> Result<Vec<Check>> {
    let mut c = Check::new("power-mean", "‖ρ^a‖₁ ≤ r^{1−a}");
    for _ in 0..opts.pairs {
        let rho = random_state(rng, &[2, 4, 8])?;
        let a = ALPHAS[rng.random_range(0..ALPHAS.len())];
        let norm = schatten_norm(&rho.power(a), 1.0)?;
        c.observe(norm, (rho.rank() as f64).powf(1.0 - a));
    }
    Ok(vec![c])
}

fn contractivity<R: Rng>(opts: &VerifyOptions, rng: &mut R) -> Result<Vec<Check>> {
    let pairs = [(1.0, 2.0), (1.0, f64::INFINITY), (2.0, f64::INFINITY)];
    let mut checks: Vec<Check> = pairs
        .iter()
        .map(|(p, q)| Check::new("contractivity", &format!("‖A‖_{p} ≤ r^(1/{p}−1/{q})‖A‖_{q}")))
        .collect();
    for _ in 0..opts.pairs {
        let d = [2usize, 4, 8][rng.random_range(0..3)];
        let r = rng.random_range(1..=d);
        let a = gaussian_matrix(rng, d, r) * gaussian_matrix(rng, r, d);
        for (check, &(p, q)) in checks.iter_mut().zip(pairs.iter()) {
            let factor = (r as f64).powf(1.0 / p - 1.0 / q);
            check.observe(schatten_norm(&a, p)?, factor * schatten_norm(&a, q)?);
        }
    }
    Ok(checks)
}

fn jordan_hahn<R: Rng>(opts: &VerifyOptions, rng: &mut R) -> Result<Vec<Check>> {
    let mut c = Check::new("jordan-hahn", "|tr(AB)| ≤ tr(A|B|)");
    for _ in 0..opts.pairs {
        let d = [2usize, 4, 8][rng.random_range(0..3)];
        let g = gaussian_matrix(rng, d, d);
        let a = &g * g.adjoint();
        let b = linalg::random_hermitian(d, rng);
        let abs_b = linalg::hermitian_map(&b, f64::abs);
        c.observe(linalg::trace_product(&a, &b).norm(), linalg::trace_product(&a, &abs_b).re);
    }
    Ok(vec![c])
}

fn holder<R: Rng>(opts: &VerifyOptions, rng: &mut R) -> Result<Vec<Check>> {
    let ps = [1.0, 4.0 / 3.0, 2.0, 4.0, f64::INFINITY];
    let conj = |p: f64| {
        if p == 1.0 {
            f64::INFINITY
        } else if p.is_infinite() {
            1.0
        } else {
            p / (p - 1.0)
        }
    };
    let mut checks: Vec<Check> = ps
        .iter()
        .map(|&p| Check::new("holder", &format!("‖AB‖₁ ≤ ‖A‖_{p:.3}‖B‖_{:.3}", conj(p))))
        .collect();
    for _ in 0..opts.pairs {
        let d = [2usize, 4, 8][rng.random_range(0..3)];
        let a = gaussian_matrix(rng, d, d);
        let b = gaussian_matrix(rng, d, d);
        let lhs = schatten_norm(&(&a * &b), 1.0)?;
        for (check, &p) in checks.iter_mut().zip(ps.iter()) {
            check.observe(lhs, schatten_norm(&a, p)? * schatten_norm(&b, conj(p))?);
        }
    }
    Ok(checks)
}

fn faithfulness<R: Rng>(opts: &VerifyOptions, rng: &mut R) -> Result<Vec<Check>> {
    let mut bound = Check::new("faithfulness", "d_tr ≥ 0.05 ⇒ A ≤ 1 − (1−a)·2a·0.05²");
    let mut symmetry = Check::with_tolerance("faithfulness", "|A_a(ρ,σ) − A_(1−a)(σ,ρ)|", 1e-10);
    for _ in 0..opts.pairs {
        let (rho, sigma) = random_pair(rng)?;
        let t = trace_distance_exact(&rho, &sigma)?;
        for a in ALPHAS {
            let aff = affinity_exact(&rho, &sigma, a)?;
            if t >= 0.05 {
                bound.observe(aff, 1.0 - (1.0 - a) * 2.0 * a * 0.05 * 0.05);
            }
            symmetry.observe((aff - affinity_exact(&sigma, &rho, 1.0 - a)?).abs(), 0.0);
        }
    }
    Ok(vec![bound, symmetry])
}

/// Largest `|p − target|` on the certified domain and largest `|p|` on
/// `[−1, 1]`, over at least `m_min + 1` Chebyshev nodes.
fn grid_stats(p: &ApproxPolynomial, m_min: usize) -> (f64, f64) {
    let (lo, hi) = p.target().domain().expect("builder output has a target");
    let target = p.target();
    let (mut err, mut bound) = (0.0f64, 0.0f64);
    let mut visit = |x: f64, v: f64| {
        bound = bound.max(v.abs());
        if x >= lo && x <= hi {
            if let Some(t) = target.value(x) {
                err = err.max((v - t).abs());
            }
        }
    };
    match p.chebyshev_coeffs() {
        Some(c) => for_each_grid_value(c, m_min, &mut visit),
        None => {
            for j in 0..=m_min {
                let x = (std::f64::consts::PI * j as f64 / m_min as f64).cos();
                visit(x, p.eval(x));
            }
        }
    }
    (err, bound)
}

fn poly() -> Result<Vec<Check>> {
    let mut accuracy = Check::new("poly", "neg power: grid sup-error ≤ ε");
    let mut bounded = Check::new("poly", "neg power: max |p| ≤ 1");
    let mut odd = Check::with_tolerance("poly", "neg power: |p(x) + p(−x)|", 1e-10);
    let mut scaling = Check::new("poly", "neg power: deg(δ/2) ≤ 4·deg(δ)");
    let mut pos_accuracy = Check::new("poly", "pos power: grid sup-error ≤ ε");
    let mut pos_bounded = Check::new("poly", "pos power: max |p| ≤ 1");
    for a in [0.25, 0.5, 0.75] {
        let c = 1.0 - a;
        for eps in [0.1, 0.01] {
            for delta in [0.2, 0.05] {
                let p = build_neg_power_poly(c, delta, eps)?;
                let (err, bound) = grid_stats(&p, (4 * p.degree() + 1000).max(10_000));
                accuracy.observe(err, eps);
                bounded.observe(bound, 1.0);
                for j in 0..1000 {
                    let x = -1.0 + 2.0 * j as f64 / 999.0;
                    odd.observe((p.eval(x) + p.eval(-x)).abs(), 0.0);
                }
                let half = build_neg_power_poly(c, delta / 2.0, eps)?;
                scaling.observe(half.degree() as f64, 4.0 * p.degree() as f64);
            }
            let q = build_pos_power_poly(c, eps)?;
            let (err, bound) = grid_stats(&q, (4 * q.degree() + 1000).max(10_000));
            pos_accuracy.observe(err, eps);
            pos_bounded.observe(bound, 1.0);
        }
    }
    Ok(vec![accuracy, bounded, odd, scaling, pos_accuracy, pos_bounded])
}

fn blockenc<R: Rng>(rng: &mut R) -> Result<Vec<Check>> {
    let mut residual = Check::new("blockenc", "density encoding residual ≤ 1e-9");
    let mut unitary = Check::new("blockenc", "encodings unitary within 1e-9");
    let mut functor = Check::new("blockenc", "eigen_transform(x/2) = block/2");
    let mut product = Check::new("blockenc", "product residual ≤ αδ + βε");
    let half = ApproxPolynomial::from_chebyshev(vec![0.0, 0.5])?;
    for k in 0..50 {
        let d = [2usize, 4, 8][k % 3];
        let rho = random_low_rank_state(d, rng.random_range(1..=d), rng.random())?;
        let be = density_block_encoding(&purified_oracle(&rho))?;
        residual.observe(be_residual(&be, rho.matrix()), 1e-9);
        unitary.observe(be.unitarity_residual(), 1e-9);
        let t = eigen_transform(&be, &half, 0.0)?;
        functor.observe(be_residual(&t, &(rho.matrix() * C64::new(0.5, 0.0))), 0.0);
        unitary.observe(t.unitarity_residual(), 1e-9);
        if d <= 4 {
            let sigma = random_low_rank_state(d, rng.random_range(1..=d), rng.random())?;
            let bs = density_block_encoding(&purified_oracle(&sigma))?;
            let u = eigen_transform(&be, &half, rng.random_range(0.0..0.05))?;
            let v = eigen_transform(&bs, &half, rng.random_range(0.0..0.05))?;
            let p = block_product(&u, &v)?;
            let target = rho.matrix() * sigma.matrix() * C64::new(0.25, 0.0);
            product.observe(be_residual(&p, &target), p.error_bound());
            unitary.observe(p.unitarity_residual(), 1e-9);
            let scaled = BlockEncoding::from_block(&(sigma.matrix() * C64::new(0.5, 0.0)), 2.0, 0.0, None)?;
            let q = block_product(&u, &scaled)?;
            let target = rho.matrix() * sigma.matrix() * C64::new(0.5, 0.0);
            product.observe(be_residual(&q, &target), q.error_bound());
        }
    }
    Ok(vec![residual, unitary, functor, product])
}

/// Proposition checks for the query model (`ρ`, `σ`) or the sample model
/// (`ρ/2`, `σ/2`), plus the deterministic part of the total error budget.
fn propositions<R: Rng>(opts: &VerifyOptions, rng: &mut R, sample: bool) -> Result<Vec<Check>> {
    let suite = if sample { "prop-sample" } else { "prop-query" };
    let (na, nb, nc, nd) = if sample {
        (
            "(a) ‖ρp₁(ρ/2) − δ^(1−a)(ρ/2)^a‖ ≤ 4δ + ε₁",
            "(b) first-order trace error",
            "(c) second-order trace error",
            "(d) total budget without sampling error",
        )
    } else {
        (
            "(a) ‖ρp₁(ρ) − (δ^(1−a)/2)ρ^a‖ ≤ 1.5δ + ε₁",
            "(b) first-order trace error",
            "(c) second-order trace error",
            "(d) total budget without estimation error",
        )
    };
    let (mut ca, mut cb, mut cc, mut cd) =
        (Check::new(suite, na), Check::new(suite, nb), Check::new(suite, nc), Check::new(suite, nd));
    let alphas = [0.3, 0.5, 0.7];
    let s = if sample { 0.5 } else { 1.0 };
    let sc = C64::new(s, 0.0);
    for k in 0..opts.tuples {
        let a = alphas[k % 3];
        let (rho, sigma) = random_pair(rng)?;
        let r = rho.rank().max(sigma.rank()) as f64;
        let delta = rng.random_range(0.05..0.3);
        let eps1 = rng.random_range(0.01..0.1);
        let eps2 = rng.random_range(0.05..0.2);
        let mut p1 = build_neg_power_poly(1.0 - a, delta, eps1)?;
        if opts.flip_p1_sign {
            p1 = p1.sign_flipped();
        }
        let p2 = build_pos_power_poly(1.0 - a, eps2)?;
        let m1 = eval_poly_matrix(&p1, &(rho.matrix() * sc))?;
        let m2 = eval_poly_matrix(&p2, &(sigma.matrix() * sc))?;
        let w = delta.powf(1.0 - a);
        let rho_a = matrix_power(&(rho.matrix() * sc), a);
        let sigma_b = sigma.power(1.0 - a);
        let rho_m1 = rho.matrix() * &m1;
        // Query model: ρ·(δ^{1−a}/2)ρ^{a−1} = (w/2)ρ^a; sample model: w(ρ/2)^a.
        let ideal_left = &rho_a * C64::new(if sample { w } else { w / 2.0 }, 0.0);
        let single = linalg::op_norm(&(&rho_m1 - &ideal_left));
        let first = (linalg::trace_product(&rho_m1, &m2) - linalg::trace_product(&ideal_left, &m2)).norm();
        let exact = linalg::trace_product(&rho.power(a), &sigma_b) * C64::new(w / 4.0, 0.0);
        let second = (linalg::trace_product(&ideal_left, &m2) - exact).norm();
        if sample {
            ca.observe(single, 4.0 * delta + eps1);
            cb.observe(first, (r * eps2 + 2f64.powf(a - 2.0) * r.powf(a)) * (4.0 * delta + eps1));
            cc.observe(second, w / 2f64.powf(a) * r.powf(1.0 - a) * eps2);
        } else {
            ca.observe(single, 1.5 * delta + eps1);
            cb.observe(first, (r * eps2 + r.powf(a) / 2.0) * (1.5 * delta + eps1));
            cc.observe(second, w / 2.0 * r.powf(1.0 - a) * eps2);
        }
    }
    let access = if sample { Access::Sample(SamplizerMode::Ideal) } else { Access::Query };
    let budget_tuples = (opts.tuples / 10).max(3);
    for k in 0..budget_tuples {
        let a = alphas[k % 3];
        let (rho, sigma) = random_pair(rng)?;
        let r = rho.rank().max(sigma.rank());
        let eps = if sample { 0.25 } else { 0.2 };
        let p = PreparedEstimator::prepare(access, Quantity::Affinity, &rho, &sigma, r, eps, a)?;
        let s = p.schedule();
        let ideal = p.affinity_from_statistic(p.statistic_target());
        let total = if sample { s.sample_total_bound() } else { s.query_total_bound() };
        cd.observe((ideal - p.oracle_value()).abs(), total - s.output_scale() * 2.0 * s.eps_h);
    }
    Ok(vec![ca, cb, cc, cd])
}

fn samplizer<R: Rng>(rng: &mut R) -> Result<Vec<Check>> {
    let mut composition = Check::new("samplizer", "ideal: dim·‖ΔJ‖₁ ≤ δ");
    let mut ledger_check = Check::new("samplizer", "ledger = Σ_j Q_j·charge(δ/Q)");
    let mut cptp = Check::new("samplizer", "samplized channels are CPTP");
    let mut monotone = Check::new("samplizer", "lmr Choi error nonincreasing in m");
    let delta = 0.1;
    for q in [1usize, 2, 4] {
        for _ in 0..4 {
            let states = vec![random_state(rng, &[2])?, random_state(rng, &[2])?];
            let mut circuit = QueryCircuit::new(2).gate(linalg::haar_unitary(4, rng), &[0, 1])?;
            for _ in 0..q {
                let oracle = rng.random_range(0..2);
                circuit = circuit
                    .query(oracle, 0, &[1], None, rng.random())?
                    .gate(linalg::haar_unitary(4, rng), &[0, 1])?;
            }
            let mut ledger = SampleLedger::default();
            let f = samplize_channel(&circuit, &states, delta, SamplizerMode::Ideal, DEFAULT_C0, &mut ledger)?;
            let exact = exact_channel(&circuit, &states)?;
            composition.observe(channel_distance_upper(&f, &exact)?, delta);
            let charge = per_query_charge(delta / q as f64, DEFAULT_C0)?;
            let counts = circuit.query_counts(2);
            let expected = SampleLedger {
                samples_rho: num_bigint::BigUint::from(counts[0]) * &charge,
                samples_sigma: num_bigint::BigUint::from(counts[1]) * &charge,
            };
            ledger_check.observe(if ledger == expected { 0.0 } else { 1.0 }, 0.0);
            cptp.observe(-f.min_choi_eigenvalue(), 1e-9);
            cptp.observe(f.trace_preservation_defect(), 1e-9);
        }
    }
    let mut scratch = SampleLedger::default();
    for rho in [
        DensityOperator::maximally_mixed(2)?,
        DensityOperator::basis(2, 0)?,
        random_state(rng, &[2])?,
    ] {
        let exact = exact_evolution(&rho, 1.0);
        let mut last = f64::INFINITY;
        for m in [1u64, 2, 5, 10, 20, 50, 100, 200] {
            let c = lmr_channel(&rho, 1.0, m, &mut scratch)?;
            let d = choi_distance(&c, &exact)?;
            monotone.observe(d, last);
            cptp.observe(-c.min_choi_eigenvalue(), 1e-9);
            last = d;
        }
    }
    Ok(vec![composition, ledger_check, cptp, monotone])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyOptions {
        VerifyOptions { pairs: 60, tuples: 12, ..Default::default() }
    }

    #[test]
    fn matrix_suites_pass() {
        for s in ["pinsker", "hellinger", "power-mean", "contractivity", "jordan-hahn", "holder", "faithfulness"] {
            let r = cmd_verify(Some(s), &quick()).unwrap();
            assert!(r.passed(), "{}", r.render());
            assert!(r.checks.iter().all(|c| c.suite == s));
        }
    }

    #[test]
    fn proposition_suites_pass() {
        for s in ["prop-query", "prop-sample"] {
            let r = cmd_verify(Some(s), &quick()).unwrap();
            assert!(r.passed(), "{}", r.render());
        }
    }

    #[test]
    fn sign_flip_breaks_single_eigenvalue_check() {
        let opts = VerifyOptions { flip_p1_sign: true, ..quick() };
        let r = cmd_verify(Some("prop-query"), &opts).unwrap();
        assert!(!r.passed());
        assert!(!r.checks[0].passed());
    }

    #[test]
    fn samplizer_and_blockenc_suites_pass() {
        for s in ["samplizer", "blockenc"] {
            let r = cmd_verify(Some(s), &quick()).unwrap();
            assert!(r.passed(), "{}", r.render());
        }
    }

    #[test]
    fn unknown_suite_rejected() {
        assert!(cmd_verify(Some("pinskr"), &quick()).is_err());
    }
}
