//! Sample-access machinery: query circuits, their channel-level samplization,
//! the partial-swap exponentiation channel, sample ledgers and the
//! sample-model estimators.
//!
//! Superoperators act on column-stacked matrices, `vec(AXB) = (Bᵀ ⊗ A) vec(X)`.
//! Choi matrices are ordered input ⊗ output and have trace equal to the
//! input dimension for trace-preserving maps.

use num_bigint::BigUint;
use num_traits::{FromPrimitive, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal};

use crate::blockenc::BlockEncoding;
use crate::densityops::DensityOperator;
use crate::error::{LabError, Result};
use crate::estimators::{
    Access, CertificationOutcome, EstimateOutcome, ParameterSchedule, PreparedCertification,
    PreparedEstimator, Quantity,
};
use crate::linalg::{self, CMatrix, C64, ONE, ZERO};

/// Default constant `c₀` of the per-query sample charge.
pub const DEFAULT_C0: f64 = 16.0;

/// Largest `k` drawn from an exact binomial; larger counts use the normal limit.
const EXACT_BINOMIAL_LIMIT: u128 = 1 << 53;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SamplizerMode {
    /// Exact block-encodings perturbed by calibrated depolarizing noise.
    Ideal,
    /// Partial-swap exponentiation with fresh copies of the states.
    Lmr,
}

impl SamplizerMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplizerMode::Ideal => "ideal",
            SamplizerMode::Lmr => "lmr",
        }
    }
}

/// Copies of each state consumed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SampleLedger {
    pub samples_rho: BigUint,
    pub samples_sigma: BigUint,
}

impl SampleLedger {
    pub fn add(&mut self, state: usize, amount: &BigUint) {
        match state {
            0 => self.samples_rho += amount,
            _ => self.samples_sigma += amount,
        }
    }

    pub fn scale(&mut self, k: u128) {
        let k = BigUint::from(k);
        self.samples_rho *= &k;
        self.samples_sigma *= &k;
    }

    pub fn total(&self) -> BigUint {
        &self.samples_rho + &self.samples_sigma
    }
}

/// Samples charged per query at per-query deviation `ε`: `⌈c₀(1/ε)ln²(1/ε)⌉`.
pub fn per_query_charge(eps: f64, c0: f64) -> Result<BigUint> {
    if !(eps > 0.0 && eps < 1.0) || !(c0 > 0.0) {
        return Err(LabError::InvalidArgument(format!(
            "per-query deviation {eps} must lie in (0, 1) and c0 = {c0} must be positive"
        )));
    }
    let l = (1.0 / eps).ln();
    let charge = (c0 / eps * l * l).ceil().max(1.0);
    BigUint::from_f64(charge)
        .ok_or_else(|| LabError::InvalidArgument(format!("sample charge {charge} is not finite")))
}

// ---------------------------------------------------------------------------
// Superoperators and channels

/// Superoperator of `X ↦ U X U†`.
pub fn unitary_superop(u: &CMatrix) -> CMatrix {
    linalg::kron(&u.map(|z| z.conj()), u)
}

/// Superoperator of the completely depolarizing channel on dimension `d`.
pub fn depolarizing_superop(d: usize) -> CMatrix {
    let mut s = CMatrix::zeros(d * d, d * d);
    let w = C64::new(1.0 / d as f64, 0.0);
    for i in 0..d {
        for j in 0..d {
            s[(i * (d + 1), j * (d + 1))] = w;
        }
    }
    s
}

fn vectorize(x: &CMatrix) -> CMatrix {
    let d = x.nrows();
    CMatrix::from_fn(d * d, 1, |k, _| x[(k % d, k / d)])
}

fn unvectorize(v: &CMatrix, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| v[(i + j * d, 0)])
}

/// Applies a superoperator to a matrix.
pub fn apply_superop(s: &CMatrix, x: &CMatrix) -> CMatrix {
    unvectorize(&(s * vectorize(x)), x.nrows())
}

/// Choi matrix `Σ_{ij} |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)` of a superoperator.
pub fn choi_of_superop(s: &CMatrix) -> CMatrix {
    let d2 = s.nrows();
    let d = (d2 as f64).sqrt().round() as usize;
    CMatrix::from_fn(d2, d2, |row, col| {
        let (i, a) = (row / d, row % d);
        let (j, b) = (col / d, col % d);
        s[(a + b * d, i + j * d)]
    })
}

/// A quantum channel with its deviation claim and sample cost.
#[derive(Clone, Debug)]
pub struct ChannelApprox {
    superop: CMatrix,
    choi: CMatrix,
    dim: usize,
    pub claimed_deviation: f64,
    pub sample_cost: BigUint,
}

impl ChannelApprox {
    pub fn from_superop(superop: CMatrix, claimed_deviation: f64, sample_cost: BigUint) -> Self {
        let dim = (superop.nrows() as f64).sqrt().round() as usize;
        let choi = choi_of_superop(&superop);
        ChannelApprox {
            superop,
            choi,
            dim,
            claimed_deviation,
            sample_cost,
        }
    }

    pub fn unitary(u: &CMatrix) -> Self {
        Self::from_superop(unitary_superop(u), 0.0, BigUint::zero())
    }

    pub fn identity(d: usize) -> Self {
        Self::unitary(&linalg::identity(d))
    }

    pub fn depolarizing(d: usize) -> Self {
        Self::from_superop(depolarizing_superop(d), 0.0, BigUint::zero())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    pub fn superop(&self) -> &CMatrix {
        &self.superop
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        apply_superop(&self.superop, x)
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &ChannelApprox) -> ChannelApprox {
        ChannelApprox::from_superop(
            &other.superop * &self.superop,
            self.claimed_deviation + other.claimed_deviation,
            &self.sample_cost + &other.sample_cost,
        )
    }

    /// Smallest Choi eigenvalue; nonnegative for completely positive maps.
    pub fn min_choi_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigenvalues(&self.choi).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Operator-norm distance of the output-traced Choi matrix from `I`.
    pub fn trace_preservation_defect(&self) -> f64 {
        let tr_out = linalg::partial_trace_second(&self.choi, self.dim, self.dim);
        linalg::op_norm(&(tr_out - linalg::identity(self.dim)))
    }

    pub fn is_cptp(&self) -> bool {
        self.min_choi_eigenvalue() >= -1e-9 && self.trace_preservation_defect() <= 1e-9
    }
}

fn check_same_dim(a: &ChannelApprox, b: &ChannelApprox) -> Result<()> {
    if a.dim != b.dim {
        return Err(LabError::DimensionMismatch {
            left: a.dim,
            right: b.dim,
        });
    }
    Ok(())
}

/// `dim · ‖J(E) − J(F)‖₁`, an upper bound on the diamond distance.
pub fn channel_distance_upper(e: &ChannelApprox, f: &ChannelApprox) -> Result<f64> {
    check_same_dim(e, f)?;
    Ok(e.dim as f64 * linalg::hermitian_trace_norm(&(&e.choi - &f.choi)))
}

/// `‖J(E) − J(F)‖₁ / dim`, the trace distance of the normalized Choi states
/// (times two); a lower bound on the diamond distance.
pub fn choi_distance(e: &ChannelApprox, f: &ChannelApprox) -> Result<f64> {
    check_same_dim(e, f)?;
    Ok(linalg::hermitian_trace_norm(&(&e.choi - &f.choi)) / e.dim as f64)
}

/// Largest `‖(E − F)(ψψ†)‖₁` over random pure inputs; a lower bound on the
/// diamond distance.
pub fn channel_distance_lower<R: Rng + ?Sized>(
    e: &ChannelApprox,
    f: &ChannelApprox,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    check_same_dim(e, f)?;
    let d = e.dim;
    let mut best: f64 = 0.0;
    for _ in 0..trials {
        let u = linalg::haar_unitary(d, rng);
        let psi = u.column(0).into_owned();
        let x = &psi * psi.adjoint();
        let diff = e.apply(&x) - f.apply(&x);
        best = best.max(linalg::hermitian_trace_norm(&diff));
    }
    Ok(best)
}

fn superop_power(s: &CMatrix, mut m: u64) -> CMatrix {
    let mut result = linalg::identity(s.nrows());
    let mut base = s.clone();
    while m > 0 {
        if m & 1 == 1 {
            result = &base * &result;
        }
        m >>= 1;
        if m > 0 {
            base = &base * &base;
        }
    }
    result
}

/// One partial-swap step `X ↦ tr_copy[W (X ⊗ ρ) W†]` on an `n`-qubit register,
/// with `W = cos τ·I − i sin τ·S` swapping `system` with the fresh copy and
/// acting only where the control qubits take the requested values.
fn lmr_step_superop(
    rho: &DensityOperator,
    tau: f64,
    n: usize,
    system: &[usize],
    controls: &[(usize, bool)],
) -> CMatrix {
    let d_reg = 1usize << n;
    let d_sys = rho.dim();
    let k = system.len();
    let total = n + k;
    let copy: Vec<usize> = (n..total).collect();
    let mut swap = linalg::identity(1 << total);
    for (&s, &c) in system.iter().zip(copy.iter()) {
        swap = linalg::embed(&linalg::swap_operator(2), &[s, c], total) * swap;
    }
    let w = linalg::identity(1 << total) * C64::new(tau.cos(), 0.0) - swap * C64::new(0.0, tau.sin());
    // Restrict W to the controlled subspace.
    let active = |x: usize| -> bool {
        controls.iter().all(|&(q, v)| ((x >> (total - 1 - q)) & 1 == 1) == v)
    };
    let w = CMatrix::from_fn(1 << total, 1 << total, |r, c| {
        if active(c) {
            w[(r, c)]
        } else if r == c {
            ONE
        } else {
            ZERO
        }
    });
    let w_adj = w.adjoint();
    let mut s = CMatrix::zeros(d_reg * d_reg, d_reg * d_reg);
    for j in 0..d_reg {
        for i in 0..d_reg {
            let mut x = CMatrix::zeros(d_reg, d_reg);
            x[(i, j)] = ONE;
            let out = &w * linalg::kron(&x, rho.matrix()) * &w_adj;
            let reduced = linalg::partial_trace_second(&out, d_reg, d_sys);
            let col = i + j * d_reg;
            for b in 0..d_reg {
                for a in 0..d_reg {
                    s[(a + b * d_reg, col)] = reduced[(a, b)];
                }
            }
        }
    }
    s
}

/// `m` partial-swap steps of length `t/m` approximating conjugation by `e^{−iρt}`.
pub fn lmr_channel(
    rho: &DensityOperator,
    t: f64,
    m: u64,
    ledger: &mut SampleLedger,
) -> Result<ChannelApprox> {
    if m == 0 {
        return Err(LabError::InvalidArgument("LMR step count must be positive".into()));
    }
    let n = rho.num_qubits();
    let system: Vec<usize> = (0..n).collect();
    let step = lmr_step_superop(rho, t / m as f64, n, &system, &[]);
    let cost = BigUint::from(m);
    ledger.add(0, &cost);
    Ok(ChannelApprox::from_superop(
        superop_power(&step, m),
        t * t / m as f64,
        cost,
    ))
}

/// Conjugation by `e^{−iρt}`.
pub fn exact_evolution(rho: &DensityOperator, t: f64) -> ChannelApprox {
    let u = rho.spectrum().map_complex(|x| C64::new(0.0, -x * t).exp());
    ChannelApprox::unitary(&u)
}

// ---------------------------------------------------------------------------
// Query circuits

/// One element of a query circuit.
#[derive(Clone, Debug)]
pub enum Slot {
    /// A fixed unitary on the listed qubits (most significant first).
    Gate { unitary: CMatrix, targets: Vec<usize> },
    /// A call to the block-encoding `U_j` of `ρ_j/2`: one ancilla qubit
    /// followed by the system qubits.
    Query {
        oracle: usize,
        ancilla: usize,
        system: Vec<usize>,
        control: Option<usize>,
        inverse: bool,
    },
}

/// A query algorithm `G_Q V_Q ⋯ G₁ V₁ G₀` on a fixed register.
#[derive(Clone, Debug)]
pub struct QueryCircuit {
    qubits: usize,
    slots: Vec<Slot>,
}

impl QueryCircuit {
    pub fn new(qubits: usize) -> Self {
        QueryCircuit { qubits, slots: Vec::new() }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    fn check_targets(&self, targets: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.qubits];
        for &q in targets {
            if q >= self.qubits || seen[q] {
                return Err(LabError::InvalidArgument(format!(
                    "target qubit {q} is out of range or repeated"
                )));
            }
            seen[q] = true;
        }
        Ok(())
    }

    pub fn gate(mut self, unitary: CMatrix, targets: &[usize]) -> Result<Self> {
        self.check_targets(targets)?;
        if unitary.nrows() != 1 << targets.len() || linalg::unitarity_residual(&unitary) > 1e-9 {
            return Err(LabError::InvalidArgument("gate must be a unitary on its targets".into()));
        }
        self.slots.push(Slot::Gate {
            unitary,
            targets: targets.to_vec(),
        });
        Ok(self)
    }

    pub fn query(
        mut self,
        oracle: usize,
        ancilla: usize,
        system: &[usize],
        control: Option<usize>,
        inverse: bool,
    ) -> Result<Self> {
        let mut all = vec![ancilla];
        all.extend_from_slice(system);
        all.extend(control);
        self.check_targets(&all)?;
        self.slots.push(Slot::Query {
            oracle,
            ancilla,
            system: system.to_vec(),
            control,
            inverse,
        });
        Ok(self)
    }

    /// Queries to each oracle.
    pub fn query_counts(&self, oracles: usize) -> Vec<usize> {
        let mut counts = vec![0; oracles];
        for slot in &self.slots {
            if let Slot::Query { oracle, .. } = slot {
                if *oracle < oracles {
                    counts[*oracle] += 1;
                }
            }
        }
        counts
    }

    pub fn total_queries(&self) -> usize {
        self.slots.iter().filter(|s| matches!(s, Slot::Query { .. })).count()
    }

    fn validate_states(&self, states: &[DensityOperator]) -> Result<()> {
        if states.len() > 2 {
            return Err(LabError::InvalidArgument("at most two oracle states are supported".into()));
        }
        for slot in &self.slots {
            if let Slot::Query { oracle, system, .. } = slot {
                let state = states.get(*oracle).ok_or_else(|| {
                    LabError::InvalidArgument(format!("query marker references missing state {oracle}"))
                })?;
                if state.num_qubits() != system.len() {
                    return Err(LabError::DimensionMismatch {
                        left: state.dim(),
                        right: 1 << system.len(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Exact `(1, 1, 0)` block-encoding of `ρ/2`.
pub fn half_state_encoding(rho: &DensityOperator) -> Result<CMatrix> {
    let half = rho.matrix() * C64::new(0.5, 0.0);
    Ok(BlockEncoding::from_block(&half, 1.0, 0.0, None)?.unitary().clone())
}

fn controlled(u: &CMatrix) -> CMatrix {
    let d = u.nrows();
    let mut c = linalg::identity(2 * d);
    c.view_mut((d, d), (d, d)).copy_from(u);
    c
}

/// Unitary of one query slot on the full register.
fn query_unitary(
    state: &DensityOperator,
    ancilla: usize,
    system: &[usize],
    control: Option<usize>,
    inverse: bool,
    n: usize,
) -> Result<CMatrix> {
    let mut v = half_state_encoding(state)?;
    if inverse {
        v = v.adjoint();
    }
    let mut targets = vec![ancilla];
    targets.extend_from_slice(system);
    Ok(match control {
        None => linalg::embed(&v, &targets, n),
        Some(c) => {
            let mut all = vec![c];
            all.extend(targets);
            linalg::embed(&controlled(&v), &all, n)
        }
    })
}

/// The circuit with every query replaced by the exact block-encoding.
pub fn exact_channel(circuit: &QueryCircuit, states: &[DensityOperator]) -> Result<ChannelApprox> {
    circuit.validate_states(states)?;
    let n = circuit.qubits;
    let mut u = linalg::identity(circuit.dim());
    for slot in &circuit.slots {
        let g = match slot {
            Slot::Gate { unitary, targets } => linalg::embed(unitary, targets, n),
            Slot::Query { oracle, ancilla, system, control, inverse } => {
                query_unitary(&states[*oracle], *ancilla, system, *control, *inverse, n)?
            }
        };
        u = g * u;
    }
    Ok(ChannelApprox::unitary(&u))
}

/// Depolarizing weight `ε/(2D²)` that keeps `dim·‖ΔJ‖₁` of one noisy query below `ε`.
pub fn depolarizing_weight(eps: f64, dim: usize) -> f64 {
    eps / (2.0 * (dim as f64).powi(2))
}

fn gate_superop(u: &CMatrix, targets: &[usize], n: usize) -> CMatrix {
    unitary_superop(&linalg::embed(u, targets, n))
}

fn hadamard() -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    linalg::from_real_rows(&[&[h, h], &[h, -h]])
}

/// Query slot realised from copies of the state: the combination
/// `(e^{iρ/2} − e^{−iρ/2})/(2i) = sin(ρ/2)` selected by the ancilla, each
/// exponential approximated by partial-swap steps.
fn lmr_query_superop(
    state: &DensityOperator,
    ancilla: usize,
    system: &[usize],
    control: Option<usize>,
    inverse: bool,
    n: usize,
    samples: u64,
) -> CMatrix {
    let t = 0.5;
    let m_plus = samples.div_ceil(2).max(1);
    let m_minus = (samples / 2).max(1);
    let ctrl: Vec<(usize, bool)> = control.map(|c| (c, true)).into_iter().collect();
    let with = |extra: (usize, bool)| {
        let mut v = ctrl.clone();
        v.push(extra);
        v
    };
    let local_gate = |g: &CMatrix| -> CMatrix {
        match control {
            None => gate_superop(g, &[ancilla], n),
            Some(c) => gate_superop(&controlled(g), &[c, ancilla], n),
        }
    };
    let h = local_gate(&hadamard());
    let z = local_gate(&linalg::from_real_diagonal(&[1.0, -1.0]));
    // V = H Z C₁(e^{−iρt}) C₀(e^{iρt}) H; V† reverses the order and the signs.
    let sign = if inverse { -1.0 } else { 1.0 };
    let plus = superop_power(
        &lmr_step_superop(state, -sign * t / m_plus as f64, n, system, &with((ancilla, false))),
        m_plus,
    );
    let minus = superop_power(
        &lmr_step_superop(state, sign * t / m_minus as f64, n, system, &with((ancilla, true))),
        m_minus,
    );
    let mut s = if inverse {
        &h * &plus * &minus * &z * &h
    } else {
        &h * &z * &minus * &plus * &h
    };
    if let Some(c) = control {
        // Global phase ∓i of the combination becomes a phase on the control.
        let phase = if inverse { C64::new(0.0, 1.0) } else { C64::new(0.0, -1.0) };
        let p = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, phase]));
        s = gate_superop(&p, &[c], n) * s;
    }
    s
}

/// Samplized circuit `F = G_Q ∘ E_Q ∘ ⋯ ∘ G₁ ∘ E₁ ∘ G₀` with per-query
/// deviation `δ/Q`; charges the ledger and returns the channel.
pub fn samplize_channel(
    circuit: &QueryCircuit,
    states: &[DensityOperator],
    delta: f64,
    mode: SamplizerMode,
    c0: f64,
    ledger: &mut SampleLedger,
) -> Result<ChannelApprox> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(LabError::InvalidArgument(format!("delta = {delta} must lie in (0, 1)")));
    }
    circuit.validate_states(states)?;
    let n = circuit.qubits;
    let d = circuit.dim();
    let q = circuit.total_queries();
    if q == 0 {
        return exact_channel(circuit, states);
    }
    let eps = delta / q as f64;
    let charge = per_query_charge(eps, c0)?;
    let samples = charge.to_u64().ok_or_else(|| {
        LabError::InvalidArgument(format!("per-query charge {charge} is too large"))
    })?;
    let lambda = depolarizing_weight(eps, d);
    let depol = depolarizing_superop(d) * C64::new(lambda, 0.0);
    let mut s = linalg::identity(d * d);
    let mut cost = BigUint::zero();
    for slot in &circuit.slots {
        let step = match slot {
            Slot::Gate { unitary, targets } => gate_superop(unitary, targets, n),
            Slot::Query { oracle, ancilla, system, control, inverse } => {
                let state = &states[*oracle];
                ledger.add(*oracle, &charge);
                cost += &charge;
                match mode {
                    SamplizerMode::Ideal => {
                        let v = query_unitary(state, *ancilla, system, *control, *inverse, n)?;
                        unitary_superop(&v) * C64::new(1.0 - lambda, 0.0) + &depol
                    }
                    SamplizerMode::Lmr => {
                        lmr_query_superop(state, *ancilla, system, *control, *inverse, n, samples)
                    }
                }
            }
        };
        s = step * s;
    }
    Ok(ChannelApprox::from_superop(s, delta, cost))
}

/// Applies the samplized circuit to `input`.
pub fn samplize(
    circuit: &QueryCircuit,
    states: &[DensityOperator],
    delta: f64,
    input: &DensityOperator,
    mode: SamplizerMode,
    ledger: &mut SampleLedger,
) -> Result<DensityOperator> {
    if input.dim() != circuit.dim() {
        return Err(LabError::DimensionMismatch {
            left: input.dim(),
            right: circuit.dim(),
        });
    }
    let f = samplize_channel(circuit, states, delta, mode, DEFAULT_C0, ledger)?;
    DensityOperator::new(linalg::hermitian_part(&f.apply(input.matrix())))
}

// ---------------------------------------------------------------------------
// Sample-model Hadamard test

/// Resource and outcome model of one sample-model estimator run.
///
/// The Hadamard-test circuit makes `Q_ρ = d₁` and `Q_σ = d₂` queries. Its
/// samplized version is modelled by the calibrated depolarizing channel per
/// query, so the first-qubit outcome is `0` with probability
/// `1/2 + (1 − λ)^Q (p₀ − 1/2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePlan {
    pub mode: SamplizerMode,
    pub k: u128,
    pub q_first: usize,
    pub q_second: usize,
    pub per_query_eps: f64,
    pub per_query_charge: BigUint,
    pub lambda: f64,
    pub register_qubits: usize,
    /// Probability that the samplized circuit outputs 1.
    pub prob_one: f64,
    pub c0: f64,
}

impl SamplePlan {
    pub fn new(
        schedule: &ParameterSchedule,
        p0: f64,
        register_qubits: usize,
        mode: SamplizerMode,
        c0: f64,
    ) -> Result<Self> {
        let delta = schedule
            .delta
            .ok_or_else(|| LabError::InvalidArgument("sample plan needs a sample schedule".into()))?;
        let k = schedule
            .k_repetitions
            .ok_or_else(|| LabError::InvalidArgument("sample plan needs a repetition count".into()))?;
        let (q_first, q_second) = (schedule.d1, schedule.d2);
        let q = (q_first + q_second).max(1);
        let per_query_eps = delta / q as f64;
        let per_query_charge = per_query_charge(per_query_eps, c0)?;
        // λ = ε/(2D²) with D = 2^register; evaluated in log space.
        let log_lambda = per_query_eps.ln() - std::f64::consts::LN_2 - 2.0 * register_qubits as f64 * std::f64::consts::LN_2;
        let lambda = log_lambda.exp();
        let survive = (q as f64 * (-lambda).ln_1p()).exp();
        let prob_zero = 0.5 + survive * (p0 - 0.5);
        Ok(SamplePlan {
            mode,
            k,
            q_first,
            q_second,
            per_query_eps,
            per_query_charge,
            lambda,
            register_qubits,
            prob_one: (1.0 - prob_zero).clamp(0.0, 1.0),
            c0,
        })
    }

    /// Mean of `k` outcome bits.
    pub fn draw_mean<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let p = self.prob_one;
        if self.k <= EXACT_BINOMIAL_LIMIT {
            let count = Binomial::new(self.k as u64, p)
                .expect("probability in [0, 1]")
                .sample(rng);
            count as f64 / self.k as f64
        } else {
            let kf = self.k as f64;
            let sd = (p * (1.0 - p) / kf).sqrt();
            if sd == 0.0 {
                return p;
            }
            Normal::new(p, sd).expect("finite deviation").sample(rng).clamp(0.0, 1.0)
        }
    }

    /// Samples of each state used by one execution: the queries plus the
    /// input copy of the first state.
    pub fn ledger_per_execution(&self, swapped: bool) -> SampleLedger {
        let first = BigUint::from(self.q_first) * &self.per_query_charge + 1u32;
        let second = BigUint::from(self.q_second) * &self.per_query_charge;
        if swapped {
            SampleLedger {
                samples_rho: second,
                samples_sigma: first,
            }
        } else {
            SampleLedger {
                samples_rho: first,
                samples_sigma: second,
            }
        }
    }

    /// Ledger of the full run, `k` executions.
    pub fn total_ledger(&self, swapped: bool) -> SampleLedger {
        let mut l = self.ledger_per_execution(swapped);
        l.scale(self.k);
        l
    }
}

/// Affinity estimate with sample access.
pub fn affinity_est_s<R: Rng + ?Sized>(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    r: usize,
    eps: f64,
    alpha: f64,
    mode: SamplizerMode,
    rng: &mut R,
) -> Result<EstimateOutcome> {
    let p = PreparedEstimator::prepare(Access::Sample(mode), Quantity::Affinity, rho, sigma, r, eps, alpha)?;
    Ok(p.run(rng.random()))
}

/// Tsallis relative entropy estimate with sample access.
pub fn tsallis_est_s<R: Rng + ?Sized>(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    r: usize,
    eps: f64,
    alpha: f64,
    mode: SamplizerMode,
    rng: &mut R,
) -> Result<EstimateOutcome> {
    let p = PreparedEstimator::prepare(Access::Sample(mode), Quantity::Tsallis, rho, sigma, r, eps, alpha)?;
    Ok(p.run(rng.random()))
}

/// Tolerant Hellinger certification with sample access.
pub fn hellinger_certify_s<R: Rng + ?Sized>(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    r: usize,
    thr_close: f64,
    thr_far: f64,
    mode: SamplizerMode,
    rng: &mut R,
) -> Result<CertificationOutcome> {
    let p = PreparedCertification::prepare(Access::Sample(mode), rho, sigma, r, thr_close, thr_far)?;
    Ok(p.run(rng.random()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{Decision, Ledger};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_gate(rng: &mut ChaCha8Rng, qubits: usize) -> CMatrix {
        linalg::haar_unitary(1 << qubits, rng)
    }

    fn chain(q: usize, rho: usize, seed: u64) -> QueryCircuit {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = QueryCircuit::new(2).gate(random_gate(&mut rng, 2), &[0, 1]).unwrap();
        for i in 0..q {
            c = c
                .query(i % rho.max(1), 0, &[1], None, i % 3 == 2)
                .unwrap()
                .gate(random_gate(&mut rng, 2), &[0, 1])
                .unwrap();
        }
        c
    }

    #[test]
    fn superop_conventions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = linalg::haar_unitary(2, &mut rng);
        let x = linalg::random_hermitian(2, &mut rng);
        let direct = &u * &x * u.adjoint();
        assert!((apply_superop(&unitary_superop(&u), &x) - direct).norm() < 1e-12);
        let id = ChannelApprox::identity(2);
        assert!((linalg::trace(id.choi()).re - 2.0).abs() < 1e-14);
        assert!(id.is_cptp());
        assert!(ChannelApprox::depolarizing(4).is_cptp());
        let dep = apply_superop(&depolarizing_superop(2), &x);
        let tr = linalg::trace(&x) * C64::new(0.5, 0.0);
        assert!((dep - linalg::identity(2) * tr).norm() < 1e-12);
    }

    #[test]
    fn distance_examples() {
        let id = ChannelApprox::identity(2);
        let dep = ChannelApprox::depolarizing(2);
        assert_eq!(channel_distance_upper(&id, &id).unwrap(), 0.0);
        let upper = channel_distance_upper(&id, &dep).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let lower = channel_distance_lower(&id, &dep, 200, &mut rng).unwrap();
        assert!((lower - 1.0).abs() < 1e-9);
        assert!((upper - 6.0).abs() < 1e-9);
        assert!(upper >= lower);
        assert!(choi_distance(&id, &dep).unwrap() <= upper);
    }

    #[test]
    fn perturbation_scales_linearly() {
        let id = ChannelApprox::identity(2);
        let dep = depolarizing_superop(2);
        let mut ratios = Vec::new();
        for eps in [0.1, 0.01] {
            let s = linalg::identity(4) * C64::new(1.0 - eps, 0.0) + &dep * C64::new(eps, 0.0);
            let noisy = ChannelApprox::from_superop(s, eps, BigUint::zero());
            ratios.push(channel_distance_upper(&id, &noisy).unwrap() / eps);
        }
        assert!((ratios[0] - ratios[1]).abs() < 1e-9);
        assert!(ratios[0] <= 6.0 + 1e-9);
    }

    #[test]
    fn gate_only_circuit_is_exact() {
        let circuit = chain(0, 1, 1);
        let states = vec![DensityOperator::basis(2, 0).unwrap()];
        let mut ledger = SampleLedger::default();
        let f = samplize_channel(&circuit, &states, 0.1, SamplizerMode::Ideal, DEFAULT_C0, &mut ledger).unwrap();
        let exact = exact_channel(&circuit, &states).unwrap();
        assert!(channel_distance_upper(&f, &exact).unwrap() < 1e-12);
        assert_eq!(ledger, SampleLedger::default());
    }

    #[test]
    fn single_query_block_statistics() {
        let rho = DensityOperator::basis(2, 0).unwrap();
        let circuit = QueryCircuit::new(2).query(0, 0, &[1], None, false).unwrap();
        let input = DensityOperator::basis(4, 0).unwrap();
        let mut ledger = SampleLedger::default();
        let out = samplize(&circuit, &[rho], 0.1, &input, SamplizerMode::Ideal, &mut ledger).unwrap();
        // ⟨0,0|V|0,0⟩ = 1/2, so the ancilla-0 system-0 population is 1/4.
        assert!((out.matrix()[(0, 0)].re - 0.25).abs() <= 0.1);
        assert_eq!(ledger.samples_rho, per_query_charge(0.1, DEFAULT_C0).unwrap());
    }

    #[test]
    fn ideal_mode_meets_budget() {
        let states = vec![
            crate::densityops::random_low_rank_state(2, 2, 11).unwrap(),
            crate::densityops::random_low_rank_state(2, 1, 12).unwrap(),
        ];
        for q in [1usize, 2, 4] {
            let circuit = chain(q, 2, 20 + q as u64);
            let mut ledger = SampleLedger::default();
            let f = samplize_channel(&circuit, &states, 0.1, SamplizerMode::Ideal, DEFAULT_C0, &mut ledger).unwrap();
            let exact = exact_channel(&circuit, &states).unwrap();
            let dist = channel_distance_upper(&f, &exact).unwrap();
            assert!(dist <= 0.1 + 1e-9, "Q = {q}: {dist}");
            assert!(f.is_cptp());
            let charge = per_query_charge(0.1 / q as f64, DEFAULT_C0).unwrap();
            let counts = circuit.query_counts(2);
            assert_eq!(ledger.samples_rho, BigUint::from(counts[0]) * &charge);
            assert_eq!(ledger.samples_sigma, BigUint::from(counts[1]) * &charge);
        }
    }

    #[test]
    fn controlled_query_matches_exact_in_ideal_mode() {
        let states = vec![DensityOperator::maximally_mixed(2).unwrap()];
        let circuit = QueryCircuit::new(3)
            .gate(hadamard(), &[0])
            .unwrap()
            .query(0, 1, &[2], Some(0), false)
            .unwrap();
        let mut ledger = SampleLedger::default();
        let f = samplize_channel(&circuit, &states, 0.05, SamplizerMode::Ideal, DEFAULT_C0, &mut ledger).unwrap();
        let exact = exact_channel(&circuit, &states).unwrap();
        assert!(channel_distance_upper(&f, &exact).unwrap() <= 0.05 + 1e-9);
    }

    #[test]
    fn marker_state_mismatch() {
        let circuit = QueryCircuit::new(2).query(1, 0, &[1], None, false).unwrap();
        let states = vec![DensityOperator::basis(2, 0).unwrap()];
        let mut ledger = SampleLedger::default();
        assert!(samplize_channel(&circuit, &states, 0.1, SamplizerMode::Ideal, DEFAULT_C0, &mut ledger).is_err());
        assert!(QueryCircuit::new(2).query(0, 0, &[0], None, false).is_err());
    }

    #[test]
    fn lmr_examples() {
        let mut ledger = SampleLedger::default();
        let zero = DensityOperator::basis(2, 0).unwrap();
        let c = lmr_channel(&zero, 0.0, 5, &mut ledger).unwrap();
        assert!(choi_distance(&c, &ChannelApprox::identity(2)).unwrap() < 1e-14);
        assert_eq!(ledger.samples_rho, BigUint::from(5u32));

        let mixed = DensityOperator::maximally_mixed(2).unwrap();
        let c = lmr_channel(&mixed, 1.0, 100, &mut ledger).unwrap();
        assert!(choi_distance(&c, &exact_evolution(&mixed, 1.0)).unwrap() <= 0.05);
        assert!(c.is_cptp());

        let t = std::f64::consts::FRAC_PI_2;
        let exact = exact_evolution(&zero, t);
        let coarse = choi_distance(&lmr_channel(&zero, t, 10, &mut ledger).unwrap(), &exact).unwrap();
        let fine = choi_distance(&lmr_channel(&zero, t, 100, &mut ledger).unwrap(), &exact).unwrap();
        assert!(fine <= 0.25 * coarse, "{fine} vs {coarse}");
        assert!(lmr_channel(&zero, t, 0, &mut ledger).is_err());
    }

    #[test]
    fn lmr_error_nonincreasing_in_steps() {
        let mut ledger = SampleLedger::default();
        let rho = crate::densityops::random_low_rank_state(2, 2, 8).unwrap();
        let exact = exact_evolution(&rho, 1.0);
        let mut last = f64::INFINITY;
        for m in [1u64, 2, 5, 10, 20, 50, 100, 200] {
            let d = choi_distance(&lmr_channel(&rho, 1.0, m, &mut ledger).unwrap(), &exact).unwrap();
            assert!(d <= last + 1e-12);
            last = d;
        }
    }

    #[test]
    fn lmr_query_approximates_block() {
        let rho = crate::densityops::random_low_rank_state(2, 2, 13).unwrap();
        let circuit = QueryCircuit::new(2).query(0, 0, &[1], None, false).unwrap();
        let states = vec![rho.clone()];
        let mut ledger = SampleLedger::default();
        let lmr = samplize_channel(&circuit, &states, 0.01, SamplizerMode::Lmr, DEFAULT_C0, &mut ledger).unwrap();
        assert!(lmr.is_cptp());
        let input = DensityOperator::basis(4, 0).unwrap();
        let out = lmr.apply(input.matrix());
        // Ancilla-0 sector of V|0,0⟩ is sin(ρ/2)|0⟩.
        let s = linalg::hermitian_map(rho.matrix(), |x| (x / 2.0).sin());
        let expected = s[(0, 0)].norm_sqr() + s[(1, 0)].norm_sqr();
        let got = out[(0, 0)].re + out[(1, 1)].re;
        assert!((got - expected).abs() < 1e-3, "{got} vs {expected}");
    }

    #[test]
    fn lmr_inverse_query_undoes_query() {
        let rho = crate::densityops::random_low_rank_state(2, 2, 14).unwrap();
        let circuit = QueryCircuit::new(2)
            .query(0, 0, &[1], None, false)
            .unwrap()
            .query(0, 0, &[1], None, true)
            .unwrap();
        let mut ledger = SampleLedger::default();
        let f = samplize_channel(&circuit, &[rho], 0.01, SamplizerMode::Lmr, DEFAULT_C0, &mut ledger).unwrap();
        assert!(choi_distance(&f, &ChannelApprox::identity(4)).unwrap() < 0.01);
    }

    #[test]
    fn charge_formula() {
        let c = per_query_charge(0.1, 16.0).unwrap();
        let l = 10f64.ln();
        assert_eq!(c, BigUint::from((160.0 * l * l).ceil() as u64));
        assert!(per_query_charge(0.0, 16.0).is_err());
    }

    #[test]
    fn sample_estimator_fixtures() {
        let zero = DensityOperator::basis(2, 0).unwrap();
        let one = DensityOperator::basis(2, 1).unwrap();
        let same = PreparedEstimator::prepare(
            Access::Sample(SamplizerMode::Ideal),
            Quantity::Affinity,
            &zero,
            &zero,
            1,
            0.25,
            0.5,
        )
        .unwrap();
        let hits = (0..30).filter(|&t| (same.run(t).value - 1.0).abs() <= 0.25).count();
        assert!(hits >= 20);
        let out = same.run(0);
        let plan = same.sample_plan().unwrap();
        let Ledger::Sample(ledger) = &out.ledger else { panic!("expected a sample ledger") };
        let k = BigUint::from(plan.k);
        let charge = &plan.per_query_charge;
        let expect_rho = (BigUint::from(same.schedule().d1) * charge + 1u32) * &k;
        let expect_sigma = BigUint::from(same.schedule().d2) * charge * &k;
        assert_eq!(ledger.samples_rho, expect_rho);
        assert_eq!(ledger.samples_sigma, expect_sigma);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let orth = affinity_est_s(&zero, &one, 1, 0.25, 0.5, SamplizerMode::Ideal, &mut rng).unwrap();
        assert!(orth.value.abs() <= 0.25);
    }

    #[test]
    fn sample_total_bound_holds_deterministically() {
        let rho = DensityOperator::diagonal(&[0.75, 0.25]).unwrap();
        let sigma = DensityOperator::maximally_mixed(2).unwrap();
        let p = PreparedEstimator::prepare(
            Access::Sample(SamplizerMode::Ideal),
            Quantity::Affinity,
            &rho,
            &sigma,
            2,
            0.25,
            0.5,
        )
        .unwrap();
        let s = p.schedule();
        let ideal = p.affinity_from_statistic(p.statistic_target());
        let budget = s.sample_total_bound() - s.output_scale() * 2.0 * s.eps_h;
        assert!((ideal - p.oracle_value()).abs() <= budget);
    }

    #[test]
    fn sample_wrappers() {
        let zero = DensityOperator::basis(2, 0).unwrap();
        let one = DensityOperator::basis(2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = tsallis_est_s(&zero, &one, 1, 0.3, 0.5, SamplizerMode::Lmr, &mut rng).unwrap();
        assert!((t.value - 2.0).abs() <= 0.3);
        let c = hellinger_certify_s(&zero, &zero, 1, 0.05, 0.4, SamplizerMode::Ideal, &mut rng).unwrap();
        assert_eq!(c.decision, Decision::Close);
        let c = hellinger_certify_s(&zero, &one, 1, 0.05, 0.4, SamplizerMode::Ideal, &mut rng).unwrap();
        assert_eq!(c.decision, Decision::Far);
    }

    #[test]
    fn huge_repetition_counts_use_normal_limit() {
        let mut s = ParameterSchedule::sample(0.5, 4, 0.05, 8.0).unwrap();
        s.d1 = 10;
        s.d2 = 10;
        let plan = SamplePlan::new(&s, 0.6, 8, SamplizerMode::Ideal, DEFAULT_C0).unwrap();
        assert!(plan.k > EXACT_BINOMIAL_LIMIT);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = plan.draw_mean(&mut rng);
        assert!((x - plan.prob_one).abs() < 1e-6);
    }
}
