//! Block-encodings as explicit unitary matrices.
//!
//! Registers are ordered ancillas first (most significant), system last, so
//! the encoded block is the top-left `2^n × 2^n` corner of the unitary.
//!
//! A [`BlockEncoding`] keeps two ancilla counts. `ancilla_qubits` is the
//! nominal count a circuit realisation would use and is what resource
//! accounting reads. The stored unitary may act on fewer ancillas: eigenvalue
//! transforms and compacted products are realised by the minimal one-ancilla
//! dilation of their block, which has the same encoded block.

use crate::densityops::DensityOperator;
use crate::error::{LabError, Result};
use crate::linalg::{self, CMatrix, C64, ONE, ZERO};
use crate::polyapprox::ApproxPolynomial;

/// Products whose physical register would exceed this many qubits are built
/// from compacted inputs.
const MAX_PRODUCT_QUBITS: usize = 9;

/// Unitary preparing a purification of a state from `|0…0⟩`.
#[derive(Clone, Debug)]
pub struct PurifiedOracle {
    unitary: CMatrix,
    n: usize,
    n_env: usize,
}

impl PurifiedOracle {
    /// Acts on system ⊗ environment, system most significant.
    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    pub fn system_qubits(&self) -> usize {
        self.n
    }

    pub fn env_qubits(&self) -> usize {
        self.n_env
    }

    /// `U|0…0⟩`.
    pub fn prepared_state(&self) -> Vec<C64> {
        self.unitary.column(0).iter().copied().collect()
    }

    /// Partial trace of the prepared state over the environment.
    pub fn reduced_state(&self) -> CMatrix {
        let psi = self.unitary.column(0);
        let pure = psi * psi.adjoint();
        linalg::partial_trace_second(&pure, 1 << self.n, 1 << self.n_env)
    }
}

/// Unitary completion of a unit vector: Householder reflection composed with a phase.
fn complete_to_unitary(psi: &[C64]) -> CMatrix {
    let dim = psi.len();
    let phase = if psi[0].norm() > 0.0 {
        psi[0] / psi[0].norm()
    } else {
        ONE
    };
    let mut v: Vec<C64> = psi.to_vec();
    v[0] -= phase;
    let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let mut u = linalg::identity(dim);
    if vnorm2 > 1e-30 {
        for i in 0..dim {
            for j in 0..dim {
                u[(i, j)] -= v[i] * v[j].conj() * (2.0 / vnorm2);
            }
        }
    }
    // H e_0 = conj(phase)·ψ, so scaling the first column by `phase` yields ψ.
    for i in 0..dim {
        u[(i, 0)] *= phase;
    }
    u
}

/// Purified query oracle `U|0⟩|0⟩ = Σ_i √λ_i |v_i⟩|i⟩` for a state.
pub fn purified_oracle(rho: &DensityOperator) -> PurifiedOracle {
    let d = rho.dim();
    let spec = rho.spectrum();
    let mut psi = vec![ZERO; d * d];
    for (i, &lambda) in spec.eigenvalues.iter().enumerate() {
        if lambda <= 0.0 {
            continue;
        }
        let col = spec.eigenvectors.column(i);
        // Fix the eigenvector phase: largest component real and positive.
        let pivot = col.iter().copied().fold(ZERO, |a, z| if z.norm() > a.norm() { z } else { a });
        let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { ONE };
        for s in 0..d {
            psi[s * d + i] = col[s] * phase * lambda.sqrt();
        }
    }
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in psi.iter_mut() {
        *z /= norm;
    }
    let n = rho.num_qubits();
    PurifiedOracle {
        unitary: complete_to_unitary(&psi),
        n,
        n_env: n,
    }
}

/// A unitary whose `|0⟩`-ancilla block, times `scale`, approximates a target.
#[derive(Clone, Debug)]
pub struct BlockEncoding {
    unitary: CMatrix,
    system_qubits: usize,
    ancilla_qubits: usize,
    physical_ancillas: usize,
    scale: f64,
    error_bound: f64,
    target_ref: Option<CMatrix>,
}

impl BlockEncoding {
    /// Wraps an explicit unitary whose top-left block is the encoded matrix.
    pub fn from_unitary(
        unitary: CMatrix,
        system_qubits: usize,
        scale: f64,
        error_bound: f64,
        target_ref: Option<CMatrix>,
    ) -> Result<Self> {
        let dim = unitary.nrows();
        if dim != unitary.ncols() || !linalg::is_power_of_two(dim) {
            return Err(LabError::InvalidArgument(format!(
                "unitary must be square of power-of-two size, got {}x{}",
                dim,
                unitary.ncols()
            )));
        }
        let total = linalg::qubits(dim);
        if system_qubits > total {
            return Err(LabError::InvalidArgument(format!(
                "{system_qubits} system qubits exceed register of {total}"
            )));
        }
        Ok(BlockEncoding {
            unitary,
            system_qubits,
            ancilla_qubits: total - system_qubits,
            physical_ancillas: total - system_qubits,
            scale,
            error_bound,
            target_ref,
        })
    }

    /// Minimal one-ancilla unitary dilation `[[A, (I−AA†)^{1/2}], [(I−A†A)^{1/2}, −A†]]`.
    pub fn from_block(
        block: &CMatrix,
        scale: f64,
        error_bound: f64,
        target_ref: Option<CMatrix>,
    ) -> Result<Self> {
        let d = block.nrows();
        if d != block.ncols() || !linalg::is_power_of_two(d) {
            return Err(LabError::InvalidArgument(
                "block must be square of power-of-two size".into(),
            ));
        }
        let norm = linalg::op_norm(block);
        if norm > 1.0 + 1e-9 {
            return Err(LabError::InvalidArgument(format!(
                "block norm {norm} exceeds 1"
            )));
        }
        let defect_root = |m: &CMatrix| linalg::hermitian_map(&(linalg::identity(d) - m), |x| x.max(0.0).sqrt());
        let top = defect_root(&(block * block.adjoint()));
        let bottom = defect_root(&(block.adjoint() * block));
        let mut u = CMatrix::zeros(2 * d, 2 * d);
        u.view_mut((0, 0), (d, d)).copy_from(block);
        u.view_mut((0, d), (d, d)).copy_from(&top);
        u.view_mut((d, 0), (d, d)).copy_from(&bottom);
        u.view_mut((d, d), (d, d)).copy_from(&(-block.adjoint()));
        let mut be = Self::from_unitary(u, linalg::qubits(d), scale, error_bound, target_ref)?;
        be.ancilla_qubits = 1;
        Ok(be)
    }

    /// `I` on `n` qubits with no ancillas.
    pub fn identity(n: usize) -> Self {
        let d = 1 << n;
        BlockEncoding {
            unitary: linalg::identity(d),
            system_qubits: n,
            ancilla_qubits: 0,
            physical_ancillas: 0,
            scale: 1.0,
            error_bound: 0.0,
            target_ref: Some(linalg::identity(d)),
        }
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    pub fn system_qubits(&self) -> usize {
        self.system_qubits
    }

    pub fn system_dim(&self) -> usize {
        1 << self.system_qubits
    }

    /// Nominal ancilla count of the encoded circuit.
    pub fn ancilla_qubits(&self) -> usize {
        self.ancilla_qubits
    }

    /// Ancillas actually present in the stored unitary.
    pub fn physical_ancillas(&self) -> usize {
        self.physical_ancillas
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn error_bound(&self) -> f64 {
        self.error_bound
    }

    pub fn target_ref(&self) -> Option<&CMatrix> {
        self.target_ref.as_ref()
    }

    pub fn with_nominal_ancillas(mut self, a: usize) -> Self {
        self.ancilla_qubits = a.max(self.physical_ancillas);
        self
    }

    pub fn unitarity_residual(&self) -> f64 {
        linalg::unitarity_residual(&self.unitary)
    }

    /// Re-realises the block with the minimal one-ancilla dilation.
    pub fn compacted(&self) -> Result<Self> {
        if self.physical_ancillas <= 1 {
            return Ok(self.clone());
        }
        let block = encoded_block(self);
        let mut be = Self::from_block(&block, self.scale, self.error_bound, self.target_ref.clone())?;
        be.ancilla_qubits = self.ancilla_qubits;
        Ok(be)
    }
}

/// Top-left system block of the unitary (the all-zero ancilla sector).
pub fn encoded_block(be: &BlockEncoding) -> CMatrix {
    let d = be.system_dim();
    be.unitary.view((0, 0), (d, d)).into_owned()
}

/// `‖scale·block − target‖_∞`.
pub fn verify(be: &BlockEncoding, target: &CMatrix) -> f64 {
    let block = encoded_block(be) * C64::new(be.scale, 0.0);
    linalg::op_norm(&(block - target))
}

/// Purify-and-swap block-encoding `(O† ⊗ I)(SWAP_{S',S} ⊗ I_E)(O ⊗ I)` of the
/// oracle's reduced state, with ancillas `S', E` and system `S`.
pub fn density_block_encoding(oracle: &PurifiedOracle) -> Result<BlockEncoding> {
    let d = 1usize << oracle.n;
    let de = 1usize << oracle.n_env;
    let o = &oracle.unitary;
    let dim = d * de * d;
    // W[(a,e,b),(a',e',b')] = Σ_f conj(O[(b',f),(a,e)]) · O[(b,f),(a',e')].
    let mut w = CMatrix::zeros(dim, dim);
    for a in 0..d {
        for e in 0..de {
            let row_in = a * de + e;
            for b in 0..d {
                let row = (a * de + e) * d + b;
                for ap in 0..d {
                    for ep in 0..de {
                        let col_in = ap * de + ep;
                        for bp in 0..d {
                            let mut acc = ZERO;
                            for f in 0..de {
                                acc += o[(bp * de + f, row_in)].conj() * o[(b * de + f, col_in)];
                            }
                            w[(row, (ap * de + ep) * d + bp)] = acc;
                        }
                    }
                }
            }
        }
    }
    let rho = oracle.reduced_state();
    let block = w.view((0, 0), (d, d)).into_owned();
    let residual = linalg::op_norm(&(&block - &rho));
    if residual > 1e-6 {
        return Err(LabError::Construction(format!(
            "density block-encoding residual {residual:.3e}"
        )));
    }
    BlockEncoding::from_unitary(w, oracle.n, 1.0, 0.0, Some(rho))
}

/// Eigenvalue transform `p(Â)` of a Hermitian encoded block, realised as the
/// dilation `[[P, K], [K, −P]]` with `P = p(Â) + δ′·I` and `K = (I − P²)^{1/2}`.
pub fn eigen_transform(
    be: &BlockEncoding,
    p: &ApproxPolynomial,
    delta_prime: f64,
) -> Result<BlockEncoding> {
    if !(be.scale > 0.0) {
        return Err(LabError::InvalidArgument("block-encoding scale must be positive".into()));
    }
    if !(delta_prime >= 0.0) {
        return Err(LabError::InvalidArgument(format!(
            "injected error {delta_prime} must be nonnegative"
        )));
    }
    if p.certified_bound() > 0.5 + 1e-9 {
        return Err(LabError::InvalidArgument(format!(
            "polynomial bound {} exceeds 1/2",
            p.certified_bound()
        )));
    }
    let error_bound =
        4.0 * p.degree() as f64 * (be.error_bound / be.scale).sqrt() + delta_prime;
    if error_bound >= 1.0 {
        return Err(LabError::InvalidArgument(format!(
            "transformed error bound {error_bound} is not below 1"
        )));
    }
    let block = encoded_block(be);
    let defect = linalg::hermiticity_defect(&block);
    if defect > 1e-8 {
        return Err(LabError::InvalidArgument(format!(
            "encoded block is not Hermitian (defect {defect:.3e})"
        )));
    }
    let d = block.nrows();
    let shift = |x: f64| p.eval(x.clamp(-1.0, 1.0)) + delta_prime;
    let pm = linalg::hermitian_map(&block, shift);
    let km = linalg::hermitian_map(&block, |x| {
        let v = shift(x);
        (1.0 - v * v).max(0.0).sqrt()
    });
    let mut u = CMatrix::zeros(2 * d, 2 * d);
    u.view_mut((0, 0), (d, d)).copy_from(&pm);
    u.view_mut((0, d), (d, d)).copy_from(&km);
    u.view_mut((d, 0), (d, d)).copy_from(&km);
    u.view_mut((d, d), (d, d)).copy_from(&(-&pm));
    let target_ref = match &be.target_ref {
        Some(t) if linalg::hermiticity_defect(t) <= 1e-8 => {
            let scaled = t * C64::new(1.0 / be.scale, 0.0);
            Some(linalg::hermitian_map(&scaled, |x| p.eval(x.clamp(-1.0, 1.0))))
        }
        _ => None,
    };
    let mut out = BlockEncoding::from_unitary(u, be.system_qubits, 1.0, error_bound, target_ref)?;
    out.ancilla_qubits = be.ancilla_qubits + 2;
    Ok(out)
}

/// `(I_b ⊗ U)(I_a ⊗ V)`: encodes `A·B` with scale `α·β` and error `α·δ + β·ε`.
pub fn block_product(u: &BlockEncoding, v: &BlockEncoding) -> Result<BlockEncoding> {
    if u.system_qubits != v.system_qubits {
        return Err(LabError::DimensionMismatch {
            left: u.system_dim(),
            right: v.system_dim(),
        });
    }
    let n = u.system_qubits;
    let (u, v) = if u.physical_ancillas + v.physical_ancillas + n > MAX_PRODUCT_QUBITS {
        (u.compacted()?, v.compacted()?)
    } else {
        (u.clone(), v.clone())
    };
    let (pa, pb) = (u.physical_ancillas, v.physical_ancillas);
    let total = pa + pb + n;
    let system: Vec<usize> = (pa + pb..total).collect();
    let u_targets: Vec<usize> = (0..pa).chain(system.iter().copied()).collect();
    let v_targets: Vec<usize> = (pa..pa + pb).chain(system.iter().copied()).collect();
    let full = linalg::embed(&u.unitary, &u_targets, total) * linalg::embed(&v.unitary, &v_targets, total);
    let target_ref = match (&u.target_ref, &v.target_ref) {
        (Some(a), Some(b)) => Some(a * b),
        _ => None,
    };
    let mut out = BlockEncoding::from_unitary(
        full,
        n,
        u.scale * v.scale,
        u.scale * v.error_bound + v.scale * u.error_bound,
        target_ref,
    )?;
    out.ancilla_qubits = u.ancilla_qubits + v.ancilla_qubits;
    Ok(out)
}
