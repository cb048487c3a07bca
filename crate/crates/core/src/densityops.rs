//! Density operators, matrix functions, Schatten norms and exact divergences.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{self, CMatrix, C64};

/// Eigenvalues at or below this threshold count as zero.
pub const RANK_TOL: f64 = 1e-9;
/// Entrywise Hermiticity, positivity and trace tolerance for states.
pub const STATE_TOL: f64 = 1e-10;

/// Eigendecomposition of a Hermitian matrix, eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Columns are the orthonormal eigenvectors.
    pub eigenvectors: CMatrix,
}

impl Spectrum {
    pub fn of_hermitian(m: &CMatrix) -> Spectrum {
        let eig = linalg::hermitian_part(m).symmetric_eigen();
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let eigenvectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        Spectrum {
            eigenvalues,
            eigenvectors,
        }
    }

    /// `U f(Λ) U†`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> CMatrix {
        self.map_complex(|x| C64::new(f(x), 0.0))
    }

    /// `U f(Λ) U†` for a complex-valued `f`.
    pub fn map_complex<F: Fn(f64) -> C64>(&self, f: F) -> CMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let w = f(lambda);
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= w;
            }
        }
        scaled * self.eigenvectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|x| x)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Pseudo-power: eigenvalues above [`RANK_TOL`] are raised to `t`, the rest map to 0.
fn pseudo_power(lambda: f64, t: f64) -> f64 {
    if lambda > RANK_TOL {
        lambda.powf(t)
    } else {
        0.0
    }
}

/// A Hermitian, positive semidefinite, unit-trace matrix on `n` qubits.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    entries: CMatrix,
    spectrum: Spectrum,
    rank: usize,
}

impl DensityOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        let d = entries.nrows();
        if d != entries.ncols() {
            return Err(LabError::InvalidArgument(format!(
                "density matrix must be square, got {}x{}",
                d,
                entries.ncols()
            )));
        }
        if !linalg::is_power_of_two(d) {
            return Err(LabError::InvalidArgument(format!(
                "dimension {d} is not a power of two"
            )));
        }
        let defect = linalg::hermiticity_defect(&entries);
        if defect > STATE_TOL {
            return Err(LabError::InvalidArgument(format!(
                "matrix is not Hermitian (defect {defect:.3e})"
            )));
        }
        let entries = linalg::hermitian_part(&entries);
        let tr = linalg::trace(&entries).re;
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(LabError::InvalidArgument(format!(
                "trace {tr} differs from 1"
            )));
        }
        let spectrum = Spectrum::of_hermitian(&entries);
        let min = spectrum.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -STATE_TOL {
            return Err(LabError::InvalidArgument(format!(
                "matrix is not positive semidefinite (min eigenvalue {min:.3e})"
            )));
        }
        let rank = spectrum.eigenvalues.iter().filter(|&&x| x > RANK_TOL).count();
        Ok(DensityOperator {
            entries,
            spectrum,
            rank,
        })
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalised) vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(LabError::InvalidArgument("zero state vector".into()));
        }
        let d = psi.len();
        let m = CMatrix::from_fn(d, d, |i, j| psi[i] * psi[j].conj() / (norm * norm));
        Self::new(m)
    }

    /// Computational basis state `|k⟩⟨k|`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(LabError::InvalidArgument(format!(
                "basis index {k} out of range for dimension {dim}"
            )));
        }
        let mut diag = vec![0.0; dim];
        diag[k] = 1.0;
        Self::diagonal(&diag)
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::diagonal(&vec![1.0 / dim as f64; dim])
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(linalg::from_real_diagonal(probs))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn num_qubits(&self) -> usize {
        linalg::qubits(self.dim())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `ρ^t` with the pseudo-power rule on the kernel.
    pub fn power(&self, t: f64) -> CMatrix {
        self.spectrum.map(|x| pseudo_power(x, t))
    }

    /// `(sρ)^t` for a positive scalar `s`.
    pub fn scaled_power(&self, s: f64, t: f64) -> CMatrix {
        self.spectrum.map(|x| if x > RANK_TOL { (s * x).powf(t) } else { 0.0 })
    }

    /// Projector onto the support.
    pub fn support_projector(&self) -> CMatrix {
        self.spectrum.map(|x| if x > RANK_TOL { 1.0 } else { 0.0 })
    }

    pub fn to_instance_string(&self) -> String {
        write_instance(&self.entries)
    }

    pub fn from_instance_str(text: &str) -> Result<Self> {
        Self::new(parse_instance(text)?)
    }
}

/// Random state of exact rank `rank`: Haar eigenvectors and flat-Dirichlet weights.
pub fn random_low_rank_state(dim: usize, rank: usize, seed: u64) -> Result<DensityOperator> {
    if !linalg::is_power_of_two(dim) {
        return Err(LabError::InvalidArgument(format!(
            "dimension {dim} is not a power of two"
        )));
    }
    if rank == 0 || rank > dim {
        return Err(LabError::InvalidArgument(format!(
            "rank {rank} must lie in 1..={dim}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = linalg::haar_unitary(dim, &mut rng);
    let weights = loop {
        let w: Vec<f64> = (0..rank).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = w.iter().sum();
        let w: Vec<f64> = w.into_iter().map(|x| x / total).collect();
        // Resample the vanishingly rare draws that would blur the rank threshold.
        if w.iter().all(|&x| x > 1e3 * RANK_TOL) {
            break w;
        }
    };
    let mut m = CMatrix::zeros(dim, dim);
    for (k, &w) in weights.iter().enumerate() {
        let col = u.column(k);
        m += (col * col.adjoint()) * C64::new(w, 0.0);
    }
    DensityOperator::new(m)
}

/// `H^t` for a positive semidefinite matrix, kernel eigenvalues mapped to 0.
pub fn matrix_power(h: &CMatrix, t: f64) -> CMatrix {
    Spectrum::of_hermitian(h).map(|x| pseudo_power(x, t))
}

fn check_dims(rho: &DensityOperator, sigma: &DensityOperator) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(LabError::DimensionMismatch {
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(LabError::InvalidArgument(format!(
            "alpha = {alpha} must lie in (0, 1)"
        )));
    }
    Ok(())
}

/// `tr(ρ^α σ^{1−α})`, clamped to `[0, 1 + 1e-9]`.
pub fn affinity_exact(rho: &DensityOperator, sigma: &DensityOperator, alpha: f64) -> Result<f64> {
    check_dims(rho, sigma)?;
    check_alpha(alpha)?;
    let a = linalg::trace_product(&rho.power(alpha), &sigma.power(1.0 - alpha)).re;
    Ok(a.clamp(0.0, 1.0 + 1e-9))
}

pub fn tsallis_exact(rho: &DensityOperator, sigma: &DensityOperator, alpha: f64) -> Result<f64> {
    Ok((1.0 - affinity_exact(rho, sigma, alpha)?) / (1.0 - alpha))
}

pub fn hellinger_exact(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    Ok((1.0 - affinity_exact(rho, sigma, 0.5)?).max(0.0).sqrt())
}

pub fn trace_distance_exact(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    check_dims(rho, sigma)?;
    Ok(0.5 * linalg::hermitian_trace_norm(&(rho.matrix() - sigma.matrix())))
}

pub fn fidelity_exact(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    check_dims(rho, sigma)?;
    let f = linalg::trace_norm(&(rho.power(0.5) * sigma.power(0.5)));
    Ok(f.min(1.0))
}

/// Petz–Rényi relative entropy for `α ∈ (0,1)`; `+∞` when the affinity vanishes.
pub fn petz_renyi_exact(rho: &DensityOperator, sigma: &DensityOperator, alpha: f64) -> Result<f64> {
    let a = affinity_exact(rho, sigma, alpha)?;
    if a <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(a.ln() / (alpha - 1.0))
}

/// Petz f-divergence `⟨B^{1/2}, f(L_A R_{B^{-1}}) B^{1/2}⟩` for PSD `A`, `B`
/// with `ran(A) ⊆ ran(B)`; only eigenvalues of `B` above [`RANK_TOL`] contribute.
pub fn petz_f_divergence<F: Fn(f64) -> f64>(a: &CMatrix, b: &CMatrix, f: F) -> Result<f64> {
    if a.nrows() != b.nrows() {
        return Err(LabError::DimensionMismatch {
            left: a.nrows(),
            right: b.nrows(),
        });
    }
    let sa = Spectrum::of_hermitian(a);
    let sb = Spectrum::of_hermitian(b);
    let kernel = sb.map(|x| if x > RANK_TOL { 0.0 } else { 1.0 });
    let leak = linalg::hermitian_op_norm(&(&kernel * a * &kernel));
    if leak > 1e-9 {
        return Err(LabError::InvalidArgument(format!(
            "range of A is not contained in range of B (leak {leak:.3e})"
        )));
    }
    // Overlaps |⟨w_b|v_a⟩|² between eigenbases.
    let overlaps = sb.eigenvectors.adjoint() * &sa.eigenvectors;
    let mut total = 0.0;
    for (jb, &bv) in sb.eigenvalues.iter().enumerate() {
        if bv <= RANK_TOL {
            continue;
        }
        for (ja, &av) in sa.eigenvalues.iter().enumerate() {
            let w = overlaps[(jb, ja)].norm_sqr();
            if w == 0.0 {
                continue;
            }
            total += bv * f(av.max(0.0) / bv) * w;
        }
    }
    Ok(total)
}

/// Schatten p-norm; `p = f64::INFINITY` gives the operator norm.
pub fn schatten_norm(m: &CMatrix, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(LabError::InvalidArgument(format!("Schatten index {p} < 1")));
    }
    let s = linalg::singular_values(m);
    if p.is_infinite() {
        return Ok(s.into_iter().fold(0.0, f64::max));
    }
    Ok(s.iter().map(|x| x.powf(p)).sum::<f64>().powf(1.0 / p))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub alpha: f64,
    pub affinity_alpha: f64,
    pub tsallis_alpha: f64,
    pub hellinger: f64,
    pub trace_distance: f64,
    pub fidelity: f64,
    /// `None` encodes `+∞`.
    pub petz_renyi_alpha: Option<f64>,
}

pub fn divergence_report(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    alpha: f64,
) -> Result<DivergenceReport> {
    let affinity_alpha = affinity_exact(rho, sigma, alpha)?;
    let pr = petz_renyi_exact(rho, sigma, alpha)?;
    Ok(DivergenceReport {
        alpha,
        affinity_alpha,
        tsallis_alpha: (1.0 - affinity_alpha) / (1.0 - alpha),
        hellinger: hellinger_exact(rho, sigma)?,
        trace_distance: trace_distance_exact(rho, sigma)?,
        fidelity: fidelity_exact(rho, sigma)?,
        petz_renyi_alpha: pr.is_finite().then_some(pr),
    })
}

// ---------------------------------------------------------------------------
// Instance text format

fn format_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:.16e}{}{:.16e}i", z.re, sign, z.im.abs())
}

fn parse_complex(tok: &str) -> Result<C64> {
    let body = tok
        .strip_suffix('i')
        .ok_or_else(|| LabError::Parse(format!("entry '{tok}' lacks trailing 'i'")))?;
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'))
        .ok_or_else(|| LabError::Parse(format!("entry '{tok}' has no imaginary part")))?;
    let re: f64 = body[..split]
        .parse()
        .map_err(|_| LabError::Parse(format!("bad real part in '{tok}'")))?;
    let im: f64 = body[split..]
        .parse()
        .map_err(|_| LabError::Parse(format!("bad imaginary part in '{tok}'")))?;
    Ok(C64::new(re, im))
}

/// `dim d` header followed by `d` rows of `re+imi` entries.
pub fn write_instance(m: &CMatrix) -> String {
    let d = m.nrows();
    let mut out = format!("dim {d}\n");
    for i in 0..d {
        let row: Vec<String> = (0..d).map(|j| format_complex(m[(i, j)])).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn parse_instance(text: &str) -> Result<CMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| LabError::Parse("empty instance file".into()))?;
    let d: usize = header
        .trim()
        .strip_prefix("dim")
        .map(str::trim)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| LabError::Parse(format!("bad header '{header}'")))?;
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        let line = lines
            .next()
            .ok_or_else(|| LabError::Parse(format!("missing row {i}")))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != d {
            return Err(LabError::Parse(format!(
                "row {i} has {} entries, expected {d}",
                toks.len()
            )));
        }
        for (j, t) in toks.iter().enumerate() {
            m[(i, j)] = parse_complex(t)?;
        }
    }
    Ok(m)
}
