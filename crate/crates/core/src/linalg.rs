//! Small dense linear-algebra helpers shared by the other modules.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn from_real_diagonal(diag: &[f64]) -> CMatrix {
    let d = diag.len();
    let mut m = CMatrix::zeros(d, d);
    for (i, &x) in diag.iter().enumerate() {
        m[(i, i)] = C64::new(x, 0.0);
    }
    m
}

pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    let n = rows.len();
    CMatrix::from_fn(n, rows[0].len(), |i, j| C64::new(rows[i][j], 0.0))
}

pub fn is_power_of_two(d: usize) -> bool {
    d >= 1 && d & (d - 1) == 0
}

/// Number of qubits for a power-of-two dimension.
pub fn qubits(d: usize) -> usize {
    debug_assert!(is_power_of_two(d));
    d.trailing_zeros() as usize
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Largest entrywise modulus of `m − m†`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn trace(m: &CMatrix) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// `tr(AB)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Operator (spectral) norm.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values(m).into_iter().fold(0.0, f64::max)
}

pub fn trace_norm(m: &CMatrix) -> f64 {
    singular_values(m).into_iter().sum()
}

/// Eigenvalues of a Hermitian matrix (unsorted).
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    hermitian_part(m).symmetric_eigenvalues().iter().copied().collect()
}

/// Trace norm of a Hermitian matrix via its eigenvalues.
pub fn hermitian_trace_norm(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).iter().map(|x| x.abs()).sum()
}

/// Operator norm of a Hermitian matrix via its eigenvalues.
pub fn hermitian_op_norm(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Frobenius norm of `U†U − I`; an upper bound on the operator-norm defect.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let g = u.adjoint() * u;
    let n = g.nrows();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            let e = if i == j { g[(i, j)] - ONE } else { g[(i, j)] };
            s += e.norm_sqr();
        }
    }
    s.sqrt()
}

/// Trace out the second factor of a `d1·d2` bipartite operator.
pub fn partial_trace_second(m: &CMatrix, d1: usize, d2: usize) -> CMatrix {
    CMatrix::from_fn(d1, d1, |i, j| {
        (0..d2).map(|k| m[(i * d2 + k, j * d2 + k)]).sum()
    })
}

/// Trace out the first factor of a `d1·d2` bipartite operator.
pub fn partial_trace_first(m: &CMatrix, d1: usize, d2: usize) -> CMatrix {
    CMatrix::from_fn(d2, d2, |i, j| {
        (0..d1).map(|k| m[(k * d2 + i, k * d2 + j)]).sum()
    })
}

/// Hermitian matrix function through an eigendecomposition.
pub fn hermitian_map<F: Fn(f64) -> f64>(m: &CMatrix, f: F) -> CMatrix {
    let eig = hermitian_part(m).symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let w = C64::new(f(lambda), 0.0);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= w;
        }
    }
    scaled * v.adjoint()
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
/// `diag(R)` absorbed into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { ONE };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random Hermitian matrix with i.i.d. Gaussian entries (GUE-like scaling).
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    hermitian_part(&g)
}

/// Permutation matrix exchanging two equal-size tensor factors.
pub fn swap_operator(d: usize) -> CMatrix {
    let mut s = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            s[(j * d + i, i * d + j)] = ONE;
        }
    }
    s
}

/// Embed an operator acting on the listed qubits (most significant first)
/// into an `n`-qubit register, identity elsewhere.
pub fn embed(op: &CMatrix, targets: &[usize], n: usize) -> CMatrix {
    let k = targets.len();
    assert_eq!(op.nrows(), 1 << k, "operator size does not match target count");
    let dim = 1usize << n;
    let mask: usize = targets.iter().map(|&q| 1usize << (n - 1 - q)).sum();
    let local = |x: usize| -> usize {
        let mut v = 0;
        for &q in targets {
            v = (v << 1) | ((x >> (n - 1 - q)) & 1);
        }
        v
    };
    let spread = |mut v: usize, base: usize| -> usize {
        let mut x = base & !mask;
        for &q in targets.iter().rev() {
            x |= (v & 1) << (n - 1 - q);
            v >>= 1;
        }
        x
    };
    let mut out = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let lc = local(col);
        for lr in 0..(1 << k) {
            let a = op[(lr, lc)];
            if a != ZERO {
                out[(spread(lr, col), col)] = a;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in [1, 2, 4, 8] {
            assert!(unitarity_residual(&haar_unitary(d, &mut rng)) < 1e-12);
        }
    }

    #[test]
    fn embed_matches_kron_on_contiguous_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = haar_unitary(4, &mut rng);
        let full = embed(&u, &[1, 2], 3);
        let expected = kron(&identity(2), &u);
        assert!((full - expected).norm() < 1e-12);
        let first = embed(&u, &[0, 1], 3);
        assert!((first - kron(&u, &identity(2))).norm() < 1e-12);
    }

    #[test]
    fn embed_reversed_targets_conjugates_by_swap() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = haar_unitary(4, &mut rng);
        let s = swap_operator(2);
        let reversed = embed(&u, &[1, 0], 2);
        assert!((reversed - &s * &u * &s).norm() < 1e-12);
    }

    #[test]
    fn partial_traces_of_product_operator() {
        let a = from_real_diagonal(&[0.25, 0.75]);
        let b = from_real_diagonal(&[0.5, 0.3, 0.1, 0.1]);
        let ab = kron(&a, &b);
        assert!((partial_trace_second(&ab, 2, 4) - &a).norm() < 1e-14);
        assert!((partial_trace_first(&ab, 2, 4) - &b).norm() < 1e-14);
    }
}
