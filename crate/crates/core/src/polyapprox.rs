//! Certified Chebyshev approximations of the power functions used by the
//! affinity estimators.
//!
//! Two families are built:
//!
//! * odd approximations of `(δ^c/2)·x^{−c}` on `[δ, 1]`, bounded by 1 on `[−1, 1]`;
//! * even approximations of `(1/2)|x|^β` on `[−1, 1]`.
//!
//! The negative-power family interpolates the entire function
//! `F(x) = (δ^c/2)·sgn(x)|x|^{−c}·P((c+1)/2, x²T)` where `P` is the regularised
//! lower incomplete gamma function. `F` is odd, vanishes at 0 and agrees with
//! the target on `[δ, 1]` up to `(1/2)·Q((c+1)/2, δ²T)`. Its Chebyshev
//! coefficients decay like `ρ^{−k}` on a Bernstein ellipse with
//! `ρ − 1 ≈ δ/√(T δ²)`, which gives degree `O((1/δ)·log(1/ε))`.
//!
//! When the required degree is too large to tabulate, the polynomial is kept
//! in implicit form: evaluation goes through `F` and the certified error
//! includes the analytic truncation tail of the Chebyshev series.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{LabError, Result};
use crate::linalg::{self, CMatrix};

/// Largest degree for which negative-power approximations are tabulated.
pub const EXPLICIT_DEGREE_LIMIT: usize = 1 << 17;
/// Largest degree any tabulated polynomial may reach.
pub const MAX_TABLE_DEGREE: usize = 1 << 23;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Odd,
    Even,
    None,
}

impl Parity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Parity::Odd => "odd",
            Parity::Even => "even",
            Parity::None => "none",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "odd" => Ok(Parity::Odd),
            "even" => Ok(Parity::Even),
            "none" => Ok(Parity::None),
            _ => Err(LabError::Parse(format!("unknown parity '{s}'"))),
        }
    }
}

/// What a polynomial approximates, up to the multiplier `scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TargetTag {
    /// `scale·(δ^c/2)·x^{−c}` on `[δ, 1]`.
    NegPower { c: f64, delta: f64, scale: f64 },
    /// `scale·(1/2)|x|^β` on `[−1, 1]`.
    PosPower { beta: f64, scale: f64 },
    /// A polynomial given directly by its coefficients.
    Explicit,
}

impl TargetTag {
    /// Target value; `None` outside the certified domain.
    pub fn value(&self, x: f64) -> Option<f64> {
        match *self {
            TargetTag::NegPower { c, delta, scale } => {
                (x >= delta && x <= 1.0).then(|| scale * 0.5 * (delta / x).powf(c))
            }
            TargetTag::PosPower { beta, scale } => {
                (x.abs() <= 1.0).then(|| scale * 0.5 * x.abs().powf(beta))
            }
            TargetTag::Explicit => None,
        }
    }

    /// Certified domain `[lo, hi]`.
    pub fn domain(&self) -> Option<(f64, f64)> {
        match *self {
            TargetTag::NegPower { delta, .. } => Some((delta, 1.0)),
            TargetTag::PosPower { .. } => Some((0.0, 1.0)),
            TargetTag::Explicit => None,
        }
    }

    fn rescaled(&self, k: f64) -> TargetTag {
        match *self {
            TargetTag::NegPower { c, delta, scale } => TargetTag::NegPower {
                c,
                delta,
                scale: scale * k,
            },
            TargetTag::PosPower { beta, scale } => TargetTag::PosPower {
                beta,
                scale: scale * k,
            },
            TargetTag::Explicit => TargetTag::Explicit,
        }
    }
}

/// The entire odd function interpolated for the negative-power family.
#[derive(Clone, Debug, PartialEq)]
pub struct NegPowerSurrogate {
    c: f64,
    delta: f64,
    /// Shape parameter `(c+1)/2` of the incomplete gamma function.
    s: f64,
    /// Time constant: `P(s, x²T)` switches on around `x = δ`.
    t: f64,
    /// Output multiplier, `δ^c/2` times any later rescaling.
    amp: f64,
    /// `Q(s, δ²T)`; twice the surrogate's worst error on `[δ, 1]`.
    q0: f64,
}

impl NegPowerSurrogate {
    /// Surrogate whose deviation from the target on `[δ, 1]` is at most `err/2`.
    pub fn new(c: f64, delta: f64, err: f64) -> Self {
        let s = 0.5 * (c + 1.0);
        let q = |z: f64| if z <= 0.0 { 1.0 } else { gamma_ur(s, z) };
        let mut hi = 1.0;
        while q(hi) > err {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if q(mid) > err {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let z0 = hi;
        NegPowerSurrogate {
            c,
            delta,
            s,
            t: z0 / (delta * delta),
            amp: 0.5 * delta.powf(c),
            q0: q(z0),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let ax = x.abs();
        let z = x * x * self.t;
        if z < 1e-12 {
            // P(s, z) ≈ z^s/Γ(s+1); the powers of |x| collapse to x.
            return self.amp * x * (self.s * self.t.ln() - ln_gamma(self.s + 1.0)).exp();
        }
        let v = self.amp * ax.powf(-self.c) * gamma_lr(self.s, z);
        if x > 0.0 {
            v
        } else {
            -v
        }
    }

    /// Worst deviation from the (scaled) target on `[δ, 1]`, attained at `x = δ`.
    pub fn domain_error(&self) -> f64 {
        self.amp * self.delta.powf(-self.c) * self.q0
    }

    /// Degree at which the Chebyshev series tail drops below `tau`, from the
    /// Bernstein-ellipse bound `|a_k| ≤ 2 M(ρ) ρ^{−k}`.
    pub fn bernstein_degree(&self, tau: f64) -> usize {
        let ln_pref = self.amp.ln() + self.s * self.t.ln() - ln_gamma(self.s + 1.0);
        let b_star = (1.0 / self.t).sqrt();
        let mut best = f64::INFINITY;
        for i in 0..600 {
            let b = b_star * 10f64.powf(-1.5 + 4.0 * i as f64 / 599.0);
            let a = (b * b + 1.0).sqrt();
            let rho = a + b;
            // On the ellipse, |F| ≤ amp·T^s·|x|·e^{b²T}/Γ(s+1) with |x| ≤ a.
            let ln_m = ln_pref + a.ln() + b * b * self.t;
            let n = (2f64.ln() + ln_m - tau.ln() - (rho - 1.0).ln()) / rho.ln();
            if n < best {
                best = n;
            }
        }
        best.ceil().max(1.0) as usize
    }

    /// Maximum of `|F|` on `[−1, 1]`.
    pub fn sup_abs(&self) -> f64 {
        // F on (0,1] as a function of z = x²T.
        let g = |z: f64| self.eval((z / self.t).sqrt());
        let z_hi = self.t;
        let z_lo = (1e-8 * self.t).min(1e-8);
        let n = 4000;
        let ratio = (z_hi / z_lo).ln();
        let mut best = (0.0, z_hi);
        for i in 0..=n {
            let z = z_lo * (ratio * i as f64 / n as f64).exp();
            let v = g(z).abs();
            if v > best.0 {
                best = (v, z);
            }
        }
        // Golden-section refinement around the coarse maximiser.
        let step = (ratio / n as f64).exp();
        let (mut a, mut b) = ((best.1 / step).ln(), (best.1 * step).min(z_hi).ln());
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let m1 = b - phi * (b - a);
            let m2 = a + phi * (b - a);
            if g(m1.exp()).abs() < g(m2.exp()).abs() {
                a = m1;
            } else {
                b = m2;
            }
        }
        best.0.max(g((0.5 * (a + b)).exp()).abs())
    }

    fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.amp *= k;
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Representation {
    Chebyshev(Vec<f64>),
    /// Evaluated through the surrogate; `slack` bounds the distance to the
    /// degree-`degree` Chebyshev truncation it stands for.
    Implicit {
        surrogate: NegPowerSurrogate,
        slack: f64,
    },
}

/// Real polynomial in the Chebyshev basis together with its certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxPolynomial {
    repr: Representation,
    degree: usize,
    parity: Parity,
    target: TargetTag,
    certified_error: f64,
    certified_bound: f64,
    degree_constant: f64,
}

impl ApproxPolynomial {
    /// Polynomial given by Chebyshev coefficients; the bound is measured on a grid.
    pub fn from_chebyshev(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(LabError::InvalidArgument("empty coefficient vector".into()));
        }
        let degree = effective_degree(&coeffs);
        let parity = detect_parity(&coeffs);
        let mut bound: f64 = 0.0;
        for_each_grid_value(&coeffs, 4 * degree + 1000, |_, p| bound = bound.max(p.abs()));
        Ok(ApproxPolynomial {
            repr: Representation::Chebyshev(coeffs),
            degree,
            parity,
            target: TargetTag::Explicit,
            certified_error: 0.0,
            certified_bound: bound,
            degree_constant: f64::NAN,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn target(&self) -> TargetTag {
        self.target
    }

    /// Largest deviation from the target on the certified domain.
    pub fn certified_error(&self) -> f64 {
        self.certified_error
    }

    /// Largest `|p|` on `[−1, 1]`.
    pub fn certified_bound(&self) -> f64 {
        self.certified_bound
    }

    /// Achieved degree divided by the reference degree formula.
    pub fn degree_constant(&self) -> f64 {
        self.degree_constant
    }

    /// Chebyshev coefficients, when tabulated.
    pub fn chebyshev_coeffs(&self) -> Option<&[f64]> {
        match &self.repr {
            Representation::Chebyshev(c) => Some(c),
            Representation::Implicit { .. } => None,
        }
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.repr, Representation::Chebyshev(_))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.repr {
            Representation::Chebyshev(c) => clenshaw(c, x),
            Representation::Implicit { surrogate, .. } => surrogate.eval(x),
        }
    }

    /// `k·p` with target and certificate rescaled accordingly.
    pub fn scaled(&self, k: f64) -> ApproxPolynomial {
        let repr = match &self.repr {
            Representation::Chebyshev(c) => {
                Representation::Chebyshev(c.iter().map(|a| a * k).collect())
            }
            Representation::Implicit { surrogate, slack } => Representation::Implicit {
                surrogate: surrogate.scaled(k),
                slack: slack * k.abs(),
            },
        };
        ApproxPolynomial {
            repr,
            degree: self.degree,
            parity: self.parity,
            target: self.target.rescaled(k),
            certified_error: self.certified_error * k.abs(),
            certified_bound: self.certified_bound * k.abs(),
            degree_constant: self.degree_constant,
        }
    }

    /// `−p` with the target left untouched; a deliberately broken polynomial.
    pub fn sign_flipped(&self) -> ApproxPolynomial {
        let mut out = self.scaled(-1.0);
        out.target = self.target;
        out
    }

    /// Text dump: `cheb degree parity` then one coefficient per line.
    pub fn dump(&self) -> Result<String> {
        let coeffs = self.chebyshev_coeffs().ok_or_else(|| {
            LabError::InvalidArgument("implicit polynomial has no coefficient table".into())
        })?;
        let mut out = format!("cheb {} {}\n", self.degree, self.parity.as_str());
        for a in &coeffs[..=self.degree] {
            let _ = writeln!(out, "{a:.16e}");
        }
        Ok(out)
    }

    /// Reads a dump back as an explicit polynomial.
    pub fn load(text: &str) -> Result<ApproxPolynomial> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| LabError::Parse("empty polynomial dump".into()))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() != 3 || toks[0] != "cheb" {
            return Err(LabError::Parse(format!("bad header '{header}'")));
        }
        let degree: usize = toks[1]
            .parse()
            .map_err(|_| LabError::Parse(format!("bad degree '{}'", toks[1])))?;
        let parity = Parity::parse(toks[2])?;
        let coeffs = lines
            .map(|l| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|_| LabError::Parse(format!("bad coefficient '{l}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if coeffs.len() != degree + 1 {
            return Err(LabError::Parse(format!(
                "expected {} coefficients, found {}",
                degree + 1,
                coeffs.len()
            )));
        }
        let mut p = ApproxPolynomial::from_chebyshev(coeffs)?;
        p.parity = parity;
        Ok(p)
    }
}

/// Clenshaw recurrence for `Σ a_k T_k(x)`.
pub fn clenshaw(coeffs: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &a in coeffs.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + a;
        b2 = b1;
        b1 = b0;
    }
    coeffs.first().copied().unwrap_or(0.0) + x * b1 - b2
}

fn effective_degree(coeffs: &[f64]) -> usize {
    coeffs.iter().rposition(|&a| a != 0.0).unwrap_or(0)
}

fn detect_parity(coeffs: &[f64]) -> Parity {
    let odd_zero = coeffs.iter().skip(1).step_by(2).all(|&a| a.abs() <= 1e-12);
    let even_zero = coeffs.iter().step_by(2).all(|&a| a.abs() <= 1e-12);
    match (even_zero, odd_zero) {
        (true, _) => Parity::Odd,
        (false, true) => Parity::Even,
        _ => Parity::None,
    }
}

/// Smallest `2^a 3^b 5^c` at least `n`.
fn smooth_size(n: usize) -> usize {
    let mut best = usize::MAX;
    let mut p2 = 1usize;
    while p2 < 2 * n.max(1) {
        let mut p3 = p2;
        while p3 < 2 * n.max(1) {
            let mut p5 = p3;
            while p5 < n {
                p5 *= 5;
            }
            best = best.min(p5);
            p3 *= 3;
        }
        p2 *= 2;
    }
    best
}

/// Smallest even smooth size at least `n`; even sizes put a node at `x = 0`.
fn smooth_even(n: usize) -> usize {
    2 * smooth_size(n.div_ceil(2))
}

/// Chebyshev interpolation coefficients from samples at `cos(πj/n)`, `j = 0..=n`.
fn dct1_coefficients(values: &[f64]) -> Vec<f64> {
    let n = values.len() - 1;
    if n == 0 {
        return vec![values[0]];
    }
    let mut buf: Vec<Complex64> = Vec::with_capacity(2 * n);
    buf.extend(values.iter().map(|&v| Complex64::new(v, 0.0)));
    buf.extend(values[1..n].iter().rev().map(|&v| Complex64::new(v, 0.0)));
    let fft = FftPlanner::new().plan_fft_forward(2 * n);
    fft.process(&mut buf);
    let mut out: Vec<f64> = buf[..=n].iter().map(|z| z.re / n as f64).collect();
    out[0] *= 0.5;
    out[n] *= 0.5;
    out
}

fn interpolate<F: Fn(f64) -> f64 + Sync>(f: F, n: usize) -> Vec<f64> {
    let values: Vec<f64> = (0..=n)
        .map(|j| f((std::f64::consts::PI * j as f64 / n as f64).cos()))
        .collect();
    dct1_coefficients(&values)
}

/// Calls `visit(x, p(x))` for every node `x = cos(πj/m)`, `j = 0..=m`, with
/// `m ≥ m_min`. Values come from `q` inverse FFTs of length `2K` on the
/// shifted sub-grids `j ≡ s (mod q)`.
pub fn for_each_grid_value<V: FnMut(f64, f64)>(coeffs: &[f64], m_min: usize, mut visit: V) {
    let deg = effective_degree(coeffs);
    if deg < 64 {
        let m = m_min.max(2);
        for j in 0..=m {
            let x = (std::f64::consts::PI * j as f64 / m as f64).cos();
            visit(x, clenshaw(&coeffs[..=deg], x));
        }
        return;
    }
    let k = smooth_size(deg + 1);
    let q = m_min.div_ceil(k).max(1);
    let m = q * k;
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_inverse(2 * k);
    let mut buf = vec![Complex64::new(0.0, 0.0); 2 * k];
    for s in 0..q {
        for b in buf.iter_mut() {
            *b = Complex64::new(0.0, 0.0);
        }
        let shift = std::f64::consts::PI * s as f64 / m as f64;
        for (idx, &a) in coeffs[..=deg].iter().enumerate() {
            buf[idx] = Complex64::from_polar(a, shift * idx as f64);
        }
        fft.process(&mut buf);
        let t_max = if s == 0 { k } else { k - 1 };
        for (t, z) in buf.iter().enumerate().take(t_max + 1) {
            let j = q * t + s;
            let x = (std::f64::consts::PI * j as f64 / m as f64).cos();
            visit(x, z.re);
        }
    }
}

/// Drops the longest tail whose absolute coefficient sum is at most `budget`.
fn chop(coeffs: &mut Vec<f64>, budget: f64) {
    let mut tail = 0.0;
    let mut cut = coeffs.len();
    for k in (1..coeffs.len()).rev() {
        tail += coeffs[k].abs();
        if tail > budget {
            break;
        }
        cut = k;
    }
    coeffs.truncate(cut.max(1));
}

/// Grid error against `target` (where defined) and grid sup of `|p|`.
fn grid_certificate(coeffs: &[f64], target: &TargetTag) -> (f64, f64) {
    let deg = effective_degree(coeffs);
    let mut err: f64 = 0.0;
    let mut bound: f64 = 0.0;
    for_each_grid_value(coeffs, 4 * deg + 1000, |x, p| {
        bound = bound.max(p.abs());
        if let Some(t) = target.value(x) {
            err = err.max((p - t).abs());
        }
    });
    if let Some((lo, hi)) = target.domain() {
        for x in [lo, hi] {
            let p = clenshaw(coeffs, x);
            err = err.max((p - target.value(x).unwrap_or(p)).abs());
            bound = bound.max(p.abs());
        }
    }
    (err, bound)
}

fn check_unit_interval(name: &str, v: f64, hi: f64) -> Result<()> {
    if !(v > 0.0 && v < hi) {
        return Err(LabError::InvalidArgument(format!(
            "{name} = {v} must lie in (0, {hi})"
        )));
    }
    Ok(())
}

/// Reference degree `(max(1,c)/δ)·ln(1/ε)` for the negative-power family.
pub fn neg_power_degree_formula(c: f64, delta: f64, eps: f64) -> f64 {
    c.max(1.0) / delta * (1.0 / eps).ln()
}

/// Reference degree `(1/ε)^{1/β}` for the positive-power family.
pub fn pos_power_degree_formula(beta: f64, eps: f64) -> f64 {
    (1.0 / eps).powf(1.0 / beta)
}

/// Odd polynomial with `|p(x) − (δ^c/2)x^{−c}| ≤ ε` on `[δ, 1]` and `|p| ≤ 1` on `[−1, 1]`.
pub fn build_neg_power_poly(c: f64, delta: f64, eps: f64) -> Result<ApproxPolynomial> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(LabError::InvalidArgument(format!("exponent c = {c} must be positive")));
    }
    check_unit_interval("delta", delta, 0.5)?;
    check_unit_interval("eps", eps, 0.5)?;
    let formula = neg_power_degree_formula(c, delta, eps);
    let cap = (20.0 * formula).ceil() as usize;
    let target = TargetTag::NegPower {
        c,
        delta,
        scale: 1.0,
    };
    let surrogate = NegPowerSurrogate::new(c, delta, eps / 2.0);
    let slack = eps / 16.0;
    let predicted = surrogate.bernstein_degree(slack);

    if predicted > EXPLICIT_DEGREE_LIMIT {
        if predicted > cap {
            return Err(LabError::CertificationFailure {
                achieved: f64::NAN,
                requested: eps,
                degree: predicted,
            });
        }
        let certified_error = surrogate.domain_error() + slack;
        let certified_bound = surrogate.sup_abs() + slack;
        if certified_error > eps || certified_bound > 1.0 {
            return Err(LabError::CertificationFailure {
                achieved: certified_error,
                requested: eps,
                degree: predicted,
            });
        }
        return Ok(ApproxPolynomial {
            repr: Representation::Implicit { surrogate, slack },
            degree: predicted,
            parity: Parity::Odd,
            target,
            certified_error,
            certified_bound,
            degree_constant: predicted as f64 / formula,
        });
    }

    let mut n = smooth_even((predicted / 2).max(16));
    loop {
        let mut coeffs = interpolate(|x| surrogate.eval(x), n);
        for a in coeffs.iter_mut().step_by(2) {
            *a = 0.0;
        }
        chop(&mut coeffs, eps / 16.0);
        let (mut err, mut bound) = grid_certificate(&coeffs, &target);
        if bound > 1.0 {
            for a in coeffs.iter_mut() {
                *a /= bound;
            }
            (err, bound) = grid_certificate(&coeffs, &target);
        }
        let degree = effective_degree(&coeffs);
        if err <= eps && bound <= 1.0 + 1e-9 {
            return Ok(ApproxPolynomial {
                repr: Representation::Chebyshev(coeffs),
                degree,
                parity: Parity::Odd,
                target,
                certified_error: err,
                certified_bound: bound,
                degree_constant: degree as f64 / formula,
            });
        }
        if 2 * n > cap {
            return Err(LabError::CertificationFailure {
                achieved: err,
                requested: eps,
                degree,
            });
        }
        n = smooth_even(2 * n);
    }
}

/// Even polynomial with `|p(x) − (1/2)|x|^β| ≤ ε` on `[−1, 1]`.
pub fn build_pos_power_poly(beta: f64, eps: f64) -> Result<ApproxPolynomial> {
    check_unit_interval("beta", beta, 1.0)?;
    check_unit_interval("eps", eps, 0.5)?;
    let formula = pos_power_degree_formula(beta, eps);
    let cap = ((20.0 * formula).ceil() as usize).min(MAX_TABLE_DEGREE);
    let target = TargetTag::PosPower { beta, scale: 1.0 };
    // Interpolation error of |x|^β/2 behaves like 0.4·n^{−β}.
    let start = (0.45 / eps).powf(1.0 / beta).ceil() as usize;
    let mut n = smooth_even(start.max(16));
    loop {
        if n > MAX_TABLE_DEGREE {
            return Err(LabError::CertificationFailure {
                achieved: f64::NAN,
                requested: eps,
                degree: n,
            });
        }
        let mut coeffs = interpolate(|x| 0.5 * x.abs().powf(beta), n);
        for a in coeffs.iter_mut().skip(1).step_by(2) {
            *a = 0.0;
        }
        chop(&mut coeffs, eps / 20.0);
        let (err, bound) = grid_certificate(&coeffs, &target);
        let degree = effective_degree(&coeffs);
        if err <= eps && bound <= 1.0 {
            return Ok(ApproxPolynomial {
                repr: Representation::Chebyshev(coeffs),
                degree,
                parity: Parity::Even,
                target,
                certified_error: err,
                certified_bound: bound,
                degree_constant: degree as f64 / formula,
            });
        }
        if 2 * n > cap {
            return Err(LabError::CertificationFailure {
                achieved: err,
                requested: eps,
                degree,
            });
        }
        n = smooth_even(2 * n);
    }
}

pub fn eval_poly(p: &ApproxPolynomial, x: f64) -> f64 {
    p.eval(x)
}

/// `p(H)` for Hermitian `H` with spectrum in `[−1, 1]`.
pub fn eval_poly_matrix(p: &ApproxPolynomial, h: &CMatrix) -> Result<CMatrix> {
    let defect = linalg::hermiticity_defect(h);
    if defect > 1e-8 {
        return Err(LabError::InvalidArgument(format!(
            "matrix is not Hermitian (defect {defect:.3e})"
        )));
    }
    let spectrum = crate::densityops::Spectrum::of_hermitian(h);
    let radius = spectrum.eigenvalues.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if radius > 1.0 + 1e-9 {
        return Err(LabError::InvalidArgument(format!(
            "spectral radius {radius} exceeds 1"
        )));
    }
    Ok(spectrum.map(|x| p.eval(x.clamp(-1.0, 1.0))))
}

/// Largest `|p(x) − target(x)|` over `grid_points` Chebyshev nodes of `domain`
/// plus both endpoints. A grid maximum, not a rigorous bound.
pub fn certify_sup_error<T: Fn(f64) -> f64>(
    p: &ApproxPolynomial,
    target: T,
    domain: (f64, f64),
    grid_points: usize,
) -> f64 {
    let (lo, hi) = domain;
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut worst: f64 = 0.0;
    let mut check = |x: f64| worst = worst.max((p.eval(x) - target(x)).abs());
    check(lo);
    check(hi);
    for j in 0..grid_points {
        let theta = std::f64::consts::PI * (j as f64 + 0.5) / grid_points as f64;
        check(mid + half * theta.cos());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exact value of `Σ (n_j/16) T_j(i/16)` via integer monomial coefficients.
    fn exact_dyadic_eval(numerators: &[i64], i: i64) -> f64 {
        use num_bigint::BigInt;
        use num_traits::ToPrimitive;
        let n = numerators.len();
        // Monomial coefficients of T_j by T_{j+1} = 2x T_j − T_{j−1}.
        let mut rows: Vec<Vec<BigInt>> = vec![vec![BigInt::from(0); n]; n];
        rows[0][0] = BigInt::from(1);
        if n > 1 {
            rows[1][1] = BigInt::from(1);
        }
        for j in 2..n {
            for k in 0..n {
                let mut v = -rows[j - 2][k].clone();
                if k > 0 {
                    v += &rows[j - 1][k - 1] * 2;
                }
                rows[j][k] = v;
            }
        }
        let deg = n - 1;
        let mut num = BigInt::from(0);
        for k in 0..n {
            let ck: BigInt = (0..n).map(|j| &rows[j][k] * numerators[j]).sum();
            num += ck * BigInt::from(i).pow(k as u32) * BigInt::from(16).pow((deg - k) as u32);
        }
        let den = BigInt::from(16).pow(deg as u32 + 1);
        num.to_f64().unwrap() / den.to_f64().unwrap()
    }

    #[test]
    fn clenshaw_basics() {
        assert_eq!(clenshaw(&[0.5], 0.3), 0.5);
        assert!((clenshaw(&[0.0, 0.0, 0.0, 1.0], 1.0) - 1.0).abs() < 1e-15);
        let x: f64 = 0.37;
        let t3 = 4.0 * x.powi(3) - 3.0 * x;
        assert!((clenshaw(&[0.0, 0.0, 0.0, 1.0], x) - t3).abs() < 1e-15);
    }

    #[test]
    fn clenshaw_matches_monomial_expansion() {
        let numerators: Vec<i64> = (0..=50).map(|k| (k * 7919) % 13 - 6).collect();
        let coeffs: Vec<f64> = numerators.iter().map(|&n| n as f64 / 16.0).collect();
        for i in -16..=16 {
            let x = i as f64 / 16.0;
            let a = clenshaw(&coeffs, x);
            let b = exact_dyadic_eval(&numerators, i);
            assert!((a - b).abs() < 1e-10, "x = {x}: {a} vs {b}");
        }
    }

    #[test]
    fn dct_reproduces_low_degree_polynomial() {
        let coeffs = vec![0.3, -0.2, 0.1, 0.05, 0.0, -0.01];
        let back = interpolate(|x| clenshaw(&coeffs, x), 24);
        for (k, &a) in back.iter().enumerate() {
            let expect = coeffs.get(k).copied().unwrap_or(0.0);
            assert!((a - expect).abs() < 1e-14, "k = {k}");
        }
    }

    #[test]
    fn grid_values_match_clenshaw() {
        let coeffs: Vec<f64> = (0..300).map(|k| 1.0 / (1.0 + k as f64).powi(2)).collect();
        let mut count = 0;
        let mut worst: f64 = 0.0;
        for_each_grid_value(&coeffs, 1000, |x, p| {
            count += 1;
            worst = worst.max((p - clenshaw(&coeffs, x)).abs());
        });
        assert!(count >= 1001);
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(1), 1);
        assert_eq!(smooth_size(7), 8);
        assert_eq!(smooth_size(11), 12);
        assert_eq!(smooth_size(1001), 1024);
        for n in [13, 97, 1000, 123_457] {
            let s = smooth_size(n);
            assert!(s >= n && s < n + n / 4 + 2);
        }
    }

    #[test]
    fn neg_power_fixture() {
        let p = build_neg_power_poly(0.5, 0.1, 0.01).unwrap();
        assert_eq!(p.eval(0.0), 0.0);
        assert!((p.eval(0.1) - 0.5).abs() <= 0.01);
        let target = 0.1f64.sqrt() * 0.5f64.powf(-0.5) / 2.0;
        assert!((target - 0.223_606_797_7).abs() < 1e-10);
        assert!((p.eval(0.5) - target).abs() <= 0.01);
        let err = certify_sup_error(&p, |x| 0.5 * (0.1 / x).sqrt(), (0.1, 1.0), 10_000);
        assert!(err <= 0.01, "{err}");
        assert!(p.certified_bound() <= 1.0);
        let coeffs = p.chebyshev_coeffs().unwrap();
        assert!(coeffs.iter().step_by(2).all(|&a| a == 0.0));
        assert_eq!(p.parity(), Parity::Odd);
    }

    #[test]
    fn pos_power_fixture() {
        let p = build_pos_power_poly(0.5, 0.05).unwrap();
        assert!(p.certified_error() <= 0.05);
        assert!((p.eval(1.0) - 0.5).abs() <= 0.05);
        assert!(p.eval(0.0).abs() <= 0.05);
        assert!(p.degree() as f64 <= 20.0 * 400.0);
        assert!(p.degree_constant() > 0.0);
        assert_eq!(p.parity(), Parity::Even);
    }

    #[test]
    fn implicit_neg_power_for_tiny_delta() {
        let p = build_neg_power_poly(0.5, 2e-5, 2e-5).unwrap();
        assert!(!p.is_tabulated());
        assert!(p.degree() > EXPLICIT_DEGREE_LIMIT);
        assert!(p.certified_error() <= 2e-5);
        assert!(p.certified_bound() <= 1.0);
        for x in [2e-5, 1e-4, 0.01, 0.5, 1.0] {
            let t = 0.5 * (2e-5f64 / x).sqrt();
            assert!((p.eval(x) - t).abs() <= 2e-5);
            assert!((p.eval(-x) + p.eval(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn surrogate_error_is_attained_at_left_endpoint() {
        let s = NegPowerSurrogate::new(0.5, 0.01, 0.01);
        let at_delta = (s.eval(0.01) - 0.5).abs();
        assert!((at_delta - s.domain_error()).abs() < 1e-12);
        assert!((s.domain_error() - 0.005).abs() < 1e-9);
        for x in [0.02, 0.1, 1.0] {
            assert!((s.eval(x) - 0.5 * (0.01f64 / x).sqrt()).abs() <= at_delta);
        }
    }

    #[test]
    fn dump_round_trip() {
        let p = build_neg_power_poly(0.25, 0.2, 0.1).unwrap();
        let text = p.dump().unwrap();
        assert!(text.starts_with(&format!("cheb {} odd\n", p.degree())));
        let q = ApproxPolynomial::load(&text).unwrap();
        for x in [-0.9, -0.3, 0.0, 0.4, 1.0] {
            assert!((p.eval(x) - q.eval(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn matrix_evaluation() {
        let p = ApproxPolynomial::from_chebyshev(vec![0.0, 1.0]).unwrap();
        let h = linalg::from_real_rows(&[&[0.2, 0.1], &[0.1, -0.4]]);
        assert!((eval_poly_matrix(&p, &h).unwrap() - &h).norm() < 1e-14);

        let p1 = build_neg_power_poly(0.5, 0.1, 0.01).unwrap();
        let d = linalg::from_real_diagonal(&[0.5, 0.1]);
        let r = eval_poly_matrix(&p1, &d).unwrap();
        assert!((r[(0, 0)].re - p1.eval(0.5)).abs() < 1e-14);
        assert!((r[(1, 1)].re - p1.eval(0.1)).abs() < 1e-14);

        let big = linalg::from_real_diagonal(&[1.5, 0.0]);
        assert!(eval_poly_matrix(&p, &big).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_neg_power_poly(0.0, 0.1, 0.1).is_err());
        assert!(build_neg_power_poly(0.5, 0.6, 0.1).is_err());
        assert!(build_neg_power_poly(0.5, 0.1, 0.6).is_err());
        assert!(build_pos_power_poly(1.0, 0.1).is_err());
        assert!(build_pos_power_poly(0.5, 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn neg_power_is_odd_and_bounded(c in 0.2f64..0.8, delta in 0.05f64..0.3, eps in 0.01f64..0.2) {
            let p = build_neg_power_poly(c, delta, eps).unwrap();
            prop_assert!(p.certified_bound() <= 1.0 + 1e-9);
            prop_assert!(p.certified_error() <= eps);
            for i in 0..1000 {
                let x = -1.0 + 2.0 * i as f64 / 999.0;
                prop_assert!((p.eval(-x) + p.eval(x)).abs() <= 1e-10);
            }
        }

        #[test]
        fn matrix_evaluation_is_basis_covariant(seed in 0u64..1000) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let p = build_pos_power_poly(0.5, 0.1).unwrap();
            let h = linalg::random_hermitian(4, &mut rng);
            let h = &h * Complex64::new(1.0 / linalg::op_norm(&h), 0.0);
            let u = linalg::haar_unitary(4, &mut rng);
            let a = eval_poly_matrix(&p, &(&u * &h * u.adjoint())).unwrap();
            let b = &u * eval_poly_matrix(&p, &h).unwrap() * u.adjoint();
            prop_assert!((a - b).norm() < 1e-9);
        }
    }
}
