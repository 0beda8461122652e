//! Resultants of univariate polynomials, the polynomial Cartan bound, and
//! sampled checks of the genericity conditions (iii) and (iv) for
//! trigonometric potentials. The `example_*` functions implement the
//! polynomial reduction for `V = cos x + s·cos y` (in the `2π` convention).

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::dist_to_integer;
use crate::lyapunov::Sampler;
use crate::potential::TrigPotential;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenericityError {
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("polynomial of degree {0} has no roots to bound")]
    Constant(usize),
    #[error("companion matrix eigenvalues did not converge")]
    RootsFailed,
    #[error("|A| and |B| must be 1 (got |A| = {0}, |B| = {1})")]
    NotUnimodular(f64, f64),
    #[error("degenerate leading coefficient: {0}")]
    Degenerate(&'static str),
    #[error("α² + β² = {0}, expected 1")]
    NotUnitDirection(f64),
    #[error("indices must be distinct and below d = {d} (got i = {i}, j = {j})")]
    BadIndices { i: usize, j: usize, d: usize },
    #[error("conditions (iii)/(iv) need d ≥ 2, got d = {0}")]
    DimensionTooSmall(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shift too small: 2π‖h‖ = {norm:e} < exp(−𝔠₀K) = {required:e}")]
    ShiftTooSmall { norm: f64, required: f64 },
    #[error("K = {k} is below ℭ₀ = {c0}")]
    KTooSmall { k: f64, c0: f64 },
}

/// `a₀ + a₁z + … + a_n zⁿ` with `|a_n| > 1e-14`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly1 {
    coeffs: Vec<Complex64>,
}

/// Coefficients at or below this magnitude are trimmed from the top.
pub const TRIM_TOL: f64 = 1e-14;

impl Poly1 {
    /// From ascending coefficients; trailing near-zero coefficients are dropped.
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self, GenericityError> {
        let mut c = coeffs;
        while c.last().is_some_and(|a| a.norm() <= TRIM_TOL) {
            c.pop();
        }
        if c.is_empty() {
            return Err(GenericityError::ZeroPolynomial);
        }
        Ok(Self { coeffs: c })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self, GenericityError> {
        Self::new(coeffs.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (k, &a) in c.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * r;
            }
            c = next;
        }
        Self { coeffs: c }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> Complex64 {
        *self.coeffs.last().expect("nonempty")
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
    }

    /// `max |a_i|`.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Roots as eigenvalues of the companion matrix.
    pub fn roots(&self) -> Result<Vec<Complex64>, GenericityError> {
        let n = self.degree();
        if n == 0 {
            return Ok(vec![]);
        }
        let lead = self.leading();
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for k in 0..n {
            m[(0, k)] = -self.coeffs[n - 1 - k] / lead;
            if k + 1 < n {
                m[(k + 1, k)] = Complex64::new(1.0, 0.0);
            }
        }
        m.eigenvalues()
            .map(|v| v.iter().copied().collect())
            .ok_or(GenericityError::RootsFailed)
    }
}

/// The `(n+m)×(n+m)` Sylvester matrix of coefficient lists taken at their
/// formal degrees (leading entries may vanish).
pub fn sylvester_matrix(p: &[Complex64], q: &[Complex64]) -> DMatrix<Complex64> {
    let n = p.len() - 1;
    let m = q.len() - 1;
    let size = n + m;
    let mut s = DMatrix::<Complex64>::zeros(size, size);
    // column c < m holds p shifted down by c, highest coefficient first
    for c in 0..m {
        for (k, &a) in p.iter().rev().enumerate() {
            s[(c + k, c)] = a;
        }
    }
    for c in 0..n {
        for (k, &b) in q.iter().rev().enumerate() {
            s[(c + k, m + c)] = b;
        }
    }
    s
}

/// Resultant of two coefficient lists at their formal degrees.
pub fn formal_resultant(p: &[Complex64], q: &[Complex64]) -> Complex64 {
    assert!(!p.is_empty() && !q.is_empty(), "empty coefficient list");
    let s = sylvester_matrix(p, q);
    if s.nrows() == 0 {
        return Complex64::new(1.0, 0.0);
    }
    s.determinant()
}

/// `Res(P, Q)` as the Sylvester determinant.
pub fn sylvester_resultant(p: &Poly1, q: &Poly1) -> Complex64 {
    formal_resultant(&p.coeffs, &q.coeffs)
}

/// `1 + max_{k<n} |a_k/a_n|`: every root lies in the open disk of this radius.
pub fn cauchy_root_bound(p: &Poly1) -> Result<f64, GenericityError> {
    let n = p.degree();
    if n == 0 {
        return Err(GenericityError::Constant(0));
    }
    let lead = p.leading().norm();
    Ok(1.0 + p.coeffs[..n].iter().map(|a| a.norm() / lead).fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultantSmallness {
    /// `max(|P(z)|, |Q(z)|) < min(|a_n|, |b_m|)·δ^{max(m,n)}`.
    pub hypothesis_holds: bool,
    pub resultant_abs: f64,
    /// `2|a_n|^m |b_m|^n (2r)^{mn−1} δ` with `r` from the Cauchy bound.
    pub bound: f64,
    pub r: f64,
    /// `hypothesis ⇒ |Res| < bound`.
    pub consistent: bool,
}

pub fn resultant_smallness_bound(
    p: &Poly1,
    q: &Poly1,
    z: Complex64,
    delta: f64,
) -> Result<ResultantSmallness, GenericityError> {
    let (n, m) = (p.degree(), q.degree());
    if n == 0 || m == 0 {
        return Err(GenericityError::Constant(n.min(m)));
    }
    let (an, bm) = (p.leading().norm(), q.leading().norm());
    let lhs = p.eval(z).norm().max(q.eval(z).norm());
    let hypothesis_holds = lhs < an.min(bm) * delta.powi(n.max(m) as i32);
    let r = cauchy_root_bound(p)?.max(cauchy_root_bound(q)?);
    let bound = 2.0
        * an.powi(m as i32)
        * bm.powi(n as i32)
        * (2.0 * r).powi((m * n) as i32 - 1)
        * delta;
    let resultant_abs = sylvester_resultant(p, q).norm();
    Ok(ResultantSmallness {
        hypothesis_holds,
        resultant_abs,
        bound,
        r,
        consistent: !hypothesis_holds || resultant_abs < bound,
    })
}

/// Default `C₀` for the polynomial Cartan bound.
pub const CARTAN_C0: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartanMeasure {
    pub h: f64,
    /// `log M − C₀ n H`.
    pub threshold_log: f64,
    /// Fraction of the sample points in the sublevel set.
    pub fraction: f64,
    /// `2π · fraction`, the measure on `[0, 2π]`.
    pub measure: f64,
    /// `exp(−H/2)`.
    pub bound: f64,
    pub holds: bool,
}

/// Sampled measure of `{x ∈ [0,2π] : log|P(e^{ix})| < log M − C₀ n H}` on a
/// midpoint grid of `n_samples` points.
pub fn poly_cartan_measure(p: &Poly1, h: f64, n_samples: usize, c0: f64) -> CartanMeasure {
    let threshold_log = p.max_coeff().ln() - c0 * p.degree() as f64 * h;
    let hits = (0..n_samples)
        .into_par_iter()
        .filter(|&k| {
            let x = TAU * (k as f64 + 0.5) / n_samples as f64;
            p.eval(Complex64::from_polar(1.0, x)).norm().ln() < threshold_log
        })
        .count();
    let fraction = hits as f64 / n_samples as f64;
    let bound = (-h / 2.0).exp();
    CartanMeasure {
        h,
        threshold_log,
        fraction,
        measure: TAU * fraction,
        bound,
        holds: TAU * fraction < bound,
    }
}

fn check_pair(d: usize, i: usize, j: usize) -> Result<(), GenericityError> {
    if i == j || i >= d || j >= d {
        return Err(GenericityError::BadIndices { i, j, d });
    }
    Ok(())
}

/// `g_{V,h,i,j}(x) = ∂_iV(x)·∂_jV(x+h) − ∂_jV(x)·∂_iV(x+h)`.
pub fn g_determinant(
    v: &TrigPotential,
    h: &[f64],
    i: usize,
    j: usize,
    x: &[f64],
) -> Result<f64, GenericityError> {
    check_pair(v.dim(), i, j)?;
    Ok(g_unchecked(v, h, i, j, x))
}

fn g_unchecked(v: &TrigPotential, h: &[f64], i: usize, j: usize, x: &[f64]) -> f64 {
    let xh: Vec<f64> = x.iter().zip(h).map(|(a, b)| a + b).collect();
    let g0 = v.gradient(x);
    let g1 = v.gradient(&xh);
    g0[i] * g1[j] - g0[j] * g1[i]
}

fn unit(z: Complex64) -> bool {
    (z.norm() - 1.0).abs() <= 1e-12
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `P₁(·, w)` as `[a₀, a₁, a₂]` in `z`:
/// `P₁ = (A−1)z²w + s(B−1)zw² + (A⁻¹−1)w + s(B⁻¹−1)z`.
pub fn example_p1(a: Complex64, b: Complex64, s: f64, w: Complex64) -> [Complex64; 3] {
    [
        (a.inv() - 1.0) * w,
        s * (b - 1.0) * w * w + s * (b.inv() - 1.0),
        (a - 1.0) * w,
    ]
}

/// `Q₁(·, w)` in the literal form the closed-form coefficients refer to:
/// `Q₁ = (B−sA)z²w² + (sA−B⁻¹)z² + (sA⁻¹−B)w² + B⁻¹ − sA⁻¹`.
pub fn example_q1(a: Complex64, b: Complex64, s: f64, w: Complex64) -> [Complex64; 3] {
    [
        (s * a.inv() - b) * w * w + b.inv() - s * a.inv(),
        c(0.0),
        (b - s * a) * w * w + s * a - b.inv(),
    ]
}

/// The polynomial with `g = −Q/(4zw)` for `V = cos x + s·cos y`:
/// `s[(B−A)z²w² + (A−B⁻¹)z² + (A⁻¹−B)w² + B⁻¹ − A⁻¹]`.
pub fn example_q1_trig(a: Complex64, b: Complex64, s: f64, w: Complex64) -> [Complex64; 3] {
    [
        s * ((a.inv() - b) * w * w + b.inv() - a.inv()),
        c(0.0),
        s * ((b - a) * w * w + a - b.inv()),
    ]
}

fn check_unimodular(a: Complex64, b: Complex64) -> Result<(), GenericityError> {
    if !unit(a) || !unit(b) {
        return Err(GenericityError::NotUnimodular(a.norm(), b.norm()));
    }
    if a == c(1.0) {
        return Err(GenericityError::Degenerate("A = 1 makes the z² coefficient of P₁ vanish"));
    }
    Ok(())
}

/// `R₁(w) = Res_z(P₁, Q₁)` with the literal `Q₁`.
pub fn example_r1(
    w: Complex64,
    a: Complex64,
    b: Complex64,
    s: f64,
) -> Result<Complex64, GenericityError> {
    check_unimodular(a, b)?;
    Ok(formal_resultant(&example_p1(a, b, s, w), &example_q1(a, b, s, w)))
}

/// Coefficients `c₀..c_{n−1}` of a polynomial of degree `< n` from its
/// values at the `n`-th roots of unity (inverse DFT).
pub fn coefficients_from_samples<F>(n: usize, f: F) -> Vec<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    let mut buf: Vec<Complex64> = (0..n)
        .map(|k| f(Complex64::from_polar(1.0, TAU * k as f64 / n as f64)))
        .collect();
    // c_j = (1/n) Σ_k f(ω^k) ω^{−jk}, which is rustfft's forward transform
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.iter().map(|v| v / n as f64).collect()
}

/// Number of roots of unity used for coefficient extraction; larger than
/// every degree involved, so the top entries double as an aliasing check.
pub const DFT_POINTS: usize = 16;

/// `c₀..c₈` of `R₁`.
pub fn example_r1_coefficients(
    a: Complex64,
    b: Complex64,
    s: f64,
) -> Result<Vec<Complex64>, GenericityError> {
    check_unimodular(a, b)?;
    let mut cs = coefficients_from_samples(DFT_POINTS, |w| {
        formal_resultant(&example_p1(a, b, s, w), &example_q1(a, b, s, w))
    });
    cs.truncate(9);
    Ok(cs)
}

/// `s²(B−1)²(BA⁻¹−s)(s−AB)`.
pub fn example_c8(a: Complex64, b: Complex64, s: f64) -> Complex64 {
    (b - 1.0).powi(2) * s * s * (b / a - s) * (s - a * b)
}

/// `P₂ = z²w + szw² − 2ηzw + w + sz` as `[a₀, a₁, a₂]` in `z`.
pub fn example_p2(eta: f64, s: f64, w: Complex64) -> [Complex64; 3] {
    [w, s * w * w - 2.0 * eta * w + s, w]
}

/// `Q₂ = αz²w + βzw² − αw − βz` in literal form.
pub fn example_q2(alpha: f64, beta: f64, w: Complex64) -> [Complex64; 3] {
    [-alpha * w, beta * w * w - beta, alpha * w]
}

/// The polynomial with `⟨∇V, h₀⟩ = −Q/(2izw)`: `β` carries the factor `s`.
pub fn example_q2_trig(alpha: f64, beta: f64, s: f64, w: Complex64) -> [Complex64; 3] {
    example_q2(alpha, s * beta, w)
}

fn check_direction(alpha: f64, beta: f64) -> Result<(), GenericityError> {
    let n = alpha * alpha + beta * beta;
    if (n - 1.0).abs() > 1e-12 {
        return Err(GenericityError::NotUnitDirection(n));
    }
    Ok(())
}

/// `R₂(w) = Res_z(P₂, Q₂)` with the literal `Q₂`.
pub fn example_r2(
    w: Complex64,
    alpha: f64,
    beta: f64,
    eta: f64,
    s: f64,
) -> Result<Complex64, GenericityError> {
    check_direction(alpha, beta)?;
    Ok(formal_resultant(&example_p2(eta, s, w), &example_q2(alpha, beta, w)))
}

/// `c₀..c₆` of `R₂` by coefficient extraction.
pub fn example_r2_coefficients(
    alpha: f64,
    beta: f64,
    eta: f64,
    s: f64,
) -> Result<Vec<Complex64>, GenericityError> {
    check_direction(alpha, beta)?;
    let mut cs = coefficients_from_samples(DFT_POINTS, |w| {
        formal_resultant(&example_p2(eta, s, w), &example_q2(alpha, beta, w))
    });
    cs.truncate(7);
    Ok(cs)
}

/// Closed forms `[c₀, …, c₆]`: `c₆ = c₂ = 1 − α²(1+s²)`, `c₅ = c₃ = 4α²ηs`,
/// `c₄ = α²(6 − 4η² − 2s²) − 2`, `c₁ = c₀ = 0`.
pub fn example_r2_closed_form(alpha: f64, eta: f64, s: f64) -> [f64; 7] {
    let a2 = alpha * alpha;
    let c6 = 1.0 - a2 * (1.0 + s * s);
    let c5 = 4.0 * a2 * eta * s;
    let c4 = a2 * (6.0 - 4.0 * eta * eta - 2.0 * s * s) - 2.0;
    [0.0, 0.0, c6, c5, c4, c5, c6]
}

/// Desk-scale constants of conditions (iii)/(iv).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenericityConstants {
    /// `𝔠₀`: shifts must satisfy `2π‖h‖ ≥ exp(−𝔠₀K)`.
    pub c0: f64,
    /// `𝔠₁`: pass iff the bad measure is at most `exp(−K^{𝔠₁})`.
    pub c1: f64,
    /// `ℭ₀`: smallest admissible `K`.
    pub big_c0: f64,
}

impl Default for GenericityConstants {
    fn default() -> Self {
        Self {
            c0: 0.05,
            c1: 0.5,
            big_c0: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Iii,
    Iv,
}

/// Sampling resolution for conditions (iii)/(iv).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceSampling {
    /// Slices `x_î`; a full grid on `𝕋^{d−1}` with at least this many points.
    pub outer: usize,
    /// Grid points in `x_i` before golden-section refinement.
    pub inner: usize,
}

impl Default for SliceSampling {
    fn default() -> Self {
        Self {
            outer: 1024,
            inner: 1024,
        }
    }
}

pub const SURROGATE_NOTE: &str =
    "sampled surrogate at desk-scale K; constants are configuration, not asymptotic ones";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericityReport {
    pub condition: Condition,
    pub k: f64,
    /// The minimised coordinate.
    pub i: usize,
    /// Second index of `g_{V,h,i,j}` for condition (iii).
    pub j: Option<usize>,
    /// `h` for (iii), `h₀` for (iv).
    pub direction: Vec<f64>,
    pub eta: Option<f64>,
    pub bad_fraction: f64,
    /// `exp(−K^{𝔠₁})`.
    pub bound: f64,
    pub pass: bool,
    /// Smallest minimum over all slices.
    pub min_value: f64,
    pub slices: usize,
    pub inner_grid: usize,
    pub note: String,
}

/// Approximate `min_{t ∈ 𝕋} f(t)`: grid search, then golden-section
/// refinement around the four lowest grid minima. The result is an upper
/// bound on the true minimum.
pub fn circle_min<F: Fn(f64) -> f64>(f: F, grid: usize) -> f64 {
    let vals: Vec<f64> = (0..grid).map(|k| f(k as f64 / grid as f64)).collect();
    let mut minima: Vec<usize> = (0..grid)
        .filter(|&k| {
            let l = vals[(k + grid - 1) % grid];
            let r = vals[(k + 1) % grid];
            vals[k] <= l && vals[k] <= r
        })
        .collect();
    minima.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let step = 1.0 / grid as f64;
    let mut best = vals.iter().copied().fold(f64::INFINITY, f64::min);
    for &k in minima.iter().take(4) {
        let t = k as f64 * step;
        best = best.min(golden_section(&f, t - step, t + step, 1e-13));
    }
    best
}

fn golden_section<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = f1.min(f2);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
        best = best.min(f1).min(f2);
    }
    best
}

/// Euclidean torus norm of a shift given in torus units.
pub fn torus_norm(h: &[f64]) -> f64 {
    h.iter().map(|&t| dist_to_integer(t).powi(2)).sum::<f64>().sqrt()
}

fn slice_minima<F>(d: usize, i: usize, sampling: SliceSampling, f: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let slices = Sampler::Grid.points(d - 1, sampling.outer);
    slices
        .par_iter()
        .map(|p| {
            let rest = p.coords();
            let mut x = vec![0.0; d];
            let mut k = 0;
            for (m, xm) in x.iter_mut().enumerate() {
                if m != i {
                    *xm = rest[k];
                    k += 1;
                }
            }
            circle_min(
                |t| {
                    let mut xt = x.clone();
                    xt[i] = t;
                    f(&xt)
                },
                sampling.inner,
            )
        })
        .collect()
}

fn finish(
    condition: Condition,
    k: f64,
    i: usize,
    j: Option<usize>,
    direction: Vec<f64>,
    eta: Option<f64>,
    minima: Vec<f64>,
    sampling: SliceSampling,
    consts: &GenericityConstants,
) -> GenericityReport {
    let thr = (-k).exp();
    let bad = minima.iter().filter(|&&m| m < thr).count();
    let bad_fraction = bad as f64 / minima.len() as f64;
    let bound = (-k.powf(consts.c1)).exp();
    GenericityReport {
        condition,
        k,
        i,
        j,
        direction,
        eta,
        bad_fraction,
        bound,
        pass: bad_fraction <= bound,
        min_value: minima.iter().copied().fold(f64::INFINITY, f64::min),
        slices: minima.len(),
        inner_grid: sampling.inner,
        note: SURROGATE_NOTE.to_string(),
    }
}

/// Condition (iii): sampled measure of slices `x_î` on which
/// `min_{x_i} |V(x+h) − V(x)| + |g_{V,h,i,j}(x)| < e^{−K}`.
///
/// `h` is in torus units; the size requirement is `2π‖h‖ ≥ exp(−𝔠₀K)`,
/// with lengths measured in radians.
pub fn check_condition_iii(
    v: &TrigPotential,
    k: f64,
    h: &[f64],
    i: usize,
    j: usize,
    sampling: SliceSampling,
    consts: &GenericityConstants,
) -> Result<GenericityReport, GenericityError> {
    let d = v.dim();
    if d < 2 {
        return Err(GenericityError::DimensionTooSmall(d));
    }
    if h.len() != d {
        return Err(GenericityError::DimensionMismatch {
            expected: d,
            got: h.len(),
        });
    }
    check_pair(d, i, j)?;
    if k < consts.big_c0 {
        return Err(GenericityError::KTooSmall { k, c0: consts.big_c0 });
    }
    let norm = TAU * torus_norm(h);
    let required = (-consts.c0 * k).exp();
    if norm < required {
        return Err(GenericityError::ShiftTooSmall { norm, required });
    }
    let minima = slice_minima(d, i, sampling, |x| {
        let xh: Vec<f64> = x.iter().zip(h).map(|(a, b)| a + b).collect();
        (v.value(&xh) - v.value(x)).abs() + g_unchecked(v, h, i, j, x).abs()
    });
    Ok(finish(Condition::Iii, k, i, Some(j), h.to_vec(), None, minima, sampling, consts))
}

/// Condition (iv): sampled measure of slices on which
/// `min_{x_i} |V(x) − η| + |⟨∇V(x), h₀⟩| < e^{−K}`. `h₀` is normalised.
pub fn check_condition_iv(
    v: &TrigPotential,
    k: f64,
    eta: f64,
    h0: &[f64],
    i: usize,
    sampling: SliceSampling,
    consts: &GenericityConstants,
) -> Result<GenericityReport, GenericityError> {
    let d = v.dim();
    if d < 2 {
        return Err(GenericityError::DimensionTooSmall(d));
    }
    if h0.len() != d {
        return Err(GenericityError::DimensionMismatch {
            expected: d,
            got: h0.len(),
        });
    }
    if i >= d {
        return Err(GenericityError::BadIndices { i, j: i, d });
    }
    if k < consts.big_c0 {
        return Err(GenericityError::KTooSmall { k, c0: consts.big_c0 });
    }
    let len = h0.iter().map(|t| t * t).sum::<f64>().sqrt();
    let dir: Vec<f64> = h0.iter().map(|t| t / len).collect();
    let minima = slice_minima(d, i, sampling, |x| {
        let g = v.gradient(x);
        (v.value(x) - eta).abs() + g.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>().abs()
    });
    Ok(finish(Condition::Iv, k, i, None, dir, Some(eta), minima, sampling, consts))
}

/// Angle in radians of a shift coordinate given in torus units.
pub fn to_radians(t: f64) -> f64 {
    TAU * t
}

/// `(A, B) = (e^{iα}, e^{iβ})` for a shift in torus units.
pub fn shift_phases(h: &[f64]) -> (Complex64, Complex64) {
    (
        Complex64::from_polar(1.0, TAU * h[0]),
        Complex64::from_polar(1.0, TAU * h[1]),
    )
}

/// The shift `(1/2, 1/2)` (`(π, π)` in radians) maps `cos x + s·cos y` to its
/// negative, so both terms of condition (iii) vanish on the zero set of `V`.
pub const ANTIPODAL_SHIFT: [f64; 2] = [0.5, 0.5];
