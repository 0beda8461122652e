//! Level-set charts near a non-degenerate extremum.
//!
//! A chart at `x₀` writes points as `φ(ξ, y; x₀) = x₀ + ξ𝔫 + Σ y_j 𝔢_j`, with
//! `𝔫 = ∇f(x₀)/μ` and `𝔢_j` an orthonormal frame of `𝔫^⊥`, and solves
//! `f(φ(ξ, y; x₀)) = E` for `ξ = g(y, E)` by Newton's method. The unspecified
//! constants are fixed at `c(n) = 0.01` and `C(n) = 10`.
//!
//! The measure routines use the convention that the extremum sits at the
//! origin of `f`'s coordinates; wrap a surface in [`Recentered`] to arrange
//! that.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::TorusPoint;
use crate::lyapunov::Sampler;
use crate::operator::{OperatorError, QuasiperiodicModel};
use crate::potential::TrigPotential;

pub const SMALL_C: f64 = 0.01;
pub const LARGE_C: f64 = 10.0;
/// Gradients below this are treated as vanishing.
pub const MIN_GRADIENT: f64 = 1e-8;
const NEWTON_MAX_ITER: usize = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LevelSetError {
    #[error("gradient vanishes at the chart center: ‖∇f‖ = {0:e}")]
    VanishingGradient(f64),
    #[error("safety factor must lie in (0, 1], got {0}")]
    BadSafety(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("(y, E) outside the chart: |y| = {y_norm:e} (r = {r:e}), |E − E₀| = {de:e} (r' = {r_prime:e})")]
    OutsideChart {
        y_norm: f64,
        r: f64,
        de: f64,
        r_prime: f64,
    },
    #[error("Newton diverged after {} steps; trajectory {trajectory:?}", trajectory.len())]
    NewtonDivergence { trajectory: Vec<f64> },
    #[error("h must be a nonzero vector")]
    ZeroShift,
    #[error("h₀ must be a unit vector, ‖h₀‖ = {0}")]
    NotUnit(f64),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// A `C³` function on (a piece of) `ℝ^d`.
pub trait SmoothSurface: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Row-major `d × d`.
    fn hessian(&self, x: &[f64]) -> Vec<Vec<f64>>;

    /// `(M(2), M(3))` on the ball of the given radius about `center`.
    ///
    /// The default samples the Hessian at the center and at `±radius·e_k`,
    /// takes the largest entry for `M(2)` and the largest difference quotient
    /// for `M(3)`, and inflates both by 1.5. Analytic surfaces override it.
    fn derivative_bounds(&self, center: &[f64], radius: f64) -> (f64, f64) {
        let d = self.dim();
        let h0 = self.hessian(center);
        let mut m2 = max_entry(&h0);
        let mut m3: f64 = 0.0;
        for k in 0..d {
            for sign in [-1.0, 1.0] {
                let mut x = center.to_vec();
                x[k] += sign * radius;
                let h = self.hessian(&x);
                m2 = m2.max(max_entry(&h));
                let diff = h
                    .iter()
                    .flatten()
                    .zip(h0.iter().flatten())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                m3 = m3.max(diff / radius);
            }
        }
        (1.5 * m2, 1.5 * m3)
    }
}

fn max_entry(h: &[Vec<f64>]) -> f64 {
    h.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl SmoothSurface for TrigPotential {
    fn dim(&self) -> usize {
        TrigPotential::dim(self)
    }
    fn value(&self, x: &[f64]) -> f64 {
        TrigPotential::value(self, x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        TrigPotential::gradient(self, x)
    }
    fn hessian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        TrigPotential::hessian(self, x)
    }
    fn derivative_bounds(&self, _center: &[f64], _radius: f64) -> (f64, f64) {
        (self.second_derivative_bound(), self.third_derivative_bound())
    }
}

/// `f(x) = Σ a_j x_j + Σ w_j x_j²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalQuadratic {
    pub linear: Vec<f64>,
    pub weights: Vec<f64>,
}

impl DiagonalQuadratic {
    /// `‖x‖²` in dimension `d`.
    pub fn norm_squared(d: usize) -> Self {
        Self {
            linear: vec![0.0; d],
            weights: vec![1.0; d],
        }
    }

    pub fn linear(a: &[f64]) -> Self {
        Self {
            linear: a.to_vec(),
            weights: vec![0.0; a.len()],
        }
    }
}

impl SmoothSurface for DiagonalQuadratic {
    fn dim(&self) -> usize {
        self.weights.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.linear.iter().zip(&self.weights))
            .map(|(xi, (a, w))| a * xi + w * xi * xi)
            .sum()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.linear.iter().zip(&self.weights))
            .map(|(xi, (a, w))| a + 2.0 * w * xi)
            .collect()
    }
    fn hessian(&self, _x: &[f64]) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| if i == j { 2.0 * self.weights[i] } else { 0.0 }).collect())
            .collect()
    }
    fn derivative_bounds(&self, _center: &[f64], _radius: f64) -> (f64, f64) {
        (2.0 * self.weights.iter().map(|w| w.abs()).fold(0.0, f64::max), 0.0)
    }
}

/// `x ↦ f(center + x) − base`.
#[derive(Debug, Clone)]
pub struct Recentered<S> {
    pub inner: S,
    pub center: Vec<f64>,
    pub base: f64,
}

impl<S: SmoothSurface> Recentered<S> {
    /// Moves `center` to the origin and `f(center)` to zero.
    pub fn at(inner: S, center: &[f64]) -> Self {
        let base = inner.value(center);
        Self {
            inner,
            center: center.to_vec(),
            base,
        }
    }

    fn abs(&self, x: &[f64]) -> Vec<f64> {
        self.center.iter().zip(x).map(|(c, v)| c + v).collect()
    }
}

impl<S: SmoothSurface> SmoothSurface for Recentered<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(&self.abs(x)) - self.base
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.inner.gradient(&self.abs(x))
    }
    fn hessian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.inner.hessian(&self.abs(x))
    }
    fn derivative_bounds(&self, center: &[f64], radius: f64) -> (f64, f64) {
        self.inner.derivative_bounds(&self.abs(center), radius)
    }
}

/// `x ↦ λ⁻¹E₀(x)`, the scaled lowest eigenvalue of `H_[a,b](x)`.
///
/// Gradients come from Feynman–Hellmann, `∂E₀ = ⟨ψ₀, ∂H ψ₀⟩`, and the Hessian
/// from second-order perturbation theory over the full window spectrum.
#[derive(Debug, Clone)]
pub struct GroundStateSurface {
    pub model: QuasiperiodicModel,
    pub a: i64,
    pub b: i64,
}

impl GroundStateSurface {
    pub fn new(model: QuasiperiodicModel, a: i64, b: i64) -> Result<Self, LevelSetError> {
        if b < a {
            return Err(OperatorError::EmptyInterval { a, b }.into());
        }
        if model.lambda == 0.0 {
            return Err(OperatorError::BadCoupling(0.0).into());
        }
        Ok(Self { model, a, b })
    }

    fn sites(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let p = TorusPoint::new(x);
        (self.a..=self.b)
            .map(|n| p.translate(&self.model.omega, n).coords().to_vec())
            .collect()
    }

    fn window_matrix(&self, sites: &[Vec<f64>]) -> crate::operator::SymTridiagonal {
        let diag = sites
            .iter()
            .map(|s| self.model.lambda * self.model.potential.value(s))
            .collect::<Vec<_>>();
        let n = diag.len();
        crate::operator::SymTridiagonal::new(diag, vec![-1.0; n - 1])
    }

    fn ground(&self, sites: &[Vec<f64>]) -> (f64, Vec<f64>) {
        let t = self.window_matrix(sites);
        let e = t.eigenvalues()[0];
        let psi = t.eigenvectors(&[e]).pop().expect("one vector");
        (e, psi)
    }
}

impl SmoothSurface for GroundStateSurface {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let t = self.window_matrix(&self.sites(x));
        t.eigenvalues()[0] / self.model.lambda
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let sites = self.sites(x);
        let (_, psi) = self.ground(&sites);
        let mut g = vec![0.0; self.dim()];
        for (s, p) in sites.iter().zip(&psi) {
            let dv = self.model.potential.gradient(s);
            for (gi, d) in g.iter_mut().zip(dv) {
                *gi += p * p * d;
            }
        }
        g
    }

    fn hessian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let d = self.dim();
        let sites = self.sites(x);
        let eig = self.window_matrix(&sites).eigen();
        let lam = self.model.lambda;
        let grads: Vec<Vec<f64>> = sites.iter().map(|s| self.model.potential.gradient(s)).collect();
        let psi0 = &eig.vectors[0];
        let mut h = vec![vec![0.0; d]; d];
        for (s, p) in sites.iter().zip(psi0) {
            let hv = self.model.potential.hessian(s);
            for i in 0..d {
                for j in 0..d {
                    h[i][j] += p * p * hv[i][j];
                }
            }
        }
        // ⟨ψ_k, ∂_i H ψ₀⟩ = λ Σ_n ψ_k(n) ∂_iV ψ₀(n)
        for k in 1..eig.values.len() {
            let psik = &eig.vectors[k];
            let m: Vec<f64> = (0..d)
                .map(|i| lam * (0..sites.len()).map(|n| psik[n] * grads[n][i] * psi0[n]).sum::<f64>())
                .collect();
            let denom = eig.values[0] - eig.values[k];
            for i in 0..d {
                for j in 0..d {
                    h[i][j] += 2.0 * m[i] * m[j] / denom / lam;
                }
            }
        }
        h
    }
}

/// Locates a non-degenerate local minimum by damped Newton from `start`.
pub fn local_minimum<S: SmoothSurface>(f: &S, start: &[f64], tol: f64) -> Option<Vec<f64>> {
    let d = f.dim();
    let mut x = start.to_vec();
    for _ in 0..100 {
        let g = f.gradient(&x);
        if norm(&g) <= tol {
            return Some(x);
        }
        let h = f.hessian(&x);
        let hm = DMatrix::from_fn(d, d, |i, j| h[i][j]);
        let step = hm.lu().solve(&nalgebra::DVector::from_vec(g.clone()))?;
        let mut t = 1.0;
        let f0 = f.value(&x);
        loop {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            if f.value(&trial) <= f0 + 1e-15 * f0.abs().max(1.0) || t < 1e-6 {
                x = trial;
                break;
            }
            t *= 0.5;
        }
    }
    (norm(&f.gradient(&x)) <= tol).then_some(x)
}

/// Smallest Hessian eigenvalue at `x`.
pub fn hessian_floor<S: SmoothSurface>(f: &S, x: &[f64]) -> f64 {
    let h = f.hessian(x);
    let d = h.len();
    let m = DMatrix::from_fn(d, d, |i, j| 0.5 * (h[i][j] + h[j][i]));
    SymmetricEigen::new(m).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetChart {
    pub x0: Vec<f64>,
    pub e0: f64,
    pub normal: Vec<f64>,
    /// Orthonormal basis of `𝔫^⊥`, `d − 1` vectors.
    pub frame: Vec<Vec<f64>>,
    pub mu: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub r: f64,
    pub r_prime: f64,
    pub m2: f64,
    pub m3: f64,
    pub safety: f64,
}

impl LevelSetChart {
    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    /// `φ(ξ, y; x₀)`.
    pub fn point(&self, xi: f64, y: &[f64]) -> Vec<f64> {
        let mut p: Vec<f64> = self.x0.iter().zip(&self.normal).map(|(a, n)| a + xi * n).collect();
        for (yj, e) in y.iter().zip(&self.frame) {
            for (pi, ei) in p.iter_mut().zip(e) {
                *pi += yj * ei;
            }
        }
        p
    }

    /// `max |⟨v_i, v_j⟩ − δ_ij|` over `{𝔫, 𝔢_1, …}`.
    pub fn frame_defect(&self) -> f64 {
        let mut all = vec![self.normal.clone()];
        all.extend(self.frame.iter().cloned());
        let mut worst: f64 = 0.0;
        for i in 0..all.len() {
            for j in i..all.len() {
                let t = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(&all[i], &all[j]) - t).abs());
            }
        }
        worst
    }

    /// `2μ⁻¹(|E − E₀| + C·M(2)|y|²)`.
    pub fn g_bound(&self, y: &[f64], energy: f64) -> f64 {
        let y2 = dot(y, y);
        2.0 / self.mu * ((energy - self.e0).abs() + LARGE_C * self.m2 * y2)
    }

    /// `ν₁ = c·ν₀(1 + M(2) + M(3))⁻¹`.
    pub fn nu1(&self, nu0: f64) -> f64 {
        SMALL_C * nu0 / (1.0 + self.m2 + self.m3)
    }
}

/// Chart at `x0` with `ρ₀ = 1`.
pub fn build_chart<S: SmoothSurface>(
    f: &S,
    x0: &[f64],
    safety: f64,
) -> Result<LevelSetChart, LevelSetError> {
    build_chart_with_domain(f, x0, 1.0, safety)
}

/// Chart at `x0` for `f` defined on the ball of radius `rho0`:
/// `ρ₁ = c·min(ρ₀, μ/M(2))`, `r = c·ρ₁`, `r' = c·ρ₁·min(1, μ)`, all times
/// `safety ∈ (0, 1]`.
pub fn build_chart_with_domain<S: SmoothSurface>(
    f: &S,
    x0: &[f64],
    rho0: f64,
    safety: f64,
) -> Result<LevelSetChart, LevelSetError> {
    let d = f.dim();
    if x0.len() != d {
        return Err(LevelSetError::DimensionMismatch {
            expected: d,
            got: x0.len(),
        });
    }
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(LevelSetError::BadSafety(safety));
    }
    let grad = f.gradient(x0);
    let mu = norm(&grad);
    if !(mu > MIN_GRADIENT) {
        return Err(LevelSetError::VanishingGradient(mu));
    }
    let normal: Vec<f64> = grad.iter().map(|g| g / mu).collect();
    let frame = complement_frame(&normal);
    let (m2, m3) = f.derivative_bounds(x0, rho0);
    let ratio = if m2 > 0.0 { mu / m2 } else { f64::INFINITY };
    let rho1 = SMALL_C * rho0.min(ratio) * safety;
    Ok(LevelSetChart {
        x0: x0.to_vec(),
        e0: f.value(x0),
        normal,
        frame,
        mu,
        rho0,
        rho1,
        r: SMALL_C * rho1,
        r_prime: SMALL_C * rho1 * mu.min(1.0),
        m2,
        m3,
        safety,
    })
}

/// Gram–Schmidt of the coordinate vectors against `n`, keeping the `d − 1`
/// with the largest residuals.
fn complement_frame(n: &[f64]) -> Vec<Vec<f64>> {
    let d = n.len();
    let mut basis: Vec<Vec<f64>> = vec![n.to_vec()];
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| n[i].abs().total_cmp(&n[j].abs()));
    for k in order {
        if basis.len() == d {
            break;
        }
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        // two passes for orthogonality at rounding level
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        let len = norm(&v);
        if len > 1e-8 {
            basis.push(v.into_iter().map(|x| x / len).collect());
        }
    }
    basis.remove(0);
    basis
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GSolution {
    pub xi: f64,
    /// `|f(φ(ξ, y)) − E|`.
    pub residual: f64,
    pub iterations: usize,
    pub bound: f64,
    pub bound_ok: bool,
    /// `f(φ(±ρ₁, y)) − E` changes sign, so the root in `|ξ| < ρ₁` is unique
    /// (`∂_ξ f > 0` there).
    pub bracketed: bool,
    pub trajectory: Vec<f64>,
}

/// Newton for `f(φ(ξ, y; x₀)) = E` from `ξ = 0`.
pub fn solve_g<S: SmoothSurface>(
    f: &S,
    chart: &LevelSetChart,
    y: &[f64],
    energy: f64,
    tol: f64,
) -> Result<GSolution, LevelSetError> {
    if y.len() + 1 != chart.dim() {
        return Err(LevelSetError::DimensionMismatch {
            expected: chart.dim() - 1,
            got: y.len(),
        });
    }
    let y_norm = norm(y);
    let de = (energy - chart.e0).abs();
    if y_norm >= chart.r || de >= chart.r_prime {
        return Err(LevelSetError::OutsideChart {
            y_norm,
            r: chart.r,
            de,
            r_prime: chart.r_prime,
        });
    }
    solve_g_unchecked(f, chart, y, energy, tol)
}

/// [`solve_g`] without the chart-radius precondition.
pub fn solve_g_unchecked<S: SmoothSurface>(
    f: &S,
    chart: &LevelSetChart,
    y: &[f64],
    energy: f64,
    tol: f64,
) -> Result<GSolution, LevelSetError> {
    let resid = |xi: f64| f.value(&chart.point(xi, y)) - energy;
    let mut xi = 0.0;
    let mut trajectory = vec![xi];
    let mut r = resid(xi);
    let mut iterations = 0;
    while r.abs() > tol {
        if iterations == NEWTON_MAX_ITER || !xi.is_finite() || xi.abs() > 10.0 * chart.rho0 {
            return Err(LevelSetError::NewtonDivergence { trajectory });
        }
        let slope = dot(&f.gradient(&chart.point(xi, y)), &chart.normal);
        if slope == 0.0 {
            return Err(LevelSetError::NewtonDivergence { trajectory });
        }
        xi -= r / slope;
        trajectory.push(xi);
        r = resid(xi);
        iterations += 1;
    }
    let bound = chart.g_bound(y, energy);
    let bracketed = resid(-chart.rho1) < 0.0 && resid(chart.rho1) > 0.0 && xi.abs() < chart.rho1;
    Ok(GSolution {
        xi,
        residual: r.abs(),
        iterations,
        bound,
        bound_ok: xi.abs() <= bound,
        bracketed,
        trajectory,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartGridReport {
    pub points: usize,
    pub max_residual: f64,
    pub bound_failures: usize,
    pub unbracketed: usize,
    pub newton_failures: usize,
    /// `max |ξ| / bound`.
    pub worst_bound_ratio: f64,
}

impl ChartGridReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual <= tol
            && self.bound_failures == 0
            && self.unbracketed == 0
            && self.newton_failures == 0
    }
}

/// Solves `g` on a `side^d` grid over `(y, E)` in `[−r, r]^{d−1} × [E₀ − r', E₀ + r']`
/// shrunk by `1 − 1/side` to stay inside the open chart.
pub fn chart_grid_check<S: SmoothSurface>(
    f: &S,
    chart: &LevelSetChart,
    side: usize,
    tol: f64,
) -> ChartGridReport {
    let d = chart.dim();
    let side = side.max(2);
    let total = side.pow(d as u32);
    let shrink = 1.0 - 1.0 / side as f64;
    let coord = |k: usize| shrink * (2.0 * k as f64 / (side - 1) as f64 - 1.0);
    let results: Vec<Result<GSolution, LevelSetError>> = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut c = Vec::with_capacity(d);
            for _ in 0..d {
                c.push(coord(idx % side));
                idx /= side;
            }
            let energy = chart.e0 + chart.r_prime * c[0];
            let y: Vec<f64> = c[1..].iter().map(|t| chart.r * t / ((d - 1) as f64).sqrt()).collect();
            solve_g(f, chart, &y, energy, tol)
        })
        .collect();
    let mut rep = ChartGridReport {
        points: total,
        max_residual: 0.0,
        bound_failures: 0,
        unbracketed: 0,
        newton_failures: 0,
        worst_bound_ratio: 0.0,
    };
    for r in results {
        match r {
            Ok(s) => {
                rep.max_residual = rep.max_residual.max(s.residual);
                rep.bound_failures += usize::from(!s.bound_ok);
                rep.unbracketed += usize::from(!s.bracketed);
                if s.bound > 0.0 {
                    rep.worst_bound_ratio = rep.worst_bound_ratio.max(s.xi.abs() / s.bound);
                }
            }
            Err(_) => rep.newton_failures += 1,
        }
    }
    rep
}

/// Sampled sublevel fractions on a chart, one per `H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureProfile {
    pub energy: f64,
    pub hs: Vec<f64>,
    /// The scale `|H₀|` (or `|H₁|`); thresholds are `−scale·H`.
    pub scale: f64,
    pub thresholds: Vec<f64>,
    pub fractions: Vec<f64>,
    /// `fraction · (2r)^{d−1}`.
    pub measures: Vec<f64>,
    /// `(ν₁⁻² r)^{d−1} exp(−H^{1/(d−1)})`; empty for the gradient profile.
    pub bounds: Vec<f64>,
    pub nu0: f64,
    pub nu1: f64,
    /// Values below this are counted as zero (log = −∞).
    pub noise_floor: f64,
    /// Sorted `log|·|` per accepted sample.
    pub log_values: Vec<f64>,
    pub newton_failures: usize,
    /// Whether `‖h‖ < ρ = r₀ν₁¹⁰` (shift profile only; reported, not enforced).
    pub h_within_rho: Option<bool>,
}

impl MeasureProfile {
    /// Fraction of accepted samples with `log|·| ≤ t`.
    pub fn fraction_below(&self, t: f64) -> f64 {
        if self.log_values.is_empty() {
            return 0.0;
        }
        self.log_values.partition_point(|&v| v <= t) as f64 / self.log_values.len() as f64
    }

    /// Fractions non-increasing in `H`.
    pub fn decays(&self) -> bool {
        self.fractions.windows(2).all(|w| w[1] <= w[0])
    }
}

fn chart_samples(chart: &LevelSetChart, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let k = chart.dim() - 1;
    if k == 1 {
        return (0..n)
            .map(|i| vec![chart.r * (2.0 * (i as f64 + 0.5) / n as f64 - 1.0)])
            .collect();
    }
    Sampler::Kronecker { seed }
        .points(k, n)
        .into_iter()
        .map(|p| p.coords().iter().map(|u| chart.r * (2.0 * u - 1.0)).collect())
        .collect()
}

fn profile_from<F>(
    f_scale: f64,
    chart: &LevelSetChart,
    energy: f64,
    hs: &[f64],
    n_samples: usize,
    nu0: f64,
    noise_floor: f64,
    eval: F,
) -> MeasureProfile
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let ys = chart_samples(chart, n_samples, 0);
    let raw: Vec<Option<f64>> = ys.par_iter().map(|y| eval(y)).collect();
    let newton_failures = raw.iter().filter(|v| v.is_none()).count();
    let mut log_values: Vec<f64> = raw
        .into_iter()
        .flatten()
        .map(|v| if v.abs() <= noise_floor { f64::NEG_INFINITY } else { v.abs().ln() })
        .collect();
    log_values.sort_by(f64::total_cmp);
    let thresholds: Vec<f64> = hs.iter().map(|h| -f_scale * h).collect();
    let mut p = MeasureProfile {
        energy,
        hs: hs.to_vec(),
        scale: f_scale,
        thresholds: thresholds.clone(),
        fractions: vec![],
        measures: vec![],
        bounds: vec![],
        nu0,
        nu1: chart.nu1(nu0),
        noise_floor,
        log_values,
        newton_failures,
        h_within_rho: None,
    };
    let vol = (2.0 * chart.r).powi(chart.dim() as i32 - 1);
    p.fractions = thresholds.iter().map(|&t| p.fraction_below(t)).collect();
    p.measures = p.fractions.iter().map(|fr| fr * vol).collect();
    p
}

/// Sampled `{y : log|f(x(y, E) + h) − E| ≤ −|H₀|·H}` over `|y_j| < r`, with
/// `H₀ = C·log(‖h‖‖x₀‖)`. The extremum is assumed at the origin.
pub fn shifted_level_measure<S: SmoothSurface>(
    f: &S,
    chart: &LevelSetChart,
    h: &[f64],
    energy: f64,
    hs: &[f64],
    n_samples: usize,
) -> Result<MeasureProfile, LevelSetError> {
    if h.len() != chart.dim() {
        return Err(LevelSetError::DimensionMismatch {
            expected: chart.dim(),
            got: h.len(),
        });
    }
    let hn = norm(h);
    if hn == 0.0 {
        return Err(LevelSetError::ZeroShift);
    }
    let tol = solve_tol(chart);
    let nu0 = hessian_floor(f, &vec![0.0; chart.dim()]);
    let scale = (LARGE_C * (hn * norm(&chart.x0)).ln()).abs();
    let noise = 4.0 * tol;
    let mut p = profile_from(scale, chart, energy, hs, n_samples, nu0, noise, |y| {
        let s = solve_g_unchecked(f, chart, y, energy, tol).ok()?;
        let x: Vec<f64> = chart.point(s.xi, y).iter().zip(h).map(|(a, b)| a + b).collect();
        Some(f.value(&x) - energy)
    });
    let k = chart.dim() as i32 - 1;
    let nu1 = p.nu1;
    p.bounds = hs
        .iter()
        .map(|hh| (chart.r / (nu1 * nu1)).powi(k) * (-hh.powf(1.0 / k as f64)).exp())
        .collect();
    p.h_within_rho = Some(hn < chart.rho0 * nu1.powi(10));
    Ok(p)
}

/// Sampled `{y : log|⟨∇f(x(y, E)), h₀⟩| ≤ −|H₁|·H}` with `H₁ = C·log(ν₁‖x₀‖)`.
pub fn directional_gradient_measure<S: SmoothSurface>(
    f: &S,
    chart: &LevelSetChart,
    h0: &[f64],
    energy: f64,
    hs: &[f64],
    n_samples: usize,
) -> Result<MeasureProfile, LevelSetError> {
    if h0.len() != chart.dim() {
        return Err(LevelSetError::DimensionMismatch {
            expected: chart.dim(),
            got: h0.len(),
        });
    }
    let hn = norm(h0);
    if (hn - 1.0).abs() > 1e-12 {
        return Err(LevelSetError::NotUnit(hn));
    }
    let tol = solve_tol(chart);
    let nu0 = hessian_floor(f, &vec![0.0; chart.dim()]);
    let scale = (LARGE_C * (chart.nu1(nu0) * norm(&chart.x0)).ln()).abs();
    let noise = 64.0 * f64::EPSILON * chart.mu.max(1.0);
    Ok(profile_from(scale, chart, energy, hs, n_samples, nu0, noise, |y| {
        let s = solve_g_unchecked(f, chart, y, energy, tol).ok()?;
        Some(dot(&f.gradient(&chart.point(s.xi, y)), h0))
    }))
}

fn solve_tol(chart: &LevelSetChart) -> f64 {
    1e-13 * chart.e0.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub radius: f64,
    pub nu0: f64,
    pub m2: f64,
    pub samples: usize,
    /// `ν₀/2‖x‖² ≤ f(x) − f(0)` at every sample.
    pub lower_ok: bool,
    /// `ν₀/4‖x‖² ≤ f(x) − f(0)`, the form that follows from Taylor's formula
    /// with a third-order remainder.
    pub lower_quarter_ok: bool,
    /// `f(x) − f(0) ≤ (C·M(2) + 1)‖x‖²`.
    pub upper_ok: bool,
    /// `ν₀/2‖x‖ ≤ ‖∇f(x)‖ ≤ (C·M(2) + 1)‖x‖`.
    pub gradient_ok: bool,
    /// `𝔥(x) ≥ ν₀/2`.
    pub hessian_ok: bool,
    /// `min (f(x) − f(0)) / (ν₀/2 ‖x‖²)`.
    pub lower_ratio: f64,
}

/// Quadratic bounds about a minimum at the origin, sampled on `‖x‖ < radius`.
pub fn quadratic_sandwich<S: SmoothSurface>(
    f: &S,
    radius: f64,
    n_samples: usize,
    seed: u64,
) -> SandwichReport {
    let d = f.dim();
    let zero = vec![0.0; d];
    let f0 = f.value(&zero);
    let nu0 = hessian_floor(f, &zero);
    let (m2, _) = f.derivative_bounds(&zero, radius);
    let up = LARGE_C * m2 + 1.0;
    let mut pts: Vec<Vec<f64>> = Sampler::Kronecker { seed }
        .points(d, n_samples)
        .into_iter()
        .map(|p| {
            let v: Vec<f64> = p.coords().iter().map(|u| 2.0 * u - 1.0).collect();
            let len = norm(&v).max(1e-300);
            // radial coordinate spread over (0, radius)
            let t = radius * (0.02 + 0.97 * p.coords()[0]);
            v.iter().map(|c| c / len * t).collect()
        })
        .collect();
    // the Hessian eigendirections at the minimum, where the bounds are tightest
    let h = f.hessian(&zero);
    let eig = SymmetricEigen::new(DMatrix::from_fn(d, d, |i, j| 0.5 * (h[i][j] + h[j][i])));
    for v in eig.eigenvectors.column_iter() {
        for k in 1..=8 {
            let t = radius * k as f64 / 8.5;
            for sign in [-1.0, 1.0] {
                pts.push(v.iter().map(|c| sign * t * c).collect());
            }
        }
    }
    let rows: Vec<(f64, f64, f64, f64, f64)> = pts
        .par_iter()
        .map(|x| {
            let r2 = dot(x, x);
            (
                r2,
                f.value(x) - f0,
                norm(&f.gradient(x)),
                hessian_floor(f, x),
                r2.sqrt(),
            )
        })
        .collect();
    let mut rep = SandwichReport {
        radius,
        nu0,
        m2,
        samples: rows.len(),
        lower_ok: true,
        lower_quarter_ok: true,
        upper_ok: true,
        gradient_ok: true,
        hessian_ok: true,
        lower_ratio: f64::INFINITY,
    };
    for (r2, df, gn, hmin, r) in rows {
        rep.lower_ok &= nu0 / 2.0 * r2 <= df;
        rep.lower_quarter_ok &= nu0 / 4.0 * r2 <= df;
        rep.upper_ok &= df <= up * r2;
        rep.gradient_ok &= nu0 / 2.0 * r <= gn && gn <= up * r;
        rep.hessian_ok &= hmin >= nu0 / 2.0;
        rep.lower_ratio = rep.lower_ratio.min(df / (nu0 / 2.0 * r2));
    }
    rep
}

/// Ground-state surface of `H_[−half, half]` for the two-frequency cosine
/// family at coupling `lambda`, recentered at its minimum near `(1/2, 1/2)`.
pub fn cosine_ground_state(
    s: f64,
    lambda: f64,
    half: i64,
) -> Result<Recentered<GroundStateSurface>, LevelSetError> {
    let model = QuasiperiodicModel::new(
        TrigPotential::cos_sum(s),
        crate::lattice::FrequencyVector::default_pair(),
        lambda,
    )?;
    let surf = GroundStateSurface::new(model, -half, half)?;
    let min = local_minimum(&surf, &[0.5, 0.5], 1e-12)
        .ok_or(LevelSetError::VanishingGradient(f64::NAN))?;
    Ok(Recentered::at(surf, &min))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_chart_is_flat() {
        let f = DiagonalQuadratic::linear(&[1.0, 0.0]);
        let c = build_chart(&f, &[0.1, 0.0], 1.0).unwrap();
        assert_eq!(c.normal, vec![1.0, 0.0]);
        assert!((c.frame[0][1].abs() - 1.0).abs() < 1e-15);
        for y in [-0.5 * c.r, 0.0, 0.9 * c.r] {
            let e = 0.1 + 0.5 * c.r_prime;
            let s = solve_g(&f, &c, &[y], e, 1e-14).unwrap();
            assert!((s.xi - (e - 0.1)).abs() < 1e-15);
        }
    }

    #[test]
    fn circle_matches_closed_form() {
        let f = DiagonalQuadratic::norm_squared(2);
        let c = build_chart(&f, &[0.1, 0.0], 1.0).unwrap();
        assert!(c.frame_defect() < 1e-12);
        for i in 0..21 {
            for j in 0..21 {
                let y = c.r * 0.95 * (i as f64 / 10.0 - 1.0);
                let e = c.e0 + c.r_prime * 0.95 * (j as f64 / 10.0 - 1.0);
                let s = solve_g(&f, &c, &[y], e, 1e-15).unwrap();
                // frame vector may be ±e₂, the closed form is even in y
                let exact = (e - y * y).sqrt() - 0.1;
                assert!((s.xi - exact).abs() < 1e-10, "{} vs {exact}", s.xi);
                assert!(s.bound_ok && s.bracketed);
            }
        }
    }

    #[test]
    fn zero_offset_returns_center() {
        let f = DiagonalQuadratic::norm_squared(2);
        let c = build_chart(&f, &[0.1, 0.0], 1.0).unwrap();
        let s = solve_g(&f, &c, &[0.0], c.e0, 1e-15).unwrap();
        assert_eq!(s.xi, 0.0);
        assert_eq!(s.iterations, 0);
    }

    #[test]
    fn first_order_energy_shift() {
        let v = TrigPotential::cos_sum(0.7);
        let c = build_chart(&v, &[0.47, 0.52], 1.0).unwrap();
        let de = 0.5 * c.r_prime;
        let s = solve_g(&v, &c, &[0.0], c.e0 + de, 1e-15).unwrap();
        let lin = de / c.mu;
        assert!((s.xi - lin).abs() / lin <= c.m2 * de / (c.mu * c.mu));
    }

    #[test]
    fn rejects_bad_charts() {
        let f = DiagonalQuadratic::norm_squared(2);
        assert!(matches!(
            build_chart(&f, &[0.0, 0.0], 1.0),
            Err(LevelSetError::VanishingGradient(_))
        ));
        assert!(matches!(build_chart(&f, &[0.1, 0.0], 2.0), Err(LevelSetError::BadSafety(_))));
        let c = build_chart(&f, &[0.1, 0.0], 1.0).unwrap();
        assert!(matches!(
            solve_g(&f, &c, &[2.0 * c.r], c.e0, 1e-12),
            Err(LevelSetError::OutsideChart { .. })
        ));
    }

    #[test]
    fn frame_is_orthonormal_in_higher_dimension() {
        let f = DiagonalQuadratic {
            linear: vec![0.3, -0.2, 0.5, 0.1],
            weights: vec![1.0, 2.0, 0.5, 1.5],
        };
        let c = build_chart(&f, &[0.1, 0.2, -0.1, 0.05], 0.5).unwrap();
        assert_eq!(c.frame.len(), 3);
        assert!(c.frame_defect() < 1e-12);
        let rep = chart_grid_check(&f, &c, 6, 1e-13);
        assert!(rep.passes(1e-13), "{rep:?}");
    }

    #[test]
    fn ground_state_derivatives_match_differences() {
        let f = cosine_ground_state(0.7, 100.0, 20).unwrap();
        let x = [0.013, -0.008];
        let g = f.gradient(&x);
        let h = f.hessian(&x);
        let eps = 1e-6;
        for k in 0..2 {
            let mut p = x;
            let mut m = x;
            p[k] += eps;
            m[k] -= eps;
            let fd = (f.value(&p) - f.value(&m)) / (2.0 * eps);
            assert!((fd - g[k]).abs() < 1e-7, "grad {k}: {fd} vs {}", g[k]);
            let gp = f.gradient(&p);
            let gm = f.gradient(&m);
            for j in 0..2 {
                let fd2 = (gp[j] - gm[j]) / (2.0 * eps);
                assert!((fd2 - h[j][k]).abs() < 1e-5 * h[j][k].abs().max(1.0));
            }
        }
        assert!(norm(&f.gradient(&[0.0, 0.0])) < 1e-12);
    }

    #[test]
    fn ground_state_chart_converges() {
        let f = cosine_ground_state(0.7, 100.0, 20).unwrap();
        let c = build_chart(&f, &[0.02, 0.01], 1.0).unwrap();
        let rep = chart_grid_check(&f, &c, 10, 1e-12);
        assert!(rep.passes(1e-10), "{rep:?}");
    }

    #[test]
    fn translation_invariant_direction_fills_the_chart() {
        // cos 2πx₁ on ℝ², shifted along x₂: f(x + h) = f(x) on the whole level set
        let f = TrigPotential::cos_sum(0.0);
        let f = Recentered::at(f, &[0.5, 0.3]);
        let c = build_chart(&f, &[0.05, 0.0], 1.0).unwrap();
        let p = shifted_level_measure(&f, &c, &[0.0, 1e-3], c.e0, &[2.0, 4.0, 8.0], 200).unwrap();
        assert!(p.fractions.iter().all(|&fr| fr > 0.99), "{:?}", p.fractions);
    }

    #[test]
    fn quadratic_antipodal_shift_is_not_a_symmetry() {
        let f = DiagonalQuadratic::norm_squared(2);
        let c = build_chart(&f, &[0.1, 0.0], 1.0).unwrap();
        let p = shifted_level_measure(&f, &c, &[-0.2, 0.0], c.e0, &[2.0, 4.0, 8.0], 200).unwrap();
        assert!(p.decays());
        assert!(p.fractions[0] < 0.05, "{:?}", p.fractions);
    }

    #[test]
    fn generic_shift_fraction_decays() {
        let f = cosine_ground_state(0.7, 100.0, 20).unwrap();
        let c = build_chart(&f, &[0.02, 0.01], 1.0).unwrap();
        let p = shifted_level_measure(&f, &c, &[0.013, -0.021], c.e0, &[2.0, 4.0, 6.0, 8.0], 256).unwrap();
        assert!(p.decays());
        assert!(p.fractions[2] < 0.2);
        assert_eq!(p.newton_failures, 0);
    }

    #[test]
    fn gradient_measure_examples() {
        let f = DiagonalQuadratic::norm_squared(2);
        let c = build_chart(&f, &[0.1, 0.0], 1.0).unwrap();
        let along = directional_gradient_measure(&f, &c, &[1.0, 0.0], c.e0, &[2.0, 4.0, 8.0], 200).unwrap();
        assert!(along.fractions.iter().all(|&x| x == 0.0));
        let across = directional_gradient_measure(&f, &c, &[0.0, 1.0], c.e0, &[2.0, 4.0, 8.0], 200).unwrap();
        assert!(across.decays());
        // at unit scale the transverse set is a positive, shrinking interval around y = 0
        let t: Vec<f64> = [-12.0, -13.0, -14.0].iter().map(|&t| across.fraction_below(t)).collect();
        assert!(t[0] > 0.0 && t[1] < t[0] && t[2] < t[1], "{t:?}");
        assert!(matches!(
            directional_gradient_measure(&f, &c, &[1.0, 1.0], c.e0, &[2.0], 10),
            Err(LevelSetError::NotUnit(_))
        ));
    }

    #[test]
    fn sandwich_on_cosine_family() {
        let v = Recentered::at(TrigPotential::cos_sum(0.7), &[0.5, 0.5]);
        let nu0 = hessian_floor(&v, &[0.0, 0.0]);
        let (_, m3) = v.derivative_bounds(&[0.0, 0.0], 1.0);
        let rep = quadratic_sandwich(&v, SMALL_C * nu0 / m3, 400, 3);
        assert!(rep.upper_ok && rep.gradient_ok && rep.hessian_ok && rep.lower_quarter_ok);
        // the quartic term of 1 − cos pushes f just below ν₀/2‖x‖² along the soft axis
        assert!(!rep.lower_ok && rep.lower_ratio > 0.99);
    }

    #[test]
    fn sandwich_on_ground_state() {
        let f = cosine_ground_state(0.7, 100.0, 20).unwrap();
        let rep = quadratic_sandwich(&f, 0.01, 200, 5);
        assert!(rep.upper_ok && rep.gradient_ok && rep.hessian_ok && rep.lower_quarter_ok, "{rep:?}");
    }
}
