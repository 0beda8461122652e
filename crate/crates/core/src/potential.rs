//! Real trigonometric polynomials `V(x) = Σ c_m e^{2πi m·x}` on 𝕋^d, their
//! analytic extension to the strip, exact derivatives and Morse data.

use std::collections::BTreeMap;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{circle_dist, reduce, TorusPoint};

const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("multi-index {m:?} has length {got}, expected {expected}")]
    DimensionMismatch {
        m: Vec<i32>,
        expected: usize,
        got: usize,
    },
    #[error("coefficients violate c_(-m) = conj(c_m) at m = {m:?}")]
    NotReal { m: Vec<i32> },
    #[error("non-finite coefficient at m = {m:?}")]
    NonFinite { m: Vec<i32> },
    #[error("strip half-width must lie in (0, 1], got {0}")]
    BadStrip(f64),
    #[error("point {point:?} lies outside the strip |Im z| < {rho}")]
    OutsideStrip { point: Vec<Complex64>, rho: f64 },
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown potential family {0:?}")]
    UnknownFamily(String),
    #[error("grid_per_dim must be at least 8, got {0}")]
    GridTooSmall(usize),
}

/// One real term `a cos(2π m·x) + b sin(2π m·x)`.
#[derive(Debug, Clone)]
struct RealTerm {
    m: Vec<f64>,
    a: f64,
    b: f64,
}

/// Serialized form: the coefficient list plus the strip width.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PotentialData {
    pub dim: usize,
    pub strip_rho: f64,
    pub coeffs: Vec<CoeffEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CoeffEntry {
    pub m: Vec<i32>,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PotentialData", into = "PotentialData")]
pub struct TrigPotential {
    dim: usize,
    degree: u32,
    strip_rho: f64,
    coeffs: BTreeMap<Vec<i32>, Complex64>,
    constant: f64,
    terms: Vec<RealTerm>,
}

impl PartialEq for TrigPotential {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.strip_rho == other.strip_rho && self.coeffs == other.coeffs
    }
}

impl TryFrom<PotentialData> for TrigPotential {
    type Error = PotentialError;
    fn try_from(d: PotentialData) -> Result<Self, Self::Error> {
        Self::from_coeffs(
            d.dim,
            d.coeffs
                .into_iter()
                .map(|c| (c.m, Complex64::new(c.re, c.im))),
            d.strip_rho,
        )
    }
}

impl From<TrigPotential> for PotentialData {
    fn from(v: TrigPotential) -> Self {
        PotentialData {
            dim: v.dim,
            strip_rho: v.strip_rho,
            coeffs: v
                .coeffs
                .iter()
                .map(|(m, c)| CoeffEntry {
                    m: m.clone(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
    }
}

fn is_upper_half(m: &[i32]) -> bool {
    m.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
}

fn l1(m: &[i32]) -> u32 {
    m.iter().map(|c| c.unsigned_abs()).sum()
}

impl TrigPotential {
    /// Builds a potential from `(m, c_m)` pairs. Repeated indices are summed.
    ///
    /// Both `c_m` and `c_{-m}` must be supplied; they have to be conjugate to
    /// within `1e-12` relative to the largest coefficient.
    pub fn from_coeffs<I>(dim: usize, coeffs: I, strip_rho: f64) -> Result<Self, PotentialError>
    where
        I: IntoIterator<Item = (Vec<i32>, Complex64)>,
    {
        if dim == 0 {
            return Err(PotentialError::ZeroDimension);
        }
        if !(strip_rho > 0.0 && strip_rho <= 1.0) {
            return Err(PotentialError::BadStrip(strip_rho));
        }
        let mut map: BTreeMap<Vec<i32>, Complex64> = BTreeMap::new();
        for (m, c) in coeffs {
            if m.len() != dim {
                return Err(PotentialError::DimensionMismatch {
                    got: m.len(),
                    m,
                    expected: dim,
                });
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(PotentialError::NonFinite { m });
            }
            *map.entry(m).or_default() += c;
        }
        map.retain(|_, c| c.norm() > 0.0);
        let scale = map.values().map(|c| c.norm()).fold(0.0, f64::max);
        let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
        for (m, c) in &map {
            let neg: Vec<i32> = m.iter().map(|v| -v).collect();
            let partner = map.get(&neg).copied().unwrap_or_default();
            if (partner - c.conj()).norm() > tol {
                return Err(PotentialError::NotReal { m: m.clone() });
            }
        }
        let zero = vec![0; dim];
        let constant = map.get(&zero).map_or(0.0, |c| c.re);
        let terms = map
            .iter()
            .filter(|(m, _)| is_upper_half(m))
            .map(|(m, c)| RealTerm {
                m: m.iter().map(|&v| v as f64).collect(),
                a: 2.0 * c.re,
                b: -2.0 * c.im,
            })
            .collect();
        let degree = map.keys().map(|m| l1(m)).max().unwrap_or(0);
        Ok(Self {
            dim,
            degree,
            strip_rho,
            coeffs: map,
            constant,
            terms,
        })
    }

    /// `Σ amp · cos(2π m·x)` from a list of `(m, amp)` pairs.
    pub fn from_cosines(dim: usize, terms: &[(Vec<i32>, f64)]) -> Result<Self, PotentialError> {
        let mut list = Vec::new();
        for (m, amp) in terms {
            if m.iter().all(|&v| v == 0) {
                list.push((m.clone(), Complex64::new(*amp, 0.0)));
            } else {
                let neg: Vec<i32> = m.iter().map(|v| -v).collect();
                list.push((m.clone(), Complex64::new(amp / 2.0, 0.0)));
                list.push((neg, Complex64::new(amp / 2.0, 0.0)));
            }
        }
        Self::from_coeffs(dim, list, 1.0)
    }

    /// The zero potential on 𝕋^d.
    pub fn zero(dim: usize) -> Self {
        Self::from_coeffs(dim, std::iter::empty(), 1.0).expect("zero potential")
    }

    /// `cos(2πx)` on 𝕋¹.
    pub fn cosine() -> Self {
        Self::from_cosines(1, &[(vec![1], 1.0)]).expect("valid cosine")
    }

    /// `cos(2πx) + s·cos(2πy)` on 𝕋².
    pub fn cos_sum(s: f64) -> Self {
        Self::from_cosines(2, &[(vec![1, 0], 1.0), (vec![0, 1], s)]).expect("valid cosine sum")
    }

    /// Named families. `"cos+s*cos"` takes `s`; `"cos"` ignores it.
    pub fn named(name: &str, s: f64) -> Result<Self, PotentialError> {
        match name {
            "cos+s*cos" => Ok(Self::cos_sum(s)),
            "cos" => Ok(Self::cosine()),
            other => Err(PotentialError::UnknownFamily(other.to_string())),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cumulative degree `max |m|₁`.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn strip_rho(&self) -> f64 {
        self.strip_rho
    }

    pub fn with_strip(mut self, rho: f64) -> Result<Self, PotentialError> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(PotentialError::BadStrip(rho));
        }
        self.strip_rho = rho;
        Ok(self)
    }

    pub fn coeffs(&self) -> &BTreeMap<Vec<i32>, Complex64> {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `Σ|c_m|`, an upper bound for `‖V‖∞` on the real torus (attained by
    /// cosine sums with a common maximiser, e.g. the two-frequency family).
    pub fn sup_bound(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// `Σ|c_m| e^{2π|m|₁ y}`, bounding `|V|` on `|Im z| ≤ y`.
    pub fn strip_sup_bound(&self, y: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(m, c)| c.norm() * (TAU * l1(m) as f64 * y).exp())
            .sum()
    }

    /// `Σ 2π|m|₁|c_m|`: Lipschitz constant of `V` for the sup-norm.
    pub fn lipschitz_bound(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(m, c)| TAU * l1(m) as f64 * c.norm())
            .sum()
    }

    /// `Σ (2π|m|₁)²|c_m|`, bounding every second derivative.
    pub fn second_derivative_bound(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(m, c)| (TAU * l1(m) as f64).powi(2) * c.norm())
            .sum()
    }

    #[inline]
    fn phase(m: &[f64], x: &[f64]) -> f64 {
        TAU * m.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }

    /// `V(x)` at a real point.
    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut v = self.constant;
        for t in &self.terms {
            let (s, c) = Self::phase(&t.m, x).sin_cos();
            v += t.a * c + t.b * s;
        }
        v
    }

    pub fn value_at(&self, x: &TorusPoint) -> f64 {
        self.value(x.coords())
    }

    /// Complex evaluation `Σ c_m exp(2πi m·z)` inside the strip.
    pub fn eval(&self, z: &[Complex64]) -> Result<Complex64, PotentialError> {
        if z.len() != self.dim {
            return Err(PotentialError::DimensionMismatch {
                m: vec![],
                expected: self.dim,
                got: z.len(),
            });
        }
        if z.iter().any(|zj| zj.im.abs() >= self.strip_rho) {
            return Err(PotentialError::OutsideStrip {
                point: z.to_vec(),
                rho: self.strip_rho,
            });
        }
        Ok(self.eval_unchecked(z))
    }

    /// Complex evaluation without the strip check.
    pub fn eval_unchecked(&self, z: &[Complex64]) -> Complex64 {
        let i2pi = Complex64::new(0.0, TAU);
        self.coeffs
            .iter()
            .map(|(m, c)| {
                let dot: Complex64 = m.iter().zip(z).map(|(&mi, &zi)| zi * mi as f64).sum();
                c * (i2pi * dot).exp()
            })
            .sum()
    }

    /// Exact gradient at a real point.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for t in &self.terms {
            let (s, c) = Self::phase(&t.m, x).sin_cos();
            let d = TAU * (-t.a * s + t.b * c);
            for (gj, mj) in g.iter_mut().zip(&t.m) {
                *gj += mj * d;
            }
        }
        g
    }

    /// Exact Hessian at a real point (row-major `d × d`).
    pub fn hessian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let d = self.dim;
        let mut h = vec![vec![0.0; d]; d];
        for t in &self.terms {
            let (s, c) = Self::phase(&t.m, x).sin_cos();
            let w = -TAU * TAU * (t.a * c + t.b * s);
            for j in 0..d {
                for k in 0..d {
                    h[j][k] += w * t.m[j] * t.m[k];
                }
            }
        }
        h
    }

    /// Upper bound for `|D³V(x)[u,u,u]|` over real `x` and unit `u`.
    pub fn third_derivative_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let m2 = t.m.iter().map(|v| v * v).sum::<f64>().sqrt();
                TAU.powi(3) * (t.a.hypot(t.b)) * m2.powi(3)
            })
            .sum()
    }
}

impl FromStr for TrigPotential {
    type Err = PotentialError;

    /// Parses lines `m1 … md re im`; `#` starts a comment.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut dim = None;
        let mut list = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let perr = |msg: String| PotentialError::Parse { line: idx + 1, msg };
            if toks.len() < 3 {
                return Err(perr(format!("expected `m1 .. md re im`, got {line:?}")));
            }
            let d = toks.len() - 2;
            match dim {
                None => dim = Some(d),
                Some(d0) if d0 != d => {
                    return Err(perr(format!("expected {d0} indices, found {d}")));
                }
                _ => {}
            }
            let m = toks[..d]
                .iter()
                .map(|t| t.parse::<i32>().map_err(|e| perr(format!("{t:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let re = toks[d]
                .parse::<f64>()
                .map_err(|e| perr(format!("{:?}: {e}", toks[d])))?;
            let im = toks[d + 1]
                .parse::<f64>()
                .map_err(|e| perr(format!("{:?}: {e}", toks[d + 1])))?;
            list.push((m, Complex64::new(re, im)));
        }
        let dim = dim.ok_or(PotentialError::Parse {
            line: 0,
            msg: "no coefficients".into(),
        })?;
        Self::from_coeffs(dim, list, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalKind {
    Min,
    Max,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub location: TorusPoint,
    pub value: f64,
    pub gradient_norm: f64,
    pub hessian_eigenvalues: Vec<f64>,
    pub kind: CriticalKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MorseProfile {
    pub critical_points: Vec<CriticalPoint>,
    pub global_min: (TorusPoint, f64),
    pub global_max: (TorusPoint, f64),
    /// Each global extremum attained at a single critical point.
    pub unique_extrema: bool,
    /// `min ‖𝔥⁻¹‖⁻¹` over the two global extrema.
    pub nu: f64,
    /// `min ‖𝔥⁻¹‖⁻¹` over all critical points.
    pub nu_all: f64,
    pub iota: f64,
    pub under_iota: f64,
    pub gap_g: f64,
    /// Radius of the excluded balls used for `gap_g`.
    pub gap_radius: f64,
    pub sup_norm: f64,
    pub newton_failures: usize,
    pub morse_violation: bool,
}

impl MorseProfile {
    pub fn is_morse(&self) -> bool {
        !self.morse_violation
    }
}

fn sym_eigen(h: &[Vec<f64>]) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let d = h.len();
    let m = DMatrix::from_fn(d, d, |i, j| 0.5 * (h[i][j] + h[j][i]));
    SymmetricEigen::new(m)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn grid_point(idx: usize, g: usize, d: usize) -> Vec<f64> {
    let mut x = vec![0.0; d];
    let mut r = idx;
    for c in x.iter_mut() {
        *c = (r % g) as f64 / g as f64;
        r /= g;
    }
    x
}

fn neighbours(idx: usize, g: usize, d: usize) -> Vec<usize> {
    let mut base = vec![0usize; d];
    let mut r = idx;
    for b in base.iter_mut() {
        *b = r % g;
        r /= g;
    }
    let mut out = Vec::with_capacity(3usize.pow(d as u32) - 1);
    for code in 0..3usize.pow(d as u32) {
        let mut c = code;
        let mut lin = 0;
        let mut stride = 1;
        let mut centre = true;
        for &b in &base {
            let off = c % 3;
            c /= 3;
            if off != 1 {
                centre = false;
            }
            let j = (b + g + off - 1) % g;
            lin += j * stride;
            stride *= g;
        }
        if !centre {
            out.push(lin);
        }
    }
    out
}

/// Damped Newton on `∇V = 0` with a pseudo-inverse Hessian.
fn newton_critical(v: &TrigPotential, seed: &[f64], tol: f64) -> Option<Vec<f64>> {
    let scale = 1.0 + v.sup_bound();
    let hscale = 1.0 + v.second_derivative_bound();
    let mut x = seed.to_vec();
    let mut g = v.gradient(&x);
    let mut gn = norm(&g);
    for _ in 0..200 {
        if gn <= tol * scale {
            return Some(x.iter().map(|&c| reduce(c)).collect());
        }
        let eig = sym_eigen(&v.hessian(&x));
        let gv = DVector::from_column_slice(&g);
        let mut step = DVector::zeros(x.len());
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam.abs() > 1e-10 * hscale {
                let u = eig.eigenvectors.column(k);
                step += u * (u.dot(&gv) / lam);
            }
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            let tg = v.gradient(&trial);
            let tn = norm(&tg);
            if tn < gn {
                x = trial;
                g = tg;
                gn = tn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (gn <= tol * scale).then(|| x.iter().map(|&c| reduce(c)).collect())
}

/// Finds critical points from grid seeds and computes the named Morse constants.
///
/// `newton_tol` is relative to `1 + Σ|c_m|`.
pub fn morse_profile(
    v: &TrigPotential,
    grid_per_dim: usize,
    newton_tol: f64,
) -> Result<MorseProfile, PotentialError> {
    if grid_per_dim < 8 {
        return Err(PotentialError::GridTooSmall(grid_per_dim));
    }
    let d = v.dim();
    let g = grid_per_dim;
    let total = g.pow(d as u32);
    let gnorm: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|i| norm(&v.gradient(&grid_point(i, g, d))))
        .collect();
    let seeds: Vec<usize> = (0..total)
        .filter(|&i| neighbours(i, g, d).iter().all(|&j| gnorm[i] <= gnorm[j]))
        .collect();
    let results: Vec<Option<Vec<f64>>> = seeds
        .par_iter()
        .map(|&i| newton_critical(v, &grid_point(i, g, d), newton_tol))
        .collect();
    let newton_failures = results.iter().filter(|r| r.is_none()).count();
    let mut found: Vec<Vec<f64>> = results.into_iter().flatten().collect();
    found.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    let mut uniq: Vec<Vec<f64>> = Vec::new();
    for p in found {
        let dup = uniq.iter().any(|q| {
            p.iter()
                .zip(q)
                .all(|(&a, &b)| circle_dist(a, b) <= 1e-6)
        });
        if !dup {
            uniq.push(p);
        }
    }
    let sup_norm = v.sup_bound();
    let deg_tol = 1e-7 * (1.0 + v.second_derivative_bound());
    let critical_points: Vec<CriticalPoint> = uniq
        .into_iter()
        .map(|p| {
            let eig = sym_eigen(&v.hessian(&p));
            let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            ev.sort_by(|a, b| a.total_cmp(b));
            let kind = if ev.iter().any(|e| e.abs() < deg_tol) {
                CriticalKind::Degenerate
            } else if ev.iter().all(|&e| e > 0.0) {
                CriticalKind::Min
            } else if ev.iter().all(|&e| e < 0.0) {
                CriticalKind::Max
            } else {
                CriticalKind::Saddle
            };
            CriticalPoint {
                value: v.value(&p),
                gradient_norm: norm(&v.gradient(&p)),
                location: TorusPoint::new(&p),
                hessian_eigenvalues: ev,
                kind,
            }
        })
        .collect();

    // The grid itself bounds the extrema even if Newton missed a point.
    let (imin, imax) = extreme_indices(&critical_points);
    let (global_min, global_max) = match (imin, imax) {
        (Some(a), Some(b)) => (
            (
                critical_points[a].location.clone(),
                critical_points[a].value,
            ),
            (
                critical_points[b].location.clone(),
                critical_points[b].value,
            ),
        ),
        _ => {
            let o = TorusPoint::origin(d);
            let val = v.value(o.coords());
            ((o.clone(), val), (o, val))
        }
    };
    let vmin = global_min.1;
    let vmax = global_max.1;
    let level_tol = 1e-9 * (1.0 + sup_norm);
    let n_at_min = critical_points
        .iter()
        .filter(|c| c.value <= vmin + level_tol)
        .count();
    let n_at_max = critical_points
        .iter()
        .filter(|c| c.value >= vmax - level_tol)
        .count();
    let unique_extrema = n_at_min == 1 && n_at_max == 1 && vmax > vmin;

    let inv_norm = |c: &CriticalPoint| {
        c.hessian_eigenvalues
            .iter()
            .map(|e| e.abs())
            .fold(f64::INFINITY, f64::min)
    };
    let nu = [imin, imax]
        .iter()
        .flatten()
        .map(|&i| inv_norm(&critical_points[i]))
        .fold(f64::INFINITY, f64::min);
    let nu = if nu.is_finite() { nu } else { 0.0 };
    let nu_all = critical_points
        .iter()
        .map(inv_norm)
        .fold(f64::INFINITY, f64::min);
    let nu_all = if nu_all.is_finite() { nu_all } else { 0.0 };

    let iota = {
        let others = critical_points
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != imin && Some(*i) != imax)
            .map(|(_, c)| (c.value - vmin).min(vmax - c.value))
            .fold(f64::INFINITY, f64::min);
        if others.is_finite() {
            others
        } else {
            vmax - vmin
        }
    };

    let under_iota = under_iota(v, g, 5);

    let gap_radius = 0.01 * nu_all / (1.0 + sup_norm);
    let gap_g = (0..total)
        .into_par_iter()
        .filter_map(|i| {
            let x = TorusPoint::new(&grid_point(i, g, d));
            let outside = critical_points
                .iter()
                .all(|c| c.location.dist_euclid(&x) >= gap_radius);
            outside.then_some(gnorm[i])
        })
        .reduce(|| f64::INFINITY, f64::min);

    let morse_violation = critical_points
        .iter()
        .any(|c| c.kind == CriticalKind::Degenerate);
    Ok(MorseProfile {
        critical_points,
        global_min,
        global_max,
        unique_extrema,
        nu,
        nu_all,
        iota,
        under_iota,
        gap_g,
        gap_radius,
        sup_norm,
        newton_failures,
        morse_violation,
    })
}

fn extreme_indices(cps: &[CriticalPoint]) -> (Option<usize>, Option<usize>) {
    let imin = (0..cps.len()).min_by(|&a, &b| cps[a].value.total_cmp(&cps[b].value));
    let imax = (0..cps.len()).max_by(|&a, &b| cps[a].value.total_cmp(&cps[b].value));
    (imin, imax)
}

/// Sampled `ι̲ = inf_x sup_{|x'−x| ≤ ρ/100} |V(x') − V(x)|`.
///
/// The outer infimum runs over a `grid^d` grid and the inner supremum over an
/// `inner^d` grid of the sup-norm ball, so the inner sup is biased low.
pub fn under_iota(v: &TrigPotential, grid: usize, inner: usize) -> f64 {
    let d = v.dim();
    let r = v.strip_rho() / 100.0;
    let inner = inner.max(2);
    let offsets: Vec<Vec<f64>> = (0..inner.pow(d as u32))
        .map(|k| {
            let mut o = vec![0.0; d];
            let mut rem = k;
            for c in o.iter_mut() {
                let t = (rem % inner) as f64 / (inner - 1) as f64;
                *c = r * (2.0 * t - 1.0);
                rem /= inner;
            }
            o
        })
        .collect();
    (0..grid.pow(d as u32))
        .into_par_iter()
        .map(|i| {
            let x = grid_point(i, grid, d);
            let vx = v.value(&x);
            offsets
                .iter()
                .map(|o| {
                    let xp: Vec<f64> = x.iter().zip(o).map(|(a, b)| a + b).collect();
                    (v.value(&xp) - vx).abs()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| f64::INFINITY, f64::min)
}
