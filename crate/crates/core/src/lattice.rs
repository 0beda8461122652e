//! Frequency vectors, torus arithmetic and orbits `x + nω` on 𝕋^d = ℝ^d/ℤ^d.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("frequency vector must have at least one component")]
    Empty,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite input")]
    NonFinite,
    #[error("invalid Diophantine constants: a = {a}, b = {b} (need a > 0, b > d = {d})")]
    InvalidConstants { a: f64, b: f64, d: usize },
    #[error("radius must be at least 1")]
    ZeroRadius,
    #[error(
        "Diophantine inequality fails at k = {k:?}: dist(k·ω, ℤ) = {distance:e} < a/|k|^b = {required:e}"
    )]
    Violation {
        k: Vec<i64>,
        distance: f64,
        required: f64,
        /// `dist(k·ω, ℤ)·|k|^b`, to be compared against `a`.
        ratio: f64,
    },
}

/// Distance from `t` to the nearest integer.
#[inline]
pub fn dist_to_integer(t: f64) -> f64 {
    (t - t.round()).abs()
}

/// Canonical representative of `t` in `[0, 1)`.
#[inline]
pub fn reduce(t: f64) -> f64 {
    let r = t - t.floor();
    // `t - floor(t)` can round up to exactly 1.0 for tiny negative `t`.
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Fractional part of `n·w`, computed with an error-free product so the
/// result stays accurate to a few ulps even for large `|n|`.
#[inline]
pub fn frac_mul(n: i64, w: f64) -> f64 {
    let nf = n as f64;
    let p = nf * w;
    let err = nf.mul_add(w, -p);
    reduce((p - p.floor()) + err)
}

/// Circle distance between two points of ℝ/ℤ.
#[inline]
pub fn circle_dist(a: f64, b: f64) -> f64 {
    dist_to_integer(a - b)
}

/// A point of 𝕋^d stored through its canonical representative in `[0,1)^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    pub fn new(coords: &[f64]) -> Self {
        Self {
            coords: coords.iter().map(|&c| reduce(c)).collect(),
        }
    }

    pub fn origin(dim: usize) -> Self {
        Self {
            coords: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// `self + h` reduced mod 1.
    pub fn shifted(&self, h: &[f64]) -> Self {
        assert_eq!(h.len(), self.dim(), "shift dimension mismatch");
        Self {
            coords: self
                .coords
                .iter()
                .zip(h)
                .map(|(&c, &s)| reduce(c + s))
                .collect(),
        }
    }

    /// `self + n·ω` reduced mod 1.
    pub fn translate(&self, omega: &FrequencyVector, n: i64) -> Self {
        assert_eq!(omega.dim(), self.dim(), "frequency dimension mismatch");
        Self {
            coords: self
                .coords
                .iter()
                .zip(omega.components())
                .map(|(&c, &w)| reduce(c + frac_mul(n, w)))
                .collect(),
        }
    }

    /// Sup-norm torus distance `|p - q|`.
    pub fn dist_sup(&self, other: &Self) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(&a, &b)| circle_dist(a, b))
            .fold(0.0, f64::max)
    }

    /// Euclidean torus distance `‖p - q‖`.
    pub fn dist_euclid(&self, other: &Self) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(&a, &b)| circle_dist(a, b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// A frequency vector together with the Diophantine constants `(a, b)` and
/// the lattice radius over which `‖k·ω‖ ≥ a/|k|^b` has been verified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyVector {
    omega: Vec<f64>,
    dio_a: f64,
    dio_b: f64,
    checked_radius: u32,
}

impl FrequencyVector {
    pub fn components(&self) -> &[f64] {
        &self.omega
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    pub fn dio_a(&self) -> f64 {
        self.dio_a
    }

    pub fn dio_b(&self) -> f64 {
        self.dio_b
    }

    pub fn checked_radius(&self) -> u32 {
        self.checked_radius
    }

    /// Golden-mean frequency `(√5 − 1)/2`, verified with `a = 0.2, b = 2` up to `|k| ≤ 1000`.
    pub fn golden() -> Self {
        verify_diophantine(&[(5f64.sqrt() - 1.0) / 2.0], 0.2, 2.0, 1000)
            .expect("golden mean is badly approximable")
    }

    /// Default two-frequency vector `(√2 − 1, √3 − 1)`, verified with
    /// `a = 10⁻³, b = 3` up to `|k| ≤ 100`.
    pub fn default_pair() -> Self {
        verify_diophantine(&[2f64.sqrt() - 1.0, 3f64.sqrt() - 1.0], 1e-3, 3.0, 100)
            .expect("default pair is Diophantine at desk scale")
    }

    /// Preset lookup used by configuration files and the CLI.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "golden" => Some(Self::golden()),
            // first component of the default pair, for one-dimensional reductions
            "sqrt2" => verify_diophantine(&[2f64.sqrt() - 1.0], 0.2, 2.0, 1000).ok(),
            "sqrt2-sqrt3" | "default" => Some(Self::default_pair()),
            _ => None,
        }
    }

    /// A frequency vector taken on trust (no lattice verification).
    ///
    /// `checked_radius` is recorded as 0; used for degenerate controls such
    /// as rational frequencies or the free operator.
    pub fn unchecked(omega: &[f64]) -> Result<Self, LatticeError> {
        if omega.is_empty() {
            return Err(LatticeError::Empty);
        }
        if omega.iter().any(|w| !w.is_finite()) {
            return Err(LatticeError::NonFinite);
        }
        Ok(Self {
            omega: omega.iter().map(|&w| reduce(w)).collect(),
            dio_a: 0.0,
            dio_b: 0.0,
            checked_radius: 0,
        })
    }
}

/// Verifies `dist(k·ω, ℤ) ≥ a/|k|^b` for every nonzero `k ∈ ℤ^d` with
/// sup-norm `|k| ≤ radius`.
///
/// Only one of `±k` is enumerated since both give the same distance. On
/// failure the first violating `k` (in enumeration order) is returned.
pub fn verify_diophantine(
    omega: &[f64],
    a: f64,
    b: f64,
    radius: u32,
) -> Result<FrequencyVector, LatticeError> {
    let d = omega.len();
    if d == 0 {
        return Err(LatticeError::Empty);
    }
    if omega.iter().chain([&a, &b]).any(|v| !v.is_finite()) {
        return Err(LatticeError::NonFinite);
    }
    if a <= 0.0 || b <= d as f64 {
        return Err(LatticeError::InvalidConstants { a, b, d });
    }
    if radius == 0 {
        return Err(LatticeError::ZeroRadius);
    }
    let omega: Vec<f64> = omega.iter().map(|&w| reduce(w)).collect();
    let r = radius as i64;
    let mut k = vec![-r; d];
    loop {
        if is_canonical_half(&k) {
            let sup = k.iter().map(|c| c.abs()).max().unwrap_or(0);
            let dot: f64 = k
                .iter()
                .zip(&omega)
                .map(|(&ki, &wi)| frac_mul(ki, wi))
                .sum();
            let distance = dist_to_integer(dot);
            let scale = (sup as f64).powf(b);
            let required = a / scale;
            if distance < required {
                return Err(LatticeError::Violation {
                    k: k.clone(),
                    distance,
                    required,
                    ratio: distance * scale,
                });
            }
        }
        if !advance(&mut k, r) {
            break;
        }
    }
    Ok(FrequencyVector {
        omega,
        dio_a: a,
        dio_b: b,
        checked_radius: radius,
    })
}

/// True iff `k` is nonzero and its first nonzero entry is positive.
fn is_canonical_half(k: &[i64]) -> bool {
    k.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
}

/// Odometer increment over `[-r, r]^d`; returns false after the last vector.
fn advance(k: &mut [i64], r: i64) -> bool {
    for c in k.iter_mut().rev() {
        if *c < r {
            *c += 1;
            return true;
        }
        *c = -r;
    }
    false
}

/// The orbit `x + nω` (reduced mod 1) for every `n` in `range`, in order.
pub fn orbit(
    x: &TorusPoint,
    omega: &FrequencyVector,
    range: std::ops::RangeInclusive<i64>,
) -> Vec<TorusPoint> {
    range.map(|n| x.translate(omega, n)).collect()
}
