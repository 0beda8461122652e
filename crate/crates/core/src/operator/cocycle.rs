//! 2×2 cocycle products carried as a power-of-two normalised matrix plus a
//! separate binary exponent, so long products never overflow.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

pub type Mat2 = [[f64; 2]; 2];

/// `value = mat · 2^exp2`, with `max |mat_ij| ∈ [1, 2)` unless the product is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CocycleProduct {
    mat: Mat2,
    exp2: i64,
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

/// Largest singular value of a 2×2 matrix.
pub fn op_norm(m: &Mat2) -> f64 {
    let [[a, b], [c, d]] = *m;
    0.5 * ((a + d).hypot(b - c) + (a - d).hypot(b + c))
}

/// `x · 2^e`, exact whenever the result is a normal number.
pub fn ldexp(x: f64, e: i64) -> f64 {
    let mut v = x;
    let mut e = e;
    while e != 0 {
        let step = e.clamp(-1000, 1000);
        v *= 2f64.powi(step as i32);
        e -= step;
        if v == 0.0 || !v.is_finite() {
            break;
        }
    }
    v
}

fn max_abs(m: &Mat2) -> f64 {
    m[0][0]
        .abs()
        .max(m[0][1].abs())
        .max(m[1][0].abs())
        .max(m[1][1].abs())
}

/// Splits `x > 0` as `m · 2^e` with `m ∈ [1, 2)`.
fn binary_exponent(x: f64) -> i64 {
    debug_assert!(x > 0.0 && x.is_finite());
    let bits = x.to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i64;
    if raw == 0 {
        // subnormal
        binary_exponent(x * 2f64.powi(64)) - 64
    } else {
        raw - 1023
    }
}

fn scale_pow2(m: &mut Mat2, e: i64) {
    // multiply by 2^{-e}, exact while the result stays normal
    let mut e = e;
    while e != 0 {
        let step = e.clamp(-1000, 1000);
        let f = 2f64.powi(-step as i32);
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v *= f;
            }
        }
        e -= step;
    }
}

impl CocycleProduct {
    pub fn identity() -> Self {
        Self {
            mat: [[1.0, 0.0], [0.0, 1.0]],
            exp2: 0,
        }
    }

    pub fn from_matrix(m: Mat2) -> Self {
        let mut p = Self { mat: m, exp2: 0 };
        p.renormalize();
        p
    }

    /// The one-step factor `[[v − E, −1], [1, 0]]`.
    pub fn factor(v_minus_e: f64) -> Mat2 {
        [[v_minus_e, -1.0], [1.0, 0.0]]
    }

    fn renormalize(&mut self) {
        let m = max_abs(&self.mat);
        if m == 0.0 || !m.is_finite() {
            return;
        }
        let e = binary_exponent(m);
        if e != 0 {
            scale_pow2(&mut self.mat, e);
            self.exp2 += e;
        }
    }

    /// Replaces `self` with `a · self`.
    pub fn left_mul(&mut self, a: &Mat2) {
        self.mat = mat_mul(a, &self.mat);
        self.renormalize();
    }

    /// `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        let mut p = Self {
            mat: mat_mul(&self.mat, &other.mat),
            exp2: self.exp2 + other.exp2,
        };
        p.renormalize();
        p
    }

    /// The normalised matrix; the true product is `mat() · exp(log_scale())`.
    pub fn mat(&self) -> Mat2 {
        self.mat
    }

    pub fn log_scale(&self) -> f64 {
        self.exp2 as f64 * LN_2
    }

    pub fn exp2(&self) -> i64 {
        self.exp2
    }

    /// `log‖M‖` (operator norm).
    pub fn log_norm(&self) -> f64 {
        op_norm(&self.mat).ln() + self.log_scale()
    }

    /// `(sign, log|M_ij|)` of one entry.
    pub fn entry_log(&self, i: usize, j: usize) -> (f64, f64) {
        let v = self.mat[i][j];
        (v.signum() * f64::from(v != 0.0), v.abs().ln() + self.log_scale())
    }

    /// Entry as an `f64` (may overflow to ±∞ or underflow to 0).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        ldexp(self.mat[i][j], self.exp2)
    }

    /// `det M`, evaluated as `det(mat) · 4^exp2` in log form.
    ///
    /// Only meaningful when `log‖M‖` is moderate: `det(mat)` is a difference
    /// of products of size one, so for a hyperbolic product of norm `e^L` it
    /// carries an absolute error of order `ε` against a true value `e^{−2L}`.
    pub fn det(&self) -> f64 {
        let m = &self.mat;
        let d = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        ldexp(d, 2 * self.exp2)
    }

    /// `|det M − 1| / ‖M‖²`: the determinant defect measured on the scale of
    /// the product, which is what floating point can resolve.
    pub fn det_defect(&self) -> f64 {
        let m = &self.mat;
        let d = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let target = (-2.0 * self.log_scale()).exp();
        let n = op_norm(m);
        (d - target).abs() / (n * n)
    }

    /// Check used throughout the tests: the scale-relative defect is below
    /// `tol`, and so is `|det M − 1|` whenever `log‖M‖ ≤ 4`.
    pub fn det_is_unit(&self, tol: f64) -> bool {
        if self.det_defect() > tol {
            return false;
        }
        self.log_norm() > 4.0 || (self.det() - 1.0).abs() <= tol
    }
}
