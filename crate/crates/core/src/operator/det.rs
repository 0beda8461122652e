//! Dirichlet determinants `f_[a,b](x,E) = det(H_[a,b](x) − E)` in log form,
//! and Green's function entries by Cramer's rule.

use std::f64::consts::LN_2;

use super::cocycle::ldexp;

use serde::{Deserialize, Serialize};

/// A determinant stored as `mant · 2^exp2` with `|mant| ∈ [1, 2)`, or zero.
///
/// Products and quotients are exact up to one rounding of the mantissas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogDet {
    mant: f64,
    exp2: i64,
}

impl LogDet {
    pub const ONE: LogDet = LogDet { mant: 1.0, exp2: 0 };
    pub const ZERO: LogDet = LogDet { mant: 0.0, exp2: 0 };

    pub fn from_scaled(mantissa: f64, exp2: i64) -> Self {
        if mantissa == 0.0 || !mantissa.is_finite() {
            return Self {
                mant: if mantissa == 0.0 { 0.0 } else { mantissa },
                exp2: 0,
            };
        }
        let e = exponent_of(mantissa);
        Self {
            mant: ldexp(mantissa, -e),
            exp2: exp2 + e,
        }
    }

    pub fn from_f64(v: f64) -> Self {
        Self::from_scaled(v, 0)
    }

    /// `−1`, `0` or `1`.
    pub fn sign(&self) -> i8 {
        if self.mant > 0.0 {
            1
        } else if self.mant < 0.0 {
            -1
        } else {
            0
        }
    }

    /// `log|f|` (natural log; `−∞` for zero).
    pub fn log_abs(&self) -> f64 {
        if self.mant == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.mant.abs().ln() + self.exp2 as f64 * LN_2
        }
    }

    /// Value as an `f64`; may overflow or underflow.
    pub fn value(&self) -> f64 {
        ldexp(self.mant, self.exp2)
    }

    pub fn mul(self, o: Self) -> Self {
        Self::from_scaled(self.mant * o.mant, self.exp2 + o.exp2)
    }

    /// `self / o`; `o` must be nonzero.
    pub fn div(self, o: Self) -> Self {
        debug_assert!(o.mant != 0.0, "division by zero determinant");
        Self::from_scaled(self.mant / o.mant, self.exp2 - o.exp2)
    }

    pub fn neg(self) -> Self {
        Self {
            mant: -self.mant,
            exp2: self.exp2,
        }
    }
}

const RESCALE_EVERY: usize = 32;
const BIG: f64 = 1e300;
const SMALL: f64 = 1e-300;

fn exponent_of(x: f64) -> i64 {
    let bits = x.abs().to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i64;
    if raw == 0 {
        exponent_of(x * 2f64.powi(64)) - 64
    } else {
        raw - 1023
    }
}

/// Prefix determinants of `T − E` where `T` has diagonal `shifted[k] = d_k − E`
/// and off-diagonal `−1`: entry `k` is the determinant of the leading `k × k`
/// block (`k = 0..=N`, entry 0 is 1).
///
/// Three-term recursion `f_k = (d_k − E) f_{k−1} − f_{k−2}` with exact
/// power-of-two rescaling every 32 steps or when a value leaves `[1e-300, 1e300]`.
pub fn prefix_determinants(shifted: &[f64]) -> Vec<LogDet> {
    let mut out = Vec::with_capacity(shifted.len() + 1);
    out.push(LogDet::ONE);
    let mut prev = 0.0f64;
    let mut cur = 1.0f64;
    let mut exp2: i64 = 0;
    for (k, &s) in shifted.iter().enumerate() {
        let next = s * cur - prev;
        prev = cur;
        cur = next;
        let m = cur.abs().max(prev.abs());
        if (k + 1) % RESCALE_EVERY == 0 || m > BIG || (m < SMALL && m > 0.0) {
            if m > 0.0 && m.is_finite() {
                let e = exponent_of(m);
                cur = ldexp(cur, -e);
                prev = ldexp(prev, -e);
                exp2 += e;
            }
        }
        out.push(LogDet::from_scaled(cur, exp2));
    }
    out
}

/// `f` of the whole interval.
pub fn determinant(shifted: &[f64]) -> LogDet {
    *prefix_determinants(shifted)
        .last()
        .expect("prefix list is never empty")
}

/// Prefix and suffix determinants of one window, enough to evaluate every
/// `f_[a',b']` with `a' = a` or `b' = b` and every Green's function entry.
#[derive(Debug, Clone)]
pub struct DeterminantTable {
    a: i64,
    b: i64,
    /// `prefix[k] = f_[a, a+k−1]`.
    prefix: Vec<LogDet>,
    /// `suffix[k] = f_[b−k+1, b]`.
    suffix: Vec<LogDet>,
}

impl DeterminantTable {
    /// `shifted[i] = λV(x + (a+i)ω) − E`.
    pub fn new(a: i64, shifted: &[f64]) -> Self {
        let n = shifted.len() as i64;
        let rev: Vec<f64> = shifted.iter().rev().copied().collect();
        Self {
            a,
            b: a + n - 1,
            prefix: prefix_determinants(shifted),
            suffix: prefix_determinants(&rev),
        }
    }

    pub fn full(&self) -> LogDet {
        *self.prefix.last().expect("nonempty")
    }

    /// `f_[a, m]` (`m = a − 1` gives 1, `m = a − 2` gives 0).
    pub fn left(&self, m: i64) -> LogDet {
        let k = m - self.a + 1;
        match k {
            -1 => LogDet::ZERO,
            k if k >= 0 => self.prefix[k as usize],
            _ => panic!("left index out of range"),
        }
    }

    /// `f_[m, b]` (`m = b + 1` gives 1, `m = b + 2` gives 0).
    pub fn right(&self, m: i64) -> LogDet {
        let k = self.b - m + 1;
        match k {
            -1 => LogDet::ZERO,
            k if k >= 0 => self.suffix[k as usize],
            _ => panic!("right index out of range"),
        }
    }

    /// `𝒢(j,k) = f_[a,min−1] f_[max+1,b] / f_[a,b]` in log form.
    pub fn green_log(&self, j: i64, k: i64) -> LogDet {
        let (lo, hi) = if j <= k { (j, k) } else { (k, j) };
        self.left(lo - 1).mul(self.right(hi + 1)).div(self.full())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_cycle_period_four() {
        let f = prefix_determinants(&[0.0; 8]);
        let vals: Vec<f64> = f.iter().map(|d| d.value()).collect();
        assert_eq!(vals, vec![1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0]);
    }

    #[test]
    fn huge_determinants_stay_finite() {
        let f = determinant(&vec![1e5; 400]);
        assert_eq!(f.sign(), 1);
        assert!((f.log_abs() - 400.0 * 1e5f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn table_boundaries() {
        let t = DeterminantTable::new(3, &[2.0, 3.0, 4.0]);
        assert_eq!(t.left(2).value(), 1.0);
        assert_eq!(t.left(1).value(), 0.0);
        assert_eq!(t.left(3).value(), 2.0);
        assert_eq!(t.left(4).value(), 5.0);
        assert_eq!(t.right(6).value(), 1.0);
        assert_eq!(t.right(5).value(), 4.0);
        assert_eq!(t.right(4).value(), 11.0);
        assert_eq!(t.full().value(), 2.0 * 11.0 - 4.0);
    }
}
