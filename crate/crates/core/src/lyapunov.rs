//! Finite-scale Lyapunov exponents `L_N(E)`, the Avalanche Principle,
//! empirical large-deviation statistics and large-coupling checks.
//!
//! Every phase average is a plain mean over a [`Sampler`]. Per-sample values
//! are computed in parallel, collected in order and summed pairwise, so a
//! fixed seed gives bitwise identical results for any thread count.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lattice::{reduce, FrequencyVector, TorusPoint};
use crate::operator::{op_norm, CocycleProduct, QuasiperiodicModel, SINGULAR_LOG_FLOOR};

/// Constant in the Avalanche Principle error bound `C·n/μ`.
pub const AP_CONSTANT: f64 = 10.0;

/// `C₁` in the large-coupling floor `L_N ≥ log λ − C₁(log λ)^{1/2}`.
pub const LARGE_COUPLING_C1: f64 = 3.0;

/// How phases `x ∈ 𝕋^d` are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Sampler {
    /// `x_k = u + k·α` with a seeded offset `u` and the generalised golden
    /// ratio generator `α_j = φ_d^{−j}` (`φ_d` the root of `t^{d+1} = t + 1`).
    Kronecker { seed: u64 },
    /// Independent uniform points.
    Uniform { seed: u64 },
    /// Cell centres of a `m × … × m` grid with `m = ⌈n^{1/d}⌉`.
    Grid,
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler::Kronecker { seed: 0 }
    }
}

impl Sampler {
    pub fn seed(&self) -> Option<u64> {
        match self {
            Sampler::Kronecker { seed } | Sampler::Uniform { seed } => Some(*seed),
            Sampler::Grid => None,
        }
    }

    /// Sample points. `Grid` may return more than `n` (a full grid).
    pub fn points(&self, dim: usize, n: usize) -> Vec<TorusPoint> {
        match self {
            Sampler::Kronecker { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let u: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
                let alpha = kronecker_generator(dim);
                (0..n)
                    .map(|k| {
                        let c: Vec<f64> = u
                            .iter()
                            .zip(&alpha)
                            .map(|(&uj, &aj)| reduce(uj + (k as f64 * aj).fract()))
                            .collect();
                        TorusPoint::new(&c)
                    })
                    .collect()
            }
            Sampler::Uniform { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..n)
                    .map(|_| {
                        let c: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
                        TorusPoint::new(&c)
                    })
                    .collect()
            }
            Sampler::Grid => {
                let m = grid_side(dim, n);
                let total = m.pow(dim as u32);
                (0..total)
                    .map(|mut idx| {
                        let mut c = vec![0.0; dim];
                        for cj in c.iter_mut() {
                            *cj = ((idx % m) as f64 + 0.5) / m as f64;
                            idx /= m;
                        }
                        TorusPoint::new(&c)
                    })
                    .collect()
            }
        }
    }
}

fn grid_side(dim: usize, n: usize) -> usize {
    let mut m = (n as f64).powf(1.0 / dim as f64).round().max(1.0) as usize;
    while m.pow(dim as u32) < n {
        m += 1;
    }
    m
}

fn kronecker_generator(dim: usize) -> Vec<f64> {
    // fixed point iteration for t^{d+1} = t + 1
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
    }
    (1..=dim).map(|j| phi.powi(-(j as i32)).fract()).collect()
}

/// Pairwise (cascade) summation in a fixed order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = pairwise_sum(v) / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let dev: Vec<f64> = v.iter().map(|x| (x - mean).powi(2)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Avalanche,
}

/// An estimate of `L_N(y,E) = (1/N)·E_x log‖M_N(x+iy,E)‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub n: usize,
    pub energy: f64,
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub method: Method,
    pub imag_shift: Vec<f64>,
    pub sampler: Sampler,
}

impl LyapunovEstimate {
    /// `log(1 + λ‖V‖∞ + |E|)`, the a priori upper bound.
    pub fn upper_bound(model: &QuasiperiodicModel, energy: f64) -> f64 {
        (1.0 + model.lambda * model.potential.sup_bound() + energy.abs()).ln()
    }
}

/// `log‖M_[1,N](x,E)‖`.
pub fn log_norm(model: &QuasiperiodicModel, x: &TorusPoint, energy: f64, n: usize) -> f64 {
    transfer(model, x, energy, n).log_norm()
}

fn transfer(model: &QuasiperiodicModel, x: &TorusPoint, energy: f64, n: usize) -> CocycleProduct {
    let mut p = CocycleProduct::identity();
    for k in 1..=n as i64 {
        p.left_mul(&CocycleProduct::factor(model.site_potential(x, k) - energy));
    }
    p
}

/// `log‖M_[1,N](x+iy,E)‖` with the potential continued to the strip.
pub fn log_norm_complex(
    model: &QuasiperiodicModel,
    x: &TorusPoint,
    y: &[f64],
    energy: f64,
    n: usize,
) -> f64 {
    let omega = model.omega.components();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut m = [[one, zero], [zero, one]];
    let mut exp2: i64 = 0;
    let mut z = vec![zero; x.dim()];
    for k in 1..=n as i64 {
        for (j, zj) in z.iter_mut().enumerate() {
            *zj = Complex64::new(
                reduce(x.coords()[j] + crate::lattice::frac_mul(k, omega[j])),
                y[j],
            );
        }
        let v = model.potential.eval_unchecked(&z) * model.lambda - energy;
        m = [
            [v * m[0][0] - m[1][0], v * m[0][1] - m[1][1]],
            [m[0][0], m[0][1]],
        ];
        let big = m
            .iter()
            .flatten()
            .map(|c| c.re.abs().max(c.im.abs()))
            .fold(0.0f64, f64::max);
        if big > 1e100 || (big < 1e-100 && big > 0.0) {
            let e = big.log2().floor() as i64;
            let s = 2f64.powi(-(e as i32));
            for c in m.iter_mut().flatten() {
                *c *= s;
            }
            exp2 += e;
        }
    }
    complex_op_norm(&m).ln() + exp2 as f64 * LN_2
}

fn complex_op_norm(m: &[[Complex64; 2]; 2]) -> f64 {
    let big = m.iter().flatten().map(|c| c.norm()).fold(0.0f64, f64::max);
    if big == 0.0 {
        return 0.0;
    }
    let u: Vec<Complex64> = m.iter().flatten().map(|c| c / big).collect();
    let fro2: f64 = u.iter().map(|c| c.norm_sqr()).sum();
    let det = (u[0] * u[3] - u[1] * u[2]).norm();
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    big * (0.5 * (fro2 + disc)).sqrt()
}

fn sample_log_norms(
    model: &QuasiperiodicModel,
    energy: f64,
    n: usize,
    y: Option<&[f64]>,
    pts: &[TorusPoint],
) -> Vec<f64> {
    pts.par_iter()
        .map(|x| match y {
            Some(y) => log_norm_complex(model, x, y, energy, n),
            None => log_norm(model, x, energy, n),
        })
        .collect()
}

/// Monte Carlo / quasi Monte Carlo estimate of `L_N(E)`.
pub fn lyapunov_direct(
    model: &QuasiperiodicModel,
    energy: f64,
    n: usize,
    sampler: &Sampler,
    n_samples: usize,
) -> LyapunovEstimate {
    lyapunov_direct_shifted(model, energy, n, None, sampler, n_samples)
}

/// Estimate of `L_N(y,E)`; `y = None` is the real torus.
pub fn lyapunov_direct_shifted(
    model: &QuasiperiodicModel,
    energy: f64,
    n: usize,
    y: Option<&[f64]>,
    sampler: &Sampler,
    n_samples: usize,
) -> LyapunovEstimate {
    assert!(n >= 1 && n_samples >= 2, "need N ≥ 1 and at least two samples");
    if let Some(y) = y {
        assert_eq!(y.len(), model.dim(), "imaginary shift dimension");
    }
    let pts = sampler.points(model.dim(), n_samples);
    let logs = sample_log_norms(model, energy, n, y, &pts);
    let (mean, se) = mean_stderr(&logs);
    LyapunovEstimate {
        n,
        energy,
        value: mean / n as f64,
        stderr: se / n as f64,
        samples: logs.len(),
        method: Method::Direct,
        imag_shift: y.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; model.dim()]),
        sampler: sampler.clone(),
    }
}

/// The numerically checked hypotheses of the Avalanche Principle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApHypotheses {
    pub n: usize,
    pub mu: f64,
    /// `max_j (|det A_j| − 1)₊` measured on the scale of `‖A_j‖²`.
    pub det_excess: f64,
    pub min_norm: f64,
    /// `max_j log‖A_{j+1}‖ + log‖A_j‖ − log‖A_{j+1}A_j‖`.
    pub max_pair_defect: f64,
    pub det_ok: bool,
    pub large_ok: bool,
    pub diff_ok: bool,
}

impl ApHypotheses {
    pub fn holds(&self) -> bool {
        self.det_ok && self.large_ok && self.diff_ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvalancheExpansion {
    /// `Σ_{j<n} log‖A_{j+1}A_j‖ − Σ_{1<j<n} log‖A_j‖`.
    pub estimate: f64,
    /// `C·n/μ` with `C = AP_CONSTANT`.
    pub error_bound: f64,
    pub hypotheses: ApHypotheses,
}

/// Tolerance on the determinant hypothesis, relative to `‖A_j‖²`.
pub const AP_DET_TOL: f64 = 1e-9;

fn det_excess(p: &CocycleProduct) -> f64 {
    let m = p.mat();
    let d = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs();
    let target = (-2.0 * p.log_scale()).exp();
    let n = op_norm(&m);
    ((d - target) / (n * n)).max(0.0)
}

/// Checks the hypotheses and, if they hold, evaluates the expansion.
/// On failure the hypothesis report is returned instead.
pub fn avalanche_expand(
    blocks: &[CocycleProduct],
    mu: f64,
) -> Result<AvalancheExpansion, ApHypotheses> {
    let n = blocks.len();
    assert!(n >= 1, "need at least one block");
    let norms: Vec<f64> = blocks.iter().map(CocycleProduct::log_norm).collect();
    let pairs: Vec<f64> = blocks
        .windows(2)
        .map(|w| w[1].mul(&w[0]).log_norm())
        .collect();
    let det_excess = blocks.iter().map(det_excess).fold(0.0, f64::max);
    let min_log = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let max_pair_defect = (0..n.saturating_sub(1))
        .map(|j| norms[j + 1] + norms[j] - pairs[j])
        .fold(f64::NEG_INFINITY, f64::max);
    let hyp = ApHypotheses {
        n,
        mu,
        det_excess,
        min_norm: min_log.exp(),
        max_pair_defect,
        det_ok: det_excess <= AP_DET_TOL,
        large_ok: min_log >= mu.ln() && mu > n as f64,
        diff_ok: n < 2 || max_pair_defect < 0.5 * mu.ln(),
    };
    if !hyp.holds() {
        return Err(hyp);
    }
    let estimate = if n == 1 {
        norms[0]
    } else {
        pairwise_sum(&pairs) - pairwise_sum(&norms[1..n - 1])
    };
    Ok(AvalancheExpansion {
        estimate,
        error_bound: AP_CONSTANT * n as f64 / mu,
        hypotheses: hyp,
    })
}

/// `log‖A_n⋯A_1‖` by a direct normalised product.
pub fn direct_log_norm(blocks: &[CocycleProduct]) -> f64 {
    blocks
        .iter()
        .fold(CocycleProduct::identity(), |acc, b| b.mul(&acc))
        .log_norm()
}

/// Random `SL(2,ℝ)` blocks `R(θ)·diag(μ, 1/μ)·R(φ)` with uniform angles.
pub fn random_hyperbolic_blocks(n: usize, norm: f64, seed: u64) -> Vec<CocycleProduct> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rot = |t: f64| {
        let (s, c) = t.sin_cos();
        [[c, -s], [s, c]]
    };
    (0..n)
        .map(|_| {
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            let b = rng.gen_range(0.0..std::f64::consts::TAU);
            let d = [[1.0, 0.0], [0.0, 1.0 / (norm * norm)]];
            let m = crate::operator::mat_mul(&rot(a), &crate::operator::mat_mul(&d, &rot(b)));
            // m · norm has determinant one
            CocycleProduct::from_matrix(m).mul(&CocycleProduct::from_matrix([
                [norm, 0.0],
                [0.0, norm],
            ]))
        })
        .collect()
}

/// Transfer matrices of consecutive blocks of length `ell` covering `[1, N]`;
/// the last block absorbs the remainder.
pub fn block_transfers(
    model: &QuasiperiodicModel,
    x: &TorusPoint,
    energy: f64,
    n: usize,
    ell: usize,
) -> Vec<CocycleProduct> {
    assert!(ell >= 1 && ell <= n, "block length must be in [1, N]");
    let count = n / ell;
    (0..count)
        .map(|b| {
            let lo = b * ell + 1;
            let hi = if b + 1 == count { n } else { lo + ell - 1 };
            let mut p = CocycleProduct::identity();
            for k in lo as i64..=hi as i64 {
                p.left_mul(&CocycleProduct::factor(model.site_potential(x, k) - energy));
            }
            p
        })
        .collect()
}

/// `L_N` through the Avalanche Principle on blocks of length `ell`, with
/// `μ` the smallest block norm at each sample. Samples where the hypotheses
/// fail fall back to the direct product and are counted.
pub fn lyapunov_avalanche(
    model: &QuasiperiodicModel,
    energy: f64,
    n: usize,
    ell: usize,
    sampler: &Sampler,
    n_samples: usize,
) -> (LyapunovEstimate, usize) {
    assert!(n_samples >= 2, "need at least two samples");
    let pts = sampler.points(model.dim(), n_samples);
    let per: Vec<(f64, bool)> = pts
        .par_iter()
        .map(|x| {
            let blocks = block_transfers(model, x, energy, n, ell);
            let mu = blocks
                .iter()
                .map(CocycleProduct::log_norm)
                .fold(f64::INFINITY, f64::min)
                .exp();
            match avalanche_expand(&blocks, mu) {
                Ok(exp) => (exp.estimate, false),
                Err(_) => (direct_log_norm(&blocks), true),
            }
        })
        .collect();
    let logs: Vec<f64> = per.iter().map(|p| p.0).collect();
    let fallbacks = per.iter().filter(|p| p.1).count();
    let (mean, se) = mean_stderr(&logs);
    (
        LyapunovEstimate {
            n,
            energy,
            value: mean / n as f64,
            stderr: se / n as f64,
            samples: logs.len(),
            method: Method::Avalanche,
            imag_shift: vec![0.0; model.dim()],
            sampler: sampler.clone(),
        },
        fallbacks,
    )
}

/// Empirical tails of `|log‖M_N‖ − N·L_N|` and `|log|f_N| − N·L_N|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationStats {
    pub n: usize,
    pub energy: f64,
    pub thresholds: Vec<f64>,
    /// Fraction of samples with `|log‖M_N(x,E)‖ − N·L_N| > threshold`.
    pub measures: Vec<f64>,
    /// Same for `log|f_N(x,E)|`, over samples without determinant underflow.
    pub det_measures: Vec<f64>,
    /// Samples with `f_N = 0` or `log|f_N| < SINGULAR_LOG_FLOOR`.
    pub det_underflow: usize,
    /// `N·L_N` from the same samples.
    pub n_l: f64,
    /// Median of `|log|f_N| − log‖M_N‖|`.
    pub median_det_gap: f64,
    pub samples: usize,
    pub sampler: Sampler,
}

fn tail_fractions(dev: &[f64], thresholds: &[f64]) -> Vec<f64> {
    thresholds
        .iter()
        .map(|&t| {
            if dev.is_empty() {
                0.0
            } else {
                dev.iter().filter(|&&d| d > t).count() as f64 / dev.len() as f64
            }
        })
        .collect()
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn deviation_stats(
    model: &QuasiperiodicModel,
    energy: f64,
    n: usize,
    thresholds: &[f64],
    sampler: &Sampler,
    n_samples: usize,
) -> DeviationStats {
    assert!(n_samples >= 100, "deviation statistics need at least 100 samples");
    let pts = sampler.points(model.dim(), n_samples);
    let pairs: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|x| {
            let m = transfer(model, x, energy, n);
            let f = m.entry_log(0, 0);
            let logf = if f.0 == 0.0 { f64::NEG_INFINITY } else { f.1 };
            (m.log_norm(), logf)
        })
        .collect();
    let norms: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let n_l = pairwise_sum(&norms) / norms.len() as f64;
    let dev: Vec<f64> = norms.iter().map(|v| (v - n_l).abs()).collect();
    let good: Vec<&(f64, f64)> = pairs
        .iter()
        .filter(|p| p.1.is_finite() && p.1 >= SINGULAR_LOG_FLOOR)
        .collect();
    let det_dev: Vec<f64> = good.iter().map(|p| (p.1 - n_l).abs()).collect();
    let mut gaps: Vec<f64> = good.iter().map(|p| (p.1 - p.0).abs()).collect();
    DeviationStats {
        n,
        energy,
        thresholds: thresholds.to_vec(),
        measures: tail_fractions(&dev, thresholds),
        det_measures: tail_fractions(&det_dev, thresholds),
        det_underflow: pairs.len() - good.len(),
        n_l,
        median_det_gap: median(&mut gaps),
        samples: pairs.len(),
        sampler: sampler.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperRow {
    pub n: usize,
    pub imag_shift: Vec<f64>,
    /// `max_x log‖M_N(x+iy,E)‖` over the samples.
    pub sup: f64,
    /// `N·L_N(y,E)` from the same samples.
    pub n_l: f64,
    pub excess: f64,
    /// `S_{λV,E}·N`, the scale the slack is compared against.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformUpperReport {
    pub rows: Vec<UpperRow>,
    /// Slope of `log(excess)` against `log N`; `None` if every excess is
    /// below `1e-12` (nothing to fit).
    pub fitted_exponent: Option<f64>,
    /// `C₀` fitted as `max excess / (S·N^{exponent})`.
    pub fitted_c0: Option<f64>,
    /// Empirical `sup − N·L_N = o(N)`: fitted exponent below one.
    pub sublinear: bool,
}

/// `S_{λV,E} = log(3 + λ‖V‖∞ + |E|)`.
pub fn s_value(model: &QuasiperiodicModel, energy: f64) -> f64 {
    (3.0 + model.lambda * model.potential.sup_bound() + energy.abs()).ln()
}

/// Least squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Sup over samples of `log‖M_N(x+iy,E)‖` against `N·L_N(y,E)` at several
/// scales. With `shift_dir = Some(h)`, `y = h/(2N|h|)` at scale `N`.
pub fn uniform_upper_check(
    model: &QuasiperiodicModel,
    energy: f64,
    scales: &[usize],
    shift_dir: Option<&[f64]>,
    sampler: &Sampler,
    n_samples: usize,
) -> UniformUpperReport {
    let pts = sampler.points(model.dim(), n_samples);
    let s = s_value(model, energy);
    let rows: Vec<UpperRow> = scales
        .iter()
        .map(|&n| {
            let y: Option<Vec<f64>> = shift_dir.map(|h| {
                let len = h.iter().map(|v| v * v).sum::<f64>().sqrt();
                h.iter().map(|v| v / (2.0 * n as f64 * len)).collect()
            });
            let logs = sample_log_norms(model, energy, n, y.as_deref(), &pts);
            let sup = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let n_l = pairwise_sum(&logs) / logs.len() as f64;
            UpperRow {
                n,
                imag_shift: y.unwrap_or_else(|| vec![0.0; model.dim()]),
                sup,
                n_l,
                excess: sup - n_l,
                scale: s * n as f64,
            }
        })
        .collect();
    let fit: Vec<&UpperRow> = rows.iter().filter(|r| r.excess > 1e-12).collect();
    let fitted_exponent = if fit.len() >= 2 {
        let xs: Vec<f64> = fit.iter().map(|r| (r.n as f64).ln()).collect();
        let ys: Vec<f64> = fit.iter().map(|r| r.excess.ln()).collect();
        Some(fit_slope(&xs, &ys))
    } else {
        None
    };
    let fitted_c0 = fitted_exponent.map(|p| {
        fit.iter()
            .map(|r| r.excess / (s * (r.n as f64).powf(p)))
            .fold(0.0, f64::max)
    });
    let sublinear = match fitted_exponent {
        Some(p) => p < 1.0,
        None => rows.iter().all(|r| r.excess <= 1e-12),
    };
    UniformUpperReport {
        rows,
        fitted_exponent,
        fitted_c0,
        sublinear,
    }
}

/// `L_N` against `log λ` at large coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargeCouplingReport {
    pub estimate: LyapunovEstimate,
    pub log_lambda: f64,
    /// `|L_N − log λ|`.
    pub deviation: f64,
    /// `2(log λ)^{1/2}`.
    pub band: f64,
    /// `log λ − C₁(log λ)^{1/2}`.
    pub floor: f64,
    pub within_band: bool,
    pub above_floor: bool,
    pub median_det_gap: f64,
    /// Median `|log|f_N| − log‖M_N‖| ≤ 3(log λ)^{1/2}`.
    pub det_gap_ok: bool,
}

pub fn large_coupling_check(
    model: &QuasiperiodicModel,
    energy: f64,
    n: usize,
    sampler: &Sampler,
    n_samples: usize,
) -> LargeCouplingReport {
    let estimate = lyapunov_direct(model, energy, n, sampler, n_samples);
    let ll = model.lambda.ln();
    let root = ll.max(0.0).sqrt();
    let dev = deviation_stats(model, energy, n, &[], sampler, n_samples.max(100));
    let deviation = (estimate.value - ll).abs();
    LargeCouplingReport {
        log_lambda: ll,
        deviation,
        band: 2.0 * root,
        floor: ll - LARGE_COUPLING_C1 * root,
        within_band: deviation <= 2.0 * root,
        above_floor: estimate.value >= ll - LARGE_COUPLING_C1 * root,
        median_det_gap: dev.median_det_gap,
        det_gap_ok: dev.median_det_gap <= 3.0 * root,
        estimate,
    }
}

/// `L_N` at increasing `N` together with a fit of `L_N − L_{N_max} ≈ C·log N / N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleProfile {
    pub estimates: Vec<LyapunovEstimate>,
    pub fitted_c: f64,
}

pub fn scale_profile(
    model: &QuasiperiodicModel,
    energy: f64,
    scales: &[usize],
    sampler: &Sampler,
    n_samples: usize,
) -> ScaleProfile {
    let estimates: Vec<LyapunovEstimate> = scales
        .iter()
        .map(|&n| lyapunov_direct(model, energy, n, sampler, n_samples))
        .collect();
    let last = estimates.last().map(|e| e.value).unwrap_or(0.0);
    let (num, den) = estimates.iter().fold((0.0, 0.0), |(a, b), e| {
        let r = (e.n as f64).ln() / e.n as f64;
        (a + r * (e.value - last), b + r * r)
    });
    ScaleProfile {
        fitted_c: if den > 0.0 { num / den } else { 0.0 },
        estimates,
    }
}

/// The default frequency for a potential of dimension `d`.
pub fn default_frequency(dim: usize) -> FrequencyVector {
    if dim == 1 {
        FrequencyVector::golden()
    } else {
        FrequencyVector::default_pair()
    }
}
