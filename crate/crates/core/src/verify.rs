//! The invariant suite behind `quasiperiodic verify`: reduced-size versions
//! of the identity, oracle and contrast checks, each reported pass/fail.

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::example9::{verify_example, Example9Options};
use crate::genericity::{
    example_c8, example_r1_coefficients, example_r2_closed_form, example_r2_coefficients,
    SliceSampling,
};
use crate::lattice::{FrequencyVector, TorusPoint};
use crate::levelset::{build_chart, chart_grid_check, cosine_ground_state, DiagonalQuadratic};
use crate::lyapunov::{
    avalanche_expand, direct_log_norm, large_coupling_check, random_hyperbolic_blocks, Sampler,
    AP_CONSTANT,
};
use crate::operator::{localization_profile, QuasiperiodicModel};
use crate::potential::TrigPotential;
use crate::scan::{edge_estimate, ScanConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn timed(name: &str, f: impl FnOnce() -> (bool, String)) -> Check {
    let t = Instant::now();
    let (pass, detail) = f();
    Check {
        name: name.to_string(),
        pass,
        detail,
        seconds: t.elapsed().as_secs_f64(),
    }
}

fn model(lambda: f64) -> QuasiperiodicModel {
    QuasiperiodicModel::new(TrigPotential::cos_sum(0.7), FrequencyVector::default_pair(), lambda)
        .expect("valid model")
}

fn rel_log_gap((sa, la): (f64, f64), (sb, lb): (f64, f64)) -> f64 {
    if sa == 0.0 && sb == 0.0 {
        0.0
    } else if sa != sb {
        f64::INFINITY
    } else {
        (la - lb).abs()
    }
}

pub fn transfer_identity(seed: u64, windows: usize) -> Check {
    timed("transfer matrix entries are Dirichlet determinants", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let mut worst_det: f64 = 0.0;
        for k in 0..windows {
            let m = model([0.0, 1.0, 100.0][k % 3]);
            let n: i64 = rng.gen_range(2..=200);
            let a: i64 = rng.gen_range(-50..50);
            let x = TorusPoint::new(&[rng.gen(), rng.gen()]);
            let e = rng.gen_range(-3.0..3.0) * (1.0 + m.lambda);
            let w = m.window(a, a + n - 1, x, e).expect("window");
            let p = w.transfer_matrix();
            worst_det = worst_det.max(p.det_defect());
            let t = w.determinant_table();
            let b = w.b;
            let log = |d: crate::operator::LogDet| (f64::from(d.sign()), d.log_abs());
            let neg = |(s, l): (f64, f64)| (-s, l);
            let inner = w
                .with_interval(a + 1, b - 1)
                .map(|v| v.dirichlet_det())
                .unwrap_or(crate::operator::LogDet::ONE);
            let expect = [
                [log(t.full()), neg(log(t.right(a + 1)))],
                [log(t.left(b - 1)), neg(log(inner))],
            ];
            for i in 0..2 {
                for j in 0..2 {
                    worst = worst.max(rel_log_gap(p.entry_log(i, j), expect[i][j]));
                }
            }
        }
        (
            worst <= 1e-9 && worst_det <= 1e-9,
            format!("max log-gap {worst:.2e}, max det defect {worst_det:.2e}"),
        )
    })
}

pub fn green_vs_dense(seed: u64, windows: usize) -> Check {
    timed("Green's function by Cramer's rule matches the dense inverse", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let mut used = 0;
        while used < windows {
            let m = model([1.0, 10.0][used % 2]);
            let n: i64 = rng.gen_range(2..=50);
            let x = TorusPoint::new(&[rng.gen(), rng.gen()]);
            let e = rng.gen_range(-3.0..3.0) * (1.0 + m.lambda);
            let w = m.window(1, n, x, e).expect("window");
            if w.distance_to_spectrum() <= 1e-3 {
                continue;
            }
            used += 1;
            let dense = w.assemble().to_dense() - DMatrix::identity(n as usize, n as usize) * e;
            let inv = dense.try_inverse().expect("invertible");
            let g = w.green_table().expect("regular window");
            let scale = inv.amax();
            for j in 1..=n {
                for k in 1..=n {
                    let a = g.green_log(j, k).value();
                    let b = inv[((j - 1) as usize, (k - 1) as usize)];
                    worst = worst.max((a - b).abs() / scale);
                }
            }
        }
        (worst <= 1e-8, format!("max relative error {worst:.2e}"))
    })
}

pub fn avalanche_blocks(seed: u64, sequences: usize) -> Check {
    timed("avalanche expansion within 10n/μ of the direct product", || {
        let (n, mu) = (100, 1e6);
        let mut worst_ratio: f64 = 0.0;
        for k in 0..sequences {
            let blocks = random_hyperbolic_blocks(n, 10.0 * mu, seed + k as u64);
            match avalanche_expand(&blocks, mu) {
                Ok(exp) => {
                    let err = (exp.estimate - direct_log_norm(&blocks)).abs();
                    worst_ratio = worst_ratio.max(err / (AP_CONSTANT * n as f64 / mu));
                }
                Err(h) => return (false, format!("hypotheses failed: {h:?}")),
            }
        }
        (worst_ratio <= 1.0, format!("max error / bound {worst_ratio:.2e}"))
    })
}

pub fn large_coupling(seed: u64, samples: usize) -> Check {
    timed("L_N within 2(log λ)^{1/2} of log λ", || {
        let mut ok = true;
        let mut detail = Vec::new();
        for ll in [5.0f64, 7.0] {
            let r = large_coupling_check(&model(ll.exp()), 0.0, 50, &Sampler::Kronecker { seed }, samples);
            ok &= r.within_band;
            detail.push(format!("log λ = {ll}: |L_N − log λ| = {:.3} (band {:.3})", r.deviation, r.band));
        }
        (ok, detail.join("; "))
    })
}

pub fn resultant_closed_forms(seed: u64, draws: usize) -> Check {
    timed("two-frequency resultant coefficients match their closed forms", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..draws {
            let s = rng.gen_range(0.1..2.0);
            let a = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
            let b = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
            let c1 = example_r1_coefficients(a, b, s).expect("unimodular");
            let c8 = example_c8(a, b, s);
            worst = worst.max((c1[8] - c8).norm() / c8.norm().max(1e-300));
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            let (alpha, beta) = (t.cos(), t.sin());
            let eta = rng.gen_range(-1.5..1.5);
            let c2 = example_r2_coefficients(alpha, beta, eta, s).expect("unit direction");
            let closed = example_r2_closed_form(alpha, eta, s);
            for k in 2..=6 {
                let scale = closed[k].abs().max(1e-12);
                worst = worst.max((c2[k].re - closed[k]).abs() / scale);
            }
        }
        (worst <= 1e-9, format!("max relative error {worst:.2e}"))
    })
}

pub fn localized_eigenpair() -> Check {
    timed("ground state at a potential minimum is localized", || {
        let m = model(100.0);
        let w = m.window(-20, 20, TorusPoint::new(&[0.5, 0.5]), 0.0).expect("window");
        let p = localization_profile(&w, 0);
        let v = m.potential.value(&[0.5, 0.5]);
        let dev = (p.eigenvalue / m.lambda - v).abs();
        let rate_bound = -(m.lambda.ln()) / 2.0 + 0.5;
        (
            dev <= 2.0 / m.lambda && p.decay_rate <= rate_bound && p.peak == 0,
            format!("|E/λ − V| = {dev:.2e}, decay {:.3} (bound {rate_bound:.3})", p.decay_rate),
        )
    })
}

pub fn level_set_charts() -> Check {
    timed("level-set charts solve to 1e-10 within the g-bound", || {
        let circle = DiagonalQuadratic::norm_squared(2);
        let c = build_chart(&circle, &[0.1, 0.0], 1.0).expect("chart");
        let r1 = chart_grid_check(&circle, &c, 32, 1e-12);
        let f = match cosine_ground_state(0.7, 100.0, 20) {
            Ok(f) => f,
            Err(e) => return (false, e.to_string()),
        };
        let c2 = build_chart(&f, &[0.02, 0.01], 1.0).expect("chart");
        let r2 = chart_grid_check(&f, &c2, 32, 1e-12);
        (
            r1.passes(1e-10) && r2.passes(1e-10),
            format!(
                "circle: residual {:.1e}, bound ratio {:.2}; ground state: residual {:.1e}, bound ratio {:.2}",
                r1.max_residual, r1.worst_bound_ratio, r2.max_residual, r2.worst_bound_ratio
            ),
        )
    })
}

pub fn edges() -> Check {
    timed("lowest eigenvalue within 2/λ + slack of λ·min V", || {
        let mut ok = true;
        let mut last = f64::INFINITY;
        let mut detail = Vec::new();
        for lambda in [50.0, 200.0] {
            let cfg = ScanConfig {
                lambda,
                n: 100,
                grid: 32,
                ..ScanConfig::default()
            };
            match edge_estimate(&cfg) {
                Ok(e) => {
                    ok &= e.holds && e.bound + e.slack < last;
                    last = e.bound + e.slack;
                    detail.push(format!("λ = {lambda}: deviation {:.2e} ≤ {:.2e}", e.deviation, e.bound + e.slack));
                }
                Err(e) => return (false, e.to_string()),
            }
        }
        (ok, detail.join("; "))
    })
}

pub fn example_dichotomy() -> Check {
    timed("cosine family: generic at s = 0.7, (i) fails at s = 0, (iv) fails at s = 1", || {
        let opts = Example9Options {
            sampling: SliceSampling { outer: 128, inner: 256 },
            random_shifts: 4,
            ..Example9Options::default()
        };
        let run = |s| verify_example(s, 8.0, &opts);
        match (run(0.7), run(0.0), run(1.0)) {
            (Ok(a), Ok(b), Ok(c)) => (
                a.all_pass && !b.condition_i && !c.condition_iv.pass,
                format!(
                    "s = 0.7 all pass: {}; s = 0 (i): {}; s = 1 (iv): {}",
                    a.all_pass, b.condition_i, c.condition_iv.pass
                ),
            ),
            (a, b, c) => (false, format!("{:?} {:?} {:?}", a.err(), b.err(), c.err())),
        }
    })
}

/// Runs every check of the suite.
pub fn run_suite(seed: u64) -> SuiteReport {
    SuiteReport {
        seed,
        checks: vec![
            transfer_identity(seed, 300),
            green_vs_dense(seed, 100),
            avalanche_blocks(seed, 20),
            large_coupling(seed, 2000),
            resultant_closed_forms(seed, 50),
            localized_eigenpair(),
            level_set_charts(),
            edges(),
            example_dichotomy(),
        ],
    }
}
