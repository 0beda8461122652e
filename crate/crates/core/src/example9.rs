//! The four genericity conditions checked end to end for `V = cos(2πx) + s·cos(2πy)`.
//!
//! Conditions (i)/(ii) come from the Morse profile, (iii)/(iv) from sampled
//! slice checks over fixed panels of shifts and `(η, h₀)` pairs. The panels
//! include the axis-aligned shifts and the directions `h₀ ∝ (±1, 1)` at
//! `η = 0` that are known to fail at `s = ±1`.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::genericity::{
    check_condition_iii, check_condition_iv, GenericityConstants, GenericityError,
    GenericityReport, SliceSampling, ANTIPODAL_SHIFT,
};
use crate::potential::{morse_profile, PotentialError, TrigPotential};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Example9Options {
    pub sampling: SliceSampling,
    pub consts: GenericityConstants,
    /// Seed for the random part of the shift panel.
    pub seed: u64,
    /// Grid per dimension for the critical point search.
    pub morse_grid: usize,
    /// Random shifts in the (iii) panel.
    pub random_shifts: usize,
}

impl Default for Example9Options {
    fn default() -> Self {
        Self {
            sampling: SliceSampling::default(),
            consts: GenericityConstants::default(),
            seed: 9,
            morse_grid: 64,
            random_shifts: 20,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Example9Error {
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Genericity(#[from] GenericityError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub pass: bool,
    pub checks: usize,
    pub worst_bad_fraction: f64,
    /// Smallest slice minimum over the whole panel.
    pub min_value: f64,
    pub failures: Vec<GenericityReport>,
}

fn summarize(reports: &[GenericityReport]) -> ConditionSummary {
    ConditionSummary {
        pass: reports.iter().all(|r| r.pass),
        checks: reports.len(),
        worst_bad_fraction: reports.iter().map(|r| r.bad_fraction).fold(0.0, f64::max),
        min_value: reports.iter().map(|r| r.min_value).fold(f64::INFINITY, f64::min),
        failures: reports.iter().filter(|r| !r.pass).cloned().collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example9Report {
    pub s: f64,
    pub k: f64,
    /// (i): every critical point non-degenerate.
    pub condition_i: bool,
    /// (ii): each global extremum attained once.
    pub condition_ii: bool,
    pub critical_points: usize,
    pub condition_iii: ConditionSummary,
    pub condition_iv: ConditionSummary,
    pub iii_reports: Vec<GenericityReport>,
    pub iv_reports: Vec<GenericityReport>,
    /// Condition (iii) at the shift `(1/2, 1/2)`, where `V(x+h) = −V(x)`.
    /// Reported separately and not part of `all_pass`.
    pub antipodal: GenericityReport,
    pub all_pass: bool,
    pub note: String,
}

/// Shifts for condition (iii), in torus units: random shifts with norm in
/// `[exp(−𝔠₀K)/2π, 1/2]`, then axis-aligned and nearly axis-aligned ones.
pub fn shift_panel(k: f64, consts: &GenericityConstants, n_random: usize, seed: u64) -> Vec<[f64; 2]> {
    let r_min = (-consts.c0 * k).exp() / TAU;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<[f64; 2]> = (0..n_random)
        .map(|_| {
            let r = rng.gen_range(r_min..0.5);
            let t = rng.gen_range(0.0..TAU);
            [r * t.cos(), r * t.sin()]
        })
        .collect();
    let small = 1e-4;
    out.extend([
        [r_min * 1.001, 0.0],
        [0.0, r_min * 1.001],
        [0.25, 0.0],
        [0.0, 0.25],
        [0.25, small],
        [small, 0.25],
    ]);
    out
}

/// `(η, h₀)` pairs for condition (iv): the critical values `±1 ± s` with
/// axis directions, the diagonal directions at `η = 0`, and two generic pairs.
pub fn level_panel(s: f64) -> Vec<(f64, [f64; 2])> {
    let d = 0.5f64.sqrt();
    vec![
        (0.0, [d, d]),
        (0.0, [-d, d]),
        (1.0 + s, [1.0, 0.0]),
        (-1.0 - s, [0.0, 1.0]),
        (1.0 - s, [1.0, 0.0]),
        (s - 1.0, [0.0, 1.0]),
        (0.3, [0.6, 0.8]),
        (-0.45, [(PI / 7.0).cos(), (PI / 7.0).sin()]),
    ]
}

pub fn verify_example(s: f64, k: f64, opts: &Example9Options) -> Result<Example9Report, Example9Error> {
    let v = TrigPotential::cos_sum(s);
    let profile = morse_profile(&v, opts.morse_grid, 1e-12)?;
    let mut iii = Vec::new();
    for h in shift_panel(k, &opts.consts, opts.random_shifts, opts.seed) {
        for (i, j) in [(0, 1), (1, 0)] {
            iii.push(check_condition_iii(&v, k, &h, i, j, opts.sampling, &opts.consts)?);
        }
    }
    let mut iv = Vec::new();
    for (eta, h0) in level_panel(s) {
        for i in 0..2 {
            iv.push(check_condition_iv(&v, k, eta, &h0, i, opts.sampling, &opts.consts)?);
        }
    }
    let antipodal =
        check_condition_iii(&v, k, &ANTIPODAL_SHIFT, 0, 1, opts.sampling, &opts.consts)?;
    let condition_i = profile.is_morse();
    let condition_ii = profile.unique_extrema && condition_i;
    let condition_iii = summarize(&iii);
    let condition_iv = summarize(&iv);
    let all_pass = condition_i && condition_ii && condition_iii.pass && condition_iv.pass;
    Ok(Example9Report {
        s,
        k,
        condition_i,
        condition_ii,
        critical_points: profile.critical_points.len(),
        condition_iii,
        condition_iv,
        iii_reports: iii,
        iv_reports: iv,
        antipodal,
        all_pass,
        note: crate::genericity::SURROGATE_NOTE.to_string(),
    })
}
