//! Numerical checks built on finite windows: Poisson's formula, covering
//! certificates, spectral barriers, eigenvector stability and localization.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{OperatorError, OperatorWindow, QuasiperiodicModel};
use crate::lattice::TorusPoint;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoissonReport {
    /// `|ψ(m) − 𝒢(m,a')ψ(a'−1) − 𝒢(m,b')ψ(b'+1)|`.
    pub residual: f64,
    /// `‖(H_[a,b] − E)ψ‖` on the enclosing window.
    pub eigen_residual: f64,
    pub psi_norm: f64,
    /// `dist(E, spec H_[a',b'])`; the Green's function amplifies rounding
    /// in `ψ` by up to its inverse.
    pub sub_distance: f64,
}

/// Evaluates Poisson's formula for `ψ` on the subwindow `sub` at site `m`.
///
/// `psi[i]` is `ψ(a + i)` on the window of `w`; values outside the window are
/// zero, so `sub` may touch the window edges.
pub fn poisson_residual(
    w: &OperatorWindow<'_>,
    psi: &[f64],
    sub: (i64, i64),
    m: i64,
) -> Result<PoissonReport, OperatorError> {
    if psi.len() != w.len() {
        return Err(OperatorError::LengthMismatch {
            expected: w.len(),
            got: psi.len(),
        });
    }
    let (sa, sb) = sub;
    for idx in [sa, sb, m] {
        w.check_index(idx)?;
    }
    if m < sa || m > sb {
        return Err(OperatorError::IndexOutOfRange {
            index: m,
            a: sa,
            b: sb,
        });
    }
    let at = |n: i64| -> f64 {
        if n < w.a || n > w.b {
            0.0
        } else {
            psi[(n - w.a) as usize]
        }
    };
    let sw = w.with_interval(sa, sb)?;
    let table = sw.green_table()?;
    let g_left = table.green_log(m, sa).value();
    let g_right = table.green_log(m, sb).value();
    let residual = (at(m) - g_left * at(sa - 1) - g_right * at(sb + 1)).abs();
    let eigen_residual = w.assemble().residual(psi, w.energy);
    Ok(PoissonReport {
        residual,
        eigen_residual,
        psi_norm: psi.iter().map(|v| v * v).sum::<f64>().sqrt(),
        sub_distance: sw.distance_to_spectrum(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoveringReport {
    /// Best covering value per site `m = a..=b` (`∞` if no admissible interval).
    pub values: Vec<f64>,
    /// Every value is `< 1`, which certifies `E ∉ spec H_[a,b](x)`.
    pub certified: bool,
}

/// Covering certificate with the Kronecker-delta boundary convention.
///
/// For each `m` the smallest of
/// `(1 − δ_{a,a_m})|𝒢_{I_m}(m,a_m)| + (1 − δ_{b,b_m})|𝒢_{I_m}(m,b_m)|` over the
/// supplied intervals `I_m ∋ m`, `I_m ⊂ [a,b]`, is recorded. When `I_m = [a,b]`
/// both terms are suppressed and the value is 0.
pub fn covering_certificate(
    w: &OperatorWindow<'_>,
    intervals: &[(i64, i64)],
) -> Result<CoveringReport, OperatorError> {
    let tables: Vec<_> = intervals
        .iter()
        .filter(|&&(c, d)| c <= d && c >= w.a && d <= w.b)
        .map(|&(c, d)| {
            let t = w.with_interval(c, d).and_then(|sw| sw.green_table()).ok();
            ((c, d), t)
        })
        .collect();
    let values: Vec<f64> = (w.a..=w.b)
        .map(|m| {
            tables
                .iter()
                .filter(|((c, d), _)| *c <= m && m <= *d)
                .map(|((c, d), t)| {
                    let left_edge = *c == w.a;
                    let right_edge = *d == w.b;
                    if left_edge && right_edge {
                        return 0.0;
                    }
                    let Some(t) = t else {
                        return f64::INFINITY;
                    };
                    let mut v = 0.0;
                    if !left_edge {
                        v += t.green_log(m, *c).value().abs();
                    }
                    if !right_edge {
                        v += t.green_log(m, *d).value().abs();
                    }
                    v
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let certified = values.iter().all(|&v| v < 1.0);
    Ok(CoveringReport { values, certified })
}

/// A finite union of closed energy intervals (points are degenerate intervals).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySet {
    pub intervals: Vec<(f64, f64)>,
}

impl EnergySet {
    pub fn points(pts: &[f64]) -> Self {
        Self {
            intervals: pts.iter().map(|&p| (p, p)).collect(),
        }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self {
            intervals: vec![(lo.min(hi), lo.max(hi))],
        }
    }

    pub fn dist(&self, e: f64) -> f64 {
        self.intervals
            .iter()
            .map(|&(lo, hi)| {
                if e < lo {
                    lo - e
                } else if e > hi {
                    e - hi
                } else {
                    0.0
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn dist_to_spectrum(&self, spectrum: &[f64]) -> f64 {
        spectrum
            .iter()
            .map(|&e| self.dist(e))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowCheck {
    pub interval: (i64, i64),
    pub distance: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarrierReport {
    pub windows: Vec<WindowCheck>,
    /// `dist(spec H_{J_m}(x₀), S) ≥ e^{−K}` for every window used.
    pub hypothesis_holds: bool,
    pub union: (i64, i64),
    pub union_distance: f64,
    /// `dist(spec H_J(x₀), S) ≥ ½e^{−K}` on the union.
    pub conclusion_holds: bool,
    pub threshold: f64,
}

impl BarrierReport {
    /// False only if the hypothesis held and the conclusion failed.
    pub fn consistent(&self) -> bool {
        !self.hypothesis_holds || self.conclusion_holds
    }
}

/// Spectral barrier check at a single phase `x₀`.
///
/// Every `m ∈ core` must lie in some window `J = [c,d]` from `windows` with
/// `min(m − c, d − m) ≥ |J|/100`; the windows so selected are checked against
/// `S` individually and their union is diagonalised directly.
pub fn spectral_barrier(
    model: &QuasiperiodicModel,
    phase: &TorusPoint,
    core: (i64, i64),
    windows: &[(i64, i64)],
    s: &EnergySet,
    k: f64,
) -> Result<BarrierReport, OperatorError> {
    let (a, b) = core;
    if b < a {
        return Err(OperatorError::EmptyInterval { a, b });
    }
    let mut used: Vec<(i64, i64)> = Vec::new();
    for m in a..=b {
        let found = windows.iter().find(|&&(c, d)| {
            let len = (d - c + 1) as f64;
            c <= m && m <= d && ((m - c).min(d - m) as f64) >= len / 100.0
        });
        match found {
            Some(&j) => {
                if !used.contains(&j) {
                    used.push(j);
                }
            }
            None => return Err(OperatorError::CoverageGeometry { m }),
        }
    }
    used.sort_unstable();
    let threshold = (-k).exp();
    let checks: Vec<WindowCheck> = used
        .iter()
        .map(|&(c, d)| {
            let w = OperatorWindow::new(model, c, d, phase.clone(), 0.0)?;
            let distance = s.dist_to_spectrum(&w.eigenvalues());
            Ok(WindowCheck {
                interval: (c, d),
                distance,
                passes: distance >= threshold,
            })
        })
        .collect::<Result<_, OperatorError>>()?;
    let union = (
        used.iter().map(|j| j.0).min().expect("nonempty"),
        used.iter().map(|j| j.1).max().expect("nonempty"),
    );
    let uw = OperatorWindow::new(model, union.0, union.1, phase.clone(), 0.0)?;
    let union_distance = s.dist_to_spectrum(&uw.eigenvalues());
    Ok(BarrierReport {
        hypothesis_holds: checks.iter().all(|c| c.passes),
        windows: checks,
        union,
        union_distance,
        conclusion_holds: union_distance >= 0.5 * threshold,
        threshold,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    /// `ε = ‖(A − E)φ‖`.
    pub epsilon: f64,
    pub nearest_eigenvalue: f64,
    /// The nearest eigenvalue lies in `[E − ε√2, E + ε√2]`.
    pub eigenvalue_ok: bool,
    /// Largest `|⟨φ, ψ⟩|` over eigenvectors with eigenvalue within `ε√2`.
    pub max_overlap: f64,
    /// `(2N)^{−1/2}`.
    pub overlap_bound: f64,
    pub overlap_ok: bool,
}

fn residual_norm(a: &DMatrix<f64>, phi: &DVector<f64>, e: f64) -> f64 {
    (a * phi - phi * e).norm()
}

fn sorted_eigen(a: &DMatrix<f64>) -> (Vec<f64>, Vec<DVector<f64>>) {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    (
        idx.iter().map(|&i| eig.eigenvalues[i]).collect(),
        idx.iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect(),
    )
}

/// Eigenvalue and overlap conclusions for an approximate eigenvector `φ`.
///
/// Uses a dense symmetric eigensolver; intended for moderate `N`.
pub fn eigenvector_stability(a: &DMatrix<f64>, phi: &[f64], e: f64) -> StabilityReport {
    let n = a.nrows();
    let phi = DVector::from_column_slice(phi).normalize();
    let epsilon = residual_norm(a, &phi, e);
    let (vals, vecs) = sorted_eigen(a);
    let nearest = vals
        .iter()
        .copied()
        .min_by(|x, y| (x - e).abs().total_cmp(&(y - e).abs()))
        .expect("nonempty matrix");
    let radius = epsilon * 2f64.sqrt();
    // A few ulps of slack so that exact eigenvectors (ε = 0) are accepted.
    let slack = 8.0 * f64::EPSILON * (1.0 + a.amax()) * n as f64;
    let max_overlap = vals
        .iter()
        .zip(&vecs)
        .filter(|(v, _)| (*v - e).abs() <= radius + slack)
        .map(|(_, psi)| psi.dot(&phi).abs())
        .fold(0.0, f64::max);
    let overlap_bound = (2.0 * n as f64).powf(-0.5);
    StabilityReport {
        epsilon,
        nearest_eigenvalue: nearest,
        eigenvalue_ok: (nearest - e).abs() <= radius + slack,
        max_overlap,
        overlap_bound,
        overlap_ok: max_overlap >= overlap_bound,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityBReport {
    pub epsilon: f64,
    pub eta: f64,
    pub eigenvalue: f64,
    /// `min_± ‖φ ∓ ψ‖`.
    pub distance: f64,
    /// `√2 ε / η`.
    pub bound: f64,
    pub holds: bool,
}

/// Part (b): if at most one eigenvalue lies in `(E − η, E + η)` and `η > ε`,
/// the corresponding eigenvector is within `√2ε/η` of `φ`. Returns `None`
/// when the hypothesis fails.
pub fn eigenvector_stability_b(
    a: &DMatrix<f64>,
    phi: &[f64],
    e: f64,
    eta: f64,
) -> Option<StabilityBReport> {
    let phi = DVector::from_column_slice(phi).normalize();
    let epsilon = residual_norm(a, &phi, e);
    if eta <= epsilon {
        return None;
    }
    let (vals, vecs) = sorted_eigen(a);
    let inside: Vec<usize> = (0..vals.len())
        .filter(|&i| (vals[i] - e).abs() < eta)
        .collect();
    if inside.len() != 1 {
        return None;
    }
    let i = inside[0];
    let psi = &vecs[i];
    let distance = (&phi - psi).norm().min((&phi + psi).norm());
    let bound = 2f64.sqrt() * epsilon / eta;
    Some(StabilityBReport {
        epsilon,
        eta,
        eigenvalue: vals[i],
        distance,
        bound,
        holds: distance < bound || (epsilon == 0.0 && distance <= 1e-12),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalizationProfile {
    pub sites: Vec<i64>,
    /// `log|ψ_j(n)|` per site (`−∞` for exact zeros).
    pub log_abs: Vec<f64>,
    pub peak: i64,
    pub eigenvalue: f64,
    /// Least-squares slope of `log|ψ|` against `|n − peak|` over sites with
    /// `|ψ| > 1e-14`.
    pub decay_rate: f64,
    pub fitted_sites: usize,
}

/// Decay profile of the `j`-th eigenvector (ascending order) of the window.
pub fn localization_profile(w: &OperatorWindow<'_>, j: usize) -> LocalizationProfile {
    let t = w.assemble();
    let values = t.eigenvalues();
    let psi = t
        .eigenvectors(&values)
        .into_iter()
        .nth(j)
        .expect("eigenvector index in range");
    let sites: Vec<i64> = (w.a..=w.b).collect();
    let log_abs: Vec<f64> = psi.iter().map(|v| v.abs().ln()).collect();
    let ipeak = (0..psi.len())
        .max_by(|&x, &y| psi[x].abs().total_cmp(&psi[y].abs()))
        .expect("nonempty");
    let peak = sites[ipeak];
    let pts: Vec<(f64, f64)> = sites
        .iter()
        .zip(&psi)
        .filter(|(_, v)| v.abs() > 1e-14)
        .map(|(&n, v)| ((n - peak).abs() as f64, v.abs().ln()))
        .collect();
    let decay_rate = slope(&pts);
    LocalizationProfile {
        sites,
        log_abs,
        peak,
        eigenvalue: values[j],
        decay_rate,
        fitted_sites: pts.len(),
    }
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return 0.0;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapBoundReport {
    pub windows: Vec<(i64, i64)>,
    pub distances: Vec<f64>,
    /// `dist(E, spec)` at the largest window.
    pub certified_bound: f64,
}

/// Records `dist(E, spec H_[−N',N''](x))` along a growing sequence of
/// windows; the last entry is reported as the gap lower bound.
pub fn elementary_gap_bound(
    model: &QuasiperiodicModel,
    phase: &TorusPoint,
    energy: f64,
    windows: &[(i64, i64)],
) -> Result<GapBoundReport, OperatorError> {
    let distances = windows
        .iter()
        .map(|&(a, b)| {
            Ok(OperatorWindow::new(model, a, b, phase.clone(), energy)?.distance_to_spectrum())
        })
        .collect::<Result<Vec<f64>, OperatorError>>()?;
    let largest = (0..windows.len())
        .max_by_key(|&i| windows[i].1 - windows[i].0)
        .map_or(f64::NAN, |i| distances[i]);
    Ok(GapBoundReport {
        windows: windows.to_vec(),
        distances,
        certified_bound: largest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::FrequencyVector;
    use crate::potential::TrigPotential;

    fn model(lambda: f64) -> QuasiperiodicModel {
        QuasiperiodicModel::new(
            TrigPotential::cos_sum(0.7),
            FrequencyVector::default_pair(),
            lambda,
        )
        .unwrap()
    }

    #[test]
    fn full_window_at_its_own_eigenvalue_is_singular() {
        let m = model(30.0);
        let x = TorusPoint::new(&[0.13, 0.71]);
        let w = m.window(1, 30, x, 0.0).unwrap();
        let dec = w.eigen();
        for j in [0, 7, 15, 29] {
            let ww = w.with_energy(dec.values[j]);
            assert!(matches!(
                poisson_residual(&ww, &dec.vectors[j], (1, 30), 1),
                Err(OperatorError::SingularWindow { .. })
            ));
        }
    }

    #[test]
    fn poisson_interior_subwindow() {
        let m = model(30.0);
        let w = m.window(1, 40, TorusPoint::new(&[0.37, 0.05]), 0.0).unwrap();
        let dec = w.eigen();
        let mut checked = 0;
        for j in [3, 10, 20, 27, 33] {
            let ww = w.with_energy(dec.values[j]);
            for (sub, site) in [((5, 18), 9), ((10, 35), 30), ((2, 39), 20), ((21, 28), 25)] {
                let rep = match poisson_residual(&ww, &dec.vectors[j], sub, site) {
                    Ok(r) => r,
                    Err(OperatorError::SingularWindow { dist, .. }) => {
                        assert!(dist < 1e-9);
                        continue;
                    }
                    Err(e) => panic!("{e}"),
                };
                assert!(rep.eigen_residual < 1e-10);
                if rep.sub_distance > 1e-3 {
                    assert!(rep.residual <= 1e-8 * rep.psi_norm, "{rep:?}");
                    checked += 1;
                }
            }
        }
        assert!(checked >= 8);
    }

    #[test]
    fn covering_certifies_off_spectrum_energy() {
        let m = model(50.0);
        let w = m.window(1, 30, TorusPoint::new(&[0.2, 0.6]), -100.0).unwrap();
        let intervals: Vec<(i64, i64)> = (1..=30).map(|c| (c, (c + 4).min(30))).collect();
        let rep = covering_certificate(&w, &intervals).unwrap();
        assert!(rep.certified);
        assert!(w.distance_to_spectrum() > 0.0);
    }

    #[test]
    fn covering_full_interval_is_vacuous() {
        let m = model(1.0);
        let w = m.window(1, 5, TorusPoint::new(&[0.2, 0.6]), 0.3).unwrap();
        let rep = covering_certificate(&w, &[(1, 5)]).unwrap();
        assert!(rep.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn barrier_single_window_and_planted_failure() {
        let m = model(50.0);
        let x = TorusPoint::new(&[0.31, 0.42]);
        let s = EnergySet::points(&[50.0 * -1.7 - 1.0]);
        let single = spectral_barrier(&m, &x, (3, 18), &[(1, 20)], &s, 3.0).unwrap();
        assert_eq!(single.union, (1, 20));
        assert_eq!(single.union_distance, single.windows[0].distance);
        assert!(single.hypothesis_holds && single.conclusion_holds);
        // the edge sites of a window are never admissible centres
        assert!(matches!(
            spectral_barrier(&m, &x, (1, 20), &[(1, 20)], &s, 3.0),
            Err(OperatorError::CoverageGeometry { m: 1 })
        ));

        let windows: Vec<(i64, i64)> = (0..6).map(|i| (-10 + 8 * i, 6 + 8 * i)).collect();
        let rep = spectral_barrier(&m, &x, (1, 40), &windows, &s, 3.0).unwrap();
        assert!(rep.consistent());
        let ev = OperatorWindow::new(&m, windows[2].0, windows[2].1, x.clone(), 0.0)
            .unwrap()
            .eigenvalues();
        let planted = EnergySet::points(&[ev[4]]);
        let bad = spectral_barrier(&m, &x, (1, 40), &windows, &planted, 3.0).unwrap();
        assert!(!bad.hypothesis_holds);
    }

    #[test]
    fn stability_exact_and_perturbed() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, -1.0]);
        let (vals, vecs) = sorted_eigen(&a);
        let rep = eigenvector_stability(&a, vecs[1].as_slice(), vals[1]);
        assert!(rep.epsilon < 1e-14);
        assert!((rep.nearest_eigenvalue - vals[1]).abs() < 1e-14);
        assert!(rep.eigenvalue_ok && rep.overlap_ok);
    }

    #[test]
    fn stability_part_b_two_level() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let phi = [1.0, 0.01];
        let rep = eigenvector_stability_b(&a, &phi, 0.0, 0.9).unwrap();
        assert!(rep.holds, "{rep:?}");
        assert!(eigenvector_stability_b(&a, &phi, 0.5, 0.9).is_none());
    }

    #[test]
    fn free_profile_has_no_decay() {
        let m = QuasiperiodicModel::new(TrigPotential::cosine(), FrequencyVector::golden(), 0.0).unwrap();
        let w = m.window(-20, 20, TorusPoint::origin(1), 0.0).unwrap();
        let p = localization_profile(&w, 0);
        assert!(p.decay_rate.abs() < 0.2, "{}", p.decay_rate);
    }

    #[test]
    fn gap_bound_records_each_window() {
        let m = model(30.0);
        let x = TorusPoint::new(&[0.1, 0.2]);
        let rep = elementary_gap_bound(&m, &x, -200.0, &[(-5, 5), (-10, 10), (-20, 20)]).unwrap();
        assert_eq!(rep.distances.len(), 3);
        assert_eq!(rep.certified_bound, rep.distances[2]);
        assert!(rep.certified_bound > 0.0);
    }
}
