//! Spectrum scans over a phase grid: merged eigenvalues, interior gaps,
//! persistence across grid refinements, edge estimates and export.
//!
//! A finite window on a finite grid cannot certify that the spectrum is an
//! interval. Scans are contrast experiments: gaps that persist under grid
//! refinement are reported, everything else is treated as sampling noise.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{FrequencyVector, TorusPoint};
use crate::operator::{determinant, OperatorError, QuasiperiodicModel, SymTridiagonal};
use crate::potential::{morse_profile, PotentialError, TrigPotential};

pub const SCAN_NOTE: &str = "finite-N, finite-grid surrogate: persistent gaps are evidence \
of gaps in the spectrum, their absence is not a proof of an interval spectrum";

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("invalid scan config: {0}")]
    Config(String),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    /// `"cos+s*cos"`, `"cos"` or `"zero"`.
    pub potential: String,
    pub s: f64,
    /// Frequency preset: `"golden"` or `"sqrt2-sqrt3"`.
    pub omega: String,
    pub lambda: f64,
    /// Window `[1, N]`.
    pub n: usize,
    /// Phases per dimension.
    pub grid: usize,
    /// Minimum reported gap width; `None` uses `10·span/(N·grid^d)`.
    pub eps_gap: Option<f64>,
    /// Seeds the random offset of the phase grid.
    pub seed: u64,
    /// Drop eigenvalues whose eigenvector has `|ψ(1)|² + |ψ(N)|²` above this.
    /// Dirichlet edge states otherwise fill the gaps of localized spectra.
    pub boundary_tol: Option<f64>,
    pub out: Option<PathBuf>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            potential: "cos+s*cos".into(),
            s: 0.7,
            omega: "sqrt2-sqrt3".into(),
            lambda: 30.0,
            n: 150,
            grid: 60,
            eps_gap: None,
            seed: 0,
            boundary_tol: Some(1e-6),
            out: None,
        }
    }
}

impl ScanConfig {
    pub fn frequency(&self) -> Result<FrequencyVector, ScanError> {
        FrequencyVector::preset(&self.omega)
            .ok_or_else(|| ScanError::Config(format!("unknown omega preset {:?}", self.omega)))
    }

    pub fn model(&self) -> Result<QuasiperiodicModel, ScanError> {
        self.validate()?;
        let omega = self.frequency()?;
        let v = match self.potential.as_str() {
            "zero" => TrigPotential::zero(omega.dim()),
            name => TrigPotential::named(name, self.s)?,
        };
        Ok(QuasiperiodicModel::new(v, omega, self.lambda)?)
    }

    pub fn validate(&self) -> Result<(), ScanError> {
        if self.n < 2 {
            return Err(ScanError::Config(format!("N must be ≥ 2, got {}", self.n)));
        }
        if self.grid < 4 {
            return Err(ScanError::Config(format!("grid must be ≥ 4, got {}", self.grid)));
        }
        if let Some(e) = self.eps_gap {
            if !(e > 0.0) {
                return Err(ScanError::Config(format!("eps_gap must be positive, got {e}")));
            }
        }
        Ok(())
    }

    pub fn with_grid(&self, grid: usize) -> Self {
        Self {
            grid,
            ..self.clone()
        }
    }

    pub fn margin(&self) -> f64 {
        4.0 / self.n as f64
    }
}

/// Grid phases `offset + k/G`, `k ∈ {0..G−1}^d`, with the offset drawn from
/// `[0, 1/G)^d` using the seed.
pub fn phase_grid(dim: usize, grid: usize, seed: u64) -> Vec<TorusPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = 1.0 / grid as f64;
    let offset: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() * step).collect();
    let total = grid.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            let c: Vec<f64> = offset
                .iter()
                .map(|o| {
                    let k = idx % grid;
                    idx /= grid;
                    o + k as f64 * step
                })
                .collect();
            TorusPoint::new(&c)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub left: f64,
    pub right: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub config: ScanConfig,
    /// Sorted union over the phase grid.
    pub eigenvalues: Vec<f64>,
    /// Grid index of the phase each eigenvalue came from.
    pub phase_indices: Vec<u32>,
    /// Eigenvalues removed by the boundary-mass filter.
    pub discarded: usize,
    pub eps_gap: f64,
    pub margin: f64,
    pub gaps: Vec<Gap>,
    /// `min` and `max` of the merged eigenvalues.
    pub edge_low: f64,
    pub edge_high: f64,
    /// Filled by [`gap_persistence`], aligned with `gaps`.
    pub persistent: Vec<bool>,
    pub note: String,
}

impl ScanReport {
    pub fn persistent_gaps(&self) -> impl Iterator<Item = &Gap> {
        self.gaps
            .iter()
            .zip(&self.persistent)
            .filter(|(_, &p)| p)
            .map(|(g, _)| g)
    }

    /// Every eigenvalue within `[−2 − λ‖V‖∞, 2 + λ‖V‖∞]`.
    pub fn contained_in(&self, radius: f64) -> bool {
        self.eigenvalues.iter().all(|e| e.abs() <= radius)
    }
}

/// `log(|ψ_j(1)|² + |ψ_j(N)|²)` for every eigenvalue, from
/// `|ψ_j(1)|² = |det(H_[2,N] − E_j)| / Π_{k≠j}|E_j − E_k|` and its mirror.
pub fn boundary_log_mass(diag: &[f64], values: &[f64]) -> Vec<f64> {
    let n = diag.len();
    if n == 1 {
        return vec![0.0];
    }
    values
        .iter()
        .enumerate()
        .map(|(j, &e)| {
            let denom: f64 = values
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, &ek)| (e - ek).abs().ln())
                .sum();
            let shifted: Vec<f64> = diag.iter().map(|d| d - e).collect();
            let left = determinant(&shifted[1..]).log_abs() - denom;
            let right = determinant(&shifted[..n - 1]).log_abs() - denom;
            let m = left.max(right);
            m + (-(left - right).abs()).exp().ln_1p()
        })
        .collect()
}

fn window_matrix(model: &QuasiperiodicModel, x: &TorusPoint, n: usize) -> SymTridiagonal {
    let diag: Vec<f64> = (1..=n as i64).map(|k| model.site_potential(x, k)).collect();
    SymTridiagonal::new(diag, vec![-1.0; n - 1])
}

/// Interior gaps of a sorted list: consecutive spacings wider than `eps`
/// lying inside `[min + margin, max − margin]`.
pub fn find_gaps(sorted: &[f64], eps: f64, margin: f64) -> Vec<Gap> {
    let (Some(&lo), Some(&hi)) = (sorted.first(), sorted.last()) else {
        return vec![];
    };
    let (lo, hi) = (lo + margin, hi - margin);
    sorted
        .windows(2)
        .filter(|w| w[1] - w[0] > eps && w[0] >= lo && w[1] <= hi)
        .map(|w| Gap {
            left: w[0],
            right: w[1],
            width: w[1] - w[0],
        })
        .collect()
}

/// Diagonalizes `H_[1,N](x)` over the phase grid and reports interior gaps.
pub fn spectrum_scan(cfg: &ScanConfig) -> Result<ScanReport, ScanError> {
    let model = cfg.model()?;
    let phases = phase_grid(model.dim(), cfg.grid, cfg.seed);
    let log_tol = cfg.boundary_tol.map(f64::ln);
    let per_phase: Vec<(Vec<f64>, usize)> = phases
        .par_iter()
        .map(|x| {
            let t = window_matrix(&model, x, cfg.n);
            let values = t.eigenvalues_ql();
            match log_tol {
                None => (values, 0),
                Some(lt) => {
                    let mass = boundary_log_mass(&t.diag, &values);
                    let kept: Vec<f64> = values
                        .iter()
                        .zip(&mass)
                        .filter(|(_, &m)| m <= lt)
                        .map(|(&v, _)| v)
                        .collect();
                    let dropped = values.len() - kept.len();
                    (kept, dropped)
                }
            }
        })
        .collect();
    let discarded = per_phase.iter().map(|p| p.1).sum();
    let mut pairs: Vec<(f64, u32)> = per_phase
        .into_iter()
        .enumerate()
        .flat_map(|(i, (vals, _))| vals.into_iter().map(move |v| (v, i as u32)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (eigenvalues, phase_indices): (Vec<f64>, Vec<u32>) = pairs.into_iter().unzip();
    let edge_low = eigenvalues.first().copied().unwrap_or(f64::NAN);
    let edge_high = eigenvalues.last().copied().unwrap_or(f64::NAN);
    let span = edge_high - edge_low;
    let eps_gap = cfg.eps_gap.unwrap_or_else(|| {
        10.0 * span / (cfg.n as f64 * phases.len() as f64)
    });
    let margin = cfg.margin();
    let gaps = find_gaps(&eigenvalues, eps_gap, margin);
    Ok(ScanReport {
        config: cfg.clone(),
        persistent: vec![false; gaps.len()],
        eigenvalues,
        phase_indices,
        discarded,
        eps_gap,
        margin,
        gaps,
        edge_low,
        edge_high,
        note: SCAN_NOTE.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistentGap {
    pub left: f64,
    pub right: f64,
    pub min_width: f64,
    pub max_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceReport {
    pub levels: Vec<usize>,
    pub gap_counts: Vec<usize>,
    pub persistent: Vec<PersistentGap>,
    /// Scan at the finest level with its persistence flags set.
    pub finest: ScanReport,
}

impl PersistenceReport {
    pub fn widest(&self) -> f64 {
        self.persistent.iter().map(|g| g.min_width).fold(0.0, f64::max)
    }

    pub fn count_wider_than(&self, w: f64) -> usize {
        self.persistent.iter().filter(|g| g.min_width > w).count()
    }
}

/// Scans at each grid density. A gap of the finest scan is persistent iff
/// every level has an overlapping gap and the widths stay within a factor 2.
pub fn gap_persistence(cfg: &ScanConfig, refinements: &[usize]) -> Result<PersistenceReport, ScanError> {
    if refinements.len() < 2 {
        return Err(ScanError::Config("persistence needs at least two grid levels".into()));
    }
    let mut levels = refinements.to_vec();
    levels.sort_unstable();
    let mut reports = levels
        .iter()
        .map(|&g| spectrum_scan(&cfg.with_grid(g)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut finest = reports.pop().expect("two levels");
    let mut persistent = Vec::new();
    for (k, gap) in finest.gaps.iter().enumerate() {
        let mut widths = vec![gap.width];
        let mut present = true;
        for rep in &reports {
            let overlapping: Vec<f64> = rep
                .gaps
                .iter()
                .filter(|g| g.left < gap.right && g.right > gap.left)
                .map(|g| g.width)
                .collect();
            if overlapping.is_empty() {
                present = false;
                break;
            }
            widths.push(overlapping.into_iter().fold(0.0, f64::max));
        }
        let lo = widths.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = widths.iter().cloned().fold(0.0, f64::max);
        if present && hi <= 2.0 * lo {
            finest.persistent[k] = true;
            persistent.push(PersistentGap {
                left: gap.left,
                right: gap.right,
                min_width: lo,
                max_width: hi,
            });
        }
    }
    let mut gap_counts: Vec<usize> = reports.iter().map(|r| r.gaps.len()).collect();
    gap_counts.push(finest.gaps.len());
    Ok(PersistenceReport {
        levels,
        gap_counts,
        persistent,
        finest,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub lambda: f64,
    /// `E̲_N`, the lowest eigenvalue over the grid.
    pub edge: f64,
    pub phase: TorusPoint,
    pub min_v: f64,
    /// `|λ⁻¹E̲_N − min V|`.
    pub deviation: f64,
    /// `2λ⁻¹`.
    pub bound: f64,
    /// `Lip(V)·step/2`: the grid orbit comes within half a step of the minimizer.
    pub slack: f64,
    pub holds: bool,
}

fn lowest_eigenvalue(t: &SymTridiagonal) -> f64 {
    let (mut lo, mut hi) = t.gershgorin();
    while hi - lo > 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if t.count_below(mid) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Lowest eigenvalue over the grid against `min V`.
pub fn edge_estimate(cfg: &ScanConfig) -> Result<EdgeReport, ScanError> {
    let model = cfg.model()?;
    if model.lambda == 0.0 {
        return Err(ScanError::Config("edge estimate needs λ > 0".into()));
    }
    let phases = phase_grid(model.dim(), cfg.grid, cfg.seed);
    let lows: Vec<f64> = phases
        .par_iter()
        .map(|x| lowest_eigenvalue(&window_matrix(&model, x, cfg.n)))
        .collect();
    let (k, &edge) = lows
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty grid");
    let min_v = if model.potential.is_zero() {
        0.0
    } else {
        morse_profile(&model.potential, 64, 1e-12)?.global_min.1
    };
    let deviation = (edge / model.lambda - min_v).abs();
    let bound = 2.0 / model.lambda;
    let slack = model.potential.lipschitz_bound() * 0.5 / cfg.grid as f64;
    Ok(EdgeReport {
        lambda: model.lambda,
        edge,
        phase: phases[k].clone(),
        min_v,
        deviation,
        bound,
        slack,
        holds: deviation <= bound + slack,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

pub const CSV_HEADER: [&str; 6] = ["kind", "left", "right", "width", "level", "phase_index"];

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the report. CSV starts with `#` lines echoing the config, then one
/// row per gap and one per eigenvalue; JSON is the whole report.
pub fn export(report: &ScanReport, format: Format, path: &Path) -> Result<(), ScanError> {
    let io = |source| ScanError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, report).map_err(|source| ScanError::Json {
                path: path.to_path_buf(),
                source,
            })?;
        }
        Format::Csv => {
            let cfg = serde_json::to_string(&report.config).map_err(|source| ScanError::Json {
                path: path.to_path_buf(),
                source,
            })?;
            writeln!(w, "# config: {cfg}").map_err(io)?;
            writeln!(w, "# seed: {}", report.config.seed).map_err(io)?;
            writeln!(w, "# eps_gap: {}", num(report.eps_gap)).map_err(io)?;
            let csv_err = |source| ScanError::Csv {
                path: path.to_path_buf(),
                source,
            };
            let mut cw = csv::Writer::from_writer(&mut w);
            cw.write_record(CSV_HEADER).map_err(csv_err)?;
            let level = report.config.grid.to_string();
            for g in &report.gaps {
                cw.write_record([
                    "gap",
                    &num(g.left),
                    &num(g.right),
                    &num(g.width),
                    &level,
                    "",
                ])
                .map_err(csv_err)?;
            }
            for (v, i) in report.eigenvalues.iter().zip(&report.phase_indices) {
                cw.write_record(["eigenvalue", &num(*v), "", "", &level, &i.to_string()])
                    .map_err(csv_err)?;
            }
            cw.flush().map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn import_json(path: &Path) -> Result<ScanReport, ScanError> {
    let file = File::open(path).map_err(|source| ScanError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|source| ScanError::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn free(n: usize) -> ScanConfig {
        ScanConfig {
            potential: "zero".into(),
            omega: "golden".into(),
            lambda: 0.0,
            n,
            grid: 4,
            boundary_tol: None,
            ..ScanConfig::default()
        }
    }

    #[test]
    fn boundary_mass_matches_eigenvectors() {
        let model = ScanConfig {
            lambda: 3.0,
            ..ScanConfig::default()
        }
        .model()
        .unwrap();
        let t = window_matrix(&model, &TorusPoint::new(&[0.3, 0.8]), 30);
        let eig = t.eigen();
        let mass = boundary_log_mass(&t.diag, &eig.values);
        for (v, m) in eig.vectors.iter().zip(&mass) {
            let direct = v[0] * v[0] + v[29] * v[29];
            assert!((direct - m.exp()).abs() <= 1e-13 + 1e-8 * direct, "{direct} vs {}", m.exp());
        }
    }

    #[test]
    fn free_spectrum_has_no_gaps() {
        let n = 60;
        let cfg = ScanConfig {
            eps_gap: Some(3.0 * PI / n as f64),
            ..free(n)
        };
        let rep = spectrum_scan(&cfg).unwrap();
        assert!(rep.gaps.is_empty());
        assert!((rep.edge_low + 2.0 * (PI / (n as f64 + 1.0)).cos()).abs() < 1e-13);
        assert!(rep.contained_in(2.0));
        let p = gap_persistence(&free(n), &[4, 8]).unwrap();
        assert!(p.persistent.is_empty());
    }

    #[test]
    fn almost_mathieu_gaps_persist() {
        let cfg = ScanConfig {
            potential: "cos".into(),
            omega: "golden".into(),
            lambda: 5.0,
            n: 150,
            grid: 200,
            ..ScanConfig::default()
        };
        let p = gap_persistence(&cfg, &[200, 400, 800]).unwrap();
        assert!(p.count_wider_than(0.1) >= 2, "{:?}", p.persistent);
        // the two widest gaps sit symmetrically about 0
        let mut w: Vec<&PersistentGap> = p.persistent.iter().filter(|g| g.min_width > 1.0).collect();
        w.sort_by(|a, b| a.left.total_cmp(&b.left));
        assert_eq!(w.len(), 2);
        assert!((w[0].right + w[1].left).abs() < 0.05);
    }

    #[test]
    fn coarse_grid_artifacts_do_not_persist() {
        let cfg = ScanConfig {
            potential: "cos".into(),
            omega: "golden".into(),
            lambda: 1.0,
            n: 40,
            boundary_tol: None,
            ..ScanConfig::default()
        };
        let coarse = spectrum_scan(&cfg.with_grid(10)).unwrap();
        let fine = spectrum_scan(&cfg.with_grid(100)).unwrap();
        let eps = coarse.eps_gap;
        let spurious: Vec<&Gap> = coarse
            .gaps
            .iter()
            .filter(|g| !fine.eigenvalues.iter().any(|&e| e > g.left && e < g.right))
            .collect();
        assert!(spurious.len() < coarse.gaps.len(), "eps {eps}");
        let p = gap_persistence(&cfg, &[10, 100]).unwrap();
        for g in &p.persistent {
            assert!(!fine.eigenvalues.iter().any(|&e| e > g.left && e < g.right));
        }
    }

    #[test]
    fn gaps_are_sorted_disjoint_and_wide() {
        let cfg = ScanConfig {
            potential: "cos".into(),
            omega: "golden".into(),
            lambda: 5.0,
            n: 80,
            grid: 50,
            ..ScanConfig::default()
        };
        let rep = spectrum_scan(&cfg).unwrap();
        assert!(!rep.gaps.is_empty());
        for w in rep.gaps.windows(2) {
            assert!(w[0].right <= w[1].left);
        }
        assert!(rep.gaps.iter().all(|g| g.width > rep.eps_gap));
        let model = cfg.model().unwrap();
        assert!(rep.contained_in(model.spectral_radius_bound()));
    }

    #[test]
    fn scans_are_deterministic() {
        let cfg = ScanConfig {
            lambda: 10.0,
            n: 30,
            grid: 8,
            ..ScanConfig::default()
        };
        let a = spectrum_scan(&cfg).unwrap();
        let b = spectrum_scan(&cfg).unwrap();
        assert_eq!(a, b);
        let c = spectrum_scan(&ScanConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.eigenvalues, c.eigenvalues);
    }

    #[test]
    fn edge_bound_tightens() {
        let base = ScanConfig {
            n: 60,
            grid: 40,
            ..ScanConfig::default()
        };
        let e50 = edge_estimate(&ScanConfig { lambda: 50.0, ..base.clone() }).unwrap();
        let e200 = edge_estimate(&ScanConfig { lambda: 200.0, ..base }).unwrap();
        assert!((e50.min_v + 1.7).abs() < 1e-12);
        assert!(e50.holds && e200.holds);
        assert!(e200.bound + e200.slack < e50.bound + e50.slack);
        // H ≥ λ min V − 2
        assert!(e50.edge >= 50.0 * e50.min_v - 2.0);
    }

    #[test]
    fn free_edge_is_contained() {
        let cfg = ScanConfig {
            lambda: 7.0,
            ..free(40)
        };
        let e = edge_estimate(&cfg).unwrap();
        assert!((e.edge + 2.0 * (PI / 41.0).cos()).abs() < 1e-12);
        assert!(e.edge.abs() <= 2.0);
    }

    #[test]
    fn config_validation() {
        assert!(matches!(spectrum_scan(&free(1)), Err(ScanError::Config(_))));
        assert!(matches!(
            spectrum_scan(&ScanConfig { grid: 3, ..free(10) }),
            Err(ScanError::Config(_))
        ));
        assert!(matches!(
            spectrum_scan(&ScanConfig { omega: "nope".into(), ..free(10) }),
            Err(ScanError::Config(_))
        ));
        assert!(gap_persistence(&free(10), &[4]).is_err());
    }
}
