//! Finite-volume operators `H_[a,b](x)`: assembly, eigenpairs, transfer
//! matrices, Dirichlet determinants and Green's functions.

mod checks;
mod cocycle;
mod det;
mod tridiag;

pub use checks::{
    covering_certificate, eigenvector_stability, eigenvector_stability_b, elementary_gap_bound,
    localization_profile, poisson_residual, spectral_barrier, BarrierReport, CoveringReport,
    EnergySet, GapBoundReport, LocalizationProfile, PoissonReport, StabilityBReport,
    StabilityReport, WindowCheck,
};
pub use cocycle::{mat_mul, op_norm, CocycleProduct, Mat2};
pub use det::{determinant, prefix_determinants, DeterminantTable, LogDet};
pub use tridiag::{fix_sign, EigenDecomposition, SymTridiagonal};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{FrequencyVector, TorusPoint};
use crate::potential::TrigPotential;

/// Windows whose determinant satisfies `log|f| < SINGULAR_LOG_FLOOR` are
/// treated as singular by the Green's function routines.
pub const SINGULAR_LOG_FLOOR: f64 = -600.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("dimension mismatch: potential has d = {potential}, frequency has d = {omega}")]
    DimensionMismatch { potential: usize, omega: usize },
    #[error("coupling must be finite and non-negative, got {0}")]
    BadCoupling(f64),
    #[error("empty interval [{a}, {b}]")]
    EmptyInterval { a: i64, b: i64 },
    #[error("index {index} outside [{a}, {b}]")]
    IndexOutOfRange { index: i64, a: i64, b: i64 },
    #[error(
        "E = {energy} is numerically in the spectrum of H_[{a},{b}]: log|f| = {log_abs}, dist(E, spec) = {dist:e}"
    )]
    SingularWindow {
        a: i64,
        b: i64,
        energy: f64,
        log_abs: f64,
        dist: f64,
    },
    #[error("no window covers site {m} with dist(m, ∂J) ≥ |J|/100")]
    CoverageGeometry { m: i64 },
    #[error("vector length {got} does not match window length {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// The triple `(V, ω, λ)` defining `H(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiperiodicModel {
    pub potential: TrigPotential,
    pub omega: FrequencyVector,
    pub lambda: f64,
}

impl QuasiperiodicModel {
    pub fn new(
        potential: TrigPotential,
        omega: FrequencyVector,
        lambda: f64,
    ) -> Result<Self, OperatorError> {
        if potential.dim() != omega.dim() {
            return Err(OperatorError::DimensionMismatch {
                potential: potential.dim(),
                omega: omega.dim(),
            });
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(OperatorError::BadCoupling(lambda));
        }
        Ok(Self {
            potential,
            omega,
            lambda,
        })
    }

    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    /// `λV(x + nω)`.
    pub fn site_potential(&self, x: &TorusPoint, n: i64) -> f64 {
        self.lambda * self.potential.value(x.translate(&self.omega, n).coords())
    }

    /// `2 + λ‖V‖∞` with `‖V‖∞` bounded by `Σ|c_m|`.
    pub fn spectral_radius_bound(&self) -> f64 {
        2.0 + self.lambda * self.potential.sup_bound()
    }

    pub fn window(
        &self,
        a: i64,
        b: i64,
        phase: TorusPoint,
        energy: f64,
    ) -> Result<OperatorWindow<'_>, OperatorError> {
        OperatorWindow::new(self, a, b, phase, energy)
    }
}

/// `H_[a,b](x)` at energy `E`.
#[derive(Debug, Clone)]
pub struct OperatorWindow<'m> {
    pub model: &'m QuasiperiodicModel,
    pub a: i64,
    pub b: i64,
    pub phase: TorusPoint,
    pub energy: f64,
}

impl<'m> OperatorWindow<'m> {
    pub fn new(
        model: &'m QuasiperiodicModel,
        a: i64,
        b: i64,
        phase: TorusPoint,
        energy: f64,
    ) -> Result<Self, OperatorError> {
        if b < a {
            return Err(OperatorError::EmptyInterval { a, b });
        }
        assert_eq!(phase.dim(), model.dim(), "phase dimension");
        Ok(Self {
            model,
            a,
            b,
            phase,
            energy,
        })
    }

    pub fn len(&self) -> usize {
        (self.b - self.a + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn with_energy(&self, energy: f64) -> Self {
        Self {
            energy,
            ..self.clone()
        }
    }

    pub fn with_interval(&self, a: i64, b: i64) -> Result<Self, OperatorError> {
        Self::new(self.model, a, b, self.phase.clone(), self.energy)
    }

    /// `λV(x + nω)` for `n = a..=b`.
    pub fn potential_values(&self) -> Vec<f64> {
        (self.a..=self.b)
            .map(|n| self.model.site_potential(&self.phase, n))
            .collect()
    }

    /// Tridiagonal `H_[a,b](x)` with Dirichlet boundary conditions.
    pub fn assemble(&self) -> SymTridiagonal {
        let n = self.len();
        SymTridiagonal::new(self.potential_values(), vec![-1.0; n - 1])
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.assemble().eigenvalues()
    }

    pub fn eigen(&self) -> EigenDecomposition {
        self.assemble().eigen()
    }

    /// `M_[a,b](x,E) = Π_{n=b..a} [[λV(x+nω) − E, −1], [1, 0]]`.
    pub fn transfer_matrix(&self) -> CocycleProduct {
        let mut p = CocycleProduct::identity();
        for v in self.potential_values() {
            p.left_mul(&CocycleProduct::factor(v - self.energy));
        }
        p
    }

    fn shifted(&self) -> Vec<f64> {
        self.potential_values()
            .into_iter()
            .map(|v| v - self.energy)
            .collect()
    }

    /// `f_[a,b](x,E)` by the three-term recursion.
    pub fn dirichlet_det(&self) -> LogDet {
        determinant(&self.shifted())
    }

    pub fn determinant_table(&self) -> DeterminantTable {
        DeterminantTable::new(self.a, &self.shifted())
    }

    /// `dist(E, spec H_[a,b](x))`.
    pub fn distance_to_spectrum(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .map(|e| (e - self.energy).abs())
            .fold(f64::INFINITY, f64::min)
    }

    fn check_index(&self, i: i64) -> Result<(), OperatorError> {
        if i < self.a || i > self.b {
            Err(OperatorError::IndexOutOfRange {
                index: i,
                a: self.a,
                b: self.b,
            })
        } else {
            Ok(())
        }
    }

    /// Green's function table, failing if the window is numerically singular.
    ///
    /// Singular means `f_[a,b] = 0`, `log|f_[a,b]| < −600`, or a diagonal
    /// Green's function entry larger than `1/(1e3·ε·(2 + max|λV − E|))`, i.e. `E`
    /// within rounding distance of an eigenvalue.
    pub fn green_table(&self) -> Result<DeterminantTable, OperatorError> {
        let shifted = self.shifted();
        let scale = 2.0 + shifted.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let table = DeterminantTable::new(self.a, &shifted);
        let full = table.full();
        let singular = full.sign() == 0 || full.log_abs() < SINGULAR_LOG_FLOOR || {
            let limit = -(1e3 * f64::EPSILON * scale).ln();
            (self.a..=self.b).any(|j| table.green_log(j, j).log_abs() > limit)
        };
        if singular {
            return Err(OperatorError::SingularWindow {
                a: self.a,
                b: self.b,
                energy: self.energy,
                log_abs: full.log_abs(),
                dist: self.distance_to_spectrum(),
            });
        }
        Ok(table)
    }

    /// `𝒢_[a,b](x,E; j,k)` in log form.
    pub fn green_log(&self, j: i64, k: i64) -> Result<LogDet, OperatorError> {
        self.check_index(j)?;
        self.check_index(k)?;
        Ok(self.green_table()?.green_log(j, k))
    }

    /// `𝒢_[a,b](x,E; j,k) = ((H_[a,b](x) − E)⁻¹)_{jk}`.
    pub fn green_entry(&self, j: i64, k: i64) -> Result<f64, OperatorError> {
        Ok(self.green_log(j, k)?.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free(d: usize) -> QuasiperiodicModel {
        let om = if d == 1 {
            FrequencyVector::golden()
        } else {
            FrequencyVector::default_pair()
        };
        QuasiperiodicModel::new(TrigPotential::zero(d), om, 1.0).unwrap()
    }

    #[test]
    fn free_assembly() {
        let m = free(1);
        let w = m.window(1, 2, TorusPoint::origin(1), 0.0).unwrap();
        let t = w.assemble();
        assert_eq!(t.diag, vec![0.0, 0.0]);
        assert_eq!(t.off, vec![-1.0]);
        let ev = w.eigenvalues();
        assert!((ev[0] + 1.0).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
        let ev3 = m.window(1, 3, TorusPoint::origin(1), 0.0).unwrap().eigenvalues();
        let r2 = 2f64.sqrt();
        for (a, b) in ev3.iter().zip([-r2, 0.0, r2]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn free_transfer_powers() {
        let m = free(1);
        let p4 = m.window(1, 4, TorusPoint::origin(1), 0.0).unwrap().transfer_matrix();
        assert_eq!(p4.mat(), [[1.0, 0.0], [0.0, 1.0]]);
        let p2 = m.window(1, 2, TorusPoint::origin(1), 0.0).unwrap().transfer_matrix();
        assert_eq!(p2.mat(), [[-1.0, 0.0], [0.0, -1.0]]);
    }

    #[test]
    fn free_green_two_sites() {
        let m = free(1);
        let w = m.window(1, 2, TorusPoint::origin(1), 0.0).unwrap();
        assert_eq!(w.green_entry(1, 2).unwrap(), -1.0);
        assert_eq!(w.green_entry(2, 1).unwrap(), -1.0);
        assert_eq!(w.green_entry(1, 1).unwrap(), 0.0);
    }

    #[test]
    fn singular_window_reports_distance() {
        let m = free(1);
        let w = m.window(1, 3, TorusPoint::origin(1), 0.0).unwrap();
        match w.green_entry(1, 1) {
            Err(OperatorError::SingularWindow { dist, .. }) => assert!(dist < 1e-14),
            other => panic!("expected singular window, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            QuasiperiodicModel::new(TrigPotential::cosine(), FrequencyVector::default_pair(), 1.0),
            Err(OperatorError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            QuasiperiodicModel::new(TrigPotential::cosine(), FrequencyVector::golden(), f64::NAN),
            Err(OperatorError::BadCoupling(_))
        ));
        let m = free(1);
        assert!(matches!(
            m.window(3, 2, TorusPoint::origin(1), 0.0),
            Err(OperatorError::EmptyInterval { .. })
        ));
    }
}
