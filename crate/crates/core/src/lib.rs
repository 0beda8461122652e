//! Numerical laboratory for quasiperiodic Schrödinger operators
//!
//! ```text
//! (H(x)ψ)(n) = −ψ(n+1) − ψ(n−1) + λ V(x + nω) ψ(n),   x ∈ 𝕋^d = ℝ^d/ℤ^d
//! ```
//!
//! Modules, bottom-up: [`lattice`] (frequencies, torus arithmetic),
//! [`potential`] (trigonometric potentials and Morse data), [`operator`]
//! (finite windows, determinants, Green's functions), [`lyapunov`]
//! (cocycle exponents and the Avalanche Principle), [`genericity`]
//! (resultants and sampled genericity checks), [`levelset`] (charts near
//! non-degenerate points), [`scan`] (spectrum scans and export) and
//! [`example9`] (the `cos x + s cos y` driver).

pub mod example9;
pub mod genericity;
pub mod lattice;
pub mod levelset;
pub mod lyapunov;
pub mod operator;
pub mod potential;
pub mod scan;
pub mod verify;

pub use lattice::{FrequencyVector, TorusPoint};
pub use operator::{OperatorWindow, QuasiperiodicModel};
pub use potential::TrigPotential;
