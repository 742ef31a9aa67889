//! Non-Hermitian adiabatic quantum optimization.
//!
//! The crate builds annealing Hamiltonians `f0(s) H0 + (f1(s) - i f2(s)) H1`,
//! tracks their complex spectra along the dimensionless time `s = t / tau`,
//! reduces the dynamics near the minimum gap to an effective two-level
//! model, integrates the (adjoint) Schrodinger equation, and evaluates
//! adiabatic runtime criteria.
//!
//! Energies are measured in units of the user's coupling scale `J*` and
//! `hbar = 1`.

pub mod adiabatic;
pub mod evolve;
pub mod linalg;
pub mod model;
pub mod reduction;
pub mod spectrum;

pub use num_complex::Complex64 as C64;
