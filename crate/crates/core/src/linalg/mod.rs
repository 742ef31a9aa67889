//! Dense complex linear algebra for small Hamiltonians.

mod eigen;
mod expm;
mod matrix;

use num_complex::Complex64 as C64;
use thiserror::Error;

pub use eigen::{
    biorthonormalize, biorthonormalize_with, eig_nonhermitian, eig_with_config, EigenConfig, EigenSystem,
    DEFAULT_MAX_DEFECTIVE_FRACTION, DEFECT_TOLERANCE, PAIRING_TOLERANCE,
};
pub use expm::{expm, expm_apply, expm_apply_with_limit, DEFAULT_MAX_SQUARINGS};
pub use matrix::{fix_phase, inner, norm, normalize, pair, pauli, ComplexSquareMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix has no rows")]
    EmptyMatrix,
    #[error("row {row} has {len} entries, expected {dim}")]
    NonSquare { row: usize, len: usize, dim: usize },
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("eigensolver did not converge (dim {dim}, max entry {norm:e})")]
    ConvergenceFailure { dim: usize, norm: f64 },
    #[error("no left eigenvalue within tolerance of {eigenvalue} (closest at distance {distance:e})")]
    PairingFailure { eigenvalue: C64, distance: f64 },
    #[error("{defective} of {total} eigenpairs are coalesced")]
    DefectiveSystem { defective: usize, total: usize },
    #[error("matrix exponential needs {required} squarings, limit is {limit}")]
    ScalingOverflow { required: u64, limit: u32 },
}
