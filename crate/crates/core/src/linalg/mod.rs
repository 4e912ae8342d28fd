//! Dense complex linear algebra: matrices, a Jacobi eigensolver, joint
//! diagonalization of commuting normal families, Gram–Schmidt and commutants.

mod commutant;
mod eig;
mod joint;
mod matrix;
mod subspace;

use thiserror::Error;

pub use commutant::{commutant, commutant_solve, commutant_solve_with, OperatorSpace};
pub use eig::{hermitian_eig, hermitian_eig_with, normalize_phase, operator_norm, HermitianEig};
pub use joint::{joint_diagonalize, joint_diagonalize_with, label_cmp, label_distance, JointSpectrum};
pub use matrix::{inner, norm, CMatrix, C64};
pub use subspace::{orthonormalize, Subspace};

pub(crate) use matrix::{ONE, ZERO};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not Hermitian (asymmetry {defect:e})")]
    NonHermitian { defect: f64 },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    DidNotConverge { sweeps: usize, off_norm: f64 },
    #[error("matrices {first} and {second} do not commute (commutator norm {norm:e})")]
    NotCommuting { first: usize, second: usize, norm: f64 },
    #[error("matrix {index} is not normal (defect {defect:e})")]
    NotNormal { index: usize, defect: f64 },
    #[error("basis is not orthonormal (defect {defect:e})")]
    NotOrthonormal { defect: f64 },
    #[error("empty matrix family")]
    Empty,
}
