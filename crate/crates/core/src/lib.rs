//! Finite-scale locally Hilbert spaces.
//!
//! Levels are finite-dimensional and index sets are finite chains `1..L`
//! (stored 0-based). Modules, bottom up:
//!
//! - [`linalg`]: dense complex kernels (Jacobi eigensolver, joint diagonalization, commutants).
//! - [`measure`]: chains of finite measurable spaces, the limit σ-algebra and limit measure.
//! - [`hilbert`]: chains of coordinate Hilbert spaces and locally bounded operators.
//! - [`direct_integral`]: direct integrals of locally Hilbert spaces over atoms.
//! - [`decomposition`]: decomposable and diagonalizable operators, their algebras and commutants.
//! - [`disintegration`]: recovery of a direct-integral model from an abelian algebra.

pub mod decomposition;
pub mod direct_integral;
pub mod disintegration;
pub mod hilbert;
pub mod linalg;
pub mod measure;
pub mod tolerance;

pub use decomposition::{
    classify, Classification, DecomposableOperator, DecompositionError, DiagonalizableOperator, LevelAlgebra,
};
pub use disintegration::{
    build_fibers, build_isometry, build_spectrum, disintegrate, label_name, rn_density, verify_conjugation, AbelianPresentation,
    ConjugationReport, DisintegrationError, DisintegrationResult, SpectralFibers, SpectralPoint, SpectrumModel,
};
pub use direct_integral::{build_direct_integral, DirectIntegralError, DirectIntegralSpace, FiberFamily, Section};
pub use hilbert::{HilbertChain, HilbertError, LocalOperator, LocalVector};
pub use linalg::{CMatrix, Subspace, C64};
pub use tolerance::Tolerances;
pub use measure::{
    ExtendedRational, FiniteMeasurableSpace, LimitSigmaAlgebra, LocallyStandardMeasureSpace,
    MeasurableChain, MeasureChain, PointId,
};
