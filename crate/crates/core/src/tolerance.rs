//! Numerical tolerances shared by every module.
//!
//! A single [`Tolerances`] record carries every threshold. Operations take it by
//! reference; `Tolerances::default()` gives the stock values listed on each field.

use serde::{Deserialize, Serialize};

/// Thresholds used by the numerical checks.
///
/// Missing fields in a deserialized record fall back to the defaults, so a
/// partial override such as `{"cluster": 1e-6}` is valid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Max-entry asymmetry allowed before a matrix is rejected as non-Hermitian. Default 1e-10.
    pub hermitian: f64,
    /// Frobenius norm of `AAᴴ − AᴴA` allowed for a normal matrix. Default 1e-10.
    pub normal: f64,
    /// Frobenius norm of a commutator allowed between commuting generators. Default 1e-8.
    pub commuting: f64,
    /// Joint eigenvalues closer than this are one label. Default 1e-7.
    pub cluster: f64,
    /// Residual below which a column is dropped as linearly dependent. Default 1e-9.
    pub rank: f64,
    /// Relative singular value threshold of the commutant solver (scaled by `d`). Default 1e-9.
    pub commutant: f64,
    /// Block compatibility of a locally bounded operator. Default 1e-10.
    pub compatibility: f64,
    /// Scalar extraction: a block is `c·Id` if `‖block − c·Id‖ ≤ scalar·(1+|c|)`. Default 1e-9.
    pub scalar: f64,
    /// Subspace containment residuals between operator spans. Default 1e-8.
    pub containment: f64,
    /// `‖WᴴW − I‖` and `‖WWᴴ − I‖` for the disintegration unitary. Default 1e-8.
    pub isometry: f64,
    /// `W_{n+1}` restricted to level n versus `W_n`. Default 1e-9.
    pub prefix: f64,
    /// Spectral labels compared against classified scalar functions. Default 1e-7.
    pub label: f64,
    /// Relative kernel threshold of the fiber Gram quotient. Default 1e-9.
    pub kernel: f64,
    /// Cross terms and homomorphism residuals of the disintegration. Default 1e-9.
    pub homomorphism: f64,
    /// Dilation identity residual, relative to `1 + ‖T_n‖^j`. Default 1e-10.
    pub dilation: f64,
    /// Sweep cap of the Jacobi eigensolver. Default 100.
    pub max_sweeps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-10,
            normal: 1e-10,
            commuting: 1e-8,
            cluster: 1e-7,
            rank: 1e-9,
            commutant: 1e-9,
            compatibility: 1e-10,
            scalar: 1e-9,
            containment: 1e-8,
            isometry: 1e-8,
            prefix: 1e-9,
            label: 1e-7,
            kernel: 1e-9,
            homomorphism: 1e-9,
            dilation: 1e-10,
            max_sweeps: 100,
        }
    }
}

impl Tolerances {
    /// Returns `self` with every field present in `patch` replaced.
    pub fn merged(&self, patch: &TolerancePatch) -> Self {
        let mut t = *self;
        macro_rules! apply {
            ($($f:ident),*) => { $( if let Some(v) = patch.$f { t.$f = v; } )* };
        }
        apply!(
            hermitian,
            normal,
            commuting,
            cluster,
            rank,
            commutant,
            compatibility,
            scalar,
            containment,
            isometry,
            prefix,
            label,
            kernel,
            homomorphism,
            dilation,
            max_sweeps
        );
        t
    }
}

/// Partial tolerance record used for layered overrides (file, then command line).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancePatch {
    pub hermitian: Option<f64>,
    pub normal: Option<f64>,
    pub commuting: Option<f64>,
    pub cluster: Option<f64>,
    pub rank: Option<f64>,
    pub commutant: Option<f64>,
    pub compatibility: Option<f64>,
    pub scalar: Option<f64>,
    pub containment: Option<f64>,
    pub isometry: Option<f64>,
    pub prefix: Option<f64>,
    pub label: Option<f64>,
    pub kernel: Option<f64>,
    pub homomorphism: Option<f64>,
    pub dilation: Option<f64>,
    pub max_sweeps: Option<usize>,
}
