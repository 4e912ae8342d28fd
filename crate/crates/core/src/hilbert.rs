//! Nested coordinate Hilbert spaces and locally bounded operators.
//!
//! Level `n` of a [`HilbertChain`] is the span of the first `d_n` standard basis
//! vectors of `ℂ^{d_L}`. Inclusions are zero-padding and the projection onto
//! level `n` is coordinate truncation, so compatibility of an operator family is
//! a statement about block structure only.

use thiserror::Error;

use crate::linalg::{inner, norm, operator_norm, CMatrix, C64, ONE, ZERO};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HilbertError {
    #[error("chain has no levels")]
    EmptyChain,
    #[error("dimensions decrease between levels {} and {}: {lower_dim} > {upper_dim}", level + 1, level + 2)]
    DecreasingDims {
        level: usize,
        lower_dim: usize,
        upper_dim: usize,
    },
    #[error("level {} does not exist (chain has {levels} levels)", level + 1)]
    LevelOutOfRange { level: usize, levels: usize },
    #[error("expected {expected} blocks, found {found}")]
    BlockCount { expected: usize, found: usize },
    #[error("block at level {} is {rows}x{cols}, expected {dim}x{dim}", level + 1)]
    BlockShape {
        level: usize,
        rows: usize,
        cols: usize,
        dim: usize,
    },
    #[error("vector at level {} has length {found}, expected {expected}", level + 1)]
    VectorLength {
        level: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite entry in block at level {}", level + 1)]
    NonFinite { level: usize },
    #[error(
        "not locally bounded: levels {} and {}, entry ({row}, {col}) off by {magnitude:e}",
        lower + 1,
        upper + 1
    )]
    NotLocallyBounded {
        lower: usize,
        upper: usize,
        row: usize,
        col: usize,
        magnitude: f64,
    },
    #[error("operators live on different chains ({left:?} vs {right:?})")]
    ChainMismatch { left: Vec<usize>, right: Vec<usize> },
}

/// Dimensions `d_1 ≤ … ≤ d_L` of a nested family of coordinate spaces.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HilbertChain {
    dims: Vec<usize>,
}

impl HilbertChain {
    pub fn new(dims: Vec<usize>) -> Result<Self, HilbertError> {
        if dims.is_empty() {
            return Err(HilbertError::EmptyChain);
        }
        if let Some(level) = dims.windows(2).position(|w| w[0] > w[1]) {
            return Err(HilbertError::DecreasingDims {
                level,
                lower_dim: dims[level],
                upper_dim: dims[level + 1],
            });
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn levels(&self) -> usize {
        self.dims.len()
    }

    pub fn top(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn dim(&self, level: usize) -> usize {
        self.dims[level]
    }

    pub fn ambient_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn check_level(&self, level: usize) -> Result<(), HilbertError> {
        if level < self.dims.len() {
            Ok(())
        } else {
            Err(HilbertError::LevelOutOfRange {
                level,
                levels: self.dims.len(),
            })
        }
    }

    /// `P_n` as a `d_L×d_L` matrix.
    pub fn projection(&self, level: usize) -> CMatrix {
        let d = self.dims[level];
        CMatrix::from_fn(self.ambient_dim(), self.ambient_dim(), |i, j| {
            if i == j && i < d {
                ONE
            } else {
                ZERO
            }
        })
    }

    /// Applies `P_n` to an ambient vector, keeping ambient length.
    pub fn project(&self, level: usize, v: &[C64]) -> Vec<C64> {
        let d = self.dims[level];
        v.iter()
            .enumerate()
            .map(|(i, &z)| if i < d { z } else { ZERO })
            .collect()
    }

    /// The same chain cut off after `level`.
    pub fn prefix(&self, level: usize) -> Self {
        Self {
            dims: self.dims[..=level].to_vec(),
        }
    }
}

/// Vector of some level, in that level's coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalVector {
    level: usize,
    coords: Vec<C64>,
}

impl LocalVector {
    pub fn new(chain: &HilbertChain, level: usize, coords: Vec<C64>) -> Result<Self, HilbertError> {
        chain.check_level(level)?;
        if coords.len() != chain.dim(level) {
            return Err(HilbertError::VectorLength {
                level,
                expected: chain.dim(level),
                found: coords.len(),
            });
        }
        Ok(Self { level, coords })
    }

    /// Standard basis vector `e_k` (0-based) at the first level containing it.
    pub fn basis(chain: &HilbertChain, k: usize) -> Option<Self> {
        let level = chain.dims().iter().position(|&d| d > k)?;
        let mut coords = vec![ZERO; chain.dim(level)];
        coords[k] = ONE;
        Some(Self { level, coords })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    /// Coordinates zero-padded to length `dim`.
    pub fn padded(&self, dim: usize) -> Vec<C64> {
        let mut v = self.coords.clone();
        v.resize(dim.max(v.len()), ZERO);
        v
    }

    /// Embeds into a higher level.
    pub fn embed(&self, chain: &HilbertChain, level: usize) -> Result<Self, HilbertError> {
        chain.check_level(level)?;
        if level < self.level {
            return Err(HilbertError::LevelOutOfRange { level, levels: self.level });
        }
        Ok(Self {
            level,
            coords: self.padded(chain.dim(level)),
        })
    }

    /// `⟨self, other⟩` computed at the larger of the two levels.
    pub fn inner(&self, other: &Self) -> C64 {
        let d = self.coords.len().max(other.coords.len());
        inner(&self.padded(d), &other.padded(d))
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }
}

/// Projective family `{T_n}` with `T_n` block-diagonal for `level m ⊕ level m^⊥`
/// and `T_n` restricted to level `m` equal to `T_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOperator {
    chain: HilbertChain,
    blocks: Vec<CMatrix>,
}

impl LocalOperator {
    /// Checks both compatibility conditions at the default tolerance `1e-10`.
    pub fn new(chain: HilbertChain, blocks: Vec<CMatrix>) -> Result<Self, HilbertError> {
        Self::new_with(chain, blocks, &Tolerances::default())
    }

    pub fn new_with(chain: HilbertChain, blocks: Vec<CMatrix>, tol: &Tolerances) -> Result<Self, HilbertError> {
        if blocks.len() != chain.levels() {
            return Err(HilbertError::BlockCount {
                expected: chain.levels(),
                found: blocks.len(),
            });
        }
        for (level, b) in blocks.iter().enumerate() {
            let dim = chain.dim(level);
            if b.rows() != dim || b.cols() != dim {
                return Err(HilbertError::BlockShape {
                    level,
                    rows: b.rows(),
                    cols: b.cols(),
                    dim,
                });
            }
            if b.check_finite().is_err() {
                return Err(HilbertError::NonFinite { level });
            }
        }
        let op = Self { chain, blocks };
        match op.worst_violation() {
            Some(HilbertError::NotLocallyBounded { magnitude, .. }) if magnitude <= tol.compatibility => Ok(op),
            Some(w) => Err(w),
            None => Ok(op),
        }
    }

    /// Builds the family from its top block, which must be block-diagonal for every level.
    pub fn from_top(chain: HilbertChain, top: CMatrix) -> Result<Self, HilbertError> {
        Self::from_top_with(chain, top, &Tolerances::default())
    }

    pub fn from_top_with(chain: HilbertChain, top: CMatrix, tol: &Tolerances) -> Result<Self, HilbertError> {
        let d = chain.ambient_dim();
        if top.rows() != d || top.cols() != d {
            return Err(HilbertError::BlockShape {
                level: chain.top(),
                rows: top.rows(),
                cols: top.cols(),
                dim: d,
            });
        }
        let blocks = chain.dims().iter().map(|&k| top.leading(k)).collect();
        Self::new_with(chain, blocks, tol)
    }

    pub fn identity(chain: &HilbertChain) -> Self {
        Self {
            blocks: chain.dims().iter().map(|&d| CMatrix::identity(d)).collect(),
            chain: chain.clone(),
        }
    }

    /// Diagonal operator `e_k ↦ values[k] e_k` on the ambient coordinates.
    pub fn diagonal(chain: &HilbertChain, values: &[C64]) -> Result<Self, HilbertError> {
        if values.len() != chain.ambient_dim() {
            return Err(HilbertError::VectorLength {
                level: chain.top(),
                expected: chain.ambient_dim(),
                found: values.len(),
            });
        }
        Ok(Self {
            blocks: chain.dims().iter().map(|&d| CMatrix::diag(&values[..d])).collect(),
            chain: chain.clone(),
        })
    }

    pub fn chain(&self) -> &HilbertChain {
        &self.chain
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, level: usize) -> &CMatrix {
        &self.blocks[level]
    }

    pub fn top(&self) -> &CMatrix {
        self.blocks.last().unwrap()
    }

    /// Largest violation of the compatibility contract, if any entry is nonzero.
    fn worst_violation(&self) -> Option<HilbertError> {
        let mut worst: Option<HilbertError> = None;
        let mut worst_mag = 0.0;
        let mut consider = |lower, upper, row, col, magnitude: f64| {
            if magnitude > worst_mag {
                worst_mag = magnitude;
                worst = Some(HilbertError::NotLocallyBounded {
                    lower,
                    upper,
                    row,
                    col,
                    magnitude,
                });
            }
        };
        for upper in 0..self.blocks.len() {
            let t = &self.blocks[upper];
            let dn = self.chain.dim(upper);
            for lower in 0..upper {
                let dm = self.chain.dim(lower);
                let s = &self.blocks[lower];
                for i in 0..dn {
                    for j in 0..dn {
                        let mag = match (i < dm, j < dm) {
                            (true, true) => (t[(i, j)] - s[(i, j)]).norm(),
                            (false, false) => 0.0,
                            _ => t[(i, j)].norm(),
                        };
                        consider(lower, upper, i, j, mag);
                    }
                }
            }
        }
        worst
    }

    /// Max-entry deviation from the compatibility contract over all level pairs.
    pub fn compatibility_defect(&self) -> f64 {
        match self.worst_violation() {
            Some(HilbertError::NotLocallyBounded { magnitude, .. }) => magnitude,
            _ => 0.0,
        }
    }

    /// `p_n(T) = ‖T_n‖`.
    pub fn seminorm(&self, level: usize) -> f64 {
        operator_norm(&self.blocks[level])
    }

    /// `‖T u‖`, evaluated at the level of `u`.
    pub fn sot_seminorm(&self, u: &LocalVector) -> f64 {
        norm(&self.blocks[u.level].matvec(&u.coords))
    }

    /// `|⟨u, T v⟩|`, evaluated at the larger level of `u` and `v`.
    pub fn wot_seminorm(&self, u: &LocalVector, v: &LocalVector) -> f64 {
        let level = u.level.max(v.level);
        let d = self.chain.dim(level);
        let tv = self.blocks[level].matvec(&v.padded(d));
        inner(&u.padded(d), &tv).norm()
    }

    /// Applies `T` at the level of `u`.
    pub fn apply(&self, u: &LocalVector) -> LocalVector {
        LocalVector {
            level: u.level,
            coords: self.blocks[u.level].matvec(&u.coords),
        }
    }

    fn same_chain(&self, other: &Self) -> Result<(), HilbertError> {
        if self.chain == other.chain {
            Ok(())
        } else {
            Err(HilbertError::ChainMismatch {
                left: self.chain.dims.clone(),
                right: other.chain.dims.clone(),
            })
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(&CMatrix, &CMatrix) -> CMatrix) -> Result<Self, HilbertError> {
        self.same_chain(other)?;
        Ok(Self {
            chain: self.chain.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect(),
        })
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self, HilbertError> {
        self.zip(other, |a, b| a.matmul(b))
    }

    pub fn add(&self, other: &Self) -> Result<Self, HilbertError> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, HilbertError> {
        self.zip(other, |a, b| a - b)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            chain: self.chain.clone(),
            blocks: self.blocks.iter().map(CMatrix::adjoint).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            chain: self.chain.clone(),
            blocks: self.blocks.iter().map(|b| b.scale(s)).collect(),
        }
    }

    /// `T^k`, with `T^0 = Id`.
    pub fn power(&self, k: u32) -> Self {
        let mut out = Self::identity(&self.chain);
        for _ in 0..k {
            out = out.compose(self).expect("same chain");
        }
        out
    }

    /// The family restricted to levels `0..=level`.
    pub fn truncate(&self, level: usize) -> Self {
        Self {
            chain: self.chain.prefix(level),
            blocks: self.blocks[..=level].to_vec(),
        }
    }
}
