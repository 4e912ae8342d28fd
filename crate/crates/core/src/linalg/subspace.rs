use super::matrix::{inner, norm, CMatrix, C64};
use super::LinalgError;

/// Subspace of `ℂ^ambient_dim` with an orthonormal basis stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    basis: CMatrix,
}

impl Subspace {
    /// Wraps `basis` after checking `basisᴴ·basis = I` within `1e-10`.
    pub fn new(basis: CMatrix) -> Result<Self, LinalgError> {
        let gram = basis.adjoint().matmul(&basis);
        let defect = gram.sub_identity_norm();
        if defect > 1e-10 || basis.cols() > basis.rows() {
            return Err(LinalgError::NotOrthonormal { defect });
        }
        Ok(Self {
            ambient_dim: basis.rows(),
            basis,
        })
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: CMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.basis.column(k)
    }

    /// Orthogonal projector `QQᴴ`.
    pub fn projector(&self) -> CMatrix {
        self.basis.matmul(&self.basis.adjoint())
    }

    /// Coordinates `Qᴴv` of the orthogonal projection of `v`.
    pub fn coordinates(&self, v: &[C64]) -> Vec<C64> {
        (0..self.dim())
            .map(|k| inner(&self.basis.column(k), v))
            .collect()
    }

    /// `‖v − QQᴴv‖`.
    pub fn residual(&self, v: &[C64]) -> f64 {
        let mut r = v.to_vec();
        for k in 0..self.dim() {
            let q = self.basis.column(k);
            let c = inner(&q, &r);
            for (x, y) in r.iter_mut().zip(&q) {
                *x -= c * y;
            }
        }
        norm(&r)
    }

    /// Largest residual of either basis projected onto the other; zero iff equal spans.
    pub fn distance(&self, other: &Self) -> f64 {
        if self.dim() != other.dim() {
            return 1.0;
        }
        let a = (0..self.dim()).map(|k| other.residual(&self.vector(k)));
        let b = (0..other.dim()).map(|k| self.residual(&other.vector(k)));
        a.chain(b).fold(0.0, f64::max)
    }
}

/// Orthonormal basis of the column span of `vectors`.
///
/// Columns are processed left to right with two passes of modified Gram–Schmidt;
/// a column whose residual norm is `≤ tol` is dropped.
pub fn orthonormalize(vectors: &CMatrix, tol: f64) -> Subspace {
    let n = vectors.rows();
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for j in 0..vectors.cols() {
        if let Some(q) = reduce(&basis, vectors.column(j), tol) {
            basis.push(q);
        }
    }
    Subspace {
        ambient_dim: n,
        basis: CMatrix::from_columns(n, &basis),
    }
}

/// Orthogonalizes `v` against `basis`; returns the normalized residual if it exceeds `tol`.
pub(crate) fn reduce(basis: &[Vec<C64>], mut v: Vec<C64>, tol: f64) -> Option<Vec<C64>> {
    for _ in 0..2 {
        for q in basis {
            let c = inner(q, &v);
            for (x, y) in v.iter_mut().zip(q) {
                *x -= c * y;
            }
        }
    }
    let r = norm(&v);
    if r <= tol {
        return None;
    }
    for x in v.iter_mut() {
        *x /= r;
    }
    Some(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_columns_collapse() {
        let v = CMatrix::from_real(&[&[1.0, 2.0], &[0.0, 0.0]]);
        let s = orthonormalize(&v, 1e-9);
        assert_eq!(s.dim(), 1);
        assert!((s.basis()[(0, 0)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_input_is_zero_dimensional() {
        let s = orthonormalize(&CMatrix::zeros(3, 0), 1e-9);
        assert_eq!(s.dim(), 0);
        assert_eq!(s.ambient_dim(), 3);
    }

    #[test]
    fn new_rejects_non_orthonormal() {
        let b = CMatrix::from_real(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(Subspace::new(b).is_err());
    }
}
