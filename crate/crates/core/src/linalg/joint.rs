//! Simultaneous spectral decomposition of commuting normal matrices.

use std::cmp::Ordering;

use super::eig::hermitian_eig_with;
use super::matrix::{CMatrix, C64};
use super::subspace::Subspace;
use super::LinalgError;
use crate::tolerance::Tolerances;

/// Joint eigenspaces of a commuting normal family.
///
/// `labels[k][j]` is the eigenvalue of input matrix `j` on eigenspace `k`.
#[derive(Debug, Clone)]
pub struct JointSpectrum {
    pub projections: Vec<CMatrix>,
    pub labels: Vec<Vec<C64>>,
    pub spaces: Vec<Subspace>,
    /// `max_j ‖A_j − Σ_k labels[k][j]·P_k‖_F`.
    pub reconstruction_residual: f64,
}

impl JointSpectrum {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.spaces.iter().map(Subspace::dim).collect()
    }
}

pub fn joint_diagonalize(matrices: &[CMatrix]) -> Result<JointSpectrum, LinalgError> {
    joint_diagonalize_with(matrices, &Tolerances::default())
}

pub fn joint_diagonalize_with(
    matrices: &[CMatrix],
    tol: &Tolerances,
) -> Result<JointSpectrum, LinalgError> {
    let n = check_family(matrices, tol)?;
    let mut blocks: Vec<CMatrix> = if n == 0 {
        Vec::new()
    } else {
        vec![CMatrix::identity(n)]
    };
    let i_half = C64::new(0.0, -0.5);
    for a in matrices {
        let ah = a.adjoint();
        let re_part = (a + &ah).scale(C64::new(0.5, 0.0));
        let im_part = (a - &ah).scale(i_half);
        for h in [re_part, im_part] {
            if h.max_abs() == 0.0 {
                continue;
            }
            let mut next = Vec::with_capacity(blocks.len());
            for q in &blocks {
                split_block(q, &h, tol, &mut next)?;
            }
            blocks = next;
        }
    }

    let mut parts: Vec<(Vec<C64>, CMatrix)> = blocks
        .into_iter()
        .map(|q| (block_label(&q, matrices), q))
        .collect();
    parts = merge_equal_labels(parts, tol.cluster);
    parts.sort_by(|x, y| label_cmp(&x.0, &y.0, tol.cluster));

    let mut projections = Vec::with_capacity(parts.len());
    let mut labels = Vec::with_capacity(parts.len());
    let mut spaces = Vec::with_capacity(parts.len());
    for (label, q) in parts {
        projections.push(q.matmul(&q.adjoint()));
        labels.push(label);
        spaces.push(Subspace::new(q)?);
    }
    let reconstruction_residual = matrices
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let mut s = CMatrix::zeros(n, n);
            for (p, l) in projections.iter().zip(&labels) {
                s = &s + &p.scale(l[j]);
            }
            (a - &s).frobenius_norm()
        })
        .fold(0.0, f64::max);
    Ok(JointSpectrum {
        projections,
        labels,
        spaces,
        reconstruction_residual,
    })
}

/// Validates shapes, normality and pairwise commutation; returns the common size.
fn check_family(matrices: &[CMatrix], tol: &Tolerances) -> Result<usize, LinalgError> {
    let first = matrices.first().ok_or(LinalgError::Empty)?;
    let n = first.rows();
    for (index, a) in matrices.iter().enumerate() {
        if !a.is_square() {
            return Err(LinalgError::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        if a.rows() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: a.rows(),
            });
        }
        a.check_finite()?;
        let defect = a.normal_defect();
        if defect > tol.normal {
            return Err(LinalgError::NotNormal { index, defect });
        }
    }
    for i in 0..matrices.len() {
        for j in i + 1..matrices.len() {
            let norm = matrices[i].commutator(&matrices[j]).frobenius_norm();
            if norm > tol.commuting {
                return Err(LinalgError::NotCommuting {
                    first: i,
                    second: j,
                    norm,
                });
            }
        }
    }
    Ok(n)
}

/// Splits the invariant block spanned by the columns of `q` into eigenspaces of `h`.
fn split_block(
    q: &CMatrix,
    h: &CMatrix,
    tol: &Tolerances,
    out: &mut Vec<CMatrix>,
) -> Result<(), LinalgError> {
    let c = q.adjoint().matmul(&h.matmul(q));
    let c = (&c + &c.adjoint()).scale(C64::new(0.5, 0.0));
    let eig = hermitian_eig_with(&c, tol)?;
    let k = c.rows();
    let mut start = 0;
    while start < k {
        let mut end = start + 1;
        while end < k && eig.values[end] - eig.values[end - 1] <= tol.cluster {
            end += 1;
        }
        let cols: Vec<usize> = (start..end).collect();
        let rows: Vec<usize> = (0..k).collect();
        out.push(q.matmul(&eig.vectors.select(&rows, &cols)));
        start = end;
    }
    Ok(())
}

fn block_label(q: &CMatrix, matrices: &[CMatrix]) -> Vec<C64> {
    let k = q.cols() as f64;
    matrices
        .iter()
        .map(|a| q.adjoint().matmul(&a.matmul(q)).trace() / k)
        .collect()
}

fn merge_equal_labels(parts: Vec<(Vec<C64>, CMatrix)>, tol: f64) -> Vec<(Vec<C64>, CMatrix)> {
    let mut merged: Vec<(Vec<C64>, Vec<CMatrix>)> = Vec::new();
    for (label, q) in parts {
        match merged
            .iter_mut()
            .find(|(l, _)| label_distance(l, &label) <= tol)
        {
            Some((_, qs)) => qs.push(q),
            None => merged.push((label, vec![q])),
        }
    }
    merged
        .into_iter()
        .map(|(label, qs)| {
            if qs.len() == 1 {
                return (label, qs.into_iter().next().unwrap());
            }
            let n = qs[0].rows();
            let cols: Vec<Vec<C64>> = qs
                .iter()
                .flat_map(|q| (0..q.cols()).map(move |j| q.column(j)))
                .collect();
            (label, CMatrix::from_columns(n, &cols))
        })
        .collect()
}

/// Max componentwise modulus of the difference of two labels.
pub fn label_distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Lexicographic order on `(re, im)` of each component, treating values within `tol` as equal.
pub fn label_cmp(a: &[C64], b: &[C64], tol: f64) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x.re - y.re).abs() > tol {
            return x.re.total_cmp(&y.re);
        }
        if (x.im - y.im).abs() > tol {
            return x.im.total_cmp(&y.im);
        }
    }
    a.len().cmp(&b.len())
}
