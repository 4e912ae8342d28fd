//! Cyclic two-sided Jacobi eigensolver for complex Hermitian matrices.

use std::cmp::Ordering;

use super::matrix::{CMatrix, C64, ZERO};
use super::LinalgError;
use crate::tolerance::Tolerances;

/// Eigen-decomposition `A = V diag(λ) Vᴴ` with λ ascending.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn hermitian_eig(a: &CMatrix) -> Result<HermitianEig, LinalgError> {
    hermitian_eig_with(a, &Tolerances::default())
}

pub fn hermitian_eig_with(a: &CMatrix, tol: &Tolerances) -> Result<HermitianEig, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    a.check_finite()?;
    let defect = a.hermitian_defect();
    if defect > tol.hermitian {
        return Err(LinalgError::NonHermitian { defect });
    }
    let n = a.rows();
    // Work on the exactly Hermitian part so rotations keep the matrix Hermitian.
    let mut m = CMatrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let mut v = CMatrix::identity(n);
    let scale = m.frobenius_norm();
    if n <= 1 || scale == 0.0 {
        return Ok(finish(m, v));
    }
    let target = 4.0 * n as f64 * f64::EPSILON * scale;
    let skip = 1e-3 * f64::EPSILON * scale;

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&m);
        if off <= target {
            break;
        }
        if sweeps == tol.max_sweeps {
            return Err(LinalgError::DidNotConverge {
                sweeps,
                off_norm: off,
            });
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let g = apq.norm();
                if g <= skip {
                    m[(p, q)] = ZERO;
                    m[(q, p)] = ZERO;
                    continue;
                }
                rotate(&mut m, &mut v, p, q, apq, g);
            }
        }
    }
    Ok(finish(m, v))
}

/// Applies the unitary `R` that annihilates `m[p][q]`: `m ← Rᴴ m R`, `v ← v R`.
fn rotate(m: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize, apq: C64, g: f64) {
    let n = m.rows();
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let phase = apq / g;
    let theta = (aqq - app) / (2.0 * g);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // R = [[c, s], [-s·conj(phase), c·conj(phase)]] on coordinates (p, q).
    let ph_c = phase.conj();
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * c - akq * ph_c * s;
        m[(k, q)] = akp * s + akq * ph_c * c;
    }
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = apk * c - aqk * phase * s;
        m[(q, k)] = apk * s + aqk * phase * c;
    }
    m[(p, q)] = ZERO;
    m[(q, p)] = ZERO;
    m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * ph_c * s;
        v[(k, q)] = vkp * s + vkq * ph_c * c;
    }
}

fn off_diagonal_norm(m: &CMatrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn finish(m: CMatrix, v: CMatrix) -> HermitianEig {
    let n = m.rows();
    let mut cols: Vec<(f64, Vec<C64>)> = (0..n)
        .map(|j| (m[(j, j)].re, normalize_phase(v.column(j))))
        .collect();
    cols.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Within clusters of numerically equal eigenvalues order by vector entries.
    let scale = cols.iter().map(|c| c.0.abs()).fold(0.0, f64::max);
    let tie = 1e-12 * (1.0 + scale);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && cols[end].0 - cols[end - 1].0 <= tie {
            end += 1;
        }
        cols[start..end].sort_by(|a, b| lex_cmp(&a.1, &b.1));
        start = end;
    }
    let values = cols.iter().map(|c| c.0).collect();
    let vecs: Vec<Vec<C64>> = cols.into_iter().map(|c| c.1).collect();
    HermitianEig {
        values,
        vectors: CMatrix::from_columns(n, &vecs),
    }
}

/// Rotates `v` so its first entry of non-negligible magnitude is real positive.
pub fn normalize_phase(mut v: Vec<C64>) -> Vec<C64> {
    let big = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if big == 0.0 {
        return v;
    }
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-8 * big) {
        let ph = z.conj() / z.norm();
        for x in v.iter_mut() {
            *x *= ph;
        }
    }
    v
}

/// Lexicographic order on (re, im) pairs, descending magnitude first so that
/// vectors concentrated on early coordinates come first.
fn lex_cmp(a: &[C64], b: &[C64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = y
            .re
            .total_cmp(&x.re)
            .then_with(|| y.im.total_cmp(&x.im));
        if (x - y).norm() > 1e-12 && o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Largest singular value, via the eigenvalues of `AᴴA`.
pub fn operator_norm(a: &CMatrix) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    let g = a.adjoint().matmul(a);
    match hermitian_eig(&g) {
        Ok(e) => e.values.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
        // AᴴA is Hermitian by construction; fall back to Frobenius on pathological input.
        Err(_) => a.frobenius_norm(),
    }
}
