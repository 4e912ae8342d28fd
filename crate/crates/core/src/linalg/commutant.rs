//! Commutants and operator spans inside `B(ℂ^d)`.
//!
//! Matrices are identified with row-major vectors of length `d²`; the trace inner
//! product `tr(AᴴB)` becomes the standard inner product there.

use super::eig::hermitian_eig_with;
use super::matrix::{CMatrix, C64, ZERO};
use super::subspace::reduce;
use super::LinalgError;
use crate::tolerance::Tolerances;

/// Linear subspace of `d×d` matrices with a trace-orthonormal basis.
#[derive(Debug, Clone)]
pub struct OperatorSpace {
    size: usize,
    basis: Vec<CMatrix>,
}

impl OperatorSpace {
    /// Span of `mats`, dropping directions with residual `≤ tol` (after normalizing each input).
    /// Inputs with norm `≤ tol` times the largest input norm count as zero.
    pub fn span(size: usize, mats: &[CMatrix], tol: f64) -> Self {
        let floor = tol * mats.iter().map(CMatrix::frobenius_norm).fold(0.0, f64::max);
        let mut vecs: Vec<Vec<C64>> = Vec::new();
        for m in mats {
            push_normalized(&mut vecs, m, tol, floor);
        }
        Self::from_vecs(size, vecs)
    }

    fn from_vecs(size: usize, vecs: Vec<Vec<C64>>) -> Self {
        let basis = vecs
            .iter()
            .map(|v| CMatrix::from_vectorized(size, size, v))
            .collect();
        Self { size, basis }
    }

    /// Smallest unital *-closed algebra containing `generators`.
    pub fn algebra(size: usize, generators: &[CMatrix], tol: f64) -> Self {
        let floor = tol * generators.iter().map(CMatrix::frobenius_norm).fold(1.0, f64::max);
        let mut vecs: Vec<Vec<C64>> = Vec::new();
        push_normalized(&mut vecs, &CMatrix::identity(size), tol, floor);
        for g in generators {
            push_normalized(&mut vecs, g, tol, floor);
            push_normalized(&mut vecs, &g.adjoint(), tol, floor);
        }
        let mut done = 0;
        while done < vecs.len() {
            let fresh = vecs.len();
            for i in 0..fresh {
                for j in done.max(i)..fresh {
                    let a = CMatrix::from_vectorized(size, size, &vecs[i]);
                    let b = CMatrix::from_vectorized(size, size, &vecs[j]);
                    push_normalized(&mut vecs, &a.matmul(&b), tol, tol);
                    push_normalized(&mut vecs, &b.matmul(&a), tol, tol);
                }
            }
            done = fresh;
        }
        Self::from_vecs(size, vecs)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    /// `‖A − P(A)‖_F / max(‖A‖_F, 1)` where `P` projects onto the span.
    pub fn residual(&self, a: &CMatrix) -> f64 {
        let mut r = a.clone();
        for b in &self.basis {
            let c = b.inner(&r);
            r = &r - &b.scale(c);
        }
        r.frobenius_norm() / a.frobenius_norm().max(1.0)
    }

    /// Largest residual of `other`'s basis against `self`; zero iff `other ⊆ self`.
    pub fn contains_residual(&self, other: &Self) -> f64 {
        other
            .basis
            .iter()
            .map(|b| self.residual(b))
            .fold(0.0, f64::max)
    }

    /// Largest commutator norm between basis elements of `self` and `other`.
    pub fn commutation_residual(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for a in &self.basis {
            for b in &other.basis {
                worst = worst.max(a.commutator(b).frobenius_norm());
            }
        }
        worst
    }
}

fn push_normalized(vecs: &mut Vec<Vec<C64>>, m: &CMatrix, tol: f64, floor: f64) {
    let n = m.frobenius_norm();
    if n == 0.0 || n <= floor {
        return;
    }
    let v: Vec<C64> = m.as_slice().iter().map(|z| z / n).collect();
    if let Some(q) = reduce(vecs, v, tol) {
        vecs.push(q);
    }
}

/// Trace-orthonormal basis of `{T : T G = G T for every generator G}`.
pub fn commutant_solve(size: usize, generators: &[CMatrix]) -> Result<Vec<CMatrix>, LinalgError> {
    commutant_solve_with(size, generators, &Tolerances::default())
}

/// The system `(G⊗I − I⊗Gᵀ) vec(T) = 0` is reduced to its Gram matrix. A pivoted
/// Cholesky factorization of the Gram matrix yields a candidate null space; within it a
/// direction counts as a solution when its singular value, recomputed directly as
/// `(Σ‖[G_i, T]‖²)^{1/2}`, is at most `commutant·size`.
pub fn commutant_solve_with(
    size: usize,
    generators: &[CMatrix],
    tol: &Tolerances,
) -> Result<Vec<CMatrix>, LinalgError> {
    for g in generators {
        if g.rows() != size || g.cols() != size {
            return Err(LinalgError::DimensionMismatch {
                expected: size,
                found: if g.rows() != size { g.rows() } else { g.cols() },
            });
        }
        g.check_finite()?;
    }
    let n = size * size;
    if n == 0 {
        return Ok(Vec::new());
    }
    let threshold = tol.commutant * size as f64;
    let gram = commutator_gram(size, generators);
    // Gram entries carry absolute rounding error of order eps·Σ‖G_i‖², so the
    // factorization cutoff is tied to the generator scale rather than the Gram diagonal.
    let scale: f64 = generators.iter().map(|g| g.frobenius_norm().powi(2)).sum();
    let candidates = candidate_null_space(&gram, (1e-10 * scale).max(threshold * threshold));
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let total: f64 = candidates
        .iter()
        .map(|v| singular_value(size, generators, v).powi(2))
        .sum::<f64>()
        .sqrt();
    let accepted = if total <= threshold {
        candidates
    } else {
        // Diagonalize the Gram matrix restricted to the candidate space.
        let k = candidates.len();
        let z = CMatrix::from_columns(n, &candidates);
        let c = z.adjoint().matmul(&gram.matmul(&z));
        let c = (&c + &c.adjoint()).scale(C64::new(0.5, 0.0));
        let eig = hermitian_eig_with(&c, tol)?;
        (0..k)
            .map(|j| z.matvec(&eig.vectors.column(j)))
            .filter(|v| singular_value(size, generators, v) <= threshold)
            .collect()
    };
    Ok(accepted
        .iter()
        .map(|v| CMatrix::from_vectorized(size, size, v))
        .collect())
}

/// Commutant as an [`OperatorSpace`].
pub fn commutant(size: usize, generators: &[CMatrix], tol: &Tolerances) -> Result<OperatorSpace, LinalgError> {
    let basis = commutant_solve_with(size, generators, tol)?;
    Ok(OperatorSpace { size, basis })
}

/// `Σ_i A_iᴴA_i` with `A_i = G_i⊗I − I⊗G_iᵀ`, assembled without forming the Kronecker products.
///
/// `A_iᴴA_i = G_iᴴG_i⊗I − G_iᴴ⊗G_iᵀ − G_i⊗conj(G_i) + I⊗conj(G_i)G_iᵀ`.
pub(crate) fn commutator_gram(d: usize, generators: &[CMatrix]) -> CMatrix {
    let n = d * d;
    let mut s1 = CMatrix::zeros(d, d);
    let mut s4 = CMatrix::zeros(d, d);
    let mut m = CMatrix::zeros(n, n);
    for g in generators {
        s1 = &s1 + &g.adjoint().matmul(g);
        s4 = &s4 + &g.conj().matmul(&g.transpose());
        for a in 0..d {
            for c in 0..d {
                let gh_ac = g[(c, a)].conj();
                let g_ac = g[(a, c)];
                if gh_ac == ZERO && g_ac == ZERO {
                    continue;
                }
                for b in 0..d {
                    for e in 0..d {
                        m[(a * d + b, c * d + e)] -= gh_ac * g[(e, b)] + g_ac * g[(b, e)].conj();
                    }
                }
            }
        }
    }
    for a in 0..d {
        for b in 0..d {
            for x in 0..d {
                m[(a * d + b, x * d + b)] += s1[(a, x)];
                m[(a * d + b, a * d + x)] += s4[(b, x)];
            }
        }
    }
    m
}

/// `(Σ_i ‖G_i T − T G_i‖_F²)^{1/2}` for `T = unvec(v)`.
fn singular_value(d: usize, generators: &[CMatrix], v: &[C64]) -> f64 {
    let t = CMatrix::from_vectorized(d, d, v);
    generators
        .iter()
        .map(|g| g.commutator(&t).frobenius_norm().powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Orthonormal basis of the null space of the rank-revealing pivoted Cholesky
/// approximation of a Hermitian positive semidefinite `gram`; pivots at or below
/// `cutoff` end the factorization.
fn candidate_null_space(gram: &CMatrix, cutoff: f64) -> Vec<Vec<C64>> {
    let n = gram.rows();
    let mut a = gram.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    while rank < n {
        let (piv, best) = (rank..n)
            .map(|i| (i, a[(i, i)].re))
            .fold((rank, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= cutoff {
            break;
        }
        swap_symmetric(&mut a, rank, piv);
        perm.swap(rank, piv);
        let l = best.sqrt();
        a[(rank, rank)] = C64::new(l, 0.0);
        for i in rank + 1..n {
            a[(i, rank)] /= l;
        }
        // Full Hermitian update of the trailing block so later symmetric swaps stay valid.
        for j in rank + 1..n {
            let ljk = a[(j, rank)].conj();
            for i in j..n {
                let v = a[(i, j)] - a[(i, rank)] * ljk;
                a[(i, j)] = v;
                a[(j, i)] = v.conj();
            }
            a[(j, j)] = C64::new(a[(j, j)].re, 0.0);
        }
        rank += 1;
    }
    let r = rank;
    let mut out: Vec<Vec<C64>> = Vec::new();
    for t in r..n {
        // Solve L11ᴴ x1 = −conj(L21[t, :]) by back substitution.
        let mut x = vec![ZERO; n];
        x[t] = C64::new(1.0, 0.0);
        for i in (0..r).rev() {
            let mut s = -a[(t, i)].conj();
            for k in i + 1..r {
                s -= a[(k, i)].conj() * x[k];
            }
            x[i] = s / a[(i, i)].re;
        }
        let mut v = vec![ZERO; n];
        for (i, p) in perm.iter().enumerate() {
            v[*p] = x[i];
        }
        let nv = super::matrix::norm(&v);
        for z in v.iter_mut() {
            *z /= nv;
        }
        if let Some(q) = reduce(&out, v, 1e-8) {
            out.push(q);
        }
    }
    out
}

/// Symmetric row/column swap acting on the lower triangle used by the factorization.
fn swap_symmetric(a: &mut CMatrix, i: usize, j: usize) {
    if i == j {
        return;
    }
    let n = a.rows();
    for k in 0..n {
        let t = a[(i, k)];
        a[(i, k)] = a[(j, k)];
        a[(j, k)] = t;
    }
    for k in 0..n {
        let t = a[(k, i)];
        a[(k, i)] = a[(k, j)];
        a[(k, j)] = t;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn explicit_gram(d: usize, gens: &[CMatrix]) -> CMatrix {
        let id = CMatrix::identity(d);
        let mut m = CMatrix::zeros(d * d, d * d);
        for g in gens {
            let a = &g.kron(&id) - &id.kron(&g.transpose());
            m = &m + &a.adjoint().matmul(&a);
        }
        m
    }

    #[test]
    fn gram_matches_kronecker_form() {
        let g = CMatrix::from_fn(3, 3, |i, j| C64::new((i * 3 + j) as f64, (i as f64) - (j as f64) * 0.5));
        let h = CMatrix::from_fn(3, 3, |i, j| C64::new(((i + 2 * j) % 4) as f64, 1.0));
        let gens = [g, h];
        let diff = &commutator_gram(3, &gens) - &explicit_gram(3, &gens);
        assert!(diff.max_abs() < 1e-12);
    }

    #[test]
    fn identity_commutant_is_everything() {
        let basis = commutant_solve(3, &[CMatrix::identity(3)]).unwrap();
        assert_eq!(basis.len(), 9);
    }

    #[test]
    fn empty_generator_list_gives_full_algebra() {
        assert_eq!(commutant_solve(2, &[]).unwrap().len(), 4);
    }

    #[test]
    fn rejects_wrong_size() {
        assert!(commutant_solve(2, &[CMatrix::identity(3)]).is_err());
    }

    #[test]
    fn algebra_of_a_diagonal_generator() {
        let g = CMatrix::diag_real(&[1.0, 2.0, 2.0]);
        let alg = OperatorSpace::algebra(3, &[g], 1e-9);
        assert_eq!(alg.dim(), 2);
    }
}
