//! Fixture generators shared by the benchmarks.

use locint_core::linalg::orthonormalize;
use locint_core::{AbelianPresentation, CMatrix, HilbertChain, LocalOperator, Tolerances, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_complex(r: &mut impl Rng) -> C64 {
    C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
}

pub fn random_hermitian(n: usize, seed: u64) -> CMatrix {
    let mut r = rng(seed);
    let a = CMatrix::from_fn(n, n, |_, _| random_complex(&mut r));
    (&a + &a.adjoint()).scale(C64::new(0.5, 0.0))
}

fn random_unitary(r: &mut impl Rng, n: usize) -> CMatrix {
    loop {
        let a = CMatrix::from_fn(n, n, |_, _| random_complex(r));
        let s = orthonormalize(&a, 1e-6);
        if s.dim() == n {
            return s.basis().clone();
        }
    }
}

/// `U diag(λ) Uᴴ` with `λ` drawn from `1..=distinct`, so eigenvalues repeat.
fn degenerate_hermitian(r: &mut impl Rng, n: usize, distinct: u32) -> CMatrix {
    let u = random_unitary(r, n);
    let vals: Vec<f64> = (0..n).map(|_| r.gen_range(1..=distinct) as f64).collect();
    let h = u.matmul(&CMatrix::diag_real(&vals)).matmul(&u.adjoint());
    (&h + &h.adjoint()).scale(C64::new(0.5, 0.0))
}

/// Two commuting Hermitian generators with repeated eigenvalues; their commutant is
/// block diagonal in a shared eigenbasis and has dimension well above `n`.
pub fn commuting_generators(n: usize, seed: u64) -> Vec<CMatrix> {
    let mut r = rng(seed);
    let h = degenerate_hermitian(&mut r, n, 3);
    let h2 = h.matmul(&h);
    vec![h, h2]
}

/// Chain with `levels` equal increments of `step`, a spectral Hermitian with values in
/// `1..=4` on each increment, and the presentation generated by it and its square.
pub fn presentation(levels: usize, step: usize, seed: u64) -> AbelianPresentation {
    let mut r = rng(seed);
    let chain = HilbertChain::new((1..=levels).map(|n| n * step).collect()).unwrap();
    let d = chain.ambient_dim();
    let mut top = CMatrix::zeros(d, d);
    for n in 0..levels {
        let b = degenerate_hermitian(&mut r, step, 4);
        for i in 0..step {
            for j in 0..step {
                top[(n * step + i, n * step + j)] = b[(i, j)];
            }
        }
    }
    let h = LocalOperator::from_top(chain.clone(), top).unwrap();
    let h2 = h.power(2);
    AbelianPresentation::new(chain, vec![h, h2], &Tolerances::default()).unwrap()
}
