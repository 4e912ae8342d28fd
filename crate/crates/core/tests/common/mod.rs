#![allow(dead_code)]

use locint_core::linalg::{orthonormalize, CMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn random_complex(rng: &mut impl Rng) -> C64 {
    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| random_complex(rng))
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMatrix {
    let a = random_matrix(rng, n, n);
    (&a + &a.adjoint()).scale(c(0.5, 0.0))
}

pub fn random_unitary(rng: &mut impl Rng, n: usize) -> CMatrix {
    loop {
        let s = orthonormalize(&random_matrix(rng, n, n), 1e-6);
        if s.dim() == n {
            return s.basis().clone();
        }
    }
}

pub fn random_vector(rng: &mut impl Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| random_complex(rng)).collect()
}

/// Rank by Gaussian elimination with partial pivoting; independent of the library kernels.
pub fn gaussian_rank(m: &CMatrix, tol: f64) -> usize {
    let mut a: Vec<Vec<C64>> = (0..m.rows()).map(|i| m.row(i).to_vec()).collect();
    let (rows, cols) = (m.rows(), m.cols());
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let piv = (rank..rows)
            .max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm()))
            .unwrap();
        if a[piv][col].norm() <= tol {
            continue;
        }
        a.swap(rank, piv);
        for r in rank + 1..rows {
            let f = a[r][col] / a[rank][col];
            for k in col..cols {
                let v = a[rank][k];
                a[r][k] -= f * v;
            }
        }
        rank += 1;
    }
    rank
}

/// Dimension of the commutant by eliminating the explicit Kronecker system.
pub fn brute_commutant_dim(d: usize, gens: &[CMatrix]) -> usize {
    let id = CMatrix::identity(d);
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for g in gens {
        let a = &g.kron(&id) - &id.kron(&g.transpose());
        for i in 0..a.rows() {
            rows.push(a.row(i).to_vec());
        }
    }
    if rows.is_empty() {
        return d * d;
    }
    d * d - gaussian_rank(&CMatrix::from_rows(&rows).unwrap(), 1e-8)
}

use std::collections::BTreeMap;

use locint_core::direct_integral::FiberFamily;
use locint_core::measure::{FiniteMeasurableSpace, LocallyStandardMeasureSpace, MeasurableChain, MeasureChain, PointId};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Measure space with `levels` nested point sets; each level partition is the trace
/// of a random top partition (`discrete` forces singletons). Weights are random
/// rationals, zero with probability `zero_prob`.
pub fn random_measure_space(
    r: &mut impl Rng,
    points: usize,
    levels: usize,
    discrete: bool,
    zero_prob: f64,
) -> LocallyStandardMeasureSpace {
    let names: Vec<PointId> = (0..points).map(|i| format!("p{i}")).collect();
    let nblocks = if discrete { points } else { r.gen_range(1..=points) };
    let label: Vec<usize> = (0..points)
        .map(|i| if discrete { i } else { r.gen_range(0..nblocks) })
        .collect();
    let mut order: Vec<usize> = (0..points).collect();
    order.shuffle(r);
    let mut sizes: Vec<usize> = (0..levels).map(|_| r.gen_range(1..=points)).collect();
    sizes.sort();
    sizes[levels - 1] = points;
    let spaces = sizes
        .iter()
        .map(|&k| {
            let here: Vec<usize> = order[..k].to_vec();
            let mut blocks: BTreeMap<usize, Vec<PointId>> = BTreeMap::new();
            for &i in &here {
                blocks.entry(label[i]).or_default().push(names[i].clone());
            }
            FiniteMeasurableSpace::new(here.iter().map(|&i| names[i].clone()).collect(), blocks.into_values().collect())
                .unwrap()
        })
        .collect();
    let chain = MeasurableChain::new(spaces).unwrap();
    let weights = names
        .iter()
        .map(|p| {
            let w = if r.gen_bool(zero_prob) {
                rational(0, 1)
            } else {
                rational(r.gen_range(1..6), r.gen_range(1..5))
            };
            (p.clone(), w)
        })
        .collect();
    LocallyStandardMeasureSpace::new(MeasureChain::new(chain, weights).unwrap()).unwrap()
}

/// Random nondecreasing fiber dimensions, zero before each point appears.
pub fn random_fibers(r: &mut impl Rng, space: LocallyStandardMeasureSpace, max_step: usize) -> FiberFamily {
    let levels = space.levels();
    let dims = space
        .points()
        .iter()
        .map(|p| {
            let mut acc = 0;
            let d = (0..levels)
                .map(|n| {
                    if space.contains(n, p) {
                        acc += r.gen_range(0..=max_step);
                    }
                    acc
                })
                .collect();
            (p.clone(), d)
        })
        .collect();
    FiberFamily::new(space, dims).unwrap()
}

use locint_core::hilbert::{HilbertChain, LocalOperator};

/// Random locally bounded operator: independent blocks on consecutive level increments.
pub fn random_local_operator(r: &mut impl Rng, chain: &HilbertChain) -> LocalOperator {
    let d = chain.ambient_dim();
    let mut top = CMatrix::zeros(d, d);
    let mut lo = 0;
    for &hi in chain.dims() {
        let b = random_matrix(r, hi - lo, hi - lo);
        for i in lo..hi {
            for j in lo..hi {
                top[(i, j)] = b[(i - lo, j - lo)];
            }
        }
        lo = hi;
    }
    LocalOperator::from_top(chain.clone(), top).unwrap()
}

/// Hermitian `H = ⊕ U_k diag(λ) U_kᴴ` over the level increments, with eigenvalues drawn
/// from `1..=max_value`. Returns `H` and the eigenvalues listed per increment.
pub fn random_spectral_hermitian(
    r: &mut impl Rng,
    chain: &HilbertChain,
    max_value: u32,
) -> (LocalOperator, Vec<Vec<u32>>) {
    let d = chain.ambient_dim();
    let mut top = CMatrix::zeros(d, d);
    let mut values = Vec::new();
    let mut lo = 0;
    for &hi in chain.dims() {
        let k = hi - lo;
        let vals: Vec<u32> = (0..k).map(|_| r.gen_range(1..=max_value)).collect();
        if k > 0 {
            let u = random_unitary(r, k);
            let diag = CMatrix::diag_real(&vals.iter().map(|&v| v as f64).collect::<Vec<_>>());
            let b = u.matmul(&diag).matmul(&u.adjoint());
            for i in 0..k {
                for j in 0..k {
                    top[(lo + i, lo + j)] = b[(i, j)];
                }
            }
        }
        values.push(vals);
        lo = hi;
    }
    let top = (&top + &top.adjoint()).scale(c(0.5, 0.0));
    (LocalOperator::from_top(chain.clone(), top).unwrap(), values)
}
