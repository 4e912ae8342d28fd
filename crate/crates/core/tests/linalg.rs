mod common;

use common::*;
use locint_core::linalg::{
    commutant_solve, hermitian_eig, joint_diagonalize, orthonormalize, CMatrix, OperatorSpace, C64,
};
use proptest::prelude::*;

/// Closed-form eigenvalues of a 2×2 Hermitian matrix, ascending.
fn eig2(a: &CMatrix) -> [f64; 2] {
    let mean = (a[(0, 0)].re + a[(1, 1)].re) / 2.0;
    let half = (a[(0, 0)].re - a[(1, 1)].re) / 2.0;
    let r = (half * half + a[(0, 1)].norm_sqr()).sqrt();
    [mean - r, mean + r]
}

#[test]
fn eig_of_symmetric_2x2_matches_characteristic_roots() {
    let a = CMatrix::from_real(&[&[2.0, 1.0], &[1.0, 2.0]]);
    let e = hermitian_eig(&a).unwrap();
    // λ² − 4λ + 3 = 0
    let tr: f64 = 4.0;
    let det = 3.0;
    let disc = (tr * tr - 4.0 * det).sqrt();
    let want = [(tr - disc) / 2.0, (tr + disc) / 2.0];
    for k in 0..2 {
        assert!((e.values[k] - want[k]).abs() < 1e-14);
    }
}

#[test]
fn eig_of_pauli_y_matches_closed_form() {
    let a = CMatrix::from_rows(&[vec![c(0.0, 0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), c(0.0, 0.0)]])
        .unwrap();
    let e = hermitian_eig(&a).unwrap();
    let want = eig2(&a);
    assert!((e.values[0] - want[0]).abs() < 1e-14 && (want[0] + 1.0).abs() < 1e-15);
    assert!((e.values[1] - want[1]).abs() < 1e-14 && (want[1] - 1.0).abs() < 1e-15);
}

/// Groups coordinates of a diagonal family by their tuple of diagonal entries.
fn diagonal_grouping(diags: &[Vec<f64>]) -> Vec<(Vec<f64>, Vec<usize>)> {
    let n = diags[0].len();
    let mut groups: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let key: Vec<f64> = diags.iter().map(|d| d[i]).collect();
        match groups.iter_mut().find(|g| g.0 == key) {
            Some(g) => g.1.push(i),
            None => groups.push((key, vec![i])),
        }
    }
    groups.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    groups
}

fn check_against_grouping(diags: &[Vec<f64>]) {
    let mats: Vec<CMatrix> = diags.iter().map(|d| CMatrix::diag_real(d)).collect();
    let s = joint_diagonalize(&mats).unwrap();
    let groups = diagonal_grouping(diags);
    assert_eq!(s.len(), groups.len());
    let n = diags[0].len();
    for (k, (key, idx)) in groups.iter().enumerate() {
        let label: Vec<f64> = s.labels[k].iter().map(|z| z.re).collect();
        for (a, b) in label.iter().zip(key) {
            assert!((a - b).abs() < 1e-12);
        }
        let want = CMatrix::diag_real(
            &(0..n)
                .map(|i| if idx.contains(&i) { 1.0 } else { 0.0 })
                .collect::<Vec<_>>(),
        );
        assert!((&s.projections[k] - &want).max_abs() < 1e-12);
    }
}

#[test]
fn joint_diagonalize_groups_repeated_eigenvalue() {
    check_against_grouping(&[vec![1.0, 1.0, 2.0]]);
}

#[test]
fn joint_diagonalize_two_generators() {
    check_against_grouping(&[vec![1.0, 2.0], vec![3.0, 3.0]]);
    let s = joint_diagonalize(&[CMatrix::diag_real(&[1.0, 2.0]), CMatrix::diag_real(&[3.0, 3.0])]).unwrap();
    assert_eq!(s.labels[0], vec![c(1.0, 0.0), c(3.0, 0.0)]);
    assert_eq!(s.labels[1], vec![c(2.0, 0.0), c(3.0, 0.0)]);
}

#[test]
fn joint_diagonalize_rotated_family_matches_grouping() {
    let mut r = rng(11);
    let u = random_unitary(&mut r, 5);
    let diags = [vec![1.0, 2.0, 1.0, 2.0, 3.0], vec![0.0, 0.0, 4.0, 0.0, 0.0]];
    let mats: Vec<CMatrix> = diags
        .iter()
        .map(|d| u.matmul(&CMatrix::diag_real(d)).matmul(&u.adjoint()))
        .collect();
    let s = joint_diagonalize(&mats).unwrap();
    let groups = diagonal_grouping(&diags);
    assert_eq!(s.ranks(), groups.iter().map(|g| g.1.len()).collect::<Vec<_>>());
    assert!(s.reconstruction_residual < 1e-10);
}

#[test]
fn orthonormalize_rank_matches_gram_determinant() {
    let s2 = 1.0 / 2f64.sqrt();
    let v = CMatrix::from_real(&[&[s2, s2, 1.0], &[s2, -s2, 0.0]]);
    let gram = v.adjoint().matmul(&v);
    // det of the full 3x3 Gram vanishes, the leading 2x2 minor does not.
    let det3 = det(&gram);
    let det2 = det(&gram.leading(2));
    assert!(det3.norm() < 1e-14 && det2.norm() > 0.5);
    assert_eq!(orthonormalize(&v, 1e-9).dim(), 2);
    assert_eq!(orthonormalize(&CMatrix::identity(2), 1e-9).basis(), &CMatrix::identity(2));
}

fn det(m: &CMatrix) -> C64 {
    let n = m.rows();
    if n == 1 {
        return m[(0, 0)];
    }
    (0..n)
        .map(|j| {
            let minor = CMatrix::from_fn(n - 1, n - 1, |i, k| m[(i + 1, if k < j { k } else { k + 1 })]);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            m[(0, j)] * det(&minor) * sign
        })
        .sum()
}

#[test]
fn commutant_of_diagonal_matches_entrywise_constraints() {
    let d = [1.0, 2.0];
    let basis = commutant_solve(2, &[CMatrix::diag_real(&d)]).unwrap();
    // T_ij (λ_i − λ_j) = 0 leaves the pairs with equal eigenvalues free.
    let free = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .filter(|&(i, j)| d[i] == d[j])
        .count();
    assert_eq!(basis.len(), free);
    assert_eq!(basis.len(), brute_commutant_dim(2, &[CMatrix::diag_real(&d)]));
}

#[test]
fn commutant_of_full_matrix_algebra_is_scalars() {
    let units: Vec<CMatrix> = (0..4)
        .map(|k| {
            let mut m = CMatrix::zeros(2, 2);
            m[(k / 2, k % 2)] = c(1.0, 0.0);
            m
        })
        .collect();
    let basis = commutant_solve(2, &units).unwrap();
    assert_eq!(basis.len(), 1);
    assert_eq!(brute_commutant_dim(2, &units), 1);
    let s = basis[0].scale(c(2f64.sqrt(), 0.0));
    let phase = s[(0, 0)] / s[(0, 0)].norm();
    assert!((&s.scale(phase.conj()) - &CMatrix::identity(2)).max_abs() < 1e-9);
}

#[test]
fn commutant_of_identity_is_everything() {
    for d in 1..5 {
        assert_eq!(commutant_solve(d, &[CMatrix::identity(d)]).unwrap().len(), d * d);
    }
}

#[test]
fn commutant_dimension_matches_kronecker_elimination() {
    let mut r = rng(5);
    for d in 2..6 {
        let u = random_unitary(&mut r, d);
        let eig: Vec<f64> = (0..d).map(|i| (i % 2) as f64).collect();
        let g = u.matmul(&CMatrix::diag_real(&eig)).matmul(&u.adjoint());
        let h = random_hermitian(&mut r, d);
        for gens in [vec![g.clone()], vec![g.clone(), h.clone()], vec![h]] {
            assert_eq!(
                commutant_solve(d, &gens).unwrap().len(),
                brute_commutant_dim(d, &gens)
            );
        }
    }
}

fn hermitian_strategy(max: usize) -> impl Strategy<Value = CMatrix> {
    (1..=max, any::<u64>()).prop_map(|(n, seed)| random_hermitian(&mut rng(seed), n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eig_reconstructs(a in hermitian_strategy(32)) {
        let e = hermitian_eig(&a).unwrap();
        let lam = CMatrix::diag_real(&e.values);
        let v = &e.vectors;
        let recon = v.matmul(&lam).matmul(&v.adjoint());
        prop_assert!((&a - &recon).frobenius_norm() <= 1e-8 * (1.0 + a.frobenius_norm()));
        let resid = (&a.matmul(v) - &v.matmul(&lam)).frobenius_norm();
        prop_assert!(resid <= 1e-9 * (1.0 + a.frobenius_norm()));
        prop_assert!(v.adjoint().matmul(v).sub_identity_norm() <= 1e-10);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn joint_projections_partition_identity(seed in any::<u64>(), n in 1usize..9, gens in 1usize..4) {
        let mut r = rng(seed);
        let u = random_unitary(&mut r, n);
        let mats: Vec<CMatrix> = (0..gens)
            .map(|_| {
                let d: Vec<C64> = (0..n)
                    .map(|_| c(r.gen_range(0..3) as f64, r.gen_range(0..2) as f64))
                    .collect();
                u.matmul(&CMatrix::diag(&d)).matmul(&u.adjoint())
            })
            .collect();
        let s = joint_diagonalize(&mats).unwrap();
        let mut sum = CMatrix::zeros(n, n);
        for (k, p) in s.projections.iter().enumerate() {
            sum = &sum + p;
            prop_assert!((&p.matmul(p) - p).max_abs() <= 1e-9);
            for q in &s.projections[k + 1..] {
                prop_assert!(p.matmul(q).max_abs() <= 1e-9);
            }
        }
        prop_assert!(sum.sub_identity_norm() <= 1e-9);
        prop_assert!(s.reconstruction_residual <= 1e-8);
        for w in s.labels.windows(2) {
            prop_assert!(locint_core::linalg::label_cmp(&w[0], &w[1], 1e-7) == std::cmp::Ordering::Less);
        }
    }

    #[test]
    fn commutant_commutes_and_double_commutant_contains_generators(seed in any::<u64>(), n in 1usize..5) {
        let mut r = rng(seed);
        let u = random_unitary(&mut r, n);
        let d: Vec<f64> = (0..n).map(|_| r.gen_range(0..2) as f64).collect();
        let g = u.matmul(&CMatrix::diag_real(&d)).matmul(&u.adjoint());
        let h = random_matrix(&mut r, n, n);
        let gens = if seed % 2 == 0 { vec![g] } else { vec![g, h] };
        let comm = commutant_solve(n, &gens).unwrap();
        for t in &comm {
            for g in &gens {
                prop_assert!(t.commutator(g).frobenius_norm() <= 1e-9);
            }
        }
        let double = OperatorSpace::span(n, &commutant_solve(n, &comm).unwrap(), 1e-9);
        for g in &gens {
            prop_assert!(double.residual(g) <= 1e-8);
        }
    }

    #[test]
    fn commutant_dimension_agrees_with_elimination(seed in any::<u64>(), n in 1usize..6, gens in 1usize..4) {
        let mut r = rng(seed);
        let u = random_unitary(&mut r, n);
        let mats: Vec<CMatrix> = (0..gens)
            .map(|_| {
                let d: Vec<f64> = (0..n).map(|_| r.gen_range(0..3) as f64).collect();
                u.matmul(&CMatrix::diag_real(&d)).matmul(&u.adjoint())
            })
            .collect();
        prop_assert_eq!(commutant_solve(n, &mats).unwrap().len(), brute_commutant_dim(n, &mats));
    }

    #[test]
    fn orthonormalize_is_idempotent_on_spans(seed in any::<u64>(), rows in 1usize..8, cols in 0usize..10) {
        let mut r = rng(seed);
        let rank = r.gen_range(0..=rows.min(cols));
        let v = random_matrix(&mut r, rows, rank).matmul(&random_matrix(&mut r, rank, cols));
        let once = orthonormalize(&v, 1e-9);
        let twice = orthonormalize(once.basis(), 1e-9);
        prop_assert_eq!(once.dim(), twice.dim());
        prop_assert!(once.distance(&twice) <= 1e-9);
        prop_assert!(once.basis().adjoint().matmul(once.basis()).sub_identity_norm() <= 1e-10);
    }
}

use rand::Rng;

#[test]
fn rounding_noise_generators_add_nothing() {
    let noise = CMatrix::from_real(&[&[1e-15, -2e-16], &[3e-16, 1e-15]]);
    let g = CMatrix::diag_real(&[3.0, 3.0]);
    assert_eq!(OperatorSpace::algebra(2, &[g.clone(), noise.clone()], 1e-9).dim(), 1);
    assert_eq!(OperatorSpace::span(2, &[g, noise], 1e-9).dim(), 1);
}
