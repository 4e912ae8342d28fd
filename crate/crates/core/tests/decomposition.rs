mod common;

use std::collections::BTreeMap;

use common::{brute_commutant_dim, c, random_fibers, random_local_operator, random_measure_space, rng};
use locint_core::decomposition::{
    check_dec_equals_diag_commutant, check_dilation_identity, classify, compress, dec_level_span, diag_commutant,
    diag_generators, expected_commutant_dim, glue_diag_functions, Classification, DecomposableOperator,
    DecompositionError, DiagonalObstruction, DiagonalizableOperator,
};
use locint_core::direct_integral::{build_direct_integral, DirectIntegralSpace, FiberFamily};
use locint_core::hilbert::LocalOperator;
use locint_core::linalg::{commutant, CMatrix, OperatorSpace, C64};
use locint_core::measure::{
    FiniteMeasurableSpace, LocallyStandardMeasureSpace, MeasurableChain, MeasureChain, PointId,
};
use locint_core::Tolerances;
use proptest::prelude::*;
use rand::Rng;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn names(xs: &[&str]) -> Vec<PointId> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// Counting measure, singleton σ-algebras, nested point lists.
fn counting(levels: &[&[&str]]) -> LocallyStandardMeasureSpace {
    let chain = MeasurableChain::new(
        levels
            .iter()
            .map(|l| FiniteMeasurableSpace::discrete(names(l)).unwrap())
            .collect(),
    )
    .unwrap();
    LocallyStandardMeasureSpace::new(MeasureChain::counting(chain).unwrap()).unwrap()
}

fn space_with(ms: LocallyStandardMeasureSpace, dims: &[(&str, &[usize])]) -> DirectIntegralSpace {
    let map = dims.iter().map(|(p, d)| (p.to_string(), d.to_vec())).collect();
    build_direct_integral(FiberFamily::new(ms, map).unwrap()).unwrap()
}

/// Counting measure on `1..=n` with `X_k = {1..k}`, fiber at "1" of dimensions `1..=n`,
/// all other fibers zero, and `T e_k = k e_k` on that fiber.
fn growing_fiber_example(n: usize) -> (DirectIntegralSpace, LocalOperator) {
    let pts: Vec<String> = (1..=n).map(|k| k.to_string()).collect();
    let levels: Vec<Vec<&str>> = (1..=n).map(|k| pts[..k].iter().map(String::as_str).collect()).collect();
    let level_refs: Vec<&[&str]> = levels.iter().map(Vec::as_slice).collect();
    let ms = counting(&level_refs);
    let one: Vec<usize> = (1..=n).collect();
    let di = space_with(ms, &[("1", &one)]);
    let blocks = (1..=n)
        .map(|d| CMatrix::diag_real(&(1..=d).map(|k| k as f64).collect::<Vec<_>>()))
        .collect();
    let t = LocalOperator::new(di.chain().clone(), blocks).unwrap();
    (di, t)
}

fn swap_space() -> (DirectIntegralSpace, LocalOperator) {
    let di = space_with(counting(&[&["a", "b"], &["a", "b"]]), &[("a", &[1, 1]), ("b", &[1, 1])]);
    let swap = CMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]);
    let t = LocalOperator::new(di.chain().clone(), vec![swap.clone(), swap]).unwrap();
    (di, t)
}

#[test]
fn identity_is_diagonalizable_with_unit_function() {
    let di = space_with(counting(&[&["a"], &["a", "b"]]), &[("a", &[1, 2]), ("b", &[0, 3])]);
    match classify(&di, &LocalOperator::identity(di.chain()), &tol()).unwrap() {
        Classification::Diagonalizable(d) => {
            assert!(d.function().values().all(|v| *v == c(1.0, 0.0)));
            assert_eq!(d.function().len(), 2);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn growing_fiber_is_decomposable_not_diagonalizable() {
    let (di, t) = growing_fiber_example(6);
    let cls = classify(&di, &t, &tol()).unwrap();
    assert_eq!(cls.kind(), "decomposable");
    let Classification::DecomposableOnly { operator, obstruction } = cls else { unreachable!() };
    // e_1 forces f(1) = 1 and e_2 forces f(1) = 2 at the second level
    assert_eq!(
        obstruction,
        DiagonalObstruction::NotScalar {
            point: "1".into(),
            level: 1,
            defect: 0.5f64.sqrt(),
            first: (0, c(1.0, 0.0)),
            second: (1, c(2.0, 0.0)),
        }
    );
    assert_eq!(operator.fiber("1").unwrap().block(5), &CMatrix::diag_real(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
}

#[test]
fn fiber_swap_is_only_locally_bounded() {
    let (di, t) = swap_space();
    let Classification::LocallyBoundedOnly { witness } = classify(&di, &t, &tol()).unwrap() else {
        panic!("expected fiber mixing");
    };
    assert_eq!(witness.level, 0);
    assert_eq!(witness.magnitude, 1.0);
    assert_ne!(witness.from, witness.to);

    let f = BTreeMap::from([("a".to_string(), c(0.0, 0.0)), ("b".to_string(), c(1.0, 0.0))]);
    let tf = DiagonalizableOperator::new(&di, &f, &tol()).unwrap().to_local(&di);
    // [S, diag(0,1)] = [[0,1],[-1,0]] by hand, Frobenius norm √2
    let comm = t.top().commutator(tf.top()).frobenius_norm();
    assert!((comm - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn mismatched_chain_is_rejected() {
    let (di, _) = swap_space();
    let other = LocalOperator::identity(&locint_core::HilbertChain::new(vec![3]).unwrap());
    assert!(matches!(classify(&di, &other, &tol()), Err(DecompositionError::ChainMismatch { .. })));
}

#[test]
fn coarse_atom_blocks_diagonalizability() {
    // a and b share a limit atom, so f must agree on them
    let chain = MeasurableChain::new(vec![FiniteMeasurableSpace::new(names(&["a", "b"]), vec![names(&["a", "b"])]).unwrap()])
        .unwrap();
    let ms = LocallyStandardMeasureSpace::new(MeasureChain::counting(chain).unwrap()).unwrap();
    let di = space_with(ms, &[("a", &[1]), ("b", &[1])]);
    let t = LocalOperator::new(di.chain().clone(), vec![CMatrix::diag_real(&[1.0, 2.0])]).unwrap();
    let cls = classify(&di, &t, &tol()).unwrap();
    assert!(matches!(
        cls,
        Classification::DecomposableOnly { obstruction: DiagonalObstruction::NotMeasurable { .. }, .. }
    ));
    let f = BTreeMap::from([("a".to_string(), c(1.0, 0.0)), ("b".to_string(), c(2.0, 0.0))]);
    assert!(matches!(
        DiagonalizableOperator::new(&di, &f, &tol()),
        Err(DecompositionError::NotMeasurable { .. })
    ));
}

#[test]
fn compression_examples() {
    let di = space_with(counting(&[&["a"], &["a", "b"]]), &[("a", &[1, 2]), ("b", &[0, 2])]);
    assert_eq!(compress(&di, &CMatrix::identity(4), 1, 0, &tol()).unwrap(), CMatrix::identity(1));
    let mut r = rng(5);
    let fibers = di
        .points()
        .iter()
        .map(|p| (p.clone(), random_local_operator(&mut r, &di.fibers().fiber_chain(p).unwrap())))
        .collect();
    let t = DecomposableOperator::new(&di, fibers).unwrap().to_local(&di);
    assert_eq!(compress(&di, t.block(1), 1, 0, &tol()).unwrap(), *t.block(0));
    // direct submatrix oracle on a fiber-block-diagonal matrix that ignores the filtration
    let mut m = CMatrix::zeros(4, 4);
    for p in ["a", "b"] {
        let idx = di.fiber_indices(1, p);
        for &i in &idx {
            for &j in &idx {
                m[(i, j)] = c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
            }
        }
    }
    let want = m.select(&[0], &[0]);
    assert_eq!(compress(&di, &m, 1, 0, &tol()).unwrap(), want);
    let (sw, st) = swap_space();
    assert!(matches!(compress(&sw, st.block(0), 0, 0, &tol()), Err(DecompositionError::NotDecomposable(_))));
}

#[test]
fn commutant_dimension_examples() {
    let one = space_with(counting(&[&["a"]]), &[("a", &[3])]);
    assert_eq!(diag_commutant(&one, 0, &tol()).unwrap().dim(), 9);

    let two = space_with(counting(&[&["a", "b"]]), &[("a", &[1]), ("b", &[2])]);
    let dim = diag_commutant(&two, 0, &tol()).unwrap().dim();
    assert_eq!(dim, 5);
    assert_eq!(dim, brute_commutant_dim(3, &diag_generators(&two, 0)));

    let chain = MeasurableChain::new(vec![FiniteMeasurableSpace::new(names(&["a", "b"]), vec![names(&["a", "b"])]).unwrap()])
        .unwrap();
    let merged = space_with(
        LocallyStandardMeasureSpace::new(MeasureChain::counting(chain).unwrap()).unwrap(),
        &[("a", &[1]), ("b", &[1])],
    );
    let dim = diag_commutant(&merged, 0, &tol()).unwrap().dim();
    assert_eq!(dim, 4);
    assert_eq!(dim, brute_commutant_dim(2, &diag_generators(&merged, 0)));
    assert_eq!(expected_commutant_dim(&merged, 0), 4);
}

#[test]
fn one_dimensional_fibers_collapse_the_three_algebras() {
    let di = space_with(counting(&[&["a"], &["a", "b", "c"]]), &[("a", &[1, 1]), ("b", &[0, 1]), ("c", &[0, 1])]);
    let report = check_dec_equals_diag_commutant(&di, &tol()).unwrap();
    assert!(report.passed(&tol()));
    for l in &report.levels {
        assert_eq!(l.diag_dim, l.dec_dim);
        assert_eq!(l.dec_dim, l.commutant_dim);
    }
}

#[test]
fn uneven_fibers_give_strict_first_inclusion() {
    let di = space_with(counting(&[&["a", "b"]]), &[("a", &[1]), ("b", &[2])]);
    let report = check_dec_equals_diag_commutant(&di, &tol()).unwrap();
    assert!(report.passed(&tol()));
    let l = &report.levels[0];
    assert_eq!((l.diag_dim, l.dec_dim, l.commutant_dim), (2, 5, 5));
}

#[test]
fn zero_dimensional_space_has_trivial_algebras() {
    let di = space_with(counting(&[&["a"]]), &[]);
    let report = check_dec_equals_diag_commutant(&di, &tol()).unwrap();
    let l = &report.levels[0];
    assert_eq!((l.diag_dim, l.dec_dim, l.commutant_dim), (0, 0, 0));
    assert!(report.passed(&tol()));
}

#[test]
fn dilation_identity_examples() {
    let di = space_with(counting(&[&["a"], &["a", "b"]]), &[("a", &[1, 2]), ("b", &[0, 1])]);
    let r = check_dilation_identity(&di, &LocalOperator::identity(di.chain()), 0, 1, 3).unwrap();
    assert_eq!(r.max_residual, 0.0);
    assert_eq!(r.isometry_defect, 0.0);

    // growing diagonal spread over one-dimensional fibers of a counting measure
    let n = 8;
    let pts: Vec<String> = (1..=n).map(|k| k.to_string()).collect();
    let levels: Vec<Vec<&str>> = (1..=n).map(|k| pts[..k].iter().map(String::as_str).collect()).collect();
    let level_refs: Vec<&[&str]> = levels.iter().map(Vec::as_slice).collect();
    let ms = counting(&level_refs);
    let dims: Vec<(String, Vec<usize>)> = (1..=n)
        .map(|k| (k.to_string(), (1..=n).map(|l| usize::from(l >= k)).collect()))
        .collect();
    let di = build_direct_integral(FiberFamily::new(ms, dims.into_iter().collect()).unwrap()).unwrap();
    let values: Vec<C64> = (1..=n).map(|k| c(k as f64, 0.0)).collect();
    let t = LocalOperator::diagonal(di.chain(), &values).unwrap();
    for m in 0..n {
        for k in m..n {
            let r = check_dilation_identity(&di, &t, m, k, 3).unwrap();
            assert!(r.max_residual <= 1e-12);
        }
    }
}

#[test]
fn glueing_functions() {
    let di = space_with(counting(&[&["a"], &["a", "b"]]), &[("a", &[1, 1]), ("b", &[0, 1])]);
    let one = |p: &str, v: f64| (p.to_string(), c(v, 0.0));
    let constant = vec![BTreeMap::from([one("a", 3.0)]), BTreeMap::from([one("a", 3.0), one("b", 3.0)])];
    let g = glue_diag_functions(&di, &constant, &tol()).unwrap();
    assert!(g.function().values().all(|v| *v == c(3.0, 0.0)));

    let fam = vec![BTreeMap::from([one("a", 1.0)]), BTreeMap::from([one("a", 1.0), one("b", 2.0)])];
    let g = glue_diag_functions(&di, &fam, &tol()).unwrap();
    assert_eq!(g.value("a"), Some(c(1.0, 0.0)));
    assert_eq!(g.value("b"), Some(c(2.0, 0.0)));

    let bad = vec![BTreeMap::from([one("a", 1.0)]), BTreeMap::from([one("a", 2.0), one("b", 2.0)])];
    assert_eq!(
        glue_diag_functions(&di, &bad, &tol()).unwrap_err(),
        DecompositionError::IncompatibleFamily { lower: 0, upper: 1, point: "a".into() }
    );
}

fn random_space(seed: u64, discrete: bool, max_points: usize, max_levels: usize, max_step: usize) -> DirectIntegralSpace {
    let mut r = rng(seed);
    let pts = r.gen_range(1..=max_points);
    let levels = r.gen_range(1..=max_levels);
    let ms = random_measure_space(&mut r, pts, levels, discrete, 0.0);
    build_direct_integral(random_fibers(&mut r, ms, max_step)).unwrap()
}

fn random_decomposable(di: &DirectIntegralSpace, r: &mut impl Rng) -> DecomposableOperator {
    let fibers = di
        .points()
        .iter()
        .map(|p| (p.clone(), random_local_operator(r, &di.fibers().fiber_chain(p).unwrap())))
        .collect();
    DecomposableOperator::new(di, fibers).unwrap()
}

fn random_diagonalizable(di: &DirectIntegralSpace, r: &mut impl Rng) -> DiagonalizableOperator {
    let ms = di.measure_space();
    let mut f = BTreeMap::new();
    for atom in ms.limit_sigma().atoms() {
        let v = c(r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0));
        for p in atom {
            f.insert(p.clone(), v);
        }
    }
    DiagonalizableOperator::new(di, &f, &tol()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn decomposables_round_trip_and_form_a_star_algebra(seed in any::<u64>()) {
        let di = random_space(seed, seed % 2 == 0, 4, 3, 2);
        let mut r = rng(seed ^ 11);
        let a = random_decomposable(&di, &mut r);
        let b = random_decomposable(&di, &mut r);
        let (ta, tb) = (a.to_local(&di), b.to_local(&di));
        match classify(&di, &ta, &tol()).unwrap() {
            Classification::DecomposableOnly { operator, .. } => {
                for p in di.points() {
                    prop_assert_eq!(operator.fiber(p), a.fiber(p));
                }
            }
            Classification::Diagonalizable(_) => {}
            Classification::LocallyBoundedOnly { witness } => prop_assert!(false, "{witness}"),
        }
        for op in [ta.compose(&tb).unwrap(), ta.add(&tb).unwrap(), ta.adjoint(), ta.scale(c(0.0, 2.0))] {
            prop_assert!(classify(&di, &op, &tol()).unwrap().is_decomposable());
        }
    }

    #[test]
    fn diagonalizables_round_trip_and_commute(seed in any::<u64>()) {
        let di = random_space(seed, seed % 2 == 0, 4, 3, 2);
        let mut r = rng(seed ^ 12);
        let f = random_diagonalizable(&di, &mut r);
        let g = random_diagonalizable(&di, &mut r);
        let (tf, tg) = (f.to_local(&di), g.to_local(&di));
        for n in 0..di.levels() {
            prop_assert!(tf.block(n).commutator(tg.block(n)).frobenius_norm() <= 1e-10);
        }
        match classify(&di, &tf, &tol()).unwrap() {
            Classification::Diagonalizable(h) => {
                for p in di.points() {
                    if di.fiber_dim(di.levels() - 1, p) > 0 {
                        prop_assert!((h.value(p).unwrap() - f.value(p).unwrap()).norm() <= 1e-12);
                    }
                }
            }
            other => prop_assert!(false, "{:?}", other.kind()),
        }
        // decomposables commute with diagonalizables
        let a = random_decomposable(&di, &mut r).to_local(&di);
        for n in 0..di.levels() {
            prop_assert!(a.block(n).commutator(tf.block(n)).frobenius_norm() <= 1e-10);
        }
    }

    #[test]
    fn double_commutant_of_diagonal_image(seed in any::<u64>()) {
        let di = random_space(seed, seed % 2 == 0, 4, 3, 2);
        for n in 0..di.levels() {
            let d = di.chain().dim(n);
            let gens = diag_generators(&di, n);
            let span = OperatorSpace::span(d, &gens, 1e-9);
            let comm = commutant(d, &gens, &tol()).unwrap();
            let double = commutant(d, comm.basis(), &tol()).unwrap();
            prop_assert_eq!(double.dim(), span.dim());
            prop_assert!(double.contains_residual(&span) <= 1e-8);
        }
    }

    #[test]
    fn dec_equals_diag_commutant_on_counting_spaces(seed in any::<u64>()) {
        let di = random_space(seed, true, 4, 3, 1);
        let report = check_dec_equals_diag_commutant(&di, &tol()).unwrap();
        prop_assert!(report.passed(&tol()));
        for l in &report.levels {
            prop_assert_eq!(l.commutant_dim, l.expected_commutant_dim);
            prop_assert_eq!(l.commutant_dim, brute_commutant_dim(di.chain().dim(l.level), &diag_generators(&di, l.level)));
            prop_assert_eq!(l.dec_dim, dec_level_span(&di, l.level, &tol()).dim());
        }
    }

    #[test]
    fn dilation_residual_is_tiny(seed in any::<u64>()) {
        let di = random_space(seed, seed % 2 == 0, 4, 3, 2);
        let mut r = rng(seed ^ 13);
        let t = random_local_operator(&mut r, di.chain());
        for m in 0..di.levels() {
            for n in m..di.levels() {
                let rep = check_dilation_identity(&di, &t, m, n, 3).unwrap();
                prop_assert!(rep.passed(&tol()), "{:?}", rep);
            }
        }
    }
}
