//! Decomposable and diagonalizable operators on a direct integral.
//!
//! An operator on the level chain of a [`DirectIntegralSpace`] is decomposable
//! when every level block is block-diagonal for the fiber splitting, and
//! diagonalizable when in addition each fiber block is a scalar `f(p)` with `f`
//! constant on the atoms of the limit σ-algebra.
//!
//! Level algebras are the finite content of the projective limits: the level-n
//! image of the decomposables is `⊕_p B(H_{n,p})` and the level-n image of the
//! diagonalizables is spanned by indicator projections of limit atoms.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::direct_integral::DirectIntegralSpace;
use crate::hilbert::{HilbertChain, HilbertError, LocalOperator};
use crate::linalg::{commutant, operator_norm, CMatrix, LinalgError, OperatorSpace, C64, ONE, ZERO};
use crate::measure::PointId;
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecompositionError {
    #[error("operator chain {operator:?} does not match the space chain {space:?}")]
    ChainMismatch { operator: Vec<usize>, space: Vec<usize> },
    #[error("operator is not decomposable: {0}")]
    NotDecomposable(FiberMixing),
    #[error("no value for point {point:?} at level {}", level + 1)]
    MissingValue { level: usize, point: PointId },
    #[error("levels {} and {} disagree at {point:?}", lower + 1, upper + 1)]
    IncompatibleFamily {
        lower: usize,
        upper: usize,
        point: PointId,
    },
    #[error("function is not measurable: {first:?} and {second:?} share a limit atom but differ")]
    NotMeasurable { first: PointId, second: PointId },
    #[error("fiber operator at {point:?}: {source}")]
    Fiber { point: PointId, source: HilbertError },
    #[error("unknown point {point:?}")]
    UnknownPoint { point: PointId },
    #[error("level {} does not exist", level + 1)]
    LevelOutOfRange { level: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Largest entry coupling two different fibers.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("level {} entry ({row}, {col}) couples {from:?} to {to:?} with magnitude {magnitude:e}", level + 1)]
pub struct FiberMixing {
    pub level: usize,
    pub row: usize,
    pub col: usize,
    /// Point owning the column (source of the coupling).
    pub from: PointId,
    /// Point owning the row.
    pub to: PointId,
    pub magnitude: f64,
}

/// Why a decomposable operator is not diagonalizable.
#[derive(Debug, Clone, PartialEq)]
pub enum DiagonalObstruction {
    /// Fiber block not scalar: two coordinates of one fiber force different values.
    NotScalar {
        point: PointId,
        level: usize,
        defect: f64,
        /// Fiber coordinates and the diagonal values they force.
        first: (usize, C64),
        second: (usize, C64),
    },
    /// Scalars on two points of one limit atom differ.
    NotMeasurable {
        first: (PointId, C64),
        second: (PointId, C64),
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    Diagonalizable(DiagonalizableOperator),
    DecomposableOnly {
        operator: DecomposableOperator,
        obstruction: DiagonalObstruction,
    },
    LocallyBoundedOnly { witness: FiberMixing },
}

impl Classification {
    pub fn kind(&self) -> &'static str {
        match self {
            Classification::Diagonalizable(_) => "diagonalizable",
            Classification::DecomposableOnly { .. } => "decomposable",
            Classification::LocallyBoundedOnly { .. } => "locally-bounded",
        }
    }

    pub fn is_decomposable(&self) -> bool {
        !matches!(self, Classification::LocallyBoundedOnly { .. })
    }
}

/// Family `{T_p}` of fiber operators over the positive-weight points.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposableOperator {
    fibers: BTreeMap<PointId, LocalOperator>,
}

impl DecomposableOperator {
    /// Each `T_p` must live on the fiber chain `D_p`; points with no entry get the identity.
    pub fn new(space: &DirectIntegralSpace, mut fibers: BTreeMap<PointId, LocalOperator>) -> Result<Self, DecompositionError> {
        for p in fibers.keys() {
            if !space.points().contains(p) {
                return Err(DecompositionError::UnknownPoint { point: p.clone() });
            }
        }
        for p in space.points() {
            let chain = fiber_chain(space, p);
            match fibers.get(p) {
                Some(t) if t.chain() != &chain => {
                    return Err(DecompositionError::Fiber {
                        point: p.clone(),
                        source: HilbertError::ChainMismatch {
                            left: t.chain().dims().to_vec(),
                            right: chain.dims().to_vec(),
                        },
                    })
                }
                Some(_) => {}
                None => {
                    fibers.insert(p.clone(), LocalOperator::identity(&chain));
                }
            }
        }
        Ok(Self { fibers })
    }

    pub fn fibers(&self) -> &BTreeMap<PointId, LocalOperator> {
        &self.fibers
    }

    pub fn fiber(&self, p: &str) -> Option<&LocalOperator> {
        self.fibers.get(p)
    }

    /// `T_{n,p}` in fiber coordinates.
    pub fn fiber_block(&self, space: &DirectIntegralSpace, level: usize, p: &str) -> Option<&CMatrix> {
        let first = space.measure_space().first_level(p)?;
        if level < first {
            return None;
        }
        Some(self.fibers.get(p)?.block(level - first))
    }

    /// The induced operator on the level chain of `space`.
    pub fn to_local(&self, space: &DirectIntegralSpace) -> LocalOperator {
        let blocks = (0..space.levels())
            .map(|n| {
                let d = space.chain().dim(n);
                let mut m = CMatrix::zeros(d, d);
                for p in space.level_points(n) {
                    let idx = space.fiber_indices(n, p);
                    let b = self.fiber_block(space, n, p).expect("point exists at this level");
                    for (i, &ri) in idx.iter().enumerate() {
                        for (j, &cj) in idx.iter().enumerate() {
                            m[(ri, cj)] = b[(i, j)];
                        }
                    }
                }
                m
            })
            .collect();
        LocalOperator::new_with(space.chain().clone(), blocks, &Tolerances::default())
            .expect("fiberwise local operators assemble to a local operator")
    }
}

/// `D_p` restricted to the levels where `p` exists.
fn fiber_chain(space: &DirectIntegralSpace, p: &str) -> HilbertChain {
    space.fibers().fiber_chain(p).expect("point of the space")
}

/// `f` constant on limit atoms, acting as `f(p)·Id` on each fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalizableOperator {
    f: BTreeMap<PointId, C64>,
}

impl DiagonalizableOperator {
    /// `f` must be given on every positive-weight point and be constant on limit atoms
    /// (within `scalar` tolerance) there. The stored function takes one value per atom,
    /// read from the first positive point of the atom that has a value; it is defined on
    /// every point of `X`.
    pub fn new(space: &DirectIntegralSpace, f: &BTreeMap<PointId, C64>, tol: &Tolerances) -> Result<Self, DecompositionError> {
        for p in f.keys() {
            if space.measure_space().first_level(p).is_none() {
                return Err(DecompositionError::UnknownPoint { point: p.clone() });
            }
        }
        let ms = space.measure_space();
        for p in space.points() {
            if !f.contains_key(p) {
                return Err(DecompositionError::MissingValue {
                    level: ms.first_level(p).unwrap(),
                    point: p.clone(),
                });
            }
        }
        let values: BTreeMap<PointId, Option<C64>> = space.points().iter().map(|p| (p.clone(), Some(f[p]))).collect();
        match atom_values(space, &values, tol) {
            Ok(glued) => Ok(Self { f: glued }),
            Err(DiagonalObstruction::NotMeasurable { first, second }) => Err(DecompositionError::NotMeasurable {
                first: first.0,
                second: second.0,
            }),
            Err(_) => unreachable!("atom_values only reports measurability"),
        }
    }

    pub fn function(&self) -> &BTreeMap<PointId, C64> {
        &self.f
    }

    pub fn value(&self, p: &str) -> Option<C64> {
        self.f.get(p).copied()
    }

    pub fn to_decomposable(&self, space: &DirectIntegralSpace) -> DecomposableOperator {
        let fibers = space
            .points()
            .iter()
            .map(|p| (p.clone(), LocalOperator::identity(&fiber_chain(space, p)).scale(self.f[p])))
            .collect();
        DecomposableOperator { fibers }
    }

    /// `T_f` on the level chain.
    pub fn to_local(&self, space: &DirectIntegralSpace) -> LocalOperator {
        let top = space.levels() - 1;
        let values: Vec<C64> = (0..space.chain().dim(top)).map(|k| self.f[space.coordinate(k).0]).collect();
        LocalOperator::diagonal(space.chain(), &values).expect("one value per coordinate")
    }
}

/// One value per limit atom from per-point values (`None` = unconstrained).
fn atom_values(
    space: &DirectIntegralSpace,
    values: &BTreeMap<PointId, Option<C64>>,
    tol: &Tolerances,
) -> Result<BTreeMap<PointId, C64>, DiagonalObstruction> {
    let ms = space.measure_space();
    let mut out = BTreeMap::new();
    for atom in ms.limit_sigma().atoms() {
        let mut rep: Option<(&PointId, C64)> = None;
        for p in atom {
            let Some(Some(c)) = values.get(p) else { continue };
            match rep {
                None => rep = Some((p, *c)),
                Some((q, r)) => {
                    if (c - r).norm() > tol.scalar * (1.0 + r.norm()) {
                        return Err(DiagonalObstruction::NotMeasurable {
                            first: (q.clone(), r),
                            second: (p.clone(), *c),
                        });
                    }
                }
            }
        }
        let v = rep.map_or(ZERO, |(_, c)| c);
        for p in atom {
            out.insert(p.clone(), v);
        }
    }
    Ok(out)
}

fn check_chain(space: &DirectIntegralSpace, t: &LocalOperator) -> Result<(), DecompositionError> {
    if t.chain() == space.chain() {
        Ok(())
    } else {
        Err(DecompositionError::ChainMismatch {
            operator: t.chain().dims().to_vec(),
            space: space.chain().dims().to_vec(),
        })
    }
}

/// Largest cross-fiber entry of a level block, if above `compatibility·(1 + max|T|)`.
fn fiber_mixing(space: &DirectIntegralSpace, level: usize, block: &CMatrix, tol: &Tolerances) -> Option<FiberMixing> {
    let d = block.rows();
    let cutoff = tol.compatibility * (1.0 + block.max_abs());
    let owner: Vec<&PointId> = (0..d).map(|k| space.coordinate(k).0).collect();
    let mut worst: Option<FiberMixing> = None;
    for i in 0..d {
        for j in 0..d {
            if owner[i] == owner[j] {
                continue;
            }
            let magnitude = block[(i, j)].norm();
            if magnitude > cutoff && worst.as_ref().map_or(true, |w| magnitude > w.magnitude) {
                worst = Some(FiberMixing {
                    level,
                    row: i,
                    col: j,
                    from: owner[j].clone(),
                    to: owner[i].clone(),
                    magnitude,
                });
            }
        }
    }
    worst
}

/// Sorts a locally bounded operator on the level chain of `space` into the three classes.
pub fn classify(space: &DirectIntegralSpace, t: &LocalOperator, tol: &Tolerances) -> Result<Classification, DecompositionError> {
    check_chain(space, t)?;
    for n in 0..space.levels() {
        if let Some(witness) = fiber_mixing(space, n, t.block(n), tol) {
            return Ok(Classification::LocallyBoundedOnly { witness });
        }
    }
    let ms = space.measure_space();
    let mut fibers = BTreeMap::new();
    for p in space.points() {
        let first = ms.first_level(p).unwrap();
        let blocks = (first..space.levels())
            .map(|n| {
                let idx = space.fiber_indices(n, p);
                t.block(n).select(&idx, &idx)
            })
            .collect();
        let op = LocalOperator::new_with(fiber_chain(space, p), blocks, tol).map_err(|source| DecompositionError::Fiber {
            point: p.clone(),
            source,
        })?;
        fibers.insert(p.clone(), op);
    }
    let operator = DecomposableOperator { fibers };

    // scalars per point, scanning levels upward so the first conflict is the lowest one
    let mut values: BTreeMap<PointId, Option<C64>> = BTreeMap::new();
    for n in 0..space.levels() {
        for p in space.level_points(n) {
            let b = operator.fiber_block(space, n, p).unwrap();
            if let Some(obstruction) = scalar_obstruction(p, n, b, tol) {
                return Ok(Classification::DecomposableOnly { operator, obstruction });
            }
        }
    }
    let top = space.levels() - 1;
    for p in space.points() {
        let b = operator.fiber_block(space, top, p).unwrap();
        let v = (b.rows() > 0).then(|| b.trace() / b.rows() as f64);
        values.insert(p.clone(), v);
    }
    match atom_values(space, &values, tol) {
        Ok(f) => Ok(Classification::Diagonalizable(DiagonalizableOperator { f })),
        Err(obstruction) => Ok(Classification::DecomposableOnly { operator, obstruction }),
    }
}

fn scalar_obstruction(p: &PointId, level: usize, b: &CMatrix, tol: &Tolerances) -> Option<DiagonalObstruction> {
    let d = b.rows();
    if d == 0 {
        return None;
    }
    let c = b.trace() / d as f64;
    let defect = (b - &CMatrix::identity(d).scale(c)).frobenius_norm();
    if defect <= tol.scalar * (1.0 + c.norm()) {
        return None;
    }
    // coordinate 0 against the diagonal entry farthest from it
    let k = (1..d)
        .max_by(|&i, &j| (b[(i, i)] - b[(0, 0)]).norm().total_cmp(&(b[(j, j)] - b[(0, 0)]).norm()))
        .unwrap_or(0);
    Some(DiagonalObstruction::NotScalar {
        point: p.clone(),
        level,
        defect,
        first: (0, b[(0, 0)]),
        second: (k, b[(k, k)]),
    })
}

/// Compression `J*_{upper,lower} T J_{upper,lower}` of a fiber-block-diagonal level block.
pub fn compress(
    space: &DirectIntegralSpace,
    block: &CMatrix,
    upper: usize,
    lower: usize,
    tol: &Tolerances,
) -> Result<CMatrix, DecompositionError> {
    for level in [upper, lower] {
        if level >= space.levels() {
            return Err(DecompositionError::LevelOutOfRange { level });
        }
    }
    let d = space.chain().dim(upper);
    if block.rows() != d || block.cols() != d || lower > upper {
        return Err(DecompositionError::ChainMismatch {
            operator: vec![block.rows()],
            space: vec![d],
        });
    }
    if let Some(w) = fiber_mixing(space, upper, block, tol) {
        return Err(DecompositionError::NotDecomposable(w));
    }
    let dm = space.chain().dim(lower);
    let mut out = CMatrix::zeros(dm, dm);
    for p in space.level_points(lower) {
        let idx = space.fiber_indices(lower, p);
        for &i in &idx {
            for &j in &idx {
                out[(i, j)] = block[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Glues per-level functions `f_n` on the positive points of `X_n` into one `f`.
pub fn glue_diag_functions(
    space: &DirectIntegralSpace,
    levels: &[BTreeMap<PointId, C64>],
    tol: &Tolerances,
) -> Result<DiagonalizableOperator, DecompositionError> {
    if levels.len() != space.levels() {
        return Err(DecompositionError::LevelOutOfRange { level: levels.len() });
    }
    for (n, f) in levels.iter().enumerate() {
        for p in space.level_points(n) {
            if !f.contains_key(p) {
                return Err(DecompositionError::MissingValue { level: n, point: p.clone() });
            }
        }
    }
    for upper in 1..levels.len() {
        for lower in 0..upper {
            for p in space.level_points(lower) {
                let (a, b) = (levels[lower][p], levels[upper][p]);
                if (a - b).norm() > tol.scalar * (1.0 + a.norm()) {
                    return Err(DecompositionError::IncompatibleFamily {
                        lower,
                        upper,
                        point: p.clone(),
                    });
                }
            }
        }
    }
    let ms = space.measure_space();
    let f = space
        .points()
        .iter()
        .map(|p| (p.clone(), levels[ms.first_level(p).unwrap()][p]))
        .collect();
    DiagonalizableOperator::new(space, &f, tol)
}

/// A `*`-subalgebra of `B(H_n)` given by a trace-orthonormal basis.
#[derive(Debug, Clone)]
pub struct LevelAlgebra {
    pub level: usize,
    pub span: OperatorSpace,
}

impl LevelAlgebra {
    pub fn dim(&self) -> usize {
        self.span.dim()
    }

    pub fn basis(&self) -> &[CMatrix] {
        self.span.basis()
    }

    /// Worst residual of adjoints, pairwise products and the identity against the span.
    pub fn closure_residual(&self) -> f64 {
        let basis = self.span.basis();
        let mut worst = self.span.residual(&CMatrix::identity(self.span.size()));
        for a in basis {
            worst = worst.max(self.span.residual(&a.adjoint()));
            for b in basis {
                worst = worst.max(self.span.residual(&a.matmul(b)));
            }
        }
        worst
    }
}

/// Indicator projections of the limit atoms meeting `X_n`, at level `n`.
pub fn diag_generators(space: &DirectIntegralSpace, level: usize) -> Vec<CMatrix> {
    let d = space.chain().dim(level);
    let ms = space.measure_space();
    ms.limit_sigma()
        .atoms()
        .iter()
        .filter_map(|atom| {
            let mut m = CMatrix::zeros(d, d);
            let mut any = false;
            for p in atom {
                if !ms.contains(level, p) {
                    continue;
                }
                for k in space.fiber_indices(level, p) {
                    m[(k, k)] = ONE;
                    any = true;
                }
            }
            any.then_some(m)
        })
        .collect()
}

/// Level-n image of the diagonalizable operators.
pub fn diag_level_span(space: &DirectIntegralSpace, level: usize, tol: &Tolerances) -> OperatorSpace {
    OperatorSpace::span(space.chain().dim(level), &diag_generators(space, level), tol.rank)
}

/// Matrix units spanning `⊕_p B(H_{n,p})`.
pub fn dec_generators(space: &DirectIntegralSpace, level: usize) -> Vec<CMatrix> {
    let d = space.chain().dim(level);
    let mut out = Vec::new();
    for p in space.level_points(level) {
        let idx = space.fiber_indices(level, p);
        for &i in &idx {
            for &j in &idx {
                let mut m = CMatrix::zeros(d, d);
                m[(i, j)] = ONE;
                out.push(m);
            }
        }
    }
    out
}

/// Level-n image of the decomposable operators.
pub fn dec_level_span(space: &DirectIntegralSpace, level: usize, tol: &Tolerances) -> OperatorSpace {
    OperatorSpace::span(space.chain().dim(level), &dec_generators(space, level), tol.rank)
}

/// Commutant of the level-n image of the diagonalizable operators inside `B(H_n)`.
pub fn diag_commutant(space: &DirectIntegralSpace, level: usize, tol: &Tolerances) -> Result<LevelAlgebra, DecompositionError> {
    if level >= space.levels() {
        return Err(DecompositionError::LevelOutOfRange { level });
    }
    let span = commutant(space.chain().dim(level), &diag_generators(space, level), tol)?;
    Ok(LevelAlgebra { level, span })
}

/// `Σ_A (Σ_{p ∈ A ∩ X_n} dim H_{n,p})²` over limit atoms `A`.
pub fn expected_commutant_dim(space: &DirectIntegralSpace, level: usize) -> usize {
    let ms = space.measure_space();
    ms.limit_sigma()
        .atoms()
        .iter()
        .map(|atom| {
            let s: usize = atom
                .iter()
                .filter(|p| ms.contains(level, p) && ms.is_positive(p))
                .map(|p| space.fiber_dim(level, p))
                .sum();
            s * s
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommutantLevelReport {
    pub level: usize,
    pub diag_dim: usize,
    pub dec_dim: usize,
    pub commutant_dim: usize,
    pub expected_commutant_dim: usize,
    pub double_commutant_dim: usize,
    /// Largest commutator among diagonalizable generators.
    pub diag_abelian_residual: f64,
    pub diag_in_dec: f64,
    pub dec_in_commutant: f64,
    pub commutant_in_dec: f64,
}

impl CommutantLevelReport {
    pub fn equal(&self, tol: &Tolerances) -> bool {
        self.dec_in_commutant <= tol.containment
            && self.commutant_in_dec <= tol.containment
            && self.dec_dim == self.commutant_dim
    }

    /// The inclusion chain diag ⊆ dec ⊆ commutant of diag.
    pub fn inclusions_hold(&self, tol: &Tolerances) -> bool {
        self.diag_in_dec <= tol.containment && self.dec_in_commutant <= tol.containment
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommutantReport {
    pub levels: Vec<CommutantLevelReport>,
}

impl CommutantReport {
    pub fn equal_at_every_level(&self, tol: &Tolerances) -> bool {
        self.levels.iter().all(|l| l.equal(tol))
    }

    pub fn passed(&self, tol: &Tolerances) -> bool {
        self.levels.iter().all(|l| l.inclusions_hold(tol) && l.diag_abelian_residual <= tol.compatibility)
            && self.equal_at_every_level(tol)
    }
}

/// Level-by-level comparison of the decomposables with the commutant of the diagonalizables.
pub fn check_dec_equals_diag_commutant(
    space: &DirectIntegralSpace,
    tol: &Tolerances,
) -> Result<CommutantReport, DecompositionError> {
    let mut levels = Vec::new();
    for n in 0..space.levels() {
        let d = space.chain().dim(n);
        let gens = diag_generators(space, n);
        let diag = OperatorSpace::span(d, &gens, tol.rank);
        let dec = dec_level_span(space, n, tol);
        let comm = diag_commutant(space, n, tol)?;
        let double = commutant(d, comm.basis(), tol)?;
        let mut abelian = 0.0f64;
        for a in &gens {
            for b in &gens {
                abelian = abelian.max(a.commutator(b).frobenius_norm());
            }
        }
        levels.push(CommutantLevelReport {
            level: n,
            diag_dim: diag.dim(),
            dec_dim: dec.dim(),
            commutant_dim: comm.dim(),
            expected_commutant_dim: expected_commutant_dim(space, n),
            double_commutant_dim: double.dim(),
            diag_abelian_residual: abelian,
            diag_in_dec: dec.contains_residual(&diag),
            dec_in_commutant: comm.span.contains_residual(&dec),
            commutant_in_dec: dec.contains_residual(&comm.span),
        });
    }
    Ok(CommutantReport { levels })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DilationReport {
    /// `max_j ‖V_m T^j V_m^* − C^*(V_n T^j V_n^*)C‖_F`.
    pub max_residual: f64,
    /// Same, each term divided by `1 + ‖T_n‖^j`.
    pub max_relative: f64,
    /// `‖C^*C − I‖_F` for `C = V_n J_{n,m} V_m^*`.
    pub isometry_defect: f64,
}

impl DilationReport {
    pub fn passed(&self, tol: &Tolerances) -> bool {
        self.max_relative <= tol.dilation && self.isometry_defect <= tol.dilation
    }
}

/// Compares level-m powers with compressed level-n powers through the identifications.
pub fn check_dilation_identity(
    space: &DirectIntegralSpace,
    t: &LocalOperator,
    lower: usize,
    upper: usize,
    max_power: u32,
) -> Result<DilationReport, DecompositionError> {
    check_chain(space, t)?;
    for level in [lower, upper] {
        if level >= space.levels() {
            return Err(DecompositionError::LevelOutOfRange { level });
        }
    }
    let (vm, vn) = (space.identification(lower), space.identification(upper));
    let c = vn.matmul(&space.inclusion(lower, upper)).matmul(&vm.adjoint());
    let isometry_defect = c.adjoint().matmul(&c).sub_identity_norm();
    let norm_n = operator_norm(t.block(upper));
    let (mut tm, mut tn) = (
        CMatrix::identity(space.chain().dim(lower)),
        CMatrix::identity(space.chain().dim(upper)),
    );
    let (mut max_residual, mut max_relative) = (0.0f64, 0.0f64);
    for j in 1..=max_power {
        tm = tm.matmul(t.block(lower));
        tn = tn.matmul(t.block(upper));
        let left = vm.matmul(&tm).matmul(&vm.adjoint());
        let right = c.adjoint().matmul(&vn.matmul(&tn).matmul(&vn.adjoint())).matmul(&c);
        let r = (&left - &right).frobenius_norm();
        max_residual = max_residual.max(r);
        max_relative = max_relative.max(r / (1.0 + norm_n.powi(j as i32)));
    }
    Ok(DilationReport {
        max_residual,
        max_relative,
        isometry_defect,
    })
}
