//! Chains of finite measurable spaces, their limit σ-algebra, and limit measures.
//!
//! A σ-algebra on a finite set is the set of unions of blocks of a partition, so
//! every level is stored as an ordered point list plus a partition. Levels are
//! 0-based internally.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type PointId = String;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error("point {point:?} listed twice")]
    DuplicatePoint { point: PointId },
    #[error("partition block {block} is empty")]
    EmptyBlock { block: usize },
    #[error("point {point:?} is in more than one block")]
    OverlappingBlocks { point: PointId },
    #[error("point {point:?} is not covered by any block")]
    UncoveredPoint { point: PointId },
    #[error("unknown point {point:?}")]
    UnknownPoint { point: PointId },
    #[error("chain has no levels")]
    EmptyChain,
    #[error("invalid chain: {0}")]
    InvalidChain(ChainViolation),
    #[error("set {points:?} is not measurable{}", level.map(|l| format!(" at level {}", l + 1)).unwrap_or_default())]
    NotMeasurable {
        level: Option<usize>,
        points: Vec<PointId>,
    },
    #[error("maps at levels {} and {} disagree at point {point:?}", lower + 1, upper + 1)]
    IncompatibleFamily {
        lower: usize,
        upper: usize,
        point: PointId,
    },
    #[error("map count {found} does not match level count {expected}")]
    LevelCountMismatch { expected: usize, found: usize },
    #[error("map at level {} is undefined at {point:?}", level + 1)]
    UndefinedMap { level: usize, point: PointId },
    #[error("map at level {} sends {point:?} outside the target", level + 1)]
    OutsideTarget { level: usize, point: PointId },
    #[error("map at level {} is not measurable: preimage of target block {block:?}", level + 1)]
    NonMeasurableMap { level: usize, block: Vec<PointId> },
    #[error("no weight given for point {point:?}")]
    MissingWeight { point: PointId },
    #[error("negative weight for point {point:?}")]
    NegativeWeight { point: PointId },
}

/// First failing condition of a measurable chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChainViolation {
    /// A point of the lower level is missing from the upper level.
    NotNested {
        lower: usize,
        upper: usize,
        point: PointId,
    },
    /// The trace of an upper-level block on the lower level is not a lower-level block.
    TraceMismatch {
        lower: usize,
        upper: usize,
        block: Vec<PointId>,
        trace: Vec<PointId>,
    },
}

impl fmt::Display for ChainViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotNested { lower, upper, point } => write!(
                f,
                "point {point:?} of level {} is missing from level {}",
                lower + 1,
                upper + 1
            ),
            Self::TraceMismatch {
                lower,
                upper,
                block,
                trace,
            } => write!(
                f,
                "level-{} block {block:?} traces to {trace:?}, which is not a level-{} block",
                upper + 1,
                lower + 1
            ),
        }
    }
}

/// Finite set with a σ-algebra given by its atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteMeasurableSpace {
    points: Vec<PointId>,
    blocks: Vec<Vec<PointId>>,
    block_of: HashMap<PointId, usize>,
}

impl FiniteMeasurableSpace {
    /// Validates that `blocks` partitions `points`. Blocks are reordered so that
    /// each follows point order and blocks are sorted by their first point.
    pub fn new(points: Vec<PointId>, blocks: Vec<Vec<PointId>>) -> Result<Self, MeasureError> {
        let mut index = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            if index.insert(p.clone(), i).is_some() {
                return Err(MeasureError::DuplicatePoint { point: p.clone() });
            }
        }
        let mut seen: HashMap<&str, usize> = HashMap::new();
        let mut sorted: Vec<Vec<PointId>> = Vec::with_capacity(blocks.len());
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(MeasureError::EmptyBlock { block: b });
            }
            for p in block {
                if !index.contains_key(p) {
                    return Err(MeasureError::UnknownPoint { point: p.clone() });
                }
                if seen.insert(p, b).is_some() {
                    return Err(MeasureError::OverlappingBlocks { point: p.clone() });
                }
            }
            let mut blk = block.clone();
            blk.sort_by_key(|p| index[p]);
            sorted.push(blk);
        }
        if let Some(p) = points.iter().find(|p| !seen.contains_key(p.as_str())) {
            return Err(MeasureError::UncoveredPoint { point: p.clone() });
        }
        sorted.sort_by_key(|b| index[&b[0]]);
        let block_of = sorted
            .iter()
            .enumerate()
            .flat_map(|(k, b)| b.iter().map(move |p| (p.clone(), k)))
            .collect();
        Ok(Self {
            points,
            blocks: sorted,
            block_of,
        })
    }

    /// Every point is its own atom.
    pub fn discrete(points: Vec<PointId>) -> Result<Self, MeasureError> {
        let blocks = points.iter().map(|p| vec![p.clone()]).collect();
        Self::new(points, blocks)
    }

    pub fn points(&self) -> &[PointId] {
        &self.points
    }

    pub fn blocks(&self) -> &[Vec<PointId>] {
        &self.blocks
    }

    pub fn contains_point(&self, p: &str) -> bool {
        self.block_of.contains_key(p)
    }

    pub fn block_of(&self, p: &str) -> Option<usize> {
        self.block_of.get(p).copied()
    }

    /// Whether `set` is a union of blocks (and a subset of the points).
    pub fn is_measurable(&self, set: &BTreeSet<&str>) -> bool {
        let mut hit = BTreeSet::new();
        for p in set {
            match self.block_of(p) {
                Some(b) => {
                    hit.insert(b);
                }
                None => return false,
            }
        }
        hit.iter()
            .all(|&b| self.blocks[b].iter().all(|q| set.contains(q.as_str())))
    }
}

/// Levels `X_1 ⊆ X_2 ⊆ … ⊆ X_L`. Validity is checked by [`validate_chain`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurableChain {
    levels: Vec<FiniteMeasurableSpace>,
}

impl MeasurableChain {
    pub fn new(levels: Vec<FiniteMeasurableSpace>) -> Result<Self, MeasureError> {
        if levels.is_empty() {
            return Err(MeasureError::EmptyChain);
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[FiniteMeasurableSpace] {
        &self.levels
    }

    pub fn level(&self, n: usize) -> &FiniteMeasurableSpace {
        &self.levels[n]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn top(&self) -> usize {
        self.levels.len() - 1
    }

    /// `⋃ X_n`, ordered by first level of appearance, then by level order.
    pub fn union_points(&self) -> Vec<PointId> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for lvl in &self.levels {
            for p in &lvl.points {
                if seen.insert(p.as_str()) {
                    out.push(p.clone());
                }
            }
        }
        out
    }

    /// First level containing `p`.
    pub fn first_level(&self, p: &str) -> Option<usize> {
        self.levels.iter().position(|l| l.contains_point(p))
    }
}

/// Outcome of [`validate_chain`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainReport {
    pub nested: bool,
    pub trace: bool,
    pub violation: Option<ChainViolation>,
}

impl ChainReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Checks `X_m ⊆ X_n` and `Σ_m = {E ∩ X_m : E ∈ Σ_n}` for every pair `m < n`.
pub fn validate_chain(chain: &MeasurableChain) -> ChainReport {
    let mut nested = true;
    let mut trace = true;
    let mut violation = None;
    let levels = &chain.levels;
    for upper in 0..levels.len() {
        for lower in 0..upper {
            let (lo, hi) = (&levels[lower], &levels[upper]);
            if let Some(p) = lo.points.iter().find(|p| !hi.contains_point(p)) {
                nested = false;
                violation.get_or_insert(ChainViolation::NotNested {
                    lower,
                    upper,
                    point: p.clone(),
                });
                continue;
            }
            for block in &hi.blocks {
                let tr: Vec<PointId> = block
                    .iter()
                    .filter(|p| lo.contains_point(p))
                    .cloned()
                    .collect();
                if tr.is_empty() {
                    continue;
                }
                let b = lo.block_of(&tr[0]).unwrap();
                let same = lo.blocks[b].len() == tr.len()
                    && tr.iter().all(|p| lo.block_of(p) == Some(b));
                if !same {
                    trace = false;
                    let mut ordered = tr.clone();
                    ordered.sort_by_key(|p| lo.points.iter().position(|q| q == p));
                    violation.get_or_insert(ChainViolation::TraceMismatch {
                        lower,
                        upper,
                        block: block.clone(),
                        trace: ordered,
                    });
                    break;
                }
            }
        }
    }
    ChainReport {
        nested,
        trace,
        violation,
    }
}

/// Atoms of `{E ⊆ X : E ∩ X_n ∈ Σ_n for all n}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LimitSigmaAlgebra {
    points: Vec<PointId>,
    atoms: Vec<Vec<PointId>>,
    atom_of: HashMap<PointId, usize>,
}

impl LimitSigmaAlgebra {
    pub fn points(&self) -> &[PointId] {
        &self.points
    }

    pub fn atoms(&self) -> &[Vec<PointId>] {
        &self.atoms
    }

    pub fn atom_of(&self, p: &str) -> Option<usize> {
        self.atom_of.get(p).copied()
    }

    pub fn contains(&self, set: &BTreeSet<&str>) -> bool {
        let mut hit = BTreeSet::new();
        for p in set {
            match self.atom_of(p) {
                Some(a) => {
                    hit.insert(a);
                }
                None => return false,
            }
        }
        hit.iter()
            .all(|&a| self.atoms[a].iter().all(|q| set.contains(q.as_str())))
    }
}

/// Two points are inseparable in the limit exactly when a chain of level blocks
/// links them, so the atoms are the connected components of the union of all
/// level partitions.
pub fn limit_sigma_algebra(chain: &MeasurableChain) -> Result<LimitSigmaAlgebra, MeasureError> {
    if let Some(v) = validate_chain(chain).violation {
        return Err(MeasureError::InvalidChain(v));
    }
    let points = chain.union_points();
    let index: HashMap<&str, usize> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_str(), i))
        .collect();
    let mut parent: Vec<usize> = (0..points.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for lvl in &chain.levels {
        for block in &lvl.blocks {
            for p in &block[1..] {
                let a = find(&mut parent, index[block[0].as_str()]);
                let b = find(&mut parent, index[p.as_str()]);
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<PointId>> = BTreeMap::new();
    for i in 0..points.len() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(points[i].clone());
    }
    let mut atoms: Vec<Vec<PointId>> = groups.into_values().collect();
    atoms.sort_by_key(|a| index[a[0].as_str()]);
    let atom_of = atoms
        .iter()
        .enumerate()
        .flat_map(|(k, a)| a.iter().map(move |p| (p.clone(), k)))
        .collect();
    Ok(LimitSigmaAlgebra {
        points,
        atoms,
        atom_of,
    })
}

/// Map on `X` glued from compatible level maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GluedMap {
    pub values: BTreeMap<PointId, PointId>,
}

impl GluedMap {
    pub fn preimage(&self, targets: &[PointId]) -> BTreeSet<&str> {
        self.values
            .iter()
            .filter(|(_, v)| targets.contains(v))
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

/// Glues measurable maps `f_n : X_n → target` agreeing on overlaps into `Φ : X → target`.
pub fn glue_measurable_maps(
    chain: &MeasurableChain,
    target: &FiniteMeasurableSpace,
    maps: &[BTreeMap<PointId, PointId>],
) -> Result<GluedMap, MeasureError> {
    if maps.len() != chain.len() {
        return Err(MeasureError::LevelCountMismatch {
            expected: chain.len(),
            found: maps.len(),
        });
    }
    for (level, (lvl, f)) in chain.levels.iter().zip(maps).enumerate() {
        for p in &lvl.points {
            match f.get(p) {
                None => {
                    return Err(MeasureError::UndefinedMap {
                        level,
                        point: p.clone(),
                    })
                }
                Some(v) if !target.contains_point(v) => {
                    return Err(MeasureError::OutsideTarget {
                        level,
                        point: p.clone(),
                    })
                }
                _ => {}
            }
        }
        if let Some(k) = f.keys().find(|k| !lvl.contains_point(k)) {
            return Err(MeasureError::UnknownPoint { point: k.clone() });
        }
        for block in &target.blocks {
            let pre: BTreeSet<&str> = f
                .iter()
                .filter(|(_, v)| block.contains(v))
                .map(|(k, _)| k.as_str())
                .collect();
            if !lvl.is_measurable(&pre) {
                return Err(MeasureError::NonMeasurableMap {
                    level,
                    block: block.clone(),
                });
            }
        }
    }
    for upper in 0..maps.len() {
        for lower in 0..upper {
            for p in &chain.levels[lower].points {
                if maps[lower][p] != maps[upper][p] {
                    return Err(MeasureError::IncompatibleFamily {
                        lower,
                        upper,
                        point: p.clone(),
                    });
                }
            }
        }
    }
    let mut values = BTreeMap::new();
    for f in maps {
        for (k, v) in f {
            values.entry(k.clone()).or_insert_with(|| v.clone());
        }
    }
    Ok(GluedMap { values })
}

/// Nonnegative rational or `+∞`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtendedRational {
    Finite(BigRational),
    Infinite,
}

impl ExtendedRational {
    pub fn zero() -> Self {
        Self::Finite(BigRational::zero())
    }

    pub fn finite(&self) -> Option<&BigRational> {
        match self {
            Self::Finite(r) => Some(r),
            Self::Infinite => None,
        }
    }
}

impl std::ops::Add for ExtendedRational {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (Self::Finite(a), Self::Finite(b)) => Self::Finite(a + b),
            _ => Self::Infinite,
        }
    }
}

impl PartialOrd for ExtendedRational {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use std::cmp::Ordering::*;
        Some(match (self, other) {
            (Self::Finite(a), Self::Finite(b)) => a.cmp(b),
            (Self::Finite(_), Self::Infinite) => Less,
            (Self::Infinite, Self::Finite(_)) => Greater,
            (Self::Infinite, Self::Infinite) => Equal,
        })
    }
}

impl fmt::Display for ExtendedRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(r) => write!(f, "{r}"),
            Self::Infinite => write!(f, "inf"),
        }
    }
}

/// Measurable chain with a nonnegative rational weight on every point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasureChain {
    chain: MeasurableChain,
    weights: BTreeMap<PointId, BigRational>,
}

impl MeasureChain {
    pub fn new(
        chain: MeasurableChain,
        weights: BTreeMap<PointId, BigRational>,
    ) -> Result<Self, MeasureError> {
        if let Some(v) = validate_chain(&chain).violation {
            return Err(MeasureError::InvalidChain(v));
        }
        let pts = chain.union_points();
        for p in &pts {
            match weights.get(p) {
                None => return Err(MeasureError::MissingWeight { point: p.clone() }),
                Some(w) if w.is_negative() => {
                    return Err(MeasureError::NegativeWeight { point: p.clone() })
                }
                _ => {}
            }
        }
        if let Some(k) = weights.keys().find(|k| !pts.contains(k)) {
            return Err(MeasureError::UnknownPoint { point: k.clone() });
        }
        Ok(Self { chain, weights })
    }

    /// Unit weight on every point.
    pub fn counting(chain: MeasurableChain) -> Result<Self, MeasureError> {
        let weights = chain
            .union_points()
            .into_iter()
            .map(|p| (p, BigRational::from_integer(BigInt::from(1))))
            .collect();
        Self::new(chain, weights)
    }

    pub fn chain(&self) -> &MeasurableChain {
        &self.chain
    }

    pub fn weights(&self) -> &BTreeMap<PointId, BigRational> {
        &self.weights
    }

    pub fn weight(&self, p: &str) -> Option<&BigRational> {
        self.weights.get(p)
    }

    /// `μ_n(E)`; `E` must belong to `Σ_n`.
    pub fn level_measure(&self, n: usize, set: &BTreeSet<&str>) -> Result<BigRational, MeasureError> {
        if !self.chain.level(n).is_measurable(set) {
            return Err(MeasureError::NotMeasurable {
                level: Some(n),
                points: set.iter().map(|s| s.to_string()).collect(),
            });
        }
        Ok(set.iter().map(|p| self.weights[*p].clone()).sum())
    }

    /// First `(m, n, block)` with `μ_m(B) ≠ μ_n(B)` for a level-m block `B ∈ Σ_n`.
    pub fn projective_defect(&self) -> Option<(usize, usize, Vec<PointId>)> {
        let levels = self.chain.levels();
        for n in 0..levels.len() {
            for m in 0..n {
                for block in levels[m].blocks() {
                    let set: BTreeSet<&str> = block.iter().map(String::as_str).collect();
                    if !levels[n].is_measurable(&set) {
                        continue;
                    }
                    let a = self.level_measure(m, &set).ok();
                    let b = self.level_measure(n, &set).ok();
                    if a != b {
                        return Some((m, n, block.clone()));
                    }
                }
            }
        }
        None
    }
}

/// `μ(E) = lim_n μ_n(E ∩ X_n)`, which on a finite chain is `μ_L(E ∩ X_L)`.
pub fn limit_measure(space: &MeasureChain, set: &BTreeSet<&str>) -> Result<ExtendedRational, MeasureError> {
    let limit = limit_sigma_algebra(&space.chain)?;
    measure_in(space, &limit, set)
}

fn measure_in(
    space: &MeasureChain,
    limit: &LimitSigmaAlgebra,
    set: &BTreeSet<&str>,
) -> Result<ExtendedRational, MeasureError> {
    if !limit.contains(set) {
        return Err(MeasureError::NotMeasurable {
            level: None,
            points: set.iter().map(|s| s.to_string()).collect(),
        });
    }
    let top = space.chain.level(space.chain.top());
    let total: BigRational = set
        .iter()
        .filter(|p| top.contains_point(p))
        .map(|p| space.weights[*p].clone())
        .sum();
    Ok(ExtendedRational::Finite(total))
}

/// A measure chain together with its limit σ-algebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocallyStandardMeasureSpace {
    measure: MeasureChain,
    limit: LimitSigmaAlgebra,
}

impl LocallyStandardMeasureSpace {
    pub fn new(measure: MeasureChain) -> Result<Self, MeasureError> {
        let limit = limit_sigma_algebra(&measure.chain)?;
        Ok(Self { measure, limit })
    }

    pub fn measure_chain(&self) -> &MeasureChain {
        &self.measure
    }

    pub fn chain(&self) -> &MeasurableChain {
        &self.measure.chain
    }

    pub fn limit_sigma(&self) -> &LimitSigmaAlgebra {
        &self.limit
    }

    pub fn levels(&self) -> usize {
        self.measure.chain.len()
    }

    /// `X` in canonical order.
    pub fn points(&self) -> &[PointId] {
        self.limit.points()
    }

    pub fn level_points(&self, n: usize) -> &[PointId] {
        self.measure.chain.level(n).points()
    }

    pub fn contains(&self, n: usize, p: &str) -> bool {
        self.measure.chain.level(n).contains_point(p)
    }

    pub fn first_level(&self, p: &str) -> Option<usize> {
        self.measure.chain.first_level(p)
    }

    pub fn weight(&self, p: &str) -> Option<&BigRational> {
        self.measure.weight(p)
    }

    pub fn weight_f64(&self, p: &str) -> f64 {
        self.measure
            .weight(p)
            .and_then(|w| w.to_f64())
            .unwrap_or(0.0)
    }

    pub fn is_positive(&self, p: &str) -> bool {
        self.measure.weight(p).is_some_and(|w| w.is_positive())
    }

    /// `μ(E)` for a limit-measurable `E`.
    pub fn measure(&self, set: &BTreeSet<&str>) -> Result<ExtendedRational, MeasureError> {
        measure_in(&self.measure, &self.limit, set)
    }
}
