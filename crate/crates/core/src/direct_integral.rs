//! Direct integrals of locally Hilbert spaces over a finite measure chain.
//!
//! Every point `p` carries a fiber chain `D_p` with dimensions `dim_{n,p}`. The
//! level space `H_n` is the weighted direct sum of the `H_{n,p}` over the points
//! of `X_n` with positive weight. Points of weight zero carry no data.
//!
//! `H_n` is stored in chain coordinates: the coordinates new at level `n` are
//! appended after those of level `n-1`, ordered by point and then fiber index, and
//! each coordinate is the fiber entry scaled by `sqrt(μ({p}))`. The inner product
//! is then the plain Euclidean one and `H_m ⊆ H_n` is a coordinate prefix, so the
//! levels form a [`HilbertChain`]. The identification `V_n` with the atom-ordered
//! direct sum is a permutation.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::hilbert::HilbertChain;
use crate::linalg::{inner, CMatrix, C64, ONE, ZERO};
use crate::measure::{LocallyStandardMeasureSpace, PointId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DirectIntegralError {
    #[error("invalid fibers at {point:?}: {reason}")]
    InvalidFibers { point: PointId, reason: String },
    #[error("unknown point {point:?}")]
    UnknownPoint { point: PointId },
    #[error("level {} does not exist", level + 1)]
    LevelOutOfRange { level: usize },
    #[error("section does not belong to this space: {reason}")]
    SpaceMismatch { reason: String },
    #[error("family is not supported in any level")]
    UnsupportedFamily,
    #[error("value at {point:?} lies outside {}", match level { Some(l) => format!("level {} of its fiber", l + 1), None => "every fiber level".to_string() })]
    NotInFiber { point: PointId, level: Option<usize> },
}

/// Fiber dimension profiles over a measure space.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberFamily {
    space: LocallyStandardMeasureSpace,
    dims: BTreeMap<PointId, Vec<usize>>,
}

impl FiberFamily {
    /// `dims[p][n] = dim H_{n,p}`; must be nondecreasing in `n` and zero while `p ∉ X_n`.
    /// Points missing from `dims` get zero fibers.
    pub fn new(
        space: LocallyStandardMeasureSpace,
        mut dims: BTreeMap<PointId, Vec<usize>>,
    ) -> Result<Self, DirectIntegralError> {
        let levels = space.levels();
        for p in dims.keys() {
            if space.first_level(p).is_none() {
                return Err(DirectIntegralError::UnknownPoint { point: p.clone() });
            }
        }
        for p in space.points() {
            let d = dims.entry(p.clone()).or_insert_with(|| vec![0; levels]);
            let bad = |reason: String| DirectIntegralError::InvalidFibers {
                point: p.clone(),
                reason,
            };
            if d.len() != levels {
                return Err(bad(format!("{} dimensions for {} levels", d.len(), levels)));
            }
            if let Some(n) = d.windows(2).position(|w| w[0] > w[1]) {
                return Err(bad(format!("dimension decreases after level {}", n + 1)));
            }
            if let Some(n) = (0..levels).find(|&n| !space.contains(n, p) && d[n] > 0) {
                return Err(bad(format!("nonzero dimension at level {} before the point exists", n + 1)));
            }
        }
        Ok(Self { space, dims })
    }

    /// Every point of `X_n` gets fiber dimension `dims[n]`.
    pub fn uniform(space: LocallyStandardMeasureSpace, dims: &[usize]) -> Result<Self, DirectIntegralError> {
        let map = space
            .points()
            .iter()
            .map(|p| {
                let d = (0..space.levels())
                    .map(|n| if space.contains(n, p) { dims[n] } else { 0 })
                    .collect();
                (p.clone(), d)
            })
            .collect();
        Self::new(space, map)
    }

    pub fn space(&self) -> &LocallyStandardMeasureSpace {
        &self.space
    }

    pub fn dims(&self) -> &BTreeMap<PointId, Vec<usize>> {
        &self.dims
    }

    /// `dim H_{n,p}`; zero for unknown points.
    pub fn dim(&self, level: usize, p: &str) -> usize {
        self.dims.get(p).map_or(0, |d| d[level])
    }

    /// The fiber chain `D_p`, restricted to the levels where `p` exists.
    pub fn fiber_chain(&self, p: &str) -> Option<HilbertChain> {
        let first = self.space.first_level(p)?;
        HilbertChain::new(self.dims[p][first..].to_vec()).ok()
    }
}

/// A section `u` with `supp(u) ⊆ X_level` and `u(p) ∈ H_{level,p}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    level: usize,
    values: BTreeMap<PointId, Vec<C64>>,
}

impl Section {
    pub fn level(&self) -> usize {
        self.level
    }

    /// Values on positive-weight points of `X_level`, each of length `dim_{level,p}`.
    pub fn values(&self) -> &BTreeMap<PointId, Vec<C64>> {
        &self.values
    }

    pub fn value(&self, p: &str) -> Option<&[C64]> {
        self.values.get(p).map(Vec::as_slice)
    }
}

/// The direct integral of a [`FiberFamily`] with its level chain.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectIntegralSpace {
    fibers: FiberFamily,
    chain: HilbertChain,
    /// Positive-weight points in canonical order.
    points: Vec<PointId>,
    /// Chain coordinate `k` ↦ (index into `points`, fiber coordinate).
    coords: Vec<(usize, usize)>,
    scale: Vec<f64>,
}

pub fn build_direct_integral(fibers: FiberFamily) -> Result<DirectIntegralSpace, DirectIntegralError> {
    DirectIntegralSpace::new(fibers)
}

impl DirectIntegralSpace {
    pub fn new(fibers: FiberFamily) -> Result<Self, DirectIntegralError> {
        let space = fibers.space();
        let points: Vec<PointId> = space
            .points()
            .iter()
            .filter(|p| space.is_positive(p))
            .cloned()
            .collect();
        let scale = points.iter().map(|p| space.weight_f64(p).sqrt()).collect();
        let mut coords = Vec::new();
        let mut dims = Vec::new();
        for n in 0..space.levels() {
            for (i, p) in points.iter().enumerate() {
                let lo = if n == 0 { 0 } else { fibers.dim(n - 1, p) };
                for j in lo..fibers.dim(n, p) {
                    coords.push((i, j));
                }
            }
            dims.push(coords.len());
        }
        let chain = HilbertChain::new(dims).expect("level dimensions are cumulative");
        Ok(Self {
            fibers,
            chain,
            points,
            coords,
            scale,
        })
    }

    pub fn fibers(&self) -> &FiberFamily {
        &self.fibers
    }

    pub fn measure_space(&self) -> &LocallyStandardMeasureSpace {
        self.fibers.space()
    }

    /// The level spaces `H_n` as a chain.
    pub fn chain(&self) -> &HilbertChain {
        &self.chain
    }

    pub fn levels(&self) -> usize {
        self.chain.levels()
    }

    /// Positive-weight points in canonical order.
    pub fn points(&self) -> &[PointId] {
        &self.points
    }

    /// Positive-weight points of `X_n`.
    pub fn level_points(&self, level: usize) -> Vec<&PointId> {
        let space = self.measure_space();
        self.points.iter().filter(|p| space.contains(level, p)).collect()
    }

    pub fn fiber_dim(&self, level: usize, p: &str) -> usize {
        self.fibers.dim(level, p)
    }

    fn point_index(&self, p: &str) -> Option<usize> {
        self.points.iter().position(|q| q == p)
    }

    /// Chain coordinates of fiber `p` at `level`, in fiber order.
    pub fn fiber_indices(&self, level: usize, p: &str) -> Vec<usize> {
        let Some(i) = self.point_index(p) else {
            return Vec::new();
        };
        let d = self.fibers.dim(level, p);
        let mut idx = vec![0; d];
        for (k, &(q, j)) in self.coords[..self.chain.dim(level)].iter().enumerate() {
            if q == i {
                idx[j] = k;
            }
        }
        idx
    }

    /// Point and fiber coordinate of a chain coordinate.
    pub fn coordinate(&self, k: usize) -> (&PointId, usize) {
        let (i, j) = self.coords[k];
        (&self.points[i], j)
    }

    /// `V_n`: chain coordinates to the atom-ordered direct sum `⊕_p H_{n,p}` (each
    /// summand in its fiber order, points in canonical order). A permutation.
    pub fn identification(&self, level: usize) -> CMatrix {
        let d = self.chain.dim(level);
        let mut v = CMatrix::zeros(d, d);
        let mut row = 0;
        for p in self.level_points(level) {
            for k in self.fiber_indices(level, p) {
                v[(row, k)] = ONE;
                row += 1;
            }
        }
        v
    }

    /// `J_{n,m}` in chain coordinates: the `d_n×d_m` coordinate injection.
    pub fn inclusion(&self, lower: usize, upper: usize) -> CMatrix {
        CMatrix::identity(self.chain.dim(lower)).padded(self.chain.dim(upper), self.chain.dim(lower))
    }

    fn check_level(&self, level: usize) -> Result<(), DirectIntegralError> {
        if level < self.levels() {
            Ok(())
        } else {
            Err(DirectIntegralError::LevelOutOfRange { level })
        }
    }

    /// Validates a section against this space, filling absent positive points with zeros
    /// and dropping zero-weight points.
    pub fn section(&self, level: usize, values: BTreeMap<PointId, Vec<C64>>) -> Result<Section, DirectIntegralError> {
        self.check_level(level)?;
        let space = self.measure_space();
        let mut out = BTreeMap::new();
        for (p, v) in values {
            if space.first_level(&p).is_none() {
                return Err(DirectIntegralError::UnknownPoint { point: p });
            }
            if !space.contains(level, &p) {
                if v.iter().all(|z| *z == ZERO) {
                    continue;
                }
                return Err(DirectIntegralError::NotInFiber {
                    point: p,
                    level: Some(level),
                });
            }
            if !space.is_positive(&p) {
                continue;
            }
            if v.len() != self.fibers.dim(level, &p) {
                return Err(DirectIntegralError::NotInFiber {
                    point: p,
                    level: Some(level),
                });
            }
            out.insert(p, v);
        }
        for p in self.level_points(level) {
            out.entry(p.clone())
                .or_insert_with(|| vec![ZERO; self.fibers.dim(level, p)]);
        }
        Ok(Section { level, values: out })
    }

    pub fn zero_section(&self, level: usize) -> Result<Section, DirectIntegralError> {
        self.section(level, BTreeMap::new())
    }

    fn check_section(&self, u: &Section) -> Result<(), DirectIntegralError> {
        let mismatch = |reason: String| Err(DirectIntegralError::SpaceMismatch { reason });
        if u.level >= self.levels() {
            return mismatch(format!("level {} out of range", u.level + 1));
        }
        let expected = self.level_points(u.level);
        if expected.len() != u.values.len() {
            return mismatch(format!("{} points, expected {}", u.values.len(), expected.len()));
        }
        for p in expected {
            match u.values.get(p) {
                Some(v) if v.len() == self.fibers.dim(u.level, p) => {}
                _ => return mismatch(format!("bad value at {p:?}")),
            }
        }
        Ok(())
    }

    /// `u` moved to `level`. Moving down requires `u` to vanish outside the lower level.
    pub fn relevel(&self, u: &Section, level: usize) -> Result<Section, DirectIntegralError> {
        self.check_section(u)?;
        self.check_level(level)?;
        let space = self.measure_space();
        let mut values = BTreeMap::new();
        for (p, v) in &u.values {
            let d = if space.contains(level, p) { self.fibers.dim(level, p) } else { 0 };
            if v[d.min(v.len())..].iter().any(|z| *z != ZERO) {
                return Err(DirectIntegralError::NotInFiber {
                    point: p.clone(),
                    level: Some(level),
                });
            }
            if space.contains(level, p) {
                let mut w = v[..d.min(v.len())].to_vec();
                w.resize(d, ZERO);
                values.insert(p.clone(), w);
            }
        }
        self.section(level, values)
    }

    fn top_level(&self) -> usize {
        self.levels() - 1
    }

    /// Smallest level containing `u` exactly.
    pub fn minimal_level(&self, u: &Section) -> Result<usize, DirectIntegralError> {
        let v = self.section_vector(u, u.level)?;
        let last = v.iter().rposition(|z| *z != ZERO);
        Ok(match last {
            None => 0,
            Some(k) => (0..=u.level).find(|&n| self.chain.dim(n) > k).unwrap(),
        })
    }

    /// Chain coordinates of `u` in `H_level` (`level ≥ u.level`), scaled by `sqrt(μ)`.
    pub fn section_vector(&self, u: &Section, level: usize) -> Result<Vec<C64>, DirectIntegralError> {
        self.check_section(u)?;
        self.check_level(level)?;
        if level < u.level {
            return Err(DirectIntegralError::SpaceMismatch {
                reason: format!("section of level {} read at level {}", u.level + 1, level + 1),
            });
        }
        let mut out = vec![ZERO; self.chain.dim(level)];
        for (k, &(i, j)) in self.coords[..self.chain.dim(u.level)].iter().enumerate() {
            out[k] = u.values[&self.points[i]][j] * self.scale[i];
        }
        Ok(out)
    }

    /// Inverse of [`Self::section_vector`] for a vector of any level whose
    /// coordinates beyond `H_level` vanish exactly.
    pub fn vector_section(&self, v: &[C64], level: usize) -> Result<Section, DirectIntegralError> {
        self.check_level(level)?;
        let d = self.chain.dim(level);
        if let Some(k) = (d..v.len()).find(|&k| v[k] != ZERO) {
            let (p, _) = self.coordinate(k);
            return Err(DirectIntegralError::NotInFiber {
                point: p.clone(),
                level: Some(level),
            });
        }
        let mut values: BTreeMap<PointId, Vec<C64>> = self
            .level_points(level)
            .into_iter()
            .map(|p| (p.clone(), vec![ZERO; self.fibers.dim(level, p)]))
            .collect();
        for (k, &(i, j)) in self.coords[..d.min(v.len())].iter().enumerate() {
            values.get_mut(&self.points[i]).unwrap()[j] = v[k] / self.scale[i];
        }
        Ok(Section { level, values })
    }

    /// `⟨u, v⟩ = Σ_p μ({p}) ⟨u(p), v(p)⟩`.
    pub fn section_inner(&self, u: &Section, v: &Section) -> Result<C64, DirectIntegralError> {
        let z = self.density_function(u, v)?;
        Ok(z.iter().map(|(p, val)| val * self.measure_space().weight_f64(p)).sum())
    }

    /// `ζ_{u,v}(p) = ⟨u(p), v(p)⟩` on positive-weight points of the larger level.
    pub fn density_function(&self, u: &Section, v: &Section) -> Result<BTreeMap<PointId, C64>, DirectIntegralError> {
        self.check_section(u)?;
        self.check_section(v)?;
        let level = u.level.max(v.level);
        Ok(self
            .level_points(level)
            .into_iter()
            .map(|p| {
                let val = match (u.values.get(p), v.values.get(p)) {
                    (Some(a), Some(b)) => {
                        let n = a.len().min(b.len());
                        inner(&a[..n], &b[..n])
                    }
                    _ => ZERO,
                };
                (p.clone(), val)
            })
            .collect())
    }

    /// `η(p) = ⟨u(p), v_p⟩` for a pointwise family vanishing outside some `X_n`.
    pub fn pairing_function(
        &self,
        u: &Section,
        family: &BTreeMap<PointId, Vec<C64>>,
    ) -> Result<BTreeMap<PointId, C64>, DirectIntegralError> {
        self.check_section(u)?;
        let space = self.measure_space();
        let support: Vec<&PointId> = family
            .iter()
            .filter(|(_, v)| v.iter().any(|z| *z != ZERO))
            .map(|(p, _)| p)
            .collect();
        for p in &support {
            if space.first_level(p).is_none() {
                return Err(DirectIntegralError::UnknownPoint { point: (*p).clone() });
            }
        }
        let level = (0..self.levels())
            .find(|&n| support.iter().all(|p| space.contains(n, p)))
            .ok_or(DirectIntegralError::UnsupportedFamily)?
            .max(u.level);
        Ok(self
            .level_points(level)
            .into_iter()
            .map(|p| {
                let val = match (u.values.get(p), family.get(p)) {
                    (Some(a), Some(b)) => {
                        let n = a.len().min(b.len());
                        inner(&a[..n], &b[..n])
                    }
                    _ => ZERO,
                };
                (p.clone(), val)
            })
            .collect())
    }

    /// Section agreeing with a pointwise family on positive-weight points. Each
    /// `v_q` may be given at any length up to the top fiber dimension; entries
    /// beyond `dim_{level,q}` must vanish.
    pub fn assemble_section(
        &self,
        family: &BTreeMap<PointId, Vec<C64>>,
        level: usize,
    ) -> Result<Section, DirectIntegralError> {
        self.check_level(level)?;
        let space = self.measure_space();
        let top = self.top_level();
        let mut values = BTreeMap::new();
        for (q, v) in family {
            if space.first_level(q).is_none() {
                return Err(DirectIntegralError::UnknownPoint { point: q.clone() });
            }
            if !space.is_positive(q) {
                continue;
            }
            let last = v.iter().rposition(|z| *z != ZERO);
            if last.is_none() {
                continue;
            }
            let need = last.unwrap() + 1;
            if v.len() > self.fibers.dim(top, q) || need > self.fibers.dim(top, q) {
                return Err(DirectIntegralError::NotInFiber {
                    point: q.clone(),
                    level: None,
                });
            }
            if !space.contains(level, q) || need > self.fibers.dim(level, q) {
                let minimal = (0..=top).find(|&n| space.contains(n, q) && self.fibers.dim(n, q) >= need);
                return Err(DirectIntegralError::NotInFiber {
                    point: q.clone(),
                    level: minimal,
                });
            }
            let mut w = v[..need].to_vec();
            w.resize(self.fibers.dim(level, q), ZERO);
            values.insert(q.clone(), w);
        }
        self.section(level, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{FiniteMeasurableSpace, MeasurableChain, MeasureChain};

    fn discrete_chain(levels: &[&[&str]]) -> LocallyStandardMeasureSpace {
        let chain = MeasurableChain::new(
            levels
                .iter()
                .map(|l| FiniteMeasurableSpace::discrete(l.iter().map(|s| s.to_string()).collect()).unwrap())
                .collect(),
        )
        .unwrap();
        LocallyStandardMeasureSpace::new(MeasureChain::counting(chain).unwrap()).unwrap()
    }

    #[test]
    fn chain_coordinates_grow_by_level_then_point() {
        let space = discrete_chain(&[&["a"], &["a", "b"]]);
        let dims = BTreeMap::from([("a".to_string(), vec![1, 2]), ("b".to_string(), vec![0, 1])]);
        let di = build_direct_integral(FiberFamily::new(space, dims).unwrap()).unwrap();
        assert_eq!(di.chain().dims(), &[1, 3]);
        assert_eq!(di.fiber_indices(1, "a"), vec![0, 1]);
        assert_eq!(di.fiber_indices(1, "b"), vec![2]);
    }

    #[test]
    fn fiber_before_point_exists_is_invalid() {
        let space = discrete_chain(&[&["a"], &["a", "b"]]);
        let dims = BTreeMap::from([("b".to_string(), vec![1, 1])]);
        assert!(matches!(
            FiberFamily::new(space, dims),
            Err(DirectIntegralError::InvalidFibers { .. })
        ));
    }
}
