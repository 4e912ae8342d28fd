//! Disintegration of a chain `K_1 ⊆ … ⊆ K_L` with respect to an abelian algebra.
//!
//! The algebra is given by commuting normal generators that respect the chain.
//! The pipeline builds, in order:
//!
//! 1. the joint spectrum at every level. Points are labels, every level carries
//!    counting measure, and the spectral projections are `E_{n,p}`;
//! 2. one fiber per point, realized inside `range E_{L,p}` and adapted to the levels;
//! 3. the unitaries `W_n : K_n → H_n` onto the level spaces of the direct integral,
//!    together with the map `τ(f) = Σ_p f(p) E_{n,p}`.
//!
//! [`verify_conjugation`] then checks that `W G Wᴴ` is diagonalizable with the
//! spectral labels as its function.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::decomposition::{
    check_dec_equals_diag_commutant, classify, diag_level_span, Classification, CommutantReport,
    DecompositionError, DiagonalizableOperator,
};
use crate::direct_integral::{DirectIntegralError, DirectIntegralSpace, FiberFamily};
use crate::hilbert::{HilbertChain, HilbertError, LocalOperator};
use crate::linalg::{
    commutant, hermitian_eig_with, inner, joint_diagonalize_with, label_cmp, label_distance, orthonormalize,
    CMatrix, LinalgError, OperatorSpace, C64, ONE, ZERO,
};
use crate::measure::{
    FiniteMeasurableSpace, LocallyStandardMeasureSpace, MeasurableChain, MeasureChain, MeasureError, PointId,
};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DisintegrationError {
    #[error("the first level is zero-dimensional")]
    EmptyFirstLevel,
    #[error("generator {index} lives on chain {found:?}, expected {expected:?}")]
    ChainMismatch {
        index: usize,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("generators {first} and {second} do not commute at level {} (commutator norm {norm:e})", level + 1)]
    NotAbelian {
        level: usize,
        first: usize,
        second: usize,
        norm: f64,
    },
    #[error("generator {index} is not normal at level {} (defect {defect:e})", level + 1)]
    NotNormal { level: usize, index: usize, defect: f64 },
    #[error("spectral label {label} at level {} has no counterpart at level {}", level + 1, target + 1)]
    SpectrumMismatch {
        level: usize,
        target: usize,
        label: String,
    },
    #[error("distinct spectral labels share the name {name:?}")]
    LabelCollision { name: String },
    #[error("spectral projections at level {} disagree with level {} (residual {residual:e})", level + 1, level + 2)]
    RestrictionDefect { level: usize, residual: f64 },
    #[error("spectral projections at level {} do not resolve the identity (residual {residual:e})", level + 1)]
    ResolutionDefect { level: usize, residual: f64 },
    #[error("point {point:?} has zero weight")]
    ZeroWeightPoint { point: PointId },
    #[error("point {point:?} is not in the spectrum at level {}", level + 1)]
    UnknownPoint { point: PointId, level: usize },
    #[error("level {} does not exist", level + 1)]
    LevelOutOfRange { level: usize },
    #[error("vector of length {found} is shorter than level {} (dimension {expected})", level + 1)]
    VectorLength { level: usize, expected: usize, found: usize },
    #[error("function has no value at {point:?}")]
    MissingValue { point: PointId },
    #[error("W at level {} is not an isometry (residual {residual:e})", level + 1)]
    IsometryDefect { level: usize, residual: f64 },
    #[error("W at level {} is not surjective: fiber dimension {fiber_dim}, level dimension {level_dim}, residual {residual:e}", level + 1)]
    SurjectivityDefect {
        level: usize,
        fiber_dim: usize,
        level_dim: usize,
        residual: f64,
    },
    #[error("W at level {} does not restrict to W at level {} (residual {residual:e})", level + 2, level + 1)]
    PrefixDefect { level: usize, residual: f64 },
    #[error("cross term {term} at level {} is {value:e}", level + 1)]
    CrossTermDefect {
        level: usize,
        term: &'static str,
        value: f64,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    DirectIntegral(#[from] DirectIntegralError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
}

/// Commuting normal generators, each a locally bounded operator on `chain`.
#[derive(Debug, Clone, PartialEq)]
pub struct AbelianPresentation {
    chain: HilbertChain,
    generators: Vec<LocalOperator>,
}

impl AbelianPresentation {
    pub fn new(
        chain: HilbertChain,
        generators: Vec<LocalOperator>,
        tol: &Tolerances,
    ) -> Result<Self, DisintegrationError> {
        if chain.dim(0) == 0 {
            return Err(DisintegrationError::EmptyFirstLevel);
        }
        for (index, g) in generators.iter().enumerate() {
            if g.chain() != &chain {
                return Err(DisintegrationError::ChainMismatch {
                    index,
                    expected: chain.dims().to_vec(),
                    found: g.chain().dims().to_vec(),
                });
            }
        }
        for level in 0..chain.levels() {
            for (index, g) in generators.iter().enumerate() {
                let defect = g.block(level).normal_defect();
                if defect > tol.normal {
                    return Err(DisintegrationError::NotNormal { level, index, defect });
                }
            }
            for first in 0..generators.len() {
                for second in first + 1..generators.len() {
                    let norm = generators[first]
                        .block(level)
                        .commutator(generators[second].block(level))
                        .frobenius_norm();
                    if norm > tol.commuting {
                        return Err(DisintegrationError::NotAbelian {
                            level,
                            first,
                            second,
                            norm,
                        });
                    }
                }
            }
        }
        Ok(Self { chain, generators })
    }

    pub fn chain(&self) -> &HilbertChain {
        &self.chain
    }

    pub fn generators(&self) -> &[LocalOperator] {
        &self.generators
    }

    /// Level blocks of the generators; the identity stands in for an empty family.
    pub fn level_generators(&self, level: usize) -> Vec<CMatrix> {
        if self.generators.is_empty() {
            return vec![CMatrix::identity(self.chain.dim(level))];
        }
        self.generators.iter().map(|g| g.block(level).clone()).collect()
    }
}

/// A point of the joint spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPoint {
    pub name: PointId,
    /// Joint eigenvalue, one entry per generator (`[1]` for an empty family).
    pub label: Vec<C64>,
    pub first_level: usize,
}

/// Joint spectra of every level, glued along label identity.
#[derive(Debug, Clone)]
pub struct SpectrumModel {
    chain: HilbertChain,
    points: Vec<SpectralPoint>,
    /// `projections[n][i]` is `E_{n,p_i}`, absent while the point is not in `X_n`.
    projections: Vec<Vec<Option<CMatrix>>>,
    space: LocallyStandardMeasureSpace,
    restriction_residual: f64,
    resolution_residual: f64,
    orthogonality_residual: f64,
}

impl SpectrumModel {
    pub fn chain(&self) -> &HilbertChain {
        &self.chain
    }

    pub fn levels(&self) -> usize {
        self.chain.levels()
    }

    /// Points ordered by first level, then by label.
    pub fn points(&self) -> &[SpectralPoint] {
        &self.points
    }

    pub fn point(&self, name: &str) -> Option<&SpectralPoint> {
        self.index(name).map(|i| &self.points[i])
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.points.iter().position(|p| p.name == name)
    }

    /// `X_n` in canonical order.
    pub fn level_points(&self, level: usize) -> Vec<&SpectralPoint> {
        self.points.iter().filter(|p| p.first_level <= level).collect()
    }

    /// `E_{n,p}` as a `d_n×d_n` matrix.
    pub fn projection(&self, level: usize, name: &str) -> Option<&CMatrix> {
        let i = self.index(name)?;
        self.projections.get(level)?[i].as_ref()
    }

    /// Rank of `E_{n,p}` read off its trace.
    pub fn rank(&self, level: usize, name: &str) -> usize {
        self.projection(level, name)
            .map_or(0, |e| e.trace().re.round().max(0.0) as usize)
    }

    /// The spectrum as a measure space: discrete levels, counting measure.
    pub fn measure_space(&self) -> &LocallyStandardMeasureSpace {
        &self.space
    }

    /// `Σ_{p ∈ X_n} f(p) E_{n,p}`.
    pub fn functional_calculus(
        &self,
        level: usize,
        f: &BTreeMap<PointId, C64>,
    ) -> Result<CMatrix, DisintegrationError> {
        if level >= self.levels() {
            return Err(DisintegrationError::LevelOutOfRange { level });
        }
        let d = self.chain.dim(level);
        let mut out = CMatrix::zeros(d, d);
        for (i, p) in self.points.iter().enumerate() {
            let Some(e) = &self.projections[level][i] else {
                continue;
            };
            let v = f
                .get(&p.name)
                .ok_or_else(|| DisintegrationError::MissingValue { point: p.name.clone() })?;
            out = &out + &e.scale(*v);
        }
        Ok(out)
    }

    /// Largest disagreement between `E_{n+1,p}` restricted to `K_n` and `E_{n,p}`,
    /// including the block coupling `K_n` to its complement.
    pub fn restriction_residual(&self) -> f64 {
        self.restriction_residual
    }

    /// Largest `‖Σ_p E_{n,p} − I‖_F` over levels.
    pub fn resolution_residual(&self) -> f64 {
        self.resolution_residual
    }

    /// Largest `‖E_{n,p} E_{n,q}‖_F` over levels and `p ≠ q`.
    pub fn orthogonality_residual(&self) -> f64 {
        self.orthogonality_residual
    }
}

/// Name of a spectral label: components rounded to 7 decimals, joined by commas.
pub fn label_name(label: &[C64]) -> String {
    label.iter().map(|&z| complex_name(z)).collect::<Vec<_>>().join(",")
}

fn complex_name(z: C64) -> String {
    let re = real_name(z.re);
    let im = real_name(z.im);
    if im == "0" {
        re
    } else if re == "0" {
        format!("{im}i")
    } else if let Some(abs) = im.strip_prefix('-') {
        format!("{re}-{abs}i")
    } else {
        format!("{re}+{im}i")
    }
}

fn real_name(x: f64) -> String {
    let s = format!("{x:.7}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Joint spectra of every level. Level labels are matched to top-level labels within
/// `tol.cluster`; the top labels name the points.
pub fn build_spectrum(pres: &AbelianPresentation, tol: &Tolerances) -> Result<SpectrumModel, DisintegrationError> {
    let chain = pres.chain().clone();
    let levels = chain.levels();
    let top = chain.top();
    let spectra = (0..levels)
        .map(|n| joint_diagonalize_with(&pres.level_generators(n), tol))
        .collect::<Result<Vec<_>, _>>()?;
    let top_labels = &spectra[top].labels;

    // member[n][k] = top index of the k-th level-n label
    let mut member: Vec<Vec<usize>> = Vec::with_capacity(levels);
    for (n, s) in spectra.iter().enumerate() {
        let mut used = BTreeSet::new();
        let mut row = Vec::with_capacity(s.len());
        for label in &s.labels {
            let hit = top_labels
                .iter()
                .enumerate()
                .map(|(t, l)| (t, label_distance(label, l)))
                .filter(|&(_, d)| d <= tol.cluster)
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match hit {
                Some((t, _)) if used.insert(t) => row.push(t),
                _ => {
                    return Err(DisintegrationError::SpectrumMismatch {
                        level: n,
                        target: top,
                        label: label_name(label),
                    })
                }
            }
        }
        member.push(row);
    }
    for n in 0..top {
        let upper: BTreeSet<usize> = member[n + 1].iter().copied().collect();
        if let Some(k) = member[n].iter().position(|t| !upper.contains(t)) {
            return Err(DisintegrationError::SpectrumMismatch {
                level: n,
                target: n + 1,
                label: label_name(&spectra[n].labels[k]),
            });
        }
    }

    let mut first = vec![top; top_labels.len()];
    for n in (0..levels).rev() {
        for &t in &member[n] {
            first[t] = n;
        }
    }
    let mut order: Vec<usize> = (0..top_labels.len()).collect();
    order.sort_by(|&a, &b| {
        first[a]
            .cmp(&first[b])
            .then_with(|| label_cmp(&top_labels[a], &top_labels[b], tol.cluster))
    });
    let mut names = BTreeSet::new();
    let points: Vec<SpectralPoint> = order
        .iter()
        .map(|&t| {
            let name = label_name(&top_labels[t]);
            if !names.insert(name.clone()) {
                return Err(DisintegrationError::LabelCollision { name });
            }
            Ok(SpectralPoint {
                name,
                label: top_labels[t].clone(),
                first_level: first[t],
            })
        })
        .collect::<Result<_, _>>()?;

    let projections: Vec<Vec<Option<CMatrix>>> = (0..levels)
        .map(|n| {
            order
                .iter()
                .map(|&t| {
                    member[n]
                        .iter()
                        .position(|&u| u == t)
                        .map(|k| spectra[n].projections[k].clone())
                })
                .collect()
        })
        .collect();

    let mut restriction_residual = 0.0f64;
    for n in 0..top {
        let (d, e) = (chain.dim(n), chain.dim(n + 1));
        let mut worst = 0.0f64;
        for i in 0..points.len() {
            let Some(upper) = &projections[n + 1][i] else {
                continue;
            };
            let lead = upper.leading(d);
            let diff = match &projections[n][i] {
                Some(lower) => (&lead - lower).frobenius_norm(),
                None => lead.frobenius_norm(),
            };
            let off = upper.submatrix(0, d, d, e).frobenius_norm();
            worst = worst.max(diff).max(off);
        }
        if worst > tol.containment {
            return Err(DisintegrationError::RestrictionDefect { level: n, residual: worst });
        }
        restriction_residual = restriction_residual.max(worst);
    }

    let mut resolution_residual = 0.0f64;
    let mut orthogonality_residual = 0.0f64;
    for (n, row) in projections.iter().enumerate() {
        let d = chain.dim(n);
        let present: Vec<&CMatrix> = row.iter().flatten().collect();
        let mut sum = CMatrix::zeros(d, d);
        for e in &present {
            sum = &sum + e;
        }
        let residual = sum.sub_identity_norm();
        if residual > tol.rank {
            return Err(DisintegrationError::ResolutionDefect { level: n, residual });
        }
        resolution_residual = resolution_residual.max(residual);
        for (a, e) in present.iter().enumerate() {
            for f in &present[a + 1..] {
                orthogonality_residual = orthogonality_residual.max(e.matmul(f).frobenius_norm());
            }
        }
    }

    let level_spaces = (0..levels)
        .map(|n| {
            let pts = points
                .iter()
                .filter(|p| p.first_level <= n)
                .map(|p| p.name.clone())
                .collect();
            FiniteMeasurableSpace::discrete(pts)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let measure = MeasureChain::counting(MeasurableChain::new(level_spaces)?)?;
    let space = LocallyStandardMeasureSpace::new(measure)?;

    Ok(SpectrumModel {
        chain,
        points,
        projections,
        space,
        restriction_residual,
        resolution_residual,
        orthogonality_residual,
    })
}

/// `⟨P_m ξ_j, E_{m,p} P_m ξ_k⟩ / μ_m({p})`. Vectors longer than `d_m` are projected.
pub fn rn_density(
    spectrum: &SpectrumModel,
    level: usize,
    xi_j: &[C64],
    xi_k: &[C64],
    p: &str,
) -> Result<C64, DisintegrationError> {
    if level >= spectrum.levels() {
        return Err(DisintegrationError::LevelOutOfRange { level });
    }
    let d = spectrum.chain.dim(level);
    for v in [xi_j, xi_k] {
        if v.len() < d {
            return Err(DisintegrationError::VectorLength {
                level,
                expected: d,
                found: v.len(),
            });
        }
    }
    let e = spectrum
        .projection(level, p)
        .ok_or_else(|| DisintegrationError::UnknownPoint {
            point: p.to_string(),
            level,
        })?;
    let space = spectrum.measure_space();
    if !space.is_positive(p) {
        return Err(DisintegrationError::ZeroWeightPoint { point: p.to_string() });
    }
    let value = inner(&xi_j[..d], &e.matvec(&xi_k[..d]));
    Ok(value / space.weight_f64(p))
}

/// Fibers of the disintegration and their realization inside `K_L`.
#[derive(Debug, Clone)]
pub struct SpectralFibers {
    family: FiberFamily,
    /// Per point, a `d_L × dim D_p` matrix whose columns are orthonormal vectors of
    /// `range E_{L,p}`; the first `dim H_{n,p}` of them span `range E_{n,p}`.
    bases: BTreeMap<PointId, CMatrix>,
}

impl SpectralFibers {
    pub fn family(&self) -> &FiberFamily {
        &self.family
    }

    pub fn basis(&self, p: &str) -> Option<&CMatrix> {
        self.bases.get(p)
    }
}

/// For each point, quotients `K_L` by the null space of `φ_p(x, y) = ⟨x, E_{L,p} y⟩/μ(p)`
/// one level increment at a time, so the fiber basis is adapted to the levels.
/// Increment directions whose Gram eigenvalue is at most `tol.kernel` times the largest
/// Gram eigenvalue are null.
pub fn build_fibers(spectrum: &SpectrumModel, tol: &Tolerances) -> Result<SpectralFibers, DisintegrationError> {
    let chain = spectrum.chain();
    let levels = chain.levels();
    let top = chain.top();
    let dl = chain.ambient_dim();
    let mut dims = BTreeMap::new();
    let mut bases = BTreeMap::new();
    for p in spectrum.points() {
        let e = spectrum.projection(top, &p.name).expect("every point is in the top level");
        let mu = spectrum.measure_space().weight_f64(&p.name);
        if mu <= 0.0 {
            return Err(DisintegrationError::ZeroWeightPoint { point: p.name.clone() });
        }
        let mut eigs = Vec::new();
        for n in p.first_level..levels {
            let lo = if n == 0 { 0 } else { chain.dim(n - 1) };
            let idx: Vec<usize> = (lo..chain.dim(n)).collect();
            let gram = e.select(&idx, &idx).scale(C64::new(1.0 / mu, 0.0));
            let gram = (&gram + &gram.adjoint()).scale(C64::new(0.5, 0.0));
            eigs.push((idx, hermitian_eig_with(&gram, tol)?));
        }
        let largest = eigs
            .iter()
            .flat_map(|(_, eig)| eig.values.last().copied())
            .fold(0.0f64, f64::max);
        let cutoff = tol.kernel * largest;
        let mut columns = Vec::new();
        let mut d = vec![0; levels];
        for (n, (idx, eig)) in (p.first_level..levels).zip(&eigs) {
            for (k, &lambda) in eig.values.iter().enumerate().rev() {
                if lambda > cutoff {
                    let mut v = vec![ZERO; dl];
                    for (r, &i) in idx.iter().enumerate() {
                        v[i] = eig.vectors[(r, k)];
                    }
                    columns.push(v);
                }
            }
            d[n] = columns.len();
        }
        dims.insert(p.name.clone(), d);
        bases.insert(p.name.clone(), CMatrix::from_columns(dl, &columns));
    }
    let family = FiberFamily::new(spectrum.measure_space().clone(), dims)?;
    Ok(SpectralFibers { family, bases })
}

/// Vanishing terms of `‖W_n h‖² = I₁ − I₂ − I₃ + I₄`, maximized over the test vectors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CrossTerms {
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    /// Largest `|‖W_n h‖² − ‖h‖²|`.
    pub norm: f64,
    /// Largest `|I₁ − ‖h‖²|`.
    pub i1: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IsometryResiduals {
    /// `‖W_nᴴW_n − I‖_F` per level.
    pub isometry: Vec<f64>,
    /// `‖W_nW_nᴴ − I‖_F` per level.
    pub coisometry: Vec<f64>,
    /// `W_{n+1}` on `K_n` against `W_n`, per consecutive pair.
    pub prefix: Vec<f64>,
    pub cross_terms: Vec<CrossTerms>,
}

/// The disintegration model: spectrum, fibers, direct integral and `W`.
#[derive(Debug, Clone)]
pub struct DisintegrationResult {
    spectrum: SpectrumModel,
    fibers: SpectralFibers,
    space: DirectIntegralSpace,
    w: Vec<CMatrix>,
    residuals: IsometryResiduals,
}

impl DisintegrationResult {
    pub fn spectrum(&self) -> &SpectrumModel {
        &self.spectrum
    }

    pub fn fibers(&self) -> &SpectralFibers {
        &self.fibers
    }

    /// The direct integral `H`, whose level chain is the target of `W`.
    pub fn space(&self) -> &DirectIntegralSpace {
        &self.space
    }

    pub fn measure_space(&self) -> &LocallyStandardMeasureSpace {
        self.spectrum.measure_space()
    }

    /// `W_n` as a `dim H_n × dim K_n` matrix in chain coordinates.
    pub fn w(&self, level: usize) -> &CMatrix {
        &self.w[level]
    }

    pub fn w_matrices(&self) -> &[CMatrix] {
        &self.w
    }

    pub fn residuals(&self) -> &IsometryResiduals {
        &self.residuals
    }

    /// `τ(f)`: the locally bounded operator on `K` with blocks `Σ_p f(p) E_{n,p}`.
    pub fn tau(&self, f: &BTreeMap<PointId, C64>, tol: &Tolerances) -> Result<LocalOperator, DisintegrationError> {
        let blocks = (0..self.spectrum.levels())
            .map(|n| self.spectrum.functional_calculus(n, f))
            .collect::<Result<Vec<_>, _>>()?;
        let scale = 1.0 + f.values().map(|z| z.norm()).fold(0.0, f64::max);
        let loose = Tolerances {
            compatibility: tol.containment * scale,
            ..*tol
        };
        Ok(LocalOperator::new_with(self.spectrum.chain().clone(), blocks, &loose)?)
    }

    /// `W T Wᴴ` on the level chain of the direct integral.
    pub fn conjugate(&self, t: &LocalOperator, tol: &Tolerances) -> Result<LocalOperator, DisintegrationError> {
        if t.chain() != self.spectrum.chain() {
            return Err(DisintegrationError::ChainMismatch {
                index: 0,
                expected: self.spectrum.chain().dims().to_vec(),
                found: t.chain().dims().to_vec(),
            });
        }
        let blocks: Vec<CMatrix> = self
            .w
            .iter()
            .zip(t.blocks())
            .map(|(w, b)| w.matmul(b).matmul(&w.adjoint()))
            .collect();
        let scale = 1.0 + t.top().max_abs();
        let loose = Tolerances {
            compatibility: tol.isometry * scale,
            ..*tol
        };
        Ok(LocalOperator::new_with(self.space.chain().clone(), blocks, &loose)?)
    }
}

/// Builds `W_n h = Σ_p class of E_{L,p}(P_n − P_{m_p−1}) h` in the fiber bases, where
/// `m_p` is the first level of `p`, and checks unitarity, prefix compatibility and
/// the telescoping cross terms.
pub fn build_isometry(
    spectrum: SpectrumModel,
    fibers: SpectralFibers,
    tol: &Tolerances,
) -> Result<DisintegrationResult, DisintegrationError> {
    let space = DirectIntegralSpace::new(fibers.family.clone())?;
    let chain = spectrum.chain().clone();
    let levels = chain.levels();
    let top = chain.top();
    let below = |p: &SpectralPoint| if p.first_level == 0 { 0 } else { chain.dim(p.first_level - 1) };

    // rows[p][j][c] = ⟨b_j, E_{L,p} e_c⟩, the fiber row of basis vector j
    let mut rows: BTreeMap<&str, Vec<Vec<C64>>> = BTreeMap::new();
    for p in spectrum.points() {
        let e = spectrum.projection(top, &p.name).unwrap();
        let b = fibers.bases[&p.name].adjoint().matmul(e);
        let r = (0..b.rows()).map(|j| b.row(j).to_vec()).collect();
        rows.insert(p.name.as_str(), r);
    }
    let first: BTreeMap<&str, &SpectralPoint> = spectrum.points().iter().map(|p| (p.name.as_str(), p)).collect();

    let mut residuals = IsometryResiduals::default();
    let mut w = Vec::with_capacity(levels);
    for n in 0..levels {
        let d = chain.dim(n);
        let h = space.chain().dim(n);
        let mut m = CMatrix::zeros(h, d);
        for k in 0..h {
            let (p, j) = space.coordinate(k);
            let row = &rows[p.as_str()][j];
            for c in below(first[p.as_str()])..d {
                m[(k, c)] = row[c];
            }
        }
        let iso = m.adjoint().matmul(&m).sub_identity_norm();
        if iso > tol.isometry {
            return Err(DisintegrationError::IsometryDefect { level: n, residual: iso });
        }
        let co = if h == d { m.matmul(&m.adjoint()).sub_identity_norm() } else { f64::INFINITY };
        if h != d || co > tol.isometry {
            return Err(DisintegrationError::SurjectivityDefect {
                level: n,
                fiber_dim: h,
                level_dim: d,
                residual: co,
            });
        }
        residuals.isometry.push(iso);
        residuals.coisometry.push(co);
        w.push(m);
    }
    for n in 0..top {
        let (d, hh) = (chain.dim(n), space.chain().dim(n + 1));
        let r = (&w[n + 1].submatrix(0, hh, 0, d) - &w[n].padded(hh, d)).frobenius_norm();
        if r > tol.prefix {
            return Err(DisintegrationError::PrefixDefect { level: n, residual: r });
        }
        residuals.prefix.push(r);
    }
    for n in 0..levels {
        let terms = cross_terms(&spectrum, &w[n], n, below);
        for (term, value) in [("I2", terms.i2), ("I3", terms.i3), ("I4", terms.i4)] {
            if value > tol.homomorphism {
                return Err(DisintegrationError::CrossTermDefect { level: n, term, value });
            }
        }
        if terms.norm > tol.isometry {
            return Err(DisintegrationError::IsometryDefect {
                level: n,
                residual: terms.norm,
            });
        }
        residuals.cross_terms.push(terms);
    }
    Ok(DisintegrationResult {
        spectrum,
        fibers,
        space,
        w,
        residuals,
    })
}

/// Unit test vectors of `K_n`: the standard basis plus two dense vectors.
fn test_vectors(d: usize) -> Vec<Vec<C64>> {
    let mut out: Vec<Vec<C64>> = (0..d)
        .map(|c| (0..d).map(|i| if i == c { ONE } else { ZERO }).collect())
        .collect();
    let s = (d as f64).sqrt();
    out.push(vec![C64::new(1.0 / s, 0.0); d]);
    let chirp: Vec<C64> = (0..d)
        .map(|i| C64::from_polar(1.0 + i as f64 / d as f64, 0.7 * (i * i + 1) as f64))
        .collect();
    let norm = chirp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    out.push(chirp.iter().map(|z| z / norm).collect());
    out
}

fn cross_terms(
    spectrum: &SpectrumModel,
    w: &CMatrix,
    level: usize,
    below: impl Fn(&SpectralPoint) -> usize,
) -> CrossTerms {
    let top = spectrum.chain().top();
    let dl = spectrum.chain().ambient_dim();
    let d = spectrum.chain().dim(level);
    let mut out = CrossTerms::default();
    for h in test_vectors(d) {
        let mut full = h.clone();
        full.resize(dl, ZERO);
        let (mut i1, mut i2, mut i3, mut i4) = (ZERO, ZERO, ZERO, ZERO);
        for p in spectrum.level_points(level) {
            let e = spectrum.projection(top, &p.name).unwrap();
            let mut old = full.clone();
            for z in &mut old[below(p)..] {
                *z = ZERO;
            }
            let e_new = e.matvec(&full);
            let e_old = e.matvec(&old);
            i1 += inner(&full, &e_new);
            i2 += inner(&old, &e_new);
            i3 += inner(&full, &e_old);
            i4 += inner(&old, &e_old);
        }
        let wh = w.matvec(&h);
        let lhs: f64 = wh.iter().map(|z| z.norm_sqr()).sum();
        out.i1 = out.i1.max((i1.re - 1.0).abs().max(i1.im.abs()));
        out.i2 = out.i2.max(i2.norm());
        out.i3 = out.i3.max(i3.norm());
        out.i4 = out.i4.max(i4.norm());
        out.norm = out.norm.max((lhs - 1.0).abs());
    }
    out
}

/// Runs spectrum, fibers and isometry in sequence.
pub fn disintegrate(pres: &AbelianPresentation, tol: &Tolerances) -> Result<DisintegrationResult, DisintegrationError> {
    let spectrum = build_spectrum(pres, tol)?;
    let fibers = build_fibers(&spectrum, tol)?;
    build_isometry(spectrum, fibers, tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorCheck {
    pub index: usize,
    /// Classification kind of `W G Wᴴ`.
    pub kind: &'static str,
    /// Largest `|f(p) − label(p)|`; infinite unless diagonalizable.
    pub label_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanCheck {
    pub level: usize,
    /// Rank of `{1_p · W_n e_c}` over `p ∈ X_n`, `c < d_n`.
    pub rank: usize,
    pub dim: usize,
}

/// Residuals of the unital *-homomorphism `τ`, maximized over levels and test functions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HomomorphismResiduals {
    pub product: f64,
    pub adjoint: f64,
    pub unit: f64,
    /// `W τ(f) Wᴴ` against the diagonalizable operator of `f`.
    pub intertwining: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraCheck {
    pub level: usize,
    /// Dimension of the algebra generated at level n.
    pub algebra_dim: usize,
    pub double_commutant_dim: usize,
    /// Two-sided containment residual between `W M_n Wᴴ` and the diagonalizable level span.
    pub span_residual: f64,
}

#[derive(Debug, Clone)]
pub struct ConjugationReport {
    pub generators: Vec<GeneratorCheck>,
    pub span: Vec<SpanCheck>,
    pub homomorphism: HomomorphismResiduals,
    pub algebras: Vec<AlgebraCheck>,
    pub commutant: CommutantReport,
}

impl ConjugationReport {
    pub fn generators_diagonalizable(&self, tol: &Tolerances) -> bool {
        self.generators
            .iter()
            .all(|g| g.kind == "diagonalizable" && g.label_error <= tol.label)
    }

    pub fn spans_full(&self) -> bool {
        self.span.iter().all(|s| s.rank == s.dim)
    }

    pub fn homomorphism_holds(&self, tol: &Tolerances) -> bool {
        let h = &self.homomorphism;
        h.product.max(h.adjoint).max(h.unit).max(h.intertwining) <= tol.homomorphism
    }

    pub fn algebras_match(&self, tol: &Tolerances) -> bool {
        self.algebras
            .iter()
            .all(|a| a.span_residual <= tol.containment && a.algebra_dim == a.double_commutant_dim)
    }

    pub fn passed(&self, tol: &Tolerances) -> bool {
        self.generators_diagonalizable(tol)
            && self.spans_full()
            && self.homomorphism_holds(tol)
            && self.algebras_match(tol)
            && self.commutant.passed(tol)
    }
}

/// Checks that `W` carries the algebra onto the diagonalizable operators.
pub fn verify_conjugation(
    result: &DisintegrationResult,
    pres: &AbelianPresentation,
    tol: &Tolerances,
) -> Result<ConjugationReport, DisintegrationError> {
    let spectrum = result.spectrum();
    let space = result.space();
    let levels = spectrum.levels();

    let mut generators = Vec::new();
    for (index, g) in pres.generators().iter().enumerate() {
        let t = result.conjugate(g, tol)?;
        let (kind, label_error) = match classify(space, &t, tol)? {
            Classification::Diagonalizable(op) => {
                let err = spectrum
                    .points()
                    .iter()
                    .map(|p| op.value(&p.name).map_or(f64::INFINITY, |v| (v - p.label[index]).norm()))
                    .fold(0.0, f64::max);
                ("diagonalizable", err)
            }
            other => (other.kind(), f64::INFINITY),
        };
        generators.push(GeneratorCheck {
            index,
            kind,
            label_error,
        });
    }

    let mut span = Vec::new();
    for n in 0..levels {
        let d = spectrum.chain().dim(n);
        let h = space.chain().dim(n);
        let mut columns = Vec::new();
        for p in space.level_points(n) {
            let own: BTreeSet<usize> = space.fiber_indices(n, p).into_iter().collect();
            for c in 0..d {
                let col = result.w(n).column(c);
                columns.push(
                    col.iter()
                        .enumerate()
                        .map(|(k, &z)| if own.contains(&k) { z } else { ZERO })
                        .collect::<Vec<_>>(),
                );
            }
        }
        let rank = orthonormalize(&CMatrix::from_columns(h, &columns), tol.rank).dim();
        span.push(SpanCheck { level: n, rank, dim: h });
    }

    let homomorphism = homomorphism_residuals(result, tol)?;

    let mut algebras = Vec::new();
    for n in 0..levels {
        let d = spectrum.chain().dim(n);
        let m = OperatorSpace::algebra(d, &pres.level_generators(n), tol.rank);
        let first = commutant(d, m.basis(), tol)?;
        let double = commutant(d, first.basis(), tol)?;
        let w = result.w(n);
        let moved: Vec<CMatrix> = m.basis().iter().map(|b| w.matmul(b).matmul(&w.adjoint())).collect();
        let moved = OperatorSpace::span(d, &moved, tol.rank);
        let diag = diag_level_span(space, n, tol);
        algebras.push(AlgebraCheck {
            level: n,
            algebra_dim: m.dim(),
            double_commutant_dim: double.dim(),
            span_residual: moved.contains_residual(&diag).max(diag.contains_residual(&moved)),
        });
    }

    let commutant = check_dec_equals_diag_commutant(space, tol)?;
    Ok(ConjugationReport {
        generators,
        span,
        homomorphism,
        algebras,
        commutant,
    })
}

/// Test functions: label coordinates, point indicators and the constant 1.
fn test_functions(spectrum: &SpectrumModel) -> Vec<BTreeMap<PointId, C64>> {
    let points = spectrum.points();
    let arity = points.first().map_or(0, |p| p.label.len());
    let mut out: Vec<BTreeMap<PointId, C64>> = (0..arity)
        .map(|i| points.iter().map(|p| (p.name.clone(), p.label[i])).collect())
        .collect();
    for q in points {
        out.push(
            points
                .iter()
                .map(|p| (p.name.clone(), if p.name == q.name { ONE } else { ZERO }))
                .collect(),
        );
    }
    out.push(points.iter().map(|p| (p.name.clone(), ONE)).collect());
    out
}

fn homomorphism_residuals(
    result: &DisintegrationResult,
    tol: &Tolerances,
) -> Result<HomomorphismResiduals, DisintegrationError> {
    let spectrum = result.spectrum();
    let space = result.space();
    let fs = test_functions(spectrum);
    let taus = fs
        .iter()
        .map(|f| result.tau(f, tol))
        .collect::<Result<Vec<_>, _>>()?;
    let mut r = HomomorphismResiduals::default();
    let one = fs.last().unwrap();
    let unit = result.tau(one, tol)?;
    for b in unit.blocks() {
        r.unit = r.unit.max(b.sub_identity_norm());
    }
    for (a, (f, tf)) in fs.iter().zip(&taus).enumerate() {
        let conj: BTreeMap<PointId, C64> = f.iter().map(|(p, v)| (p.clone(), v.conj())).collect();
        let tc = result.tau(&conj, tol)?;
        let diag = DiagonalizableOperator::new(space, f, tol)?.to_local(space);
        for n in 0..spectrum.levels() {
            r.adjoint = r.adjoint.max((tc.block(n) - &tf.block(n).adjoint()).frobenius_norm());
            let w = result.w(n);
            let moved = w.matmul(tf.block(n)).matmul(&w.adjoint());
            r.intertwining = r.intertwining.max((&moved - diag.block(n)).frobenius_norm());
        }
        for (g, tg) in fs.iter().zip(&taus).skip(a) {
            let fg: BTreeMap<PointId, C64> = f.iter().map(|(p, v)| (p.clone(), v * g[p])).collect();
            let tfg = result.tau(&fg, tol)?;
            for n in 0..spectrum.levels() {
                let prod = tf.block(n).matmul(tg.block(n));
                r.product = r.product.max((tfg.block(n) - &prod).frobenius_norm());
            }
        }
    }
    Ok(r)
}
