//! System description files.
//!
//! One JSON document with optional sections:
//!
//! ```json
//! {
//!   "tolerances": { "cluster": 1e-7 },
//!   "measure_space": {
//!     "levels": [ { "points": ["a"] }, { "points": ["a", "b"], "blocks": [["a", "b"]] } ],
//!     "weights": { "a": "1/2", "b": "1/3" }
//!   },
//!   "fibers": { "a": [1, 2], "b": [0, 1] },
//!   "hilbert_chains": { "K": [1, 2] },
//!   "operators": {
//!     "T": { "blocks": [ [[[1, 0]]], [[[1, 0], [0, 0]], [[0, 0], [2, 0]]] ] },
//!     "G": { "chain": "K", "top": [[[5, 0], [0, 0]], [[0, 0], [7, 0]]] },
//!     "D": { "fibers": { "a": [ [[[1, 0]]], [[[1, 0], [0, 0]], [[0, 0], [1, 0]]] ] } },
//!     "F": { "function": { "a": [1, 0], "b": [0, 1] } }
//!   },
//!   "presentations": { "A": { "chain": "K", "generators": ["G"] } }
//! }
//! ```
//!
//! Complex numbers are `[re, im]`, matrices are row-major nested arrays, weights are
//! `"p/q"` strings. Missing `blocks` means the discrete partition, missing `weights`
//! means counting measure. Operators without `chain` live on the level chain of the
//! direct integral built from `measure_space` and `fibers`.

use std::collections::BTreeMap;

use locint_core::linalg::{CMatrix, C64};
use locint_core::measure::{FiniteMeasurableSpace, MeasurableChain, PointId};
use locint_core::tolerance::TolerancePatch;
use locint_core::{HilbertChain, Tolerances};
use num_rational::BigRational;
use num_traits::Zero;
use serde::Deserialize;
use thiserror::Error;

/// Problems with the input itself; the CLI exits with status 2.
#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad literal at {at}: {reason}")]
    Literal { at: String, reason: String },
    #[error("unknown {kind} {name:?}")]
    UnknownName { kind: &'static str, name: String },
    #[error("{at}: {reason}")]
    Shape { at: String, reason: String },
    #[error("the file has no {0:?} section")]
    MissingSection(&'static str),
}

fn shape(at: impl Into<String>, reason: impl ToString) -> InputError {
    InputError::Shape {
        at: at.into(),
        reason: reason.to_string(),
    }
}

/// `[re, im]`; any other shape is rejected by the deserializer.
#[derive(Debug, Clone, Copy, Deserialize)]
struct ComplexLit(f64, f64);

impl From<ComplexLit> for C64 {
    fn from(z: ComplexLit) -> Self {
        C64::new(z.0, z.1)
    }
}

type RawMatrix = Vec<Vec<ComplexLit>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    #[serde(default)]
    tolerances: Option<TolerancePatch>,
    #[serde(default)]
    measure_space: Option<RawMeasure>,
    #[serde(default)]
    fibers: Option<BTreeMap<String, Vec<usize>>>,
    #[serde(default)]
    hilbert_chains: BTreeMap<String, Vec<usize>>,
    #[serde(default)]
    operators: BTreeMap<String, RawOperator>,
    #[serde(default)]
    presentations: BTreeMap<String, RawPresentation>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    levels: Vec<RawLevel>,
    #[serde(default)]
    weights: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLevel {
    points: Vec<String>,
    #[serde(default)]
    blocks: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOperator {
    #[serde(default)]
    chain: Option<String>,
    #[serde(default)]
    blocks: Option<Vec<RawMatrix>>,
    #[serde(default)]
    top: Option<RawMatrix>,
    #[serde(default)]
    fibers: Option<BTreeMap<String, Vec<RawMatrix>>>,
    #[serde(default)]
    function: Option<BTreeMap<String, ComplexLit>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPresentation {
    chain: String,
    generators: Vec<String>,
}

/// Measurable chain and optional weights, not yet validated.
#[derive(Debug, Clone)]
pub struct MeasureInput {
    pub chain: MeasurableChain,
    /// `None` means counting measure.
    pub weights: Option<BTreeMap<PointId, BigRational>>,
}

/// Where an operator's level blocks live.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChainRef {
    Named(String),
    DirectIntegral,
}

#[derive(Debug, Clone)]
pub enum OperatorInput {
    /// One matrix per level.
    Blocks { chain: ChainRef, blocks: Vec<CMatrix> },
    /// The top matrix; lower blocks are its leading submatrices.
    Top { chain: ChainRef, top: CMatrix },
    /// Fiber operators on the direct integral, one matrix per level from the point's first level.
    Fibers(BTreeMap<PointId, Vec<CMatrix>>),
    /// A diagonalizable operator given by its function.
    Function(BTreeMap<PointId, C64>),
}

#[derive(Debug, Clone)]
pub struct PresentationInput {
    pub chain: String,
    pub generators: Vec<String>,
}

/// A parsed system description with every cross-reference resolved.
#[derive(Debug, Clone)]
pub struct SystemDescription {
    /// Tolerances from the file's `tolerances` section over the defaults.
    pub tolerances: Tolerances,
    pub measure: Option<MeasureInput>,
    pub fibers: Option<BTreeMap<PointId, Vec<usize>>>,
    pub chains: BTreeMap<String, HilbertChain>,
    pub operators: BTreeMap<String, OperatorInput>,
    pub presentations: BTreeMap<String, PresentationInput>,
    /// Level dimensions of the direct integral, when measure and fibers are present.
    pub direct_integral_dims: Option<Vec<usize>>,
}

impl SystemDescription {
    pub fn parse(text: &str) -> Result<Self, InputError> {
        let raw: RawSystem = serde_json::from_str(text)?;
        let tolerances = match &raw.tolerances {
            Some(patch) => Tolerances::default().merged(patch),
            None => Tolerances::default(),
        };
        let measure = raw.measure_space.map(resolve_measure).transpose()?;
        let fibers = raw.fibers;
        if let (Some(f), None) = (&fibers, &measure) {
            if !f.is_empty() {
                return Err(InputError::MissingSection("measure_space"));
            }
        }
        let direct_integral_dims = match (&measure, &fibers) {
            (Some(m), Some(f)) => Some(direct_integral_dims(m, f)?),
            _ => None,
        };

        let mut chains = BTreeMap::new();
        for (name, dims) in raw.hilbert_chains {
            let chain = HilbertChain::new(dims).map_err(|e| shape(format!("hilbert_chains.{name}"), e))?;
            chains.insert(name, chain);
        }

        let mut operators = BTreeMap::new();
        for (name, op) in raw.operators {
            let at = format!("operators.{name}");
            let op = resolve_operator(&at, op, &chains, direct_integral_dims.as_deref(), &measure)?;
            operators.insert(name, op);
        }

        let mut presentations = BTreeMap::new();
        for (name, p) in raw.presentations {
            if !chains.contains_key(&p.chain) {
                return Err(InputError::UnknownName {
                    kind: "chain",
                    name: p.chain.clone(),
                });
            }
            for g in &p.generators {
                let op = operators.get(g).ok_or_else(|| InputError::UnknownName {
                    kind: "operator",
                    name: g.clone(),
                })?;
                let on = match op {
                    OperatorInput::Blocks { chain, .. } | OperatorInput::Top { chain, .. } => Some(chain),
                    _ => None,
                };
                if on != Some(&ChainRef::Named(p.chain.clone())) {
                    return Err(shape(
                        format!("presentations.{name}"),
                        format!("generator {g:?} is not an operator on chain {:?}", p.chain),
                    ));
                }
            }
            presentations.insert(
                name,
                PresentationInput {
                    chain: p.chain,
                    generators: p.generators,
                },
            );
        }

        Ok(Self {
            tolerances,
            measure,
            fibers,
            chains,
            operators,
            presentations,
            direct_integral_dims,
        })
    }
}

fn parse_rational(at: &str, s: &str) -> Result<BigRational, InputError> {
    let bad = |reason: String| InputError::Literal {
        at: at.to_string(),
        reason,
    };
    let t = s.trim();
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n = num.parse().map_err(|_| bad(format!("{s:?} is not a rational \"p/q\"")))?;
    let d: num_bigint::BigInt = den.parse().map_err(|_| bad(format!("{s:?} is not a rational \"p/q\"")))?;
    if d.is_zero() {
        return Err(bad(format!("{s:?} has a zero denominator")));
    }
    Ok(BigRational::new(n, d))
}

fn resolve_measure(raw: RawMeasure) -> Result<MeasureInput, InputError> {
    let mut levels = Vec::with_capacity(raw.levels.len());
    for (n, level) in raw.levels.into_iter().enumerate() {
        let at = format!("measure_space.levels[{}]", n + 1);
        let space = match level.blocks {
            Some(blocks) => FiniteMeasurableSpace::new(level.points, blocks),
            None => FiniteMeasurableSpace::discrete(level.points),
        }
        .map_err(|e| shape(&at, e))?;
        levels.push(space);
    }
    let chain = MeasurableChain::new(levels).map_err(|e| shape("measure_space", e))?;
    let weights = match raw.weights {
        Some(w) => {
            let mut out = BTreeMap::new();
            for (p, s) in w {
                let q = parse_rational(&format!("measure_space.weights.{p}"), &s)?;
                out.insert(p, q);
            }
            Some(out)
        }
        None => None,
    };
    Ok(MeasureInput { chain, weights })
}

fn is_positive(measure: &MeasureInput, p: &str) -> bool {
    match &measure.weights {
        Some(w) => w.get(p).is_some_and(|q| q > &BigRational::zero()),
        None => true,
    }
}

/// `d_n = Σ_p dim H_{n,p}` over positive-weight points.
fn direct_integral_dims(measure: &MeasureInput, fibers: &BTreeMap<PointId, Vec<usize>>) -> Result<Vec<usize>, InputError> {
    let levels = measure.chain.len();
    let known = measure.chain.union_points();
    let mut dims = vec![0; levels];
    for (p, d) in fibers {
        if !known.contains(p) {
            return Err(InputError::UnknownName {
                kind: "point",
                name: p.clone(),
            });
        }
        if d.len() != levels {
            return Err(shape(
                format!("fibers.{p}"),
                format!("{} dimensions for {levels} levels", d.len()),
            ));
        }
        if is_positive(measure, p) {
            for (acc, k) in dims.iter_mut().zip(d) {
                *acc += k;
            }
        }
    }
    Ok(dims)
}

fn matrix(at: &str, raw: RawMatrix) -> Result<CMatrix, InputError> {
    let rows: Vec<Vec<C64>> = raw.into_iter().map(|r| r.into_iter().map(C64::from).collect()).collect();
    if rows.is_empty() {
        return Ok(CMatrix::zeros(0, 0));
    }
    let m = CMatrix::from_rows(&rows).map_err(|e| shape(at, e))?;
    if !m.is_square() {
        return Err(shape(at, format!("matrix is {}x{}, expected square", m.rows(), m.cols())));
    }
    Ok(m)
}

fn check_dims(at: &str, blocks: &[CMatrix], dims: &[usize]) -> Result<(), InputError> {
    if blocks.len() != dims.len() {
        return Err(shape(at, format!("{} blocks for {} levels", blocks.len(), dims.len())));
    }
    for (n, (b, &d)) in blocks.iter().zip(dims).enumerate() {
        if b.rows() != d {
            return Err(shape(
                at,
                format!("level {} block is {}x{}, level dimension is {d}", n + 1, b.rows(), b.cols()),
            ));
        }
    }
    Ok(())
}

fn resolve_operator(
    at: &str,
    raw: RawOperator,
    chains: &BTreeMap<String, HilbertChain>,
    di_dims: Option<&[usize]>,
    measure: &Option<MeasureInput>,
) -> Result<OperatorInput, InputError> {
    let given = [raw.blocks.is_some(), raw.top.is_some(), raw.fibers.is_some(), raw.function.is_some()];
    if given.iter().filter(|&&b| b).count() != 1 {
        return Err(shape(at, "exactly one of blocks, top, fibers, function is required"));
    }
    let chain_ref = match &raw.chain {
        Some(name) => {
            if !chains.contains_key(name) {
                return Err(InputError::UnknownName {
                    kind: "chain",
                    name: name.clone(),
                });
            }
            ChainRef::Named(name.clone())
        }
        None => ChainRef::DirectIntegral,
    };
    let dims: Option<Vec<usize>> = match &chain_ref {
        ChainRef::Named(name) => Some(chains[name].dims().to_vec()),
        ChainRef::DirectIntegral => di_dims.map(<[usize]>::to_vec),
    };
    let need_di = || {
        dims.clone().ok_or(InputError::MissingSection(if measure.is_some() {
            "fibers"
        } else {
            "measure_space"
        }))
    };

    if let Some(blocks) = raw.blocks {
        let blocks = blocks
            .into_iter()
            .enumerate()
            .map(|(n, b)| matrix(&format!("{at}.blocks[{}]", n + 1), b))
            .collect::<Result<Vec<_>, _>>()?;
        check_dims(at, &blocks, &need_di()?)?;
        return Ok(OperatorInput::Blocks { chain: chain_ref, blocks });
    }
    if let Some(top) = raw.top {
        let top = matrix(&format!("{at}.top"), top)?;
        let d = need_di()?;
        let ambient = d.last().copied().unwrap_or(0);
        if top.rows() != ambient {
            return Err(shape(at, format!("top block is {}x{}, expected {ambient}", top.rows(), top.cols())));
        }
        return Ok(OperatorInput::Top { chain: chain_ref, top });
    }
    if raw.chain.is_some() {
        return Err(shape(at, "fiber and function operators live on the direct integral; drop \"chain\""));
    }
    let m = measure.as_ref().ok_or(InputError::MissingSection("measure_space"))?;
    let known = m.chain.union_points();
    let check_point = |p: &String| {
        if known.contains(p) {
            Ok(())
        } else {
            Err(InputError::UnknownName {
                kind: "point",
                name: p.clone(),
            })
        }
    };
    if let Some(fibers) = raw.fibers {
        let mut out = BTreeMap::new();
        for (p, blocks) in fibers {
            check_point(&p)?;
            let blocks = blocks
                .into_iter()
                .enumerate()
                .map(|(n, b)| matrix(&format!("{at}.fibers.{p}[{}]", n + 1), b))
                .collect::<Result<Vec<_>, _>>()?;
            out.insert(p, blocks);
        }
        return Ok(OperatorInput::Fibers(out));
    }
    let function = raw.function.unwrap_or_default();
    for p in function.keys() {
        check_point(p)?;
    }
    Ok(OperatorInput::Function(
        function.into_iter().map(|(p, z)| (p, C64::from(z))).collect(),
    ))
}
