//! The subcommands. Each turns a system description into check records and a result.

use std::collections::BTreeMap;
use std::time::Instant;

use locint_core::decomposition::{
    check_dec_equals_diag_commutant, diag_commutant, expected_commutant_dim, DiagonalObstruction, FiberMixing,
};
use locint_core::disintegration::{disintegrate, label_name, verify_conjugation, AbelianPresentation};
use locint_core::measure::validate_chain;
use locint_core::tolerance::TolerancePatch;
use locint_core::{
    classify, Classification, DecomposableOperator, DiagonalizableOperator, DirectIntegralSpace, FiberFamily,
    LocalOperator, LocallyStandardMeasureSpace, MeasureChain, Tolerances,
};
use serde_json::{json, Map, Value};

use crate::input::{ChainRef, InputError, OperatorInput, SystemDescription};
use crate::report::{complex_json, digest, matrix_json, number, overall, CheckRecord, RunReport};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Validate,
    Classify { op: String },
    /// Level number as written on the command line (1-based).
    Commutant { level: usize },
    Theorem33,
    Disintegrate { algebra: String },
}

impl Command {
    fn label(&self) -> String {
        match self {
            Command::Validate => "validate".into(),
            Command::Classify { op } => format!("classify --op {op}"),
            Command::Commutant { level } => format!("commutant --level {level}"),
            Command::Theorem33 => "theorem33".into(),
            Command::Disintegrate { algebra } => format!("disintegrate --algebra {algebra}"),
        }
    }
}

/// What a command produced: the report, plus the standalone result artifact where one exists.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: RunReport,
    pub artifact: Option<Value>,
}

/// Parses the inputs, runs `command` and assembles the report.
pub fn execute(command: &Command, input: &[u8], tol_file: Option<&[u8]>) -> Result<Outcome, InputError> {
    let start = Instant::now();
    let text = std::str::from_utf8(input).map_err(|e| InputError::Literal {
        at: "file".into(),
        reason: e.to_string(),
    })?;
    let sys = SystemDescription::parse(text)?;
    let tol = match tol_file {
        Some(bytes) => {
            let patch: TolerancePatch = serde_json::from_slice(bytes)?;
            sys.tolerances.merged(&patch)
        }
        None => sys.tolerances,
    };
    let mut checks = Vec::new();
    let (result, artifact) = match command {
        Command::Validate => (validate(&sys, &tol, &mut checks)?, None),
        Command::Classify { op } => (classify_op(&sys, op, &tol, &mut checks)?, None),
        Command::Commutant { level } => (commutant_dump(&sys, *level, &tol, &mut checks)?, None),
        Command::Theorem33 => (theorem33(&sys, &tol, &mut checks)?, None),
        Command::Disintegrate { algebra } => {
            let r = disintegrate_algebra(&sys, algebra, &tol, &mut checks)?;
            let artifact = r.get("w").is_some().then(|| r.clone());
            (r, artifact)
        }
    };
    let report = RunReport {
        command: command.label(),
        input_digest: digest(input),
        tolerance_digest: tol_file.map(digest),
        tolerances: tol,
        status: overall(&checks),
        checks,
        result,
        wall_time_ms: start.elapsed().as_millis() as u64,
    };
    Ok(Outcome { report, artifact })
}

/// Measure, weights and fibers; `None` once a check fails.
fn build_space(sys: &SystemDescription, checks: &mut Vec<CheckRecord>) -> Option<DirectIntegralSpace> {
    let measure = sys.measure.as_ref()?;
    let report = validate_chain(&measure.chain);
    if let Some(v) = report.violation {
        checks.push(CheckRecord::fail("measure.chain", v));
        return None;
    }
    checks.push(CheckRecord::pass("measure.chain"));
    let chain = match &measure.weights {
        Some(w) => MeasureChain::new(measure.chain.clone(), w.clone()),
        None => MeasureChain::counting(measure.chain.clone()),
    };
    let chain = match chain {
        Ok(c) => c,
        Err(e) => {
            checks.push(CheckRecord::fail("measure.weights", e));
            return None;
        }
    };
    checks.push(CheckRecord::pass("measure.weights"));
    if let Some((m, n, block)) = chain.projective_defect() {
        checks.push(CheckRecord::fail(
            "measure.projective",
            format!("block {block:?} has different masses at levels {} and {}", m + 1, n + 1),
        ));
        return None;
    }
    checks.push(CheckRecord::pass("measure.projective"));
    let space = match LocallyStandardMeasureSpace::new(chain) {
        Ok(s) => s,
        Err(e) => {
            checks.push(CheckRecord::fail("measure.limit", e));
            return None;
        }
    };
    let fibers = sys.fibers.clone()?;
    let family = match FiberFamily::new(space, fibers) {
        Ok(f) => f,
        Err(e) => {
            checks.push(CheckRecord::fail("fibers", e));
            return None;
        }
    };
    checks.push(CheckRecord::pass("fibers"));
    match DirectIntegralSpace::new(family) {
        Ok(di) => Some(di),
        Err(e) => {
            checks.push(CheckRecord::fail("direct_integral", e));
            None
        }
    }
}

fn require_space(sys: &SystemDescription, checks: &mut Vec<CheckRecord>) -> Result<Option<DirectIntegralSpace>, InputError> {
    if sys.measure.is_none() {
        return Err(InputError::MissingSection("measure_space"));
    }
    if sys.fibers.is_none() {
        return Err(InputError::MissingSection("fibers"));
    }
    Ok(build_space(sys, checks))
}

/// Builds a named operator. The outer error is an input problem, the inner one a failed check.
fn build_operator(
    sys: &SystemDescription,
    name: &str,
    di: Option<&DirectIntegralSpace>,
    tol: &Tolerances,
) -> Result<Result<LocalOperator, String>, InputError> {
    let op = sys.operators.get(name).ok_or_else(|| InputError::UnknownName {
        kind: "operator",
        name: name.to_string(),
    })?;
    let on_di = || di.ok_or_else(|| "the direct integral is not available".to_string());
    let built = match op {
        OperatorInput::Blocks { chain, blocks } => {
            let chain = match chain {
                ChainRef::Named(c) => Ok(sys.chains[c].clone()),
                ChainRef::DirectIntegral => on_di().map(|d| d.chain().clone()),
            };
            chain.and_then(|c| LocalOperator::new_with(c, blocks.clone(), tol).map_err(|e| e.to_string()))
        }
        OperatorInput::Top { chain, top } => {
            let chain = match chain {
                ChainRef::Named(c) => Ok(sys.chains[c].clone()),
                ChainRef::DirectIntegral => on_di().map(|d| d.chain().clone()),
            };
            chain.and_then(|c| LocalOperator::from_top_with(c, top.clone(), tol).map_err(|e| e.to_string()))
        }
        OperatorInput::Fibers(fibers) => on_di().and_then(|di| {
            let mut ops = BTreeMap::new();
            for (p, blocks) in fibers {
                let chain = di
                    .fibers()
                    .fiber_chain(p)
                    .ok_or_else(|| format!("point {p:?} has no fiber"))?;
                let t = LocalOperator::new_with(chain, blocks.clone(), tol).map_err(|e| format!("fiber {p:?}: {e}"))?;
                ops.insert(p.clone(), t);
            }
            let d = DecomposableOperator::new(di, ops).map_err(|e| e.to_string())?;
            Ok(d.to_local(di))
        }),
        OperatorInput::Function(f) => on_di().and_then(|di| {
            DiagonalizableOperator::new(di, f, tol)
                .map(|d| d.to_local(di))
                .map_err(|e| e.to_string())
        }),
    };
    Ok(built)
}

fn needs_direct_integral(op: &OperatorInput) -> bool {
    match op {
        OperatorInput::Blocks { chain, .. } | OperatorInput::Top { chain, .. } => chain == &ChainRef::DirectIntegral,
        _ => true,
    }
}

fn validate(sys: &SystemDescription, tol: &Tolerances, checks: &mut Vec<CheckRecord>) -> Result<Value, InputError> {
    let mut result = Map::new();
    let di = build_space(sys, checks);
    if let Some(m) = &sys.measure {
        result.insert("levels".into(), json!(m.chain.len()));
        result.insert("points".into(), json!(m.chain.union_points()));
    }
    if let Some(di) = &di {
        let atoms = di.measure_space().limit_sigma().atoms().to_vec();
        result.insert("limit_atoms".into(), json!(atoms));
        result.insert("direct_integral_dims".into(), json!(di.chain().dims()));
    }
    let chains: BTreeMap<&String, &[usize]> = sys.chains.iter().map(|(k, c)| (k, c.dims())).collect();
    result.insert("chains".into(), json!(chains));

    for (name, op) in &sys.operators {
        let check = format!("operator.{name}");
        if needs_direct_integral(op) && di.is_none() {
            checks.push(CheckRecord::skip(check, "the direct integral is not available"));
            continue;
        }
        match build_operator(sys, name, di.as_ref(), tol)? {
            Ok(t) => checks.push(CheckRecord::pass(check).with_residual(t.compatibility_defect())),
            Err(e) => checks.push(CheckRecord::fail(check, e)),
        }
    }
    for name in sys.presentations.keys() {
        let check = format!("presentation.{name}");
        match build_presentation(sys, name, tol)? {
            Ok(_) => checks.push(CheckRecord::pass(check)),
            Err(e) => checks.push(CheckRecord::fail(check, e)),
        }
    }
    Ok(Value::Object(result))
}

fn fiber_mixing_json(w: &FiberMixing) -> Value {
    json!({
        "level": w.level + 1,
        "row": w.row,
        "col": w.col,
        "from": w.from,
        "to": w.to,
        "magnitude": w.magnitude,
    })
}

fn obstruction_json(o: &DiagonalObstruction) -> Value {
    match o {
        DiagonalObstruction::NotScalar {
            point,
            level,
            defect,
            first,
            second,
        } => json!({
            "kind": "not-scalar",
            "point": point,
            "level": level + 1,
            "defect": defect,
            "first": { "coordinate": first.0, "forces": complex_json(first.1) },
            "second": { "coordinate": second.0, "forces": complex_json(second.1) },
        }),
        DiagonalObstruction::NotMeasurable { first, second } => json!({
            "kind": "not-measurable",
            "first": { "point": first.0, "value": complex_json(first.1) },
            "second": { "point": second.0, "value": complex_json(second.1) },
        }),
    }
}

fn obstruction_text(o: &DiagonalObstruction) -> String {
    match o {
        DiagonalObstruction::NotScalar {
            point,
            level,
            first,
            second,
            ..
        } => format!(
            "fiber {point:?} at level {}: coordinate {} forces f = {}, coordinate {} forces f = {}",
            level + 1,
            first.0,
            label_name(&[first.1]),
            second.0,
            label_name(&[second.1])
        ),
        DiagonalObstruction::NotMeasurable { first, second } => format!(
            "points {:?} and {:?} share a limit atom but f = {} and f = {}",
            first.0,
            second.0,
            label_name(&[first.1]),
            label_name(&[second.1])
        ),
    }
}

fn classify_op(
    sys: &SystemDescription,
    op: &str,
    tol: &Tolerances,
    checks: &mut Vec<CheckRecord>,
) -> Result<Value, InputError> {
    if !sys.operators.contains_key(op) {
        return Err(InputError::UnknownName {
            kind: "operator",
            name: op.to_string(),
        });
    }
    let Some(di) = require_space(sys, checks)? else {
        return Ok(json!({ "operator": op }));
    };
    let t = match build_operator(sys, op, Some(&di), tol)? {
        Ok(t) => t,
        Err(e) => {
            checks.push(CheckRecord::fail(format!("operator.{op}"), e));
            return Ok(json!({ "operator": op }));
        }
    };
    checks.push(CheckRecord::pass(format!("operator.{op}")));
    let class = match classify(&di, &t, tol) {
        Ok(c) => c,
        Err(e) => {
            checks.push(CheckRecord::fail("classify", e));
            return Ok(json!({ "operator": op }));
        }
    };
    let mut result = Map::new();
    result.insert("operator".into(), json!(op));
    result.insert("class".into(), json!(class.kind()));
    let verdict = match &class {
        Classification::Diagonalizable(d) => {
            let f: BTreeMap<&String, Value> = d.function().iter().map(|(p, &z)| (p, complex_json(z))).collect();
            result.insert("function".into(), json!(f));
            let mut values = d.function().values();
            match values.next() {
                Some(&first) if values.all(|&z| (z - first).norm() == 0.0) => {
                    format!("diagonalizable, f ≡ {}", label_name(&[first]))
                }
                _ => "diagonalizable".to_string(),
            }
        }
        Classification::DecomposableOnly { operator, obstruction } => {
            let top = di.levels() - 1;
            let fibers: BTreeMap<&String, Value> = di
                .points()
                .iter()
                .filter_map(|p| operator.fiber_block(&di, top, p).map(|b| (p, matrix_json(b))))
                .collect();
            result.insert("fibers".into(), json!(fibers));
            result.insert("witness".into(), obstruction_json(obstruction));
            format!("decomposable, not diagonalizable: {}", obstruction_text(obstruction))
        }
        Classification::LocallyBoundedOnly { witness } => {
            result.insert("witness".into(), fiber_mixing_json(witness));
            format!("locally bounded only: {witness}")
        }
    };
    result.insert("verdict".into(), json!(verdict));
    checks.push(CheckRecord::pass("classify").with_witness(verdict));
    Ok(Value::Object(result))
}

fn commutant_dump(
    sys: &SystemDescription,
    level: usize,
    tol: &Tolerances,
    checks: &mut Vec<CheckRecord>,
) -> Result<Value, InputError> {
    let Some(di) = require_space(sys, checks)? else {
        return Ok(json!({ "level": level }));
    };
    if level == 0 || level > di.levels() {
        return Err(InputError::Shape {
            at: "--level".into(),
            reason: format!("level {level} is outside 1..={}", di.levels()),
        });
    }
    let n = level - 1;
    let algebra = match diag_commutant(&di, n, tol) {
        Ok(a) => a,
        Err(e) => {
            checks.push(CheckRecord::fail("commutant", e));
            return Ok(json!({ "level": level }));
        }
    };
    let expected = expected_commutant_dim(&di, n);
    let dim_check = if algebra.dim() == expected {
        CheckRecord::pass("commutant.dimension")
    } else {
        CheckRecord::fail(
            "commutant.dimension",
            format!("dimension {} differs from the atom count formula {expected}", algebra.dim()),
        )
    };
    checks.push(dim_check);
    let closure = algebra.closure_residual();
    checks.push(CheckRecord::bounded("commutant.closure", closure, tol.containment));
    Ok(json!({
        "level": level,
        "size": di.chain().dim(n),
        "dim": algebra.dim(),
        "expected_dim": expected,
        "closure_residual": closure,
        "basis": algebra.basis().iter().map(matrix_json).collect::<Vec<_>>(),
    }))
}

fn theorem33(sys: &SystemDescription, tol: &Tolerances, checks: &mut Vec<CheckRecord>) -> Result<Value, InputError> {
    let Some(di) = require_space(sys, checks)? else {
        return Ok(json!({}));
    };
    let report = match check_dec_equals_diag_commutant(&di, tol) {
        Ok(r) => r,
        Err(e) => {
            checks.push(CheckRecord::fail("theorem33", e));
            return Ok(json!({}));
        }
    };
    let mut rows = Vec::new();
    for l in &report.levels {
        let name = format!("theorem33.level {}", l.level + 1);
        let residual = l.dec_in_commutant.max(l.commutant_in_dec);
        let mut record = if l.equal(tol) {
            CheckRecord::pass(name)
        } else {
            CheckRecord::fail(
                name,
                format!(
                    "decomposables have dimension {}, the commutant of the diagonalizables {}",
                    l.dec_dim, l.commutant_dim
                ),
            )
        };
        record.residual = Some(residual);
        checks.push(record);
        rows.push(json!({
            "level": l.level + 1,
            "diag_dim": l.diag_dim,
            "dec_dim": l.dec_dim,
            "commutant_dim": l.commutant_dim,
            "expected_commutant_dim": l.expected_commutant_dim,
            "double_commutant_dim": l.double_commutant_dim,
            "diag_abelian_residual": l.diag_abelian_residual,
            "diag_in_dec": l.diag_in_dec,
            "dec_in_commutant": l.dec_in_commutant,
            "commutant_in_dec": l.commutant_in_dec,
        }));
    }
    let singletons = di.measure_space().limit_sigma().atoms().iter().all(|a| a.len() == 1);
    Ok(json!({ "singleton_atoms": singletons, "levels": rows }))
}

fn build_presentation(
    sys: &SystemDescription,
    name: &str,
    tol: &Tolerances,
) -> Result<Result<AbelianPresentation, String>, InputError> {
    let p = sys.presentations.get(name).ok_or_else(|| InputError::UnknownName {
        kind: "presentation",
        name: name.to_string(),
    })?;
    let mut generators = Vec::new();
    for g in &p.generators {
        match build_operator(sys, g, None, tol)? {
            Ok(t) => generators.push(t),
            Err(e) => return Ok(Err(format!("generator {g:?}: {e}"))),
        }
    }
    Ok(AbelianPresentation::new(sys.chains[&p.chain].clone(), generators, tol).map_err(|e| e.to_string()))
}

fn disintegrate_algebra(
    sys: &SystemDescription,
    algebra: &str,
    tol: &Tolerances,
    checks: &mut Vec<CheckRecord>,
) -> Result<Value, InputError> {
    let base = json!({ "algebra": algebra });
    let pres = match build_presentation(sys, algebra, tol)? {
        Ok(p) => p,
        Err(e) => {
            checks.push(CheckRecord::fail("presentation", e));
            return Ok(base);
        }
    };
    checks.push(CheckRecord::pass("presentation"));
    let result = match disintegrate(&pres, tol) {
        Ok(r) => r,
        Err(e) => {
            checks.push(CheckRecord::fail("disintegration", e));
            return Ok(base);
        }
    };
    let spectrum = result.spectrum();
    let levels = spectrum.levels();
    let res = result.residuals();
    checks.push(CheckRecord::bounded("spectrum.resolution", spectrum.resolution_residual(), tol.rank));
    checks.push(CheckRecord::bounded("spectrum.restriction", spectrum.restriction_residual(), tol.containment));
    for n in 0..levels {
        checks.push(CheckRecord::bounded(format!("isometry.level {}", n + 1), res.isometry[n], tol.isometry));
        checks.push(CheckRecord::bounded(format!("surjectivity.level {}", n + 1), res.coisometry[n], tol.isometry));
        let t = &res.cross_terms[n];
        checks.push(CheckRecord::bounded(
            format!("cross_terms.level {}", n + 1),
            t.i2.max(t.i3).max(t.i4),
            tol.homomorphism,
        ));
    }
    for (n, &r) in res.prefix.iter().enumerate() {
        checks.push(CheckRecord::bounded(format!("prefix.level {}", n + 2), r, tol.prefix));
    }
    let family = result.fibers().family();
    let mismatch = spectrum.points().iter().find_map(|p| {
        (0..levels)
            .find(|&n| family.dim(n, &p.name) != spectrum.rank(n, &p.name))
            .map(|n| (p.name.clone(), n))
    });
    checks.push(match mismatch {
        None => CheckRecord::pass("fibers.ranks"),
        Some((p, n)) => CheckRecord::fail(
            "fibers.ranks",
            format!(
                "fiber {p:?} has dimension {} at level {}, its spectral projection rank {}",
                family.dim(n, &p),
                n + 1,
                spectrum.rank(n, &p)
            ),
        ),
    });

    let generator_names = &sys.presentations[algebra].generators;
    let conjugation = match verify_conjugation(&result, &pres, tol) {
        Ok(c) => Some(c),
        Err(e) => {
            checks.push(CheckRecord::fail("conjugation", e));
            None
        }
    };
    if let Some(report) = &conjugation {
        for g in &report.generators {
            let name = format!("conjugation.{}", generator_names[g.index]);
            let ok = g.kind == "diagonalizable" && g.label_error <= tol.label;
            let mut record = if ok {
                CheckRecord::pass(name)
            } else {
                CheckRecord::fail(name, format!("conjugated generator is {}", g.kind))
            };
            record.residual = Some(g.label_error);
            checks.push(record);
        }
        for s in &report.span {
            let name = format!("span.level {}", s.level + 1);
            checks.push(if s.rank == s.dim {
                CheckRecord::pass(name)
            } else {
                CheckRecord::fail(name, format!("rank {} of {}", s.rank, s.dim))
            });
        }
        let h = &report.homomorphism;
        for (name, r) in [
            ("tau.product", h.product),
            ("tau.adjoint", h.adjoint),
            ("tau.unit", h.unit),
            ("tau.intertwining", h.intertwining),
        ] {
            checks.push(CheckRecord::bounded(name, r, tol.homomorphism));
        }
        for a in &report.algebras {
            checks.push(CheckRecord::bounded(
                format!("algebra.level {}", a.level + 1),
                a.span_residual,
                tol.containment,
            ));
            let name = format!("double_commutant.level {}", a.level + 1);
            checks.push(if a.algebra_dim == a.double_commutant_dim {
                CheckRecord::pass(name)
            } else {
                CheckRecord::fail(
                    name,
                    format!("algebra dimension {}, double commutant {}", a.algebra_dim, a.double_commutant_dim),
                )
            });
        }
        for l in &report.commutant.levels {
            let name = format!("theorem33.level {}", l.level + 1);
            let residual = l.dec_in_commutant.max(l.commutant_in_dec);
            let mut record = if l.equal(tol) {
                CheckRecord::pass(name)
            } else {
                CheckRecord::fail(name, format!("dec dimension {}, commutant {}", l.dec_dim, l.commutant_dim))
            };
            record.residual = Some(residual);
            checks.push(record);
        }
    }

    let points: Vec<Value> = spectrum
        .points()
        .iter()
        .map(|p| {
            json!({
                "name": p.name,
                "label": p.label.iter().map(|&z| complex_json(z)).collect::<Vec<_>>(),
                "first_level": p.first_level + 1,
                "ranks": (0..levels).map(|n| spectrum.rank(n, &p.name)).collect::<Vec<_>>(),
            })
        })
        .collect();
    let cross: Vec<Value> = res
        .cross_terms
        .iter()
        .enumerate()
        .map(|(n, t)| json!({ "level": n + 1, "i1": t.i1, "i2": t.i2, "i3": t.i3, "i4": t.i4, "norm": t.norm }))
        .collect();
    let mut out = json!({
        "algebra": algebra,
        "chain": spectrum.chain().dims(),
        "spectrum": points,
        "fiber_dims": family.dims(),
        "direct_integral_dims": result.space().chain().dims(),
        "w": result.w_matrices().iter().map(matrix_json).collect::<Vec<_>>(),
        "residuals": {
            "isometry": res.isometry,
            "coisometry": res.coisometry,
            "prefix": res.prefix,
            "cross_terms": cross,
            "resolution": spectrum.resolution_residual(),
            "restriction": spectrum.restriction_residual(),
            "orthogonality": spectrum.orthogonality_residual(),
        },
    });
    if let Some(report) = conjugation {
        let h = report.homomorphism;
        out["conjugation"] = json!({
            "generators": report.generators.iter().map(|g| json!({
                "name": generator_names[g.index],
                "class": g.kind,
                "label_error": number(g.label_error),
            })).collect::<Vec<_>>(),
            "span": report.span.iter().map(|s| json!({ "level": s.level + 1, "rank": s.rank, "dim": s.dim })).collect::<Vec<_>>(),
            "homomorphism": {
                "product": h.product,
                "adjoint": h.adjoint,
                "unit": h.unit,
                "intertwining": h.intertwining,
            },
            "algebras": report.algebras.iter().map(|a| json!({
                "level": a.level + 1,
                "algebra_dim": a.algebra_dim,
                "double_commutant_dim": a.double_commutant_dim,
                "span_residual": a.span_residual,
            })).collect::<Vec<_>>(),
        });
    }
    Ok(out)
}

/// Exit status for an input error.
pub const INPUT_ERROR: i32 = 2;
