//! Run reports: one record per check plus a command-specific result.

use locint_core::linalg::{CMatrix, C64};
use locint_core::Tolerances;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Not run because an earlier check it depends on failed.
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: Status,
    /// Non-finite residuals serialize as `null`.
    pub residual: Option<f64>,
    pub witness: Option<String>,
}

impl CheckRecord {
    pub fn pass(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Pass,
            residual: None,
            witness: None,
        }
    }

    pub fn fail(name: impl Into<String>, witness: impl ToString) -> Self {
        Self {
            name: name.into(),
            status: Status::Fail,
            residual: None,
            witness: Some(witness.to_string()),
        }
    }

    pub fn skip(name: impl Into<String>, reason: impl ToString) -> Self {
        Self {
            name: name.into(),
            status: Status::Skip,
            residual: None,
            witness: Some(reason.to_string()),
        }
    }

    /// Passes iff `residual ≤ bound`.
    pub fn bounded(name: impl Into<String>, residual: f64, bound: f64) -> Self {
        let ok = residual <= bound;
        Self {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            residual: Some(residual),
            witness: (!ok).then(|| format!("residual {residual:e} exceeds {bound:e}")),
        }
    }

    pub fn with_residual(mut self, residual: f64) -> Self {
        self.residual = Some(residual);
        self
    }

    pub fn with_witness(mut self, witness: impl ToString) -> Self {
        self.witness = Some(witness.to_string());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    /// `sha256:` of the system description bytes.
    pub input_digest: String,
    /// `sha256:` of the tolerance file, when one was given.
    pub tolerance_digest: Option<String>,
    pub tolerances: Tolerances,
    pub status: Status,
    pub checks: Vec<CheckRecord>,
    pub result: Value,
    pub wall_time_ms: u64,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// 0 when every check passed (skips aside), 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn overall(checks: &[CheckRecord]) -> Status {
    if checks.iter().any(|c| c.status == Status::Fail) {
        Status::Fail
    } else {
        Status::Pass
    }
}

pub fn digest(bytes: &[u8]) -> String {
    let hash = Sha256::digest(bytes);
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

pub fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn matrix_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array(m.row(i).iter().map(|&z| complex_json(z)).collect()))
            .collect(),
    )
}

/// Non-finite values become `null`.
pub fn number(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}
