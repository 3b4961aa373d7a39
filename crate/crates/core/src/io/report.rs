//! JSON run reports, schema version 1:
//!
//! ```text
//! { "schema": 1, "meta": { ... }, "results": [ { ... }, ... ], "stages": [ ... ]? }
//! ```
//!
//! Eigen-indices are 1-based. Infinite radius or tail estimates are written
//! as the string `"inf"`. Floats use the shortest round-trip representation.

use serde::{Deserialize, Serialize};

use crate::continuation::StageReport;
use crate::error::Result;
use crate::eval::EigenpairResult;
use crate::series::SeriesCoefficients;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DIAGNOSTICS_NOTE: &str =
    "radius_estimate and tail_estimate are heuristic extrapolations of coefficient decay";

mod float_or_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!(
                "expected number or \"inf\", got {t:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceEcho {
    pub ortho: f64,
    pub eig: f64,
    pub gap: f64,
    pub convergence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub k_path: Option<String>,
    pub l_path: Option<String>,
    pub basis_path: Option<String>,
    pub dimension: usize,
    pub order: usize,
    pub theta: f64,
    pub window: usize,
    pub stages: Option<String>,
    pub with_oracle: bool,
    pub tolerances: ToleranceEcho,
    pub all_converged: bool,
    pub diagnostics: String,
}

impl Meta {
    /// Metadata with tool identity filled in and `all_converged` unset.
    pub fn new(
        command: &str,
        dimension: usize,
        order: usize,
        theta: f64,
        window: usize,
        tolerances: ToleranceEcho,
    ) -> Self {
        Meta {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            k_path: None,
            l_path: None,
            basis_path: None,
            dimension,
            order,
            theta,
            window,
            stages: None,
            with_oracle: false,
            tolerances,
            all_converged: false,
            diagnostics: DIAGNOSTICS_NOTE.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub lambda: f64,
    pub lambda_error: f64,
    /// 2-norm distance between sign-canonical unit vectors.
    pub eigenvector_distance: f64,
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultEntry {
    pub index: usize,
    pub theta: f64,
    pub lambda_coefficients: Vec<f64>,
    pub lambda_at_theta: f64,
    pub eigenvector: Vec<f64>,
    pub gauge_vector: Vec<f64>,
    pub residual: f64,
    #[serde(with = "float_or_inf")]
    pub radius_estimate: f64,
    #[serde(with = "float_or_inf")]
    pub tail_estimate: f64,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleComparison>,
}

impl From<&EigenpairResult> for ResultEntry {
    fn from(r: &EigenpairResult) -> Self {
        ResultEntry {
            index: r.index + 1,
            theta: r.theta,
            lambda_coefficients: r.lambda_coefficients.clone(),
            lambda_at_theta: r.lambda,
            eigenvector: r.vector.clone(),
            gauge_vector: r.raw_gauge_vector.clone(),
            residual: r.residual,
            radius_estimate: r.radius_estimate,
            tail_estimate: r.tail_estimate,
            converged: r.converged,
            oracle: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageEntry {
    pub stage: usize,
    pub theta_start: f64,
    pub theta_end: f64,
    pub local_target: f64,
    #[serde(with = "float_or_inf")]
    pub min_radius: f64,
    pub all_converged: bool,
}

impl From<&StageReport> for StageEntry {
    fn from(s: &StageReport) -> Self {
        StageEntry {
            stage: s.stage,
            theta_start: s.theta_start,
            theta_end: s.theta_end,
            local_target: s.local_target,
            min_radius: s.min_radius,
            all_converged: s.all_converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub meta: Meta,
    pub results: Vec<ResultEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<Vec<StageEntry>>,
}

impl Report {
    pub fn new(results: &[EigenpairResult], mut meta: Meta) -> Self {
        meta.all_converged = results.iter().all(|r| r.converged);
        Report {
            schema: SCHEMA_VERSION,
            meta,
            results: results.iter().map(ResultEntry::from).collect(),
            stages: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Serializes `results` with `meta`; `all_converged` is recomputed.
pub fn write_report(results: &[EigenpairResult], meta: Meta) -> Result<String> {
    Report::new(results, meta).to_json()
}

pub fn read_report(text: &str) -> Result<Report> {
    Ok(serde_json::from_str(text)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDump {
    pub order: usize,
    pub base_values: Vec<f64>,
    /// `a[i][r]`.
    pub a: Vec<Vec<f64>>,
    /// `b[i][k][r]`.
    pub b: Vec<Vec<Vec<f64>>>,
}

impl From<&SeriesCoefficients> for CoefficientDump {
    fn from(c: &SeriesCoefficients) -> Self {
        let n = c.dim();
        CoefficientDump {
            order: c.order(),
            base_values: c.base_values().to_vec(),
            a: (0..n).map(|i| c.lambda_coefficients(i).to_vec()).collect(),
            b: (0..n)
                .map(|i| (0..n).map(|k| c.phi_coefficients(i, k)).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientReport {
    pub schema: u32,
    pub meta: Meta,
    pub coefficients: CoefficientDump,
}

pub fn write_coefficient_report(coeffs: &SeriesCoefficients, meta: Meta) -> Result<String> {
    let report = CoefficientReport {
        schema: SCHEMA_VERSION,
        meta,
        coefficients: coeffs.into(),
    };
    let mut s = serde_json::to_string_pretty(&report)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn echo() -> ToleranceEcho {
        ToleranceEcho {
            ortho: 1e-10,
            eig: 1e-10,
            gap: 1e-10,
            convergence: 1e-9,
        }
    }

    fn sample(converged: bool) -> EigenpairResult {
        EigenpairResult {
            index: 0,
            theta: 1.0,
            lambda: 5.0,
            lambda_coefficients: vec![2.0, 3.0, 0.0, 0.0, 0.0],
            vector: vec![1.0],
            raw_gauge_vector: vec![1.0],
            residual: 0.0,
            radius_estimate: f64::INFINITY,
            tail_estimate: 0.0,
            converged,
        }
    }

    #[test]
    fn linear_scalar_report() {
        let text = write_report(&[sample(true)], Meta::new("solve", 1, 4, 1.0, 8, echo())).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["meta"]["tool"], TOOL_NAME);
        assert_eq!(v["meta"]["all_converged"], true);
        let r = &v["results"][0];
        assert_eq!(r["index"], 1);
        assert_eq!(r["lambda_coefficients"], serde_json::json!([2.0, 3.0, 0.0, 0.0, 0.0]));
        assert_eq!(r["lambda_at_theta"], 5.0);
        assert_eq!(r["radius_estimate"], "inf");
        assert_eq!(r["converged"], true);
        assert!(r.get("oracle").is_none());
    }

    #[test]
    fn non_converged_flag_is_reported() {
        let text = write_report(&[sample(false)], Meta::new("solve", 1, 4, 1.0, 8, echo())).unwrap();
        let back = read_report(&text).unwrap();
        assert!(!back.meta.all_converged);
        assert!(!back.results[0].converged);
        assert_eq!(back.results[0].radius_estimate, f64::INFINITY);
    }

    #[test]
    fn rejects_unknown_marker() {
        let text = write_report(&[sample(true)], Meta::new("solve", 1, 4, 1.0, 8, echo()))
            .unwrap()
            .replace("\"inf\"", "\"nan\"");
        assert!(read_report(&text).is_err());
    }
}
