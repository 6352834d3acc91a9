//! Machine-readable run reports.
//!
//! Bounds carry both the exact rational (as a `num/den` string, losslessly
//! round-trippable) and a convenience float. Field order is declaration
//! order, so serialized output is deterministic for fixed flags.

use crate::mechanisms::MechParams;
use crate::synthesis::{AccuracyReport, PrivacyReport};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Witness {
    pub x: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_prime: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunReport {
    pub mechanism: String,
    pub params: MechParams,
    pub mode: String,
    pub kind: String,
    /// The bound as an exact rational string (`"4/1"`), or `"inf"`.
    pub bound_exact: String,
    pub bound_float: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_exact: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub solver_runs: usize,
    pub bdd_nodes: usize,
    pub build_seconds: f64,
    pub inference_seconds: f64,
    pub synthesis_seconds: f64,
}

impl RunReport {
    pub fn from_privacy(
        mechanism: &str,
        params: MechParams,
        mode: &str,
        report: &PrivacyReport,
        bdd_nodes: usize,
        build_seconds: f64,
    ) -> Self {
        RunReport {
            mechanism: mechanism.into(),
            params,
            mode: mode.into(),
            kind: "privacy".into(),
            bound_exact: report.p.to_ratio_string(),
            bound_float: report.p.to_f64(),
            epsilon: Some(report.epsilon),
            alpha: None,
            beta_exact: None,
            witness: report.witness.as_ref().map(|(x, xp, y)| Witness {
                x: x.clone(),
                x_prime: Some(xp.clone()),
                y: Some(y.clone()),
            }),
            solver_runs: report.solver_runs,
            bdd_nodes,
            build_seconds,
            inference_seconds: report.inference_seconds,
            synthesis_seconds: report.synthesis_seconds,
        }
    }

    pub fn from_accuracy(
        mechanism: &str,
        params: MechParams,
        mode: &str,
        report: &AccuracyReport,
        bdd_nodes: usize,
        build_seconds: f64,
    ) -> Self {
        RunReport {
            mechanism: mechanism.into(),
            params,
            mode: mode.into(),
            kind: "accuracy".into(),
            bound_exact: report.p.to_ratio_string(),
            bound_float: report.p.to_f64(),
            epsilon: None,
            alpha: Some(report.alpha),
            beta_exact: Some(report.beta.to_ratio_string()),
            witness: report.witness.as_ref().map(|x| Witness {
                x: x.clone(),
                x_prime: None,
                y: None,
            }),
            solver_runs: report.solver_runs,
            bdd_nodes,
            build_seconds,
            inference_seconds: report.inference_seconds,
            synthesis_seconds: report.synthesis_seconds,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::Rational;

    #[test]
    fn report_serialization_round_trips() {
        let report = RunReport {
            mechanism: "rr".into(),
            params: MechParams {
                n: 8,
                lambda: Some(Rational::new(1, 5)),
                ..MechParams::default()
            },
            mode: "restricted".into(),
            kind: "privacy".into(),
            bound_exact: "4/1".into(),
            bound_float: 4.0,
            epsilon: Some(4.0f64.ln()),
            alpha: None,
            beta_exact: None,
            witness: Some(Witness {
                x: vec![0, 0],
                x_prime: Some(vec![1, 0]),
                y: Some(vec![0, 0]),
            }),
            solver_runs: 1,
            bdd_nodes: 10,
            build_seconds: 0.0,
            inference_seconds: 0.0,
            synthesis_seconds: 0.0,
        };
        let json = serde_json::to_string_pretty(&report).unwrap();
        let back: RunReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
        assert!(json.contains("\"4/1\""));
    }
}
