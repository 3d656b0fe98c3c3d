//! Machine-readable reports and their serializations.

use std::collections::BTreeMap;

use mirrorforge_core::check::{CheckReport, IdentityOutcome};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{OutputFormat, RunConfig};

pub const REPORT_SCHEMA: &str = "mirrorforge-report-v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteStatus {
    Pass,
    Fail,
    /// The configured order cannot support the requested fit.
    InsufficientOrder,
    /// The computation itself could not be carried out.
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteFailure {
    pub label: String,
    pub order: usize,
    pub residual: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub pass: bool,
    pub status: SuiteStatus,
    pub first_failure: Option<SuiteFailure>,
    pub timing_ms: u64,
    pub identities: Vec<IdentityOutcome>,
    /// Suite-specific records (resolved conventions, certified forms, ...).
    pub notes: BTreeMap<String, Value>,
}

impl VerificationReport {
    pub fn from_checks(suite: &str, checks: Vec<CheckReport>) -> Self {
        let identities: Vec<IdentityOutcome> = checks.into_iter().flat_map(|c| c.identities).collect();
        let first_failure = identities.iter().find_map(|i| {
            i.first_failure.as_ref().map(|f| SuiteFailure { label: i.label.clone(), order: f.order, residual: f.residual.clone() })
        });
        let pass = first_failure.is_none();
        Self {
            suite: suite.to_string(),
            pass,
            status: if pass { SuiteStatus::Pass } else { SuiteStatus::Fail },
            first_failure,
            timing_ms: 0,
            identities,
            notes: BTreeMap::new(),
        }
    }

    pub fn insufficient(suite: &str, needed: usize, available: usize) -> Self {
        Self::stopped(suite, SuiteStatus::InsufficientOrder, format!("insufficient order: needed {needed} coefficients, have {available}"), available)
    }

    pub fn error(suite: &str, message: String) -> Self {
        Self::stopped(suite, SuiteStatus::Error, message, 0)
    }

    fn stopped(suite: &str, status: SuiteStatus, label: String, order: usize) -> Self {
        Self {
            suite: suite.to_string(),
            pass: false,
            status,
            first_failure: Some(SuiteFailure { label, order, residual: "none".into() }),
            timing_ms: 0,
            identities: Vec::new(),
            notes: BTreeMap::new(),
        }
    }

    pub fn note(mut self, key: &str, value: impl Serialize) -> Self {
        self.notes.insert(key.to_string(), serde_json::to_value(value).expect("serializable note"));
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub verb: String,
    pub config: Value,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub suites: Vec<VerificationReport>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub data: Value,
}

impl Report {
    pub fn data(verb: &str, config: &RunConfig, pass: bool, data: impl Serialize) -> Self {
        Self {
            schema: REPORT_SCHEMA.into(),
            verb: verb.into(),
            config: serde_json::to_value(config).expect("config serializes"),
            pass,
            suites: Vec::new(),
            data: serde_json::to_value(data).expect("data serializes"),
        }
    }

    pub fn suites(verb: &str, config: &RunConfig, suites: Vec<VerificationReport>) -> Self {
        Self {
            schema: REPORT_SCHEMA.into(),
            verb: verb.into(),
            config: serde_json::to_value(config).expect("config serializes"),
            pass: suites.iter().all(|s| s.pass),
            suites,
            data: Value::Null,
        }
    }

    /// 0 on pass, 1 on a failed verification, 2 when a suite could not run
    /// at the configured order.
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else if self.suites.is_empty() || self.suites.iter().any(|s| matches!(s.status, SuiteStatus::Fail | SuiteStatus::Error)) {
            1
        } else {
            2
        }
    }

    pub fn emit(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => serde_json::to_string_pretty(self).expect("report serializes") + "\n",
            OutputFormat::Csv => self.csv(),
            OutputFormat::Pretty => self.pretty(),
        }
    }

    fn rows(&self) -> Vec<(String, String)> {
        if self.suites.is_empty() {
            let mut out = Vec::new();
            flatten("", &self.data, &mut out);
            return out;
        }
        self.suites
            .iter()
            .map(|s| {
                let detail = match &s.first_failure {
                    None => "pass".to_string(),
                    Some(f) => format!("{} at order {}: {}", f.label, f.order, f.residual),
                };
                (s.suite.clone(), detail)
            })
            .collect()
    }

    fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        if !self.suites.is_empty() {
            w.write_record(["suite", "pass", "status", "failure_label", "failure_order", "residual", "timing_ms"]).expect("in-memory write");
            for s in &self.suites {
                let (label, order, residual) = match &s.first_failure {
                    Some(f) => (f.label.clone(), f.order.to_string(), f.residual.clone()),
                    None => (String::new(), String::new(), String::new()),
                };
                let status = serde_json::to_value(s.status).expect("status serializes");
                w.write_record([
                    s.suite.clone(),
                    s.pass.to_string(),
                    status.as_str().unwrap_or_default().to_string(),
                    label,
                    order,
                    residual,
                    s.timing_ms.to_string(),
                ])
                .expect("in-memory write");
            }
        } else if let Some(coeffs) = self.data.get("coefficients").and_then(Value::as_array) {
            // series dumps flatten to one row per power
            w.write_record(["power", "coefficient"]).expect("in-memory write");
            for (i, c) in coeffs.iter().enumerate() {
                w.write_record([i.to_string(), c.as_str().unwrap_or_default().to_string()]).expect("in-memory write");
            }
        } else {
            w.write_record(["key", "value"]).expect("in-memory write");
            for (k, v) in self.rows() {
                w.write_record([k, v]).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }

    fn pretty(&self) -> String {
        let rows = self.rows();
        let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
        let mut out = format!("{} {}: {}\n", self.schema, self.verb, if self.pass { "PASS" } else { "FAIL" });
        for (k, v) in rows {
            out.push_str(&format!("  {k:<width$}  {v}\n"));
        }
        out
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&join(k), x, out);
            }
        }
        Value::Array(xs) => {
            for (i, x) in xs.iter().enumerate() {
                flatten(&join(&i.to_string()), x, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_no_failure() {
        let mut c = CheckReport::new("x");
        c.push(IdentityOutcome::pass("a", 3));
        let r = VerificationReport::from_checks("x", vec![c.clone()]);
        assert!(r.pass && r.first_failure.is_none());
        c.push(IdentityOutcome::fail("b", 2, "1/3".into()));
        let r = VerificationReport::from_checks("x", vec![c]);
        assert!(!r.pass);
        assert_eq!(r.first_failure.unwrap(), SuiteFailure { label: "b".into(), order: 2, residual: "1/3".into() });
        let r = VerificationReport::insufficient("fit", 14, 6);
        assert!(!r.pass && r.first_failure.is_some());
    }

    #[test]
    fn json_round_trip() {
        let c = RunConfig::default();
        let mut check = CheckReport::new("x");
        check.push(IdentityOutcome::fail("b", 2, "-1/3".into()));
        let r = Report::suites("verify", &c, vec![VerificationReport::from_checks("x", vec![check]).note("k", "v")]);
        let text = r.emit(OutputFormat::Json);
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn series_csv_and_pretty() {
        let r = Report::data("series", &RunConfig::default(), true, serde_json::json!({"name": "l", "coefficients": ["1", "9", "162"]}));
        assert_eq!(r.emit(OutputFormat::Csv), "power,coefficient\n0,1\n1,9\n2,162\n");
        let p = r.emit(OutputFormat::Pretty);
        assert!(p.contains("coefficients.2  162"), "{p}");
    }

    #[test]
    fn exit_codes() {
        let c = RunConfig::default();
        let ok = Report::suites("verify", &c, vec![VerificationReport::from_checks("x", vec![])]);
        assert_eq!(ok.exit_code(), 0);
        let short = Report::suites("verify", &c, vec![VerificationReport::insufficient("fit", 14, 6)]);
        assert_eq!(short.exit_code(), 2);
    }
}
