//! Report data model: named measurements with thresholds, per-check
//! records, and the scenario-level verdict.  Reports serialize to JSON
//! (full structure) or CSV (flat measurement table); with a fixed config
//! and seed the output is byte-stable except for the runtime fields.

use serde::{Deserialize, Serialize};

/// Direction of a threshold comparison.  Most measurements must stay
/// below their threshold; contrast controls must stay above.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">")]
    Above,
}

impl Comparison {
    pub fn passes(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::Below => value < threshold,
            Comparison::Above => value > threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Below => "<",
            Comparison::Above => ">",
        }
    }
}

/// One measured quantity graded against its threshold.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Measurement {
    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Measurement {
        Measurement {
            name: name.into(),
            value,
            threshold,
            comparison: Comparison::Below,
            pass: Comparison::Below.passes(value, threshold),
        }
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Measurement {
        Measurement {
            name: name.into(),
            value,
            threshold,
            comparison: Comparison::Above,
            pass: Comparison::Above.passes(value, threshold),
        }
    }
}

/// Outcome of one verification check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// Self-contained statement of the property the check certifies.
    pub property: String,
    pub status: String,
    pub runtime_ms: u64,
    pub measurements: Vec<Measurement>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CheckRecord {
    pub fn passed(&self) -> bool {
        self.status == "pass"
    }

    pub fn from_measurements(
        name: impl Into<String>,
        property: impl Into<String>,
        runtime_ms: u64,
        measurements: Vec<Measurement>,
    ) -> CheckRecord {
        let pass = measurements.iter().all(|m| m.pass);
        CheckRecord {
            name: name.into(),
            property: property.into(),
            status: if pass { "pass" } else { "fail" }.to_string(),
            runtime_ms,
            measurements,
            error: None,
        }
    }

    pub fn from_error(
        name: impl Into<String>,
        property: impl Into<String>,
        runtime_ms: u64,
        error: impl Into<String>,
    ) -> CheckRecord {
        CheckRecord {
            name: name.into(),
            property: property.into(),
            status: "fail".to_string(),
            runtime_ms,
            measurements: Vec::new(),
            error: Some(error.into()),
        }
    }
}

/// Full scenario verdict: environment stamp, gate outcomes, check
/// records, and the overall flag.
#[derive(Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub convention: String,
    pub flow_mode: String,
    pub seed: u64,
    pub horizon: f64,
    pub steps: usize,
    pub fine_step: f64,
    pub gates: Vec<Measurement>,
    pub aborted: bool,
    pub checks: Vec<CheckRecord>,
    pub overall_pass: bool,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,check,measurement,value,threshold,comparison,pass\n");
        for g in &self.gates {
            out.push_str(&format!(
                "gate,,{},{:e},{:e},{},{}\n",
                g.name,
                g.value,
                g.threshold,
                g.comparison.symbol(),
                g.pass
            ));
        }
        for c in &self.checks {
            for m in &c.measurements {
                out.push_str(&format!(
                    "check,{},{},{:e},{:e},{},{}\n",
                    c.name,
                    m.name,
                    m.value,
                    m.threshold,
                    m.comparison.symbol(),
                    m.pass
                ));
            }
            if let Some(err) = &c.error {
                out.push_str(&format!(
                    "check,{},error,,,,false # {}\n",
                    c.name,
                    err.replace(['\n', ','], " ")
                ));
            }
        }
        out.push_str(&format!("summary,,overall_pass,,,,{}\n", self.overall_pass));
        out
    }

    /// Human-oriented lines for the terminal.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "scenario {} (seed {}, horizon {}, {} steps, {} flow)\n",
            self.scenario, self.seed, self.horizon, self.steps, self.flow_mode
        ));
        for g in &self.gates {
            out.push_str(&format!(
                "  gate  {:<28} {:>12.3e} {} {:.1e}  {}\n",
                g.name,
                g.value,
                g.comparison.symbol(),
                g.threshold,
                if g.pass { "ok" } else { "FAILED" }
            ));
        }
        if self.aborted {
            out.push_str("  aborted: gates failed, no checks were run\n");
        }
        for c in &self.checks {
            out.push_str(&format!(
                "  check {:<28} {:>7} ms  {}\n",
                c.name,
                c.runtime_ms,
                if c.passed() { "pass" } else { "FAIL" }
            ));
            for m in &c.measurements {
                out.push_str(&format!(
                    "        {:<28} {:>12.3e} {} {:.1e}  {}\n",
                    m.name,
                    m.value,
                    m.comparison.symbol(),
                    m.threshold,
                    if m.pass { "ok" } else { "FAILED" }
                ));
            }
            if let Some(err) = &c.error {
                out.push_str(&format!("        error: {err}\n"));
            }
        }
        out.push_str(&format!(
            "overall: {}\n",
            if self.overall_pass { "PASS" } else { "FAIL" }
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report(pass: bool) -> VerificationReport {
        let gate = Measurement::below("max_wind_strength", 0.3, 1.0);
        let check = CheckRecord::from_measurements(
            "flag_equality",
            "flag curvature is preserved",
            12,
            vec![Measurement::below(
                "max_flag_difference",
                if pass { 1e-9 } else { 1e-3 },
                1e-6,
            )],
        );
        let overall = gate.pass && check.passed();
        VerificationReport {
            scenario: "sample".to_string(),
            convention: "unit balls translated by +v".to_string(),
            flow_mode: "closed".to_string(),
            seed: 4,
            horizon: 1.0,
            steps: 100,
            fine_step: 0.01,
            gates: vec![gate],
            aborted: false,
            checks: vec![check],
            overall_pass: overall,
        }
    }

    #[test]
    fn comparisons_are_strict_at_the_threshold() {
        assert!(!Measurement::below("m", 1.0, 1.0).pass);
        assert!(!Measurement::above("m", 1.0, 1.0).pass);
        assert!(Measurement::below("m", 0.999, 1.0).pass);
        assert!(Measurement::above("m", 1.001, 1.0).pass);
    }

    #[test]
    fn error_records_fail_and_keep_the_message() {
        let record = CheckRecord::from_error("g", "p", 3, "chart exit");
        assert!(!record.passed());
        assert_eq!(record.error.as_deref(), Some("chart exit"));
        let json = serde_json::to_string(&record).unwrap();
        assert!(json.contains("chart exit"));
    }

    #[test]
    fn clean_records_omit_the_error_key_entirely() {
        let record = CheckRecord::from_measurements("g", "p", 3, vec![]);
        let json = serde_json::to_string(&record).unwrap();
        assert!(!json.contains("\"error\""));
    }

    #[test]
    fn csv_has_one_row_per_measurement_plus_the_summary() {
        let report = sample_report(true);
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "section,check,measurement,value,threshold,comparison,pass"
        );
        assert!(lines[1].starts_with("gate,,max_wind_strength,"));
        assert!(lines[2].starts_with("check,flag_equality,max_flag_difference,"));
        assert!(lines[3].starts_with("summary,,overall_pass,"));
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn summary_marks_failing_measurements() {
        let report = sample_report(false);
        assert!(!report.overall_pass);
        let text = report.summary();
        assert!(text.contains("FAIL"));
        assert!(text.ends_with("overall: FAIL\n"));
    }

    #[test]
    fn json_reports_parse_back_with_the_same_verdict() {
        let report = sample_report(true);
        let value: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(value["overall_pass"], serde_json::Value::from(true));
        assert_eq!(value["scenario"], serde_json::Value::from("sample"));
    }
}
