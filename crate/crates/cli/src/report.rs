//! Report documents: a deterministic body plus a metadata block.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">")]
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, threshold: f64) -> Self {
        let pass = match relation {
            Relation::AtMost => value <= threshold,
            Relation::Below => value < threshold,
            Relation::Above => value > threshold,
        };
        Self {
            name: name.into(),
            value,
            relation,
            threshold,
            pass,
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Relation::AtMost, threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub label: String,
    pub outcomes: Vec<f64>,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Body {
    pub name: String,
    pub kind: String,
    pub seed: u64,
    pub repetitions: usize,
    pub inputs: Value,
    pub distribution: Distribution,
    pub results: Map<String, Value>,
    pub checks: Vec<Check>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub generated_unix: u64,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub body: Body,
    pub metadata: Metadata,
}

impl Body {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report body serializes")
    }
}

impl Report {
    pub fn new(body: Body) -> Self {
        let generated_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            body,
            metadata: Metadata {
                generated_unix,
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Tab-separated `outcome, probability, cumulative` rows with 17 significant digits.
pub fn emit_distribution_table(report: &Report) -> String {
    distribution_table(&report.body.distribution)
}

pub fn distribution_table(d: &Distribution) -> String {
    let mut out = String::new();
    let mut cumulative = 0.0;
    for (x, p) in d.outcomes.iter().zip(&d.probabilities) {
        cumulative += p;
        let _ = writeln!(out, "{x:.16e}\t{p:.16e}\t{cumulative:.16e}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(outcomes: Vec<f64>, probabilities: Vec<f64>) -> String {
        distribution_table(&Distribution {
            label: "t".into(),
            outcomes,
            probabilities,
        })
    }

    #[test]
    fn uniform_rows() {
        let t = table(vec![0.0, 1.0, 2.0, 3.0], vec![0.25; 4]);
        let rows: Vec<&str> = t.lines().collect();
        assert_eq!(rows.len(), 4);
        for row in &rows {
            assert_eq!(row.split('\t').nth(1), Some("2.5000000000000000e-1"));
        }
        assert_eq!(rows[3].split('\t').nth(2), Some("1.0000000000000000e0"));
    }

    #[test]
    fn point_mass() {
        let t = table(vec![-1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]);
        let probs: Vec<f64> = t
            .lines()
            .map(|r| r.split('\t').nth(1).unwrap().parse().unwrap())
            .collect();
        assert_eq!(probs, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn rows_sum_to_one() {
        let p = [0.1, 0.2, 0.3, 0.15, 0.25];
        let t = table((0..5).map(f64::from).collect(), p.to_vec());
        let sum: f64 = t
            .lines()
            .map(|r| r.split('\t').nth(1).unwrap().parse::<f64>().unwrap())
            .sum();
        assert!((sum - 1.0).abs() <= 1e-12);
        let digits = t.lines().next().unwrap().split('\t').nth(1).unwrap();
        let mantissa = digits.split('e').next().unwrap().replace(['.', '-'], "");
        assert_eq!(mantissa.len(), 17);
    }

    #[test]
    fn check_relations() {
        assert!(Check::at_most("a", 1e-11, 1e-10).pass);
        assert!(!Check::new("b", 0.005, Relation::Above, 0.01).pass);
        assert!(Check::new("c", 0.5, Relation::Below, 0.99).pass);
        assert!(!Check::at_most("nan", f64::NAN, 1.0).pass);
    }
}
