//! Experiment reports: machine JSON, aligned text, long-format CSV.

use std::fmt::Write as _;

use serde::Serialize;

use super::stats::LineFit;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Inconclusive,
    Fail,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Inconclusive => "INCONCLUSIVE",
            Status::Fail => "FAIL",
        }
    }
}

/// One estimated quantity at one sweep point.
#[derive(Clone, Debug, Serialize)]
pub struct Row {
    /// n, ε, t or another sweep coordinate.
    pub axis: f64,
    pub statistic: String,
    pub value: f64,
    pub se: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Fit {
    pub statistic: String,
    pub slope: f64,
    pub half_width: f64,
    pub residual: f64,
    /// Set when Monte Carlo noise swamps the signal; the slope is then
    /// reported but carries no weight.
    pub inconclusive: bool,
}

impl Fit {
    pub fn new(statistic: impl Into<String>, fit: &LineFit) -> Self {
        Self {
            statistic: statistic.into(),
            slope: fit.slope,
            half_width: fit.half_width,
            residual: fit.residual,
            inconclusive: false,
        }
    }
}

/// A declared threshold and its outcome. `rule` states the threshold in
/// words; `target`, `tolerance` and `se_multiplier` give its numbers.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub rule: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub se_multiplier: f64,
    pub status: Status,
}

impl Check {
    /// |value − target| ≤ tolerance + k·se.
    pub fn within(name: &str, value: f64, target: f64, tolerance: f64, k: f64, se: f64) -> Self {
        let bound = tolerance + k * se;
        let ok = (value - target).abs() <= bound;
        Self {
            name: name.into(),
            rule: format!("|value - {target}| <= {tolerance:e} + {k} SE (SE = {se:.3e})"),
            value,
            target,
            tolerance,
            se_multiplier: k,
            status: if ok { Status::Pass } else { Status::Fail },
        }
    }

    /// value ≥ bound.
    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            rule: format!("value >= {bound}"),
            value,
            target: bound,
            tolerance: 0.0,
            se_multiplier: 0.0,
            status: if value >= bound { Status::Pass } else { Status::Fail },
        }
    }

    /// value ≤ bound.
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            rule: format!("value <= {bound:.6e}"),
            value,
            target: bound,
            tolerance: 0.0,
            se_multiplier: 0.0,
            status: if value <= bound { Status::Pass } else { Status::Fail },
        }
    }

    pub fn with_status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub parameters: serde_json::Value,
    pub rows: Vec<Row>,
    pub fits: Vec<Fit>,
    pub checks: Vec<Check>,
    /// Notes that are reported but not judged.
    pub notes: Vec<String>,
    /// Omitted from deterministic output.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
}

impl ExperimentReport {
    pub fn new(name: &str, parameters: serde_json::Value) -> Self {
        Self {
            name: name.into(),
            parameters,
            rows: Vec::new(),
            fits: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            wall_seconds: None,
        }
    }

    pub fn row(&mut self, axis: f64, statistic: &str, value: f64, se: f64, count: usize) {
        self.rows.push(Row { axis, statistic: statistic.into(), value, se, count });
    }

    /// Worst status over all checks; a report without checks passes.
    pub fn status(&self) -> Status {
        self.checks.iter().map(|c| c.status).max().unwrap_or(Status::Pass)
    }

    pub fn passed(&self) -> bool {
        self.status() == Status::Pass
    }

    pub fn csv_header() -> [&'static str; 5] {
        ["experiment", "n_or_eps", "statistic", "value", "se"]
    }

    pub fn csv_rows(&self) -> Vec<[String; 5]> {
        self.rows
            .iter()
            .map(|r| [self.name.clone(), r.axis.to_string(), r.statistic.clone(), r.value.to_string(), r.se.to_string()])
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "experiment {}  [{}]", self.name, self.status().label());
        if !self.rows.is_empty() {
            let w = self.rows.iter().map(|r| r.statistic.len()).max().unwrap_or(9).max(9);
            let _ = writeln!(out, "  {:>12}  {:<w$}  {:>14}  {:>11}  {:>8}", "axis", "statistic", "value", "se", "count");
            for r in &self.rows {
                let _ = writeln!(
                    out,
                    "  {:>12}  {:<w$}  {:>14.6e}  {:>11.3e}  {:>8}",
                    r.axis, r.statistic, r.value, r.se, r.count
                );
            }
        }
        for f in &self.fits {
            let flag = if f.inconclusive { "  [inconclusive: noise floor dominates]" } else { "" };
            let _ = writeln!(
                out,
                "  fit {}: slope {:.4} ± {:.4} (rms residual {:.2e}){flag}",
                f.statistic, f.slope, f.half_width, f.residual
            );
        }
        for c in &self.checks {
            let _ = writeln!(out, "  [{}] {}: value {:.6e}; {}", c.status.label(), c.name, c.value, c.rule);
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        if let Some(s) = self.wall_seconds {
            let _ = writeln!(out, "  wall {s:.2}s");
        }
        out
    }
}
