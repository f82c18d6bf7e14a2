use std::fmt::Write as _;

use serde::Serialize;

/// Reports with fewer replications than this are flagged as low precision.
pub const LOW_PRECISION_REPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub name: String,
    /// Transformation source text; empty for the response-only baseline.
    pub expr: String,
    pub covered: usize,
    pub coverage: f64,
    pub coverage_se: f64,
    pub mean_length: f64,
    pub mean_length_se: f64,
    pub length_ratio: f64,
    pub length_ratio_se: f64,
    pub fallback_count: usize,
    pub degenerate_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub n: usize,
    pub reps: usize,
    pub alpha: f64,
    pub master_seed: u64,
    pub oracle_length: f64,
    /// Baseline first, then the configured transformations in order.
    pub methods: Vec<MethodSummary>,
}

impl ExperimentReport {
    pub fn low_precision(&self) -> bool {
        self.reps < LOW_PRECISION_REPS
    }

    pub fn method(&self, name: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.name == name)
    }

    /// Aligned text table: coverage and mean length relative to the oracle.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let title = if self.name.is_empty() { "experiment" } else { &self.name };
        let _ = writeln!(
            out,
            "{title}: n = {}, N = {}, alpha = {}, seed = {}",
            self.n, self.reps, self.alpha, self.master_seed
        );
        let _ = writeln!(out, "oracle upper bound: {:.4}", self.oracle_length);
        if self.low_precision() {
            let _ = writeln!(
                out,
                "warning: low precision, only {} replication(s) (< {LOW_PRECISION_REPS})",
                self.reps
            );
        }
        let label = |m: &MethodSummary| {
            if m.expr.is_empty() {
                m.name.clone()
            } else {
                format!("{}: {}", m.name, m.expr)
            }
        };
        let width = self.methods.iter().map(|m| label(m).len()).max().unwrap_or(6).max(6);
        let _ = writeln!(
            out,
            "{:<width$}  {:>8}  {:>7}  {:>8}  {:>7}  {:>11}  {:>8}",
            "method", "coverage", "se", "ratio", "se", "mean length", "fallback"
        );
        let _ = writeln!(out, "{}", "-".repeat(width + 63));
        for m in &self.methods {
            let _ = writeln!(
                out,
                "{:<width$}  {:>7.1}%  {:>6.2}%  {:>8.2}  {:>7.3}  {:>11.4}  {:>8}",
                label(m),
                100.0 * m.coverage,
                100.0 * m.coverage_se,
                m.length_ratio,
                m.length_ratio_se,
                m.mean_length,
                m.fallback_count
            );
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "method",
            "expr",
            "n",
            "reps",
            "alpha",
            "coverage",
            "coverage_se",
            "mean_length",
            "mean_length_se",
            "length_ratio",
            "length_ratio_se",
            "oracle_length",
            "fallback_count",
            "degenerate_count",
        ])
        .expect("in-memory write");
        for m in &self.methods {
            w.write_record([
                m.name.clone(),
                m.expr.clone(),
                self.n.to_string(),
                self.reps.to_string(),
                self.alpha.to_string(),
                m.coverage.to_string(),
                m.coverage_se.to_string(),
                m.mean_length.to_string(),
                m.mean_length_se.to_string(),
                m.length_ratio.to_string(),
                m.length_ratio_se.to_string(),
                self.oracle_length.to_string(),
                m.fallback_count.to_string(),
                m.degenerate_count.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Text table and CSV for a report.
pub fn report_table(report: &ExperimentReport) -> (String, String) {
    (report.to_table(), report.to_csv())
}
