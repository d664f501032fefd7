//! Experiment reports: log-log fits, verdicts and CSV/JSON emission.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Non-gating result that met its loose target.
    AdvisoryPass,
    /// Non-gating result that missed its loose target.
    AdvisoryFail,
}

impl Verdict {
    pub fn gating(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn advisory(pass: bool) -> Self {
        if pass {
            Verdict::AdvisoryPass
        } else {
            Verdict::AdvisoryFail
        }
    }

    /// Whether this verdict should fail a run.
    pub fn is_failure(self) -> bool {
        self == Verdict::Fail
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::AdvisoryPass => "ADVISORY-PASS",
            Verdict::AdvisoryFail => "ADVISORY-FAIL",
        }
    }
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in `ln y`.
    pub residual: f64,
}

pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Option<LogLogFit> {
    if xs.len() != ys.len() || xs.len() < 2 || xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual =
        (lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    Some(LogLogFit { slope, intercept, residual })
}

/// A measured sweep with its fit and verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub experiment: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub x_label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub fit: Option<LogLogFit>,
    /// Exponent the measurement is compared against, if any.
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
    pub verdict: Verdict,
    pub seed: u64,
    pub diagnostics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl ScanReport {
    pub fn new(experiment: impl Into<String>, x_label: impl Into<String>, seed: u64) -> Self {
        ScanReport {
            experiment: experiment.into(),
            parameters: BTreeMap::new(),
            x_label: x_label.into(),
            xs: Vec::new(),
            ys: Vec::new(),
            fit: None,
            target: None,
            tolerance: None,
            verdict: Verdict::Pass,
            seed,
            diagnostics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.parameters.insert(key.to_string(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
        self
    }

    pub fn push(&mut self, x: f64, y: f64) {
        self.xs.push(x);
        self.ys.push(y);
    }

    pub fn refit(&mut self) -> Option<LogLogFit> {
        self.fit = fit_loglog(&self.xs, &self.ys);
        self.fit
    }

    pub fn diag(&mut self, key: &str, v: f64) {
        self.diagnostics.insert(key.to_string(), v);
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        let mut s = format!("[{}] {}", self.verdict.label(), self.experiment);
        if let Some(f) = self.fit {
            s.push_str(&format!(" slope={:.4}", f.slope));
        }
        if let Some(t) = self.target {
            s.push_str(&format!(" target={t}"));
        }
        for (k, v) in &self.diagnostics {
            s.push_str(&format!(" {k}={v:.6e}"));
        }
        s
    }
}

/// Real number formatted with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Everything written to disk by one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEnvelope<C> {
    pub version: String,
    pub normalization: String,
    pub config: C,
    pub reports: Vec<ScanReport>,
}

impl<C: Serialize> ReportEnvelope<C> {
    pub fn new(config: C, reports: Vec<ScanReport>) -> Self {
        ReportEnvelope {
            version: crate::VERSION.to_string(),
            normalization: crate::NORMALIZATION.to_string(),
            config,
            reports,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// RFC-4180 CSV: one row per measured point, with metadata columns.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "experiment", "x_label", "x", "y", "slope", "intercept", "target", "verdict", "seed", "version",
            "normalization",
        ])?;
        for r in &self.reports {
            let slope = r.fit.map(|f| fmt_real(f.slope)).unwrap_or_default();
            let icpt = r.fit.map(|f| fmt_real(f.intercept)).unwrap_or_default();
            let target = r.target.map(fmt_real).unwrap_or_default();
            let rows: Vec<(String, String)> = if r.xs.is_empty() {
                r.diagnostics.iter().map(|(k, v)| (k.clone(), fmt_real(*v))).collect()
            } else {
                r.xs.iter().zip(&r.ys).map(|(x, y)| (fmt_real(*x), fmt_real(*y))).collect()
            };
            for (x, y) in rows {
                wr.write_record([
                    r.experiment.as_str(),
                    r.x_label.as_str(),
                    &x,
                    &y,
                    &slope,
                    &icpt,
                    &target,
                    r.verdict.label(),
                    &r.seed.to_string(),
                    &self.version,
                    &self.normalization,
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}
