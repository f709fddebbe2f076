//! Verification reports and their JSON / CSV serializations.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REPORT_SCHEMA: &str = "skms-report/1";
pub const CSV_HEADER: &str =
    "identity_name,paper_anchor,samples,max_residual,tolerance,passed,seed,model_digest,wall_ms";

/// Outcome of one identity check.
///
/// `passed` is `tolerance > 0 && max_residual <= tolerance`, so a zero
/// tolerance always fails and reports the measured residual. Checks that
/// could not be evaluated carry `f64::MAX` as residual and the reason in
/// `detail`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub identity_name: String,
    pub paper_anchor: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub seed: u64,
    pub model_digest: String,
    pub wall_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl VerificationReport {
    pub fn new(
        identity_name: &str,
        paper_anchor: &str,
        samples: usize,
        max_residual: f64,
        tolerance: f64,
        seed: u64,
    ) -> Self {
        let max_residual = if max_residual.is_nan() {
            f64::MAX
        } else {
            max_residual.min(f64::MAX)
        };
        Self {
            identity_name: identity_name.to_string(),
            paper_anchor: paper_anchor.to_string(),
            samples,
            max_residual,
            tolerance,
            passed: tolerance > 0.0 && max_residual <= tolerance,
            seed,
            model_digest: String::new(),
            wall_ms: 0,
            detail: None,
        }
    }

    /// A check that could not run, e.g. because the chain budget was hit.
    pub fn failed_to_run(
        identity_name: &str,
        paper_anchor: &str,
        tolerance: f64,
        seed: u64,
        err: &Error,
    ) -> Self {
        let mut r = Self::new(identity_name, paper_anchor, 0, f64::MAX, tolerance, seed);
        r.passed = false;
        r.detail = Some(err.to_string());
        r
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    /// Overrides the pass flag with an additional condition (e.g. a trend
    /// requirement) that is not expressed by the residual alone.
    pub fn require(mut self, condition: bool) -> Self {
        self.passed &= condition;
        self
    }
}

/// Running maximum of residuals, treating NaN as a failure.
#[derive(Debug, Clone, Copy, Default)]
pub struct MaxResidual {
    value: f64,
    count: usize,
}

impl MaxResidual {
    pub fn push(&mut self, r: f64) {
        self.count += 1;
        if r.is_nan() {
            self.value = f64::MAX;
        } else if r > self.value {
            self.value = r;
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Serialize, Deserialize)]
struct ReportFile {
    schema: String,
    reports: Vec<VerificationReport>,
}

pub fn reports_to_json(reports: &[VerificationReport]) -> Result<String> {
    let file = ReportFile {
        schema: REPORT_SCHEMA.to_string(),
        reports: reports.to_vec(),
    };
    let mut s = serde_json::to_string_pretty(&file)?;
    s.push('\n');
    Ok(s)
}

pub fn reports_from_json(text: &str) -> Result<Vec<VerificationReport>> {
    let file: ReportFile = serde_json::from_str(text)?;
    if file.schema != REPORT_SCHEMA {
        return Err(Error::Json(format!("unsupported report schema {:?}", file.schema)));
    }
    Ok(file.reports)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn reports_to_csv(reports: &[VerificationReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{:e},{:e},{},{},{},{}\n",
            csv_field(&r.identity_name),
            csv_field(&r.paper_anchor),
            r.samples,
            r.max_residual,
            r.tolerance,
            r.passed,
            r.seed,
            csv_field(&r.model_digest),
            r.wall_ms
        ));
    }
    out
}

pub fn render(reports: &[VerificationReport], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => reports_to_json(reports),
        ReportFormat::Csv => Ok(reports_to_csv(reports)),
    }
}

pub fn emit_report(reports: &[VerificationReport], format: ReportFormat, path: &Path) -> Result<()> {
    let text = render(reports, format)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
