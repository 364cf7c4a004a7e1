//! Deterministic CSV and JSON emission.
//!
//! Every file embeds a schema version and the fully resolved configuration.
//! Nothing time- or machine-dependent is written, so repeated invocations
//! with the same config and seed produce byte-identical files regardless of
//! worker count.

use crate::config::ResolvedConfig;
use anyhow::{anyhow, Context, Result};
use condensate::report::ValidationReport;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

pub const CSV_SCHEMA: &str = "condensate.csv/1";
pub const JSON_SCHEMA: &str = "condensate.json/1";

/// Comment block at the top of every CSV file, followed by the one-line
/// column header supplied by the caller.
pub fn csv_preamble(command: &str, config: &ResolvedConfig) -> String {
    let mut out = String::new();
    writeln!(out, "# schema: {CSV_SCHEMA}").unwrap();
    writeln!(out, "# command: {command}").unwrap();
    writeln!(
        out,
        "# config: {}",
        serde_json::to_string(config).expect("config serializes")
    )
    .unwrap();
    out
}

/// Scalar summary written next to each experiment's CSV.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub schema: &'static str,
    pub command: String,
    pub config: ResolvedConfig,
    pub seed: u64,
    pub engine: String,
    /// Mean conditional visibility after the final detection.
    pub final_visibility: Option<f64>,
    /// Mean of the per-run histogram-fit contrasts.
    pub mean_fitted_visibility: Option<f64>,
    /// Histogram-fit peak phase (single runs).
    pub fitted_phase: Option<f64>,
    pub variance_fit: Option<VarianceFit>,
    pub slope_fits: Option<Vec<SlopeFit>>,
    pub oracle_report: Option<ValidationReport>,
}

impl Summary {
    pub fn new(command: &str, config: ResolvedConfig) -> Summary {
        Summary {
            schema: JSON_SCHEMA,
            command: command.to_string(),
            seed: config.seed,
            engine: config.engine.clone(),
            config,
            final_visibility: None,
            mean_fitted_visibility: None,
            fitted_phase: None,
            variance_fit: None,
            slope_fits: None,
            oracle_report: None,
        }
    }
}

/// Coefficient of the fitted `c/m` variance law.
#[derive(Debug, Serialize)]
pub struct VarianceFit {
    pub coefficient: f64,
    pub fit_from: usize,
    /// Predicted growth factor `1 - sqrt(1 - λ²)` of the inverse variance.
    pub slope_factor: f64,
}

/// One inverse-spread slope next to its predicted value.
#[derive(Debug, Serialize)]
pub struct SlopeFit {
    pub ratio: f64,
    pub slope: f64,
    pub predicted: f64,
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary).expect("summary serializes");
    text.push('\n');
    write_text(path, &text)
}

/// Verifies that a previously emitted file carries a known schema version.
pub fn check_schema(path: &Path) -> Result<()> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let first = text.lines().next().unwrap_or_default().trim();
    if first.starts_with('{') {
        let value: serde_json::Value = serde_json::from_str(&text)
            .with_context(|| format!("{} is not valid JSON", path.display()))?;
        match value.get("schema").and_then(|s| s.as_str()) {
            Some(JSON_SCHEMA) => Ok(()),
            Some(other) => Err(anyhow!(
                "{}: unknown schema version '{other}'",
                path.display()
            )),
            None => Err(anyhow!("{}: missing schema field", path.display())),
        }
    } else if let Some(schema) = first.strip_prefix("# schema:") {
        if schema.trim() == CSV_SCHEMA {
            Ok(())
        } else {
            Err(anyhow!(
                "{}: unknown schema version '{}'",
                path.display(),
                schema.trim()
            ))
        }
    } else {
        Err(anyhow!(
            "{}: no schema header found (not produced by this tool?)",
            path.display()
        ))
    }
}
