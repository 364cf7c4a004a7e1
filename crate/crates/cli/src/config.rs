//! Flat key-value configuration with command-line overrides.
//!
//! A config file holds one `key = value` pair per line (`#` starts a
//! comment line); `--set key=value` flags override file entries. Unknown
//! keys are rejected, and kind-specific keys (`atoms`, `mean`, `variance`)
//! are rejected when set explicitly for the wrong kind. Defaults mirror the
//! reference experiments: 500 detections into 25 bins, 1000 runs, equal
//! Poissonian rates.

use anyhow::{anyhow, bail, Context, Result};
use condensate::model::{CondensateSpec, ExperimentConfig};
use condensate::montecarlo::Engine;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

const KNOWN_KEYS: &[&str] = &[
    "condensate1.kind",
    "condensate1.mean",
    "condensate1.atoms",
    "condensate1.variance",
    "condensate2.kind",
    "condensate2.mean",
    "condensate2.atoms",
    "condensate2.variance",
    "gamma_ratio",
    "detections",
    "grid_points",
    "histogram_bins",
    "runs",
    "seed",
    "engine",
];

fn defaults() -> BTreeMap<String, String> {
    [
        ("condensate1.kind", "poisson"),
        ("condensate1.mean", "100"),
        ("condensate2.kind", "poisson"),
        ("condensate2.mean", "100"),
        ("gamma_ratio", "1"),
        ("detections", "500"),
        ("grid_points", "1024"),
        ("histogram_bins", "25"),
        ("runs", "1000"),
        ("seed", "1"),
        ("engine", "pi-exact"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

/// Raw settings: file entries and overrides on top of built-in defaults.
#[derive(Debug, Clone)]
pub struct Settings {
    defaults: BTreeMap<String, String>,
    explicit: BTreeMap<String, String>,
}

impl Settings {
    pub fn from_sources(config_path: Option<&Path>, overrides: &[String]) -> Result<Settings> {
        let mut explicit = BTreeMap::new();
        if let Some(path) = config_path {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config file {}", path.display()))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    anyhow!("{}:{}: expected 'key = value'", path.display(), lineno + 1)
                })?;
                insert_known(&mut explicit, key.trim(), value.trim())?;
            }
        }
        for item in overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got '{item}'"))?;
            insert_known(&mut explicit, key.trim(), value.trim())?;
        }
        Ok(Settings {
            defaults: defaults(),
            explicit,
        })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.explicit
            .get(key)
            .or_else(|| self.defaults.get(key))
            .map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self
            .get(key)
            .ok_or_else(|| anyhow!("missing configuration key '{key}'"))?;
        raw.parse()
            .map_err(|e| anyhow!("invalid value '{raw}' for '{key}': {e}"))
    }

    fn condensate(&self, prefix: &str) -> Result<CondensateSpec> {
        let kind_key = format!("{prefix}.kind");
        let kind = self
            .get(&kind_key)
            .ok_or_else(|| anyhow!("missing configuration key '{kind_key}'"))?
            .to_string();
        // Kind-specific keys are only validated when set explicitly; the
        // built-in defaults describe the default (Poissonian) kind.
        let forbid = |key: &str| -> Result<()> {
            if self.explicit.contains_key(&format!("{prefix}.{key}")) {
                bail!("'{prefix}.{key}' does not apply to kind '{kind}'");
            }
            Ok(())
        };
        let spec = match kind.as_str() {
            "fock" => {
                forbid("mean")?;
                forbid("variance")?;
                CondensateSpec::fock(self.parse(&format!("{prefix}.atoms"))?)
            }
            "poisson" => {
                forbid("atoms")?;
                forbid("variance")?;
                CondensateSpec::poisson(self.parse(&format!("{prefix}.mean"))?)?
            }
            "thermal" => {
                forbid("atoms")?;
                forbid("variance")?;
                CondensateSpec::thermal(self.parse(&format!("{prefix}.mean"))?)?
            }
            "gaussian" => {
                forbid("atoms")?;
                CondensateSpec::gaussian(
                    self.parse(&format!("{prefix}.mean"))?,
                    self.parse(&format!("{prefix}.variance"))?,
                )?
            }
            other => bail!("unknown condensate kind '{other}' for '{kind_key}'"),
        };
        Ok(spec)
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let config = ExperimentConfig {
            condensate_1: self.condensate("condensate1")?,
            condensate_2: self.condensate("condensate2")?,
            gamma_ratio: self.parse("gamma_ratio")?,
            detections: self.parse("detections")?,
            grid_points: self.parse("grid_points")?,
            histogram_bins: self.parse("histogram_bins")?,
            runs: self.parse("runs")?,
            seed: self.parse("seed")?,
        };
        config.validate()?;
        let engine: Engine = self
            .parse::<String>("engine")?
            .parse()
            .map_err(|e: String| anyhow!(e))?;
        Ok(Resolved { config, engine })
    }
}

fn insert_known(map: &mut BTreeMap<String, String>, key: &str, value: &str) -> Result<()> {
    if !KNOWN_KEYS.contains(&key) {
        bail!(
            "unknown configuration key '{key}' (known keys: {})",
            KNOWN_KEYS.join(", ")
        );
    }
    map.insert(key.to_string(), value.to_string());
    Ok(())
}

/// Fully typed configuration plus engine selection.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub engine: Engine,
}

/// The configuration block embedded in every output file.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub condensate1: CondensateSpec,
    pub condensate2: CondensateSpec,
    pub gamma_ratio: f64,
    pub detections: usize,
    pub grid_points: usize,
    pub histogram_bins: usize,
    pub runs: usize,
    pub seed: u64,
    pub engine: String,
}

impl Resolved {
    pub fn echo(&self) -> ResolvedConfig {
        ResolvedConfig {
            condensate1: self.config.condensate_1,
            condensate2: self.config.condensate_2,
            gamma_ratio: self.config.gamma_ratio,
            detections: self.config.detections,
            grid_points: self.config.grid_points,
            histogram_bins: self.config.histogram_bins,
            runs: self.config.runs,
            seed: self.config.seed,
            engine: self.engine.to_string(),
        }
    }
}
