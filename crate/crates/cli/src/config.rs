//! Flat `section.key = value` run configuration.
//!
//! The file is TOML. Nested tables are flattened to dotted keys, so
//! `[grid] q = 10` and `"grid.q" = 10` are equivalent. Unknown keys are
//! rejected. Precedence, lowest first: defaults, file, `RIDESHARE_SEED`,
//! `--set key=value`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rideshare_core::waiting::{DEFAULT_DELTA_U_FRACTION, DEFAULT_SAMPLES};
use rideshare_core::{Bbox, CdfMode, WaitMode};
use serde::Serialize;
use toml::Value;

pub const SEED_ENV: &str = "RIDESHARE_SEED";

const KEYS: &[&str] = &[
    "grid.q",
    "grid.weight",
    "grid.edge_weights",
    "bbox.lon_min",
    "bbox.lon_max",
    "bbox.lat_min",
    "bbox.lat_max",
    "kde.bandwidth",
    "arrivals.lambda",
    "arrivals.seed",
    "cdf.mode",
    "waiting.delta_u_fraction",
    "waiting.mode",
    "waiting.samples",
    "waiting.seed",
    "passengers.n",
    "passengers.epsilon",
    "output.dir",
    "input.records",
    "input.limit",
    "input.distribution",
    "metrics.bin_width",
    "baseline.taus",
    "sweep.epsilons",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub grid_q: usize,
    pub grid_weight: f64,
    pub grid_edge_weights: Option<PathBuf>,
    pub bbox: Bbox,
    pub kde_bandwidth: Option<f64>,
    pub lambda: f64,
    pub seed: u64,
    pub cdf_mode: CdfMode,
    pub delta_u_fraction: f64,
    pub waiting_mode: WaitMode,
    pub waiting_samples: usize,
    pub waiting_seed: u64,
    pub passengers_n: usize,
    pub passengers_epsilon: f64,
    pub output_dir: PathBuf,
    pub records: Option<PathBuf>,
    pub records_limit: Option<usize>,
    pub distribution: Option<PathBuf>,
    pub bin_width: f64,
    pub baseline_taus: Vec<f64>,
    pub sweep_epsilons: Vec<f64>,
}

type Raw = BTreeMap<String, Value>;

fn flatten(prefix: &str, table: &toml::Table, out: &mut Raw) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

/// Parses a `--set` right-hand side as a TOML value, falling back to a bare string.
fn parse_value(text: &str) -> Value {
    format!("v = {text}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(text.to_string()))
}

fn number(raw: &Raw, key: &str, default: f64) -> Result<f64> {
    match raw.get(key) {
        None => Ok(default),
        Some(Value::Float(x)) => Ok(*x),
        Some(Value::Integer(i)) => Ok(*i as f64),
        Some(other) => bail!("{key}: expected a number, got {other}"),
    }
}

fn opt_number(raw: &Raw, key: &str) -> Result<Option<f64>> {
    raw.get(key).map(|_| number(raw, key, 0.0)).transpose()
}

fn integer(raw: &Raw, key: &str, default: u64) -> Result<u64> {
    match raw.get(key) {
        None => Ok(default),
        Some(Value::Integer(i)) if *i >= 0 => Ok(*i as u64),
        Some(other) => bail!("{key}: expected a non-negative integer, got {other}"),
    }
}

fn text(raw: &Raw, key: &str) -> Result<Option<String>> {
    match raw.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(other) => bail!("{key}: expected a string, got {other}"),
    }
}

fn list(raw: &Raw, key: &str, default: Vec<f64>) -> Result<Vec<f64>> {
    match raw.get(key) {
        None => Ok(default),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                Value::Float(x) => Ok(*x),
                Value::Integer(i) => Ok(*i as f64),
                other => Err(anyhow!("{key}: expected numbers, got {other}")),
            })
            .collect(),
        Some(other) => bail!("{key}: expected an array of numbers, got {other}"),
    }
}

impl RunConfig {
    /// Loads `path` (if any), then applies the seed variable and `overrides`.
    pub fn load(path: Option<&Path>, overrides: &[String], env_seed: Option<String>) -> Result<Self> {
        let mut raw = Raw::new();
        if let Some(path) = path {
            let body = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            let table: toml::Table = body.parse().with_context(|| format!("parsing config {}", path.display()))?;
            flatten("", &table, &mut raw);
        }
        if let Some(seed) = env_seed {
            let seed: u64 = seed
                .trim()
                .parse()
                .with_context(|| format!("{SEED_ENV} must be a non-negative integer, got `{seed}`"))?;
            raw.insert("arrivals.seed".into(), Value::Integer(seed as i64));
        }
        for item in overrides {
            let (k, v) = item.split_once('=').ok_or_else(|| anyhow!("--set expects key=value, got `{item}`"))?;
            raw.insert(k.trim().to_string(), parse_value(v.trim()));
        }
        let unknown: Vec<&String> = raw.keys().filter(|k| !KEYS.contains(&k.as_str())).collect();
        if !unknown.is_empty() {
            bail!("unknown config keys: {unknown:?}");
        }
        let config = Self::from_raw(&raw)?;
        config.validate()?;
        Ok(config)
    }

    fn from_raw(raw: &Raw) -> Result<Self> {
        let grid_q = integer(raw, "grid.q", 15)? as usize;
        let nyc = Bbox::NYC;
        let cdf_mode = match text(raw, "cdf.mode")? {
            Some(s) => s.parse().map_err(|e: String| anyhow!("cdf.mode: {e}"))?,
            None => CdfMode::Paper,
        };
        let waiting_mode = match text(raw, "waiting.mode")? {
            Some(s) => s.parse().map_err(|e: String| anyhow!("waiting.mode: {e}"))?,
            None => WaitMode::for_grid(grid_q),
        };
        Ok(Self {
            grid_q,
            grid_weight: number(raw, "grid.weight", 1.0)?,
            grid_edge_weights: text(raw, "grid.edge_weights")?.map(PathBuf::from),
            bbox: Bbox {
                lon_min: number(raw, "bbox.lon_min", nyc.lon_min)?,
                lon_max: number(raw, "bbox.lon_max", nyc.lon_max)?,
                lat_min: number(raw, "bbox.lat_min", nyc.lat_min)?,
                lat_max: number(raw, "bbox.lat_max", nyc.lat_max)?,
            },
            kde_bandwidth: opt_number(raw, "kde.bandwidth")?,
            lambda: number(raw, "arrivals.lambda", 2.0)?,
            seed: integer(raw, "arrivals.seed", 0)?,
            cdf_mode,
            delta_u_fraction: number(raw, "waiting.delta_u_fraction", DEFAULT_DELTA_U_FRACTION)?,
            waiting_mode,
            waiting_samples: integer(raw, "waiting.samples", DEFAULT_SAMPLES as u64)? as usize,
            waiting_seed: integer(raw, "waiting.seed", 0)?,
            passengers_n: integer(raw, "passengers.n", 1000)? as usize,
            passengers_epsilon: number(raw, "passengers.epsilon", 0.6)?,
            output_dir: PathBuf::from(text(raw, "output.dir")?.unwrap_or_else(|| "out".into())),
            records: text(raw, "input.records")?.map(PathBuf::from),
            records_limit: raw
                .contains_key("input.limit")
                .then(|| integer(raw, "input.limit", 0).map(|n| n as usize))
                .transpose()?,
            distribution: text(raw, "input.distribution")?.map(PathBuf::from),
            bin_width: number(raw, "metrics.bin_width", 0.5)?,
            baseline_taus: list(raw, "baseline.taus", vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0])?,
            sweep_epsilons: list(raw, "sweep.epsilons", (0..=10).map(|k| k as f64 / 10.0).collect())?,
        })
    }

    /// Every failed check, not only the first.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.grid_q < 2 {
            problems.push(format!("grid.q must be at least 2, got {}", self.grid_q));
        }
        if !(self.grid_weight.is_finite() && self.grid_weight > 0.0) {
            problems.push(format!("grid.weight must be positive, got {}", self.grid_weight));
        }
        if let Err(e) = self.bbox.validate() {
            problems.push(format!("bbox: {e}"));
        }
        if let Some(h) = self.kde_bandwidth {
            if !(h.is_finite() && h > 0.0) {
                problems.push(format!("kde.bandwidth must be positive, got {h}"));
            }
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            problems.push(format!("arrivals.lambda must be positive, got {}", self.lambda));
        }
        if !(self.delta_u_fraction > 0.0 && self.delta_u_fraction <= 1.0) {
            problems.push(format!("waiting.delta_u_fraction must lie in (0, 1], got {}", self.delta_u_fraction));
        }
        if self.records_limit == Some(0) {
            problems.push("input.limit must be positive when given".into());
        }
        if self.waiting_samples == 0 {
            problems.push("waiting.samples must be positive".into());
        }
        if self.passengers_n == 0 {
            problems.push("passengers.n must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.passengers_epsilon) {
            problems.push(format!("passengers.epsilon must lie in [0, 1], got {}", self.passengers_epsilon));
        }
        if !(self.bin_width.is_finite() && self.bin_width > 0.0) {
            problems.push(format!("metrics.bin_width must be positive, got {}", self.bin_width));
        }
        if self.baseline_taus.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            problems.push("baseline.taus must be non-negative".into());
        }
        if self.sweep_epsilons.iter().any(|e| !(0.0..=1.0).contains(e)) {
            problems.push("sweep.epsilons must lie in [0, 1]".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            bail!("invalid configuration:\n  {}", problems.join("\n  "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(body: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), body).unwrap();
        f
    }

    #[test]
    fn defaults_without_file() {
        let c = RunConfig::load(None, &[], None).unwrap();
        assert_eq!(c.grid_q, 15);
        assert_eq!(c.passengers_n, 1000);
        assert_eq!(c.waiting_mode, WaitMode::Exact);
        assert_eq!(c.baseline_taus.len(), 8);
        assert_eq!(c.sweep_epsilons.len(), 11);
    }

    #[test]
    fn tables_and_dotted_keys_agree() {
        let a = write("[grid]\nq = 10\n[passengers]\nepsilon = 0.5\n");
        let b = write("\"grid.q\" = 10\n\"passengers.epsilon\" = 0.5\n");
        let ca = RunConfig::load(Some(a.path()), &[], None).unwrap();
        let cb = RunConfig::load(Some(b.path()), &[], None).unwrap();
        assert_eq!(ca, cb);
        assert_eq!(ca.grid_q, 10);
    }

    #[test]
    fn precedence_file_env_flag() {
        let f = write("[arrivals]\nseed = 1\nlambda = 3\n");
        let c = RunConfig::load(Some(f.path()), &[], None).unwrap();
        assert_eq!((c.seed, c.lambda), (1, 3.0));
        let c = RunConfig::load(Some(f.path()), &[], Some("7".into())).unwrap();
        assert_eq!(c.seed, 7);
        let c = RunConfig::load(Some(f.path()), &["arrivals.seed=9".into()], Some("7".into())).unwrap();
        assert_eq!(c.seed, 9);
        let c = RunConfig::load(None, &["output.dir=runs/a".into(), "cdf.mode=standard".into()], None).unwrap();
        assert_eq!(c.output_dir, PathBuf::from("runs/a"));
        assert_eq!(c.cdf_mode, CdfMode::Standard);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        let f = write("[grid]\nqq = 10\n");
        let err = RunConfig::load(Some(f.path()), &[], None).unwrap_err().to_string();
        assert!(err.contains("grid.qq"), "{err}");
        let err =
            RunConfig::load(None, &["passengers.epsilon=1.5".into(), "grid.q=1".into()], None).unwrap_err().to_string();
        assert!(err.contains("passengers.epsilon") && err.contains("grid.q"), "{err}");
        assert!(RunConfig::load(None, &["grid.q=\"ten\"".into()], None).is_err());
        assert!(RunConfig::load(None, &[], Some("abc".into())).is_err());
        assert!(RunConfig::load(None, &["noequals".into()], None).is_err());
        assert!(RunConfig::load(None, &["waiting.mode=fuzzy".into()], None).is_err());
    }

    #[test]
    fn lists_parse() {
        let c = RunConfig::load(None, &["sweep.epsilons=[0, 0.5, 1]".into()], None).unwrap();
        assert_eq!(c.sweep_epsilons, vec![0.0, 0.5, 1.0]);
    }
}
