//! Experiment configuration: defaults, TOML file values and command-line
//! flags, applied in that order.

use std::path::Path;

use crate::error::{Error, Result};
use crate::estimate::default_p_max;
use crate::simulate::{char_root_check, ShortMemorySpec};

use super::{Design, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub designs: Vec<Design>,
    pub phi_bars: Vec<f64>,
    pub k0s: Vec<usize>,
    /// Training length `N = n + K`.
    pub sample_size: usize,
    pub warmup: usize,
    pub test_size: usize,
    pub replications: usize,
    pub multipliers: Vec<usize>,
    pub weight_exponent: f64,
    pub base_seed: u64,
    pub parallelism: usize,
    /// Largest AR order considered by AIC; `None` uses `default_p_max(N)`.
    pub p_max: Option<usize>,
    pub frac_d: f64,
    pub frac_truncation: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            designs: vec![Design::ShortMemory, Design::LongMemory],
            phi_bars: vec![0.75, 0.99],
            k0s: vec![100, 1000],
            sample_size: 1000,
            warmup: 1000,
            test_size: 1000,
            replications: 200,
            multipliers: vec![2, 4],
            weight_exponent: 0.501,
            base_seed: 1,
            parallelism: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            p_max: None,
            frac_d: crate::simulate::DEFAULT_FRAC_D,
            frac_truncation: crate::simulate::DEFAULT_FRAC_TRUNCATION,
        }
    }
}

/// Keys accepted in config files; flags use the same names with `-` for `_`.
pub const KEYS: &[&str] = &[
    "design",
    "phi_bar",
    "k0",
    "sample_size",
    "warmup",
    "test_size",
    "replications",
    "multipliers",
    "weight_exponent",
    "seed",
    "parallelism",
    "p_max",
    "frac_d",
    "frac_truncation",
];

/// Raw `key = value` overrides, in application order.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides(pub Vec<(String, String)>);

impl ConfigOverrides {
    pub fn push(&mut self, key: &str, value: impl Into<String>) {
        self.0.push((key.to_string(), value.into()));
    }

    /// Reads a flat TOML table; arrays become comma-separated lists.
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Usage {
            key: "config".into(),
            reason: e.to_string(),
        })?;
        let mut out = Self::default();
        for (key, value) in table {
            let raw = toml_scalar(&key, &value)?;
            out.0.push((key, raw));
        }
        Ok(out)
    }
}

fn toml_scalar(key: &str, value: &toml::Value) -> Result<String> {
    use toml::Value;
    Ok(match value {
        Value::String(s) => s.clone(),
        Value::Integer(i) => i.to_string(),
        Value::Float(f) => f.to_string(),
        Value::Boolean(b) => b.to_string(),
        Value::Array(items) => items
            .iter()
            .map(|v| toml_scalar(key, v))
            .collect::<Result<Vec<_>>>()?
            .join(","),
        other => {
            return Err(Error::Usage {
                key: key.into(),
                reason: format!("unsupported value {other}"),
            })
        }
    })
}

fn usage(key: &str, reason: impl Into<String>) -> Error {
    Error::Usage { key: key.to_string(), reason: reason.into() }
}

fn parse_one<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.trim().parse().map_err(|e: T::Err| usage(key, format!("{raw:?}: {e}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, raw: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let items: Vec<T> = raw
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_one(key, s))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(usage(key, "empty list"));
    }
    Ok(items)
}

impl ExperimentConfig {
    pub fn apply(&mut self, key: &str, raw: &str) -> Result<()> {
        let key = key.replace('-', "_");
        let key = key.as_str();
        match key {
            "design" => {
                self.designs = if raw.trim() == "all" {
                    vec![Design::ShortMemory, Design::LongMemory]
                } else {
                    raw.split(',')
                        .map(|d| Design::parse(d).ok_or_else(|| usage(key, format!("unknown design {d:?}"))))
                        .collect::<Result<_>>()?
                };
            }
            "phi_bar" => self.phi_bars = parse_list(key, raw)?,
            "k0" => self.k0s = parse_list(key, raw)?,
            "sample_size" => self.sample_size = parse_one(key, raw)?,
            "warmup" => self.warmup = parse_one(key, raw)?,
            "test_size" => self.test_size = parse_one(key, raw)?,
            "replications" => self.replications = parse_one(key, raw)?,
            "multipliers" => self.multipliers = parse_list(key, raw)?,
            "weight_exponent" => self.weight_exponent = parse_one(key, raw)?,
            "seed" => self.base_seed = parse_one(key, raw)?,
            "parallelism" => self.parallelism = parse_one(key, raw)?,
            "p_max" => self.p_max = Some(parse_one(key, raw)?),
            "frac_d" => self.frac_d = parse_one(key, raw)?,
            "frac_truncation" => self.frac_truncation = parse_one(key, raw)?,
            _ => return Err(usage(key, format!("unknown key (expected one of {})", KEYS.join(", ")))),
        }
        Ok(())
    }

    /// `base_seed + replication`.
    pub fn seed_for(&self, replication: usize) -> u64 {
        self.base_seed.wrapping_add(replication as u64)
    }

    pub fn effective_p_max(&self) -> usize {
        self.p_max.unwrap_or_else(|| default_p_max(self.sample_size))
    }

    /// Scenarios in table order: design, then `φ̄`, then `K₀`.
    pub fn scenarios(&self) -> Vec<Scenario> {
        let mut out = Vec::new();
        for &design in &self.designs {
            for &phi_bar in &self.phi_bars {
                for &k0 in &self.k0s {
                    out.push(Scenario { design, phi_bar, k0 });
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("sample_size", self.sample_size),
            ("test_size", self.test_size),
            ("replications", self.replications),
            ("parallelism", self.parallelism),
            ("frac_truncation", self.frac_truncation),
        ] {
            if v == 0 {
                return Err(usage(key, "must be positive"));
            }
        }
        if self.designs.is_empty() {
            return Err(usage("design", "no designs selected"));
        }
        if self.multipliers.is_empty() || self.multipliers.contains(&0) {
            return Err(usage("multipliers", "multipliers must be at least 1"));
        }
        if !(self.weight_exponent > 0.5) || !self.weight_exponent.is_finite() {
            return Err(usage("weight_exponent", "must exceed 1/2"));
        }
        if !(self.frac_d.abs() < 0.5) {
            return Err(usage("frac_d", "|d| must be below 1/2"));
        }
        if self.frac_truncation < crate::simulate::default_ma_coeffs().len() - 1 {
            return Err(usage("frac_truncation", "shorter than the MA order"));
        }
        let p_max = self.effective_p_max();
        if p_max == 0 {
            return Err(usage("p_max", "must be positive"));
        }
        let widest = p_max * self.multipliers.iter().max().copied().unwrap_or(1);
        if widest.max(p_max) + 1 >= self.sample_size {
            return Err(usage(
                "multipliers",
                format!("lag budget up to {widest} leaves no rows in a sample of {}", self.sample_size),
            ));
        }
        if self.k0s.is_empty() || self.k0s.contains(&0) {
            return Err(usage("k0", "true orders must be at least 1"));
        }
        if self.phi_bars.is_empty() {
            return Err(usage("phi_bar", "no values given"));
        }
        for &phi_bar in &self.phi_bars {
            for &k0 in &self.k0s {
                let spec = ShortMemorySpec::new(phi_bar, k0, 1.0)
                    .map_err(|e| usage("phi_bar", e.to_string()))?;
                let check = char_root_check(&spec.coefficients());
                if !check.stationary {
                    return Err(usage(
                        "phi_bar",
                        format!(
                            "{phi_bar} with K0 = {k0} puts a root at modulus {:.6} (must exceed 1)",
                            check.min_modulus
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    /// `key = value` lines suitable for a config file.
    pub fn echo(&self) -> String {
        let list = |v: Vec<String>| v.join(",");
        format!(
            "design = \"{}\"\nphi_bar = \"{}\"\nk0 = \"{}\"\nsample_size = {}\nwarmup = {}\n\
             test_size = {}\nreplications = {}\nmultipliers = \"{}\"\nweight_exponent = {}\n\
             seed = {}\nparallelism = {}\np_max = {}\nfrac_d = {}\nfrac_truncation = {}\n",
            list(self.designs.iter().map(|d| d.name().to_string()).collect()),
            list(self.phi_bars.iter().map(|p| p.to_string()).collect()),
            list(self.k0s.iter().map(|k| k.to_string()).collect()),
            self.sample_size,
            self.warmup,
            self.test_size,
            self.replications,
            list(self.multipliers.iter().map(|m| m.to_string()).collect()),
            self.weight_exponent,
            self.base_seed,
            self.parallelism,
            self.effective_p_max(),
            self.frac_d,
            self.frac_truncation,
        )
    }
}

/// Defaults, then the optional config file, then command-line overrides.
/// The result is validated before it is returned.
pub fn parse_config(flags: &ConfigOverrides, file: Option<&Path>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)?;
        for (key, raw) in ConfigOverrides::from_toml(&text)?.0 {
            cfg.apply(&key, &raw)?;
        }
    }
    for (key, raw) in &flags.0 {
        cfg.apply(key, raw)?;
    }
    cfg.validate()?;
    Ok(cfg)
}
