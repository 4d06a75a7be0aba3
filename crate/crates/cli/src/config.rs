//! Flat `key = value` configuration files and their merge with command-line flags.

use std::fs;
use std::path::Path;

use supmeasure::experiments::VerifyConfig;
use supmeasure::model::ModelConfig;
use supmeasure::{Interval, SetFamily};

pub const SEED_ENV: &str = "SUPMEASURE_SEED";

/// Every field optional; later sources override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartialConfig {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub p: Option<f64>,
    pub n: Option<usize>,
    pub kappa: Option<f64>,
    pub l: Option<usize>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub intervals: Option<Vec<Interval>>,
    pub set_family: Option<SetFamily>,
    pub drift: Option<bool>,
    pub delta: Option<f64>,
    pub ell: Option<usize>,
    pub j_max: Option<usize>,
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| format!("invalid value {value:?} for {key}: {e}"))
}

/// `"a/b:c/d,e/f:g/h"` (`;` also separates).
pub fn parse_intervals(value: &str) -> Result<Vec<Interval>, String> {
    let list: Vec<Interval> = value
        .split([',', ';'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse("intervals", s))
        .collect::<Result<_, _>>()?;
    if list.is_empty() {
        return Err("intervals: empty list".into());
    }
    Ok(list)
}

impl PartialConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "alpha" => self.alpha = Some(parse(key, value)?),
            "beta" => self.beta = Some(parse(key, value)?),
            "p" => self.p = Some(parse(key, value)?),
            "n" => self.n = Some(parse(key, value)?),
            "kappa" => self.kappa = Some(parse(key, value)?),
            "L" => self.l = Some(parse(key, value)?),
            "replicates" => self.replicates = Some(parse(key, value)?),
            "seed" => self.seed = Some(parse(key, value)?),
            "intervals" => self.intervals = Some(parse_intervals(value)?),
            "setFamily" => self.set_family = Some(parse(key, value)?),
            "drift" => self.drift = Some(parse(key, value)?),
            "delta" => self.delta = Some(parse(key, value)?),
            "ell" => self.ell = Some(parse(key, value)?),
            "jMax" => self.j_max = Some(parse(key, value)?),
            _ => return Err(format!("unknown configuration key {key:?}")),
        }
        Ok(())
    }

    pub fn parse_text(text: &str) -> Result<Self, String> {
        let mut cfg = PartialConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| format!("line {}: {e}", i + 1))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse_text(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Fields set in `other` win.
    pub fn merged(self, other: PartialConfig) -> PartialConfig {
        PartialConfig {
            alpha: other.alpha.or(self.alpha),
            beta: other.beta.or(self.beta),
            p: other.p.or(self.p),
            n: other.n.or(self.n),
            kappa: other.kappa.or(self.kappa),
            l: other.l.or(self.l),
            replicates: other.replicates.or(self.replicates),
            seed: other.seed.or(self.seed),
            intervals: other.intervals.or(self.intervals),
            set_family: other.set_family.or(self.set_family),
            drift: other.drift.or(self.drift),
            delta: other.delta.or(self.delta),
            ell: other.ell.or(self.ell),
            j_max: other.j_max.or(self.j_max),
        }
    }

    /// Explicit seed, else `SUPMEASURE_SEED`, else `default`.
    pub fn resolve_seed(&self, default: u64) -> Result<u64, String> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => parse(SEED_ENV, v.trim()),
            Err(_) => Ok(default),
        }
    }

    pub fn apply_to(&self, base: ModelConfig) -> Result<ModelConfig, String> {
        Ok(ModelConfig {
            alpha: self.alpha.unwrap_or(base.alpha),
            beta: self.beta.unwrap_or(base.beta),
            p: self.p.unwrap_or(base.p),
            n: self.n.unwrap_or(base.n),
            kappa: self.kappa.unwrap_or(base.kappa),
            l: self.l.unwrap_or(base.l),
            replicates: self.replicates.unwrap_or(base.replicates),
            seed: self.resolve_seed(base.seed)?,
            intervals: self.intervals.clone().unwrap_or(base.intervals),
            set_family: self.set_family.unwrap_or(base.set_family),
            drift: self.drift.unwrap_or(base.drift),
            delta: self.delta.or(base.delta),
            ell: self.ell.or(base.ell),
            j_max: self.j_max.unwrap_or(base.j_max),
        })
    }

    pub fn to_verify(&self, samples: Option<usize>) -> Result<VerifyConfig, String> {
        Ok(VerifyConfig {
            seed: self.resolve_seed(VerifyConfig::default().seed)?,
            samples: samples.or(self.replicates),
            alpha: self.alpha,
            beta: self.beta,
            p: self.p,
            n: self.n,
            l: self.l,
            kappa: self.kappa,
            intervals: self.intervals.clone(),
            family: self.set_family,
            drift: self.drift.unwrap_or(false),
        })
    }
}

/// The figure preset: shifted renewal sets, `β = 0.6`, `n = 400`, `L = 20`, `α = 1`.
pub fn figure_preset() -> ModelConfig {
    ModelConfig {
        alpha: 1.0,
        beta: 0.6,
        n: 400,
        l: 20,
        replicates: 1,
        set_family: SetFamily::RenewalShifted,
        ..ModelConfig::default()
    }
}
