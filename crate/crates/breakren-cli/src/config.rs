//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use breakren::contfrac::tune_parameter;
use breakren::levels::LevelOptions;
use breakren::renorm::GridPolicy;
use breakren::{BreakMap, ContinuedFraction, PrecisionPolicy};

use crate::CliError;

pub const OUT_ENV: &str = "BREAKREN_OUT";

const KEYS: &[&str] = &[
    "preset",
    "quotients",
    "n_min",
    "n_max",
    "n",
    "base_bits",
    "per_level_bits",
    "grid",
    "grid_max",
    "upsilon_points",
    "d_samples",
    "approximant",
    "plot",
    "out",
    "gamma",
    "center",
    "k_min",
    "k_max",
    "tau_min",
    "tau_max",
    "cap_ratio",
    "cap_convexity",
    "cap_interpolation",
    "cap_gap",
    "cap_second_gap",
    "cap_upsilon",
    "fault_mtilde",
    "input",
    "column",
    "model",
    "window",
];

/// Keys set so far; later sources override earlier ones.
#[derive(Clone, Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, CliError> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !KEYS.contains(&key) {
            return Err(CliError::Usage(format!("unknown config key {key:?}")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| CliError::Usage(format!("bad value {v:?} for {key}"))),
        }
    }

    pub fn required(&self, key: &str) -> Result<&str, CliError> {
        self.get(key).ok_or_else(|| CliError::Usage(format!("missing {key}")))
    }

    /// The environment variable beats flags and the config file.
    pub fn out_dir(&self) -> PathBuf {
        if let Some(v) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(v);
        }
        PathBuf::from(self.get("out").unwrap_or("out"))
    }

    pub fn policy(&self) -> Result<PrecisionPolicy, CliError> {
        Ok(PrecisionPolicy::new(self.parsed("base_bits", 128)?, self.parsed("per_level_bits", 16)?)?)
    }

    pub fn n_max(&self) -> Result<usize, CliError> {
        let n = self.parsed("n_max", 10)?;
        if n == 0 || n > 20 {
            return Err(CliError::Usage(format!("n_max must lie in 1..=20, got {n}")));
        }
        Ok(n)
    }

    /// `golden`, `silver` or an explicit comma list of partial quotients.
    /// Named sequences get `min(n_max + 2, 20)` terms.
    pub fn quotients(&self, n_max: usize) -> Result<ContinuedFraction, CliError> {
        let spec = self.get("quotients").unwrap_or("golden");
        let len = (n_max + 2).min(20);
        let cf = match spec {
            "golden" => ContinuedFraction::new(&vec![1; len])?,
            "silver" => ContinuedFraction::new(&vec![2; len])?,
            list => {
                let ks: Result<Vec<u64>, _> = list.split(',').map(|t| t.trim().parse::<u64>()).collect();
                let ks = ks.map_err(|_| CliError::Usage(format!("bad quotients {list:?}")))?;
                ContinuedFraction::new(&ks)?
            }
        };
        if n_max > cf.len() {
            return Err(CliError::Usage(format!("n_max = {n_max} exceeds the {} partial quotients", cf.len())));
        }
        Ok(cf)
    }

    pub fn level_options(&self) -> Result<LevelOptions, CliError> {
        let base = self.parsed("grid", 257)?;
        Ok(LevelOptions {
            policy: self.policy()?,
            grid: GridPolicy { base, max: self.parsed("grid_max", 1025usize)?.max(base), rel_change: 0.01 },
            upsilon_points: self.parsed("upsilon_points", 257)?,
            d_samples: self.parsed("d_samples", 64)?,
        })
    }

    pub fn map(&self) -> Result<BreakMap, CliError> {
        Ok(self.get("preset").unwrap_or("moebius:c=2").parse()?)
    }
}

/// A map tuned to the configured rotation number.
pub struct Experiment {
    pub map: BreakMap,
    pub cf: ContinuedFraction,
    pub n_max: usize,
    pub policy: PrecisionPolicy,
}

impl Experiment {
    pub fn tuned(cfg: &Config) -> Result<Experiment, CliError> {
        let n_max = cfg.n_max()?;
        let cf = cfg.quotients(n_max)?;
        let policy = cfg.policy()?;
        let map = cfg.map()?;
        let beta = tune_parameter(&map, &cf, policy.bits(cf.len()))?;
        Ok(Experiment { map: map.with_beta(beta), cf, n_max, policy })
    }
}
