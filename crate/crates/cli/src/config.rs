//! Flat `key=value` run configuration.

use std::fmt;
use std::str::FromStr;

use hdstream_core::LearnerConfig;
use serde::Serialize;

pub const KEYS: &[&str] = &[
    "D",
    "L",
    "beta",
    "alpha",
    "t_merge",
    "t0",
    "c_max",
    "top_m",
    "refine_iters",
    "seed",
    "calib_samples",
    "mu_init",
    "sigma_init",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(rename = "D")]
    pub dim: usize,
    #[serde(rename = "L")]
    pub levels: usize,
    pub beta: f64,
    pub alpha: f64,
    pub t_merge: u64,
    pub t0: u64,
    pub c_max: usize,
    pub top_m: usize,
    pub refine_iters: usize,
    pub seed: u32,
    pub calib_samples: usize,
    pub mu_init: f64,
    pub sigma_init: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let l = LearnerConfig::default();
        Self {
            dim: 4096,
            levels: 16,
            beta: l.beta,
            alpha: l.alpha,
            t_merge: l.t_merge,
            t0: l.t0,
            c_max: l.c_max,
            top_m: l.top_m,
            refine_iters: l.refine_iters,
            seed: l.seed,
            calib_samples: 256,
            mu_init: l.mu_init,
            sigma_init: l.sigma_init,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config line {}: {}", self.line, self.message)
    }
}

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T, ConfigError> {
    raw.parse().map_err(|_| ConfigError {
        line,
        message: format!("invalid value {raw:?} for {key}"),
    })
}

impl RunConfig {
    /// Parses `key=value` lines over the defaults. Blank lines and `#`
    /// comments are ignored; later assignments win.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, val)) = body.split_once('=') else {
                return Err(ConfigError {
                    line,
                    message: format!("expected key=value, got {body:?}"),
                });
            };
            let (key, val) = (key.trim(), val.trim());
            match key {
                "D" => cfg.dim = value(line, key, val)?,
                "L" => cfg.levels = value(line, key, val)?,
                "beta" => cfg.beta = value(line, key, val)?,
                "alpha" => cfg.alpha = value(line, key, val)?,
                "t_merge" => cfg.t_merge = value(line, key, val)?,
                "t0" => cfg.t0 = value(line, key, val)?,
                "c_max" => cfg.c_max = value(line, key, val)?,
                "top_m" => cfg.top_m = value(line, key, val)?,
                "refine_iters" => cfg.refine_iters = value(line, key, val)?,
                "seed" => cfg.seed = value(line, key, val)?,
                "calib_samples" => cfg.calib_samples = value(line, key, val)?,
                "mu_init" => cfg.mu_init = value(line, key, val)?,
                "sigma_init" => cfg.sigma_init = value(line, key, val)?,
                other => {
                    return Err(ConfigError {
                        line,
                        message: format!("unknown key {other:?}; valid keys: {}", KEYS.join(", ")),
                    })
                }
            }
        }
        if cfg.calib_samples == 0 {
            return Err(ConfigError {
                line: 0,
                message: "calib_samples must be positive".into(),
            });
        }
        Ok(cfg)
    }

    pub fn learner(&self) -> LearnerConfig {
        LearnerConfig {
            beta: self.beta,
            alpha: self.alpha,
            t_merge: self.t_merge,
            t0: self.t0,
            c_max: self.c_max,
            mu_init: self.mu_init,
            sigma_init: self.sigma_init,
            top_m: self.top_m,
            refine_iters: self.refine_iters,
            seed: self.seed,
        }
    }
}
