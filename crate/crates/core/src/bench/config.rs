use std::fmt::Write as _;

use crate::decode::{DecoderOptions, SolverOptions};
use crate::error::{Error, Result};
use crate::measures::AmplitudeMode;
use crate::metrics::RecoveryConstants;

/// How many spikes each trial draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SparsityMode {
    Fixed(usize),
    /// Uniform in `1..=max`.
    Random { max: usize },
}

/// Everything a sweep depends on. Two runs with equal configs produce equal
/// records, wall time aside.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub delta_min: f64,
    pub m: usize,
    pub lambdas: Vec<usize>,
    pub ks: Vec<usize>,
    pub trials: usize,
    pub alpha: f64,
    pub seed: u64,
    pub grid_factor: usize,
    pub gap_tolerance: f64,
    pub max_newton_steps: usize,
    pub amplitudes: AmplitudeMode,
    pub sparsity: SparsityMode,
    pub constants: RecoveryConstants,
}

/// Smallest `m` with `m - 1 >= 4 / delta_min`.
pub fn default_m(delta_min: f64) -> usize {
    (4.0 / delta_min - 1e-9).ceil().max(1.0) as usize + 1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let solver = SolverOptions::default();
        Self {
            delta_min: 0.1,
            m: default_m(0.1),
            lambdas: (1..=6).collect(),
            ks: vec![2, 3, 4],
            trials: 110,
            alpha: 1.0,
            seed: 0,
            grid_factor: 64,
            gap_tolerance: solver.gap_tolerance,
            max_newton_steps: solver.max_newton_steps,
            amplitudes: AmplitudeMode::Complex,
            sparsity: SparsityMode::Random { max: 4 },
            constants: RecoveryConstants::default(),
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| parse_err(line, format!("{key} = {v:?}: {e}")))
}

/// `1,2,3` or the inclusive range `1..6`.
fn parse_list(line: usize, key: &str, v: &str) -> Result<Vec<usize>> {
    if let Some((a, b)) = v.split_once("..") {
        let (a, b): (usize, usize) = (parse_num(line, key, a.trim())?, parse_num(line, key, b.trim())?);
        return Ok((a..=b).collect());
    }
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_num(line, key, s.trim()))
        .collect()
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_min > 0.0 && self.delta_min < 1.0) {
            return Err(Error::Parameter(format!("delta_min = {} outside (0, 1)", self.delta_min)));
        }
        if ((self.m as f64) - 1.0) * self.delta_min < 4.0 * (1.0 - 1e-12) {
            return Err(Error::Parameter(format!(
                "m - 1 = {} is below 4 / delta_min = {}",
                self.m as i64 - 1,
                4.0 / self.delta_min
            )));
        }
        if self.trials == 0 {
            return Err(Error::Parameter("trials must be at least 1".into()));
        }
        if self.lambdas.is_empty() || self.lambdas.contains(&0) {
            return Err(Error::Parameter("lambdas must be a nonempty list of positive counts".into()));
        }
        if self.ks.is_empty() || self.ks.iter().any(|&k| k < 2) {
            return Err(Error::Parameter("K values must be at least 2".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Parameter(format!("alpha = {} must be positive", self.alpha)));
        }
        if self.grid_factor < 4 {
            return Err(Error::Parameter(format!("grid_factor = {} below 4", self.grid_factor)));
        }
        if !(self.gap_tolerance > 0.0) || self.max_newton_steps == 0 {
            return Err(Error::Parameter("solver tolerance and step cap must be positive".into()));
        }
        let s_max = match self.sparsity {
            SparsityMode::Fixed(s) => s,
            SparsityMode::Random { max } => max,
        };
        if s_max == 0 || (s_max > 1 && s_max as f64 * self.delta_min >= 1.0) {
            return Err(Error::Parameter(format!(
                "{s_max} spikes do not fit with separation {}",
                self.delta_min
            )));
        }
        Ok(())
    }

    pub fn decoder_options(&self) -> DecoderOptions {
        DecoderOptions {
            grid_factor: self.grid_factor,
            solver: SolverOptions {
                gap_tolerance: self.gap_tolerance,
                max_newton_steps: self.max_newton_steps,
                ..SolverOptions::default()
            },
            ..DecoderOptions::default()
        }
    }

    /// Parse the flat `key = value` format. Missing keys keep their defaults;
    /// `m` defaults to the smallest value allowed by `delta_min`.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut explicit_m = None;
        let mut s_mode = "random".to_string();
        let mut s_value = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| parse_err(line, format!("expected key = value, got {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "delta_min" => cfg.delta_min = parse_num(line, key, value)?,
                "m" => explicit_m = Some(parse_num(line, key, value)?),
                "lambdas" | "lambda_list" => cfg.lambdas = parse_list(line, key, value)?,
                "ks" | "K_list" => cfg.ks = parse_list(line, key, value)?,
                "trials" => cfg.trials = parse_num(line, key, value)?,
                "alpha" => cfg.alpha = parse_num(line, key, value)?,
                "seed" => cfg.seed = parse_num(line, key, value)?,
                "grid_factor" => cfg.grid_factor = parse_num(line, key, value)?,
                "gap_tolerance" => cfg.gap_tolerance = parse_num(line, key, value)?,
                "max_newton_steps" => cfg.max_newton_steps = parse_num(line, key, value)?,
                "amplitudes" => {
                    cfg.amplitudes = match value {
                        "complex" => AmplitudeMode::Complex,
                        "real" => AmplitudeMode::Real,
                        _ => return Err(parse_err(line, format!("amplitudes must be real or complex, got {value:?}"))),
                    }
                }
                "s_mode" => s_mode = value.to_string(),
                "s" => s_value = Some(parse_num(line, key, value)?),
                "c1" => cfg.constants.c1 = parse_num(line, key, value)?,
                "c2" => cfg.constants.c2 = parse_num(line, key, value)?,
                "c3" => cfg.constants.c3 = parse_num(line, key, value)?,
                _ => return Err(parse_err(line, format!("unknown key {key:?}"))),
            }
        }
        let s_default = match cfg.sparsity {
            SparsityMode::Fixed(s) => s,
            SparsityMode::Random { max } => max,
        };
        let s = s_value.unwrap_or(s_default);
        cfg.sparsity = match s_mode.as_str() {
            "fixed" => SparsityMode::Fixed(s),
            "random" => SparsityMode::Random { max: s },
            other => return Err(parse_err(0, format!("s_mode must be fixed or random, got {other:?}"))),
        };
        cfg.m = explicit_m.unwrap_or_else(|| default_m(cfg.delta_min));
        cfg.validate()?;
        Ok(cfg)
    }

    /// Inverse of [`ExperimentConfig::from_text`].
    pub fn to_text(&self) -> String {
        let (s_mode, s) = match self.sparsity {
            SparsityMode::Fixed(s) => ("fixed", s),
            SparsityMode::Random { max } => ("random", max),
        };
        let amplitudes = match self.amplitudes {
            AmplitudeMode::Complex => "complex",
            AmplitudeMode::Real => "real",
        };
        let mut out = String::new();
        let _ = writeln!(out, "delta_min = {}", self.delta_min);
        let _ = writeln!(out, "m = {}", self.m);
        let _ = writeln!(out, "lambdas = {}", join(&self.lambdas));
        let _ = writeln!(out, "ks = {}", join(&self.ks));
        let _ = writeln!(out, "trials = {}", self.trials);
        let _ = writeln!(out, "alpha = {}", self.alpha);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "grid_factor = {}", self.grid_factor);
        let _ = writeln!(out, "gap_tolerance = {}", self.gap_tolerance);
        let _ = writeln!(out, "max_newton_steps = {}", self.max_newton_steps);
        let _ = writeln!(out, "amplitudes = {amplitudes}");
        let _ = writeln!(out, "s_mode = {s_mode}");
        let _ = writeln!(out, "s = {s}");
        let _ = writeln!(out, "c1 = {}", self.constants.c1);
        let _ = writeln!(out, "c2 = {}", self.constants.c2);
        let _ = writeln!(out, "c3 = {}", self.constants.c3);
        out
    }
}
