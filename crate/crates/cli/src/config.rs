//! Run configuration file: one `key = value` per line, `#` starts a comment.

use std::path::Path;

use mixadc::dithering::default_threshold_grid;
use mixadc::{db_to_linear, PowerModel};

use crate::grid::parse_reals;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub power: PowerModel,
    /// Coherence interval in symbols.
    pub coherence_len: usize,
    /// Dither thresholds searched per SNR point, linear.
    pub dither_grid: Vec<f64>,
    /// Estimation-error draws averaged per channel under imperfect CSI.
    pub err_samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            power: PowerModel::default(),
            coherence_len: 196,
            dither_grid: default_threshold_grid(),
            err_samples: 10_000,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| format!("line {}: {msg}", i + 1);
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| at(format!("expected `key = value`, got `{line}`")))?;
            match key {
                "p_lna" => cfg.power.p_lna = power(value).map_err(at)?,
                "p_mix" => cfg.power.p_mix = power(value).map_err(at)?,
                "p_adc_pair" => cfg.power.p_adc_pair = power(value).map_err(at)?,
                "p_fil" => cfg.power.p_fil = power(value).map_err(at)?,
                "p_syn" => cfg.power.p_syn = power(value).map_err(at)?,
                "coherence_len" => cfg.coherence_len = positive(value).map_err(at)?,
                "err_samples" => cfg.err_samples = positive(value).map_err(at)?,
                "dither_grid_db" => {
                    cfg.dither_grid = parse_reals(value)
                        .map_err(at)?
                        .into_iter()
                        .map(db_to_linear)
                        .collect()
                }
                _ => return Err(at(format!("unknown key `{key}`"))),
            }
        }
        Ok(cfg)
    }
}

fn power(value: &str) -> Result<f64, String> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(format!("`{value}` is not a non-negative power in mW")),
    }
}

fn positive(value: &str) -> Result<usize, String> {
    match value.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("`{value}` is not a positive integer")),
    }
}
