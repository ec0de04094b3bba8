//! Outage rates of random-but-fixed channels.
//!
//! The outage rate at probability `p_out` is the largest rate that the
//! per-realization rate falls below with probability at most `p_out`,
//! estimated here by the empirical lower-tail quantile.

use rand_chacha::ChaCha8Rng;

use crate::channel::{draw_rayleigh, SimoChannel};
use crate::ergodic::check_counts;
use crate::exec::Executor;
use crate::gmi::{check_es, Architecture};
use crate::{Error, Result, SimRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageConfig {
    pub n: usize,
    pub k: usize,
    pub es: f64,
    pub p_out: f64,
    pub draws: usize,
}

impl OutageConfig {
    fn validate(&self) -> Result<()> {
        check_counts(self.n, self.k)?;
        check_es(self.es)?;
        check_probability(self.p_out)?;
        if self.draws < 100 {
            return Err(Error::domain(format!(
                "at least 100 draws are needed, got {}",
                self.draws
            )));
        }
        Ok(())
    }
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "outage probability must lie in (0, 1), got {p}"
        )))
    }
}

/// Order statistic `ceil(p * len)` (1-based) of `values`.
pub fn lower_quantile(values: &[f64], p: f64) -> Result<f64> {
    check_probability(p)?;
    if values.is_empty() {
        return Err(Error::domain("no values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Ok(sorted[rank - 1])
}

/// Per-draw rates in nats over channels from `source`; draw `t` uses substream `t`.
pub fn outage_rates_with<S>(
    cfg: &OutageConfig,
    arch: Architecture,
    rng: SimRng,
    exec: &Executor,
    source: S,
) -> Result<Vec<f64>>
where
    S: Fn(&mut ChaCha8Rng) -> SimoChannel + Sync + Send,
{
    cfg.validate()?;
    exec.map(cfg.draws, |t| {
        let h = source(&mut rng.substream(t as u64).generator());
        arch.rate(&h, cfg.k, cfg.es)
    })
    .into_iter()
    .collect()
}

/// Outage rate in nats over i.i.d. Rayleigh channels. Architectures run with
/// the same `rng` see the same channels.
pub fn outage_gmi(
    cfg: &OutageConfig,
    arch: Architecture,
    rng: SimRng,
    exec: &Executor,
) -> Result<f64> {
    let n = cfg.n;
    let rates = outage_rates_with(cfg, arch, rng, exec, |gen| draw_rayleigh(n, gen))?;
    lower_quantile(&rates, cfg.p_out)
}
