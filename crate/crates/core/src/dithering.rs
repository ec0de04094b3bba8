//! Gaussian dithering of one-bit antennas with strong receive signals.
//!
//! A one-bit antenna whose receive SNR `|h_n|^2 es` exceeds a threshold `T`
//! gets extra noise of variance `|h_n|^2 es / T - 1`, so its effective SNR is
//! capped at `T`. In the moment formulas this replaces every `|h_n|^2 es + 1`
//! of that antenna with `|h_n|^2 es (1 + 1/T)`. High-resolution antennas are
//! never dithered.

use crate::channel::{AdcSwitch, SimoChannel};
use crate::ergodic::{ergodic_bounds, ErgodicBounds, ErgodicConfig, SwitchPolicy};
use crate::exec::Executor;
use crate::gmi::{check_es, received_power, single_user_moments, AntennaTerms, MomentPair};
use crate::{db_to_linear, Error, Result, SimRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DitherPolicy {
    threshold: f64,
}

impl DitherPolicy {
    /// Threshold `T` on the receive SNR, linear scale.
    pub fn new(threshold: f64) -> Result<Self> {
        if threshold > 0.0 && threshold.is_finite() {
            Ok(DitherPolicy { threshold })
        } else {
            Err(Error::domain(format!(
                "dither threshold must be positive, got {threshold}"
            )))
        }
    }

    pub fn from_db(threshold_db: f64) -> Result<Self> {
        Self::new(db_to_linear(threshold_db))
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Whether an antenna with the given ADC and receive SNR is dithered.
    pub fn applies(&self, high_res: bool, snr: f64) -> bool {
        !high_res && snr > self.threshold
    }

    /// Variance of the injected noise, zero when inactive.
    pub fn noise_variance(&self, high_res: bool, snr: f64) -> f64 {
        if self.applies(high_res, snr) {
            snr / self.threshold - 1.0
        } else {
            0.0
        }
    }

    pub(crate) fn terms(&self, delta: &AdcSwitch, power: Vec<f64>) -> AntennaTerms {
        let mut terms = AntennaTerms::undithered(power);
        for n in 0..delta.len() {
            let p = terms.power[n];
            if self.applies(delta.is_high_res(n), p) {
                terms.spread[n] = p * (1.0 + 1.0 / self.threshold);
            }
        }
        terms
    }
}

pub fn dithered_moments(
    h: &SimoChannel,
    delta: &AdcSwitch,
    es: f64,
    policy: &DitherPolicy,
) -> Result<MomentPair> {
    if delta.len() != h.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            found: delta.len(),
        });
    }
    check_es(es)?;
    let terms = policy.terms(delta, received_power(h, es));
    Ok(single_user_moments(h, delta, es, &terms))
}

/// Default search grid, `10^-1` to `10^1.5` in steps of `10^0.25`.
pub fn default_threshold_grid() -> Vec<f64> {
    (0..=10)
        .map(|i| db_to_linear(-10.0 + 2.5 * i as f64))
        .collect()
}

/// Ergodic lower bound at `K = 0` for every threshold on `grid`, all points
/// evaluated on the same channel draws.
pub fn threshold_sweep(
    n: usize,
    es: f64,
    grid: &[f64],
    trials: usize,
    rng: SimRng,
    exec: &Executor,
) -> Result<Vec<(f64, ErgodicBounds)>> {
    if grid.is_empty() {
        return Err(Error::domain("threshold grid is empty"));
    }
    grid.iter()
        .map(|&t| {
            let cfg = ErgodicConfig {
                n,
                k: 0,
                es,
                policy: SwitchPolicy::Strongest,
                dither: Some(DitherPolicy::new(t)?),
                trials,
            };
            Ok((t, ergodic_bounds(&cfg, rng, exec)?))
        })
        .collect()
}

/// Grid point maximizing the `K = 0` ergodic lower bound; the first one wins ties.
pub fn optimize_threshold(
    n: usize,
    es: f64,
    grid: &[f64],
    trials: usize,
    rng: SimRng,
    exec: &Executor,
) -> Result<f64> {
    let sweep = threshold_sweep(n, es, grid, trials, rng, exec)?;
    let mut best = sweep[0];
    for point in &sweep[1..] {
        if point.1.lower_nats > best.1.lower_nats {
            best = *point;
        }
    }
    Ok(best.0)
}
