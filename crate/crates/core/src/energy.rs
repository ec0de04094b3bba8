//! Circuit power of the three receiver architectures and the normalized
//! spectral-efficiency/energy trade-off.
//!
//! Every RF chain spends `P_LNA + P_mix + P_fil`, every high-resolution ADC
//! pair `P_ADC`, and the shared synthesizer `P_syn`. One-bit ADCs are treated
//! as free.

use crate::exec::Executor;
use crate::gmi::Architecture;
use crate::multiuser::{mu_ergodic_bounds, MuErgodicConfig, MuReceiver, SwitchScheme};
use crate::{Error, Result, SimRng};

/// Component powers in mW.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerModel {
    pub p_lna: f64,
    pub p_mix: f64,
    pub p_adc_pair: f64,
    pub p_fil: f64,
    pub p_syn: f64,
}

impl Default for PowerModel {
    /// Values for a 40 MHz bandwidth receiver.
    fn default() -> Self {
        PowerModel {
            p_lna: 20.0,
            p_mix: 21.0,
            p_adc_pair: 234.0,
            p_fil: 5.0,
            p_syn: 67.5,
        }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.p_lna,
            self.p_mix,
            self.p_adc_pair,
            self.p_fil,
            self.p_syn,
        ];
        if all.iter().all(|p| *p >= 0.0 && p.is_finite()) {
            Ok(())
        } else {
            Err(Error::domain(
                "component powers must be finite and non-negative",
            ))
        }
    }

    /// `P_LNA + P_mix + P_fil`.
    pub fn rf_chain(&self) -> f64 {
        self.p_lna + self.p_mix + self.p_fil
    }
}

/// Total circuit power in mW.
pub fn receiver_power(kind: Architecture, n: usize, k: usize, pm: &PowerModel) -> Result<f64> {
    pm.validate()?;
    if k > n {
        return Err(Error::domain(format!("k = {k} exceeds n = {n}")));
    }
    let (n, k) = (n as f64, k as f64);
    let chain = pm.rf_chain() + pm.p_adc_pair;
    Ok(match kind {
        Architecture::Conventional => n * chain + pm.p_syn,
        Architecture::AntennaSelection => k * chain + pm.p_syn,
        Architecture::Mixed => n * pm.rf_chain() + k * pm.p_adc_pair + pm.p_syn,
    })
}

/// Power of `kind` relative to the conventional receiver.
pub fn normalized_energy(kind: Architecture, n: usize, k: usize, pm: &PowerModel) -> Result<f64> {
    Ok(receiver_power(kind, n, k, pm)? / receiver_power(Architecture::Conventional, n, n, pm)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyPoint {
    pub arch: Architecture,
    pub k: usize,
    /// Per-user ergodic lower bound over the mean conventional per-user GMI.
    pub norm_rate: f64,
    pub norm_energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencySetup {
    pub n: usize,
    pub m: usize,
    /// Total SNR; each user transmits with `snr / m`.
    pub snr: f64,
    pub trials: usize,
}

/// Mixed-ADC and antenna-selection points for every `k` in `k_grid`.
///
/// All architectures and all `k` are evaluated on the same channel draws.
/// With `m = 1` the norm-based switch is strongest-`K` and the normalizer is
/// the ergodic capacity `E[log(1 + ||h||^2 es)]`.
pub fn efficiency_curve(
    setup: &EfficiencySetup,
    k_grid: &[usize],
    pm: &PowerModel,
    rng: SimRng,
    exec: &Executor,
) -> Result<Vec<EfficiencyPoint>> {
    let cfg = |k, receiver| MuErgodicConfig {
        n: setup.n,
        m: setup.m,
        k,
        snr_total: setup.snr,
        receiver,
        trials: setup.trials,
    };
    let reference = mu_ergodic_bounds(&cfg(setup.n, MuReceiver::Conventional), rng, exec)?
        .per_user
        .upper_nats;
    let mut points = Vec::with_capacity(2 * k_grid.len());
    for &k in k_grid {
        for arch in [Architecture::Mixed, Architecture::AntennaSelection] {
            let rate = match arch {
                Architecture::AntennaSelection if k == 0 => 0.0,
                Architecture::AntennaSelection => {
                    mu_ergodic_bounds(&cfg(k, MuReceiver::AntennaSelection), rng, exec)?
                        .per_user
                        .lower_nats
                }
                _ => {
                    mu_ergodic_bounds(
                        &cfg(k, MuReceiver::Mixed(SwitchScheme::NormBased)),
                        rng,
                        exec,
                    )?
                    .per_user
                    .lower_nats
                }
            };
            points.push(EfficiencyPoint {
                arch,
                k,
                norm_rate: rate / reference,
                norm_energy: normalized_energy(arch, setup.n, k, pm)?,
            });
        }
    }
    Ok(points)
}
