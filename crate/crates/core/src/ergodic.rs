//! Ergodic GMI bounds over i.i.d. Rayleigh fading.
//!
//! With the combiner re-optimized per realization, the ergodic GMI is
//! bracketed by `-log(1 - E[kappa])` below and `E[-log(1 - kappa)]` above.
//! Both expectations are estimated by Monte Carlo. Trial `t` always runs on
//! substream `t`, so results are independent of the worker count.
//!
//! Imperfect CSI is handled by designing the switch and combiner from an
//! estimate `h_hat`, averaging the moments over the estimation error, and
//! charging `ceil(N/K)` of every `T` coherence symbols to training.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{
    draw_estimated, draw_rayleigh, switch_random, switch_strongest, AdcSwitch, EstimatedChannel,
    SimoChannel,
};
use crate::dithering::{dithered_moments, DitherPolicy};
use crate::exec::Executor;
use crate::gmi::{
    arcsine_law, build_moments, check_es, gmi_from_kappa, kappa_with_factor, MomentPair,
};
use crate::numerics::{Estimate, HermitianMatrix};
use crate::rng::complex_normal;
use crate::{Error, Result, SimRng, C64};

/// Redraws allowed for one trial before giving up.
const MAX_REDRAWS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErgodicBounds {
    pub lower_nats: f64,
    pub upper_nats: f64,
    pub trials: usize,
    pub std_err_lower: f64,
    pub std_err_upper: f64,
    /// Channel draws rejected for a numerically singular covariance.
    pub rejections: usize,
}

impl ErgodicBounds {
    /// Bounds from per-draw `kappa` values, `group` consecutive values per
    /// draw (one per user). Standard errors use per-draw averages, so users of
    /// the same draw are not treated as independent.
    pub fn from_kappas(kappas: &[f64], group: usize, rejections: usize) -> Result<Self> {
        if group == 0 || !kappas.len().is_multiple_of(group) {
            return Err(Error::domain("kappa samples do not split into whole draws"));
        }
        let trials = kappas.len() / group;
        if trials < 2 {
            return Err(Error::domain("at least two trials are needed"));
        }
        let per_draw = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
            kappas
                .chunks(group)
                .map(|c| c.iter().map(|&k| f(k)).sum::<f64>() / group as f64)
                .collect()
        };
        let kappa = Estimate::from_samples(&per_draw(&|k| k));
        let gmi = Estimate::from_samples(&per_draw(&gmi_from_kappa));
        Ok(ErgodicBounds {
            lower_nats: gmi_from_kappa(kappa.value),
            upper_nats: gmi.value,
            trials,
            std_err_lower: kappa.std_err / (1.0 - kappa.value),
            std_err_upper: gmi.std_err,
            rejections,
        })
    }

    /// Both bounds and their errors multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        ErgodicBounds {
            lower_nats: self.lower_nats * factor,
            upper_nats: self.upper_nats * factor,
            std_err_lower: self.std_err_lower * factor,
            std_err_upper: self.std_err_upper * factor,
            ..*self
        }
    }

    /// `(upper - lower) / upper`.
    pub fn relative_gap(&self) -> f64 {
        (self.upper_nats - self.lower_nats) / self.upper_nats
    }
}

/// How the `K` high-resolution ADCs are placed in each realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SwitchPolicy {
    #[default]
    Strongest,
    Random,
}

impl SwitchPolicy {
    pub fn apply<R: Rng + ?Sized>(self, h: &SimoChannel, k: usize, rng: &mut R) -> AdcSwitch {
        match self {
            SwitchPolicy::Strongest => switch_strongest(h, k),
            SwitchPolicy::Random => switch_random(h.len(), k, rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErgodicConfig {
    pub n: usize,
    pub k: usize,
    pub es: f64,
    pub policy: SwitchPolicy,
    pub dither: Option<DitherPolicy>,
    pub trials: usize,
}

impl ErgodicConfig {
    pub fn new(n: usize, k: usize, es: f64, trials: usize) -> Self {
        ErgodicConfig {
            n,
            k,
            es,
            policy: SwitchPolicy::Strongest,
            dither: None,
            trials,
        }
    }

    fn validate(&self) -> Result<()> {
        check_es(self.es)?;
        check_counts(self.n, self.k)?;
        if self.trials < 2 {
            return Err(Error::domain("at least two trials are needed"));
        }
        Ok(())
    }
}

pub(crate) fn check_counts(n: usize, k: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("at least one antenna is needed"));
    }
    if k > n {
        return Err(Error::domain(format!("k = {k} exceeds n = {n}")));
    }
    Ok(())
}

/// Runs `trials` independent trials, trial `t` on substream `t`.
///
/// A trial that fails with a singular covariance is redrawn from the same
/// generator. The run aborts when more than 0.1% of trials needed a redraw.
pub(crate) fn run_trials<T, F>(
    trials: usize,
    rng: SimRng,
    exec: &Executor,
    trial: F,
) -> Result<(Vec<T>, usize)>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T> + Sync + Send,
{
    let outcomes = exec.map(trials, |t| {
        let mut gen = rng.substream(t as u64).generator();
        let mut rejected = 0;
        loop {
            match trial(&mut gen) {
                Err(Error::NotPositiveDefinite { .. }) if rejected < MAX_REDRAWS => rejected += 1,
                Err(Error::NotPositiveDefinite { .. }) => {
                    return Err(Error::TooManyRejections {
                        rejected: rejected + 1,
                        trials,
                    })
                }
                other => return other.map(|v| (v, rejected)),
            }
        }
    });
    let mut values = Vec::with_capacity(trials);
    let mut rejections = 0;
    for outcome in outcomes {
        let (v, r) = outcome?;
        values.push(v);
        rejections += r;
    }
    if rejections * 1000 > trials {
        return Err(Error::TooManyRejections {
            rejected: rejections,
            trials,
        });
    }
    Ok((values, rejections))
}

/// Ergodic bounds over i.i.d. `CN(0, 1)` channels.
pub fn ergodic_bounds(cfg: &ErgodicConfig, rng: SimRng, exec: &Executor) -> Result<ErgodicBounds> {
    let n = cfg.n;
    ergodic_bounds_with(cfg, rng, exec, |gen| draw_rayleigh(n, gen))
}

/// Ergodic bounds over channels produced by `source`.
pub fn ergodic_bounds_with<S>(
    cfg: &ErgodicConfig,
    rng: SimRng,
    exec: &Executor,
    source: S,
) -> Result<ErgodicBounds>
where
    S: Fn(&mut ChaCha8Rng) -> SimoChannel + Sync + Send,
{
    cfg.validate()?;
    let (kappas, rejections) = run_trials(cfg.trials, rng, exec, |gen| {
        let h = source(gen);
        if h.len() != cfg.n {
            return Err(Error::DimensionMismatch {
                expected: cfg.n,
                found: h.len(),
            });
        }
        let delta = cfg.policy.apply(&h, cfg.k, gen);
        let m = match &cfg.dither {
            Some(policy) => dithered_moments(&h, &delta, cfg.es, policy)?,
            None => build_moments(&h, &delta, cfg.es)?,
        };
        kappa_with_factor(&m.r_rr.cholesky()?, &m.r_rx, cfg.es)
    })?;
    ErgodicBounds::from_kappas(&kappas, 1, rejections)
}

/// Monte Carlo estimate of `E[log(1 + ||h||^2 es)]` over i.i.d. Rayleigh channels.
pub fn ergodic_capacity_conventional(
    n: usize,
    es: f64,
    trials: usize,
    rng: SimRng,
    exec: &Executor,
) -> Result<Estimate> {
    check_es(es)?;
    check_counts(n, 0)?;
    let rates = exec.map(trials, |t| {
        let h = draw_rayleigh(n, &mut rng.substream(t as u64).generator());
        (h.norm_sqr() * es).ln_1p()
    });
    Ok(Estimate::from_samples(&rates))
}

/// Coherence block of `T` symbols with round-robin training of `N` antennas
/// through `K` high-resolution ADC pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingConfig {
    coherence_len: usize,
    n_antennas: usize,
    k: usize,
}

impl TrainingConfig {
    pub fn new(coherence_len: usize, n_antennas: usize, k: usize) -> Result<Self> {
        check_counts(n_antennas, k)?;
        if k == 0 {
            return Err(Error::domain(
                "training needs at least one high-resolution ADC pair",
            ));
        }
        let cfg = TrainingConfig {
            coherence_len,
            n_antennas,
            k,
        };
        if coherence_len <= cfg.training_symbols() {
            return Err(Error::domain(format!(
                "coherence length {coherence_len} leaves no room after {} training symbols",
                cfg.training_symbols()
            )));
        }
        Ok(cfg)
    }

    pub fn coherence_len(&self) -> usize {
        self.coherence_len
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `ceil(N / K)`.
    pub fn training_symbols(&self) -> usize {
        self.n_antennas.div_ceil(self.k)
    }

    /// Fraction of the block left for data, `(T - ceil(N/K)) / T`.
    pub fn prefactor(&self) -> f64 {
        (self.coherence_len - self.training_symbols()) as f64 / self.coherence_len as f64
    }
}

/// Moments averaged over the estimation error `h - h_hat ~ CN(0, sigma_t^2 I)`.
///
/// Entries that are linear or quadratic in `h` use their exact expectation.
/// Entries involving a one-bit antenna are averaged over `err_samples` joint
/// error draws; mixed high-resolution/one-bit entries factor into the exact
/// mean of the high-resolution gain times the sampled one-bit correlation.
/// Without estimation error this is exactly [`build_moments`] on `h_hat`.
pub fn imperfect_moments<R: Rng + ?Sized>(
    est: &EstimatedChannel,
    delta: &AdcSwitch,
    es: f64,
    err_samples: usize,
    rng: &mut R,
) -> Result<MomentPair> {
    if err_samples == 0 {
        return Err(Error::domain(
            "at least one estimation-error sample is needed",
        ));
    }
    if est.sigma_t_sq == 0.0 {
        return build_moments(&est.h_hat, delta, es);
    }
    let h_hat = est.h_hat.gains();
    let n = h_hat.len();
    if delta.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: delta.len(),
        });
    }
    check_es(es)?;
    let s2 = est.sigma_t_sq;
    let one_bit = delta.one_bit_indices();
    let l = one_bit.len();

    // u[s][i] = h sqrt(es / (|h|^2 es + 1)) and corr[i] = mean of h g with
    // g = sqrt(4 / (pi (|h|^2 es + 1))), for one-bit antenna one_bit[i].
    let mut u = vec![C64::new(0.0, 0.0); err_samples * l];
    let mut corr = vec![C64::new(0.0, 0.0); l];
    for s in 0..err_samples {
        let row = &mut u[s * l..(s + 1) * l];
        for (i, &a) in one_bit.iter().enumerate() {
            let h = h_hat[a] + complex_normal(rng, s2);
            let den = h.norm_sqr() * es + 1.0;
            row[i] = h * (es / den).sqrt();
            corr[i] += h * (4.0 / (PI * den)).sqrt();
        }
    }
    let inv = 1.0 / err_samples as f64;
    for c in &mut corr {
        *c *= inv;
    }
    let mut pair = vec![C64::new(0.0, 0.0); l * l];
    for s in 0..err_samples {
        let row = &u[s * l..(s + 1) * l];
        for i in 0..l {
            for j in i + 1..l {
                pair[i * l + j] += arcsine_law(row[i] * row[j].conj());
            }
        }
    }

    let mut slot = vec![usize::MAX; n];
    for (i, &a) in one_bit.iter().enumerate() {
        slot[a] = i;
    }
    let r_rx = (0..n)
        .map(|a| {
            if delta.is_high_res(a) {
                h_hat[a] * es
            } else {
                corr[slot[a]] * es
            }
        })
        .collect();
    let r_rr = HermitianMatrix::from_upper(n, |a, b| {
        let (ha, hb) = (delta.is_high_res(a), delta.is_high_res(b));
        if a == b {
            let d = if ha {
                1.0 + (h_hat[a].norm_sqr() + s2) * es
            } else {
                2.0
            };
            return C64::new(d, 0.0);
        }
        match (ha, hb) {
            (true, true) => h_hat[a] * h_hat[b].conj() * es,
            (true, false) => h_hat[a] * corr[slot[b]].conj() * es,
            (false, true) => corr[slot[a]] * h_hat[b].conj() * es,
            (false, false) => pair[slot[a] * l + slot[b]] * inv,
        }
    });
    Ok(MomentPair { r_rx, r_rr, es })
}

/// Ergodic bounds with imperfect CSI, without the training prefactor.
pub fn imperfect_bounds_raw(
    cfg: &TrainingConfig,
    es: f64,
    sigma_t_sq: f64,
    trials: usize,
    err_samples: usize,
    rng: SimRng,
    exec: &Executor,
) -> Result<ErgodicBounds> {
    check_es(es)?;
    if trials < 2 {
        return Err(Error::domain("at least two trials are needed"));
    }
    let (n, k) = (cfg.n_antennas, cfg.k);
    let (kappas, rejections) = run_trials(trials, rng, exec, |gen| {
        let (est, _) = draw_estimated(n, sigma_t_sq, gen)?;
        let delta = switch_strongest(&est.h_hat, k);
        let m = imperfect_moments(&est, &delta, es, err_samples, gen)?;
        kappa_with_factor(&m.r_rr.cholesky()?, &m.r_rx, es)
    })?;
    ErgodicBounds::from_kappas(&kappas, 1, rejections)
}

/// Ergodic bounds with imperfect CSI, scaled by the training prefactor.
pub fn imperfect_bounds(
    cfg: &TrainingConfig,
    es: f64,
    sigma_t_sq: f64,
    trials: usize,
    err_samples: usize,
    rng: SimRng,
    exec: &Executor,
) -> Result<ErgodicBounds> {
    Ok(
        imperfect_bounds_raw(cfg, es, sigma_t_sq, trials, err_samples, rng, exec)?
            .scaled(cfg.prefactor()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmi::kappa_opt;

    fn exec() -> Executor {
        Executor::serial()
    }

    #[test]
    fn conventional_bounds_bracket() {
        let cfg = ErgodicConfig::new(8, 8, 1.0, 400);
        let b = ergodic_bounds(&cfg, SimRng::new(1), &exec()).unwrap();
        assert!(b.lower_nats <= b.upper_nats + 1e-9);
        let cap = ergodic_capacity_conventional(8, 1.0, 400, SimRng::new(1), &exec()).unwrap();
        // Same draws: the upper bound is the conventional capacity estimate.
        assert!((b.upper_nats - cap.value).abs() < 1e-12);
        assert!((b.std_err_upper - cap.std_err).abs() < 1e-12);
    }

    #[test]
    fn fixed_channel_has_no_gap() {
        let h = SimoChannel::from_real(&[1.0, 0.5, -0.7]).unwrap();
        let cfg = ErgodicConfig::new(3, 1, 2.0, 10);
        let fixed = h.clone();
        let b = ergodic_bounds_with(&cfg, SimRng::new(1), &exec(), move |_| fixed.clone()).unwrap();
        let gmi = kappa_opt(&h, &switch_strongest(&h, 1), 2.0)
            .unwrap()
            .gmi_nats;
        assert!((b.lower_nats - gmi).abs() < 1e-12);
        assert!((b.upper_nats - gmi).abs() < 1e-12);
        assert!(b.std_err_upper < 1e-12);
    }

    #[test]
    fn reproducible_across_workers() {
        let mut cfg = ErgodicConfig::new(10, 3, 3.0, 64);
        cfg.policy = SwitchPolicy::Random;
        let a = ergodic_bounds(&cfg, SimRng::new(77), &exec()).unwrap();
        let b = ergodic_bounds(&cfg, SimRng::new(77), &Executor::new(3).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rejections, 0);
    }

    #[test]
    fn invalid_configurations() {
        let bad = [
            ErgodicConfig::new(4, 5, 1.0, 10),
            ErgodicConfig::new(4, 2, -1.0, 10),
            ErgodicConfig::new(4, 2, 1.0, 1),
        ];
        for cfg in bad {
            assert!(ergodic_bounds(&cfg, SimRng::new(0), &exec()).is_err());
        }
    }

    #[test]
    fn rejections_abort_the_run() {
        let cfg = ErgodicConfig::new(2, 0, 1e17, 10);
        // Identical one-bit antennas whose normalized correlation rounds to one.
        let h = SimoChannel::from_real(&[1.0, 1.0]).unwrap();
        let err = ergodic_bounds_with(&cfg, SimRng::new(0), &exec(), move |_| h.clone());
        assert!(
            matches!(err, Err(Error::TooManyRejections { .. })),
            "{err:?}"
        );
    }

    #[test]
    fn scaling_and_gap() {
        let b = ErgodicBounds::from_kappas(&[0.5, 0.5, 0.5, 0.5], 2, 0).unwrap();
        assert_eq!(b.trials, 2);
        assert!((b.lower_nats - 2f64.ln()).abs() < 1e-15);
        assert_eq!(b.relative_gap(), 0.0);
        let s = b.scaled(0.5);
        assert!((s.upper_nats - 2f64.ln() / 2.0).abs() < 1e-15);
        assert!(ErgodicBounds::from_kappas(&[0.5], 1, 0).is_err());
        assert!(ErgodicBounds::from_kappas(&[0.5, 0.5, 0.5], 2, 0).is_err());
    }

    #[test]
    fn training_prefactor() {
        let cfg = TrainingConfig::new(196, 100, 20).unwrap();
        assert_eq!(cfg.training_symbols(), 5);
        assert_eq!(cfg.prefactor(), 191.0 / 196.0);
        assert_eq!(
            TrainingConfig::new(196, 100, 30)
                .unwrap()
                .training_symbols(),
            4
        );
        assert!(TrainingConfig::new(5, 100, 20).is_err());
        assert!(TrainingConfig::new(196, 100, 0).is_err());
        assert!(TrainingConfig::new(196, 10, 11).is_err());
    }

    #[test]
    fn perfect_estimate_reduces_to_plain_moments() {
        let mut gen = SimRng::new(4).generator();
        let h = draw_rayleigh(5, &mut gen);
        let delta = AdcSwitch::new(vec![true, false, true, false, false]);
        let est = EstimatedChannel::new(h.clone(), 0.0).unwrap();
        assert_eq!(
            imperfect_moments(&est, &delta, 2.0, 100, &mut gen).unwrap(),
            build_moments(&h, &delta, 2.0).unwrap()
        );
    }

    #[test]
    fn analytic_entries_with_error() {
        let est = EstimatedChannel::new(SimoChannel::from_real(&[1.0, 1.0]).unwrap(), 0.1).unwrap();
        let m = imperfect_moments(
            &est,
            &AdcSwitch::all_high_res(2),
            1.0,
            10,
            &mut SimRng::new(1).generator(),
        )
        .unwrap();
        assert!((m.r_rr.get(0, 0).re - 2.1).abs() < 1e-15);
        assert!((m.r_rr.get(1, 1).re - 2.1).abs() < 1e-15);
        assert_eq!(m.r_rr.get(0, 1), C64::new(1.0, 0.0));
        assert_eq!(m.r_rx[0], C64::new(1.0, 0.0));
    }

    /// Independent estimate of `E[(1 + e) g(1 + e)]` for a single one-bit antenna.
    fn single_one_bit_r_rx(samples: usize, seed: u64) -> Estimate {
        let mut gen = SimRng::new(seed).generator();
        let v: Vec<f64> = (0..samples)
            .map(|_| {
                let h = C64::new(1.0, 0.0) + complex_normal(&mut gen, 0.1);
                (h * (4.0 / (PI * (h.norm_sqr() + 1.0))).sqrt()).re
            })
            .collect();
        Estimate::from_samples(&v)
    }

    #[test]
    fn one_bit_entry_converges() {
        let est = EstimatedChannel::new(SimoChannel::from_real(&[1.0]).unwrap(), 0.1).unwrap();
        let delta = AdcSwitch::all_one_bit(1);
        let reference = single_one_bit_r_rx(100_000, 99);
        for samples in [25_000, 50_000, 100_000] {
            let m = imperfect_moments(&est, &delta, 1.0, samples, &mut SimRng::new(5).generator())
                .unwrap();
            let se = reference.std_err * (100_000.0 / samples as f64).sqrt();
            let combined = (se.powi(2) + reference.std_err.powi(2)).sqrt();
            assert!((m.r_rx[0].re - reference.value).abs() < 3.0 * combined);
            assert!(m.r_rx[0].im.abs() < 3.0 * se);
        }
        // Below the error-free value sqrt(2/pi) because g is concave here.
        assert!(reference.value < (2.0 / PI).sqrt());
    }

    #[test]
    fn imperfect_bounds_without_error_match_perfect_csi() {
        let cfg = TrainingConfig::new(50, 6, 2).unwrap();
        let raw = imperfect_bounds_raw(&cfg, 2.0, 0.0, 20, 1, SimRng::new(3), &exec()).unwrap();
        let same_draws = |gen: &mut ChaCha8Rng| draw_estimated(6, 0.0, gen).unwrap().1;
        let ergodic = ergodic_bounds_with(
            &ErgodicConfig::new(6, 2, 2.0, 20),
            SimRng::new(3),
            &exec(),
            same_draws,
        )
        .unwrap();
        assert_eq!(raw, ergodic);
        let scaled = imperfect_bounds(&cfg, 2.0, 0.0, 20, 1, SimRng::new(3), &exec()).unwrap();
        assert_eq!(scaled, raw.scaled(cfg.prefactor()));
    }
}
