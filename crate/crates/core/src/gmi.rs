//! Closed-form GMI of a fixed SIMO channel with a mixed-ADC receiver.
//!
//! The receiver observes `r_n = h_n x + z_n` on high-resolution antennas and
//! `r_n = sgn(h_n x + z_n)` on one-bit antennas, where `sgn` acts separately
//! on the real and imaginary parts. After a linear combiner `w`, the GMI of a
//! Gaussian codebook with nearest-neighbor decoding is
//! `-log(1 - kappa)`, with `kappa` the squared correlation coefficient between
//! `x` and `w^H r`. Everything needed for `kappa` sits in two moments: the
//! correlation vector `R_rx = E[r x*]` and the covariance `R_rr = E[r r^H]`.
//!
//! One-bit entries follow from two Gaussian identities: the correlation of a
//! Gaussian with its own sign, `E[S* sgn(S + T)] = s^2 sqrt(4 / (pi (s^2 + t^2)))`,
//! and the arcsine law `E[sgn(S) sgn(T)] = (2 / pi) asin(rho)`.

use std::f64::consts::PI;

use crate::channel::{switch_strongest, AdcSwitch, SimoChannel};
use crate::numerics::{clipped_arcsin, norm_sqr, Cholesky, HermitianMatrix};
use crate::{ComplexVector, Error, Result, C64};

/// Correlation vector and covariance matrix of the quantized observation.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentPair {
    pub r_rx: ComplexVector,
    pub r_rr: HermitianMatrix,
    /// Symbol energy; the noise variance is one.
    pub es: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmiResult {
    pub kappa: f64,
    pub gmi_nats: f64,
    /// Combiner `w = R_rr^-1 R_rx`.
    pub w: ComplexVector,
    /// Optimal decoder scaling `w^H R_rx / es`.
    pub a: C64,
}

/// `log(1 + kappa / (1 - kappa))`.
#[inline]
pub fn gmi_from_kappa(kappa: f64) -> f64 {
    -(-kappa).ln_1p()
}

/// Per-antenna ingredients of the moment formulas.
///
/// `power[n]` is the received signal power and `spread[n]` the total variance
/// seen by the quantizer of antenna `n`: `power + 1` normally, larger when a
/// dither is injected.
pub(crate) struct AntennaTerms {
    pub power: Vec<f64>,
    pub spread: Vec<f64>,
}

impl AntennaTerms {
    pub fn undithered(power: Vec<f64>) -> Self {
        let spread = power.iter().map(|p| p + 1.0).collect();
        AntennaTerms { power, spread }
    }

    /// `sqrt(4 / (pi * spread))`: gain of the sign quantizer on its input.
    #[inline]
    pub fn sign_gain(&self, n: usize) -> f64 {
        (4.0 / (PI * self.spread[n])).sqrt()
    }
}

/// `(4/pi) [asin(Re c) + i asin(Im c)]` for a normalized correlation `c`.
#[inline]
pub(crate) fn arcsine_law(c: C64) -> C64 {
    C64::new(clipped_arcsin(c.re), clipped_arcsin(c.im)) * (4.0 / PI)
}

/// `R_rx` given the unquantized correlation `gain(n) = E[y_n x*]`.
pub(crate) fn assemble_r_rx(
    delta: &AdcSwitch,
    terms: &AntennaTerms,
    gain: impl Fn(usize) -> C64,
) -> ComplexVector {
    (0..delta.len())
        .map(|n| {
            if delta.is_high_res(n) {
                gain(n)
            } else {
                gain(n) * terms.sign_gain(n)
            }
        })
        .collect()
}

/// `R_rr` given the unquantized cross-correlation `cross(n, m) = E[y_n y_m*]`
/// for `n < m`.
pub(crate) fn assemble_r_rr(
    delta: &AdcSwitch,
    terms: &AntennaTerms,
    cross: impl Fn(usize, usize) -> C64,
) -> HermitianMatrix {
    HermitianMatrix::from_upper(delta.len(), |n, m| {
        let (hn, hm) = (delta.is_high_res(n), delta.is_high_res(m));
        if n == m {
            return C64::new(if hn { 1.0 + terms.power[n] } else { 2.0 }, 0.0);
        }
        let c = cross(n, m);
        match (hn, hm) {
            (true, true) => c,
            (true, false) => c * terms.sign_gain(m),
            (false, true) => c * terms.sign_gain(n),
            (false, false) => arcsine_law(c / (terms.spread[n] * terms.spread[m]).sqrt()),
        }
    })
}

pub(crate) fn single_user_moments(
    h: &SimoChannel,
    delta: &AdcSwitch,
    es: f64,
    terms: &AntennaTerms,
) -> MomentPair {
    let g = h.gains();
    MomentPair {
        r_rx: assemble_r_rx(delta, terms, |n| g[n] * es),
        r_rr: assemble_r_rr(delta, terms, |n, m| g[n] * g[m].conj() * es),
        es,
    }
}

pub(crate) fn received_power(h: &SimoChannel, es: f64) -> Vec<f64> {
    h.gains().iter().map(|z| z.norm_sqr() * es).collect()
}

fn check_inputs(h: &SimoChannel, delta: &AdcSwitch, es: f64) -> Result<()> {
    if delta.len() != h.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            found: delta.len(),
        });
    }
    check_es(es)
}

pub(crate) fn check_es(es: f64) -> Result<()> {
    if es > 0.0 && es.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "symbol energy must be positive, got {es}"
        )))
    }
}

pub fn build_moments(h: &SimoChannel, delta: &AdcSwitch, es: f64) -> Result<MomentPair> {
    check_inputs(h, delta, es)?;
    let terms = AntennaTerms::undithered(received_power(h, es));
    Ok(single_user_moments(h, delta, es, &terms))
}

pub fn build_r_rx(h: &SimoChannel, delta: &AdcSwitch, es: f64) -> Result<ComplexVector> {
    Ok(build_moments(h, delta, es)?.r_rx)
}

pub fn build_r_rr(h: &SimoChannel, delta: &AdcSwitch, es: f64) -> Result<HermitianMatrix> {
    Ok(build_moments(h, delta, es)?.r_rr)
}

/// `kappa(w) = |w^H R_rx|^2 / (es w^H R_rr w)` for an arbitrary combiner.
pub fn kappa_given_w(moments: &MomentPair, w: &[C64]) -> Result<f64> {
    if w.len() != moments.r_rx.len() {
        return Err(Error::DimensionMismatch {
            expected: moments.r_rx.len(),
            found: w.len(),
        });
    }
    if norm_sqr(w) == 0.0 {
        return Err(Error::ZeroCombiner);
    }
    let corr: C64 = w.iter().zip(&moments.r_rx).map(|(a, b)| a.conj() * b).sum();
    let energy = moments.r_rr.form(w)?;
    Ok(corr.norm_sqr() / (moments.es * energy))
}

/// Optimal (LMMSE) combiner and its GMI for the given moments.
pub fn optimal_from_moments(moments: &MomentPair) -> Result<GmiResult> {
    let chol = moments.r_rr.cholesky()?;
    optimal_with_factor(&chol, &moments.r_rx, moments.es)
}

pub(crate) fn optimal_with_factor(chol: &Cholesky, r_rx: &[C64], es: f64) -> Result<GmiResult> {
    let w = chol.solve(r_rx)?;
    let kappa = kappa_with_factor(chol, r_rx, es)?;
    let a: C64 = w.iter().zip(r_rx).map(|(p, q)| p.conj() * q).sum::<C64>() / es;
    Ok(GmiResult {
        kappa,
        gmi_nats: gmi_from_kappa(kappa),
        w,
        a,
    })
}

/// `R_rx^H R_rr^-1 R_rx / es` without forming the combiner.
#[inline]
pub(crate) fn kappa_with_factor(chol: &Cholesky, r_rx: &[C64], es: f64) -> Result<f64> {
    let kappa = chol.quadratic_form(r_rx)? / es;
    debug_assert!(kappa < 1.0 + 1e-9, "kappa = {kappa}");
    Ok(kappa)
}

pub fn kappa_opt(h: &SimoChannel, delta: &AdcSwitch, es: f64) -> Result<GmiResult> {
    optimal_from_moments(&build_moments(h, delta, es)?)
}

/// Optimal `kappa` only; the hot path of every Monte Carlo loop.
pub fn kappa_opt_value(h: &SimoChannel, delta: &AdcSwitch, es: f64) -> Result<f64> {
    let m = build_moments(h, delta, es)?;
    kappa_with_factor(&m.r_rr.cholesky()?, &m.r_rx, es)
}

/// `log(1 + ||h||^2 es)`: every antenna with a high-resolution ADC pair.
pub fn capacity_conventional(h: &SimoChannel, es: f64) -> f64 {
    (h.norm_sqr() * es).ln_1p()
}

/// `log(1 + sum_{delta_n = 1} |h_n|^2 es)`: one-bit antennas discarded.
pub fn capacity_antenna_selection(h: &SimoChannel, delta: &AdcSwitch, es: f64) -> f64 {
    selected_snr(h, delta, es).ln_1p()
}

pub(crate) fn selected_snr(h: &SimoChannel, delta: &AdcSwitch, es: f64) -> f64 {
    h.gains()
        .iter()
        .zip(delta.as_slice())
        .filter(|(_, &d)| d)
        .map(|(z, _)| z.norm_sqr())
        .sum::<f64>()
        * es
}

/// Receiver architectures compared throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    /// `N` high-resolution RF chains.
    Conventional,
    /// `K` high-resolution RF chains on the strongest antennas, the rest off.
    AntennaSelection,
    /// `K` high-resolution and `N - K` one-bit antennas.
    Mixed,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [
        Architecture::Conventional,
        Architecture::AntennaSelection,
        Architecture::Mixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Conventional => "conventional",
            Architecture::AntennaSelection => "antenna_selection",
            Architecture::Mixed => "mixed",
        }
    }

    /// Rate in nats on a fixed channel, with the strongest-`k` switch.
    pub fn rate(self, h: &SimoChannel, k: usize, es: f64) -> Result<f64> {
        check_es(es)?;
        match self {
            Architecture::Conventional => Ok(capacity_conventional(h, es)),
            Architecture::AntennaSelection => {
                Ok(capacity_antenna_selection(h, &switch_strongest(h, k), es))
            }
            Architecture::Mixed => {
                kappa_opt_value(h, &switch_strongest(h, k), es).map(gmi_from_kappa)
            }
        }
    }
}

impl std::str::FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Architecture::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown architecture {s:?}")))
    }
}
