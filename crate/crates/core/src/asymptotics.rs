//! Low- and high-SNR limits of the mixed-ADC GMI.
//!
//! At low SNR the GMI grows linearly in `es` with slope
//! `sum_n (delta_n + (1 - delta_n) 2/pi) |h_n|^2`. At high SNR the one-bit
//! antennas saturate: their covariance tends to a matrix `B` that depends on
//! channel phases only, and the effective SNR approaches
//! `||p||^2 es + 4 q^H B^-1 q / (pi - 4 q^H B^-1 q)`, where `p` collects the
//! high-resolution gains and `q` the unit phasors of the one-bit gains.

use std::f64::consts::PI;

use crate::channel::{AdcSwitch, SimoChannel};
use crate::gmi::arcsine_law;
use crate::numerics::HermitianMatrix;
use crate::{Error, Result, C64};

/// `sum_n (delta_n + (1 - delta_n) 2/pi) |h_n|^2`.
pub fn low_snr_slope(h: &SimoChannel, delta: &AdcSwitch) -> f64 {
    h.gains()
        .iter()
        .zip(delta.as_slice())
        .map(|(z, &d)| if d { 1.0 } else { 2.0 / PI } * z.norm_sqr())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighSnrComponents {
    /// `||p||^2`: total gain of the high-resolution antennas.
    pub p_norm_sq: f64,
    /// `q^H B^-1 q` over the one-bit antennas; zero when there are none.
    pub q_form: f64,
}

impl HighSnrComponents {
    /// Limiting contribution of the one-bit antennas to the effective SNR.
    pub fn one_bit_snr(&self) -> f64 {
        4.0 * self.q_form / (PI - 4.0 * self.q_form)
    }

    /// High-SNR effective SNR `kappa / (1 - kappa)` with the `O(1/es)` terms dropped.
    pub fn effective_snr(&self, es: f64) -> f64 {
        self.p_norm_sq * es + self.one_bit_snr()
    }

    /// `log(1 + effective_snr(es))`.
    pub fn rate(&self, es: f64) -> f64 {
        self.effective_snr(es).ln_1p()
    }
}

/// Limiting one-bit covariance `B` for the given phasors.
pub fn limit_covariance(phasors: &[C64]) -> HermitianMatrix {
    HermitianMatrix::from_upper(phasors.len(), |n, m| {
        if n == m {
            C64::new(2.0, 0.0)
        } else {
            arcsine_law(phasors[n] * phasors[m].conj())
        }
    })
}

pub fn high_snr_components(h: &SimoChannel, delta: &AdcSwitch) -> Result<HighSnrComponents> {
    if delta.len() != h.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            found: delta.len(),
        });
    }
    let g = h.gains();
    let p_norm_sq = delta
        .high_res_indices()
        .iter()
        .map(|&n| g[n].norm_sqr())
        .sum();
    let mut q = Vec::with_capacity(delta.len() - delta.high_res_count());
    for n in delta.one_bit_indices() {
        let mag = g[n].norm();
        if mag == 0.0 {
            return Err(Error::ZeroGainOneBitAntenna { index: n });
        }
        q.push(g[n] / mag);
    }
    let q_form = if q.is_empty() {
        0.0
    } else {
        let chol = limit_covariance(&q).cholesky().map_err(|e| match e {
            Error::NotPositiveDefinite { .. } => Error::SingularLimitMatrix,
            other => other,
        })?;
        chol.quadratic_form(&q)?
    };
    Ok(HighSnrComponents { p_norm_sq, q_form })
}

/// GMI ceiling of a pure one-bit receiver: `log(1 + 4 qf / (pi - 4 qf))`.
pub fn one_bit_high_snr_limit(h: &SimoChannel) -> Result<f64> {
    let c = high_snr_components(h, &AdcSwitch::all_one_bit(h.len()))?;
    Ok(c.rate(0.0))
}
