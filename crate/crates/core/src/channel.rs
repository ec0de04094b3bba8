//! Single-user channel types, Rayleigh draws and ADC switch vectors.

use std::path::Path;

use rand::Rng;

use crate::numerics::norm_sqr;
use crate::rng::complex_normal;
use crate::{Error, Result, C64};

/// Complex gains `h` of a single-antenna user towards `N` receive antennas.
#[derive(Debug, Clone, PartialEq)]
pub struct SimoChannel {
    h: Vec<C64>,
}

impl SimoChannel {
    pub fn new(h: Vec<C64>) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::domain("channel needs at least one antenna"));
        }
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::domain("channel gains must be finite"));
        }
        Ok(SimoChannel { h })
    }

    /// Real-valued gains, mostly for tests and examples.
    pub fn from_real(gains: &[f64]) -> Result<Self> {
        Self::new(gains.iter().map(|&g| C64::new(g, 0.0)).collect())
    }

    pub fn gains(&self) -> &[C64] {
        &self.h
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.h)
    }

    /// Parses one antenna per line as `re im`. Blank lines and `#` comments
    /// are skipped.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut h = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 1,
                    message: format!("{s:?}: {e}"),
                })
            };
            match fields.as_slice() {
                [re, im] => h.push(C64::new(parse(re)?, parse(im)?)),
                _ => {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: format!("expected `re im`, found {} fields", fields.len()),
                    })
                }
            }
        }
        Self::new(h)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::domain(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_text(&text)
    }

    pub fn to_text(&self) -> String {
        self.h
            .iter()
            .map(|z| format!("{:e} {:e}\n", z.re, z.im))
            .collect()
    }
}

/// Assignment of high-resolution ADC pairs to antennas (`true` = high-res).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AdcSwitch {
    delta: Vec<bool>,
    high_res: usize,
}

impl AdcSwitch {
    pub fn new(delta: Vec<bool>) -> Self {
        let high_res = delta.iter().filter(|&&d| d).count();
        AdcSwitch { delta, high_res }
    }

    pub fn all_high_res(n: usize) -> Self {
        Self::new(vec![true; n])
    }

    pub fn all_one_bit(n: usize) -> Self {
        Self::new(vec![false; n])
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Self {
        let mut delta = vec![false; n];
        for &i in indices {
            delta[i] = true;
        }
        Self::new(delta)
    }

    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    /// `K`, the number of high-resolution antennas.
    pub fn high_res_count(&self) -> usize {
        self.high_res
    }

    #[inline]
    pub fn is_high_res(&self, n: usize) -> bool {
        self.delta[n]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.delta
    }

    pub fn high_res_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&n| self.delta[n]).collect()
    }

    pub fn one_bit_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&n| !self.delta[n]).collect()
    }
}

/// Channel estimate `h_hat` with error variance `sigma_t_sq` per antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedChannel {
    pub h_hat: SimoChannel,
    pub sigma_t_sq: f64,
}

impl EstimatedChannel {
    pub fn new(h_hat: SimoChannel, sigma_t_sq: f64) -> Result<Self> {
        check_error_variance(sigma_t_sq)?;
        Ok(EstimatedChannel { h_hat, sigma_t_sq })
    }
}

fn check_error_variance(sigma_t_sq: f64) -> Result<()> {
    if (0.0..=1.0).contains(&sigma_t_sq) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "estimation error variance must lie in [0, 1], got {sigma_t_sq}"
        )))
    }
}

/// `n` i.i.d. `CN(0, 1)` gains.
pub fn draw_rayleigh<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SimoChannel {
    assert!(n >= 1, "channel needs at least one antenna");
    SimoChannel {
        h: (0..n).map(|_| complex_normal(rng, 1.0)).collect(),
    }
}

/// Draws an MMSE estimate `h_hat ~ CN(0, 1 - s)` and the true channel
/// `h = h_hat + e` with independent error `e ~ CN(0, s)`.
pub fn draw_estimated<R: Rng + ?Sized>(
    n: usize,
    sigma_t_sq: f64,
    rng: &mut R,
) -> Result<(EstimatedChannel, SimoChannel)> {
    check_error_variance(sigma_t_sq)?;
    if n == 0 {
        return Err(Error::domain("channel needs at least one antenna"));
    }
    let mut h_hat = Vec::with_capacity(n);
    let mut h = Vec::with_capacity(n);
    for _ in 0..n {
        let est = complex_normal(rng, 1.0 - sigma_t_sq);
        let err = complex_normal(rng, sigma_t_sq);
        h_hat.push(est);
        h.push(est + err);
    }
    Ok((
        EstimatedChannel {
            h_hat: SimoChannel { h: h_hat },
            sigma_t_sq,
        },
        SimoChannel { h },
    ))
}

/// Indices of the `k` largest values, ties broken by lowest index.
pub(crate) fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    assert!(
        k <= values.len(),
        "k = {k} exceeds {} antennas",
        values.len()
    );
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    order
}

/// High-resolution ADCs on the `k` antennas with the largest `|h_n|^2`.
pub fn switch_strongest(h: &SimoChannel, k: usize) -> AdcSwitch {
    let power: Vec<f64> = h.gains().iter().map(|z| z.norm_sqr()).collect();
    AdcSwitch::from_indices(h.len(), &top_k(&power, k))
}

/// High-resolution ADCs on a uniformly random `k`-subset of `n` antennas.
pub fn switch_random<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> AdcSwitch {
    assert!(k <= n, "k = {k} exceeds {n} antennas");
    let picked = rand::seq::index::sample(rng, n, k);
    AdcSwitch::from_indices(n, &picked.into_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SimRng;

    #[test]
    fn random_switch_is_uniform() {
        let (n, k, draws) = (10, 3, 100_000);
        let mut rng = SimRng::new(4).generator();
        let mut counts = vec![0u32; n];
        for _ in 0..draws {
            let delta = switch_random(n, k, &mut rng);
            assert_eq!(delta.high_res_count(), k);
            for i in delta.high_res_indices() {
                counts[i] += 1;
            }
        }
        let p = k as f64 / n as f64;
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        for c in counts {
            assert!((c as f64 / draws as f64 - p).abs() < 3.0 * sigma);
        }
        assert_eq!(switch_random(n, 0, &mut rng).high_res_count(), 0);
        let a = switch_random(n, k, &mut SimRng::new(8).generator());
        let b = switch_random(n, k, &mut SimRng::new(8).generator());
        assert_eq!(a, b);
    }
    use proptest::prelude::*;

    #[test]
    fn rayleigh_statistics() {
        let mut rng = SimRng::new(11).generator();
        let h = draw_rayleigh(1_000_000, &mut rng);
        let n = h.len() as f64;
        let power = h.norm_sqr() / n;
        let mean: C64 = h.gains().iter().sum::<C64>() / n;
        assert!((power - 1.0).abs() < 0.005, "power {power}");
        assert!(
            mean.re.abs() < 0.005 && mean.im.abs() < 0.005,
            "mean {mean}"
        );
        let re_var = h.gains().iter().map(|z| z.re * z.re).sum::<f64>() / n;
        assert!((re_var - 0.5).abs() < 0.005);
    }

    #[test]
    fn rayleigh_is_deterministic() {
        let a = draw_rayleigh(8, &mut SimRng::new(3).generator());
        let b = draw_rayleigh(8, &mut SimRng::new(3).generator());
        assert_eq!(a, b);
    }

    #[test]
    fn estimate_decomposition() {
        let mut rng = SimRng::new(5).generator();
        let (est, h) = draw_estimated(16, 0.0, &mut rng).unwrap();
        assert_eq!(est.h_hat, h);

        let (est, _) = draw_estimated(16, 1.0, &mut rng).unwrap();
        assert!(est.h_hat.gains().iter().all(|z| z.norm() == 0.0));

        assert!(draw_estimated(4, 1.5, &mut rng).is_err());
        assert!(draw_estimated(4, -0.1, &mut rng).is_err());
    }

    #[test]
    fn estimation_error_statistics() {
        let mut rng = SimRng::new(9).generator();
        let n = 1_000_000;
        let (est, h) = draw_estimated(n, 0.1, &mut rng).unwrap();
        let err: Vec<C64> = h
            .gains()
            .iter()
            .zip(est.h_hat.gains())
            .map(|(a, b)| a - b)
            .collect();
        let var = norm_sqr(&err) / n as f64;
        assert!((var - 0.1).abs() < 0.002, "error variance {var}");
        // Independence: E[h_hat * conj(e)] = 0 with std sqrt(0.9 * 0.1 / n) per draw.
        let cross: C64 = est
            .h_hat
            .gains()
            .iter()
            .zip(&err)
            .map(|(a, e)| a * e.conj())
            .sum::<C64>()
            / n as f64;
        let sigma = (0.9f64 * 0.1 / 2.0 / n as f64).sqrt();
        assert!(
            cross.re.abs() < 3.0 * sigma && cross.im.abs() < 3.0 * sigma,
            "{cross}"
        );
    }

    #[test]
    fn strongest_selection() {
        let h = SimoChannel::from_real(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(switch_strongest(&h, 2).as_slice(), &[false, true, true]);
        assert_eq!(switch_strongest(&h, 0).as_slice(), &[false; 3]);
        assert_eq!(switch_strongest(&h, 3).as_slice(), &[true; 3]);
        let tie = SimoChannel::from_real(&[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(switch_strongest(&tie, 2).as_slice(), &[true, false, true]);
    }

    #[test]
    fn channel_text_format() {
        let h = SimoChannel::parse_text("# gains\n1 0\n\n0.5 -2e-1 # second\n").unwrap();
        assert_eq!(h.gains(), &[C64::new(1.0, 0.0), C64::new(0.5, -0.2)]);
        assert_eq!(SimoChannel::parse_text(&h.to_text()).unwrap(), h);
        assert!(matches!(
            SimoChannel::parse_text("1 2 3"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(SimoChannel::parse_text("# nothing").is_err());
        assert!(SimoChannel::parse_text("x 1").is_err());
    }

    proptest! {
        #[test]
        fn strongest_has_exactly_k(gains in prop::collection::vec(0.0f64..3.0, 1..40), k_frac in 0.0f64..=1.0) {
            let h = SimoChannel::from_real(&gains).unwrap();
            let k = (k_frac * h.len() as f64).floor() as usize;
            let delta = switch_strongest(&h, k);
            prop_assert_eq!(delta.high_res_count(), k);
            // Every selected antenna is at least as strong as every unselected one.
            let sel_min = delta.high_res_indices().iter().map(|&i| gains[i]).fold(f64::INFINITY, f64::min);
            let rest_max = delta.one_bit_indices().iter().map(|&i| gains[i]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(k == 0 || k == h.len() || sel_min >= rest_max);
        }
    }
}
