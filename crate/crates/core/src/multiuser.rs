//! Multi-user uplink: `M` single-antenna users share the `N`-antenna receiver.
//!
//! Each user is decoded separately while the others count as noise. The
//! moment formulas are the single-user ones with `|h_n|^2` replaced by the
//! column energy `||h_n||^2 = sum_j |h_jn|^2` and `h_n h_m*` by
//! `sum_j h_jn h_jm*`; only `R_rx` depends on the decoded user. Symbol energy
//! is per user: a total SNR is split as `es = snr / M`.

use rand::Rng;

use crate::channel::{top_k, AdcSwitch, SimoChannel};
use crate::ergodic::{check_counts, run_trials, ErgodicBounds};
use crate::exec::Executor;
use crate::gmi::{
    assemble_r_rr, assemble_r_rx, check_es, gmi_from_kappa, kappa_with_factor, AntennaTerms,
    MomentPair,
};
use crate::numerics::{Cholesky, HermitianMatrix};
use crate::rng::complex_normal;
use crate::{Error, Result, SimRng, C64};

pub use crate::channel::switch_random;

/// Channel matrix `H` with `M` users (rows) and `N` antennas (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct MultiUserChannel {
    users: usize,
    antennas: usize,
    data: Vec<C64>,
}

impl MultiUserChannel {
    /// Builds `H` from one row of antenna gains per user.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let users = rows.len();
        let antennas = rows.first().map_or(0, Vec::len);
        if users == 0 || antennas == 0 {
            return Err(Error::domain(
                "channel needs at least one user and one antenna",
            ));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != antennas) {
            return Err(Error::DimensionMismatch {
                expected: antennas,
                found: bad.len(),
            });
        }
        let data: Vec<C64> = rows.concat();
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::domain("channel gains must be finite"));
        }
        Ok(MultiUserChannel {
            users,
            antennas,
            data,
        })
    }

    pub fn from_single(h: &SimoChannel) -> Self {
        MultiUserChannel {
            users: 1,
            antennas: h.len(),
            data: h.gains().to_vec(),
        }
    }

    /// `M` users with i.i.d. `CN(0, 1)` gains to `n` antennas.
    pub fn draw_rayleigh<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Self {
        assert!(
            n >= 1 && m >= 1,
            "channel needs at least one user and one antenna"
        );
        MultiUserChannel {
            users: m,
            antennas: n,
            data: (0..n * m).map(|_| complex_normal(rng, 1.0)).collect(),
        }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    #[inline]
    pub fn get(&self, j: usize, n: usize) -> C64 {
        self.data[j * self.antennas + n]
    }

    /// Gains of user `j` to every antenna.
    pub fn user(&self, j: usize) -> &[C64] {
        &self.data[j * self.antennas..(j + 1) * self.antennas]
    }

    /// `||h_n||^2` for every antenna `n`.
    pub fn column_energies(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.antennas];
        for j in 0..self.users {
            for (acc, z) in e.iter_mut().zip(self.user(j)) {
                *acc += z.norm_sqr();
            }
        }
        e
    }

    /// `sum_j h_jn h_jm*`.
    #[inline]
    pub fn column_inner(&self, n: usize, m: usize) -> C64 {
        (0..self.users)
            .map(|j| self.get(j, n) * self.get(j, m).conj())
            .sum()
    }

    /// Keeps only the given antennas, in the given order.
    pub fn restrict(&self, antennas: &[usize]) -> Self {
        let rows: Vec<Vec<C64>> = (0..self.users)
            .map(|j| antennas.iter().map(|&n| self.get(j, n)).collect())
            .collect();
        MultiUserChannel {
            users: self.users,
            antennas: antennas.len(),
            data: rows.concat(),
        }
    }

    /// Reorders users so that new user `i` is old user `order[i]`.
    pub fn permute_users(&self, order: &[usize]) -> Self {
        let rows: Vec<Vec<C64>> = order.iter().map(|&j| self.user(j).to_vec()).collect();
        MultiUserChannel {
            users: order.len(),
            antennas: self.antennas,
            data: rows.concat(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MuGmiResult {
    pub kappa_per_user: Vec<f64>,
    pub per_user_gmi_nats: Vec<f64>,
}

impl MuGmiResult {
    fn from_kappas(kappa_per_user: Vec<f64>) -> Self {
        let per_user_gmi_nats = kappa_per_user.iter().map(|&k| gmi_from_kappa(k)).collect();
        MuGmiResult {
            kappa_per_user,
            per_user_gmi_nats,
        }
    }

    pub fn sum_gmi_nats(&self) -> f64 {
        self.per_user_gmi_nats.iter().sum()
    }
}

fn check_switch(hh: &MultiUserChannel, delta: &AdcSwitch, es: f64) -> Result<()> {
    if delta.len() != hh.antennas {
        return Err(Error::DimensionMismatch {
            expected: hh.antennas,
            found: delta.len(),
        });
    }
    check_es(es)
}

fn mu_terms(hh: &MultiUserChannel, es: f64) -> AntennaTerms {
    AntennaTerms::undithered(hh.column_energies().into_iter().map(|e| e * es).collect())
}

fn mu_r_rx(
    hh: &MultiUserChannel,
    delta: &AdcSwitch,
    terms: &AntennaTerms,
    es: f64,
    j: usize,
) -> Vec<C64> {
    let row = hh.user(j);
    assemble_r_rx(delta, terms, |n| row[n] * es)
}

fn mu_r_rr(
    hh: &MultiUserChannel,
    delta: &AdcSwitch,
    terms: &AntennaTerms,
    es: f64,
) -> HermitianMatrix {
    assemble_r_rr(delta, terms, |n, m| hh.column_inner(n, m) * es)
}

/// Moments for decoding user `j`.
pub fn build_mu_moments(
    hh: &MultiUserChannel,
    delta: &AdcSwitch,
    es_per_user: f64,
    j: usize,
) -> Result<MomentPair> {
    check_switch(hh, delta, es_per_user)?;
    if j >= hh.users {
        return Err(Error::domain(format!(
            "user {j} out of range for {} users",
            hh.users
        )));
    }
    let terms = mu_terms(hh, es_per_user);
    Ok(MomentPair {
        r_rx: mu_r_rx(hh, delta, &terms, es_per_user, j),
        r_rr: mu_r_rr(hh, delta, &terms, es_per_user),
        es: es_per_user,
    })
}

/// Per-user `kappa` and GMI, all users sharing one factorization of `R_rr`.
pub fn mu_kappa(hh: &MultiUserChannel, delta: &AdcSwitch, es_per_user: f64) -> Result<MuGmiResult> {
    check_switch(hh, delta, es_per_user)?;
    let terms = mu_terms(hh, es_per_user);
    let chol = Cholesky::factor(&mu_r_rr(hh, delta, &terms, es_per_user))?;
    let kappas = (0..hh.users)
        .map(|j| {
            kappa_with_factor(
                &chol,
                &mu_r_rx(hh, delta, &terms, es_per_user, j),
                es_per_user,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MuGmiResult::from_kappas(kappas))
}

/// `sum_n (delta_n + (1 - delta_n) 2/pi) |h_jn|^2`.
pub fn mu_low_snr_slope(hh: &MultiUserChannel, delta: &AdcSwitch, j: usize) -> f64 {
    let h = SimoChannel::new(hh.user(j).to_vec()).expect("validated channel row");
    crate::asymptotics::low_snr_slope(&h, delta)
}

/// High-resolution ADCs on the `k` antennas with the largest column energy.
pub fn switch_norm_based(hh: &MultiUserChannel, k: usize) -> AdcSwitch {
    AdcSwitch::from_indices(hh.antennas, &top_k(&hh.column_energies(), k))
}

/// Multi-user ADC switch schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SwitchScheme {
    NormBased,
    Random,
}

impl SwitchScheme {
    pub fn name(self) -> &'static str {
        match self {
            SwitchScheme::NormBased => "norm",
            SwitchScheme::Random => "random",
        }
    }

    pub fn apply<R: Rng + ?Sized>(self, hh: &MultiUserChannel, k: usize, rng: &mut R) -> AdcSwitch {
        match self {
            SwitchScheme::NormBased => switch_norm_based(hh, k),
            SwitchScheme::Random => switch_random(hh.antennas, k, rng),
        }
    }
}

impl std::str::FromStr for SwitchScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "norm" => Ok(SwitchScheme::NormBased),
            "random" => Ok(SwitchScheme::Random),
            _ => Err(Error::domain(format!("unknown switch scheme {s:?}"))),
        }
    }
}

/// `K` norm-based antennas kept, all with high-resolution ADCs, MMSE combining.
pub fn mu_antenna_selection_baseline(
    hh: &MultiUserChannel,
    k: usize,
    es_per_user: f64,
) -> Result<MuGmiResult> {
    if k == 0 || k > hh.antennas {
        return Err(Error::domain(format!(
            "antenna selection needs 1 <= k <= {}, got {k}",
            hh.antennas
        )));
    }
    let kept = hh.restrict(&top_k(&hh.column_energies(), k));
    mu_kappa(&kept, &AdcSwitch::all_high_res(k), es_per_user)
}

/// Receivers compared in multi-user experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuReceiver {
    /// `K` high-resolution and `N - K` one-bit antennas.
    Mixed(SwitchScheme),
    /// `K` norm-based antennas, the rest switched off.
    AntennaSelection,
    /// All `N` antennas with high-resolution ADCs; `K` is ignored.
    Conventional,
}

impl MuReceiver {
    pub fn evaluate<R: Rng + ?Sized>(
        self,
        hh: &MultiUserChannel,
        k: usize,
        es_per_user: f64,
        rng: &mut R,
    ) -> Result<MuGmiResult> {
        match self {
            MuReceiver::Mixed(scheme) => mu_kappa(hh, &scheme.apply(hh, k, rng), es_per_user),
            MuReceiver::AntennaSelection => mu_antenna_selection_baseline(hh, k, es_per_user),
            MuReceiver::Conventional => {
                mu_kappa(hh, &AdcSwitch::all_high_res(hh.antennas), es_per_user)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuErgodicConfig {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    /// Total SNR `M es`.
    pub snr_total: f64,
    pub receiver: MuReceiver,
    pub trials: usize,
}

impl MuErgodicConfig {
    pub fn es_per_user(&self) -> f64 {
        self.snr_total / self.m as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuErgodicBounds {
    /// Per-user bounds, pooled over users and draws.
    pub per_user: ErgodicBounds,
    /// `M` times the mean per-user GMI.
    pub sum_rate_nats: f64,
    pub sum_rate_std_err: f64,
}

/// Ergodic per-user bounds over i.i.d. Rayleigh `H`.
///
/// Draw `t` uses substream `t`, so different receivers evaluated with the
/// same seed see the same channels.
pub fn mu_ergodic_bounds(
    cfg: &MuErgodicConfig,
    rng: SimRng,
    exec: &Executor,
) -> Result<MuErgodicBounds> {
    check_counts(cfg.n, cfg.k)?;
    if cfg.m == 0 {
        return Err(Error::domain("at least one user is needed"));
    }
    let es = cfg.es_per_user();
    check_es(es)?;
    let (rows, rejections) = run_trials(cfg.trials, rng, exec, |gen| {
        let hh = MultiUserChannel::draw_rayleigh(cfg.n, cfg.m, gen);
        Ok(cfg.receiver.evaluate(&hh, cfg.k, es, gen)?.kappa_per_user)
    })?;
    let per_user = ErgodicBounds::from_kappas(&rows.concat(), cfg.m, rejections)?;
    let m = cfg.m as f64;
    Ok(MuErgodicBounds {
        per_user,
        sum_rate_nats: m * per_user.upper_nats,
        sum_rate_std_err: m * per_user.std_err_upper,
    })
}
