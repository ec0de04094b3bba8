//! Brute-force Monte Carlo estimates of the defining expectations.
//!
//! Nothing here uses the closed forms: samples of the input `x`, noise `z`
//! and dither are pushed through the actual quantizers, and `kappa`, `R_rx`
//! and `R_rr` are estimated as plain sample averages. Samples are processed in
//! fixed-size blocks, block `b` on substream `b`, so estimates do not depend
//! on the worker count.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::channel::{AdcSwitch, SimoChannel};
use crate::dithering::{dithered_moments, DitherPolicy};
use crate::exec::Executor;
use crate::gmi::{build_moments, optimal_from_moments, MomentPair};
use crate::multiuser::{build_mu_moments, MultiUserChannel};
use crate::numerics::{check_dim, Estimate};
use crate::rng::complex_normal;
use crate::{Error, Result, SimRng, C64};

const BLOCK: usize = 1 << 14;
const MIN_SAMPLES: usize = 1000;

/// Estimates of the real and imaginary parts of a complex mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEstimate {
    pub re: Estimate,
    pub im: Estimate,
}

impl ComplexEstimate {
    pub fn value(&self) -> C64 {
        C64::new(self.re.value, self.im.value)
    }

    /// Larger of the two component z-scores, in absolute value.
    pub fn max_abs_z(&self, truth: C64) -> f64 {
        self.re
            .z_score(truth.re)
            .abs()
            .max(self.im.z_score(truth.im).abs())
    }
}

/// Received-signal model: `M` users with `CN(0, es)` inputs, unit noise,
/// optional dither on one-bit antennas, and the user whose input is correlated.
#[derive(Debug, Clone)]
pub struct Scenario {
    hh: MultiUserChannel,
    delta: AdcSwitch,
    es: f64,
    dither: Option<DitherPolicy>,
    user: usize,
}

impl Scenario {
    pub fn single(h: &SimoChannel, delta: &AdcSwitch, es: f64) -> Result<Self> {
        Self::multi(&MultiUserChannel::from_single(h), delta, es, 0)
    }

    pub fn multi(hh: &MultiUserChannel, delta: &AdcSwitch, es: f64, user: usize) -> Result<Self> {
        check_dim(hh.antennas(), delta.len())?;
        if user >= hh.users() {
            return Err(Error::domain(format!("user {user} out of range")));
        }
        if !(es > 0.0 && es.is_finite()) {
            return Err(Error::domain(format!(
                "symbol energy must be positive, got {es}"
            )));
        }
        Ok(Scenario {
            hh: hh.clone(),
            delta: delta.clone(),
            es,
            dither: None,
            user,
        })
    }

    /// Adds Gaussian dither; only single-user scenarios have closed forms for it.
    pub fn with_dither(mut self, policy: DitherPolicy) -> Self {
        self.dither = Some(policy);
        self
    }

    pub fn antennas(&self) -> usize {
        self.hh.antennas()
    }

    /// The closed-form moments this scenario is meant to validate.
    pub fn closed_form(&self) -> Result<MomentPair> {
        match (&self.dither, self.hh.users()) {
            (None, 1) => build_moments(&self.single_channel(), &self.delta, self.es),
            (Some(p), 1) => dithered_moments(&self.single_channel(), &self.delta, self.es, p),
            (None, _) => build_mu_moments(&self.hh, &self.delta, self.es, self.user),
            (Some(_), _) => Err(Error::domain(
                "dithering is only modelled for a single user",
            )),
        }
    }

    fn single_channel(&self) -> SimoChannel {
        SimoChannel::new(self.hh.user(0).to_vec()).expect("validated channel")
    }

    fn dither_variances(&self) -> Vec<f64> {
        let energy = self.hh.column_energies();
        (0..self.antennas())
            .map(|n| match &self.dither {
                Some(p) => p.noise_variance(self.delta.is_high_res(n), energy[n] * self.es),
                None => 0.0,
            })
            .collect()
    }

    /// Draws one observation into `r` and returns the input of `self.user`.
    fn draw<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        dither: &[f64],
        x: &mut [C64],
        r: &mut [C64],
    ) -> C64 {
        for xi in x.iter_mut() {
            *xi = complex_normal(rng, self.es);
        }
        for (n, rn) in r.iter_mut().enumerate() {
            let mut y: C64 = (0..x.len()).map(|j| self.hh.get(j, n) * x[j]).sum();
            y += complex_normal(rng, 1.0);
            *rn = if self.delta.is_high_res(n) {
                y
            } else {
                if dither[n] > 0.0 {
                    y += complex_normal(rng, dither[n]);
                }
                sgn(y)
            };
        }
        x[self.user]
    }
}

/// `sgn(re) + i sgn(im)` with `sgn(0) = +1`.
#[inline]
pub fn sgn(z: C64) -> C64 {
    let s = |v: f64| if v >= 0.0 { 1.0 } else { -1.0 };
    C64::new(s(z.re), s(z.im))
}

/// Running means and co-moments of a fixed number of real variables.
#[derive(Debug, Clone)]
struct CoMoments {
    count: f64,
    mean: Vec<f64>,
    /// Sum of outer products of deviations, row-major.
    co: Vec<f64>,
}

impl CoMoments {
    fn new(dim: usize) -> Self {
        CoMoments {
            count: 0.0,
            mean: vec![0.0; dim],
            co: vec![0.0; dim * dim],
        }
    }

    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn push(&mut self, x: &[f64], delta: &mut [f64]) {
        let d = self.dim();
        self.count += 1.0;
        for i in 0..d {
            delta[i] = x[i] - self.mean[i];
            self.mean[i] += delta[i] / self.count;
        }
        for i in 0..d {
            let after = x[i] - self.mean[i];
            for j in 0..d {
                self.co[i * d + j] += after * delta[j];
            }
        }
    }

    /// Chan et al. pairwise merge.
    fn merge(&mut self, other: &CoMoments) {
        if other.count == 0.0 {
            return;
        }
        let d = self.dim();
        let total = self.count + other.count;
        let diff: Vec<f64> = (0..d).map(|i| other.mean[i] - self.mean[i]).collect();
        let w = self.count * other.count / total;
        for i in 0..d {
            for j in 0..d {
                self.co[i * d + j] += other.co[i * d + j] + diff[i] * diff[j] * w;
            }
            self.mean[i] += diff[i] * other.count / total;
        }
        self.count = total;
    }

    /// Covariance of the sample means.
    fn mean_cov(&self, i: usize, j: usize) -> f64 {
        self.co[i * self.dim() + j] / (self.count - 1.0) / self.count
    }
}

/// Per-variable means and variances only.
#[derive(Debug, Clone)]
struct Moments {
    count: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(dim: usize) -> Self {
        Moments {
            count: 0.0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    #[inline]
    fn push(&mut self, i: usize, x: f64) {
        // Callers push every variable once per sample, variable 0 first.
        if i == 0 {
            self.count += 1.0;
        }
        let d = x - self.mean[i];
        self.mean[i] += d / self.count;
        self.m2[i] += d * (x - self.mean[i]);
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0.0 {
            return;
        }
        let total = self.count + other.count;
        for i in 0..self.mean.len() {
            let diff = other.mean[i] - self.mean[i];
            self.m2[i] += other.m2[i] + diff * diff * self.count * other.count / total;
            self.mean[i] += diff * other.count / total;
        }
        self.count = total;
    }

    fn estimate(&self, i: usize) -> Estimate {
        let var = if self.count > 1.0 {
            self.m2[i] / (self.count - 1.0)
        } else {
            0.0
        };
        Estimate {
            value: self.mean[i],
            std_err: (var.max(0.0) / self.count).sqrt(),
        }
    }
}

/// Sampled `R_rx` and `R_rr`, the latter row-major with all `N^2` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimates {
    pub r_rx: Vec<ComplexEstimate>,
    pub r_rr: Vec<ComplexEstimate>,
}

/// Worst entry of a moment comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryComparison {
    /// Number of real components compared.
    pub components: usize,
    pub max_abs_z: f64,
    pub closed_form: f64,
    pub estimate: f64,
    pub std_err: f64,
}

impl MomentEstimates {
    /// Compares every real component against `m`. Components that are
    /// identically zero in the model (imaginary parts of the diagonal) are
    /// still checked but not counted.
    pub fn compare(&self, m: &MomentPair) -> EntryComparison {
        let n = m.r_rx.len();
        let mut worst = EntryComparison {
            components: 0,
            max_abs_z: 0.0,
            closed_form: 0.0,
            estimate: 0.0,
            std_err: 0.0,
        };
        let mut check = |est: &Estimate, truth: f64, counted: bool| {
            if counted {
                worst.components += 1;
            }
            let z = est.z_score(truth).abs();
            if z > worst.max_abs_z || (z.is_nan() && !worst.max_abs_z.is_nan()) {
                worst.max_abs_z = z;
                worst.closed_form = truth;
                worst.estimate = est.value;
                worst.std_err = est.std_err;
            }
        };
        for (e, t) in self.r_rx.iter().zip(&m.r_rx) {
            check(&e.re, t.re, true);
            check(&e.im, t.im, true);
        }
        for a in 0..n {
            for b in a..n {
                let (e, t) = (&self.r_rr[a * n + b], m.r_rr.get(a, b));
                check(&e.re, t.re, true);
                check(&e.im, t.im, a != b);
            }
        }
        worst
    }
}

/// Joint estimate of `kappa(w)` and the moments from one set of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRun {
    pub kappa: Estimate,
    pub moments: MomentEstimates,
}

struct BlockAcc {
    kappa: CoMoments,
    moments: Moments,
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::domain(format!(
            "at least {MIN_SAMPLES} samples are needed, got {samples}"
        )));
    }
    Ok(())
}

/// Samples `f = w^H r` and `r` together; `kappa` uses the delta method on
/// `(Re E[f* x], Im E[f* x], E|f|^2)`.
pub fn run_oracle(
    sc: &Scenario,
    w: &[C64],
    samples: usize,
    rng: SimRng,
    exec: &Executor,
) -> Result<OracleRun> {
    check_samples(samples)?;
    check_dim(sc.antennas(), w.len())?;
    if w.iter().all(|z| z.norm_sqr() == 0.0) {
        return Err(Error::ZeroCombiner);
    }
    let n = sc.antennas();
    let users = sc.hh.users();
    let dither = sc.dither_variances();
    let blocks = samples.div_ceil(BLOCK);
    // Variables: 2N for r x*, then 2 per upper-triangular r_a r_b*.
    let vars = 2 * n + n * (n + 1);
    let accs = exec.map(blocks, |b| {
        let count = BLOCK.min(samples - b * BLOCK);
        let mut gen = rng.substream(b as u64).generator();
        let mut acc = BlockAcc {
            kappa: CoMoments::new(3),
            moments: Moments::new(vars),
        };
        let mut x = vec![C64::new(0.0, 0.0); users];
        let mut r = vec![C64::new(0.0, 0.0); n];
        let mut scratch = [0.0; 3];
        for _ in 0..count {
            let xj = sc.draw(&mut gen, &dither, &mut x, &mut r);
            let f: C64 = w.iter().zip(&r).map(|(a, b)| a.conj() * b).sum();
            let fx = f.conj() * xj;
            acc.kappa.push(&[fx.re, fx.im, f.norm_sqr()], &mut scratch);
            let mut v = 0;
            for rn in &r {
                let c = rn * xj.conj();
                acc.moments.push(v, c.re);
                acc.moments.push(v + 1, c.im);
                v += 2;
            }
            for a in 0..n {
                for b in a..n {
                    let c = r[a] * r[b].conj();
                    acc.moments.push(v, c.re);
                    acc.moments.push(v + 1, c.im);
                    v += 2;
                }
            }
        }
        acc
    });
    let mut iter = accs.into_iter();
    let mut total = iter.next().expect("at least one block");
    for acc in iter {
        total.kappa.merge(&acc.kappa);
        total.moments.merge(&acc.moments);
    }

    let k = &total.kappa;
    let (a_re, a_im, e_f) = (k.mean[0], k.mean[1], k.mean[2]);
    let es = sc.es;
    let value = (a_re * a_re + a_im * a_im) / (es * e_f);
    let grad = [
        2.0 * a_re / (es * e_f),
        2.0 * a_im / (es * e_f),
        -value / e_f,
    ];
    let mut var = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            var += grad[i] * grad[j] * k.mean_cov(i, j);
        }
    }
    let kappa = Estimate {
        value,
        std_err: var.max(0.0).sqrt(),
    };

    let m = &total.moments;
    let complex = |v: usize| ComplexEstimate {
        re: m.estimate(v),
        im: m.estimate(v + 1),
    };
    let r_rx = (0..n).map(|i| complex(2 * i)).collect();
    let mut r_rr = vec![complex(0); n * n];
    let mut v = 2 * n;
    for a in 0..n {
        for b in a..n {
            let e = complex(v);
            r_rr[a * n + b] = e;
            r_rr[b * n + a] = ComplexEstimate {
                re: e.re,
                im: Estimate {
                    value: -e.im.value,
                    std_err: e.im.std_err,
                },
            };
            v += 2;
        }
    }
    Ok(OracleRun {
        kappa,
        moments: MomentEstimates { r_rx, r_rr },
    })
}

/// Monte Carlo `kappa(w)` for a single-user channel, optionally dithered.
#[allow(clippy::too_many_arguments)]
pub fn estimate_kappa_mc(
    h: &SimoChannel,
    delta: &AdcSwitch,
    w: &[C64],
    es: f64,
    dither: Option<DitherPolicy>,
    samples: usize,
    rng: SimRng,
    exec: &Executor,
) -> Result<Estimate> {
    let mut sc = Scenario::single(h, delta, es)?;
    sc.dither = dither;
    Ok(run_oracle(&sc, w, samples, rng, exec)?.kappa)
}

/// Monte Carlo `kappa(w)` of user `j` with the other users as interference.
#[allow(clippy::too_many_arguments)]
pub fn estimate_mu_kappa_mc(
    hh: &MultiUserChannel,
    delta: &AdcSwitch,
    w: &[C64],
    es_per_user: f64,
    j: usize,
    samples: usize,
    rng: SimRng,
    exec: &Executor,
) -> Result<Estimate> {
    let sc = Scenario::multi(hh, delta, es_per_user, j)?;
    Ok(run_oracle(&sc, w, samples, rng, exec)?.kappa)
}

/// Sample mean of `sgn(S) sgn(T)` for standard normals with correlation `rho`.
pub fn estimate_sign_correlation(rho: f64, samples: usize, rng: SimRng) -> Result<Estimate> {
    check_samples(samples)?;
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::domain(format!(
            "correlation must lie in [-1, 1], got {rho}"
        )));
    }
    let mut gen = rng.generator();
    let c = (1.0 - rho * rho).sqrt();
    let mut sum = 0.0;
    for _ in 0..samples {
        let s: f64 = StandardNormal.sample(&mut gen);
        let t = if c == 0.0 {
            rho * s
        } else {
            let u: f64 = StandardNormal.sample(&mut gen);
            rho * s + c * u
        };
        let sgn = |v: f64| if v >= 0.0 { 1.0 } else { -1.0 };
        sum += sgn(s) * sgn(t);
    }
    let n = samples as f64;
    let mean = sum / n;
    // Products are +-1, so the sample variance is (1 - mean^2) n / (n - 1).
    Ok(Estimate {
        value: mean,
        std_err: ((1.0 - mean * mean).max(0.0) / (n - 1.0)).sqrt(),
    })
}

/// Sample mean of `S* sgn(S + T)` for independent `S ~ CN(0, s2)`, `T ~ CN(0, t2)`.
pub fn estimate_sign_cross_moment(
    sigma_s_sq: f64,
    sigma_t_sq: f64,
    samples: usize,
    rng: SimRng,
) -> Result<ComplexEstimate> {
    check_samples(samples)?;
    if sigma_s_sq < 0.0 || sigma_t_sq < 0.0 || sigma_s_sq + sigma_t_sq <= 0.0 {
        return Err(Error::domain(
            "variances must be non-negative with a positive sum",
        ));
    }
    let mut gen = rng.generator();
    let mut m = Moments::new(2);
    for _ in 0..samples {
        let s = complex_normal(&mut gen, sigma_s_sq);
        let t = complex_normal(&mut gen, sigma_t_sq);
        let v = s.conj() * sgn(s + t);
        m.push(0, v.re);
        m.push(1, v.im);
    }
    Ok(ComplexEstimate {
        re: m.estimate(0),
        im: m.estimate(1),
    })
}

/// `(2/pi) asin(rho)`.
pub fn sign_correlation_closed_form(rho: f64) -> f64 {
    2.0 / PI * rho.asin()
}

/// `s2 sqrt(4 / (pi (s2 + t2)))`.
pub fn sign_cross_moment_closed_form(sigma_s_sq: f64, sigma_t_sq: f64) -> f64 {
    sigma_s_sq * (4.0 / (PI * (sigma_s_sq + sigma_t_sq))).sqrt()
}

/// Two-sided z threshold keeping the family-wise false-alarm rate of
/// `components` tests at that of a single 3-sigma test.
pub fn family_threshold(components: usize) -> f64 {
    let normal = Normal::standard();
    let alpha = 2.0 * (1.0 - normal.cdf(3.0));
    normal.inverse_cdf(1.0 - alpha / (2.0 * components.max(1) as f64))
}

/// One row of the validation battery.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub check: &'static str,
    pub instance: String,
    pub closed_form: f64,
    pub estimate: f64,
    pub std_err: f64,
    /// Signed for scalar checks, worst absolute value for moment checks.
    pub z: f64,
    /// Acceptance band in standard errors.
    pub threshold: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.z.abs() <= self.threshold
    }

    fn scalar(check: &'static str, instance: String, truth: f64, est: Estimate) -> Self {
        OracleCheck {
            check,
            instance,
            closed_form: truth,
            estimate: est.value,
            std_err: est.std_err,
            z: est.z_score(truth),
            threshold: 3.0,
        }
    }

    fn moments(check: &'static str, instance: String, cmp: EntryComparison) -> Self {
        OracleCheck {
            check,
            instance,
            closed_form: cmp.closed_form,
            estimate: cmp.estimate,
            std_err: cmp.std_err,
            z: cmp.max_abs_z,
            threshold: family_threshold(cmp.components),
        }
    }
}

struct Instance {
    label: String,
    scenario: Scenario,
}

fn pattern(bits: &str) -> AdcSwitch {
    AdcSwitch::new(bits.chars().map(|c| c == '1').collect())
}

fn battery_instances(seed: u64) -> Result<Vec<Instance>> {
    let channels = SimRng::new(seed).substream(0x0c4a);
    let mut draw_id = 0u64;
    let mut next_channel = |n: usize| {
        draw_id += 1;
        crate::channel::draw_rayleigh(n, &mut channels.substream(draw_id).generator())
    };
    let mut out = Vec::new();
    let single = |h: &SimoChannel, bits: &str, es: f64, dither: Option<f64>| -> Result<Instance> {
        let mut sc = Scenario::single(h, &pattern(bits), es)?;
        let mut label = format!("N={} delta={bits} es={es}", h.len());
        if let Some(t) = dither {
            sc = sc.with_dither(DitherPolicy::new(t)?);
            label.push_str(&format!(" T={t}"));
        }
        Ok(Instance {
            label,
            scenario: sc,
        })
    };
    let grid = [0.01, 1.0, 100.0];
    for n in [1usize, 2] {
        let h = next_channel(n);
        for p in 0..1u32 << n {
            let bits: String = (0..n)
                .map(|i| if p >> i & 1 == 1 { '1' } else { '0' })
                .collect();
            for es in grid {
                out.push(single(&h, &bits, es, None)?);
            }
        }
    }
    let h4 = next_channel(4);
    for (bits, es) in [
        ("0000", 1.0),
        ("1010", 1.0),
        ("0111", 0.01),
        ("1100", 100.0),
        ("0001", 100.0),
    ] {
        out.push(single(&h4, bits, es, None)?);
    }
    let h6 = next_channel(6);
    for (bits, es) in [
        ("000000", 100.0),
        ("110000", 1.0),
        ("101010", 0.01),
        ("011111", 100.0),
    ] {
        out.push(single(&h6, bits, es, None)?);
    }
    out.push(single(&h4, "0000", 100.0, Some(10.0))?);
    out.push(single(&h6, "100100", 100.0, Some(3.0))?);
    out.push(single(&h6, "000000", 10.0, Some(1.0))?);

    let multi = |n: usize, m: usize, bits: &str, es: f64| -> Result<Instance> {
        let hh = MultiUserChannel::draw_rayleigh(
            n,
            m,
            &mut channels.substream(0x4d55 + n as u64).generator(),
        );
        Ok(Instance {
            label: format!("N={n} M={m} delta={bits} es={es}"),
            scenario: Scenario::multi(&hh, &pattern(bits), es, 0)?,
        })
    };
    out.push(multi(2, 2, "00", 1.0)?);
    out.push(multi(4, 2, "1000", 1.0)?);
    out.push(multi(6, 3, "110000", 10.0)?);
    Ok(out)
}

/// The fixed validation battery: closed-form `kappa` and every moment entry
/// against Monte Carlo, for single-user, dithered and multi-user instances,
/// plus the two Gaussian sign identities.
pub fn oracle_battery(seed: u64, samples: usize, exec: &Executor) -> Result<Vec<OracleCheck>> {
    let root = SimRng::new(seed);
    let mut rows = Vec::new();
    for (i, inst) in battery_instances(seed)?.into_iter().enumerate() {
        let closed = inst.scenario.closed_form()?;
        let opt = optimal_from_moments(&closed)?;
        let run = run_oracle(
            &inst.scenario,
            &opt.w,
            samples,
            root.substream(i as u64),
            exec,
        )?;
        let multi = inst.scenario.hh.users() > 1;
        let (kc, mc) = if multi {
            ("mu_kappa", "mu_moments")
        } else {
            ("kappa", "moments")
        };
        rows.push(OracleCheck::scalar(
            kc,
            inst.label.clone(),
            opt.kappa,
            run.kappa,
        ));
        rows.push(OracleCheck::moments(
            mc,
            inst.label,
            run.moments.compare(&closed),
        ));
    }
    let sign_root = root.substream(0x1e44a);
    for (i, rho) in [0.0, 0.5, -0.5, 0.9, -0.9].into_iter().enumerate() {
        let est = estimate_sign_correlation(rho, samples, sign_root.substream(i as u64))?;
        rows.push(OracleCheck::scalar(
            "sign_corr",
            format!("rho={rho}"),
            sign_correlation_closed_form(rho),
            est,
        ));
    }
    for (i, (s, t)) in [(1.0, 1.0), (2.0, 0.0), (0.3, 2.0)].into_iter().enumerate() {
        let est = estimate_sign_cross_moment(s, t, samples, sign_root.substream(100 + i as u64))?;
        let truth = sign_cross_moment_closed_form(s, t);
        let label = format!("s2={s} t2={t}");
        rows.push(OracleCheck::scalar(
            "sign_cross_re",
            label.clone(),
            truth,
            est.re,
        ));
        rows.push(OracleCheck::scalar("sign_cross_im", label, 0.0, est.im));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmi::kappa_given_w;

    fn one(v: f64) -> SimoChannel {
        SimoChannel::from_real(&[v]).unwrap()
    }

    #[test]
    fn kappa_examples() {
        let exec = Executor::serial();
        let w = [C64::new(1.0, 0.0)];
        let hi = estimate_kappa_mc(
            &one(1.0),
            &AdcSwitch::all_high_res(1),
            &w,
            1.0,
            None,
            1_000_000,
            SimRng::new(1),
            &exec,
        )
        .unwrap();
        assert!(hi.z_score(0.5).abs() < 3.0, "{hi:?}");
        let lo = estimate_kappa_mc(
            &one(1.0),
            &AdcSwitch::all_one_bit(1),
            &w,
            1.0,
            None,
            1_000_000,
            SimRng::new(2),
            &exec,
        )
        .unwrap();
        assert!(lo.z_score(1.0 / PI).abs() < 3.0, "{lo:?}");

        let scaled = [C64::new(0.0, 7.0)];
        let again = estimate_kappa_mc(
            &one(1.0),
            &AdcSwitch::all_one_bit(1),
            &scaled,
            1.0,
            None,
            1_000_000,
            SimRng::new(2),
            &exec,
        )
        .unwrap();
        assert!((again.value - lo.value).abs() < 1e-9);
    }

    #[test]
    fn suboptimal_combiner_matches_quotient() {
        let h = SimoChannel::new(vec![
            C64::new(0.4, 1.1),
            C64::new(-0.9, 0.2),
            C64::new(0.3, -0.5),
        ])
        .unwrap();
        let delta = pattern("100");
        let w = [C64::new(1.0, 0.5), C64::new(-0.3, 0.0), C64::new(0.2, 0.9)];
        let m = build_moments(&h, &delta, 2.0).unwrap();
        let truth = kappa_given_w(&m, &w).unwrap();
        let est = estimate_kappa_mc(
            &h,
            &delta,
            &w,
            2.0,
            None,
            1_000_000,
            SimRng::new(3),
            &Executor::serial(),
        )
        .unwrap();
        assert!(est.z_score(truth).abs() < 3.0, "{est:?} vs {truth}");
    }

    #[test]
    fn std_err_shrinks_with_samples() {
        let exec = Executor::serial();
        let h = one(0.8);
        let delta = AdcSwitch::all_one_bit(1);
        let w = [C64::new(1.0, 0.0)];
        let a =
            estimate_kappa_mc(&h, &delta, &w, 1.0, None, 100_000, SimRng::new(4), &exec).unwrap();
        let b =
            estimate_kappa_mc(&h, &delta, &w, 1.0, None, 400_000, SimRng::new(4), &exec).unwrap();
        let ratio = b.std_err / a.std_err;
        assert!((ratio - 0.5).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn sign_identity_examples() {
        let zero = estimate_sign_correlation(0.0, 1_000_000, SimRng::new(5)).unwrap();
        assert!(zero.z_score(0.0).abs() < 3.0);
        let perfect = estimate_sign_correlation(1.0, 1000, SimRng::new(5)).unwrap();
        assert_eq!(perfect.value, 1.0);
        let half = estimate_sign_correlation(0.5, 1_000_000, SimRng::new(6)).unwrap();
        assert!((sign_correlation_closed_form(0.5) - 1.0 / 3.0).abs() < 1e-15);
        assert!(half.z_score(1.0 / 3.0).abs() < 3.0);

        let l2 = estimate_sign_cross_moment(1.0, 1.0, 1_000_000, SimRng::new(7)).unwrap();
        assert!(l2.max_abs_z(C64::new((2.0 / PI).sqrt(), 0.0)) < 3.0);
        let none = estimate_sign_cross_moment(0.0, 1.0, 1000, SimRng::new(7)).unwrap();
        assert_eq!(none.value(), C64::new(0.0, 0.0));
        assert!((sign_cross_moment_closed_form(2.0, 0.0) - 2.0 * (2.0 / PI).sqrt()).abs() < 1e-15);
        assert!(estimate_sign_correlation(1.5, 1000, SimRng::new(0)).is_err());
        assert!(estimate_sign_cross_moment(0.0, 0.0, 1000, SimRng::new(0)).is_err());
    }

    #[test]
    fn multi_user_oracle() {
        let exec = Executor::serial();
        let h = SimoChannel::new(vec![C64::new(0.7, -0.2), C64::new(0.1, 1.0)]).unwrap();
        let delta = pattern("01");
        let w = [C64::new(1.0, 0.0), C64::new(0.5, -0.5)];
        let su =
            estimate_kappa_mc(&h, &delta, &w, 1.5, None, 10_000, SimRng::new(9), &exec).unwrap();
        let mu = estimate_mu_kappa_mc(
            &MultiUserChannel::from_single(&h),
            &delta,
            &w,
            1.5,
            0,
            10_000,
            SimRng::new(9),
            &exec,
        )
        .unwrap();
        assert_eq!(su, mu);

        let hh = MultiUserChannel::from_rows(&[
            vec![C64::new(0.0, 0.0); 2],
            vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)],
        ])
        .unwrap();
        let silent = estimate_mu_kappa_mc(
            &hh,
            &pattern("00"),
            &w,
            1.0,
            0,
            100_000,
            SimRng::new(10),
            &exec,
        )
        .unwrap();
        assert!(silent.z_score(0.0).abs() < 3.0);
    }

    #[test]
    fn reproducible_across_workers() {
        let h = SimoChannel::new(vec![C64::new(0.7, -0.2), C64::new(0.1, 1.0)]).unwrap();
        let sc = Scenario::single(&h, &pattern("10"), 3.0).unwrap();
        let w = [C64::new(1.0, 0.0), C64::new(1.0, 1.0)];
        let a = run_oracle(&sc, &w, 50_000, SimRng::new(1), &Executor::serial()).unwrap();
        let b = run_oracle(&sc, &w, 50_000, SimRng::new(1), &Executor::new(2).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn family_threshold_reduces_to_three_sigma() {
        assert!((family_threshold(1) - 3.0).abs() < 1e-6);
        assert!(family_threshold(48) > 3.5 && family_threshold(48) < 4.5);
    }

    #[test]
    fn input_validation() {
        let exec = Executor::serial();
        let h = one(1.0);
        let d = AdcSwitch::all_high_res(1);
        assert!(estimate_kappa_mc(
            &h,
            &d,
            &[C64::new(1.0, 0.0)],
            1.0,
            None,
            10,
            SimRng::new(0),
            &exec
        )
        .is_err());
        assert_eq!(
            estimate_kappa_mc(
                &h,
                &d,
                &[C64::new(0.0, 0.0)],
                1.0,
                None,
                1000,
                SimRng::new(0),
                &exec
            ),
            Err(Error::ZeroCombiner)
        );
    }
}
