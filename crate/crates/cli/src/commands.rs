//! One function per subcommand, each producing a CSV table.

use std::io::Write;

use anyhow::{Context, Result};
use mixadc::dithering::optimize_threshold;
use mixadc::energy::{efficiency_curve, EfficiencySetup};
use mixadc::ergodic::{
    ergodic_bounds, ergodic_capacity_conventional, imperfect_bounds_raw, ErgodicConfig,
};
use mixadc::multiuser::{mu_ergodic_bounds, MuErgodicConfig, MuReceiver};
use mixadc::oracle::oracle_battery;
use mixadc::outage::{outage_gmi, OutageConfig};
use mixadc::{
    db_to_linear, linear_to_db, nats_to_bits, Architecture, DitherPolicy, Executor, SimRng,
    SimoChannel, SwitchPolicy, SwitchScheme, TrainingConfig,
};

use crate::config::RunConfig;
use crate::grid::snap;
use crate::{
    usage, Common, DitherArgs, EnergyArgs, ErgodicArgs, FixedArgs, ImperfectArgs, MultiuserArgs,
    OutageArgs, PolicyArg, SchemeArg, ValidateArgs,
};

/// Substream root for threshold tuning, kept apart from the evaluation draws.
const TUNING_STREAM: u64 = u64::MAX;

macro_rules! row {
    ($($v:expr),* $(,)?) => { vec![$($v.to_string()),*] };
}

pub struct Table {
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
    /// Set when the table reports a failed check.
    pub failed: bool,
}

impl Table {
    fn new(header: &'static [&'static str]) -> Self {
        Table {
            header,
            rows: Vec::new(),
            failed: false,
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Setup {
    rng: SimRng,
    exec: Executor,
    snr_db: Vec<f64>,
    n: usize,
    ks: Vec<usize>,
    trials: usize,
    cfg: RunConfig,
}

fn setup(
    c: &Common,
    n_from_data: Option<usize>,
    default_trials: usize,
    default_k: impl FnOnce(usize) -> Vec<usize>,
) -> Result<Setup> {
    let n = match (n_from_data, c.n) {
        (Some(len), Some(n)) if len != n => {
            return Err(usage(format!(
                "--n {n} disagrees with the {len} antennas of the channel file"
            )))
        }
        (Some(len), _) => len,
        (None, n) => n.unwrap_or(100),
    };
    if n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let ks =
        c.k.as_ref()
            .map(|k| k.0.clone())
            .unwrap_or_else(|| default_k(n));
    if let Some(k) = ks.iter().find(|&&k| k > n) {
        return Err(usage(format!("--k {k} exceeds the {n} antennas")));
    }
    let cfg = match &c.config {
        Some(path) => RunConfig::load(path).map_err(usage)?,
        None => RunConfig::default(),
    };
    Ok(Setup {
        rng: SimRng::new(c.seed),
        exec: Executor::new(c.workers)?,
        snr_db: c.snr_db.0.clone(),
        n,
        ks,
        trials: c.trials.unwrap_or(default_trials),
        cfg,
    })
}

fn bits(nats: f64) -> f64 {
    nats_to_bits(nats)
}

pub fn fixed(a: &FixedArgs) -> Result<Table> {
    let h = SimoChannel::load(&a.channel)
        .map_err(|e| usage(format!("{}: {e}", a.channel.display())))?;
    let s = setup(&a.common, Some(h.len()), 0, |n| (0..=n).collect())?;
    let mut t = Table::new(&[
        "snr_db",
        "k",
        "gmi_bits",
        "capacity_bits",
        "antenna_selection_bits",
    ]);
    for &snr in &s.snr_db {
        let es = db_to_linear(snr);
        for &k in &s.ks {
            let rate = |arch: Architecture| arch.rate(&h, k, es).context("fixed-channel rate");
            t.push(row![
                snr,
                k,
                bits(rate(Architecture::Mixed)?),
                bits(rate(Architecture::Conventional)?),
                bits(rate(Architecture::AntennaSelection)?),
            ]);
        }
    }
    Ok(t)
}

pub fn outage(a: &OutageArgs) -> Result<Table> {
    if !(a.p_out > 0.0 && a.p_out < 1.0) {
        return Err(usage(format!(
            "--p-out must lie in (0, 1), got {}",
            a.p_out
        )));
    }
    let s = setup(&a.common, None, 1000, |_| vec![10, 20])?;
    let mut t = Table::new(&[
        "snr_db",
        "k",
        "p_out",
        "mixed_bits",
        "conventional_bits",
        "antenna_selection_bits",
    ]);
    for &snr in &s.snr_db {
        for &k in &s.ks {
            let cfg = OutageConfig {
                n: s.n,
                k,
                es: db_to_linear(snr),
                p_out: a.p_out,
                draws: s.trials,
            };
            let rate = |arch| outage_gmi(&cfg, arch, s.rng, &s.exec).context("outage");
            t.push(row![
                snr,
                k,
                a.p_out,
                bits(rate(Architecture::Mixed)?),
                bits(rate(Architecture::Conventional)?),
                bits(rate(Architecture::AntennaSelection)?),
            ]);
        }
    }
    Ok(t)
}

pub fn ergodic(a: &ErgodicArgs) -> Result<Table> {
    let s = setup(&a.common, None, 1000, |_| vec![20])?;
    let policy = match a.policy {
        PolicyArg::Strongest => SwitchPolicy::Strongest,
        PolicyArg::Random => SwitchPolicy::Random,
    };
    let mut t = Table::new(&[
        "snr_db",
        "k",
        "lower_bits",
        "upper_bits",
        "stderr_lower",
        "stderr_upper",
    ]);
    for &snr in &s.snr_db {
        for &k in &s.ks {
            let cfg = ErgodicConfig {
                policy,
                ..ErgodicConfig::new(s.n, k, db_to_linear(snr), s.trials)
            };
            let b = ergodic_bounds(&cfg, s.rng, &s.exec).context("ergodic bounds")?;
            t.push(row![
                snr,
                k,
                bits(b.lower_nats),
                bits(b.upper_nats),
                bits(b.std_err_lower),
                bits(b.std_err_upper),
            ]);
        }
    }
    Ok(t)
}

pub fn imperfect(a: &ImperfectArgs) -> Result<Table> {
    if a.mse_db > 0.0 {
        return Err(usage(format!(
            "--mse-db must be at most 0 dB, got {}",
            a.mse_db
        )));
    }
    let s = setup(&a.common, None, 100, |_| vec![20])?;
    let coherence_len = a.coherence_len.unwrap_or(s.cfg.coherence_len);
    let err_samples = a.err_samples.unwrap_or(s.cfg.err_samples);
    let sigma_t_sq = db_to_linear(a.mse_db);
    let conventional_training =
        TrainingConfig::new(coherence_len, s.n, s.n).map_err(|e| usage(e.to_string()))?;
    let mut t = Table::new(&[
        "snr_db",
        "k",
        "mse_db",
        "lower_bits",
        "upper_bits",
        "stderr_lower",
        "stderr_upper",
        "prefactor",
        "perfect_mixed_lower_bits",
        "perfect_conventional_bits",
        "perfect_conventional_trained_bits",
    ]);
    for &snr in &s.snr_db {
        let es = db_to_linear(snr);
        let conventional = ergodic_capacity_conventional(s.n, es, s.trials, s.rng, &s.exec)
            .context("conventional ergodic capacity")?
            .value;
        for &k in &s.ks {
            let training =
                TrainingConfig::new(coherence_len, s.n, k).map_err(|e| usage(e.to_string()))?;
            let b = imperfect_bounds_raw(
                &training,
                es,
                sigma_t_sq,
                s.trials,
                err_samples,
                s.rng,
                &s.exec,
            )
            .context("imperfect-CSI bounds")?
            .scaled(training.prefactor());
            let perfect = ergodic_bounds(&ErgodicConfig::new(s.n, k, es, s.trials), s.rng, &s.exec)
                .context("ergodic bounds")?;
            t.push(row![
                snr,
                k,
                a.mse_db,
                bits(b.lower_nats),
                bits(b.upper_nats),
                bits(b.std_err_lower),
                bits(b.std_err_upper),
                training.prefactor(),
                bits(perfect.lower_nats),
                bits(conventional),
                bits(conventional * conventional_training.prefactor()),
            ]);
        }
    }
    Ok(t)
}

pub fn dither(a: &DitherArgs) -> Result<Table> {
    let s = setup(&a.common, None, 1000, |_| vec![0])?;
    let fixed = a
        .threshold_db
        .map(|db| DitherPolicy::from_db(db).map_err(|e| usage(e.to_string())))
        .transpose()?;
    let tuning = s.rng.substream(TUNING_STREAM);
    let mut t = Table::new(&[
        "snr_db",
        "k",
        "threshold_db",
        "dithered_lower_bits",
        "undithered_lower_bits",
        "stderr_dithered",
        "stderr_undithered",
    ]);
    for &snr in &s.snr_db {
        let es = db_to_linear(snr);
        let policy = match fixed {
            Some(p) => p,
            None => DitherPolicy::new(
                optimize_threshold(s.n, es, &s.cfg.dither_grid, s.trials, tuning, &s.exec)
                    .context("dither threshold search")?,
            )?,
        };
        for &k in &s.ks {
            let plain = ErgodicConfig::new(s.n, k, es, s.trials);
            let dithered = ErgodicConfig {
                dither: Some(policy),
                ..plain
            };
            let d = ergodic_bounds(&dithered, s.rng, &s.exec).context("dithered ergodic bounds")?;
            let u = ergodic_bounds(&plain, s.rng, &s.exec).context("ergodic bounds")?;
            t.push(row![
                snr,
                k,
                snap(linear_to_db(policy.threshold())),
                bits(d.lower_nats),
                bits(u.lower_nats),
                bits(d.std_err_lower),
                bits(u.std_err_lower),
            ]);
        }
    }
    Ok(t)
}

fn scheme_name(s: SchemeArg) -> &'static str {
    match s {
        SchemeArg::Norm => "norm",
        SchemeArg::Random => "random",
        SchemeArg::Selection => "selection",
        SchemeArg::Conventional => "conventional",
    }
}

pub fn multiuser(a: &MultiuserArgs) -> Result<Table> {
    let s = setup(&a.common, None, 200, |_| vec![10, 20])?;
    let mut t = Table::new(&[
        "snr_db",
        "k",
        "scheme",
        "lower_bits",
        "upper_bits",
        "stderr_lower",
        "stderr_upper",
        "sum_rate_bits",
    ]);
    for &snr in &s.snr_db {
        for &scheme in &a.scheme {
            let (receiver, ks) = match scheme {
                SchemeArg::Norm => (MuReceiver::Mixed(SwitchScheme::NormBased), s.ks.clone()),
                SchemeArg::Random => (MuReceiver::Mixed(SwitchScheme::Random), s.ks.clone()),
                SchemeArg::Selection => (MuReceiver::AntennaSelection, s.ks.clone()),
                SchemeArg::Conventional => (MuReceiver::Conventional, vec![s.n]),
            };
            for k in ks {
                if receiver == MuReceiver::AntennaSelection && k == 0 {
                    t.push(row![snr, k, scheme_name(scheme), 0, 0, 0, 0, 0]);
                    continue;
                }
                let cfg = MuErgodicConfig {
                    n: s.n,
                    m: a.m,
                    k,
                    snr_total: db_to_linear(snr),
                    receiver,
                    trials: s.trials,
                };
                let b =
                    mu_ergodic_bounds(&cfg, s.rng, &s.exec).context("multi-user ergodic bounds")?;
                t.push(row![
                    snr,
                    k,
                    scheme_name(scheme),
                    bits(b.per_user.lower_nats),
                    bits(b.per_user.upper_nats),
                    bits(b.per_user.std_err_lower),
                    bits(b.per_user.std_err_upper),
                    bits(b.sum_rate_nats),
                ]);
            }
        }
    }
    Ok(t)
}

pub fn energy(a: &EnergyArgs) -> Result<Table> {
    let s = setup(&a.common, None, 200, |n| (0..=n).step_by(10).collect())?;
    let [snr] = s.snr_db[..] else {
        return Err(usage("energy takes a single --snr-db value"));
    };
    let curve = efficiency_curve(
        &EfficiencySetup {
            n: s.n,
            m: a.m,
            snr: db_to_linear(snr),
            trials: s.trials,
        },
        &s.ks,
        &s.cfg.power,
        s.rng,
        &s.exec,
    )
    .context("energy efficiency")?;
    let mut t = Table::new(&["k", "arch", "norm_rate", "norm_energy"]);
    for p in curve {
        t.push(row![p.k, p.arch.name(), p.norm_rate, p.norm_energy]);
    }
    Ok(t)
}

pub fn validate(a: &ValidateArgs) -> Result<Table> {
    let exec = Executor::new(a.workers)?;
    let checks = oracle_battery(a.seed, a.samples, &exec).context("validation battery")?;
    let mut t = Table::new(&[
        "check",
        "instance",
        "closed_form",
        "estimate",
        "std_err",
        "z",
        "status",
    ]);
    for c in &checks {
        let status = if c.passed() { "PASS" } else { "FAIL" };
        t.failed |= !c.passed();
        t.push(row![
            c.check,
            c.instance,
            c.closed_form,
            c.estimate,
            c.std_err,
            c.z,
            status
        ]);
    }
    Ok(t)
}
