use std::path::Path;
use std::process::{Command, Output};

fn mixadc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixadc"))
        .args(args)
        .output()
        .expect("failed to launch mixadc")
}

fn stdout(args: &[&str]) -> String {
    let out = mixadc(args);
    assert!(
        out.status.success(),
        "mixadc {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn lines(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn write_file(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &[&str] = &["--n", "8", "--trials", "100", "--seed", "3"];

fn with<'a>(cmd: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend_from_slice(SMALL);
    v.extend_from_slice(extra);
    v
}

#[test]
fn headers_and_row_counts() {
    let dir = tempfile::tempdir().unwrap();
    let channel = write_file(dir.path(), "h.txt", "1 0\n0.5 -0.5\n0 2\n");
    let cases: Vec<(Vec<&str>, &str, usize)> = vec![
        (
            vec!["fixed", "--channel", &channel, "--snr-db", "-10:10:10"],
            "snr_db,k,gmi_bits,capacity_bits,antenna_selection_bits",
            3 * 4,
        ),
        (
            with("outage", &["--k", "2,4"]),
            "snr_db,k,p_out,mixed_bits,conventional_bits,antenna_selection_bits",
            2,
        ),
        (
            with("ergodic", &["--k", "2", "--snr-db", "-5,5"]),
            "snr_db,k,lower_bits,upper_bits,stderr_lower,stderr_upper",
            2,
        ),
        (
            with("imperfect", &["--k", "2", "--err-samples", "50"]),
            "snr_db,k,mse_db,lower_bits,upper_bits,stderr_lower,stderr_upper,prefactor,\
             perfect_mixed_lower_bits,perfect_conventional_bits,perfect_conventional_trained_bits",
            1,
        ),
        (
            with("dither", &["--snr-db", "20", "--k", "0,2"]),
            "snr_db,k,threshold_db,dithered_lower_bits,undithered_lower_bits,stderr_dithered,stderr_undithered",
            2,
        ),
        (
            with("multiuser", &["--m", "2", "--k", "2"]),
            "snr_db,k,scheme,lower_bits,upper_bits,stderr_lower,stderr_upper,sum_rate_bits",
            4,
        ),
        (with("energy", &["--k", "0:8:4"]), "k,arch,norm_rate,norm_energy", 6),
    ];
    for (args, header, rows) in cases {
        let csv = stdout(&args);
        let mut it = csv.lines();
        assert_eq!(it.next(), Some(header), "{args:?}");
        assert_eq!(it.count(), rows, "{args:?}");
    }
}

#[test]
fn fixed_channel_rates_are_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let channel = write_file(dir.path(), "h.txt", "1 0\n0.5 -0.5\n# comment\n0 2\n");
    let rows = lines(&stdout(&["fixed", "--channel", &channel, "--snr-db", "0"]));
    for r in &rows[1..] {
        let v: Vec<f64> = r.iter().map(|x| x.parse().unwrap()).collect();
        let (gmi, cap, sel) = (v[2], v[3], v[4]);
        assert!(sel <= gmi && gmi <= cap + 1e-12, "{r:?}");
        if r[1] == "3" {
            assert!((gmi - cap).abs() < 1e-12);
        }
    }
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad_cfg = write_file(dir.path(), "bad.cfg", "p_lna = 1\nwidth = 3\n");
    let cases: Vec<Vec<&str>> = vec![
        vec!["ergodic", "--bogus"],
        vec!["nonexistent"],
        vec!["ergodic", "--k", "101"],
        vec!["ergodic", "--snr-db", "1:0:1"],
        vec!["ergodic", "--workers", "0"],
        vec!["ergodic", "--policy", "best"],
        vec!["ergodic", "--config", &bad_cfg],
        vec!["ergodic", "--config", "/nonexistent/mixadc.cfg"],
        vec!["energy", "--snr-db", "0,5"],
        vec!["outage", "--p-out", "1.5"],
        vec!["imperfect", "--k", "0"],
        vec!["imperfect", "--coherence-len", "5", "--k", "20"],
        vec!["fixed", "--channel", "/nonexistent/h.txt"],
        vec!["multiuser", "--scheme", "norm,greedy"],
    ];
    for args in cases {
        let out = mixadc(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
    }
    let out = mixadc(&["ergodic", "--config", &bad_cfg]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn numeric_failures_exit_1_with_module_name() {
    // Too few draws for an outage quantile.
    let out = mixadc(&["outage", "--n", "4", "--k", "1", "--trials", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outage"));
    let out = mixadc(&["ergodic", "--n", "4", "--k", "1", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ergodic bounds"));
}

#[test]
fn config_file_sets_power_model() {
    let dir = tempfile::tempdir().unwrap();
    // ADCs free: mixed-ADC power equals conventional power for every K.
    let cfg = write_file(
        dir.path(),
        "free_adc.cfg",
        "# free converters\np_adc_pair = 0\n",
    );
    let rows = lines(&stdout(&with("energy", &["--k", "4", "--config", &cfg])));
    let mixed = rows.iter().find(|r| r[1] == "mixed").unwrap();
    assert_eq!(mixed[3], "1");
    let rows = lines(&stdout(&with("energy", &["--k", "4"])));
    let mixed = rows.iter().find(|r| r[1] == "mixed").unwrap();
    assert_ne!(mixed[3], "1");
}

#[test]
fn config_file_sets_coherence_length() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_file(
        dir.path(),
        "t.cfg",
        "coherence_len = 10\nerr_samples = 20\n",
    );
    let rows = lines(&stdout(&with("imperfect", &["--k", "2", "--config", &cfg])));
    assert_eq!(rows[1][7], (6.0f64 / 10.0).to_string());
    let rows = lines(&stdout(&with(
        "imperfect",
        &["--k", "2", "--config", &cfg, "--coherence-len", "20"],
    )));
    assert_eq!(rows[1][7], (16.0f64 / 20.0).to_string());
}

#[test]
fn out_flag_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.csv");
    let args = with("ergodic", &["--k", "3"]);
    let printed = stdout(&args);
    let mut to_file = args.clone();
    to_file.extend_from_slice(&["--out", path.to_str().unwrap()]);
    assert!(stdout(&to_file).is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), printed);
}

#[test]
fn seeds_and_workers() {
    let base = with("ergodic", &["--k", "2", "--snr-db", "0:10:5"]);
    let serial = stdout(&base);
    let mut parallel = base.clone();
    parallel.extend_from_slice(&["--workers", "3"]);
    assert_eq!(stdout(&parallel), serial);
    let reseeded: Vec<&str> = base
        .iter()
        .map(|&a| if a == "3" { "4" } else { a })
        .collect();
    assert_ne!(stdout(&reseeded), serial);
}

#[test]
fn validate_emits_table() {
    let out = mixadc(&["validate", "--samples", "2000"]);
    assert!(matches!(out.status.code(), Some(0 | 1)));
    let csv = String::from_utf8(out.stdout).unwrap();
    let rows = lines(&csv);
    assert_eq!(
        rows[0].join(","),
        "check,instance,closed_form,estimate,std_err,z,status"
    );
    assert!(rows.len() > 20);
    assert!(rows[1..].iter().all(|r| r[6] == "PASS" || r[6] == "FAIL"));
    let failed = rows[1..].iter().any(|r| r[6] == "FAIL");
    assert_eq!(out.status.code(), Some(if failed { 1 } else { 0 }));
}

#[test]
fn help_describes_every_subcommand() {
    let help = stdout(&["--help"]);
    for cmd in [
        "fixed",
        "outage",
        "ergodic",
        "imperfect",
        "dither",
        "multiuser",
        "energy",
        "validate",
    ] {
        assert!(help.contains(cmd), "{cmd}");
        let sub = stdout(&[cmd, "--help"]);
        for flag in [
            "--seed",
            "--trials",
            "--snr-db",
            "--n",
            "--k",
            "--config",
            "--workers",
        ] {
            if cmd != "validate" {
                assert!(sub.contains(flag), "{cmd} {flag}");
            }
        }
    }
}
