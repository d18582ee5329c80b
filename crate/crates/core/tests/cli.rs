use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use emfe_core::cli::{cmd_montecarlo, load_config, parse_config, CliError};
use emfe_core::{run_batch, BatchConfig, Metric, Scheme};

fn emfe(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emfe"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn names(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

const FAST: [&str; 4] = ["--grid-step", "100", "--circle-samples", "360"];

#[test]
fn config_file_with_comments_and_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("run.conf");
    fs::write(
        &path,
        "# small run\nantenna_count = 32   # half the array\n\nthreshold_db = -60\nschemes = mrt, equalized\n",
    )
    .unwrap();
    let c = load_config(Some(&path), &[("seed", "77".into())]).unwrap();
    assert_eq!(c.params.antenna_count, 32);
    assert!((c.params.threshold_ratio - 1e-6).abs() < 1e-20);
    assert_eq!(c.schemes, vec![Scheme::Mrt, Scheme::Equalized]);
    assert_eq!(c.seed, 77);

    let missing = load_config(Some(&tmp.path().join("nope.conf")), &[]).unwrap_err();
    assert!(matches!(missing, CliError::Io { .. }));
}

#[test]
fn manifest_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config =
        parse_config("sample_count = 3\ngrid_step = 140\ncircle_samples = 360\nseed = 5\n")
            .unwrap();
    config.out_dir = tmp.path().join("mc");
    let out = cmd_montecarlo(&config, Some(1)).unwrap();
    assert_eq!(out.files.len(), 10);
    let manifest = fs::read_to_string(config.out_dir.join("manifest.txt")).unwrap();
    assert_eq!(parse_config(&manifest).unwrap(), config);
    assert!(manifest.contains("# equalized received_power_db:"));
}

#[test]
fn validate_reports_bad_key_on_stderr() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.conf"), "seed = 3\nantenna_count = 0\n").unwrap();
    let out = emfe(&["validate", "--config", "bad.conf"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("antenna_count") && err.contains("line 2"),
        "{err}"
    );

    let out = emfe(&["validate", "--samples", "12"], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("sample_count = 12"));
    assert_eq!(parse_config(&text).unwrap().sample_count, 12);
}

#[test]
fn snapshot_writes_maps_and_table() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["snapshot", "--seed", "3", "--out", "snap", "--emit-maps"];
    args.extend(FAST);
    let out = emfe(&args, tmp.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let dir = tmp.path().join("snap");
    let files = names(&dir);
    assert_eq!(files.len(), 6 * 3 + 1);
    for ris in ["ris", "noris"] {
        for s in Scheme::ALL {
            for prefix in ["exposure", "overexposed"] {
                assert!(
                    files.contains(&format!("{prefix}_{ris}_{s}.csv")),
                    "{files:?}"
                );
            }
            assert!(files.contains(&format!("map_{ris}_{s}.pgm")));
        }
    }

    let table = fs::read_to_string(dir.join("table.csv")).unwrap();
    let rows: Vec<Vec<&str>> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        let violation: f64 = r[3].parse().unwrap();
        if r[1] == "mrt" {
            assert!(r[4].parse::<f64>().unwrap() == 0.0);
        } else {
            assert_eq!(violation, 0.0, "{r:?}");
        }
    }
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 7);
    assert!(stdout.contains("equalized"));

    // 15 × 15 grid at step 100.
    let exposure = fs::read_to_string(dir.join("exposure_ris_mrt.csv")).unwrap();
    assert_eq!(
        exposure.lines().next().unwrap(),
        "x,y,omega_db,outside_circle,overexposed"
    );
    assert_eq!(exposure.lines().count(), 1 + 15 * 15);
    let pgm = fs::read(dir.join("map_ris_mrt.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n15 15 255\n"));
}

#[test]
fn snapshot_without_ris_and_scheme_filter() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["snapshot", "--no-ris", "--schemes", "mrt", "--out", "o"];
    args.extend(FAST);
    let out = emfe(&args, tmp.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        names(&tmp.path().join("o")),
        [
            "exposure_noris_mrt.csv",
            "overexposed_noris_mrt.csv",
            "table.csv"
        ]
    );
    let table = fs::read_to_string(tmp.path().join("o/table.csv")).unwrap();
    assert_eq!(table.lines().count(), 2);
    assert!(table.lines().nth(1).unwrap().starts_with("no,mrt,"));
}

#[test]
fn single_sample_cdfs_have_one_step() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["montecarlo", "--samples", "1", "--out", "mc"];
    args.extend(FAST);
    let out = emfe(&args, tmp.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let dir = tmp.path().join("mc");
    let files = names(&dir);
    assert_eq!(files.len(), 10);
    for m in Metric::ALL {
        for s in Scheme::ALL {
            let text = fs::read_to_string(dir.join(format!("cdf_{m}_{s}.csv"))).unwrap();
            let lines: Vec<&str> = text.lines().collect();
            assert_eq!(lines.len(), 2, "{text}");
            assert_eq!(lines[0], "value,cdf");
            assert!(lines[1].ends_with(",1"));
        }
    }
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 9);
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("blocker"), "").unwrap();
    let mut args = vec!["snapshot", "--out", "blocker/sub"];
    args.extend(FAST);
    let out = emfe(&args, tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("blocker"));
}

#[test]
fn equalized_received_power_dominates_reduced() {
    // The grid only affects violation metrics; a coarse one keeps this fast.
    let batch = run_batch(&BatchConfig {
        sample_count: 200,
        master_seed: 42,
        schemes: vec![Scheme::Reduced, Scheme::Equalized],
        grid_step: 350.0,
        ..BatchConfig::default()
    })
    .unwrap();
    let quantiles = |scheme| {
        let mut v = batch
            .get(Metric::ReceivedPowerDb, scheme)
            .unwrap()
            .values
            .clone();
        v.sort_by(f64::total_cmp);
        (1..20)
            .map(move |i| v[i * v.len() / 20])
            .collect::<Vec<f64>>()
    };
    // Checked at 5% steps; the extreme tails of 200 samples are too noisy
    // for a pointwise comparison.
    for (i, (r, e)) in quantiles(Scheme::Reduced)
        .iter()
        .zip(quantiles(Scheme::Equalized))
        .enumerate()
    {
        assert!(
            e > *r,
            "{}% quantile: equalized {e} dB vs reduced {r} dB",
            5 * (i + 1)
        );
    }
}
