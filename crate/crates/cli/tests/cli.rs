use std::fs;
use std::process::{Command, Output};

use proptest::prelude::*;
use reslevel_cli::table::Column;
use reslevel_cli::{run_scan, run_trace, Axis, Mode, ScenarioConfig};

fn reslevel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reslevel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small() -> ScenarioConfig {
    ScenarioConfig {
        t_max: 4.0,
        n_points: 41,
        ..ScenarioConfig::default()
    }
}

fn data_lines(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let lines = data_lines(csv);
    let k = lines[0].split(',').position(|h| h == name).expect("column present");
    lines[1..].iter().map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

proptest! {
    #[test]
    fn config_roundtrip(
        eps in -50.0f64..50.0,
        temp in 0.0f64..10.0,
        t_max in 0.1f64..50.0,
        n in 2usize..5000,
        parity in -0.6f64..0.6,
        re in -0.2f64..0.2,
        im in -0.2f64..0.2,
        ratio in 0.0f64..1.0,
        spin in any::<bool>(),
        outputs in proptest::sample::subsequence(Column::ALL.to_vec(), 0..5),
    ) {
        let cfg = ScenarioConfig {
            epsilon_level: eps,
            temperature: temp,
            t_max,
            n_points: n,
            initial_parity: parity,
            initial_field_re: if spin { re } else { 0.0 },
            initial_field_im: if spin { im } else { 0.0 },
            mode: if spin { Mode::Spin } else { Mode::Fermion },
            outputs,
            divisor_ratio: ratio,
            ..ScenarioConfig::default()
        };
        let text = cfg.serialize();
        let back = ScenarioConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.serialize(), text);
    }
}

#[test]
fn trace_is_deterministic_and_consistent() {
    let cfg = small();
    let a = run_trace(&cfg).unwrap();
    let b = run_trace(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(data_lines(&a).len(), 42);
    let parity = column(&a, "parity");
    let occupation = column(&a, "occupation");
    let lambda: Vec<Vec<f64>> = ["lambda0_plus", "lambda0_minus", "lambda1_plus", "lambda1_minus"]
        .iter()
        .map(|c| column(&a, c))
        .collect();
    for k in 0..parity.len() {
        assert!((occupation[k] - 0.5 * (1.0 - parity[k])).abs() < 1e-15);
        let sum: f64 = lambda.iter().map(|l| l[k]).sum();
        assert!((sum - 2.0).abs() < 1e-12);
    }
}

#[test]
fn binary_output_matches_library_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("scenario.cfg");
    let cfg = small();
    fs::write(&cfg_path, format!("# small run\n{}", cfg.serialize())).unwrap();
    let out = dir.path().join("trace.csv");
    let status = reslevel(&["trace", "--config", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(status.status.success());
    assert_eq!(fs::read_to_string(&out).unwrap(), run_trace(&cfg).unwrap());
    let stdout = reslevel(&["trace", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(String::from_utf8(stdout.stdout).unwrap(), run_trace(&cfg).unwrap());
}

#[test]
fn config_errors_exit_with_two() {
    for args in [
        vec!["trace", "--set", "gamma_coupling=0"],
        vec!["trace", "--set", "initial_field_re=0.2"],
        vec!["trace", "--set", "initial_parity=1.5"],
        vec!["trace", "--set", "no_such_key=1"],
        vec!["trace", "--set", "outputs=t,velocity"],
        vec!["trace", "--config", "/nonexistent/scenario.cfg"],
        vec!["scan", "--axis", "temperature", "--from", "-1", "--to", "1", "--count", "3"],
        vec!["figure", "--id", "10", "--out", "/tmp"],
    ] {
        let out = reslevel(&args);
        let code = out.status.code();
        if args[1] == "--config" {
            assert_eq!(code, Some(1), "{args:?}");
        } else {
            assert_eq!(code, Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        }
    }
    let err = String::from_utf8(reslevel(&["trace", "--set", "gamma_coupling=0"]).stderr).unwrap();
    assert!(err.contains("gamma_coupling"));
}

#[test]
fn spin_mode_keeps_the_coherence() {
    let out = reslevel(&[
        "trace",
        "--set",
        "mode=spin",
        "--set",
        "initial_parity=0.6",
        "--set",
        "initial_field_im=0.4",
        "--set",
        "outputs=t,S_sys,S_env_plus",
        "--set",
        "n_points=3",
    ]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(column(&csv, "S_env_plus").iter().all(|x| x.is_nan()));
    assert!(column(&csv, "S_sys")[0].abs() < 1e-12);
}

#[test]
fn scan_is_sorted_long_format() {
    let cfg = ScenarioConfig {
        outputs: vec![Column::Parity],
        ..small()
    };
    let csv = run_scan(&cfg, Axis::InitialParity, 1.0, -1.0, 3).unwrap();
    let lines = data_lines(&csv);
    assert_eq!(lines[0], "initial_parity,t,parity");
    assert_eq!(lines.len(), 1 + 3 * 41);
    let keys: Vec<(f64, f64)> = lines[1..]
        .iter()
        .map(|l| {
            let mut it = l.split(',').map(|x| x.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(csv, run_scan(&cfg, Axis::InitialParity, 1.0, -1.0, 3).unwrap());

    // Scanning the temperature matches individual traces.
    let csv = run_scan(&cfg, Axis::Temperature, 0.0, 1.0, 2).unwrap();
    let hot = run_trace(&ScenarioConfig { temperature: 1.0, ..cfg.clone() }).unwrap();
    let last = data_lines(&csv).last().unwrap().split(',').nth(2).unwrap().to_string();
    assert_eq!(last, data_lines(&hot).last().unwrap().to_string());
}

#[test]
fn quick_verify_passes_and_injection_fails() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("report.json");
    let out = reslevel(&["verify", "--json", json.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert!(report["checks"].as_array().unwrap().len() >= 7);

    let out = reslevel(&["verify", "--inject-g", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("FAIL"));
}

#[test]
fn figures_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    for id in ["3", "7b", "9", "11"] {
        let out = reslevel(&["figure", "--id", id, "--out", dir.path().to_str().unwrap()]);
        assert!(out.status.success(), "figure {id}");
        let csv = fs::read_to_string(dir.path().join(format!("fig{id}.csv"))).unwrap();
        assert!(data_lines(&csv).len() > 100);
    }
    // h exceeds 1 at these parameters while g stays bounded.
    let csv = fs::read_to_string(dir.path().join("fig3.csv")).unwrap();
    assert!(column(&csv, "h").iter().any(|&h| h > 1.1));
    assert!(column(&csv, "g").iter().all(|&g| g.abs() <= 1.0));
}

#[test]
fn config_command_prints_the_effective_scenario() {
    let out = reslevel(&["config", "--set", "temperature=0.25", "--set", "outputs=t,g"]);
    assert!(out.status.success());
    let cfg = ScenarioConfig::parse(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg.temperature, 0.25);
    assert_eq!(cfg.outputs, vec![Column::T, Column::G]);
}

#[test]
fn single_point_scan_reduces_to_trace() {
    let cfg = small();
    let scan = run_scan(&cfg, Axis::EpsilonLevel, cfg.epsilon_level, 99.0, 1).unwrap();
    let trace = run_trace(&cfg).unwrap();
    let prefix = format!("{},", reslevel_cli::table::number(cfg.epsilon_level));
    let scan_rows: Vec<String> = data_lines(&scan)[1..]
        .iter()
        .map(|l| l.strip_prefix(&prefix).unwrap().to_string())
        .collect();
    assert_eq!(scan_rows, data_lines(&trace)[1..]);
}

#[test]
fn reentrance_figure_returns_to_the_initial_parity() {
    let dir = tempfile::tempdir().unwrap();
    let out = reslevel(&["figure", "--id", "5", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("fig5.csv")).unwrap();
    let returns: Vec<(f64, f64)> = csv
        .lines()
        .filter_map(|l| l.strip_prefix("# reentrance of parity "))
        .filter_map(|l| {
            let (p0, t) = l.split_once(": ")?;
            Some((p0.parse().ok()?, t.parse().ok()?))
        })
        .collect();
    assert!(!returns.is_empty());
    let rows: Vec<Vec<f64>> = data_lines(&csv)[1..]
        .iter()
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    for (p0, t_r) in returns {
        // The parity crosses its initial value between the samples around t_r.
        let near: Vec<&Vec<f64>> = rows.iter().filter(|r| r[0] == p0 && (r[1] - t_r).abs() <= 0.01).collect();
        let lo = near.iter().map(|r| r[2] - p0).fold(f64::INFINITY, f64::min);
        let hi = near.iter().map(|r| r[2] - p0).fold(f64::NEG_INFINITY, f64::max);
        assert!(lo <= 0.0 && hi >= 0.0, "parity {p0} at {t_r}: {lo} {hi}");
    }
}
