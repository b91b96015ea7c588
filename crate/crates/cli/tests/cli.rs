use std::path::Path;
use std::process::{Command, Output};

use ppifem_cli::{run_study, Mode, RunConfig, Settings};
use ppifem_core::BuiltinExample;

fn ppifem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppifem")).args(args).output().expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn artifact_args(dir: &Path) -> Vec<String> {
    ["errors.csv", "class.csv", "surface.csv"]
        .iter()
        .zip(["--out-errors", "--out-classification", "--out-surface"])
        .flat_map(|(file, flag)| [flag.to_string(), dir.join(file).display().to_string()])
        .collect()
}

fn run_with_artifacts(dir: &Path, extra: &[&str]) -> [String; 3] {
    let mut args: Vec<String> = extra.iter().map(|s| s.to_string()).collect();
    args.extend(artifact_args(dir));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = ppifem(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    ["errors.csv", "class.csv", "surface.csv"].map(|f| read(&dir.join(f)))
}

const SMALL: &[&str] = &["--example", "2", "--n-start", "8", "--refinements", "3"];

#[test]
fn identical_runs_write_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(run_with_artifacts(a.path(), SMALL), run_with_artifacts(b.path(), SMALL));
}

#[test]
fn artifacts_have_the_documented_layout() {
    let dir = tempfile::tempdir().unwrap();
    let [errors, class, surface] = run_with_artifacts(dir.path(), SMALL);

    let mut lines = errors.lines();
    assert_eq!(lines.next(), Some("n,linf,rate_linf,l2,rate_l2,h1,rate_h1"));
    let ns: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ns, ["8", "16", "32"]);

    let rows: Vec<&str> = class.lines().collect();
    assert_eq!(rows.len(), 8);
    for row in &rows {
        let codes: Vec<u8> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(codes.len(), 8);
        assert!(codes.iter().all(|&c| c <= 3));
    }
    assert!(class.contains('3'), "no junction element in\n{class}");

    let mut lines = surface.lines();
    assert_eq!(lines.next(), Some("x,y,value"));
    assert_eq!(lines.count(), 33 * 33);
}

#[test]
fn config_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let config = RunConfig {
        example: BuiltinExample::CircleAndLine,
        betas: [1e5, 100.0, 10.0],
        sigma0: 0.25,
        n_start: 8,
        refinements: 2,
        out_errors: Some(first.join("errors.csv")),
        out_surface: Some(first.join("surface.csv")),
        emit_n: Some(8),
        ..RunConfig::default()
    };
    let text = config.to_config_string();
    assert_eq!(Settings::parse(&text).unwrap().resolve().unwrap(), config);

    let path = dir.path().join("run.cfg");
    std::fs::write(&path, &text).unwrap();
    let out = ppifem(&["--config", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let mut log = Vec::new();
    let second = dir.path().join("second");
    let rerun = RunConfig {
        out_errors: Some(second.join("errors.csv")),
        out_surface: Some(second.join("surface.csv")),
        ..config
    };
    run_study(&rerun, &mut log).unwrap();
    for f in ["errors.csv", "surface.csv"] {
        assert_eq!(read(&first.join(f)), read(&second.join(f)), "{f}");
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "example = 2\nn_start = 8\nrefinements = 3\n").unwrap();
    let out = ppifem(&["--config", path.to_str().unwrap(), "--refinements", "1"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("example 2"));
    assert!(stdout.contains("N=8 ") && !stdout.contains("N=16 "), "{stdout}");
}

#[test]
fn invalid_input_exits_with_code_two_and_names_the_key() {
    for (args, key) in [
        (vec!["--betas", "1,2"], "betas"),
        (vec!["--betas", "1,-2,3"], "betas"),
        (vec!["--epsilon", "2"], "epsilon"),
        (vec!["--example", "7"], "example"),
        (vec!["--n-start", "512"], "full"),
        (vec!["--config", "/nonexistent/run.cfg"], "run.cfg"),
    ] {
        let out = ppifem(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains(key), "{args:?}: {stderr}");
    }
}

#[test]
fn dumping_a_system_in_interpolation_mode_is_a_run_error() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("a.mtx");
    let out = ppifem(&["--mode", "interpolate", "--refinements", "1", "--dump-system", dump.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dump_system"));
}

#[test]
fn dumped_system_has_one_rhs_entry_per_unknown() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("a.mtx");
    let out = ppifem(&["--n-start", "8", "--refinements", "1", "--dump-system", dump.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let matrix = read(&dump);
    assert!(matrix.starts_with("%%MatrixMarket matrix coordinate real general"));
    let size = matrix.lines().find(|l| !l.starts_with('%')).unwrap();
    assert!(size.starts_with("49 49 "), "{size}");
    assert_eq!(read(&dir.path().join("a.mtx.rhs")).lines().count(), 49);
}

#[test]
fn straight_line_rates_follow_the_reference_pattern() {
    let config = RunConfig {
        refinements: 4,
        ..RunConfig::default()
    };
    let reports = run_study(&config, &mut std::io::sink()).unwrap();
    let last = reports.last().unwrap();
    assert_eq!(last.n, 128);
    for (rate, want) in [(last.rate_linf, 2.0), (last.rate_l2, 2.0), (last.rate_h1, 1.0)] {
        let rate = rate.unwrap();
        assert!((rate - want).abs() <= 0.1, "{rate} vs {want}");
    }
}

#[test]
fn galerkin_pointwise_rate_degrades() {
    let config = RunConfig {
        betas: [100.0, 10000.0, 1.0],
        scheme: ppifem_core::Scheme::Galerkin,
        n_start: 32,
        refinements: 3,
        ..RunConfig::default()
    };
    let reports = run_study(&config, &mut std::io::sink()).unwrap();
    let rate = reports.last().unwrap().rate_linf.unwrap();
    assert!(rate < 1.2, "{rate}");
}

#[test]
fn interpolation_mode_needs_no_solver() {
    let config = RunConfig {
        mode: Mode::Interpolate,
        n_start: 8,
        refinements: 2,
        ..RunConfig::default()
    };
    let mut log = Vec::new();
    run_study(&config, &mut log).unwrap();
    let log = String::from_utf8(log).unwrap();
    assert!(log.contains("N=8    interpolated"), "{log}");
    assert!(!log.contains("solver"));
}
