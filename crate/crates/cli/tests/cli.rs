//! End-to-end runs of the `goc` binary: file layout, determinism, exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use goc_cli::{curve_file_name, resolve_config, Overrides};
use goc_core::NoiseSpec;
use tempfile::TempDir;

fn manifest(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../manifests")
        .join(format!("{name}.json"))
        .to_string_lossy()
        .into_owned()
}

fn goc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_goc")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn dir_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn sorted_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn example_one_writes_a_file_per_threshold() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let r = goc(&["curve", "--config", &manifest("example1"), "--out", dir_str(&out), "--grid", "801"]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));

    let files = sorted_files(&out.join("curves"));
    assert_eq!(files.len(), 31);
    assert!(files[0].ends_with("curve_eta_02.000.csv"));
    assert!(files[30].ends_with("curve_eta_08.000.csv"));
    let one = fs::read_to_string(&files[15]).unwrap();
    assert!(one.starts_with("alpha,c_eta,eta,n,delta\n"));
    assert_eq!(one.lines().count(), 1001);

    let combined = fs::read_to_string(out.join("curves.csv")).unwrap();
    assert_eq!(combined.lines().count(), 1 + 31 * 1000);
    let br = fs::read_to_string(out.join("best_response.csv")).unwrap();
    let rows: Vec<&str> = br.lines().collect();
    assert_eq!(rows[0], "eta,alpha,c_eta,u_ad,u_dc");
    assert_eq!(rows.len(), 32);
    assert!(rows[16].starts_with("5,0.797"), "{}", rows[16]);
}

#[test]
fn single_threshold_gives_one_curve() {
    let tmp = TempDir::new().unwrap();
    let r = goc(&["curve", "--eta", "3.5", "--grid", "401", "--out", dir_str(tmp.path())]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let files = sorted_files(&tmp.path().join("curves"));
    assert_eq!(files, vec![tmp.path().join("curves").join("curve_eta_03.500.csv")]);
    // Without utilities there is no best-response file.
    assert!(!tmp.path().join("best_response.csv").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let cfg = manifest("example2_case1");
        let r = goc(&["curve", "--config", &cfg, "--eta", "4", "--grid", "801", "--out", dir_str(d)]);
        assert_eq!(code(&r), 0, "{}", stderr(&r));
        let r = goc(&["equilibrium", "--config", &cfg, "--grid", "801", "--out", dir_str(d)]);
        assert_eq!(code(&r), 0, "{}", stderr(&r));
    }
    for name in ["curves/curve_eta_04.000.csv", "curves.csv", "best_response.csv", "equilibrium.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn threshold_below_floor_is_a_configuration_error() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("never");
    let r = goc(&["curve", "--eta", "1.5", "--out", dir_str(&out)]);
    assert_eq!(code(&r), 2);
    assert!(stderr(&r).contains("acceptance-policy floor"), "{}", stderr(&r));
    assert!(!out.exists());
}

#[test]
fn bad_alpha_is_a_configuration_error() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("never");
    for alpha in ["1.5", "0", "1e-7", "NaN"] {
        let r = goc(&["noise", "--eta", "5", "--alpha", alpha, "--out", dir_str(&out)]);
        assert_eq!(code(&r), 2, "alpha = {alpha}: {}", stderr(&r));
    }
    // A grid of thresholds leaves `--alpha` ambiguous.
    let r = goc(&["noise", "--alpha", "0.5", "--out", dir_str(&out)]);
    assert_eq!(code(&r), 2);
    assert!(!out.exists());
}

#[test]
fn utility_problems_are_configuration_errors() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("never");
    let r = goc(&["equilibrium", "--out", dir_str(&out)]);
    assert_eq!(code(&r), 2);
    assert!(stderr(&r).contains("utilities"), "{}", stderr(&r));

    let cfg = tmp.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{"utilities": {"adversary": {"form": "linear", "a": -1, "b": 1}, "dc": {"form": "ratio", "p": 1}}}"#,
    )
    .unwrap();
    let r = goc(&["equilibrium", "--config", dir_str(&cfg), "--out", dir_str(&out)]);
    assert_eq!(code(&r), 2, "{}", stderr(&r));
    assert!(!out.exists());
}

#[test]
fn unreadable_or_unwritable_paths_are_io_errors() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("missing.json");
    let r = goc(&["curve", "--config", dir_str(&missing)]);
    assert_eq!(code(&r), 3);
    assert!(stderr(&r).contains("missing.json"), "{}", stderr(&r));

    // The output "directory" is an existing regular file.
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let r = goc(&["curve", "--eta", "3", "--grid", "201", "--out", dir_str(&blocker)]);
    assert_eq!(code(&r), 3, "{}", stderr(&r));
    assert!(stderr(&r).contains("file"), "{}", stderr(&r));
}

#[test]
fn malformed_config_is_a_configuration_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"game": {"n": 2, "colour": 1}}"#).unwrap();
    let r = goc(&["curve", "--config", dir_str(&cfg), "--out", dir_str(&tmp.path().join("o"))]);
    assert_eq!(code(&r), 2);
    assert!(stderr(&r).contains("invalid run configuration"), "{}", stderr(&r));
}

#[test]
fn full_acceptance_noise_is_the_inner_shell() {
    let tmp = TempDir::new().unwrap();
    let r = goc(&["noise", "--eta", "5", "--alpha", "1", "--grid", "401", "--out", dir_str(tmp.path())]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let spec: NoiseSpec = serde_json::from_str(&fs::read_to_string(tmp.path().join("noise.json")).unwrap()).unwrap();
    assert_eq!(spec, NoiseSpec::SingleShell { z: 4.0 });
}

#[test]
fn noise_from_equilibrium_matches_the_report() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = manifest("example1");
    let r = goc(&["equilibrium", "--config", &cfg, "--out", dir_str(&a)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let report = a.join("equilibrium.json");
    let r = goc(&["noise", "--config", &cfg, "--from-equilibrium", "--report", dir_str(&report), "--out", dir_str(&a)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let r = goc(&["noise", "--config", &cfg, "--from-equilibrium", "--out", dir_str(&b)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));

    let read = |p: PathBuf| -> NoiseSpec { serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap() };
    let (from_report, solved) = (read(a.join("noise.json")), read(b.join("noise.json")));
    let (NoiseSpec::SingleShell { z: z1 }, NoiseSpec::SingleShell { z: z2 }) = (from_report, solved) else {
        panic!("{from_report:?} / {solved:?}");
    };
    assert!((z1 - 4.4857).abs() < 5e-3);
    // The report stores α* to ten significant digits.
    assert!((z1 - z2).abs() < 1e-7, "{z1} vs {z2}");

    let r = goc(&["noise", "--report", dir_str(&report)]);
    assert_eq!(code(&r), 2, "--report without --from-equilibrium is a usage error");
}

#[test]
fn verify_passes_on_a_small_run() {
    let tmp = TempDir::new().unwrap();
    let r = goc(&["verify", "--eta", "5", "--samples", "200000", "--seed", "7", "--out", dir_str(tmp.path())]);
    assert_eq!(code(&r), 0, "{}{}", stderr(&r), String::from_utf8_lossy(&r.stdout));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    let checks = report["checks"].as_array().unwrap();
    for suite in ["closed_form", "kernel_mc", "lp_oracle"] {
        assert!(checks.iter().any(|c| c["suite"] == suite), "{suite} missing");
    }
}

#[test]
fn flags_override_the_file() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"game": {"n": 3, "eta_grid": [2.0, 3.0]}, "sweep": {"grid_size": 1001},
            "sim": {"seed": 1, "samples": 10}, "output": {"dir": "from-file"}}"#,
    )
    .unwrap();
    let file_only = resolve_config(&Overrides { config: Some(cfg.clone()), ..Overrides::default() }).unwrap();
    assert_eq!(file_only.eta_grid().unwrap(), vec![2.0, 3.0]);
    assert_eq!(file_only.output.dir, "from-file");

    let o = Overrides {
        config: Some(cfg),
        out: Some(PathBuf::from("from-flag")),
        eta: Some(6.0),
        seed: Some(9),
        samples: Some(99),
        grid: Some(501),
    };
    let r = resolve_config(&o).unwrap();
    assert_eq!(r.eta_grid().unwrap(), vec![6.0]);
    assert_eq!((r.sim.seed, r.sim.samples, r.sweep.grid_size), (9, 99, 501));
    assert_eq!(r.output.dir, "from-flag");
    assert_eq!(r.game.n, 3);

    let defaults = resolve_config(&Overrides::default()).unwrap();
    assert_eq!(defaults.game.n, 2);
    assert_eq!(defaults.eta_grid().unwrap().len(), 31);
}

#[test]
fn curve_file_names_sort_by_threshold() {
    let names: Vec<String> = [2.0, 2.2, 9.8, 10.0, 12.5].iter().map(|&e| curve_file_name(e)).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert_eq!(names[1], "curve_eta_02.200.csv");
}
