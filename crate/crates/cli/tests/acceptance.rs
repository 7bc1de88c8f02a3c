//! Acceptance gate: one PASS/FAIL line per criterion, measurements indented
//! below it. Runs the shipped manifests through the command-line front-end.
//! Exits non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::Parser;
use goc_cli::{run, Cli};
use goc_core::frontier::{alpha_grid, characteristic_curve, sweep};
use goc_core::game::{build_noise, EquilibriumReport};
use goc_core::geometry::{cap_fraction, CapSpec, Dim};
use goc_core::kernels::{self, GameParams};
use goc_core::simulate;
use goc_core::verify::{closed_form_checks, kernel_mc_checks, lp_checks, standard_kernel_grid, Check};
use goc_core::{CharacteristicCurve, FrontierConfig, NoiseSpec, SimConfig, SimNoise};
use rayon::ThreadPoolBuilder;

/// Outcome of one criterion: every measurement line and whether it held.
#[derive(Default)]
struct Criterion {
    lines: Vec<(bool, String)>,
}

impl Criterion {
    fn near(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        let ok = (got - want).abs() <= tol;
        self.lines.push((ok, format!("{what} = {got:.6} (target {want} ± {tol})")));
    }

    fn exact(&mut self, what: &str, got: f64, want: f64) {
        self.lines.push((got == want, format!("{what} = {got} (target {want})")));
    }

    fn holds(&mut self, ok: bool, what: String) {
        self.lines.push((ok, what));
    }

    fn within(&mut self, what: &str, took: Duration, budget: Duration) {
        self.lines
            .push((took <= budget, format!("{what} took {:.1} s (budget {} s)", took.as_secs_f64(), budget.as_secs())));
    }

    fn checks(&mut self, checks: &[Check]) {
        for c in checks {
            self.holds(
                c.pass,
                format!("{} {}: distance {:.3e} (limit {:.0e})", c.suite, c.name, c.distance, c.threshold),
            );
        }
    }

    fn pass(&self) -> bool {
        !self.lines.is_empty() && self.lines.iter().all(|(ok, _)| *ok)
    }
}

fn manifest(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../manifests").join(format!("{name}.json"))
}

fn goc(args: &[&str]) -> goc_cli::Outcome {
    let cli = Cli::try_parse_from(std::iter::once("goc").chain(args.iter().copied())).expect("arguments parse");
    run(&cli).unwrap_or_else(|e| panic!("goc {args:?}: {e}"))
}

/// Equilibrium report and the noise command's output for one manifest.
fn solve_manifest(name: &str, out: &Path) -> (EquilibriumReport, NoiseSpec, Duration) {
    let cfg = manifest(name);
    let (cfg, out) = (cfg.to_str().unwrap(), out.to_str().unwrap());
    let start = Instant::now();
    goc(&["equilibrium", "--config", cfg, "--out", out]);
    let took = start.elapsed();
    let report_path = Path::new(out).join("equilibrium.json");
    let report: EquilibriumReport = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    goc(&["noise", "--config", cfg, "--out", out, "--from-equilibrium", "--report", report_path.to_str().unwrap()]);
    let noise: NoiseSpec =
        serde_json::from_str(&std::fs::read_to_string(Path::new(out).join("noise.json")).unwrap()).unwrap();
    (report, noise, took)
}

fn shell_radius(c: &mut Criterion, noise: &NoiseSpec, want: f64, tol: f64) {
    match *noise {
        NoiseSpec::SingleShell { z } => c.near("z*", z, want, tol),
        other => c.holds(false, format!("noise is {other:?}, expected a single shell")),
    }
}

/// `(MSE, PA)` of the per-threshold table at `eta`.
fn endpoint(c: &mut Criterion, r: &EquilibriumReport, eta: f64, mse: (f64, f64), pa: (f64, f64)) {
    match r.per_eta_table.iter().find(|row| row.eta == eta) {
        Some(row) => {
            c.near(&format!("MSE(eta={eta})"), row.mse, mse.0, mse.1);
            c.near(&format!("PA(eta={eta})"), row.alpha, pa.0, pa.1);
        }
        None => c.holds(false, format!("eta = {eta} missing from the table")),
    }
}

fn equilibrium(c: &mut Criterion, r: &EquilibriumReport, eta: f64, mse: (f64, f64), pa: (f64, f64), u_dc: (f64, f64)) {
    c.exact("eta*", r.eta_star, eta);
    c.near("PA*", r.alpha_star, pa.0, pa.1);
    c.near("MSE*", r.mse_star, mse.0, mse.1);
    c.near("U_DC*", r.u_dc, u_dc.0, u_dc.1);
}

fn criterion_1_and_2(out: &Path) -> (Criterion, Criterion) {
    let (r, noise, took) = solve_manifest("example1", &out.join("example1"));
    let mut c1 = Criterion::default();
    equilibrium(&mut c1, &r, 5.0, (5.5401, 0.02), (0.7978, 0.002), (14.4049, 0.05));
    shell_radius(&mut c1, &noise, 4.4857, 0.005);
    c1.within("equilibrium", took, Duration::from_secs(30));

    let mut c2 = Criterion::default();
    endpoint(&mut c2, &r, 2.0, (1.5622, 0.01), (0.4555, 0.002));
    endpoint(&mut c2, &r, 8.0, (13.2991, 0.05), (0.9419, 0.002));
    (c1, c2)
}

fn criterion_3(out: &Path) -> Criterion {
    let mut c = Criterion::default();
    let (r, noise, t1) = solve_manifest("example2_case1", &out.join("example2_case1"));
    equilibrium(&mut c, &r, 4.0, (4.2409, 0.02), (0.5375, 0.002), (0.2610, 0.002));
    shell_radius(&mut c, &noise, 3.8643, 0.005);
    let (r, noise, t2) = solve_manifest("example2_case2", &out.join("example2_case2"));
    equilibrium(&mut c, &r, 2.0, (1.3808, 0.01), (0.2292, 0.002), (0.1660, 0.002));
    shell_radius(&mut c, &noise, 1.9065, 0.005);
    c.within("both cases", t1 + t2, Duration::from_secs(60));
    c
}

fn criterion_4(out: &Path) -> Criterion {
    let mut c = Criterion::default();
    let (r, noise, took) = solve_manifest("example3", &out.join("example3"));
    equilibrium(&mut c, &r, 7.4, (13.4655, 0.05), (0.8849, 0.003), (-3.8231, 0.01));
    shell_radius(&mut c, &noise, 7.2574, 0.01);
    endpoint(&mut c, &r, 2.0, (1.0567, 0.05), (0.4434, 0.003));
    endpoint(&mut c, &r, 8.0, (15.7362, 0.05), (0.8969, 0.003));
    let finite =
        r.per_eta_table.iter().all(|row| [row.alpha, row.mse, row.u_ad, row.u_dc].iter().all(|v| v.is_finite()));
    c.holds(finite, format!("all {} table rows finite", r.per_eta_table.len()));
    c.within("equilibrium", took, Duration::from_secs(300));
    c
}

fn criterion_5() -> Criterion {
    let mut c = Criterion::default();
    c.checks(&closed_form_checks(1e-9).expect("closed-form suite runs"));
    c
}

fn criterion_6() -> Criterion {
    let mut c = Criterion::default();
    let start = Instant::now();
    let grid = standard_kernel_grid();
    c.holds(grid.len() == 12, format!("{} (n, eta, z) points", grid.len()));
    c.checks(&kernel_mc_checks(&grid, 1_000_000, 2024, 4.0).expect("simulation runs"));
    c.within("kernel suite", start.elapsed(), Duration::from_secs(120));
    c
}

fn criterion_7() -> Criterion {
    let mut c = Criterion::default();
    let alphas = [0.1, 0.3, 0.5, 0.7, 0.9];
    for eta in [2.0, 5.0, 8.0] {
        let p = GameParams::new(2, 1.0, eta).unwrap();
        c.checks(&lp_checks(&p, &alphas, 200, 2e-3).unwrap());
        c.checks(&lp_checks(&p, &alphas, 2000, 2e-4).unwrap());
    }
    c
}

fn curve(n: usize, eta: f64) -> CharacteristicCurve {
    characteristic_curve(&GameParams::new(n, 1.0, eta).unwrap(), &FrontierConfig::default()).unwrap()
}

fn timed(c: &mut Criterion, what: &str, f: impl FnOnce() -> (bool, String)) {
    let start = Instant::now();
    let (ok, detail) = f();
    c.holds(ok, format!("{what}: {detail}"));
    c.within(what, start.elapsed(), Duration::from_secs(60));
}

fn criterion_8() -> Criterion {
    let mut c = Criterion::default();
    let dims = [1, 2, 25, 250];
    let etas = [2.0, 3.5, 5.0, 8.0];

    timed(&mut c, "cap complement", || {
        let mut worst = 0.0f64;
        for n in [1, 2, 3, 10, 100, 1000] {
            for t in [-0.99, -0.6, -0.2, 0.0, 0.3, 0.75, 0.99] {
                let d = Dim::new(n).unwrap();
                let a = cap_fraction(d, CapSpec::new(1.5, 1.5 * t).unwrap()).unwrap();
                let b = cap_fraction(d, CapSpec::new(1.5, -1.5 * t).unwrap()).unwrap();
                worst = worst.max((a + b - 1.0).abs());
            }
        }
        (worst <= 1e-12, format!("max |V(c) + V(-c) - 1| = {worst:.1e}"))
    });

    timed(&mut c, "envelope concavity and dominance", || {
        let (mut concave, mut dominated) = (true, true);
        let (mut pairs, mut unresolved, mut skipped) = (0usize, 0usize, 0usize);
        for n in dims {
            for eta in etas {
                let cv = curve(n, eta);
                let v = &cv.vertices;
                // Every pair on the piecewise-linear hull; a strided subset on
                // the envelope with exact contact arcs, which is far costlier.
                for i in 0..v.len() {
                    for j in i + 1..v.len() {
                        let mid = 0.5 * (v[i].q + v[j].q);
                        // Neighbouring doubles have no midpoint to test.
                        if mid <= v[i].q || mid >= v[j].q {
                            unresolved += 1;
                            continue;
                        }
                        pairs += 1;
                        // The chord at the rounded midpoint: near full acceptance the
                        // slope reaches 1e9 and half an ulp of q moves ψ by 1e-7.
                        let t = (mid - v[i].q) / (v[j].q - v[i].q);
                        let avg = v[i].psi + t * (v[j].psi - v[i].psi);
                        concave &= cv.envelope_linear(mid) >= avg - 1e-10;
                        if i % 13 == 0 && j % 97 == 0 {
                            concave &= cv.envelope(mid).unwrap() >= avg - 1e-10;
                        }
                    }
                }
                let locus = sweep(&cv.params, &FrontierConfig::default()).unwrap();
                for s in &locus.samples {
                    // Above this, Φ is resolved only to its last bits.
                    if s.q > 1.0 - 1e-12 {
                        skipped += 1;
                        continue;
                    }
                    dominated &= cv.envelope(s.q).unwrap() >= s.psi * (1.0 - 1e-12);
                }
            }
        }
        (
            concave && dominated,
            format!(
                "concave over {pairs} vertex pairs {concave} ({unresolved} adjacent-double pairs \
             without a midpoint), dominates {dominated} ({skipped} samples with \
             q > 1 - 1e-12 excluded)"
            ),
        )
    });

    timed(&mut c, "c_eta monotone", || {
        let alphas = alpha_grid(400, 1e-6);
        let mut dec = true;
        for n in dims {
            for eta in etas {
                let cv = curve(n, eta);
                let vals: Vec<f64> = alphas.iter().map(|&a| cv.c_eta(a).unwrap()).collect();
                dec &= vals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10));
            }
        }
        let mut inc = true;
        for n in [2, 25] {
            let curves: Vec<_> = (0..=30).map(|i| curve(n, 2.0 + 0.2 * i as f64)).collect();
            for a in alpha_grid(50, 1e-6) {
                inc &= curves.windows(2).all(|w| w[1].c_eta(a).unwrap() >= w[0].c_eta(a).unwrap() * (1.0 - 1e-10));
            }
        }
        (dec && inc, format!("non-increasing in alpha {dec}, non-decreasing in eta {inc}"))
    });

    timed(&mut c, "noise identities", || {
        let mut worst = 0.0f64;
        for n in [1, 2, 25, 250] {
            for eta in [2.0, 5.0, 8.0] {
                let cv = curve(n, eta);
                let p = cv.params;
                for a in [0.05, 0.3, 0.6, 0.9, 1.0] {
                    let spec = build_noise(&cv, a).unwrap();
                    let err = match spec {
                        NoiseSpec::SingleShell { z } => ((kernels::phi(&p, z).unwrap() - a) / a).abs(),
                        NoiseSpec::TwoShellMixture { z1, z2, beta1, beta2 } => {
                            (beta1 * kernels::phi(&p, z1).unwrap() + beta2 * kernels::phi(&p, z2).unwrap() - a).abs()
                        }
                    };
                    let (_, mse) = spec.performance(&p).unwrap();
                    worst = worst.max(err).max((mse / cv.c_eta(a).unwrap() - 1.0).abs());
                }
            }
        }
        (worst <= 1e-7, format!("max deviation {worst:.1e}"))
    });

    timed(&mut c, "simulator thread determinism", || {
        let p = GameParams::new(3, 1.0, 2.5).unwrap();
        let spec = NoiseSpec::TwoShellMixture { z1: 1.8, z2: 2.9, beta1: 0.4, beta2: 0.6 };
        let cfg = SimConfig { chunk_size: 10_000, ..SimConfig::new(p, SimNoise::Spec(spec), 300_001, 17) };
        let runs: Vec<_> = [1, 2, 4, 7]
            .into_iter()
            .map(|t| ThreadPoolBuilder::new().num_threads(t).build().unwrap().install(|| simulate::run(&cfg).unwrap()))
            .collect();
        let same = runs.iter().all(|r| r == &runs[0]);
        (same, format!("1/2/4/7 threads identical: {same}"))
    });
    c
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let out = dir.path();
    let mut results: Vec<(&str, Criterion)> = Vec::new();
    let (c1, c2) = criterion_1_and_2(out);
    results.push(("1 example 1 equilibrium", c1));
    results.push(("2 example 1 endpoints", c2));
    results.push(("3 example 2 equilibria", criterion_3(out)));
    results.push(("4 example 3 equilibrium and endpoints", criterion_4(out)));
    results.push(("5 closed-form equivalence", criterion_5()));
    results.push(("6 kernel Monte-Carlo suite", criterion_6()));
    results.push(("7 envelope two-point oracle", criterion_7()));
    results.push(("8 property suites", criterion_8()));

    let mut failed = 0;
    for (name, c) in &results {
        let verdict = if c.pass() { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {name}");
        for (ok, line) in &c.lines {
            println!("    {} {line}", if *ok { "ok  " } else { "MISS" });
        }
        failed += usize::from(!c.pass());
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
