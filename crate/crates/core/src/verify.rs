//! Cross-checks of the analytic pipeline against independent oracles.
//!
//! Three suites:
//! - `kernel_mc`: simulated acceptance frequency and conditional error of a
//!   fixed-magnitude adversary against `Φ_N(z)` and `Ψ_N(z)/(4Φ_N(z))`;
//! - `closed_form`: general-dimension cap quantities and kernels at `N = 2`
//!   against the planar closed forms, plus the `N = 1` cap length;
//! - `lp_oracle`: `4α·c_η(α)` against the brute-force two-point program.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::frontier::{characteristic_curve, FrontierConfig};
use crate::geometry::{cap_first_moment_log, cap_second_moment_log, cap_volume_log, CapSpec, Dim};
use crate::kernels::{self, GameParams};
use crate::oracle;
use crate::simulate::{self, SimConfig, SimNoise};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `|observed − expected| / stderr`.
    Sigma,
    /// `|observed − expected| / |expected|`.
    RelErr,
}

/// One line of a verification report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub expected: f64,
    pub observed: f64,
    pub metric: Metric,
    pub distance: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn new(
        suite: &str,
        name: String,
        expected: f64,
        observed: f64,
        metric: Metric,
        distance: f64,
        threshold: f64,
    ) -> Self {
        Check {
            suite: suite.to_string(),
            name,
            expected,
            observed,
            metric,
            distance,
            threshold,
            pass: distance <= threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn from_checks(checks: Vec<Check>) -> Self {
        VerifyReport { pass: checks.iter().all(|c| c.pass), checks }
    }
}

fn rel(observed: f64, expected: f64) -> f64 {
    if observed == expected {
        0.0
    } else {
        (observed - expected).abs() / expected.abs().max(f64::MIN_POSITIVE)
    }
}

/// Twelve `(game, z)` points spread over the lens branch for `n ∈ {1, 2, 3, 25}`, `Δ = 1`.
pub fn standard_kernel_grid() -> Vec<(GameParams, f64)> {
    let mut out = Vec::new();
    for n in [1, 2, 3, 25] {
        for (eta, frac) in [(2.0, 0.3), (3.5, 0.5), (5.0, 0.7)] {
            // At n = 25 the acceptance falls steeply; stay where it is not negligible.
            let frac = if n == 25 { frac * 0.5 } else { frac };
            let z = (eta - 1.0) + 2.0 * frac;
            out.push((GameParams::new(n, 1.0, eta).expect("valid grid point"), z));
        }
    }
    out
}

/// Simulated PA and conditional MSE against the kernels at each `(n, η, z)`.
pub fn kernel_mc_checks(points: &[(GameParams, f64)], samples: u64, seed: u64, sigmas: f64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (k, &(p, z)) in points.iter().enumerate() {
        let (n, eta) = (p.n.get(), p.eta);
        let sim =
            simulate::run(&SimConfig::new(p, SimNoise::FixedMagnitude { z }, samples, seed.wrapping_add(k as u64)))?;
        let q = kernels::phi(&p, z)?;
        let tag = format!("n={n} eta={eta} z={z}");
        // Binomial error under the analytic value, which stays meaningful
        // when no draw (or every draw) is accepted.
        let se = (q * (1.0 - q) / sim.samples as f64).sqrt();
        let pa_dist = if se > 0.0 {
            (sim.pa_hat - q).abs() / se
        } else if sim.pa_hat == q {
            0.0
        } else {
            f64::INFINITY
        };
        checks.push(Check::new("kernel_mc", format!("pa {tag}"), q, sim.pa_hat, Metric::Sigma, pa_dist, sigmas));
        if let (Some(m), Some(se), Some(want)) = (sim.mse_hat, sim.mse_stderr, kernels::shell_mse(&p, z)?) {
            let d = if se > 0.0 { (m - want).abs() / se } else { f64::INFINITY };
            checks.push(Check::new("kernel_mc", format!("mse {tag}"), want, m, Metric::Sigma, d, sigmas));
        }
    }
    Ok(checks)
}

/// `(r, c)` grid of 100 planar caps.
pub fn planar_cap_grid() -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(100);
    for r in [0.5, 1.0, 2.0, 3.5, 8.0] {
        for i in 0..20 {
            let t = -0.95 + 1.9 * i as f64 / 19.0;
            out.push((r, r * t));
        }
    }
    out
}

/// Largest relative errors of the general formulas against the planar ones.
pub fn closed_form_checks(threshold: f64) -> Result<Vec<Check>> {
    let d2 = Dim::new(2)?;
    let mut worst = [(0.0f64, 0.0f64, 0.0f64); 3];
    for (r, c) in planar_cap_grid() {
        let spec = CapSpec::new(r, c)?;
        let got = [
            cap_volume_log(d2, spec)?.to_real(),
            cap_first_moment_log(d2, spec)?.to_real(),
            cap_second_moment_log(d2, spec)?.to_real(),
        ];
        let want = [oracle::k2(r, c), oracle::q2(r, c), oracle::j2(r, c)];
        for i in 0..3 {
            let e = rel(got[i], want[i]);
            if e >= worst[i].0 {
                worst[i] = (e, want[i], got[i]);
            }
        }
    }
    let mut checks = Vec::new();
    for (i, name) in ["cap_volume n=2", "cap_first_moment n=2", "cap_second_moment n=2"].iter().enumerate() {
        let (e, want, got) = worst[i];
        checks.push(Check::new("closed_form", name.to_string(), want, got, Metric::RelErr, e, threshold));
    }

    let mut kernel_worst = [(0.0f64, 0.0f64, 0.0f64); 2];
    for eta in [2.0, 5.0, 8.0] {
        let p = GameParams::new(2, 1.0, eta)?;
        for i in 1..100 {
            let z = p.z_lo() + 2.0 * i as f64 / 100.0;
            let pairs = [(kernels::phi(&p, z)?, oracle::phi2(&p, z)?), (kernels::psi(&p, z)?, oracle::psi2(&p, z)?)];
            for (k, (got, want)) in pairs.into_iter().enumerate() {
                let e = rel(got, want);
                if e >= kernel_worst[k].0 {
                    kernel_worst[k] = (e, want, got);
                }
            }
        }
    }
    for (k, name) in ["phi n=2", "psi n=2"].iter().enumerate() {
        let (e, want, got) = kernel_worst[k];
        checks.push(Check::new("closed_form", name.to_string(), want, got, Metric::RelErr, e, threshold));
    }

    let d1 = Dim::new(1)?;
    let mut worst1 = (0.0f64, 0.0f64, 0.0f64);
    for (r, c) in planar_cap_grid() {
        let got = cap_volume_log(d1, CapSpec::new(r, c)?)?.to_real();
        let e = rel(got, r - c);
        if e >= worst1.0 {
            worst1 = (e, r - c, got);
        }
    }
    checks.push(Check::new(
        "closed_form",
        "cap_volume n=1".into(),
        worst1.1,
        worst1.2,
        Metric::RelErr,
        worst1.0,
        1e-14,
    ));
    Ok(checks)
}

/// Gap between the envelope and the two-point program at each `α`.
pub fn lp_checks(params: &GameParams, alphas: &[f64], points: usize, threshold: f64) -> Result<Vec<Check>> {
    let curve = characteristic_curve(params, &FrontierConfig::default())?;
    let mut checks = Vec::new();
    for &a in alphas {
        let env = 4.0 * a * curve.c_eta(a)?;
        let lp = oracle::lp_two_point(params, a, points)?;
        let name = format!("n={} eta={} alpha={a} grid={points}", params.n.get(), params.eta);
        checks.push(Check::new("lp_oracle", name, env, lp.value, Metric::RelErr, rel(lp.value, env), threshold));
    }
    Ok(checks)
}

/// The suite behind the `verify` command: closed forms once, then the
/// kernel and envelope checks for each game in `games`.
pub fn default_suite(games: &[GameParams], samples: u64, seed: u64) -> Result<VerifyReport> {
    let mut checks = closed_form_checks(1e-9)?;
    for (k, params) in games.iter().enumerate() {
        let points: Vec<(GameParams, f64)> =
            [0.0, 0.25, 0.5, 0.75].iter().map(|f| (*params, params.z_lo() + 2.0 * params.delta * f)).collect();
        // High dimensions run with fewer draws and a wider band.
        let sigmas = if params.n.get() >= 100 { 5.0 } else { 4.0 };
        let stream = seed.wrapping_add(1000 * k as u64);
        checks.extend(kernel_mc_checks(&points, samples, stream, sigmas)?);
        checks.extend(lp_checks(params, &[0.1, 0.3, 0.5, 0.7, 0.9], 200, 2e-3)?);
    }
    Ok(VerifyReport::from_checks(checks))
}
