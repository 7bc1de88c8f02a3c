//! Leader/follower equilibrium of the game.
//!
//! For each threshold `η` the adversary (follower) picks the acceptance
//! probability `α` maximizing `U_AD(c_η(α), α)`. Among its best responses the
//! one worst for the data collector counts. The collector (leader) then
//! picks the `η` whose worst case is best, and the adversary's optimal noise
//! is read off the envelope: one shell where the envelope touches the
//! locus, a two-shell mixture on a chord.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::frontier::{characteristic_curve, CharacteristicCurve, FrontierConfig, Support};
use crate::kernels::{self, GameParams};

/// Golden ratio conjugate `(√5 − 1)/2`.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Parametric utility of `(MSE, PA)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilitySpec {
    /// `a·ln(MSE) + b·ln(PA)`
    LogLinear { a: f64, b: f64 },
    /// `a·MSE + b·PA`
    Linear { a: f64, b: f64 },
    /// `PA / MSE^p`
    Ratio { p: f64 },
}

/// Which player a utility belongs to; fixes the monotonicity it must have.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Adversary,
    DataCollector,
}

impl UtilitySpec {
    /// Checks the monotonicity required of `role`.
    ///
    /// The adversary must be strictly increasing in both MSE and PA; the data
    /// collector non-increasing in MSE and non-decreasing in PA.
    pub fn validate(&self, role: Role) -> Result<()> {
        let finite = match *self {
            UtilitySpec::LogLinear { a, b } | UtilitySpec::Linear { a, b } => a.is_finite() && b.is_finite(),
            UtilitySpec::Ratio { p } => p.is_finite(),
        };
        if !finite {
            return Err(config(format!("utility parameters must be finite: {self:?}")));
        }
        let ok = match (role, *self) {
            (Role::Adversary, UtilitySpec::LogLinear { a, b } | UtilitySpec::Linear { a, b }) => a > 0.0 && b > 0.0,
            (Role::Adversary, UtilitySpec::Ratio { .. }) => {
                return Err(config("the ratio form is decreasing in MSE and cannot be an adversary utility"))
            }
            (Role::DataCollector, UtilitySpec::LogLinear { a, b } | UtilitySpec::Linear { a, b }) => {
                a <= 0.0 && b >= 0.0
            }
            (Role::DataCollector, UtilitySpec::Ratio { p }) => p >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            let need = match role {
                Role::Adversary => "strictly increasing in MSE and PA (a > 0, b > 0)",
                Role::DataCollector => "non-increasing in MSE and non-decreasing in PA (a <= 0, b >= 0, p >= 0)",
            };
            Err(config(format!("{role:?} utility {self:?} must be {need}")))
        }
    }

    pub fn evaluate(&self, mse: f64, pa: f64) -> Result<f64> {
        if !(mse > 0.0) || !mse.is_finite() {
            return Err(domain(format!("utility needs MSE > 0, got {mse}")));
        }
        if !(pa > 0.0 && pa <= 1.0) {
            return Err(domain(format!("utility needs PA in (0, 1], got {pa}")));
        }
        Ok(match *self {
            UtilitySpec::LogLinear { a, b } => a * mse.ln() + b * pa.ln(),
            UtilitySpec::Linear { a, b } => a * mse + b * pa,
            UtilitySpec::Ratio { p } => pa / mse.powf(p),
        })
    }
}

/// Adversarial noise: uniform on one sphere, or a mixture of two.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    SingleShell { z: f64 },
    TwoShellMixture { z1: f64, z2: f64, beta1: f64, beta2: f64 },
}

impl NoiseSpec {
    /// Checks support, weights and, when given, the acceptance constraint.
    pub fn validate(&self, params: &GameParams, alpha: Option<f64>) -> Result<()> {
        let (lo, hi) = (params.z_lo(), params.z_hi());
        let slack = 1e-12 * hi;
        let in_support = |z: f64| z.is_finite() && z >= lo - slack && z <= hi + slack;
        match *self {
            NoiseSpec::SingleShell { z } => {
                if !in_support(z) {
                    return Err(domain(format!("shell radius {z} outside [{lo}, {hi}]")));
                }
                if let Some(a) = alpha {
                    let q = kernels::phi(params, z)?;
                    if (q - a).abs() > 1e-9 {
                        return Err(domain(format!("shell acceptance {q} differs from alpha {a}")));
                    }
                }
            }
            NoiseSpec::TwoShellMixture { z1, z2, beta1, beta2 } => {
                if !(in_support(z1) && in_support(z2) && z1 < z2) {
                    return Err(domain(format!("mixture radii need {lo} <= z1 < z2 <= {hi}, got {z1}, {z2}")));
                }
                if !(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0) {
                    return Err(domain(format!("mixture weights must lie in (0, 1), got {beta1}, {beta2}")));
                }
                if (beta1 + beta2 - 1.0).abs() > 1e-12 {
                    return Err(domain(format!("mixture weights sum to {}", beta1 + beta2)));
                }
                if let Some(a) = alpha {
                    let q = beta1 * kernels::phi(params, z1)? + beta2 * kernels::phi(params, z2)?;
                    if (q - a).abs() > 1e-9 {
                        return Err(domain(format!("mixture acceptance {q} differs from alpha {a}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// `(PA, MSE)` of this noise under `params`, from the kernels.
    pub fn performance(&self, params: &GameParams) -> Result<(f64, f64)> {
        let (q, psi) = match *self {
            NoiseSpec::SingleShell { z } => (kernels::phi(params, z)?, kernels::psi(params, z)?),
            NoiseSpec::TwoShellMixture { z1, z2, beta1, beta2 } => (
                beta1 * kernels::phi(params, z1)? + beta2 * kernels::phi(params, z2)?,
                beta1 * kernels::psi(params, z1)? + beta2 * kernels::psi(params, z2)?,
            ),
        };
        if q <= 0.0 {
            return Err(domain("noise is never accepted"));
        }
        Ok((q, psi / (4.0 * q)))
    }
}

/// Settings for the equilibrium search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub frontier: FrontierConfig,
    /// Points of the dense `α` grid scanned before golden-section refinement.
    pub alpha_grid: usize,
    /// Refine `η` by golden section between the grid neighbours of the winner.
    pub refine_eta: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { frontier: FrontierConfig::default(), alpha_grid: 4001, refine_eta: false }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.frontier.validate()?;
        if self.alpha_grid < 3 {
            return Err(config(format!("alpha_grid must be at least 3, got {}", self.alpha_grid)));
        }
        Ok(())
    }
}

/// Maximizers of the adversary's utility along the curve.
#[derive(Clone, Debug, PartialEq)]
pub struct BestResponse {
    /// Ascending `α` values within the tie tolerance of the maximum.
    pub alphas: Vec<f64>,
    pub value: f64,
}

/// Value tolerance for treating two utilities as tied.
pub fn tie_tolerance(value: f64) -> f64 {
    1e-9 * (1.0 + value.abs())
}

/// Golden-section maximization of `f` on `[a, b]`; returns `(x, f(x))`.
pub fn golden_max<F: FnMut(f64) -> Result<f64>>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
        if x1 >= x2 {
            break;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

fn u_along(curve: &CharacteristicCurve, u: &UtilitySpec, alpha: f64) -> Result<f64> {
    u.evaluate(curve.c_eta(alpha)?, alpha)
}

/// The adversary's best responses on `curve`.
///
/// A dense grid (merged with the hull's vertex abscissae) is scanned on the
/// envelope, and the most promising local maxima are refined by golden
/// section to an `α`-width of 1e-10. The scan uses the exact envelope rather
/// than its chords: in high dimensions the chord error between neighbouring
/// sweep samples exceeds the variation of `U_AD` near its maximum, and would
/// pull the scan onto hull vertices.
/// Refined maxima within [`tie_tolerance`] of the best are all responses.
/// Near a smooth peak the band of `α` within that tolerance is far narrower
/// than the grid spacing, so lone grid points inside it are not counted as
/// separate responses; a run of at least three such points is a genuine
/// plateau and every sample in it is reported.
pub fn best_response(curve: &CharacteristicCurve, adv: &UtilitySpec, grid_points: usize) -> Result<BestResponse> {
    adv.validate(Role::Adversary)?;
    let lo = curve.alpha_min;
    let mut alphas: Vec<f64> =
        (1..=grid_points.max(2)).map(|k| lo + (1.0 - lo) * k as f64 / grid_points.max(2) as f64).collect();
    alphas.extend(curve.vertices.iter().map(|v| v.q).filter(|&q| q > lo && q <= 1.0));
    alphas.push(1.0);
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();

    let coarse: Vec<f64> = alphas.par_iter().map(|&a| u_along(curve, adv, a)).collect::<Result<_>>()?;
    let m = alphas.len();
    let coarse_max = coarse.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    // Local maxima of the coarse scan, best first.
    let mut peaks: Vec<usize> = (0..m)
        .filter(|&i| (i == 0 || coarse[i] >= coarse[i - 1]) && (i + 1 == m || coarse[i] >= coarse[i + 1]))
        .collect();
    peaks.sort_by(|&i, &j| coarse[j].total_cmp(&coarse[i]).then(i.cmp(&j)));
    let spread = 1e-4 * (1.0 + coarse_max.abs());
    peaks.retain(|&i| coarse[i] >= coarse_max - spread);
    peaks.truncate(8);

    // One refined maximizer per coarse peak.
    let mut found: Vec<(f64, f64)> = Vec::new();
    for &i in &peaks {
        let a = alphas[i.saturating_sub(1)];
        let b = alphas[(i + 1).min(m - 1)];
        let mut best = (alphas[i], coarse[i]);
        if b > a {
            let g = golden_max(|x| u_along(curve, adv, x), a, b, 1e-10)?;
            if g.1 > best.1 {
                best = g;
            }
        }
        found.push(best);
    }
    let value = found.iter().map(|p| p.1).fold(coarse_max, f64::max);
    let eps = tie_tolerance(value);
    let mut responses: Vec<f64> = found.iter().filter(|p| p.1 >= value - eps).map(|p| p.0).collect();
    // A run of three or more grid points within tolerance is a plateau, not
    // the shoulder of a single smooth peak; all of its samples are responses.
    let mut i = 0;
    while i < m {
        let mut j = i;
        while j < m && coarse[j] >= value - eps {
            j += 1;
        }
        if j - i >= 3 {
            responses.extend_from_slice(&alphas[i..j]);
        }
        i = j.max(i + 1);
    }
    responses.sort_by(f64::total_cmp);
    responses.dedup_by(|x, y| (*x - *y).abs() <= 1e-9);
    Ok(BestResponse { alphas: responses, value })
}

/// Among tied responses, the one worst for the data collector.
///
/// Returns `(α, U_DC)`; near-equal values go to the smallest `α`.
pub fn worst_case_dc_value(curve: &CharacteristicCurve, responses: &[f64], dc: &UtilitySpec) -> Result<(f64, f64)> {
    if responses.is_empty() {
        return Err(domain("best-response set is empty"));
    }
    let mut sorted = responses.to_vec();
    sorted.sort_by(f64::total_cmp);
    let values: Vec<f64> = sorted.iter().map(|&a| u_along(curve, dc, a)).collect::<Result<_>>()?;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let eps = tie_tolerance(min);
    let i = values.iter().position(|&v| v <= min + eps).unwrap_or(0);
    Ok((sorted[i], values[i]))
}

/// Optimal adversarial noise at `alpha` on `curve`.
///
/// Where the envelope touches the locus the noise is a single shell with
/// `Φ_N(z) = α`. On a chord it mixes the two touching shells, ordered so
/// that `z1 < z2`; the weights solve `β₁Φ(z1) + β₂Φ(z2) = α`.
pub fn build_noise(curve: &CharacteristicCurve, alpha: f64) -> Result<NoiseSpec> {
    if alpha.is_nan() || alpha <= curve.alpha_min || alpha > 1.0 {
        return Err(domain(format!(
            "alpha must lie in (alpha_min, 1] with alpha_min = {}, got {alpha}",
            curve.alpha_min
        )));
    }
    Ok(match curve.support(alpha)? {
        Support::Contact { z, .. } => NoiseSpec::SingleShell { z },
        Support::Chord { lo, hi, .. } => {
            // `hi` has the larger q, hence the smaller radius.
            let w = (alpha - lo.q) / (hi.q - lo.q);
            NoiseSpec::TwoShellMixture { z1: hi.z, z2: lo.z, beta1: w, beta2: 1.0 - w }
        }
    })
}

/// One row of the per-threshold table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaRow {
    pub eta: f64,
    pub alpha: f64,
    pub mse: f64,
    pub u_ad: f64,
    pub u_dc: f64,
}

/// Extra information about how the equilibrium was found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n: usize,
    pub delta: f64,
    pub grid_size: usize,
    pub alpha_grid: usize,
    pub alpha_min: f64,
    /// Every tied best response at `eta_star`.
    pub responses: Vec<f64>,
}

/// The equilibrium and the table it was chosen from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub eta_star: f64,
    pub alpha_star: f64,
    pub mse_star: f64,
    pub u_ad: f64,
    pub u_dc: f64,
    pub noise: NoiseSpec,
    pub per_eta_table: Vec<EtaRow>,
    pub diagnostics: Diagnostics,
}

/// Solution of the follower problem at a single threshold.
#[derive(Clone, Debug)]
pub struct EtaSolution {
    pub row: EtaRow,
    pub curve: CharacteristicCurve,
    pub responses: Vec<f64>,
}

/// Best response and worst-case collector value at one `η`.
pub fn solve_eta(params: &GameParams, adv: &UtilitySpec, dc: &UtilitySpec, cfg: &SolverConfig) -> Result<EtaSolution> {
    solve_on_curve(characteristic_curve(params, &cfg.frontier)?, adv, dc, cfg.alpha_grid)
}

/// [`solve_eta`] on a curve that is already built.
pub fn solve_on_curve(
    curve: CharacteristicCurve,
    adv: &UtilitySpec,
    dc: &UtilitySpec,
    alpha_grid: usize,
) -> Result<EtaSolution> {
    let br = best_response(&curve, adv, alpha_grid)?;
    let (alpha, u_dc) = worst_case_dc_value(&curve, &br.alphas, dc)?;
    let mse = curve.c_eta(alpha)?;
    let u_ad = adv.evaluate(mse, alpha)?;
    let row = EtaRow { eta: curve.params.eta, alpha, mse, u_ad, u_dc };
    Ok(EtaSolution { row, curve, responses: br.alphas })
}

/// Leader optimization over a grid of thresholds.
///
/// `base` supplies `N` and `Δ`; its `η` is ignored. Thresholds are solved in
/// parallel and the best worst-case value wins, ties going to the smallest
/// `η`.
pub fn optimal_eta(
    base: &GameParams,
    eta_grid: &[f64],
    adv: &UtilitySpec,
    dc: &UtilitySpec,
    cfg: &SolverConfig,
) -> Result<EquilibriumReport> {
    if eta_grid.is_empty() {
        return Err(config("eta grid is empty"));
    }
    cfg.validate()?;
    adv.validate(Role::Adversary)?;
    dc.validate(Role::DataCollector)?;
    let mut grid = eta_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let params: Vec<GameParams> =
        grid.iter().map(|&e| base.with_eta(e).map_err(|err| config(err.to_string()))).collect::<Result<_>>()?;

    let solutions: Vec<EtaSolution> = params.par_iter().map(|p| solve_eta(p, adv, dc, cfg)).collect::<Result<_>>()?;

    let best = solutions.iter().map(|s| s.row.u_dc).fold(f64::NEG_INFINITY, f64::max);
    let eps = tie_tolerance(best);
    let mut star = solutions.iter().position(|s| s.row.u_dc >= best - eps).unwrap_or(0);
    let mut refined: Option<EtaSolution> = None;

    if cfg.refine_eta && solutions.len() >= 2 {
        let a = grid[star.saturating_sub(1)];
        let b = grid[(star + 1).min(grid.len() - 1)];
        let mut eval = |e: f64| -> Result<f64> { Ok(solve_eta(&base.with_eta(e)?, adv, dc, cfg)?.row.u_dc) };
        let (e, v) = golden_max(&mut eval, a, b, 1e-6)?;
        if v > best + eps {
            refined = Some(solve_eta(&base.with_eta(e)?, adv, dc, cfg)?);
        }
    }
    let table: Vec<EtaRow> = solutions.iter().map(|s| s.row).collect();
    let winner = match refined {
        Some(s) => s,
        None => {
            star = star.min(solutions.len() - 1);
            solutions.into_iter().nth(star).expect("index in range")
        }
    };
    let noise = build_noise(&winner.curve, winner.row.alpha)?;
    Ok(EquilibriumReport {
        eta_star: winner.row.eta,
        alpha_star: winner.row.alpha,
        mse_star: winner.row.mse,
        u_ad: winner.row.u_ad,
        u_dc: winner.row.u_dc,
        noise,
        per_eta_table: table,
        diagnostics: Diagnostics {
            n: base.n.get(),
            delta: base.delta,
            grid_size: cfg.frontier.grid_size,
            alpha_grid: cfg.alpha_grid,
            alpha_min: cfg.frontier.alpha_min,
            responses: winner.responses,
        },
    })
}

/// `2.0, 2.2, …` style grid from `start` to `stop` inclusive.
pub fn eta_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(config(format!("bad eta range start={start} stop={stop} step={step}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    if count > 1_000_000 {
        return Err(config("eta range has too many points"));
    }
    // Round to 12 decimals so 2.0 + 15·0.2 prints as 5 rather than 5.000000000000001.
    Ok((0..=count).map(|i| ((start + step * i as f64) * 1e12).round() / 1e12).collect())
}
