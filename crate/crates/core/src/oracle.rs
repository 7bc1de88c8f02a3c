//! Independent reference computations.
//!
//! - Planar closed forms for the cap quantities and both kernels, written
//!   with `arccos` and square roots only.
//! - A brute-force linear program for the envelope: on a finite z-grid the
//!   adversary maximizes `Σ ψᵢ fᵢ` subject to `Σ φᵢ fᵢ = α`, `Σ fᵢ = 1`,
//!   `fᵢ ≥ 0`. With two equality constraints an optimal vertex has at most two
//!   support points, so enumerating all pairs solves it exactly.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::kernels::{cut_point, GameParams};

/// Area of the planar cap `{‖x‖ ≤ r, x₁ ≥ c}`.
pub fn k2(r: f64, c: f64) -> f64 {
    let c = c.clamp(-r, r);
    r * r * (c / r).acos() - c * ((r - c) * (r + c)).max(0.0).sqrt()
}

/// `∫ x₁` over the planar cap: `(2/3)(r² − d²)^{3/2}`.
pub fn q2(r: f64, d: f64) -> f64 {
    (2.0 / 3.0) * ((r - d) * (r + d)).max(0.0).powf(1.5)
}

/// `∫ ‖x‖²` over the planar cap: `½ r² K₂ + ½ d Q₂`.
pub fn j2(r: f64, d: f64) -> f64 {
    0.5 * r * r * k2(r, d) + 0.5 * d * q2(r, d)
}

fn planar(params: &GameParams) -> Result<()> {
    if params.n.get() != 2 {
        return Err(domain(format!("planar closed forms need n = 2, got {}", params.n.get())));
    }
    Ok(())
}

/// `Φ₂(z)` from the planar closed form.
pub fn phi2(params: &GameParams, z: f64) -> Result<f64> {
    planar(params)?;
    if z <= params.z_lo() {
        return Ok(1.0);
    }
    if z >= params.z_hi() {
        return Ok(0.0);
    }
    let d = params.delta;
    let u = cut_point(params, z)?;
    Ok((k2(d, u) + k2(params.eta * d, z - u)) / (PI * d * d))
}

/// `Ψ₂(z)` from the planar closed form.
pub fn psi2(params: &GameParams, z: f64) -> Result<f64> {
    planar(params)?;
    let d = params.delta;
    if z <= params.z_lo() {
        return Ok(z * z + 0.5 * d * d);
    }
    if z >= params.z_hi() {
        return Ok(0.0);
    }
    let e = params.eta;
    let u = cut_point(params, z)?;
    let w = z - u;
    let total =
        (0.5 * d * d + z * z) * k2(d, u) + (0.5 * e * e * d * d + 4.0 * z * z) * k2(e * d, w) + 0.5 * u * q2(d, u)
            - 0.5 * (3.0 * z + u) * q2(e * d, w);
    Ok(total / (PI * d * d))
}

/// Optimal two-point support of the discretized adversary problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpSolution {
    /// `max Σ ψᵢ fᵢ`, comparable to `4α·c_η(α)`.
    pub value: f64,
    pub z1: f64,
    pub z2: f64,
    /// Weight on `z1`.
    pub weight1: f64,
}

/// Solves the adversary's linear program at acceptance `alpha` on `points`
/// uniformly spaced magnitudes across the support.
pub fn lp_two_point(params: &GameParams, alpha: f64, points: usize) -> Result<LpSolution> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if points < 2 {
        return Err(domain("the LP grid needs at least two points"));
    }
    let (lo, hi) = (params.z_lo(), params.z_hi());
    let grid: Vec<(f64, f64, f64)> = (0..points)
        .map(|i| {
            let z = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            Ok((z, crate::kernels::phi(params, z)?, crate::kernels::psi(params, z)?))
        })
        .collect::<Result<_>>()?;
    let mut best: Option<LpSolution> = None;
    let mut offer = |cand: LpSolution| {
        if best.is_none_or(|b| cand.value > b.value) {
            best = Some(cand);
        }
    };
    for (i, &(za, pa, sa)) in grid.iter().enumerate() {
        if pa == alpha {
            offer(LpSolution { value: sa, z1: za, z2: za, weight1: 1.0 });
        }
        if pa < alpha {
            continue;
        }
        for &(zb, pb, sb) in &grid[i + 1..] {
            if pb >= alpha || pa == pb {
                continue;
            }
            let w = (alpha - pb) / (pa - pb);
            offer(LpSolution { value: w * sa + (1.0 - w) * sb, z1: za, z2: zb, weight1: w });
        }
    }
    best.ok_or_else(|| domain(format!("no feasible support for alpha = {alpha}")))
}
