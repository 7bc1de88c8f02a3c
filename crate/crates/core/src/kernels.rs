//! Acceptance kernel `Φ_N(z)` and error kernel `Ψ_N(z)`.
//!
//! Both depend on the adversarial noise only through its magnitude `z`.
//! With the honest ball `B(0, Δ)` and the acceptance ball `B(z e₁, ηΔ)`:
//!
//! - `Φ_N(z)` is the fraction of the honest ball inside the acceptance ball;
//! - `Ψ_N(z) = 4 · E[‖(N_h + N_a)/2‖² ; accept]`, so a single shell of
//!   radius `z` has `MSE = Ψ_N(z) / (4 Φ_N(z))`.
//!
//! In the lens branch the radical hyperplane sits at `x₁ = u_c` and splits
//! the lens into a cap of the honest ball and a left-oriented cap of the
//! acceptance ball.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::geometry::{cap_moments, intersection_fraction_ln, ln_ball_volume_raw, Dim};
use crate::logval::LogValue;

/// Relative drift outside the support that is silently clamped.
const CLAMP_TOL: f64 = 1e-12;

/// One game instance: dimension, honest radius `Δ` and threshold `η`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    pub n: Dim,
    pub delta: f64,
    pub eta: f64,
}

impl GameParams {
    pub fn new(n: usize, delta: f64, eta: f64) -> Result<Self> {
        let p = GameParams { n: Dim::new(n)?, delta, eta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(domain(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.eta >= 2.0) || !self.eta.is_finite() {
            return Err(domain(format!(
                "eta must be at least 2 (acceptance thresholds below 2 are not supported), got {}",
                self.eta
            )));
        }
        Ok(())
    }

    /// Same game with a different threshold.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        let p = GameParams { eta, ..*self };
        p.validate()?;
        Ok(p)
    }

    /// `(η − 1)Δ`: below this magnitude every report is accepted.
    pub fn z_lo(&self) -> f64 {
        (self.eta - 1.0) * self.delta
    }

    /// `(η + 1)Δ`: at or above this magnitude nothing is accepted.
    pub fn z_hi(&self) -> f64 {
        (self.eta + 1.0) * self.delta
    }

    /// `N Δ² / (N + 2)`, the honest second moment.
    pub fn honest_second_moment(&self) -> f64 {
        let n = self.n.get() as f64;
        n * self.delta * self.delta / (n + 2.0)
    }
}

/// A point `(z, Φ_N(z), Ψ_N(z))` of the kernel locus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub z: f64,
    pub q: f64,
    pub psi: f64,
}

impl KernelSample {
    /// MSE of the single shell at this magnitude; `None` when it is never accepted.
    pub fn mse(&self) -> Option<f64> {
        (self.q > 0.0).then(|| self.psi / (4.0 * self.q))
    }
}

/// Location `u_c = (z² + Δ²(1 − η²)) / (2z)` of the radical hyperplane.
pub fn cut_point(params: &GameParams, z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(domain(format!("cut point needs z > 0, got {z}")));
    }
    Ok(cut_point_unchecked(params, z))
}

fn cut_point_unchecked(p: &GameParams, z: f64) -> f64 {
    let d = p.delta;
    (z * z + d * d * (1.0 - p.eta) * (1.0 + p.eta)) / (2.0 * z)
}

fn check_z(p: &GameParams, z: f64) -> Result<f64> {
    if z.is_nan() {
        return Err(domain("z is NaN"));
    }
    if z < 0.0 {
        if z >= -CLAMP_TOL * p.z_hi() {
            return Ok(0.0);
        }
        return Err(domain(format!("z must be non-negative, got {z}")));
    }
    Ok(z)
}

enum Branch {
    Inside,
    Lens,
    Outside,
}

fn branch(p: &GameParams, z: f64) -> Branch {
    if z <= p.z_lo() {
        Branch::Inside
    } else if z >= p.z_hi() {
        Branch::Outside
    } else {
        Branch::Lens
    }
}

/// Acceptance probability of a report with noise magnitude `z`.
pub fn phi(params: &GameParams, z: f64) -> Result<f64> {
    Ok(phi_ln(params, z)?.exp())
}

/// `ln Φ_N(z)`; stays finite where `Φ_N` itself underflows.
pub fn phi_ln(params: &GameParams, z: f64) -> Result<f64> {
    let z = check_z(params, z)?;
    Ok(match branch(params, z) {
        Branch::Inside => 0.0,
        Branch::Outside => f64::NEG_INFINITY,
        Branch::Lens => intersection_fraction_ln(params.n, params.delta, params.eta * params.delta, z)?,
    })
}

/// Error kernel `Ψ_N(z)`.
pub fn psi(params: &GameParams, z: f64) -> Result<f64> {
    Ok(psi_log(params, z)?.to_real().max(0.0))
}

/// `Ψ_N(z)` as a [`LogValue`], for ratios that underflow as plain doubles.
pub fn psi_log(params: &GameParams, z: f64) -> Result<LogValue> {
    let z = check_z(params, z)?;
    Ok(match branch(params, z) {
        Branch::Inside => LogValue::from_real(z * z + params.honest_second_moment()),
        Branch::Outside => LogValue::ZERO,
        Branch::Lens => psi_lens(params, z),
    })
}

/// `(1/V_N(Δ)) · ( [J(Δ,u) + z²K(Δ,u)] + [J(ηΔ,w) + 4z²K(ηΔ,w) − 2zQ(ηΔ,w)] )`
/// with `w = z − u`.
fn psi_lens(p: &GameParams, z: f64) -> LogValue {
    let u = cut_point_unchecked(p, z);
    let big = p.eta * p.delta;
    let honest = cap_moments(p.n, p.delta, u);
    let accept = cap_moments(p.n, big, z - u);
    let total = LogValue::sum([
        honest.j,
        honest.k.scale(z * z),
        accept.j,
        accept.k.scale(4.0 * z * z),
        accept.q.scale(-2.0 * z),
    ]);
    if total.sign() < 0 {
        // Only rounding noise can make the sum negative.
        return LogValue::ZERO;
    }
    total.scale_ln(-ln_ball_volume_raw(p.n.get(), p.delta))
}

/// Both kernels at `z`.
pub fn sample(params: &GameParams, z: f64) -> Result<KernelSample> {
    Ok(KernelSample { z, q: phi(params, z)?, psi: psi(params, z)? })
}

/// Single-shell MSE `Ψ_N(z) / (4 Φ_N(z))`, computed in log space.
pub fn shell_mse(params: &GameParams, z: f64) -> Result<Option<f64>> {
    let ln_q = phi_ln(params, z)?;
    if ln_q == f64::NEG_INFINITY {
        return Ok(None);
    }
    let psi = psi_log(params, z)?;
    Ok(Some((psi.ln_abs() - ln_q - 4f64.ln()).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, eta: f64) -> GameParams {
        GameParams::new(n, 1.0, eta).unwrap()
    }

    #[test]
    fn rejects_low_eta() {
        assert!(GameParams::new(2, 1.0, 1.9).is_err());
        assert!(GameParams::new(2, 0.0, 3.0).is_err());
        assert!(GameParams::new(0, 1.0, 3.0).is_err());
    }

    #[test]
    fn cut_point_values() {
        let p = GameParams::new(3, 1.5, 4.0).unwrap();
        assert!((cut_point(&p, p.z_lo()).unwrap() + 1.5).abs() < 1e-14);
        assert!((cut_point(&p, p.z_hi()).unwrap() - 1.5).abs() < 1e-14);
        assert!((cut_point(&params(2, 4.0), 4.0).unwrap() - 0.125).abs() < 1e-15);
        assert!(cut_point(&p, 0.0).is_err());
    }

    #[test]
    fn phi_boundaries_and_one_dimension() {
        for n in [1, 2, 3, 25, 250] {
            let p = params(n, 5.0);
            assert_eq!(phi(&p, p.z_lo()).unwrap(), 1.0);
            assert_eq!(phi(&p, p.z_hi()).unwrap(), 0.0);
            assert!((phi(&p, p.z_lo() * (1.0 + 1e-13)).unwrap() - 1.0).abs() < 1e-9);
            assert!(phi(&p, p.z_hi() * (1.0 - 1e-13)).unwrap() < 1e-9);
        }
        assert!((phi(&params(1, 3.0), 3.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn psi_branches() {
        let p = params(2, 5.0);
        assert_eq!(psi(&p, 0.0).unwrap(), 0.5);
        assert_eq!(psi(&p, 6.0).unwrap(), 0.0);
        assert_eq!(psi(&p, 7.0).unwrap(), 0.0);
        for n in [1, 2, 3, 25, 250] {
            let p = params(n, 3.0);
            let inside = psi(&p, p.z_lo()).unwrap();
            let lens = psi(&p, p.z_lo() * (1.0 + 1e-12)).unwrap();
            assert!(((inside - lens) / inside).abs() < 1e-8, "n={n}: {inside} vs {lens}");
        }
    }

    #[test]
    fn negative_drift_is_clamped() {
        let p = params(2, 3.0);
        assert_eq!(phi(&p, -1e-14).unwrap(), 1.0);
        assert!(phi(&p, -1e-3).is_err());
    }

    #[test]
    fn phi_strictly_decreasing_on_lens() {
        for n in [1, 2, 3, 25, 250] {
            let p = params(n, 4.0);
            let mut prev = f64::INFINITY;
            for i in 1..200 {
                let z = p.z_lo() + (p.z_hi() - p.z_lo()) * i as f64 / 200.0;
                let cur = phi_ln(&p, z).unwrap();
                assert!(cur < prev, "n={n} z={z}");
                prev = cur;
            }
        }
    }

    #[test]
    fn example_one_shell() {
        let p = params(2, 5.0);
        let z = 4.4857;
        let q = phi(&p, z).unwrap();
        let mse = shell_mse(&p, z).unwrap().unwrap();
        assert!((q - 0.7978).abs() < 5e-4, "{q}");
        assert!((mse - 5.5401).abs() < 5e-3, "{mse}");
        assert!((psi(&p, z).unwrap() - 4.0 * q * mse).abs() < 1e-12);
    }
}
