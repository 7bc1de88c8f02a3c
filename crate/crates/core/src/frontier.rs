//! The characteristic curve `c_η(α) = Ψ̃*_N(α) / (4α)`.
//!
//! The kernel locus `(Φ_N(z), Ψ_N(z))` is swept over the support
//! `[(η−1)Δ, (η+1)Δ]`, and its upper concave envelope `Ψ̃*_N` is taken with a
//! monotone-chain hull. A hull segment whose two vertices are neighbouring
//! sweep samples lies on a stretch where the locus is itself concave; there
//! [`CharacteristicCurve::c_eta`] evaluates the locus exactly through
//! `Φ_N⁻¹` instead of using the chord. Segments spanning several samples are
//! genuine chords and are interpolated linearly.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};
use crate::kernels::{self, GameParams, KernelSample};

/// Sweep and evaluation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrontierConfig {
    /// Uniform z-points across the support, endpoints included.
    pub grid_size: usize,
    /// Extra geometrically spaced points near each endpoint.
    pub endpoint_points: usize,
    /// Those points lie within `endpoint_span · Δ` of the endpoint.
    pub endpoint_span: f64,
    /// Smallest acceptance probability at which `c_η` is evaluated.
    pub alpha_min: f64,
}

impl Default for FrontierConfig {
    fn default() -> Self {
        FrontierConfig { grid_size: 4001, endpoint_points: 32, endpoint_span: 1e-6, alpha_min: 1e-6 }
    }
}

impl FrontierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 3 {
            return Err(config(format!("grid_size must be at least 3, got {}", self.grid_size)));
        }
        if !(self.endpoint_span > 0.0 && self.endpoint_span < 0.5) {
            return Err(config(format!("endpoint_span must lie in (0, 0.5), got {}", self.endpoint_span)));
        }
        if !(self.alpha_min > 0.0 && self.alpha_min < 1.0) {
            return Err(config(format!("alpha_min must lie in (0, 1), got {}", self.alpha_min)));
        }
        Ok(())
    }
}

/// Kernel samples ordered by increasing `z`, with `q` strictly decreasing from 1 to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Locus {
    pub params: GameParams,
    pub samples: Vec<KernelSample>,
    pub grid_size: usize,
}

impl Locus {
    /// Wraps hand-built samples after checking the ordering invariants.
    pub fn from_samples(params: GameParams, samples: Vec<KernelSample>) -> Result<Self> {
        let grid_size = samples.len();
        let locus = Locus { params, samples, grid_size };
        locus.validate()?;
        Ok(locus)
    }

    pub fn validate(&self) -> Result<()> {
        for w in self.samples.windows(2) {
            if !(w[1].z > w[0].z) || !(w[1].q < w[0].q) {
                return Err(domain(format!(
                    "locus must have z increasing and q decreasing (z {} -> {}, q {} -> {})",
                    w[0].z, w[1].z, w[0].q, w[1].q
                )));
            }
        }
        if self.samples.iter().any(|s| !(0.0..=1.0).contains(&s.q) || !(s.psi >= 0.0)) {
            return Err(domain("locus samples need q in [0, 1] and psi >= 0"));
        }
        Ok(())
    }
}

/// The z-grid used by [`sweep`]: uniform plus geometric clusters at both ends.
pub fn sweep_grid(params: &GameParams, cfg: &FrontierConfig) -> Vec<f64> {
    let (lo, hi) = (params.z_lo(), params.z_hi());
    let m = cfg.grid_size - 1;
    let mut zs: Vec<f64> = (0..=m).map(|i| lo + (hi - lo) * (i as f64 / m as f64)).collect();
    zs[m] = hi;
    let k = cfg.endpoint_points;
    for j in 0..k {
        // Offsets from span·Δ down to span·Δ·1e-6.
        let frac = if k > 1 { j as f64 / (k - 1) as f64 } else { 0.0 };
        let off = cfg.endpoint_span * params.delta * 10f64.powf(-6.0 * frac);
        zs.push(lo + off);
        zs.push(hi - off);
    }
    zs.sort_by(f64::total_cmp);
    zs.dedup();
    zs
}

/// Evaluates the kernels along [`sweep_grid`].
///
/// Interior samples whose `q` does not strictly decrease (rounding at
/// `q ≈ 1`, or underflow to 0 in high dimensions) are dropped, so the
/// returned locus always satisfies its ordering invariant.
pub fn sweep(params: &GameParams, cfg: &FrontierConfig) -> Result<Locus> {
    params.validate()?;
    cfg.validate()?;
    let zs = sweep_grid(params, cfg);
    let raw: Vec<KernelSample> = zs.par_iter().map(|&z| kernels::sample(params, z)).collect::<Result<_>>()?;
    let last = raw.len() - 1;
    let mut samples: Vec<KernelSample> = Vec::with_capacity(raw.len());
    for (i, s) in raw.into_iter().enumerate() {
        let keep = match samples.last() {
            None => true,
            Some(prev) if i == last => s.q < prev.q,
            Some(prev) => s.q < prev.q && s.q > 0.0,
        };
        if keep {
            samples.push(s);
        }
    }
    Ok(Locus { params: *params, samples, grid_size: cfg.grid_size })
}

/// The unique `z` in the support with `Φ_N(z) = q`, by bisection.
pub fn phi_inverse(params: &GameParams, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(domain(format!("phi_inverse needs q in [0, 1], got {q}")));
    }
    phi_inverse_between(params, q, params.z_lo(), params.z_hi())
}

/// Bisection for `Φ_N(z) = q` restricted to `[a, b]`, which must bracket the root.
fn phi_inverse_between(params: &GameParams, q: f64, mut a: f64, mut b: f64) -> Result<f64> {
    if q >= 1.0 {
        return Ok(params.z_lo());
    }
    if q <= 0.0 {
        return Ok(params.z_hi());
    }
    let target = q.ln();
    let tol = 1e-12 * params.delta;
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if kernels::phi_ln(params, m)? > target {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// A vertex of the upper concave envelope.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HullVertex {
    pub q: f64,
    pub psi: f64,
    pub z: f64,
    /// Position of the vertex in the locus (z order).
    pub index: usize,
    /// Whether the vertex is a point of the raw locus.
    pub contact: bool,
}

/// Upper concave envelope `Ψ̃*_N` over `q ∈ [0, 1]` and the induced `c_η`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicCurve {
    pub params: GameParams,
    /// Hull vertices with strictly increasing `q`.
    pub vertices: Vec<HullVertex>,
    pub alpha_min: f64,
}

/// How the envelope is realised at a given `α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Support {
    /// The envelope touches the locus at this magnitude.
    Contact { z: f64, psi: f64 },
    /// The envelope is the chord between two touching points.
    Chord { lo: HullVertex, hi: HullVertex, psi: f64 },
}

impl Support {
    pub fn psi(&self) -> f64 {
        match *self {
            Support::Contact { psi, .. } | Support::Chord { psi, .. } => psi,
        }
    }
}

/// `(a − o) × (b − o)`; positive when `o → a → b` turns left.
/// Left-turn test for `o → a → b` with relative tolerance `tol`.
///
/// Differences are normalized per axis first, so neither tiny values near
/// `q = 0` in high dimensions nor a near-vertical locus near `q = 1` can
/// underflow or swamp the products. The tolerance is relative to the two
/// products whose difference is the cross term.
fn turns_left_or_straight(o: (f64, f64), a: (f64, f64), b: (f64, f64), tol: f64) -> bool {
    let (mut ax, mut ay, mut bx, mut by) = (a.0 - o.0, a.1 - o.1, b.0 - o.0, b.1 - o.1);
    let sx = ax.abs().max(bx.abs());
    let sy = ay.abs().max(by.abs());
    if sx == 0.0 || sy == 0.0 {
        return true;
    }
    ax /= sx;
    bx /= sx;
    ay /= sy;
    by /= sy;
    let (t1, t2) = (ax * by, ay * bx);
    t1 - t2 >= -tol * (t1.abs() + t2.abs())
}

/// Monotone-chain upper hull of the locus in the `(q, ψ)` plane.
pub fn upper_concave_envelope(locus: &Locus, alpha_min: f64) -> Result<CharacteristicCurve> {
    locus.validate()?;
    let p = locus.params;
    let mut pts: Vec<HullVertex> = locus
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| HullVertex { q: s.q, psi: s.psi, z: s.z, index: i, contact: true })
        .collect();
    // Ascending q is descending z.
    pts.reverse();
    if pts.len() < 2 || pts.first().map(|v| v.q) == pts.last().map(|v| v.q) {
        return Err(Error::Degenerate("envelope needs at least two distinct q values".into()));
    }
    let mut hull: Vec<HullVertex> = Vec::with_capacity(pts.len());
    for v in pts {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let a = hull[hull.len() - 1];
            // Pop unless o → a → v is a strict right turn.
            if turns_left_or_straight((o.q, o.psi), (a.q, a.psi), (v.q, v.psi), 1e-12) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(v);
    }
    Ok(CharacteristicCurve { params: p, vertices: hull, alpha_min })
}

/// Sweep followed by the envelope.
pub fn characteristic_curve(params: &GameParams, cfg: &FrontierConfig) -> Result<CharacteristicCurve> {
    let locus = sweep(params, cfg)?;
    upper_concave_envelope(&locus, cfg.alpha_min)
}

impl CharacteristicCurve {
    fn check_alpha(&self, alpha: f64) -> Result<()> {
        if alpha.is_nan() || alpha <= self.alpha_min || alpha > 1.0 {
            return Err(domain(format!(
                "alpha must lie in (alpha_min, 1] with alpha_min = {}, got {alpha}",
                self.alpha_min
            )));
        }
        Ok(())
    }

    /// Index `j` with `q_j <= q <= q_{j+1}`.
    fn segment(&self, q: f64) -> usize {
        let v = &self.vertices;
        let j = v.partition_point(|x| x.q <= q);
        j.saturating_sub(1).min(v.len() - 2)
    }

    fn chord(lo: &HullVertex, hi: &HullVertex, q: f64) -> f64 {
        let t = (q - lo.q) / (hi.q - lo.q);
        lo.psi + t * (hi.psi - lo.psi)
    }

    /// Piecewise-linear envelope `Ψ̃*_N(q)` through the hull vertices.
    pub fn envelope_linear(&self, q: f64) -> f64 {
        let j = self.segment(q);
        Self::chord(&self.vertices[j], &self.vertices[j + 1], q)
    }

    /// Envelope value and how it is attained.
    ///
    /// Between hull vertices that are neighbouring sweep samples the locus
    /// is evaluated exactly (its value never falls below the chord there by
    /// more than rounding, and the larger of the two is reported).
    pub fn support(&self, q: f64) -> Result<Support> {
        let j = self.segment(q);
        let (lo, hi) = (self.vertices[j], self.vertices[j + 1]);
        let chord = Self::chord(&lo, &hi, q);
        if q == lo.q {
            return Ok(Support::Contact { z: lo.z, psi: lo.psi });
        }
        if q == hi.q {
            return Ok(Support::Contact { z: hi.z, psi: hi.psi });
        }
        if lo.index.abs_diff(hi.index) == 1 {
            let (za, zb) = (hi.z.min(lo.z), hi.z.max(lo.z));
            let z = phi_inverse_between(&self.params, q, za, zb)?;
            let raw = kernels::psi(&self.params, z)?;
            if raw >= chord * (1.0 - 1e-8) {
                return Ok(Support::Contact { z, psi: raw.max(chord) });
            }
        }
        Ok(Support::Chord { lo, hi, psi: chord })
    }

    /// `Ψ̃*_N(q)` with the exact locus on contact arcs.
    pub fn envelope(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(domain(format!("envelope needs q in [0, 1], got {q}")));
        }
        Ok(self.support(q)?.psi())
    }

    /// `c_η(α) = Ψ̃*_N(α) / (4α)`.
    pub fn c_eta(&self, alpha: f64) -> Result<f64> {
        self.check_alpha(alpha)?;
        Ok(self.envelope(alpha)? / (4.0 * alpha))
    }

    /// `c_η(α)` from the piecewise-linear envelope only.
    pub fn c_eta_linear(&self, alpha: f64) -> Result<f64> {
        self.check_alpha(alpha)?;
        Ok(self.envelope_linear(alpha) / (4.0 * alpha))
    }

    /// Largest `ψ` over all vertices, used to scale tolerances.
    pub fn psi_max(&self) -> f64 {
        self.vertices.iter().map(|v| v.psi).fold(0.0, f64::max)
    }
}

/// Evenly spaced `α` values `k/m`, `k = 1..=m`, above the floor.
pub fn alpha_grid(points: usize, alpha_min: f64) -> Vec<f64> {
    (1..=points).map(|k| k as f64 / points as f64).filter(|&a| a > alpha_min).collect()
}

/// CSV rows `alpha,c_eta,eta,n,delta` for every curve, sorted by `α` then `η`.
pub fn curves_csv(curves: &[CharacteristicCurve], alphas: &[f64]) -> Result<String> {
    let mut rows: Vec<(f64, f64, f64, usize, f64)> = Vec::with_capacity(curves.len() * alphas.len());
    for curve in curves {
        for &a in alphas {
            let c = curve.c_eta(a)?;
            rows.push((a, c, curve.params.eta, curve.params.n.get(), curve.params.delta));
        }
    }
    rows.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.2.total_cmp(&y.2)));
    let mut out = String::from("alpha,c_eta,eta,n,delta\n");
    for (a, c, e, n, d) in rows {
        // Display for f64 is the shortest representation that round-trips.
        let _ = writeln!(out, "{a},{c},{e},{n},{d}");
    }
    Ok(out)
}
