//! Balls, hyperspherical caps and two-ball lenses in `N` dimensions.
//!
//! A cap `𝒞_N(r, c)` is the part of the ball `‖x‖ ≤ r` with `x₁ ≥ c`. Its
//! volume `K_N`, first moment `Q_N = ∫ x₁` and second moment `J_N = ∫ ‖x‖²`
//! all scale like `r^N`, so they are returned as [`LogValue`]s. The volume
//! itself is never integrated directly: it is the ball volume times a
//! normalized fraction computed from the regularized incomplete beta.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::logval::LogValue;
use crate::special::{inc_beta, ln_beta, ln_gamma, ln_inc_beta};

/// Relative distance from `±r` inside which a cut is treated as tangent.
const DEGENERATE_CUT: f64 = 1e-12;

/// Dimension of the ambient space. Always at least 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dim(usize);

impl Dim {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(domain("dimension must be at least 1"));
        }
        Ok(Dim(n))
    }

    pub fn get(self) -> usize {
        self.0
    }

    fn f(self) -> f64 {
        self.0 as f64
    }
}

impl TryFrom<usize> for Dim {
    type Error = crate::Error;

    fn try_from(n: usize) -> Result<Self> {
        Dim::new(n)
    }
}

impl From<Dim> for usize {
    fn from(d: Dim) -> usize {
        d.0
    }
}

/// A cap of the ball of radius `r`, cut by the hyperplane `x₁ = c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapSpec {
    pub r: f64,
    pub c: f64,
}

impl CapSpec {
    pub fn new(r: f64, c: f64) -> Result<Self> {
        let spec = CapSpec { r, c };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(domain(format!("cap radius must be positive, got {}", self.r)));
        }
        if !self.c.is_finite() || self.c.abs() > self.r {
            return Err(domain(format!("cap cut {} outside [-{r}, {r}]", self.c, r = self.r)));
        }
        Ok(())
    }

    /// Which trivial branch, if any, the cut falls into.
    fn degenerate(&self) -> Option<Trivial> {
        let tol = DEGENERATE_CUT * self.r;
        if self.c >= self.r - tol {
            Some(Trivial::Empty)
        } else if self.c <= -self.r + tol {
            Some(Trivial::Full)
        } else {
            None
        }
    }

    /// `h² = r² − c²`, the squared radius of the cutting disk.
    fn h_sq(&self) -> f64 {
        ((self.r - self.c) * (self.r + self.c)).max(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Trivial {
    Empty,
    Full,
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("radius must be positive and finite, got {r}")))
    }
}

/// `ln V_k(r)` for any `k ≥ 0`; `V_0 = 1`.
pub(crate) fn ln_ball_volume_raw(k: usize, r: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let k = k as f64;
    0.5 * k * PI.ln() + k * r.ln() - ln_gamma(0.5 * k + 1.0)
}

/// Volume of the `n`-ball of radius `r`.
pub fn ball_volume_log(n: Dim, r: f64) -> Result<LogValue> {
    check_radius(r)?;
    Ok(LogValue::from_ln(ln_ball_volume_raw(n.get(), r)))
}

/// `E‖X‖²` for `X` uniform on the ball: `n r² / (n + 2)`.
pub fn ball_second_moment(n: Dim, r: f64) -> Result<f64> {
    check_radius(r)?;
    Ok(n.f() * r * r / (n.f() + 2.0))
}

/// Fraction of the ball's volume lying in the cap.
pub fn cap_fraction(n: Dim, spec: CapSpec) -> Result<f64> {
    spec.validate()?;
    Ok(cap_fraction_unchecked(n, spec))
}

/// Natural log of [`cap_fraction`]; finite for fractions far below `f64::MIN_POSITIVE`.
pub fn cap_fraction_ln(n: Dim, spec: CapSpec) -> Result<f64> {
    spec.validate()?;
    Ok(cap_fraction_ln_unchecked(n, spec))
}

fn cap_fraction_unchecked(n: Dim, spec: CapSpec) -> f64 {
    let t = spec.c / spec.r;
    if n.get() == 1 {
        return (spec.r - spec.c) / (2.0 * spec.r);
    }
    match spec.degenerate() {
        Some(Trivial::Empty) => return 0.0,
        Some(Trivial::Full) => return 1.0,
        None => {}
    }
    if spec.c == 0.0 {
        return 0.5;
    }
    let half = 0.5 * inc_beta(0.5 * (n.f() + 1.0), 0.5, (1.0 - t) * (1.0 + t), t * t);
    if spec.c > 0.0 {
        half
    } else {
        1.0 - half
    }
}

fn cap_fraction_ln_unchecked(n: Dim, spec: CapSpec) -> f64 {
    let t = spec.c / spec.r;
    if n.get() == 1 {
        return ((spec.r - spec.c) / (2.0 * spec.r)).ln();
    }
    match spec.degenerate() {
        Some(Trivial::Empty) => return f64::NEG_INFINITY,
        Some(Trivial::Full) => return 0.0,
        None => {}
    }
    if spec.c == 0.0 {
        return -LN_2;
    }
    let ln_half = ln_inc_beta(0.5 * (n.f() + 1.0), 0.5, (1.0 - t) * (1.0 + t), t * t) - LN_2;
    if spec.c > 0.0 {
        ln_half
    } else {
        (-ln_half.exp()).ln_1p()
    }
}

/// Independent evaluation of the cap fraction by adaptive quadrature.
///
/// Integrates `cos^n θ` over `[asin(c/r), π/2]` (the substitution
/// `t = sin θ` in `∫ (1−t²)^{(n−1)/2} dt` removes the endpoint singularity)
/// and divides by `B(½, (n+1)/2)`. Slower than [`cap_fraction`]; used to
/// cross-check it.
pub fn cap_fraction_quadrature(n: Dim, spec: CapSpec) -> Result<f64> {
    spec.validate()?;
    let k = n.f();
    let lo = (spec.c / spec.r).clamp(-1.0, 1.0).asin();
    let hi = PI / 2.0;
    if lo >= hi {
        return Ok(0.0);
    }
    let norm = ln_beta(0.5, 0.5 * (k + 1.0)).exp();
    let f = |theta: f64| theta.cos().max(0.0).powf(k);
    Ok(adaptive_simpson(&f, lo, hi, 1e-13 * norm, 60) / norm)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Cap volume `K_N(r, c)`; zero for an empty cap.
pub fn cap_volume_log(n: Dim, spec: CapSpec) -> Result<LogValue> {
    spec.validate()?;
    Ok(cap_volume_unchecked(n, spec))
}

fn cap_volume_unchecked(n: Dim, spec: CapSpec) -> LogValue {
    if n.get() == 1 {
        // K_1(r, c) = r − c, without a detour through the fraction.
        return LogValue::from_real(spec.r - spec.c);
    }
    let ln_frac = cap_fraction_ln_unchecked(n, spec);
    LogValue::from_ln(ln_frac).scale_ln(ln_ball_volume_raw(n.get(), spec.r))
}

/// First moment `Q_N(r, c) = ∫_cap x₁ dx = h²/(n+1) · V_{n−1}(h)`, `h² = r² − c²`.
pub fn cap_first_moment_log(n: Dim, spec: CapSpec) -> Result<LogValue> {
    spec.validate()?;
    Ok(cap_first_moment_unchecked(n, spec))
}

fn cap_first_moment_unchecked(n: Dim, spec: CapSpec) -> LogValue {
    if n.get() > 1 && spec.degenerate().is_some() {
        return LogValue::ZERO;
    }
    let h_sq = spec.h_sq();
    if h_sq == 0.0 {
        return LogValue::ZERO;
    }
    // V_{n-1}(h) from ln h directly, so tiny h never flushes to zero.
    let ln_h = 0.5 * h_sq.ln();
    let k = (n.get() - 1) as f64;
    let ln_v = if n.get() == 1 { 0.0 } else { 0.5 * k * PI.ln() + k * ln_h - ln_gamma(0.5 * k + 1.0) };
    LogValue::from_ln(h_sq.ln() - (n.f() + 1.0).ln() + ln_v)
}

/// Second moment `J_N(r, c) = ∫_cap ‖x‖² dx`.
pub fn cap_second_moment_log(n: Dim, spec: CapSpec) -> Result<LogValue> {
    spec.validate()?;
    Ok(cap_second_moment_unchecked(n, spec))
}

fn cap_second_moment_unchecked(n: Dim, spec: CapSpec) -> LogValue {
    let k = cap_volume_unchecked(n, spec);
    let q = cap_first_moment_unchecked(n, spec);
    let nf = n.f();
    LogValue::sum([k.scale(nf * spec.r * spec.r / (nf + 2.0)), q.scale(2.0 * spec.c / (nf + 2.0))])
}

/// Moments of the cap measured from the point `z e₁`:
/// `∫_cap (z − x₁) dx` and `∫_cap ‖x − z e₁‖² dx`.
pub fn shifted_cap_moments_log(n: Dim, r: f64, c: f64, z: f64) -> Result<(LogValue, LogValue)> {
    check_radius(r)?;
    if !(0.0..=r).contains(&c) {
        return Err(domain(format!("shifted cap needs 0 <= c <= r, got c={c}, r={r}")));
    }
    if !(z >= 0.0) || !z.is_finite() {
        return Err(domain(format!("shift must be non-negative, got {z}")));
    }
    Ok(shifted_unchecked(n, CapSpec { r, c }, z))
}

pub(crate) fn shifted_unchecked(n: Dim, spec: CapSpec, z: f64) -> (LogValue, LogValue) {
    let k = cap_volume_unchecked(n, spec);
    let q = cap_first_moment_unchecked(n, spec);
    let j = cap_second_moment_unchecked(n, spec);
    let first = LogValue::sum([k.scale(z), -q]);
    let second = LogValue::sum([k.scale(z * z), q.scale(-2.0 * z), j]);
    (first, second)
}

/// Unchecked building blocks shared with the kernels.
pub(crate) struct CapMoments {
    pub k: LogValue,
    pub q: LogValue,
    pub j: LogValue,
}

pub(crate) fn cap_moments(n: Dim, r: f64, c: f64) -> CapMoments {
    let spec = CapSpec { r, c: c.clamp(-r, r) };
    CapMoments {
        k: cap_volume_unchecked(n, spec),
        q: cap_first_moment_unchecked(n, spec),
        j: cap_second_moment_unchecked(n, spec),
    }
}

/// The two signed cut distances of the radical hyperplane of two spheres
/// whose centres are `d` apart, measured from each centre toward the other.
pub(crate) fn lens_cuts(r1: f64, r2: f64, d: f64) -> (f64, f64) {
    let c1 = (d * d + (r1 - r2) * (r1 + r2)) / (2.0 * d);
    let c2 = (d * d + (r2 - r1) * (r2 + r1)) / (2.0 * d);
    (c1.clamp(-r1, r1), c2.clamp(-r2, r2))
}

/// Intersection volume of two balls divided by the volume of the first.
///
/// Containment of a smaller second ball returns `(r2/r1)^n`, which flushes
/// to 0 once it drops below the smallest positive double.
pub fn intersection_fraction(n: Dim, r1: f64, r2: f64, d: f64) -> Result<f64> {
    Ok(intersection_fraction_ln(n, r1, r2, d)?.exp().clamp(0.0, 1.0))
}

/// Natural log of [`intersection_fraction`].
pub fn intersection_fraction_ln(n: Dim, r1: f64, r2: f64, d: f64) -> Result<f64> {
    check_radius(r1)?;
    check_radius(r2)?;
    if !(d >= 0.0) || !d.is_finite() {
        return Err(domain(format!("center distance must be non-negative, got {d}")));
    }
    let ln_ratio = n.f() * (r2 / r1).ln();
    if d >= r1 + r2 {
        return Ok(f64::NEG_INFINITY);
    }
    if d <= (r1 - r2).abs() {
        return Ok(ln_ratio.min(0.0));
    }
    let (c1, c2) = lens_cuts(r1, r2, d);
    let a = cap_fraction_ln_unchecked(n, CapSpec { r: r1, c: c1 });
    let b = cap_fraction_ln_unchecked(n, CapSpec { r: r2, c: c2 }) + ln_ratio;
    Ok(crate::logval::log_sum_exp(&[a, b]).min(0.0))
}
