//! Gamma and incomplete-beta helpers.
//!
//! The incomplete beta is evaluated with the modified Lentz continued
//! fraction and returns its logarithm on the convergent side, which keeps
//! tiny cap fractions (`1e-300` and below) representable.

const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 20_000;

pub(crate) fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction part of `I_x(a, b)` (Numerical Recipes `betacf`).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Whether the continued fraction converges quickly for `I_x(a, b)`.
fn cf_side(a: f64, b: f64, x: f64) -> bool {
    x < (a + 1.0) / (a + b + 2.0)
}

/// `ln I_x(a, b)` evaluated directly by the continued fraction.
///
/// `one_minus_x` is passed separately so callers that know `1 - x` exactly
/// (e.g. as `t²`) do not lose digits.
fn ln_inc_beta_cf(a: f64, b: f64, x: f64, one_minus_x: f64) -> f64 {
    let ln_front = a * x.ln() + b * one_minus_x.ln() - ln_beta(a, b) - a.ln();
    ln_front + beta_cf(a, b, x).ln()
}

/// Regularized incomplete beta `I_x(a, b)` with `1 - x` supplied by the caller.
pub(crate) fn inc_beta(a: f64, b: f64, x: f64, one_minus_x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if one_minus_x <= 0.0 {
        return 1.0;
    }
    if cf_side(a, b, x) {
        ln_inc_beta_cf(a, b, x, one_minus_x).exp()
    } else {
        1.0 - ln_inc_beta_cf(b, a, one_minus_x, x).exp()
    }
}

/// `ln I_x(a, b)`, accurate even when the value underflows an `f64`.
pub(crate) fn ln_inc_beta(a: f64, b: f64, x: f64, one_minus_x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if one_minus_x <= 0.0 {
        return 0.0;
    }
    if cf_side(a, b, x) {
        ln_inc_beta_cf(a, b, x, one_minus_x)
    } else {
        (-ln_inc_beta_cf(b, a, one_minus_x, x).exp()).ln_1p()
    }
}
