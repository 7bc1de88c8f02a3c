//! JSON output with a fixed number of significant digits.

use serde::Serialize;
use serde_json::Value;

use crate::error::{domain, Result};

/// Significant digits kept in JSON documents.
pub const JSON_DIGITS: usize = 10;

/// Rounds `x` to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let digits = digits.max(1);
    format!("{:.*e}", digits - 1, x).parse().unwrap_or(x)
}

/// Rounds every floating-point number in `v`; integers are left alone.
pub fn round_json(v: &mut Value, digits: usize) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round_sig(x, digits))) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|x| round_json(x, digits)),
        Value::Object(map) => map.values_mut().for_each(|x| round_json(x, digits)),
        _ => {}
    }
}

/// Pretty JSON with numbers rounded to [`JSON_DIGITS`] and a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| domain(format!("serialization failed: {e}")))?;
    round_json(&mut v, JSON_DIGITS);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| domain(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}
