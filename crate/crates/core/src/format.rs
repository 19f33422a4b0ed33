//! Numeric text formatting shared by every CSV/JSON writer.

use num_rational::BigRational;

/// Formats a float with 17 significant digits (round-trips exactly).
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Formats a rational as `num/den` (or just `num` when the denominator is 1).
pub fn fmt_rational(r: &BigRational) -> String {
    if r.denom() == &num_bigint::BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
