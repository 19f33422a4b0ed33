//! The semicircle law μ_sc on [−2, 2].

use std::io::Write;

use thiserror::Error;

use crate::eigen::Spectrum;
use crate::format::fmt_f64;

/// Largest moment order with a `u64` Catalan number in the table.
pub const MAX_MOMENT_ORDER: u32 = 40;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SemicircleError {
    #[error("moment order {0} is odd")]
    OddOrder(u32),
    #[error("moment order {0} exceeds {MAX_MOMENT_ORDER}")]
    OrderTooLarge(u32),
    #[error("empty spectrum")]
    EmptySpectrum,
}

/// f(x) = √(4 − x²)/(2π) on [−2, 2], zero outside.
pub fn density(x: f64) -> f64 {
    let x = x.abs();
    if x >= 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * std::f64::consts::PI)
    }
}

pub fn cdf(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        let pi = std::f64::consts::PI;
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * pi) + (x / 2.0).asin() / pi
    }
}

/// Inverse of [`cdf`] by bisection; `p` is clamped to [0, 1].
pub fn quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return -2.0;
    }
    if p >= 1.0 {
        return 2.0;
    }
    let (mut lo, mut hi) = (-2.0f64, 2.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Moment ∫ x^order dμ_sc: the Catalan number C_{order/2}.
pub fn moment(order: u32) -> Result<u64, SemicircleError> {
    if order % 2 == 1 {
        return Err(SemicircleError::OddOrder(order));
    }
    if order > MAX_MOMENT_ORDER {
        return Err(SemicircleError::OrderTooLarge(order));
    }
    let mut c: u128 = 1;
    for k in 0..(order / 2) as u128 {
        c = c * 2 * (2 * k + 1) / (k + 2);
    }
    Ok(c as u64)
}

/// Kolmogorov distance sup_x |F_n(x) − F(x)| between the empirical spectral
/// distribution and μ_sc. The supremum is attained at an eigenvalue, on one side
/// or the other of its jump.
pub fn ks_distance(spectrum: &Spectrum) -> Result<f64, SemicircleError> {
    ks_distance_values(&spectrum.eigenvalues)
}

/// [`ks_distance`] for an unsorted sample.
pub fn ks_distance_values(values: &[f64]) -> Result<f64, SemicircleError> {
    if values.is_empty() {
        return Err(SemicircleError::EmptySpectrum);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < v.len() {
        let mut j = i + 1;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        let f = cdf(v[i]);
        worst = worst.max((i as f64 / n - f).abs()).max((j as f64 / n - f).abs());
        i = j;
    }
    Ok(worst)
}

/// CSV table `x,density,cdf` at `points` equally spaced abscissae over `[a, b]`.
pub fn write_table<W: Write>(mut out: W, a: f64, b: f64, points: usize) -> std::io::Result<()> {
    writeln!(out, "x,density,cdf")?;
    let steps = points.max(2) - 1;
    for k in 0..=steps {
        let x = if k == steps { b } else { a + (b - a) * k as f64 / steps as f64 };
        writeln!(out, "{},{},{}", fmt_f64(x), fmt_f64(density(x)), fmt_f64(cdf(x)))?;
    }
    Ok(())
}
