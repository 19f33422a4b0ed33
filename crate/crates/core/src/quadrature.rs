//! Adaptive Simpson quadrature.

const MAX_DEPTH: u32 = 60;

/// Integrates `f` over `[a, b]` with adaptive Simpson refinement until the
/// local Richardson error estimate falls below `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    refine(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
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
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    // Halving stops at 1e-17 so endpoint singularities terminate on depth instead
    // of chasing a tolerance below double precision.
    let sub = (0.5 * tol).max(1e-17);
    refine(f, a, m, fa, flm, fm, left, sub, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, sub, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, -1.0, 3.0, 1e-12);
        // ∫ x^3 - 2x = x^4/4 - x^2 from -1 to 3 = (81/4 - 9) - (1/4 - 1) = 12
        assert!((v - 12.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_endpoint_singularity() {
        // ∫_0^1 sqrt(x) dx = 2/3
        let v = adaptive_simpson(f64::sqrt, 0.0, 1.0, 1e-13);
        assert!((v - 2.0 / 3.0).abs() < 1e-11, "{v}");
    }

    #[test]
    fn empty_interval() {
        assert_eq!(adaptive_simpson(|x| x, 2.0, 2.0, 1e-9), 0.0);
    }
}
