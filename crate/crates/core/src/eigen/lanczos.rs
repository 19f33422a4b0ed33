//! Lanczos iteration with full reorthogonalization for the extreme eigenvalues
//! of a symmetric operator known only through matrix-vector products.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tridiag::tridiagonal_eigenvalues;
use super::{EigenError, LinearOperator};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LanczosOptions {
    /// Stop once both extreme Ritz values move less than this between iterations.
    pub tol: f64,
    pub max_iter: usize,
    /// Seed of the random start vector.
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { tol: 1e-9, max_iter: 300, seed: 0x5eed }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LanczosResult {
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub iterations: usize,
}

impl LanczosResult {
    pub fn norm(&self) -> f64 {
        self.lambda_max.abs().max(self.lambda_min.abs())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Largest and smallest eigenvalue of `op`.
///
/// Convergence requires the change of both extreme Ritz values to stay below
/// `tol` on two consecutive iterations, or an exhausted Krylov space.
pub fn lanczos_extremes<A: LinearOperator + ?Sized>(
    op: &A,
    opts: &LanczosOptions,
) -> Result<LanczosResult, EigenError> {
    let n = op.dim();
    if n == 0 {
        return Err(EigenError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let qn = dot(&q, &q).sqrt();
    q.iter_mut().for_each(|x| *x /= qn);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut prev: Option<(f64, f64)> = None;
    let mut quiet = 0;

    for j in 0..opts.max_iter.min(n) {
        op.apply(&q, &mut w);
        let a = dot(&q, &w);
        axpy(-a, &q, &mut w);
        if let (Some(b), Some(last)) = (beta.last(), basis.last()) {
            axpy(-b, last, &mut w);
        }
        basis.push(q.clone());
        // Two passes of classical Gram-Schmidt against every stored vector.
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                axpy(-c, v, &mut w);
            }
        }
        alpha.push(a);

        let ritz = tridiagonal_eigenvalues(&alpha, &beta)?;
        let hi = ritz.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = ritz.iter().copied().fold(f64::INFINITY, f64::min);
        let b = dot(&w, &w).sqrt();
        let scale = hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE);
        let exhausted = b <= 1e-12 * scale || j + 1 == n;
        if let Some((ph, pl)) = prev {
            if (hi - ph).abs() < opts.tol && (lo - pl).abs() < opts.tol {
                quiet += 1;
            } else {
                quiet = 0;
            }
        }
        if exhausted || quiet >= 2 {
            return Ok(LanczosResult { lambda_max: hi, lambda_min: lo, iterations: j + 1 });
        }
        prev = Some((hi, lo));
        beta.push(b);
        q.iter_mut().zip(&w).for_each(|(qi, wi)| *qi = wi / b);
    }
    Err(EigenError::LanczosCap(opts.max_iter))
}
