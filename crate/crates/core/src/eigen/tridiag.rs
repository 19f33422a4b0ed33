//! Householder reduction to tridiagonal form and implicit-shift QL.

use super::{DenseMatrix, EigenError};

/// Sweep cap per eigenvalue.
pub const MAX_QL_SWEEPS: usize = 50;

/// Relative deflation threshold on off-diagonal elements.
const DEFLATION: f64 = 1e-15;

/// Reduces a symmetric matrix to tridiagonal form `(diagonal, off_diagonal)`
/// with Householder reflections. Only the lower triangle of the input is read.
/// `off_diagonal[k]` couples rows k and k+1.
pub fn tridiagonalize(matrix: &DenseMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = matrix.n();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let mut a = matrix.data().to_vec();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];

    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let v = &mut v[..m];
        let p = &mut p[..m];
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = a[(k + 1 + i) * n + k];
        }
        let scale: f64 = v.iter().map(|x| x.abs()).sum();
        diag[k] = a[k * n + k];
        if scale == 0.0 {
            off[k] = 0.0;
            continue;
        }
        let norm = v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt() * scale;
        let alpha = if v[0] > 0.0 { -norm } else { norm };
        off[k] = alpha;
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;

        // p = beta * A22 v using the lower triangle of the trailing block.
        p.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..m {
            let row = &a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + k + 1 + i];
            let vi = v[i];
            let (pl, pr) = p.split_at_mut(i);
            let mut acc = 0.0;
            for ((pj, &aij), &vj) in pl.iter_mut().zip(row).zip(v.iter()) {
                acc += aij * vj;
                *pj += aij * vi;
            }
            pr[0] += acc + a[(k + 1 + i) * n + k + 1 + i] * vi;
        }
        p.iter_mut().for_each(|x| *x *= beta);
        let kappa = 0.5 * beta * p.iter().zip(v.iter()).map(|(x, y)| x * y).sum::<f64>();
        // w = p - kappa v, stored in p
        for (pi, &vi) in p.iter_mut().zip(v.iter()) {
            *pi -= kappa * vi;
        }
        // A22 -= v w^T + w v^T (lower triangle)
        for i in 0..m {
            let (vi, wi) = (v[i], p[i]);
            let start = (k + 1 + i) * n + k + 1;
            let row = &mut a[start..start + i + 1];
            for ((aij, &vj), &wj) in row.iter_mut().zip(v.iter()).zip(p.iter()) {
                *aij -= vi * wj + wi * vj;
            }
        }
    }
    if n >= 2 {
        diag[n - 2] = a[(n - 2) * n + n - 2];
        off[n - 2] = a[(n - 1) * n + n - 2];
    }
    diag[n - 1] = a[(n - 1) * n + n - 1];
    (diag, off)
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL with
/// Wilkinson-type shifts. Output order is the order in which QL settles them.
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>, EigenError> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&off[..n.saturating_sub(1)]);

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= DEFLATION * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(EigenError::NoConvergence { index: l, sweeps: MAX_QL_SWEEPS });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_of_tridiagonal_is_identity_up_to_sign() {
        let m = DenseMatrix::from_rows(&[
            vec![2.0, 1.0, 0.0],
            vec![1.0, 3.0, 4.0],
            vec![0.0, 4.0, 5.0],
        ]);
        let (d, e) = tridiagonalize(&m);
        assert_eq!(d[0], 2.0);
        assert!((e[0].abs() - 1.0).abs() < 1e-15);
        assert!((e[1].abs() - 4.0).abs() < 1e-15);
        assert!((d[1] - 3.0).abs() < 1e-15 && (d[2] - 5.0).abs() < 1e-15);
    }

    #[test]
    fn ql_on_known_tridiagonal() {
        // 1-D Laplacian: eigenvalues 2 - 2cos(kπ/(n+1))
        let n = 30;
        let d = vec![2.0; n];
        let e = vec![-1.0; n - 1];
        let mut ev = tridiagonal_eigenvalues(&d, &e).unwrap();
        ev.sort_by(f64::total_cmp);
        for (k, lam) in ev.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((lam - exact).abs() < 1e-13, "{k}: {lam} vs {exact}");
        }
    }

    #[test]
    fn trivial_sizes() {
        assert!(tridiagonal_eigenvalues(&[], &[]).unwrap().is_empty());
        assert_eq!(tridiagonal_eigenvalues(&[7.0], &[]).unwrap(), vec![7.0]);
        let (d, e) = tridiagonalize(&DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]));
        let mut ev = tridiagonal_eigenvalues(&d, &e).unwrap();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + 1.0).abs() < 1e-15 && (ev[1] - 3.0).abs() < 1e-15);
    }
}
