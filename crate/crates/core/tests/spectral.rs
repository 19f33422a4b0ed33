use rmtlab::eigen::{
    eig_block_diagonal, eig_sym, esd_histogram, lanczos_extremes, residual_bound, spectral_norm,
    DenseMatrix, LanczosOptions, NormMode,
};
use rmtlab::entries::EntryDistribution;
use rmtlab::profiles::VarianceProfile;
use rmtlab::quadrature::adaptive_simpson;
use rmtlab::sampler::{sample_block, sample_matrix};
use rmtlab::semicircle::{density, ks_distance};

fn gaussian_sample(n: usize, seed: u64) -> DenseMatrix {
    let p = VarianceProfile::full_wigner(n).unwrap();
    sample_matrix(&p, &EntryDistribution::gaussian(), seed, 0).unwrap().matrix
}

/// Solves (A − μI)x = b by Gaussian elimination with partial pivoting.
fn shifted_solve(a: &DenseMatrix, mu: f64, b: &[f64]) -> Vec<f64> {
    let n = a.n();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| a.get(i, j) - if i == j { mu } else { 0.0 }).collect();
            row.push(b[i]);
            row
        })
        .collect();
    for k in 0..n {
        let p = (k..n).max_by(|&x, &y| m[x][k].abs().total_cmp(&m[y][k].abs())).unwrap();
        m.swap(k, p);
        if m[k][k] == 0.0 {
            m[k][k] = 1e-300;
        }
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..=n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

#[test]
fn residuals_of_recomputed_eigenvectors() {
    let x = gaussian_sample(50, 1);
    let s = eig_sym(&x).unwrap();
    let norm = s.norm();
    let mut worst: f64 = 0.0;
    for &lambda in &s.eigenvalues {
        let mut v: Vec<f64> = (0..50).map(|i| 1.0 + (i % 7) as f64 * 0.1).collect();
        for _ in 0..3 {
            let w = shifted_solve(&x, lambda, &v);
            let s = w.iter().map(|a| a * a).sum::<f64>().sqrt();
            v = w.iter().map(|a| a / s).collect();
        }
        let r: f64 = (0..50)
            .map(|i| {
                let xv: f64 = (0..50).map(|j| x.get(i, j) * v[j]).sum();
                (xv - lambda * v[i]).powi(2)
            })
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r);
    }
    assert!(worst < 1e-9 * norm, "{worst}");
    assert!(residual_bound(&x, &s) < 1e-9 * norm);
}

#[test]
fn dense_and_lanczos_agree_at_512() {
    let x = gaussian_sample(512, 2);
    let s = eig_sym(&x).unwrap();
    let l = lanczos_extremes(&x, &LanczosOptions::default()).unwrap();
    assert!((s.eigenvalues[0] - l.lambda_max).abs() < 1e-7);
    assert!((s.eigenvalues[511] - l.lambda_min).abs() < 1e-7);
    let a = spectral_norm(&x, NormMode::Dense).unwrap();
    let b = spectral_norm(&x, NormMode::Lanczos).unwrap();
    assert!((a - b).abs() < 1e-7);
}

#[test]
fn trace_and_frobenius_preserved() {
    let n = 64;
    let sigma_star = 1.0 / (n as f64).sqrt();
    for seed in 0..100 {
        let x = gaussian_sample(n, 1000 + seed);
        let s = eig_sym(&x).unwrap();
        let tr: f64 = s.eigenvalues.iter().sum();
        assert!((tr - x.trace()).abs() <= 1e-8 * n as f64 * sigma_star);
        let fro: f64 = s.eigenvalues.iter().map(|l| l * l).sum();
        assert!((fro - x.frobenius_sq()).abs() <= 1e-6 * x.frobenius_sq());
        assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn clique_spectrum_is_union_of_blocks() {
    let p = VarianceProfile::clique_union(60, 5).unwrap();
    let g = EntryDistribution::gaussian();
    let full = eig_sym(&sample_matrix(&p, &g, 9, 0).unwrap().matrix).unwrap();
    let blocks: Vec<DenseMatrix> = (0..10).map(|b| sample_block(&p, &g, 9, 0, b).unwrap()).collect();
    let union = eig_block_diagonal(&blocks).unwrap();
    assert_eq!(full.len(), union.len());
    for (a, b) in full.eigenvalues.iter().zip(&union.eigenvalues) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn hollow_sign_blocks_exhaustive() {
    // every signing of the 6 upper entries of a hollow 4×4 matrix
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    for mask in 0u32..64 {
        let mut m = DenseMatrix::zeros(4);
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let v = if mask >> k & 1 == 1 { -1.0 } else { 1.0 };
            m.set(i, j, v);
            m.set(j, i, v);
        }
        let norm = eig_sym(&m).unwrap().norm();
        assert!(norm <= 3.0 + 1e-12, "mask {mask}: {norm}");
        if mask == 0 {
            assert!((norm - 3.0).abs() < 1e-12);
        }
    }
}

#[test]
fn esd_bins_follow_semicircle() {
    let x = gaussian_sample(2000, 3);
    let s = eig_sym(&x).unwrap();
    let h = esd_histogram(&s, 50, -2.0, 2.0).unwrap();
    for k in 0..50 {
        let expected = adaptive_simpson(density, h.edges[k], h.edges[k + 1], 1e-12);
        assert!((h.mass[k] - expected).abs() < 0.02, "bin {k}");
    }
    assert!(ks_distance(&s).unwrap() < 0.05);
}
