//! Symmetric eigensolvers.
//!
//! The dense path reduces to tridiagonal form with Householder reflections and
//! then runs implicit-shift QL; the iterative path is Lanczos with full
//! reorthogonalization on any [`LinearOperator`].

mod lanczos;
mod tridiag;

use std::fmt;
use std::io::{BufRead, Write};

use serde::Serialize;
use thiserror::Error;

use crate::format::fmt_f64;
use crate::profiles::{read_square_csv, ProfileError};

pub use lanczos::{lanczos_extremes, LanczosOptions, LanczosResult};
pub use tridiag::{tridiagonal_eigenvalues, tridiagonalize, MAX_QL_SWEEPS};

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("QL iteration for eigenvalue {index} did not converge in {sweeps} sweeps")]
    NoConvergence { index: usize, sweeps: usize },
    #[error("Lanczos did not converge within {0} iterations")]
    LanczosCap(usize),
    #[error("empty matrix")]
    Empty,
    #[error("matrix is not symmetric (max |a_ij - a_ji| = {0})")]
    NotSymmetric(f64),
    #[error("histogram needs bins >= 1 and a < b")]
    InvalidHistogram,
    #[error("matrix file: {0}")]
    Read(#[from] ProfileError),
}

/// Square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n, "expected {n}x{n} entries");
        DenseMatrix { n, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let data: Vec<f64> = rows.iter().flat_map(|r| {
            assert_eq!(r.len(), n, "rows must have length {n}");
            r.iter().copied()
        }).collect();
        DenseMatrix { n, data }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for i in 0..self.n {
            let line: Vec<String> = self.row(i).iter().map(|&x| fmt_f64(x)).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, EigenError> {
        let (n, data) = read_square_csv(input)?;
        Ok(DenseMatrix { n, data })
    }
}

/// Symmetric linear map accessed through products only.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (yi, row) in y.iter_mut().zip(self.data.chunks_exact(self.n.max(1))) {
            *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// Block-diagonal operator built from square blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDiagonal {
    blocks: Vec<DenseMatrix>,
    dim: usize,
}

impl BlockDiagonal {
    pub fn new(blocks: Vec<DenseMatrix>) -> Self {
        let dim = blocks.iter().map(DenseMatrix::n).sum();
        BlockDiagonal { blocks, dim }
    }

    pub fn blocks(&self) -> &[DenseMatrix] {
        &self.blocks
    }
}

impl LinearOperator for BlockDiagonal {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut offset = 0;
        for b in &self.blocks {
            let k = b.n();
            b.apply(&x[offset..offset + k], &mut y[offset..offset + k]);
            offset += k;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethod {
    Dense,
    Lanczos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormMode {
    Dense,
    Lanczos,
}

/// Eigenvalues sorted in descending order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub residual_bound: Option<f64>,
    pub method: SpectrumMethod,
}

impl Spectrum {
    /// Sorts descending; ties keep their input order.
    pub fn from_unsorted(mut eigenvalues: Vec<f64>, method: SpectrumMethod) -> Self {
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        Spectrum { eigenvalues, residual_bound: None, method }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn lambda_max(&self) -> Option<f64> {
        self.eigenvalues.first().copied()
    }

    pub fn lambda_min(&self) -> Option<f64> {
        self.eigenvalues.last().copied()
    }

    /// max(|λ_1|, |λ_n|); 0 for an empty spectrum.
    pub fn norm(&self) -> f64 {
        match (self.lambda_max(), self.lambda_min()) {
            (Some(a), Some(b)) => a.abs().max(b.abs()),
            _ => 0.0,
        }
    }

    /// (1/n)·Σ λ_i^k
    pub fn normalized_power_sum(&self, k: i32) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.eigenvalues.iter().map(|l| l.powi(k)).sum::<f64>() / self.len() as f64
    }

    /// Ascending copy.
    pub fn ascending(&self) -> Vec<f64> {
        self.eigenvalues.iter().rev().copied().collect()
    }

    /// CSV `index,eigenvalue`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,eigenvalue")?;
        for (i, l) in self.eigenvalues.iter().enumerate() {
            writeln!(out, "{i},{}", fmt_f64(*l))?;
        }
        Ok(())
    }
}

/// Full spectrum of a symmetric matrix (Householder + implicit QL).
pub fn eig_sym(matrix: &DenseMatrix) -> Result<Spectrum, EigenError> {
    if matrix.n() == 0 {
        return Err(EigenError::Empty);
    }
    let (d, e) = tridiagonalize(matrix);
    let values = tridiagonal_eigenvalues(&d, &e)?;
    Ok(Spectrum::from_unsorted(values, SpectrumMethod::Dense))
}

/// Like [`eig_sym`] but rejects inputs whose asymmetry exceeds `1e-12·max|a_ij|`.
pub fn eig_sym_checked(matrix: &DenseMatrix) -> Result<Spectrum, EigenError> {
    let scale = matrix.data().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let asym = matrix.max_asymmetry();
    if asym > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(EigenError::NotSymmetric(asym));
    }
    eig_sym(matrix)
}

/// Spectrum of a block-diagonal matrix as the union of per-block spectra.
pub fn eig_block_diagonal(blocks: &[DenseMatrix]) -> Result<Spectrum, EigenError> {
    let mut all = Vec::with_capacity(blocks.iter().map(DenseMatrix::n).sum());
    for b in blocks {
        let (d, e) = tridiagonalize(b);
        all.extend(tridiagonal_eigenvalues(&d, &e)?);
    }
    if all.is_empty() {
        return Err(EigenError::Empty);
    }
    Ok(Spectrum::from_unsorted(all, SpectrumMethod::Dense))
}

/// Spectral norm max(|λ_1|, |λ_n|).
pub fn spectral_norm(matrix: &DenseMatrix, mode: NormMode) -> Result<f64, EigenError> {
    match mode {
        NormMode::Dense => Ok(eig_sym(matrix)?.norm()),
        NormMode::Lanczos => Ok(lanczos_extremes(matrix, &LanczosOptions::default())?.norm()),
    }
}

/// ESD mass per bin over `[a, b]`, plus the mass outside the range.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub mass: Vec<f64>,
    pub below: f64,
    pub above: f64,
}

impl Histogram {
    pub fn in_range_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn outside_mass(&self) -> f64 {
        self.below + self.above
    }

    /// CSV `bin_left,bin_right,mass`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin_left,bin_right,mass")?;
        for (k, m) in self.mass.iter().enumerate() {
            writeln!(out, "{},{},{}", fmt_f64(self.edges[k]), fmt_f64(self.edges[k + 1]), fmt_f64(*m))?;
        }
        Ok(())
    }
}

/// Normalized histogram of the empirical spectral distribution. Bins are
/// half-open except the last, which includes `b`.
pub fn esd_histogram(spectrum: &Spectrum, bins: usize, a: f64, b: f64) -> Result<Histogram, EigenError> {
    if bins == 0 || !(a < b) {
        return Err(EigenError::InvalidHistogram);
    }
    let width = (b - a) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|k| if k == bins { b } else { a + k as f64 * width }).collect();
    let mut counts = vec![0usize; bins];
    let (mut below, mut above) = (0usize, 0usize);
    for &l in &spectrum.eigenvalues {
        if l < a {
            below += 1;
        } else if l > b {
            above += 1;
        } else {
            let k = (((l - a) / width) as usize).min(bins - 1);
            // floating bin index can land one off near an edge
            let k = if l < edges[k] { k - 1 } else if k + 1 < bins && l >= edges[k + 1] { k + 1 } else { k };
            counts[k] += 1;
        }
    }
    let n = spectrum.len().max(1) as f64;
    Ok(Histogram {
        edges,
        mass: counts.iter().map(|&c| c as f64 / n).collect(),
        below: below as f64 / n,
        above: above as f64 / n,
    })
}

/// LU factorization with partial pivoting (in place), for inverse iteration.
fn lu_factor(a: &mut [f64], n: usize, piv: &mut [usize], tiny: f64) {
    for (i, p) in piv.iter_mut().enumerate() {
        *p = i;
    }
    for k in 0..n {
        let (mut best, mut idx) = (0.0, k);
        for i in k..n {
            let v = a[i * n + k].abs();
            if v > best {
                best = v;
                idx = i;
            }
        }
        if idx != k {
            for j in 0..n {
                a.swap(k * n + j, idx * n + j);
            }
            piv.swap(k, idx);
        }
        if a[k * n + k].abs() < tiny {
            a[k * n + k] = tiny;
        }
        let pivot = a[k * n + k];
        for i in k + 1..n {
            let f = a[i * n + k] / pivot;
            a[i * n + k] = f;
            if f != 0.0 {
                for j in k + 1..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
    }
}

fn lu_solve(lu: &[f64], n: usize, piv: &[usize], b: &[f64], x: &mut [f64]) {
    for i in 0..n {
        x[i] = b[piv[i]];
    }
    for i in 0..n {
        let s: f64 = (0..i).map(|j| lu[i * n + j] * x[j]).sum();
        x[i] -= s;
    }
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| lu[i * n + j] * x[j]).sum();
        x[i] = (x[i] - s) / lu[i * n + i];
    }
}

/// Largest residual ‖Xv − λv‖₂ over the spectrum, with each v recomputed by
/// three steps of inverse iteration. O(n⁴); meant for verification of small cases.
pub fn residual_bound(matrix: &DenseMatrix, spectrum: &Spectrum) -> f64 {
    let n = matrix.n();
    let norm = spectrum.norm().max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * norm;
    let mut worst: f64 = 0.0;
    let mut work = vec![0.0; n * n];
    let mut piv = vec![0; n];
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    for &lambda in &spectrum.eigenvalues {
        work.copy_from_slice(matrix.data());
        for i in 0..n {
            work[i * n + i] -= lambda;
        }
        lu_factor(&mut work, n, &mut piv, tiny);
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = 1.0 + ((i * 7919) % 101) as f64 / 101.0;
        }
        for _ in 0..3 {
            lu_solve(&work, n, &piv, &x, &mut y);
            let s = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (xi, yi) in x.iter_mut().zip(&y) {
                *xi = yi / s;
            }
        }
        matrix.apply(&x, &mut y);
        let r = y.iter().zip(&x).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(r);
    }
    worst
}

impl fmt::Display for SpectrumMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpectrumMethod::Dense => "dense",
            SpectrumMethod::Lanczos => "lanczos",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k5() -> DenseMatrix {
        let mut m = DenseMatrix::zeros(5);
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    m.set(i, j, 1.0);
                }
            }
        }
        m
    }

    #[test]
    fn complete_graph_spectrum() {
        let s = eig_sym(&k5()).unwrap();
        assert!((s.eigenvalues[0] - 4.0).abs() < 1e-12);
        for l in &s.eigenvalues[1..] {
            assert!((l + 1.0).abs() < 1e-12);
        }
        assert_eq!(s.method, SpectrumMethod::Dense);
    }

    #[test]
    fn diagonal_spectrum() {
        let s = eig_sym(&DenseMatrix::diagonal(&[1.0, 3.0, -2.0])).unwrap();
        assert_eq!(s.eigenvalues, vec![3.0, 1.0, -2.0]);
        assert_eq!(s.norm(), 3.0);
    }

    #[test]
    fn empty_and_asymmetric_inputs() {
        assert!(matches!(eig_sym(&DenseMatrix::zeros(0)), Err(EigenError::Empty)));
        let m = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]);
        assert!(matches!(eig_sym_checked(&m), Err(EigenError::NotSymmetric(_))));
    }

    #[test]
    fn zero_matrix_norm() {
        let z = DenseMatrix::zeros(6);
        assert_eq!(spectral_norm(&z, NormMode::Dense).unwrap(), 0.0);
        assert_eq!(spectral_norm(&z, NormMode::Lanczos).unwrap(), 0.0);
    }

    #[test]
    fn all_ones_hollow_block_norm() {
        // d = 4: hollow all-ones 5×5 scaled by 1/√4 has Perron value 4/2 = 2.
        let mut m = k5();
        for v in m.data.iter_mut() {
            *v *= 0.5;
        }
        let dense = spectral_norm(&m, NormMode::Dense).unwrap();
        let lanczos = spectral_norm(&m, NormMode::Lanczos).unwrap();
        assert!((dense - 2.0).abs() < 1e-12);
        assert!((lanczos - 2.0).abs() < 1e-10);
    }

    #[test]
    fn histogram_examples() {
        let s = Spectrum::from_unsorted(vec![4.0, -1.0, -1.0, -1.0, -1.0], SpectrumMethod::Dense);
        let h = esd_histogram(&s, 4, -2.0, 2.0).unwrap();
        assert!((h.in_range_mass() - 0.8).abs() < 1e-15);
        assert!((h.outside_mass() - 0.2).abs() < 1e-15);
        assert_eq!(h.above, 0.2);
        assert_eq!(h.mass, vec![0.0, 0.8, 0.0, 0.0]);

        let empty = Spectrum::from_unsorted(Vec::new(), SpectrumMethod::Dense);
        let h = esd_histogram(&empty, 3, -2.0, 2.0).unwrap();
        assert_eq!(h.mass, vec![0.0; 3]);
        assert_eq!(h.outside_mass(), 0.0);

        assert!(esd_histogram(&s, 0, -2.0, 2.0).is_err());
        assert!(esd_histogram(&s, 3, 2.0, 2.0).is_err());
    }

    #[test]
    fn histogram_edges_are_inclusive_at_b() {
        let s = Spectrum::from_unsorted(vec![2.0, -2.0, 0.0], SpectrumMethod::Dense);
        let h = esd_histogram(&s, 4, -2.0, 2.0).unwrap();
        assert_eq!(h.mass[0], 1.0 / 3.0);
        assert_eq!(h.mass[2], 1.0 / 3.0);
        assert_eq!(h.mass[3], 1.0 / 3.0);
    }

    #[test]
    fn ties_keep_order_and_sort_descending() {
        let s = Spectrum::from_unsorted(vec![1.0, 3.0, -0.0, 0.0, 2.0], SpectrumMethod::Dense);
        assert_eq!(s.eigenvalues[..3], [3.0, 2.0, 1.0]);
        assert_eq!(s.ascending()[0], -0.0);
    }

    #[test]
    fn spectrum_csv() {
        let s = Spectrum::from_unsorted(vec![1.0, -1.0], SpectrumMethod::Dense);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "index,eigenvalue\n0,1.0000000000000000e0\n1,-1.0000000000000000e0\n"
        );
    }

    #[test]
    fn matrix_csv_round_trip() {
        let m = k5();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(DenseMatrix::read_csv(&buf[..]).unwrap(), m);
        assert!(DenseMatrix::read_csv("1,2\n3\n".as_bytes()).is_err());
    }

    #[test]
    fn block_operator_matches_dense() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, -1.0]]);
        let b = DenseMatrix::diagonal(&[5.0]);
        let op = BlockDiagonal::new(vec![a, b]);
        let mut y = vec![0.0; 3];
        op.apply(&[1.0, 1.0, 2.0], &mut y);
        assert_eq!(y, vec![3.0, 1.0, 10.0]);
        let r = lanczos_extremes(&op, &LanczosOptions::default()).unwrap();
        assert!((r.lambda_max - 5.0).abs() < 1e-12);
        assert!((r.lambda_min + 5f64.sqrt()).abs() < 1e-12);
    }
}
