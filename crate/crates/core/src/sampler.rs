//! Realizations of X = Σ ∘ W.
//!
//! Every upper-triangular entry (i, j), i ≤ j, has a rank in row-major order of
//! the upper triangle. The draw for that entry comes from a ChaCha8 stream whose
//! key is `(master_seed, trial_index)` and whose stream id is the rank, so the
//! result does not depend on how the triangle is split across threads, and a
//! single block of a block-diagonal profile can be drawn on its own.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::eigen::DenseMatrix;
use crate::entries::EntryDistribution;
use crate::format::fmt_f64;
use crate::profiles::{ProfileSpec, ValidationReport, VarianceProfile};

/// Largest dimension materialized densely.
pub const MAX_DENSE_N: usize = 8192;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("profile failed validation:\n{0}")]
    InvalidProfile(ValidationReport),
    #[error("dimension {0} exceeds the dense limit {MAX_DENSE_N}; use per-block sampling")]
    TooLarge(usize),
    #[error("profile is not block diagonal")]
    NotBlockDiagonal,
    #[error("block {block} out of range ({blocks} blocks)")]
    BlockOutOfRange { block: usize, blocks: usize },
}

/// Random stream for one matrix entry.
pub type StreamRng = ChaCha8Rng;

/// Key material of a `(master_seed, trial_index)` pair.
fn key(master_seed: u64, trial_index: u64) -> [u8; 32] {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&trial_index.to_le_bytes());
    seed[16..].copy_from_slice(b"rmtlab.sampler.v");
    seed
}

/// Stream for `(master_seed, trial_index, entry_index)`; a pure function of the triple.
pub fn derive_stream(master_seed: u64, trial_index: u64, entry_index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::from_seed(key(master_seed, trial_index));
    rng.set_stream(entry_index);
    rng
}

/// Rank of (i, j), i ≤ j, in the row-major upper triangle of an n×n matrix.
pub fn upper_rank(n: usize, i: usize, j: usize) -> u64 {
    debug_assert!(i <= j && j < n);
    let (n, i, j) = (n as u64, i as u64, j as u64);
    i * n - i * (i.saturating_sub(1)) / 2 - i + j
}

/// Provenance of a sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleMeta {
    pub profile: ProfileSpec,
    pub dist: String,
    pub master_seed: u64,
    pub trial_index: u64,
}

/// One realization of X.
#[derive(Clone, Debug)]
pub struct MatrixSample {
    pub matrix: DenseMatrix,
    pub meta: SampleMeta,
}

impl MatrixSample {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    /// Coordinate triplets `i,j,value` of the nonzero upper triangle.
    pub fn write_triplets<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "i,j,value")?;
        let n = self.n();
        for i in 0..n {
            for j in i..n {
                let v = self.matrix.get(i, j);
                if v != 0.0 {
                    writeln!(out, "{i},{j},{}", fmt_f64(v))?;
                }
            }
        }
        Ok(())
    }
}

fn draw(
    profile: &VarianceProfile,
    dist: &EntryDistribution,
    base: &ChaCha8Rng,
    i: usize,
    j: usize,
    sigma: f64,
) -> f64 {
    let mut rng = base.clone();
    rng.set_stream(upper_rank(profile.n(), i, j));
    sigma * dist.sample(&mut rng)
}

/// Draws X = Σ ∘ W for a validated profile. Rows of the upper triangle are filled
/// in parallel on the current rayon pool; the output is identical for any pool size.
pub fn sample_matrix(
    profile: &VarianceProfile,
    dist: &EntryDistribution,
    master_seed: u64,
    trial_index: u64,
) -> Result<MatrixSample, SampleError> {
    let report = profile.validate();
    if !report.passes {
        return Err(SampleError::InvalidProfile(report));
    }
    let n = profile.n();
    if n > MAX_DENSE_N {
        return Err(SampleError::TooLarge(n));
    }
    let base = ChaCha8Rng::from_seed(key(master_seed, trial_index));
    let mut data = vec![0.0; n * n];
    data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, sigma) in profile.row_support(i) {
            if j >= i {
                row[j] = draw(profile, dist, &base, i, j, sigma);
            }
        }
    });
    for i in 0..n {
        for j in 0..i {
            data[i * n + j] = data[j * n + i];
        }
    }
    Ok(MatrixSample {
        matrix: DenseMatrix::from_vec(n, data),
        meta: SampleMeta {
            profile: profile.spec(),
            dist: dist.to_string(),
            master_seed,
            trial_index,
        },
    })
}

/// Draws block `block` of a block-diagonal profile without materializing X.
/// Entries coincide with the corresponding submatrix of [`sample_matrix`].
pub fn sample_block(
    profile: &VarianceProfile,
    dist: &EntryDistribution,
    master_seed: u64,
    trial_index: u64,
    block: usize,
) -> Result<DenseMatrix, SampleError> {
    let size = profile.block_size().ok_or(SampleError::NotBlockDiagonal)?;
    let blocks = profile.n() / size;
    if block >= blocks {
        return Err(SampleError::BlockOutOfRange { block, blocks });
    }
    let base = ChaCha8Rng::from_seed(key(master_seed, trial_index));
    let offset = block * size;
    let mut m = DenseMatrix::zeros(size);
    for a in 0..size {
        for (j, sigma) in profile.row_support(offset + a) {
            if j >= offset + a {
                let v = draw(profile, dist, &base, offset + a, j, sigma);
                m.set(a, j - offset, v);
                m.set(j - offset, a, v);
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn ranks_enumerate_upper_triangle() {
        let n = 7;
        let mut expected = 0;
        for i in 0..n {
            for j in i..n {
                assert_eq!(upper_rank(n, i, j), expected);
                expected += 1;
            }
        }
    }

    #[test]
    fn stream_examples() {
        let a = derive_stream(42, 0, 0).next_u64();
        let b = derive_stream(42, 0, 1).next_u64();
        assert_ne!(a, b);
        assert_eq!(a, derive_stream(42, 0, 0).next_u64());
        assert_ne!(a, derive_stream(42, 1, 0).next_u64());
        assert_ne!(a, derive_stream(43, 0, 0).next_u64());
    }

    #[test]
    fn stream_correlation_smoke() {
        let g = EntryDistribution::gaussian();
        let n = 100_000;
        let mut s1 = derive_stream(42, 0, 0);
        let mut s2 = derive_stream(42, 1, 0);
        let xs: Vec<f64> = (0..n).map(|_| g.sample(&mut s1)).collect();
        let ys: Vec<f64> = (0..n).map(|_| g.sample(&mut s2)).collect();
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let r = cov / (vx * vy).sqrt();
        assert!(r.abs() < 0.01, "{r}");
    }

    #[test]
    fn clique_rademacher_values() {
        let p = VarianceProfile::clique_union(10, 4).unwrap();
        let s = sample_matrix(&p, &EntryDistribution::rademacher(), 3, 0).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let v = s.matrix.get(i, j);
                if p.sigma(i, j) == 0.0 {
                    assert_eq!(v, 0.0);
                } else {
                    assert!(v == 0.5 || v == -0.5);
                }
                assert_eq!(v.to_bits(), s.matrix.get(j, i).to_bits());
            }
        }
    }

    #[test]
    fn deterministic_and_trial_sensitive() {
        let p = VarianceProfile::full_wigner(3).unwrap();
        let d = EntryDistribution::gaussian();
        let a = sample_matrix(&p, &d, 5, 0).unwrap();
        let b = sample_matrix(&p, &d, 5, 0).unwrap();
        assert_eq!(a.matrix, b.matrix);
        let c = sample_matrix(&p, &d, 5, 1).unwrap();
        assert_ne!(a.matrix, c.matrix);
        assert_eq!(a.meta.dist, "gaussian");
    }

    #[test]
    fn thread_count_does_not_matter() {
        let p = VarianceProfile::band(64, 5).unwrap();
        let d = EntryDistribution::uniform();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sample_matrix(&p, &d, 77, 3).unwrap())
        };
        let one = run(1);
        let many = run(4);
        assert!(one.matrix.data().iter().zip(many.matrix.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn blocks_match_dense_sample() {
        let p = VarianceProfile::clique_union(12, 3).unwrap();
        let d = EntryDistribution::gaussian();
        let full = sample_matrix(&p, &d, 8, 2).unwrap();
        for b in 0..3 {
            let blk = sample_block(&p, &d, 8, 2, b).unwrap();
            for r in 0..4 {
                for c in 0..4 {
                    assert_eq!(blk.get(r, c), full.matrix.get(4 * b + r, 4 * b + c));
                }
            }
        }
        assert!(matches!(
            sample_block(&p, &d, 8, 2, 3),
            Err(SampleError::BlockOutOfRange { block: 3, blocks: 3 })
        ));
        let full_p = VarianceProfile::full_wigner(4).unwrap();
        assert!(matches!(sample_block(&full_p, &d, 1, 0, 0), Err(SampleError::NotBlockDiagonal)));
    }

    #[test]
    fn invalid_profile_rejected() {
        let mut e = VarianceProfile::full_wigner(3).unwrap().dense();
        e[0] = 0.0;
        let p = VarianceProfile::custom(3, e).unwrap();
        assert!(matches!(
            sample_matrix(&p, &EntryDistribution::gaussian(), 1, 0),
            Err(SampleError::InvalidProfile(_))
        ));
    }

    #[test]
    fn off_diagonal_variance_full_profile() {
        let n = 2000;
        let p = VarianceProfile::full_wigner(n).unwrap();
        let s = sample_matrix(&p, &EntryDistribution::gaussian(), 10, 0).unwrap();
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        let mut count = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let v = s.matrix.get(i, j);
                sum += v;
                sum2 += v * v;
                count += 1.0;
            }
        }
        let mean = sum / count;
        let var = sum2 / count - mean * mean;
        let target = 1.0 / n as f64;
        assert!((var - target).abs() < 0.05 * target, "{var}");
    }

    #[test]
    fn triplets_list_upper_support() {
        let p = VarianceProfile::clique_union(6, 2).unwrap();
        let s = sample_matrix(&p, &EntryDistribution::rademacher(), 1, 0).unwrap();
        let mut buf = Vec::new();
        s.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        // two triangles, three upper entries each
        assert_eq!(text.lines().count(), 1 + 6);
        assert!(text.starts_with("i,j,value\n0,1,"));
    }
}
