//! Monte-Carlo harnesses: bulk convergence to the semicircle, absence and
//! presence of outliers, and convergence of spectral moments.
//!
//! Every (n, trial) pair is an independent work unit whose randomness comes from
//! the sampler's seed contract, so results are identical for any thread count.
//! Clique-union profiles are always evaluated block by block; the dense matrix
//! is never formed for them.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use crate::eigen::{
    eig_block_diagonal, eig_sym, lanczos_extremes, EigenError, LanczosOptions, Spectrum,
    SpectrumMethod,
};
use crate::entries::EntryDistribution;
use crate::format::fmt_f64;
use crate::profiles::{ProfileError, VarianceProfile};
use crate::sampler::{sample_block, sample_matrix, SampleError};
use crate::semicircle::{ks_distance, moment as catalan_moment};
use crate::walks::{local_moment, RootedGraph, WalkError};

/// Non-block profiles above this size get only their extreme eigenvalues in
/// the absence sweep.
pub const FULL_SPECTRUM_LIMIT: usize = 2048;
/// Longest moment tracked by [`run_moment_convergence`].
pub const MAX_MC_MOMENT: usize = 8;
/// Fixed CSV header of sweep results.
pub const SWEEP_HEADER: &str = "n,d,trial,sigma_star,sigma_sqrtlog,lambda_max,lambda_min,ks,outlier_flag,seed,wall_ms";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid sweep configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileFamily {
    Full,
    CliqueUnion,
    Band,
    RandomRegular,
}

impl fmt::Display for ProfileFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfileFamily::Full => "full",
            ProfileFamily::CliqueUnion => "clique_union",
            ProfileFamily::Band => "band",
            ProfileFamily::RandomRegular => "random_regular",
        })
    }
}

impl FromStr for ProfileFamily {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(ProfileFamily::Full),
            "clique_union" | "clique" => Ok(ProfileFamily::CliqueUnion),
            "band" => Ok(ProfileFamily::Band),
            "random_regular" | "regular" => Ok(ProfileFamily::RandomRegular),
            _ => Err(ExperimentError::Config(format!("unknown profile family `{s}`"))),
        }
    }
}

/// How the degree d depends on n. Logarithms are natural.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DRule {
    Fixed(usize),
    /// ⌊c·ln n⌋
    CLog(f64),
    /// ⌊ln² n⌋
    LogSquared,
}

impl DRule {
    pub fn degree(&self, n: usize) -> usize {
        let l = (n as f64).ln();
        match *self {
            DRule::Fixed(d) => d,
            DRule::CLog(c) => (c * l).floor() as usize,
            DRule::LogSquared => (l * l).floor() as usize,
        }
    }
}

impl fmt::Display for DRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DRule::Fixed(d) => write!(f, "fixed:{d}"),
            DRule::CLog(c) => write!(f, "clog:{c}"),
            DRule::LogSquared => f.write_str("log2"),
        }
    }
}

impl FromStr for DRule {
    type Err = ExperimentError;

    /// `fixed:<d>`, a bare integer, `clog:<c>` or `log2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ExperimentError::Config(format!("bad d rule `{s}` (fixed:<d>, clog:<c> or log2)"));
        if s == "log2" {
            return Ok(DRule::LogSquared);
        }
        if let Some(c) = s.strip_prefix("clog:") {
            let c: f64 = c.parse().map_err(|_| bad())?;
            return if c > 0.0 { Ok(DRule::CLog(c)) } else { Err(bad()) };
        }
        let d = s.strip_prefix("fixed:").unwrap_or(s);
        d.parse().map(DRule::Fixed).map_err(|_| bad())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub family: ProfileFamily,
    pub dist: EntryDistribution,
    /// Strictly increasing.
    pub n_list: Vec<usize>,
    /// Ignored for the full profile; for bands d = 2w.
    pub d_rule: DRule,
    pub trials: usize,
    /// Outlier threshold: a row is flagged when ‖X‖ > 2 + δ.
    pub delta: f64,
    pub master_seed: u64,
    /// Recorded only; the presence experiment reports ln(rate) next to −ε·d.
    pub epsilon: f64,
    /// Even moment orders for [`run_moment_convergence`].
    pub lengths: Vec<usize>,
    /// Record wall-clock times (otherwise `wall_ms` is 0, keeping output reproducible).
    pub timing: bool,
}

impl SweepConfig {
    pub fn new(family: ProfileFamily, dist: EntryDistribution, n_list: Vec<usize>) -> Self {
        SweepConfig {
            family,
            dist,
            n_list,
            d_rule: DRule::LogSquared,
            trials: 5,
            delta: 0.1,
            master_seed: 0,
            epsilon: 0.0,
            lengths: vec![2, 4, 6],
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Config(m.to_string()));
        if self.trials == 0 {
            return bad("trials must be >= 1");
        }
        if !(self.delta > 0.0) {
            return bad("delta must be > 0");
        }
        if self.n_list.is_empty() {
            return bad("n_list is empty");
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_list must be strictly increasing");
        }
        if self.n_list[0] == 0 {
            return bad("n must be positive");
        }
        if !(self.epsilon >= 0.0) {
            return bad("epsilon must be >= 0");
        }
        Ok(())
    }

    /// Flat `key=value` pairs in a fixed order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        vec![
            ("profile", self.family.to_string()),
            ("dist", self.dist.to_string()),
            ("n_list", list(&self.n_list)),
            ("d_rule", self.d_rule.to_string()),
            ("trials", self.trials.to_string()),
            ("delta", self.delta.to_string()),
            ("seed", self.master_seed.to_string()),
            ("epsilon", self.epsilon.to_string()),
            ("lengths", list(&self.lengths)),
            ("timing", self.timing.to_string()),
        ]
    }

    fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> =
            self.to_pairs().into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
        serde_json::Value::Object(map)
    }
}

/// SplitMix64 finalizer, used to derive per-point seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Master seed of the sweep point at dimension `n`.
pub fn point_seed(master_seed: u64, n: usize) -> u64 {
    mix(master_seed ^ mix(n as u64))
}

/// Profile used at a sweep point. Clique unions drop the remainder so that
/// (d+1) divides the effective dimension.
pub fn profile_at(config: &SweepConfig, n: usize, trial: usize) -> Result<VarianceProfile, ExperimentError> {
    let d = config.d_rule.degree(n);
    Ok(match config.family {
        ProfileFamily::Full => VarianceProfile::full_wigner(n)?,
        ProfileFamily::CliqueUnion => {
            let block = d + 1;
            if n < block {
                return Err(ExperimentError::Config(format!("n = {n} is smaller than one clique of size {block}")));
            }
            VarianceProfile::clique_union(block * (n / block), d)?
        }
        ProfileFamily::Band => VarianceProfile::band(n, (d / 2).max(1))?,
        ProfileFamily::RandomRegular => {
            let seed = mix(point_seed(config.master_seed, n) ^ mix(trial as u64 + 1));
            VarianceProfile::random_regular(n, d, seed)?
        }
    })
}

/// One (n, trial) row.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub d: usize,
    pub trial: usize,
    pub sigma_star: f64,
    pub sigma_sqrtlog: f64,
    pub lambda_max: f64,
    pub lambda_min: f64,
    /// NaN when only the extreme eigenvalues were computed.
    pub ks: f64,
    pub outlier_flag: bool,
    pub seed: u64,
    pub wall_ms: u64,
    /// Presence experiment only: blocks whose norm exceeds 2 + δ.
    pub blocks_exceeding: Option<usize>,
    pub blocks: Option<usize>,
}

impl SweepRow {
    pub fn norm(&self) -> f64 {
        self.lambda_max.abs().max(self.lambda_min.abs())
    }
}

/// Per-n aggregates.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSummary {
    pub n: usize,
    pub d: usize,
    pub trials: usize,
    pub median_ks: f64,
    pub median_lambda_max: f64,
    pub median_norm: f64,
    pub outlier_frequency: f64,
    /// Fraction of all blocks (over all trials) above 2 + δ.
    pub block_exceedance_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub experiment: &'static str,
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
}

fn median(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

impl SweepResult {
    pub fn summaries(&self) -> Vec<PointSummary> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.rows.len() {
            let n = self.rows[i].n;
            let mut j = i;
            while j < self.rows.len() && self.rows[j].n == n {
                j += 1;
            }
            let rows = &self.rows[i..j];
            let flagged = rows.iter().filter(|r| r.outlier_flag).count();
            let block_exceedance_rate = match rows.iter().map(|r| r.blocks_exceeding.zip(r.blocks)).collect::<Option<Vec<_>>>() {
                Some(v) if !v.is_empty() => {
                    let (e, b) = v.iter().fold((0, 0), |(e, b), (x, y)| (e + x, b + y));
                    Some(e as f64 / b as f64)
                }
                _ => None,
            };
            out.push(PointSummary {
                n,
                d: rows[0].d,
                trials: rows.len(),
                median_ks: median(rows.iter().map(|r| r.ks)),
                median_lambda_max: median(rows.iter().map(|r| r.lambda_max)),
                median_norm: median(rows.iter().map(SweepRow::norm)),
                outlier_frequency: flagged as f64 / rows.len() as f64,
                block_exceedance_rate,
            });
            i = j;
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{SWEEP_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.n,
                r.d,
                r.trial,
                fmt_f64(r.sigma_star),
                fmt_f64(r.sigma_sqrtlog),
                fmt_f64(r.lambda_max),
                fmt_f64(r.lambda_min),
                fmt_f64(r.ks),
                u8::from(r.outlier_flag),
                r.seed,
                r.wall_ms
            )?;
        }
        Ok(())
    }

    /// Medians, outlier frequencies and the config echo. Non-finite numbers
    /// become `null`.
    pub fn summary_json(&self) -> serde_json::Value {
        let num = |x: f64| if x.is_finite() { json!(x) } else { serde_json::Value::Null };
        let points: Vec<serde_json::Value> = self
            .summaries()
            .iter()
            .map(|s| {
                let mut v = json!({
                    "n": s.n,
                    "d": s.d,
                    "trials": s.trials,
                    "median_ks": num(s.median_ks),
                    "median_lambda_max": num(s.median_lambda_max),
                    "median_norm": num(s.median_norm),
                    "outlier_frequency": s.outlier_frequency,
                });
                if let Some(rate) = s.block_exceedance_rate {
                    v["block_exceedance_rate"] = num(rate);
                    v["log_block_exceedance_rate"] = num(rate.ln());
                    v["minus_epsilon_d"] = num(-self.config.epsilon * s.d as f64);
                }
                v
            })
            .collect();
        json!({
            "experiment": self.experiment,
            "rows": self.rows.len(),
            "points": points,
            "config": self.config.to_json(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Extent {
    Full,
    /// λ_max and λ_min only, by Lanczos, above [`FULL_SPECTRUM_LIMIT`].
    ExtremesWhenLarge,
}

/// Spectrum of one realization. Block-diagonal profiles are sampled and
/// diagonalized one block at a time.
pub fn sample_spectrum(
    profile: &VarianceProfile,
    dist: &EntryDistribution,
    seed: u64,
    trial: u64,
) -> Result<Spectrum, ExperimentError> {
    if let Some(size) = profile.block_size() {
        let blocks = (0..profile.n() / size)
            .into_par_iter()
            .map(|b| sample_block(profile, dist, seed, trial, b))
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(eig_block_diagonal(&blocks)?);
    }
    let sample = sample_matrix(profile, dist, seed, trial)?;
    Ok(eig_sym(&sample.matrix)?)
}

fn extremes(
    profile: &VarianceProfile,
    dist: &EntryDistribution,
    seed: u64,
    trial: u64,
) -> Result<(f64, f64), ExperimentError> {
    let sample = sample_matrix(profile, dist, seed, trial)?;
    match lanczos_extremes(&sample.matrix, &LanczosOptions::default()) {
        Ok(r) => Ok((r.lambda_max, r.lambda_min)),
        Err(EigenError::LanczosCap(_)) => {
            let s = eig_sym(&sample.matrix)?;
            Ok((s.eigenvalues[0], s.eigenvalues[s.len() - 1]))
        }
        Err(e) => Err(e.into()),
    }
}

fn units(config: &SweepConfig) -> Vec<(usize, usize)> {
    config.n_list.iter().flat_map(|&n| (0..config.trials).map(move |t| (n, t))).collect()
}

fn row_skeleton(config: &SweepConfig, profile: &VarianceProfile, n_requested: usize, trial: usize) -> SweepRow {
    let n = profile.n();
    let d = match config.family {
        ProfileFamily::Full => n,
        _ => profile.degree().unwrap_or(0),
    };
    let sigma_star = profile.sigma_star();
    SweepRow {
        n,
        d,
        trial,
        sigma_star,
        sigma_sqrtlog: sigma_star * (n as f64).ln().sqrt(),
        lambda_max: f64::NAN,
        lambda_min: f64::NAN,
        ks: f64::NAN,
        outlier_flag: false,
        seed: point_seed(config.master_seed, n_requested),
        wall_ms: 0,
        blocks_exceeding: None,
        blocks: None,
    }
}

fn spectral_sweep(
    config: &SweepConfig,
    experiment: &'static str,
    extent: Extent,
) -> Result<SweepResult, ExperimentError> {
    config.validate()?;
    let rows = units(config)
        .into_par_iter()
        .map(|(n, trial)| {
            let start = Instant::now();
            let profile = profile_at(config, n, trial)?;
            let mut row = row_skeleton(config, &profile, n, trial);
            let large = profile.block_size().is_none() && profile.n() > FULL_SPECTRUM_LIMIT;
            if extent == Extent::ExtremesWhenLarge && large {
                (row.lambda_max, row.lambda_min) = extremes(&profile, &config.dist, row.seed, trial as u64)?;
            } else {
                let s = sample_spectrum(&profile, &config.dist, row.seed, trial as u64)?;
                row.lambda_max = s.eigenvalues[0];
                row.lambda_min = s.eigenvalues[s.len() - 1];
                row.ks = ks_distance(&s).expect("spectrum is nonempty");
            }
            row.outlier_flag = row.norm() > 2.0 + config.delta;
            if config.timing {
                row.wall_ms = start.elapsed().as_millis() as u64;
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    Ok(SweepResult { experiment, config: config.clone(), rows })
}

/// ESD against the semicircle: KS distance for every (n, trial).
pub fn run_bulk_convergence(config: &SweepConfig) -> Result<SweepResult, ExperimentError> {
    spectral_sweep(config, "bulk", Extent::Full)
}

/// Outlier frequency when σ*√log n → 0. Large non-block profiles get only
/// their extreme eigenvalues (ks = NaN).
pub fn run_absence_sweep(config: &SweepConfig) -> Result<SweepResult, ExperimentError> {
    spectral_sweep(config, "absence", Extent::ExtremesWhenLarge)
}

/// Block-max experiment on clique unions: ‖X‖ is the largest block norm. Each
/// row also counts the blocks above 2 + δ.
pub fn run_presence_experiment(config: &SweepConfig) -> Result<SweepResult, ExperimentError> {
    config.validate()?;
    if config.family != ProfileFamily::CliqueUnion {
        return Err(ExperimentError::Config("the presence experiment needs the clique_union profile".into()));
    }
    let threshold = 2.0 + config.delta;
    let mut rows = Vec::new();
    for (n, trial) in units(config) {
        let start = Instant::now();
        let profile = profile_at(config, n, trial)?;
        let mut row = row_skeleton(config, &profile, n, trial);
        let size = profile.block_size().expect("clique unions are block diagonal");
        let blocks = profile.n() / size;
        let spectra = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let m = sample_block(&profile, &config.dist, row.seed, trial as u64, b)?;
                Ok(eig_sym(&m)?)
            })
            .collect::<Result<Vec<Spectrum>, ExperimentError>>()?;
        row.lambda_max = spectra.iter().map(|s| s.eigenvalues[0]).fold(f64::NEG_INFINITY, f64::max);
        row.lambda_min = spectra.iter().map(|s| s.eigenvalues[s.len() - 1]).fold(f64::INFINITY, f64::min);
        row.blocks_exceeding = Some(spectra.iter().filter(|s| s.norm() > threshold).count());
        row.blocks = Some(blocks);
        let all: Vec<f64> = spectra.into_iter().flat_map(|s| s.eigenvalues).collect();
        row.ks = ks_distance(&Spectrum::from_unsorted(all, SpectrumMethod::Dense)).expect("nonempty");
        row.outlier_flag = row.norm() > threshold;
        if config.timing {
            row.wall_ms = start.elapsed().as_millis() as u64;
        }
        rows.push(row);
    }
    Ok(SweepResult { experiment: "presence", config: config.clone(), rows })
}

/// Empirical per-block tail of ‖block‖ for a single (d+1)-clique block.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockTail {
    pub d: usize,
    pub samples: usize,
    /// Exceedance probability targeted by `quantile`.
    pub tail: f64,
    /// Empirical (1 − tail)-quantile of the block norm.
    pub quantile: f64,
    /// `quantile − 2`, the outlier margin δ it induces.
    pub delta: f64,
}

/// Norms of `samples` iid blocks of the (d+1)-clique profile; block b is trial b
/// of the sampler under `seed`.
pub fn block_norms(d: usize, dist: &EntryDistribution, samples: usize, seed: u64) -> Result<Vec<f64>, ExperimentError> {
    let profile = VarianceProfile::clique_union(d + 1, d)?;
    (0..samples)
        .into_par_iter()
        .map(|b| {
            let m = sample_block(&profile, dist, seed, b as u64, 0)?;
            Ok(eig_sym(&m)?.norm())
        })
        .collect()
}

/// Estimates the (1 − tail)-quantile of the block norm from `samples` iid blocks
/// (the order statistic of rank ⌈(1 − tail)·samples⌉).
pub fn block_tail_oracle(
    d: usize,
    dist: &EntryDistribution,
    samples: usize,
    tail: f64,
    seed: u64,
) -> Result<BlockTail, ExperimentError> {
    if samples == 0 || !(tail > 0.0 && tail < 1.0) {
        return Err(ExperimentError::Config("block tail oracle needs samples >= 1 and 0 < tail < 1".into()));
    }
    let mut norms = block_norms(d, dist, samples, seed)?;
    norms.sort_by(f64::total_cmp);
    let rank = ((1.0 - tail) * samples as f64).ceil() as usize;
    let quantile = norms[rank.clamp(1, samples) - 1];
    Ok(BlockTail { d, samples, tail, quantile, delta: quantile - 2.0 })
}

/// Monte-Carlo estimate of (1/n)·E tr X^{2k} at one (n, 2k).
#[derive(Clone, Debug, PartialEq)]
pub struct MomentRow {
    pub n: usize,
    pub d: usize,
    pub length: usize,
    pub trials: usize,
    pub mean: f64,
    pub std_err: f64,
    /// Exact local moment of one clique block, for clique-union profiles.
    pub exact: Option<String>,
    pub exact_value: Option<f64>,
    pub catalan: u64,
}

impl MomentRow {
    /// |mean − target| in standard errors. The standard error is floored at
    /// rounding level, since some statistics have no spread at all (such as
    /// (1/n)·tr X² under Rademacher weights on a regular support).
    pub fn z_score(&self, target: f64) -> f64 {
        let floor = 1e-12 * target.abs().max(1.0);
        (self.mean - target).abs() / self.std_err.max(floor)
    }
}

pub const MOMENT_HEADER: &str = "n,d,length,trials,mean,std_err,exact,exact_value,catalan";

pub fn write_moment_csv<W: Write>(rows: &[MomentRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{MOMENT_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            r.d,
            r.length,
            r.trials,
            fmt_f64(r.mean),
            fmt_f64(r.std_err),
            r.exact.as_deref().unwrap_or(""),
            r.exact_value.map(fmt_f64).unwrap_or_default(),
            r.catalan
        )?;
    }
    Ok(())
}

/// Per (n, 2k): mean and standard error of (1/n)·Σλ_i^{2k} over the trials,
/// next to the exact clique prediction and the Catalan number.
pub fn run_moment_convergence(config: &SweepConfig) -> Result<Vec<MomentRow>, ExperimentError> {
    config.validate()?;
    if config.lengths.is_empty()
        || config.lengths.iter().any(|&l| l == 0 || l % 2 == 1 || l > MAX_MC_MOMENT)
    {
        return Err(ExperimentError::Config(format!("moment lengths must be even and in 2..={MAX_MC_MOMENT}")));
    }
    let per_unit = units(config)
        .into_par_iter()
        .map(|(n, trial)| {
            let profile = profile_at(config, n, trial)?;
            let seed = point_seed(config.master_seed, n);
            let s = sample_spectrum(&profile, &config.dist, seed, trial as u64)?;
            let sums: Vec<f64> = config.lengths.iter().map(|&l| s.normalized_power_sum(l as i32)).collect();
            Ok((profile, sums))
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let mut rows = Vec::new();
    for chunk in per_unit.chunks(config.trials) {
        let profile = &chunk[0].0;
        let n = profile.n();
        let d = if config.family == ProfileFamily::Full { n } else { profile.degree().unwrap_or(0) };
        for (li, &length) in config.lengths.iter().enumerate() {
            let xs: Vec<f64> = chunk.iter().map(|(_, s)| s[li]).collect();
            let t = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / t;
            let var = if xs.len() > 1 {
                xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1.0)
            } else {
                0.0
            };
            let exact = if config.family == ProfileFamily::CliqueUnion {
                Some(local_moment(&RootedGraph::clique(d)?, length, &config.dist)?)
            } else {
                None
            };
            rows.push(MomentRow {
                n,
                d,
                length,
                trials: xs.len(),
                mean,
                std_err: (var / t).sqrt(),
                exact_value: exact.as_ref().map(|e| e.to_f64()),
                exact: exact.map(|e| e.to_string()),
                catalan: catalan_moment(length as u32).expect("length checked above"),
            });
        }
    }
    Ok(rows)
}
