//! Entry laws ξ: centered, unit-variance, symmetric families with exact moments.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::Serialize;
use statrs::function::gamma::{gamma, gamma_lr, gamma_ur};
use thiserror::Error;

/// Highest moment order kept in tables.
pub const K_MAX: usize = 20;

/// Minimum sample count accepted by [`EntryDistribution::estimate_rho`].
pub const MIN_RHO_TRIALS: usize = 10_000;

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Error, PartialEq)]
pub enum EntryError {
    #[error("moment order {0} exceeds the table limit {K_MAX}")]
    OrderTooLarge(usize),
    #[error("no grid value of rho in 0.01..=0.99 satisfies the anti-concentration bound")]
    NoValidRho,
    #[error("rho estimation needs at least {MIN_RHO_TRIALS} samples, got {0}")]
    TooFewTrials(usize),
    #[error("weibull shape exponent beta must be >= 1/2, got {0}")]
    InvalidShape(f64),
    #[error("truncation level must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("distribution is already truncated")]
    AlreadyTruncated,
    #[error("unknown distribution `{0}` (expected gaussian, rademacher, uniform or weibull:<beta>)")]
    Unknown(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    Gaussian,
    Rademacher,
    /// Uniform on [−√3, √3].
    UniformSym,
    /// Random sign times λ·E^β with E ~ Exp(1), λ chosen for unit variance
    /// (a Weibull magnitude of shape 1/β).
    WeibullSym { beta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailClass {
    SubGaussian,
    HeavyTailed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TruncatedPart {
    /// ξ·1{|ξ| ≤ L}
    Low,
    /// ξ·1{|ξ| > L}
    High,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation {
    pub level: f64,
    pub part: TruncatedPart,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Quadrature,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::ClosedForm => "closed_form",
            Provenance::Quadrature => "quadrature",
        })
    }
}

/// E[ξ^k] for k = 0..=k_max.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    pub values: Vec<f64>,
    /// Exact value when the moment is rational.
    pub exact: Vec<Option<BigRational>>,
    pub provenance: Vec<Provenance>,
}

impl MomentTable {
    pub fn k_max(&self) -> usize {
        self.values.len() - 1
    }

    /// Even moments nonnegative and m(j+k)² ≤ m(2j)·m(2k) (1e-9 relative).
    pub fn is_consistent(&self) -> bool {
        let m = &self.values;
        let kmax = self.k_max();
        if (0..=kmax).step_by(2).any(|k| m[k] < 0.0) {
            return false;
        }
        for j in 0..=kmax / 2 {
            for k in j..=kmax / 2 {
                let lhs = m[j + k] * m[j + k];
                let rhs = m[2 * j] * m[2 * k];
                if lhs > rhs * (1.0 + 1e-9) + 1e-300 {
                    return false;
                }
            }
        }
        true
    }

    /// CSV with header `k,value,provenance`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,value,provenance\n");
        for (k, (v, p)) in self.values.iter().zip(&self.provenance).enumerate() {
            s.push_str(&format!("{k},{},{p}\n", crate::format::fmt_f64(*v)));
        }
        s
    }
}

/// Law of the entries ξ of W, optionally restricted to one side of a truncation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntryDistribution {
    family: Family,
    truncation: Option<Truncation>,
}

impl EntryDistribution {
    pub fn gaussian() -> Self {
        Self::from_family(Family::Gaussian)
    }

    pub fn rademacher() -> Self {
        Self::from_family(Family::Rademacher)
    }

    pub fn uniform() -> Self {
        Self::from_family(Family::UniformSym)
    }

    pub fn weibull(beta: f64) -> Result<Self, EntryError> {
        if !(beta >= 0.5) || !beta.is_finite() {
            return Err(EntryError::InvalidShape(beta));
        }
        Ok(Self::from_family(Family::WeibullSym { beta }))
    }

    fn from_family(family: Family) -> Self {
        EntryDistribution { family, truncation: None }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn truncation(&self) -> Option<Truncation> {
        self.truncation
    }

    /// Every family here is symmetric, so odd moments vanish.
    pub fn is_symmetric(&self) -> bool {
        true
    }

    pub fn tail_class(&self) -> TailClass {
        match (self.family, self.truncation) {
            (_, Some(Truncation { part: TruncatedPart::Low, .. })) => TailClass::SubGaussian,
            (Family::WeibullSym { beta }, _) if beta > 0.5 => TailClass::HeavyTailed,
            _ => TailClass::SubGaussian,
        }
    }

    /// Scale λ of the Weibull magnitude giving unit variance.
    fn weibull_scale(beta: f64) -> f64 {
        gamma(1.0 + 2.0 * beta).sqrt().recip()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x = match self.family {
            Family::Gaussian => StandardNormal.sample(rng),
            Family::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Family::UniformSym => (2.0 * rng.random::<f64>() - 1.0) * SQRT3,
            Family::WeibullSym { beta } => {
                let e: f64 = Exp1.sample(rng);
                let mag = Self::weibull_scale(beta) * e.powf(beta);
                if rng.random::<bool>() {
                    mag
                } else {
                    -mag
                }
            }
        };
        match self.truncation {
            None => x,
            Some(Truncation { level, part }) => {
                let inside = x.abs() <= level;
                match (part, inside) {
                    (TruncatedPart::Low, true) | (TruncatedPart::High, false) => x,
                    _ => 0.0,
                }
            }
        }
    }

    /// E[ξ^k].
    pub fn moment(&self, k: usize) -> Result<f64, EntryError> {
        if k > K_MAX {
            return Err(EntryError::OrderTooLarge(k));
        }
        if k == 0 {
            return Ok(1.0);
        }
        if k % 2 == 1 {
            return Ok(0.0);
        }
        let m = k / 2;
        let Some(Truncation { level, part }) = self.truncation else {
            return Ok(self.full_even_moment(m));
        };
        if level.is_infinite() {
            return Ok(match part {
                TruncatedPart::Low => self.full_even_moment(m),
                TruncatedPart::High => 0.0,
            });
        }
        // E[ξ^{2m}; |ξ| ≤ L] and its complement.
        let (low, high) = match self.family {
            Family::Gaussian => {
                let full = double_factorial(2 * m - 1);
                let a = m as f64 + 0.5;
                let x = 0.5 * level * level;
                (full * gamma_lr(a, x), full * gamma_ur(a, x))
            }
            Family::Rademacher => {
                if level >= 1.0 {
                    (1.0, 0.0)
                } else {
                    (0.0, 1.0)
                }
            }
            Family::UniformSym => {
                let c = level.min(SQRT3);
                let denom = (2 * m + 1) as f64 * SQRT3;
                let inner = c.powi(2 * m as i32 + 1) / denom;
                let all = SQRT3.powi(2 * m as i32 + 1) / denom;
                (inner, all - inner)
            }
            Family::WeibullSym { beta } => {
                let lam = Self::weibull_scale(beta);
                let p = 2.0 * m as f64;
                let full = lam.powf(p) * gamma(1.0 + p * beta);
                let a = 1.0 + p * beta;
                let x = (level / lam).powf(1.0 / beta);
                (full * gamma_lr(a, x), full * gamma_ur(a, x))
            }
        };
        Ok(match part {
            TruncatedPart::Low => low,
            TruncatedPart::High => high,
        })
    }

    fn full_even_moment(&self, m: usize) -> f64 {
        match self.family {
            Family::Gaussian => double_factorial(2 * m - 1),
            Family::Rademacher => 1.0,
            Family::UniformSym => 3f64.powi(m as i32) / (2 * m + 1) as f64,
            Family::WeibullSym { beta } => {
                let p = 2.0 * m as f64;
                gamma(1.0 + p * beta) / gamma(1.0 + 2.0 * beta).powf(m as f64)
            }
        }
    }

    /// E[ξ^k] as an exact rational when the law has rational moments.
    pub fn exact_moment(&self, k: usize) -> Result<Option<BigRational>, EntryError> {
        if k > K_MAX {
            return Err(EntryError::OrderTooLarge(k));
        }
        if k == 0 {
            return Ok(Some(BigRational::one()));
        }
        if k % 2 == 1 {
            return Ok(Some(BigRational::zero()));
        }
        let m = k / 2;
        let full = match self.family {
            Family::Gaussian => {
                Some(BigRational::from_integer((1..=2 * m - 1).step_by(2).map(BigInt::from).product()))
            }
            Family::Rademacher => Some(BigRational::one()),
            Family::UniformSym => Some(BigRational::new(
                BigInt::from(3u32).pow(m as u32),
                BigInt::from(2 * m + 1),
            )),
            Family::WeibullSym { .. } => None,
        };
        Ok(match self.truncation {
            None => full,
            Some(Truncation { level, part }) => {
                let keep_all = match self.family {
                    _ if level.is_infinite() => Some(true),
                    Family::Rademacher => Some(level >= 1.0),
                    Family::UniformSym if level >= SQRT3 => Some(true),
                    _ => None,
                };
                match (keep_all, part) {
                    (Some(true), TruncatedPart::Low) | (Some(false), TruncatedPart::High) => full,
                    (Some(_), _) => Some(BigRational::zero()),
                    (None, _) => None,
                }
            }
        })
    }

    pub fn variance(&self) -> f64 {
        self.moment(2).expect("order 2 is within the table")
    }

    pub fn moment_table(&self, k_max: usize) -> Result<MomentTable, EntryError> {
        let mut values = Vec::with_capacity(k_max + 1);
        let mut exact = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max {
            values.push(self.moment(k)?);
            exact.push(self.exact_moment(k)?);
        }
        Ok(MomentTable { values, exact, provenance: vec![Provenance::ClosedForm; k_max + 1] })
    }

    /// E|ξ|^p for real p ≥ 0 (untruncated laws).
    pub fn abs_moment(&self, p: f64) -> f64 {
        match self.family {
            Family::Gaussian => {
                2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
            }
            Family::Rademacher => 1.0,
            Family::UniformSym => SQRT3.powf(p) / (p + 1.0),
            Family::WeibullSym { beta } => Self::weibull_scale(beta).powf(p) * gamma(1.0 + p * beta),
        }
    }

    /// Smallest C with ‖ξ‖_p ≤ C·p^β for integer p in 1..=p_max (Weibull laws only).
    pub fn growth_constant(&self, p_max: usize) -> Option<f64> {
        let Family::WeibullSym { beta } = self.family else {
            return None;
        };
        (1..=p_max)
            .map(|p| {
                let p = p as f64;
                self.abs_moment(p).powf(1.0 / p) / p.powf(beta)
            })
            .reduce(f64::max)
    }

    /// Splits ξ into ξ·1{|ξ| ≤ L} and ξ·1{|ξ| > L}; neither part is recentred or rescaled.
    pub fn truncate(&self, level: f64) -> Result<(Self, Self), EntryError> {
        if self.truncation.is_some() {
            return Err(EntryError::AlreadyTruncated);
        }
        if !(level > 0.0) {
            return Err(EntryError::InvalidThreshold(level));
        }
        let part = |part| EntryDistribution {
            family: self.family,
            truncation: Some(Truncation { level, part }),
        };
        Ok((part(TruncatedPart::Low), part(TruncatedPart::High)))
    }

    /// Largest ρ on the grid 0.01, 0.02, …, 0.99 with empirical P(ξ ≥ ρ) ≥ ρ and
    /// P(ξ ≤ −ρ) ≥ ρ. Draws are symmetrised (each x also counts as −x), which
    /// is exact for these symmetric laws and makes both tails share one estimate.
    pub fn estimate_rho<R: Rng + ?Sized>(&self, trials: usize, rng: &mut R) -> Result<f64, EntryError> {
        if trials < MIN_RHO_TRIALS {
            return Err(EntryError::TooFewTrials(trials));
        }
        let mut mags: Vec<f64> = (0..trials).map(|_| self.sample(rng).abs()).collect();
        mags.sort_unstable_by(f64::total_cmp);
        for step in (1..=99).rev() {
            let rho = step as f64 / 100.0;
            let beyond = trials - mags.partition_point(|&m| m < rho);
            // P̂(ξ ≥ ρ) = P̂(ξ ≤ −ρ) = #{|x| ≥ ρ} / (2·trials)
            if beyond as f64 >= rho * 2.0 * trials as f64 {
                return Ok(rho);
            }
        }
        Err(EntryError::NoValidRho)
    }
}

fn double_factorial(k: usize) -> f64 {
    (1..=k).rev().step_by(2).map(|v| v as f64).product()
}

impl fmt::Display for EntryDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Gaussian => f.write_str("gaussian")?,
            Family::Rademacher => f.write_str("rademacher")?,
            Family::UniformSym => f.write_str("uniform")?,
            Family::WeibullSym { beta } => write!(f, "weibull:{beta}")?,
        }
        if let Some(Truncation { level, part }) = self.truncation {
            let op = match part {
                TruncatedPart::Low => "<=",
                TruncatedPart::High => ">",
            };
            write!(f, "[|x|{op}{level}]")?;
        }
        Ok(())
    }
}

impl FromStr for EntryDistribution {
    type Err = EntryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "gaussian" => Ok(Self::gaussian()),
            "rademacher" => Ok(Self::rademacher()),
            "uniform" => Ok(Self::uniform()),
            other => match other.strip_prefix("weibull:") {
                Some(beta) => {
                    let beta: f64 = beta.parse().map_err(|_| EntryError::Unknown(s.to_string()))?;
                    Self::weibull(beta)
                }
                None => Err(EntryError::Unknown(s.to_string())),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_simpson;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn sample_supports() {
        let mut r = rng(1);
        let rad = EntryDistribution::rademacher();
        let uni = EntryDistribution::uniform();
        for _ in 0..10_000 {
            let x = rad.sample(&mut r);
            assert!(x == 1.0 || x == -1.0);
            assert!(uni.sample(&mut r).abs() <= SQRT3);
        }
    }

    #[test]
    fn gaussian_sample_variance() {
        let mut r = rng(2);
        let g = EntryDistribution::gaussian();
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| g.sample(&mut r)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((0.995..=1.005).contains(&var), "{var}");
        // mean within 5 standard errors of 0
        assert!(mean.abs() < 5.0 / (n as f64).sqrt());
    }

    #[test]
    fn closed_form_moments() {
        assert_eq!(EntryDistribution::gaussian().moment(4).unwrap(), 3.0);
        assert_eq!(EntryDistribution::gaussian().moment(6).unwrap(), 15.0);
        assert_eq!(EntryDistribution::rademacher().moment(6).unwrap(), 1.0);
        assert_eq!(EntryDistribution::uniform().moment(4).unwrap(), 9.0 / 5.0);
        assert_eq!(
            EntryDistribution::gaussian().moment(21),
            Err(EntryError::OrderTooLarge(21))
        );
        for d in [
            EntryDistribution::gaussian(),
            EntryDistribution::rademacher(),
            EntryDistribution::uniform(),
            EntryDistribution::weibull(1.0).unwrap(),
            EntryDistribution::weibull(0.5).unwrap(),
            EntryDistribution::weibull(2.5).unwrap(),
        ] {
            assert_eq!(d.moment(0).unwrap(), 1.0);
            assert_eq!(d.moment(1).unwrap(), 0.0);
            assert!((d.moment(2).unwrap() - 1.0).abs() < 1e-12, "{d}");
            for k in (1..=K_MAX).step_by(2) {
                assert_eq!(d.moment(k).unwrap(), 0.0);
            }
            assert!(d.moment_table(K_MAX).unwrap().is_consistent(), "{d}");
        }
    }

    #[test]
    fn exact_moments_agree_with_floats() {
        use num_traits::ToPrimitive;
        for d in [
            EntryDistribution::gaussian(),
            EntryDistribution::rademacher(),
            EntryDistribution::uniform(),
        ] {
            for k in 0..=K_MAX {
                let e = d.exact_moment(k).unwrap().unwrap().to_f64().unwrap();
                let f = d.moment(k).unwrap();
                assert!((e - f).abs() <= 1e-12 * f.abs().max(1.0), "{d} k={k}");
            }
        }
        assert_eq!(EntryDistribution::weibull(1.0).unwrap().exact_moment(4).unwrap(), None);
    }

    #[test]
    fn weibull_moment_matches_quadrature() {
        // β = 1: magnitude is exponential with scale λ = 1/√2, so ξ is Laplace.
        let d = EntryDistribution::weibull(1.0).unwrap();
        let lam = 1.0 / 2f64.sqrt();
        let density = |x: f64| (-x.abs() / lam).exp() / (2.0 * lam);
        let quad = 2.0 * adaptive_simpson(|x| x.powi(4) * density(x), 0.0, 60.0, 1e-13);
        let m4 = d.moment(4).unwrap();
        assert!((m4 - quad).abs() / quad < 1e-8, "{m4} vs {quad}");
        assert!((m4 - 6.0).abs() < 1e-12);
    }

    #[test]
    fn weibull_growth_constant() {
        let d = EntryDistribution::weibull(1.0).unwrap();
        let c = d.growth_constant(20).unwrap();
        // p = 1 gives E|ξ| = λ = 1/√2, the largest ratio for β = 1.
        assert!((c - 1.0 / 2f64.sqrt()).abs() < 1e-12, "{c}");
        for p in 1..=20 {
            let p = p as f64;
            assert!(d.abs_moment(p).powf(1.0 / p) <= c * p + 1e-12);
        }
        assert!(EntryDistribution::gaussian().growth_constant(20).is_none());
        assert_eq!(d.tail_class(), TailClass::HeavyTailed);
        assert_eq!(EntryDistribution::weibull(0.5).unwrap().tail_class(), TailClass::SubGaussian);
        assert!(matches!(EntryDistribution::weibull(0.4), Err(EntryError::InvalidShape(_))));
    }

    #[test]
    fn truncation_examples() {
        let (low, high) = EntryDistribution::rademacher().truncate(2.0).unwrap();
        for k in 0..=K_MAX {
            assert_eq!(low.moment(k).unwrap(), EntryDistribution::rademacher().moment(k).unwrap());
        }
        assert_eq!(high.variance(), 0.0);
        assert_eq!(high.exact_moment(4).unwrap(), Some(BigRational::zero()));
        assert_eq!(high.moment(0).unwrap(), 1.0);

        let (low, high) = EntryDistribution::gaussian().truncate(1.0).unwrap();
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let quad = adaptive_simpson(|x| x * x * phi(x), -1.0, 1.0, 1e-14);
        assert!((low.variance() - quad).abs() < 1e-10, "{} vs {quad}", low.variance());
        assert!((low.variance() - 0.19875).abs() < 1e-5);
        assert!((low.variance() + high.variance() - 1.0).abs() < 1e-9);

        let (low, high) = EntryDistribution::gaussian().truncate(f64::INFINITY).unwrap();
        assert_eq!(low.moment(6).unwrap(), 15.0);
        assert_eq!(high.moment(6).unwrap(), 0.0);

        assert_eq!(
            EntryDistribution::gaussian().truncate(0.0),
            Err(EntryError::InvalidThreshold(0.0))
        );
        assert_eq!(low.truncate(1.0), Err(EntryError::AlreadyTruncated));
    }

    #[test]
    fn truncation_conserves_second_moment() {
        for level in [0.3, 0.9, 1.0, 1.5, 1.7320508, 4.0] {
            for base in [
                EntryDistribution::rademacher(),
                EntryDistribution::uniform(),
                EntryDistribution::gaussian(),
                EntryDistribution::weibull(1.5).unwrap(),
            ] {
                let (low, high) = base.truncate(level).unwrap();
                let total = low.variance() + high.variance();
                assert!((total - 1.0).abs() < 1e-9, "{base} L={level}: {total}");
                for k in (2..=8).step_by(2) {
                    let sum = low.moment(k).unwrap() + high.moment(k).unwrap();
                    let full = base.moment(k).unwrap();
                    assert!((sum - full).abs() <= 1e-9 * full, "{base} k={k}");
                }
            }
        }
        // Exact for bounded laws.
        let (l, h) = EntryDistribution::uniform().truncate(1.0).unwrap();
        let expected_low = 1.0 / (3.0 * SQRT3);
        assert!((l.variance() - expected_low).abs() < 1e-15);
        assert!((l.variance() + h.variance() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn truncated_sampling_respects_threshold() {
        let mut r = rng(9);
        let (low, high) = EntryDistribution::gaussian().truncate(1.0).unwrap();
        for _ in 0..10_000 {
            assert!(low.sample(&mut r).abs() <= 1.0);
            let x = high.sample(&mut r);
            assert!(x == 0.0 || x.abs() > 1.0);
        }
    }

    /// Bisection solve of P(ξ ≥ ρ) = ρ for the standard Gaussian.
    fn gaussian_rho_root() -> f64 {
        let tail = |x: f64| 0.5 * statrs::function::erf::erfc(x / 2f64.sqrt());
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if tail(mid) >= mid {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    #[test]
    fn rho_estimates() {
        let mut r = rng(11);
        assert_eq!(EntryDistribution::rademacher().estimate_rho(10_000, &mut r).unwrap(), 0.5);

        let root = gaussian_rho_root();
        assert!((root - 0.3595).abs() < 1e-3, "{root}");
        let rho = EntryDistribution::gaussian().estimate_rho(1_000_000, &mut r).unwrap();
        assert!((0.25..=0.35).contains(&rho), "{rho}");
        assert_eq!(rho, (root * 100.0).floor() / 100.0);

        let (_, zero) = EntryDistribution::rademacher().truncate(2.0).unwrap();
        assert_eq!(zero.estimate_rho(10_000, &mut r), Err(EntryError::NoValidRho));
        assert_eq!(
            EntryDistribution::gaussian().estimate_rho(10, &mut r),
            Err(EntryError::TooFewTrials(10))
        );
    }

    #[test]
    fn rho_satisfies_anti_concentration() {
        let mut r = rng(12);
        for d in [
            EntryDistribution::gaussian(),
            EntryDistribution::uniform(),
            EntryDistribution::weibull(1.0).unwrap(),
        ] {
            let rho = d.estimate_rho(200_000, &mut r).unwrap();
            let n = 200_000;
            let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut r)).collect();
            let up = xs.iter().filter(|&&x| x >= rho).count() as f64 / n as f64;
            let down = xs.iter().filter(|&&x| x <= -rho).count() as f64 / n as f64;
            // independent sample, allow 4 standard errors of slack
            let slack = 4.0 * (0.25 / n as f64).sqrt();
            assert!(up + slack >= rho && down + slack >= rho, "{d}: {rho} {up} {down}");
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("gaussian".parse::<EntryDistribution>().unwrap(), EntryDistribution::gaussian());
        assert_eq!(
            "weibull:1.5".parse::<EntryDistribution>().unwrap(),
            EntryDistribution::weibull(1.5).unwrap()
        );
        assert!("cauchy".parse::<EntryDistribution>().is_err());
        assert!("weibull:x".parse::<EntryDistribution>().is_err());
        assert_eq!(EntryDistribution::weibull(1.5).unwrap().to_string(), "weibull:1.5");
        for name in ["gaussian", "rademacher", "uniform"] {
            assert_eq!(name.parse::<EntryDistribution>().unwrap().to_string(), name);
        }
    }

    #[test]
    fn moment_csv() {
        let t = EntryDistribution::rademacher().moment_table(2).unwrap();
        assert_eq!(
            t.to_csv(),
            "k,value,provenance\n0,1.0000000000000000e0,closed_form\n1,0.0000000000000000e0,closed_form\n2,1.0000000000000000e0,closed_form\n"
        );
    }
}
