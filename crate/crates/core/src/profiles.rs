//! Variance profiles Σ: symmetric nonnegative matrices whose entrywise squares
//! are doubly stochastic.
//!
//! Structured profiles (full, clique union, band, random regular) are stored
//! implicitly so that very large block-diagonal profiles never need an n×n
//! buffer; only [`VarianceProfile::custom`] keeps a dense table.

use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::fmt_f64;

/// Absolute tolerance on row sums of σ², symmetry and sign.
pub const DOUBLY_STOCHASTIC_TOL: f64 = 1e-12;

/// Restart cap of the pairing model.
pub const DEFAULT_MAX_RESTARTS: usize = 1000;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("dimension must be positive")]
    EmptyDimension,
    #[error("clique size d+1 = {} does not divide n = {n}", d + 1)]
    DimensionMismatch { n: usize, d: usize },
    #[error("degree d = {0} is too small (need d >= 2)")]
    InvalidDegree(usize),
    #[error("half-bandwidth w = {w} must satisfy 1 <= w <= (n-1)/2 for n = {n}")]
    InvalidBandwidth { n: usize, w: usize },
    #[error("a {d}-regular graph on {n} vertices needs n*d even and d < n")]
    InvalidRegularParameters { n: usize, d: usize },
    #[error("pairing model produced no simple graph in {0} attempts")]
    GenerationFailure(usize),
    #[error("custom profile needs {expected} entries, got {got}")]
    EntryCount { expected: usize, got: usize },
    #[error("malformed profile description: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Full,
    CliqueUnion,
    Band,
    RandomRegular,
    Custom,
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProfileKind::Full => "full",
            ProfileKind::CliqueUnion => "clique_union",
            ProfileKind::Band => "band",
            ProfileKind::RandomRegular => "random_regular",
            ProfileKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// A simple d-regular graph stored as sorted neighbour lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegularGraph {
    n: usize,
    d: usize,
    neighbors: Vec<Vec<usize>>,
}

impl RegularGraph {
    /// Uniform simple d-regular graph from the pairing (configuration) model,
    /// restarting whenever a self-loop or a repeated edge appears.
    pub fn generate(
        n: usize,
        d: usize,
        seed: u64,
        max_restarts: usize,
    ) -> Result<Self, ProfileError> {
        if n == 0 {
            return Err(ProfileError::EmptyDimension);
        }
        if d >= n || (n * d) % 2 == 1 {
            return Err(ProfileError::InvalidRegularParameters { n, d });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        'attempt: for _ in 0..max_restarts {
            points.shuffle(&mut rng);
            let mut neighbors = vec![Vec::with_capacity(d); n];
            for pair in points.chunks_exact(2) {
                let (u, v) = (pair[0], pair[1]);
                if u == v || neighbors[u].contains(&v) {
                    continue 'attempt;
                }
                neighbors[u].push(v);
                neighbors[v].push(u);
            }
            for list in &mut neighbors {
                list.sort_unstable();
            }
            return Ok(RegularGraph { n, d, neighbors });
        }
        Err(ProfileError::GenerationFailure(max_restarts))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors[u].binary_search(&v).is_ok()
    }

    /// Dense 0/1 adjacency, row-major.
    pub fn adjacency(&self) -> Vec<u8> {
        let mut a = vec![0u8; self.n * self.n];
        for (u, list) in self.neighbors.iter().enumerate() {
            for &v in list {
                a[u * self.n + v] = 1;
            }
        }
        a
    }
}

#[derive(Clone, Debug)]
enum Layout {
    Full,
    Cliques { block: usize },
    Band { w: usize },
    Graph(RegularGraph),
    Dense(Vec<f64>),
}

/// Symmetric variance profile Σ with doubly-stochastic squares.
#[derive(Clone, Debug)]
pub struct VarianceProfile {
    n: usize,
    layout: Layout,
    /// Common value of every nonzero entry for structured profiles.
    level: f64,
    sigma_star: f64,
    includes_diagonal: bool,
    seed: Option<u64>,
}

/// Serialized description of a profile (dense entries travel separately as CSV).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub n: usize,
    pub kind: ProfileKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub w: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    pub includes_diagonal: bool,
}

/// Outcome of [`VarianceProfile::validate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub max_row_deviation: f64,
    pub worst_row: usize,
    pub max_asymmetry: f64,
    pub max_negativity: f64,
    pub sigma_star_error: f64,
    pub passes: bool,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "max_row_deviation={} (row {})", fmt_f64(self.max_row_deviation), self.worst_row)?;
        writeln!(f, "max_asymmetry={}", fmt_f64(self.max_asymmetry))?;
        writeln!(f, "max_negativity={}", fmt_f64(self.max_negativity))?;
        writeln!(f, "sigma_star_error={}", fmt_f64(self.sigma_star_error))?;
        write!(f, "status={}", if self.passes { "PASS" } else { "FAIL" })
    }
}

impl VarianceProfile {
    /// Classical Wigner profile: every entry, diagonal included, equals 1/√n.
    pub fn full_wigner(n: usize) -> Result<Self, ProfileError> {
        if n == 0 {
            return Err(ProfileError::EmptyDimension);
        }
        let level = (n as f64).sqrt().recip();
        Ok(Self::structured(n, Layout::Full, level, true, None))
    }

    /// Disjoint union of n/(d+1) cliques on d+1 vertices, scaled by 1/√d, hollow.
    pub fn clique_union(n: usize, d: usize) -> Result<Self, ProfileError> {
        if n == 0 {
            return Err(ProfileError::EmptyDimension);
        }
        if d < 2 {
            return Err(ProfileError::InvalidDegree(d));
        }
        if n % (d + 1) != 0 {
            return Err(ProfileError::DimensionMismatch { n, d });
        }
        let level = (d as f64).sqrt().recip();
        Ok(Self::structured(n, Layout::Cliques { block: d + 1 }, level, false, None))
    }

    /// Circular band: σ_ij = 1/√(2w) when the wrap-around distance of i and j is in 1..=w.
    pub fn band(n: usize, w: usize) -> Result<Self, ProfileError> {
        if w == 0 || n < 2 * w + 1 {
            return Err(ProfileError::InvalidBandwidth { n, w });
        }
        let level = ((2 * w) as f64).sqrt().recip();
        Ok(Self::structured(n, Layout::Band { w }, level, false, None))
    }

    /// Uniform random simple d-regular graph scaled by 1/√d.
    pub fn random_regular(n: usize, d: usize, seed: u64) -> Result<Self, ProfileError> {
        Self::random_regular_with_restarts(n, d, seed, DEFAULT_MAX_RESTARTS)
    }

    pub fn random_regular_with_restarts(
        n: usize,
        d: usize,
        seed: u64,
        max_restarts: usize,
    ) -> Result<Self, ProfileError> {
        if d == 0 {
            return Err(ProfileError::InvalidDegree(d));
        }
        let graph = RegularGraph::generate(n, d, seed, max_restarts)?;
        let level = (d as f64).sqrt().recip();
        Ok(Self::structured(n, Layout::Graph(graph), level, false, Some(seed)))
    }

    /// Arbitrary dense profile (row-major). Not checked here; see [`Self::validate`].
    pub fn custom(n: usize, entries: Vec<f64>) -> Result<Self, ProfileError> {
        if n == 0 {
            return Err(ProfileError::EmptyDimension);
        }
        if entries.len() != n * n {
            return Err(ProfileError::EntryCount { expected: n * n, got: entries.len() });
        }
        let sigma_star = entries.iter().copied().fold(0.0, f64::max);
        let includes_diagonal = (0..n).any(|i| entries[i * n + i] != 0.0);
        Ok(VarianceProfile {
            n,
            layout: Layout::Dense(entries),
            level: f64::NAN,
            sigma_star,
            includes_diagonal,
            seed: None,
        })
    }

    fn structured(n: usize, layout: Layout, level: f64, diag: bool, seed: Option<u64>) -> Self {
        VarianceProfile { n, layout, level, sigma_star: level, includes_diagonal: diag, seed }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sigma_star(&self) -> f64 {
        self.sigma_star
    }

    pub fn includes_diagonal(&self) -> bool {
        self.includes_diagonal
    }

    pub fn kind(&self) -> ProfileKind {
        match self.layout {
            Layout::Full => ProfileKind::Full,
            Layout::Cliques { .. } => ProfileKind::CliqueUnion,
            Layout::Band { .. } => ProfileKind::Band,
            Layout::Graph(_) => ProfileKind::RandomRegular,
            Layout::Dense(_) => ProfileKind::Custom,
        }
    }

    /// Degree parameter for graph profiles (d for cliques and random regular, 2w for bands).
    pub fn degree(&self) -> Option<usize> {
        match &self.layout {
            Layout::Cliques { block } => Some(block - 1),
            Layout::Band { w } => Some(2 * w),
            Layout::Graph(g) => Some(g.degree()),
            Layout::Full | Layout::Dense(_) => None,
        }
    }

    /// Block size when the profile is block diagonal (clique unions).
    pub fn block_size(&self) -> Option<usize> {
        match self.layout {
            Layout::Cliques { block } => Some(block),
            _ => None,
        }
    }

    pub fn graph(&self) -> Option<&RegularGraph> {
        match &self.layout {
            Layout::Graph(g) => Some(g),
            _ => None,
        }
    }

    /// For structured profiles every nonzero σ_ij² equals `1/m`; returns `m`.
    pub fn variance_denominator(&self) -> Option<u64> {
        match &self.layout {
            Layout::Full => Some(self.n as u64),
            Layout::Dense(_) => None,
            _ => self.degree().map(|d| d as u64),
        }
    }

    pub fn sigma(&self, i: usize, j: usize) -> f64 {
        let n = self.n;
        match &self.layout {
            Layout::Full => self.level,
            Layout::Cliques { block } => {
                if i != j && i / block == j / block {
                    self.level
                } else {
                    0.0
                }
            }
            Layout::Band { w } => {
                let diff = i.abs_diff(j);
                let dist = diff.min(n - diff);
                if dist >= 1 && dist <= *w {
                    self.level
                } else {
                    0.0
                }
            }
            Layout::Graph(g) => {
                if g.has_edge(i, j) {
                    self.level
                } else {
                    0.0
                }
            }
            Layout::Dense(v) => v[i * n + j],
        }
    }

    /// Nonzero entries of row `i` as `(column, σ_ij)` in increasing column order.
    pub fn row_support(&self, i: usize) -> Vec<(usize, f64)> {
        let n = self.n;
        match &self.layout {
            Layout::Full => (0..n).map(|j| (j, self.level)).collect(),
            Layout::Cliques { block } => {
                let start = (i / block) * block;
                (start..start + block).filter(|&j| j != i).map(|j| (j, self.level)).collect()
            }
            Layout::Band { w } => {
                let mut cols: Vec<usize> =
                    (1..=*w).flat_map(|k| [(i + k) % n, (i + n - k) % n]).collect();
                cols.sort_unstable();
                cols.into_iter().map(|j| (j, self.level)).collect()
            }
            Layout::Graph(g) => g.neighbors(i).iter().map(|&j| (j, self.level)).collect(),
            Layout::Dense(v) => (0..n)
                .filter_map(|j| {
                    let s = v[i * n + j];
                    (s != 0.0).then_some((j, s))
                })
                .collect(),
        }
    }

    /// Row-major dense copy of Σ.
    pub fn dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for (j, s) in self.row_support(i) {
                out[i * n + j] = s;
            }
        }
        out
    }

    /// Checks symmetry, nonnegativity, unit row sums of σ² and the recorded σ*.
    pub fn validate(&self) -> ValidationReport {
        let n = self.n;
        let mut max_row_deviation: f64 = 0.0;
        let mut worst_row = 0;
        let mut max_asymmetry: f64 = 0.0;
        let mut min_entry: f64 = 0.0;
        let mut true_max: f64 = 0.0;
        for i in 0..n {
            let row = self.row_support(i);
            let mut sum = 0.0;
            for &(j, s) in &row {
                sum += s * s;
                min_entry = min_entry.min(s);
                true_max = true_max.max(s);
                max_asymmetry = max_asymmetry.max((s - self.sigma(j, i)).abs());
            }
            let dev = (sum - 1.0).abs();
            if dev > max_row_deviation || dev.is_nan() {
                max_row_deviation = dev;
                worst_row = i;
            }
        }
        let sigma_star_error = (true_max - self.sigma_star).abs();
        let max_negativity = -min_entry;
        let passes = max_row_deviation <= DOUBLY_STOCHASTIC_TOL
            && max_asymmetry <= DOUBLY_STOCHASTIC_TOL
            && max_negativity <= DOUBLY_STOCHASTIC_TOL
            && sigma_star_error == 0.0;
        ValidationReport {
            max_row_deviation,
            worst_row,
            max_asymmetry,
            max_negativity,
            sigma_star_error,
            passes,
        }
    }

    pub fn spec(&self) -> ProfileSpec {
        let (d, w) = match &self.layout {
            Layout::Cliques { block } => (Some(block - 1), None),
            Layout::Band { w } => (None, Some(*w)),
            Layout::Graph(g) => (Some(g.degree()), None),
            Layout::Full | Layout::Dense(_) => (None, None),
        };
        ProfileSpec {
            n: self.n,
            kind: self.kind(),
            d,
            w,
            seed: self.seed,
            includes_diagonal: self.includes_diagonal,
        }
    }

    /// Rebuilds a structured profile from its description. Custom profiles
    /// need their CSV dump instead ([`Self::read_dense_csv`]).
    pub fn from_spec(spec: &ProfileSpec) -> Result<Self, ProfileError> {
        let need = |v: Option<usize>, what: &str| {
            v.ok_or_else(|| ProfileError::Malformed(format!("{} profile needs `{what}`", spec.kind)))
        };
        match spec.kind {
            ProfileKind::Full => Self::full_wigner(spec.n),
            ProfileKind::CliqueUnion => Self::clique_union(spec.n, need(spec.d, "d")?),
            ProfileKind::Band => Self::band(spec.n, need(spec.w, "w")?),
            ProfileKind::RandomRegular => Self::random_regular(
                spec.n,
                need(spec.d, "d")?,
                spec.seed
                    .ok_or_else(|| ProfileError::Malformed("random_regular needs `seed`".into()))?,
            ),
            ProfileKind::Custom => Err(ProfileError::Malformed(
                "custom profiles are loaded from their CSV entry dump".into(),
            )),
        }
    }

    /// Dense row-major CSV dump, 17 significant digits.
    pub fn write_dense_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.n;
        let dense = self.dense();
        for row in dense.chunks(n) {
            let line: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_dense_csv<R: BufRead>(input: R) -> Result<Self, ProfileError> {
        let (n, values) = read_square_csv(input)?;
        Self::custom(n, values)
    }
}

/// Reads a headerless square CSV of floats (`#` lines and blank lines ignored).
pub fn read_square_csv<R: BufRead>(input: R) -> Result<(usize, Vec<f64>), ProfileError> {
    let mut values = Vec::new();
    let mut rows = 0;
    let mut width = None;
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| ProfileError::Malformed(format!("row {}: {e}", rows + 1)))?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(ProfileError::Malformed(format!(
                    "row {} has {} columns, expected {w}",
                    rows + 1,
                    row.len()
                )))
            }
            _ => {}
        }
        values.extend(row);
        rows += 1;
    }
    if width != Some(rows) {
        return Err(ProfileError::Malformed(format!(
            "expected a square matrix, got {rows} rows of width {}",
            width.unwrap_or(0)
        )));
    }
    Ok((rows, values))
}
