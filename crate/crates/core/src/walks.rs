//! Exact expected spectral moments by closed-walk enumeration.
//!
//! For a rooted graph (G, o) with normalizing degree d,
//!
//! ```text
//! m((G,o), 2k, ξ) = d^{-k} · Σ_{closed walks u from o of length 2k} Π_e E[ξ^{q_u(e)}]
//! ```
//!
//! where q_u(e) is the number of times u traverses the undirected edge e. Walks
//! are grouped by their multiplicity profile (the sorted multiset of q_u(e)), so
//! the sum is evaluated once per profile, in exact rational arithmetic when the
//! law has rational moments.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::entries::{EntryDistribution, EntryError};
use crate::format::{fmt_f64, fmt_rational};
use crate::profiles::{RegularGraph, VarianceProfile};

/// Longest walk handled by [`enumerate_walks`].
pub const MAX_WALK_LENGTH: usize = 12;
/// Largest number of closed walks any enumeration may visit.
pub const WALK_BUDGET: u64 = 100_000_000;
/// Largest truncated tree that will be materialized.
pub const MAX_TREE_VERTICES: usize = 5_000_000;
/// Limits of the brute-force trace oracle.
pub const MAX_TRACE_N: usize = 12;
pub const MAX_TRACE_LENGTH: usize = 8;
/// Limits of the shape-sum bound check.
pub const MAX_BOUND_N: usize = 10;
pub const MAX_BOUND_LENGTH: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum WalkError {
    #[error("walk length {0} is odd")]
    LengthOdd(usize),
    #[error("walk length {length} exceeds {max}")]
    LengthTooLong { length: usize, max: usize },
    #[error("enumeration would visit {walks} walks, over the budget of {budget}")]
    BudgetExceeded { walks: u128, budget: u64 },
    #[error("dimension {n} exceeds {max}")]
    DimensionTooLarge { n: usize, max: usize },
    #[error("profile failed validation (max row deviation {0:e})")]
    InvalidProfile(f64),
    #[error("shape {shape} violates the walk-sum bound (ratio {ratio})")]
    BoundViolated { shape: String, ratio: f64 },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error(transparent)]
    Entry(#[from] EntryError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphKind {
    Clique { d: usize },
    TruncatedTree { d: usize, depth: usize },
    Explicit,
}

/// Finite rooted graph without self-loops.
#[derive(Clone, Debug, PartialEq)]
pub struct RootedGraph {
    kind: GraphKind,
    adj: Vec<Vec<usize>>,
    root: usize,
}

impl RootedGraph {
    /// Complete graph on d+1 vertices rooted at 0.
    pub fn clique(d: usize) -> Result<Self, WalkError> {
        if d == 0 {
            return Err(WalkError::InvalidGraph("clique needs d >= 1".into()));
        }
        let adj = (0..=d).map(|v| (0..=d).filter(|&u| u != v).collect()).collect();
        Ok(RootedGraph { kind: GraphKind::Clique { d }, adj, root: 0 })
    }

    /// d-regular tree cut at `depth`: the root has d children, every other
    /// internal vertex d − 1.
    pub fn truncated_tree(d: usize, depth: usize) -> Result<Self, WalkError> {
        if d == 0 {
            return Err(WalkError::InvalidGraph("tree needs d >= 1".into()));
        }
        let mut count: u128 = 1;
        let mut level: u128 = 1;
        for t in 0..depth {
            level *= if t == 0 { d as u128 } else { d as u128 - 1 };
            count += level;
        }
        if count > MAX_TREE_VERTICES as u128 {
            return Err(WalkError::BudgetExceeded { walks: count, budget: MAX_TREE_VERTICES as u64 });
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new()];
        let mut frontier = vec![0usize];
        for t in 0..depth {
            let children = if t == 0 { d } else { d - 1 };
            let mut next = Vec::with_capacity(frontier.len() * children);
            for &p in &frontier {
                for _ in 0..children {
                    let c = adj.len();
                    adj.push(vec![p]);
                    adj[p].push(c);
                    next.push(c);
                }
            }
            frontier = next;
        }
        Ok(RootedGraph { kind: GraphKind::TruncatedTree { d, depth }, adj, root: 0 })
    }

    /// Graph from a symmetric 0/1 adjacency matrix (row-major, zero diagonal).
    pub fn explicit(n: usize, adjacency: &[u8], root: usize) -> Result<Self, WalkError> {
        if adjacency.len() != n * n {
            return Err(WalkError::InvalidGraph(format!("expected {} adjacency entries", n * n)));
        }
        if root >= n {
            return Err(WalkError::InvalidGraph(format!("root {root} out of range")));
        }
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                let a = adjacency[i * n + j];
                if a > 1 || a != adjacency[j * n + i] || (i == j && a != 0) {
                    return Err(WalkError::InvalidGraph(format!("bad adjacency entry ({i}, {j})")));
                }
                if a == 1 {
                    adj[i].push(j);
                }
            }
        }
        Ok(RootedGraph { kind: GraphKind::Explicit, adj, root })
    }

    pub fn from_regular(graph: &RegularGraph, root: usize) -> Result<Self, WalkError> {
        Self::explicit(graph.n(), &graph.adjacency(), root)
    }

    pub fn kind(&self) -> &GraphKind {
        &self.kind
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// The d in the d^{-k} normalization: the parameter for cliques and trees,
    /// the root degree otherwise.
    pub fn normalizing_degree(&self) -> usize {
        match self.kind {
            GraphKind::Clique { d } | GraphKind::TruncatedTree { d, .. } => d,
            GraphKind::Explicit => self.degree(self.root),
        }
    }

    /// (A^length)_{oo} by repeated products with the adjacency matrix.
    pub fn closed_walk_count(&self, length: usize) -> u128 {
        let mut x = vec![0u128; self.adj.len()];
        x[self.root] = 1;
        for _ in 0..length {
            let mut y = vec![0u128; x.len()];
            for (v, nb) in self.adj.iter().enumerate() {
                if x[v] != 0 {
                    for &u in nb {
                        y[u] = y[u].saturating_add(x[v]);
                    }
                }
            }
            x = y;
        }
        x[self.root]
    }

    fn distances(&self) -> Vec<usize> {
        bfs(&self.adj, self.root)
    }

    fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(&self.kind).expect("graph kind serializes");
        v["root"] = json!(self.root);
        v["vertices"] = json!(self.vertex_count());
        v["edges"] = json!(self.edge_count());
        v
    }
}

fn bfs(adj: &[Vec<usize>], src: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[src] = 0;
    let mut queue = VecDeque::from([src]);
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    dist
}

/// Depth-first enumeration of walks from `path[0]` that return to it after
/// `remaining` more steps. `dist` is the distance to the start vertex.
fn closed_walks<F: FnMut(&[usize])>(
    adj: &[Vec<usize>],
    dist: &[usize],
    path: &mut Vec<usize>,
    remaining: usize,
    visit: &mut F,
) {
    let v = *path.last().expect("path starts at the root");
    if remaining == 0 {
        if v == path[0] {
            visit(path);
        }
        return;
    }
    for &u in &adj[v] {
        if dist[u] < remaining {
            path.push(u);
            closed_walks(adj, dist, path, remaining - 1, visit);
            path.pop();
        }
    }
}

/// Undirected edges of a walk with their multiplicities, sorted by edge.
fn edge_multiplicities(path: &[usize]) -> Vec<((usize, usize), u32)> {
    let mut edges: Vec<(usize, usize)> =
        path.windows(2).map(|w| (w[0].min(w[1]), w[0].max(w[1]))).collect();
    edges.sort_unstable();
    let mut out: Vec<((usize, usize), u32)> = Vec::with_capacity(edges.len());
    for e in edges {
        match out.last_mut() {
            Some((last, c)) if *last == e => *c += 1,
            _ => out.push((e, 1)),
        }
    }
    out
}

/// Vertices relabelled by order of first appearance.
fn canonical_shape(path: &[usize]) -> Vec<u32> {
    let mut seen: Vec<usize> = Vec::new();
    path.iter()
        .map(|v| match seen.iter().position(|s| s == v) {
            Some(p) => p as u32,
            None => {
                seen.push(*v);
                seen.len() as u32 - 1
            }
        })
        .collect()
}

/// Base-16 packing of short sequences of small integers (all entries < 16,
/// at most 16 of them).
fn pack(values: &[u32]) -> u64 {
    values.iter().fold(0u64, |acc, &v| (acc << 4) | v as u64)
}

fn unpack(mut code: u64, len: usize) -> Vec<u32> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = (code & 0xf) as u32;
        code >>= 4;
    }
    out
}

fn sorted_profile(path: &[usize]) -> Vec<u32> {
    let mut p: Vec<u32> = edge_multiplicities(path).into_iter().map(|(_, q)| q).collect();
    p.sort_unstable_by(|a, b| b.cmp(a));
    p
}

/// A value of m((G,o),2k,ξ) or of a trace moment.
#[derive(Clone, Debug, PartialEq)]
pub enum MomentValue {
    Exact(BigRational),
    Approx(f64),
}

impl MomentValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            MomentValue::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            MomentValue::Approx(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            MomentValue::Exact(r) => Some(r),
            MomentValue::Approx(_) => None,
        }
    }

    pub fn minus(&self, other: &MomentValue) -> MomentValue {
        match (self, other) {
            (MomentValue::Exact(a), MomentValue::Exact(b)) => MomentValue::Exact(a - b),
            _ => MomentValue::Approx(self.to_f64() - other.to_f64()),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            MomentValue::Exact(r) => json!({"num": r.numer().to_string(), "den": r.denom().to_string()}),
            MomentValue::Approx(x) => json!({"value": x}),
        }
    }
}

impl fmt::Display for MomentValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MomentValue::Exact(r) => f.write_str(&fmt_rational(r)),
            MomentValue::Approx(x) => f.write_str(&fmt_f64(*x)),
        }
    }
}

/// Walks sharing one edge-multiplicity profile.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProfileCount {
    pub profile: Vec<u32>,
    pub count: u64,
}

/// Walks sharing one shape (vertex sequence up to relabelling).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShapeCount {
    pub shape: Vec<u32>,
    pub count: u64,
}

impl ShapeCount {
    pub fn vertices(&self) -> usize {
        self.shape.iter().max().map_or(0, |m| *m as usize + 1)
    }
}

#[derive(Default)]
struct Tally {
    total: u64,
    even: u64,
    profiles: HashMap<u64, (u64, usize)>,
    shapes: HashMap<u64, u64>,
}

impl Tally {
    fn record(&mut self, path: &[usize]) {
        let profile = sorted_profile(path);
        self.total += 1;
        if profile.iter().all(|q| q % 2 == 0) {
            self.even += 1;
        }
        self.profiles.entry(pack(&profile)).or_insert((0, profile.len())).0 += 1;
        *self.shapes.entry(pack(&canonical_shape(path))).or_insert(0) += 1;
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.total += other.total;
        self.even += other.even;
        for (k, (c, len)) in other.profiles {
            self.profiles.entry(k).or_insert((0, len)).0 += c;
        }
        for (k, c) in other.shapes {
            *self.shapes.entry(k).or_insert(0) += c;
        }
        self
    }
}

/// Closed-walk statistics of a rooted graph at one length.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkMomentReport {
    pub graph: RootedGraph,
    pub length: usize,
    pub total_walks: u64,
    pub even_walks: u64,
    /// Sorted by profile.
    pub profiles: Vec<ProfileCount>,
    /// Sorted by shape.
    pub shapes: Vec<ShapeCount>,
    /// Filled by [`WalkMomentReport::with_moment`].
    pub moment_value: Option<MomentValue>,
}

impl WalkMomentReport {
    /// d^{-k} · Σ_profiles count · Π_q E[ξ^q].
    pub fn moment(&self, dist: &EntryDistribution) -> Result<MomentValue, WalkError> {
        let d = self.graph.normalizing_degree();
        if d == 0 && self.length > 0 {
            return Err(WalkError::InvalidGraph("root has no neighbours".into()));
        }
        let k = (self.length / 2) as u32;
        let mut exact = Some(BigRational::zero());
        let mut approx = 0.0;
        for pc in &self.profiles {
            let mut term_exact = Some(BigRational::from_integer(BigInt::from(pc.count)));
            let mut term = pc.count as f64;
            for &q in &pc.profile {
                let q = q as usize;
                term *= dist.moment(q)?;
                term_exact = match (term_exact, dist.exact_moment(q)?) {
                    (Some(t), Some(m)) => Some(t * m),
                    _ => None,
                };
            }
            approx += term;
            exact = match (exact, term_exact) {
                (Some(s), Some(t)) => Some(s + t),
                _ => None,
            };
        }
        let scale = BigRational::from_integer(BigInt::from(d).pow(k));
        Ok(match exact {
            Some(s) => MomentValue::Exact(s / scale),
            None => MomentValue::Approx(approx / (d as f64).powi(k as i32)),
        })
    }

    pub fn with_moment(mut self, dist: &EntryDistribution) -> Result<Self, WalkError> {
        self.moment_value = Some(self.moment(dist)?);
        Ok(self)
    }

    /// Number of walks with the given shape.
    pub fn shape_count(&self, shape: &[u32]) -> u64 {
        self.shapes.iter().find(|s| s.shape == shape).map_or(0, |s| s.count)
    }

    /// `{graph, length, total_walks, even_walks, moment_value, shapes}`;
    /// `shapes` lists the multiplicity profiles with their walk counts.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "graph": self.graph.to_json(),
            "length": self.length,
            "total_walks": self.total_walks,
            "even_walks": self.even_walks,
            "moment_value": self.moment_value.as_ref().map(MomentValue::to_json),
            "shapes": self.profiles,
        })
    }
}

fn check_length(length: usize, max: usize) -> Result<(), WalkError> {
    if length % 2 == 1 {
        return Err(WalkError::LengthOdd(length));
    }
    if length > max {
        return Err(WalkError::LengthTooLong { length, max });
    }
    Ok(())
}

/// Enumerates every closed walk of the given even length from the root. The
/// exact walk count (A^length)_oo is checked against [`WALK_BUDGET`] first.
pub fn enumerate_walks(graph: &RootedGraph, length: usize) -> Result<WalkMomentReport, WalkError> {
    check_length(length, MAX_WALK_LENGTH)?;
    let walks = graph.closed_walk_count(length);
    if walks > WALK_BUDGET as u128 {
        return Err(WalkError::BudgetExceeded { walks, budget: WALK_BUDGET });
    }
    let dist = graph.distances();
    let root = graph.root;
    let tally = if length == 0 {
        let mut t = Tally::default();
        t.record(&[root]);
        t
    } else {
        graph.adj[root]
            .par_iter()
            .map(|&first| {
                let mut t = Tally::default();
                let mut path = vec![root, first];
                closed_walks(&graph.adj, &dist, &mut path, length - 1, &mut |p| t.record(p));
                t
            })
            .reduce(Tally::default, Tally::merge)
    };
    debug_assert_eq!(tally.total as u128, walks);
    let mut profiles: Vec<ProfileCount> = tally
        .profiles
        .into_iter()
        .map(|(code, (count, len))| ProfileCount { profile: unpack(code, len), count })
        .collect();
    profiles.sort_by(|a, b| a.profile.cmp(&b.profile));
    let mut shapes: Vec<ShapeCount> = tally
        .shapes
        .into_iter()
        .map(|(code, count)| ShapeCount { shape: unpack(code, length + 1), count })
        .collect();
    shapes.sort_by(|a, b| a.shape.cmp(&b.shape));
    Ok(WalkMomentReport {
        graph: graph.clone(),
        length,
        total_walks: tally.total,
        even_walks: tally.even,
        profiles,
        shapes,
        moment_value: None,
    })
}

/// m((G,o), length, ξ).
pub fn local_moment(
    graph: &RootedGraph,
    length: usize,
    dist: &EntryDistribution,
) -> Result<MomentValue, WalkError> {
    enumerate_walks(graph, length)?.moment(dist)
}

/// m((C_d,o), 2k, ξ) − m((T_d,o), 2k, ξ), the tree cut at depth k.
pub fn moment_gap(d: usize, length: usize, dist: &EntryDistribution) -> Result<MomentValue, WalkError> {
    check_length(length, MAX_WALK_LENGTH)?;
    let clique = local_moment(&RootedGraph::clique(d)?, length, dist)?;
    let tree = local_moment(&RootedGraph::truncated_tree(d, length / 2)?, length, dist)?;
    Ok(clique.minus(&tree))
}

fn support_graph(profile: &VarianceProfile) -> Result<Vec<Vec<usize>>, WalkError> {
    let report = profile.validate();
    if !report.passes {
        return Err(WalkError::InvalidProfile(report.max_row_deviation));
    }
    Ok((0..profile.n()).map(|i| profile.row_support(i).into_iter().map(|(j, _)| j).collect()).collect())
}

/// Σ_o (S^length)_oo for the support pattern S.
fn total_closed_walks(adj: &[Vec<usize>], length: usize) -> u128 {
    let n = adj.len();
    (0..n)
        .map(|o| {
            let mut x = vec![0u128; n];
            x[o] = 1;
            for _ in 0..length {
                let mut y = vec![0u128; n];
                for (v, nb) in adj.iter().enumerate() {
                    for &u in nb {
                        y[u] = y[u].saturating_add(x[v]);
                    }
                }
                x = y;
            }
            x[o]
        })
        .fold(0u128, u128::saturating_add)
}

fn for_each_closed_walk<F: FnMut(&[usize])>(adj: &[Vec<usize>], length: usize, mut visit: F) {
    for start in 0..adj.len() {
        let dist = bfs(adj, start);
        let mut path = vec![start];
        closed_walks(adj, &dist, &mut path, length, &mut visit);
    }
}

/// (1/n)·E tr(X^length) by summing σ_u·E[w_u] over every closed walk u in
/// [n]^length on the support of Σ. Exact when every nonzero σ_ij² equals a
/// common 1/m and the needed moments of ξ are rational.
pub fn expected_trace_moment(
    profile: &VarianceProfile,
    dist: &EntryDistribution,
    length: usize,
) -> Result<MomentValue, WalkError> {
    let n = profile.n();
    if n > MAX_TRACE_N {
        return Err(WalkError::DimensionTooLarge { n, max: MAX_TRACE_N });
    }
    if length > MAX_TRACE_LENGTH {
        return Err(WalkError::LengthTooLong { length, max: MAX_TRACE_LENGTH });
    }
    let adj = support_graph(profile)?;
    let walks = total_closed_walks(&adj, length);
    if walks > WALK_BUDGET as u128 {
        return Err(WalkError::BudgetExceeded { walks, budget: WALK_BUDGET });
    }
    if length == 0 {
        return Ok(MomentValue::Exact(BigRational::one()));
    }
    // Group walks by their multiset of (σ_e, q_e).
    let mut groups: HashMap<Vec<(u64, u32)>, u64> = HashMap::new();
    for_each_closed_walk(&adj, length, |path| {
        let mut key: Vec<(u64, u32)> = edge_multiplicities(path)
            .into_iter()
            .map(|((i, j), q)| (profile.sigma(i, j).to_bits(), q))
            .collect();
        key.sort_unstable();
        *groups.entry(key).or_insert(0) += 1;
    });
    let level = profile.variance_denominator();
    let mut exact = Some(BigRational::zero());
    let mut approx = 0.0;
    for (key, count) in &groups {
        let mut term = *count as f64;
        let mut term_exact = Some(BigRational::from_integer(BigInt::from(*count)));
        for &(bits, q) in key {
            let q = q as usize;
            let sigma = f64::from_bits(bits);
            term *= sigma.powi(q as i32) * dist.moment(q)?;
            let m = dist.exact_moment(q)?;
            term_exact = match (term_exact, m, level) {
                (Some(_), Some(m), _) if m.is_zero() => Some(BigRational::zero()),
                (Some(t), Some(m), Some(level)) if q % 2 == 0 => {
                    Some(t * m / BigRational::from_integer(BigInt::from(level).pow(q as u32 / 2)))
                }
                _ => None,
            };
        }
        approx += term;
        exact = match (exact, term_exact) {
            (Some(s), Some(t)) => Some(s + t),
            _ => None,
        };
    }
    let n_big = BigRational::from_integer(BigInt::from(n));
    Ok(match exact {
        Some(s) => MomentValue::Exact(s / n_big),
        None => MomentValue::Approx(approx / n as f64),
    })
}

/// One even shape in a [`BoundReport`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShapeBound {
    pub shape: Vec<u32>,
    pub vertices: usize,
    pub walks: u64,
    /// Σ over walks of this shape of σ_{u1u2}···σ_{u_{2p}u1}.
    pub sum: f64,
    /// n·(σ*)^{2p − 2(m(s) − 1)}.
    pub bound: f64,
    pub ratio: f64,
    #[serde(skip)]
    pub exact_ratio: Option<BigRational>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub n: usize,
    pub length: usize,
    pub shapes: Vec<ShapeBound>,
    pub worst_ratio: f64,
}

/// Checks Σ_{u of shape s} σ_u ≤ n·(σ*)^{2p−2(m(s)−1)} for every even shape s
/// (every edge traversed an even number of times). Fails with
/// [`WalkError::BoundViolated`] if any shape exceeds the bound.
pub fn shape_sum_bound_check(
    profile: &VarianceProfile,
    length: usize,
    max_n: usize,
) -> Result<BoundReport, WalkError> {
    check_length(length, MAX_BOUND_LENGTH)?;
    let n = profile.n();
    let max = max_n.min(MAX_BOUND_N);
    if n > max {
        return Err(WalkError::DimensionTooLarge { n, max });
    }
    let adj = support_graph(profile)?;
    let walks = total_closed_walks(&adj, length);
    if walks > WALK_BUDGET as u128 {
        return Err(WalkError::BudgetExceeded { walks, budget: WALK_BUDGET });
    }
    let p = length / 2;
    let mut sums: HashMap<Vec<u32>, (u64, f64)> = HashMap::new();
    for_each_closed_walk(&adj, length, |path| {
        let edges = edge_multiplicities(path);
        if edges.iter().any(|(_, q)| q % 2 == 1) {
            return;
        }
        let prod: f64 = edges.iter().map(|&((i, j), q)| profile.sigma(i, j).powi(q as i32)).product();
        let e = sums.entry(canonical_shape(path)).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += prod;
    });
    let s2 = profile.sigma_star().powi(2);
    let level = profile.variance_denominator();
    let mut shapes: Vec<ShapeBound> = sums
        .into_iter()
        .map(|(shape, (walks, sum))| {
            let m = shape.iter().max().map_or(0, |x| *x as usize + 1);
            let power = p + 1 - m;
            let bound = n as f64 * s2.powi(power as i32);
            // uniform level 1/√L: sum = walks·L^{-p}, bound = n·L^{-(p-m+1)}
            let exact_ratio = level.map(|l| {
                let l = BigInt::from(l);
                BigRational::new(BigInt::from(walks), BigInt::from(n) * l.pow((p - power) as u32))
            });
            let ratio = exact_ratio.as_ref().and_then(|r| r.to_f64()).unwrap_or(sum / bound);
            ShapeBound { shape, vertices: m, walks, sum, bound, ratio, exact_ratio }
        })
        .collect();
    shapes.sort_by(|a, b| a.shape.cmp(&b.shape));
    for s in &shapes {
        let violated = match &s.exact_ratio {
            Some(r) => *r > BigRational::one(),
            None => s.ratio > 1.0 + 1e-12,
        };
        if violated {
            return Err(WalkError::BoundViolated { shape: format!("{:?}", s.shape), ratio: s.ratio });
        }
    }
    let worst_ratio = shapes.iter().map(|s| s.ratio).fold(0.0, f64::max);
    Ok(BoundReport { n, length, shapes, worst_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(a: i64, b: i64) -> MomentValue {
        MomentValue::Exact(BigRational::new(a.into(), b.into()))
    }

    fn rademacher() -> EntryDistribution {
        EntryDistribution::rademacher()
    }

    #[test]
    fn clique_and_tree_golden_values() {
        let c = enumerate_walks(&RootedGraph::clique(3).unwrap(), 6).unwrap();
        assert_eq!(c.even_walks, 93);
        assert_eq!(c.moment(&rademacher()).unwrap(), rat(31, 9));
        let t = enumerate_walks(&RootedGraph::truncated_tree(3, 3).unwrap(), 6).unwrap();
        assert_eq!(t.even_walks, 87);
        assert_eq!(t.moment(&rademacher()).unwrap(), rat(29, 9));
        assert_eq!(moment_gap(3, 6, &rademacher()).unwrap(), rat(2, 9));
    }

    #[test]
    fn count_polynomials() {
        for d in 2..=6i64 {
            let clique = 2 * d * (d - 1).pow(2) + 8 * d * (d - 1) + 3 * d * (d - 1) * (d - 2) + d;
            let tree = 3 * d * (d - 1).pow(2) + 6 * d * (d - 1) + 2 * d * (d - 1) * (d - 2) + d;
            let du = d as usize;
            let c = enumerate_walks(&RootedGraph::clique(du).unwrap(), 6).unwrap();
            let t = enumerate_walks(&RootedGraph::truncated_tree(du, 3).unwrap(), 6).unwrap();
            assert_eq!(c.even_walks as i64, clique, "d = {d}");
            assert_eq!(t.even_walks as i64, tree, "d = {d}");
            assert_eq!(moment_gap(du, 6, &rademacher()).unwrap(), rat(d * (d - 1), d.pow(3)));
        }
    }

    #[test]
    fn no_gap_below_length_six() {
        for d in 2..=6 {
            for len in [2, 4] {
                assert_eq!(moment_gap(d, len, &rademacher()).unwrap(), rat(0, 1));
            }
        }
    }

    #[test]
    fn length_two_walks() {
        for g in [RootedGraph::clique(4).unwrap(), RootedGraph::truncated_tree(5, 1).unwrap()] {
            let r = enumerate_walks(&g, 2).unwrap();
            assert_eq!(r.total_walks, g.degree(0) as u64);
            assert_eq!(r.profiles, vec![ProfileCount { profile: vec![2], count: r.total_walks }]);
            for dist in [rademacher(), EntryDistribution::gaussian(), EntryDistribution::uniform()] {
                assert_eq!(r.moment(&dist).unwrap(), rat(1, 1));
            }
        }
    }

    #[test]
    fn triangle_two_laps() {
        for d in 2..=5u64 {
            let r = enumerate_walks(&RootedGraph::clique(d as usize).unwrap(), 6).unwrap();
            assert_eq!(r.shape_count(&[0, 1, 2, 0, 1, 2, 0]), d * (d - 1));
            assert_eq!(r.shape_count(&[0, 1, 2, 0, 2, 1, 0]), d * (d - 1));
        }
    }

    #[test]
    fn rademacher_counts_even_walks() {
        let g = RootedGraph::clique(4).unwrap();
        for len in [2, 4, 6, 8] {
            let r = enumerate_walks(&g, len).unwrap();
            let expected = BigRational::new(r.even_walks.into(), BigInt::from(4).pow(len as u32 / 2));
            assert_eq!(r.moment(&rademacher()).unwrap(), MomentValue::Exact(expected));
            assert!(r.even_walks <= r.total_walks);
        }
    }

    #[test]
    fn rejects_bad_lengths() {
        let g = RootedGraph::clique(3).unwrap();
        assert_eq!(enumerate_walks(&g, 5), Err(WalkError::LengthOdd(5)));
        assert!(matches!(enumerate_walks(&g, 14), Err(WalkError::LengthTooLong { .. })));
        assert!(matches!(
            enumerate_walks(&RootedGraph::clique(40).unwrap(), 12),
            Err(WalkError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn walk_counts_match_matrix_powers() {
        // independent oracle: dense powers of the adjacency matrix in f64
        fn oracle(g: &RootedGraph, len: usize) -> f64 {
            let n = g.vertex_count();
            let mut x = vec![0.0; n];
            x[g.root()] = 1.0;
            for _ in 0..len {
                let mut y = vec![0.0; n];
                for i in 0..n {
                    for j in 0..n {
                        if g.neighbors(i).contains(&j) {
                            y[i] += x[j];
                        }
                    }
                }
                x = y;
            }
            x[g.root()]
        }
        let rr = RegularGraph::generate(10, 3, 4, 1000).unwrap();
        let graphs = [
            RootedGraph::clique(3).unwrap(),
            RootedGraph::truncated_tree(3, 4).unwrap(),
            RootedGraph::from_regular(&rr, 2).unwrap(),
        ];
        for g in &graphs {
            for len in [2, 4, 6, 8] {
                let r = enumerate_walks(g, len).unwrap();
                assert_eq!(r.total_walks as f64, oracle(g, len));
                let by_profile: u64 = r.profiles.iter().map(|p| p.count).sum();
                let by_shape: u64 = r.shapes.iter().map(|s| s.count).sum();
                assert_eq!(by_profile, r.total_walks);
                assert_eq!(by_shape, r.total_walks);
            }
        }
    }

    #[test]
    fn tree_moment_tends_to_catalan() {
        let f = |d: usize| {
            local_moment(&RootedGraph::truncated_tree(d, 3).unwrap(), 6, &rademacher()).unwrap().to_f64()
        };
        let (a, b, c) = (f(10), f(20), f(40));
        // Richardson in h = 1/d, h halving
        let r1 = 2.0 * b - a;
        let r2 = 2.0 * c - b;
        let r = (4.0 * r2 - r1) / 3.0;
        assert!((r - 5.0).abs() < 1e-3, "{r}");
    }

    #[test]
    fn gaussian_moment_is_exact() {
        // 2k=4 on a single edge: walks o→a→o→a→o, q = 4, E g⁴ = 3
        let g = RootedGraph::clique(1).unwrap();
        let v = local_moment(&g, 4, &EntryDistribution::gaussian()).unwrap();
        assert_eq!(v, rat(3, 1));
        let w = local_moment(&g, 4, &EntryDistribution::weibull(1.0).unwrap()).unwrap();
        assert!(matches!(w, MomentValue::Approx(x) if (x - 6.0).abs() < 1e-9));
    }

    #[test]
    fn trace_moments() {
        let p = VarianceProfile::clique_union(8, 3).unwrap();
        assert_eq!(expected_trace_moment(&p, &rademacher(), 6).unwrap(), rat(31, 9));
        let one = VarianceProfile::full_wigner(1).unwrap();
        assert_eq!(expected_trace_moment(&one, &EntryDistribution::gaussian(), 4).unwrap(), rat(3, 1));
        assert_eq!(expected_trace_moment(&one, &EntryDistribution::gaussian(), 1).unwrap(), rat(0, 1));
        let full = VarianceProfile::full_wigner(3).unwrap();
        assert_eq!(expected_trace_moment(&full, &rademacher(), 2).unwrap(), rat(1, 1));
        assert!(matches!(
            expected_trace_moment(&VarianceProfile::full_wigner(13).unwrap(), &rademacher(), 2),
            Err(WalkError::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn trace_moment_equals_block_moment() {
        for (n, d) in [(4, 3), (12, 3), (6, 2), (12, 5)] {
            let p = VarianceProfile::clique_union(n, d).unwrap();
            for len in [2, 4, 6] {
                let local = local_moment(&RootedGraph::clique(d).unwrap(), len, &rademacher()).unwrap();
                assert_eq!(expected_trace_moment(&p, &rademacher(), len).unwrap(), local);
            }
        }
    }

    #[test]
    fn bound_check_examples() {
        let full = VarianceProfile::full_wigner(6).unwrap();
        let r = shape_sum_bound_check(&full, 4, 10).unwrap();
        assert!(r.worst_ratio <= 1.0);
        let edge = r.shapes.iter().find(|s| s.shape == vec![0, 1, 0, 1, 0]).unwrap();
        assert_eq!(edge.exact_ratio, Some(BigRational::new(5.into(), 6.into())));

        let cl = VarianceProfile::clique_union(8, 3).unwrap();
        let r = shape_sum_bound_check(&cl, 6, 10).unwrap();
        assert!(r.worst_ratio <= 1.0);
        assert!(r.shapes.iter().all(|s| s.exact_ratio.as_ref().unwrap() <= &BigRational::one()));

        let mut e = VarianceProfile::full_wigner(3).unwrap().dense();
        for j in 0..3 {
            e[j] = 0.0;
            e[3 * j] = 0.0;
        }
        let bad = VarianceProfile::custom(3, e).unwrap();
        assert!(matches!(shape_sum_bound_check(&bad, 4, 10), Err(WalkError::InvalidProfile(_))));
    }

    #[test]
    fn report_json() {
        let r = enumerate_walks(&RootedGraph::clique(3).unwrap(), 6)
            .unwrap()
            .with_moment(&rademacher())
            .unwrap();
        let j = r.to_json();
        assert_eq!(j["moment_value"]["num"], "31");
        assert_eq!(j["moment_value"]["den"], "9");
        assert_eq!(j["even_walks"], 93);
        assert_eq!(j["graph"]["kind"], "clique");
        assert_eq!(j["graph"]["d"], 3);
        assert!(j["shapes"].as_array().unwrap().iter().any(|s| s["profile"] == json!([2, 2, 2])));
    }

    #[test]
    fn pack_round_trip() {
        let v = vec![0, 1, 2, 0, 3, 12, 0];
        assert_eq!(unpack(pack(&v), v.len()), v);
    }
}
