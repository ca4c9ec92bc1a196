//! Isoperimetry on Cayley graphs: boundary/edge/loop counts, Cheeger-constant
//! upper bounds by subset search, and the derived `e(G,S)` and `mad`.
//!
//! Ratios are exact integer pairs throughout. The subset search only visits
//! connected subsets: if `F` splits into pieces with no edges between them,
//! `|dF|/|F|` is a mediant of the pieces' ratios and never beats the best piece.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{ball, Ball, Element, GroupBackend, SymmetricSet};
use crate::provenance::{Provenance, Rational};

/// Edge counts for a finite vertex set `F` in `Cay(G, S)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetStats {
    pub size: usize,
    /// `|dF|`: edges from `F` to its complement.
    pub boundary: usize,
    /// `|E(F)|`: edges of the induced subgraph, loops included.
    pub internal_edges: usize,
    /// `|L(F)|`: loops among the internal edges.
    pub loops: usize,
}

impl SubsetStats {
    pub fn ratio(&self) -> Rational {
        Rational::new(self.boundary as i64, self.size as i64)
    }

    /// `|F||S| = |dF| + 2|E(F)| - |L(F)|`.
    pub fn counting_identity_holds(&self, s_len: usize) -> bool {
        (self.size * s_len) as i64
            == self.boundary as i64 + 2 * self.internal_edges as i64 - self.loops as i64
    }
}

/// Counts boundary edges, induced edges and loops of `F`. Boundary edges are
/// counted as pairs `(x, s)` with `xs` outside `F`; induced edges as distinct
/// unordered pairs `{x, xs}` inside `F`.
pub fn subset_stats(backend: &GroupBackend, s: &SymmetricSet, f: &[Element]) -> Result<SubsetStats> {
    if f.is_empty() {
        return Err(Error::Input("vertex set is empty".into()));
    }
    let members: HashMap<&Element, usize> = f.iter().enumerate().map(|(i, x)| (x, i)).collect();
    if members.len() != f.len() {
        return Err(Error::Input("duplicate vertex in F".into()));
    }
    let mut boundary = 0;
    let mut edges: HashSet<(usize, usize)> = HashSet::new();
    for (i, x) in f.iter().enumerate() {
        for g in s.elements() {
            match members.get(&backend.multiply(x, g)) {
                Some(&j) => {
                    edges.insert((i.min(j), i.max(j)));
                }
                None => boundary += 1,
            }
        }
    }
    let loops = edges.iter().filter(|(a, b)| a == b).count();
    Ok(SubsetStats { size: f.len(), boundary, internal_edges: edges.len(), loops })
}

/// Search strategies for [`cheeger_upper`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// All connected subsets of the pool; only when the pool has at most
    /// [`EXHAUSTIVE_MAX_POOL`] vertices.
    Exhaustive,
    /// Breadth-first prefixes of the pool (all balls included).
    NestedBalls,
    /// Seeded add/remove moves on connected subsets.
    LocalSearch,
}

pub const EXHAUSTIVE_MAX_POOL: usize = 24;
pub const DEFAULT_LOCAL_STEPS: usize = 1000;

fn default_strategies() -> Vec<Strategy> {
    vec![Strategy::Exhaustive, Strategy::NestedBalls, Strategy::LocalSearch]
}

fn default_local_steps() -> usize {
    DEFAULT_LOCAL_STEPS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub pool_radius: usize,
    /// Largest subset considered; defaults to the whole pool.
    #[serde(default)]
    pub max_subset: Option<usize>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_local_steps")]
    pub local_steps: usize,
}

impl SearchConfig {
    pub fn new(pool_radius: usize) -> Self {
        SearchConfig {
            pool_radius,
            max_subset: None,
            strategies: default_strategies(),
            seed: 0,
            local_steps: DEFAULT_LOCAL_STEPS,
        }
    }

    pub fn with_max_subset(mut self, m: usize) -> Self {
        self.max_subset = Some(m);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_strategies(mut self, s: &[Strategy]) -> Self {
        self.strategies = s.to_vec();
        self
    }
}

/// Outcome of a Cheeger search: `h_upper` is the least ratio among all
/// candidates examined, hence an upper bound for `h(G, S)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheegerResult {
    pub h_upper: Rational,
    /// Set when a candidate with empty boundary was found (then `h = 0`).
    pub exact: bool,
    /// Set when the exhaustive strategy covered every connected subset of
    /// the pool (within the size cap); the bound is then optimal for the pool.
    pub pool_optimal: bool,
    pub witness: Vec<Element>,
    pub witness_stats: SubsetStats,
    pub s_size: usize,
    pub pool_size: usize,
    pub candidates: u64,
}

impl CheegerResult {
    pub fn provenance(&self) -> Provenance {
        if self.exact {
            Provenance::Exact
        } else {
            Provenance::UpperBound
        }
    }
}

/// `e(G,S) = 1 - h/|S|` and `mad = |S| e`. When `h` is only an upper bound,
/// both are lower bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeBounds {
    pub h: Rational,
    pub e: Rational,
    pub mad: Rational,
    pub provenance: Provenance,
}

/// Exact values of `h(G, S)` for the documented solvable cases: `0` when
/// `<S>` is amenable (finite groups, abelian groups, lamplighter) and
/// `2m - 2` for the free group of rank `m` with its standard generators,
/// where every finite subtree of the `2m`-regular tree has
/// `|dF| = (2m-2)|F| + 2`.
pub fn analytic_cheeger(backend: &GroupBackend, s: &SymmetricSet) -> Option<Rational> {
    if backend.is_amenable() {
        return Some(Rational::from_integer(0));
    }
    match backend {
        GroupBackend::Free { rank } if s.is_standard(backend) => {
            Some(Rational::from_integer(2 * *rank as i64 - 2))
        }
        _ => None,
    }
}

pub fn e_and_mad(cheeger: &CheegerResult) -> DegreeBounds {
    degree_bounds(cheeger.h_upper, cheeger.s_size, cheeger.provenance())
}

/// `e` and `mad` from an `h` value with the given provenance.
pub fn degree_bounds(h: Rational, s_size: usize, h_provenance: Provenance) -> DegreeBounds {
    let size = Rational::from_integer(s_size as i64);
    let e = Rational::from_integer(1) - h / size;
    DegreeBounds { h, e, mad: size - h, provenance: h_provenance.reversed() }
}

/// Ball pool together with the right-multiplication table by a list of step
/// elements: `steps[i][k]` is the pool index of `pool[i] * step_k`.
pub(crate) struct PoolGraph {
    pub ball: Ball,
    pub steps: Vec<Vec<Option<u32>>>,
}

impl PoolGraph {
    pub fn new(backend: &GroupBackend, metric: &SymmetricSet, radius: usize, step: &[Element]) -> Self {
        let ball = ball(backend, metric, radius);
        let steps = ball
            .elements()
            .par_iter()
            .map(|x| {
                step.iter()
                    .map(|g| ball.index_of(&backend.multiply(x, g)).map(|i| i as u32))
                    .collect()
            })
            .collect();
        PoolGraph { ball, steps }
    }

    pub fn len(&self) -> usize {
        self.ball.len()
    }
}

/// Receives the connected subsets produced by [`enumerate_connected`].
pub(crate) trait SubsetVisitor {
    fn push(&mut self, v: usize, before: u64);
    fn pop(&mut self);
    fn visit(&mut self, set: u64, size: usize);
}

/// Enumerates every connected vertex set whose least vertex is `root`, each
/// exactly once, up to `max_size` vertices. `adj[v]` is the neighbour mask of
/// `v` (without `v` itself).
pub(crate) fn enumerate_connected<V: SubsetVisitor>(adj: &[u64], root: usize, max_size: usize, vis: &mut V) {
    fn rec<V: SubsetVisitor>(adj: &[u64], set: u64, size: usize, cand: u64, excl: u64, max: usize, vis: &mut V) {
        vis.visit(set, size);
        if size >= max {
            return;
        }
        let mut c = cand;
        let mut x = excl;
        while c != 0 {
            let w = c.trailing_zeros() as usize;
            let bit = 1u64 << w;
            c &= !bit;
            let next = c | (adj[w] & !(set | c | x | bit));
            vis.push(w, set);
            rec(adj, set | bit, size + 1, next, x, max, vis);
            vis.pop();
            x |= bit;
        }
    }
    let low = if root >= 63 { u64::MAX } else { (1u64 << (root + 1)) - 1 };
    let bit = 1u64 << root;
    vis.push(root, 0);
    rec(adj, bit, 1, adj[root] & !low, low, max_size, vis);
    vis.pop();
}

/// Candidate ordering: smaller ratio, then smaller set, then smaller mask.
fn better_boundary(a: (usize, usize, u64), b: (usize, usize, u64)) -> bool {
    let lhs = a.0 as u128 * b.1 as u128;
    let rhs = b.0 as u128 * a.1 as u128;
    lhs < rhs || (lhs == rhs && (a.1, a.2) < (b.1, b.2))
}

struct BoundaryVisitor<'a> {
    adj: &'a [u64],
    per_vertex: usize,
    stack: Vec<usize>,
    best: Option<(usize, usize, u64)>,
    count: u64,
}

impl SubsetVisitor for BoundaryVisitor<'_> {
    fn push(&mut self, v: usize, before: u64) {
        let cur = self.stack.last().copied().unwrap_or(0);
        let inside = (self.adj[v] & before).count_ones() as usize;
        self.stack.push(cur + self.per_vertex - 2 * inside);
    }

    fn pop(&mut self) {
        self.stack.pop();
    }

    fn visit(&mut self, set: u64, size: usize) {
        self.count += 1;
        let cand = (*self.stack.last().unwrap(), size, set);
        if self.best.map_or(true, |b| better_boundary(cand, b)) {
            self.best = Some(cand);
        }
    }
}

struct Best {
    boundary: usize,
    members: Vec<usize>,
}

impl Best {
    fn key(&self) -> (usize, usize) {
        (self.boundary, self.members.len())
    }

    fn improves_on(&self, other: &Best) -> bool {
        let (a, b) = (self.key(), other.key());
        let lhs = a.0 as u128 * b.1 as u128;
        let rhs = b.0 as u128 * a.1 as u128;
        lhs < rhs || (lhs == rhs && (a.1, &self.members) < (b.1, &other.members))
    }
}

/// Upper bound for `h(G, S)` by searching subsets of the ball of radius
/// `pool_radius`.
pub fn cheeger_upper(backend: &GroupBackend, s: &SymmetricSet, cfg: &SearchConfig) -> Result<CheegerResult> {
    let id = backend.identity();
    let non_identity: Vec<Element> = s.elements().iter().filter(|x| **x != id).cloned().collect();
    let pool = PoolGraph::new(backend, s, cfg.pool_radius, &non_identity);
    let n = pool.len();
    if n == 0 {
        return Err(Error::Input("empty candidate pool".into()));
    }
    let max_size = cfg.max_subset.unwrap_or(n).min(n);
    if max_size == 0 {
        return Err(Error::Input("max_subset must be >= 1".into()));
    }
    // Every vertex contributes |S| boundary slots minus its loop.
    let per_vertex = non_identity.len();
    let mut best: Option<Best> = None;
    let mut candidates = 0u64;
    let mut pool_optimal = false;

    let offer = |b: Best, best: &mut Option<Best>| {
        if best.as_ref().map_or(true, |cur| b.improves_on(cur)) {
            *best = Some(b);
        }
    };

    if cfg.strategies.contains(&Strategy::Exhaustive) && n <= EXHAUSTIVE_MAX_POOL {
        let adj: Vec<u64> = pool
            .steps
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter().flatten().filter(|&&j| j as usize != i).fold(0u64, |m, &j| m | 1 << j)
            })
            .collect();
        let results: Vec<(Option<(usize, usize, u64)>, u64)> = (0..n)
            .into_par_iter()
            .map(|root| {
                let mut vis = BoundaryVisitor { adj: &adj, per_vertex, stack: Vec::new(), best: None, count: 0 };
                enumerate_connected(&adj, root, max_size, &mut vis);
                (vis.best, vis.count)
            })
            .collect();
        for (b, c) in results {
            candidates += c;
            if let Some((boundary, _, mask)) = b {
                let members = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                offer(Best { boundary, members }, &mut best);
            }
        }
        pool_optimal = true;
    }

    if cfg.strategies.contains(&Strategy::NestedBalls) {
        let mut inside = vec![false; n];
        let mut boundary = 0usize;
        let mut best_prefix: Option<(usize, usize)> = None;
        for v in 0..max_size {
            let internal = pool.steps[v].iter().flatten().filter(|&&j| j as usize != v && inside[j as usize]).count();
            boundary = boundary + per_vertex - 2 * internal;
            inside[v] = true;
            candidates += 1;
            let size = v + 1;
            if best_prefix.map_or(true, |(b, k)| (boundary as u128) * (k as u128) < (b as u128) * (size as u128)) {
                best_prefix = Some((boundary, size));
            }
        }
        if let Some((boundary, size)) = best_prefix {
            offer(Best { boundary, members: (0..size).collect() }, &mut best);
        }
    }

    if cfg.strategies.contains(&Strategy::LocalSearch) && cfg.local_steps > 0 {
        let start = best.as_ref().map(|b| b.members.clone()).unwrap_or_else(|| vec![0]);
        let (b, evaluated) = local_search(&pool, per_vertex, start, max_size, cfg.local_steps, cfg.seed);
        candidates += evaluated;
        offer(b, &mut best);
    }

    let best = best.ok_or_else(|| Error::Input("no search strategy produced a candidate".into()))?;
    let witness: Vec<Element> = best.members.iter().map(|&i| pool.ball.elements()[i].clone()).collect();
    let witness_stats = subset_stats(backend, s, &witness)?;
    debug_assert_eq!(witness_stats.boundary, best.boundary);
    let h_upper = witness_stats.ratio();
    Ok(CheegerResult {
        h_upper,
        exact: witness_stats.boundary == 0,
        pool_optimal: pool_optimal && max_size == n,
        witness,
        witness_stats,
        s_size: s.len(),
        pool_size: n,
        candidates,
    })
}

fn boundary_delta_add(pool: &PoolGraph, inside: &[bool], v: usize, per_vertex: usize) -> isize {
    let internal = pool.steps[v].iter().flatten().filter(|&&j| j as usize != v && inside[j as usize]).count();
    per_vertex as isize - 2 * internal as isize
}

fn still_connected(pool: &PoolGraph, inside: &[bool], removed: usize, size: usize) -> bool {
    let start = match (0..inside.len()).find(|&i| inside[i] && i != removed) {
        Some(s) => s,
        None => return true,
    };
    let mut seen = HashSet::new();
    seen.insert(start);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &j in pool.steps[u].iter().flatten() {
            let j = j as usize;
            if j != removed && inside[j] && seen.insert(j) {
                queue.push_back(j);
            }
        }
    }
    seen.len() == size - 1
}

/// Add/remove moves that keep `F` connected; a move is taken when the ratio
/// strictly decreases, or stays equal with a smaller set.
fn local_search(
    pool: &PoolGraph,
    per_vertex: usize,
    start: Vec<usize>,
    max_size: usize,
    steps: usize,
    seed: u64,
) -> (Best, u64) {
    let n = pool.len();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut inside = vec![false; n];
    let mut boundary: isize = 0;
    let mut members: Vec<usize> = Vec::new();
    for &v in &start {
        boundary += boundary_delta_add(pool, &inside, v, per_vertex);
        inside[v] = true;
        members.push(v);
    }
    let mut evaluated = 0u64;
    let better = |b1: isize, s1: usize, b0: isize, s0: usize| {
        let lhs = b1 as i128 * s0 as i128;
        let rhs = b0 as i128 * s1 as i128;
        lhs < rhs || (lhs == rhs && s1 < s0)
    };
    for _ in 0..steps {
        let size = members.len();
        let try_add = size < max_size && (size == 1 || rng.gen_bool(0.5));
        if try_add {
            let frontier: Vec<usize> = {
                let mut f: Vec<usize> = members
                    .iter()
                    .flat_map(|&u| pool.steps[u].iter().flatten().map(|&j| j as usize))
                    .filter(|&j| !inside[j])
                    .collect();
                f.sort_unstable();
                f.dedup();
                f
            };
            if frontier.is_empty() {
                continue;
            }
            let v = frontier[rng.gen_range(0..frontier.len())];
            let nb = boundary + boundary_delta_add(pool, &inside, v, per_vertex);
            evaluated += 1;
            if better(nb, size + 1, boundary, size) {
                inside[v] = true;
                members.push(v);
                boundary = nb;
            }
        } else if size > 1 {
            let pos = rng.gen_range(0..size);
            let v = members[pos];
            if !still_connected(pool, &inside, v, size) {
                continue;
            }
            inside[v] = false;
            let nb = boundary - boundary_delta_add(pool, &inside, v, per_vertex);
            evaluated += 1;
            if better(nb, size - 1, boundary, size) {
                members.swap_remove(pos);
                boundary = nb;
            } else {
                inside[v] = true;
            }
        }
    }
    members.sort_unstable();
    (Best { boundary: boundary as usize, members }, evaluated)
}

/// Ratios `|dB_r|/|B_r|` of the nested balls `B_0 ⊂ ... ⊂ B_R`.
pub fn nested_ball_stats(backend: &GroupBackend, s: &SymmetricSet, radius: usize) -> Result<Vec<SubsetStats>> {
    let b = ball(backend, s, radius);
    (0..=b.radius())
        .map(|r| {
            let end: usize = (0..=r).map(|k| b.layer(k).len()).sum();
            subset_stats(backend, s, &b.elements()[..end])
        })
        .collect()
}
