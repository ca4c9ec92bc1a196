//! Littlewood-function norms: `l^p` norms, `N'` lower bounds by subset search,
//! the box trick, the free-group `T_1` decomposition certificate and the
//! quotient lift.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cayley::{enumerate_connected, PoolGraph, SearchConfig, Strategy, SubsetVisitor, EXHAUSTIVE_MAX_POOL};
use crate::error::{Error, Result};
use crate::groups::{ball, Element, GroupBackend, Homomorphism, SymmetricSet};
use crate::provenance::{to_f64, Rational};
use crate::spectral::FiniteSupportFunction;

/// `(sum |f|^p)^{1/p}`, or `max |f|` for `p = inf`.
pub fn lp_norm(f: &FiniteSupportFunction, p: f64) -> Result<f64> {
    lp_norm_values(&f.iter().map(|(_, v)| v).collect::<Vec<_>>(), p)
}

pub fn lp_norm_values(values: &[f64], p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Parameter(format!("l^p norm needs p >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(values.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    Ok(values.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p))
}

/// A common denominator `D <= 10^6` making every value integral, found by
/// extending with factors up to 1000; `None` when there is none.
fn integer_scale(values: &[f64]) -> Option<i64> {
    let mut d: i64 = 1;
    for &v in values {
        let mut found = false;
        for k in 1..=(1_000_000i64 / d).min(1000) {
            let x = v * (d * k) as f64;
            if x.fract() == 0.0 && x.abs() < 2f64.powi(52) {
                d *= k;
                found = true;
                break;
            }
        }
        if !found {
            return None;
        }
    }
    Some(d)
}

/// Outcome of an `N'` search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LittlewoodEstimate {
    /// `(1/|F|) sum_{a,b in F} |f(a^-1 b)|` for the witness; a lower bound
    /// for `N'(f)`.
    pub value: f64,
    /// The same value as an exact fraction, when `|f|` has rational values
    /// with denominator at most `10^6`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact: Option<Rational>,
    pub witness: Vec<Element>,
    /// The value reaches `||f||_1`, an upper bound for `N'(f)` on any group.
    pub attains_l1: bool,
    /// Every connected subset of the pool was examined.
    pub pool_optimal: bool,
    pub pool_size: usize,
    pub candidates: u64,
}

/// `sum_{a,b in F} |f(a^-1 b)|`, counted directly over pairs.
pub fn pair_sum(backend: &GroupBackend, f: &FiniteSupportFunction, set: &[Element]) -> f64 {
    let mut total = 0.0;
    for a in set {
        let ai = backend.inverse(a);
        for b in set {
            total += f.get(&backend.multiply(&ai, b)).abs();
        }
    }
    total
}

struct PairVisitor<'a> {
    weights: &'a [Vec<f64>],
    stack: Vec<f64>,
    best: Option<(f64, usize, u64)>,
    count: u64,
}

fn better_density(a: (f64, usize, u64), b: (f64, usize, u64)) -> bool {
    let lhs = a.0 * b.1 as f64;
    let rhs = b.0 * a.1 as f64;
    lhs > rhs || (lhs == rhs && (a.1, a.2) < (b.1, b.2))
}

impl SubsetVisitor for PairVisitor<'_> {
    fn push(&mut self, v: usize, before: u64) {
        let cur = self.stack.last().copied().unwrap_or(0.0);
        let mut add = self.weights[v][v];
        let mut m = before;
        while m != 0 {
            let u = m.trailing_zeros() as usize;
            m &= m - 1;
            add += self.weights[u][v] + self.weights[v][u];
        }
        self.stack.push(cur + add);
    }

    fn pop(&mut self) {
        self.stack.pop();
    }

    fn visit(&mut self, set: u64, size: usize) {
        self.count += 1;
        let cand = (*self.stack.last().unwrap(), size, set);
        if self.best.map_or(true, |b| better_density(cand, b)) {
            self.best = Some(cand);
        }
    }
}

/// Lower bound for `N'(f)` by maximizing the pair density over subsets of the
/// ball of radius `cfg.pool_radius` in the metric of `metric`. Only subsets
/// connected through `supp f` are searched: a union of pieces with no pairs
/// between them has density at most that of its densest piece.
pub fn nprime_lower(
    backend: &GroupBackend,
    metric: &SymmetricSet,
    f: &FiniteSupportFunction,
    cfg: &SearchConfig,
) -> Result<LittlewoodEstimate> {
    let f = f.abs();
    if f.support_size() == 0 {
        return Err(Error::Input("f is zero".into()));
    }
    let (steps, w): (Vec<Element>, Vec<f64>) = f.iter().map(|(x, v)| (x.clone(), v)).unzip();
    let pool = PoolGraph::new(backend, metric, cfg.pool_radius, &steps);
    let n = pool.len();
    let max_size = cfg.max_subset.unwrap_or(n).min(n);
    if n == 0 || max_size == 0 {
        return Err(Error::Input("empty candidate pool".into()));
    }
    // Pair-sum increments when v joins: pairs (v, vg), then pairs (u, ug = v).
    let gain = |inside: &[bool], v: usize| -> f64 {
        let mut g = 0.0;
        for (k, j) in pool.steps[v].iter().enumerate() {
            if let Some(j) = j {
                let j = *j as usize;
                if j == v || inside[j] {
                    g += w[k];
                }
            }
        }
        g
    };
    let mut reverse: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for u in 0..n {
        for (k, j) in pool.steps[u].iter().enumerate() {
            if let Some(j) = j {
                reverse[*j as usize].push((u, k));
            }
        }
    }
    let incoming = |inside: &[bool], v: usize| -> f64 {
        reverse[v].iter().filter(|(u, _)| *u != v && inside[*u]).map(|(_, k)| w[*k]).sum()
    };

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut candidates = 0u64;
    let offer = |cand: (f64, Vec<usize>), best: &mut Option<(f64, Vec<usize>)>| {
        let better = match best {
            None => true,
            Some((bv, bm)) => {
                let lhs = cand.0 * bm.len() as f64;
                let rhs = *bv * cand.1.len() as f64;
                lhs > rhs || (lhs == rhs && (cand.1.len(), &cand.1) < (bm.len(), bm))
            }
        };
        if better {
            *best = Some(cand);
        }
    };
    let mut pool_optimal = false;

    if cfg.strategies.contains(&Strategy::Exhaustive) && n <= EXHAUSTIVE_MAX_POOL {
        let mut weights = vec![vec![0.0; n]; n];
        let mut adj = vec![0u64; n];
        for u in 0..n {
            for (k, j) in pool.steps[u].iter().enumerate() {
                if let Some(j) = j {
                    let j = *j as usize;
                    weights[u][j] += w[k];
                    if j != u {
                        adj[u] |= 1 << j;
                        adj[j] |= 1 << u;
                    }
                }
            }
        }
        let results: Vec<(Option<(f64, usize, u64)>, u64)> = (0..n)
            .into_par_iter()
            .map(|root| {
                let mut vis = PairVisitor { weights: &weights, stack: Vec::new(), best: None, count: 0 };
                enumerate_connected(&adj, root, max_size, &mut vis);
                (vis.best, vis.count)
            })
            .collect();
        for (b, c) in results {
            candidates += c;
            if let Some((val, _, mask)) = b {
                offer((val, (0..n).filter(|i| mask >> i & 1 == 1).collect()), &mut best);
            }
        }
        pool_optimal = max_size == n;
    }

    if cfg.strategies.contains(&Strategy::NestedBalls) {
        let mut inside = vec![false; n];
        let mut total = 0.0;
        let mut best_prefix = (f64::NEG_INFINITY, 0usize);
        for v in 0..max_size {
            total += gain(&inside, v) + incoming(&inside, v);
            inside[v] = true;
            candidates += 1;
            if total * best_prefix.1 as f64 > best_prefix.0 * (v + 1) as f64 || best_prefix.1 == 0 {
                best_prefix = (total, v + 1);
            }
        }
        offer((best_prefix.0, (0..best_prefix.1).collect()), &mut best);
    }

    if cfg.strategies.contains(&Strategy::LocalSearch) && cfg.local_steps > 0 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
        let start = best.as_ref().map(|b| b.1.clone()).unwrap_or_else(|| vec![0]);
        let mut inside = vec![false; n];
        let mut total = 0.0;
        for &v in &start {
            total += gain(&inside, v) + incoming(&inside, v);
            inside[v] = true;
        }
        let mut members = start;
        for _ in 0..cfg.local_steps {
            let size = members.len();
            if size < max_size && (size == 1 || rng.gen_bool(0.5)) {
                let mut frontier: Vec<usize> = members
                    .iter()
                    .flat_map(|&u| pool.steps[u].iter().flatten().map(|&j| j as usize))
                    .filter(|&j| !inside[j])
                    .collect();
                frontier.sort_unstable();
                frontier.dedup();
                if frontier.is_empty() {
                    continue;
                }
                let v = frontier[rng.gen_range(0..frontier.len())];
                let nt = total + gain(&inside, v) + incoming(&inside, v);
                candidates += 1;
                if nt * size as f64 > total * (size + 1) as f64 {
                    inside[v] = true;
                    members.push(v);
                    total = nt;
                }
            } else if size > 1 {
                let pos = rng.gen_range(0..size);
                let v = members[pos];
                inside[v] = false;
                let nt = total - gain(&inside, v) - incoming(&inside, v);
                candidates += 1;
                if nt * size as f64 >= total * (size - 1) as f64 {
                    members.swap_remove(pos);
                    total = nt;
                } else {
                    inside[v] = true;
                }
            }
        }
        members.sort_unstable();
        offer((total, members), &mut best);
    }

    let (_, members) = best.ok_or_else(|| Error::Input("no search strategy produced a candidate".into()))?;
    let witness: Vec<Element> = members.iter().map(|&i| pool.ball.elements()[i].clone()).collect();
    let total = pair_sum(backend, &f, &witness);
    let value = total / witness.len() as f64;
    let values: Vec<f64> = f.iter().map(|(_, v)| v).collect();
    let exact = integer_scale(&values).map(|d| {
        let scaled: i64 = witness
            .iter()
            .map(|a| {
                let ai = backend.inverse(a);
                witness.iter().map(|b| (f.get(&backend.multiply(&ai, b)) * d as f64) as i64).sum::<i64>()
            })
            .sum();
        Rational::new(scaled, d * witness.len() as i64)
    });
    let l1: f64 = values.iter().sum();
    Ok(LittlewoodEstimate {
        value,
        exact,
        witness,
        attains_l1: (value - l1).abs() <= 1e-12 * l1,
        pool_optimal,
        pool_size: n,
        candidates,
    })
}

/// `zeta(s)` for `s > 1` by Euler-Maclaurin summation after 50 explicit
/// terms; the truncation error is far below `10^-12`.
pub fn zeta(s: f64) -> Result<f64> {
    if s.is_nan() || s <= 1.0 {
        return Err(Error::Domain(format!("zeta needs s > 1, got {s}")));
    }
    const N: f64 = 50.0;
    // B_{2k} / (2k)!
    const B: [f64; 6] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
    ];
    let mut sum: f64 = (1..50).map(|n| (n as f64).powf(-s)).sum();
    sum += N.powf(1.0 - s) / (s - 1.0) + 0.5 * N.powf(-s);
    // rising factorial s (s+1) ... (s+2k-2)
    let mut rising = s;
    for (k, b) in B.iter().enumerate() {
        let k = k + 1;
        sum += b * rising * N.powf(-s - (2 * k - 1) as f64);
        rising *= (s + (2 * k - 1) as f64) * (s + (2 * k) as f64);
    }
    Ok(sum)
}

/// A multiple of an indicator chosen below `f` by the box trick.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxFunction {
    pub height: f64,
    pub support: Vec<Element>,
    /// `height * n^{1/q}`.
    pub q_norm: f64,
    pub p_norm: f64,
    /// `zeta(p/q)^{-1/p} ||f||_p`.
    pub guarantee: f64,
}

impl BoxFunction {
    pub fn width(&self) -> usize {
        self.support.len()
    }

    pub fn meets_guarantee(&self) -> bool {
        self.q_norm >= self.guarantee * (1.0 - 1e-12)
    }
}

/// Box selection on a list of values: returns `(n, height, q-norm, guarantee)`
/// for the `n` maximizing `f_(n) n^{1/q}` over the decreasing rearrangement.
pub fn box_select(values: &[f64], p: f64, q: f64) -> Result<(usize, f64, f64, f64)> {
    if !(q > 0.0 && p > q) {
        return Err(Error::Parameter(format!("box trick needs 0 < q < p, got p={p}, q={q}")));
    }
    if values.iter().any(|v| *v < 0.0 || v.is_nan()) {
        return Err(Error::Domain("box trick needs f >= 0".into()));
    }
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
    if sorted.is_empty() {
        return Err(Error::Input("f is zero".into()));
    }
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut best = (0usize, 0.0, f64::NEG_INFINITY);
    for (i, &v) in sorted.iter().enumerate() {
        let n = i + 1;
        let score = v * (n as f64).powf(1.0 / q);
        if score > best.2 {
            best = (n, v, score);
        }
    }
    let p_norm = sorted.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p);
    let guarantee = zeta(p / q)?.powf(-1.0 / p) * p_norm;
    Ok((best.0, best.1, best.2, guarantee))
}

pub fn box_trick(f: &FiniteSupportFunction, p: f64, q: f64) -> Result<BoxFunction> {
    let mut entries: Vec<(&Element, f64)> = f.iter().filter(|(_, v)| *v != 0.0).collect();
    let values: Vec<f64> = entries.iter().map(|(_, v)| *v).collect();
    let (n, height, q_norm, guarantee) = box_select(&values, p, q)?;
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let support = entries[..n].iter().map(|(x, _)| (*x).clone()).collect();
    Ok(BoxFunction { height, support, q_norm, p_norm: lp_norm_values(&values, p)?, guarantee })
}

/// Row and column suprema of the free-group decomposition
/// `f(x^-1 y) = f_1(x,y) + f_2(x,y)`, where `f_1` keeps the pairs with
/// `|y| <= |x|`, over `ball(radius) x ball(radius)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCertificate {
    pub radius: usize,
    pub row_sup: f64,
    pub col_sup: f64,
    pub bound: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact_bound: Option<Rational>,
}

pub fn free_t1_certificate(backend: &GroupBackend, f: &FiniteSupportFunction, radius: usize) -> Result<DecompositionCertificate> {
    if !matches!(backend, GroupBackend::Free { .. }) {
        return Err(Error::Domain(format!("T_1 certificate needs a free group, got {}", backend.label())));
    }
    let f = f.abs();
    let metric = SymmetricSet::standard(backend)?;
    let (steps, w): (Vec<Element>, Vec<f64>) = f.iter().map(|(x, v)| (x.clone(), v)).unzip();
    let pool = PoolGraph::new(backend, &metric, radius, &steps);
    let n = pool.len();
    let len = |i: usize| pool.ball.distance_of_index(i);
    let mut rows = vec![0.0; n];
    let mut cols = vec![0.0; n];
    for x in 0..n {
        for (k, y) in pool.steps[x].iter().enumerate() {
            if let Some(y) = y {
                let y = *y as usize;
                if len(y) <= len(x) {
                    rows[x] += w[k];
                } else {
                    cols[y] += w[k];
                }
            }
        }
    }
    let row_sup = rows.iter().fold(0.0f64, |m, v| m.max(*v));
    let col_sup = cols.iter().fold(0.0f64, |m, v| m.max(*v));
    let values: Vec<f64> = w.clone();
    let exact_bound = integer_scale(&values).map(|d| {
        let r = (row_sup * d as f64).round() as i64;
        let c = (col_sup * d as f64).round() as i64;
        Rational::new(r + c, d)
    });
    Ok(DecompositionCertificate { radius, row_sup, col_sup, bound: row_sup + col_sup, exact_bound })
}

/// One point of the closed-graph ratio: `T_1` certificate over `||1_S||_p`
/// for the standard generators of the free group of rank `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedGraphPoint {
    pub rank: usize,
    pub s_size: usize,
    pub certificate: f64,
    pub lp_norm: f64,
    pub ratio: f64,
}

/// The certificate stays at 2 while `||1_S||_p = (2m)^{1/p}` grows, so the
/// ratio tends to 0 for every finite `p`.
pub fn closed_graph_scan(ranks: &[usize], p: f64, radius: usize) -> Result<Vec<ClosedGraphPoint>> {
    ranks
        .iter()
        .map(|&m| {
            let g = GroupBackend::free(m);
            let s = SymmetricSet::standard(&g)?;
            let f = FiniteSupportFunction::indicator(s.elements());
            let cert = free_t1_certificate(&g, &f, radius)?;
            let norm = lp_norm(&f, p)?;
            Ok(ClosedGraphPoint { rank: m, s_size: s.len(), certificate: cert.bound, lp_norm: norm, ratio: cert.bound / norm })
        })
        .collect()
}

/// Lift of `f` on a quotient along a section: `f~(r) = f(pi(r))` for `r` in
/// the section and `0` elsewhere. Every coset meeting `supp f` must have its
/// representative in the section.
pub fn quotient_lift(f: &FiniteSupportFunction, pi: &Homomorphism, section: &[Element]) -> Result<FiniteSupportFunction> {
    let mut rep: HashMap<Element, Element> = HashMap::new();
    for r in section {
        if let Some(prev) = rep.insert(pi.apply(r), r.clone()) {
            return Err(Error::Input(format!("section elements {prev} and {r} lie in the same coset")));
        }
    }
    let mut out = FiniteSupportFunction::new();
    for (y, v) in f.iter() {
        let r = rep.get(y).ok_or_else(|| Error::Input(format!("no representative for {y}")))?;
        out.add(r.clone(), v);
    }
    Ok(out)
}

/// `N'(1_S)` over finite groups by the search above, with pool the whole
/// group, together with `|S| e` from the Cheeger search.
pub fn nprime_vs_cheeger(backend: &GroupBackend, s: &SymmetricSet) -> Result<(Rational, Rational)> {
    let radius = ball(backend, s, usize::MAX).radius();
    let cfg = SearchConfig::new(radius);
    let f = FiniteSupportFunction::indicator(s.elements());
    let est = nprime_lower(backend, s, &f, &cfg)?;
    let cheeger = crate::cayley::cheeger_upper(backend, s, &cfg)?;
    let mad = crate::cayley::e_and_mad(&cheeger).mad;
    let np = est.exact.ok_or_else(|| Error::Input("indicator weights are integral".into()))?;
    debug_assert!((to_f64(np) - est.value).abs() < 1e-9);
    Ok((np, mad))
}
