//! Markov and convolution operators: return-probability lower bounds for the
//! spectral radius, compressed operator norms, analytic values for the solvable
//! cases, Cheeger-inequality checks and the rapid-decay ratio scan.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cayley::PoolGraph;
use crate::error::{Error, Result};
use crate::groups::{ball, Element, GroupBackend, SymmetricSet};
use crate::provenance::{Provenance, Tagged};

/// Real-valued function with finite support; zero values are never stored.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FiniteSupportFunction {
    values: BTreeMap<Element, f64>,
}

impl FiniteSupportFunction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Element, f64)>) -> Self {
        let mut f = Self::new();
        for (x, v) in pairs {
            f.add(x, v);
        }
        f
    }

    pub fn delta(x: Element) -> Self {
        Self::from_pairs([(x, 1.0)])
    }

    pub fn indicator<'a>(set: impl IntoIterator<Item = &'a Element>) -> Self {
        Self::from_pairs(set.into_iter().map(|x| (x.clone(), 1.0)))
    }

    pub fn add(&mut self, x: Element, v: f64) {
        let new = self.get(&x) + v;
        if new == 0.0 {
            self.values.remove(&x);
        } else {
            self.values.insert(x, new);
        }
    }

    pub fn get(&self, x: &Element) -> f64 {
        self.values.get(x).copied().unwrap_or(0.0)
    }

    pub fn support_size(&self) -> usize {
        self.values.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Element, f64)> {
        self.values.iter().map(|(k, v)| (k, *v))
    }

    pub fn support(&self) -> Vec<Element> {
        self.values.keys().cloned().collect()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.values().all(|v| *v >= 0.0)
    }

    pub fn abs(&self) -> Self {
        Self::from_pairs(self.iter().map(|(x, v)| (x.clone(), v.abs())))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_pairs(self.iter().map(|(x, v)| (x.clone(), v * c)))
    }

    pub fn total(&self) -> f64 {
        self.values.values().sum()
    }
}

/// `(f * g)(x) = sum_y f(y) g(y^-1 x)`. Products are formed in parallel and
/// summed in a fixed order, so the result does not depend on the thread count.
pub fn convolve(backend: &GroupBackend, f: &FiniteSupportFunction, g: &FiniteSupportFunction) -> FiniteSupportFunction {
    let fs: Vec<(&Element, f64)> = f.iter().collect();
    let parts: Vec<Vec<(Element, f64)>> = fs
        .par_iter()
        .map(|(y, a)| g.iter().map(|(z, b)| (backend.multiply(y, z), a * b)).collect())
        .collect();
    let mut sums: BTreeMap<Element, f64> = BTreeMap::new();
    for (x, v) in parts.into_iter().flatten() {
        *sums.entry(x).or_insert(0.0) += v;
    }
    FiniteSupportFunction { values: sums.into_iter().filter(|(_, v)| *v != 0.0).collect() }
}

/// Integer walk counts `W_k(x)`: the number of `k`-letter words over `S`
/// evaluating to `x`.
pub(crate) fn walk_step(backend: &GroupBackend, s: &SymmetricSet, cur: &HashMap<Element, BigUint>) -> HashMap<Element, BigUint> {
    let entries: Vec<(&Element, &BigUint)> = cur.iter().collect();
    entries
        .par_chunks(4096)
        .map(|chunk| {
            let mut out: HashMap<Element, BigUint> = HashMap::new();
            for (x, c) in chunk {
                for g in s.elements() {
                    *out.entry(backend.multiply(x, g)).or_insert_with(BigUint::zero) += *c;
                }
            }
            out
        })
        .reduce(HashMap::new, |mut a, b| {
            if a.len() < b.len() {
                return merge_counts(b, a);
            }
            for (k, v) in b {
                *a.entry(k).or_insert_with(BigUint::zero) += v;
            }
            a
        })
}

fn merge_counts(mut a: HashMap<Element, BigUint>, b: HashMap<Element, BigUint>) -> HashMap<Element, BigUint> {
    for (k, v) in b {
        *a.entry(k).or_insert_with(BigUint::zero) += v;
    }
    a
}

fn float_step(backend: &GroupBackend, s: &SymmetricSet, cur: &HashMap<Element, f64>) -> HashMap<Element, f64> {
    // Summation order is fixed by sorting, for reproducibility.
    let mut entries: Vec<(&Element, f64)> = cur.iter().map(|(k, v)| (k, *v)).collect();
    entries.sort_by(|a, b| a.0.cmp(b.0));
    let w = 1.0 / s.len() as f64;
    let contributions: Vec<Vec<(Element, f64)>> = entries
        .par_chunks(4096)
        .map(|chunk| {
            chunk
                .iter()
                .flat_map(|(x, c)| s.elements().iter().map(move |g| (backend.multiply(x, g), c * w)))
                .collect()
        })
        .collect();
    let mut out: HashMap<Element, f64> = HashMap::new();
    for (x, v) in contributions.into_iter().flatten() {
        *out.entry(x).or_insert(0.0) += v;
    }
    out
}

/// `num / den` as a float, robust to operands beyond the `f64` range.
pub(crate) fn big_ratio(num: &BigUint, den: &BigUint) -> f64 {
    let shift = den.bits().max(num.bits()).saturating_sub(1000);
    let n = (num >> shift).to_f64().unwrap_or(f64::INFINITY);
    let d = (den >> shift).to_f64().unwrap_or(f64::INFINITY);
    n / d
}

/// Arithmetic used for a return probability.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumericMode {
    Rational,
    Float,
}

/// Largest number of steps `2k` computed in exact arithmetic.
pub const EXACT_STEPS: usize = 24;
/// Default cap on the support of `mu^{*k}` before the computation stops.
pub const DEFAULT_SUPPORT_CAP: usize = 2_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnBound {
    pub steps: usize,
    /// `p_{2k}(e) = mu^{*2k}(e)`.
    pub probability: f64,
    /// `W/|S|^{2k}` in lowest terms, in rational mode.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact: Option<String>,
    /// `p_{2k}(e)^{1/2k}`, a lower bound for `rho`.
    pub bound: f64,
    pub mode: NumericMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub lower_bounds: Vec<ReturnBound>,
    pub compression_norms: Vec<(usize, f64)>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub analytic: Option<Tagged>,
    /// Set when the support cap stopped the return-probability sequence early.
    pub truncated: bool,
}

impl SpectralEstimate {
    pub fn best_lower_bound(&self) -> Option<f64> {
        self.lower_bounds.iter().map(|b| b.bound).fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
    }
}

fn reduced_fraction(num: &BigUint, den: &BigUint) -> String {
    let g = num_integer::Integer::gcd(num, den);
    if g.is_zero() {
        return format!("0/{den}");
    }
    format!("{}/{}", num / &g, den / &g)
}

/// Lower bounds `p_{2k}(e)^{1/2k} <= rho(G,S)` for `k = 1..=k_max`, using
/// `p_{2k}(e) = sum_x mu^{*k}(x)^2` (valid since `S` is symmetric). Exact
/// while `2k <= 24`, floating point beyond.
pub fn return_probability_bounds(
    backend: &GroupBackend,
    s: &SymmetricSet,
    k_max: usize,
    support_cap: usize,
) -> Result<Vec<ReturnBound>> {
    Ok(return_probability_bounds_capped(backend, s, k_max, support_cap)?.0)
}

fn return_probability_bounds_capped(
    backend: &GroupBackend,
    s: &SymmetricSet,
    k_max: usize,
    support_cap: usize,
) -> Result<(Vec<ReturnBound>, bool)> {
    if k_max == 0 {
        return Err(Error::Parameter("k_max must be >= 1".into()));
    }
    let size = BigUint::from(s.len());
    let mut out = Vec::new();
    let mut counts: HashMap<Element, BigUint> = HashMap::from([(backend.identity(), BigUint::one())]);
    let mut probs: Option<HashMap<Element, f64>> = None;
    for k in 1..=k_max {
        let support = probs.as_ref().map_or(counts.len(), |p| p.len());
        if support.saturating_mul(s.len()) > support_cap {
            return Ok((out, true));
        }
        if 2 * k <= EXACT_STEPS {
            counts = walk_step(backend, s, &counts);
            let num: BigUint = counts.values().map(|c| c * c).sum();
            let den = size.pow(2 * k as u32);
            let p = big_ratio(&num, &den);
            out.push(ReturnBound {
                steps: 2 * k,
                probability: p,
                exact: Some(reduced_fraction(&num, &den)),
                bound: p.powf(1.0 / (2 * k) as f64),
                mode: NumericMode::Rational,
            });
        } else {
            let cur = probs.take().unwrap_or_else(|| {
                let den = size.pow((k - 1) as u32);
                let mut items: Vec<(&Element, &BigUint)> = counts.iter().collect();
                items.sort_by(|a, b| a.0.cmp(b.0));
                items.into_iter().map(|(x, c)| (x.clone(), big_ratio(c, &den))).collect()
            });
            let next = float_step(backend, s, &cur);
            let mut vals: Vec<(&Element, f64)> = next.iter().map(|(k, v)| (k, *v)).collect();
            vals.sort_by(|a, b| a.0.cmp(b.0));
            let p: f64 = vals.iter().map(|(_, v)| v * v).sum();
            out.push(ReturnBound {
                steps: 2 * k,
                probability: p,
                exact: None,
                bound: p.powf(1.0 / (2 * k) as f64),
                mode: NumericMode::Float,
            });
            probs = Some(next);
            counts.clear();
        }
    }
    Ok((out, false))
}

/// Exact check of `sum_x mu^{*n}(x) = 1` for `n = 1..=steps`: the walk counts
/// must sum to `|S|^n`. Returns the number of steps verified before the
/// support cap was reached, or an error naming the first failing step.
pub fn conservation_check(backend: &GroupBackend, s: &SymmetricSet, steps: usize, support_cap: usize) -> Result<usize> {
    let size = BigUint::from(s.len());
    let mut counts: HashMap<Element, BigUint> = HashMap::from([(backend.identity(), BigUint::one())]);
    for n in 1..=steps {
        if counts.len().saturating_mul(s.len()) > support_cap {
            return Ok(n - 1);
        }
        counts = walk_step(backend, s, &counts);
        let total: BigUint = counts.values().sum();
        if total != size.pow(n as u32) {
            return Err(Error::Hypothesis(format!("mass not conserved at step {n}")));
        }
    }
    Ok(steps)
}

/// Known values of `rho(G,S)`: `1` whenever `G` is amenable (finite groups,
/// abelian groups, the lamplighter; any `S`), and `sqrt(2m-1)/m` for the free
/// group of rank `m` with standard generators.
pub fn analytic_rho(backend: &GroupBackend, s: &SymmetricSet) -> Option<f64> {
    if backend.is_amenable() {
        return Some(1.0);
    }
    match backend {
        GroupBackend::Free { rank } if s.is_standard(backend) => {
            let m = *rank as f64;
            Some((2.0 * m - 1.0).sqrt() / m)
        }
        _ => None,
    }
}

/// Kesten's bound `rho >= sqrt(|S|-1)/|S|`.
pub fn kesten_bound(s_size: usize) -> f64 {
    ((s_size as f64) - 1.0).max(0.0).sqrt() / s_size as f64
}

pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 10_000;

/// Largest singular value of `xi -> (x -> sum_g f(g) xi(xg))` compressed to
/// `ball(radius)` in the metric of `metric`. Never exceeds `||f||_{2->2}`; the
/// returned value is `||Av||/||v||` for the final iterate, itself a lower
/// bound for the compressed norm.
pub fn operator_norm_lb(
    backend: &GroupBackend,
    metric: &SymmetricSet,
    f: &FiniteSupportFunction,
    radius: usize,
) -> Result<f64> {
    if !f.is_nonnegative() {
        return Err(Error::Domain("operator_norm_lb needs f >= 0".into()));
    }
    if f.support_size() == 0 {
        return Ok(0.0);
    }
    let (steps, weights): (Vec<Element>, Vec<f64>) = f.iter().map(|(x, v)| (x.clone(), v)).unzip();
    let pool = PoolGraph::new(backend, metric, radius, &steps);
    Ok(compressed_norm(&pool, &weights))
}

pub(crate) fn compressed_norm(pool: &PoolGraph, weights: &[f64]) -> f64 {
    let n = pool.len();
    let apply = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .into_par_iter()
            .map(|i| {
                pool.steps[i]
                    .iter()
                    .zip(weights)
                    .filter_map(|(j, w)| j.map(|j| w * v[j as usize]))
                    .sum()
            })
            .collect()
    };
    let apply_t = |u: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for i in 0..n {
            for (j, w) in pool.steps[i].iter().zip(weights) {
                if let Some(j) = j {
                    out[*j as usize] += w * u[i];
                }
            }
        }
        out
    };
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut sigma = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let av = apply(&v);
        let next_sigma = norm(&av);
        if next_sigma == 0.0 {
            return 0.0;
        }
        let w = apply_t(&av);
        let wn = norm(&w);
        let done = (next_sigma - sigma).abs() <= POWER_TOL * next_sigma;
        sigma = next_sigma;
        if done || wn == 0.0 {
            break;
        }
        v = w.into_iter().map(|x| x / wn).collect();
    }
    sigma
}

/// Compression norms at increasing radii.
pub fn compression_norms(
    backend: &GroupBackend,
    metric: &SymmetricSet,
    f: &FiniteSupportFunction,
    radii: &[usize],
) -> Result<Vec<(usize, f64)>> {
    radii.iter().map(|&r| Ok((r, operator_norm_lb(backend, metric, f, r)?))).collect()
}

/// Return-probability bounds, compression norms of `1_S` and the analytic
/// value when known.
pub fn spectral_estimate(
    backend: &GroupBackend,
    s: &SymmetricSet,
    k_max: usize,
    radii: &[usize],
    support_cap: usize,
) -> Result<SpectralEstimate> {
    let (lower_bounds, truncated) = return_probability_bounds_capped(backend, s, k_max, support_cap)?;
    let f = FiniteSupportFunction::indicator(s.elements()).scaled(1.0 / s.len() as f64);
    let compression_norms = compression_norms(backend, s, &f, radii)?;
    let analytic = analytic_rho(backend, s).map(|v| Tagged::float(v, Provenance::Analytic));
    Ok(SpectralEstimate { lower_bounds, compression_norms, analytic, truncated })
}

/// Both Cheeger inequalities `|S|(1-rho) <= h <= |S| sqrt(1-rho^2)` and the
/// equivalent forms `rho^2/2 <= e <= rho`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoharReport {
    pub s_size: usize,
    pub h: f64,
    pub rho: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_slack: f64,
    pub upper_slack: f64,
    pub e: f64,
    pub holds: bool,
}

pub const MOHAR_TOL: f64 = 1e-12;

/// Checks the Cheeger inequalities. Refuses unless both `h` and `rho` are
/// exact or analytic: with one-sided bounds the directions would not combine
/// soundly.
pub fn mohar_check(s_size: usize, h: &Tagged, rho: &Tagged) -> Result<MoharReport> {
    let solid = |t: &Tagged| matches!(t.provenance, Provenance::Exact | Provenance::Analytic);
    if !solid(h) || !solid(rho) {
        return Err(Error::Refused("Cheeger inequality check needs exact h and rho".into()));
    }
    let size = s_size as f64;
    let (hv, r) = (h.value, rho.value);
    let lower = size * (1.0 - r);
    let upper = size * (1.0 - r * r).max(0.0).sqrt();
    let e = 1.0 - hv / size;
    let tol = MOHAR_TOL * size.max(1.0);
    let holds = lower <= hv + tol && hv <= upper + tol && e <= r + MOHAR_TOL && e + MOHAR_TOL >= r * r / 2.0;
    Ok(MoharReport { s_size, h: hv, rho: r, lower, upper, lower_slack: hv - lower, upper_slack: upper - hv, e, holds })
}

/// [`mohar_check`] with the analytic `h` and `rho` of a solvable instance.
pub fn mohar_check_instance(backend: &GroupBackend, s: &SymmetricSet) -> Result<MoharReport> {
    let h = crate::cayley::analytic_cheeger(backend, s);
    let rho = analytic_rho(backend, s);
    match (h, rho) {
        (Some(h), Some(rho)) => mohar_check(
            s.len(),
            &Tagged::rational(h, Provenance::Analytic),
            &Tagged::float(rho, Provenance::Analytic),
        ),
        _ => Err(Error::Refused(format!("{} with this S is not a solvable instance", backend.label()))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    pub d: usize,
    pub support: usize,
    pub truncation: usize,
    /// Ratio for `a = 1_{ball(d)}`.
    pub ball_ratio: f64,
    /// Largest ratio over the ball indicator and the random trials.
    pub max_ratio: f64,
    /// `max_ratio <= sqrt(support)`.
    pub within_sanity_bound: bool,
}

/// For each `d <= d_max`, the largest observed `||a||_{2->2}/||a||_2` over
/// `1_{ball(d)}` and `trials` seeded random nonnegative `a` on `ball(d)`.
/// Operator norms are compression lower bounds at radius `2d+2`, or at the
/// saturating radius for finite groups.
pub fn rd_ratio_scan(
    backend: &GroupBackend,
    s: &SymmetricSet,
    d_max: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<RdPoint>> {
    if d_max == 0 {
        return Err(Error::Parameter("d_max must be >= 1".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for d in 1..=d_max {
        let b = ball(backend, s, d);
        let truncation = if backend.is_finite() {
            ball(backend, s, usize::MAX).radius()
        } else {
            2 * d + 2
        };
        let ratio = |f: &FiniteSupportFunction| -> Result<f64> {
            let l2 = f.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            Ok(operator_norm_lb(backend, s, f, truncation)? / l2)
        };
        let ind = FiniteSupportFunction::indicator(b.elements());
        let ball_ratio = ratio(&ind)?;
        let mut max_ratio = ball_ratio;
        for _ in 0..trials {
            let f = FiniteSupportFunction::from_pairs(
                b.elements().iter().map(|x| (x.clone(), rng.gen_range(0.0..1.0) + f64::MIN_POSITIVE)),
            );
            max_ratio = max_ratio.max(ratio(&f)?);
        }
        let support = b.len();
        out.push(RdPoint {
            d,
            support,
            truncation,
            ball_ratio,
            max_ratio,
            within_sanity_bound: max_ratio <= (support as f64).sqrt() * (1.0 + 1e-12),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{build_symmetric_set, SetDescriptor};
    use approx::assert_abs_diff_eq;

    fn std_set(g: &GroupBackend) -> SymmetricSet {
        SymmetricSet::standard(g).unwrap()
    }

    #[test]
    fn convolution_basics() {
        let z = GroupBackend::free_abelian(1);
        let s = std_set(&z);
        let f = FiniteSupportFunction::indicator(s.elements());
        assert_eq!(convolve(&z, &FiniteSupportFunction::delta(z.identity()), &f), f);
        let ff = convolve(&z, &f, &f);
        assert_eq!(ff.support_size(), 3);
        assert_eq!(ff.get(&z.evaluate_str("a^2").unwrap()), 1.0);
        assert_eq!(ff.get(&z.identity()), 2.0);
        assert_eq!(ff.get(&z.evaluate_str("a^-2").unwrap()), 1.0);

        let f2 = GroupBackend::free(2);
        let m = FiniteSupportFunction::indicator(std_set(&f2).elements()).scaled(0.25);
        assert_eq!(convolve(&f2, &m, &m).get(&f2.identity()), 0.25);
    }

    #[test]
    fn tree_return_probabilities() {
        // Closed walks on the 4-regular tree: W_2 = 4, W_4 = 28, W_6 = 232.
        let g = GroupBackend::free(2);
        let b = return_probability_bounds(&g, &std_set(&g), 3, DEFAULT_SUPPORT_CAP).unwrap();
        assert_eq!(b[0].exact.as_deref(), Some("1/4"));
        assert_eq!(b[1].exact.as_deref(), Some("7/64"));
        assert_eq!(b[2].exact.as_deref(), Some("29/512"));
        assert_abs_diff_eq!(b[0].bound, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b[1].bound, (28.0f64 / 256.0).powf(0.25), epsilon = 1e-15);
    }

    #[test]
    fn integer_line_bounds() {
        let z = GroupBackend::free_abelian(1);
        let b = return_probability_bounds(&z, &std_set(&z), 14, DEFAULT_SUPPORT_CAP).unwrap();
        assert_abs_diff_eq!(b[0].bound, 0.5f64.sqrt(), epsilon = 1e-15);
        // p_{2k} = C(2k,k)/4^k
        assert_eq!(b[2].exact.as_deref(), Some("5/16"));
        assert_eq!(b[11].mode, NumericMode::Rational);
        assert_eq!(b[12].mode, NumericMode::Float);
        for w in b.windows(2) {
            assert!(w[1].bound >= w[0].bound * (1.0 - 1e-12));
        }
        // C(28,14)/4^14 in floating mode
        assert_abs_diff_eq!(b[13].probability, 40116600.0 / 4f64.powi(14), epsilon = 1e-15);
    }

    #[test]
    fn finite_cycle_bounds_increase_to_one() {
        let g = GroupBackend::cyclic(6);
        let b = return_probability_bounds(&g, &std_set(&g), 30, DEFAULT_SUPPORT_CAP).unwrap();
        for w in b.windows(2) {
            assert!(w[1].bound >= w[0].bound * (1.0 - 1e-12));
        }
        assert!(b.last().unwrap().bound > 0.95 && b.last().unwrap().bound <= 1.0);
    }

    #[test]
    fn conservation() {
        let g = GroupBackend::free_product_cyclic(vec![2, 3]);
        assert_eq!(conservation_check(&g, &std_set(&g), 24, DEFAULT_SUPPORT_CAP).unwrap(), 24);
        let z2 = GroupBackend::free_abelian(2);
        assert_eq!(conservation_check(&z2, &std_set(&z2), 24, DEFAULT_SUPPORT_CAP).unwrap(), 24);
    }

    #[test]
    fn analytic_cases() {
        let f2 = GroupBackend::free(2);
        assert_abs_diff_eq!(analytic_rho(&f2, &std_set(&f2)).unwrap(), 3f64.sqrt() / 2.0, epsilon = 1e-15);
        let s2 = build_symmetric_set(&f2, &SetDescriptor::BallMinusIdentity { radius: 2, generators: None }).unwrap();
        assert_eq!(analytic_rho(&f2, &s2), None);
        let z6 = GroupBackend::cyclic(6);
        let s = build_symmetric_set(&z6, &SetDescriptor::Explicit { words: vec!["a^3".into()] }).unwrap();
        assert_eq!(analytic_rho(&z6, &s), Some(1.0));
        for m in 2..6 {
            let g = GroupBackend::free(m);
            let s = std_set(&g);
            assert!(analytic_rho(&g, &s).unwrap() >= kesten_bound(s.len()) - 1e-15);
        }
    }

    #[test]
    fn return_bounds_below_analytic() {
        let g = GroupBackend::free(2);
        let s = std_set(&g);
        let rho = analytic_rho(&g, &s).unwrap();
        for b in return_probability_bounds(&g, &s, 8, DEFAULT_SUPPORT_CAP).unwrap() {
            assert!(b.bound <= rho + 1e-10);
        }
    }

    #[test]
    fn compression_norms_on_small_cases() {
        let z6 = GroupBackend::cyclic(6);
        let s = std_set(&z6);
        let f = FiniteSupportFunction::indicator(s.elements());
        assert_abs_diff_eq!(operator_norm_lb(&z6, &s, &f, 3).unwrap(), 2.0, epsilon = 1e-9);
        let d = FiniteSupportFunction::delta(z6.identity());
        assert_abs_diff_eq!(operator_norm_lb(&z6, &s, &d, 2).unwrap(), 1.0, epsilon = 1e-12);

        // The compression of the 4-regular tree adjacency to ball(6).
        let f2 = GroupBackend::free(2);
        let s = std_set(&f2);
        let f = FiniteSupportFunction::indicator(s.elements());
        let norms = compression_norms(&f2, &s, &f, &[2, 4, 6]).unwrap();
        assert_abs_diff_eq!(norms[0].1, 2.6458, epsilon = 1e-4);
        assert_abs_diff_eq!(norms[1].1, 3.0889, epsilon = 1e-4);
        assert!(norms[2].1 > 3.2 && norms[2].1 <= 2.0 * 3f64.sqrt());
        assert!(norms.windows(2).all(|w| w[1].1 >= w[0].1));
    }

    #[test]
    fn cheeger_inequalities() {
        let f2 = GroupBackend::free(2);
        let r = mohar_check_instance(&f2, &std_set(&f2)).unwrap();
        assert!(r.holds);
        assert_abs_diff_eq!(r.upper_slack, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.lower, 4.0 - 2.0 * 3f64.sqrt(), epsilon = 1e-12);
        let z6 = GroupBackend::cyclic(6);
        let r = mohar_check_instance(&z6, &std_set(&z6)).unwrap();
        assert_eq!((r.lower, r.h, r.upper), (0.0, 0.0, 0.0));
        let s2 = build_symmetric_set(&f2, &SetDescriptor::BallMinusIdentity { radius: 2, generators: None }).unwrap();
        assert!(matches!(mohar_check_instance(&f2, &s2), Err(Error::Refused(_))));
        let bound = Tagged::float(0.9, Provenance::LowerBound);
        assert!(mohar_check(4, &Tagged::float(2.0, Provenance::Exact), &bound).is_err());
    }

    #[test]
    fn rd_scan_on_integers() {
        let z = GroupBackend::free_abelian(1);
        let s = std_set(&z);
        let pts = rd_ratio_scan(&z, &s, 3, 5, 7).unwrap();
        for p in &pts {
            assert!(p.within_sanity_bound);
            assert!(p.ball_ratio <= ((2 * p.d + 1) as f64).sqrt() + 1e-12);
        }
        // A wide truncation approaches the limit sqrt(2d+1).
        let f = FiniteSupportFunction::indicator(ball(&z, &s, 2).elements());
        let n = operator_norm_lb(&z, &s, &f, 400).unwrap();
        assert!((n / 5f64.sqrt() - 5f64.sqrt()).abs() < 0.01);
    }

    #[test]
    fn rd_ball_one_on_tree() {
        let g = GroupBackend::free(2);
        let s = std_set(&g);
        let f = FiniteSupportFunction::indicator(ball(&g, &s, 1).elements());
        let r = operator_norm_lb(&g, &s, &f, 8).unwrap() / 5f64.sqrt();
        let limit = (1.0 + 2.0 * 3f64.sqrt()) / 5f64.sqrt();
        assert!(r <= limit && r > 1.9);
    }
}
