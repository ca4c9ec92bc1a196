//! Kernel counts for quotients of free groups, cogrowth estimation,
//! Grigorchuk's spectral-radius formula and the Burnside bounds.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{Element, GroupBackend};
use crate::provenance::Rational;
use crate::spectral::big_ratio;

/// Exact numbers `c_k` of freely reduced words of length `k` in `F_m` that map
/// to the identity, for `k = 1..=k_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct CogrowthCounts {
    pub m: usize,
    pub target: String,
    pub images: Vec<String>,
    /// `counts[k-1] = c_k`.
    pub counts: Vec<BigUint>,
    /// Sum over all elements of the length-`k` counts; must equal
    /// `2m (2m-1)^{k-1}`.
    pub totals: Vec<BigUint>,
    /// Set when the counts are zero because the map is injective.
    pub injective: bool,
}

impl CogrowthCounts {
    pub fn conserved(&self) -> bool {
        self.totals
            .iter()
            .enumerate()
            .all(|(i, t)| *t == reduced_word_total(self.m, i + 1))
    }

    pub fn c(&self, k: usize) -> &BigUint {
        &self.counts[k - 1]
    }

    /// `(k, c_k)` rows for CSV export.
    pub fn rows(&self) -> Vec<(usize, String)> {
        self.counts.iter().enumerate().map(|(i, c)| (i + 1, c.to_string())).collect()
    }
}

/// `2m (2m-1)^{k-1}`, the number of reduced words of length `k >= 1`.
pub fn reduced_word_total(m: usize, k: usize) -> BigUint {
    BigUint::from(2 * m) * BigUint::from(2 * m - 1).pow(k as u32 - 1)
}

/// Formal letter `2i` is generator `i`, `2i+1` its inverse.
fn inverse_letter(l: usize) -> usize {
    l ^ 1
}

/// Counts kernel words of `F_m -> target`, generator `i` mapping to
/// `images[i]`. Words are reduced in `F_m` regardless of coincidences among
/// the images. The states are pairs (image, last letter) inside the finite
/// subgroup generated by the images.
pub fn reduced_word_counts(target: &GroupBackend, images: &[Element], k_max: usize) -> Result<CogrowthCounts> {
    let m = images.len();
    if m == 0 {
        return Err(Error::Parameter("free rank must be >= 1".into()));
    }
    if k_max == 0 {
        return Err(Error::Parameter("k_max must be >= 1".into()));
    }
    let names: Vec<String> = images.iter().map(|x| x.to_string()).collect();
    if let GroupBackend::Free { .. } = target {
        if injective_on_free(target, images) {
            return Ok(CogrowthCounts {
                m,
                target: target.label(),
                images: names,
                counts: vec![BigUint::zero(); k_max],
                totals: (1..=k_max).map(|k| reduced_word_total(m, k)).collect(),
                injective: true,
            });
        }
    }
    if !target.is_finite() {
        return Err(Error::Unsupported(format!(
            "kernel counts need a finite target, got {}",
            target.label()
        )));
    }
    let letters: Vec<Element> = images.iter().flat_map(|g| [g.clone(), target.inverse(g)]).collect();

    // The subgroup generated by the images, with right multiplication tables.
    let mut elems = vec![target.identity()];
    let mut index: HashMap<Element, usize> = HashMap::from([(target.identity(), 0)]);
    let mut i = 0;
    while i < elems.len() {
        for g in &letters {
            let y = target.multiply(&elems[i], g);
            if !index.contains_key(&y) {
                index.insert(y.clone(), elems.len());
                elems.push(y);
            }
        }
        i += 1;
    }
    let n = elems.len();
    let l = letters.len();
    // back[g][l]: index of g * pi(l)^-1
    let back: Vec<Vec<usize>> = elems
        .iter()
        .map(|x| letters.iter().map(|g| index[&target.multiply(x, &target.inverse(g))]).collect())
        .collect();

    let mut w = vec![vec![BigUint::zero(); l]; n];
    for (li, g) in letters.iter().enumerate() {
        w[index[g]][li] += 1u32;
    }
    let mut counts = Vec::with_capacity(k_max);
    let mut totals = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        if k > 1 {
            let t: Vec<BigUint> = w.iter().map(|row| row.iter().sum()).collect();
            w = (0..n)
                .into_par_iter()
                .map(|g| {
                    (0..l)
                        .map(|li| {
                            let h = back[g][li];
                            &t[h] - &w[h][inverse_letter(li)]
                        })
                        .collect()
                })
                .collect();
        }
        counts.push(w[0].iter().sum());
        totals.push(w.iter().flatten().sum());
    }
    Ok(CogrowthCounts { m, target: target.label(), images: names, counts, totals, injective: false })
}

/// Images that are distinct basis letters (up to inversion) of a free target.
fn injective_on_free(target: &GroupBackend, images: &[Element]) -> bool {
    let mut seen = std::collections::HashSet::new();
    images.iter().all(|x| match target.free_length(x) {
        Some(1) => match x {
            Element::Reduced(w) => seen.insert(w[0].unsigned_abs()),
            _ => false,
        },
        _ => false,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CogrowthEstimate {
    pub m: usize,
    /// `max_k c_k^{1/k}` over the computed range.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub root_estimate: Option<f64>,
    /// `(k, sqrt(c_{k+2}/c_k))` wherever both counts are positive.
    pub ratios: Vec<(usize, f64)>,
    /// Last ratio.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub point_estimate: Option<f64>,
    /// Point estimate clamped into `[sqrt(2m-1), 2m-1]`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<f64>,
    /// The point estimate fell outside the admissible range and was clamped.
    pub clamped: bool,
    /// All counts vanish: no kernel word up to `k_max`.
    pub trivial_kernel: bool,
}

pub fn cogrowth_estimate(counts: &CogrowthCounts) -> CogrowthEstimate {
    let m = counts.m;
    let c = &counts.counts;
    if c.iter().all(|x| x.is_zero()) {
        return CogrowthEstimate {
            m,
            root_estimate: None,
            ratios: Vec::new(),
            point_estimate: None,
            alpha: None,
            clamped: false,
            trivial_kernel: true,
        };
    }
    let root_estimate = c
        .iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(i, x)| (log2_big(x) / (i + 1) as f64).exp2())
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    let ratios: Vec<(usize, f64)> = (0..c.len().saturating_sub(2))
        .filter(|&i| !c[i].is_zero() && !c[i + 2].is_zero())
        .map(|i| (i + 1, big_ratio(&c[i + 2], &c[i]).sqrt()))
        .collect();
    let point_estimate = ratios.last().map(|r| r.1);
    let lo = ((2 * m - 1) as f64).sqrt();
    let hi = (2 * m - 1) as f64;
    let alpha = point_estimate.map(|a| a.clamp(lo, hi));
    CogrowthEstimate {
        m,
        root_estimate,
        ratios,
        point_estimate,
        alpha,
        clamped: point_estimate.is_some() && point_estimate != alpha,
        trivial_kernel: false,
    }
}

fn log2_big(x: &BigUint) -> f64 {
    let shift = x.bits().saturating_sub(53);
    (x >> shift).to_f64().unwrap_or(0.0).log2() + shift as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrigorchukValue {
    pub rho: f64,
    /// `min(alpha/m, 1)`.
    pub weak_bound: f64,
    /// `alpha` sits at an end of `[sqrt(2m-1), 2m-1]`.
    pub boundary: bool,
}

const RANGE_TOL: f64 = 1e-12;

/// `rho = sqrt(2m-1)/(2m) (sqrt(2m-1)/alpha + alpha/sqrt(2m-1))` for `alpha`
/// in the closed range `[sqrt(2m-1), 2m-1]`.
pub fn grigorchuk_rho(alpha: f64, m: usize) -> Result<GrigorchukValue> {
    if m < 2 {
        return Err(Error::Parameter(format!("Grigorchuk's formula needs m >= 2, got {m}")));
    }
    let q = ((2 * m - 1) as f64).sqrt();
    let hi = (2 * m - 1) as f64;
    if !(alpha >= q * (1.0 - RANGE_TOL) && alpha <= hi * (1.0 + RANGE_TOL)) {
        return Err(Error::Domain(format!("cogrowth {alpha} outside [{q}, {hi}]")));
    }
    let rho = q / (2 * m) as f64 * (q / alpha + alpha / q);
    let boundary = (alpha - q).abs() <= RANGE_TOL * q || (alpha - hi).abs() <= RANGE_TOL * hi;
    Ok(GrigorchukValue { rho, weak_bound: (alpha / m as f64).min(1.0), boundary })
}

pub const DEFAULT_DELTA: f64 = 2.0 / 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BurnsideBounds {
    pub m: usize,
    pub a: u64,
    pub delta: f64,
    /// `(2m-1)^delta`.
    pub alpha_ub: f64,
    /// `min(alpha_ub/m, 1)`.
    pub rho_ub: f64,
    /// Grigorchuk's formula at `alpha_ub` (needs `delta >= 1/2`).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rho_formula: Option<f64>,
    /// `(2m-1)^{-1/3}`, the large-`m` bound.
    pub rho_asymptotic: f64,
    pub r_lb: Rational,
    pub lit_lb: Rational,
}

/// Evaluates the Burnside-group bounds; the groups themselves are not built.
pub fn burnside_bounds(m: usize, a: u64, delta: Option<f64>) -> Result<BurnsideBounds> {
    if m < 2 {
        return Err(Error::Hypothesis(format!("need m >= 2, got {m}")));
    }
    if a < 665 || a % 2 == 0 {
        return Err(Error::Hypothesis(format!("need odd exponent a >= 665, got {a}")));
    }
    let delta = delta.unwrap_or(DEFAULT_DELTA);
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Parameter(format!("delta must lie in (0, 1], got {delta}")));
    }
    let base = (2 * m - 1) as f64;
    let alpha_ub = base.powf(delta);
    Ok(BurnsideBounds {
        m,
        a,
        delta,
        alpha_ub,
        rho_ub: (alpha_ub / m as f64).min(1.0),
        rho_formula: grigorchuk_rho(alpha_ub, m).ok().map(|g| g.rho),
        rho_asymptotic: base.powf(-1.0 / 3.0),
        r_lb: Rational::new(1, 3),
        lit_lb: Rational::new(3, 2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::Homomorphism;
    use approx::assert_abs_diff_eq;

    fn z5_counts(k: usize) -> CogrowthCounts {
        let z5 = GroupBackend::cyclic(5);
        let imgs = vec![z5.evaluate_str("a").unwrap(), z5.evaluate_str("a^2").unwrap()];
        reduced_word_counts(&z5, &imgs, k).unwrap()
    }

    /// Direct enumeration of reduced words.
    fn brute_force(k: usize) -> Vec<u64> {
        let h = Homomorphism::from_words(GroupBackend::free(2), GroupBackend::cyclic(5), &["a", "a^2"]).unwrap();
        let mut words: Vec<Vec<i32>> = vec![vec![]];
        let mut out = Vec::new();
        for _ in 0..k {
            let mut next = Vec::new();
            for w in &words {
                for l in [1, -1, 2, -2] {
                    if w.last() != Some(&-l) {
                        let mut v = w.clone();
                        v.push(l);
                        next.push(v);
                    }
                }
            }
            words = next;
            out.push(words.iter().filter(|w| h.apply(&Element::Reduced((*w).clone())) == Element::Residue(0)).count() as u64);
        }
        out
    }

    #[test]
    fn trivial_target() {
        let t = GroupBackend::cyclic(1);
        let c = reduced_word_counts(&t, &[t.identity(), t.identity()], 8).unwrap();
        for k in 1..=8 {
            assert_eq!(*c.c(k), reduced_word_total(2, k));
        }
        let e = cogrowth_estimate(&c);
        assert!(e.ratios.iter().all(|(_, r)| (r - 3.0).abs() < 1e-12));
    }

    #[test]
    fn z5_matches_enumeration() {
        let c = z5_counts(9);
        let direct = brute_force(9);
        for k in 1..=9 {
            assert_eq!(c.c(k).to_u64().unwrap(), direct[k - 1]);
        }
        assert_eq!(&direct[..5], &[0, 0, 12, 24, 48]);
        assert!(c.conserved());
    }

    #[test]
    fn z5_estimate() {
        let c = z5_counts(30);
        assert!(c.conserved());
        let e = cogrowth_estimate(&c);
        let a = e.point_estimate.unwrap();
        assert!((a - 3.0).abs() < 0.1);
        let rho = grigorchuk_rho(e.alpha.unwrap(), 2).unwrap().rho;
        assert!((rho - 1.0).abs() < 0.02);
    }

    #[test]
    fn free_target_is_injective() {
        let f2 = GroupBackend::free(2);
        let c = reduced_word_counts(&f2, &[f2.generator(0), f2.generator(1)], 20).unwrap();
        assert!(c.injective);
        assert!(cogrowth_estimate(&c).trivial_kernel);
        let bad = reduced_word_counts(&GroupBackend::free_abelian(2), &[f2.generator(0)], 3);
        assert!(matches!(bad, Err(Error::Unsupported(_))));
    }

    #[test]
    fn grigorchuk_values() {
        assert_abs_diff_eq!(grigorchuk_rho(3.0, 2).unwrap().rho, 1.0, epsilon = 1e-15);
        let r = grigorchuk_rho(3f64.sqrt(), 2).unwrap();
        assert_abs_diff_eq!(r.rho, 3f64.sqrt() / 2.0, epsilon = 1e-12);
        assert!(r.boundary);
        let g = grigorchuk_rho(3f64.powf(2.0 / 3.0), 2).unwrap();
        assert_abs_diff_eq!(g.rho, 0.8806, epsilon = 1e-4);
        assert_eq!(g.weak_bound, 1.0);
        assert!(grigorchuk_rho(1.5, 2).is_err());
        assert!(grigorchuk_rho(3.1, 2).is_err());
        for m in 2..10 {
            let q = ((2 * m - 1) as f64).sqrt();
            assert_abs_diff_eq!(grigorchuk_rho(q, m).unwrap().rho, q / m as f64, epsilon = 1e-14);
            for t in 0..=10 {
                let alpha = q + (2.0 * m as f64 - 1.0 - q) * t as f64 / 10.0;
                let g = grigorchuk_rho(alpha, m).unwrap();
                assert!(g.rho >= crate::spectral::kesten_bound(2 * m) - 1e-15);
                assert!(g.rho <= alpha / m as f64 + 1e-15);
            }
        }
    }

    #[test]
    fn burnside() {
        let b = burnside_bounds(2, 665, None).unwrap();
        assert_eq!(b.r_lb, Rational::new(1, 3));
        assert_eq!(b.lit_lb, Rational::new(3, 2));
        assert_abs_diff_eq!(b.alpha_ub, 2.0801, epsilon = 1e-4);
        assert_eq!(b.rho_ub, 1.0);
        assert!(matches!(burnside_bounds(2, 664, None), Err(Error::Hypothesis(_))));
        assert!(burnside_bounds(2, 663, None).is_err());
        assert!(burnside_bounds(1, 665, None).is_err());
    }
}
