//! Per-set exponent terms `-ln e/ln|S|` and `-ln rho/ln|S|`, size-wise
//! summaries, the conversion `Lit = 1/(1 - eta)` and the threshold
//! classification.
//!
//! A per-set value is called a *term*; the exponents themselves are limits
//! over all finite symmetric sets and are never claimed. Directions follow
//! the bounds they come from: a lower bound on `e` gives an upper bound on
//! the `eta`-term, a lower bound on `rho` an upper bound on the `r`-term.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cayley::{analytic_cheeger, cheeger_upper, degree_bounds, e_and_mad, SearchConfig};
use crate::error::{Error, Result};
use crate::groups::{build_symmetric_set, GroupBackend, SetDescriptor, SymmetricSet};
use crate::provenance::{to_f64, Provenance, Tagged};
use crate::spectral::{analytic_rho, kesten_bound, return_probability_bounds, DEFAULT_SUPPORT_CAP};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentConfig {
    /// Pool radius for the Cheeger search (finite groups use the whole group).
    pub pool_radius: usize,
    #[serde(default)]
    pub max_subset: Option<usize>,
    /// Steps `k` of the return-probability bounds for `rho`.
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_cap")]
    pub support_cap: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_k_max() -> usize {
    6
}

fn default_cap() -> usize {
    DEFAULT_SUPPORT_CAP
}

impl ExponentConfig {
    pub fn new(pool_radius: usize) -> Self {
        ExponentConfig { pool_radius, max_subset: None, k_max: default_k_max(), support_cap: default_cap(), seed: 0 }
    }
}

/// Terms for one symmetric set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetTerms {
    pub s_size: usize,
    /// `e` from the subset search (a lower bound unless `h = 0` was found).
    pub e_searched: Tagged,
    /// Best available `e`: analytic when known, else the searched value.
    pub e: Tagged,
    pub rho: Option<Tagged>,
    pub eta_term_searched: Tagged,
    pub eta_term: Tagged,
    pub r_term: Option<Tagged>,
    /// `r <= eta <= 2r + ln2/ln|S|`, evaluated only when `e` and `rho` are
    /// both exact or analytic.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sandwich: Option<bool>,
    /// `r`-term at most `(ln|S| - ln(|S|-1)/2)/ln|S|`, for exact `rho`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kesten: Option<bool>,
}

/// Running supremum of the terms over sets of size at least `size`; the
/// `eta`-exponent is the limit of this curve over all sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub size: usize,
    pub eta_sup: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub r_sup: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub group: String,
    pub sets: Vec<SetTerms>,
    pub eta_min: f64,
    pub eta_max: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub r_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub r_max: Option<f64>,
    pub curve: Vec<CurvePoint>,
    /// Last point of the curve.
    pub eta_hat: Tagged,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub r_hat: Option<f64>,
    /// `1/(1 - eta_hat)`; `None` when infinite.
    pub lit_hat: Option<f64>,
}

const TERM_TOL: f64 = 1e-12;

fn term(value: f64, s_size: usize) -> f64 {
    let t = -value.ln() / (s_size as f64).ln();
    if t == 0.0 {
        0.0
    } else {
        t
    }
}

fn term_tag(x: &Tagged, s_size: usize) -> Tagged {
    Tagged::float(term(x.value, s_size), x.provenance.reversed())
}

fn solid(t: &Tagged) -> bool {
    matches!(t.provenance, Provenance::Exact | Provenance::Analytic)
}

/// Terms of a single set.
pub fn set_terms(backend: &GroupBackend, s: &SymmetricSet, cfg: &ExponentConfig) -> Result<SetTerms> {
    let n = s.len();
    if n < 2 {
        return Err(Error::Input("exponent terms need |S| >= 2".into()));
    }
    let radius = if backend.is_finite() { usize::MAX } else { cfg.pool_radius };
    let mut search = SearchConfig::new(radius).with_seed(cfg.seed);
    search.max_subset = cfg.max_subset;
    let cheeger = cheeger_upper(backend, s, &search)?;
    let searched = e_and_mad(&cheeger);
    let e_searched = Tagged::rational(searched.e, searched.provenance);
    let e = match analytic_cheeger(backend, s) {
        Some(h) if searched.provenance != Provenance::Exact => {
            let d = degree_bounds(h, n, Provenance::Analytic);
            Tagged::rational(d.e, Provenance::Analytic)
        }
        _ => e_searched.clone(),
    };
    let rho = match analytic_rho(backend, s) {
        Some(r) => Some(Tagged::float(r, Provenance::Analytic)),
        None => return_probability_bounds(backend, s, cfg.k_max, cfg.support_cap)?
            .iter()
            .map(|b| b.bound)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
            .map(|v| Tagged::float(v, Provenance::LowerBound)),
    };
    let eta_term = term_tag(&e, n);
    let r_term = rho.as_ref().map(|r| term_tag(r, n));
    let ln_s = (n as f64).ln();
    let (sandwich, kesten) = match (&rho, &r_term) {
        (Some(rho), Some(rt)) if solid(rho) => {
            let sandwich = solid(&e).then(|| {
                rt.value <= eta_term.value + TERM_TOL
                    && eta_term.value <= 2.0 * rt.value + 2f64.ln() / ln_s + TERM_TOL
            });
            let cap = (ln_s - 0.5 * ((n - 1) as f64).ln()) / ln_s;
            (sandwich, Some(rt.value <= cap + TERM_TOL && rho.value >= kesten_bound(n) - TERM_TOL))
        }
        _ => (None, None),
    };
    Ok(SetTerms {
        s_size: n,
        eta_term_searched: term_tag(&e_searched, n),
        e_searched,
        e,
        rho,
        eta_term,
        r_term,
        sandwich,
        kesten,
    })
}

/// Terms for every set of a family, plus size-wise summaries.
pub fn exponent_terms(backend: &GroupBackend, family: &[SetDescriptor], cfg: &ExponentConfig) -> Result<ExponentReport> {
    let sets: Vec<SymmetricSet> = family.iter().map(|d| build_symmetric_set(backend, d)).collect::<Result<_>>()?;
    let mut sizes: Vec<usize> = sets.iter().map(|s| s.len()).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(Error::Input("family must contain sets of at least two distinct sizes".into()));
    }
    let terms: Vec<SetTerms> = sets.par_iter().map(|s| set_terms(backend, s, cfg)).collect::<Result<_>>()?;
    Ok(summarize(backend.label(), terms))
}

fn summarize(group: String, sets: Vec<SetTerms>) -> ExponentReport {
    let etas: Vec<f64> = sets.iter().map(|t| t.eta_term.value).collect();
    let rs: Option<Vec<f64>> = sets.iter().map(|t| t.r_term.as_ref().map(|r| r.value)).collect();
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sizes: Vec<usize> = sets.iter().map(|t| t.s_size).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let curve: Vec<CurvePoint> = sizes
        .iter()
        .map(|&n| {
            let tail: Vec<&SetTerms> = sets.iter().filter(|t| t.s_size >= n).collect();
            let eta_sup = tail.iter().map(|t| t.eta_term.value).fold(f64::NEG_INFINITY, f64::max);
            let r_sup = tail
                .iter()
                .map(|t| t.r_term.as_ref().map(|r| r.value))
                .collect::<Option<Vec<f64>>>()
                .map(|v| max(&v));
            CurvePoint { size: n, eta_sup, r_sup }
        })
        .collect();
    let last = curve.last().expect("nonempty family");
    // Over exact terms the family supremum can only undershoot the supremum
    // over all sets; with one-sided terms the directions conflict.
    let provenance = if sets.iter().all(|t| solid(&t.eta_term)) { Provenance::LowerBound } else { Provenance::Estimate };
    let eta_hat = Tagged::float(last.eta_sup, provenance);
    ExponentReport {
        group,
        eta_min: min(&etas),
        eta_max: max(&etas),
        r_min: rs.as_ref().map(|v| min(v)),
        r_max: rs.as_ref().map(|v| max(v)),
        r_hat: last.r_sup,
        lit_hat: lit_from_eta(last.eta_sup.clamp(0.0, 1.0)).ok().flatten(),
        eta_hat,
        curve,
        sets,
    }
}

/// `Lit = 1/(1 - eta)` on `[0, 1)`, with `eta = 1` giving `None` (infinite).
pub fn lit_from_eta(eta: f64) -> Result<Option<f64>> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain(format!("eta must lie in [0, 1], got {eta}")));
    }
    Ok(if eta == 1.0 { None } else { Some(1.0 / (1.0 - eta)) })
}

/// Inverse of [`lit_from_eta`].
pub fn eta_from_lit(lit: Option<f64>) -> Result<f64> {
    match lit {
        None => Ok(1.0),
        Some(l) if l >= 1.0 => Ok(1.0 - 1.0 / l),
        Some(l) => Err(Error::Domain(format!("Lit of an infinite group is at least 1, got {l}"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Zero,
    One,
    BetweenOneAndTwo,
    Two,
    AboveTwo,
    Infinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimKind {
    Iff,
    Sufficient,
    Necessary,
    Consistency,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub kind: ClaimKind,
    pub text: String,
    /// Whether the estimate agrees with the claim (absent when it does not apply).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub consistent: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub eta_hat: f64,
    pub lit_hat: Option<f64>,
    pub band: Band,
    pub claims: Vec<Claim>,
}

const BAND_TOL: f64 = 1e-9;

/// Places the `Lit` estimate against the thresholds `0, 1, 2, inf`, using
/// the structural facts of the backend where they decide the answer.
pub fn classify(report: &ExponentReport, backend: &GroupBackend) -> Classification {
    let eta = report.eta_hat.value.clamp(0.0, 1.0);
    let lit = lit_from_eta(eta).ok().flatten();
    classify_eta(eta, report.r_hat, backend.is_finite(), backend.is_amenable(), backend.contains_free_subgroup(), lit)
}

pub fn classify_eta(
    eta: f64,
    r: Option<f64>,
    finite: bool,
    amenable: bool,
    free_subgroup: bool,
    lit: Option<f64>,
) -> Classification {
    let band = if finite {
        Band::Zero
    } else {
        match lit {
            None => Band::Infinite,
            Some(l) if (l - 1.0).abs() <= BAND_TOL => Band::One,
            Some(l) if l < 2.0 - BAND_TOL => Band::BetweenOneAndTwo,
            Some(l) if (l - 2.0).abs() <= BAND_TOL => Band::Two,
            Some(_) => Band::AboveTwo,
        }
    };
    let mut claims = vec![
        Claim { kind: ClaimKind::Iff, text: "Lit = 0 iff the group is finite".into(), consistent: finite.then_some(true) },
        Claim {
            kind: ClaimKind::Iff,
            text: "Lit = 1 iff the group is infinite amenable".into(),
            consistent: (!finite && amenable).then_some(band == Band::One),
        },
        Claim {
            kind: ClaimKind::Necessary,
            text: "Lit <= 2 is necessary for unitarisability".into(),
            consistent: (!finite).then_some(matches!(band, Band::One | Band::BetweenOneAndTwo | Band::Two)),
        },
        Claim {
            kind: ClaimKind::Sufficient,
            text: "a non-abelian free subgroup forces Lit = inf".into(),
            consistent: free_subgroup.then_some(band == Band::Infinite),
        },
    ];
    if band == Band::Two {
        claims.push(Claim { kind: ClaimKind::Necessary, text: "estimate sits at the unitarisability threshold".into(), consistent: None });
    }
    if let (Some(r), false) = (r, finite) {
        let ok = r >= -BAND_TOL && r <= eta + BAND_TOL && eta <= 2.0 * r + BAND_TOL && 2.0 * r <= 1.0 + BAND_TOL;
        claims.push(Claim { kind: ClaimKind::Consistency, text: "0 <= r <= eta <= 2r <= 1".into(), consistent: Some(ok) });
    }
    Classification { eta_hat: eta, lit_hat: lit, band, claims }
}

/// `e` as a float, for reporting.
pub fn e_value(t: &SetTerms) -> f64 {
    t.e.exact.as_deref().and_then(|s| s.parse::<crate::provenance::Rational>().ok()).map_or(t.e.value, to_f64)
}
