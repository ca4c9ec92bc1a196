//! Job configs, task orchestration, JSON/CSV reports and the self-check
//! battery behind the `cayley-iso` binary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cayley::{analytic_cheeger, cheeger_upper, degree_bounds, e_and_mad, nested_ball_stats, subset_stats, SearchConfig};
use crate::cogrowth::{burnside_bounds, cogrowth_estimate, grigorchuk_rho, reduced_word_counts};
use crate::colouring::colourcor_experiment;
use crate::error::{Error, Result};
use crate::exponents::{classify, exponent_terms, set_terms, ExponentConfig};
use crate::forests::{cayley_forest_marginals, cayley_graph, forest_inequality_check, monte_carlo_marginals, MAX_VERTICES};
use crate::groups::{ball, build_symmetric_set, CayleyTable, Element, GroupBackend, GroupDescriptor, SetDescriptor, SymmetricSet};
use crate::littlewood::{box_trick, free_t1_certificate, lp_norm, nprime_lower, nprime_vs_cheeger};
use crate::provenance::{Provenance, Rational, Tagged};
use crate::spectral::{analytic_rho, conservation_check, kesten_bound, mohar_check_instance, spectral_estimate, FiniteSupportFunction};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Environment variable naming the ball cache directory.
pub const CACHE_ENV: &str = "CAYLEY_ISO_CACHE";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_IO: i32 = 3;

// Desk-scale caps on task parameters.
pub const MAX_SETS: usize = 64;
pub const MAX_POOL_RADIUS: usize = 8;
pub const MAX_SUBSET: usize = 24;
pub const MAX_SPECTRAL_STEPS: usize = 40;
pub const MAX_COGROWTH_K: usize = 60;
pub const MAX_COLOUR_RADIUS: usize = 16;
pub const MAX_SAMPLES: usize = 1_000_000;
pub const MAX_TRIALS: usize = 100_000;
pub const MAX_SUPPORT_CAP: usize = 10_000_000;

const VERIFY_SUPPORT_CAP: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub group: GroupDescriptor,
    #[serde(default = "default_sets")]
    pub sets: Vec<SetDescriptor>,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_sets() -> Vec<SetDescriptor> {
    vec![SetDescriptor::Standard]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurnsideParams {
    pub m: usize,
    pub a: u64,
    #[serde(default)]
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    Invariants {
        #[serde(default = "two")]
        radius: usize,
        #[serde(default)]
        max_subset: Option<usize>,
    },
    Spectral {
        #[serde(default = "eight")]
        k_max: usize,
        #[serde(default = "default_radii")]
        radii: Vec<usize>,
        #[serde(default = "default_cap")]
        support_cap: usize,
    },
    Littlewood {
        #[serde(default = "two")]
        radius: usize,
        #[serde(default)]
        max_subset: Option<usize>,
        #[serde(default = "default_p")]
        p: Vec<f64>,
        #[serde(default = "one_f")]
        q: f64,
    },
    Cogrowth {
        images: Vec<String>,
        #[serde(default = "twenty")]
        k_max: usize,
        #[serde(default)]
        burnside: Option<BurnsideParams>,
    },
    Forest {
        #[serde(default = "default_forest_p")]
        p: Vec<f64>,
        #[serde(default)]
        samples: usize,
    },
    Colour {
        #[serde(default = "three")]
        radius: usize,
        #[serde(default = "one_f")]
        alpha: f64,
    },
    Exponents {
        #[serde(default = "two")]
        pool_radius: usize,
        #[serde(default)]
        max_subset: Option<usize>,
        #[serde(default = "six")]
        k_max: usize,
        #[serde(default = "default_cap")]
        support_cap: usize,
    },
    Verify {
        #[serde(default = "default_trials")]
        trials: usize,
        #[serde(default = "default_tol")]
        tolerance: f64,
    },
}

fn two() -> usize {
    2
}
fn three() -> usize {
    3
}
fn six() -> usize {
    6
}
fn eight() -> usize {
    8
}
fn twenty() -> usize {
    20
}
fn one_f() -> f64 {
    1.0
}
fn default_radii() -> Vec<usize> {
    vec![1, 2]
}
fn default_cap() -> usize {
    crate::spectral::DEFAULT_SUPPORT_CAP
}
fn default_p() -> Vec<f64> {
    vec![1.0, 2.0]
}
fn default_forest_p() -> Vec<f64> {
    vec![1.0, 2.0]
}
fn default_trials() -> usize {
    200
}
fn default_tol() -> f64 {
    1e-9
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Invariants { .. } => "invariants",
            Task::Spectral { .. } => "spectral",
            Task::Littlewood { .. } => "littlewood",
            Task::Cogrowth { .. } => "cogrowth",
            Task::Forest { .. } => "forest",
            Task::Colour { .. } => "colour",
            Task::Exponents { .. } => "exponents",
            Task::Verify { .. } => "verify",
        }
    }

    fn validate(&self) -> Result<()> {
        let cap = |what: &str, v: usize, max: usize| {
            if v > max {
                Err(Error::Parameter(format!("{}: {what} = {v} exceeds the cap {max}", self.name())))
            } else {
                Ok(())
            }
        };
        let subset = |m: &Option<usize>| m.map_or(Ok(()), |m| cap("max_subset", m, MAX_SUBSET));
        match self {
            Task::Invariants { radius, max_subset } => {
                cap("radius", *radius, MAX_POOL_RADIUS)?;
                subset(max_subset)
            }
            Task::Spectral { k_max, radii, support_cap } => {
                cap("k_max", *k_max, MAX_SPECTRAL_STEPS)?;
                cap("support_cap", *support_cap, MAX_SUPPORT_CAP)?;
                radii.iter().try_for_each(|&r| cap("radius", r, MAX_POOL_RADIUS))
            }
            Task::Littlewood { radius, max_subset, p, q } => {
                cap("radius", *radius, MAX_POOL_RADIUS)?;
                subset(max_subset)?;
                if p.iter().chain(std::iter::once(q)).any(|&x| !(x >= 1.0)) {
                    return Err(Error::Parameter("littlewood: exponents must be >= 1".into()));
                }
                Ok(())
            }
            Task::Cogrowth { images, k_max, .. } => {
                cap("k_max", *k_max, MAX_COGROWTH_K)?;
                if images.len() < 2 {
                    return Err(Error::Parameter("cogrowth: need at least two images".into()));
                }
                Ok(())
            }
            Task::Forest { p, samples } => {
                cap("samples", *samples, MAX_SAMPLES)?;
                if p.iter().any(|&x| !(x >= 1.0)) {
                    return Err(Error::Parameter("forest: p must be >= 1".into()));
                }
                Ok(())
            }
            Task::Colour { radius, alpha } => {
                cap("radius", *radius, MAX_COLOUR_RADIUS)?;
                if !(*alpha > 0.0) {
                    return Err(Error::Parameter("colour: alpha must be positive".into()));
                }
                Ok(())
            }
            Task::Exponents { pool_radius, max_subset, k_max, support_cap } => {
                cap("pool_radius", *pool_radius, MAX_POOL_RADIUS)?;
                cap("k_max", *k_max, MAX_SPECTRAL_STEPS)?;
                cap("support_cap", *support_cap, MAX_SUPPORT_CAP)?;
                subset(max_subset)
            }
            Task::Verify { trials, tolerance } => {
                cap("trials", *trials, MAX_TRIALS)?;
                if !(*tolerance > 0.0) {
                    return Err(Error::Parameter("verify: tolerance must be positive".into()));
                }
                Ok(())
            }
        }
    }
}

impl JobConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: JobConfig = serde_json::from_str(text).map_err(|e| Error::Input(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::Input("config lists no tasks".into()));
        }
        if self.sets.is_empty() || self.sets.len() > MAX_SETS {
            return Err(Error::Input(format!("between 1 and {MAX_SETS} sets required")));
        }
        self.tasks.iter().try_for_each(Task::validate)
    }
}

/// Outcome of one task on one set (or on the whole job).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub set: Option<usize>,
    /// Headline quantities, each with its own tag.
    pub values: BTreeMap<String, Tagged>,
    /// Provenance of the numbers inside `detail`.
    pub detail_provenance: Provenance,
    pub detail: Value,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assertion {
    pub id: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub task: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub version: String,
    pub config: JobConfig,
    pub results: Vec<TaskResult>,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
    /// Wall-clock times, kept apart from the numerics.
    pub timings: Vec<Timing>,
}

/// Failure of a job, with the process exit code it maps to.
#[derive(Debug)]
pub struct JobError {
    pub code: i32,
    pub message: String,
}

impl JobError {
    fn schema(e: impl std::fmt::Display) -> Self {
        JobError { code: EXIT_SCHEMA, message: e.to_string() }
    }

    fn io(e: impl std::fmt::Display) -> Self {
        JobError { code: EXIT_IO, message: e.to_string() }
    }

    fn from_error(e: Error) -> Self {
        match e {
            Error::Io(_) => Self::io(e),
            e => Self::schema(e),
        }
    }
}

pub struct JobOutcome {
    pub report: InvariantReport,
    pub out_dir: PathBuf,
    pub exit_code: i32,
}

#[derive(Default)]
struct Csv {
    name: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn new(name: String, header: &[&str]) -> Self {
        Csv { name, header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    fn write(&self, dir: &Path) -> std::result::Result<(), JobError> {
        let mut w = csv::Writer::from_path(dir.join(&self.name)).map_err(JobError::io)?;
        w.write_record(&self.header).map_err(JobError::io)?;
        for r in &self.rows {
            w.write_record(r).map_err(JobError::io)?;
        }
        w.flush().map_err(JobError::io)
    }
}

struct TaskOutput {
    results: Vec<TaskResult>,
    csvs: Vec<Csv>,
    assertions: Vec<Assertion>,
}

/// Reads, validates and runs a job, writing `report.json` and the CSVs.
pub fn run_job(config_path: &Path, out: Option<&Path>, seed: Option<u64>) -> std::result::Result<JobOutcome, JobError> {
    let text = std::fs::read_to_string(config_path).map_err(|e| JobError::io(format!("{}: {e}", config_path.display())))?;
    let mut cfg = JobConfig::parse(&text).map_err(JobError::schema)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out_dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("cayley-iso-out"));
    let (report, csvs) = execute(&cfg)?;
    std::fs::create_dir_all(&out_dir).map_err(|e| JobError::io(format!("{}: {e}", out_dir.display())))?;
    std::fs::write(out_dir.join("report.json"), report_json(&report)).map_err(JobError::io)?;
    for c in &csvs {
        c.write(&out_dir)?;
    }
    let exit_code = if report.passed { EXIT_OK } else { EXIT_ASSERTION };
    Ok(JobOutcome { report, out_dir, exit_code })
}

/// Pretty JSON with a trailing newline.
pub fn report_json(report: &InvariantReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Runs a validated config in memory.
pub fn run_config(cfg: &JobConfig) -> std::result::Result<InvariantReport, JobError> {
    execute(cfg).map(|(r, _)| r)
}

fn execute(cfg: &JobConfig) -> std::result::Result<(InvariantReport, Vec<Csv>), JobError> {
    let backend = GroupBackend::from_descriptor(&cfg.group).map_err(JobError::schema)?;
    let sets: Vec<SymmetricSet> =
        cfg.sets.iter().map(|d| build_symmetric_set(&backend, d)).collect::<Result<_>>().map_err(JobError::schema)?;
    let mut results = Vec::new();
    let mut csvs = Vec::new();
    let mut assertions = Vec::new();
    let mut timings = Vec::new();
    for task in &cfg.tasks {
        let start = Instant::now();
        let out = run_task(task, &backend, cfg, &sets).map_err(JobError::from_error)?;
        timings.push(Timing { task: task.name().into(), seconds: start.elapsed().as_secs_f64() });
        results.extend(out.results);
        csvs.extend(out.csvs);
        assertions.extend(out.assertions);
    }
    let passed = assertions.iter().all(|a| a.passed);
    let report = InvariantReport { version: VERSION.into(), config: cfg.clone(), results, assertions, passed, timings };
    Ok((report, csvs))
}

fn tag_r(name: &str, r: Rational, p: Provenance) -> (String, Tagged) {
    (name.to_string(), Tagged::rational(r, p))
}

fn tag_f(name: &str, v: f64, p: Provenance) -> (String, Tagged) {
    (name.to_string(), Tagged::float(v, p))
}

fn elements_json(xs: &[Element]) -> Value {
    Value::from(xs.iter().map(|x| x.to_string()).collect::<Vec<_>>())
}

fn run_task(task: &Task, backend: &GroupBackend, cfg: &JobConfig, sets: &[SymmetricSet]) -> Result<TaskOutput> {
    let mut out = TaskOutput { results: Vec::new(), csvs: Vec::new(), assertions: Vec::new() };
    let name = task.name().to_string();
    match task {
        Task::Exponents { pool_radius, max_subset, k_max, support_cap } => {
            let ecfg = ExponentConfig { pool_radius: *pool_radius, max_subset: *max_subset, k_max: *k_max, support_cap: *support_cap, seed: cfg.seed };
            let report = exponent_terms(backend, &cfg.sets, &ecfg)?;
            let class = classify(&report, backend);
            let mut terms = Csv::new("exponents.csv".into(), &["s_size", "e", "e_provenance", "rho", "rho_provenance", "eta_term", "r_term"]);
            for t in &report.sets {
                terms.row(vec![
                    t.s_size.to_string(),
                    t.e.value.to_string(),
                    prov_name(t.e.provenance),
                    t.rho.as_ref().map_or(String::new(), |r| r.value.to_string()),
                    t.rho.as_ref().map_or(String::new(), |r| prov_name(r.provenance)),
                    t.eta_term.value.to_string(),
                    t.r_term.as_ref().map_or(String::new(), |r| r.value.to_string()),
                ]);
            }
            let mut curve = Csv::new("exponents_curve.csv".into(), &["size", "eta_sup", "r_sup"]);
            for c in &report.curve {
                curve.row(vec![c.size.to_string(), c.eta_sup.to_string(), c.r_sup.map_or(String::new(), |r| r.to_string())]);
            }
            for (i, t) in report.sets.iter().enumerate() {
                if let Some(ok) = t.sandwich {
                    out.assertions.push(Assertion {
                        id: format!("exponent sandwich [set {i}]"),
                        passed: ok,
                        detail: format!("r = {}, eta = {}", t.r_term.as_ref().map_or(f64::NAN, |r| r.value), t.eta_term.value),
                    });
                }
            }
            let mut values = vec![("eta_hat".to_string(), report.eta_hat.clone())];
            if let Some(l) = report.lit_hat {
                values.push(tag_f("lit_hat", l, Provenance::Estimate));
            }
            out.results.push(TaskResult {
                task: name,
                set: None,
                values: values.into_iter().collect(),
                detail_provenance: Provenance::Estimate,
                detail: json!({ "report": report, "classification": class }),
            });
            out.csvs.extend([terms, curve]);
        }
        Task::Cogrowth { images, k_max, burnside } => {
            let imgs = images.iter().map(|w| backend.evaluate_str(w)).collect::<Result<Vec<_>>>()?;
            let counts = reduced_word_counts(backend, &imgs, *k_max)?;
            let est = cogrowth_estimate(&counts);
            let mut csv = Csv::new("cogrowth.csv".into(), &["k", "count", "total"]);
            for k in 1..=*k_max {
                csv.row(vec![k.to_string(), counts.c(k).to_string(), counts.totals[k - 1].to_string()]);
            }
            out.assertions.push(Assertion {
                id: "cogrowth count conservation".into(),
                passed: counts.conserved(),
                detail: format!("k <= {k_max}"),
            });
            let mut values = Vec::new();
            let mut detail = json!({ "estimate": est });
            if let Some(alpha) = est.alpha {
                values.push(tag_f("alpha", alpha, Provenance::Estimate));
                let g = grigorchuk_rho(alpha, counts.m)?;
                values.push(tag_f("rho", g.rho, Provenance::Estimate));
                out.assertions.push(Assertion {
                    id: "cogrowth rho <= alpha/m".into(),
                    passed: g.rho <= g.weak_bound + 1e-12,
                    detail: format!("rho = {}, alpha/m = {}", g.rho, g.weak_bound),
                });
                detail["grigorchuk"] = json!(g);
            }
            if let Some(b) = burnside {
                let bb = burnside_bounds(b.m, b.a, b.delta)?;
                values.push(tag_r("burnside_r_lb", bb.r_lb, Provenance::LowerBound));
                values.push(tag_r("burnside_lit_lb", bb.lit_lb, Provenance::LowerBound));
                detail["burnside"] = json!(bb);
            }
            out.results.push(TaskResult { task: name, set: None, values: values.into_iter().collect(), detail_provenance: Provenance::Exact, detail });
            out.csvs.push(csv);
        }
        _ => {
            for (i, s) in sets.iter().enumerate() {
                run_set_task(task, backend, cfg.seed, i, s, &mut out)?;
            }
        }
    }
    Ok(out)
}

fn prov_name(p: Provenance) -> String {
    serde_json::to_value(p).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn run_set_task(task: &Task, backend: &GroupBackend, seed: u64, i: usize, s: &SymmetricSet, out: &mut TaskOutput) -> Result<()> {
    let name = task.name().to_string();
    match task {
        Task::Invariants { radius, max_subset } => {
            let radius = if backend.is_finite() { usize::MAX } else { *radius };
            let mut sc = SearchConfig::new(radius).with_seed(seed);
            sc.max_subset = *max_subset;
            let res = cheeger_upper(backend, s, &sc)?;
            let d = e_and_mad(&res);
            let hp = res.provenance();
            let mut values = vec![tag_r("h", d.h, hp), tag_r("e", d.e, d.provenance), tag_r("mad", d.mad, d.provenance)];
            if let Some(h) = analytic_cheeger(backend, s) {
                let a = degree_bounds(h, s.len(), Provenance::Analytic);
                values.extend([tag_r("h_analytic", a.h, Provenance::Analytic), tag_r("e_analytic", a.e, Provenance::Analytic), tag_r("mad_analytic", a.mad, Provenance::Analytic)]);
            }
            let nested_radius = if backend.is_finite() { ball(backend, s, usize::MAX).radius() } else { radius };
            let nested = nested_ball_stats(backend, s, nested_radius)?;
            let mut csv = Csv::new(format!("invariants_set{i}.csv"), &["radius", "size", "boundary", "internal_edges", "loops", "ratio", "ratio_exact"]);
            for (r, st) in nested.iter().enumerate() {
                csv.row(vec![
                    r.to_string(),
                    st.size.to_string(),
                    st.boundary.to_string(),
                    st.internal_edges.to_string(),
                    st.loops.to_string(),
                    crate::provenance::to_f64(st.ratio()).to_string(),
                    st.ratio().to_string(),
                ]);
            }
            out.csvs.push(csv);
            out.results.push(TaskResult {
                task: name,
                set: Some(i),
                values: values.into_iter().collect(),
                detail_provenance: Provenance::Exact,
                detail: json!({
                    "s_size": s.len(),
                    "pool_size": res.pool_size,
                    "pool_optimal": res.pool_optimal,
                    "candidates": res.candidates,
                    "witness": elements_json(&res.witness),
                    "witness_stats": res.witness_stats,
                }),
            });
        }
        Task::Spectral { k_max, radii, support_cap } => {
            let est = spectral_estimate(backend, s, *k_max, radii, *support_cap)?;
            let mut values = vec![tag_f("kesten_bound", kesten_bound(s.len()), Provenance::Analytic)];
            if let Some(lb) = est.best_lower_bound() {
                values.push(tag_f("rho_lower", lb, Provenance::LowerBound));
            }
            if let Some(a) = &est.analytic {
                values.push(("rho_analytic".into(), a.clone()));
            }
            let mut csv = Csv::new(format!("spectral_set{i}.csv"), &["steps", "mode", "probability", "exact", "bound"]);
            for b in &est.lower_bounds {
                let mode = if b.exact.is_some() { "rational" } else { "float" };
                csv.row(vec![b.steps.to_string(), mode.into(), b.probability.to_string(), b.exact.clone().unwrap_or_default(), b.bound.to_string()]);
            }
            let mut comp = Csv::new(format!("compression_set{i}.csv"), &["radius", "norm"]);
            for (r, n) in &est.compression_norms {
                comp.row(vec![r.to_string(), n.to_string()]);
            }
            out.csvs.extend([csv, comp]);
            out.results.push(TaskResult { task: name, set: Some(i), values: values.into_iter().collect(), detail_provenance: Provenance::LowerBound, detail: json!(est) });
        }
        Task::Littlewood { radius, max_subset, p, q } => {
            let f = FiniteSupportFunction::indicator(s.elements());
            let pool = if backend.is_finite() { usize::MAX } else { *radius };
            let mut sc = SearchConfig::new(pool).with_seed(seed);
            sc.max_subset = *max_subset;
            let est = nprime_lower(backend, s, &f, &sc)?;
            let mut values = vec![match est.exact {
                Some(r) => tag_r("nprime", r, Provenance::LowerBound),
                None => tag_f("nprime", est.value, Provenance::LowerBound),
            }];
            for &pp in p {
                values.push(tag_f(&format!("norm_l{pp}"), lp_norm(&f, pp)?, Provenance::Exact));
            }
            let boxes = p.iter().filter(|&&pp| pp > *q).map(|&pp| box_trick(&f, pp, *q)).collect::<Result<Vec<_>>>()?;
            let mut detail = json!({
                "estimate": { "value": est.value, "attains_l1": est.attains_l1, "pool_optimal": est.pool_optimal, "pool_size": est.pool_size, "witness": elements_json(&est.witness) },
                "box": boxes,
            });
            if backend.is_finite() {
                let (np, mad) = nprime_vs_cheeger(backend, s)?;
                values.push(tag_r("nprime_full", np, Provenance::Exact));
                values.push(tag_r("mad", mad, Provenance::Exact));
                out.assertions.push(Assertion { id: format!("nprime equals mad [set {i}]"), passed: np == mad, detail: format!("{np} vs {mad}") });
            }
            if matches!(backend, GroupBackend::Free { .. }) {
                let cert = free_t1_certificate(backend, &f, (*radius).max(1))?;
                values.push(tag_f("t1_row_sup", cert.row_sup, Provenance::Exact));
                values.push(tag_f("t1_col_sup", cert.col_sup, Provenance::Exact));
                detail["t1"] = json!(cert);
            }
            out.results.push(TaskResult { task: name, set: Some(i), values: values.into_iter().collect(), detail_provenance: Provenance::LowerBound, detail });
        }
        Task::Forest { p, samples } => {
            let m = cayley_forest_marginals(backend, s)?;
            let mut values = vec![tag_f("deg", m.deg, Provenance::Exact)];
            let mut checks = Vec::new();
            for &pp in p {
                let c = forest_inequality_check(&m, pp)?;
                values.push(tag_f(&format!("norm_l{pp}"), c.norm, Provenance::Exact));
                out.assertions.push(Assertion {
                    id: format!("forest norm inequality p={pp} [set {i}]"),
                    passed: c.holds,
                    detail: format!("{} >= {}", c.norm, c.bound),
                });
                checks.push(c);
            }
            let mut header = vec!["u", "v", "marginal"];
            let mc = if *samples > 0 {
                let (g, _) = cayley_graph(backend, s)?;
                header.extend(["monte_carlo", "standard_error"]);
                Some(monte_carlo_marginals(&g, *samples, seed)?)
            } else {
                None
            };
            let mut csv = Csv::new(format!("forest_set{i}.csv"), &header);
            for (k, &(u, v)) in m.edges.iter().enumerate() {
                let mut row = vec![u.to_string(), v.to_string(), m.marginals[k].to_string()];
                if let Some(mc) = &mc {
                    row.extend([mc.marginals[k].to_string(), mc.standard_errors[k].to_string()]);
                }
                csv.row(row);
            }
            out.csvs.push(csv);
            out.results.push(TaskResult {
                task: name,
                set: Some(i),
                values: values.into_iter().collect(),
                detail_provenance: Provenance::Exact,
                detail: json!({ "f_mu": m.f_mu, "width": m.width, "marginal_sum": m.marginal_sum(), "checks": checks, "monte_carlo_samples": samples }),
            });
        }
        Task::Colour { radius, alpha } => {
            let r = colourcor_experiment(backend, s, *alpha, *radius)?;
            let c = &r.colouring;
            let mut values = vec![tag_f("colours_used", c.colours_used as f64, Provenance::Exact), tag_f("degeneracy", c.degeneracy as f64, Provenance::Exact)];
            if let Some(mad) = c.mad_bound {
                values.push(tag_r("mad_bound", mad, Provenance::UpperBound));
            }
            out.assertions.push(Assertion {
                id: format!("colouring proper and within mad bound [set {i}]"),
                passed: c.proper && c.within_mad_bound != Some(false),
                detail: format!("{} colours, mad bound {:?}", c.colours_used, c.mad_bound.map(|m| m.to_string())),
            });
            out.results.push(TaskResult {
                task: name,
                set: Some(i),
                values: values.into_iter().collect(),
                detail_provenance: Provenance::Exact,
                detail: json!({ "vertices": c.vertices, "edges": c.edges, "target": r.target, "meets_target": r.meets_target, "alpha": r.alpha }),
            });
        }
        Task::Verify { trials, tolerance } => {
            let checks = verify_instance(backend, s, *trials, *tolerance, seed.wrapping_add(i as u64))?;
            let values: Vec<_> = checks.iter().map(|c| tag_f(&c.id, if c.passed { 1.0 } else { 0.0 }, Provenance::Exact)).collect();
            out.results.push(TaskResult { task: name, set: Some(i), values: values.into_iter().collect(), detail_provenance: Provenance::Exact, detail: json!(checks) });
            out.assertions.extend(checks.into_iter().map(|mut c| {
                c.id = format!("{} [set {i}]", c.id);
                c
            }));
        }
        Task::Cogrowth { .. } | Task::Exponents { .. } => unreachable!("job-level tasks"),
    }
    Ok(())
}

/// `(passed, total)` over `trials` seeded random subsets of `ball(3)`, for
/// `S` and for `S` with the identity adjoined.
pub fn counting_identity_trials(backend: &GroupBackend, s: &SymmetricSet, trials: usize, seed: u64) -> Result<(usize, usize)> {
    let mut with_e = s.elements().to_vec();
    if !s.contains_identity() {
        with_e.push(backend.identity());
    }
    let looped = SymmetricSet::new(backend, with_e)?;
    let pool = ball(backend, s, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passed = 0;
    for t in 0..trials {
        let set = if t % 2 == 0 { s } else { &looped };
        let k = rng.gen_range(1..=pool.len().min(40));
        let f: Vec<Element> = pool.elements().choose_multiple(&mut rng, k).cloned().collect();
        let st = subset_stats(backend, set, &f)?;
        if st.counting_identity_holds(set.len()) {
            passed += 1;
        }
    }
    Ok((passed, trials))
}

/// Assertion battery for one instance. Checks that do not apply are omitted.
pub fn verify_instance(backend: &GroupBackend, s: &SymmetricSet, trials: usize, tol: f64, seed: u64) -> Result<Vec<Assertion>> {
    let mut out = Vec::new();
    let (ok, total) = counting_identity_trials(backend, s, trials, seed)?;
    out.push(Assertion { id: "counting identity".into(), passed: ok == total, detail: format!("{ok}/{total}") });

    let h_an = analytic_cheeger(backend, s);
    let radius = if backend.is_finite() { usize::MAX } else { 2 };
    let search = cheeger_upper(backend, s, &SearchConfig::new(radius).with_seed(seed))?;
    if let Some(h) = h_an {
        out.push(Assertion {
            id: "Cheeger search bounds analytic h".into(),
            passed: search.h_upper >= h,
            detail: format!("search {} vs analytic {h}", search.h_upper),
        });
    }
    if let Ok(m) = mohar_check_instance(backend, s) {
        out.push(Assertion {
            id: "Cheeger inequalities".into(),
            passed: m.holds,
            detail: format!("{} <= {} <= {}", m.lower, m.h, m.upper),
        });
        if matches!(backend, GroupBackend::Free { .. }) {
            out.push(Assertion {
                id: "right Cheeger equality on the free group".into(),
                passed: m.upper_slack.abs() <= tol,
                detail: format!("slack {:e}", m.upper_slack),
            });
        }
    }
    if let Some(rho) = analytic_rho(backend, s) {
        let size = s.len();
        if !s.contains_identity() {
            out.push(Assertion {
                id: "spectral radius at least the Kesten bound".into(),
                passed: rho + 1e-12 >= kesten_bound(size),
                detail: format!("{rho} >= {}", kesten_bound(size)),
            });
        }
    }
    let steps = conservation_check(backend, s, 12, VERIFY_SUPPORT_CAP);
    out.push(Assertion {
        id: "return-walk mass conservation".into(),
        passed: steps.is_ok(),
        detail: match &steps {
            Ok(n) => format!("exact through {n} steps"),
            Err(e) => e.to_string(),
        },
    });
    if backend.is_finite() {
        let (np, mad) = nprime_vs_cheeger(backend, s)?;
        out.push(Assertion { id: "nprime equals mad".into(), passed: np == mad, detail: format!("{np} vs {mad}") });
        if backend.order().is_some_and(|n| n as usize <= MAX_VERTICES) && !s.contains_identity() {
            let m = cayley_forest_marginals(backend, s)?;
            for p in [1.0, 2.0] {
                let c = forest_inequality_check(&m, p)?;
                out.push(Assertion {
                    id: format!("forest norm inequality p={p}"),
                    passed: c.holds && (!c.constant || c.slack.abs() <= tol),
                    detail: format!("{} >= {}", c.norm, c.bound),
                });
            }
        }
    }
    let colour_radius = if backend.is_finite() { usize::MAX } else { 4 };
    let r = colourcor_experiment(backend, s, 1.0, colour_radius)?;
    out.push(Assertion {
        id: "degeneracy colouring proper within mad bound".into(),
        passed: r.colouring.proper && r.colouring.within_mad_bound != Some(false),
        detail: format!("{} colours", r.colouring.colours_used),
    });
    if s.len() >= 2 {
        let t = set_terms(backend, s, &ExponentConfig::new(2))?;
        if let Some(ok) = t.sandwich {
            out.push(Assertion { id: "exponent sandwich".into(), passed: ok, detail: format!("eta = {}", t.eta_term.value) });
        }
    }
    Ok(out)
}

pub type CayleyTableRows = Vec<Vec<u32>>;

/// Reads comma-separated table rows without checking the group axioms.
pub fn parse_table_rows(text: &str) -> std::result::Result<CayleyTableRows, String> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| format!("table: {e}"))?;
        rows.push(rec.iter().map(|x| x.parse::<u32>().map_err(|_| format!("table: bad entry `{x}`"))).collect::<std::result::Result<Vec<_>, _>>()?);
    }
    Ok(rows)
}

/// Rows of `S_3` as a multiplication table.
pub fn s3_table() -> Vec<Vec<u32>> {
    CayleyTable::from_permutations(&[vec![1, 0, 2], vec![1, 2, 0]]).expect("S3").rows().to_vec()
}

/// The built-in instances, by name.
pub fn zoo(table_rows: Option<CayleyTableRows>) -> Vec<(String, Result<GroupBackend>)> {
    let s3 = GroupDescriptor::FiniteTable { csv: None, rows: Some(table_rows.unwrap_or_else(s3_table)), generators: None };
    vec![
        ("Z".into(), Ok(GroupBackend::free_abelian(1))),
        ("Z^2".into(), Ok(GroupBackend::free_abelian(2))),
        ("Z/6".into(), Ok(GroupBackend::cyclic(6))),
        ("(Z/2)^2".into(), GroupBackend::from_descriptor(&GroupDescriptor::Permutation { generators: vec![vec![1, 0, 3, 2], vec![2, 3, 0, 1]] })),
        ("S3 (table)".into(), GroupBackend::from_descriptor(&s3)),
        ("F2".into(), Ok(GroupBackend::free(2))),
        ("C2*C3".into(), Ok(GroupBackend::free_product_cyclic(vec![2, 3]))),
        ("lamplighter".into(), Ok(GroupBackend::lamplighter())),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfcheckEntry {
    pub instance: String,
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfcheckReport {
    pub version: String,
    pub seed: u64,
    pub entries: Vec<SelfcheckEntry>,
    pub passed: bool,
}

impl SelfcheckReport {
    /// One line per check.
    pub fn matrix(&self) -> String {
        let w = self.entries.iter().map(|e| e.instance.len()).max().unwrap_or(0);
        let c = self.entries.iter().map(|e| e.check.len()).max().unwrap_or(0);
        let mut s = String::new();
        for e in &self.entries {
            let mark = if e.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "{:w$}  {:c$}  {mark}  {}", e.instance, e.check, e.detail);
        }
        let failed = self.entries.iter().filter(|e| !e.passed).count();
        let _ = writeln!(s, "{} checks, {failed} failed", self.entries.len());
        s
    }
}

/// Full battery over the zoo plus the job-level checks. `table_rows`
/// replaces the built-in `S_3` table.
pub fn selfcheck(seed: u64, table_rows: Option<CayleyTableRows>) -> SelfcheckReport {
    let mut entries = Vec::new();
    let mut push = |instance: &str, check: &str, passed: bool, detail: String| {
        entries.push(SelfcheckEntry { instance: instance.into(), check: check.into(), passed, detail });
    };
    for (name, backend) in zoo(table_rows) {
        let backend = match backend {
            Ok(b) => b,
            Err(e) => {
                push(&name, "table axioms (associativity, identity, inverses)", false, e.to_string());
                continue;
            }
        };
        if let GroupBackend::Table(_) = backend {
            push(&name, "table axioms (associativity, identity, inverses)", true, String::new());
        }
        let mut sets = vec![SetDescriptor::Standard];
        if backend.is_finite() {
            sets.push(SetDescriptor::BallMinusIdentity { radius: 2, generators: None });
        }
        for (k, d) in sets.iter().enumerate() {
            let r = build_symmetric_set(&backend, d).and_then(|s| verify_instance(&backend, &s, 500, 1e-9, seed.wrapping_add(k as u64)));
            match r {
                Ok(checks) => {
                    for c in checks {
                        push(&name, &format!("{} [S{k}]", c.id), c.passed, c.detail);
                    }
                }
                Err(e) => push(&name, &format!("battery [S{k}]"), false, e.to_string()),
            }
        }
    }
    let z5 = GroupBackend::cyclic(5);
    let cog = reduced_word_counts(&z5, &[Element::Residue(1), Element::Residue(2)], 30).map(|c| {
        let est = cogrowth_estimate(&c);
        let alpha = est.alpha.unwrap_or(f64::NAN);
        (c.conserved(), alpha, grigorchuk_rho(alpha, 2).map(|g| (g.rho, g.weak_bound)))
    });
    match cog {
        Ok((conserved, alpha, Ok((rho, weak)))) => {
            push("F2 -> Z/5", "cogrowth count conservation", conserved, "k <= 30".into());
            push("F2 -> Z/5", "cogrowth estimate near 3", (alpha - 3.0).abs() <= 0.1, format!("alpha = {alpha}"));
            push("F2 -> Z/5", "Grigorchuk rho near 1", (rho - 1.0).abs() <= 0.02 && rho <= weak + 1e-12, format!("rho = {rho}"));
        }
        Ok((_, alpha, Err(e))) => push("F2 -> Z/5", "cogrowth", false, format!("alpha = {alpha}: {e}")),
        Err(e) => push("F2 -> Z/5", "cogrowth", false, e.to_string()),
    }
    let g = grigorchuk_rho(3f64.sqrt(), 2);
    push("F2", "Grigorchuk at the free boundary", g.as_ref().is_ok_and(|g| (g.rho - 3f64.sqrt() / 2.0).abs() <= 1e-12), format!("{:?}", g.map(|g| g.rho)));
    let b = burnside_bounds(2, 665, None);
    push(
        "Burnside m=2 a=665",
        "Burnside constants",
        b.as_ref().is_ok_and(|b| b.r_lb == Rational::new(1, 3) && b.lit_lb == Rational::new(3, 2)) && burnside_bounds(2, 664, None).is_err(),
        format!("{:?}", b.map(|b| (b.r_lb.to_string(), b.lit_lb.to_string()))),
    );
    let f2 = GroupBackend::free(2);
    let cert = SymmetricSet::standard(&f2)
        .and_then(|s| free_t1_certificate(&f2, &FiniteSupportFunction::indicator(s.elements()), 5));
    push(
        "F2",
        "T1 decomposition certificate",
        cert.as_ref().is_ok_and(|c| c.row_sup == 1.0 && c.col_sup == 1.0),
        format!("{:?}", cert.map(|c| (c.row_sup, c.col_sup))),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut box_ok = true;
    for (p, q) in [(2.0, 1.0), (3.0, 2.0), (4.0, 1.0)] {
        for _ in 0..100 {
            let n = rng.gen_range(1..50);
            let f = FiniteSupportFunction::from_pairs((0..n).map(|i| (Element::Residue(i), rng.gen_range(0.0..1.0))));
            box_ok &= box_trick(&f, p, q).is_ok_and(|b| b.meets_guarantee());
        }
    }
    push("Z (random f)", "box trick guarantee", box_ok, "300 functions".into());
    let passed = entries.iter().all(|e| e.passed);
    SelfcheckReport { version: VERSION.into(), seed, entries, passed }
}

/// Names and descriptor shapes accepted in job configs.
pub fn list_groups() -> String {
    let rows = [
        ("free", r#"{"type":"free","rank":2}"#),
        ("free_abelian", r#"{"type":"free_abelian","rank":2}"#),
        ("cyclic", r#"{"type":"cyclic","n":6}"#),
        ("finite_table", r#"{"type":"finite_table","rows":[[0,1],[1,0]]} or {"type":"finite_table","csv":"0,1\n1,0"}"#),
        ("permutation", r#"{"type":"permutation","generators":[[1,0,2],[1,2,0]]}"#),
        ("free_product_cyclic", r#"{"type":"free_product_cyclic","orders":[2,3]}"#),
        ("lamplighter", r#"{"type":"lamplighter"}"#),
    ];
    let mut s = String::new();
    for (name, example) in rows {
        let _ = writeln!(s, "{name:20} {example}");
    }
    s
}

/// Configures the ball cache from [`CACHE_ENV`].
pub fn init_cache_from_env() {
    if let Some(dir) = std::env::var_os(CACHE_ENV).filter(|d| !d.is_empty()) {
        crate::groups::set_ball_cache_dir(Some(PathBuf::from(dir)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(text: &str) -> std::result::Result<InvariantReport, JobError> {
        run_config(&JobConfig::parse(text).map_err(JobError::schema)?)
    }

    #[test]
    fn minimal_invariants_job() {
        let r = job(r#"{"group":{"type":"cyclic","n":6},"sets":[{"type":"explicit","words":["a","A"]}],"tasks":[{"task":"invariants"}]}"#).unwrap();
        let get = |k: &str| r.results[0].values[k].clone();
        assert_eq!(get("h").exact.as_deref(), Some("0"));
        assert_eq!(get("e").exact.as_deref(), Some("1"));
        assert_eq!(get("mad").exact.as_deref(), Some("2"));
        assert_eq!(get("h").provenance, Provenance::Exact);
        assert!(r.passed);
    }

    #[test]
    fn free_group_verify_job() {
        let r = job(r#"{"group":{"type":"free","rank":2},"tasks":[{"task":"verify","trials":50}]}"#).unwrap();
        assert!(r.assertions.iter().any(|a| a.id.starts_with("right Cheeger equality") && a.passed));
        assert!(r.passed, "{:?}", r.assertions);
    }

    #[test]
    fn schema_errors() {
        let e = job(r#"{"group":{"type":"mystery"},"tasks":[{"task":"invariants"}]}"#).unwrap_err();
        assert_eq!(e.code, EXIT_SCHEMA);
        let e = job(r#"{"group":{"type":"free","rank":2},"tasks":[{"task":"invariants","radius":40}]}"#).unwrap_err();
        assert_eq!(e.code, EXIT_SCHEMA);
        let e = job(r#"{"group":{"type":"free","rank":2},"tasks":[]}"#).unwrap_err();
        assert_eq!(e.code, EXIT_SCHEMA);
        let e = job(r#"{"group":{"type":"lamplighter"},"tasks":[{"task":"cogrowth","images":["a","t"]}]}"#).unwrap_err();
        assert_eq!(e.code, EXIT_SCHEMA);
        let ok = job(r#"{"group":{"type":"free","rank":2},"tasks":[{"task":"cogrowth","images":["a","b"],"k_max":6}]}"#).unwrap();
        assert!(ok.passed);
    }

    #[test]
    fn report_round_trips() {
        let r = job(r#"{"group":{"type":"cyclic","n":4},"tasks":[{"task":"invariants"},{"task":"forest"},{"task":"spectral","k_max":4}]}"#).unwrap();
        let text = report_json(&r);
        let back: InvariantReport = serde_json::from_str(&text).unwrap();
        assert_eq!(report_json(&back), text);
    }

    #[test]
    fn corrupted_table_fails_selfcheck_axioms() {
        // A Latin square with identity 0 that is not associative.
        let bad = vec![vec![0, 1, 2, 3, 4], vec![1, 0, 3, 4, 2], vec![2, 4, 0, 1, 3], vec![3, 2, 4, 0, 1], vec![4, 3, 1, 2, 0]];
        assert!(CayleyTable::new(bad.clone(), None).is_err());
        let (_, b) = zoo(Some(bad)).into_iter().find(|(n, _)| n.starts_with("S3")).unwrap();
        assert!(b.is_err());
    }
}
