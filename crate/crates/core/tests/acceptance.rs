//! Acceptance suite: one line per criterion, nonzero exit on any failure.

use std::collections::HashSet;
use std::process::Command;
use std::time::{Duration, Instant};

use cayley_iso::cayley::{cheeger_upper, nested_ball_stats, subset_stats, SearchConfig};
use cayley_iso::cli::zoo;
use cayley_iso::cogrowth::{burnside_bounds, cogrowth_estimate, grigorchuk_rho, reduced_word_counts};
use cayley_iso::colouring::{colourcor_experiment, degeneracy_colouring, is_proper};
use cayley_iso::exponents::{exponent_terms, set_terms, ExponentConfig};
use cayley_iso::forests::{cayley_forest_marginals, cayley_graph, forest_inequality_check, monte_carlo_marginals};
use cayley_iso::graph::SimpleGraph;
use cayley_iso::groups::{ball, build_symmetric_set, Element, GroupBackend, GroupDescriptor, SetDescriptor, SymmetricSet};
use cayley_iso::littlewood::{box_select, closed_graph_scan, free_t1_certificate, lp_norm, nprime_vs_cheeger};
use cayley_iso::provenance::Rational;
use cayley_iso::spectral::{conservation_check, mohar_check_instance, return_probability_bounds, FiniteSupportFunction};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn std_set(g: &GroupBackend) -> SymmetricSet {
    SymmetricSet::standard(g).unwrap()
}

fn klein() -> GroupBackend {
    GroupBackend::from_descriptor(&GroupDescriptor::Permutation { generators: vec![vec![1, 0, 3, 2], vec![2, 3, 0, 1]] }).unwrap()
}

fn s3_perm() -> GroupBackend {
    GroupBackend::from_descriptor(&GroupDescriptor::Permutation { generators: vec![vec![1, 0, 2], vec![1, 2, 0]] }).unwrap()
}

fn zoo_backends() -> Vec<(String, GroupBackend)> {
    zoo(None).into_iter().map(|(n, b)| (n, b.unwrap())).collect()
}

/// Directed-pair oracle: `(boundary, edges incl. loops, loops)`.
fn brute_counts(g: &GroupBackend, s: &SymmetricSet, f: &[Element]) -> (usize, usize, usize) {
    let members: HashSet<&Element> = f.iter().collect();
    let mut boundary = 0;
    let mut edges = HashSet::new();
    for x in f {
        for t in s.elements() {
            let y = g.multiply(x, t);
            if members.contains(&y) {
                let key = if *x <= y { (x.clone(), y) } else { (y, x.clone()) };
                edges.insert(key);
            } else {
                boundary += 1;
            }
        }
    }
    let loops = if s.contains_identity() { f.len() } else { 0 };
    (boundary, edges.len(), loops)
}

fn criterion_1() -> Outcome {
    let groups = zoo_backends();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut families = Vec::new();
    for (name, g) in &groups {
        let s = std_set(g);
        let mut with_e = s.elements().to_vec();
        with_e.push(g.identity());
        let looped = SymmetricSet::new(g, with_e).map_err(err)?;
        let random = build_symmetric_set(g, &SetDescriptor::Random { radius: 2, size: 6, seed: 3, generators: None, with_identity: true }).map_err(err)?;
        let pool = ball(g, &s, 3);
        families.push((name.clone(), g, vec![s, looped, random], pool));
    }
    let (mut total, mut with_loops) = (0, 0);
    for _ in 0..10_000 {
        let (name, g, sets, pool) = &families[rng.gen_range(0..families.len())];
        let s = &sets[rng.gen_range(0..sets.len())];
        let k = rng.gen_range(1..=pool.len().min(40));
        let f: Vec<Element> = pool.elements().choose_multiple(&mut rng, k).cloned().collect();
        let st = subset_stats(g, s, &f).map_err(err)?;
        let (b, e, l) = brute_counts(g, s, &f);
        ensure((st.boundary, st.internal_edges, st.loops) == (b, e, l), format!("{name}: counts differ from oracle"))?;
        ensure(
            (st.size * s.len()) as i64 == b as i64 + 2 * e as i64 - l as i64 && st.counting_identity_holds(s.len()),
            format!("{name}: identity fails for |F| = {}", f.len()),
        )?;
        total += 1;
        with_loops += (l > 0) as usize;
    }
    Ok(format!("{total} triples exact, {with_loops} with loops"))
}

fn criterion_2() -> Outcome {
    let g = GroupBackend::free(2);
    let s = std_set(&g);
    let res = cheeger_upper(&g, &s, &SearchConfig::new(3)).map_err(err)?;
    ensure(res.h_upper == Rational::new(108, 53), format!("ball(3) search gave {}", res.h_upper))?;
    for (r, st) in nested_ball_stats(&g, &s, 6).map_err(err)?.iter().enumerate() {
        let trend = Rational::from_integer(2) + Rational::new(2, st.size as i64);
        ensure(st.ratio() == trend, format!("nested ball {r}: {} != 2 + 2/{}", st.ratio(), st.size))?;
    }
    let m = mohar_check_instance(&g, &s).map_err(err)?;
    ensure(m.upper_slack.abs() <= 1e-9, format!("right slack {}", m.upper_slack))?;
    let expected = 2.0 - 4.0 * (1.0 - 3f64.sqrt() / 2.0);
    ensure((m.lower_slack - expected).abs() <= 1e-12 && (m.lower_slack - 1.464).abs() < 1e-3, format!("left slack {}", m.lower_slack))?;
    Ok(format!("h_ub(ball 3) = 108/53, nested ratios 2 + 2/|F|, right slack {:.1e}, left slack {:.6}", m.upper_slack, m.lower_slack))
}

fn criterion_3() -> Outcome {
    let z = |n| GroupBackend::cyclic(n);
    let words = |ws: &[&str]| SetDescriptor::Explicit { words: ws.iter().map(|w| w.to_string()).collect() };
    let ball2 = SetDescriptor::BallMinusIdentity { radius: 2, generators: None };
    let cases: Vec<(&str, GroupBackend, SetDescriptor)> = vec![
        ("Z/4", z(4), SetDescriptor::Standard),
        ("Z/5", z(5), SetDescriptor::Standard),
        ("Z/6", z(6), SetDescriptor::Standard),
        ("Z/6 ball 2", z(6), ball2.clone()),
        ("Z/7 {+-1,+-2}", z(7), words(&["a", "A", "a^2", "A^2"])),
        ("Z/8 {e,+-1}", z(8), words(&["e", "a", "A"])),
        ("(Z/2)^2", klein(), SetDescriptor::Standard),
        ("(Z/2)^2 ball 2", klein(), ball2.clone()),
        ("S3 perms", s3_perm(), SetDescriptor::Standard),
        ("S3 perms ball 2", s3_perm(), ball2.clone()),
        ("S3 table", zoo_backends().into_iter().find(|(n, _)| n.starts_with("S3")).unwrap().1, SetDescriptor::Standard),
    ];
    for (name, g, d) in &cases {
        let s = build_symmetric_set(g, d).map_err(err)?;
        let (np, mad) = nprime_vs_cheeger(g, &s).map_err(err)?;
        // On a finite group the whole group has no boundary, so |S| e = |S|.
        let oracle = Rational::from_integer(s.len() as i64);
        ensure(np == mad && mad == oracle, format!("{name}: N' = {np}, mad = {mad}, |S| = {oracle}"))?;
    }
    Ok(format!("{} finite pairs with N' = |S| e exactly", cases.len()))
}

fn criterion_4() -> Outcome {
    // Independent zeta values.
    let zeta = |x: f64| match x {
        x if x == 2.0 => std::f64::consts::PI.powi(2) / 6.0,
        x if x == 1.5 => 2.612_375_348_685_488,
        x if x == 4.0 => std::f64::consts::PI.powi(4) / 90.0,
        _ => unreachable!(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_near = 0.0f64;
    for (p, q) in [(2.0, 1.0), (3.0, 2.0), (4.0, 1.0)] {
        let z = zeta(p / q);
        for t in 0..1000 {
            let n = rng.gen_range(1..=200);
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0f64).powf(rng.gen_range(0.5..6.0))).collect();
            let (_, _, qn, guarantee) = box_select(&values, p, q).map_err(err)?;
            let mut sorted = values.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let oracle_q = sorted.iter().enumerate().map(|(i, v)| v * ((i + 1) as f64).powf(1.0 / q)).fold(0.0, f64::max);
            let p_norm = values.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p);
            let bound = z.powf(-1.0 / p) * p_norm;
            ensure((qn - oracle_q).abs() <= 1e-12 * oracle_q.max(1.0), format!("(p,q)=({p},{q}) trial {t}: box norm mismatch"))?;
            ensure((guarantee - bound).abs() <= 1e-9 * bound, format!("(p,q)=({p},{q}): guarantee {guarantee} vs {bound}"))?;
            ensure(qn >= bound * (1.0 - 1e-12), format!("(p,q)=({p},{q}) trial {t}: {qn} < {bound}"))?;
        }
        let values: Vec<f64> = (1..=1000).map(|n| (n as f64).powf(-1.0 / q)).collect();
        let (_, _, qn, guarantee) = box_select(&values, p, q).map_err(err)?;
        let near = qn / guarantee - 1.0;
        ensure((0.0..=0.05).contains(&near), format!("(p,q)=({p},{q}): extremal ratio off by {near}"))?;
        worst_near = worst_near.max(near);
    }
    Ok(format!("3000 random f meet the guarantee; extremal truncations within {:.3}%", 100.0 * worst_near))
}

fn criterion_5() -> Outcome {
    let g = GroupBackend::free(2);
    let f = FiniteSupportFunction::indicator(std_set(&g).elements());
    let cert = free_t1_certificate(&g, &f, 5).map_err(err)?;
    ensure(cert.row_sup == 1.0 && cert.col_sup == 1.0, format!("sups {} {}", cert.row_sup, cert.col_sup))?;
    ensure(cert.exact_bound == Some(Rational::from_integer(2)), "certificate is not exactly 2")?;
    for p in [1.0, 1.5, 2.0, 4.0] {
        let n = lp_norm(&f, p).map_err(err)?;
        ensure((n - 4f64.powf(1.0 / p)).abs() <= 1e-12, format!("||1_S||_{p} = {n}"))?;
    }
    let scan = closed_graph_scan(&[2, 3, 4, 6, 8], 1.0, 3).map_err(err)?;
    ensure(scan.iter().all(|pt| pt.certificate == 2.0), "certificate above 2 for some rank")?;
    ensure(scan.windows(2).all(|w| w[1].lp_norm > w[0].lp_norm && w[1].ratio < w[0].ratio), "ratio not decreasing")?;
    let ratios: Vec<String> = scan.iter().map(|pt| format!("{}:{:.3}", pt.s_size, pt.ratio)).collect();
    Ok(format!("row = col = 1 at R = 5; T1/l1 ratio by |S|: {}", ratios.join(" ")))
}

fn criterion_6() -> Outcome {
    let z5 = GroupBackend::cyclic(5);
    let counts = reduced_word_counts(&z5, &[Element::Residue(1), Element::Residue(2)], 30).map_err(err)?;
    ensure(counts.conserved(), "total counts not conserved")?;
    let est = cogrowth_estimate(&counts);
    let alpha = est.alpha.ok_or("no estimate")?;
    ensure((alpha - 3.0).abs() <= 0.1, format!("alpha = {alpha}"))?;
    let g = grigorchuk_rho(alpha, 2).map_err(err)?;
    ensure((g.rho - 1.0).abs() <= 0.02, format!("rho = {}", g.rho))?;
    let free = grigorchuk_rho(3f64.sqrt(), 2).map_err(err)?;
    ensure((free.rho - 3f64.sqrt() / 2.0).abs() <= 1e-12, format!("free boundary rho = {}", free.rho))?;
    let mut points: Vec<f64> = est.ratios.iter().map(|(_, r)| r.clamp(3f64.sqrt(), 3.0)).collect();
    points.extend((0..=100).map(|i| 3f64.sqrt() + (3.0 - 3f64.sqrt()) * i as f64 / 100.0));
    for a in &points {
        let v = grigorchuk_rho(*a, 2).map_err(err)?;
        ensure(v.rho <= a / 2.0 + 1e-12, format!("rho {} > alpha/m at {a}", v.rho))?;
    }
    Ok(format!("c_k conserved to k = 30, alpha = {alpha:.6}, rho = {:.6}, rho <= alpha/m at {} points", g.rho, points.len()))
}

fn criterion_7() -> Outcome {
    let b = burnside_bounds(2, 665, None).map_err(err)?;
    ensure(b.r_lb == Rational::new(1, 3) && b.lit_lb == Rational::new(3, 2), format!("{} {}", b.r_lb, b.lit_lb))?;
    let rejected = [burnside_bounds(1, 665, None), burnside_bounds(2, 664, None), burnside_bounds(2, 101, None), burnside_bounds(2, 665, Some(1.5))];
    ensure(rejected.iter().all(|r| r.is_err()), "a hypothesis violation was accepted")?;
    Ok(format!("r_lb = {}, Lit_lb = {}, 4 violations rejected", b.r_lb, b.lit_lb))
}

fn criterion_8() -> Outcome {
    let k4 = klein();
    let k4_s = build_symmetric_set(&k4, &SetDescriptor::BallMinusIdentity { radius: 2, generators: None }).map_err(err)?;
    let c4 = GroupBackend::cyclic(4);
    let c4_s = std_set(&c4);
    let mut notes = Vec::new();
    for (name, g, s, exact) in [("K4", &k4, &k4_s, 0.5), ("C4", &c4, &c4_s, 0.75)] {
        let m = cayley_forest_marginals(g, s).map_err(err)?;
        // (n - 1)/|E| on an edge-transitive graph.
        ensure(((m.vertex_count - 1) as f64 / m.edges.len() as f64 - exact).abs() <= 1e-15, format!("{name}: oracle mismatch"))?;
        ensure(m.marginals.iter().all(|v| (v - exact).abs() <= 1e-8), format!("{name}: marginals {:?}", m.marginals))?;
        // Expected tree degree of a vertex: 2(n - 1)/n.
        let deg = 2.0 * (m.vertex_count - 1) as f64 / m.vertex_count as f64;
        ensure((m.deg - deg).abs() <= 1e-9, format!("{name}: deg {}", m.deg))?;
        let (graph, _) = cayley_graph(g, s).map_err(err)?;
        let mc = monte_carlo_marginals(&graph, 10_000, 8).map_err(err)?;
        let worst = mc
            .marginals
            .iter()
            .zip(&mc.standard_errors)
            .map(|(v, se)| (v - exact).abs() / se.max(1e-12))
            .fold(0.0, f64::max);
        ensure(worst <= 4.0, format!("{name}: Monte Carlo off by {worst:.2} SE"))?;
        for p in [1.0, 2.0] {
            let c = forest_inequality_check(&m, p).map_err(err)?;
            ensure(c.holds && c.constant && c.slack.abs() <= 1e-9, format!("{name} p={p}: {} vs {}", c.norm, c.bound))?;
        }
        notes.push(format!("{name} {exact} (MC max {worst:.2} SE)"));
    }
    Ok(notes.join(", "))
}

fn criterion_9() -> Outcome {
    let check = |g: &SimpleGraph, expect: usize, name: &str| -> Result<(), String> {
        let c = degeneracy_colouring(g).map_err(err)?;
        ensure(is_proper(g, &c.colours) && c.colours_used == expect, format!("{name}: {} colours", c.colours_used))
    };
    check(&SimpleGraph::cycle(5), 3, "C5")?;
    for n in [4, 6, 8, 20] {
        check(&SimpleGraph::cycle(n), 2, "even cycle")?;
    }
    check(&SimpleGraph::complete(4), 4, "K4")?;
    let mut rows = Vec::new();
    for (name, g) in zoo_backends().into_iter().chain([("F3".to_string(), GroupBackend::free(3))]) {
        let s = std_set(&g);
        let radius = if g.is_finite() { usize::MAX } else { 4 };
        let r = colourcor_experiment(&g, &s, 1.0, radius).map_err(err)?;
        let c = &r.colouring;
        let mad = c.mad_bound.ok_or("no mad bound")?;
        let s0 = s.without_identity(&g).map_err(err)?;
        let b = ball(&g, &s0, radius);
        let graph = SimpleGraph::induced_cayley(&g, &s0, b.elements()).map_err(err)?;
        ensure(graph.edges().iter().all(|&(u, v)| c.colours[u] != c.colours[v]), format!("{name}: improper"))?;
        ensure(c.colours_used as i64 <= mad.floor().to_integer() + 1, format!("{name}: {} colours, mad {mad}", c.colours_used))?;
        if matches!(g, GroupBackend::Free { .. }) {
            ensure(c.colours_used == 2, format!("{name}: free ball used {}", c.colours_used))?;
        }
        rows.push(format!("{name}:{}", c.colours_used));
    }
    Ok(format!("C5 3, even cycles 2, K4 4; zoo {}", rows.join(" ")))
}

fn criterion_10() -> Outcome {
    let cfg = ExponentConfig::new(3);
    let f2 = GroupBackend::free(2);
    let t = set_terms(&f2, &std_set(&f2), &cfg).map_err(err)?;
    let r = t.r_term.clone().ok_or("no r-term")?.value;
    let r_exact = -(3f64.sqrt() / 2.0).ln() / 4f64.ln();
    ensure((r - r_exact).abs() <= 1e-12 && (r - 0.1037).abs() <= 1e-4, format!("F2 r = {r}"))?;
    ensure((t.eta_term.value - 0.5).abs() <= 1e-4, format!("F2 eta = {}", t.eta_term.value))?;
    let mut sandwiches = 0;
    let mut instances: Vec<(String, GroupBackend, SymmetricSet)> =
        zoo_backends().into_iter().map(|(n, g)| (n, g.clone(), std_set(&g))).collect();
    for m in [3, 4] {
        let g = GroupBackend::free(m);
        instances.push((format!("F{m}"), g.clone(), std_set(&g)));
    }
    for (name, g, s) in &instances {
        let t = set_terms(g, s, &ExponentConfig::new(2)).map_err(err)?;
        if let Some(ok) = t.sandwich {
            let (r, e) = (t.r_term.as_ref().unwrap().value, t.eta_term.value);
            let ln_s = (s.len() as f64).ln();
            ensure(ok && r <= e + 1e-12 && e <= 2.0 * r + 2f64.ln() / ln_s + 1e-12, format!("{name}: sandwich fails ({r}, {e})"))?;
            sandwiches += 1;
        }
        if g.is_finite() {
            ensure(t.eta_term.value == 0.0 && t.r_term.as_ref().map(|r| r.value) == Some(0.0), format!("{name}: finite terms not (0, 0)"))?;
        }
    }
    let king = SetDescriptor::Explicit { words: ["a", "A", "b", "B", "ab", "AB", "aB", "Ab"].iter().map(|w| w.to_string()).collect() };
    let family: Vec<SetDescriptor> =
        (1..=8).map(|k| SetDescriptor::BallMinusIdentity { radius: k, generators: Some(Box::new(king.clone())) }).collect();
    let z2 = GroupBackend::free_abelian(2);
    let rep = exponent_terms(&z2, &family, &ExponentConfig::new(2)).map_err(err)?;
    let last = rep.sets.last().unwrap();
    ensure(last.s_size == 288, format!("box k=8 has |S| = {}", last.s_size))?;
    ensure(last.eta_term_searched.value <= 0.2, format!("box eta-term {}", last.eta_term_searched.value))?;
    Ok(format!(
        "F2 (r, eta) = ({r:.4}, {:.4}), {sandwiches} exact sandwiches, Z^2 box k=8 eta-term {:.4}",
        t.eta_term.value, last.eta_term_searched.value
    ))
}

fn strip_timings(text: &str) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(text).unwrap();
    v.as_object_mut().unwrap().remove("timings");
    v
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let config = dir.path().join("job.json");
    std::fs::write(
        &config,
        r#"{
  "group": {"type": "free", "rank": 2},
  "sets": [{"type": "standard"}, {"type": "ball_minus_identity", "radius": 2}],
  "tasks": [
    {"task": "invariants", "radius": 3},
    {"task": "spectral", "k_max": 6},
    {"task": "littlewood", "radius": 2},
    {"task": "colour", "radius": 4},
    {"task": "exponents", "pool_radius": 2, "k_max": 4},
    {"task": "verify", "trials": 300}
  ],
  "seed": 11
}"#,
    )
    .map_err(err)?;
    let run = |threads: &str| -> Result<std::path::PathBuf, String> {
        let out = dir.path().join(format!("out{threads}"));
        let status = Command::new(env!("CARGO_BIN_EXE_cayley-iso"))
            .args(["run", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", threads])
            .output()
            .map_err(err)?;
        ensure(status.status.success(), format!("threads {threads}: {}", String::from_utf8_lossy(&status.stderr)))?;
        Ok(out)
    };
    let (a, b) = (run("1")?, run("4")?);
    let mut files: Vec<String> = std::fs::read_dir(&a).map_err(err)?.map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    files.sort();
    for f in &files {
        let (x, y) = (std::fs::read_to_string(a.join(f)).map_err(err)?, std::fs::read_to_string(b.join(f)).map_err(err)?);
        if f == "report.json" {
            ensure(strip_timings(&x) == strip_timings(&y), "report numerics differ across thread counts")?;
        } else {
            ensure(x == y, format!("{f} differs across thread counts"))?;
        }
    }
    let mut checked = Vec::new();
    for (name, g) in zoo_backends() {
        let s = std_set(&g);
        let steps = conservation_check(&g, &s, 24, 3_000_000).map_err(err)?;
        if !matches!(g, GroupBackend::Free { .. }) {
            ensure(steps == 24, format!("{name}: only {steps} steps before the support cap"))?;
        }
        let bounds = return_probability_bounds(&g, &s, 12, 3_000_000).map_err(err)?;
        ensure(bounds.iter().all(|b| b.exact.is_some()), format!("{name}: float mode below 2k = 24"))?;
        checked.push(format!("{name}:{steps}"));
    }
    Ok(format!("{} files identical at 1 vs 4 threads; exact mass through steps {}", files.len(), checked.join(" ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 11] = [
        ("counting identity", criterion_1, 30),
        ("free-group Cheeger equality", criterion_2, 60),
        ("N' identity on finite groups", criterion_3, 60),
        ("box trick", criterion_4, 30),
        ("free T1 certificate", criterion_5, 30),
        ("cogrowth consistency", criterion_6, 120),
        ("Burnside constants", criterion_7, 1),
        ("forest inequality", criterion_8, 60),
        ("colouring", criterion_9, 30),
        ("exponent sandwich", criterion_10, 180),
        ("determinism and conservation", criterion_11, 60),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(d) if took > Duration::from_secs(*limit) => Err(format!("{d}; took {took:.1?}, limit {limit}s")),
            o => o,
        };
        match outcome {
            Ok(d) => println!("criterion {:2} PASS  {name} ({took:.2?}): {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:2} FAIL  {name} ({took:.2?}): {d}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
