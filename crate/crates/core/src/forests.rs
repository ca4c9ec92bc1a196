//! Uniform spanning trees on finite graphs: exact edge marginals from
//! effective resistances, Wilson sampling, and the forest norm inequality
//! `||f_mu||_p >= deg(mu) width(mu)^{-(p-1)/p}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SimpleGraph;
use crate::groups::{ball, GroupBackend, SymmetricSet};

pub const MAX_VERTICES: usize = 2000;
pub const CG_TOL: f64 = 1e-12;

/// Solves `L_0 x = b` where `L_0` is the Laplacian with vertex 0 grounded
/// (its row and column removed; `b[0]` and `x[0]` are ignored and zero).
fn grounded_solve(g: &SimpleGraph, b: &[f64]) -> Vec<f64> {
    let n = g.vertex_count();
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut y = vec![0.0; n];
        for v in 1..n {
            let mut acc = g.degree(v) as f64 * x[v];
            for &u in g.neighbours(v) {
                if u != 0 {
                    acc -= x[u];
                }
            }
            y[v] = acc;
        }
        y
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).skip(1).map(|(x, y)| x * y).sum::<f64>();
    let inv_diag: Vec<f64> = (0..n).map(|v| if v == 0 { 0.0 } else { 1.0 / g.degree(v) as f64 }).collect();
    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = b.to_vec();
    r[0] = 0.0;
    let b_norm = dot(&r, &r).sqrt();
    if b_norm == 0.0 {
        return x;
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..10 * n + 100 {
        let ap = apply(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 1..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= CG_TOL * b_norm {
            break;
        }
        z = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 1..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}

/// Effective resistance between the ends of every edge, which is that edge's
/// probability of lying in the uniform spanning tree.
pub fn ust_marginals_exact(g: &SimpleGraph) -> Result<Vec<f64>> {
    let n = g.vertex_count();
    if n == 0 || !g.is_connected() {
        return Err(Error::Input("spanning trees need a connected nonempty graph".into()));
    }
    if n > MAX_VERTICES {
        return Err(Error::Input(format!("graph has {n} vertices, limit {MAX_VERTICES}")));
    }
    Ok(g.edges()
        .par_iter()
        .map(|&(u, v)| {
            let mut b = vec![0.0; n];
            b[u] += 1.0;
            b[v] -= 1.0;
            let x = grounded_solve(g, &b);
            x[u] - x[v]
        })
        .collect())
}

/// One uniform spanning tree by Wilson's algorithm, rooted at vertex 0.
/// The random stream is `(seed, stream)`, so samples can be drawn in any
/// order or thread layout with identical results. Returns sorted edge indices.
pub fn wilson_sample(g: &SimpleGraph, seed: u64, stream: u64) -> Vec<usize> {
    let n = g.vertex_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut in_tree = vec![false; n];
    let mut next = vec![usize::MAX; n];
    if n > 0 {
        in_tree[0] = true;
    }
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for start in 0..n {
        let mut u = start;
        while !in_tree[u] {
            let nb = g.neighbours(u);
            next[u] = nb[rng.gen_range(0..nb.len())];
            u = next[u];
        }
        let mut u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            edges.push(g.edge_index(u, next[u]).expect("walk follows edges"));
            u = next[u];
        }
    }
    edges.sort_unstable();
    edges
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloMarginals {
    pub samples: usize,
    pub marginals: Vec<f64>,
    /// `sqrt(p(1-p)/N)` at the empirical frequency.
    pub standard_errors: Vec<f64>,
}

/// Empirical edge frequencies over `samples` Wilson trees.
pub fn monte_carlo_marginals(g: &SimpleGraph, samples: usize, seed: u64) -> Result<MonteCarloMarginals> {
    if g.vertex_count() == 0 || !g.is_connected() {
        return Err(Error::Input("spanning trees need a connected nonempty graph".into()));
    }
    if samples == 0 {
        return Err(Error::Parameter("samples must be >= 1".into()));
    }
    let m = g.edge_count();
    let counts = (0..samples as u64)
        .into_par_iter()
        .fold(
            || vec![0u64; m],
            |mut acc, i| {
                for e in wilson_sample(g, seed, i) {
                    acc[e] += 1;
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; m],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let n = samples as f64;
    let marginals: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let standard_errors = marginals.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect();
    Ok(MonteCarloMarginals { samples, marginals, standard_errors })
}

/// Edge marginals of a uniform spanning tree together with the induced
/// function `f_mu(g) = P({e, g} in tree)` on `S` when the graph is a Cayley
/// graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestMarginals {
    pub vertex_count: usize,
    pub edges: Vec<(usize, usize)>,
    pub marginals: Vec<f64>,
    /// Vertex-transitive input (a Cayley graph), so `f_mu` is defined.
    pub transitive: bool,
    /// `(g, f_mu(g))` for the generators `g`.
    pub f_mu: Vec<(String, f64)>,
    pub deg: f64,
    pub width: usize,
}

impl ForestMarginals {
    pub fn marginal_sum(&self) -> f64 {
        self.marginals.iter().sum()
    }

    /// Marginals of an arbitrary graph: no `f_mu`.
    pub fn from_graph(g: &SimpleGraph) -> Result<Self> {
        let marginals = ust_marginals_exact(g)?;
        Ok(ForestMarginals {
            vertex_count: g.vertex_count(),
            edges: g.edges().to_vec(),
            marginals,
            transitive: false,
            f_mu: Vec::new(),
            deg: 0.0,
            width: 0,
        })
    }
}

/// The full Cayley graph of a finite group (vertex 0 is the identity).
pub fn cayley_graph(backend: &GroupBackend, s: &SymmetricSet) -> Result<(SimpleGraph, Vec<crate::groups::Element>)> {
    if !backend.is_finite() {
        return Err(Error::Unsupported(format!("{} is infinite", backend.label())));
    }
    let b = ball(backend, s, usize::MAX);
    let verts = b.elements().to_vec();
    Ok((SimpleGraph::induced_cayley(backend, s, &verts)?, verts))
}

/// Exact marginals for `Cay(<S>, S)`.
pub fn cayley_forest_marginals(backend: &GroupBackend, s: &SymmetricSet) -> Result<ForestMarginals> {
    let (g, verts) = cayley_graph(backend, s)?;
    let marginals = ust_marginals_exact(&g)?;
    let id = backend.identity();
    let index: std::collections::HashMap<_, _> = verts.iter().enumerate().map(|(i, x)| (x, i)).collect();
    let f_mu: Vec<(String, f64)> = s
        .elements()
        .iter()
        .filter(|x| **x != id)
        .map(|x| {
            let e = g.edge_index(0, index[x]).expect("generator edge");
            (x.to_string(), marginals[e])
        })
        .collect();
    let deg = f_mu.iter().map(|(_, v)| v).sum();
    let width = f_mu.iter().filter(|(_, v)| *v > 0.0).count();
    Ok(ForestMarginals {
        vertex_count: g.vertex_count(),
        edges: g.edges().to_vec(),
        marginals,
        transitive: true,
        f_mu,
        deg,
        width,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestCheck {
    pub p: f64,
    pub norm: f64,
    pub bound: f64,
    pub slack: f64,
    pub holds: bool,
    /// `f_mu` is constant on its support, the equality case of Holder.
    pub constant: bool,
}

/// Checks `||f_mu||_p >= deg(mu) width(mu)^{-(p-1)/p}`. The companion bound
/// `||f_mu||_{T_1} <= 2` is a cited fact and not recomputed here.
pub fn forest_inequality_check(m: &ForestMarginals, p: f64) -> Result<ForestCheck> {
    if !m.transitive {
        return Err(Error::Refused("forest inequality needs a vertex-transitive graph".into()));
    }
    if p.is_nan() || p < 1.0 {
        return Err(Error::Parameter(format!("p must be >= 1, got {p}")));
    }
    let values: Vec<f64> = m.f_mu.iter().map(|(_, v)| *v).filter(|v| *v > 0.0).collect();
    let norm = crate::littlewood::lp_norm_values(&values, p)?;
    let bound = m.deg * (m.width as f64).powf(-(p - 1.0) / p);
    let first = values.first().copied().unwrap_or(0.0);
    Ok(ForestCheck {
        p,
        norm,
        bound,
        slack: norm - bound,
        holds: norm >= bound * (1.0 - 1e-12),
        constant: values.iter().all(|v| (v - first).abs() <= 1e-9),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{build_symmetric_set, GroupDescriptor, SetDescriptor};
    use approx::assert_abs_diff_eq;

    /// Effective resistances from a dense pseudoinverse-free route: ground
    /// vertex 0 and invert the reduced Laplacian by Gauss-Jordan elimination.
    fn dense_resistances(g: &SimpleGraph) -> Vec<f64> {
        let n = g.vertex_count() - 1;
        let mut a = vec![vec![0.0; 2 * n]; n];
        for v in 1..=n {
            a[v - 1][v - 1] = g.degree(v) as f64;
            for &u in g.neighbours(v) {
                if u != 0 {
                    a[v - 1][u - 1] -= 1.0;
                }
            }
            a[v - 1][n + v - 1] = 1.0;
        }
        for c in 0..n {
            let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, piv);
            let d = a[c][c];
            a[c].iter_mut().for_each(|x| *x /= d);
            for r in 0..n {
                if r != c {
                    let f = a[r][c];
                    let row = a[c].clone();
                    a[r].iter_mut().zip(&row).for_each(|(x, y)| *x -= f * y);
                }
            }
        }
        let ginv = |i: usize, j: usize| if i == 0 || j == 0 { 0.0 } else { a[i - 1][n + j - 1] };
        g.edges().iter().map(|&(u, v)| ginv(u, u) + ginv(v, v) - 2.0 * ginv(u, v)).collect()
    }

    fn klein() -> (GroupBackend, SymmetricSet) {
        let g = GroupBackend::from_descriptor(&GroupDescriptor::Permutation {
            generators: vec![vec![1, 0, 3, 2], vec![2, 3, 0, 1]],
        })
        .unwrap();
        let s = build_symmetric_set(&g, &SetDescriptor::BallMinusIdentity { radius: 2, generators: None }).unwrap();
        (g, s)
    }

    #[test]
    fn small_graph_marginals() {
        for v in ust_marginals_exact(&SimpleGraph::complete(4)).unwrap() {
            assert_abs_diff_eq!(v, 0.5, epsilon = 1e-10);
        }
        for v in ust_marginals_exact(&SimpleGraph::path(3)).unwrap() {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-10);
        }
        for v in ust_marginals_exact(&SimpleGraph::cycle(4)).unwrap() {
            assert_abs_diff_eq!(v, 0.75, epsilon = 1e-10);
        }
        let disconnected = SimpleGraph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert!(ust_marginals_exact(&disconnected).is_err());
    }

    #[test]
    fn marginals_match_dense_solver() {
        let g = SimpleGraph::parse_edge_list("0 1\n1 2\n2 0\n2 3\n3 4\n4 5\n5 3\n1 4\n0 6\n").unwrap();
        let cg = ust_marginals_exact(&g).unwrap();
        let dense = dense_resistances(&g);
        for (a, b) in cg.iter().zip(&dense) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(cg.iter().sum::<f64>(), 6.0, epsilon = 1e-9);
    }

    #[test]
    fn wilson_trees() {
        let g = SimpleGraph::cycle(4);
        for i in 0..20 {
            let t = wilson_sample(&g, 3, i);
            assert_eq!(t.len(), 3);
            let tree = SimpleGraph::from_edges(4, t.iter().map(|&e| g.edges()[e])).unwrap();
            assert!(tree.is_connected());
        }
        assert_eq!(wilson_sample(&g, 9, 4), wilson_sample(&g, 9, 4));
    }

    #[test]
    fn monte_carlo_close_to_exact() {
        let g = SimpleGraph::complete(4);
        let mc = monte_carlo_marginals(&g, 10_000, 1).unwrap();
        let se = (0.25f64 / 10_000.0).sqrt();
        for v in &mc.marginals {
            assert!((v - 0.5).abs() <= 3.0 * se);
        }
        assert_abs_diff_eq!(mc.marginals.iter().sum::<f64>(), 3.0, epsilon = 1e-9);
    }

    #[test]
    fn forest_inequality_equality_cases() {
        let (g, s) = klein();
        let m = cayley_forest_marginals(&g, &s).unwrap();
        assert_eq!(m.width, 3);
        assert_abs_diff_eq!(m.deg, 1.5, epsilon = 1e-10);
        let c = forest_inequality_check(&m, 2.0).unwrap();
        assert_abs_diff_eq!(c.norm, 3f64.sqrt() / 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(c.slack, 0.0, epsilon = 1e-9);
        assert!(c.constant);

        let z4 = GroupBackend::cyclic(4);
        let m = cayley_forest_marginals(&z4, &SymmetricSet::standard(&z4).unwrap()).unwrap();
        let c = forest_inequality_check(&m, 2.0).unwrap();
        assert_abs_diff_eq!(c.norm, (9.0f64 / 8.0).sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(c.slack, 0.0, epsilon = 1e-9);

        let plain = ForestMarginals::from_graph(&SimpleGraph::cycle(4)).unwrap();
        assert!(matches!(forest_inequality_check(&plain, 2.0), Err(Error::Refused(_))));
    }

    #[test]
    fn forest_inequality_general_p() {
        let z6 = GroupBackend::cyclic(6);
        let s = build_symmetric_set(
            &z6,
            &SetDescriptor::Explicit { words: vec!["a".into(), "A".into(), "a^3".into()] },
        )
        .unwrap();
        let m = cayley_forest_marginals(&z6, &s).unwrap();
        assert_abs_diff_eq!(m.marginal_sum(), 5.0, epsilon = 1e-9);
        for p in [1.0, 1.5, 2.0, 3.0] {
            assert!(forest_inequality_check(&m, p).unwrap().holds);
        }
    }
}
