//! Degeneracy-order greedy colouring and the colouring experiment on Cayley
//! balls.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cayley::analytic_cheeger;
use crate::error::{Error, Result};
use crate::graph::SimpleGraph;
use crate::groups::{ball, GroupBackend, SymmetricSet};
use crate::provenance::Rational;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColouringReport {
    pub vertices: usize,
    pub edges: usize,
    pub degeneracy: usize,
    pub colours_used: usize,
    pub colours: Vec<usize>,
    pub proper: bool,
    /// Upper bound for `mad` of the graph, when supplied.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mad_bound: Option<Rational>,
    /// `colours_used <= floor(mad_bound) + 1`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub within_mad_bound: Option<bool>,
}

impl ColouringReport {
    pub fn with_mad_bound(mut self, mad: Rational) -> Self {
        self.within_mad_bound = Some(self.colours_used as i64 <= mad.floor().to_integer() + 1);
        self.mad_bound = Some(mad);
        self
    }
}

/// No edge joins two vertices of the same colour.
pub fn is_proper(g: &SimpleGraph, colours: &[usize]) -> bool {
    g.edges().iter().all(|&(u, v)| colours[u] != colours[v])
}

/// Repeatedly removes a vertex of minimum remaining degree, ties going to the
/// smallest `rank`, then colours greedily in reverse removal order. Each
/// vertex sees at most `degeneracy` coloured neighbours when it is coloured.
pub fn degeneracy_colouring_ranked(g: &SimpleGraph, rank: &[usize]) -> Result<ColouringReport> {
    if g.loop_count() > 0 {
        return Err(Error::Input("graph has loops; remove the identity from S first".into()));
    }
    let n = g.vertex_count();
    let mut degree: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut queue: BTreeSet<(usize, usize, usize)> = (0..n).map(|v| (degree[v], rank[v], v)).collect();
    let mut removed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut degeneracy = 0;
    while let Some((d, _, v)) = queue.pop_first() {
        degeneracy = degeneracy.max(d);
        removed[v] = true;
        order.push(v);
        for &u in g.neighbours(v) {
            if !removed[u] {
                queue.remove(&(degree[u], rank[u], u));
                degree[u] -= 1;
                queue.insert((degree[u], rank[u], u));
            }
        }
    }
    let mut colours = vec![usize::MAX; n];
    for &v in order.iter().rev() {
        let taken: BTreeSet<usize> = g.neighbours(v).iter().map(|&u| colours[u]).filter(|&c| c != usize::MAX).collect();
        colours[v] = (0..).find(|c| !taken.contains(c)).unwrap();
    }
    let colours_used = colours.iter().max().map_or(0, |c| c + 1);
    Ok(ColouringReport {
        vertices: n,
        edges: g.edge_count(),
        degeneracy,
        colours_used,
        proper: is_proper(g, &colours),
        colours,
        mad_bound: None,
        within_mad_bound: None,
    })
}

/// [`degeneracy_colouring_ranked`] with ties broken by vertex index.
pub fn degeneracy_colouring(g: &SimpleGraph) -> Result<ColouringReport> {
    degeneracy_colouring_ranked(g, &(0..g.vertex_count()).collect::<Vec<_>>())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColourcorReport {
    pub colouring: ColouringReport,
    pub s_size: usize,
    pub alpha: f64,
    /// `floor(|S|^{1/alpha})`.
    pub target: u64,
    pub meets_target: bool,
}

/// Colours the ball of radius `radius` in `Cay(G, S \ {e})`, ties broken by
/// canonical element encoding. The mad bound is `|S| - h` with the analytic
/// `h` when known, else the trivial `|S|`.
pub fn colourcor_experiment(backend: &GroupBackend, s: &SymmetricSet, alpha: f64, radius: usize) -> Result<ColourcorReport> {
    if !(alpha > 0.0) {
        return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
    }
    let s = s.without_identity(backend)?;
    let b = ball(backend, &s, radius);
    let g = SimpleGraph::induced_cayley(backend, &s, b.elements())?;
    let mut idx: Vec<usize> = (0..b.len()).collect();
    let keys: Vec<Vec<u8>> = b.elements().iter().map(|x| x.encode()).collect();
    idx.sort_by(|&i, &j| keys[i].cmp(&keys[j]));
    let mut rank = vec![0; b.len()];
    for (r, &i) in idx.iter().enumerate() {
        rank[i] = r;
    }
    let size = Rational::from_integer(s.len() as i64);
    let mad = analytic_cheeger(backend, &s).map_or(size, |h| size - h);
    let colouring = degeneracy_colouring_ranked(&g, &rank)?.with_mad_bound(mad);
    let target = ((s.len() as f64).powf(1.0 / alpha) + 1e-12).floor() as u64;
    Ok(ColourcorReport {
        meets_target: colouring.colours_used as u64 <= target,
        colouring,
        s_size: s.len(),
        alpha,
        target,
    })
}
