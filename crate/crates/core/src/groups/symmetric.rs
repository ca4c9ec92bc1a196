//! Symmetric generating sets and word-metric balls.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Element, GroupBackend};
use crate::error::{Error, Result};

/// Finite inverse-closed set `S` without duplicates. Order is preserved as
/// built; the identity is allowed and produces loops.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricSet {
    elements: Vec<Element>,
    contains_identity: bool,
}

impl SymmetricSet {
    pub fn new(backend: &GroupBackend, elements: Vec<Element>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptySet);
        }
        let members: HashSet<&Element> = elements.iter().collect();
        if members.len() != elements.len() {
            return Err(Error::Input("duplicate element in generating set".into()));
        }
        for x in &elements {
            let inv = backend.inverse(x);
            if !members.contains(&inv) {
                return Err(Error::NotSymmetric(format!("{x} has no inverse {inv} in the set")));
            }
        }
        let id = backend.identity();
        let contains_identity = members.contains(&id);
        Ok(SymmetricSet { elements, contains_identity })
    }

    /// Standard generators together with their inverses.
    pub fn standard(backend: &GroupBackend) -> Result<Self> {
        let mut out: Vec<Element> = Vec::new();
        for i in 0..backend.generator_count() {
            let g = backend.generator(i);
            let gi = backend.inverse(&g);
            for x in [g, gi] {
                if !out.contains(&x) {
                    out.push(x);
                }
            }
        }
        Self::new(backend, out)
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains_identity(&self) -> bool {
        self.contains_identity
    }

    pub fn contains(&self, x: &Element) -> bool {
        self.elements.contains(x)
    }

    /// The same set with the identity removed (loop-free Cayley graph).
    pub fn without_identity(&self, backend: &GroupBackend) -> Result<Self> {
        let id = backend.identity();
        let rest: Vec<Element> = self.elements.iter().filter(|x| **x != id).cloned().collect();
        Self::new(backend, rest)
    }

    /// Whether this set is exactly the standard generating set (in any order).
    pub fn is_standard(&self, backend: &GroupBackend) -> bool {
        match Self::standard(backend) {
            Ok(std) => {
                std.len() == self.len() && std.elements.iter().all(|x| self.elements.contains(x))
            }
            Err(_) => false,
        }
    }

    /// Stable digest of the set, for cache keys.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for x in &self.elements {
            let e = x.encode();
            h.update((e.len() as u64).to_le_bytes());
            h.update(e);
        }
        hex::encode(h.finalize())
    }
}

/// Elements within word distance `radius` of the identity, in breadth-first
/// order.
#[derive(Clone, Debug)]
pub struct Ball {
    elements: Vec<Element>,
    index: HashMap<Element, usize>,
    layer_starts: Vec<usize>,
    saturated: bool,
}

impl Ball {
    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn index_of(&self, x: &Element) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn contains(&self, x: &Element) -> bool {
        self.index.contains_key(x)
    }

    /// Radius actually reached (number of nonempty layers minus one).
    pub fn radius(&self) -> usize {
        self.layer_starts.len() - 1
    }

    /// Layer `r`: the elements at distance exactly `r`.
    pub fn layer(&self, r: usize) -> &[Element] {
        if r >= self.layer_starts.len() {
            return &[];
        }
        let start = self.layer_starts[r];
        let end = self.layer_starts.get(r + 1).copied().unwrap_or(self.elements.len());
        &self.elements[start..end]
    }

    /// Word distance of the element at position `i`.
    pub fn distance_of_index(&self, i: usize) -> usize {
        self.layer_starts.partition_point(|&s| s <= i) - 1
    }

    /// True when the breadth-first search ran out of new elements, i.e. the
    /// ball is the whole subgroup generated by `S`.
    pub fn is_saturated(&self) -> bool {
        self.saturated
    }
}

static CACHE_DIR: RwLock<Option<PathBuf>> = RwLock::new(None);

/// Balls with at least this many elements are written to the cache.
pub const CACHE_MIN_ELEMENTS: usize = 4096;

/// Directory for cached balls; `None` disables caching.
pub fn set_ball_cache_dir(dir: Option<PathBuf>) {
    *CACHE_DIR.write().unwrap() = dir;
}

#[derive(Serialize, Deserialize)]
struct CachedBall {
    elements: Vec<Element>,
    layer_starts: Vec<usize>,
    saturated: bool,
}

/// Cache file name: hash of crate version, group descriptor, `S` and radius.
pub fn ball_cache_key(backend: &GroupBackend, s: &SymmetricSet, radius: usize) -> String {
    let mut h = Sha256::new();
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    h.update(serde_json::to_vec(&backend.descriptor()).unwrap_or_default());
    h.update(s.digest().as_bytes());
    h.update(radius.to_le_bytes());
    hex::encode(h.finalize())
}

fn cache_read(path: &Path) -> Option<Ball> {
    let c: CachedBall = serde_json::from_slice(&std::fs::read(path).ok()?).ok()?;
    if c.layer_starts.first() != Some(&0) {
        return None;
    }
    let index = c.elements.iter().cloned().enumerate().map(|(i, x)| (x, i)).collect();
    Some(Ball { elements: c.elements, index, layer_starts: c.layer_starts, saturated: c.saturated })
}

fn cache_write(path: &Path, b: &Ball) {
    let c = CachedBall { elements: b.elements.clone(), layer_starts: b.layer_starts.clone(), saturated: b.saturated };
    let Ok(bytes) = serde_json::to_vec(&c) else { return };
    // Write then rename so concurrent readers never see a partial file.
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    if std::fs::write(&tmp, bytes).is_ok() && std::fs::rename(&tmp, path).is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
}

/// Breadth-first ball of the given radius. Deterministic: within a layer,
/// elements appear in discovery order following the order of `S`. Large
/// balls go through the file cache when one is configured.
pub fn ball(backend: &GroupBackend, s: &SymmetricSet, radius: usize) -> Ball {
    let dir = CACHE_DIR.read().unwrap().clone();
    let Some(dir) = dir else { return build_ball(backend, s, radius) };
    let path = dir.join(format!("{}.json", ball_cache_key(backend, s, radius)));
    if let Some(b) = cache_read(&path) {
        return b;
    }
    let b = build_ball(backend, s, radius);
    if b.len() >= CACHE_MIN_ELEMENTS && std::fs::create_dir_all(&dir).is_ok() {
        cache_write(&path, &b);
    }
    b
}

fn build_ball(backend: &GroupBackend, s: &SymmetricSet, radius: usize) -> Ball {
    let id = backend.identity();
    let mut elements = vec![id.clone()];
    let mut index: HashMap<Element, usize> = HashMap::new();
    index.insert(id, 0);
    let mut layer_starts = vec![0usize];
    let mut saturated = false;
    let mut r = 0;
    while r < radius {
        let start = layer_starts[r];
        let end = elements.len();
        let mut fresh = Vec::new();
        for i in start..end {
            for g in s.elements() {
                let y = backend.multiply(&elements[i], g);
                if !index.contains_key(&y) {
                    index.insert(y.clone(), end + fresh.len());
                    fresh.push(y);
                }
            }
        }
        if fresh.is_empty() {
            saturated = true;
            break;
        }
        layer_starts.push(end);
        elements.extend(fresh);
        r += 1;
    }
    if !saturated && radius != usize::MAX {
        // One more probe decides whether the ball already is the whole group.
        let start = layer_starts[r];
        saturated = elements[start..]
            .iter()
            .all(|x| s.elements().iter().all(|g| index.contains_key(&backend.multiply(x, g))));
    }
    Ball { elements, index, layer_starts, saturated }
}

/// Elements at distance exactly `radius`.
pub fn sphere(backend: &GroupBackend, s: &SymmetricSet, radius: usize) -> Vec<Element> {
    let b = ball(backend, s, radius);
    if b.radius() < radius {
        return Vec::new();
    }
    b.layer(radius).to_vec()
}

/// Recipe for a symmetric set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SetDescriptor {
    /// Standard generators and inverses.
    Standard,
    /// Listed words; must already be inverse-closed.
    Explicit { words: Vec<String> },
    /// `ball(R) \ {e}` measured in the metric of `generators` (default standard).
    BallMinusIdentity {
        radius: usize,
        #[serde(default)]
        generators: Option<Box<SetDescriptor>>,
    },
    Sphere {
        radius: usize,
        #[serde(default)]
        generators: Option<Box<SetDescriptor>>,
    },
    /// Product set `S^k = {s_1 ... s_k}`.
    Power {
        base: Box<SetDescriptor>,
        k: usize,
        #[serde(default)]
        drop_identity: bool,
    },
    /// Seeded random symmetric subset of `ball(R) \ {e}` with about `size`
    /// elements (inverse pairs are added together).
    Random {
        radius: usize,
        size: usize,
        seed: u64,
        #[serde(default)]
        generators: Option<Box<SetDescriptor>>,
        #[serde(default)]
        with_identity: bool,
    },
}

fn metric_set(backend: &GroupBackend, generators: &Option<Box<SetDescriptor>>) -> Result<SymmetricSet> {
    match generators {
        Some(d) => build_symmetric_set(backend, d),
        None => SymmetricSet::standard(backend),
    }
}

/// Builds a symmetric set from a descriptor.
pub fn build_symmetric_set(backend: &GroupBackend, desc: &SetDescriptor) -> Result<SymmetricSet> {
    let id = backend.identity();
    match desc {
        SetDescriptor::Standard => SymmetricSet::standard(backend),
        SetDescriptor::Explicit { words } => {
            let elems = words
                .iter()
                .map(|w| backend.evaluate_str(w))
                .collect::<Result<Vec<_>>>()?;
            SymmetricSet::new(backend, elems)
        }
        SetDescriptor::BallMinusIdentity { radius, generators } => {
            let metric = metric_set(backend, generators)?;
            let b = ball(backend, &metric, *radius);
            let elems: Vec<Element> = b.elements().iter().filter(|x| **x != id).cloned().collect();
            SymmetricSet::new(backend, elems)
        }
        SetDescriptor::Sphere { radius, generators } => {
            let metric = metric_set(backend, generators)?;
            SymmetricSet::new(backend, sphere(backend, &metric, *radius))
        }
        SetDescriptor::Power { base, k, drop_identity } => {
            let base = build_symmetric_set(backend, base)?;
            let mut current: Vec<Element> = vec![id.clone()];
            for _ in 0..*k {
                let mut seen: HashSet<Element> = HashSet::new();
                let mut next = Vec::new();
                for x in &current {
                    for g in base.elements() {
                        let y = backend.multiply(x, g);
                        if seen.insert(y.clone()) {
                            next.push(y);
                        }
                    }
                }
                current = next;
            }
            if *drop_identity {
                current.retain(|x| *x != id);
            }
            SymmetricSet::new(backend, current)
        }
        SetDescriptor::Random { radius, size, seed, generators, with_identity } => {
            let metric = metric_set(backend, generators)?;
            let b = ball(backend, &metric, *radius);
            let mut pool: Vec<Element> =
                b.elements().iter().filter(|x| **x != id).cloned().collect();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
            pool.shuffle(&mut rng);
            let mut chosen: Vec<Element> = Vec::new();
            if *with_identity {
                chosen.push(id.clone());
            }
            for x in pool {
                if chosen.len() >= *size + usize::from(*with_identity) {
                    break;
                }
                if chosen.contains(&x) {
                    continue;
                }
                let xi = backend.inverse(&x);
                chosen.push(x.clone());
                if xi != x {
                    chosen.push(xi);
                }
            }
            SymmetricSet::new(backend, chosen)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_ball_sizes() {
        let g = GroupBackend::free(2);
        let s = SymmetricSet::standard(&g).unwrap();
        assert_eq!(s.len(), 4);
        // 1 + 2m((2m-1)^r - 1)/(2m-2)
        for r in 0..6usize {
            let expected = 1 + 4 * (3usize.pow(r as u32) - 1) / 2;
            assert_eq!(ball(&g, &s, r).len(), expected);
        }
        assert_eq!(ball(&g, &s, 2).len(), 17);
    }

    #[test]
    fn integer_and_cyclic_balls() {
        let z = GroupBackend::free_abelian(1);
        let s = SymmetricSet::standard(&z).unwrap();
        assert_eq!(ball(&z, &s, 3).len(), 7);
        assert!(!ball(&z, &s, 3).is_saturated());
        let c = GroupBackend::cyclic(6);
        let s = SymmetricSet::standard(&c).unwrap();
        let b = ball(&c, &s, 3);
        assert_eq!(b.len(), 6);
        assert!(b.is_saturated());
        assert_eq!(b.distance_of_index(5), 3);
    }

    #[test]
    fn descriptors() {
        let g = GroupBackend::free(2);
        let s = build_symmetric_set(&g, &SetDescriptor::BallMinusIdentity { radius: 1, generators: None })
            .unwrap();
        assert_eq!(s.len(), 4);
        assert!(s.is_standard(&g));
        let s = build_symmetric_set(&g, &SetDescriptor::Explicit { words: vec!["a".into(), "a^-1".into()] })
            .unwrap();
        assert_eq!(s.len(), 2);
        let err = build_symmetric_set(&g, &SetDescriptor::Explicit { words: vec!["a".into()] });
        assert!(matches!(err, Err(Error::NotSymmetric(_))));
        let err = build_symmetric_set(&g, &SetDescriptor::Explicit { words: vec![] });
        assert!(matches!(err, Err(Error::EmptySet)));
        let err = build_symmetric_set(
            &g,
            &SetDescriptor::Explicit { words: vec!["a".into(), "A".into(), "a".into()] },
        );
        assert!(matches!(err, Err(Error::Input(_))));
        let s = build_symmetric_set(&g, &SetDescriptor::Sphere { radius: 2, generators: None }).unwrap();
        assert_eq!(s.len(), 12);
        let s = build_symmetric_set(
            &g,
            &SetDescriptor::Power { base: Box::new(SetDescriptor::Standard), k: 2, drop_identity: false },
        )
        .unwrap();
        assert_eq!(s.len(), 13);
        assert!(s.contains_identity());
    }

    #[test]
    fn random_sets_are_symmetric_and_seeded() {
        let g = GroupBackend::lamplighter();
        let d = SetDescriptor::Random { radius: 3, size: 7, seed: 9, generators: None, with_identity: true };
        let a = build_symmetric_set(&g, &d).unwrap();
        let b = build_symmetric_set(&g, &d).unwrap();
        assert_eq!(a, b);
        assert!(a.contains_identity());
        for x in a.elements() {
            assert!(a.contains(&g.inverse(x)));
        }
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = GroupBackend::lamplighter();
        let s = SymmetricSet::standard(&g).unwrap();
        let b = build_ball(&g, &s, 4);
        let path = dir.path().join(format!("{}.json", ball_cache_key(&g, &s, 4)));
        cache_write(&path, &b);
        let c = cache_read(&path).unwrap();
        assert_eq!(c.elements(), b.elements());
        assert_eq!(c.radius(), b.radius());
        assert_eq!(c.index_of(&b.elements()[7]), Some(7));
        assert_ne!(ball_cache_key(&g, &s, 4), ball_cache_key(&g, &s, 5));
        std::fs::write(&path, b"not json").unwrap();
        assert!(cache_read(&path).is_none());
    }
}
