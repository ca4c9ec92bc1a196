use std::collections::{HashSet, VecDeque};

use super::Element;
use crate::error::{Error, Result};

/// Permutation group given by one-line image lists of its generators.
#[derive(Clone, Debug)]
pub struct PermutationGroup {
    degree: usize,
    generators: Vec<Vec<u32>>,
    order: u64,
}

/// `(x * y)[i] = x[y[i]]`.
pub(crate) fn compose(x: &[u32], y: &[u32]) -> Vec<u32> {
    y.iter().map(|&i| x[i as usize]).collect()
}

pub(crate) fn invert(x: &[u32]) -> Vec<u32> {
    let mut out = vec![0; x.len()];
    for (i, &v) in x.iter().enumerate() {
        out[v as usize] = i as u32;
    }
    out
}

const MAX_ORDER: usize = 5_000_000;

impl PermutationGroup {
    pub fn new(generators: Vec<Vec<u32>>) -> Result<Self> {
        let degree = generators.first().map(|g| g.len()).unwrap_or(0);
        if generators.is_empty() || degree == 0 {
            return Err(Error::Input("permutation group needs at least one generator".into()));
        }
        for g in &generators {
            if g.len() != degree {
                return Err(Error::Input("generators have different degrees".into()));
            }
            let mut seen = vec![false; degree];
            for &v in g {
                if v as usize >= degree || seen[v as usize] {
                    return Err(Error::Input(format!("{g:?} is not a permutation")));
                }
                seen[v as usize] = true;
            }
        }
        // Orbit enumeration of the generated group; fine at desk scale.
        let id: Vec<u32> = (0..degree as u32).collect();
        let mut seen: HashSet<Vec<u32>> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(id.clone());
        queue.push_back(id);
        while let Some(x) = queue.pop_front() {
            for g in &generators {
                let y = compose(&x, g);
                if seen.insert(y.clone()) {
                    if seen.len() > MAX_ORDER {
                        return Err(Error::Unsupported(format!(
                            "permutation group larger than {MAX_ORDER}"
                        )));
                    }
                    queue.push_back(y);
                }
            }
        }
        Ok(PermutationGroup { degree, generators, order: seen.len() as u64 })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn generators(&self) -> &[Vec<u32>] {
        &self.generators
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn identity(&self) -> Element {
        Element::Perm((0..self.degree as u32).collect())
    }
}
