use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};

/// Finite group given by its multiplication table: row `g`, column `h` holds
/// the index of `g*h`.
#[derive(Clone, Debug)]
pub struct CayleyTable {
    rows: Vec<Vec<u32>>,
    identity: u32,
    inverses: Vec<u32>,
    generators: Vec<u32>,
}

/// Tables up to this order get the full O(n^3) associativity check.
const FULL_CHECK_MAX: usize = 64;
const SAMPLED_TRIPLES: usize = 10_000;
const SAMPLE_SEED: u64 = 0x5eed_7ab1e;

impl CayleyTable {
    /// Parses `n` rows of `n` comma-separated 0-based indices.
    pub fn from_csv(text: &str, generators: Option<Vec<u32>>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::Table(e.to_string()))?;
            let row = rec
                .iter()
                .map(|s| s.parse::<u32>().map_err(|_| Error::Table(format!("bad entry `{s}`"))))
                .collect::<Result<Vec<u32>>>()?;
            rows.push(row);
        }
        Self::new(rows, generators)
    }

    /// Validates the table and builds the backend. `generators` defaults to
    /// every non-identity element.
    pub fn new(rows: Vec<Vec<u32>>, generators: Option<Vec<u32>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Table("empty table".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Table(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            let mut seen = vec![false; n];
            for &v in row {
                if v as usize >= n {
                    return Err(Error::Table(format!("entry {v} out of range in row {i}")));
                }
                if seen[v as usize] {
                    return Err(Error::Table(format!("row {i} repeats {v}")));
                }
                seen[v as usize] = true;
            }
        }
        for j in 0..n {
            let mut seen = vec![false; n];
            for row in &rows {
                let v = row[j] as usize;
                if seen[v] {
                    return Err(Error::Table(format!("column {j} repeats {v}")));
                }
                seen[v] = true;
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|g| rows[e][g] as usize == g && rows[g][e] as usize == g))
            .ok_or_else(|| Error::Table("no identity element".into()))? as u32;
        let assoc = |a: usize, b: usize, c: usize| {
            rows[rows[a][b] as usize][c] == rows[a][rows[b][c] as usize]
        };
        if n <= FULL_CHECK_MAX {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if !assoc(a, b, c) {
                            return Err(Error::Table(format!(
                                "associativity fails at ({a},{b},{c})"
                            )));
                        }
                    }
                }
            }
        } else {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
            for _ in 0..SAMPLED_TRIPLES {
                let (a, b, c) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                if !assoc(a, b, c) {
                    return Err(Error::Table(format!("associativity fails at ({a},{b},{c})")));
                }
            }
        }
        let inverses = (0..n)
            .map(|g| rows[g].iter().position(|&v| v == identity).unwrap() as u32)
            .collect();
        let generators = match generators {
            Some(gens) => {
                if gens.is_empty() || gens.iter().any(|&g| g as usize >= n) {
                    return Err(Error::Table("generator index out of range".into()));
                }
                gens
            }
            None => (0..n as u32).filter(|&g| g != identity).collect(),
        };
        if generators.is_empty() {
            // Trivial group: keep the identity as the lone letter.
            return Ok(CayleyTable { rows, identity, inverses, generators: vec![identity] });
        }
        Ok(CayleyTable { rows, identity, inverses, generators })
    }

    pub fn order(&self) -> usize {
        self.rows.len()
    }

    pub fn identity(&self) -> u32 {
        self.identity
    }

    pub fn product(&self, a: u32, b: u32) -> u32 {
        self.rows[a as usize][b as usize]
    }

    pub fn inverse(&self, a: u32) -> u32 {
        self.inverses[a as usize]
    }

    pub fn generators(&self) -> &[u32] {
        &self.generators
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    /// Table of a permutation group, rows indexed by sorted image lists.
    pub fn from_permutations(generators: &[Vec<u32>]) -> Result<Self> {
        let g = super::PermutationGroup::new(generators.to_vec())?;
        let backend = super::GroupBackend::Permutation(g);
        let mut elems: Vec<super::Element> = {
            let s = super::SymmetricSet::standard(&backend)?;
            super::ball(&backend, &s, usize::MAX).elements().to_vec()
        };
        elems.sort();
        let index: std::collections::HashMap<&super::Element, u32> =
            elems.iter().enumerate().map(|(i, x)| (x, i as u32)).collect();
        let rows = elems
            .iter()
            .map(|x| elems.iter().map(|y| index[&backend.multiply(x, y)]).collect())
            .collect();
        let gens = generators
            .iter()
            .map(|p| index[&super::Element::Perm(p.clone())])
            .collect();
        Self::new(rows, Some(gens))
    }
}
