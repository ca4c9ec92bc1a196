//! Group backends with canonical normal forms.
//!
//! Every backend encodes its elements in a unique normal form, so two words
//! represent the same group element iff their [`Element`]s compare equal (and
//! iff their [`Element::encode`] byte strings are identical).

mod free;
mod free_product;
mod hom;
mod lamplighter;
mod perm;
mod symmetric;
mod table;

pub use hom::Homomorphism;
pub use perm::PermutationGroup;
pub use symmetric::{
    ball, ball_cache_key, build_symmetric_set, set_ball_cache_dir, sphere, Ball, SetDescriptor, SymmetricSet,
    CACHE_MIN_ELEMENTS,
};
pub use table::CayleyTable;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical encoding of a group element. The variant is fixed by the backend.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    /// Freely reduced word; letter `i` is `+(i+1)`, its inverse `-(i+1)`.
    Reduced(Vec<i32>),
    Vector(Vec<i64>),
    Residue(u64),
    /// Image list `i -> p[i]`.
    Perm(Vec<u32>),
    /// Alternating syllables `(factor, exponent)` with exponent in `1..order`.
    Syllables(Vec<(u32, u32)>),
    /// Finite set of lit lamps (sorted) and the cursor position.
    Lamps { lamps: Vec<i64>, cursor: i64 },
    /// Row index in a multiplication table.
    Index(u32),
}

impl Element {
    /// Byte encoding; equal elements and only equal elements share it.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            Element::Reduced(w) => {
                out.push(0);
                for x in w {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
            Element::Vector(v) => {
                out.push(1);
                for x in v {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
            Element::Residue(r) => {
                out.push(2);
                out.extend_from_slice(&r.to_le_bytes());
            }
            Element::Perm(p) => {
                out.push(3);
                for x in p {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
            Element::Syllables(s) => {
                out.push(4);
                for (f, e) in s {
                    out.extend_from_slice(&f.to_le_bytes());
                    out.extend_from_slice(&e.to_le_bytes());
                }
            }
            Element::Lamps { lamps, cursor } => {
                out.push(5);
                out.extend_from_slice(&cursor.to_le_bytes());
                for x in lamps {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
            Element::Index(i) => {
                out.push(6);
                out.extend_from_slice(&i.to_le_bytes());
            }
        }
        out
    }
}

impl std::fmt::Display for Element {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Element::Reduced(w) if w.is_empty() => write!(f, "e"),
            Element::Reduced(w) => {
                for &x in w {
                    let c = (b'a' + (x.unsigned_abs() as u8 - 1) % 26) as char;
                    if x > 0 {
                        write!(f, "{c}")?;
                    } else {
                        write!(f, "{}", c.to_ascii_uppercase())?;
                    }
                }
                Ok(())
            }
            Element::Vector(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "({})", parts.join(","))
            }
            Element::Residue(r) => write!(f, "{r}"),
            Element::Perm(p) => {
                let parts: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                write!(f, "[{}]", parts.join(" "))
            }
            Element::Syllables(s) if s.is_empty() => write!(f, "e"),
            Element::Syllables(s) => {
                for (k, e) in s {
                    write!(f, "{}^{}", (b'a' + (*k as u8) % 26) as char, e)?;
                }
                Ok(())
            }
            Element::Lamps { lamps, cursor } => {
                let parts: Vec<String> = lamps.iter().map(|x| x.to_string()).collect();
                write!(f, "({{{}}},{})", parts.join(","), cursor)
            }
            Element::Index(i) => write!(f, "g{i}"),
        }
    }
}

/// One letter of a word: a generator or its formal inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub generator: usize,
    pub inverse: bool,
}

impl Letter {
    pub fn new(generator: usize, inverse: bool) -> Self {
        Letter { generator, inverse }
    }

    pub fn inv(self) -> Self {
        Letter { generator: self.generator, inverse: !self.inverse }
    }
}

pub type Word = Vec<Letter>;

/// Formal inverse of a word.
pub fn invert_word(word: &[Letter]) -> Word {
    word.iter().rev().map(|l| l.inv()).collect()
}

/// Serializable description of a backend, used in job configs and cache keys.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GroupDescriptor {
    Free { rank: usize },
    FreeAbelian { rank: usize },
    Cyclic { n: u64 },
    FiniteTable {
        #[serde(default)]
        csv: Option<String>,
        #[serde(default)]
        rows: Option<Vec<Vec<u32>>>,
        #[serde(default)]
        generators: Option<Vec<u32>>,
    },
    Permutation { generators: Vec<Vec<u32>> },
    FreeProductCyclic { orders: Vec<u32> },
    Lamplighter,
}

/// A group with canonical element encoding.
#[derive(Clone, Debug)]
pub enum GroupBackend {
    Free { rank: usize },
    FreeAbelian { rank: usize },
    Cyclic { order: u64 },
    Table(CayleyTable),
    Permutation(PermutationGroup),
    FreeProductCyclic { orders: Vec<u32> },
    Lamplighter,
}

fn alphabet_names(k: usize) -> Vec<String> {
    if k <= 26 {
        (0..k).map(|i| ((b'a' + i as u8) as char).to_string()).collect()
    } else {
        (0..k).map(|i| format!("x{i}")).collect()
    }
}

impl GroupBackend {
    pub fn free(rank: usize) -> Self {
        GroupBackend::Free { rank }
    }

    pub fn free_abelian(rank: usize) -> Self {
        GroupBackend::FreeAbelian { rank }
    }

    pub fn cyclic(order: u64) -> Self {
        GroupBackend::Cyclic { order }
    }

    pub fn free_product_cyclic(orders: Vec<u32>) -> Self {
        GroupBackend::FreeProductCyclic { orders }
    }

    pub fn lamplighter() -> Self {
        GroupBackend::Lamplighter
    }

    pub fn from_descriptor(desc: &GroupDescriptor) -> Result<Self> {
        match desc {
            GroupDescriptor::Free { rank } => {
                if *rank == 0 {
                    return Err(Error::Parameter("free rank must be >= 1".into()));
                }
                Ok(Self::free(*rank))
            }
            GroupDescriptor::FreeAbelian { rank } => {
                if *rank == 0 {
                    return Err(Error::Parameter("free abelian rank must be >= 1".into()));
                }
                Ok(Self::free_abelian(*rank))
            }
            GroupDescriptor::Cyclic { n } => {
                if *n == 0 {
                    return Err(Error::Parameter("cyclic order must be >= 1".into()));
                }
                Ok(Self::cyclic(*n))
            }
            GroupDescriptor::FiniteTable { csv, rows, generators } => {
                let table = match (csv, rows) {
                    (Some(path), None) => {
                        let text = std::fs::read_to_string(path)?;
                        CayleyTable::from_csv(&text, generators.clone())?
                    }
                    (None, Some(rows)) => CayleyTable::new(rows.clone(), generators.clone())?,
                    _ => {
                        return Err(Error::Input(
                            "finite_table needs exactly one of `csv` or `rows`".into(),
                        ))
                    }
                };
                Ok(GroupBackend::Table(table))
            }
            GroupDescriptor::Permutation { generators } => {
                Ok(GroupBackend::Permutation(PermutationGroup::new(generators.clone())?))
            }
            GroupDescriptor::FreeProductCyclic { orders } => {
                if orders.is_empty() || orders.iter().any(|&o| o < 2) {
                    return Err(Error::Parameter("free product factor orders must be >= 2".into()));
                }
                Ok(Self::free_product_cyclic(orders.clone()))
            }
            GroupDescriptor::Lamplighter => Ok(Self::lamplighter()),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            GroupBackend::Free { .. } => "free",
            GroupBackend::FreeAbelian { .. } => "free_abelian",
            GroupBackend::Cyclic { .. } => "cyclic",
            GroupBackend::Table(_) => "finite_table",
            GroupBackend::Permutation(_) => "permutation",
            GroupBackend::FreeProductCyclic { .. } => "free_product_cyclic",
            GroupBackend::Lamplighter => "lamplighter",
        }
    }

    /// Human-readable label, e.g. `F2`, `Z^2`, `Z/6`.
    pub fn label(&self) -> String {
        match self {
            GroupBackend::Free { rank } => format!("F{rank}"),
            GroupBackend::FreeAbelian { rank: 1 } => "Z".into(),
            GroupBackend::FreeAbelian { rank } => format!("Z^{rank}"),
            GroupBackend::Cyclic { order } => format!("Z/{order}"),
            GroupBackend::Table(t) => format!("table[{}]", t.order()),
            GroupBackend::Permutation(p) => format!("perm[deg {}]", p.degree()),
            GroupBackend::FreeProductCyclic { orders } => {
                let parts: Vec<String> = orders.iter().map(|o| format!("C{o}")).collect();
                parts.join("*")
            }
            GroupBackend::Lamplighter => "Z/2 wr Z".into(),
        }
    }

    pub fn generator_count(&self) -> usize {
        match self {
            GroupBackend::Free { rank } | GroupBackend::FreeAbelian { rank } => *rank,
            GroupBackend::Cyclic { .. } => 1,
            GroupBackend::Table(t) => t.generators().len(),
            GroupBackend::Permutation(p) => p.generators().len(),
            GroupBackend::FreeProductCyclic { orders } => orders.len(),
            GroupBackend::Lamplighter => 2,
        }
    }

    pub fn generator_names(&self) -> Vec<String> {
        match self {
            GroupBackend::Lamplighter => vec!["t".into(), "a".into()],
            GroupBackend::Table(t) => t.generators().iter().map(|g| format!("g{g}")).collect(),
            _ => alphabet_names(self.generator_count()),
        }
    }

    pub fn identity(&self) -> Element {
        match self {
            GroupBackend::Free { .. } => Element::Reduced(Vec::new()),
            GroupBackend::FreeAbelian { rank } => Element::Vector(vec![0; *rank]),
            GroupBackend::Cyclic { .. } => Element::Residue(0),
            GroupBackend::Table(t) => Element::Index(t.identity()),
            GroupBackend::Permutation(p) => p.identity(),
            GroupBackend::FreeProductCyclic { .. } => Element::Syllables(Vec::new()),
            GroupBackend::Lamplighter => Element::Lamps { lamps: Vec::new(), cursor: 0 },
        }
    }

    /// The element named by generator `i`.
    pub fn generator(&self, i: usize) -> Element {
        assert!(i < self.generator_count(), "generator index out of range");
        match self {
            GroupBackend::Free { .. } => Element::Reduced(vec![i as i32 + 1]),
            GroupBackend::FreeAbelian { rank } => {
                let mut v = vec![0; *rank];
                v[i] = 1;
                Element::Vector(v)
            }
            GroupBackend::Cyclic { order } => Element::Residue(1 % order),
            GroupBackend::Table(t) => Element::Index(t.generators()[i]),
            GroupBackend::Permutation(p) => Element::Perm(p.generators()[i].clone()),
            GroupBackend::FreeProductCyclic { .. } => Element::Syllables(vec![(i as u32, 1)]),
            GroupBackend::Lamplighter => {
                if i == 0 {
                    Element::Lamps { lamps: Vec::new(), cursor: 1 }
                } else {
                    Element::Lamps { lamps: vec![0], cursor: 0 }
                }
            }
        }
    }

    pub fn letter(&self, l: Letter) -> Element {
        let g = self.generator(l.generator);
        if l.inverse {
            self.inverse(&g)
        } else {
            g
        }
    }

    pub fn multiply(&self, a: &Element, b: &Element) -> Element {
        match (self, a, b) {
            (GroupBackend::Free { .. }, Element::Reduced(x), Element::Reduced(y)) => {
                Element::Reduced(free::reduce_concat(x, y))
            }
            (GroupBackend::FreeAbelian { .. }, Element::Vector(x), Element::Vector(y)) => {
                Element::Vector(x.iter().zip(y).map(|(p, q)| p + q).collect())
            }
            (GroupBackend::Cyclic { order }, Element::Residue(x), Element::Residue(y)) => {
                Element::Residue(((*x as u128 + *y as u128) % *order as u128) as u64)
            }
            (GroupBackend::Table(t), Element::Index(x), Element::Index(y)) => {
                Element::Index(t.product(*x, *y))
            }
            (GroupBackend::Permutation(_), Element::Perm(x), Element::Perm(y)) => {
                Element::Perm(perm::compose(x, y))
            }
            (
                GroupBackend::FreeProductCyclic { orders },
                Element::Syllables(x),
                Element::Syllables(y),
            ) => Element::Syllables(free_product::multiply(orders, x, y)),
            (
                GroupBackend::Lamplighter,
                Element::Lamps { lamps: l1, cursor: c1 },
                Element::Lamps { lamps: l2, cursor: c2 },
            ) => lamplighter::multiply(l1, *c1, l2, *c2),
            _ => panic!("element encoding does not belong to backend {}", self.kind_name()),
        }
    }

    pub fn inverse(&self, a: &Element) -> Element {
        match (self, a) {
            (GroupBackend::Free { .. }, Element::Reduced(x)) => {
                Element::Reduced(x.iter().rev().map(|c| -c).collect())
            }
            (GroupBackend::FreeAbelian { .. }, Element::Vector(x)) => {
                Element::Vector(x.iter().map(|c| -c).collect())
            }
            (GroupBackend::Cyclic { order }, Element::Residue(x)) => {
                Element::Residue((order - x % order) % order)
            }
            (GroupBackend::Table(t), Element::Index(x)) => Element::Index(t.inverse(*x)),
            (GroupBackend::Permutation(_), Element::Perm(x)) => Element::Perm(perm::invert(x)),
            (GroupBackend::FreeProductCyclic { orders }, Element::Syllables(x)) => {
                Element::Syllables(free_product::invert(orders, x))
            }
            (GroupBackend::Lamplighter, Element::Lamps { lamps, cursor }) => {
                lamplighter::invert(lamps, *cursor)
            }
            _ => panic!("element encoding does not belong to backend {}", self.kind_name()),
        }
    }

    /// Evaluates a word to its canonical element.
    pub fn evaluate(&self, word: &[Letter]) -> Result<Element> {
        let k = self.generator_count();
        let mut acc = self.identity();
        for l in word {
            if l.generator >= k {
                return Err(Error::UnknownLetter(format!("#{}", l.generator)));
            }
            acc = self.multiply(&acc, &self.letter(*l));
        }
        Ok(acc)
    }

    /// Parses a word such as `a b A`, `a^-1 b^2` or `ab`. An upper-case
    /// single-character name denotes the inverse of the lower-case letter.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let names = self.generator_names();
        let mut word = Vec::new();
        let t = text.trim();
        if t.is_empty() || t == "e" || t == "1" {
            return Ok(word);
        }
        let chars: Vec<char> = t.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() || c == '*' || c == '.' || c == '·' {
                i += 1;
                continue;
            }
            if !c.is_ascii_alphabetic() {
                return Err(Error::MalformedWord(text.to_string()));
            }
            // Multi-character names (`g12`, `x3`) are a letter followed by digits.
            let start = i;
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let token: String = chars[start..i].iter().collect();
            let mut exponent: i64 = 1;
            if i < chars.len() && chars[i] == '^' {
                i += 1;
                let es = i;
                if i < chars.len() && chars[i] == '-' {
                    i += 1;
                }
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[es..i].iter().collect();
                exponent = digits.parse().map_err(|_| Error::MalformedWord(text.to_string()))?;
            }
            let (gen, inverse) = if let Some(g) = names.iter().position(|n| *n == token) {
                (g, false)
            } else if token.chars().count() == 1 && c.is_ascii_uppercase() {
                let lower = token.to_ascii_lowercase();
                match names.iter().position(|n| *n == lower) {
                    Some(g) => (g, true),
                    None => return Err(Error::UnknownLetter(token)),
                }
            } else {
                return Err(Error::UnknownLetter(token));
            };
            let inv = inverse ^ (exponent < 0);
            for _ in 0..exponent.unsigned_abs() {
                word.push(Letter::new(gen, inv));
            }
        }
        Ok(word)
    }

    pub fn evaluate_str(&self, text: &str) -> Result<Element> {
        self.evaluate(&self.parse_word(text)?)
    }

    /// Group order when the backend is finite.
    pub fn order(&self) -> Option<u64> {
        match self {
            GroupBackend::Cyclic { order } => Some(*order),
            GroupBackend::Table(t) => Some(t.order() as u64),
            GroupBackend::Permutation(p) => Some(p.order()),
            GroupBackend::FreeProductCyclic { orders } if orders.len() == 1 => {
                Some(orders[0] as u64)
            }
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.order().is_some()
    }

    /// Amenable backends: abelian, finite and lamplighter groups. Free groups of
    /// rank >= 2 and free products other than `C2*C2` are not.
    pub fn is_amenable(&self) -> bool {
        match self {
            GroupBackend::Free { rank } => *rank <= 1,
            GroupBackend::FreeProductCyclic { orders } => {
                orders.len() == 1 || (orders.len() == 2 && orders[0] == 2 && orders[1] == 2)
            }
            _ => true,
        }
    }

    /// Whether the group is known to contain a non-abelian free subgroup.
    pub fn contains_free_subgroup(&self) -> bool {
        !self.is_amenable()
    }

    /// A normal-form word for `x`, available for backends with a structural
    /// normal form (all but tables and permutation groups).
    pub fn normal_word(&self, x: &Element) -> Option<Word> {
        match (self, x) {
            (GroupBackend::Free { .. }, Element::Reduced(w)) => Some(
                w.iter()
                    .map(|&c| Letter::new(c.unsigned_abs() as usize - 1, c < 0))
                    .collect(),
            ),
            (GroupBackend::FreeAbelian { .. }, Element::Vector(v)) => {
                let mut w = Vec::new();
                for (i, &c) in v.iter().enumerate() {
                    for _ in 0..c.unsigned_abs() {
                        w.push(Letter::new(i, c < 0));
                    }
                }
                Some(w)
            }
            (GroupBackend::Cyclic { .. }, Element::Residue(r)) => {
                Some((0..*r).map(|_| Letter::new(0, false)).collect())
            }
            (GroupBackend::FreeProductCyclic { .. }, Element::Syllables(s)) => {
                let mut w = Vec::new();
                for &(f, e) in s {
                    for _ in 0..e {
                        w.push(Letter::new(f as usize, false));
                    }
                }
                Some(w)
            }
            (GroupBackend::Lamplighter, Element::Lamps { lamps, cursor }) => {
                Some(lamplighter::normal_word(lamps, *cursor))
            }
            _ => None,
        }
    }

    /// Reduced-word length for free groups.
    pub fn free_length(&self, x: &Element) -> Option<usize> {
        match (self, x) {
            (GroupBackend::Free { .. }, Element::Reduced(w)) => Some(w.len()),
            _ => None,
        }
    }

    pub fn descriptor(&self) -> GroupDescriptor {
        match self {
            GroupBackend::Free { rank } => GroupDescriptor::Free { rank: *rank },
            GroupBackend::FreeAbelian { rank } => GroupDescriptor::FreeAbelian { rank: *rank },
            GroupBackend::Cyclic { order } => GroupDescriptor::Cyclic { n: *order },
            GroupBackend::Table(t) => GroupDescriptor::FiniteTable {
                csv: None,
                rows: Some(t.rows().to_vec()),
                generators: Some(t.generators().to_vec()),
            },
            GroupBackend::Permutation(p) => {
                GroupDescriptor::Permutation { generators: p.generators().to_vec() }
            }
            GroupBackend::FreeProductCyclic { orders } => {
                GroupDescriptor::FreeProductCyclic { orders: orders.clone() }
            }
            GroupBackend::Lamplighter => GroupDescriptor::Lamplighter,
        }
    }
}
