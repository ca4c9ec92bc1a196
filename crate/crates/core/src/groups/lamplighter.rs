//! The lamplighter group `Z/2 wr Z` as (lamp set, cursor) pairs.
//!
//! Generator `t` moves the cursor by one; `a` toggles the lamp under the cursor.
//! `(L1, c1)(L2, c2) = (L1 xor (L2 + c1), c1 + c2)`.

use super::{Element, Letter, Word};

fn symmetric_difference(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

pub(crate) fn multiply(l1: &[i64], c1: i64, l2: &[i64], c2: i64) -> Element {
    let shifted: Vec<i64> = l2.iter().map(|x| x + c1).collect();
    Element::Lamps { lamps: symmetric_difference(l1, &shifted), cursor: c1 + c2 }
}

pub(crate) fn invert(lamps: &[i64], cursor: i64) -> Element {
    Element::Lamps { lamps: lamps.iter().map(|x| x - cursor).collect(), cursor: -cursor }
}

/// `prod_l (t^l a t^-l) * t^cursor`.
pub(crate) fn normal_word(lamps: &[i64], cursor: i64) -> Word {
    let mut w = Vec::new();
    let mut pos: i64 = 0;
    let step = |w: &mut Word, from: i64, to: i64| {
        for _ in 0..(to - from).unsigned_abs() {
            w.push(Letter::new(0, to < from));
        }
    };
    for &l in lamps {
        step(&mut w, pos, l);
        w.push(Letter::new(1, false));
        pos = l;
    }
    step(&mut w, pos, cursor);
    w
}
