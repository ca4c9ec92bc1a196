//! Exact rationals and provenance tags for reported numbers.

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

pub type Rational = Ratio<i64>;

/// How a reported number was obtained, and which way it may be off.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    UpperBound,
    LowerBound,
    Analytic,
    Cited,
    Estimate,
}

impl Provenance {
    /// Direction flip under an order-reversing map (e.g. `h -> 1 - h/|S|`).
    pub fn reversed(self) -> Self {
        match self {
            Provenance::UpperBound => Provenance::LowerBound,
            Provenance::LowerBound => Provenance::UpperBound,
            p => p,
        }
    }

    pub fn is_bound(self) -> bool {
        matches!(self, Provenance::UpperBound | Provenance::LowerBound)
    }
}

/// A reported number with its provenance; `exact` carries `p/q` when the
/// value is a rational computed without rounding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tagged {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact: Option<String>,
    pub provenance: Provenance,
}

impl Tagged {
    pub fn float(value: f64, provenance: Provenance) -> Self {
        Tagged { value, exact: None, provenance }
    }

    pub fn rational(r: Rational, provenance: Provenance) -> Self {
        Tagged { value: to_f64(r), exact: Some(r.to_string()), provenance }
    }
}

pub fn to_f64(r: Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn rational(n: i64, d: i64) -> Rational {
    Ratio::new(n, d)
}
