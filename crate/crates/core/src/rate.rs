use std::fmt;
use std::ops::Add;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

/// A bit-pipe capacity in bits per channel use. Infinite capacities are kept
/// symbolic and serialize as the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    Finite(f64),
    Infinite,
}

impl Rate {
    pub const ZERO: Rate = Rate::Finite(0.0);

    pub fn is_infinite(&self) -> bool {
        matches!(self, Rate::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Rate::Finite(v) => Some(*v),
            Rate::Infinite => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Rate::Finite(v) if *v == 0.0)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Rate::Finite(v) => *v,
            Rate::Infinite => f64::INFINITY,
        }
    }

    pub fn from_f64(v: f64) -> Rate {
        if v.is_infinite() && v > 0.0 {
            Rate::Infinite
        } else {
            Rate::Finite(v)
        }
    }

    /// `self - other`, with an infinite minuend dominating. Used only for gap
    /// reporting, where an infinite upper value is an infinite gap.
    pub fn gap_over(&self, other: &Rate) -> Rate {
        match (self, other) {
            (Rate::Infinite, _) => Rate::Infinite,
            (Rate::Finite(_), Rate::Infinite) => Rate::Finite(f64::NEG_INFINITY),
            (Rate::Finite(a), Rate::Finite(b)) => Rate::Finite(a - b),
        }
    }

    pub fn scale(&self, c: f64) -> Rate {
        match self {
            Rate::Finite(v) => Rate::Finite(v * c),
            Rate::Infinite if c == 0.0 => Rate::ZERO,
            Rate::Infinite => Rate::Infinite,
        }
    }

    pub fn min(self, other: Rate) -> Rate {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Rate) -> Rate {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl PartialOrd for Rate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

impl Add for Rate {
    type Output = Rate;
    fn add(self, rhs: Rate) -> Rate {
        match (self, rhs) {
            (Rate::Finite(a), Rate::Finite(b)) => Rate::Finite(a + b),
            _ => Rate::Infinite,
        }
    }
}

impl std::iter::Sum for Rate {
    fn sum<I: Iterator<Item = Rate>>(iter: I) -> Rate {
        iter.fold(Rate::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Finite(v) => write!(f, "{}", crate::fmt::sig6(*v)),
            Rate::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Rate::Finite(v) => s.serialize_f64(*v),
            Rate::Infinite => s.serialize_str("inf"),
        }
    }
}

struct RateVisitor;

impl Visitor<'_> for RateVisitor {
    type Value = Rate;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "a nonnegative number or the string \"inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rate, E> {
        if !v.is_finite() {
            return Err(E::custom("non-finite number; use \"inf\""));
        }
        Ok(Rate::Finite(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rate, E> {
        Ok(Rate::Finite(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rate, E> {
        Ok(Rate::Finite(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Rate, E> {
        if v == "inf" {
            Ok(Rate::Infinite)
        } else {
            Err(E::custom(format!("unrecognized rate `{v}`; only \"inf\" is accepted")))
        }
    }
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Rate, D::Error> {
        d.deserialize_any(RateVisitor)
    }
}
