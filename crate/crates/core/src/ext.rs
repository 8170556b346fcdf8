//! Extended real numbers `[-inf, +inf]` without NaN.
//!
//! All set-function values and integral results go through [`ExtReal`] so the
//! conventions stay in one place:
//!
//! * `c + (-inf) = -inf` for every `c`, including `+inf` (`-inf` absorbs),
//! * `max(-inf, c) = c`,
//! * `-inf * 0 = 0` (see [`ExtReal::scale`]).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::de::{self, Deserializer, Visitor};
use serde::{Serialize, Serializer};

/// String token used for negative infinity in JSON and CSV.
pub const NEG_INF_TOKEN: &str = "-inf";
/// String token used for positive infinity in JSON and CSV.
pub const POS_INF_TOKEN: &str = "inf";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const NEG_INF: ExtReal = ExtReal(f64::NEG_INFINITY);
    pub const POS_INF: ExtReal = ExtReal(f64::INFINITY);
    pub const ZERO: ExtReal = ExtReal(0.0);

    /// Wraps `v`; NaN is rejected.
    pub fn new(v: f64) -> Option<Self> {
        if v.is_nan() {
            None
        } else {
            Some(ExtReal(v))
        }
    }

    /// Wraps a value known not to be NaN. Panics on NaN.
    pub fn of(v: f64) -> Self {
        Self::new(v).expect("ExtReal::of called with NaN")
    }

    /// `ln p` for a probability-like `p >= 0`, with `ln 0 = -inf`.
    pub fn ln(p: f64) -> Self {
        debug_assert!(p >= 0.0);
        if p <= 0.0 {
            Self::NEG_INF
        } else {
            ExtReal(p.ln())
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_neg_inf(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    pub fn is_pos_inf(self) -> bool {
        self.0 == f64::INFINITY
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn exp(self) -> f64 {
        self.0.exp()
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// `factor * self` with `(+-inf) * 0 = 0`.
    pub fn scale(self, factor: f64) -> Self {
        if factor == 0.0 {
            ExtReal::ZERO
        } else {
            ExtReal::of(self.0 * factor)
        }
    }

    /// Difference `self - other` where equal infinities give `0`.
    ///
    /// Used for signed gaps: `a == b` (also both `-inf`) is a tie, not NaN.
    pub fn gap(self, other: Self) -> f64 {
        if self.0 == other.0 {
            0.0
        } else {
            self.0 - other.0
        }
    }
}

impl Default for ExtReal {
    fn default() -> Self {
        ExtReal::ZERO
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        // NaN is excluded at construction, so this is the usual order with
        // -0.0 == 0.0.
        self.0.partial_cmp(&other.0).unwrap_or(Ordering::Equal)
    }
}

impl Add for ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: ExtReal) -> ExtReal {
        if self.is_neg_inf() || rhs.is_neg_inf() {
            ExtReal::NEG_INF
        } else {
            ExtReal(self.0 + rhs.0)
        }
    }
}

impl Add<f64> for ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: f64) -> ExtReal {
        self + ExtReal::of(rhs)
    }
}

impl Sub<f64> for ExtReal {
    type Output = ExtReal;
    fn sub(self, rhs: f64) -> ExtReal {
        self + ExtReal::of(-rhs)
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;
    fn neg(self) -> ExtReal {
        ExtReal(-self.0)
    }
}

impl From<ExtReal> for f64 {
    fn from(v: ExtReal) -> f64 {
        v.0
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_neg_inf() {
            f.write_str(NEG_INF_TOKEN)
        } else if self.is_pos_inf() {
            f.write_str(POS_INF_TOKEN)
        } else {
            fmt::Display::fmt(&self.0, f)
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.is_neg_inf() {
            s.serialize_str(NEG_INF_TOKEN)
        } else if self.is_pos_inf() {
            s.serialize_str(POS_INF_TOKEN)
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> serde::Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = ExtReal;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number, \"-inf\" or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<ExtReal, E> {
                ExtReal::new(v).ok_or_else(|| E::custom("NaN is not an extended real"))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtReal, E> {
                Ok(ExtReal(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtReal, E> {
                Ok(ExtReal(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtReal, E> {
                parse_token(v).ok_or_else(|| E::custom(format!("bad extended real {v:?}")))
            }
        }
        d.deserialize_any(V)
    }
}

/// Parses a number or one of the infinity tokens.
pub fn parse_token(s: &str) -> Option<ExtReal> {
    match s.trim() {
        NEG_INF_TOKEN | "-Infinity" | "-infinity" => Some(ExtReal::NEG_INF),
        POS_INF_TOKEN | "+inf" | "Infinity" | "infinity" => Some(ExtReal::POS_INF),
        t => t.parse::<f64>().ok().and_then(ExtReal::new),
    }
}

/// Renders `v` with 17 significant digits, using the infinity tokens.
///
/// Output is a pure function of the bit pattern, so tables written with it
/// are byte-reproducible.
pub fn fmt17(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        NEG_INF_TOKEN.to_string()
    } else if v == f64::INFINITY {
        POS_INF_TOKEN.to_string()
    } else if v.is_nan() {
        "nan".to_string()
    } else if v == 0.0 {
        // collapse -0.0
        format!("{:.16e}", 0.0)
    } else {
        format!("{:.16e}", v)
    }
}
