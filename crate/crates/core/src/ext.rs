//! Extended reals for measures that may legitimately be infinite.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A value on the extended real line.
///
/// Infinite results of the tail measures are in-band values (an empty corner is
/// an answer, not a failure), so they get their own variants instead of
/// floating-point infinities produced by a division.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
    NegInf,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// `log(num / den)` with the extended convention for zero arguments:
    /// `log(0/y) = -inf` for `y > 0`, `log(x/0) = +inf` for `x > 0` and
    /// `log(0/0) = 0`.
    ///
    /// Both arguments must be non-negative; tiny negative values produced by
    /// floating-point cancellation are treated as zero. The larger argument is
    /// always the numerator of the division, so `log_ratio(x, y)` is exactly
    /// `-log_ratio(y, x)`.
    pub fn log_ratio(num: f64, den: f64) -> ExtReal {
        debug_assert!(!num.is_nan() && !den.is_nan());
        let num_zero = num <= 0.0;
        let den_zero = den <= 0.0;
        match (num_zero, den_zero) {
            (true, true) => ExtReal::ZERO,
            (true, false) => ExtReal::NegInf,
            (false, true) => ExtReal::PosInf,
            (false, false) if num >= den => ExtReal::Finite((num / den).ln()),
            (false, false) => ExtReal::Finite(-(den / num).ln()),
        }
    }

    /// Maps IEEE infinities onto the matching variants. NaN is rejected.
    pub fn from_f64(x: f64) -> ExtReal {
        assert!(!x.is_nan(), "ExtReal::from_f64 called with NaN");
        if x == f64::INFINITY {
            ExtReal::PosInf
        } else if x == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(x)
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
            ExtReal::NegInf => f64::NEG_INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn neg(self) -> ExtReal {
        match self {
            ExtReal::Finite(x) => ExtReal::Finite(-x),
            ExtReal::PosInf => ExtReal::NegInf,
            ExtReal::NegInf => ExtReal::PosInf,
        }
    }

    /// Shift by a finite amount; infinities absorb it.
    pub fn offset(self, delta: f64) -> ExtReal {
        debug_assert!(delta.is_finite());
        match self {
            ExtReal::Finite(x) => ExtReal::Finite(x + delta),
            other => other,
        }
    }

    /// Sign of the value: -1, 0 or 1.
    pub fn signum(self) -> i8 {
        match self {
            ExtReal::Finite(x) if x > 0.0 => 1,
            ExtReal::Finite(x) if x < 0.0 => -1,
            ExtReal::Finite(_) => 0,
            ExtReal::PosInf => 1,
            ExtReal::NegInf => -1,
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::from_f64(x)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::PosInf => f.write_str("+inf"),
            ExtReal::NegInf => f.write_str("-inf"),
        }
    }
}

impl FromStr for ExtReal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "+inf" | "inf" | "+infinity" | "infinity" => Ok(ExtReal::PosInf),
            "-inf" | "-infinity" => Ok(ExtReal::NegInf),
            t => t
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(ExtReal::Finite)
                .ok_or_else(|| Error::Parse(format!("not an extended real: {s:?}"))),
        }
    }
}

// Finite values serialize as JSON numbers, infinities as the strings used in
// the CSV outputs.
impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => serializer.serialize_f64(*x),
            ExtReal::PosInf => serializer.serialize_str("+inf"),
            ExtReal::NegInf => serializer.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(x) => Ok(ExtReal::Finite(x)),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}
