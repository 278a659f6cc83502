use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// A nonnegative quantity that may be `+∞`.
///
/// Infinity is an explicit marker: it serializes as the string `"+inf"` and
/// prints as `+inf`, so reports never silently saturate or emit `null`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Extended(f64);

impl Extended {
    pub const INFINITY: Extended = Extended(f64::INFINITY);
    pub const ZERO: Extended = Extended(0.0);

    /// Wraps a value. NaN is rejected; any positive infinity becomes the marker.
    pub fn new(v: f64) -> Self {
        assert!(!v.is_nan(), "Extended value must not be NaN");
        Extended(v)
    }

    pub fn finite(v: f64) -> Self {
        assert!(v.is_finite(), "expected a finite value, got {v}");
        Extended(v)
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn as_finite(self) -> Option<f64> {
        self.0.is_finite().then_some(self.0)
    }
}

impl From<f64> for Extended {
    fn from(v: f64) -> Self {
        Extended::new(v)
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == f64::INFINITY {
            f.write_str("+inf")
        } else if self.0 == f64::NEG_INFINITY {
            f.write_str("-inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&self.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for Extended {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Extended(v)),
            Repr::Str(s) if s == "+inf" || s == "inf" => Ok(Extended::INFINITY),
            Repr::Str(s) if s == "-inf" => Ok(Extended(f64::NEG_INFINITY)),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("bad extended value {s:?}"))),
        }
    }
}
