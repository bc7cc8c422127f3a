//! Fixed 17-significant-digit float formatting for CSV and JSON outputs.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// `v` in scientific notation with 17 significant digits; `NaN` and
/// infinities are written as `nan`, `inf`, `-inf`.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// A float that serializes to JSON with 17 significant digits (`null` when
/// not finite) and deserializes from any JSON number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sci(pub f64);

impl Serialize for Sci {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let raw = serde_json::value::RawValue::from_string(fmt17(self.0)).map_err(serde::ser::Error::custom)?;
            raw.serialize(serializer)
        } else {
            serializer.serialize_none()
        }
    }
}

impl<'de> Deserialize<'de> for Sci {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(Sci(Option::<f64>::deserialize(deserializer)?.unwrap_or(f64::NAN)))
    }
}

pub(crate) fn sci_rows(rows: &[Vec<f64>]) -> Vec<Vec<Sci>> {
    rows.iter().map(|r| r.iter().copied().map(Sci).collect()).collect()
}

pub(crate) fn plain_rows(rows: &[Vec<Sci>]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.iter().map(|v| v.0).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt17(-2.0), "-2.0000000000000000e0");
        assert_eq!(fmt17(f64::NAN), "nan");
        assert_eq!(serde_json::to_string(&Sci(1.5)).unwrap(), "1.5000000000000000e0");
        assert_eq!(serde_json::to_string(&Sci(f64::INFINITY)).unwrap(), "null");
    }

    proptest! {
        #[test]
        fn json_round_trip_is_exact(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = serde_json::to_string(&Sci(v)).unwrap();
            let back: Sci = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(back.0.to_bits(), v.to_bits());
            prop_assert_eq!(fmt17(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
