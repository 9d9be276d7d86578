//! Fixed-precision number rendering for persisted artifacts.

/// Renders `v` with `sig` significant digits in scientific notation.
/// Non-finite values render as `inf`, `-inf`, `nan`.
pub fn sci(v: f64, sig: usize) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{:.*e}", sig.saturating_sub(1), v)
    }
}

/// Rounds to `sig` significant digits (non-finite values pass through).
pub fn round_sig(v: f64, sig: usize) -> f64 {
    if !v.is_finite() {
        return v;
    }
    sci(v, sig).parse().expect("formatted float parses")
}

pub const REPORT_DIGITS: usize = 12;
pub const DATA_DIGITS: usize = 17;

/// Serde adapter for report floats: finite values are written as numbers
/// rounded to 12 significant digits; non-finite values as strings.
pub mod report_f64 {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    use super::{round_sig, REPORT_DIGITS};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(round_sig(*v, REPORT_DIGITS))
        } else {
            s.serialize_str(&super::sci(*v, REPORT_DIGITS))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(F64Visitor)
    }

    pub(crate) struct F64Visitor;

    impl Visitor<'_> for F64Visitor {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::custom(format!("unexpected float string {other:?}"))),
            }
        }
    }
}

/// Same as [`report_f64`] for `Option<f64>` (None serializes as null).
pub mod report_opt_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => super::report_f64::serialize(x, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super::report_f64")] f64);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

/// Shortest text that parses back to exactly `v`.
pub fn exact(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        sci(v, 1)
    }
}

/// Serde adapter writing floats at full precision; non-finite values become
/// strings as in [`report_f64`].
pub mod exact_f64 {
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&super::exact(*v))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(super::report_f64::F64Visitor)
    }
}

/// Float newtype serialized with [`exact_f64`], for use inside containers.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct Exact(#[serde(with = "exact_f64")] pub f64);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 123456.789, 0.0] {
            let s = sci(v, DATA_DIGITS);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn twelve_digits() {
        assert_eq!(round_sig(1.0 / 3.0, 12), 0.333333333333);
        assert_eq!(sci(f64::INFINITY, 12), "inf");
    }

    #[test]
    fn exact_round_trips() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -7.25] {
            assert_eq!(exact(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(exact(f64::NEG_INFINITY), "-inf");
    }
}
