//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar the simulator can run on (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Default
    + Debug
    + Display
    + Sum
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("scalar representable as f64")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Serde adapter for scalars that may be non-finite. JSON has no NaN or
/// infinity, so NaN is written as `null` and infinities as `"inf"`/`"-inf"`.
pub mod nonfinite {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::Real;

    pub fn serialize<T: Real, S: Serializer>(x: &T, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            x.serialize(s)
        } else if x.is_nan() {
            s.serialize_none()
        } else if *x > T::zero() {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Wire<T> {
        Num(T),
        Text(String),
    }

    pub fn deserialize<'de, T: Real, D: Deserializer<'de>>(d: D) -> Result<T, D::Error> {
        match Option::<Wire<T>>::deserialize(d)? {
            None => Ok(T::nan()),
            Some(Wire::Num(x)) => Ok(x),
            Some(Wire::Text(t)) => match t.as_str() {
                "inf" | "+inf" => Ok(T::infinity()),
                "-inf" => Ok(T::neg_infinity()),
                "nan" | "NaN" => Ok(T::nan()),
                _ => Err(serde::de::Error::custom(format!("expected a number, got {t:?}"))),
            },
        }
    }
}
