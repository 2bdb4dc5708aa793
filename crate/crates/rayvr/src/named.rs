//! Serde adapter for enums that round-trip through a short name.

use std::str::FromStr;

use rayvr_core::camera::RayGenMode;
use rayvr_core::scene::EffectId;
use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

pub trait Named: Copy + FromStr + 'static {
    fn name(self) -> &'static str;
    fn all_names() -> Vec<&'static str>;
}

impl Named for EffectId {
    fn name(self) -> &'static str {
        self.as_str()
    }
    fn all_names() -> Vec<&'static str> {
        EffectId::ALL.iter().map(|e| e.as_str()).collect()
    }
}

impl Named for RayGenMode {
    fn name(self) -> &'static str {
        self.as_str()
    }
    fn all_names() -> Vec<&'static str> {
        RayGenMode::ALL.iter().map(|m| m.as_str()).collect()
    }
}

/// Parses a name, listing the accepted ones on failure.
pub fn parse<T: Named>(s: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("unknown value '{s}', expected one of: {}", T::all_names().join(", ")))
}

pub fn serialize<T: Named, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(v.name())
}

pub fn deserialize<'de, T: Named, D: Deserializer<'de>>(d: D) -> Result<T, D::Error> {
    let s = String::deserialize(d)?;
    parse(&s).map_err(D::Error::custom)
}
