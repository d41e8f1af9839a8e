//! Versioned default gain presets, embedded from `presets/*.toml`.

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::flocking::{OlfatiSaberGains, VasarhelyiGains};
use crate::real::Real;

pub const PRESET_VERSION: u32 = 1;

pub const OLFATI_SABER_TOML: &str = include_str!("../presets/olfati_saber.toml");
pub const VASARHELYI_TOML: &str = include_str!("../presets/vasarhelyi.toml");

#[derive(Deserialize)]
struct PresetFile<G> {
    version: u32,
    gains: G,
}

/// Parses a preset file (`version` plus a `[gains]` table).
pub fn parse<G: DeserializeOwned>(text: &str) -> Result<G, String> {
    let file: PresetFile<G> = toml::from_str(text).map_err(|e| e.to_string())?;
    if file.version != PRESET_VERSION {
        return Err(format!(
            "preset version {} not supported (expected {PRESET_VERSION})",
            file.version
        ));
    }
    Ok(file.gains)
}

pub fn olfati_saber<T: Real>() -> OlfatiSaberGains<T> {
    parse(OLFATI_SABER_TOML).expect("embedded olfati_saber preset parses")
}

pub fn vasarhelyi<T: Real>() -> VasarhelyiGains<T> {
    parse(VASARHELYI_TOML).expect("embedded vasarhelyi preset parses")
}
