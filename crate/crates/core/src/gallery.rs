//! Bundled example models.
//!
//! The gallery covers both instrument variants, zero-free and
//! detection-gated responses, and signaling and non-signaling marginals.
//! Files live under `gallery/` in this crate and are embedded so the
//! binaries can resolve them from any working directory.

use crate::error::{Error, Result};
use crate::model::HvModel;
use crate::model_file::load_model_str;

/// `(name, TOML source)` of every bundled model.
pub const GALLERY: &[(&str, &str)] = &[
    ("perfect_corr", include_str!("../gallery/perfect_corr.toml")),
    ("instrument_noise", include_str!("../gallery/instrument_noise.toml")),
    ("detection_gated", include_str!("../gallery/detection_gated.toml")),
    ("signaling_gate", include_str!("../gallery/signaling_gate.toml")),
    ("cbd_signaling", include_str!("../gallery/cbd_signaling.toml")),
    ("cbd_box", include_str!("../gallery/cbd_box.toml")),
];

/// Names of all bundled models, in gallery order.
pub fn names() -> Vec<&'static str> {
    GALLERY.iter().map(|(n, _)| *n).collect()
}

/// Raw TOML source of a bundled model.
pub fn source(name: &str) -> Option<&'static str> {
    let key = normalize(name);
    GALLERY.iter().find(|(n, _)| *n == key).map(|(_, s)| *s)
}

/// Loads a bundled model by name; accepts `name`, `gallery/name`, and an
/// optional `.toml` suffix.
pub fn load(name: &str) -> Result<HvModel<f64>> {
    let key = normalize(name);
    let text = source(&key).ok_or_else(|| Error::UnknownModel(name.to_string()))?;
    load_model_str(text, &format!("gallery/{key}"))
}

/// Loads every bundled model.
pub fn load_all() -> Result<Vec<HvModel<f64>>> {
    names().into_iter().map(load).collect()
}

fn normalize(name: &str) -> String {
    name.trim_start_matches("gallery/")
        .trim_end_matches(".toml")
        .to_string()
}
