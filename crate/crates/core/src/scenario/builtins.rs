//! The builtin scenario gallery, embedded from `scenarios/*.toml`.

use super::config::{ScenarioConfig, StructureSpec};
use crate::error::{Error, Result};

const SOURCES: &[(&str, &str)] = &[
    ("sphere-std", include_str!("../../scenarios/sphere-std.toml")),
    ("plane-flat", include_str!("../../scenarios/plane-flat.toml")),
    ("heisenberg", include_str!("../../scenarios/heisenberg.toml")),
    ("indefinite-quadric", include_str!("../../scenarios/indefinite-quadric.toml")),
    ("sphere-perturbed-0.05", include_str!("../../scenarios/sphere-perturbed.toml")),
    ("sphere-sheared", include_str!("../../scenarios/sphere-sheared.toml")),
    ("ellipsoid-std", include_str!("../../scenarios/ellipsoid-std.toml")),
];

const PERTURBED_PREFIX: &str = "sphere-perturbed-";

pub fn names() -> impl Iterator<Item = &'static str> {
    SOURCES.iter().map(|(n, _)| *n)
}

/// Looks up a builtin by name. `sphere-perturbed-<eps>` accepts any finite
/// `eps`, reusing the gallery's perturbation matrix.
pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    if let Some((_, src)) = SOURCES.iter().find(|(n, _)| *n == name) {
        return ScenarioConfig::from_toml(src);
    }
    if let Some(eps) = name.strip_prefix(PERTURBED_PREFIX) {
        let eps: f64 = eps
            .parse()
            .ok()
            .filter(|e: &f64| e.is_finite())
            .ok_or_else(|| Error::Config(format!("bad perturbation size in `{name}`")))?;
        let mut cfg = builtin("sphere-perturbed-0.05")?;
        cfg.name = name.to_string();
        if let StructureSpec::Conjugated { epsilon, .. } = &mut cfg.structure {
            *epsilon = eps;
        }
        return Ok(cfg);
    }
    Err(Error::Config(format!(
        "unknown builtin `{name}` (known: {})",
        names().collect::<Vec<_>>().join(", ")
    )))
}
