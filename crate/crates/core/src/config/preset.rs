//! Named presets: ordinary config files loaded underneath user overrides.

use std::path::PathBuf;

use super::{parse_config_with, Diagnostic, ExperimentConfig};
use crate::error::{Error, Result};
use crate::templates::TemplateRegistry;

/// Directory holding `<name>.cfg` files; replaces the built-in presets when set.
pub const PRESET_DIR_ENV: &str = "NEUROSIM_PRESET_DIR";

const BUILTIN: &[(&str, &str)] = &[
    (
        "lif-cmos-28nm",
        include_str!("../../../../presets/lif-cmos-28nm.cfg"),
    ),
    (
        "lif-hybrid-28nm",
        include_str!("../../../../presets/lif-hybrid-28nm.cfg"),
    ),
    (
        "dpi-cmos-28nm",
        include_str!("../../../../presets/dpi-cmos-28nm.cfg"),
    ),
    (
        "dpi-hybrid-28nm",
        include_str!("../../../../presets/dpi-hybrid-28nm.cfg"),
    ),
];

pub fn builtin_preset_names() -> Vec<&'static str> {
    BUILTIN.iter().map(|(n, _)| *n).collect()
}

/// The calibrated preset shipped for a template.
pub fn default_preset_for(template: &str) -> Option<&'static str> {
    Some(match template {
        "lif.cmos" => "lif-cmos-28nm",
        "lif.hybrid" => "lif-hybrid-28nm",
        "dpi.cmos" => "dpi-cmos-28nm",
        "dpi.hybrid" => "dpi-hybrid-28nm",
        _ => return None,
    })
}

fn config_error(msg: String) -> Error {
    Error::Config(vec![Diagnostic::unplaced(msg)])
}

pub fn preset_text(name: &str) -> Result<String> {
    if let Some(dir) = std::env::var_os(PRESET_DIR_ENV) {
        let path = PathBuf::from(dir).join(format!("{name}.cfg"));
        return std::fs::read_to_string(&path).map_err(|e| {
            config_error(format!(
                "preset '{name}': cannot read {}: {e}",
                path.display()
            ))
        });
    }
    BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| t.to_string())
        .ok_or_else(|| {
            config_error(format!(
                "unknown preset '{name}' (available: {})",
                builtin_preset_names().join(", ")
            ))
        })
}

pub fn load_preset(name: &str, registry: &TemplateRegistry) -> Result<ExperimentConfig> {
    let text = preset_text(name)?;
    let cfg = parse_config_with(&text, registry).map_err(|diags| {
        Error::Config(
            diags
                .into_iter()
                .map(|d| Diagnostic {
                    message: format!("in preset '{name}': {}", d.message),
                    ..d
                })
                .collect(),
        )
    })?;
    if cfg.preset.is_some() {
        return Err(config_error(format!(
            "preset '{name}' refers to another preset; presets do not chain"
        )));
    }
    Ok(cfg)
}

/// Layers `config` over the preset it names, if any.
pub fn resolve_preset(
    config: ExperimentConfig,
    registry: &TemplateRegistry,
) -> Result<ExperimentConfig> {
    let Some(name) = config.preset.clone() else {
        return Ok(config);
    };
    let base = load_preset(&name, registry)?;
    if base.template != config.template {
        return Err(config_error(format!(
            "preset '{name}' is for template {}, but the config selects {}",
            base.template, config.template
        )));
    }
    Ok(base.overlay(config))
}

/// Parses config text and applies its preset.
pub fn load_config(text: &str, registry: &TemplateRegistry) -> Result<ExperimentConfig> {
    let cfg = parse_config_with(text, registry).map_err(Error::Config)?;
    resolve_preset(cfg, registry)
}
