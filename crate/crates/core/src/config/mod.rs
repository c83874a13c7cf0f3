//! Experiment configuration files.
//!
//! Line-oriented: `[section]` headers, `key = value` pairs, `#` comments.
//! Numeric values take an optional SI suffix and unit word (`235 pA`); the
//! unit is checked against the dimension the key expects.
//!
//! ```text
//! [circuit]
//! template = lif.hybrid
//! preset = lif-hybrid-28nm
//!
//! [biases]
//! i_inject = 235 pA
//!
//! [device.M_leak]
//! i0 = 0.1 pA
//!
//! [solver]
//! t_stop = 20 ms
//! ```

mod parse;
mod preset;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

pub use parse::{parse_config, parse_config_with};
pub use preset::{
    builtin_preset_names, default_preset_for, load_config, load_preset, preset_text,
    resolve_preset, PRESET_DIR_ENV,
};

use crate::circuit::StimulusSpec;
use crate::sim::SolverConfig;
use crate::templates::{mos_keys, relay_keys, CircuitTemplate, TemplateParams, TemplateRegistry};
use crate::units::{Dimension, Quantity};

/// A located configuration problem. Lines and columns are 1-based; line 0
/// marks a problem with no source position (e.g. a config built in code).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl Diagnostic {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }

    pub fn unplaced(message: impl Into<String>) -> Self {
        Self::new(0, 0, message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            f.write_str(&self.message)
        } else {
            write!(
                f,
                "line {}, column {}: {}",
                self.line, self.column, self.message
            )
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepScale {
    Linear,
    Log,
}

impl SweepScale {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepScale::Linear => "linear",
            SweepScale::Log => "log",
        }
    }
}

/// One swept axis. `key` is a bias name, `Instance.param`, or `target_rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub from: Quantity,
    pub to: Quantity,
    pub steps: usize,
    pub scale: SweepScale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Markdown,
}

impl OutputFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Markdown => "markdown",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputSpec {
    pub dir: Option<String>,
    pub format: Option<OutputFormat>,
}

/// A parsed run description. Every map holds overrides only; anything not
/// listed falls back to the preset and then the template defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub template: String,
    pub preset: Option<String>,
    pub biases: BTreeMap<String, Quantity>,
    pub devices: BTreeMap<String, BTreeMap<String, Quantity>>,
    pub relay: BTreeMap<String, Quantity>,
    pub stimulus: Option<StimulusSpec>,
    pub solver: BTreeMap<String, Quantity>,
    pub target_rate: Option<Quantity>,
    pub sweep: Option<Sweep>,
    pub output: OutputSpec,
}

pub const SOLVER_KEYS: &[(&str, Dimension)] = &[
    ("dt_min", Dimension::Second),
    ("dt_max", Dimension::Second),
    ("dv_max", Dimension::Volt),
    ("event_tol", Dimension::Second),
    ("rel_tol", Dimension::Dimensionless),
    ("abs_tol", Dimension::Volt),
    ("kcl_tol", Dimension::Ampere),
    ("t_stop", Dimension::Second),
    ("quiet_window", Dimension::Second),
];

pub(crate) fn lookup(keys: &[(&str, Dimension)], name: &str) -> Option<Dimension> {
    keys.iter().find(|(k, _)| *k == name).map(|(_, d)| *d)
}

/// Dimension of a sweepable key on `template`, or `None` if it cannot be swept.
pub fn sweep_key_dimension(template: &dyn CircuitTemplate, key: &str) -> Option<Dimension> {
    if key == "target_rate" {
        return Some(Dimension::Hertz);
    }
    if let Some((inst, param)) = key.split_once('.') {
        let kind = template.instance_kind(inst)?;
        return lookup(mos_keys(), param).or_else(|| {
            (kind == crate::templates::InstanceKind::Switch)
                .then(|| lookup(relay_keys(), param))
                .flatten()
        });
    }
    template.bias_key(key).map(|b| b.dimension)
}

impl ExperimentConfig {
    pub fn new(template: &str) -> Self {
        Self {
            template: template.to_string(),
            preset: None,
            biases: BTreeMap::new(),
            devices: BTreeMap::new(),
            relay: BTreeMap::new(),
            stimulus: None,
            solver: BTreeMap::new(),
            target_rate: None,
            sweep: None,
            output: OutputSpec::default(),
        }
    }

    pub fn template_params(&self) -> TemplateParams {
        let mag = |m: &BTreeMap<String, Quantity>| -> BTreeMap<String, f64> {
            m.iter().map(|(k, q)| (k.clone(), q.magnitude)).collect()
        };
        TemplateParams {
            biases: mag(&self.biases),
            devices: self
                .devices
                .iter()
                .map(|(k, m)| (k.clone(), mag(m)))
                .collect(),
            relay: mag(&self.relay),
            stimulus: self.stimulus.clone(),
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut s = SolverConfig::default();
        for (k, q) in &self.solver {
            let v = q.magnitude;
            match k.as_str() {
                "dt_min" => s.dt_min = v,
                "dt_max" => s.dt_max = v,
                "dv_max" => s.dv_max = v,
                "event_tol" => s.event_tol = v,
                "rel_tol" => s.rel_tol = v,
                "abs_tol" => s.abs_tol = v,
                "kcl_tol" => s.kcl_tol = v,
                "t_stop" => s.t_stop = v,
                "quiet_window" => s.quiet_window = v,
                _ => {}
            }
        }
        s
    }

    /// `top` layered over `self`: maps merge key by key, set options win.
    pub fn overlay(mut self, top: ExperimentConfig) -> ExperimentConfig {
        self.template = top.template;
        self.preset = top.preset.or(self.preset);
        self.biases.extend(top.biases);
        for (inst, m) in top.devices {
            self.devices.entry(inst).or_default().extend(m);
        }
        self.relay.extend(top.relay);
        self.solver.extend(top.solver);
        self.stimulus = top.stimulus.or(self.stimulus);
        self.target_rate = top.target_rate.or(self.target_rate);
        self.sweep = top.sweep.or(self.sweep);
        self.output.dir = top.output.dir.or(self.output.dir);
        self.output.format = top.output.format.or(self.output.format);
        self
    }

    /// Canonical config text. Parsing it yields a structurally equal config.
    pub fn serialize(&self, registry: &TemplateRegistry) -> String {
        let stim_dim = registry
            .get(&self.template)
            .map(|t| t.stimulus_dimension())
            .unwrap_or(Dimension::Dimensionless);
        let mut out = String::new();
        out.push_str("[circuit]\n");
        let _ = writeln!(out, "template = {}", self.template);
        if let Some(p) = &self.preset {
            let _ = writeln!(out, "preset = {p}");
        }
        write_map(&mut out, "biases", &self.biases);
        for (inst, m) in &self.devices {
            write_map(&mut out, &format!("device.{inst}"), m);
        }
        write_map(&mut out, "relay", &self.relay);
        if let Some(s) = &self.stimulus {
            out.push_str("\n[stimulus]\n");
            let q = |v: f64, d: Dimension| Quantity::new(v, d).to_config_string();
            match s {
                StimulusSpec::Dc { level } => {
                    out.push_str("kind = dc\n");
                    let _ = writeln!(out, "level = {}", q(*level, stim_dim));
                }
                StimulusSpec::PulseTrain {
                    low,
                    high,
                    width,
                    period,
                    start,
                    count,
                } => {
                    out.push_str("kind = pulse\n");
                    let _ = writeln!(out, "low = {}", q(*low, stim_dim));
                    let _ = writeln!(out, "high = {}", q(*high, stim_dim));
                    let _ = writeln!(out, "width = {}", q(*width, Dimension::Second));
                    let _ = writeln!(out, "period = {}", q(*period, Dimension::Second));
                    let _ = writeln!(out, "start = {}", q(*start, Dimension::Second));
                    if let Some(c) = count {
                        let _ = writeln!(out, "count = {c}");
                    }
                }
                StimulusSpec::PiecewiseLinear { points } => {
                    out.push_str("kind = pwl\n");
                    let pts: Vec<String> = points
                        .iter()
                        .map(|&(t, v)| format!("{} : {}", q(t, Dimension::Second), q(v, stim_dim)))
                        .collect();
                    let _ = writeln!(out, "points = {}", pts.join(", "));
                }
            }
        }
        write_map(&mut out, "solver", &self.solver);
        if let Some(r) = &self.target_rate {
            out.push_str("\n[experiment]\n");
            let _ = writeln!(out, "target_rate = {}", r.to_config_string());
        }
        if let Some(sw) = &self.sweep {
            out.push_str("\n[sweep]\n");
            let _ = writeln!(out, "key = {}", sw.key);
            let _ = writeln!(out, "from = {}", sw.from.to_config_string());
            let _ = writeln!(out, "to = {}", sw.to.to_config_string());
            let _ = writeln!(out, "steps = {}", sw.steps);
            let _ = writeln!(out, "scale = {}", sw.scale.as_str());
        }
        if self.output != OutputSpec::default() {
            out.push_str("\n[output]\n");
            if let Some(d) = &self.output.dir {
                let _ = writeln!(out, "dir = \"{d}\"");
            }
            if let Some(f) = self.output.format {
                let _ = writeln!(out, "format = {}", f.as_str());
            }
        }
        out
    }
}

fn write_map(out: &mut String, section: &str, m: &BTreeMap<String, Quantity>) {
    if m.is_empty() {
        return;
    }
    let _ = writeln!(out, "\n[{section}]");
    for (k, q) in m {
        let _ = writeln!(out, "{k} = {}", q.to_config_string());
    }
}

/// Evenly spaced values from `from` to `to`, both included.
pub fn sweep_values(from: f64, to: f64, steps: usize, scale: SweepScale) -> Vec<f64> {
    let n = steps.max(2);
    (0..n)
        .map(|i| {
            if i == 0 {
                return from;
            }
            if i == n - 1 {
                return to;
            }
            let f = i as f64 / (n - 1) as f64;
            match scale {
                SweepScale::Linear => from + (to - from) * f,
                SweepScale::Log => (from.ln() + (to.ln() - from.ln()) * f).exp(),
            }
        })
        .collect()
}

/// Describes what is wrong with a sweep, if anything.
pub fn check_sweep(sw: &Sweep) -> Option<String> {
    if sw.steps < 2 {
        return Some(format!("sweep needs at least 2 steps, got {}", sw.steps));
    }
    if sw.from.magnitude == sw.to.magnitude {
        return Some(format!(
            "degenerate sweep: from = to = {} with {} steps",
            sw.from.to_config_string(),
            sw.steps
        ));
    }
    if !(sw.from.magnitude.is_finite() && sw.to.magnitude.is_finite()) {
        return Some("sweep endpoints must be finite".into());
    }
    if sw.scale == SweepScale::Log && (sw.from.magnitude <= 0.0 || sw.to.magnitude <= 0.0) {
        return Some("log sweep endpoints must be positive".into());
    }
    None
}

/// One config per sweep point, with the swept key set and the sweep removed.
pub fn expand_sweep(config: &ExperimentConfig) -> Result<Vec<ExperimentConfig>, Vec<Diagnostic>> {
    let Some(sw) = &config.sweep else {
        return Err(vec![Diagnostic::unplaced("config has no [sweep] section")]);
    };
    if let Some(msg) = check_sweep(sw) {
        return Err(vec![Diagnostic::unplaced(msg)]);
    }
    let dim = sw.from.dimension.or(sw.to.dimension);
    let values = sweep_values(sw.from.magnitude, sw.to.magnitude, sw.steps, sw.scale);
    Ok(values
        .into_iter()
        .map(|v| {
            let q = Quantity {
                magnitude: v,
                dimension: dim,
            };
            let mut c = config.clone();
            c.sweep = None;
            if sw.key == "target_rate" {
                c.target_rate = Some(q);
            } else if let Some((inst, param)) = sw.key.split_once('.') {
                c.devices
                    .entry(inst.to_string())
                    .or_default()
                    .insert(param.to_string(), q);
            } else {
                c.biases.insert(sw.key.clone(), q);
            }
            c
        })
        .collect())
}
