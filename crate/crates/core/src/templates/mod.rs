//! Named circuit templates behind a common trait, looked up at runtime by
//! the config vocabulary (`lif.cmos`, `lif.hybrid`, `dpi.cmos`, `dpi.hybrid`).

mod dpi;
mod lif;
mod params;

pub use dpi::{build_dpi, dpi_slots, DpiTemplate, SynapseBiases};
pub use lif::{build_lif, lif_slots, LifTemplate, NeuronBiases};
pub use params::{mos_keys, relay_keys, DeviceSlot, TemplateParams};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::units::Dimension;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Cmos,
    Hybrid,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::Cmos => "cmos",
            Variant::Hybrid => "hybrid",
        }
    }
}

/// How an instance is realized: always a MOSFET, or a switch that is a
/// MOSFET in the CMOS variant and a NEM relay in the hybrid variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InstanceKind {
    Mos,
    Switch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasKey {
    pub name: &'static str,
    pub dimension: Dimension,
    pub default: f64,
}

pub trait CircuitTemplate: Send + Sync {
    fn name(&self) -> &'static str;
    fn variant(&self) -> Variant;
    fn bias_keys(&self) -> &'static [BiasKey];
    fn instances(&self) -> &'static [(&'static str, InstanceKind)];
    /// Dimension of `[stimulus]` levels for this template.
    fn stimulus_dimension(&self) -> Dimension;
    fn build(&self, params: &TemplateParams) -> Result<Circuit>;

    fn bias_key(&self, name: &str) -> Option<&BiasKey> {
        self.bias_keys().iter().find(|k| k.name == name)
    }

    fn instance_kind(&self, name: &str) -> Option<InstanceKind> {
        self.instances()
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, k)| *k)
    }
}

pub struct TemplateRegistry {
    templates: Vec<Box<dyn CircuitTemplate>>,
}

impl TemplateRegistry {
    pub fn new() -> Self {
        Self {
            templates: Vec::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::new();
        r.register(Box::new(LifTemplate::new(Variant::Cmos)));
        r.register(Box::new(LifTemplate::new(Variant::Hybrid)));
        r.register(Box::new(DpiTemplate::new(Variant::Cmos)));
        r.register(Box::new(DpiTemplate::new(Variant::Hybrid)));
        r
    }

    /// Later registrations shadow earlier ones with the same name.
    pub fn register(&mut self, template: Box<dyn CircuitTemplate>) {
        self.templates.retain(|t| t.name() != template.name());
        self.templates.push(template);
    }

    pub fn get(&self, name: &str) -> Result<&dyn CircuitTemplate> {
        self.templates
            .iter()
            .find(|t| t.name() == name)
            .map(|t| t.as_ref())
            .ok_or_else(|| Error::UnknownTemplate(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.templates.iter().map(|t| t.name()).collect()
    }
}

impl Default for TemplateRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
