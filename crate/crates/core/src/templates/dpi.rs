//! Differential-pair integrator synapse.
//!
//! Input pulses on the `pulse` rail open `M_in`, which lets the weight
//! current set by `M_w` discharge `vsyn`. Between pulses `M_tau` recharges
//! `vsyn` toward Vdd with a constant current, and the output transistor
//! `M_syn` converts `vsyn` into the exponentially decaying synaptic current.

use crate::circuit::{Circuit, RailDrive, StimulusSpec};
use crate::error::{Error, Result};
use crate::relay::SwitchConfig;
use crate::units::Dimension;

use super::params::{nmos, pmos, DeviceSlot, TemplateParams};
use super::{BiasKey, CircuitTemplate, InstanceKind, Variant};

const BIASES: &[BiasKey] = &[
    BiasKey {
        name: "vdd",
        dimension: Dimension::Volt,
        default: 0.5,
    },
    BiasKey {
        name: "v_tau",
        dimension: Dimension::Volt,
        default: 0.374,
    },
    BiasKey {
        name: "v_w",
        dimension: Dimension::Volt,
        default: 0.40,
    },
    BiasKey {
        name: "c_syn",
        dimension: Dimension::Farad,
        default: 1e-12,
    },
    BiasKey {
        name: "c_node",
        dimension: Dimension::Farad,
        default: 5e-15,
    },
    BiasKey {
        name: "pulse_width",
        dimension: Dimension::Second,
        default: 1e-6,
    },
    BiasKey {
        name: "pulse_rate",
        dimension: Dimension::Hertz,
        default: 100.0,
    },
    BiasKey {
        name: "pulse_start",
        dimension: Dimension::Second,
        default: 100e-6,
    },
    BiasKey {
        name: "pulse_count",
        dimension: Dimension::Dimensionless,
        default: 0.0,
    },
];

const INSTANCES: &[(&str, InstanceKind)] = &[
    ("M_tau", InstanceKind::Mos),
    ("M_in", InstanceKind::Switch),
    ("M_w", InstanceKind::Mos),
    ("M_syn", InstanceKind::Mos),
];

pub fn dpi_slots() -> Vec<DeviceSlot> {
    vec![
        DeviceSlot {
            name: "M_tau",
            mos: pmos(1e-12),
            switch: None,
        },
        DeviceSlot {
            name: "M_in",
            mos: nmos(1e-12),
            switch: Some(SwitchConfig::NmosNo),
        },
        DeviceSlot {
            name: "M_w",
            mos: nmos(10e-12),
            switch: None,
        },
        DeviceSlot {
            name: "M_syn",
            mos: pmos(1e-12),
            switch: None,
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynapseBiases {
    pub vdd: f64,
    pub v_tau: f64,
    pub v_w: f64,
    pub c_syn: f64,
    pub c_node: f64,
    pub pulse_width: f64,
    pub pulse_rate: f64,
    pub pulse_start: f64,
    /// Zero means an unbounded train.
    pub pulse_count: f64,
}

impl SynapseBiases {
    pub fn resolve(params: &TemplateParams) -> Self {
        let b = |n| params.bias(BIASES, n);
        Self {
            vdd: b("vdd"),
            v_tau: b("v_tau"),
            v_w: b("v_w"),
            c_syn: b("c_syn"),
            c_node: b("c_node"),
            pulse_width: b("pulse_width"),
            pulse_rate: b("pulse_rate"),
            pulse_start: b("pulse_start"),
            pulse_count: b("pulse_count"),
        }
    }

    pub fn pulse_train(&self) -> StimulusSpec {
        StimulusSpec::PulseTrain {
            low: 0.0,
            high: self.vdd,
            width: self.pulse_width,
            period: 1.0 / self.pulse_rate,
            start: self.pulse_start,
            count: (self.pulse_count >= 1.0).then_some(self.pulse_count.round() as u64),
        }
    }
}

pub fn build_dpi(variant: Variant, params: &TemplateParams) -> Result<Circuit> {
    let name = format!("dpi.{}", variant.label());
    params.check_biases(BIASES, &name)?;
    let slots = dpi_slots();
    DeviceSlot::check(params, &slots, &name)?;
    let b = SynapseBiases::resolve(params);
    if b.vdd <= 0.0 || b.c_syn <= 0.0 || b.c_node <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "{name}: vdd and capacitances must be positive"
        )));
    }
    if b.pulse_rate <= 0.0 || b.pulse_width <= 0.0 || b.pulse_width * b.pulse_rate >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "{name}: pulse width must be positive and shorter than the period"
        )));
    }
    let stimulus = params.stimulus.clone().unwrap_or_else(|| b.pulse_train());
    stimulus.validate().map_err(Error::InvalidArgument)?;

    let vdd = b.vdd;
    let mut c = Circuit::new(name, vdd);
    c.add_rail("gnd", RailDrive::Fixed(0.0))
        .add_rail("vdd", RailDrive::Fixed(vdd))
        .add_rail("v_tau", RailDrive::Fixed(b.v_tau))
        .add_rail("v_w", RailDrive::Fixed(b.v_w))
        .add_rail("pulse", RailDrive::Stimulus(stimulus));
    c.add_node("vsyn", b.c_syn, vdd)
        .add_node("vx", b.c_node, 0.0);

    let wiring: &[(&str, [&str; 3], &str)] = &[
        ("M_tau", ["vsyn", "v_tau", "vdd"], "tau"),
        ("M_in", ["vsyn", "pulse", "vx"], "input"),
        ("M_w", ["vx", "v_w", "gnd"], "weight"),
        // drain on the supply side so the recorded current is positive
        ("M_syn", ["vdd", "vsyn", "gnd"], "output"),
    ];
    for slot in &slots {
        let (_, terms, tag) = wiring.iter().find(|w| w.0 == slot.name).unwrap();
        match slot.realize(variant, params, vdd) {
            (dev, Some(body)) => {
                c.add_branch(slot.name, dev, &[terms[0], terms[1], terms[2], body], tag);
            }
            (dev, None) => {
                c.add_branch(slot.name, dev, terms, tag);
            }
        }
    }
    Ok(c)
}

pub struct DpiTemplate {
    variant: Variant,
}

impl DpiTemplate {
    pub fn new(variant: Variant) -> Self {
        Self { variant }
    }
}

impl CircuitTemplate for DpiTemplate {
    fn name(&self) -> &'static str {
        match self.variant {
            Variant::Cmos => "dpi.cmos",
            Variant::Hybrid => "dpi.hybrid",
        }
    }

    fn variant(&self) -> Variant {
        self.variant
    }

    fn bias_keys(&self) -> &'static [BiasKey] {
        BIASES
    }

    fn instances(&self) -> &'static [(&'static str, InstanceKind)] {
        INSTANCES
    }

    fn stimulus_dimension(&self) -> Dimension {
        Dimension::Volt
    }

    fn build(&self, params: &TemplateParams) -> Result<Circuit> {
        build_dpi(self.variant, params)
    }
}
