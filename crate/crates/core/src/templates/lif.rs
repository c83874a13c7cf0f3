//! Leaky integrate-and-fire neuron with a handshaking spike output.
//!
//! The membrane `vmem` integrates the injected current through an input gate
//! and leaks through `M_leak`. A current-starved comparator (`M_spk1`/`M_spk2`
//! against the weak pull-up `M_pu`) pulls `vo` low when `vmem` crosses the
//! threshold. The low `vo` fires positive feedback into `vmem`, requests an
//! acknowledge on `spk`, and charges the refractory node `vr`, which resets
//! the membrane and blocks the input until `vr` leaks away through `M_refr`.
//! `M_gate` supplies the comparator only while the acknowledge is absent.

use crate::circuit::{Circuit, Device, Handshake, RailDrive, SpikeProbe};
use crate::device::PassiveParams;
use crate::error::{Error, Result};
use crate::relay::SwitchConfig;
use crate::units::Dimension;

use super::params::{nmos, pmos, DeviceSlot, TemplateParams};
use super::{BiasKey, CircuitTemplate, InstanceKind, Variant};

macro_rules! bias {
    ($name:literal, $dim:ident, $v:expr) => {
        BiasKey {
            name: $name,
            dimension: Dimension::$dim,
            default: $v,
        }
    };
}

const CMOS_BIASES: &[BiasKey] = &[
    bias!("vdd", Volt, 0.5),
    bias!("v_thrshld", Volt, 0.35),
    bias!("v_lk", Volt, 0.116),
    bias!("v_refr", Volt, 0.1746),
    bias!("v_pu", Volt, 0.282),
    bias!("i_inject", Ampere, 250e-12),
    bias!("c_mem", Farad, 500e-15),
    bias!("c_r", Farad, 150e-15),
    bias!("c_node", Farad, 5e-15),
    bias!("ack_latency", Second, 50e-6),
    bias!("ack_width", Second, 5e-6),
];

const HYBRID_BIASES: &[BiasKey] = &[
    bias!("vdd", Volt, 0.5),
    bias!("v_thrshld", Volt, 0.35),
    bias!("v_lk", Volt, 0.116),
    bias!("v_refr", Volt, 0.1858),
    bias!("v_pu", Volt, 0.282),
    bias!("i_inject", Ampere, 235e-12),
    bias!("c_mem", Farad, 500e-15),
    bias!("c_r", Farad, 150e-15),
    bias!("c_node", Farad, 5e-15),
    bias!("ack_latency", Second, 50e-6),
    bias!("ack_width", Second, 5e-6),
];

const INSTANCES: &[(&str, InstanceKind)] = &[
    ("M_in_gate", InstanceKind::Switch),
    ("M_leak", InstanceKind::Mos),
    ("M_gate", InstanceKind::Switch),
    ("M_spk1", InstanceKind::Mos),
    ("M_pu", InstanceKind::Mos),
    ("M_spk2", InstanceKind::Mos),
    ("M_thr", InstanceKind::Mos),
    ("M_feedback", InstanceKind::Mos),
    ("M_inv_p", InstanceKind::Mos),
    ("M_inv_n", InstanceKind::Mos),
    ("M_refr_en", InstanceKind::Switch),
    ("M_refr_p2", InstanceKind::Mos),
    ("M_refr", InstanceKind::Mos),
    ("M_reset", InstanceKind::Mos),
];

fn leaky_pmos(i_s: f64, i_off: f64) -> crate::device::MosParams {
    crate::device::MosParams {
        i_off_ref: i_off,
        ..pmos(i_s)
    }
}

// ideal subthreshold slope, so the reset releases the membrane quickly
fn sharp_nmos(i_s: f64) -> crate::device::MosParams {
    crate::device::MosParams {
        slope_n: 1.0,
        ..nmos(i_s)
    }
}

pub fn lif_slots() -> Vec<DeviceSlot> {
    let slot = |name, mos, switch| DeviceSlot { name, mos, switch };
    vec![
        slot("M_in_gate", pmos(1e-6), Some(SwitchConfig::PmosNo)),
        slot("M_leak", nmos(0.1e-12), None),
        slot(
            "M_gate",
            leaky_pmos(1e-12, 10e-12),
            Some(SwitchConfig::PmosNo),
        ),
        slot("M_spk1", pmos(1e-12), None),
        slot("M_pu", pmos(1e-12), None),
        slot("M_spk2", nmos(0.24e-12), None),
        slot("M_thr", nmos(1e-12), None),
        slot("M_feedback", pmos(0.3e-12), None),
        slot("M_inv_p", pmos(0.5e-12), None),
        slot("M_inv_n", nmos(0.5e-12), None),
        slot(
            "M_refr_en",
            leaky_pmos(0.3e-12, 16e-12),
            Some(SwitchConfig::PmosNo),
        ),
        slot("M_refr_p2", pmos(1e-12), None),
        slot("M_refr", nmos(1e-12), None),
        slot("M_reset", sharp_nmos(3e-12), None),
    ]
}

/// Typed view of the neuron biases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronBiases {
    pub vdd: f64,
    pub v_thrshld: f64,
    pub v_lk: f64,
    pub v_refr: f64,
    pub v_pu: f64,
    pub i_inject: f64,
    pub c_mem: f64,
    pub c_r: f64,
    pub c_node: f64,
    pub ack_latency: f64,
    pub ack_width: f64,
}

impl NeuronBiases {
    pub fn resolve(variant: Variant, params: &TemplateParams) -> Self {
        let keys = lif_bias_keys(variant);
        let b = |n| params.bias(keys, n);
        Self {
            vdd: b("vdd"),
            v_thrshld: b("v_thrshld"),
            v_lk: b("v_lk"),
            v_refr: b("v_refr"),
            v_pu: b("v_pu"),
            i_inject: b("i_inject"),
            c_mem: b("c_mem"),
            c_r: b("c_r"),
            c_node: b("c_node"),
            ack_latency: b("ack_latency"),
            ack_width: b("ack_width"),
        }
    }
}

fn lif_bias_keys(variant: Variant) -> &'static [BiasKey] {
    match variant {
        Variant::Cmos => CMOS_BIASES,
        Variant::Hybrid => HYBRID_BIASES,
    }
}

pub fn build_lif(variant: Variant, params: &TemplateParams) -> Result<Circuit> {
    let name = format!("lif.{}", variant.label());
    params.check_biases(lif_bias_keys(variant), &name)?;
    let slots = lif_slots();
    DeviceSlot::check(params, &slots, &name)?;
    let b = NeuronBiases::resolve(variant, params);
    for (k, v) in [
        ("vdd", b.vdd),
        ("c_mem", b.c_mem),
        ("c_r", b.c_r),
        ("c_node", b.c_node),
    ] {
        if v <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "{name}: {k} must be positive"
            )));
        }
    }
    if b.ack_latency < 0.0 || b.ack_width <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "{name}: invalid handshake timing"
        )));
    }

    let vdd = b.vdd;
    let mut c = Circuit::new(name, vdd);
    c.add_rail("gnd", RailDrive::Fixed(0.0))
        .add_rail("vdd", RailDrive::Fixed(vdd))
        .add_rail("v_thrshld", RailDrive::Fixed(b.v_thrshld))
        .add_rail("v_lk", RailDrive::Fixed(b.v_lk))
        .add_rail("v_refr", RailDrive::Fixed(b.v_refr))
        .add_rail("v_pu", RailDrive::Fixed(b.v_pu))
        .add_rail("ack", RailDrive::Acknowledge { inverted: false })
        .add_rail("ack_b", RailDrive::Acknowledge { inverted: true });

    c.add_node("vmem", b.c_mem, 0.0)
        .add_node("vin", b.c_node, 0.0)
        .add_node("vp", b.c_node, vdd)
        .add_node("vo", b.c_node, vdd)
        .add_node("vn", b.c_node, 0.0)
        .add_node("spk", b.c_node, 0.0)
        .add_node("vx", b.c_node, 0.0)
        .add_node("vr", b.c_r, 0.0);

    c.add_branch(
        "I_inject",
        Device::Passive(PassiveParams::current_source(b.i_inject).with_compliance(vdd)),
        &["gnd", "vin"],
        "stimulus",
    );
    if let Some(s) = &params.stimulus {
        c.branch_mut("I_inject").unwrap().stimulus = Some(s.clone());
    }

    let wiring: &[(&str, [&str; 3], &str)] = &[
        ("M_in_gate", ["vmem", "vr", "vin"], "input"),
        ("M_leak", ["vmem", "v_lk", "gnd"], "leak"),
        ("M_gate", ["vp", "ack_b", "vdd"], "comparison"),
        ("M_spk1", ["vo", "vmem", "vp"], "comparison"),
        ("M_pu", ["vo", "v_pu", "vdd"], "comparison"),
        ("M_spk2", ["vo", "vmem", "vn"], "comparison"),
        ("M_thr", ["vn", "v_thrshld", "gnd"], "comparison"),
        ("M_feedback", ["vmem", "vo", "vdd"], "feedback"),
        ("M_inv_p", ["spk", "vo", "vdd"], "handshake"),
        ("M_inv_n", ["spk", "vo", "gnd"], "handshake"),
        ("M_refr_en", ["vx", "vo", "vdd"], "refractory"),
        ("M_refr_p2", ["vr", "gnd", "vx"], "refractory"),
        ("M_refr", ["vr", "v_refr", "gnd"], "refractory"),
        ("M_reset", ["vmem", "vr", "gnd"], "reset"),
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

    c.spike_probe = Some(SpikeProbe {
        node: "vo".into(),
        threshold: vdd / 2.0,
        falling: true,
    });
    c.handshake = Some(Handshake {
        latency: b.ack_latency,
        width: b.ack_width,
    });
    Ok(c)
}

pub struct LifTemplate {
    variant: Variant,
}

impl LifTemplate {
    pub fn new(variant: Variant) -> Self {
        Self { variant }
    }
}

impl CircuitTemplate for LifTemplate {
    fn name(&self) -> &'static str {
        match self.variant {
            Variant::Cmos => "lif.cmos",
            Variant::Hybrid => "lif.hybrid",
        }
    }

    fn variant(&self) -> Variant {
        self.variant
    }

    fn bias_keys(&self) -> &'static [BiasKey] {
        lif_bias_keys(self.variant)
    }

    fn instances(&self) -> &'static [(&'static str, InstanceKind)] {
        INSTANCES
    }

    fn stimulus_dimension(&self) -> Dimension {
        Dimension::Ampere
    }

    fn build(&self, params: &TemplateParams) -> Result<Circuit> {
        build_lif(self.variant, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hybrid_swaps_switches_for_relays() {
        let p = TemplateParams::default();
        let cmos = build_lif(Variant::Cmos, &p).unwrap();
        let hyb = build_lif(Variant::Hybrid, &p).unwrap();
        assert!(!cmos.has_relays());
        let relays: Vec<_> = hyb
            .branches
            .iter()
            .filter(|b| matches!(b.device, Device::Relay(_)))
            .map(|b| b.name.as_str())
            .collect();
        assert_eq!(relays, ["M_in_gate", "M_gate", "M_refr_en"]);
        assert_eq!(cmos.branches.len(), hyb.branches.len());
    }

    #[test]
    fn unknown_override_is_rejected() {
        let p = TemplateParams::default().with_bias("v_bogus", 0.1);
        assert!(build_lif(Variant::Cmos, &p).is_err());
        let mut p = TemplateParams::default();
        p.devices
            .entry("M_leak".into())
            .or_default()
            .insert("r_on".into(), 1e4);
        assert!(build_lif(Variant::Hybrid, &p).is_err());
    }
}
