use std::collections::BTreeMap;

use crate::circuit::{Device, StimulusSpec};
use crate::device::MosParams;
use crate::error::{Error, Result};
use crate::relay::{relay_as_switch, RelayParams, SwitchConfig};
use crate::units::Dimension;

use super::{BiasKey, Variant};

/// Resolved numeric inputs to a template build, all in base SI units.
/// Missing keys fall back to the template defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TemplateParams {
    pub biases: BTreeMap<String, f64>,
    /// Per-instance device overrides (MOS keys, plus relay keys on switches).
    pub devices: BTreeMap<String, BTreeMap<String, f64>>,
    /// Relay parameters shared by every relay in the circuit.
    pub relay: BTreeMap<String, f64>,
    pub stimulus: Option<StimulusSpec>,
}

impl TemplateParams {
    pub fn with_bias(mut self, key: &str, value: f64) -> Self {
        self.biases.insert(key.to_string(), value);
        self
    }

    pub(crate) fn bias(&self, keys: &[BiasKey], name: &str) -> f64 {
        self.biases.get(name).copied().unwrap_or_else(|| {
            keys.iter()
                .find(|k| k.name == name)
                .map(|k| k.default)
                .expect("bias key missing from schema")
        })
    }

    pub(crate) fn check_biases(&self, keys: &[BiasKey], template: &str) -> Result<()> {
        for (k, v) in &self.biases {
            if !keys.iter().any(|b| b.name == k) {
                return Err(Error::InvalidArgument(format!(
                    "{template}: unknown bias '{k}'"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{template}: bias '{k}' is not finite"
                )));
            }
        }
        Ok(())
    }
}

pub fn mos_keys() -> &'static [(&'static str, Dimension)] {
    &[
        ("i0", Dimension::Ampere),
        ("slope_n", Dimension::Dimensionless),
        ("ut", Dimension::Volt),
        ("w_over_l", Dimension::Dimensionless),
        ("i_off_ref", Dimension::Ampere),
        ("v_early", Dimension::Volt),
    ]
}

pub fn relay_keys() -> &'static [(&'static str, Dimension)] {
    &[
        ("v_pull_in", Dimension::Volt),
        ("v_release", Dimension::Volt),
        ("t_switch", Dimension::Second),
        ("r_on", Dimension::Ohm),
        ("i_off", Dimension::Ampere),
        ("c_gb", Dimension::Farad),
        ("max_cycles", Dimension::Dimensionless),
    ]
}

fn apply_mos(mut p: MosParams, over: Option<&BTreeMap<String, f64>>) -> MosParams {
    for (k, &v) in over.into_iter().flatten() {
        match k.as_str() {
            "i0" => p.i0 = v,
            "slope_n" => p.slope_n = v,
            "ut" => p.ut = v,
            "w_over_l" => p.w_over_l = v,
            "i_off_ref" => p.i_off_ref = v,
            "v_early" => p.v_early = v,
            _ => {}
        }
    }
    p
}

pub(crate) fn apply_relay(mut p: RelayParams, over: Option<&BTreeMap<String, f64>>) -> RelayParams {
    for (k, &v) in over.into_iter().flatten() {
        match k.as_str() {
            "v_pull_in" => p.v_pull_in = v,
            "v_release" => p.v_release = v,
            "t_switch" => p.t_switch = v,
            "r_on" => p.r_on = v,
            "i_off" => p.i_off = v,
            "c_gb" => p.c_gb = v,
            "max_cycles" => p.max_cycles = v,
            _ => {}
        }
    }
    p
}

/// A device position in a template: its default MOSFET and, for switches,
/// the relay configuration that replaces it in the hybrid variant.
#[derive(Debug, Clone, Copy)]
pub struct DeviceSlot {
    pub name: &'static str,
    pub mos: MosParams,
    pub switch: Option<SwitchConfig>,
}

impl DeviceSlot {
    pub(crate) fn check(
        params: &TemplateParams,
        slots: &[DeviceSlot],
        template: &str,
    ) -> Result<()> {
        for (inst, keys) in &params.devices {
            let Some(slot) = slots.iter().find(|s| s.name == inst) else {
                return Err(Error::InvalidArgument(format!(
                    "{template}: unknown device instance '{inst}'"
                )));
            };
            for k in keys.keys() {
                let mos = mos_keys().iter().any(|(n, _)| n == k);
                let relay = slot.switch.is_some() && relay_keys().iter().any(|(n, _)| n == k);
                if !mos && !relay {
                    return Err(Error::InvalidArgument(format!(
                        "{template}: device '{inst}' has no parameter '{k}'"
                    )));
                }
            }
        }
        for k in params.relay.keys() {
            if !relay_keys().iter().any(|(n, _)| n == k) {
                return Err(Error::InvalidArgument(format!(
                    "{template}: unknown relay parameter '{k}'"
                )));
            }
        }
        Ok(())
    }

    /// Device for this slot plus the body rail name for relays.
    pub(crate) fn realize(
        &self,
        variant: Variant,
        params: &TemplateParams,
        vdd: f64,
    ) -> (Device, Option<&'static str>) {
        let over = params.devices.get(self.name);
        match (variant, self.switch) {
            (Variant::Hybrid, Some(config)) => {
                let base = apply_relay(
                    apply_relay(RelayParams::default(), Some(&params.relay)),
                    over,
                );
                let sw = relay_as_switch(config, config.default_body(vdd), base);
                let body = if sw.body_voltage > 0.0 { "vdd" } else { "gnd" };
                (Device::Relay(sw.params), Some(body))
            }
            _ => (Device::Mos(apply_mos(self.mos, over)), None),
        }
    }
}

pub(crate) fn nmos(i_s: f64) -> MosParams {
    MosParams {
        i0: i_s,
        i_off_ref: 0.0,
        ..MosParams::n_type()
    }
}

pub(crate) fn pmos(i_s: f64) -> MosParams {
    MosParams {
        i0: i_s,
        i_off_ref: 0.0,
        ..MosParams::p_type()
    }
}
