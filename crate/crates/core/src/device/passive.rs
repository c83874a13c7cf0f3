use crate::device::THERMAL_VOLTAGE;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PassiveKind {
    Capacitor,
    CurrentSource,
    VoltageSource,
    Resistor,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassiveParams {
    pub kind: PassiveKind,
    /// Farads, amperes, volts or ohms depending on `kind`.
    pub value: f64,
    /// Current sources only: the source stops delivering as the voltage it
    /// drives across its terminals approaches this value.
    pub compliance: Option<f64>,
}

impl PassiveParams {
    pub fn capacitor(farads: f64) -> Self {
        Self {
            kind: PassiveKind::Capacitor,
            value: farads,
            compliance: None,
        }
    }

    pub fn resistor(ohms: f64) -> Self {
        Self {
            kind: PassiveKind::Resistor,
            value: ohms,
            compliance: None,
        }
    }

    pub fn current_source(amperes: f64) -> Self {
        Self {
            kind: PassiveKind::CurrentSource,
            value: amperes,
            compliance: None,
        }
    }

    pub fn with_compliance(mut self, volts: f64) -> Self {
        self.compliance = Some(volts);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            PassiveKind::Capacitor | PassiveKind::Resistor => self.value > 0.0,
            PassiveKind::CurrentSource | PassiveKind::VoltageSource => self.value.is_finite(),
        };
        if ok && self.value.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid passive {self:?}")))
        }
    }

    /// Current pushed into the `to` terminal by a current source of amplitude
    /// `amplitude`, given the voltage rise `v_to - v_from` across it.
    pub fn source_current(&self, amplitude: f64, rise: f64) -> f64 {
        match self.compliance {
            None => amplitude,
            Some(limit) => {
                let headroom = limit - rise;
                if headroom <= 0.0 {
                    0.0
                } else {
                    -amplitude * (-headroom / THERMAL_VOLTAGE).exp_m1()
                }
            }
        }
    }
}
