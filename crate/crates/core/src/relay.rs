//! Four-terminal NEM relay: pull-in/release hysteresis, mechanical switching
//! delay, near-zero off current and a finite cycle budget.

use crate::error::{Error, Result};

/// Bias at which an open relay passes exactly `i_off`.
pub const OFF_REFERENCE_BIAS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RestState {
    NormallyOpen,
    NormallyClosed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayParams {
    pub rest_state: RestState,
    pub v_pull_in: f64,
    pub v_release: f64,
    pub t_switch: f64,
    pub r_on: f64,
    pub i_off: f64,
    pub c_gb: f64,
    pub max_cycles: f64,
}

impl Default for RelayParams {
    fn default() -> Self {
        Self {
            rest_state: RestState::NormallyOpen,
            v_pull_in: 0.4,
            v_release: 0.2,
            t_switch: 100e-9,
            r_on: 10e3,
            i_off: 0.0,
            c_gb: 1e-15,
            max_cycles: 1e10,
        }
    }
}

impl RelayParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.v_pull_in > 0.0
            && self.v_release >= 0.0
            && self.v_release < self.v_pull_in
            && self.t_switch >= 0.0
            && self.r_on > 0.0
            && self.i_off >= 0.0
            && self.c_gb >= 0.0
            && self.max_cycles > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid relay parameters {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Contact {
    Open,
    Closed,
    TransitioningToOpen,
    TransitioningToClosed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayState {
    pub contact: Contact,
    /// Absolute completion time; meaningful only while transitioning.
    pub transition_deadline: f64,
    pub cycle_count: u64,
}

impl RelayState {
    pub fn at_rest(params: &RelayParams) -> Self {
        let contact = match params.rest_state {
            RestState::NormallyOpen => Contact::Open,
            RestState::NormallyClosed => Contact::Closed,
        };
        Self {
            contact,
            transition_deadline: 0.0,
            cycle_count: 0,
        }
    }

    pub fn is_transitioning(&self) -> bool {
        matches!(
            self.contact,
            Contact::TransitioningToOpen | Contact::TransitioningToClosed
        )
    }

    pub fn pending_deadline(&self) -> Option<f64> {
        self.is_transitioning().then_some(self.transition_deadline)
    }
}

fn complete_transition(
    params: &RelayParams,
    mut state: RelayState,
    t_now: f64,
) -> Result<RelayState> {
    if !state.is_transitioning() || t_now < state.transition_deadline {
        return Ok(state);
    }
    match state.contact {
        Contact::TransitioningToClosed => {
            if (state.cycle_count + 1) as f64 > params.max_cycles {
                return Err(Error::LifetimeExceeded {
                    relay: String::new(),
                    max_cycles: params.max_cycles,
                    time: t_now,
                });
            }
            state.cycle_count += 1;
            state.contact = Contact::Closed;
        }
        Contact::TransitioningToOpen => state.contact = Contact::Open,
        _ => unreachable!(),
    }
    Ok(state)
}

/// Advances the relay's mechanical state for a gate-body drive `v_gb` at `t_now`.
///
/// Between `v_release` and `v_pull_in` the contact keeps whatever the last
/// threshold crossing commanded. A reversal mid-flight retargets the deadline
/// to a full `t_switch` from now.
pub fn relay_command(
    params: &RelayParams,
    state: RelayState,
    v_gb: f64,
    t_now: f64,
) -> Result<RelayState> {
    let mut state = complete_transition(params, state, t_now)?;
    let drive = v_gb.abs();
    let actuated = if drive >= params.v_pull_in {
        Some(true)
    } else if drive <= params.v_release {
        Some(false)
    } else {
        None
    };
    let Some(actuated) = actuated else {
        return Ok(state);
    };
    let want_closed = match params.rest_state {
        RestState::NormallyOpen => actuated,
        RestState::NormallyClosed => !actuated,
    };
    let next = match (state.contact, want_closed) {
        (Contact::Open, true) | (Contact::TransitioningToOpen, true) => {
            Some(Contact::TransitioningToClosed)
        }
        (Contact::Closed, false) | (Contact::TransitioningToClosed, false) => {
            Some(Contact::TransitioningToOpen)
        }
        _ => None,
    };
    if let Some(contact) = next {
        state.contact = contact;
        state.transition_deadline = t_now + params.t_switch;
        state = complete_transition(params, state, t_now)?;
    }
    Ok(state)
}

/// Source-drain conductance; the contact conducts only once fully closed.
pub fn relay_conductance(params: &RelayParams, state: &RelayState) -> f64 {
    match state.contact {
        Contact::Closed => 1.0 / params.r_on,
        _ => params.i_off / OFF_REFERENCE_BIAS,
    }
}

/// Seconds until a relay cycling at `switch_rate` exhausts `max_cycles`.
pub fn relay_lifetime_estimate(switch_rate: f64, max_cycles: f64) -> Result<f64> {
    if !(switch_rate > 0.0) || !switch_rate.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "switch rate must be positive, got {switch_rate}"
        )));
    }
    if !(max_cycles > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "max_cycles must be positive, got {max_cycles}"
        )));
    }
    Ok(max_cycles / switch_rate)
}

pub const SECONDS_PER_YEAR: f64 = 365.25 * 24.0 * 3600.0;

/// The four ways a relay stands in for a CMOS switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SwitchConfig {
    NmosNo,
    NmosNc,
    PmosNo,
    PmosNc,
}

impl SwitchConfig {
    pub const ALL: [SwitchConfig; 4] = [
        SwitchConfig::NmosNo,
        SwitchConfig::NmosNc,
        SwitchConfig::PmosNo,
        SwitchConfig::PmosNc,
    ];

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "nmos-no" => SwitchConfig::NmosNo,
            "nmos-nc" => SwitchConfig::NmosNc,
            "pmos-no" => SwitchConfig::PmosNo,
            "pmos-nc" => SwitchConfig::PmosNc,
            _ => return None,
        })
    }

    pub fn rest_state(self) -> RestState {
        match self {
            SwitchConfig::NmosNo | SwitchConfig::PmosNo => RestState::NormallyOpen,
            SwitchConfig::NmosNc | SwitchConfig::PmosNc => RestState::NormallyClosed,
        }
    }

    /// Body rail that gives the named transistor's gate polarity: an "NMOS"
    /// conducts on gate-high, a "PMOS" on gate-low.
    pub fn default_body(self, vdd: f64) -> f64 {
        match self {
            SwitchConfig::NmosNo | SwitchConfig::PmosNc => 0.0,
            SwitchConfig::NmosNc | SwitchConfig::PmosNo => vdd,
        }
    }
}

/// A relay wired as a transistor replacement: gate on the control net,
/// body tied to `body_voltage`, source/drain as the switched path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaySwitch {
    pub config: SwitchConfig,
    pub params: RelayParams,
    pub body_voltage: f64,
}

pub fn relay_as_switch(config: SwitchConfig, v_body: f64, base: RelayParams) -> RelaySwitch {
    RelaySwitch {
        config,
        params: RelayParams {
            rest_state: config.rest_state(),
            ..base
        },
        body_voltage: v_body,
    }
}
