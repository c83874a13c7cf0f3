//! Name-based circuit description: capacitive nodes, fixed or driven rails,
//! device branches with energy-ledger tags, and stimulus bindings.

use std::collections::BTreeSet;

use crate::device::{MosParams, PassiveKind, PassiveParams};
use crate::relay::RelayParams;

#[derive(Debug, Clone, PartialEq)]
pub enum StimulusSpec {
    Dc {
        level: f64,
    },
    /// `low` outside pulses, `high` for `width` every `period` from `start`.
    PulseTrain {
        low: f64,
        high: f64,
        width: f64,
        period: f64,
        start: f64,
        count: Option<u64>,
    },
    /// Linear interpolation between (time, level) points, held flat outside.
    PiecewiseLinear {
        points: Vec<(f64, f64)>,
    },
}

impl StimulusSpec {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            StimulusSpec::Dc { level } if level.is_finite() => Ok(()),
            StimulusSpec::Dc { .. } => Err("non-finite dc level".into()),
            StimulusSpec::PulseTrain {
                width,
                period,
                start,
                ..
            } => {
                if !(*width > 0.0 && width < period && *start >= 0.0) {
                    Err(format!(
                        "pulse train needs 0 < width < period and start >= 0 \
                         (width={width}, period={period}, start={start})"
                    ))
                } else {
                    Ok(())
                }
            }
            StimulusSpec::PiecewiseLinear { points } => {
                if points.is_empty() {
                    return Err("piecewise-linear stimulus has no points".into());
                }
                if points.iter().any(|&(t, _)| t < 0.0)
                    || points.windows(2).any(|w| w[1].0 <= w[0].0)
                {
                    return Err("piecewise-linear times must be nonnegative and increasing".into());
                }
                Ok(())
            }
        }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        match self {
            StimulusSpec::Dc { level } => *level,
            StimulusSpec::PulseTrain {
                low,
                high,
                width,
                period,
                start,
                count,
            } => {
                if t < *start {
                    return *low;
                }
                let k = ((t - start) / period).floor();
                if let Some(n) = count {
                    if k >= *n as f64 {
                        return *low;
                    }
                }
                let phase = t - start - k * period;
                if phase < *width {
                    *high
                } else {
                    *low
                }
            }
            StimulusSpec::PiecewiseLinear { points } => {
                let first = points[0];
                if t <= first.0 {
                    return first.1;
                }
                for w in points.windows(2) {
                    let (t0, v0) = w[0];
                    let (t1, v1) = w[1];
                    if t <= t1 {
                        return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
                    }
                }
                points[points.len() - 1].1
            }
        }
    }

    /// First waveform breakpoint strictly after `t`.
    pub fn next_breakpoint(&self, t: f64) -> Option<f64> {
        match self {
            StimulusSpec::Dc { .. } => None,
            StimulusSpec::PulseTrain {
                width,
                period,
                start,
                count,
                ..
            } => {
                if t < *start {
                    return Some(*start);
                }
                let k = ((t - start) / period).floor();
                let mut candidates = [start + k * period + width, start + (k + 1.0) * period];
                candidates.sort_by(f64::total_cmp);
                candidates.into_iter().find(|&c| {
                    let idx = ((c - start) / period).floor();
                    c > t && count.is_none_or(|n| idx <= n as f64)
                })
            }
            StimulusSpec::PiecewiseLinear { points } => {
                points.iter().map(|p| p.0).find(|&pt| pt > t)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RailDrive {
    Fixed(f64),
    Stimulus(StimulusSpec),
    /// Output of the fixed-latency AER responder; inverted rails idle high.
    Acknowledge {
        inverted: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rail {
    pub name: String,
    pub drive: RailDrive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: String,
    pub capacitance: f64,
    pub initial_voltage: f64,
    /// Zero-capacitance node solved algebraically each step.
    pub quasi_static: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Device {
    Mos(MosParams),
    Relay(RelayParams),
    Passive(PassiveParams),
}

impl Device {
    /// Terminal names in order: MOS `[d, g, s]`, relay `[d, g, s, b]`,
    /// passive `[a, b]` (current sources push current from `a` into `b`).
    pub fn terminal_count(&self) -> usize {
        match self {
            Device::Mos(_) => 3,
            Device::Relay(_) => 4,
            Device::Passive(_) => 2,
        }
    }

    pub fn is_dissipative(&self) -> bool {
        !matches!(
            self,
            Device::Passive(PassiveParams {
                kind: PassiveKind::Capacitor,
                ..
            })
        )
    }

    /// Indices of terminals that carry current.
    pub fn conducting_terminals(&self) -> &'static [usize] {
        match self {
            Device::Mos(_) => &[0, 2],
            Device::Relay(_) => &[0, 2],
            Device::Passive(_) => &[0, 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub name: String,
    pub device: Device,
    pub terminals: Vec<String>,
    pub tag: String,
    /// Time-varying amplitude for current sources.
    pub stimulus: Option<StimulusSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Handshake {
    pub latency: f64,
    pub width: f64,
}

/// Spike detector: a crossing of `node` through `threshold` in the given direction.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeProbe {
    pub node: String,
    pub threshold: f64,
    pub falling: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub name: String,
    pub vdd: f64,
    pub nodes: Vec<Node>,
    pub rails: Vec<Rail>,
    pub branches: Vec<Branch>,
    pub spike_probe: Option<SpikeProbe>,
    pub handshake: Option<Handshake>,
}

impl Circuit {
    pub fn new(name: impl Into<String>, vdd: f64) -> Self {
        Self {
            name: name.into(),
            vdd,
            nodes: Vec::new(),
            rails: Vec::new(),
            branches: Vec::new(),
            spike_probe: None,
            handshake: None,
        }
    }

    pub fn add_node(&mut self, name: &str, capacitance: f64, initial_voltage: f64) -> &mut Self {
        self.nodes.push(Node {
            name: name.into(),
            capacitance,
            initial_voltage,
            quasi_static: false,
        });
        self
    }

    pub fn add_rail(&mut self, name: &str, drive: RailDrive) -> &mut Self {
        self.rails.push(Rail {
            name: name.into(),
            drive,
        });
        self
    }

    pub fn add_branch(
        &mut self,
        name: &str,
        device: Device,
        terminals: &[&str],
        tag: &str,
    ) -> &mut Self {
        self.branches.push(Branch {
            name: name.into(),
            device,
            terminals: terminals.iter().map(|s| s.to_string()).collect(),
            tag: tag.into(),
            stimulus: None,
        });
        self
    }

    pub fn branch(&self, name: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.name == name)
    }

    pub fn branch_mut(&mut self, name: &str) -> Option<&mut Branch> {
        self.branches.iter_mut().find(|b| b.name == name)
    }

    pub fn node_mut(&mut self, name: &str) -> Option<&mut Node> {
        self.nodes.iter_mut().find(|n| n.name == name)
    }

    pub fn rail_mut(&mut self, name: &str) -> Option<&mut Rail> {
        self.rails.iter_mut().find(|r| r.name == name)
    }

    pub fn has_relays(&self) -> bool {
        self.branches
            .iter()
            .any(|b| matches!(b.device, Device::Relay(_)))
    }
}

/// Structural checks. Empty result iff the circuit is simulatable.
pub fn validate(circuit: &Circuit) -> Vec<String> {
    let mut diags = Vec::new();
    let mut names = BTreeSet::new();
    for n in circuit
        .nodes
        .iter()
        .map(|n| &n.name)
        .chain(circuit.rails.iter().map(|r| &r.name))
    {
        if !names.insert(n.as_str()) {
            diags.push(format!("duplicate node or rail name '{n}'"));
        }
    }
    if !(circuit.vdd > 0.0) {
        diags.push(format!("vdd must be positive, got {}", circuit.vdd));
    }

    let mut connected = BTreeSet::new();
    let mut branch_names = BTreeSet::new();
    for b in &circuit.branches {
        if !branch_names.insert(b.name.as_str()) {
            diags.push(format!("duplicate branch name '{}'", b.name));
        }
        if b.terminals.len() != b.device.terminal_count() {
            diags.push(format!(
                "branch {}: expected {} terminals, found {}",
                b.name,
                b.device.terminal_count(),
                b.terminals.len()
            ));
        }
        for t in &b.terminals {
            if !names.contains(t.as_str()) {
                diags.push(format!("branch {}: unknown node '{t}'", b.name));
            }
            connected.insert(t.as_str());
        }
        if b.device.is_dissipative() && b.tag.trim().is_empty() {
            diags.push(format!(
                "branch {}: dissipative branch has no ledger tag",
                b.name
            ));
        }
        let param_check = match &b.device {
            Device::Mos(p) => p.validate(),
            Device::Relay(p) => p.validate(),
            Device::Passive(p) => {
                if p.kind == PassiveKind::VoltageSource {
                    diags.push(format!(
                        "branch {}: voltage sources must be declared as rails",
                        b.name
                    ));
                }
                p.validate()
            }
        };
        if let Err(e) = param_check {
            diags.push(format!("branch {}: {e}", b.name));
        }
        if let Some(s) = &b.stimulus {
            if let Err(e) = s.validate() {
                diags.push(format!("branch {}: {e}", b.name));
            }
        }
    }

    for n in &circuit.nodes {
        if !(n.capacitance >= 0.0) || !n.capacitance.is_finite() {
            diags.push(format!(
                "node {}: invalid capacitance {}",
                n.name, n.capacitance
            ));
        } else if n.capacitance == 0.0 && !n.quasi_static && connected.contains(n.name.as_str()) {
            diags.push(format!(
                "node {}: floating node (zero capacitance and not quasi-static)",
                n.name
            ));
        }
        if !n.initial_voltage.is_finite() {
            diags.push(format!("node {}: non-finite initial voltage", n.name));
        }
    }

    let mut uses_ack = false;
    for r in &circuit.rails {
        match &r.drive {
            RailDrive::Fixed(v) if !v.is_finite() => {
                diags.push(format!("rail {}: non-finite voltage", r.name))
            }
            RailDrive::Stimulus(s) => {
                if let Err(e) = s.validate() {
                    diags.push(format!("rail {}: {e}", r.name));
                }
            }
            RailDrive::Acknowledge { .. } => uses_ack = true,
            _ => {}
        }
    }
    if uses_ack && (circuit.handshake.is_none() || circuit.spike_probe.is_none()) {
        diags.push("acknowledge rails require a handshake and a spike probe".into());
    }
    if let Some(h) = &circuit.handshake {
        if !(h.latency >= 0.0 && h.width > 0.0) {
            diags.push(format!("handshake: invalid latency/width {h:?}"));
        }
    }
    if let Some(p) = &circuit.spike_probe {
        if !circuit.nodes.iter().any(|n| n.name == p.node) {
            diags.push(format!("spike probe: unknown node '{}'", p.node));
        }
    }
    diags
}
