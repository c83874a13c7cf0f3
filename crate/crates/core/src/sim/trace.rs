use std::fmt::Write as _;
use std::io::{self, Write};

use crate::relay::Contact;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Spike,
    RelayClose,
    RelayOpen,
    AckRise,
    AckFall,
}

impl EventKind {
    pub fn label(self) -> &'static str {
        match self {
            EventKind::Spike => "spike",
            EventKind::RelayClose => "relay-close",
            EventKind::RelayOpen => "relay-open",
            EventKind::AckRise => "ack-rise",
            EventKind::AckFall => "ack-fall",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    /// Relay name for relay events, probe node for spikes, empty otherwise.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelayChange {
    pub time: f64,
    pub relay: usize,
    pub contact: Contact,
}

/// Samples of one transient run. Every accepted step and every event time
/// has a sample.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimTrace {
    pub node_names: Vec<String>,
    pub branch_names: Vec<String>,
    pub relay_names: Vec<String>,
    pub times: Vec<f64>,
    pub voltages: Vec<Vec<f64>>,
    pub currents: Vec<Vec<f64>>,
    /// Cumulative dissipated energy at each sample, J.
    pub energy: Vec<f64>,
    pub relay_timeline: Vec<RelayChange>,
    pub events: Vec<Event>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.node_names.iter().position(|n| n == name)
    }

    pub fn branch_index(&self, name: &str) -> Option<usize> {
        self.branch_names.iter().position(|n| n == name)
    }

    pub fn node_series(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.node_index(name)?;
        Some(self.voltages.iter().map(|row| row[i]).collect())
    }

    pub fn branch_series(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.branch_index(name)?;
        Some(self.currents.iter().map(|row| row[i]).collect())
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// Cumulative dissipated energy at time `t`, linearly interpolated.
    pub fn energy_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&x| x < t);
        if k == 0 {
            return self.energy.first().copied().unwrap_or(0.0);
        }
        if k >= self.times.len() {
            return self.energy.last().copied().unwrap_or(0.0);
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let (e0, e1) = (self.energy[k - 1], self.energy[k]);
        e0 + (e1 - e0) * (t - t0) / (t1 - t0)
    }

    pub fn csv_header(&self) -> String {
        let mut h = String::from("t_s");
        for n in &self.node_names {
            let _ = write!(h, ",{n}_V");
        }
        for b in &self.branch_names {
            let _ = write!(h, ",{b}_A");
        }
        h.push_str(",event");
        h
    }

    /// Writes `t_s,<node>_V...,<branch>_A...,event`. Event rows repeat the
    /// sample taken at the event time.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", self.csv_header())?;
        let mut ev = 0;
        let mut line = String::new();
        for k in 0..self.times.len() {
            line.clear();
            let _ = write!(line, "{:e}", self.times[k]);
            for v in &self.voltages[k] {
                let _ = write!(line, ",{v:e}");
            }
            for i in &self.currents[k] {
                let _ = write!(line, ",{i:e}");
            }
            writeln!(w, "{line},")?;
            let next_t = self.times.get(k + 1).copied().unwrap_or(f64::INFINITY);
            while ev < self.events.len() && self.events[ev].time < next_t {
                let e = &self.events[ev];
                let label = if e.source.is_empty() {
                    e.kind.label().to_string()
                } else {
                    format!("{}:{}", e.kind.label(), e.source)
                };
                // numeric cells repeat the current sample, time is the event's
                let rest = line.split_once(',').map(|x| x.1).unwrap_or("");
                if rest.is_empty() {
                    writeln!(w, "{:e},{label}", e.time)?;
                } else {
                    writeln!(w, "{:e},{rest},{label}", e.time)?;
                }
                ev += 1;
            }
        }
        Ok(())
    }
}
