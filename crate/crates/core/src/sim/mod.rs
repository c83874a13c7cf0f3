//! Transient engine: backward-Euler node integration with step-doubling error
//! control, a per-step voltage cap, bisection event localization for relay
//! commands and spikes, and Tellegen-consistent energy bookkeeping.

mod ledger;
mod trace;

pub use ledger::{EnergyLedger, Snapshot, TagEnergy};
pub use trace::{Event, EventKind, RelayChange, SimTrace};

use nalgebra::{DMatrix, DVector};

use crate::circuit::{validate, Circuit, Device, RailDrive, StimulusSpec};
use crate::device::{PassiveKind, PassiveParams};
use crate::error::{Error, Result};
use crate::relay::{relay_command, relay_conductance, Contact, RelayParams, RelayState};

pub const ACTUATION_TAG: &str = "relay-actuation";
pub const ACTUATION_SUPPLY_TAG: &str = "supply:relay-drive";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt_min: f64,
    pub dt_max: f64,
    /// Largest node voltage change accepted in one step, V.
    pub dv_max: f64,
    pub event_tol: f64,
    pub rel_tol: f64,
    /// Absolute local error target, V.
    pub abs_tol: f64,
    /// KCL residual bound at quasi-static nodes, A.
    pub kcl_tol: f64,
    pub t_stop: f64,
    /// Energy farther than this from every event counts as static.
    pub quiet_window: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt_min: 1e-14,
            dt_max: 1e-4,
            dv_max: 0.01,
            event_tol: 1e-9,
            rel_tol: 1e-4,
            abs_tol: 1e-6,
            kcl_tol: 1e-15,
            t_stop: 1e-3,
            quiet_window: 10e-6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.dt_min > 0.0
            && self.dt_min <= self.dt_max
            && self.dv_max > 0.0
            && self.event_tol > 0.0
            && self.rel_tol >= 0.0
            && self.abs_tol > 0.0
            && self.kcl_tol > 0.0
            && self.quiet_window >= 0.0
            && self.t_stop.is_finite();
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "invalid solver settings {self:?}"
            )));
        }
        if !(self.t_stop > 0.0) {
            return Err(Error::InvalidArgument(
                "empty trace: t_stop must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub trace: SimTrace,
    pub ledger: EnergyLedger,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Term {
    Node(usize),
    Rail(usize),
}

#[derive(Debug, Clone)]
struct CompiledBranch {
    device: Device,
    terms: [Term; 4],
    nterm: usize,
    stimulus: Option<StimulusSpec>,
    tag: usize,
}

struct Compiled {
    node_names: Vec<String>,
    caps: Vec<f64>,
    quasi_static: Vec<bool>,
    rails: Vec<RailDrive>,
    rail_names: Vec<String>,
    branches: Vec<CompiledBranch>,
    branch_names: Vec<String>,
    relays: Vec<usize>,
    tags: Vec<String>,
    probe: Option<(usize, f64, bool)>,
    handshake: Option<(f64, f64)>,
    vdd: f64,
}

fn compile(circuit: &Circuit) -> Result<Compiled> {
    let diags = validate(circuit);
    if !diags.is_empty() {
        return Err(Error::Validation(diags));
    }
    let lookup = |name: &str| -> Term {
        if let Some(i) = circuit.nodes.iter().position(|n| n.name == name) {
            Term::Node(i)
        } else {
            Term::Rail(circuit.rails.iter().position(|r| r.name == name).unwrap())
        }
    };
    let mut tags: Vec<String> = Vec::new();
    let mut branches = Vec::new();
    let mut relays = Vec::new();
    for (k, b) in circuit.branches.iter().enumerate() {
        let mut terms = [Term::Rail(0); 4];
        for (i, t) in b.terminals.iter().enumerate() {
            terms[i] = lookup(t);
        }
        let tag = match tags.iter().position(|t| *t == b.tag) {
            Some(i) => i,
            None => {
                tags.push(b.tag.clone());
                tags.len() - 1
            }
        };
        if matches!(b.device, Device::Relay(_)) {
            relays.push(k);
        }
        branches.push(CompiledBranch {
            device: b.device.clone(),
            terms,
            nterm: b.terminals.len(),
            stimulus: b.stimulus.clone(),
            tag,
        });
    }
    let probe = circuit.spike_probe.as_ref().map(|p| {
        let i = circuit.nodes.iter().position(|n| n.name == p.node).unwrap();
        (i, p.threshold, p.falling)
    });
    Ok(Compiled {
        node_names: circuit.nodes.iter().map(|n| n.name.clone()).collect(),
        caps: circuit.nodes.iter().map(|n| n.capacitance).collect(),
        quasi_static: circuit.nodes.iter().map(|n| n.quasi_static).collect(),
        rails: circuit.rails.iter().map(|r| r.drive.clone()).collect(),
        rail_names: circuit.rails.iter().map(|r| r.name.clone()).collect(),
        branches,
        branch_names: circuit.branches.iter().map(|b| b.name.clone()).collect(),
        relays,
        tags,
        probe,
        handshake: circuit.handshake.map(|h| (h.latency, h.width)),
        vdd: circuit.vdd,
    })
}

/// Everything that is held constant across one implicit step.
struct StepInputs {
    rails: Vec<f64>,
    /// Per-branch: relay conductance or current-source amplitude.
    drive: Vec<f64>,
}

#[derive(Clone)]
struct Candidate {
    v_half: Vec<f64>,
    v_end: Vec<f64>,
    err: f64,
    worst: usize,
    dv: f64,
}

enum StepFailure {
    NoConvergence,
}

struct Engine<'a> {
    c: &'a Compiled,
    solver: &'a SolverConfig,
    relay_states: Vec<RelayState>,
    ack_windows: Vec<(f64, f64)>,
}

const NEWTON_MAX_ITER: usize = 60;
const NEWTON_MAX_UPDATE: f64 = 0.1;
const FD_STEP: f64 = 1e-7;

impl<'a> Engine<'a> {
    fn ack_high(&self, t: f64) -> bool {
        self.ack_windows.iter().any(|&(r, f)| r <= t && t < f)
    }

    fn rail_value(&self, r: usize, t: f64) -> f64 {
        match &self.c.rails[r] {
            RailDrive::Fixed(v) => *v,
            RailDrive::Stimulus(s) => s.value_at(t),
            RailDrive::Acknowledge { inverted } => {
                if self.ack_high(t) != *inverted {
                    self.c.vdd
                } else {
                    0.0
                }
            }
        }
    }

    fn rails_at(&self, t: f64) -> Vec<f64> {
        (0..self.c.rails.len())
            .map(|r| self.rail_value(r, t))
            .collect()
    }

    fn inputs(&self, t0: f64, h: f64) -> StepInputs {
        let mid = t0 + 0.5 * h;
        let drive = self
            .c
            .branches
            .iter()
            .enumerate()
            .map(|(k, b)| match &b.device {
                Device::Relay(p) => {
                    let ri = self.c.relays.iter().position(|&x| x == k).unwrap();
                    relay_conductance(p, &self.relay_states[ri])
                }
                Device::Passive(p) if p.kind == PassiveKind::CurrentSource => {
                    b.stimulus.as_ref().map_or(p.value, |s| s.value_at(t0 + h))
                }
                _ => 0.0,
            })
            .collect();
        StepInputs {
            rails: self.rails_at(mid),
            drive,
        }
    }

    fn volt(term: Term, v: &[f64], rails: &[f64]) -> f64 {
        match term {
            Term::Node(i) => v[i],
            Term::Rail(r) => rails[r],
        }
    }

    /// Current flowing from each terminal's net into the branch.
    fn branch_currents(
        b: &CompiledBranch,
        tv: &[f64; 4],
        tv0: &[f64; 4],
        drive: f64,
        h: f64,
    ) -> [f64; 4] {
        match &b.device {
            Device::Mos(p) => {
                let i = p.drain_current(tv[1], tv[2], tv[0]);
                [i, 0.0, -i, 0.0]
            }
            Device::Relay(_) => {
                let i = drive * (tv[0] - tv[2]);
                [i, 0.0, -i, 0.0]
            }
            Device::Passive(p) => {
                let i = passive_current(p, tv, tv0, drive, h);
                [i, -i, 0.0, 0.0]
            }
        }
    }

    fn terminal_voltages(b: &CompiledBranch, v: &[f64], rails: &[f64]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for i in 0..b.nterm {
            out[i] = Self::volt(b.terms[i], v, rails);
        }
        out
    }

    fn residual_and_jacobian(
        &self,
        v: &[f64],
        v0: &[f64],
        h: f64,
        inp: &StepInputs,
        jac: Option<&mut DMatrix<f64>>,
    ) -> Vec<f64> {
        let n = v.len();
        let mut r: Vec<f64> = (0..n)
            .map(|i| self.c.caps[i] * (v[i] - v0[i]) / h)
            .collect();
        let mut jac = jac;
        if let Some(j) = jac.as_deref_mut() {
            j.fill(0.0);
            for i in 0..n {
                j[(i, i)] = self.c.caps[i] / h;
            }
        }
        for (k, b) in self.c.branches.iter().enumerate() {
            let tv = Self::terminal_voltages(b, v, &inp.rails);
            let tv0 = Self::terminal_voltages(b, v0, &inp.rails);
            let cur = Self::branch_currents(b, &tv, &tv0, inp.drive[k], h);
            for m in 0..b.nterm {
                if let Term::Node(i) = b.terms[m] {
                    r[i] += cur[m];
                }
            }
            if let Some(j) = jac.as_deref_mut() {
                for p in 0..b.nterm {
                    let Term::Node(col) = b.terms[p] else {
                        continue;
                    };
                    // a node may sit on several terminals; perturb each once
                    if (0..p).any(|q| b.terms[q] == b.terms[p]) {
                        continue;
                    }
                    let mut tvp = tv;
                    for q in 0..b.nterm {
                        if b.terms[q] == b.terms[p] {
                            tvp[q] += FD_STEP;
                        }
                    }
                    let curp = Self::branch_currents(b, &tvp, &tv0, inp.drive[k], h);
                    for m in 0..b.nterm {
                        if let Term::Node(row) = b.terms[m] {
                            j[(row, col)] += (curp[m] - cur[m]) / FD_STEP;
                        }
                    }
                }
            }
        }
        r
    }

    fn solve_step(
        &self,
        v0: &[f64],
        h: f64,
        inp: &StepInputs,
    ) -> std::result::Result<Vec<f64>, StepFailure> {
        let n = v0.len();
        let mut v = v0.to_vec();
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for _ in 0..NEWTON_MAX_ITER {
            let r = self.residual_and_jacobian(&v, v0, h, inp, Some(&mut jac));
            let rhs = -DVector::from_vec(r);
            let dx = jac
                .clone()
                .lu()
                .solve(&rhs)
                .ok_or(StepFailure::NoConvergence)?;
            let biggest = dx.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            if !biggest.is_finite() {
                return Err(StepFailure::NoConvergence);
            }
            let scale = if biggest > NEWTON_MAX_UPDATE {
                NEWTON_MAX_UPDATE / biggest
            } else {
                1.0
            };
            for i in 0..n {
                v[i] += scale * dx[i];
            }
            let tol = 1e-3 * self.solver.abs_tol;
            if scale == 1.0 && biggest <= tol {
                if self.c.quasi_static.iter().any(|&q| q) {
                    let r = self.residual_and_jacobian(&v, v0, h, inp, None);
                    let ok = (0..n)
                        .all(|i| !self.c.quasi_static[i] || r[i].abs() <= self.solver.kcl_tol);
                    if !ok {
                        continue;
                    }
                }
                return Ok(v);
            }
        }
        Err(StepFailure::NoConvergence)
    }

    fn advance(&self, v0: &[f64], t0: f64, h: f64) -> std::result::Result<Candidate, StepFailure> {
        let full = self.solve_step(v0, h, &self.inputs(t0, h))?;
        let v_half = self.solve_step(v0, 0.5 * h, &self.inputs(t0, 0.5 * h))?;
        let v_end = self.solve_step(&v_half, 0.5 * h, &self.inputs(t0 + 0.5 * h, 0.5 * h))?;
        let mut err = 0.0;
        let mut worst = 0;
        let mut dv = 0.0f64;
        for i in 0..v0.len() {
            let e = (v_end[i] - full[i]).abs()
                / (self.solver.abs_tol + self.solver.rel_tol * v_end[i].abs());
            if e > err {
                err = e;
                worst = i;
            }
            dv = dv.max((v_end[i] - v0[i]).abs());
        }
        Ok(Candidate {
            v_half,
            v_end,
            err,
            worst,
            dv,
        })
    }

    fn relay_gate_body(&self, relay: usize, v: &[f64], rails: &[f64]) -> f64 {
        let b = &self.c.branches[self.c.relays[relay]];
        Self::volt(b.terms[1], v, rails) - Self::volt(b.terms[3], v, rails)
    }

    fn relay_params(&self, relay: usize) -> &RelayParams {
        match &self.c.branches[self.c.relays[relay]].device {
            Device::Relay(p) => p,
            _ => unreachable!(),
        }
    }

    /// Whether a threshold crossing happened between `v0` and `v1` that
    /// must be localized: a spike-probe crossing or a new relay command.
    fn triggered(&self, v0: &[f64], v1: &[f64], t0: f64, h: f64) -> bool {
        if let Some((node, thr, falling)) = self.c.probe {
            let crossed = if falling {
                v0[node] > thr && v1[node] <= thr
            } else {
                v0[node] < thr && v1[node] >= thr
            };
            if crossed {
                return true;
            }
        }
        // left-limit rail values so scheduled rail edges do not trigger bisection
        let rails = self.rails_at(t0 + 0.5 * h);
        (0..self.c.relays.len()).any(|ri| {
            let p = self.relay_params(ri);
            let s = self.relay_states[ri];
            let vgb = self.relay_gate_body(ri, v1, &rails);
            match relay_command(p, s, vgb, t0) {
                Ok(n) => n.contact != s.contact,
                Err(_) => true,
            }
        })
    }

    fn next_scheduled(&self, t: f64) -> f64 {
        let mut next = self.solver.t_stop;
        for s in &self.relay_states {
            if let Some(d) = s.pending_deadline() {
                if d > t {
                    next = next.min(d);
                }
            }
        }
        for &(r, f) in &self.ack_windows {
            if r > t {
                next = next.min(r);
            }
            if f > t {
                next = next.min(f);
            }
        }
        let stims = self
            .c
            .rails
            .iter()
            .filter_map(|r| match r {
                RailDrive::Stimulus(s) => Some(s),
                _ => None,
            })
            .chain(self.c.branches.iter().filter_map(|b| b.stimulus.as_ref()));
        for s in stims {
            if let Some(bp) = s.next_breakpoint(t) {
                next = next.min(bp);
            }
        }
        next
    }
}

fn passive_current(p: &PassiveParams, tv: &[f64; 4], tv0: &[f64; 4], drive: f64, h: f64) -> f64 {
    match p.kind {
        PassiveKind::Resistor => (tv[0] - tv[1]) / p.value,
        PassiveKind::Capacitor => p.value * ((tv[0] - tv[1]) - (tv0[0] - tv0[1])) / h,
        PassiveKind::CurrentSource => p.source_current(drive, tv[1] - tv[0]),
        PassiveKind::VoltageSource => 0.0,
    }
}

struct Books {
    tag_dissipated: Vec<f64>,
    tag_delivered: Vec<f64>,
    rail_delivered: Vec<f64>,
    actuation: f64,
    cumulative: f64,
    supplied: f64,
    steps: Vec<(f64, f64, f64)>,
}

/// Integrates the circuit from t = 0 to `solver.t_stop`.
pub fn simulate(circuit: &Circuit, solver: &SolverConfig) -> Result<SimResult> {
    solver.validate()?;
    let c = compile(circuit)?;
    let mut eng = Engine {
        c: &c,
        solver,
        relay_states: c
            .relays
            .iter()
            .map(|&k| match &c.branches[k].device {
                Device::Relay(p) => RelayState::at_rest(p),
                _ => unreachable!(),
            })
            .collect(),
        ack_windows: Vec::new(),
    };
    let mut v: Vec<f64> = circuit.nodes.iter().map(|n| n.initial_voltage).collect();
    let v_start = v.clone();

    let mut trace = SimTrace {
        node_names: c.node_names.clone(),
        branch_names: c.branch_names.clone(),
        relay_names: c
            .relays
            .iter()
            .map(|&k| c.branch_names[k].clone())
            .collect(),
        ..SimTrace::default()
    };
    let mut books = Books {
        tag_dissipated: vec![0.0; c.tags.len()],
        tag_delivered: vec![0.0; c.tags.len()],
        rail_delivered: vec![0.0; c.rails.len()],
        actuation: 0.0,
        cumulative: 0.0,
        supplied: 0.0,
        steps: Vec::new(),
    };
    let mut snapshots = Vec::new();

    // discrete state at t = 0
    let mut t = 0.0;
    let rails0 = eng.rails_at(0.0);
    apply_relay_commands(&mut eng, &v, &rails0, 0.0, &mut trace, &mut books)?;
    record_sample(&eng, &mut trace, 0.0, &v, &v, 1.0, &books);

    let mut h = (solver.dt_max.min(solver.t_stop) * 1e-3).max(solver.dt_min);
    while t < solver.t_stop {
        let target = eng.next_scheduled(t);
        let mut step = h.min(solver.dt_max).min(target - t);
        let mut lands = false;
        if t + step >= target * (1.0 - 1e-15) {
            step = target - t;
            lands = true;
        }
        let cand = match eng.advance(&v, t, step) {
            Ok(c) => c,
            Err(StepFailure::NoConvergence) => {
                if step <= solver.dt_min {
                    return Err(stiffness(&c, t, 0));
                }
                h = (step * 0.25).max(solver.dt_min);
                continue;
            }
        };
        let too_coarse = cand.err > 1.0 || cand.dv > solver.dv_max;
        if too_coarse && step > solver.dt_min {
            let mut factor = if cand.err > 1.0 {
                0.9 / cand.err.sqrt()
            } else {
                1.0
            };
            if cand.dv > solver.dv_max {
                factor = factor.min(0.9 * solver.dv_max / cand.dv);
            }
            h = (step * factor.clamp(0.05, 0.9)).max(solver.dt_min);
            continue;
        }
        if cand.err > 1.0 {
            return Err(stiffness(&c, t, cand.worst));
        }

        let (step, cand) = if step > solver.event_tol && eng.triggered(&v, &cand.v_end, t, step) {
            localize(&eng, &v, t, step, cand)
        } else {
            (step, cand)
        };
        let t1 = if lands && step == target - t {
            target
        } else {
            t + step
        };

        book_energy(&eng, &mut books, &v, &cand, t, t1);
        let v_prev = std::mem::replace(&mut v, cand.v_end.clone());
        t = t1;

        let events_before = trace.events.len();
        // spike detection
        if let Some((node, thr, falling)) = c.probe {
            let crossed = if falling {
                v_prev[node] > thr && v[node] <= thr
            } else {
                v_prev[node] < thr && v[node] >= thr
            };
            if crossed {
                trace.events.push(Event {
                    time: t,
                    kind: EventKind::Spike,
                    source: c.node_names[node].clone(),
                });
                if let Some((lat, width)) = c.handshake {
                    eng.ack_windows.push((t + lat, t + lat + width));
                }
            }
        }
        for &(r, f) in &eng.ack_windows {
            if r == t {
                trace.events.push(Event {
                    time: t,
                    kind: EventKind::AckRise,
                    source: String::new(),
                });
            }
            if f == t {
                trace.events.push(Event {
                    time: t,
                    kind: EventKind::AckFall,
                    source: String::new(),
                });
            }
        }
        let rails = eng.rails_at(t);
        apply_relay_commands(&mut eng, &v, &rails, t, &mut trace, &mut books)?;
        record_sample(&eng, &mut trace, t, &v, &v_prev, step, &books);
        if trace.events.len() > events_before {
            snapshots.push(Snapshot {
                time: t,
                dissipated: books.cumulative,
                supplied: books.supplied,
            });
        }

        h = if cand.err > 0.0 {
            step * (0.9 / cand.err.sqrt()).clamp(0.2, 2.0)
        } else {
            step * 2.0
        };
        if cand.dv > 0.0 {
            h = h.min(step * 0.9 * solver.dv_max / cand.dv).max(step.min(h));
        }
        h = h.max(solver.dt_min);
    }
    snapshots.push(Snapshot {
        time: t,
        dissipated: books.cumulative,
        supplied: books.supplied,
    });

    let ledger = finish_ledger(&c, books, &v_start, &v, &trace, solver, snapshots);
    Ok(SimResult { trace, ledger })
}

fn stiffness(c: &Compiled, t: f64, worst: usize) -> Error {
    Error::Stiffness {
        time: t,
        node: c.node_names.get(worst).cloned().unwrap_or_default(),
    }
}

/// Shrinks the step by bisection until the triggering crossing is bracketed
/// within the event tolerance; returns the shortest triggering step.
fn localize(eng: &Engine, v0: &[f64], t0: f64, step: f64, cand: Candidate) -> (f64, Candidate) {
    let mut lo = 0.0;
    let mut hi = step;
    let mut best = cand;
    while hi - lo > eng.solver.event_tol && hi > eng.solver.dt_min {
        let mid = 0.5 * (lo + hi);
        match eng.advance(v0, t0, mid) {
            Ok(c) if eng.triggered(v0, &c.v_end, t0, mid) => {
                hi = mid;
                best = c;
            }
            Ok(_) => lo = mid,
            Err(_) => break,
        }
    }
    (hi, best)
}

fn book_energy(eng: &Engine, books: &mut Books, v0: &[f64], cand: &Candidate, t0: f64, t1: f64) {
    let h = t1 - t0;
    let before = books.cumulative;
    let subs = [
        (v0, cand.v_half.as_slice(), t0, 0.5 * h),
        (
            cand.v_half.as_slice(),
            cand.v_end.as_slice(),
            t0 + 0.5 * h,
            0.5 * h,
        ),
    ];
    for (va, vb, ts, hs) in subs {
        let inp = eng.inputs(ts, hs);
        let mid: Vec<f64> = va.iter().zip(vb).map(|(a, b)| 0.5 * (a + b)).collect();
        for (k, b) in eng.c.branches.iter().enumerate() {
            let tv = Engine::terminal_voltages(b, vb, &inp.rails);
            let tv0 = Engine::terminal_voltages(b, va, &inp.rails);
            let cur = Engine::branch_currents(b, &tv, &tv0, inp.drive[k], hs);
            let mut absorbed = 0.0;
            for m in 0..b.nterm {
                let vm = Engine::volt(b.terms[m], &mid, &inp.rails);
                absorbed += vm * cur[m];
                if let Term::Rail(r) = b.terms[m] {
                    let e = hs * inp.rails[r] * cur[m];
                    books.rail_delivered[r] += e;
                    books.supplied += e;
                }
            }
            let e = hs * absorbed;
            let is_cap = matches!(
                b.device,
                Device::Passive(PassiveParams {
                    kind: PassiveKind::Capacitor,
                    ..
                })
            );
            if is_cap {
                continue;
            }
            if e >= 0.0 {
                books.tag_dissipated[b.tag] += e;
                books.cumulative += e;
            } else {
                books.tag_delivered[b.tag] -= e;
            }
        }
    }
    books.steps.push((t0, t1, books.cumulative - before));
}

fn apply_relay_commands(
    eng: &mut Engine,
    v: &[f64],
    rails: &[f64],
    t: f64,
    trace: &mut SimTrace,
    books: &mut Books,
) -> Result<()> {
    for ri in 0..eng.c.relays.len() {
        let p = *eng.relay_params(ri);
        let old = eng.relay_states[ri];
        let vgb = eng.relay_gate_body(ri, v, rails);
        let new = relay_command(&p, old, vgb, t).map_err(|e| match e {
            Error::LifetimeExceeded {
                max_cycles, time, ..
            } => Error::LifetimeExceeded {
                relay: eng.c.branch_names[eng.c.relays[ri]].clone(),
                max_cycles,
                time,
            },
            other => other,
        })?;
        if new.contact == old.contact && new.transition_deadline == old.transition_deadline {
            continue;
        }
        let name = eng.c.branch_names[eng.c.relays[ri]].clone();
        let started = new.is_transitioning()
            && (new.contact != old.contact || new.transition_deadline != old.transition_deadline)
            || (new.contact != old.contact && !old.is_transitioning() && p.t_switch == 0.0);
        if started {
            let e = 0.5 * p.c_gb * eng.c.vdd * eng.c.vdd;
            books.actuation += e;
            books.cumulative += e;
            books.supplied += e;
            if let Some(last) = books.steps.last_mut() {
                last.2 += e;
            }
        }
        if new.contact != old.contact {
            trace.relay_timeline.push(RelayChange {
                time: t,
                relay: ri,
                contact: new.contact,
            });
        }
        if new.contact == Contact::Closed && old.contact != Contact::Closed {
            trace.events.push(Event {
                time: t,
                kind: EventKind::RelayClose,
                source: name.clone(),
            });
        }
        if new.contact == Contact::Open && old.contact != Contact::Open {
            trace.events.push(Event {
                time: t,
                kind: EventKind::RelayOpen,
                source: name,
            });
        }
        eng.relay_states[ri] = new;
    }
    Ok(())
}

fn record_sample(
    eng: &Engine,
    trace: &mut SimTrace,
    t: f64,
    v: &[f64],
    v_prev: &[f64],
    h: f64,
    books: &Books,
) {
    let rails = eng.rails_at(t);
    let currents = eng
        .c
        .branches
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let tv = Engine::terminal_voltages(b, v, &rails);
            let tv0 = Engine::terminal_voltages(b, v_prev, &rails);
            let drive = match &b.device {
                Device::Relay(p) => {
                    let ri = eng.c.relays.iter().position(|&x| x == k).unwrap();
                    relay_conductance(p, &eng.relay_states[ri])
                }
                Device::Passive(p) if p.kind == PassiveKind::CurrentSource => {
                    b.stimulus.as_ref().map_or(p.value, |s| s.value_at(t))
                }
                _ => 0.0,
            };
            Engine::branch_currents(b, &tv, &tv0, drive, h)[b.device.conducting_terminals()[0]]
        })
        .collect();
    trace.times.push(t);
    trace.voltages.push(v.to_vec());
    trace.currents.push(currents);
    trace.energy.push(books.cumulative);
}

fn finish_ledger(
    c: &Compiled,
    books: Books,
    v_start: &[f64],
    v_end: &[f64],
    trace: &SimTrace,
    solver: &SolverConfig,
    snapshots: Vec<Snapshot>,
) -> EnergyLedger {
    let mut ledger = EnergyLedger {
        duration: solver.t_stop,
        snapshots,
        ..EnergyLedger::default()
    };
    for (i, tag) in c.tags.iter().enumerate() {
        let e = ledger.tags.entry(tag.clone()).or_default();
        e.dissipated += books.tag_dissipated[i];
        e.delivered += books.tag_delivered[i];
    }
    for (r, name) in c.rail_names.iter().enumerate() {
        if books.rail_delivered[r] != 0.0 {
            ledger
                .tags
                .entry(format!("supply:{name}"))
                .or_default()
                .delivered += books.rail_delivered[r];
        }
    }
    if books.actuation > 0.0 {
        ledger
            .tags
            .entry(ACTUATION_TAG.into())
            .or_default()
            .dissipated += books.actuation;
        ledger
            .tags
            .entry(ACTUATION_SUPPLY_TAG.into())
            .or_default()
            .delivered += books.actuation;
    }
    ledger.total_supply = ledger.tags.values().map(|t| t.delivered).sum();

    let mut stored = 0.0;
    for i in 0..v_start.len() {
        stored += 0.5 * c.caps[i] * (v_end[i] * v_end[i] - v_start[i] * v_start[i]);
    }
    for b in &c.branches {
        if let Device::Passive(p) = &b.device {
            if p.kind == PassiveKind::Capacitor {
                let at = |v: &[f64]| {
                    let rails: Vec<f64> = c
                        .rails
                        .iter()
                        .map(|r| match r {
                            RailDrive::Fixed(x) => *x,
                            _ => 0.0,
                        })
                        .collect();
                    Engine::volt(b.terms[0], v, &rails) - Engine::volt(b.terms[1], v, &rails)
                };
                let (a, z) = (at(v_start), at(v_end));
                stored += 0.5 * p.value * (z * z - a * a);
            }
        }
    }
    ledger.stored_delta = stored;

    let mut event_times: Vec<f64> = trace.events.iter().map(|e| e.time).collect();
    event_times.sort_by(f64::total_cmp);
    let qw = solver.quiet_window;
    let mut static_e = 0.0;
    for &(a, b, e) in &books.steps {
        let k = event_times.partition_point(|&x| x < a);
        let next_gap = event_times
            .get(k)
            .map_or(f64::INFINITY, |&x| if x <= b { 0.0 } else { x - b });
        let prev_gap = if k > 0 {
            a - event_times[k - 1]
        } else {
            f64::INFINITY
        };
        if next_gap.min(prev_gap) > qw {
            static_e += e;
        }
    }
    let total = ledger.dissipated_total();
    ledger.static_dissipated = static_e;
    ledger.dynamic_dissipated = total - static_e;
    ledger
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::RailDrive;
    use crate::device::PassiveParams;

    fn ramp_circuit() -> Circuit {
        let mut c = Circuit::new("ramp", 0.5);
        c.add_rail("gnd", RailDrive::Fixed(0.0))
            .add_node("vmem", 500e-15, 0.0)
            .add_branch(
                "I_inj",
                Device::Passive(PassiveParams::current_source(250e-12)),
                &["gnd", "vmem"],
                "stimulus",
            );
        c
    }

    #[test]
    fn current_ramp_is_linear() {
        let solver = SolverConfig {
            t_stop: 1e-3,
            ..SolverConfig::default()
        };
        let res = simulate(&ramp_circuit(), &solver).unwrap();
        let v = *res.trace.voltages.last().unwrap().first().unwrap();
        assert!((v - 0.5).abs() / 0.5 < 1e-3, "{v}");
        assert!(res.ledger.conservation_error() <= 1e-3 * res.ledger.total_supply);
    }

    #[test]
    fn rc_discharge_matches_exponential() {
        let mut c = Circuit::new("rc", 0.5);
        c.add_rail("gnd", RailDrive::Fixed(0.0))
            .add_node("a", 500e-15, 0.5)
            .add_branch(
                "R1",
                Device::Passive(PassiveParams::resistor(1e6)),
                &["a", "gnd"],
                "load",
            );
        let tau = 0.5e-6;
        let solver = SolverConfig {
            t_stop: tau,
            dt_max: 1e-8,
            ..SolverConfig::default()
        };
        let res = simulate(&c, &solver).unwrap();
        let v = res.trace.voltages.last().unwrap()[0];
        let expect = 0.5 * (-1.0f64).exp();
        assert!(((v - expect) / expect).abs() < 5e-3, "{v} vs {expect}");
    }

    #[test]
    fn zero_t_stop_is_rejected() {
        let solver = SolverConfig {
            t_stop: 0.0,
            ..SolverConfig::default()
        };
        assert!(matches!(
            simulate(&ramp_circuit(), &solver),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn capacitor_only_circuit_draws_nothing() {
        let mut c = Circuit::new("caps", 0.5);
        c.add_rail("gnd", RailDrive::Fixed(0.0))
            .add_node("a", 1e-12, 0.3)
            .add_node("b", 1e-12, 0.1);
        let res = simulate(&c, &SolverConfig::default()).unwrap();
        assert_eq!(res.ledger.total_supply, 0.0);
        assert_eq!(res.ledger.dissipated_total(), 0.0);
    }
}
