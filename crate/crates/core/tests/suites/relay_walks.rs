use neurosim::circuit::{Circuit, Device, RailDrive, StimulusSpec};
use neurosim::device::PassiveParams;
use neurosim::relay::{Contact, RelayParams};
use neurosim::sim::simulate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{solver, Check};

pub const WALKS: usize = 1000;
const STEPS: usize = 24;
const HOLD: f64 = 1e-6;
const RAMP: f64 = 1e-9;

/// Reference: closes at |v| >= hi, opens at |v| <= lo, holds in between.
pub fn schmitt(levels: &[f64], lo: f64, hi: f64) -> Vec<bool> {
    let mut closed = false;
    levels
        .iter()
        .map(|v| {
            if v.abs() >= hi {
                closed = true;
            } else if v.abs() <= lo {
                closed = false;
            }
            closed
        })
        .collect()
}

/// A walk of held levels of one sign, kept 1 mV clear of both thresholds.
fn walk(rng: &mut impl Rng, p: &RelayParams) -> Vec<f64> {
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    (0..STEPS)
        .map(|_| loop {
            let v: f64 = rng.gen_range(0.0..0.6);
            if (v - p.v_pull_in).abs() > 1e-3 && (v - p.v_release).abs() > 1e-3 {
                break sign * v;
            }
        })
        .collect()
}

fn gate_waveform(levels: &[f64]) -> StimulusSpec {
    let mut points = vec![(0.0, 0.0)];
    for (k, v) in levels.iter().enumerate() {
        let t = k as f64 * HOLD;
        points.push((t + RAMP, *v));
        points.push((t + HOLD, *v));
    }
    StimulusSpec::PiecewiseLinear { points }
}

fn relay_circuit(levels: &[f64], p: RelayParams) -> Circuit {
    let mut c = Circuit::new("walk", 0.5);
    c.add_rail("gnd", RailDrive::Fixed(0.0))
        .add_rail("vdd", RailDrive::Fixed(0.5))
        .add_rail("g", RailDrive::Stimulus(gate_waveform(levels)))
        .add_node("d", 10e-15, 0.5)
        .add_branch(
            "R_pu",
            Device::Passive(PassiveParams::resistor(1e6)),
            &["d", "vdd"],
            "load",
        )
        .add_branch("K", Device::Relay(p), &["d", "g", "gnd", "gnd"], "switch");
    c
}

/// Contact at the end of each hold, read from the relay timeline.
fn simulated_states(levels: &[f64], p: RelayParams) -> Result<(Vec<bool>, usize), String> {
    let c = relay_circuit(levels, p);
    let res = simulate(&c, &solver(levels.len() as f64 * HOLD)).map_err(|e| e.to_string())?;
    let tl = &res.trace.relay_timeline;
    let states = (0..levels.len())
        .map(|k| {
            let t = (k + 1) as f64 * HOLD - 1e-9;
            tl.iter()
                .rfind(|ch| ch.time <= t)
                .is_some_and(|ch| ch.contact == Contact::Closed)
        })
        .collect();
    let closures = tl.iter().filter(|ch| ch.contact == Contact::Closed).count();
    Ok((states, closures))
}

pub fn check() -> Check {
    let p = RelayParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5c4d);
    let mut transitions = 0;
    for w in 0..WALKS {
        let levels = walk(&mut rng, &p);
        let expect = schmitt(&levels, p.v_release, p.v_pull_in);
        let (got, closures) = simulated_states(&levels, p).map_err(|e| format!("walk {w}: {e}"))?;
        if got != expect {
            let k = got.iter().zip(&expect).position(|(a, b)| a != b).unwrap();
            return Err(format!(
                "walk {w}, hold {k} at {:.4} V: relay {} but automaton {}",
                levels[k],
                if got[k] { "closed" } else { "open" },
                if expect[k] { "closed" } else { "open" }
            ));
        }
        let expect_closures = expect
            .iter()
            .fold((false, 0), |(prev, n), &s| (s, n + (s && !prev) as usize))
            .1;
        if closures != expect_closures {
            return Err(format!(
                "walk {w}: {closures} closures, automaton {expect_closures}"
            ));
        }
        transitions += expect_closures;
    }
    Ok(format!(
        "{WALKS} random walks match the Schmitt automaton ({transitions} closures)"
    ))
}
