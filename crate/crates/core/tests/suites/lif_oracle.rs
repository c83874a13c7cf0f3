//! Idealized LIF: the membrane, injection and leak of a template with the
//! feedback and refractory branches replaced by an ideal comparator and a
//! timed reset. The effective threshold and refractory period come from a
//! calibration run of the full template.

use neurosim::analysis::spike_train;
use neurosim::circuit::{Circuit, Device, RailDrive};
use neurosim::device::PassiveParams;
use neurosim::experiments::run;
use neurosim::relay::RelayParams;
use neurosim::sim::simulate;
use neurosim::templates::{lif_slots, TemplateParams, TemplateRegistry};

use super::{solver, Check, NEURONS};

pub const TOLERANCE: f64 = 0.05;
const C_MEM: f64 = 500e-15;
const V_LK: f64 = 0.116;
const FAST: f64 = 1e-9;
const RELEASE: f64 = 1e-3;
const C_TIMER: f64 = 1e-12;

pub struct Calibration {
    pub v_th_eff: f64,
    pub t_refr: f64,
    pub period: f64,
}

/// Membrane voltage at each steady spike, and the mean refractory dwell.
pub fn calibrate(name: &str, i_inject: f64) -> Result<Calibration, String> {
    let reg = TemplateRegistry::builtin();
    let t = reg.get(name).unwrap();
    let p = TemplateParams::default().with_bias("i_inject", i_inject);
    let (_, res, train) = run(t, &p, &solver(15e-3)).map_err(|e| e.to_string())?;
    let steady = train.after(train.times[0] + 1e-9);
    let vm = res.trace.node_series("vmem").unwrap();
    let at = |ts: f64| {
        let k = res.trace.times.partition_point(|&x| x < ts);
        vm[k]
    };
    let v: Vec<f64> = steady.times.iter().map(|&ts| at(ts)).collect();
    Ok(Calibration {
        v_th_eff: v.iter().sum::<f64>() / v.len() as f64,
        t_refr: steady.mean_refractory().ok_or("no refractory dwell")?,
        period: 1.0 / steady.mean_rate().ok_or("too few spikes")?,
    })
}

fn leak_params() -> neurosim::device::MosParams {
    lif_slots()
        .into_iter()
        .find(|s| s.name == "M_leak")
        .unwrap()
        .mos
}

pub fn ideal_circuit(i_inject: f64, cal: &Calibration) -> Circuit {
    let comparator = RelayParams {
        v_pull_in: cal.v_th_eff,
        v_release: RELEASE,
        t_switch: FAST,
        r_on: 1e3,
        c_gb: 0.0,
        ..RelayParams::default()
    };
    let reset = RelayParams {
        v_pull_in: 0.4,
        v_release: 0.1,
        t_switch: FAST,
        r_on: 1e3,
        c_gb: 0.0,
        ..RelayParams::default()
    };
    // timer decays from 0.5 V to the reset release level in t_refr
    let r_timer = cal.t_refr / (C_TIMER * (0.5f64 / reset.v_release).ln());
    let mut c = Circuit::new("ideal-lif", 0.5);
    c.add_rail("gnd", RailDrive::Fixed(0.0))
        .add_rail("vdd", RailDrive::Fixed(0.5))
        .add_rail("v_lk", RailDrive::Fixed(V_LK))
        .add_node("vmem", C_MEM, 0.0)
        .add_node("vt", C_TIMER, 0.0)
        .add_branch(
            "I_inject",
            Device::Passive(PassiveParams::current_source(i_inject)),
            &["gnd", "vmem"],
            "stimulus",
        )
        .add_branch(
            "M_leak",
            Device::Mos(leak_params()),
            &["vmem", "v_lk", "gnd"],
            "leak",
        )
        .add_branch(
            "K_cmp",
            Device::Relay(comparator),
            &["vt", "vmem", "vdd", "gnd"],
            "comparison",
        )
        .add_branch(
            "K_reset",
            Device::Relay(reset),
            &["vmem", "vt", "gnd", "gnd"],
            "reset",
        )
        .add_branch(
            "R_timer",
            Device::Passive(PassiveParams::resistor(r_timer)),
            &["vt", "gnd"],
            "refractory",
        );
    c.spike_probe = Some(neurosim::circuit::SpikeProbe {
        node: "vt".into(),
        threshold: 0.25,
        falling: false,
    });
    c
}

/// `c_mem * V_th_eff / (i_inject - i_leak) + t_refr`, leak taken at mid-ramp.
pub fn predicted_period(i_inject: f64, cal: &Calibration) -> f64 {
    let i_leak = leak_params().drain_current(V_LK, 0.0, cal.v_th_eff / 2.0);
    C_MEM * cal.v_th_eff / (i_inject - i_leak) + cal.t_refr
}

pub fn ideal_period(i_inject: f64, cal: &Calibration) -> Result<f64, String> {
    let c = ideal_circuit(i_inject, cal);
    let t_stop = 6.0 * predicted_period(i_inject, cal);
    let res = simulate(&c, &solver(t_stop)).map_err(|e| e.to_string())?;
    let train = spike_train(&res.trace, &c);
    train
        .mean_rate()
        .map(|r| 1.0 / r)
        .ok_or_else(|| format!("{} spikes", train.len()))
}

pub fn check() -> Check {
    let mut notes = Vec::new();
    for (name, anchor) in NEURONS {
        for i in [anchor, 100e-12] {
            let cal = calibrate(name, i)?;
            let t_pred = predicted_period(i, &cal);
            let t_ideal = ideal_period(i, &cal)?;
            let err = (t_ideal / t_pred - 1.0).abs();
            if err > TOLERANCE {
                return Err(format!(
                    "{name} at {:.0} pA: ideal period {t_ideal:e} s vs {t_pred:e} s ({:.2}%)",
                    i * 1e12,
                    err * 100.0
                ));
            }
            notes.push(format!(
                "{name}@{:.0}pA {:.2}% (full template {:+.1}%)",
                i * 1e12,
                err * 100.0,
                (cal.period / t_pred - 1.0) * 100.0
            ));
        }
    }
    Ok(notes.join(", "))
}
