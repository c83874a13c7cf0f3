//! Recharge of C_syn after a single pulse. Near vdd, M_tau acts as a
//! conductance g = dI/dV_ds, so the deviation from the resting level decays
//! as exp(-t / tau) with tau = c_syn / g.

use neurosim::device::THERMAL_VOLTAGE;
use neurosim::sim::{simulate, SolverConfig};
use neurosim::templates::{dpi_slots, TemplateParams, TemplateRegistry};

use super::Check;

pub const TOLERANCE: f64 = 0.02;
/// Fit window on the deviation from rest, in thermal voltages.
const WINDOW: (f64, f64) = (0.003, 0.03);

pub fn dpi_solver() -> SolverConfig {
    SolverConfig {
        t_stop: 30e-3,
        dt_max: 10e-6,
        ..SolverConfig::default()
    }
}

/// (fitted, analytic) recharge time constants.
pub fn time_constants(name: &str) -> Result<(f64, f64), String> {
    let reg = TemplateRegistry::builtin();
    let p = TemplateParams::default().with_bias("pulse_count", 1.0);
    let c = reg
        .get(name)
        .unwrap()
        .build(&p)
        .map_err(|e| e.to_string())?;
    let res = simulate(&c, &dpi_solver()).map_err(|e| e.to_string())?;
    let (vdd, v_tau, c_syn) = (0.5, 0.374, 1e-12);
    let v = res.trace.node_series("vsyn").unwrap();
    let t = &res.trace.times;
    let rest = vdd - v[v.len() - 1];

    let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let pulse_end = 101e-6;
    for k in 0..t.len() {
        let x = vdd - v[k] - rest;
        if t[k] > pulse_end && x > WINDOW.0 * THERMAL_VOLTAGE && x < WINDOW.1 * THERMAL_VOLTAGE {
            let y = x.ln();
            n += 1.0;
            sx += t[k];
            sy += y;
            sxx += t[k] * t[k];
            sxy += t[k] * y;
        }
    }
    if n < 10.0 {
        return Err(format!("{name}: only {n} samples in the fit window"));
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

    let m = dpi_slots()
        .into_iter()
        .find(|s| s.name == "M_tau")
        .unwrap()
        .mos;
    let d = 1e-7;
    let i = |x: f64| m.drain_current(v_tau, vdd, vdd - x);
    let g = (i(rest + d) - i(rest - d)).abs() / (2.0 * d);
    Ok((-1.0 / slope, c_syn / g))
}

pub fn check() -> Check {
    let mut notes = Vec::new();
    for name in ["dpi.cmos", "dpi.hybrid"] {
        let (fit, analytic) = time_constants(name)?;
        let err = (fit / analytic - 1.0).abs();
        if err > TOLERANCE {
            return Err(format!(
                "{name}: fitted tau {fit:e} s vs {analytic:e} s ({:.2}%)",
                err * 100.0
            ));
        }
        notes.push(format!(
            "{name} tau {:.4} ms ({:.2}% from first order)",
            fit * 1e3,
            err * 100.0
        ));
    }
    Ok(notes.join(", "))
}
