use neurosim::config::{sweep_values, SweepScale};
use neurosim::experiments::{efficiency_curve, OperatingPoint};
use neurosim::templates::{TemplateParams, TemplateRegistry};

use super::{solver, Check, NEURONS};

pub const POINTS: usize = 20;

/// Log sweep from about 10 Hz to saturation.
pub fn currents() -> Vec<f64> {
    sweep_values(8e-12, 1e-9, POINTS, SweepScale::Log)
}

pub fn sweep(name: &str, jobs: usize) -> Result<Vec<OperatingPoint>, String> {
    let reg = TemplateRegistry::builtin();
    let t = reg.get(name).unwrap();
    efficiency_curve(
        t,
        &TemplateParams::default(),
        &solver(20e-3),
        &currents(),
        jobs,
    )
    .into_iter()
    .zip(currents())
    .map(|(r, i)| r.map_err(|e| format!("{name} at {i:e} A: {e}")))
    .collect()
}

/// Rate nondecreasing in injection, and never above 1 / refractory.
pub fn check_sweep(name: &str, points: &[OperatingPoint]) -> Check {
    for w in points.windows(2) {
        if w[1].rate < w[0].rate {
            return Err(format!(
                "{name}: rate falls from {:.3} Hz at {:e} A to {:.3} Hz at {:e} A",
                w[0].rate, w[0].i_inject, w[1].rate, w[1].i_inject
            ));
        }
    }
    for p in points {
        let r = p
            .refractory
            .ok_or_else(|| format!("{name} at {:e} A: no refractory dwell", p.i_inject))?;
        if p.rate > 1.0 / r {
            return Err(format!(
                "{name} at {:e} A: rate {:.2} Hz above 1/refractory {:.2} Hz",
                p.i_inject,
                p.rate,
                1.0 / r
            ));
        }
    }
    Ok(format!(
        "{name}: {:.1} Hz to {:.1} Hz over {} points",
        points[0].rate,
        points[points.len() - 1].rate,
        points.len()
    ))
}

pub fn check() -> Check {
    let mut out = Vec::new();
    for (name, _) in NEURONS {
        out.push(check_sweep(name, &sweep(name, 8)?)?);
    }
    Ok(out.join("; "))
}
