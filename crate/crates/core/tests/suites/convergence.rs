use neurosim::analysis::spike_train;
use neurosim::sim::{simulate, SolverConfig};
use neurosim::templates::{TemplateParams, TemplateRegistry};

use super::{solver, Check, NEURONS};

pub const SPIKE_SHIFT: f64 = 1e-6;
pub const ENERGY_SHIFT: f64 = 0.005;

fn spikes_and_energy(name: &str, i: f64, s: &SolverConfig) -> Result<(Vec<f64>, f64), String> {
    let reg = TemplateRegistry::builtin();
    let c = reg
        .get(name)
        .unwrap()
        .build(&TemplateParams::default().with_bias("i_inject", i))
        .map_err(|e| e.to_string())?;
    let res = simulate(&c, s).map_err(|e| e.to_string())?;
    Ok((
        spike_train(&res.trace, &c).times,
        res.ledger.dissipated_total(),
    ))
}

pub fn check() -> Check {
    let mut notes = Vec::new();
    for (name, i) in NEURONS {
        let coarse = solver(6e-3);
        let fine = SolverConfig {
            dt_max: coarse.dt_max / 2.0,
            dv_max: coarse.dv_max / 2.0,
            ..coarse
        };
        let (ta, ea) = spikes_and_energy(name, i, &coarse)?;
        let (tb, eb) = spikes_and_energy(name, i, &fine)?;
        if ta.len() != tb.len() || ta.is_empty() {
            return Err(format!(
                "{name}: {} spikes vs {} after halving",
                ta.len(),
                tb.len()
            ));
        }
        let shift = ta
            .iter()
            .zip(&tb)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let de = (ea - eb).abs() / eb;
        if shift >= SPIKE_SHIFT || de >= ENERGY_SHIFT {
            return Err(format!(
                "{name}: spike shift {:.3} us, energy shift {:.3}% after halving",
                shift * 1e6,
                de * 100.0
            ));
        }
        notes.push(format!(
            "{name} {} spikes, max shift {:.1} ns, energy {:.3}%",
            ta.len(),
            shift * 1e9,
            de * 100.0
        ));
    }
    Ok(notes.join("; "))
}
