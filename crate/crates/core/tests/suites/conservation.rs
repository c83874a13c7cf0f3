use neurosim::circuit::Device;
use neurosim::device::PassiveParams;
use neurosim::sim::{simulate, SimResult};
use neurosim::templates::{TemplateParams, TemplateRegistry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{branch_energy, random_linear_network, solver, Check};

/// Allowed imbalance per simulated second, relative to the energy scale.
pub const TOLERANCE_PER_SECOND: f64 = 0.01;
pub const NETWORKS: usize = 100;

/// Imbalance relative to the run's energy scale, divided by the duration.
fn imbalance(res: &SimResult) -> f64 {
    let l = &res.ledger;
    let scale = l
        .total_supply
        .abs()
        .max(l.dissipated_total())
        .max(l.stored_delta.abs());
    if scale == 0.0 {
        return 0.0;
    }
    l.conservation_error() / scale / l.duration
}

pub fn check() -> Check {
    let reg = TemplateRegistry::builtin();
    let mut worst: f64 = 0.0;
    for name in reg.names() {
        let c = reg
            .get(name)
            .unwrap()
            .build(&TemplateParams::default())
            .unwrap();
        let res = simulate(&c, &solver(20e-3)).map_err(|e| format!("{name}: {e}"))?;
        let x = imbalance(&res);
        if x > TOLERANCE_PER_SECOND {
            return Err(format!("{name}: imbalance {x:e} per second"));
        }
        worst = worst.max(x);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xe4e7);
    for id in 0..NETWORKS {
        let (mut c, m) = random_linear_network(&mut rng, id);
        let n = c.nodes.len();
        // coupling capacitors exercise the branch-capacitor storage term
        for k in 0..rng.gen_range(0..n) {
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if i != j {
                let cap = 10f64.powf(rng.gen_range(-14.0..-12.5));
                c.add_branch(
                    &format!("C{k}"),
                    Device::Passive(PassiveParams::capacitor(cap)),
                    &[&format!("n{i}"), &format!("n{j}")],
                    "coupling",
                );
            }
        }
        let t_stop = 3.0 / m.rates()[0];
        let res = simulate(&c, &solver(t_stop)).map_err(|e| format!("{}: {e}", c.name))?;
        let x = imbalance(&res);
        if x > TOLERANCE_PER_SECOND {
            return Err(format!("{}: imbalance {x:e} per second", c.name));
        }
        worst = worst.max(x);

        // resistor heat recomputed from the trace alone
        let resistors: Vec<&str> = c
            .branches
            .iter()
            .filter(|b| b.tag == "load")
            .map(|b| b.name.as_str())
            .collect();
        let heat = branch_energy(&c, &res.trace, &resistors, 0.0, t_stop);
        let booked = res.ledger.tag("load").dissipated;
        if (heat - booked).abs() > 0.01 * booked.max(1e-30) {
            return Err(format!(
                "{}: trace heat {heat:e} J vs ledger {booked:e} J",
                c.name
            ));
        }
    }
    Ok(format!(
        "4 templates plus {NETWORKS} random RC networks, worst imbalance {worst:.2e} of the energy scale per second"
    ))
}
