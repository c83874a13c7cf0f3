use neurosim::circuit::{Circuit, Device, RailDrive};
use neurosim::device::PassiveParams;
use neurosim::sim::simulate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{random_linear_network, solver, Check, LinearModel};

pub const TOLERANCE: f64 = 0.005;
pub const NETWORKS: usize = 50;

/// Worst deviation from the closed form over every sample and node,
/// relative to the largest exact voltage magnitude.
pub fn sup_norm_error(c: &Circuit, model: &LinearModel, t_stop: f64) -> Result<f64, String> {
    let res = simulate(c, &solver(t_stop)).map_err(|e| format!("{}: {e}", c.name))?;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (k, &t) in res.trace.times.iter().enumerate() {
        let exact = model.at(t);
        for (i, v) in exact.iter().enumerate() {
            let idx = res.trace.node_index(&format!("n{i}")).unwrap();
            worst = worst.max((res.trace.voltages[k][idx] - v).abs());
            scale = scale.max(v.abs());
        }
    }
    Ok(worst / scale.max(1e-3))
}

/// The single-node discharge: 500 fF through 1 MOhm from 0.5 V.
fn rc_discharge() -> (Circuit, LinearModel) {
    let mut c = Circuit::new("rc", 0.5);
    c.add_rail("r0", RailDrive::Fixed(0.0))
        .add_node("n0", 500e-15, 0.5)
        .add_branch(
            "R0",
            Device::Passive(PassiveParams::resistor(1e6)),
            &["n0", "r0"],
            "load",
        );
    let model = LinearModel {
        caps: vec![500e-15],
        g: nalgebra::DMatrix::from_element(1, 1, 1e-6),
        b: nalgebra::DVector::zeros(1),
        v0: nalgebra::DVector::from_element(1, 0.5),
    };
    (c, model)
}

pub fn check() -> Check {
    let (c, m) = rc_discharge();
    let mut worst = sup_norm_error(&c, &m, 2.5e-6)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x11ea);
    for id in 0..NETWORKS {
        let (c, m) = random_linear_network(&mut rng, id);
        let slowest = m.rates()[0];
        let err = sup_norm_error(&c, &m, 5.0 / slowest)?;
        if err > TOLERANCE {
            return Err(format!(
                "{}: sup-norm error {:.3}% > {:.1}%",
                c.name,
                err * 100.0,
                TOLERANCE * 100.0
            ));
        }
        worst = worst.max(err);
    }
    Ok(format!(
        "RC discharge plus {NETWORKS} random linear networks, worst sup-norm error {:.4}%",
        worst * 100.0
    ))
}
