//! Property suites. Each `check` returns a one-line summary on success and
//! the first violation on failure; the integration tests and the acceptance
//! run both call them.
#![allow(dead_code)]

pub mod conservation;
pub mod convergence;
pub mod determinism;
pub mod dpi_tau;
pub mod fi;
pub mod lif_oracle;
pub mod linear;
pub mod parser_fuzz;
pub mod relay_walks;

use neurosim::circuit::{Circuit, RailDrive};
use neurosim::sim::{SimTrace, SolverConfig};

pub type Check = Result<String, String>;

pub const NEURONS: [(&str, f64); 2] = [("lif.cmos", 250e-12), ("lif.hybrid", 235e-12)];

pub fn solver(t_stop: f64) -> SolverConfig {
    SolverConfig {
        t_stop,
        ..SolverConfig::default()
    }
}

/// Voltage of a node or fixed rail at trace sample `k`.
pub fn terminal_voltage(c: &Circuit, trace: &SimTrace, name: &str, k: usize) -> f64 {
    if let Some(i) = trace.node_index(name) {
        return trace.voltages[k][i];
    }
    match c.rails.iter().find(|r| r.name == name).map(|r| &r.drive) {
        Some(RailDrive::Fixed(v)) => *v,
        Some(RailDrive::Stimulus(s)) => s.value_at(trace.times[k]),
        _ => panic!("terminal {name} has no fixed voltage"),
    }
}

/// Energy dissipated by the named branches over samples in `[t0, t1]`,
/// from trace currents and terminal voltages (trapezoidal rule).
pub fn branch_energy(c: &Circuit, trace: &SimTrace, branches: &[&str], t0: f64, t1: f64) -> f64 {
    let mut e = 0.0;
    for name in branches {
        let b = c.branch(name).unwrap_or_else(|| panic!("no branch {name}"));
        let idx = trace.branch_index(name).unwrap();
        let conducting = b.device.conducting_terminals();
        let (ta, tb) = (&b.terminals[conducting[0]], &b.terminals[conducting[1]]);
        for k in 1..trace.times.len() {
            let (a, z) = (trace.times[k - 1], trace.times[k]);
            if a < t0 || z > t1 {
                continue;
            }
            let p = |j: usize| {
                let dv = terminal_voltage(c, trace, ta, j) - terminal_voltage(c, trace, tb, j);
                (trace.currents[j][idx] * dv).abs()
            };
            e += 0.5 * (p(k - 1) + p(k)) * (z - a);
        }
    }
    e
}

use nalgebra::{DMatrix, DVector};
use neurosim::circuit::Device;
use neurosim::device::PassiveParams;
use rand::Rng;

/// `C dv/dt = -G v + b` for a network of grounded node capacitors,
/// resistors, fixed rails and DC current sources.
pub struct LinearModel {
    pub caps: Vec<f64>,
    pub g: DMatrix<f64>,
    pub b: DVector<f64>,
    pub v0: DVector<f64>,
}

impl LinearModel {
    pub fn steady_state(&self) -> DVector<f64> {
        self.g
            .clone()
            .lu()
            .solve(&self.b)
            .expect("every node reaches a rail")
    }

    /// Eigenvalues of `C^-1 G`, slowest first.
    pub fn rates(&self) -> Vec<f64> {
        let (m, _) = self.symmetric();
        let mut l: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        l.sort_by(f64::total_cmp);
        l
    }

    fn symmetric(&self) -> (DMatrix<f64>, DVector<f64>) {
        let s = DVector::from_iterator(self.caps.len(), self.caps.iter().map(|c| 1.0 / c.sqrt()));
        let n = self.caps.len();
        let m = DMatrix::from_fn(n, n, |i, j| s[i] * self.g[(i, j)] * s[j]);
        (m, s)
    }

    /// Closed-form node voltages at `t`.
    pub fn at(&self, t: f64) -> DVector<f64> {
        let (m, s) = self.symmetric();
        let eig = m.symmetric_eigen();
        let vss = self.steady_state();
        let x0 = (&self.v0 - &vss).component_div(&s);
        let mut y = eig.eigenvectors.transpose() * x0;
        for (k, l) in eig.eigenvalues.iter().enumerate() {
            y[k] *= (-l * t).exp();
        }
        (eig.eigenvectors * y).component_mul(&s) + vss
    }
}

/// A connected network of 1 to 5 nodes. Every node has a resistor to some
/// rail, so the steady state is unique.
pub fn random_linear_network(rng: &mut impl Rng, id: usize) -> (Circuit, LinearModel) {
    let n = rng.gen_range(1..=5);
    let mut c = Circuit::new(format!("net{id}"), 0.5);
    let rails: Vec<(String, f64)> = (0..rng.gen_range(1..=3))
        .map(|k| {
            (
                format!("r{k}"),
                if k == 0 { 0.0 } else { rng.gen_range(0.0..0.5) },
            )
        })
        .collect();
    for (name, v) in &rails {
        c.add_rail(name, RailDrive::Fixed(*v));
    }
    let mut caps = Vec::new();
    let mut v0 = Vec::new();
    for i in 0..n {
        let cap = 10f64.powf(rng.gen_range(-13.0..-11.7));
        let v = rng.gen_range(0.0..0.5);
        c.add_node(&format!("n{i}"), cap, v);
        caps.push(cap);
        v0.push(v);
    }
    let mut g = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    let mut branch = 0;
    let mut resistor = |c: &mut Circuit,
                        g: &mut DMatrix<f64>,
                        b: &mut DVector<f64>,
                        i: usize,
                        other: Result<usize, usize>,
                        rng: &mut dyn rand::RngCore| {
        let r = 10f64.powf(rng.gen_range(5.0..7.0));
        let name = format!("R{branch}");
        branch += 1;
        match other {
            Ok(j) => {
                c.add_branch(
                    &name,
                    Device::Passive(PassiveParams::resistor(r)),
                    &[&format!("n{i}"), &format!("n{j}")],
                    "load",
                );
                g[(i, i)] += 1.0 / r;
                g[(j, j)] += 1.0 / r;
                g[(i, j)] -= 1.0 / r;
                g[(j, i)] -= 1.0 / r;
            }
            Err(k) => {
                c.add_branch(
                    &name,
                    Device::Passive(PassiveParams::resistor(r)),
                    &[&format!("n{i}"), &rails[k].0],
                    "load",
                );
                g[(i, i)] += 1.0 / r;
                b[i] += rails[k].1 / r;
            }
        }
    };
    for i in 0..n {
        let k = rng.gen_range(0..rails.len());
        resistor(&mut c, &mut g, &mut b, i, Err(k), rng);
    }
    for _ in 0..rng.gen_range(0..=2 * n) {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i != j {
            resistor(&mut c, &mut g, &mut b, i, Ok(j), rng);
        } else {
            let k = rng.gen_range(0..rails.len());
            resistor(&mut c, &mut g, &mut b, i, Err(k), rng);
        }
    }
    for s in 0..rng.gen_range(0..=2) {
        let i = rng.gen_range(0..n);
        let amp = rng.gen_range(-50e-9..50e-9);
        c.add_branch(
            &format!("I{s}"),
            Device::Passive(PassiveParams::current_source(amp)),
            &[&rails[0].0, &format!("n{i}")],
            "stimulus",
        );
        b[i] += amp;
    }
    let model = LinearModel {
        caps,
        g,
        b,
        v0: DVector::from_vec(v0),
    };
    (c, model)
}
