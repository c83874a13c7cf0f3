use std::collections::BTreeMap;

use neurosim::config::{
    parse_config_with, preset_text, ExperimentConfig, OutputFormat, Sweep, SweepScale, SOLVER_KEYS,
};
use neurosim::templates::{mos_keys, relay_keys, InstanceKind, TemplateRegistry};
use neurosim::units::{Dimension, Quantity};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Check;

pub const MUTANTS: usize = 1000;
pub const RANDOM_CONFIGS: usize = 300;

pub fn fixtures() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = [
        (
            "lif-pulse-sweep",
            include_str!("../fixtures/lif-pulse-sweep.cfg"),
        ),
        ("hybrid-rate", include_str!("../fixtures/hybrid-rate.cfg")),
        ("dpi-pwl", include_str!("../fixtures/dpi-pwl.cfg")),
        ("lif-dc", include_str!("../fixtures/lif-dc.cfg")),
    ]
    .into_iter()
    .map(|(n, t)| (n.to_string(), t.to_string()))
    .collect();
    for name in neurosim::config::builtin_preset_names() {
        out.push((name.to_string(), preset_text(name).expect("builtin preset")));
    }
    out
}

/// Lines that are malformed wherever they appear.
const BROKEN: &[&str] = &[
    "this line has no equals sign",
    "= 3 V",
    "[unterminated",
    "q_extra =",
    "dir = \"open quote",
    "q_width = 3 pA pA",
    "x_unit = 1e",
    "]",
];

fn round_trip(name: &str, cfg: &ExperimentConfig, reg: &TemplateRegistry) -> Result<(), String> {
    let text = cfg.serialize(reg);
    let back = parse_config_with(&text, reg)
        .map_err(|d| format!("{name}: serialized text does not parse: {}\n{text}", d[0]))?;
    if &back != cfg {
        return Err(format!("{name}: round trip changed the config\n{text}"));
    }
    if back.serialize(reg) != text {
        return Err(format!("{name}: serialization is not stable"));
    }
    Ok(())
}

fn random_quantity(rng: &mut impl Rng, dim: Dimension) -> Quantity {
    let magnitude = rng.gen_range(0.5..9.5) * 10f64.powi(rng.gen_range(-15..4));
    let dimension = if dim == Dimension::Dimensionless || rng.gen_bool(0.2) {
        None
    } else {
        Some(dim)
    };
    Quantity {
        magnitude,
        dimension,
    }
}

fn random_config(rng: &mut impl Rng, reg: &TemplateRegistry) -> ExperimentConfig {
    let name = *reg.names().choose(rng).unwrap();
    let t = reg.get(name).unwrap();
    let mut cfg = ExperimentConfig::new(name);
    for k in t.bias_keys() {
        if rng.gen_bool(0.4) {
            cfg.biases
                .insert(k.name.to_string(), random_quantity(rng, k.dimension));
        }
    }
    for (inst, kind) in t.instances() {
        if rng.gen_bool(0.3) {
            let mut m = BTreeMap::new();
            let mut keys: Vec<(&str, Dimension)> = mos_keys().to_vec();
            if *kind == InstanceKind::Switch {
                keys.extend_from_slice(relay_keys());
            }
            for (k, d) in keys.choose_multiple(rng, 2) {
                m.insert(k.to_string(), random_quantity(rng, *d));
            }
            cfg.devices.insert(inst.to_string(), m);
        }
    }
    if rng.gen_bool(0.3) {
        let (k, d) = relay_keys().choose(rng).unwrap();
        cfg.relay.insert(k.to_string(), random_quantity(rng, *d));
    }
    for (k, d) in SOLVER_KEYS {
        if rng.gen_bool(0.2) {
            cfg.solver.insert(k.to_string(), random_quantity(rng, *d));
        }
    }
    if rng.gen_bool(0.3) {
        cfg.target_rate = Some(random_quantity(rng, Dimension::Hertz));
    }
    if rng.gen_bool(0.3) {
        let k = t.bias_keys().choose(rng).unwrap();
        let from = random_quantity(rng, k.dimension);
        let to = Quantity {
            magnitude: from.magnitude * rng.gen_range(1.5..10.0),
            dimension: from.dimension,
        };
        cfg.sweep = Some(Sweep {
            key: k.name.to_string(),
            from,
            to,
            steps: rng.gen_range(2..50),
            scale: if rng.gen_bool(0.5) {
                SweepScale::Linear
            } else {
                SweepScale::Log
            },
        });
    }
    if rng.gen_bool(0.3) {
        cfg.output.dir = Some(format!("out/run {}", rng.gen_range(0..100)));
        cfg.output.format = Some(if rng.gen_bool(0.5) {
            OutputFormat::Csv
        } else {
            OutputFormat::Markdown
        });
    }
    cfg
}

pub fn check() -> Check {
    let reg = TemplateRegistry::builtin();
    let fixtures = fixtures();
    for (name, text) in &fixtures {
        let cfg = parse_config_with(text, &reg).map_err(|d| format!("{name}: {}", d[0]))?;
        round_trip(name, &cfg, &reg)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xf022);
    for k in 0..RANDOM_CONFIGS {
        let cfg = random_config(&mut rng, &reg);
        round_trip(&format!("random config {k}"), &cfg, &reg)?;
    }

    // one broken line inserted at line k: every diagnostic must point at k
    for m in 0..MUTANTS {
        let (name, text) = fixtures.choose(&mut rng).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        let at = rng.gen_range(0..=lines.len());
        let broken = *BROKEN.choose(&mut rng).unwrap();
        lines.insert(at, broken);
        let mutated = lines.join("\n");
        let line = at + 1;
        match parse_config_with(&mutated, &reg) {
            Ok(_) => {
                return Err(format!(
                    "mutant {m} ({name}, '{broken}' at line {line}) parsed cleanly"
                ))
            }
            Err(diags) => {
                if let Some(d) = diags.iter().find(|d| d.line != line) {
                    return Err(format!(
                        "mutant {m} ({name}, '{broken}' at line {line}): stray diagnostic '{d}'"
                    ));
                }
            }
        }
    }
    Ok(format!(
        "{} fixtures and {RANDOM_CONFIGS} random configs round-trip; {MUTANTS} mutants diagnosed at the broken line only",
        fixtures.len()
    ))
}
