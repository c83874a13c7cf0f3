use neurosim::experiments::par_map;
use neurosim::sim::simulate;
use neurosim::templates::{TemplateParams, TemplateRegistry};

use super::{solver, Check};

/// Serialized trace and ledger of one run.
fn serialized(name: &str) -> Result<(Vec<u8>, String), String> {
    let reg = TemplateRegistry::builtin();
    let c = reg
        .get(name)
        .unwrap()
        .build(&TemplateParams::default())
        .map_err(|e| e.to_string())?;
    let res = simulate(&c, &solver(10e-3)).map_err(|e| e.to_string())?;
    let mut csv = Vec::new();
    res.trace.write_csv(&mut csv).map_err(|e| e.to_string())?;
    Ok((csv, res.ledger.to_json()))
}

pub fn check() -> Check {
    let names = ["lif.cmos", "lif.hybrid", "dpi.cmos", "dpi.hybrid"];
    let sequential: Vec<_> = names
        .iter()
        .map(|n| serialized(n))
        .collect::<Result<_, _>>()?;
    // the same runs again, concurrently and in reverse order
    let rev: Vec<&str> = names.iter().rev().copied().collect();
    let mut parallel = par_map(&rev, 4, |n| serialized(n))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    parallel.reverse();
    let mut bytes = 0;
    for ((a, b), n) in sequential.iter().zip(&parallel).zip(names) {
        if a != b {
            return Err(format!("{n}: repeated runs differ"));
        }
        bytes += a.0.len();
    }
    Ok(format!(
        "4 templates, repeated and concurrent runs byte-identical ({bytes} trace bytes)"
    ))
}
