use std::io::Write;
use std::path::{Path, PathBuf};

use neurosim::analysis::spike_train;
use neurosim::circuit::validate as validate_circuit;
use neurosim::config::{
    check_sweep, default_preset_for, expand_sweep, load_preset, parse_config_with, resolve_preset,
    sweep_values, ExperimentConfig, Sweep, SweepScale,
};
use neurosim::experiments::{self, par_map, tune_rate, OperatingPoint, DEFAULT_CURRENT_BRACKET};
use neurosim::sim::{simulate, EventKind, SolverConfig};
use neurosim::templates::{TemplateParams, TemplateRegistry};
use neurosim::units::{parse_quantity, Dimension, Quantity};
use neurosim::Error;

use crate::{Common, Failure};

pub const NEURON_TEMPLATES: [&str; 2] = ["lif.cmos", "lif.hybrid"];
const DEFAULT_SIM_PRESET: &str = "lif-hybrid-28nm";
pub const DEFAULT_RATES: [f64; 4] = [10.0, 30.0, 100.0, 250.0];

pub fn jobs(common: &Common) -> usize {
    common
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

/// Parses a flag value such as `235 pA` or `1e10`.
pub fn flag_quantity(flag: &str, text: &str, dim: Dimension) -> Result<Quantity, Failure> {
    let q = parse_quantity(text).map_err(|e| Failure::usage(format!("--{flag}: {e}")))?;
    match q.dimension {
        Some(d) if d != dim && d != Dimension::Dimensionless => {
            Err(Failure::usage(format!("--{flag}: expected {dim}, got {d}")))
        }
        _ => Ok(q),
    }
}

fn user_config(
    common: &Common,
    reg: &TemplateRegistry,
) -> Result<Option<ExperimentConfig>, Failure> {
    let Some(path) = &common.config else {
        return Ok(None);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    parse_config_with(&text, reg)
        .map(Some)
        .map_err(|d| Error::Config(d).into())
}

/// The config for single-circuit commands: the user file over its preset, or
/// a preset alone.
pub fn single_config(
    common: &Common,
    preset: Option<String>,
    reg: &TemplateRegistry,
) -> Result<ExperimentConfig, Failure> {
    match user_config(common, reg)? {
        Some(mut cfg) => {
            if preset.is_some() {
                cfg.preset = preset;
            }
            Ok(resolve_preset(cfg, reg)?)
        }
        None => Ok(load_preset(
            preset.as_deref().unwrap_or(DEFAULT_SIM_PRESET),
            reg,
        )?),
    }
}

/// Configs for the CMOS and hybrid neurons. Each starts from the preset whose
/// template matches (named with `--preset`, in the user config, or the
/// default), then takes the user config's overrides.
pub fn paired_configs(
    common: &Common,
    presets: &[String],
    reg: &TemplateRegistry,
) -> Result<(Vec<ExperimentConfig>, Option<ExperimentConfig>), Failure> {
    let user = user_config(common, reg)?;
    let mut named: Vec<String> = presets.to_vec();
    if let Some(p) = user.as_ref().and_then(|u| u.preset.clone()) {
        named.push(p);
    }
    let mut loaded = Vec::new();
    for name in &named {
        let cfg = load_preset(name, reg)?;
        if !NEURON_TEMPLATES.contains(&cfg.template.as_str()) {
            return Err(Failure::usage(format!(
                "preset '{name}' is for {}, expected one of {}",
                cfg.template,
                NEURON_TEMPLATES.join(", ")
            )));
        }
        loaded.push(cfg);
    }
    let mut out = Vec::new();
    for t in NEURON_TEMPLATES {
        let base = match loaded.iter().rev().find(|c| c.template == t) {
            Some(c) => c.clone(),
            None => load_preset(default_preset_for(t).expect("neuron preset"), reg)?,
        };
        let cfg = match &user {
            Some(u) => {
                let mut top = u.clone();
                top.template = t.to_string();
                top.preset = None;
                base.overlay(top)
            }
            None => base,
        };
        out.push(cfg);
    }
    Ok((out, user))
}

pub fn out_dir(common: &Common, cfg: Option<&ExperimentConfig>) -> Option<PathBuf> {
    common
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.dir.clone()).map(PathBuf::from))
}

/// Writes `bytes` to `dir/file`, or to stdout without a directory.
pub fn emit(dir: Option<&Path>, file: &str, bytes: &[u8]) -> Result<(), Failure> {
    match dir {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            std::fs::write(d.join(file), bytes)?;
        }
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

pub fn pj(joules: f64) -> String {
    format!("{:.4}", joules * 1e12)
}

fn json_opt(x: Option<f64>) -> String {
    x.map_or("null".into(), |v| format!("{v:.9e}"))
}

pub fn status_of<T>(r: &Result<T, Error>) -> String {
    match r {
        Ok(_) => "ok".into(),
        Err(e) => format!("error: {}", e.to_string().replace('\n', "; ")),
    }
}

pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner()
        .map_err(|e| Failure::usage(format!("csv: {e}")))
}

fn tuned_params(cfg: &ExperimentConfig, reg: &TemplateRegistry) -> Result<TemplateParams, Error> {
    let params = cfg.template_params();
    match cfg.target_rate {
        Some(rate) => {
            let t = reg.get(&cfg.template)?;
            let op = tune_rate(
                t,
                &params,
                &cfg.solver_config(),
                rate.magnitude,
                DEFAULT_CURRENT_BRACKET,
            )?;
            log::info!(
                "{}: {} Hz at i_inject = {:e} A",
                cfg.template,
                op.rate,
                op.i_inject
            );
            Ok(params.with_bias("i_inject", op.i_inject))
        }
        None => Ok(params),
    }
}

fn sim_point(
    cfg: &ExperimentConfig,
    reg: &TemplateRegistry,
    dir: Option<&Path>,
) -> Result<String, Failure> {
    let t = reg.get(&cfg.template)?;
    let params = tuned_params(cfg, reg)?;
    let solver = cfg.solver_config();
    solver.validate()?;
    let circuit = t.build(&params)?;
    let res = simulate(&circuit, &solver)?;
    if res.trace.is_empty() {
        return Err(Failure::usage("empty trace: the run produced no samples"));
    }
    let train = spike_train(&res.trace, &circuit);
    let steady = train.after(train.times.first().copied().unwrap_or(0.0) + solver.event_tol);
    let epsp = neurosim::analysis::energy_per_spike(&res.ledger, &steady).ok();
    let summary = format!(
        concat!(
            "{{\"template\": \"{}\", \"t_stop_s\": {:.9e}, \"spikes\": {}, \"mean_rate_Hz\": {}, ",
            "\"energy_per_spike_J\": {}, \"refractory_s\": {}, \"total_supply_J\": {:.9e}, ",
            "\"dissipated_J\": {:.9e}, \"conservation_error_J\": {:.9e}, \"relay_closures\": {}}}\n"
        ),
        cfg.template,
        solver.t_stop,
        train.len(),
        json_opt(steady.mean_rate()),
        json_opt(epsp),
        json_opt(steady.mean_refractory()),
        res.ledger.total_supply,
        res.ledger.dissipated_total(),
        res.ledger.conservation_error(),
        res.trace.events_of(EventKind::RelayClose).count(),
    );
    if let Some(d) = dir {
        std::fs::create_dir_all(d)?;
        let mut f = std::io::BufWriter::new(std::fs::File::create(d.join("trace.csv"))?);
        res.trace.write_csv(&mut f)?;
        f.flush()?;
        std::fs::write(d.join("ledger.json"), res.ledger.to_json())?;
        std::fs::write(d.join("summary.json"), &summary)?;
    }
    Ok(summary)
}

pub fn sim(common: &Common, preset: Option<String>) -> Result<(), Failure> {
    let reg = TemplateRegistry::builtin();
    let cfg = single_config(common, preset, &reg)?;
    let dir = out_dir(common, Some(&cfg));
    if cfg.sweep.is_none() {
        let summary = sim_point(&cfg, &reg, dir.as_deref())?;
        print!("{summary}");
        return Ok(());
    }
    let points = expand_sweep(&cfg).map_err(Error::Config)?;
    let idx: Vec<usize> = (0..points.len()).collect();
    let results = par_map(&idx, jobs(common), |&i| {
        let sub = dir.as_ref().map(|d| d.join(format!("point-{i:03}")));
        sim_point(&points[i], &reg, sub.as_deref())
    });
    for r in results {
        print!("{}", r?);
    }
    Ok(())
}

pub fn validate(common: &Common, preset: Option<String>) -> Result<(), Failure> {
    let reg = TemplateRegistry::builtin();
    let cfg = single_config(common, preset, &reg)?;
    let points = match cfg.sweep {
        Some(_) => expand_sweep(&cfg).map_err(Error::Config)?,
        None => vec![cfg.clone()],
    };
    let t = reg.get(&cfg.template)?;
    let mut problems = Vec::new();
    for p in &points {
        if let Err(e) = p.solver_config().validate() {
            problems.push(e.to_string());
        }
        match t.build(&p.template_params()) {
            Ok(c) => problems.extend(validate_circuit(&c)),
            Err(e) => problems.push(e.to_string()),
        }
    }
    problems.dedup();
    if !problems.is_empty() {
        return Err(Error::Validation(problems).into());
    }
    println!(
        "ok: {} ({} point{})",
        cfg.template,
        points.len(),
        if points.len() == 1 { "" } else { "s" }
    );
    Ok(())
}

fn parse_rate_list(text: &str) -> Result<Vec<f64>, Failure> {
    let rates: Vec<f64> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| flag_quantity("rates", s, Dimension::Hertz).map(|q| q.magnitude))
        .collect::<Result<_, _>>()?;
    if rates.is_empty() {
        return Err(Failure::usage("--rates: empty rate list"));
    }
    if let Some(r) = rates.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Failure::usage(format!(
            "--rates: rate must be positive, got {r}"
        )));
    }
    Ok(rates)
}

fn sweep_of(user: Option<&ExperimentConfig>, key: &str) -> Result<Option<Vec<f64>>, Failure> {
    match user.and_then(|u| u.sweep.as_ref()) {
        Some(sw) if sw.key == key => Ok(Some(sweep_values(
            sw.from.magnitude,
            sw.to.magnitude,
            sw.steps,
            sw.scale,
        ))),
        Some(sw) => Err(Failure::usage(format!(
            "this command sweeps {key}, but the config sweeps {}",
            sw.key
        ))),
        None => Ok(None),
    }
}

/// Solver and params per neuron variant, ready for the drivers.
fn variant_inputs(cfgs: &[ExperimentConfig]) -> Vec<(TemplateParams, SolverConfig)> {
    cfgs.iter()
        .map(|c| (c.template_params(), c.solver_config()))
        .collect()
}

pub fn energy_vs_rate(
    common: &Common,
    presets: &[String],
    rates: Option<&str>,
) -> Result<(), Failure> {
    let reg = TemplateRegistry::builtin();
    let (cfgs, user) = paired_configs(common, presets, &reg)?;
    let rates = match rates {
        Some(text) => parse_rate_list(text)?,
        None => match sweep_of(user.as_ref(), "target_rate")? {
            Some(v) => v,
            None => match user.as_ref().and_then(|u| u.target_rate) {
                Some(r) => vec![r.magnitude],
                None => DEFAULT_RATES.to_vec(),
            },
        },
    };
    let inputs = variant_inputs(&cfgs);
    let tasks: Vec<(usize, f64)> = rates
        .iter()
        .flat_map(|&r| (0..NEURON_TEMPLATES.len()).map(move |v| (v, r)))
        .collect();
    let results: Vec<Result<OperatingPoint, Error>> = par_map(&tasks, jobs(common), |&(v, r)| {
        let t = reg.get(NEURON_TEMPLATES[v])?;
        log::info!("tuning {} to {r} Hz", t.name());
        tune_rate(t, &inputs[v].0, &inputs[v].1, r, DEFAULT_CURRENT_BRACKET)
    });

    let mut rows = Vec::new();
    let mut pairs = Vec::new();
    for (k, &rate) in rates.iter().enumerate() {
        let c = &results[2 * k];
        let h = &results[2 * k + 1];
        let reduction = match (c, h) {
            (Ok(c), Ok(h)) => {
                pairs.push((c.energy_per_spike, h.energy_per_spike));
                format!(
                    "{:.2}",
                    100.0 * (c.energy_per_spike - h.energy_per_spike) / c.energy_per_spike
                )
            }
            _ => String::new(),
        };
        for (v, r) in [c, h].into_iter().enumerate() {
            let variant = reg.get(NEURON_TEMPLATES[v])?.variant().label();
            let (e, mr, i) = match r {
                Ok(op) => (
                    pj(op.energy_per_spike),
                    format!("{:.3}", op.rate),
                    format!("{:.4e}", op.i_inject),
                ),
                Err(_) => Default::default(),
            };
            rows.push(vec![
                format!("{rate}"),
                variant.into(),
                e,
                reduction.clone(),
                mr,
                i,
                status_of(r),
            ]);
        }
    }
    let mean = experiments::mean_reduction(&pairs);
    rows.push(vec![
        "mean".into(),
        String::new(),
        String::new(),
        mean.map_or(String::new(), |m| format!("{:.2}", 100.0 * m)),
        String::new(),
        String::new(),
        if mean.is_some() {
            "ok".into()
        } else {
            "error: no rate with both variants measured".into()
        },
    ]);
    let bytes = csv_bytes(
        &[
            "rate_Hz",
            "variant",
            "energy_pJ_per_spike",
            "reduction_percent",
            "measured_rate_Hz",
            "i_inject_A",
            "status",
        ],
        &rows,
    )?;
    emit(
        out_dir(common, user.as_ref()).as_deref(),
        "energy_vs_rate.csv",
        &bytes,
    )?;
    if mean.is_none() {
        return Err(Failure {
            code: 3,
            message: "no rate could be reached by both variants".into(),
        });
    }
    Ok(())
}

pub fn efficiency_curve(
    common: &Common,
    presets: &[String],
    from: &str,
    to: &str,
    steps: usize,
    scale: &str,
) -> Result<(), Failure> {
    let reg = TemplateRegistry::builtin();
    let (cfgs, user) = paired_configs(common, presets, &reg)?;
    let currents = match sweep_of(user.as_ref(), "i_inject")? {
        Some(v) => v,
        None => {
            let scale = match scale {
                "linear" => SweepScale::Linear,
                "log" => SweepScale::Log,
                s => {
                    return Err(Failure::usage(format!(
                        "--scale: expected linear or log, got '{s}'"
                    )))
                }
            };
            let sw = Sweep {
                key: "i_inject".into(),
                from: flag_quantity("from", from, Dimension::Ampere)?,
                to: flag_quantity("to", to, Dimension::Ampere)?,
                steps,
                scale,
            };
            if let Some(msg) = check_sweep(&sw) {
                return Err(Failure::usage(msg));
            }
            sweep_values(sw.from.magnitude, sw.to.magnitude, steps, scale)
        }
    };
    if currents.iter().any(|i| !(*i > 0.0)) {
        return Err(Failure::usage("injection currents must be positive"));
    }
    let inputs = variant_inputs(&cfgs);
    let tasks: Vec<(usize, f64)> = currents
        .iter()
        .flat_map(|&i| (0..NEURON_TEMPLATES.len()).map(move |v| (v, i)))
        .collect();
    let results: Vec<Result<OperatingPoint, Error>> = par_map(&tasks, jobs(common), |&(v, i)| {
        let t = reg.get(NEURON_TEMPLATES[v])?;
        experiments::efficiency_curve(t, &inputs[v].0, &inputs[v].1, &[i], 1)
            .pop()
            .expect("one point")
    });
    let mut rows = Vec::new();
    for ((v, i), r) in tasks.iter().zip(&results) {
        let variant = reg.get(NEURON_TEMPLATES[*v])?.variant().label();
        let (e, rate) = match r {
            Ok(op) => (pj(op.energy_per_spike), format!("{:.3}", op.rate)),
            Err(_) => Default::default(),
        };
        rows.push(vec![
            format!("{i:.4e}"),
            variant.into(),
            e,
            rate,
            status_of(r),
        ]);
    }
    let bytes = csv_bytes(
        &[
            "i_inject_A",
            "variant",
            "energy_pJ_per_spike",
            "rate_Hz",
            "status",
        ],
        &rows,
    )?;
    emit(
        out_dir(common, user.as_ref()).as_deref(),
        "efficiency_curve.csv",
        &bytes,
    )?;
    if results.iter().all(|r| r.is_err()) {
        return Err(Failure {
            code: 3,
            message: "no operating point could be measured".into(),
        });
    }
    Ok(())
}

pub fn lifetime(
    common: &Common,
    rate: &str,
    cycles: &str,
    mission: Option<&str>,
) -> Result<(), Failure> {
    let rate = flag_quantity("rate", rate, Dimension::Hertz)?.magnitude;
    let cycles = flag_quantity("cycles", cycles, Dimension::Dimensionless)?.magnitude;
    let report = experiments::lifetime(rate, cycles)?;
    let json = report.to_json();
    print!("{json}");
    eprintln!("relay lifetime: {:.1} yr", report.years);
    if let Some(d) = &common.out {
        std::fs::create_dir_all(d)?;
        std::fs::write(d.join("lifetime.json"), &json)?;
    }
    if let Some(m) = mission {
        let m = flag_quantity("mission", m, Dimension::Second)?.magnitude;
        if report.seconds < m {
            return Err(Failure {
                code: 4,
                message: format!(
                    "relay wears out after {:.3e} s, before the {m:.3e} s mission",
                    report.seconds
                ),
            });
        }
    }
    Ok(())
}
