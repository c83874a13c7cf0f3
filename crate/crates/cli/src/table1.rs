//! Comparison table: simulated rows for both neuron variants next to
//! published designs read from a versioned data file.

use std::path::Path;

use neurosim::config::OutputFormat;
use neurosim::experiments::{
    idle_power, par_map, tune_rate, OperatingPoint, DEFAULT_CURRENT_BRACKET,
};
use neurosim::templates::{InstanceKind, TemplateRegistry};
use neurosim::Error;

use crate::commands::{
    csv_bytes, emit, jobs, out_dir, paired_configs, pj, status_of, NEURON_TEMPLATES,
};
use crate::{Common, Failure};

const BUNDLED: &str = include_str!("../../../data/table1-literature.csv");
const FORMAT_VERSION: &str = "format-version: 1";
pub const HEADER: &str = "design,process,area_um2,firing_rate_Hz,energy_pJ_per_spike,source";
pub const RATES: [f64; 2] = [30.0, 100.0];
/// Layout estimates, um^2. Not simulated.
const AREA_CMOS: &str = "~70";
const AREA_HYBRID: &str = "~80";
const RELAY_AREA_UM2: f64 = 0.1;
const IDLE_WINDOW: f64 = 20e-3;

/// Literature rows exactly as they appear in the data file.
pub fn literature_rows(text: &str) -> Result<Vec<String>, Failure> {
    let mut lines = text.lines();
    let first = lines.next().unwrap_or("");
    if !(first.starts_with('#') && first.contains(FORMAT_VERSION)) {
        return Err(Failure::usage(format!(
            "literature file: first line must be a comment carrying '{FORMAT_VERSION}'"
        )));
    }
    let mut lines = lines.filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    if lines.next() != Some(HEADER) {
        return Err(Failure::usage(format!(
            "literature file: header must be '{HEADER}'"
        )));
    }
    let rows: Vec<String> = lines.map(str::to_string).collect();
    for (i, r) in rows.iter().enumerate() {
        let n = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(r.as_bytes())
            .records()
            .next()
            .and_then(|x| x.ok())
            .map_or(0, |x| x.len());
        if n != 6 {
            return Err(Failure::usage(format!(
                "literature file: row {} has {n} fields, expected 6",
                i + 1
            )));
        }
    }
    Ok(rows)
}

fn split(row: &str) -> Vec<String> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(row.as_bytes())
        .records()
        .next()
        .and_then(|r| r.ok())
        .map(|r| r.iter().map(str::to_string).collect())
        .unwrap_or_default()
}

enum Outcome {
    Point(OperatingPoint),
    Idle(f64),
}

impl Outcome {
    fn point(self) -> OperatingPoint {
        match self {
            Outcome::Point(p) => p,
            Outcome::Idle(_) => unreachable!("rate task"),
        }
    }

    fn idle(self) -> f64 {
        match self {
            Outcome::Idle(p) => p,
            Outcome::Point(_) => unreachable!("idle task"),
        }
    }
}

struct VariantResult {
    label: &'static str,
    area: String,
    points: Vec<Result<OperatingPoint, Error>>,
    idle: Result<f64, Error>,
}

impl VariantResult {
    fn energy_cell(&self) -> String {
        self.points
            .iter()
            .map(|r| match r {
                Ok(op) => format!("{:.2}", op.energy_per_spike * 1e12),
                Err(_) => "n/a".into(),
            })
            .collect::<Vec<_>>()
            .join("/")
    }

    fn failures(&self) -> Vec<String> {
        self.points
            .iter()
            .zip(RATES)
            .filter_map(|(r, rate)| r.as_ref().err().map(|e| format!("{rate} Hz: {e}")))
            .collect()
    }
}

pub fn run(
    common: &Common,
    presets: &[String],
    format: Option<&str>,
    literature: Option<&Path>,
) -> Result<(), Failure> {
    let lit_text = match literature {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| Failure::usage(format!("cannot read {}: {e}", p.display())))?,
        None => BUNDLED.to_string(),
    };
    let lit = literature_rows(&lit_text)?;
    let reg = TemplateRegistry::builtin();
    let (cfgs, user) = paired_configs(common, presets, &reg)?;
    let format = match format {
        Some("csv") => OutputFormat::Csv,
        Some("markdown") | Some("md") => OutputFormat::Markdown,
        Some(f) => {
            return Err(Failure::usage(format!(
                "--format: expected csv or markdown, got '{f}'"
            )))
        }
        None => user
            .as_ref()
            .and_then(|u| u.output.format)
            .unwrap_or(OutputFormat::Markdown),
    };

    // one task per (variant, rate), plus one idle-power run per variant
    let tasks: Vec<(usize, Option<f64>)> = (0..NEURON_TEMPLATES.len())
        .flat_map(|v| RATES.iter().map(move |&r| (v, Some(r))).chain([(v, None)]))
        .collect();
    let mut results = par_map(&tasks, jobs(common), |&(v, rate)| {
        let t = reg.get(NEURON_TEMPLATES[v])?;
        let params = cfgs[v].template_params();
        let solver = cfgs[v].solver_config();
        match rate {
            Some(r) => {
                tune_rate(t, &params, &solver, r, DEFAULT_CURRENT_BRACKET).map(Outcome::Point)
            }
            None => idle_power(&t.build(&params)?, IDLE_WINDOW, &solver).map(Outcome::Idle),
        }
    })
    .into_iter();

    let mut variants = Vec::new();
    for (v, name) in NEURON_TEMPLATES.iter().enumerate() {
        let t = reg.get(name)?;
        let relays = t
            .instances()
            .iter()
            .filter(|(_, k)| *k == InstanceKind::Switch)
            .count();
        let hybrid = v == 1;
        let mut points = Vec::new();
        for _ in RATES {
            points.push(results.next().expect("task").map(Outcome::point));
        }
        let idle = results.next().expect("task").map(Outcome::idle);
        variants.push(VariantResult {
            label: if hybrid {
                "This work, hybrid CMOS-NEMS"
            } else {
                "This work, CMOS"
            },
            area: if hybrid {
                format!("{AREA_HYBRID} (incl. {relays} relays of {RELAY_AREA_UM2} um^2)")
            } else {
                AREA_CMOS.to_string()
            },
            points,
            idle,
        });
    }

    let rates_cell = RATES.map(|r| r.to_string()).join("/");
    let dir = out_dir(common, user.as_ref());
    let table = match format {
        OutputFormat::Csv => {
            let mut out = String::from(HEADER);
            out.push('\n');
            for r in &lit {
                out.push_str(r);
                out.push('\n');
            }
            let rows: Vec<Vec<String>> = variants
                .iter()
                .map(|v| {
                    vec![
                        v.label.into(),
                        "28 nm".into(),
                        v.area.clone(),
                        rates_cell.clone(),
                        v.energy_cell(),
                        "simulated".into(),
                    ]
                })
                .collect();
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.write_record(r)?;
            }
            let body = w
                .into_inner()
                .map_err(|e| Failure::usage(format!("csv: {e}")))?;
            out.push_str(&String::from_utf8_lossy(&body));
            (out, "table1.csv")
        }
        OutputFormat::Markdown => {
            let mut out = String::from(
                "| Design | Process | Area (um^2) | Firing rate (Hz) | Energy (pJ/spike) | Source |\n|---|---|---|---|---|---|\n",
            );
            for r in &lit {
                out.push_str(&format!("| {} |\n", split(r).join(" | ")));
            }
            for v in &variants {
                out.push_str(&format!(
                    "| {} | 28 nm | {} | {} | {} | simulated |\n",
                    v.label,
                    v.area,
                    rates_cell,
                    v.energy_cell()
                ));
            }
            let notes: Vec<String> = variants
                .iter()
                .flat_map(|v| {
                    v.failures()
                        .into_iter()
                        .map(move |f| format!("- {}: {f}", v.label))
                })
                .collect();
            if !notes.is_empty() {
                out.push_str("\nSimulation failures:\n");
                for n in notes {
                    out.push_str(&n);
                    out.push('\n');
                }
            }
            (out, "table1.md")
        }
    };
    emit(dir.as_deref(), table.1, table.0.as_bytes())?;

    if let Some(d) = &dir {
        let mut rows = Vec::new();
        for v in &variants {
            for (r, rate) in v.points.iter().zip(RATES) {
                let (e, mr, i, refr, cyc) = match r {
                    Ok(op) => (
                        pj(op.energy_per_spike),
                        format!("{:.3}", op.rate),
                        format!("{:.4e}", op.i_inject),
                        op.refractory
                            .map_or(String::new(), |x| format!("{:.4}", x * 1e3)),
                        op.relay_cycles.to_string(),
                    ),
                    Err(_) => Default::default(),
                };
                rows.push(vec![
                    v.label.into(),
                    rate.to_string(),
                    mr,
                    i,
                    e,
                    refr,
                    cyc,
                    v.idle
                        .as_ref()
                        .map_or(String::new(), |p| format!("{:.3}", p * 1e12)),
                    v.area.clone(),
                    status_of(r),
                ]);
            }
        }
        let bytes = csv_bytes(
            &[
                "design",
                "target_rate_Hz",
                "measured_rate_Hz",
                "i_inject_A",
                "energy_pJ_per_spike",
                "refractory_ms",
                "relay_cycles",
                "idle_power_pW",
                "area_um2",
                "status",
            ],
            &rows,
        )?;
        emit(Some(d), "table1-records.csv", &bytes)?;
    }
    Ok(())
}
