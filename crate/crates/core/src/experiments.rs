//! Figure and table drivers: operating-point measurement, rate targeting,
//! sweeps over rate and injection current, idle power and relay lifetime.

use rayon::prelude::*;

use crate::analysis::{energy_per_spike, spike_train, SpikeTrain};
use crate::circuit::{Circuit, Device, RailDrive};
use crate::error::{Error, Result};
use crate::relay::{relay_lifetime_estimate, SECONDS_PER_YEAR};
use crate::sim::{simulate, EventKind, SimResult, SolverConfig};
use crate::templates::{CircuitTemplate, TemplateParams};

/// Rate targeting gives up after this many bisection steps.
pub const MAX_TUNE_ITERATIONS: usize = 30;
/// Relative rate tolerance for rate targeting.
pub const RATE_TOLERANCE: f64 = 0.02;
/// Spikes measured after the discarded first spike.
pub const MEASURED_INTERVALS: usize = 3;

/// One measured steady-state operating point of a neuron template.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub template: String,
    pub i_inject: f64,
    pub rate: f64,
    pub energy_per_spike: f64,
    pub refractory: Option<f64>,
    pub spikes: usize,
    /// Completed relay closures during the run, summed over relays.
    pub relay_cycles: u64,
}

/// Simulates `template` and returns the circuit, raw result and spike train.
pub fn run(
    template: &dyn CircuitTemplate,
    params: &TemplateParams,
    solver: &SolverConfig,
) -> Result<(Circuit, SimResult, SpikeTrain)> {
    let circuit = template.build(params)?;
    let result = simulate(&circuit, solver)?;
    let train = spike_train(&result.trace, &circuit);
    Ok((circuit, result, train))
}

fn relay_closures(result: &SimResult) -> u64 {
    result.trace.events_of(EventKind::RelayClose).count() as u64
}

/// Runs one simulation and measures rate and energy after the first spike.
pub fn measure(
    template: &dyn CircuitTemplate,
    params: &TemplateParams,
    solver: &SolverConfig,
) -> Result<OperatingPoint> {
    let (_, result, train) = run(template, params, solver)?;
    let steady = train.after(train.times.first().copied().unwrap_or(0.0) + solver.event_tol);
    let rate = steady.mean_rate().ok_or_else(|| {
        Error::InsufficientData(format!(
            "{}: {} spikes in {:e} s, need at least 3",
            template.name(),
            train.len(),
            solver.t_stop
        ))
    })?;
    Ok(OperatingPoint {
        template: template.name().to_string(),
        i_inject: params
            .biases
            .get("i_inject")
            .copied()
            .or_else(|| template.bias_key("i_inject").map(|k| k.default))
            .unwrap_or(0.0),
        rate,
        energy_per_spike: energy_per_spike(&result.ledger, &steady)?,
        refractory: steady.mean_refractory(),
        spikes: train.len(),
        relay_cycles: relay_closures(&result),
    })
}

/// Simulation length that yields the first spike plus `MEASURED_INTERVALS`
/// full intervals at `rate`, with margin.
fn window_for(rate: f64) -> f64 {
    (MEASURED_INTERVALS as f64 + 1.6) / rate
}

/// Measures at a given injection, sizing the run for an expected rate.
/// Too few spikes reads as rate 0.
fn probe_rate(
    template: &dyn CircuitTemplate,
    params: &TemplateParams,
    solver: &SolverConfig,
    i_inject: f64,
    expected_rate: f64,
) -> Result<Option<OperatingPoint>> {
    let p = params.clone().with_bias("i_inject", i_inject);
    let s = SolverConfig {
        t_stop: window_for(expected_rate),
        ..*solver
    };
    match measure(template, &p, &s) {
        Ok(op) => Ok(Some(op)),
        Err(Error::InsufficientData(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Finds `i_inject` giving `target_rate` within `RATE_TOLERANCE`, by
/// bisection on log(i_inject) between `i_lo` and `i_hi`.
pub fn tune_rate(
    template: &dyn CircuitTemplate,
    params: &TemplateParams,
    solver: &SolverConfig,
    target_rate: f64,
    (i_lo, i_hi): (f64, f64),
) -> Result<OperatingPoint> {
    if !(target_rate > 0.0 && i_lo > 0.0 && i_hi > i_lo) {
        return Err(Error::InvalidArgument(format!(
            "rate targeting needs a positive rate and 0 < i_lo < i_hi (got {target_rate} Hz, [{i_lo:e}, {i_hi:e}] A)"
        )));
    }
    let (mut lo, mut hi) = (i_lo.ln(), i_hi.ln());
    let mut best: Option<OperatingPoint> = None;
    for _ in 0..MAX_TUNE_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        let op = probe_rate(template, params, solver, mid.exp(), target_rate)?;
        let rate = op.as_ref().map_or(0.0, |o| o.rate);
        if let Some(o) = op {
            let err = (o.rate / target_rate - 1.0).abs();
            if err <= RATE_TOLERANCE {
                return Ok(o);
            }
            if best
                .as_ref()
                .is_none_or(|b| err < (b.rate / target_rate - 1.0).abs())
            {
                best = Some(o);
            }
        }
        if rate < target_rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::InsufficientData(format!(
        "{}: could not reach {target_rate} Hz within {:.0}% ({})",
        template.name(),
        RATE_TOLERANCE * 100.0,
        best.map_or(
            "no steady spiking in the current bracket".into(),
            |b| format!("closest {:.3} Hz", b.rate)
        )
    )))
}

/// Relative tolerance for refractory targeting.
pub const REFRACTORY_TOLERANCE: f64 = 0.002;

/// Bisects the bias `key` over `(lo, hi)` until the measured refractory
/// period is within `REFRACTORY_TOLERANCE` of `target`. The refractory
/// period must be monotone in the bias over the bracket; the direction is
/// read from the endpoints.
pub fn tune_refractory(
    template: &dyn CircuitTemplate,
    params: &TemplateParams,
    solver: &SolverConfig,
    key: &str,
    target: f64,
    (lo, hi): (f64, f64),
) -> Result<(f64, OperatingPoint)> {
    if !(target > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "refractory targeting needs a positive target and lo < hi (got {target:e} s, [{lo}, {hi}])"
        )));
    }
    let refr_at = |v: f64| -> Result<OperatingPoint> {
        let op = measure(template, &params.clone().with_bias(key, v), solver)?;
        if op.refractory.is_none() {
            return Err(Error::InsufficientData(format!(
                "{}: no complete refractory dwell at {key} = {v}",
                template.name()
            )));
        }
        Ok(op)
    };
    let r_lo = refr_at(lo)?.refractory.unwrap_or(0.0);
    let r_hi = refr_at(hi)?.refractory.unwrap_or(0.0);
    if (r_lo - target) * (r_hi - target) > 0.0 {
        return Err(Error::InsufficientData(format!(
            "{}: {key} in [{lo}, {hi}] gives refractory {r_lo:e}..{r_hi:e} s, not bracketing {target:e} s",
            template.name()
        )));
    }
    let rising = r_hi > r_lo;
    let (mut a, mut b) = (lo, hi);
    let mut last = None;
    for _ in 0..MAX_TUNE_ITERATIONS {
        let mid = 0.5 * (a + b);
        let op = refr_at(mid)?;
        let r = op.refractory.unwrap_or(0.0);
        if (r / target - 1.0).abs() <= REFRACTORY_TOLERANCE {
            return Ok((mid, op));
        }
        if (r < target) == rising {
            a = mid;
        } else {
            b = mid;
        }
        last = Some(r);
    }
    Err(Error::InsufficientData(format!(
        "{}: refractory search on {key} did not converge (last {last:?} s)",
        template.name()
    )))
}

/// Bracket for rate targeting: from just above zero to a current that
/// saturates the neuron.
pub const DEFAULT_CURRENT_BRACKET: (f64, f64) = (0.5e-12, 2e-9);

/// Energy per spike at each target rate. Points run concurrently on up to
/// `jobs` threads; results stay in input order.
pub fn energy_vs_rate(
    template: &dyn CircuitTemplate,
    params: &TemplateParams,
    solver: &SolverConfig,
    rates: &[f64],
    jobs: usize,
) -> Vec<Result<OperatingPoint>> {
    par_map(rates, jobs, |&r| {
        tune_rate(template, params, solver, r, DEFAULT_CURRENT_BRACKET)
    })
}

/// Longest run `efficiency_curve` will try before giving up on a point.
pub const MAX_CURVE_WINDOW: f64 = 2.0;

/// Energy per spike at each injection current. Each point starts at
/// `t_stop` and the run is lengthened 4x while too few spikes arrive.
pub fn efficiency_curve(
    template: &dyn CircuitTemplate,
    params: &TemplateParams,
    solver: &SolverConfig,
    currents: &[f64],
    jobs: usize,
) -> Vec<Result<OperatingPoint>> {
    par_map(currents, jobs, |&i| {
        let p = params.clone().with_bias("i_inject", i);
        let mut s = *solver;
        loop {
            match measure(template, &p, &s) {
                Err(Error::InsufficientData(_)) if s.t_stop * 4.0 <= MAX_CURVE_WINDOW => {
                    s.t_stop *= 4.0
                }
                r => return r,
            }
        }
    })
}

/// Order-preserving parallel map on a dedicated pool of `jobs` threads.
pub fn par_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

/// Mean supply power over a run with every stimulus source silenced.
pub fn idle_power(circuit: &Circuit, window: f64, solver: &SolverConfig) -> Result<f64> {
    if window <= 0.0 {
        return Err(Error::InvalidArgument(
            "idle window must be positive".into(),
        ));
    }
    let mut quiet = circuit.clone();
    for b in &mut quiet.branches {
        if let Device::Passive(p) = &mut b.device {
            if p.kind == crate::device::PassiveKind::CurrentSource {
                p.value = 0.0;
                b.stimulus = None;
            }
        }
    }
    for r in &mut quiet.rails {
        if let RailDrive::Stimulus(s) = &r.drive {
            let low = s.value_at(-1.0);
            r.drive = RailDrive::Fixed(low);
        }
    }
    let s = SolverConfig {
        t_stop: window,
        ..*solver
    };
    let res = simulate(&quiet, &s)?;
    Ok(res.ledger.total_supply / window)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifetimeReport {
    pub seconds: f64,
    pub years: f64,
}

impl LifetimeReport {
    pub fn to_json(&self) -> String {
        format!(
            "{{\"seconds\": {:.16e}, \"years\": {:.16e}}}\n",
            self.seconds, self.years
        )
    }
}

/// Relay lifetime at one switching cycle per spike.
pub fn lifetime(rate: f64, max_cycles: f64) -> Result<LifetimeReport> {
    let seconds = relay_lifetime_estimate(rate, max_cycles)?;
    Ok(LifetimeReport {
        seconds,
        years: seconds / SECONDS_PER_YEAR,
    })
}

/// Mean of per-rate reductions `(cmos - hybrid) / cmos`.
pub fn mean_reduction(pairs: &[(f64, f64)]) -> Option<f64> {
    if pairs.is_empty() {
        return None;
    }
    Some(pairs.iter().map(|(c, h)| (c - h) / c).sum::<f64>() / pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lifetime_anchors() {
        let r = lifetime(10.0, 1e10).unwrap();
        assert_eq!(r.seconds, 1e9);
        assert!((r.years - 31.69).abs() < 0.01);
        assert_eq!(lifetime(10.0, 10.0).unwrap().seconds, 1.0);
        assert!((lifetime(100.0, 1e10).unwrap().years - 3.169).abs() < 1e-3);
    }

    #[test]
    fn par_map_keeps_order() {
        let xs: Vec<u32> = (0..64).collect();
        assert_eq!(
            par_map(&xs, 4, |x| x * 2),
            xs.iter().map(|x| x * 2).collect::<Vec<_>>()
        );
    }

    #[test]
    fn reduction_arithmetic() {
        let r = mean_reduction(&[(1.17, 0.84)]).unwrap();
        assert!((r - 0.2821).abs() < 1e-4);
        assert_eq!(mean_reduction(&[]), None);
    }
}
