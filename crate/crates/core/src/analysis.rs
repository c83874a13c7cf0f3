//! Spike extraction and per-spike energy from simulation traces.

use crate::circuit::Circuit;
use crate::error::{Error, Result};
#[cfg(test)]
use crate::sim::Snapshot;
use crate::sim::{EnergyLedger, SimTrace};

/// Fraction of Vdd below which the membrane counts as at rest.
pub const REST_FRACTION: f64 = 0.02;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpikeTrain {
    pub times: Vec<f64>,
    /// Membrane-at-rest dwell following each spike whose dwell ended in the trace.
    pub refractory: Vec<f64>,
}

impl SpikeTrain {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn intervals(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Spikes per second between the first and last spike.
    pub fn mean_rate(&self) -> Option<f64> {
        let n = self.times.len();
        (n >= 2).then(|| (n - 1) as f64 / (self.times[n - 1] - self.times[0]))
    }

    /// Mean and standard deviation of inter-spike intervals.
    pub fn isi_stats(&self) -> Option<(f64, f64)> {
        mean_std(&self.intervals())
    }

    pub fn mean_refractory(&self) -> Option<f64> {
        mean_std(&self.refractory).map(|(m, _)| m)
    }

    /// Drops spikes before `t`, e.g. to skip the start-up transient.
    pub fn after(&self, t: f64) -> SpikeTrain {
        let k = self.times.partition_point(|&x| x < t);
        let skipped = self.times.len() - k;
        let r0 = self.refractory.len().saturating_sub(skipped);
        SpikeTrain {
            times: self.times[k..].to_vec(),
            refractory: self.refractory[r0.min(self.refractory.len())..].to_vec(),
        }
    }
}

fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    Some((m, var.sqrt()))
}

/// Times where `series` crosses `threshold` downward, linearly interpolated.
pub fn falling_crossings(times: &[f64], series: &[f64], threshold: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..series.len().min(times.len()) {
        let (a, b) = (series[i - 1], series[i]);
        if a >= threshold && b < threshold {
            let f = (a - threshold) / (a - b);
            out.push(times[i - 1] + f * (times[i] - times[i - 1]));
        }
    }
    out
}

/// Downward crossings of `node` through `threshold`, one spike each.
pub fn detect_spikes(trace: &SimTrace, node: &str, threshold: f64) -> Vec<f64> {
    match trace.node_series(node) {
        Some(v) => falling_crossings(&trace.times, &v, threshold),
        None => Vec::new(),
    }
}

/// For each spike, how long `node` stays below `rest_level` after it first
/// drops there. Dwells still open at the end of the trace are left out.
pub fn measure_refractory(
    trace: &SimTrace,
    node: &str,
    rest_level: f64,
    spikes: &[f64],
) -> Vec<f64> {
    let Some(v) = trace.node_series(node) else {
        return Vec::new();
    };
    let t = &trace.times;
    let mut out = Vec::new();
    for (k, &ts) in spikes.iter().enumerate() {
        let limit = spikes.get(k + 1).copied().unwrap_or(f64::INFINITY);
        let mut i = t.partition_point(|&x| x < ts);
        while i < t.len() && t[i] < limit && v[i] >= rest_level {
            i += 1;
        }
        if i >= t.len() || t[i] >= limit || i == 0 {
            continue;
        }
        let enter = crossing_time(t, &v, i, rest_level);
        let mut j = i;
        while j < t.len() && v[j] < rest_level {
            j += 1;
        }
        if j >= t.len() {
            continue;
        }
        out.push(crossing_time(t, &v, j, rest_level) - enter);
    }
    out
}

fn crossing_time(t: &[f64], v: &[f64], i: usize, level: f64) -> f64 {
    let (a, b) = (v[i - 1], v[i]);
    if a == b {
        return t[i];
    }
    let f = ((a - level) / (a - b)).clamp(0.0, 1.0);
    t[i - 1] + f * (t[i] - t[i - 1])
}

/// Spike train using the circuit's probe and the `vmem` rest dwell.
pub fn spike_train(trace: &SimTrace, circuit: &Circuit) -> SpikeTrain {
    let Some(probe) = &circuit.spike_probe else {
        return SpikeTrain::default();
    };
    let times = if probe.falling {
        detect_spikes(trace, &probe.node, probe.threshold)
    } else {
        let v: Vec<f64> = trace
            .node_series(&probe.node)
            .unwrap_or_default()
            .iter()
            .map(|x| -x)
            .collect();
        falling_crossings(&trace.times, &v, -probe.threshold)
    };
    let refractory = if trace.node_index("vmem").is_some() {
        measure_refractory(trace, "vmem", REST_FRACTION * circuit.vdd, &times)
    } else {
        Vec::new()
    };
    SpikeTrain { times, refractory }
}

/// Energy dissipated between the first and last spike divided by the
/// number of intervals, so start-up transients before the first spike and
/// the tail after the last one are excluded.
pub fn energy_per_spike(ledger: &EnergyLedger, train: &SpikeTrain) -> Result<f64> {
    let n = train.times.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "energy per spike needs at least 2 spikes, got {n}"
        )));
    }
    let at = |t: f64| {
        ledger.dissipated_at(t).ok_or_else(|| {
            Error::InsufficientData(format!("no ledger snapshot brackets t = {t:e} s"))
        })
    };
    Ok((at(train.times[n - 1])? - at(train.times[0])?) / (n - 1) as f64)
}
