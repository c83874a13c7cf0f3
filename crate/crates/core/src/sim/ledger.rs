use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Cumulative energies at one instant, J.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub dissipated: f64,
    /// Drawn from the supply rails, relay drive included; excludes stimulus sources.
    pub supplied: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TagEnergy {
    pub dissipated: f64,
    pub delivered: f64,
}

/// Energy bookkeeping for one run, J.
///
/// `total_supply == dissipated_total() + stored_delta` up to rounding, and
/// `static_dissipated + dynamic_dissipated == dissipated_total()`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyLedger {
    pub tags: BTreeMap<String, TagEnergy>,
    pub static_dissipated: f64,
    pub dynamic_dissipated: f64,
    pub total_supply: f64,
    pub stored_delta: f64,
    pub duration: f64,
    /// Taken at every event and at the end of the run.
    pub snapshots: Vec<Snapshot>,
}

impl EnergyLedger {
    pub fn dissipated_total(&self) -> f64 {
        self.tags.values().map(|t| t.dissipated).sum()
    }

    pub fn tag(&self, name: &str) -> TagEnergy {
        self.tags.get(name).copied().unwrap_or_default()
    }

    /// Dissipated energy summed over tags starting with `prefix`.
    pub fn dissipated_with_prefix(&self, prefix: &str) -> f64 {
        self.tags
            .iter()
            .filter(|(k, _)| k.starts_with(prefix))
            .map(|(_, v)| v.dissipated)
            .sum()
    }

    /// Cumulative dissipated energy at `t`, interpolated between snapshots.
    pub fn dissipated_at(&self, t: f64) -> Option<f64> {
        self.interpolate(t, |s| s.dissipated)
    }

    /// Cumulative supply energy at `t`, interpolated between snapshots.
    pub fn supplied_at(&self, t: f64) -> Option<f64> {
        self.interpolate(t, |s| s.supplied)
    }

    fn interpolate(&self, t: f64, field: impl Fn(&Snapshot) -> f64) -> Option<f64> {
        let s = &self.snapshots;
        let k = s.partition_point(|x| x.time < t);
        if k < s.len() && s[k].time == t {
            return Some(field(&s[k]));
        }
        if k == 0 || k >= s.len() {
            return None;
        }
        let (a, b) = (&s[k - 1], &s[k]);
        Some(field(a) + (field(b) - field(a)) * (t - a.time) / (b.time - a.time))
    }

    pub fn conservation_error(&self) -> f64 {
        (self.total_supply - (self.dissipated_total() + self.stored_delta)).abs()
    }

    /// Tag-keyed JSON with joule values at 17 significant digits.
    pub fn to_json(&self) -> String {
        fn num(v: f64) -> String {
            if v.is_finite() {
                format!("{v:.16e}")
            } else {
                "null".into()
            }
        }
        fn key(k: &str) -> String {
            let mut s = String::from("\"");
            for c in k.chars() {
                match c {
                    '"' => s.push_str("\\\""),
                    '\\' => s.push_str("\\\\"),
                    c if (c as u32) < 0x20 => {
                        let _ = write!(s, "\\u{:04x}", c as u32);
                    }
                    c => s.push(c),
                }
            }
            s.push('"');
            s
        }
        let mut out = String::from("{\n  \"tags\": {");
        for (i, (k, v)) in self.tags.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(
                out,
                "\n    {}: {{\"dissipated_J\": {}, \"delivered_J\": {}}}",
                key(k),
                num(v.dissipated),
                num(v.delivered)
            );
        }
        out.push_str("\n  },\n");
        let _ = writeln!(out, "  \"dissipated_J\": {},", num(self.dissipated_total()));
        let _ = writeln!(out, "  \"static_J\": {},", num(self.static_dissipated));
        let _ = writeln!(out, "  \"dynamic_J\": {},", num(self.dynamic_dissipated));
        let _ = writeln!(out, "  \"total_supply_J\": {},", num(self.total_supply));
        let _ = writeln!(out, "  \"stored_delta_J\": {},", num(self.stored_delta));
        let _ = writeln!(out, "  \"duration_s\": {}", num(self.duration));
        out.push('}');
        out.push('\n');
        out
    }
}
