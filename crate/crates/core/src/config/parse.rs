use std::collections::{BTreeMap, HashMap};

use super::{
    check_sweep, lookup, sweep_key_dimension, Diagnostic, ExperimentConfig, OutputFormat,
    OutputSpec, Sweep, SweepScale, SOLVER_KEYS,
};
use crate::circuit::StimulusSpec;
use crate::templates::{mos_keys, relay_keys, CircuitTemplate, InstanceKind, TemplateRegistry};
use crate::units::{parse_quantity, Dimension, Quantity};

/// Parses config text against the built-in templates.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<Diagnostic>> {
    parse_config_with(text, &TemplateRegistry::builtin())
}

/// Parses config text. Either the whole config or every diagnostic found,
/// sorted by position; never a partial config.
pub fn parse_config_with(
    text: &str,
    registry: &TemplateRegistry,
) -> Result<ExperimentConfig, Vec<Diagnostic>> {
    let mut p = Parser::new(registry);
    let mut last = 0;
    for (i, raw) in text.lines().enumerate() {
        last = i + 1;
        p.line(i + 1, raw);
    }
    p.finish(last + 1)
}

#[derive(Debug, Clone, PartialEq)]
enum Section {
    None,
    Circuit,
    Biases,
    Device(String, InstanceKind),
    Relay,
    Stimulus,
    Solver,
    Experiment,
    Sweep,
    Output,
    /// Contents ignored; the header already produced a diagnostic.
    Skip,
}

impl Section {
    fn label(&self) -> String {
        match self {
            Section::Device(n, _) => format!("device.{n}"),
            s => format!("{s:?}").to_lowercase(),
        }
    }
}

#[derive(Clone, Copy)]
struct Pos {
    line: usize,
    col: usize,
}

struct Parser<'r> {
    registry: &'r TemplateRegistry,
    diags: Vec<Diagnostic>,
    section: Section,
    seen: HashMap<(String, String), usize>,
    template: Option<&'r dyn CircuitTemplate>,
    template_given: bool,
    preset: Option<String>,
    biases: BTreeMap<String, Quantity>,
    devices: BTreeMap<String, BTreeMap<String, Quantity>>,
    relay: BTreeMap<String, Quantity>,
    solver: BTreeMap<String, Quantity>,
    target_rate: Option<Quantity>,
    output: OutputSpec,
    stim_header: Option<Pos>,
    stim: BTreeMap<String, (String, Pos)>,
    sweep_header: Option<Pos>,
    sweep: BTreeMap<String, (String, Pos)>,
}

fn is_ident(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(ch) if ch.is_ascii_alphabetic() || ch == '_')
        && c.all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
}

fn is_word(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|ch| ch.is_ascii_alphanumeric() || matches!(ch, '_' | '.' | '-'))
}

fn col_of(raw: &str, byte: usize) -> usize {
    raw[..byte].chars().count() + 1
}

/// Text before any `#` outside double quotes, or the byte offset of an
/// unterminated quote.
fn strip_comment(raw: &str) -> Result<&str, usize> {
    let mut open = None;
    for (i, ch) in raw.char_indices() {
        match ch {
            '"' => open = if open.is_some() { None } else { Some(i) },
            '#' if open.is_none() => return Ok(&raw[..i]),
            _ => {}
        }
    }
    match open {
        Some(i) => Err(i),
        None => Ok(raw),
    }
}

/// A bare word or a double-quoted string.
fn string_value(v: &str) -> Result<String, String> {
    if let Some(inner) = v.strip_prefix('"') {
        match inner.strip_suffix('"') {
            Some(s) if !s.contains('"') => Ok(s.to_string()),
            _ => Err(format!("malformed quoted string {v}")),
        }
    } else if v.chars().any(char::is_whitespace) || v.contains('"') {
        Err(format!(
            "expected a single word or a quoted string, found '{v}'"
        ))
    } else {
        Ok(v.to_string())
    }
}

impl<'r> Parser<'r> {
    fn new(registry: &'r TemplateRegistry) -> Self {
        Self {
            registry,
            diags: Vec::new(),
            section: Section::None,
            seen: HashMap::new(),
            template: None,
            template_given: false,
            preset: None,
            biases: BTreeMap::new(),
            devices: BTreeMap::new(),
            relay: BTreeMap::new(),
            solver: BTreeMap::new(),
            target_rate: None,
            output: OutputSpec::default(),
            stim_header: None,
            stim: BTreeMap::new(),
            sweep_header: None,
            sweep: BTreeMap::new(),
        }
    }

    fn err(&mut self, pos: Pos, msg: impl Into<String>) {
        self.diags.push(Diagnostic::new(pos.line, pos.col, msg));
    }

    fn line(&mut self, line: usize, raw: &str) {
        let content = match strip_comment(raw) {
            Ok(c) => c,
            Err(at) => {
                let col = col_of(raw, at);
                self.err(Pos { line, col }, "unterminated string");
                return;
            }
        };
        let trimmed = content.trim();
        if trimmed.is_empty() {
            return;
        }
        let start = content.len() - content.trim_start().len();
        let pos = Pos {
            line,
            col: col_of(raw, start),
        };
        if trimmed.starts_with('[') {
            self.header(pos, trimmed);
            return;
        }
        let Some(eq) = content.find('=') else {
            self.err(pos, format!("expected `key = value`, found '{trimmed}'"));
            return;
        };
        let key = content[..eq].trim();
        let value = content[eq + 1..].trim();
        let vstart = eq + 1 + (content[eq + 1..].len() - content[eq + 1..].trim_start().len());
        let vpos = Pos {
            line,
            col: col_of(raw, vstart),
        };
        if key.is_empty() {
            self.err(pos, "missing key before '='");
            return;
        }
        if !is_ident(key) {
            self.err(pos, format!("invalid key '{key}'"));
            return;
        }
        if value.is_empty() {
            self.err(vpos, format!("missing value for '{key}'"));
            return;
        }
        match self.section {
            Section::None => {
                self.err(pos, format!("'{key}' appears before any [section]"));
                return;
            }
            Section::Skip => return,
            _ => {}
        }
        let slot = (self.section.label(), key.to_string());
        if let Some(first) = self.seen.get(&slot) {
            let first = *first;
            self.err(
                pos,
                format!("duplicate key '{key}' (first set on line {first})"),
            );
            return;
        }
        self.seen.insert(slot, line);
        self.entry(pos, vpos, key, value);
    }

    fn header(&mut self, pos: Pos, text: &str) {
        let Some(inner) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) else {
            self.err(pos, format!("unterminated section header '{text}'"));
            return;
        };
        let name = inner.trim();
        let needs_template = |s: &str| {
            matches!(s, "biases" | "relay" | "stimulus" | "sweep") || s.starts_with("device.")
        };
        if needs_template(name) && self.template.is_none() {
            self.err(
                pos,
                format!("[{name}] must come after `template` is set in [circuit]"),
            );
            self.section = Section::Skip;
            return;
        }
        self.section = match name {
            "circuit" => Section::Circuit,
            "biases" => Section::Biases,
            "relay" => Section::Relay,
            "stimulus" => {
                self.stim_header.get_or_insert(pos);
                Section::Stimulus
            }
            "solver" => Section::Solver,
            "experiment" => Section::Experiment,
            "sweep" => {
                self.sweep_header.get_or_insert(pos);
                Section::Sweep
            }
            "output" => Section::Output,
            _ => {
                if let Some(inst) = name.strip_prefix("device.") {
                    let t = self.template.expect("checked above");
                    match t.instance_kind(inst) {
                        Some(kind) => Section::Device(inst.to_string(), kind),
                        None => {
                            let known: Vec<&str> = t.instances().iter().map(|(n, _)| *n).collect();
                            self.err(
                                pos,
                                format!(
                                    "template {} has no device '{inst}' (known: {})",
                                    t.name(),
                                    known.join(", ")
                                ),
                            );
                            Section::Skip
                        }
                    }
                } else {
                    self.err(pos, format!("unknown section [{name}]"));
                    Section::Skip
                }
            }
        };
    }

    fn quantity(
        &mut self,
        vpos: Pos,
        key: &str,
        value: &str,
        expected: Dimension,
    ) -> Option<Quantity> {
        match parse_quantity(value) {
            Err(e) => {
                self.err(vpos, format!("'{key}': {e}"));
                None
            }
            Ok(q) => match q.dimension {
                Some(d) if d != expected => {
                    self.err(
                        vpos,
                        format!("'{key}' expects {expected}, found a value in {d}"),
                    );
                    None
                }
                _ => Some(q),
            },
        }
    }

    fn integer(&mut self, vpos: Pos, key: &str, value: &str, min: u64, max: u64) -> Option<u64> {
        let q = self.quantity(vpos, key, value, Dimension::Dimensionless)?;
        let v = q.magnitude;
        if v.fract() != 0.0 || v < min as f64 || v > max as f64 {
            self.err(
                vpos,
                format!("'{key}' must be an integer in {min}..={max}, found {value}"),
            );
            return None;
        }
        Some(v as u64)
    }

    fn entry(&mut self, pos: Pos, vpos: Pos, key: &str, value: &str) {
        match self.section.clone() {
            Section::Circuit => match key {
                "template" => {
                    self.template_given = true;
                    match string_value(value) {
                        Err(e) => self.err(vpos, e),
                        Ok(name) => match self.registry.get(&name) {
                            Ok(t) => self.template = Some(t),
                            Err(_) => {
                                let names = self.registry.names().join(", ");
                                self.err(
                                    vpos,
                                    format!("unknown template '{name}' (known: {names})"),
                                );
                            }
                        },
                    }
                }
                "preset" => match string_value(value) {
                    Ok(p) if is_word(&p) => self.preset = Some(p),
                    Ok(p) => self.err(vpos, format!("invalid preset name '{p}'")),
                    Err(e) => self.err(vpos, e),
                },
                _ => self.err(pos, format!("unknown key '{key}' in [circuit]")),
            },
            Section::Biases => {
                let t = self.template.expect("section requires template");
                match t.bias_key(key) {
                    Some(b) => {
                        if let Some(q) = self.quantity(vpos, key, value, b.dimension) {
                            self.biases.insert(key.to_string(), q);
                        }
                    }
                    None => self.err(
                        pos,
                        format!("unknown bias '{key}' for template {}", t.name()),
                    ),
                }
            }
            Section::Device(inst, kind) => {
                let dim = lookup(mos_keys(), key).or_else(|| {
                    (kind == InstanceKind::Switch)
                        .then(|| lookup(relay_keys(), key))
                        .flatten()
                });
                match dim {
                    Some(d) => {
                        if let Some(q) = self.quantity(vpos, key, value, d) {
                            self.devices
                                .entry(inst)
                                .or_default()
                                .insert(key.to_string(), q);
                        }
                    }
                    None => self.err(pos, format!("device '{inst}' has no parameter '{key}'")),
                }
            }
            Section::Relay => match lookup(relay_keys(), key) {
                Some(d) => {
                    if let Some(q) = self.quantity(vpos, key, value, d) {
                        self.relay.insert(key.to_string(), q);
                    }
                }
                None => self.err(pos, format!("unknown relay parameter '{key}'")),
            },
            Section::Solver => match lookup(SOLVER_KEYS, key) {
                Some(d) => {
                    if let Some(q) = self.quantity(vpos, key, value, d) {
                        self.solver.insert(key.to_string(), q);
                    }
                }
                None => self.err(pos, format!("unknown solver setting '{key}'")),
            },
            Section::Experiment => match key {
                "target_rate" => {
                    if let Some(q) = self.quantity(vpos, key, value, Dimension::Hertz) {
                        if q.magnitude > 0.0 && q.magnitude.is_finite() {
                            self.target_rate = Some(q);
                        } else {
                            self.err(vpos, "'target_rate' must be positive and finite");
                        }
                    }
                }
                _ => self.err(pos, format!("unknown key '{key}' in [experiment]")),
            },
            Section::Output => match key {
                "dir" => match string_value(value) {
                    Ok(d) => self.output.dir = Some(d),
                    Err(e) => self.err(vpos, e),
                },
                "format" => match value {
                    "csv" => self.output.format = Some(OutputFormat::Csv),
                    "markdown" | "md" => self.output.format = Some(OutputFormat::Markdown),
                    _ => self.err(vpos, format!("unknown format '{value}' (csv, markdown)")),
                },
                _ => self.err(pos, format!("unknown key '{key}' in [output]")),
            },
            Section::Stimulus => {
                const KEYS: &[&str] = &[
                    "kind", "level", "low", "high", "width", "period", "start", "count", "points",
                ];
                if KEYS.contains(&key) {
                    self.stim.insert(key.to_string(), (value.to_string(), vpos));
                } else {
                    self.err(pos, format!("unknown key '{key}' in [stimulus]"));
                }
            }
            Section::Sweep => {
                const KEYS: &[&str] = &["key", "from", "to", "steps", "scale"];
                if KEYS.contains(&key) {
                    self.sweep
                        .insert(key.to_string(), (value.to_string(), vpos));
                } else {
                    self.err(pos, format!("unknown key '{key}' in [sweep]"));
                }
            }
            Section::None | Section::Skip => {}
        }
    }

    fn stimulus(&mut self) -> Option<StimulusSpec> {
        let header = self.stim_header?;
        let t = self.template?;
        let level_dim = t.stimulus_dimension();
        let raw = std::mem::take(&mut self.stim);
        let Some((kind, kpos)) = raw.get("kind").cloned() else {
            self.err(header, "[stimulus] needs `kind` (dc, pulse or pwl)");
            return None;
        };
        let allowed: &[&str] = match kind.as_str() {
            "dc" => &["kind", "level"],
            "pulse" => &["kind", "low", "high", "width", "period", "start", "count"],
            "pwl" => &["kind", "points"],
            _ => {
                self.err(
                    kpos,
                    format!("unknown stimulus kind '{kind}' (dc, pulse, pwl)"),
                );
                return None;
            }
        };
        let mut ok = true;
        for (k, (_, p)) in &raw {
            if !allowed.contains(&k.as_str()) {
                self.diags.push(Diagnostic::new(
                    p.line,
                    p.col,
                    format!("'{k}' does not apply to a {kind} stimulus"),
                ));
                ok = false;
            }
        }
        let get = |p: &mut Self, k: &str, d: Dimension| -> Option<f64> {
            match raw.get(k) {
                Some((v, pos)) => p.quantity(*pos, k, v, d).map(|q| q.magnitude),
                None => {
                    p.err(header, format!("{kind} stimulus needs '{k}'"));
                    None
                }
            }
        };
        let spec = match kind.as_str() {
            "dc" => get(self, "level", level_dim).map(|level| StimulusSpec::Dc { level }),
            "pulse" => {
                let low = get(self, "low", level_dim);
                let high = get(self, "high", level_dim);
                let width = get(self, "width", Dimension::Second);
                let period = get(self, "period", Dimension::Second);
                let start = get(self, "start", Dimension::Second);
                let count = match raw.get("count") {
                    Some((v, pos)) => self.integer(*pos, "count", v, 1, u64::MAX >> 11).map(Some),
                    None => Some(None),
                };
                match (low, high, width, period, start, count) {
                    (
                        Some(low),
                        Some(high),
                        Some(width),
                        Some(period),
                        Some(start),
                        Some(count),
                    ) => Some(StimulusSpec::PulseTrain {
                        low,
                        high,
                        width,
                        period,
                        start,
                        count,
                    }),
                    _ => None,
                }
            }
            _ => match raw.get("points") {
                None => {
                    self.err(header, "pwl stimulus needs 'points'");
                    None
                }
                Some((v, pos)) => {
                    let mut points = Vec::new();
                    let mut good = true;
                    for item in v.split(',') {
                        let Some((ts, vs)) = item.split_once(':') else {
                            self.err(
                                *pos,
                                format!("pwl point '{}' is not `time : level`", item.trim()),
                            );
                            good = false;
                            break;
                        };
                        let tq = self.quantity(*pos, "points", ts, Dimension::Second);
                        let vq = self.quantity(*pos, "points", vs, level_dim);
                        match (tq, vq) {
                            (Some(a), Some(b)) => points.push((a.magnitude, b.magnitude)),
                            _ => good = false,
                        }
                    }
                    good.then_some(StimulusSpec::PiecewiseLinear { points })
                }
            },
        };
        let spec = spec.filter(|_| ok)?;
        if let Err(e) = spec.validate() {
            self.err(header, e);
            return None;
        }
        Some(spec)
    }

    fn sweep(&mut self) -> Option<Sweep> {
        let header = self.sweep_header?;
        let t = self.template?;
        let raw = std::mem::take(&mut self.sweep);
        let mut missing = false;
        for k in ["key", "from", "to", "steps"] {
            if !raw.contains_key(k) {
                self.err(header, format!("[sweep] needs '{k}'"));
                missing = true;
            }
        }
        if missing {
            return None;
        }
        let (key, kpos) = raw["key"].clone();
        let Some(dim) = sweep_key_dimension(t, &key) else {
            self.err(
                kpos,
                format!("'{key}' is not a sweepable key of template {}", t.name()),
            );
            return None;
        };
        let (fv, fpos) = &raw["from"];
        let (tv, tpos) = &raw["to"];
        let (sv, spos) = &raw["steps"];
        let from = self.quantity(*fpos, "from", fv, dim);
        let to = self.quantity(*tpos, "to", tv, dim);
        let steps = self.integer(*spos, "steps", sv, 2, 1_000_000);
        let scale = match raw.get("scale").map(|(v, p)| (v.as_str(), *p)) {
            None | Some(("linear", _)) => Some(SweepScale::Linear),
            Some(("log", _)) => Some(SweepScale::Log),
            Some((v, p)) => {
                self.err(p, format!("unknown sweep scale '{v}' (linear, log)"));
                None
            }
        };
        let sw = Sweep {
            key,
            from: from?,
            to: to?,
            steps: steps? as usize,
            scale: scale?,
        };
        if let Some(msg) = check_sweep(&sw) {
            self.err(header, msg);
            return None;
        }
        Some(sw)
    }

    fn finish(mut self, end_line: usize) -> Result<ExperimentConfig, Vec<Diagnostic>> {
        let stimulus = self.stimulus();
        let sweep = self.sweep();
        if !self.template_given {
            self.err(
                Pos {
                    line: end_line,
                    col: 1,
                },
                "missing `template` in [circuit]",
            );
        }
        if !self.diags.is_empty() {
            let mut d = self.diags;
            d.sort_by_key(|a| (a.line, a.column));
            return Err(d);
        }
        Ok(ExperimentConfig {
            template: self.template.expect("checked").name().to_string(),
            preset: self.preset,
            biases: self.biases,
            devices: self.devices,
            relay: self.relay,
            stimulus,
            solver: self.solver,
            target_rate: self.target_rate,
            sweep,
            output: self.output,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "\
# hybrid neuron at the refractory anchor
[circuit]
template = lif.hybrid

[biases]
i_inject = 235 pA
c_mem = 500 fF   # membrane

[device.M_leak]
i0 = 0.1 pA

[solver]
t_stop = 20 ms
";

    #[test]
    fn parses_quantities_with_units() {
        let c = parse_config(BASIC).unwrap();
        assert_eq!(c.template, "lif.hybrid");
        let q = c.biases["i_inject"];
        assert!((q.magnitude - 2.35e-10).abs() < 1e-24);
        assert_eq!(q.dimension, Some(Dimension::Ampere));
        assert!((c.biases["c_mem"].magnitude - 5e-13).abs() < 1e-27);
        assert!((c.devices["M_leak"]["i0"].magnitude - 1e-13).abs() < 1e-27);
        assert!((c.solver_config().t_stop - 0.02).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_located() {
        let text = "[circuit]\ntemplate = lif.cmos\n[biases]\nv_lk = 100 mA\n";
        let d = parse_config(text).unwrap_err();
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].line, d[0].column), (4, 8));
        assert!(d[0].message.contains("expects V"), "{}", d[0].message);
    }

    #[test]
    fn unknown_keys_are_diagnosed() {
        let text =
            "[circuit]\ntemplate = lif.cmos\n[biases]\nv_foo = 1 V\n[device.M_nope]\ni0 = 1 pA\n";
        let d = parse_config(text).unwrap_err();
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].line, 4);
        assert_eq!(d[1].line, 5);
    }

    #[test]
    fn relay_keys_only_on_switches() {
        let ok = "[circuit]\ntemplate = lif.hybrid\n[device.M_gate]\nt_switch = 50 ns\n";
        assert!(parse_config(ok).is_ok());
        let bad = "[circuit]\ntemplate = lif.hybrid\n[device.M_leak]\nt_switch = 50 ns\n";
        assert_eq!(parse_config(bad).unwrap_err()[0].line, 4);
    }

    #[test]
    fn template_must_come_first() {
        let text = "[biases]\ni_inject = 1 pA\n[circuit]\ntemplate = lif.cmos\n";
        let d = parse_config(text).unwrap_err();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].line, 1);
    }

    #[test]
    fn missing_template() {
        let d = parse_config("[solver]\nt_stop = 1 ms\n").unwrap_err();
        assert_eq!(d[0].line, 3);
    }

    #[test]
    fn duplicate_key() {
        let text = "[circuit]\ntemplate = lif.cmos\n[biases]\nv_lk = 0.1\nv_lk = 0.2\n";
        let d = parse_config(text).unwrap_err();
        assert_eq!(d[0].line, 5);
        assert!(d[0].message.contains("line 4"));
    }

    #[test]
    fn syntax_errors() {
        for (text, line) in [
            ("[circuit\ntemplate = lif.cmos\n", 1),
            ("[circuit]\ntemplate lif.cmos\n", 2),
            ("[circuit]\ntemplate = lif.cmos\n[biases]\n= 3\n", 4),
            ("[circuit]\ntemplate = lif.cmos\n[biases]\nv_lk =\n", 4),
            ("[circuit]\ntemplate = lif.cmos\n[output]\ndir = \"abc\n", 4),
            ("k = 1\n[circuit]\ntemplate = lif.cmos\n", 1),
        ] {
            let d = parse_config(text).unwrap_err();
            assert_eq!(d[0].line, line, "{text:?}: {d:?}");
        }
    }

    #[test]
    fn stimulus_kinds() {
        let text =
            "[circuit]\ntemplate = dpi.cmos\n[stimulus]\nkind = pulse\nlow = 0 V\nhigh = 0.5 V\n\
                    width = 1 us\nperiod = 10 ms\nstart = 0 s\ncount = 3\n";
        let c = parse_config(text).unwrap();
        assert!(matches!(
            c.stimulus,
            Some(StimulusSpec::PulseTrain { count: Some(3), .. })
        ));

        let text = "[circuit]\ntemplate = lif.cmos\n[stimulus]\nkind = pwl\npoints = 0 s : 0 A, 1 ms : 100 pA\n";
        let c = parse_config(text).unwrap();
        assert_eq!(
            c.stimulus,
            Some(StimulusSpec::PiecewiseLinear {
                points: vec![(0.0, 0.0), (1e-3, 1e-10)]
            })
        );

        let text = "[circuit]\ntemplate = lif.cmos\n[stimulus]\nkind = dc\nlevel = 1 V\n";
        assert_eq!(parse_config(text).unwrap_err()[0].line, 5);
        let text =
            "[circuit]\ntemplate = lif.cmos\n[stimulus]\nkind = dc\nlevel = 1 pA\nwidth = 1 s\n";
        assert_eq!(parse_config(text).unwrap_err()[0].line, 6);
    }

    #[test]
    fn sweep_section() {
        let text = "[circuit]\ntemplate = lif.cmos\n[sweep]\nkey = target_rate\nfrom = 10 Hz\nto = 250 Hz\n\
                    steps = 5\nscale = log\n";
        let c = parse_config(text).unwrap();
        let pts = super::super::expand_sweep(&c).unwrap();
        assert_eq!(pts.len(), 5);
        assert_eq!(pts[0].target_rate.unwrap().magnitude, 10.0);
        assert_eq!(pts[4].target_rate.unwrap().magnitude, 250.0);

        let one = text.replace("steps = 5", "steps = 1");
        assert_eq!(parse_config(&one).unwrap_err()[0].line, 7);
        let flat = text.replace("to = 250 Hz", "to = 10 Hz");
        assert!(parse_config(&flat).unwrap_err()[0]
            .message
            .contains("degenerate"));
        let wrong = text.replace("from = 10 Hz", "from = 10 A");
        assert_eq!(parse_config(&wrong).unwrap_err()[0].line, 5);
    }

    #[test]
    fn roundtrip_basic() {
        let reg = TemplateRegistry::builtin();
        let c = parse_config(BASIC).unwrap();
        let again = parse_config(&c.serialize(&reg)).unwrap();
        assert_eq!(c, again);
    }
}
