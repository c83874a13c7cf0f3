//! SI quantities with engineering-suffix parsing (`235 pA`, `500fF`, `0.53 ms`).

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dimension {
    Volt,
    Ampere,
    Farad,
    Second,
    Hertz,
    Ohm,
    Dimensionless,
}

impl Dimension {
    pub fn unit_word(self) -> &'static str {
        match self {
            Dimension::Volt => "V",
            Dimension::Ampere => "A",
            Dimension::Farad => "F",
            Dimension::Second => "s",
            Dimension::Hertz => "Hz",
            Dimension::Ohm => "Ohm",
            Dimension::Dimensionless => "",
        }
    }

    fn from_unit_word(word: &str) -> Option<Self> {
        Some(match word {
            "V" => Dimension::Volt,
            "A" => Dimension::Ampere,
            "F" => Dimension::Farad,
            "s" => Dimension::Second,
            "Hz" => Dimension::Hertz,
            "Ohm" | "ohm" | "Ω" => Dimension::Ohm,
            _ => return None,
        })
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dimension::Dimensionless => f.write_str("dimensionless"),
            d => f.write_str(d.unit_word()),
        }
    }
}

/// A magnitude in base SI units together with the dimension it was written in.
///
/// `dimension` is `None` when the literal carried no unit word; such a value is
/// accepted for any expected dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub magnitude: f64,
    pub dimension: Option<Dimension>,
}

impl Quantity {
    pub fn new(magnitude: f64, dimension: Dimension) -> Self {
        Self {
            magnitude,
            dimension: Some(dimension),
        }
    }

    /// Config-file spelling. Reparsing yields the identical magnitude.
    pub fn to_config_string(&self) -> String {
        let mag = if self.magnitude.is_infinite() {
            if self.magnitude > 0.0 {
                "inf".to_string()
            } else {
                "-inf".to_string()
            }
        } else {
            format!("{:e}", self.magnitude)
        };
        match self.dimension {
            Some(d) if d != Dimension::Dimensionless => format!("{mag} {}", d.unit_word()),
            _ => mag,
        }
    }
}

fn si_scale(c: char) -> Option<f64> {
    Some(match c {
        'f' => 1e-15,
        'p' => 1e-12,
        'n' => 1e-9,
        'u' => 1e-6,
        'm' => 1e-3,
        'k' => 1e3,
        'M' => 1e6,
        'G' => 1e9,
        _ => return None,
    })
}

/// Splits the leading float literal off `text`. Returns (number, byte offset of the rest).
fn split_number(text: &str) -> Option<(f64, usize)> {
    let lower = text.to_ascii_lowercase();
    for word in ["+infinity", "-infinity", "infinity", "+inf", "-inf", "inf"] {
        if lower.starts_with(word) {
            let sign = if word.starts_with('-') { -1.0 } else { 1.0 };
            return Some((sign * f64::INFINITY, word.len()));
        }
    }
    let bytes = text.as_bytes();
    let mut i = 0;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        i += 1;
    }
    let mut digits = 0;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
        digits += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
            digits += 1;
        }
    }
    if digits == 0 {
        return None;
    }
    // exponent only if it is complete
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        let start = j;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        if j > start {
            i = j;
        }
    }
    text[..i].parse::<f64>().ok().map(|v| (v, i))
}

/// Parses a numeric literal with optional SI scale suffix and unit word.
///
/// Suffixes are case-sensitive (`m` milli, `M` mega). Whitespace may separate
/// the number, the suffix and the unit.
pub fn parse_quantity(text: &str) -> Result<Quantity, String> {
    let text = text.trim();
    let (number, rest_at) =
        split_number(text).ok_or_else(|| format!("expected a number, found '{text}'"))?;
    let rest: String = text[rest_at..]
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect();
    if rest.is_empty() {
        return Ok(Quantity {
            magnitude: number,
            dimension: None,
        });
    }
    if let Some(dim) = Dimension::from_unit_word(&rest) {
        return Ok(Quantity::new(number, dim));
    }
    let mut chars = rest.chars();
    let first = chars.next().unwrap();
    let tail = chars.as_str();
    let scale = si_scale(first).ok_or_else(|| format!("unknown unit or suffix '{rest}'"))?;
    let magnitude = number * scale;
    if tail.is_empty() {
        return Ok(Quantity {
            magnitude,
            dimension: None,
        });
    }
    let dim = Dimension::from_unit_word(tail).ok_or_else(|| format!("unknown unit '{tail}'"))?;
    Ok(Quantity::new(magnitude, dim))
}
