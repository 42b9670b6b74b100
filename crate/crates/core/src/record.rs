//! Wire format for heartbeat and diagnosis lines, shared by the emitter, the
//! collector, and the dataset files.
//!
//! Heartbeat line:  `HB <trace_id> <thread_id> <timestamp_ms> <heart_rate>`
//! Diagnosis line:  `DIAG <trace_id> <thread_id> <window_end_ts> <label> <distance> <reason>`
//!
//! Rates are written with 6 significant digits; distances with 6 decimal
//! places. Lines starting with `#` are comments.

use crate::model::AnomalyLabel;

/// One parsed heartbeat line.
#[derive(Debug, Clone, PartialEq)]
pub struct HbRecord {
    pub trace_id: String,
    pub thread_id: u32,
    pub timestamp_ms: u64,
    pub heart_rate: f64,
}

impl HbRecord {
    pub fn to_line(&self) -> String {
        format!(
            "HB {} {} {} {}",
            self.trace_id,
            self.thread_id,
            self.timestamp_ms,
            format_sig(self.heart_rate)
        )
    }

    /// Parse one heartbeat line. The caller supplies positional context for
    /// error reporting; this returns only the reason.
    pub fn parse(line: &str) -> Result<HbRecord, String> {
        let mut it = line.split_ascii_whitespace();
        if it.next() != Some("HB") {
            return Err("expected line to start with HB".into());
        }
        let trace_id = it.next().ok_or("missing trace_id")?.to_string();
        let thread_id = parse_field(it.next(), "thread_id")?;
        let timestamp_ms = parse_field(it.next(), "timestamp_ms")?;
        let heart_rate: f64 = parse_field(it.next(), "heart_rate")?;
        if !heart_rate.is_finite() || heart_rate < 0.0 {
            return Err(format!("heart_rate {heart_rate} out of range"));
        }
        if it.next().is_some() {
            return Err("trailing fields after heart_rate".into());
        }
        Ok(HbRecord {
            trace_id,
            thread_id,
            timestamp_ms,
            heart_rate,
        })
    }
}

/// Why a diagnosis fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagReason {
    /// The model classified a full window.
    Model,
    /// The silence deadline expired with no new heartbeat.
    Silence,
}

impl DiagReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            DiagReason::Model => "model",
            DiagReason::Silence => "silence",
        }
    }
}

/// One emitted diagnosis.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagRecord {
    pub trace_id: String,
    pub thread_id: u32,
    pub window_end_ms: u64,
    pub label: AnomalyLabel,
    pub distance: f64,
    pub reason: DiagReason,
}

impl DiagRecord {
    pub fn to_line(&self) -> String {
        format!(
            "DIAG {} {} {} {} {:.6} {}",
            self.trace_id,
            self.thread_id,
            self.window_end_ms,
            self.label,
            self.distance,
            self.reason.as_str()
        )
    }

    pub fn parse(line: &str) -> Result<DiagRecord, String> {
        let mut it = line.split_ascii_whitespace();
        if it.next() != Some("DIAG") {
            return Err("expected line to start with DIAG".into());
        }
        let trace_id = it.next().ok_or("missing trace_id")?.to_string();
        let thread_id = parse_field(it.next(), "thread_id")?;
        let window_end_ms = parse_field(it.next(), "window_end_ts")?;
        let label =
            AnomalyLabel::parse(it.next().ok_or("missing label")?).map_err(|e| e.to_string())?;
        let distance: f64 = parse_field(it.next(), "distance")?;
        let reason = match it.next().ok_or("missing reason")? {
            "model" => DiagReason::Model,
            "silence" => DiagReason::Silence,
            other => return Err(format!("unknown reason {other:?}")),
        };
        if it.next().is_some() {
            return Err("trailing fields after reason".into());
        }
        Ok(DiagRecord {
            trace_id,
            thread_id,
            window_end_ms,
            label,
            distance,
            reason,
        })
    }
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, name: &str) -> Result<T, String> {
    let raw = field.ok_or_else(|| format!("missing {name}"))?;
    raw.parse().map_err(|_| format!("bad {name} {raw:?}"))
}

/// True for lines that carry no record: blank or `#`-prefixed.
pub fn is_comment_or_blank(line: &str) -> bool {
    let t = line.trim_start();
    t.is_empty() || t.starts_with('#')
}

/// Format with 6 significant digits, shortest form: plain decimal for
/// exponents in [-4, 5], scientific outside, trailing zeros dropped.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // {:.5e} rounds to exactly 6 significant digits, e.g. "-1.23457e-3".
    let sci = format!("{:.5e}", x);
    let (mant, exp) = sci.split_once('e').expect("exponent in {:.5e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    let neg = mant.starts_with('-');
    let digits: Vec<u8> = mant.bytes().filter(|b| b.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 6);
    let body = if (-4..6).contains(&exp) {
        decimal_body(&digits, exp)
    } else {
        let kept = trim_zeros(&digits);
        let m = if kept.len() == 1 {
            kept.to_string()
        } else {
            format!("{}.{}", &kept[..1], &kept[1..])
        };
        format!("{m}e{exp}")
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// Plain-decimal rendering of 6 mantissa digits whose leading digit sits at
/// the 10^exp place, with -4 <= exp <= 5.
fn decimal_body(digits: &[u8], exp: i32) -> String {
    let s = std::str::from_utf8(digits).unwrap();
    if exp >= 0 {
        let split = (exp + 1) as usize;
        let int_part = &s[..split];
        let frac = trim_zeros(&s.as_bytes()[split..]);
        if frac.is_empty() {
            int_part.to_string()
        } else {
            format!("{int_part}.{frac}")
        }
    } else {
        let zeros = "0".repeat((-exp - 1) as usize);
        let frac = trim_zeros(digits);
        format!("0.{zeros}{frac}")
    }
}

fn trim_zeros(digits: &[u8]) -> &str {
    let end = digits.iter().rposition(|&b| b != b'0').map_or(0, |i| i + 1);
    std::str::from_utf8(&digits[..end]).unwrap()
}

/// Timestamp conversion used everywhere a file meets memory: files carry
/// integer milliseconds, in-memory sequences carry seconds.
pub fn ms_to_s(ms: u64) -> f64 {
    ms as f64 / 1000.0
}

pub fn s_to_ms(t: f64) -> u64 {
    (t * 1000.0).round() as u64
}
