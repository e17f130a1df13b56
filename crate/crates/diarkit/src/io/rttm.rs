//! RTTM reading and writing.
//!
//! Only `SPEAKER` lines carry diarization content:
//!
//! ```text
//! SPEAKER <file> <chan> <tbeg> <tdur> <ortho> <stype> <name> <conf> <slat>
//! ```
//!
//! Other line types (`NON-LEX`, `SPKR-INFO`, ...) appear in real files and
//! are skipped with a collected warning rather than rejected. Writing uses
//! millisecond (3-decimal) precision, and parsing reconstructs segment end
//! times by exact decimal addition of `tbeg + tdur`, so a file written at
//! that precision parses back to bit-identical annotations.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::timeline::{DiarizationAnnotation, SpeakerSegment, TimeInterval, TimelineError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RttmError {
    #[error("line {line}: expected 10 fields, found {found}: {text:?}")]
    FieldCount { line: usize, found: usize, text: String },
    #[error("line {line}: non-numeric {field} {value:?}: {text:?}")]
    BadNumber { line: usize, field: &'static str, value: String, text: String },
    #[error("line {line}: non-positive duration {tdur}: {text:?}")]
    NonPositiveDuration { line: usize, tdur: f64, text: String },
    #[error("line {line}: {source}: {text:?}")]
    BadSegment {
        line: usize,
        text: String,
        #[source]
        source: TimelineError,
    },
}

/// A non-`SPEAKER` line that was skipped during parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct RttmWarning {
    pub line: usize,
    pub line_type: String,
}

impl fmt::Display for RttmWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: skipped {:?} line", self.line, self.line_type)
    }
}

/// Result of parsing one RTTM stream: normalized annotations keyed by
/// recording id, plus any skipped-line warnings in input order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RttmDocument {
    pub annotations: BTreeMap<String, DiarizationAnnotation>,
    pub warnings: Vec<RttmWarning>,
}

/// Parses RTTM text into per-recording normalized annotations.
///
/// Blank lines are ignored; lines of a type other than `SPEAKER` are skipped
/// and reported in [`RttmDocument::warnings`]. A malformed `SPEAKER` line is
/// an error carrying the 1-based line number and the offending text.
pub fn parse_rttm(input: &str) -> Result<RttmDocument, RttmError> {
    let mut grouped: BTreeMap<String, DiarizationAnnotation> = BTreeMap::new();
    let mut warnings = Vec::new();

    for (idx, raw) in input.lines().enumerate() {
        let line = idx + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        let Some((&kind, rest)) = fields.split_first() else {
            continue;
        };
        if kind != "SPEAKER" {
            warnings.push(RttmWarning { line, line_type: kind.to_string() });
            continue;
        }
        if rest.len() != 9 {
            return Err(RttmError::FieldCount {
                line,
                found: fields.len(),
                text: raw.to_string(),
            });
        }
        let (file, tbeg_text, tdur_text, name) = (rest[0], rest[2], rest[3], rest[6]);

        let tbeg: f64 = tbeg_text.parse().map_err(|_| RttmError::BadNumber {
            line,
            field: "tbeg",
            value: tbeg_text.to_string(),
            text: raw.to_string(),
        })?;
        let tdur: f64 = tdur_text.parse().map_err(|_| RttmError::BadNumber {
            line,
            field: "tdur",
            value: tdur_text.to_string(),
            text: raw.to_string(),
        })?;
        if !(tdur > 0.0) {
            return Err(RttmError::NonPositiveDuration { line, tdur, text: raw.to_string() });
        }

        let tend = decimal_add(tbeg_text, tdur_text).unwrap_or(tbeg + tdur);
        let segment = TimeInterval::new(tbeg, tend)
            .and_then(|interval| SpeakerSegment::new(file, name, interval))
            .map_err(|source| RttmError::BadSegment { line, text: raw.to_string(), source })?;

        grouped
            .entry(file.to_string())
            .or_insert_with(|| DiarizationAnnotation::new(file))
            .push(segment);
    }

    let mut annotations = BTreeMap::new();
    for (rec, ann) in grouped {
        // Single-recording groups by construction, so this cannot fail.
        let normalized = ann.normalize().expect("grouped by recording id");
        annotations.insert(rec, normalized);
    }
    Ok(RttmDocument { annotations, warnings })
}

/// Writes annotations as RTTM text: one `SPEAKER` line per segment, times at
/// 3 decimal places, channel `1`, `<NA>` placeholders, lines ordered by
/// `(recording_id, start, speaker)`, each line `\n`-terminated.
pub fn write_rttm<'a, I>(annotations: I) -> String
where
    I: IntoIterator<Item = &'a DiarizationAnnotation>,
{
    let mut rows: Vec<&SpeakerSegment> = Vec::new();
    for ann in annotations {
        rows.extend(ann.segments());
    }
    rows.sort_by(|a, b| {
        a.recording_id()
            .cmp(b.recording_id())
            .then_with(|| a.interval().start().total_cmp(&b.interval().start()))
            .then_with(|| a.speaker().cmp(b.speaker()))
    });

    let mut out = String::new();
    for seg in rows {
        writeln!(
            out,
            "SPEAKER {} 1 {:.3} {:.3} <NA> <NA> {} <NA> <NA>",
            seg.recording_id(),
            seg.interval().start(),
            seg.interval().duration(),
            seg.speaker(),
        )
        .expect("writing to String cannot fail");
    }
    out
}

/// Parses a non-negative plain decimal numeral (`123`, `0.50`, `.25`) into
/// `(digits as integer, fraction length)`. Anything else — signs, exponents,
/// `inf` — returns `None`.
fn parse_plain_decimal(text: &str) -> Option<(u128, usize)> {
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = int_part.bytes().chain(frac_part.bytes());
    let mut value: u128 = 0;
    for b in digits {
        if !b.is_ascii_digit() {
            return None;
        }
        value = value.checked_mul(10)?.checked_add(u128::from(b - b'0'))?;
    }
    Some((value, frac_part.len()))
}

/// Adds two numerals in exact decimal arithmetic and rounds the true sum to
/// the nearest `f64` — the value `"a+b"` would parse to if spelled out.
///
/// Computing `tbeg + tdur` in floating point instead would lose the write →
/// parse round trip (`0.1 + 0.2 != 0.3`). Returns `None` for numerals this
/// can't handle exactly; callers fall back to `f64` addition.
fn decimal_add(a: &str, b: &str) -> Option<f64> {
    let (va, fa) = parse_plain_decimal(a)?;
    let (vb, fb) = parse_plain_decimal(b)?;
    let scale = fa.max(fb);
    let sa = va.checked_mul(10u128.checked_pow((scale - fa) as u32)?)?;
    let sb = vb.checked_mul(10u128.checked_pow((scale - fb) as u32)?)?;
    let sum = sa.checked_add(sb)?;
    let text = if scale == 0 {
        sum.to_string()
    } else {
        let base = 10u128.checked_pow(scale as u32)?;
        format!("{}.{:0width$}", sum / base, sum % base, width = scale)
    };
    text.parse().ok()
}
