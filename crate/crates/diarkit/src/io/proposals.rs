//! Scored speech proposals, exchanged as one JSON object per line.
//!
//! Line-delimited JSON keeps proposal sets diffable, streamable, and easy to
//! produce from any toolchain. Scores are serialized with the shortest
//! representation that parses back to the identical `f64`, so a write →
//! read round trip is exact.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One scored speaker-activity proposal from a detection system.
///
/// `[start, end)` are seconds on the recording timeline, `score` is a
/// non-negative confidence, and `source` tags which producer emitted the
/// proposal (useful once sets from several systems are merged).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeechProposal {
    pub recording_id: String,
    pub start: f64,
    pub end: f64,
    pub speaker: String,
    pub score: f64,
    #[serde(default = "default_source")]
    pub source: String,
}

fn default_source() -> String {
    "unknown".to_string()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvalidProposal {
    #[error("invalid interval [{start}, {end}): need finite 0 <= start < end")]
    BadInterval { start: f64, end: f64 },
    #[error("score {score} must be finite and non-negative")]
    BadScore { score: f64 },
    #[error("{field} must be a non-empty string")]
    EmptyField { field: &'static str },
}

#[derive(Debug, Error)]
pub enum ProposalError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: InvalidProposal,
    },
}

impl SpeechProposal {
    pub fn new(
        recording_id: impl Into<String>,
        start: f64,
        end: f64,
        speaker: impl Into<String>,
        score: f64,
        source: impl Into<String>,
    ) -> Result<Self, InvalidProposal> {
        let proposal = Self {
            recording_id: recording_id.into(),
            start,
            end,
            speaker: speaker.into(),
            score,
            source: source.into(),
        };
        proposal.validate()?;
        Ok(proposal)
    }

    pub fn validate(&self) -> Result<(), InvalidProposal> {
        if !self.start.is_finite()
            || !self.end.is_finite()
            || self.start < 0.0
            || self.start >= self.end
        {
            return Err(InvalidProposal::BadInterval { start: self.start, end: self.end });
        }
        if !self.score.is_finite() || self.score < 0.0 {
            return Err(InvalidProposal::BadScore { score: self.score });
        }
        if self.recording_id.is_empty() {
            return Err(InvalidProposal::EmptyField { field: "recording_id" });
        }
        if self.speaker.is_empty() {
            return Err(InvalidProposal::EmptyField { field: "speaker" });
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    /// Length of the temporal intersection with `other`.
    pub fn intersection(&self, other: &Self) -> f64 {
        (self.end.min(other.end) - self.start.max(other.start)).max(0.0)
    }

    /// Temporal intersection-over-union with `other`.
    pub fn iou(&self, other: &Self) -> f64 {
        let inter = self.intersection(other);
        if inter <= 0.0 {
            return 0.0;
        }
        inter / (self.duration() + other.duration() - inter)
    }
}

/// Reads proposals from line-delimited JSON, one object per non-empty line,
/// preserving input order. Every record is validated; errors carry the
/// 1-based line number.
pub fn read_proposals(input: &str) -> Result<Vec<SpeechProposal>, ProposalError> {
    let mut proposals = Vec::new();
    for (idx, raw) in input.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let proposal: SpeechProposal =
            serde_json::from_str(raw).map_err(|source| ProposalError::Parse { line, source })?;
        proposal.validate().map_err(|source| ProposalError::Invalid { line, source })?;
        proposals.push(proposal);
    }
    Ok(proposals)
}

/// Writes proposals as line-delimited JSON with a stable field order, one
/// `\n`-terminated line per record. Inverse of [`read_proposals`].
pub fn write_proposals(proposals: &[SpeechProposal]) -> String {
    let mut out = String::with_capacity(proposals.len() * 96);
    for p in proposals {
        debug_assert!(p.validate().is_ok(), "writing invalid proposal {p:?}");
        out.push_str(&serde_json::to_string(p).expect("proposal serialization cannot fail"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prop(start: f64, end: f64, speaker: &str, score: f64) -> SpeechProposal {
        SpeechProposal::new("r", start, end, speaker, score, "det").unwrap()
    }

    #[test]
    fn reads_single_record() {
        let got =
            read_proposals(r#"{"recording_id":"r","start":0.0,"end":1.0,"speaker":"s0","score":0.9}"#)
                .unwrap();
        assert_eq!(
            got,
            vec![SpeechProposal {
                recording_id: "r".into(),
                start: 0.0,
                end: 1.0,
                speaker: "s0".into(),
                score: 0.9,
                source: "unknown".into(),
            }]
        );
    }

    #[test]
    fn empty_stream_reads_empty() {
        assert_eq!(read_proposals("").unwrap(), vec![]);
        assert_eq!(read_proposals("\n\n").unwrap(), vec![]);
    }

    #[test]
    fn zero_duration_is_invalid() {
        let err = read_proposals(
            r#"{"recording_id":"r","start":1.0,"end":1.0,"speaker":"s0","score":0.9}"#,
        )
        .unwrap_err();
        assert!(
            matches!(
                err,
                ProposalError::Invalid { line: 1, source: InvalidProposal::BadInterval { .. } }
            ),
            "{err:?}"
        );
    }

    #[test]
    fn missing_key_is_a_parse_error() {
        let err =
            read_proposals(r#"{"recording_id":"r","start":0.0,"end":1.0,"score":0.9}"#).unwrap_err();
        assert!(matches!(err, ProposalError::Parse { line: 1, .. }), "{err:?}");
    }

    #[test]
    fn negative_score_is_invalid() {
        let err = read_proposals(
            r#"{"recording_id":"r","start":0.0,"end":1.0,"speaker":"s0","score":-0.1}"#,
        )
        .unwrap_err();
        assert!(
            matches!(
                err,
                ProposalError::Invalid { line: 1, source: InvalidProposal::BadScore { .. } }
            ),
            "{err:?}"
        );
    }

    #[test]
    fn error_reports_correct_line() {
        let text = concat!(
            r#"{"recording_id":"r","start":0.0,"end":1.0,"speaker":"s0","score":0.9}"#,
            "\n",
            "not json",
        );
        let err = read_proposals(text).unwrap_err();
        assert!(matches!(err, ProposalError::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn one_record_writes_one_line() {
        let text = write_proposals(&[prop(0.0, 1.0, "s0", 0.9)]);
        assert_eq!(text.lines().count(), 1);
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn empty_list_writes_empty_stream() {
        assert_eq!(write_proposals(&[]), "");
    }

    #[test]
    fn iou_matches_interval_arithmetic() {
        let a = prop(0.0, 2.0, "s0", 1.0);
        let b = prop(1.0, 3.0, "s1", 1.0);
        assert!((a.iou(&b) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(a.iou(&a), 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        pub(crate) fn arb_proposal() -> impl Strategy<Value = SpeechProposal> {
            (
                0usize..3,
                0.0f64..500.0,
                0.001f64..30.0,
                0usize..5,
                0.0f64..1.0,
                0usize..2,
            )
                .prop_map(|(rec, start, len, spk, score, src)| {
                    SpeechProposal::new(
                        format!("rec{rec}"),
                        start,
                        start + len,
                        format!("s{spk}"),
                        score,
                        ["detector_a", "detector_b"][src],
                    )
                    .unwrap()
                })
        }

        proptest! {
            #[test]
            fn round_trip_is_exact(ps in proptest::collection::vec(arb_proposal(), 0..20)) {
                let text = write_proposals(&ps);
                prop_assert_eq!(read_proposals(&text).unwrap(), ps);
            }
        }
    }
}
