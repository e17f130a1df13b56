//! Proposal set → final diarization annotation.
//!
//! The last pipeline step before scoring: threshold out weak proposals,
//! optionally cap the speaker inventory, and union what remains into a
//! normalized per-speaker timeline. Overlapping proposals from different
//! speakers both survive — overlapped speech is a legitimate output.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::io::proposals::SpeechProposal;
use crate::timeline::{DiarizationAnnotation, SpeakerSegment, TimeInterval, TimelineError};

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeConfig {
    /// Proposals scoring below this are discarded.
    pub score_threshold: f64,
    /// Normalized segments shorter than this are dropped from the output.
    pub min_duration: f64,
    /// When set, keep only the speakers with the largest summed kept-proposal
    /// score — score mass is the only confidence signal available at this
    /// stage. `None` keeps every speaker.
    pub max_speakers: Option<usize>,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self { score_threshold: 0.5, min_duration: 0.0, max_speakers: None }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<(), DecodeError> {
        if !(self.score_threshold.is_finite() && self.score_threshold >= 0.0) {
            return Err(DecodeError::InvalidConfig {
                reason: format!("score_threshold must be non-negative, got {}", self.score_threshold),
            });
        }
        if !(self.min_duration.is_finite() && self.min_duration >= 0.0) {
            return Err(DecodeError::InvalidConfig {
                reason: format!("min_duration must be non-negative, got {}", self.min_duration),
            });
        }
        if self.max_speakers == Some(0) {
            return Err(DecodeError::InvalidConfig {
                reason: "max_speakers must be positive when set".to_string(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("proposals span recordings {first:?} and {second:?}; decode one recording at a time")]
    MixedRecordings { first: String, second: String },
    #[error("invalid config: {reason}")]
    InvalidConfig { reason: String },
    #[error(transparent)]
    Timeline(#[from] TimelineError),
}

/// Decodes one recording's proposals into a normalized annotation.
///
/// Steps, in order: drop proposals with `score < score_threshold`; if
/// `max_speakers` is set, rank speakers by summed kept score (ties go to the
/// lexicographically smaller name) and keep the top speakers' proposals;
/// union each speaker's intervals; drop normalized segments shorter than
/// `min_duration`. The empty input decodes to an empty annotation.
pub fn decode_diarization(
    props: &[SpeechProposal],
    cfg: &DecodeConfig,
) -> Result<DiarizationAnnotation, DecodeError> {
    cfg.validate()?;
    if let Some(first) = props.first() {
        for p in props {
            if p.recording_id != first.recording_id {
                return Err(DecodeError::MixedRecordings {
                    first: first.recording_id.clone(),
                    second: p.recording_id.clone(),
                });
            }
        }
    }
    let recording_id = props.first().map(|p| p.recording_id.as_str()).unwrap_or("");

    let mut kept: Vec<&SpeechProposal> =
        props.iter().filter(|p| p.score >= cfg.score_threshold).collect();

    if let Some(cap) = cfg.max_speakers {
        let mut mass: BTreeMap<&str, f64> = BTreeMap::new();
        for p in &kept {
            *mass.entry(p.speaker.as_str()).or_insert(0.0) += p.score;
        }
        let mut ranked: Vec<(&str, f64)> = mass.into_iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(cap);
        let chosen: Vec<&str> = ranked.into_iter().map(|(name, _)| name).collect();
        kept.retain(|p| chosen.contains(&p.speaker.as_str()));
    }

    let mut ann = DiarizationAnnotation::new(recording_id);
    for p in kept {
        let interval = TimeInterval::new(p.start, p.end)?;
        ann.push(SpeakerSegment::new(&p.recording_id, &p.speaker, interval)?);
    }
    let normalized = ann.normalize()?;

    if cfg.min_duration > 0.0 {
        let survivors: Vec<SpeakerSegment> = normalized
            .segments()
            .iter()
            .filter(|s| s.interval().duration() >= cfg.min_duration)
            .cloned()
            .collect();
        return Ok(DiarizationAnnotation::from_segments(recording_id, survivors));
    }
    Ok(normalized)
}
