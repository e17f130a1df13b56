//! Interval arithmetic and annotation normalization.
//!
//! All times are finite `f64` seconds and every interval is half-open
//! `[start, end)`: segments that merely touch never overlap, and a duration
//! is always `end - start`. Comparisons are exact — whatever precision the
//! input carried is the precision used everywhere, with no epsilons.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimelineError {
    #[error("invalid interval [{start}, {end}): need finite 0 <= start < end")]
    InvalidInterval { start: f64, end: f64 },
    #[error("{field} must be a non-empty string")]
    EmptyField { field: &'static str },
    #[error("annotation for {expected:?} contains a segment for {found:?}")]
    MixedRecordings { expected: String, found: String },
}

/// Half-open span `[start, end)` of seconds on one recording's timeline.
///
/// Zero- or negative-duration intervals are rejected at construction; they
/// indicate upstream bugs rather than data worth keeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeInterval {
    start: f64,
    end: f64,
}

impl TimeInterval {
    pub fn new(start: f64, end: f64) -> Result<Self, TimelineError> {
        if !start.is_finite() || !end.is_finite() || start < 0.0 || start >= end {
            return Err(TimelineError::InvalidInterval { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    /// Length of the intersection with `other`; zero when disjoint or touching.
    pub fn intersection(&self, other: &Self) -> f64 {
        (self.end.min(other.end) - self.start.max(other.start)).max(0.0)
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// Temporal intersection-over-union. Symmetric, in `[0, 1]`, and exactly
    /// `1.0` iff the intervals are identical. Touching intervals score `0.0`.
    pub fn iou(&self, other: &Self) -> f64 {
        let inter = self.intersection(other);
        if inter <= 0.0 {
            return 0.0;
        }
        let union = self.duration() + other.duration() - inter;
        inter / union
    }
}

/// Merges overlapping or touching intervals into a sorted disjoint cover.
pub fn merge_intervals(intervals: &[TimeInterval]) -> Vec<TimeInterval> {
    let mut sorted = intervals.to_vec();
    sorted.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.end.total_cmp(&b.end)));
    let mut merged: Vec<TimeInterval> = Vec::with_capacity(sorted.len());
    for iv in sorted {
        match merged.last_mut() {
            Some(last) if iv.start <= last.end => {
                if iv.end > last.end {
                    last.end = iv.end;
                }
            }
            _ => merged.push(iv),
        }
    }
    merged
}

/// Total length of the set-union of the intervals. Order-independent.
pub fn union_duration(intervals: &[TimeInterval]) -> f64 {
    merge_intervals(intervals).iter().map(TimeInterval::duration).sum()
}

/// Pieces of `base` not covered by `cuts`. `cuts` must be sorted and disjoint.
pub fn subtract_intervals(base: &TimeInterval, cuts: &[TimeInterval]) -> Vec<TimeInterval> {
    let mut pieces = Vec::new();
    let mut cursor = base.start;
    for cut in cuts {
        if cut.end <= cursor {
            continue;
        }
        if cut.start >= base.end {
            break;
        }
        if cut.start > cursor {
            pieces.push(TimeInterval { start: cursor, end: cut.start.min(base.end) });
        }
        cursor = cursor.max(cut.end);
        if cursor >= base.end {
            return pieces;
        }
    }
    if cursor < base.end {
        pieces.push(TimeInterval { start: cursor, end: base.end });
    }
    pieces
}

/// One speaker's labeled span on one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerSegment {
    recording_id: String,
    speaker: String,
    interval: TimeInterval,
}

impl SpeakerSegment {
    pub fn new(
        recording_id: impl Into<String>,
        speaker: impl Into<String>,
        interval: TimeInterval,
    ) -> Result<Self, TimelineError> {
        let recording_id = recording_id.into();
        let speaker = speaker.into();
        if recording_id.is_empty() {
            return Err(TimelineError::EmptyField { field: "recording_id" });
        }
        if speaker.is_empty() {
            return Err(TimelineError::EmptyField { field: "speaker" });
        }
        Ok(Self { recording_id, speaker, interval })
    }

    pub fn recording_id(&self) -> &str {
        &self.recording_id
    }

    pub fn speaker(&self) -> &str {
        &self.speaker
    }

    pub fn interval(&self) -> &TimeInterval {
        &self.interval
    }
}

/// Per-recording set of speaker segments.
///
/// In normalized form no two intervals of the same speaker overlap or touch,
/// and segments are sorted by `(start, speaker)`. Distinct speakers may still
/// overlap in time — overlapped speech is representable.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiarizationAnnotation {
    recording_id: String,
    segments: Vec<SpeakerSegment>,
}

impl DiarizationAnnotation {
    pub fn new(recording_id: impl Into<String>) -> Self {
        Self { recording_id: recording_id.into(), segments: Vec::new() }
    }

    pub fn from_segments(
        recording_id: impl Into<String>,
        segments: Vec<SpeakerSegment>,
    ) -> Self {
        Self { recording_id: recording_id.into(), segments }
    }

    pub fn recording_id(&self) -> &str {
        &self.recording_id
    }

    pub fn segments(&self) -> &[SpeakerSegment] {
        &self.segments
    }

    pub fn push(&mut self, segment: SpeakerSegment) {
        self.segments.push(segment);
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Sorted unique speaker labels.
    pub fn speakers(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.segments.iter().map(|s| s.speaker.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        names
    }

    /// All intervals attributed to `speaker`, in segment order.
    pub fn speaker_intervals(&self, speaker: &str) -> Vec<TimeInterval> {
        self.segments
            .iter()
            .filter(|s| s.speaker == speaker)
            .map(|s| s.interval)
            .collect()
    }

    /// Canonical form: per-speaker overlapping or touching intervals merged,
    /// segments sorted by `(start, speaker)`. Idempotent, and the covered
    /// duration of every speaker is preserved exactly.
    pub fn normalize(&self) -> Result<DiarizationAnnotation, TimelineError> {
        let mut by_speaker: BTreeMap<&str, Vec<TimeInterval>> = BTreeMap::new();
        for seg in &self.segments {
            if seg.recording_id != self.recording_id {
                return Err(TimelineError::MixedRecordings {
                    expected: self.recording_id.clone(),
                    found: seg.recording_id.clone(),
                });
            }
            by_speaker.entry(&seg.speaker).or_default().push(seg.interval);
        }
        let mut segments = Vec::with_capacity(self.segments.len());
        for (speaker, intervals) in by_speaker {
            for interval in merge_intervals(&intervals) {
                segments.push(SpeakerSegment {
                    recording_id: self.recording_id.clone(),
                    speaker: speaker.to_string(),
                    interval,
                });
            }
        }
        segments.sort_by(|a, b| {
            a.interval
                .start
                .total_cmp(&b.interval.start)
                .then_with(|| a.speaker.cmp(&b.speaker))
        });
        Ok(DiarizationAnnotation { recording_id: self.recording_id.clone(), segments })
    }

    /// Minimal sorted disjoint intervals where two or more distinct speakers
    /// are simultaneously active. Expects a normalized annotation.
    pub fn overlap_regions(&self) -> Vec<TimeInterval> {
        // Boundary events: +1 at each segment start, -1 at each end. After
        // normalization each speaker contributes disjoint intervals, so the
        // running sum is the number of active speakers.
        let mut events: Vec<(f64, i64)> = Vec::with_capacity(self.segments.len() * 2);
        for seg in &self.segments {
            events.push((seg.interval.start, 1));
            events.push((seg.interval.end, -1));
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut regions = Vec::new();
        let mut depth: i64 = 0;
        let mut open: Option<f64> = None;
        let mut i = 0;
        while i < events.len() {
            let t = events[i].0;
            while i < events.len() && events[i].0 == t {
                depth += events[i].1;
                i += 1;
            }
            match (open, depth >= 2) {
                (None, true) => open = Some(t),
                (Some(start), false) => {
                    if t > start {
                        regions.push(TimeInterval { start, end: t });
                    }
                    open = None;
                }
                _ => {}
            }
        }
        regions
    }
}
