//! Diarization error rate with optimal speaker mapping.
//!
//! DER = (missed speech + false alarm + speaker confusion) / reference
//! speech time, scored under the reference↔hypothesis speaker
//! correspondence that maximizes matched overlap (equivalently, minimizes
//! confusion). Overlapped speech is handled exactly by counting active
//! speaker multisets per instant; integration is an event-boundary sweep,
//! never frame sampling, so results carry full input precision.
//!
//! Two scoring options mirror common evaluation setups: a collar excises
//! ±`collar` seconds around every reference boundary, and
//! `exclude_overlap` removes regions where the reference has two or more
//! simultaneous speakers.

mod assignment;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timeline::{
    merge_intervals, subtract_intervals, DiarizationAnnotation, SpeakerSegment, TimeInterval,
    TimelineError,
};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScoringOptions {
    /// Seconds excised around each reference segment boundary.
    pub collar: f64,
    /// Excise regions where ≥2 reference speakers are simultaneously active.
    pub exclude_overlap: bool,
}

/// Scoring result for one recording (or the `"ALL"` aggregate).
///
/// All fields are seconds except `der`, which is the error ratio and may
/// exceed 1.0 when false alarms dominate. `mapping` lists the optimal
/// hypothesis → reference speaker pairs actually credited.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerReport {
    pub recording_id: String,
    pub total_ref: f64,
    pub miss: f64,
    pub false_alarm: f64,
    pub confusion: f64,
    pub der: f64,
    pub mapping: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DerError {
    #[error("reference is for {ref_id:?} but hypothesis is for {hyp_id:?}")]
    RecordingMismatch { ref_id: String, hyp_id: String },
    #[error("undefined DER: empty reference against {hyp_seconds:.3} s of hypothesis speech")]
    EmptyReference { hyp_seconds: f64 },
    #[error("cannot aggregate zero reports")]
    NoReports,
    #[error("invalid options: {reason}")]
    InvalidOptions { reason: String },
    #[error(transparent)]
    Timeline(#[from] TimelineError),
}

/// Seconds of overlap between every (reference speaker, hypothesis speaker)
/// pair, indexed by each annotation's sorted speaker list.
pub fn build_overlap_matrix(
    reference: &DiarizationAnnotation,
    hypothesis: &DiarizationAnnotation,
) -> Result<Vec<Vec<f64>>, DerError> {
    if reference.recording_id() != hypothesis.recording_id() {
        return Err(DerError::RecordingMismatch {
            ref_id: reference.recording_id().to_string(),
            hyp_id: hypothesis.recording_id().to_string(),
        });
    }
    let reference = reference.normalize()?;
    let hypothesis = hypothesis.normalize()?;
    Ok(overlap_matrix_of(&reference, &hypothesis))
}

fn overlap_matrix_of(
    reference: &DiarizationAnnotation,
    hypothesis: &DiarizationAnnotation,
) -> Vec<Vec<f64>> {
    let ref_tracks: Vec<Vec<TimeInterval>> =
        reference.speakers().iter().map(|s| reference.speaker_intervals(s)).collect();
    let hyp_tracks: Vec<Vec<TimeInterval>> =
        hypothesis.speakers().iter().map(|s| hypothesis.speaker_intervals(s)).collect();
    ref_tracks
        .iter()
        .map(|r| hyp_tracks.iter().map(|h| disjoint_intersection(r, h)).collect())
        .collect()
}

/// Total intersection length of two sorted disjoint interval families.
fn disjoint_intersection(a: &[TimeInterval], b: &[TimeInterval]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut total = 0.0;
    while i < a.len() && j < b.len() {
        let lo = a[i].start().max(b[j].start());
        let hi = a[i].end().min(b[j].end());
        if hi > lo {
            total += hi - lo;
        }
        if a[i].end() <= b[j].end() {
            i += 1;
        } else {
            j += 1;
        }
    }
    total
}

/// One-to-one (reference index, hypothesis index) pairs maximizing total
/// matched overlap, computed by an exact assignment solver. Zero-overlap
/// pairs are excluded; ties resolve to the lexicographically smallest list.
pub fn optimal_mapping(matrix: &[Vec<f64>]) -> Vec<(usize, usize)> {
    assignment::optimal_pairs(matrix)
}

/// Scores `hypothesis` against `reference` for one recording.
///
/// The scoring region is the timeline minus collar excisions minus (with
/// `exclude_overlap`) reference overlap regions; the speaker mapping is
/// optimized on that same region. An empty reference scores 0.0 against an
/// empty hypothesis and is an explicit error against a non-empty one —
/// never a silent division by zero.
pub fn compute_der(
    reference: &DiarizationAnnotation,
    hypothesis: &DiarizationAnnotation,
    opts: &ScoringOptions,
) -> Result<DerReport, DerError> {
    if reference.recording_id() != hypothesis.recording_id() {
        return Err(DerError::RecordingMismatch {
            ref_id: reference.recording_id().to_string(),
            hyp_id: hypothesis.recording_id().to_string(),
        });
    }
    if !(opts.collar.is_finite() && opts.collar >= 0.0) {
        return Err(DerError::InvalidOptions {
            reason: format!("collar must be non-negative, got {}", opts.collar),
        });
    }
    let reference = reference.normalize()?;
    let hypothesis = hypothesis.normalize()?;

    let mut cuts: Vec<TimeInterval> = Vec::new();
    if opts.collar > 0.0 {
        for seg in reference.segments() {
            for boundary in [seg.interval().start(), seg.interval().end()] {
                let lo = (boundary - opts.collar).max(0.0);
                let hi = boundary + opts.collar;
                if hi > lo {
                    cuts.push(TimeInterval::new(lo, hi).expect("collar window is valid"));
                }
            }
        }
    }
    if opts.exclude_overlap {
        cuts.extend(reference.overlap_regions());
    }
    let cuts = merge_intervals(&cuts);

    let scored_ref = restrict(&reference, &cuts);
    let scored_hyp = restrict(&hypothesis, &cuts);

    // The mapping must be optimized over the scoring region, not the full
    // timeline, or an excised stretch could skew the correspondence away
    // from the minimum achievable error.
    let matrix = overlap_matrix_of(&scored_ref, &scored_hyp);
    let pairs = optimal_mapping(&matrix);

    let ref_names = scored_ref.speakers();
    let hyp_names = scored_hyp.speakers();
    let mut mapping: Vec<(String, String)> = pairs
        .iter()
        .map(|&(r, h)| (hyp_names[h].to_string(), ref_names[r].to_string()))
        .collect();
    mapping.sort();

    let sums = sweep(&scored_ref, &scored_hyp, &pairs);

    if sums.total_ref == 0.0 {
        if sums.false_alarm > 0.0 {
            return Err(DerError::EmptyReference { hyp_seconds: sums.false_alarm });
        }
        return Ok(DerReport {
            recording_id: reference.recording_id().to_string(),
            total_ref: 0.0,
            miss: 0.0,
            false_alarm: 0.0,
            confusion: 0.0,
            der: 0.0,
            mapping,
        });
    }

    let der = (sums.miss + sums.false_alarm + sums.confusion) / sums.total_ref;
    Ok(DerReport {
        recording_id: reference.recording_id().to_string(),
        total_ref: sums.total_ref,
        miss: sums.miss,
        false_alarm: sums.false_alarm,
        confusion: sums.confusion,
        der,
        mapping,
    })
}

/// Duration-weighted pooling of per-recording reports into one `"ALL"` row:
/// seconds are summed and DER is recomputed from the sums — never a mean of
/// per-recording ratios.
pub fn aggregate_der(reports: &[DerReport]) -> Result<DerReport, DerError> {
    if reports.is_empty() {
        return Err(DerError::NoReports);
    }
    let mut total_ref = 0.0;
    let mut miss = 0.0;
    let mut false_alarm = 0.0;
    let mut confusion = 0.0;
    for r in reports {
        total_ref += r.total_ref;
        miss += r.miss;
        false_alarm += r.false_alarm;
        confusion += r.confusion;
    }
    let errors = miss + false_alarm + confusion;
    if total_ref == 0.0 && errors > 0.0 {
        return Err(DerError::EmptyReference { hyp_seconds: false_alarm });
    }
    let der = if total_ref > 0.0 { errors / total_ref } else { 0.0 };
    Ok(DerReport {
        recording_id: "ALL".to_string(),
        total_ref,
        miss,
        false_alarm,
        confusion,
        der,
        mapping: Vec::new(),
    })
}

/// Renders reports as an aligned text table; DER is shown as a ratio to 4
/// decimals and as a percentage to 2.
pub fn render_der_table(reports: &[DerReport]) -> String {
    let name_width = reports
        .iter()
        .map(|r| r.recording_id.len())
        .max()
        .unwrap_or(0)
        .max("RECORDING".len());
    let mut out = format!(
        "{:<name_width$}  {:>10}  {:>10}  {:>10}  {:>10}  {:>8}  {:>8}\n",
        "RECORDING", "REF(S)", "MISS(S)", "FA(S)", "CONF(S)", "DER", "DER%",
    );
    for r in reports {
        out.push_str(&format!(
            "{:<name_width$}  {:>10.3}  {:>10.3}  {:>10.3}  {:>10.3}  {:>8.4}  {:>8.2}\n",
            r.recording_id,
            r.total_ref,
            r.miss,
            r.false_alarm,
            r.confusion,
            r.der,
            r.der * 100.0,
        ));
    }
    out
}

/// Annotation clipped to the complement of `cuts` (sorted, disjoint).
fn restrict(ann: &DiarizationAnnotation, cuts: &[TimeInterval]) -> DiarizationAnnotation {
    if cuts.is_empty() {
        return ann.clone();
    }
    let mut out = DiarizationAnnotation::new(ann.recording_id());
    for seg in ann.segments() {
        for piece in subtract_intervals(seg.interval(), cuts) {
            out.push(
                SpeakerSegment::new(ann.recording_id(), seg.speaker(), piece)
                    .expect("restriction preserves validity"),
            );
        }
    }
    out.normalize().expect("single recording by construction")
}

#[derive(Debug, Default)]
struct ErrorSums {
    total_ref: f64,
    miss: f64,
    false_alarm: f64,
    confusion: f64,
}

/// Exact boundary-event sweep over both annotations. Within each elementary
/// slice the active speaker sets are constant, so per-instant counts times
/// slice length integrate the error terms exactly.
fn sweep(
    reference: &DiarizationAnnotation,
    hypothesis: &DiarizationAnnotation,
    mapping: &[(usize, usize)],
) -> ErrorSums {
    let ref_names = reference.speakers();
    let hyp_names = hypothesis.speakers();
    let ref_index = |name: &str| ref_names.iter().position(|n| *n == name).expect("known speaker");
    let hyp_index = |name: &str| hyp_names.iter().position(|n| *n == name).expect("known speaker");

    // (time, is_ref, speaker index, +1/−1)
    let mut events: Vec<(f64, bool, usize, i32)> = Vec::new();
    for seg in reference.segments() {
        let idx = ref_index(seg.speaker());
        events.push((seg.interval().start(), true, idx, 1));
        events.push((seg.interval().end(), true, idx, -1));
    }
    for seg in hypothesis.segments() {
        let idx = hyp_index(seg.speaker());
        events.push((seg.interval().start(), false, idx, 1));
        events.push((seg.interval().end(), false, idx, -1));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut ref_active = vec![0i32; ref_names.len()];
    let mut hyp_active = vec![0i32; hyp_names.len()];
    let mut sums = ErrorSums::default();
    let mut prev_t = f64::NEG_INFINITY;
    let mut i = 0;
    while i < events.len() {
        let t = events[i].0;
        if prev_t > f64::NEG_INFINITY && t > prev_t {
            let dt = t - prev_t;
            let r = ref_active.iter().filter(|&&c| c > 0).count();
            let h = hyp_active.iter().filter(|&&c| c > 0).count();
            if r > 0 || h > 0 {
                let correct = mapping
                    .iter()
                    .filter(|&&(ri, hi)| ref_active[ri] > 0 && hyp_active[hi] > 0)
                    .count();
                sums.total_ref += r as f64 * dt;
                sums.miss += r.saturating_sub(h) as f64 * dt;
                sums.false_alarm += h.saturating_sub(r) as f64 * dt;
                sums.confusion += (r.min(h) - correct) as f64 * dt;
            }
        }
        while i < events.len() && events[i].0 == t {
            let (_, is_ref, idx, delta) = events[i];
            if is_ref {
                ref_active[idx] += delta;
            } else {
                hyp_active[idx] += delta;
            }
            i += 1;
        }
        prev_t = t;
    }
    sums
}
