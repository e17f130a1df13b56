//! Seeded generators for synthetic diarization data.
//!
//! Everything here is deterministic given the caller's RNG, so tests and
//! benchmarks can fix a seed and assert exact outcomes. Times are aligned
//! to whole milliseconds, matching the precision of the text formats.

use rand::Rng;

use crate::cluster::ClusterConfig;
use crate::io::demb::EmbeddingSequence;
use crate::io::proposals::SpeechProposal;
use crate::timeline::{DiarizationAnnotation, SpeakerSegment, TimeInterval};

fn ms(n: u32) -> f64 {
    f64::from(n) / 1000.0
}

/// Random normalized annotation with up to `speakers` speakers (named
/// `s0`, `s1`, …) and `segments` raw segments in the first minute.
pub fn random_annotation<R: Rng>(
    rng: &mut R,
    recording_id: &str,
    speakers: usize,
    segments: usize,
) -> DiarizationAnnotation {
    let mut ann = DiarizationAnnotation::new(recording_id);
    for _ in 0..segments {
        let speaker = format!("s{}", rng.random_range(0..speakers.max(1)));
        let start = rng.random_range(0u32..55_000);
        let dur = rng.random_range(200u32..5_000);
        let interval = TimeInterval::new(ms(start), ms(start + dur)).unwrap();
        ann.push(SpeakerSegment::new(recording_id, speaker, interval).unwrap());
    }
    ann.normalize().unwrap()
}

/// Random well-formed proposals with speakers `s0`…, scores in (0, 1] and
/// millisecond-aligned bounds.
pub fn random_proposals<R: Rng>(
    rng: &mut R,
    recording_id: &str,
    count: usize,
    speakers: usize,
    source: &str,
) -> Vec<SpeechProposal> {
    (0..count)
        .map(|_| {
            let start = rng.random_range(0u32..55_000);
            let dur = rng.random_range(200u32..5_000);
            let score = f64::from(rng.random_range(1u32..=1000)) / 1000.0;
            SpeechProposal::new(
                recording_id,
                ms(start),
                ms(start + dur),
                format!("s{}", rng.random_range(0..speakers.max(1))),
                score,
                source,
            )
            .unwrap()
        })
        .collect()
}

/// Noisy detector output for a known annotation: every reference segment
/// yields `copies` proposals whose bounds are jittered by up to
/// `jitter` seconds (millisecond-rounded) and whose scores stay above any
/// sensible decoding threshold. Smaller jitter means proposals hug the
/// reference more tightly, so downstream error rates should shrink.
pub fn jittered_proposals<R: Rng>(
    rng: &mut R,
    annotation: &DiarizationAnnotation,
    jitter: f64,
    copies: usize,
) -> Vec<SpeechProposal> {
    let jitter_ms = (jitter * 1000.0).round().max(0.0) as i64;
    let mut out = Vec::with_capacity(annotation.segments().len() * copies);
    for seg in annotation.segments() {
        let start_ms = (seg.interval().start() * 1000.0).round() as i64;
        let end_ms = (seg.interval().end() * 1000.0).round() as i64;
        for copy in 0..copies {
            let wobble = |rng: &mut R| {
                if jitter_ms == 0 { 0 } else { rng.random_range(-jitter_ms..=jitter_ms) }
            };
            let s = (start_ms + wobble(rng)).max(0);
            let e = (end_ms + wobble(rng)).max(s + 10);
            // The first copy scores highest so suppression keeps it.
            let score = if copy == 0 {
                0.8 + rng.random::<f64>() * 0.2
            } else {
                0.55 + rng.random::<f64>() * 0.2
            };
            out.push(
                SpeechProposal::new(
                    annotation.recording_id(),
                    ms(s as u32),
                    ms(e as u32),
                    seg.speaker(),
                    score,
                    "synth",
                )
                .unwrap(),
            );
        }
    }
    out
}

/// Embedding sequence with `turns` alternating speaker turns planted in
/// it, plus the ground-truth annotation (speakers `g0`…). Each speaker
/// owns a coordinate axis and every speech frame is that axis plus
/// uniform noise of magnitude `noise`, normalized; silence frames are
/// zero with zero activity. With small `noise`, within-speaker cosine
/// distances stay far below between-speaker ones.
pub fn planted_embeddings<R: Rng>(
    rng: &mut R,
    recording_id: &str,
    speakers: usize,
    turns: usize,
    turn_seconds: f64,
    gap_seconds: f64,
    dim: usize,
    noise: f64,
) -> (EmbeddingSequence, DiarizationAnnotation) {
    assert!(speakers >= 1 && dim >= speakers, "one axis per speaker");
    let hop = 0.020;
    let frames_per_turn = (turn_seconds / hop).round() as usize;
    let gap_frames = (gap_seconds / hop).round() as usize;
    let total = turns * frames_per_turn + turns.saturating_sub(1) * gap_frames;

    let mut frames = vec![0.0f32; total * dim];
    let mut activity = vec![0.0f32; total];
    let mut truth = DiarizationAnnotation::new(recording_id);

    for turn in 0..turns {
        let speaker = turn % speakers;
        let base = turn * (frames_per_turn + gap_frames);
        for f in 0..frames_per_turn {
            let i = base + f;
            activity[i] = 1.0;
            let row = &mut frames[i * dim..(i + 1) * dim];
            for (axis, value) in row.iter_mut().enumerate() {
                let bump = (rng.random::<f64>() * 2.0 - 1.0) * noise;
                *value = (if axis == speaker { 1.0 + bump } else { bump }) as f32;
            }
            let norm = row.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt();
            if norm > 0.0 {
                for v in row.iter_mut() {
                    *v = (f64::from(*v) / norm) as f32;
                }
            }
        }
        let start = base as f64 * hop;
        let end = (base + frames_per_turn) as f64 * hop;
        truth
            .push(
                SpeakerSegment::new(
                    recording_id,
                    format!("g{speaker}"),
                    TimeInterval::new(start, end).unwrap(),
                )
                .unwrap(),
            );
    }

    let seq = EmbeddingSequence::new(recording_id, dim, hop, 0.025, frames, Some(activity))
        .unwrap();
    (seq, truth.normalize().unwrap())
}

/// Cluster settings matched to [`planted_embeddings`] fixtures: no
/// minimum-duration gate and bounds wide enough for the planted count.
pub fn planted_cluster_config(speakers: usize) -> ClusterConfig {
    ClusterConfig {
        min_speakers: 1,
        max_speakers: speakers.max(1),
        vad_min_duration: 0.0,
        ..ClusterConfig::default()
    }
}
