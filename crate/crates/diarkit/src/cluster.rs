//! Clustering-based diarization over precomputed frame embeddings.
//!
//! A transparent stand-in for a neural diarization stack: gate the timeline
//! with the activity channel (VAD), pool embedding frames into fixed-length
//! chunk vectors, cluster the chunks with average-linkage agglomerative
//! clustering under cosine distance, and emit one speaker per cluster. The
//! speaker count is the dendrogram's natural cut clamped into
//! `[min_speakers, max_speakers]` — forced splits simply withhold the final
//! merges, so results stay deterministic.

use thiserror::Error;

use crate::io::demb::EmbeddingSequence;
use crate::timeline::{DiarizationAnnotation, SpeakerSegment, TimeInterval};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig {
    pub min_speakers: usize,
    pub max_speakers: usize,
    /// Frames with activity at or above this are speech candidates.
    pub vad_threshold: f64,
    /// Speech intervals shorter than this are dropped.
    pub vad_min_duration: f64,
    /// Speech intervals separated by at most this gap are merged.
    pub vad_merge_gap: f64,
    /// Length of the pooling chunks each speech interval is sliced into.
    pub chunk_seconds: f64,
    /// Cosine-distance level at which the dendrogram is cut.
    pub linkage_cutoff: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            min_speakers: 2,
            max_speakers: 4,
            vad_threshold: 0.5,
            vad_min_duration: 0.1,
            vad_merge_gap: 0.1,
            chunk_seconds: 1.0,
            linkage_cutoff: 0.7,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.min_speakers == 0 {
            return Err(ClusterError::InvalidConfig {
                reason: "min_speakers must be positive".to_string(),
            });
        }
        if self.min_speakers > self.max_speakers {
            return Err(ClusterError::InvalidConfig {
                reason: format!(
                    "min_speakers {} exceeds max_speakers {}",
                    self.min_speakers, self.max_speakers
                ),
            });
        }
        if !(0.0..=1.0).contains(&self.vad_threshold) {
            return Err(ClusterError::InvalidConfig {
                reason: format!("vad_threshold must lie in [0, 1], got {}", self.vad_threshold),
            });
        }
        for (field, value) in
            [("vad_min_duration", self.vad_min_duration), ("vad_merge_gap", self.vad_merge_gap)]
        {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ClusterError::InvalidConfig {
                    reason: format!("{field} must be non-negative, got {value}"),
                });
            }
        }
        for (field, value) in
            [("chunk_seconds", self.chunk_seconds), ("linkage_cutoff", self.linkage_cutoff)]
        {
            if !(value.is_finite() && value > 0.0) {
                return Err(ClusterError::InvalidConfig {
                    reason: format!("{field} must be positive, got {value}"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("embedding sequence has no activity channel; supply per-frame speech scores")]
    MissingActivity,
    #[error("window [{start}, {end}) covers no frame start; widen it or check hop_seconds")]
    EmptyWindow { start: f64, end: f64 },
    #[error("cannot cluster zero vectors")]
    NoVectors,
    #[error("invalid config: {reason}")]
    InvalidConfig { reason: String },
}

/// Speech intervals from the activity channel.
///
/// Maximal runs of frames with `activity ≥ vad_threshold` become intervals
/// `[first·hop, (last+1)·hop)`; runs whose gap is at most `vad_merge_gap`
/// are merged; merged intervals shorter than `vad_min_duration` are
/// dropped. Gap and duration comparisons happen in frame-index space
/// (`frames · hop`) so thresholds equal to a whole number of hops behave
/// exactly.
pub fn vad_segments(
    seq: &EmbeddingSequence,
    cfg: &ClusterConfig,
) -> Result<Vec<TimeInterval>, ClusterError> {
    cfg.validate()?;
    let activity = seq.activity().ok_or(ClusterError::MissingActivity)?;
    let hop = seq.hop_seconds();

    let mut runs: Vec<(usize, usize)> = Vec::new();
    for (i, &a) in activity.iter().enumerate() {
        if f64::from(a) >= cfg.vad_threshold {
            match runs.last_mut() {
                Some((_, last)) if *last + 1 == i => *last = i,
                _ => runs.push((i, i)),
            }
        }
    }

    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (first, last) in runs {
        match merged.last_mut() {
            Some((_, prev_last)) if (first - *prev_last - 1) as f64 * hop <= cfg.vad_merge_gap => {
                *prev_last = last;
            }
            _ => merged.push((first, last)),
        }
    }

    Ok(merged
        .into_iter()
        .filter(|&(first, last)| (last + 1 - first) as f64 * hop >= cfg.vad_min_duration)
        .map(|(first, last)| {
            TimeInterval::new(first as f64 * hop, (last + 1) as f64 * hop)
                .expect("non-empty frame run yields a valid interval")
        })
        .collect())
}

/// Mean of the frame vectors whose start lies in `[window.start,
/// window.end)`, scaled to unit Euclidean norm. An all-zero mean is
/// returned unnormalized; a window covering no frame start is an error.
pub fn pool_window(
    seq: &EmbeddingSequence,
    window: &TimeInterval,
) -> Result<Vec<f64>, ClusterError> {
    let hop = seq.hop_seconds();
    let frame_count = seq.frame_count();
    // Conservative candidate range; membership is decided by the exact
    // `i·hop` comparison, not by the rounded endpoints.
    let lo = ((window.start() / hop).floor() as i64 - 1).max(0) as usize;
    let hi = (((window.end() / hop).ceil() as i64) + 1).max(0) as usize;
    let hi = hi.min(frame_count);

    let mut acc = vec![0.0f64; seq.dim()];
    let mut count = 0usize;
    for i in lo..hi {
        let t = i as f64 * hop;
        if t >= window.start() && t < window.end() {
            for (a, &v) in acc.iter_mut().zip(seq.frame(i)) {
                *a += f64::from(v);
            }
            count += 1;
        }
    }
    if count == 0 {
        return Err(ClusterError::EmptyWindow { start: window.start(), end: window.end() });
    }
    for a in &mut acc {
        *a /= count as f64;
    }
    let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for a in &mut acc {
            *a /= norm;
        }
    }
    Ok(acc)
}

fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    1.0 - a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

/// Average-linkage agglomerative clustering of unit vectors under cosine
/// distance. Returns one 0-based cluster id per vector, ids ordered by
/// first appearance.
///
/// Merging always takes the pair with the smallest average inter-cluster
/// distance, ties broken by the smallest (min member index of one cluster,
/// min of the other) — fully deterministic for a fixed input order. The
/// dendrogram is cut where the next merge distance would exceed
/// `linkage_cutoff`, then the cluster count is clamped into
/// `[min_speakers, max_speakers]` (and by the vector count): forcing a
/// split withholds final merges, forcing a join continues past the cutoff.
pub fn ahc_cluster(vectors: &[Vec<f64>], cfg: &ClusterConfig) -> Result<Vec<usize>, ClusterError> {
    cfg.validate()?;
    let n = vectors.len();
    if n == 0 {
        return Err(ClusterError::NoVectors);
    }

    // sums[a][b] = total pairwise distance between members of clusters a and
    // b; the average is sums / (size_a · size_b). Merging by adding sums is
    // the average-linkage (Lance–Williams) update in exact form.
    let mut sums = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = cosine_distance(&vectors[i], &vectors[j]);
            sums[i][j] = d;
            sums[j][i] = d;
        }
    }

    // Slot s always holds the cluster whose smallest member index is s, so
    // tie-breaking on (slot_a, slot_b) is tie-breaking on min member indices.
    let mut alive = vec![true; n];
    let mut size = vec![1usize; n];
    let mut schedule: Vec<(f64, usize, usize)> = Vec::with_capacity(n.saturating_sub(1));

    for _ in 1..n {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..n {
            if !alive[a] {
                continue;
            }
            for b in (a + 1)..n {
                if !alive[b] {
                    continue;
                }
                let d = sums[a][b] / (size[a] * size[b]) as f64;
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, a, b));
                }
            }
        }
        let (d, a, b) = best.expect("at least two clusters remain");
        schedule.push((d, a, b));
        for c in 0..n {
            if alive[c] && c != a && c != b {
                let add = sums[b][c];
                sums[a][c] += add;
                sums[c][a] = sums[a][c];
            }
        }
        size[a] += size[b];
        alive[b] = false;
    }

    let natural = n - schedule.iter().take_while(|&&(d, _, _)| d <= cfg.linkage_cutoff).count();
    let target = natural.clamp(cfg.min_speakers, cfg.max_speakers).min(n);

    // Replay the first n − target merges through a union-find.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(_, a, b) in schedule.iter().take(n - target) {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[rb.max(ra)] = rb.min(ra);
    }

    let mut ids = vec![usize::MAX; n];
    let mut next = 0usize;
    let mut labels = Vec::with_capacity(n);
    for v in 0..n {
        let root = find(&mut parent, v);
        if ids[root] == usize::MAX {
            ids[root] = next;
            next += 1;
        }
        labels.push(ids[root]);
    }
    Ok(labels)
}

/// Slices `interval` into consecutive `chunk`-second pieces. A final
/// partial piece is kept when it reaches half a chunk and otherwise merged
/// into the previous piece; an interval no longer than one chunk stays
/// whole. Pieces tile the interval exactly.
fn chunk_interval(interval: TimeInterval, chunk: f64) -> Vec<TimeInterval> {
    let duration = interval.duration();
    if duration <= chunk {
        return vec![interval];
    }
    let full = (duration / chunk).floor() as usize;
    let remainder = duration - full as f64 * chunk;
    let pieces = if remainder <= 0.0 {
        full
    } else if remainder >= chunk / 2.0 {
        full + 1
    } else {
        full
    };
    (0..pieces)
        .map(|i| {
            let start = interval.start() + i as f64 * chunk;
            let end = if i + 1 == pieces {
                interval.end()
            } else {
                interval.start() + (i + 1) as f64 * chunk
            };
            TimeInterval::new(start, end).expect("chunking preserves ordering")
        })
        .collect()
}

/// Full clustering diarizer: VAD → chunking → pooling → AHC → labeled,
/// normalized annotation with speakers `spk0`, `spk1`, … in order of first
/// appearance. Silence-only input yields an empty annotation.
pub fn pipeline_diarize(
    seq: &EmbeddingSequence,
    cfg: &ClusterConfig,
) -> Result<DiarizationAnnotation, ClusterError> {
    cfg.validate()?;
    let mut chunks: Vec<TimeInterval> = Vec::new();
    for interval in vad_segments(seq, cfg)? {
        chunks.extend(chunk_interval(interval, cfg.chunk_seconds));
    }
    if chunks.is_empty() {
        return Ok(DiarizationAnnotation::new(seq.recording_id()));
    }
    let vectors: Vec<Vec<f64>> =
        chunks.iter().map(|c| pool_window(seq, c)).collect::<Result<_, _>>()?;
    let labels = ahc_cluster(&vectors, cfg)?;

    let mut ann = DiarizationAnnotation::new(seq.recording_id());
    for (chunk, label) in chunks.iter().zip(&labels) {
        ann.push(
            SpeakerSegment::new(seq.recording_id(), format!("spk{label}"), *chunk)
                .expect("chunk intervals are valid"),
        );
    }
    Ok(ann.normalize().expect("single recording by construction"))
}
