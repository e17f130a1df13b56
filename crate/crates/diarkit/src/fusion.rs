//! Score-level fusion of two proposal sets.
//!
//! The two sets typically come from different systems (say, a clustering
//! pipeline and a detector); fusion pools them, ranks by score, and keeps
//! the global top `k` — by default exactly "arrange by score, keep the best
//! 100". Because raw score scales from different systems are not generally
//! comparable, an optional per-source min–max normalization is provided, as
//! is IoU-based removal of near-duplicates.

use thiserror::Error;

use crate::io::proposals::SpeechProposal;
use crate::nms::{ensure_single_recording, rank_order};

/// How the two sources' scores are made comparable before pooling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Pool raw scores untouched.
    #[default]
    Raw,
    /// Affinely map each source's scores onto `[0, 1]`; a constant-score
    /// source maps to all ones.
    MinMax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionConfig {
    /// Global number of proposals kept after pooling.
    pub k: usize,
    pub normalize: Normalization,
    /// A later-ranked proposal is dropped when its IoU with an already-kept
    /// same-speaker proposal reaches this value. The default `1.0` removes
    /// only exact-duplicate intervals.
    pub dedup_iou: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self { k: 100, normalize: Normalization::Raw, dedup_iou: 1.0 }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), FusionError> {
        if self.k == 0 {
            return Err(FusionError::InvalidConfig { reason: "k must be positive".to_string() });
        }
        if !(0.0..=1.0).contains(&self.dedup_iou) {
            return Err(FusionError::InvalidConfig {
                reason: format!("dedup_iou must lie in [0, 1], got {}", self.dedup_iou),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("proposals span recordings {first:?} and {second:?}; fuse one recording at a time")]
    MixedRecordings { first: String, second: String },
    #[error("invalid config: {reason}")]
    InvalidConfig { reason: String },
}

/// Affinely rescales `scores` onto `[0, 1]` in place; constant inputs all
/// become `1.0` (a source that is certain of everything outranks nothing).
fn minmax_rescale(props: &mut [SpeechProposal]) {
    let Some(first) = props.first() else { return };
    let (mut lo, mut hi) = (first.score, first.score);
    for p in props.iter() {
        lo = lo.min(p.score);
        hi = hi.max(p.score);
    }
    for p in props.iter_mut() {
        p.score = if hi > lo { (p.score - lo) / (hi - lo) } else { 1.0 };
    }
}

/// Pools two same-recording proposal sets and keeps the top `cfg.k`.
///
/// Ranking uses the shared deterministic total order (score descending,
/// ties by start/speaker/end/source), so with raw normalization fusing is
/// symmetric in its arguments. Source tags pass through untouched, which is
/// how downstream stages can still tell the origins apart.
pub fn fuse_proposals(
    a: &[SpeechProposal],
    b: &[SpeechProposal],
    cfg: &FusionConfig,
) -> Result<Vec<SpeechProposal>, FusionError> {
    cfg.validate()?;

    let mut a = a.to_vec();
    let mut b = b.to_vec();
    if cfg.normalize == Normalization::MinMax {
        minmax_rescale(&mut a);
        minmax_rescale(&mut b);
    }

    let mut pooled = a;
    pooled.append(&mut b);
    ensure_single_recording(&pooled).map_err(|e| match e {
        crate::nms::NmsError::MixedRecordings { first, second } => {
            FusionError::MixedRecordings { first, second }
        }
        crate::nms::NmsError::InvalidConfig { reason } => FusionError::InvalidConfig { reason },
    })?;
    pooled.sort_by(rank_order);

    let mut kept: Vec<SpeechProposal> = Vec::with_capacity(cfg.k.min(pooled.len()));
    for candidate in pooled {
        if kept.len() == cfg.k {
            break;
        }
        let duplicate = kept
            .iter()
            .any(|p| p.speaker == candidate.speaker && p.iou(&candidate) >= cfg.dedup_iou);
        if !duplicate {
            kept.push(candidate);
        }
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nms::truncate_top_k;

    fn prop(start: f64, end: f64, speaker: &str, score: f64, source: &str) -> SpeechProposal {
        SpeechProposal::new("rec", start, end, speaker, score, source).unwrap()
    }

    #[test]
    fn raw_fusion_keeps_global_top_k() {
        let a = vec![prop(0.0, 1.0, "A", 0.9, "a"), prop(2.0, 3.0, "A", 0.5, "a")];
        let b = vec![prop(4.0, 5.0, "B", 0.7, "b")];
        let cfg = FusionConfig { k: 2, ..FusionConfig::default() };
        let got = fuse_proposals(&a, &b, &cfg).unwrap();
        assert_eq!(got, vec![a[0].clone(), b[0].clone()]);
    }

    #[test]
    fn empty_second_source_degenerates_to_truncation() {
        let a: Vec<_> = (0..5)
            .map(|i| prop(f64::from(i), f64::from(i) + 0.5, "A", f64::from(i) * 0.1, "a"))
            .collect();
        let cfg = FusionConfig { k: 3, ..FusionConfig::default() };
        assert_eq!(fuse_proposals(&a, &[], &cfg).unwrap(), truncate_top_k(&a, 3));
    }

    #[test]
    fn minmax_maps_constant_sources_to_one() {
        // Each source is constant, so both proposals map to score 1.0 and
        // the earlier start wins the tie.
        let a = vec![prop(3.0, 4.0, "A", 5.0, "a")];
        let b = vec![prop(0.0, 1.0, "B", 0.9, "b")];
        let cfg = FusionConfig { normalize: Normalization::MinMax, ..FusionConfig::default() };
        let got = fuse_proposals(&a, &b, &cfg).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!((got[0].score, got[0].start), (1.0, 0.0));
        assert_eq!((got[1].score, got[1].start), (1.0, 3.0));
    }

    #[test]
    fn minmax_rescales_affinely() {
        let a = vec![
            prop(0.0, 1.0, "A", 2.0, "a"),
            prop(1.0, 2.0, "A", 4.0, "a"),
            prop(2.0, 3.0, "A", 6.0, "a"),
        ];
        let cfg = FusionConfig { normalize: Normalization::MinMax, ..FusionConfig::default() };
        let got = fuse_proposals(&a, &[], &cfg).unwrap();
        let scores: Vec<f64> = got.iter().map(|p| p.score).collect();
        assert_eq!(scores, vec![1.0, 0.5, 0.0]);
    }

    #[test]
    fn dedup_removes_same_speaker_duplicates() {
        let a = vec![prop(0.0, 1.0, "A", 0.9, "a")];
        let b = vec![prop(0.0, 1.0, "A", 0.7, "b"), prop(0.0, 1.0, "B", 0.6, "b")];
        let got = fuse_proposals(&a, &b, &FusionConfig::default()).unwrap();
        // The same-speaker duplicate interval is dropped; the cross-speaker
        // duplicate interval survives.
        assert_eq!(got.len(), 2);
        assert_eq!(got[0], a[0]);
        assert_eq!(got[1], b[1]);
    }

    #[test]
    fn near_duplicates_survive_at_default_dedup() {
        let a = vec![prop(0.0, 1.0, "A", 0.9, "a")];
        let b = vec![prop(0.0, 0.999, "A", 0.7, "b")];
        let got = fuse_proposals(&a, &b, &FusionConfig::default()).unwrap();
        assert_eq!(got.len(), 2);
    }

    #[test]
    fn mixed_recordings_are_rejected() {
        let a = vec![prop(0.0, 1.0, "A", 0.9, "a")];
        let b = vec![SpeechProposal::new("other", 0.0, 1.0, "A", 0.9, "b").unwrap()];
        assert!(matches!(
            fuse_proposals(&a, &b, &FusionConfig::default()),
            Err(FusionError::MixedRecordings { .. })
        ));
    }

    #[test]
    fn zero_k_is_rejected() {
        let cfg = FusionConfig { k: 0, ..FusionConfig::default() };
        assert!(matches!(
            fuse_proposals(&[], &[], &cfg),
            Err(FusionError::InvalidConfig { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        /// Proposals whose intervals are pairwise distinct within and across
        /// sources (`a` records start on 10·i, `b` records on 10·i + 3), so
        /// exact-duplicate dedup can never fire.
        fn arb_props(source: &'static str, offset: f64) -> impl Strategy<Value = Vec<SpeechProposal>> {
            let one = (0.5f64..5.0, 0usize..3, 0.0f64..1.0);
            proptest::collection::vec(one, 0..30).prop_map(move |items| {
                items
                    .into_iter()
                    .enumerate()
                    .map(|(i, (len, spk, score))| {
                        let start = 10.0 * i as f64 + offset;
                        SpeechProposal::new(
                            "rec",
                            start,
                            start + len,
                            format!("s{spk}"),
                            score,
                            source,
                        )
                        .unwrap()
                    })
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn raw_fusion_is_symmetric(
                a in arb_props("a", 0.0),
                b in arb_props("b", 3.0),
                k in 1usize..40,
            ) {
                let cfg = FusionConfig { k, ..FusionConfig::default() };
                prop_assert_eq!(
                    fuse_proposals(&a, &b, &cfg).unwrap(),
                    fuse_proposals(&b, &a, &cfg).unwrap()
                );
            }

            #[test]
            fn output_is_bounded_and_conservative(
                a in arb_props("a", 0.0),
                b in arb_props("b", 3.0),
                k in 1usize..40,
            ) {
                let cfg = FusionConfig { k, ..FusionConfig::default() };
                let got = fuse_proposals(&a, &b, &cfg).unwrap();
                prop_assert!(got.len() <= k.min(a.len() + b.len()));
                for p in &got {
                    prop_assert!(a.contains(p) || b.contains(p));
                }
            }

            #[test]
            fn dedup_disabled_equals_plain_truncation(
                a in arb_props("a", 0.0),
                b in arb_props("b", 3.0),
                k in 1usize..40,
            ) {
                let cfg = FusionConfig { k, ..FusionConfig::default() };
                let mut pooled = a.clone();
                pooled.extend(b.iter().cloned());
                // Random float intervals collide with probability ~0, so
                // dedup at IoU 1.0 never fires and fusion is literally
                // "top k of the concatenation".
                prop_assert_eq!(fuse_proposals(&a, &b, &cfg).unwrap(), truncate_top_k(&pooled, k));
            }
        }
    }
}
