//! Hard and soft non-maximum suppression over scored temporal proposals.
//!
//! Detectors emit many near-duplicate proposals per stretch of speech; this
//! stage greedily keeps local score maxima and deletes (hard) or decays
//! (linear / gaussian soft variants) whatever overlaps them, then truncates
//! to the best `max_out`. The typical budget is 1000 proposals in, 100 out.

use std::cmp::Ordering;

use thiserror::Error;

use crate::io::proposals::SpeechProposal;

/// Suppression decay applied to proposals overlapping an accepted one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NmsMethod {
    /// Drop overlapping proposals outright once IoU reaches the threshold.
    Hard,
    /// Scale score by `1 - IoU` once IoU reaches the threshold.
    Linear,
    /// Scale score by `exp(-IoU² / sigma)` unconditionally.
    #[default]
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmsConfig {
    pub method: NmsMethod,
    /// Gaussian decay width.
    pub sigma: f64,
    /// IoU at or above which hard/linear suppression engages.
    pub iou_threshold: f64,
    /// Proposals whose score decays below this are pruned; keeps gaussian
    /// decay from accumulating unbounded near-zero zombies.
    pub score_floor: f64,
    /// Input truncated to this many top-scoring proposals before the loop.
    pub max_in: usize,
    /// Suppression stops once this many proposals have been accepted.
    pub max_out: usize,
    /// Suppress only within one speaker's proposals; cross-speaker overlap
    /// is legitimate simultaneous speech and is never suppressed.
    pub speaker_aware: bool,
}

impl Default for NmsConfig {
    fn default() -> Self {
        Self {
            method: NmsMethod::Gaussian,
            sigma: 0.5,
            iou_threshold: 0.5,
            score_floor: 0.001,
            max_in: 1000,
            max_out: 100,
            speaker_aware: true,
        }
    }
}

impl NmsConfig {
    pub fn validate(&self) -> Result<(), NmsError> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(NmsError::InvalidConfig {
                reason: format!("sigma must be positive, got {}", self.sigma),
            });
        }
        if !(0.0..=1.0).contains(&self.iou_threshold) {
            return Err(NmsError::InvalidConfig {
                reason: format!("iou_threshold must lie in [0, 1], got {}", self.iou_threshold),
            });
        }
        if !(self.score_floor.is_finite() && self.score_floor >= 0.0) {
            return Err(NmsError::InvalidConfig {
                reason: format!("score_floor must be non-negative, got {}", self.score_floor),
            });
        }
        if self.max_in == 0 || self.max_out == 0 {
            return Err(NmsError::InvalidConfig {
                reason: "max_in and max_out must be positive".to_string(),
            });
        }
        if self.max_out > self.max_in {
            return Err(NmsError::InvalidConfig {
                reason: format!("max_out {} exceeds max_in {}", self.max_out, self.max_in),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NmsError {
    #[error("proposals span recordings {first:?} and {second:?}; group per recording first")]
    MixedRecordings { first: String, second: String },
    #[error("invalid config: {reason}")]
    InvalidConfig { reason: String },
}

/// Total order used everywhere proposals are ranked: score descending, then
/// `(start, speaker, end, source)` ascending. Makes every ranking step
/// deterministic regardless of input order.
pub(crate) fn rank_order(a: &SpeechProposal, b: &SpeechProposal) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.start.total_cmp(&b.start))
        .then_with(|| a.speaker.cmp(&b.speaker))
        .then_with(|| a.end.total_cmp(&b.end))
        .then_with(|| a.source.cmp(&b.source))
}

pub(crate) fn ensure_single_recording(props: &[SpeechProposal]) -> Result<(), NmsError> {
    if let Some(first) = props.first() {
        for p in &props[1..] {
            if p.recording_id != first.recording_id {
                return Err(NmsError::MixedRecordings {
                    first: first.recording_id.clone(),
                    second: p.recording_id.clone(),
                });
            }
        }
    }
    Ok(())
}

/// The `k` highest-scoring proposals, sorted by score descending with
/// deterministic tie-breaks (earlier start, then speaker, end, source).
pub fn truncate_top_k(props: &[SpeechProposal], k: usize) -> Vec<SpeechProposal> {
    let mut sorted = props.to_vec();
    sorted.sort_by(rank_order);
    sorted.truncate(k);
    sorted
}

/// Greedy (soft) non-maximum suppression over one recording's proposals.
///
/// After truncating the input to the top `max_in`, the loop repeatedly
/// accepts the highest-scoring remaining proposal and decays or drops the
/// proposals overlapping it (same speaker only when `speaker_aware`), until
/// the pool is empty or `max_out` proposals are accepted. Output scores are
/// never larger than input scores; intervals and labels pass through
/// untouched, so the output is a subset of the input up to score decay.
pub fn soft_nms(props: &[SpeechProposal], cfg: &NmsConfig) -> Result<Vec<SpeechProposal>, NmsError> {
    cfg.validate()?;
    ensure_single_recording(props)?;

    let mut pool = truncate_top_k(props, cfg.max_in);
    let mut kept = Vec::with_capacity(cfg.max_out.min(pool.len()));

    while !pool.is_empty() && kept.len() < cfg.max_out {
        // Scores mutate between rounds, so the maximum must be re-found; the
        // total order keeps the choice deterministic under ties.
        let best = pool
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| rank_order(a, b))
            .map(|(idx, _)| idx)
            .expect("pool is non-empty");
        let accepted = pool.swap_remove(best);

        pool.retain_mut(|other| {
            if cfg.speaker_aware && other.speaker != accepted.speaker {
                return true;
            }
            let iou = accepted.iou(other);
            match cfg.method {
                NmsMethod::Hard => {
                    if iou >= cfg.iou_threshold {
                        return false;
                    }
                }
                NmsMethod::Linear => {
                    if iou >= cfg.iou_threshold {
                        other.score *= 1.0 - iou;
                    }
                }
                NmsMethod::Gaussian => {
                    other.score *= (-iou * iou / cfg.sigma).exp();
                }
            }
            other.score >= cfg.score_floor
        });

        kept.push(accepted);
    }

    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prop(start: f64, end: f64, speaker: &str, score: f64) -> SpeechProposal {
        SpeechProposal::new("rec", start, end, speaker, score, "det").unwrap()
    }

    fn gaussian_cfg() -> NmsConfig {
        NmsConfig { score_floor: 0.0, ..NmsConfig::default() }
    }

    #[test]
    fn single_proposal_passes_through_unchanged() {
        let input = vec![prop(0.0, 1.0, "A", 0.9)];
        for method in [NmsMethod::Hard, NmsMethod::Linear, NmsMethod::Gaussian] {
            let cfg = NmsConfig { method, ..NmsConfig::default() };
            assert_eq!(soft_nms(&input, &cfg).unwrap(), input);
        }
    }

    #[test]
    fn disjoint_proposals_keep_their_scores() {
        let input = vec![prop(0.0, 1.0, "A", 0.9), prop(5.0, 6.0, "A", 0.8)];
        let got = soft_nms(&input, &gaussian_cfg()).unwrap();
        assert_eq!(got, input);
    }

    #[test]
    fn gaussian_decay_matches_hand_computation() {
        // IoU([0,4), [1,5)) = 3/5; decayed score = 0.8 · exp(−0.6² / 0.5).
        let input = vec![prop(0.0, 4.0, "A", 0.9), prop(1.0, 5.0, "A", 0.8)];
        let got = soft_nms(&input, &gaussian_cfg()).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].score, 0.9);
        assert!((got[1].score - 0.38940180476797726).abs() < 1e-9, "{}", got[1].score);
    }

    #[test]
    fn linear_decay_matches_hand_computation() {
        // IoU([0,4), [2,6)) = 1/3 ≥ 0.3; decayed score = 0.8 · (1 − 1/3).
        let cfg = NmsConfig {
            method: NmsMethod::Linear,
            iou_threshold: 0.3,
            score_floor: 0.0,
            ..NmsConfig::default()
        };
        let input = vec![prop(0.0, 4.0, "A", 0.9), prop(2.0, 6.0, "A", 0.8)];
        let got = soft_nms(&input, &cfg).unwrap();
        assert_eq!(got.len(), 2);
        assert!((got[1].score - 0.5333333333333333).abs() < 1e-9, "{}", got[1].score);
    }

    #[test]
    fn hard_nms_drops_overlap_at_threshold() {
        let cfg = NmsConfig { method: NmsMethod::Hard, ..NmsConfig::default() };
        let input = vec![
            prop(0.0, 4.0, "A", 0.9),
            prop(1.0, 5.0, "A", 0.8), // IoU 0.6 ≥ 0.5, dropped
            prop(3.5, 7.5, "A", 0.7), // IoU with survivor 0.0625 < 0.5, kept
        ];
        let got = soft_nms(&input, &cfg).unwrap();
        assert_eq!(got, vec![input[0].clone(), input[2].clone()]);
    }

    #[test]
    fn cross_speaker_overlap_is_untouched_when_speaker_aware() {
        let input = vec![prop(0.0, 4.0, "A", 0.9), prop(0.0, 4.0, "B", 0.8)];
        let got = soft_nms(&input, &gaussian_cfg()).unwrap();
        assert_eq!(got, input);

        let cfg = NmsConfig { speaker_aware: false, score_floor: 0.0, ..NmsConfig::default() };
        let got = soft_nms(&input, &cfg).unwrap();
        assert!(got[1].score < 0.8);
    }

    #[test]
    fn score_floor_prunes_decayed_proposals() {
        let cfg = NmsConfig { score_floor: 0.5, ..NmsConfig::default() };
        let input = vec![prop(0.0, 4.0, "A", 0.9), prop(1.0, 5.0, "A", 0.8)];
        let got = soft_nms(&input, &cfg).unwrap();
        // 0.8 decays to ~0.389 < 0.5 and is pruned.
        assert_eq!(got, vec![input[0].clone()]);
    }

    #[test]
    fn max_out_caps_the_output() {
        let cfg = NmsConfig { max_out: 2, ..NmsConfig::default() };
        let input: Vec<_> =
            (0..5).map(|i| prop(10.0 * f64::from(i), 10.0 * f64::from(i) + 1.0, "A", 0.9)).collect();
        assert_eq!(soft_nms(&input, &cfg).unwrap().len(), 2);
    }

    #[test]
    fn mixed_recordings_are_rejected() {
        let input = vec![
            prop(0.0, 1.0, "A", 0.9),
            SpeechProposal::new("other", 0.0, 1.0, "A", 0.9, "det").unwrap(),
        ];
        assert_eq!(
            soft_nms(&input, &NmsConfig::default()),
            Err(NmsError::MixedRecordings { first: "rec".into(), second: "other".into() })
        );
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad_sigma = NmsConfig { sigma: 0.0, ..NmsConfig::default() };
        assert!(matches!(
            soft_nms(&[], &bad_sigma),
            Err(NmsError::InvalidConfig { .. })
        ));
        let bad_budget = NmsConfig { max_out: 2000, ..NmsConfig::default() };
        assert!(matches!(
            soft_nms(&[], &bad_budget),
            Err(NmsError::InvalidConfig { .. })
        ));
    }

    #[test]
    fn truncate_returns_all_when_k_exceeds_len() {
        let input = vec![prop(0.0, 1.0, "A", 0.1), prop(1.0, 2.0, "A", 0.9)];
        let got = truncate_top_k(&input, 5);
        assert_eq!(got, vec![input[1].clone(), input[0].clone()]);
    }

    #[test]
    fn truncate_keeps_top_scores() {
        let input = vec![
            prop(0.0, 1.0, "A", 0.9),
            prop(1.0, 2.0, "A", 0.8),
            prop(2.0, 3.0, "A", 0.1),
        ];
        let got = truncate_top_k(&input, 2);
        assert_eq!(got, vec![input[0].clone(), input[1].clone()]);
    }

    #[test]
    fn truncate_ties_break_on_earlier_start() {
        let input = vec![prop(5.0, 6.0, "A", 0.9), prop(0.0, 1.0, "A", 0.9)];
        let got = truncate_top_k(&input, 1);
        assert_eq!(got, vec![input[1].clone()]);
    }

    #[test]
    fn hard_matches_positive_linear_survivors_on_dup_or_disjoint_sets() {
        // When every pairwise IoU is either < threshold or exactly 1, hard
        // NMS keeps exactly the proposals whose linear-decayed score stays
        // positive (duplicates decay to 0, disjoint ones keep their score).
        let input = vec![
            prop(0.0, 1.0, "A", 0.9),
            prop(0.0, 1.0, "A", 0.7), // exact duplicate interval
            prop(5.0, 6.0, "A", 0.5),
        ];
        let hard = NmsConfig { method: NmsMethod::Hard, score_floor: 0.0, ..NmsConfig::default() };
        let linear =
            NmsConfig { method: NmsMethod::Linear, score_floor: 0.0, ..NmsConfig::default() };
        let hard_keys: Vec<_> = soft_nms(&input, &hard)
            .unwrap()
            .iter()
            .map(|p| (p.start.to_bits(), p.end.to_bits()))
            .collect();
        let linear_keys: Vec<_> = soft_nms(&input, &linear)
            .unwrap()
            .iter()
            .filter(|p| p.score > 0.0)
            .map(|p| (p.start.to_bits(), p.end.to_bits()))
            .collect();
        assert_eq!(hard_keys, linear_keys);
        assert_eq!(hard_keys.len(), 2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use std::collections::HashMap;

        fn key(p: &SpeechProposal) -> (u64, u64, String) {
            (p.start.to_bits(), p.end.to_bits(), p.speaker.clone())
        }

        fn arb_props() -> impl Strategy<Value = Vec<SpeechProposal>> {
            let one = (0.0f64..50.0, 0.5f64..8.0, 0usize..3, 0.001f64..1.0).prop_map(
                |(s, len, spk, score)| {
                    SpeechProposal::new("rec", s, s + len, format!("s{spk}"), score, "det").unwrap()
                },
            );
            proptest::collection::vec(one, 0..40)
        }

        fn arb_cfg() -> impl Strategy<Value = NmsConfig> {
            (
                prop_oneof![Just(NmsMethod::Hard), Just(NmsMethod::Linear), Just(NmsMethod::Gaussian)],
                0.1f64..2.0,
                0.0f64..=1.0,
                any::<bool>(),
                1usize..20,
            )
                .prop_map(|(method, sigma, iou_threshold, speaker_aware, max_out)| NmsConfig {
                    method,
                    sigma,
                    iou_threshold,
                    score_floor: 0.001,
                    max_in: 1000,
                    max_out,
                    speaker_aware,
                })
        }

        proptest! {
            #[test]
            fn scores_never_increase_and_size_is_bounded(
                input in arb_props(),
                cfg in arb_cfg(),
            ) {
                let got = soft_nms(&input, &cfg).unwrap();
                prop_assert!(got.len() <= cfg.max_out.min(input.len()));

                let mut max_in_score: HashMap<_, f64> = HashMap::new();
                for p in &input {
                    let e = max_in_score.entry(key(p)).or_insert(f64::NEG_INFINITY);
                    *e = e.max(p.score);
                }
                for (i, p) in got.iter().enumerate() {
                    prop_assert!(p.score <= max_in_score[&key(p)] + 1e-12);
                    if i > 0 {
                        prop_assert!(got[i - 1].score >= p.score);
                    }
                    prop_assert!(input.iter().any(|q| key(q) == key(p)));
                }
            }

            #[test]
            fn deterministic_under_shuffling(input in arb_props(), cfg in arb_cfg()) {
                let mut reversed = input.clone();
                reversed.reverse();
                prop_assert_eq!(soft_nms(&input, &cfg).unwrap(), soft_nms(&reversed, &cfg).unwrap());
            }

            #[test]
            fn hard_nms_is_idempotent(input in arb_props()) {
                let cfg = NmsConfig { method: NmsMethod::Hard, ..NmsConfig::default() };
                let once = soft_nms(&input, &cfg).unwrap();
                let twice = soft_nms(&once, &cfg).unwrap();
                prop_assert_eq!(once, twice);
            }
        }
    }
}
