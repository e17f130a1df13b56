//! Multi-recording fan-out for the single-recording pipeline stages.
//!
//! Each stage here groups its inputs by recording id, runs the
//! corresponding single-recording function on every group, and stitches
//! the results back together in recording-id order. With the `parallel`
//! feature (on by default) the per-recording work is spread across a
//! rayon pool; the `*_seq` twins always run sequentially and produce
//! identical output, byte for byte.

use std::collections::BTreeMap;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::cluster::{pipeline_diarize, ClusterConfig, ClusterError};
use crate::decode::{decode_diarization, DecodeConfig, DecodeError};
use crate::der::{compute_der, DerError, DerReport, ScoringOptions};
use crate::fusion::{fuse_proposals, FusionConfig, FusionError};
use crate::io::demb::EmbeddingSequence;
use crate::io::proposals::SpeechProposal;
use crate::nms::{soft_nms, NmsConfig, NmsError};
use crate::timeline::DiarizationAnnotation;

/// Groups proposals by recording id, preserving the input order within
/// each recording.
pub fn group_by_recording(proposals: &[SpeechProposal]) -> BTreeMap<String, Vec<SpeechProposal>> {
    let mut groups: BTreeMap<String, Vec<SpeechProposal>> = BTreeMap::new();
    for p in proposals {
        groups.entry(p.recording_id.clone()).or_default().push(p.clone());
    }
    groups
}

fn run_groups<T, U, E, F>(groups: Vec<T>, job: F) -> Result<Vec<U>, E>
where
    T: Send,
    U: Send,
    E: Send,
    F: Fn(T) -> Result<U, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        groups.into_par_iter().map(job).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        groups.into_iter().map(job).collect()
    }
}

fn run_groups_seq<T, U, E, F>(groups: Vec<T>, job: F) -> Result<Vec<U>, E>
where
    F: Fn(T) -> Result<U, E>,
{
    groups.into_iter().map(job).collect()
}

/// [`soft_nms`] per recording; output ordered by recording id, then by
/// each recording's suppression order.
pub fn soft_nms_all(
    proposals: &[SpeechProposal],
    cfg: &NmsConfig,
) -> Result<Vec<SpeechProposal>, NmsError> {
    let groups: Vec<_> = group_by_recording(proposals).into_values().collect();
    Ok(run_groups(groups, |g| soft_nms(&g, cfg))?.into_iter().flatten().collect())
}

/// Sequential twin of [`soft_nms_all`].
pub fn soft_nms_all_seq(
    proposals: &[SpeechProposal],
    cfg: &NmsConfig,
) -> Result<Vec<SpeechProposal>, NmsError> {
    let groups: Vec<_> = group_by_recording(proposals).into_values().collect();
    Ok(run_groups_seq(groups, |g| soft_nms(&g, cfg))?.into_iter().flatten().collect())
}

fn paired_groups(
    a: &[SpeechProposal],
    b: &[SpeechProposal],
) -> Vec<(Vec<SpeechProposal>, Vec<SpeechProposal>)> {
    let mut a_groups = group_by_recording(a);
    let mut b_groups = group_by_recording(b);
    let mut keys: Vec<String> = a_groups.keys().chain(b_groups.keys()).cloned().collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|k| {
            (a_groups.remove(&k).unwrap_or_default(), b_groups.remove(&k).unwrap_or_default())
        })
        .collect()
}

/// [`fuse_proposals`] per recording over the union of recording ids; a
/// recording missing from one source contributes an empty list.
pub fn fuse_all(
    a: &[SpeechProposal],
    b: &[SpeechProposal],
    cfg: &FusionConfig,
) -> Result<Vec<SpeechProposal>, FusionError> {
    let pairs = paired_groups(a, b);
    Ok(run_groups(pairs, |(ga, gb)| fuse_proposals(&ga, &gb, cfg))?
        .into_iter()
        .flatten()
        .collect())
}

/// Sequential twin of [`fuse_all`].
pub fn fuse_all_seq(
    a: &[SpeechProposal],
    b: &[SpeechProposal],
    cfg: &FusionConfig,
) -> Result<Vec<SpeechProposal>, FusionError> {
    let pairs = paired_groups(a, b);
    Ok(run_groups_seq(pairs, |(ga, gb)| fuse_proposals(&ga, &gb, cfg))?
        .into_iter()
        .flatten()
        .collect())
}

/// [`decode_diarization`] per recording; one annotation per recording id,
/// ordered by id.
pub fn decode_all(
    proposals: &[SpeechProposal],
    cfg: &DecodeConfig,
) -> Result<Vec<DiarizationAnnotation>, DecodeError> {
    let groups: Vec<_> = group_by_recording(proposals).into_values().collect();
    run_groups(groups, |g| decode_diarization(&g, cfg))
}

/// Sequential twin of [`decode_all`].
pub fn decode_all_seq(
    proposals: &[SpeechProposal],
    cfg: &DecodeConfig,
) -> Result<Vec<DiarizationAnnotation>, DecodeError> {
    let groups: Vec<_> = group_by_recording(proposals).into_values().collect();
    run_groups_seq(groups, |g| decode_diarization(&g, cfg))
}

/// [`pipeline_diarize`] over many embedding sequences; output order
/// matches input order.
pub fn diarize_all(
    sequences: &[EmbeddingSequence],
    cfg: &ClusterConfig,
) -> Result<Vec<DiarizationAnnotation>, ClusterError> {
    run_groups(sequences.iter().collect(), |s: &EmbeddingSequence| pipeline_diarize(s, cfg))
}

/// Sequential twin of [`diarize_all`].
pub fn diarize_all_seq(
    sequences: &[EmbeddingSequence],
    cfg: &ClusterConfig,
) -> Result<Vec<DiarizationAnnotation>, ClusterError> {
    run_groups_seq(sequences.iter().collect(), |s: &EmbeddingSequence| pipeline_diarize(s, cfg))
}

/// [`compute_der`] over reference/hypothesis pairs; output order matches
/// input order.
pub fn score_all(
    pairs: &[(DiarizationAnnotation, DiarizationAnnotation)],
    opts: &ScoringOptions,
) -> Result<Vec<DerReport>, DerError> {
    run_groups(pairs.iter().collect(), |(r, h): &(DiarizationAnnotation, DiarizationAnnotation)| {
        compute_der(r, h, opts)
    })
}

/// Sequential twin of [`score_all`].
pub fn score_all_seq(
    pairs: &[(DiarizationAnnotation, DiarizationAnnotation)],
    opts: &ScoringOptions,
) -> Result<Vec<DerReport>, DerError> {
    run_groups_seq(
        pairs.iter().collect(),
        |(r, h): &(DiarizationAnnotation, DiarizationAnnotation)| compute_der(r, h, opts),
    )
}
