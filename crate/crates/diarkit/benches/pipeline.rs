//! Parallel vs. sequential throughput of the batch entry points.
//!
//! Every stage is benchmarked twice on the same seeded fixtures: the
//! default entry point (rayon fan-out when the `parallel` feature is on)
//! against its `_seq` twin. Run with `--no-default-features` to confirm
//! both sides collapse to the same sequential numbers.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use diarkit::batch;
use diarkit::cluster::ClusterConfig;
use diarkit::decode::DecodeConfig;
use diarkit::der::ScoringOptions;
use diarkit::fusion::FusionConfig;
use diarkit::io::demb::EmbeddingSequence;
use diarkit::io::proposals::SpeechProposal;
use diarkit::nms::NmsConfig;
use diarkit::synth;
use diarkit::timeline::DiarizationAnnotation;

const RECORDINGS: usize = 8;

fn proposal_fixture(per_recording: usize) -> Vec<SpeechProposal> {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut all = Vec::new();
    for i in 0..RECORDINGS {
        all.extend(synth::random_proposals(
            &mut rng,
            &format!("rec{i:02}"),
            per_recording,
            4,
            "det",
        ));
    }
    all
}

fn annotation_pairs() -> Vec<(DiarizationAnnotation, DiarizationAnnotation)> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    (0..RECORDINGS)
        .map(|i| {
            let rec = format!("rec{i:02}");
            let truth = synth::random_annotation(&mut rng, &rec, 4, 40);
            let noisy = synth::jittered_proposals(&mut rng, &truth, 0.2, 1);
            let hyp = diarkit::decode::decode_diarization(&noisy, &DecodeConfig::default())
                .unwrap();
            (truth, hyp)
        })
        .collect()
}

fn embedding_fixture() -> Vec<EmbeddingSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    (0..RECORDINGS)
        .map(|i| {
            let speakers = rng.random_range(2..=4);
            synth::planted_embeddings(
                &mut rng,
                &format!("rec{i:02}"),
                speakers,
                24,
                2.0,
                0.4,
                16,
                0.08,
            )
            .0
        })
        .collect()
}

fn bench_nms(c: &mut Criterion) {
    let proposals = proposal_fixture(400);
    let cfg = NmsConfig::default();
    let mut group = c.benchmark_group("soft_nms_batch");
    group.bench_function("parallel", |b| {
        b.iter(|| batch::soft_nms_all(black_box(&proposals), &cfg).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| batch::soft_nms_all_seq(black_box(&proposals), &cfg).unwrap())
    });
    group.finish();
}

fn bench_fusion(c: &mut Criterion) {
    let a = proposal_fixture(150);
    let b_side = proposal_fixture(150);
    let cfg = FusionConfig::default();
    let mut group = c.benchmark_group("fuse_batch");
    group.bench_function("parallel", |b| {
        b.iter(|| batch::fuse_all(black_box(&a), black_box(&b_side), &cfg).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| batch::fuse_all_seq(black_box(&a), black_box(&b_side), &cfg).unwrap())
    });
    group.finish();
}

fn bench_decode(c: &mut Criterion) {
    let proposals = proposal_fixture(400);
    let cfg = DecodeConfig::default();
    let mut group = c.benchmark_group("decode_batch");
    group.bench_function("parallel", |b| {
        b.iter(|| batch::decode_all(black_box(&proposals), &cfg).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| batch::decode_all_seq(black_box(&proposals), &cfg).unwrap())
    });
    group.finish();
}

fn bench_diarize(c: &mut Criterion) {
    let sequences = embedding_fixture();
    let cfg = ClusterConfig::default();
    let mut group = c.benchmark_group("diarize_batch");
    group.sample_size(20);
    group.bench_function("parallel", |b| {
        b.iter(|| batch::diarize_all(black_box(&sequences), &cfg).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| batch::diarize_all_seq(black_box(&sequences), &cfg).unwrap())
    });
    group.finish();
}

fn bench_score(c: &mut Criterion) {
    let pairs = annotation_pairs();
    let opts = ScoringOptions { collar: 0.25, ..ScoringOptions::default() };
    let mut group = c.benchmark_group("score_batch");
    group.bench_function("parallel", |b| {
        b.iter(|| batch::score_all(black_box(&pairs), &opts).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| batch::score_all_seq(black_box(&pairs), &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_nms, bench_fusion, bench_decode, bench_diarize, bench_score);
criterion_main!(benches);
