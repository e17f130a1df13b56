//! Post-processing toolkit for detection-based speaker diarization.
//!
//! The pipeline starts after a neural detector has produced scored speech
//! proposals and frame-level speaker embeddings, and covers everything from
//! there to an error rate:
//!
//! 1. [`nms`] — suppress near-duplicate proposals (hard and soft variants).
//! 2. [`fusion`] — merge proposal sets from two detection sources.
//! 3. [`decode`] — turn surviving proposals into a speaker-labeled timeline.
//! 4. [`cluster`] — alternatively, diarize from embeddings: voice-activity
//!    gating, fixed-length chunk pooling, and agglomerative clustering.
//! 5. [`der`] — score a hypothesis against a reference (diarization error
//!    rate with optimal speaker mapping, collars, overlap exclusion).
//!
//! [`io`] reads and writes the three on-disk formats (RTTM, proposal JSONL,
//! binary embeddings); [`timeline`] holds the interval arithmetic everything
//! else is built on; [`batch`] fans any stage out over many recordings, in
//! parallel when the `parallel` feature (default) is enabled; [`synth`]
//! generates seeded synthetic inputs for tests and benchmarks.
//!
//! Times are `f64` seconds on half-open `[start, end)` intervals throughout.

pub mod batch;
pub mod cluster;
pub mod decode;
pub mod der;
pub mod fusion;
pub mod io;
pub mod nms;
pub mod synth;
pub mod timeline;

pub use cluster::{ClusterConfig, ClusterError};
pub use decode::{DecodeConfig, DecodeError};
pub use der::{DerReport, ScoringOptions};
pub use fusion::{FusionConfig, FusionError, Normalization};
pub use io::demb::EmbeddingSequence;
pub use io::proposals::SpeechProposal;
pub use io::rttm::RttmError;
pub use nms::{NmsConfig, NmsError, NmsMethod};
pub use timeline::{
    DiarizationAnnotation, SpeakerSegment, TimeInterval, TimelineError,
};
