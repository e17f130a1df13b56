//! On-disk formats.
//!
//! Three formats, all deterministic and round-trip-exact:
//!
//! - [`rttm`] — line-oriented `SPEAKER` annotations, the interchange format
//!   scoring tools consume.
//! - [`proposals`] — scored speech proposals as one JSON object per line.
//! - [`demb`] — frame embeddings in a fixed-layout little-endian binary
//!   container.
//!
//! Every reader/writer here is a pure transform between bytes (or text) and
//! domain types; callers own file handles, so distinct files can be
//! processed concurrently without coordination.

pub mod demb;
pub mod proposals;
pub mod rttm;

pub use demb::EmbeddingSequence;
pub use proposals::SpeechProposal;
