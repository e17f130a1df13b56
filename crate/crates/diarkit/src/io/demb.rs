//! Frame-embedding binary container.
//!
//! A fixed little-endian layout that any language can produce without an
//! array-format dependency:
//!
//! ```text
//! magic "DEMB"              4 bytes
//! format version            u32   (currently 1)
//! recording_id length       u32, then that many UTF-8 bytes
//! dim                       u32
//! frame_count               u32
//! hop_seconds               f64
//! window_seconds            f64
//! has_activity              u8    (0 or 1)
//! frames                    frame_count × dim f32, row-major
//! activity (if flagged)     frame_count f32
//! ```
//!
//! The byte count is fully determined by the header; any surplus or deficit
//! is an error, so truncated or concatenated files never parse silently.

use thiserror::Error;

use crate::timeline::TimeInterval;

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_EMBEDDING_DIM: usize = 1280;
/// 320-sample stride at 16 kHz.
pub const DEFAULT_HOP_SECONDS: f64 = 0.020;
/// 400-sample window at 16 kHz.
pub const DEFAULT_WINDOW_SECONDS: f64 = 0.025;

const MAGIC: &[u8; 4] = b"DEMB";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbeddingError {
    #[error("bad magic {found:?}, expected \"DEMB\"")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported format version {found}")]
    UnsupportedVersion { found: u32 },
    #[error("truncated or oversized payload: header promises {expected} bytes, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("embedding dim must be positive")]
    ZeroDim,
    #[error("recording_id is not valid UTF-8")]
    BadRecordingId,
    #[error("{field} must be positive and finite, got {value}")]
    BadField { field: &'static str, value: f64 },
    #[error("frame matrix holds {found} values, expected frame_count × dim = {expected}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("activity holds {found} values, expected one per frame = {expected}")]
    ActivityMismatch { expected: usize, found: usize },
}

/// Frame-level embeddings for one recording: a `frame_count × dim` row-major
/// `f32` matrix plus an optional per-frame speech-activity score in `[0, 1]`.
/// Frame `i` covers `[i·hop, i·hop + window)` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSequence {
    recording_id: String,
    dim: usize,
    hop_seconds: f64,
    window_seconds: f64,
    frames: Vec<f32>,
    activity: Option<Vec<f32>>,
}

impl EmbeddingSequence {
    pub fn new(
        recording_id: impl Into<String>,
        dim: usize,
        hop_seconds: f64,
        window_seconds: f64,
        frames: Vec<f32>,
        activity: Option<Vec<f32>>,
    ) -> Result<Self, EmbeddingError> {
        if dim == 0 {
            return Err(EmbeddingError::ZeroDim);
        }
        for (field, value) in [("hop_seconds", hop_seconds), ("window_seconds", window_seconds)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(EmbeddingError::BadField { field, value });
            }
        }
        if frames.len() % dim != 0 {
            return Err(EmbeddingError::ShapeMismatch {
                expected: (frames.len() / dim) * dim,
                found: frames.len(),
            });
        }
        let frame_count = frames.len() / dim;
        if let Some(act) = &activity {
            if act.len() != frame_count {
                return Err(EmbeddingError::ActivityMismatch {
                    expected: frame_count,
                    found: act.len(),
                });
            }
        }
        Ok(Self {
            recording_id: recording_id.into(),
            dim,
            hop_seconds,
            window_seconds,
            frames,
            activity,
        })
    }

    pub fn recording_id(&self) -> &str {
        &self.recording_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hop_seconds(&self) -> f64 {
        self.hop_seconds
    }

    pub fn window_seconds(&self) -> f64 {
        self.window_seconds
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len() / self.dim
    }

    pub fn frame(&self, index: usize) -> &[f32] {
        &self.frames[index * self.dim..(index + 1) * self.dim]
    }

    pub fn frames(&self) -> &[f32] {
        &self.frames
    }

    pub fn activity(&self) -> Option<&[f32]> {
        self.activity.as_deref()
    }

    /// Time span covered by frame `index`.
    pub fn frame_interval(&self, index: usize) -> TimeInterval {
        let start = index as f64 * self.hop_seconds;
        TimeInterval::new(start, start + self.window_seconds)
            .expect("positive hop and window yield a valid interval")
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], EmbeddingError> {
        let end = self.offset.checked_add(n).ok_or(EmbeddingError::LengthMismatch {
            expected: usize::MAX,
            found: self.bytes.len(),
        })?;
        if end > self.bytes.len() {
            return Err(EmbeddingError::LengthMismatch { expected: end, found: self.bytes.len() });
        }
        let slice = &self.bytes[self.offset..end];
        self.offset = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, EmbeddingError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4-byte slice")))
    }

    fn f64(&mut self) -> Result<f64, EmbeddingError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8-byte slice")))
    }

    fn f32_vec(&mut self, count: usize) -> Result<Vec<f32>, EmbeddingError> {
        let raw = self.take(count.checked_mul(4).ok_or(EmbeddingError::LengthMismatch {
            expected: usize::MAX,
            found: self.bytes.len(),
        })?)?;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect())
    }
}

/// Decodes one embedding container from bytes.
pub fn read_embeddings(bytes: &[u8]) -> Result<EmbeddingSequence, EmbeddingError> {
    let mut cur = Cursor { bytes, offset: 0 };

    let magic = cur.take(4)?;
    if magic != MAGIC {
        return Err(EmbeddingError::BadMagic { found: magic.try_into().expect("4-byte slice") });
    }
    let version = cur.u32()?;
    if version != FORMAT_VERSION {
        return Err(EmbeddingError::UnsupportedVersion { found: version });
    }

    let id_len = cur.u32()? as usize;
    let recording_id = std::str::from_utf8(cur.take(id_len)?)
        .map_err(|_| EmbeddingError::BadRecordingId)?
        .to_string();

    let dim = cur.u32()? as usize;
    if dim == 0 {
        return Err(EmbeddingError::ZeroDim);
    }
    let frame_count = cur.u32()? as usize;
    let hop_seconds = cur.f64()?;
    let window_seconds = cur.f64()?;
    let has_activity = cur.take(1)?[0] != 0;

    let value_count = frame_count
        .checked_mul(dim)
        .ok_or(EmbeddingError::LengthMismatch { expected: usize::MAX, found: bytes.len() })?;
    let frames = cur.f32_vec(value_count)?;
    let activity = if has_activity { Some(cur.f32_vec(frame_count)?) } else { None };

    if cur.offset != bytes.len() {
        return Err(EmbeddingError::LengthMismatch { expected: cur.offset, found: bytes.len() });
    }

    EmbeddingSequence::new(recording_id, dim, hop_seconds, window_seconds, frames, activity)
}

/// Encodes an embedding sequence into the container layout. Byte-exact
/// inverse of [`read_embeddings`].
pub fn write_embeddings(seq: &EmbeddingSequence) -> Vec<u8> {
    let frame_bytes = seq.frames.len() * 4;
    let activity_bytes = seq.activity.as_ref().map_or(0, |a| a.len() * 4);
    let mut out =
        Vec::with_capacity(4 + 4 + 4 + seq.recording_id.len() + 4 + 4 + 8 + 8 + 1 + frame_bytes + activity_bytes);

    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(seq.recording_id.len() as u32).to_le_bytes());
    out.extend_from_slice(seq.recording_id.as_bytes());
    out.extend_from_slice(&(seq.dim as u32).to_le_bytes());
    out.extend_from_slice(&(seq.frame_count() as u32).to_le_bytes());
    out.extend_from_slice(&seq.hop_seconds.to_le_bytes());
    out.extend_from_slice(&seq.window_seconds.to_le_bytes());
    out.push(u8::from(seq.activity.is_some()));
    for v in &seq.frames {
        out.extend_from_slice(&v.to_le_bytes());
    }
    if let Some(activity) = &seq.activity {
        for v in activity {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}
