//! Audio decoding and corpus manifests.
//!
//! Decodes PCM RIFF/WAVE files (8/16-bit, mono or stereo) into mono
//! [`AudioClip`]s normalized to [-1, 1], and loads per-lecture JSON
//! manifests that tie clip files to recording positions and an optional
//! instructor gender label. Every downstream module consumes these types.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mono audio, samples normalized to [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    /// Normalized sample values.
    pub samples: Vec<f64>,
    /// Samples per second.
    pub sample_rate: u32,
    /// Opaque identifier, typically the source path.
    pub id: String,
}

impl AudioClip {
    /// Builds a clip, rejecting empty sample buffers and zero rates.
    pub fn new(samples: Vec<f64>, sample_rate: u32, id: impl Into<String>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyClip);
        }
        if sample_rate == 0 {
            return Err(Error::InvalidSampleRate(sample_rate));
        }
        Ok(Self {
            samples,
            sample_rate,
            id: id.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Room quadrant as seen from the lectern: front is the lectern side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrant {
    FrontLeft,
    FrontRight,
    BackLeft,
    BackRight,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [
        Quadrant::FrontLeft,
        Quadrant::FrontRight,
        Quadrant::BackLeft,
        Quadrant::BackRight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Quadrant::FrontLeft => "front_left",
            Quadrant::FrontRight => "front_right",
            Quadrant::BackLeft => "back_left",
            Quadrant::BackRight => "back_right",
        }
    }
}

/// Recording position of a clip: one of the four quadrants, or unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Position {
    Quadrant(Quadrant),
    Unspecified,
}

impl Position {
    pub fn parse(label: &str) -> Result<Self> {
        match label {
            "front_left" => Ok(Position::Quadrant(Quadrant::FrontLeft)),
            "front_right" => Ok(Position::Quadrant(Quadrant::FrontRight)),
            "back_left" => Ok(Position::Quadrant(Quadrant::BackLeft)),
            "back_right" => Ok(Position::Quadrant(Quadrant::BackRight)),
            "unspecified" => Ok(Position::Unspecified),
            other => Err(Error::UnknownPosition(other.to_string())),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Position::Quadrant(q) => q.as_str(),
            Position::Unspecified => "unspecified",
        }
    }
}

impl From<Position> for String {
    fn from(p: Position) -> String {
        p.as_str().to_string()
    }
}

impl TryFrom<String> for Position {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        Position::parse(&s).map_err(|e| e.to_string())
    }
}

/// Speaker gender label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub fn parse(label: &str) -> Result<Self> {
        match label {
            "male" => Ok(Gender::Male),
            "female" => Ok(Gender::Female),
            other => Err(Error::UnknownGenderLabel(other.to_string())),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }
}

/// Where and when within a lecture a clip was recorded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipMetadata {
    pub lecture_id: String,
    pub position: Position,
    pub sequence_index: u32,
}

/// One clip reference inside a lecture manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// Path resolved against the manifest's directory.
    pub path: PathBuf,
    /// Path string exactly as written in the manifest.
    pub raw_path: String,
    pub position: Position,
    pub sequence_index: u32,
}

/// A lecture's clip listing, ordered by sequence index.
#[derive(Debug, Clone, PartialEq)]
pub struct LectureManifest {
    pub lecture_id: String,
    pub instructor_label: Option<Gender>,
    pub entries: Vec<ManifestEntry>,
}

impl LectureManifest {
    pub fn metadata(&self, entry: &ManifestEntry) -> ClipMetadata {
        ClipMetadata {
            lecture_id: self.lecture_id.clone(),
            position: entry.position,
            sequence_index: entry.sequence_index,
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io {
            path: path.to_path_buf(),
            source: e,
        },
    })
}

/// Reads a PCM WAV file into a mono clip.
///
/// Stereo channels are averaged. 16-bit samples are scaled by 1/32768 and
/// 8-bit (unsigned) samples by 1/128 after removing the 128 offset; the
/// result is clamped to [-1, 1]. The clip id is the path as given.
pub fn load_wav(path: &Path) -> Result<AudioClip> {
    let bytes = read_file(path)?;
    decode_wav(&bytes, &path.display().to_string()).map_err(|e| match e {
        Error::NotWav(_) => Error::NotWav(path.to_path_buf()),
        other => other,
    })
}

struct FmtChunk {
    format_tag: u16,
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
}

/// Decodes in-memory WAV bytes; `id` becomes the clip id.
pub fn decode_wav(bytes: &[u8], id: &str) -> Result<AudioClip> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::NotWav(PathBuf::from(id)));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12usize;
    while pos + 8 <= bytes.len() {
        let chunk_id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        let present = bytes.len().saturating_sub(body_start);
        if size > present {
            return Err(Error::TruncatedData {
                declared: size,
                present,
            });
        }
        let body = &bytes[body_start..body_start + size];
        match chunk_id {
            b"fmt " => {
                if size < 16 {
                    return Err(Error::TruncatedData {
                        declared: 16,
                        present: size,
                    });
                }
                fmt = Some(FmtChunk {
                    format_tag: u16::from_le_bytes(body[0..2].try_into().unwrap()),
                    channels: u16::from_le_bytes(body[2..4].try_into().unwrap()),
                    sample_rate: u32::from_le_bytes(body[4..8].try_into().unwrap()),
                    bits_per_sample: u16::from_le_bytes(body[14..16].try_into().unwrap()),
                });
            }
            b"data" => {
                data = Some(body);
            }
            _ => {}
        }
        pos = body_start + size + (size & 1);
    }

    let fmt = fmt.ok_or(Error::MissingChunk("fmt "))?;
    let data = data.ok_or(Error::MissingChunk("data"))?;

    if fmt.format_tag != 1 {
        return Err(Error::NonPcmEncoding(fmt.format_tag));
    }
    if !(1..=2).contains(&fmt.channels) {
        return Err(Error::UnsupportedChannels(fmt.channels));
    }
    if fmt.bits_per_sample != 8 && fmt.bits_per_sample != 16 {
        return Err(Error::UnsupportedBitDepth(fmt.bits_per_sample));
    }
    if fmt.sample_rate == 0 {
        return Err(Error::InvalidSampleRate(fmt.sample_rate));
    }

    let bytes_per_sample = (fmt.bits_per_sample / 8) as usize;
    let block = bytes_per_sample * fmt.channels as usize;
    if data.len() % block != 0 {
        return Err(Error::TruncatedData {
            declared: data.len(),
            present: data.len() - data.len() % block,
        });
    }

    let channels = fmt.channels as usize;
    let mut samples = Vec::with_capacity(data.len() / block);
    for frame in data.chunks_exact(block) {
        let mut acc = 0.0;
        for ch in 0..channels {
            let value = match fmt.bits_per_sample {
                8 => (frame[ch] as f64 - 128.0) / 128.0,
                _ => {
                    let lo = frame[2 * ch];
                    let hi = frame[2 * ch + 1];
                    i16::from_le_bytes([lo, hi]) as f64 / 32768.0
                }
            };
            acc += value;
        }
        samples.push((acc / channels as f64).clamp(-1.0, 1.0));
    }

    if samples.is_empty() {
        return Err(Error::EmptyClip);
    }

    Ok(AudioClip {
        samples,
        sample_rate: fmt.sample_rate,
        id: id.to_string(),
    })
}

#[derive(Deserialize)]
struct RawManifest {
    lecture_id: String,
    #[serde(default)]
    instructor_label: Option<String>,
    clips: Vec<RawClip>,
}

#[derive(Deserialize)]
struct RawClip {
    path: String,
    position: String,
    sequence_index: u32,
}

/// Loads and validates a lecture manifest.
///
/// Clip paths are resolved relative to the manifest's directory. Entries
/// are returned sorted by `sequence_index`; duplicate indices or paths are
/// rejected.
pub fn load_manifest(path: &Path) -> Result<LectureManifest> {
    let bytes = read_file(path)?;
    let raw: RawManifest =
        serde_json::from_slice(&bytes).map_err(|e| Error::ManifestParse(e.to_string()))?;

    if raw.lecture_id.is_empty() {
        return Err(Error::ManifestParse("lecture_id is empty".to_string()));
    }
    if raw.clips.is_empty() {
        return Err(Error::EmptyManifest);
    }

    let instructor_label = match raw.instructor_label {
        Some(label) => Some(Gender::parse(&label)?),
        None => None,
    };

    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut seen_paths = HashSet::new();
    let mut seen_indices = HashSet::new();
    let mut entries = Vec::with_capacity(raw.clips.len());
    for clip in raw.clips {
        if !seen_paths.insert(clip.path.clone()) {
            return Err(Error::DuplicateClipPath(clip.path));
        }
        if !seen_indices.insert(clip.sequence_index) {
            return Err(Error::DuplicateSequenceIndex(clip.sequence_index));
        }
        entries.push(ManifestEntry {
            path: base.join(&clip.path),
            raw_path: clip.path,
            position: Position::parse(&clip.position)?,
            sequence_index: clip.sequence_index,
        });
    }
    entries.sort_by_key(|e| e.sequence_index);

    Ok(LectureManifest {
        lecture_id: raw.lecture_id,
        instructor_label,
        entries,
    })
}
