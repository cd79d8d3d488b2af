//! Acoustic quality analysis of recorded lectures.
//!
//! The crate takes mono lecture recordings (or generates synthetic ones),
//! extracts A-weighted sound pressure levels and voice features, classifies
//! clips as noisy or quiet and instructors as male or female, locates the
//! loudest quadrant of a room from four corner microphones, and tests
//! whether noise conditions associate with speech level or instructor
//! gender across a corpus.
//!
//! Modules are layered bottom-up:
//!
//! * [`audio_io`]: WAV decoding, clip and manifest types
//! * [`dsp`]: framing, windows, spectra, autocorrelation, median filter
//! * [`features`]: A-weighted SPL, silence, pitch, RASTA-PLP voice vectors
//! * [`models`]: GMM gender classifier, k-NN noise classifier
//! * [`stats`]: normal fits, histograms, chi-square association tests
//! * [`pipeline`]: clip and lecture verdicts, localization, correlation
//! * [`synth`]: deterministic synthetic clips and labelled corpora

pub mod audio_io;
pub mod dsp;
pub mod error;
pub mod features;
pub mod models;
pub mod pipeline;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
