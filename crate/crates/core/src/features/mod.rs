//! Acoustic feature extraction: A-weighted sound pressure levels, silence
//! detection, pitch, and the combined voice feature vectors used for
//! gender classification.
//!
//! All level math runs on normalized samples, so "dBA" values are relative
//! to full scale plus a calibration offset that maps digital level to
//! sound pressure level. With the default offset of 94 dB a full-scale
//! 1 kHz sine reads 94 dBA.

mod rasta;

pub use rasta::{bark_to_hz, hz_to_bark, rasta_plp};

use serde::{Deserialize, Serialize};

use crate::audio_io::AudioClip;
use crate::dsp;
use crate::error::{Error, Result};

/// Default analysis frame length in milliseconds.
pub const DEFAULT_FRAME_LEN_MS: f64 = 32.0;
/// Default fractional overlap between consecutive frames.
pub const DEFAULT_OVERLAP: f64 = 0.5;
/// Default mapping from full-scale digital level to dBA.
pub const DEFAULT_CALIBRATION_OFFSET_DB: f64 = 94.0;
/// Silent frames report this level relative to the calibration offset.
pub const SILENCE_FLOOR_DB: f64 = -120.0;
/// A-weighting gain reported for frequencies it drives to nothing.
pub const A_WEIGHT_FLOOR_DB: f64 = -240.0;
/// Frames more than this far below the clip's 95th percentile are silent.
pub const DEFAULT_SILENCE_THRESHOLD_DB: f64 = 30.0;
/// Frames below this mean-square level (dBFS) are silent regardless of
/// the rest of the clip; it sits at the 16-bit quantization floor.
pub const ABSOLUTE_SILENCE_DBFS: f64 = -90.0;
/// Pitch search range defaults, in Hz.
pub const DEFAULT_FMIN_HZ: f64 = 60.0;
pub const DEFAULT_FMAX_HZ: f64 = 400.0;
/// Frames whose normalized autocorrelation peak falls below this are
/// unvoiced.
pub const VOICING_THRESHOLD: f64 = 0.45;
/// Median window applied to voiced runs of the pitch track.
pub const PITCH_MEDIAN_WINDOW: usize = 5;
/// Linear prediction order of the voice spectrum envelope.
pub const PLP_ORDER: usize = 10;
/// Dimension of the gender feature vector: pitch plus `PLP_ORDER + 1`
/// cepstral coefficients.
pub const FEATURE_DIM: usize = 12;

/// Frame length and hop in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameParams {
    pub frame_len: usize,
    pub hop: usize,
}

impl FrameParams {
    pub fn new(frame_len: usize, hop: usize) -> Result<Self> {
        if frame_len < 2 || hop == 0 || hop > frame_len {
            return Err(Error::InvalidFraming { frame_len, hop });
        }
        Ok(Self { frame_len, hop })
    }

    /// Converts a frame length in milliseconds and a fractional overlap
    /// in `[0, 1)` to sample counts, rounding to the nearest sample.
    pub fn from_ms(sample_rate: u32, frame_len_ms: f64, overlap: f64) -> Result<Self> {
        if !(frame_len_ms.is_finite() && frame_len_ms > 0.0) {
            return Err(Error::NonFinite("frame_len_ms"));
        }
        if !(overlap.is_finite() && (0.0..1.0).contains(&overlap)) {
            return Err(Error::NonFinite("overlap"));
        }
        let frame_len = (frame_len_ms / 1000.0 * sample_rate as f64).round() as usize;
        let hop = ((frame_len as f64) * (1.0 - overlap)).round().max(1.0) as usize;
        FrameParams::new(frame_len, hop)
    }
}

/// IEC A-weighting gain in dB at `freq_hz`.
///
/// Computed from the analog magnitude response
/// `R_A(f) = 12194^2 f^4 / ((f^2+20.6^2) sqrt((f^2+107.7^2)(f^2+737.9^2)) (f^2+12194^2))`
/// normalized with +2.00 dB so the gain at 1 kHz is 0 dB. The result is
/// floored at [`A_WEIGHT_FLOOR_DB`], which is only reached very near 0 Hz.
pub fn a_weight_gain(freq_hz: f64) -> Result<f64> {
    if !freq_hz.is_finite() {
        return Err(Error::NonFinite("freq_hz"));
    }
    if freq_hz < 0.0 {
        return Err(Error::NegativeFrequency(freq_hz));
    }
    let f2 = freq_hz * freq_hz;
    let num = 12194.0f64.powi(2) * f2 * f2;
    let den = (f2 + 20.6f64.powi(2))
        * ((f2 + 107.7f64.powi(2)) * (f2 + 737.9f64.powi(2))).sqrt()
        * (f2 + 12194.0f64.powi(2));
    let gain = 20.0 * (num / den).log10() + 2.00;
    if gain.is_finite() {
        Ok(gain.max(A_WEIGHT_FLOOR_DB))
    } else {
        Ok(A_WEIGHT_FLOOR_DB)
    }
}

/// A-weighting as a linear power gain, `10^(gain_db / 10)`.
pub fn a_weight_power(freq_hz: f64) -> Result<f64> {
    Ok(10f64.powf(a_weight_gain(freq_hz)? / 10.0))
}

/// Per-frame A-weighted sound pressure levels of one clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplSeries {
    /// One dBA level per frame.
    pub levels: Vec<f64>,
    pub params: FrameParams,
    pub sample_rate: u32,
    pub calibration_offset_db: f64,
}

impl SplSeries {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Start time of frame `i` in seconds.
    pub fn start_time(&self, i: usize) -> f64 {
        (i * self.params.hop) as f64 / self.sample_rate as f64
    }
}

/// Computes the A-weighted level of each frame.
///
/// Frames are Hamming-windowed and taken to the one-sided power spectrum;
/// each bin is scaled by the A-weighting power gain at its center
/// frequency and the weighted mean square is normalized by the window
/// energy, so a full-scale sine at 1 kHz reads `calibration_offset_db`.
/// Levels are floored at [`SILENCE_FLOOR_DB`] plus the offset.
pub fn spl_series(
    clip: &AudioClip,
    params: FrameParams,
    calibration_offset_db: f64,
) -> Result<SplSeries> {
    if !calibration_offset_db.is_finite() {
        return Err(Error::NonFinite("calibration_offset_db"));
    }
    let frames = dsp::frame_signal(clip, params.frame_len, params.hop)?;
    let n = params.frame_len;
    let window = dsp::hamming_window(n)?;
    let window_energy: f64 = window.iter().map(|w| w * w).sum();
    let norm = 0.5 * n as f64 * window_energy;
    let bin_hz = clip.sample_rate as f64 / n as f64;
    let gains: Vec<f64> = (0..=n / 2)
        .map(|b| a_weight_power(b as f64 * bin_hz))
        .collect::<Result<_>>()?;

    let mut levels = Vec::with_capacity(frames.len());
    let mut windowed = vec![0.0; n];
    for frame in &frames.frames {
        for ((y, &x), &w) in windowed.iter_mut().zip(frame).zip(&window) {
            *y = x * w;
        }
        let spectrum = dsp::power_spectrum(&windowed)?;
        let mut acc = 0.0;
        for (b, (&p, &g)) in spectrum.iter().zip(&gains).enumerate() {
            let one_sided = b == 0 || (n.is_multiple_of(2) && b == n / 2);
            acc += if one_sided { p * g } else { 2.0 * p * g };
        }
        let ratio = (acc / norm).max(10f64.powf(SILENCE_FLOOR_DB / 10.0));
        levels.push(10.0 * ratio.log10() + calibration_offset_db);
    }

    Ok(SplSeries {
        levels,
        params,
        sample_rate: clip.sample_rate,
        calibration_offset_db,
    })
}

/// Flags frames that are effectively silent.
///
/// A frame is silent when its mean-square level falls more than
/// `threshold_db` below the 95th percentile (nearest-rank) frame level of
/// the clip, or below [`ABSOLUTE_SILENCE_DBFS`] outright; the absolute
/// floor makes a clip of digital silence entirely silent.
pub fn silence_mask(clip: &AudioClip, params: FrameParams, threshold_db: f64) -> Result<Vec<bool>> {
    if !(threshold_db.is_finite() && threshold_db > 0.0) {
        return Err(Error::NonFinite("threshold_db"));
    }
    let frames = dsp::frame_signal(clip, params.frame_len, params.hop)?;
    let levels: Vec<f64> = frames
        .frames
        .iter()
        .map(|f| {
            let ms = f.iter().map(|x| x * x).sum::<f64>() / f.len() as f64;
            10.0 * ms.max(1e-20).log10()
        })
        .collect();
    let mut sorted = levels.clone();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = (0.95 * sorted.len() as f64).ceil() as usize;
    let p95 = sorted[rank.saturating_sub(1)];
    let cut = (p95 - threshold_db).max(ABSOLUTE_SILENCE_DBFS);
    Ok(levels.iter().map(|&l| l < cut).collect())
}

/// Pitch estimate for a single frame by the normalized autocorrelation
/// peak.
///
/// Searches lags `ceil(rate/fmax) ..= min(floor(rate/fmin), len-1)`;
/// ties take the lower lag. Returns `None` (unvoiced) when the peak falls
/// below [`VOICING_THRESHOLD`], the frame is degenerate, or the search
/// range is empty.
pub fn estimate_pitch(frame: &[f64], sample_rate: u32, fmin_hz: f64, fmax_hz: f64) -> Option<f64> {
    if frame.len() < 2 || sample_rate == 0 {
        return None;
    }
    if !(fmin_hz.is_finite() && fmax_hz.is_finite() && 0.0 < fmin_hz && fmin_hz < fmax_hz) {
        return None;
    }
    let rate = sample_rate as f64;
    let lag_min = ((rate / fmax_hz).ceil() as usize).max(1);
    let lag_max = ((rate / fmin_hz).floor() as usize).min(frame.len() - 1);
    if lag_min > lag_max {
        return None;
    }
    let r = dsp::autocorrelation(frame, lag_max).ok()?;
    if r[0] <= 0.0 {
        return None;
    }
    let mut best_lag = lag_min;
    let mut best = r[lag_min] / r[0];
    for lag in lag_min + 1..=lag_max {
        let rho = r[lag] / r[0];
        if rho > best {
            best = rho;
            best_lag = lag;
        }
    }
    if best < VOICING_THRESHOLD {
        return None;
    }
    Some(rate / best_lag as f64)
}

/// Per-frame pitch of a clip; `None` marks unvoiced frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchTrack {
    pub frames: Vec<Option<f64>>,
    pub params: FrameParams,
    pub sample_rate: u32,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
}

impl PitchTrack {
    pub fn voiced_fraction(&self) -> f64 {
        if self.frames.is_empty() {
            return 0.0;
        }
        self.frames.iter().filter(|p| p.is_some()).count() as f64 / self.frames.len() as f64
    }
}

/// Applies a median filter to each maximal run of voiced frames, leaving
/// unvoiced gaps in place.
fn median_smooth_runs(track: &[Option<f64>], window: usize) -> Result<Vec<Option<f64>>> {
    let mut out = vec![None; track.len()];
    let mut start = 0;
    while start < track.len() {
        if track[start].is_none() {
            start += 1;
            continue;
        }
        let mut end = start;
        while end < track.len() && track[end].is_some() {
            end += 1;
        }
        let run: Vec<f64> = track[start..end].iter().map(|p| p.unwrap()).collect();
        for (i, v) in dsp::median_filter(&run, window)?.into_iter().enumerate() {
            out[start + i] = Some(v);
        }
        start = end;
    }
    Ok(out)
}

/// Tracks pitch across a clip in the default 60-400 Hz speech range and
/// median-smooths each voiced run with a window of
/// [`PITCH_MEDIAN_WINDOW`] frames.
pub fn pitch_track(clip: &AudioClip, params: FrameParams) -> Result<PitchTrack> {
    let frames = dsp::frame_signal(clip, params.frame_len, params.hop)?;
    let raw: Vec<Option<f64>> = frames
        .frames
        .iter()
        .map(|f| estimate_pitch(f, clip.sample_rate, DEFAULT_FMIN_HZ, DEFAULT_FMAX_HZ))
        .collect();
    Ok(PitchTrack {
        frames: median_smooth_runs(&raw, PITCH_MEDIAN_WINDOW)?,
        params,
        sample_rate: clip.sample_rate,
        fmin_hz: DEFAULT_FMIN_HZ,
        fmax_hz: DEFAULT_FMAX_HZ,
    })
}

/// Voice feature vector: pitch followed by cepstral coefficients
/// `c0..c10` of the RASTA-filtered perceptual linear prediction model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn new(values: [f64; FEATURE_DIM]) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature);
        }
        Ok(Self(values))
    }

    pub fn pitch(&self) -> f64 {
        self.0[0]
    }

    pub fn cepstrum(&self) -> &[f64] {
        &self.0[1..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Extracts one [`FeatureVector`] per voiced, non-silent frame, paired
/// with the frame index it came from.
///
/// Pitch, silence and spectral envelope all use the same framing, so a
/// clip with no voiced frames yields an empty sequence.
pub fn gender_features(
    clip: &AudioClip,
    params: FrameParams,
) -> Result<Vec<(usize, FeatureVector)>> {
    let pitch = pitch_track(clip, params)?;
    let silent = silence_mask(clip, params, DEFAULT_SILENCE_THRESHOLD_DB)?;
    let cepstra = rasta_plp(clip, params, PLP_ORDER)?;
    debug_assert_eq!(pitch.frames.len(), silent.len());
    debug_assert_eq!(pitch.frames.len(), cepstra.len());

    let mut out = Vec::new();
    for (i, maybe_pitch) in pitch.frames.iter().enumerate() {
        let f0 = match maybe_pitch {
            Some(f0) if !silent[i] => *f0,
            _ => continue,
        };
        let mut values = [0.0; FEATURE_DIM];
        values[0] = f0;
        values[1..].copy_from_slice(&cepstra[i]);
        out.push((i, FeatureVector::new(values)?));
    }
    Ok(out)
}
