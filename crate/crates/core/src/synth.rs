//! Deterministic audio scene generation: tones, voiced pulse trains,
//! white noise, a four-microphone classroom noise scene, and a fully
//! labelled synthetic lecture corpus written out as WAV files, per-lecture
//! manifests and a truth file.
//!
//! Every generator is a pure function of its arguments, the seed
//! included, so any corpus can be reproduced byte for byte. Target levels
//! are planted analytically: the per-harmonic and noise amplitudes are
//! solved from the A-weighted level equations rather than calibrated by
//! measurement, which makes the emitted truth labels exact by
//! construction.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audio_io::{AudioClip, Gender, Quadrant};
use crate::error::{Error, Result};
use crate::features::a_weight_power;
use crate::models::NoiseLabel;

/// Lowest fundamental accepted by [`gen_voiced`], in Hz.
pub const SPEECH_F0_MIN_HZ: f64 = 60.0;
/// Highest fundamental accepted by [`gen_voiced`], in Hz.
pub const SPEECH_F0_MAX_HZ: f64 = 400.0;
/// Harmonics above this frequency are not synthesized.
pub const VOICED_BAND_LIMIT_HZ: f64 = 4000.0;

/// Classroom width in meters (left-right as seen from the lectern).
pub const ROOM_WIDTH_M: f64 = 12.0;
/// Classroom depth in meters (front-back).
pub const ROOM_DEPTH_M: f64 = 10.0;
/// Duration of each microphone clip in a quadrant scene, in seconds.
pub const SCENE_SECONDS: f64 = 3.0;

fn check_amplitude(amp: f64) -> Result<()> {
    if !(amp.is_finite() && (0.0..=1.0).contains(&amp)) {
        return Err(Error::InvalidAmplitude(amp));
    }
    Ok(())
}

fn sample_count(dur_s: f64, sample_rate: u32) -> Result<usize> {
    if sample_rate == 0 {
        return Err(Error::InvalidSampleRate(sample_rate));
    }
    if !(dur_s.is_finite() && dur_s > 0.0) {
        return Err(Error::InvalidDuration(dur_s));
    }
    let n = (dur_s * sample_rate as f64).round();
    if n < 1.0 {
        return Err(Error::InvalidDuration(dur_s));
    }
    Ok(n as usize)
}

/// Encodes samples as a mono 16-bit PCM RIFF/WAVE byte stream.
///
/// Samples are quantized by rounding `s * 32768` and clamping to the
/// 16-bit range, the same scale the decoder divides by, so a write/read
/// round trip stays within one quantization step everywhere.
pub fn wav_bytes(samples: &[f64], sample_rate: u32) -> Vec<u8> {
    let data_len = samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in samples {
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

/// Writes samples to `path` as a mono 16-bit PCM WAV file.
pub fn write_wav(path: &Path, samples: &[f64], sample_rate: u32) -> Result<()> {
    fs::write(path, wav_bytes(samples, sample_rate)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Generates `amp * sin(2 pi freq t)`.
pub fn gen_tone(freq_hz: f64, dur_s: f64, amp: f64, sample_rate: u32) -> Result<AudioClip> {
    let n = sample_count(dur_s, sample_rate)?;
    check_amplitude(amp)?;
    let nyquist = sample_rate as f64 / 2.0;
    if !(freq_hz.is_finite() && freq_hz > 0.0 && freq_hz < nyquist) {
        return Err(Error::FrequencyOutOfRange {
            freq: freq_hz,
            nyquist,
        });
    }
    let step = 2.0 * PI * freq_hz / sample_rate as f64;
    let samples = (0..n).map(|t| amp * (step * t as f64).sin()).collect();
    AudioClip::new(samples, sample_rate, format!("tone_{freq_hz}hz"))
}

/// Number of harmonics of `f0` that stay below both
/// [`VOICED_BAND_LIMIT_HZ`] and the Nyquist frequency.
fn harmonic_count(f0: f64, sample_rate: u32) -> usize {
    let limit = VOICED_BAND_LIMIT_HZ.min(sample_rate as f64 / 2.0);
    let k = (limit / f0).ceil() - 1.0;
    if k < 1.0 {
        0
    } else {
        k as usize
    }
}

/// `sum_{j=1..k} sin(j*theta)/j` via the Chebyshev recurrence, one
/// `sin_cos` per sample instead of one per harmonic.
fn harmonic_sum(sin_t: f64, cos_t: f64, k: usize) -> f64 {
    let mut sum = sin_t;
    let mut prev = 0.0;
    let mut cur = sin_t;
    let two_cos = 2.0 * cos_t;
    for j in 2..=k {
        let next = two_cos * cur - prev;
        prev = cur;
        cur = next;
        sum += cur / j as f64;
    }
    sum
}

/// Generates a harmonic pulse train at fundamental `f0`: all harmonics
/// below 4 kHz with `1/k` amplitude roll-off, peak-normalized to `amp`.
///
/// The 1/k roll-off concentrates autocorrelation mass at the true period,
/// so pitch tracking recovers `f0` to within one lag.
pub fn gen_voiced(f0_hz: f64, dur_s: f64, amp: f64, sample_rate: u32) -> Result<AudioClip> {
    let n = sample_count(dur_s, sample_rate)?;
    check_amplitude(amp)?;
    if !(f0_hz.is_finite() && (SPEECH_F0_MIN_HZ..=SPEECH_F0_MAX_HZ).contains(&f0_hz)) {
        return Err(Error::PitchOutOfRange {
            f0: f0_hz,
            min: SPEECH_F0_MIN_HZ,
            max: SPEECH_F0_MAX_HZ,
        });
    }
    let k = harmonic_count(f0_hz, sample_rate);
    if k == 0 {
        return Err(Error::FrequencyOutOfRange {
            freq: f0_hz,
            nyquist: sample_rate as f64 / 2.0,
        });
    }
    let step = 2.0 * PI * f0_hz / sample_rate as f64;
    let mut samples: Vec<f64> = Vec::with_capacity(n);
    let mut peak = 0.0f64;
    for t in 0..n {
        let (s, c) = (step * t as f64).sin_cos();
        let v = harmonic_sum(s, c, k);
        peak = peak.max(v.abs());
        samples.push(v);
    }
    if peak > 0.0 {
        let scale = amp / peak;
        for s in &mut samples {
            *s *= scale;
        }
    }
    AudioClip::new(samples, sample_rate, format!("voiced_{f0_hz}hz"))
}

/// Generates seeded uniform white noise in `[-amp, amp)`.
pub fn gen_noise(amp: f64, dur_s: f64, sample_rate: u32, seed: u64) -> Result<AudioClip> {
    let n = sample_count(dur_s, sample_rate)?;
    check_amplitude(amp)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n).map(|_| amp * rng.random_range(-1.0..1.0)).collect();
    AudioClip::new(samples, sample_rate, format!("noise_seed{seed}"))
}

/// Per-harmonic amplitude scale for a `1/k` pulse train whose A-weighted
/// level reads `target_dba` under the given calibration offset.
///
/// The signal `scale * sum_k sin(2 pi k f0 t)/k` has mean square
/// `scale^2/2 * sum 1/k^2`, and each harmonic is weighted by the
/// A-curve power gain at its frequency, so the level is
/// `10 log10(scale^2 * sum g(k f0)/k^2) + offset`; this solves for
/// `scale`. Errors when the target would push the waveform past full
/// scale.
pub fn voiced_scale_for_dba(
    f0_hz: f64,
    harmonics: usize,
    target_dba: f64,
    calibration_offset_db: f64,
) -> Result<f64> {
    if !f0_hz.is_finite() || f0_hz <= 0.0 {
        return Err(Error::NegativeFrequency(f0_hz));
    }
    if !target_dba.is_finite() {
        return Err(Error::NonFinite("target_dba"));
    }
    if !calibration_offset_db.is_finite() {
        return Err(Error::NonFinite("calibration_offset_db"));
    }
    if harmonics == 0 {
        return Err(Error::FrequencyOutOfRange {
            freq: f0_hz,
            nyquist: VOICED_BAND_LIMIT_HZ,
        });
    }
    let mut weighted = 0.0;
    let mut peak_bound = 0.0;
    for k in 1..=harmonics {
        weighted += a_weight_power(k as f64 * f0_hz)? / (k * k) as f64;
        peak_bound += 1.0 / k as f64;
    }
    let scale = 10f64.powf((target_dba - calibration_offset_db) / 20.0) / weighted.sqrt();
    if scale * peak_bound > 1.0 {
        return Err(Error::TargetLevelUnreachable {
            target: target_dba,
            max: calibration_offset_db + 20.0 * (weighted.sqrt() / peak_bound).log10(),
        });
    }
    Ok(scale)
}

/// Mean A-weighting power gain over `[0, Nyquist]`, midpoint rule.
fn mean_a_weight_power(sample_rate: u32) -> Result<f64> {
    const GRID: usize = 4096;
    let nyquist = sample_rate as f64 / 2.0;
    let mut acc = 0.0;
    for i in 0..GRID {
        acc += a_weight_power((i as f64 + 0.5) * nyquist / GRID as f64)?;
    }
    Ok(acc / GRID as f64)
}

/// Amplitude for seeded uniform white noise whose A-weighted level reads
/// `target_dba` in expectation.
///
/// Uniform noise in `[-a, a)` has per-sample variance `a^2/3` spread
/// flat across frequency, so the level is `10 log10(2/3 a^2 gbar) +
/// offset` with `gbar` the band-average A-weighting power gain.
pub fn noise_amp_for_dba(
    target_dba: f64,
    sample_rate: u32,
    calibration_offset_db: f64,
) -> Result<f64> {
    if sample_rate == 0 {
        return Err(Error::InvalidSampleRate(sample_rate));
    }
    if !target_dba.is_finite() {
        return Err(Error::NonFinite("target_dba"));
    }
    if !calibration_offset_db.is_finite() {
        return Err(Error::NonFinite("calibration_offset_db"));
    }
    let gbar = mean_a_weight_power(sample_rate)?;
    let amp = (1.5 / gbar).sqrt() * 10f64.powf((target_dba - calibration_offset_db) / 20.0);
    if amp > 1.0 {
        return Err(Error::TargetLevelUnreachable {
            target: target_dba,
            max: calibration_offset_db + 10.0 * (2.0 * gbar / 3.0).log10(),
        });
    }
    Ok(amp)
}

/// The four virtual microphones, one per quadrant corner of the
/// 12 m x 10 m room, 0.5 m in from each corner. Front is the lectern
/// wall (y = 0), left is x = 0.
pub fn mic_positions() -> [(Quadrant, (f64, f64)); 4] {
    [
        (Quadrant::FrontLeft, (0.5, 0.5)),
        (Quadrant::FrontRight, (ROOM_WIDTH_M - 0.5, 0.5)),
        (Quadrant::BackLeft, (0.5, ROOM_DEPTH_M - 0.5)),
        (
            Quadrant::BackRight,
            (ROOM_WIDTH_M - 0.5, ROOM_DEPTH_M - 0.5),
        ),
    ]
}

/// One noise source recorded by the four quadrant microphones.
#[derive(Debug, Clone)]
pub struct QuadrantScenario {
    /// One clip per microphone, in [`Quadrant::ALL`] order.
    pub clips: Vec<(Quadrant, AudioClip)>,
    /// Planted source location in room coordinates (meters).
    pub source_position: (f64, f64),
    /// Quadrant containing the source; the localization ground truth.
    pub source_quadrant: Quadrant,
}

/// Simulates a white-noise source in the given quadrant, mixed to the
/// four microphones with 1/distance amplitude attenuation.
///
/// The source lands 1.0-2.5 m inward of its quadrant's microphone on
/// each axis, so that microphone is always the nearest one and no
/// attenuated copy exceeds full scale.
pub fn gen_quadrant_scenario(
    source_quadrant: Quadrant,
    source_amp: f64,
    sample_rate: u32,
    seed: u64,
) -> Result<QuadrantScenario> {
    check_amplitude(source_amp)?;
    let n = sample_count(SCENE_SECONDS, sample_rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mics = mic_positions();
    let &(_, mic) = mics.iter().find(|(q, _)| *q == source_quadrant).unwrap();
    let dx = rng.random_range(1.0..2.5);
    let dy = rng.random_range(1.0..2.5);
    let source = (
        if mic.0 < ROOM_WIDTH_M / 2.0 {
            mic.0 + dx
        } else {
            mic.0 - dx
        },
        if mic.1 < ROOM_DEPTH_M / 2.0 {
            mic.1 + dy
        } else {
            mic.1 - dy
        },
    );

    let src: Vec<f64> = (0..n)
        .map(|_| source_amp * rng.random_range(-1.0..1.0))
        .collect();
    let clips = mics
        .iter()
        .map(|&(q, m)| {
            let d = ((source.0 - m.0).powi(2) + (source.1 - m.1).powi(2)).sqrt();
            let gain = 1.0 / d;
            let samples = src.iter().map(|&s| s * gain).collect();
            Ok((
                q,
                AudioClip::new(samples, sample_rate, format!("mic_{}", q.as_str()))?,
            ))
        })
        .collect::<Result<_>>()?;

    Ok(QuadrantScenario {
        clips,
        source_position: source,
        source_quadrant,
    })
}

/// How instructor speech levels relate to the planted noise labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeechLevelPolicy {
    /// Quiet lectures get high speech levels, noisy lectures low ones:
    /// a corpus with a strong noise/speech-level association.
    CorrelatedWithNoise,
    /// Speech levels cycle through the full low/medium/high range
    /// regardless of the noise label.
    Independent,
}

/// Parameters of the synthetic lecture corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub lectures: usize,
    pub clips_per_lecture: usize,
    pub clip_seconds: f64,
    pub sample_rate: u32,
    pub seed: u64,
    /// Offset added to dBFS levels; targets below are in dBA under it.
    pub calibration_offset_db: f64,
    pub speech_policy: SpeechLevelPolicy,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            lectures: 30,
            clips_per_lecture: 20,
            clip_seconds: 10.0,
            sample_rate: 16000,
            seed: 7,
            calibration_offset_db: crate::features::DEFAULT_CALIBRATION_OFFSET_DB,
            speech_policy: SpeechLevelPolicy::CorrelatedWithNoise,
        }
    }
}

/// Construction plan for one clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipPlan {
    /// Noisy clips are student babble; quiet clips are instructor speech.
    pub noisy: bool,
    /// Planted babble level for noisy clips, dBA.
    pub babble_level_dba: Option<f64>,
    /// Seed for all per-clip jitter.
    pub seed: u64,
}

/// Construction plan for one lecture: everything about it except audio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LecturePlan {
    pub lecture_id: String,
    pub noisy: bool,
    pub gender: Gender,
    /// Instructor fundamental, Hz.
    pub voice_f0: f64,
    /// Planted instructor speech level, dBA.
    pub level_dba: f64,
    pub clips: Vec<ClipPlan>,
}

/// Ground truth for one lecture, emitted with the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LectureTruth {
    pub noise_label: NoiseLabel,
    pub gender: Gender,
    pub instructor_level_dba: f64,
    /// Per-clip labels in sequence order.
    pub clip_labels: Vec<NoiseLabel>,
}

/// Truth file contents: lecture id to its planted labels, ordered.
pub type CorpusTruth = BTreeMap<String, LectureTruth>;

/// Instructor speech levels for noisy lectures under the correlated
/// policy (all Low, below 55 dBA).
const LOW_LEVELS: [f64; 3] = [49.0, 51.0, 53.0];
/// Instructor speech levels for quiet lectures under the correlated
/// policy (all High, above 65 dBA).
const HIGH_LEVELS: [f64; 2] = [67.0, 69.0];
/// Level cycle under the independent policy: Low, Medium and High.
const ALL_LEVELS: [f64; 9] = [49.0, 51.0, 53.0, 57.0, 59.0, 61.0, 63.0, 67.0, 69.0];

/// Babble levels sit 6-18 dB from the instructor level in 3 dB steps:
/// far enough that babble clips never share the instructor's 2 dB
/// histogram bin, spread enough that no babble bin outgrows the
/// instructor's, and stepped above the level jitter so neighbouring
/// plants cannot drift into one bin together.
const BABBLE_OFFSETS_DB: [f64; 5] = [6.0, 9.0, 12.0, 15.0, 18.0];

fn babble_level(instructor_dba: f64, rank: usize) -> f64 {
    let offset = BABBLE_OFFSETS_DB[rank % BABBLE_OFFSETS_DB.len()];
    // Loud babble above a quiet instructor; below a loud one, keeping
    // three simultaneous voices clear of full scale.
    if instructor_dba <= 55.0 {
        instructor_dba + offset
    } else {
        instructor_dba - offset
    }
}

/// Lays out the corpus: noise and gender assignments, per-lecture voice
/// and level, per-clip labels and seeds. Deterministic in the config.
///
/// Half the lectures (rounded down) are noisy. In a noisy lecture 65% of
/// clips (at least a strict majority) are babble; a quiet lecture gets
/// 10% babble clips (rounded down). Noise and gender assignments are
/// shuffled independently of each other.
pub fn plan_corpus(config: &CorpusConfig) -> Result<Vec<LecturePlan>> {
    if config.sample_rate == 0 {
        return Err(Error::CorpusConfig("sample_rate must be positive".into()));
    }
    if !(config.clip_seconds.is_finite() && config.clip_seconds > 0.0) {
        return Err(Error::CorpusConfig(format!(
            "clip_seconds {} is not positive",
            config.clip_seconds
        )));
    }
    if !config.calibration_offset_db.is_finite() {
        return Err(Error::CorpusConfig(
            "calibration_offset_db must be finite".into(),
        ));
    }
    if config.lectures > 0 && config.clips_per_lecture == 0 {
        return Err(Error::CorpusConfig(
            "clips_per_lecture must be positive".into(),
        ));
    }

    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.lectures;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut master);
    let noisy_lectures: HashSet<usize> = order[..n / 2].iter().copied().collect();
    order.shuffle(&mut master);
    let male_lectures: HashSet<usize> = order[..n / 2].iter().copied().collect();

    let clips = config.clips_per_lecture;
    let mut noisy_rank = 0usize;
    let mut quiet_rank = 0usize;
    let mut plans = Vec::with_capacity(n);
    for l in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(master.random());
        let noisy = noisy_lectures.contains(&l);
        let gender = if male_lectures.contains(&l) {
            Gender::Male
        } else {
            Gender::Female
        };
        let voice_f0 = match gender {
            Gender::Male => rng.random_range(105.0..135.0),
            Gender::Female => rng.random_range(195.0..245.0),
        };
        let level_dba = match config.speech_policy {
            SpeechLevelPolicy::CorrelatedWithNoise => {
                if noisy {
                    let v = LOW_LEVELS[noisy_rank % LOW_LEVELS.len()];
                    noisy_rank += 1;
                    v
                } else {
                    let v = HIGH_LEVELS[quiet_rank % HIGH_LEVELS.len()];
                    quiet_rank += 1;
                    v
                }
            }
            SpeechLevelPolicy::Independent => ALL_LEVELS[l % ALL_LEVELS.len()],
        };

        let noisy_clip_count = if noisy {
            ((clips as f64 * 0.65).ceil() as usize).max(clips / 2 + 1)
        } else {
            (clips as f64 * 0.10).floor() as usize
        };
        let mut clip_order: Vec<usize> = (0..clips).collect();
        clip_order.shuffle(&mut rng);
        let noisy_clips: HashSet<usize> = clip_order[..noisy_clip_count.min(clips)]
            .iter()
            .copied()
            .collect();

        let mut babble_rank = 0usize;
        let clip_plans = (0..clips)
            .map(|c| {
                let clip_noisy = noisy_clips.contains(&c);
                let babble_level_dba = clip_noisy.then(|| {
                    let b = babble_level(level_dba, babble_rank);
                    babble_rank += 1;
                    b
                });
                ClipPlan {
                    noisy: clip_noisy,
                    babble_level_dba,
                    seed: rng.random(),
                }
            })
            .collect();

        plans.push(LecturePlan {
            lecture_id: format!("lecture_{l:03}"),
            noisy,
            gender,
            voice_f0,
            level_dba,
            clips: clip_plans,
        });
    }
    Ok(plans)
}

/// Instructor speech segment length, seconds.
const SEGMENT_SECONDS: f64 = 1.0;
/// Babble burst slot length, seconds.
const BURST_SECONDS: f64 = 0.7;
/// Probability that a babble voice speaks in a given slot.
const BURST_PROBABILITY: f64 = 0.8;
/// Number of simultaneous babble voices.
const BABBLE_VOICES: usize = 3;
/// Amplitude ramp at babble burst edges, samples.
const RAMP_SAMPLES: usize = 128;
/// Ambient noise floor under instructor speech, linear amplitude
/// (-60 dBFS).
const TEACHER_BED_AMP: f64 = 1e-3;
/// Babble noise bed sits this far below the babble level, dB.
const BABBLE_BED_DROP_DB: f64 = 8.0;
/// Per-segment fundamental jitter, as a fraction of the lecture f0.
const F0_JITTER: f64 = 0.03;
/// Whole-clip level jitter around the planted level, dB.
const CLIP_LEVEL_JITTER_DB: f64 = 0.3;
/// Per-segment level jitter around the clip level, dB.
const SEGMENT_LEVEL_JITTER_DB: f64 = 0.4;
/// Per-voice babble level jitter, dB.
const VOICE_LEVEL_JITTER_DB: f64 = 3.0;

/// Instructor speech: continuous-phase harmonic segments of about one
/// second, each with jittered fundamental and level, over a -60 dBFS
/// noise floor.
fn synth_teacher_clip(
    lecture: &LecturePlan,
    clip: &ClipPlan,
    config: &CorpusConfig,
) -> Result<Vec<f64>> {
    let rate = config.sample_rate;
    let n = sample_count(config.clip_seconds, rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(clip.seed);
    let clip_level =
        lecture.level_dba + rng.random_range(-CLIP_LEVEL_JITTER_DB..CLIP_LEVEL_JITTER_DB);
    // One harmonic count for every jittered fundamental keeps all
    // segments in band.
    let k = harmonic_count(lecture.voice_f0 * (1.0 + F0_JITTER), rate);
    if k == 0 {
        return Err(Error::FrequencyOutOfRange {
            freq: lecture.voice_f0,
            nyquist: rate as f64 / 2.0,
        });
    }
    let seg_len = sample_count(SEGMENT_SECONDS.min(config.clip_seconds), rate)?;

    let mut out = vec![0.0; n];
    let mut theta = 0.0f64;
    let mut start = 0;
    while start < n {
        let end = (start + seg_len).min(n);
        let f0 = lecture.voice_f0 * (1.0 + rng.random_range(-F0_JITTER..F0_JITTER));
        let level =
            clip_level + rng.random_range(-SEGMENT_LEVEL_JITTER_DB..SEGMENT_LEVEL_JITTER_DB);
        let scale = voiced_scale_for_dba(f0, k, level, config.calibration_offset_db)?;
        let step = 2.0 * PI * f0 / rate as f64;
        for s in &mut out[start..end] {
            let (sin_t, cos_t) = theta.sin_cos();
            *s = scale * harmonic_sum(sin_t, cos_t, k);
            theta += step;
            if theta > 2.0 * PI {
                theta -= 2.0 * PI;
            }
        }
        start = end;
    }
    for s in &mut out {
        *s += TEACHER_BED_AMP * rng.random_range(-1.0..1.0);
    }
    Ok(out)
}

/// Student babble: three voices firing bursts in 0.7 s slots with
/// ramped edges, over a noise bed 8 dB below the babble level.
fn synth_babble_clip(clip: &ClipPlan, config: &CorpusConfig) -> Result<Vec<f64>> {
    let rate = config.sample_rate;
    let n = sample_count(config.clip_seconds, rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(clip.seed);
    let babble_dba = clip
        .babble_level_dba
        .ok_or_else(|| Error::CorpusConfig("noisy clip plan carries no babble level".into()))?;
    let per_voice_target = babble_dba - 10.0 * (BABBLE_VOICES as f64).log10();
    let slot_len = sample_count(BURST_SECONDS.min(config.clip_seconds), rate)?;

    let mut out = vec![0.0; n];
    for _voice in 0..BABBLE_VOICES {
        let f0_base = rng.random_range(90.0..260.0);
        let level =
            per_voice_target + rng.random_range(-VOICE_LEVEL_JITTER_DB..VOICE_LEVEL_JITTER_DB);
        let k = harmonic_count(f0_base * (1.0 + F0_JITTER), rate);
        if k == 0 {
            return Err(Error::FrequencyOutOfRange {
                freq: f0_base,
                nyquist: rate as f64 / 2.0,
            });
        }
        let mut theta = 0.0f64;
        let mut amp = 0.0f64;
        let mut start = 0;
        while start < n {
            let end = (start + slot_len).min(n);
            let active = rng.random_range(0.0..1.0) < BURST_PROBABILITY;
            let f0 = f0_base * (1.0 + rng.random_range(-F0_JITTER..F0_JITTER));
            let target_amp = if active {
                voiced_scale_for_dba(f0, k, level, config.calibration_offset_db)?
            } else {
                0.0
            };
            let step = 2.0 * PI * f0 / rate as f64;
            let ramp = (target_amp - amp) / RAMP_SAMPLES as f64;
            for (i, s) in out[start..end].iter_mut().enumerate() {
                if i < RAMP_SAMPLES {
                    amp += ramp;
                } else {
                    amp = target_amp;
                }
                let (sin_t, cos_t) = theta.sin_cos();
                *s += amp * harmonic_sum(sin_t, cos_t, k);
                theta += step;
                if theta > 2.0 * PI {
                    theta -= 2.0 * PI;
                }
            }
            start = end;
        }
    }
    let bed = noise_amp_for_dba(
        babble_dba - BABBLE_BED_DROP_DB,
        rate,
        config.calibration_offset_db,
    )?;
    for s in &mut out {
        *s += bed * rng.random_range(-1.0..1.0);
    }
    Ok(out)
}

/// Synthesizes one clip of the corpus from its plan.
pub fn synth_clip(
    lecture: &LecturePlan,
    clip: &ClipPlan,
    config: &CorpusConfig,
) -> Result<Vec<f64>> {
    if clip.noisy {
        synth_babble_clip(clip, config)
    } else {
        synth_teacher_clip(lecture, clip, config)
    }
}

fn manifest_json(plan: &LecturePlan) -> String {
    let clips: Vec<serde_json::Value> = (0..plan.clips.len())
        .map(|c| {
            serde_json::json!({
                "path": format!("clip_{c:03}.wav"),
                "position": "unspecified",
                "sequence_index": c,
            })
        })
        .collect();
    let manifest = serde_json::json!({
        "lecture_id": plan.lecture_id,
        "instructor_label": plan.gender,
        "clips": clips,
    });
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    text
}

fn truth_from_plans(plans: &[LecturePlan]) -> CorpusTruth {
    plans
        .iter()
        .map(|p| {
            (
                p.lecture_id.clone(),
                LectureTruth {
                    noise_label: if p.noisy {
                        NoiseLabel::Noisy
                    } else {
                        NoiseLabel::Quiet
                    },
                    gender: p.gender,
                    instructor_level_dba: p.level_dba,
                    clip_labels: p
                        .clips
                        .iter()
                        .map(|c| {
                            if c.noisy {
                                NoiseLabel::Noisy
                            } else {
                                NoiseLabel::Quiet
                            }
                        })
                        .collect(),
                },
            )
        })
        .collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Generates the full corpus under `dir`: one subdirectory per lecture
/// holding `clip_NNN.wav` files and a `manifest.json`, plus a
/// `truth.json` at the top with every planted label. Returns the truth.
///
/// The same config always produces a byte-identical directory tree.
pub fn gen_lecture_corpus(config: &CorpusConfig, dir: &Path) -> Result<CorpusTruth> {
    let plans = plan_corpus(config)?;
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;

    for plan in &plans {
        let lecture_dir = dir.join(&plan.lecture_id);
        fs::create_dir_all(&lecture_dir).map_err(|source| Error::Io {
            path: lecture_dir.clone(),
            source,
        })?;
        for (c, clip_plan) in plan.clips.iter().enumerate() {
            let samples = synth_clip(plan, clip_plan, config)?;
            write_wav(
                &lecture_dir.join(format!("clip_{c:03}.wav")),
                &samples,
                config.sample_rate,
            )?;
        }
        write_text(&lecture_dir.join("manifest.json"), &manifest_json(plan))?;
    }

    let truth = truth_from_plans(&plans);
    let mut text = serde_json::to_string_pretty(&truth).expect("truth serializes");
    text.push('\n');
    write_text(&dir.join("truth.json"), &text)?;
    Ok(truth)
}
