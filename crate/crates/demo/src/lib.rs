//! Browser bindings for the lecture acoustics toolkit.
//!
//! Every function takes plain numbers or strings and returns a JSON
//! string, so the page needs nothing beyond the wasm-bindgen shims.
//! Failures come back as `{"error": "..."}` instead of throwing.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use aula_core::audio_io::{AudioClip, Quadrant};
use aula_core::features::{a_weight_gain, pitch_track, spl_series};
use aula_core::pipeline::{localize_noise, AnalysisConfig};
use aula_core::stats::normal_fit;
use aula_core::synth::{
    gen_noise, gen_quadrant_scenario, gen_voiced, mic_positions, ROOM_DEPTH_M, ROOM_WIDTH_M,
};

const SAMPLE_RATE: u32 = 16000;
const MIX_SECONDS: f64 = 1.5;

fn error_json(message: &str) -> String {
    serde_json::to_string(&serde_json::json!({ "error": message })).unwrap()
}

fn render<T: Serialize>(result: aula_core::Result<T>) -> String {
    match result {
        Ok(value) => {
            serde_json::to_string(&value).unwrap_or_else(|err| error_json(&err.to_string()))
        }
        Err(err) => error_json(&err.to_string()),
    }
}

#[derive(Serialize)]
struct CurvePoint {
    freq_hz: f64,
    gain_db: f64,
}

/// A-weighting gain sampled at `points` log-spaced frequencies from
/// 20 Hz to 20 kHz.
#[wasm_bindgen]
pub fn weighting_curve(points: u32) -> String {
    if points < 2 {
        return error_json("need at least 2 points");
    }
    let span = (20_000.0f64 / 20.0).ln();
    let curve: aula_core::Result<Vec<CurvePoint>> = (0..points)
        .map(|i| {
            let freq_hz = 20.0 * (span * i as f64 / (points - 1) as f64).exp();
            Ok(CurvePoint {
                freq_hz,
                gain_db: a_weight_gain(freq_hz)?,
            })
        })
        .collect();
    render(curve)
}

#[derive(Serialize)]
struct MixReport {
    mean_dba: f64,
    std_dba: f64,
    voiced_fraction: f64,
    frame_hop_s: f64,
    levels_dba: Vec<f64>,
    pitch_hz: Vec<Option<f64>>,
}

fn analyze_mix_impl(
    f0_hz: f64,
    voice_amp: f64,
    noise_amp: f64,
    seed: u32,
) -> aula_core::Result<MixReport> {
    let voice = gen_voiced(f0_hz, MIX_SECONDS, voice_amp, SAMPLE_RATE)?;
    let noise = gen_noise(noise_amp, MIX_SECONDS, SAMPLE_RATE, seed as u64)?;
    let samples = voice
        .samples
        .iter()
        .zip(&noise.samples)
        .map(|(&v, &n)| (v + n).clamp(-1.0, 1.0))
        .collect();
    let clip = AudioClip::new(samples, SAMPLE_RATE, "mix")?;

    let config = AnalysisConfig::default();
    let params = config.frame_params(SAMPLE_RATE)?;
    let series = spl_series(&clip, params, config.calibration_offset_db)?;
    let fit = normal_fit(&series.levels)?;
    let track = pitch_track(&clip, params)?;
    Ok(MixReport {
        mean_dba: fit.mean,
        std_dba: fit.std,
        voiced_fraction: track.voiced_fraction(),
        frame_hop_s: params.hop as f64 / SAMPLE_RATE as f64,
        levels_dba: series.levels,
        pitch_hz: track.frames,
    })
}

/// Frame-level analysis of a synthetic voice-plus-noise mix: the dBA
/// series with its summary fit, and the pitch track (`null` marks
/// unvoiced frames).
#[wasm_bindgen]
pub fn analyze_mix(f0_hz: f64, voice_amp: f64, noise_amp: f64, seed: u32) -> String {
    render(analyze_mix_impl(f0_hz, voice_amp, noise_amp, seed))
}

#[derive(Serialize)]
struct MicReading {
    quadrant: &'static str,
    x: f64,
    y: f64,
    mean_dba: f64,
}

#[derive(Serialize)]
struct LocalizationScene {
    verdict: &'static str,
    correct: bool,
    source_x: f64,
    source_y: f64,
    room_width_m: f64,
    room_depth_m: f64,
    mics: Vec<MicReading>,
}

fn localize_source_impl(
    quadrant: &str,
    amp: f64,
    seed: u32,
) -> aula_core::Result<LocalizationScene> {
    let source_quadrant = Quadrant::ALL
        .into_iter()
        .find(|q| q.as_str() == quadrant)
        .ok_or_else(|| aula_core::Error::UnknownPosition(quadrant.to_string()))?;
    let scene = gen_quadrant_scenario(source_quadrant, amp, SAMPLE_RATE, seed as u64)?;
    let report = localize_noise(&scene.clips, &AnalysisConfig::default())?;

    let positions = mic_positions();
    let mics = report
        .mean_levels_dba
        .iter()
        .map(|&(q, mean_dba)| {
            let &(_, (x, y)) = positions.iter().find(|(p, _)| *p == q).unwrap();
            MicReading {
                quadrant: q.as_str(),
                x,
                y,
                mean_dba,
            }
        })
        .collect();
    Ok(LocalizationScene {
        verdict: report.verdict.as_str(),
        correct: report.verdict == source_quadrant,
        source_x: scene.source_position.0,
        source_y: scene.source_position.1,
        room_width_m: ROOM_WIDTH_M,
        room_depth_m: ROOM_DEPTH_M,
        mics,
    })
}

/// Simulates a noise source in the named quadrant and localizes it from
/// the four microphone recordings.
#[wasm_bindgen]
pub fn localize_source(quadrant: &str, amp: f64, seed: u32) -> String {
    render(localize_source_impl(quadrant, amp, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(json: &str) -> Value {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn weighting_curve_spans_the_audible_band() {
        let value = parse(&weighting_curve(200));
        let points = value.as_array().unwrap();
        assert_eq!(points.len(), 200);
        assert_eq!(points[0]["freq_hz"].as_f64().unwrap(), 20.0);
        let last = points[199]["freq_hz"].as_f64().unwrap();
        assert!((last - 20_000.0).abs() < 1e-6);
        let near_1k = points
            .iter()
            .min_by(|a, b| {
                let da = (a["freq_hz"].as_f64().unwrap() - 1000.0).abs();
                let db = (b["freq_hz"].as_f64().unwrap() - 1000.0).abs();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        assert!(near_1k["gain_db"].as_f64().unwrap().abs() < 0.2);

        assert_eq!(weighting_curve(1), r#"{"error":"need at least 2 points"}"#);
    }

    #[test]
    fn analyze_mix_tracks_the_planted_pitch() {
        let value = parse(&analyze_mix(180.0, 0.3, 0.01, 5));
        assert!(value["voiced_fraction"].as_f64().unwrap() > 0.9);
        let voiced: Vec<f64> = value["pitch_hz"]
            .as_array()
            .unwrap()
            .iter()
            .filter_map(Value::as_f64)
            .collect();
        let mid = voiced[voiced.len() / 2];
        assert!((mid - 180.0).abs() < 5.0, "pitch {mid}");

        let quiet = parse(&analyze_mix(180.0, 0.05, 0.0, 5));
        let loud = parse(&analyze_mix(180.0, 0.5, 0.0, 5));
        assert!(loud["mean_dba"].as_f64().unwrap() > quiet["mean_dba"].as_f64().unwrap());

        let err = parse(&analyze_mix(180.0, 2.0, 0.0, 5));
        assert!(err["error"].as_str().unwrap().contains("amplitude"));
    }

    #[test]
    fn localize_source_finds_the_planted_quadrant() {
        for quadrant in ["front_left", "front_right", "back_left", "back_right"] {
            let value = parse(&localize_source(quadrant, 0.5, 9));
            assert_eq!(value["verdict"].as_str().unwrap(), quadrant);
            assert!(value["correct"].as_bool().unwrap());
            assert_eq!(value["mics"].as_array().unwrap().len(), 4);
        }
        let err = parse(&localize_source("stage", 0.5, 9));
        assert!(err["error"].as_str().unwrap().contains("stage"));
    }

    #[test]
    fn responses_are_deterministic() {
        assert_eq!(
            analyze_mix(150.0, 0.2, 0.1, 3),
            analyze_mix(150.0, 0.2, 0.1, 3)
        );
        assert_eq!(
            localize_source("back_left", 0.4, 1),
            localize_source("back_left", 0.4, 1)
        );
    }
}
