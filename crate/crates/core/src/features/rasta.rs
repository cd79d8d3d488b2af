//! Spectral envelope features: perceptual linear prediction with RASTA
//! temporal filtering.
//!
//! Per frame, the power spectrum is pooled into critical bands on the
//! Bark scale, log band energies are band-pass filtered over time (which
//! removes stationary channel effects such as overall gain), and the
//! equal-loudness weighted, amplitude-compressed result is fit with a
//! low-order all-pole model whose cepstrum is returned.

use crate::audio_io::AudioClip;
use crate::dsp;
use crate::error::{Error, Result};

use super::{a_weight_power, FrameParams};

/// Hz to Bark: `z = 6 asinh(f / 600)`.
pub fn hz_to_bark(freq_hz: f64) -> f64 {
    6.0 * (freq_hz / 600.0).asinh()
}

/// Bark to Hz, the inverse of [`hz_to_bark`].
pub fn bark_to_hz(bark: f64) -> f64 {
    600.0 * (bark / 6.0).sinh()
}

const LOG_EPS: f64 = 1e-20;
const RASTA_NUMER: [f64; 5] = [0.2, 0.1, 0.0, -0.1, -0.2];
const RASTA_POLE: f64 = 0.94;

/// Critical-band weight at a distance of `d` Bark from the band center:
/// flat within half a Bark, with an asymmetric exponential skirt.
fn trapezoid(d: f64) -> f64 {
    if !(-1.3..=2.5).contains(&d) {
        0.0
    } else if d <= -0.5 {
        10f64.powf(2.5 * (d + 0.5))
    } else if d < 0.5 {
        1.0
    } else {
        10f64.powf(-(d - 0.5))
    }
}

struct BarkBank {
    /// Band center frequencies in Hz; first is 0, last is Nyquist.
    centers_hz: Vec<f64>,
    /// Per band, the weight applied to each spectrum bin.
    weights: Vec<Vec<f64>>,
}

impl BarkBank {
    fn bands(&self) -> usize {
        self.centers_hz.len()
    }
}

/// Lays `ceil(bark(nyquist)) + 1` band centers evenly on the Bark axis
/// from 0 to the Nyquist frequency.
fn build_bank(sample_rate: u32, frame_len: usize) -> BarkBank {
    let nyquist = sample_rate as f64 / 2.0;
    let z_max = hz_to_bark(nyquist);
    let bands = z_max.ceil() as usize + 1;
    let bins = frame_len / 2 + 1;
    let bin_hz = sample_rate as f64 / frame_len as f64;

    let mut centers_hz = Vec::with_capacity(bands);
    let mut weights = Vec::with_capacity(bands);
    for b in 0..bands {
        let center = b as f64 * z_max / (bands - 1) as f64;
        centers_hz.push(bark_to_hz(center));
        weights.push(
            (0..bins)
                .map(|bin| trapezoid(hz_to_bark(bin as f64 * bin_hz) - center))
                .collect(),
        );
    }
    BarkBank {
        centers_hz,
        weights,
    }
}

/// Band-pass filters one log-energy series over time.
///
/// Transfer function `0.1 (2 + z^-1 - z^-3 - 2 z^-4) / (1 - 0.94 z^-1)`.
/// The first four outputs are zero while the numerator delay line fills,
/// so constant offsets (gain changes) never reach the output at all.
fn rasta_filter(series: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; series.len()];
    let mut y_prev = 0.0;
    for t in 4..series.len() {
        let mut fir = 0.0;
        for (tap, &coef) in RASTA_NUMER.iter().enumerate() {
            fir += coef * series[t - tap];
        }
        out[t] = fir + RASTA_POLE * y_prev;
        y_prev = out[t];
    }
    out
}

/// Autocorrelation of the even extension of the band spectrum:
/// `r[k] = (1/L) sum_m s[m] cos(2 pi m k / L)` with `L = 2 (bands - 1)`.
fn even_idft(s: &[f64], order: usize) -> Vec<f64> {
    let bands = s.len();
    let l = 2 * (bands - 1);
    (0..=order)
        .map(|k| {
            let mut acc = s[0];
            for (m, &v) in s.iter().enumerate().skip(1) {
                let c = (2.0 * std::f64::consts::PI * m as f64 * k as f64 / l as f64).cos();
                acc += if m == bands - 1 { v * c } else { 2.0 * v * c };
            }
            acc / l as f64
        })
        .collect()
}

/// Levinson-Durbin recursion.
///
/// Returns `(a, e)` where `A(z) = 1 + sum a[k] z^-k` minimizes the
/// prediction error `e` against the autocorrelation `r`.
fn levinson(r: &[f64], order: usize) -> Result<(Vec<f64>, f64)> {
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    let mut e = r[0];
    if !(e.is_finite() && e > 0.0) {
        return Err(Error::UnstablePrediction);
    }
    for i in 1..=order {
        let mut acc = r[i];
        for j in 1..i {
            acc += a[j] * r[i - j];
        }
        let k = -acc / e;
        let prev = a.clone();
        for j in 1..i {
            a[j] = prev[j] + k * prev[i - j];
        }
        a[i] = k;
        e *= 1.0 - k * k;
        if !(e.is_finite() && e > 0.0) {
            return Err(Error::UnstablePrediction);
        }
    }
    Ok((a, e))
}

/// Converts an all-pole model to cepstral coefficients `c[0..=order]`:
/// `c[0] = ln e`, `c[n] = -a[n] - (1/n) sum_{k=1}^{n-1} k c[k] a[n-k]`.
fn lp_to_cepstrum(a: &[f64], e: f64, order: usize) -> Vec<f64> {
    let mut c = vec![0.0; order + 1];
    c[0] = e.ln();
    for n in 1..=order {
        let mut acc = 0.0;
        for k in 1..n {
            acc += k as f64 * c[k] * a[n - k];
        }
        c[n] = -a[n] - acc / n as f64;
    }
    c
}

/// Runs the remaining PLP stages on a set of RASTA-filtered log band
/// energies (equal loudness, cube-root compression, all-pole fit,
/// cepstrum). Split out so tests can feed synthetic band trajectories.
fn plp_from_filtered(filtered: &[f64], loudness: &[f64], order: usize) -> Result<Vec<f64>> {
    let s: Vec<f64> = filtered
        .iter()
        .zip(loudness)
        .map(|(&y, &g)| (y.exp() * g).cbrt())
        .collect();
    let r = even_idft(&s, order);
    let (a, e) = levinson(&r, order)?;
    Ok(lp_to_cepstrum(&a, e, order))
}

/// Cepstra a long stationary input converges to: the RASTA filter output
/// decays to zero, leaving only the equal-loudness contour.
#[cfg(test)]
pub(crate) fn plp_of_flat_input(
    sample_rate: u32,
    frame_len: usize,
    order: usize,
) -> Result<Vec<f64>> {
    let bank = build_bank(sample_rate, frame_len);
    let loudness: Vec<f64> = bank
        .centers_hz
        .iter()
        .map(|&f| a_weight_power(f))
        .collect::<Result<_>>()?;
    plp_from_filtered(&vec![0.0; bank.bands()], &loudness, order)
}

/// Extracts RASTA-PLP cepstra, one `order + 1` vector per frame.
///
/// Frames are Hamming-windowed. The filter bank spans 0 Hz to Nyquist,
/// so the band count (and with it the maximum usable order) depends on
/// the sample rate: 21 bands at 16 kHz.
pub fn rasta_plp(clip: &AudioClip, params: FrameParams, order: usize) -> Result<Vec<Vec<f64>>> {
    if order == 0 {
        return Err(Error::InvalidOrder(order));
    }
    let bank = build_bank(clip.sample_rate, params.frame_len);
    if order >= bank.bands() {
        return Err(Error::OrderTooHigh {
            order,
            bands: bank.bands(),
        });
    }
    let frames = dsp::frame_signal(clip, params.frame_len, params.hop)?;
    let window = dsp::hamming_window(params.frame_len)?;

    let bands = bank.bands();
    let mut log_e = vec![vec![0.0; frames.len()]; bands];
    let mut windowed = vec![0.0; params.frame_len];
    for (t, frame) in frames.frames.iter().enumerate() {
        for ((y, &x), &w) in windowed.iter_mut().zip(frame).zip(&window) {
            *y = x * w;
        }
        let spectrum = dsp::power_spectrum(&windowed)?;
        for (b, weights) in bank.weights.iter().enumerate() {
            let e: f64 = weights.iter().zip(&spectrum).map(|(w, p)| w * p).sum();
            log_e[b][t] = (e + LOG_EPS).ln();
        }
    }

    let filtered: Vec<Vec<f64>> = log_e.iter().map(|s| rasta_filter(s)).collect();
    let loudness: Vec<f64> = bank
        .centers_hz
        .iter()
        .map(|&f| a_weight_power(f))
        .collect::<Result<_>>()?;

    let mut out = Vec::with_capacity(frames.len());
    for t in 0..frames.len() {
        let scratch: Vec<f64> = filtered.iter().map(|band| band[t]).collect();
        out.push(plp_from_filtered(&scratch, &loudness, order)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bark_scale_round_trips() {
        assert_eq!(hz_to_bark(0.0), 0.0);
        let z600 = 6.0 * (1.0 + 2f64.sqrt()).ln();
        assert!((hz_to_bark(600.0) - z600).abs() < 1e-12);
        assert!((hz_to_bark(600.0) - 5.288241522117258).abs() < 1e-12);
        for f in [10.0, 250.0, 1000.0, 4000.0, 8000.0] {
            assert!((bark_to_hz(hz_to_bark(f)) - f).abs() < 1e-9 * f);
        }
        // strictly increasing
        assert!(hz_to_bark(100.0) < hz_to_bark(101.0));
    }

    #[test]
    fn band_counts_by_sample_rate() {
        assert_eq!(build_bank(16000, 512).bands(), 21);
        assert_eq!(build_bank(8000, 256).bands(), 17);
        let bank = build_bank(16000, 512);
        assert_eq!(bank.centers_hz[0], 0.0);
        assert!((bank.centers_hz[20] - 8000.0).abs() < 1e-9);
    }

    #[test]
    fn trapezoid_envelope_values() {
        assert_eq!(trapezoid(-1.31), 0.0);
        assert!((trapezoid(-1.3) - 0.01).abs() < 1e-12);
        assert!((trapezoid(-0.9) - 0.1).abs() < 1e-12);
        assert_eq!(trapezoid(-0.5), 1.0);
        assert_eq!(trapezoid(0.0), 1.0);
        assert!((trapezoid(0.5) - 1.0).abs() < 1e-12);
        assert!((trapezoid(1.5) - 0.1).abs() < 1e-12);
        assert!((trapezoid(2.5) - 0.01).abs() < 1e-12);
        assert_eq!(trapezoid(2.51), 0.0);
    }

    #[test]
    fn rasta_filter_rejects_stationary_input() {
        let out = rasta_filter(&[3.7; 40]);
        assert!(out.iter().all(|&y| y.abs() < 1e-12));
    }

    #[test]
    fn rasta_filter_is_invariant_to_constant_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..60).map(|_| rng.random_range(-2.0..2.0)).collect();
        let shifted: Vec<f64> = x.iter().map(|v| v + 5.5).collect();
        let a = rasta_filter(&x);
        let b = rasta_filter(&shifted);
        for (ya, yb) in a.iter().zip(&b) {
            assert!((ya - yb).abs() < 1e-9);
        }
        // warmup: first four outputs are zero
        assert!(a[..4].iter().all(|&y| y == 0.0));
        assert!(a[4..].iter().any(|&y| y != 0.0));
    }

    #[test]
    fn levinson_recovers_first_order_model() {
        let r: Vec<f64> = (0..4).map(|k| 0.9f64.powi(k)).collect();
        let (a, e) = levinson(&r, 1).unwrap();
        assert!((a[1] + 0.9).abs() < 1e-12);
        assert!((e - 0.19).abs() < 1e-12);
        // exact AR(1) autocorrelation: higher coefficients vanish
        let (a, e) = levinson(&r, 3).unwrap();
        assert!((a[1] + 0.9).abs() < 1e-12);
        assert!(a[2].abs() < 1e-12 && a[3].abs() < 1e-12);
        assert!((e - 0.19).abs() < 1e-12);
    }

    #[test]
    fn levinson_on_white_input_and_degenerate() {
        let (a, e) = levinson(&[2.0, 0.0, 0.0], 2).unwrap();
        assert_eq!(&a[1..], &[0.0, 0.0]);
        assert_eq!(e, 2.0);
        let c = lp_to_cepstrum(&a, e, 2);
        assert_eq!(c, vec![2f64.ln(), 0.0, 0.0]);
        assert!(matches!(
            levinson(&[0.0, 0.0], 1),
            Err(Error::UnstablePrediction)
        ));
    }

    #[test]
    fn cepstrum_recursion_matches_ar1_series() {
        // For A(z) = 1 - 0.9 z^-1 and e = 1: c[n] = 0.9^n / n.
        let c = lp_to_cepstrum(&[1.0, -0.9, 0.0, 0.0, 0.0], 1.0, 4);
        assert!(c[0].abs() < 1e-15);
        for n in 1..=4 {
            let want = 0.9f64.powi(n) / n as f64;
            assert!((c[n as usize] - want).abs() < 1e-12, "c[{n}]");
        }
    }

    /// Simpson quadrature of `(1/pi) int_0^pi ln(e/|A|^2) cos(n w) dw`.
    fn cepstrum_by_quadrature(a: &[f64], e: f64, order: usize) -> Vec<f64> {
        let steps = 8192;
        let h = std::f64::consts::PI / steps as f64;
        let log_spectrum = |w: f64| {
            let (mut re, mut im) = (0.0, 0.0);
            for (k, &ak) in a.iter().enumerate() {
                re += ak * (k as f64 * w).cos();
                im -= ak * (k as f64 * w).sin();
            }
            e.ln() - (re * re + im * im).ln()
        };
        (0..=order)
            .map(|n| {
                let f = |w: f64| log_spectrum(w) * (n as f64 * w).cos();
                let mut acc = f(0.0) + f(std::f64::consts::PI);
                for i in 1..steps {
                    let w = i as f64 * h;
                    acc += if i % 2 == 1 { 4.0 * f(w) } else { 2.0 * f(w) };
                }
                acc * h / 3.0 / std::f64::consts::PI
            })
            .collect()
    }

    #[test]
    fn cepstrum_matches_quadrature_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..5 {
            // random positive band spectrum -> valid autocorrelation
            let s: Vec<f64> = (0..12).map(|_| rng.random_range(0.1..5.0)).collect();
            let order = 6;
            let r = even_idft(&s, order);
            let (a, e) = levinson(&r, order).unwrap();
            let got = lp_to_cepstrum(&a, e, order);
            let want = cepstrum_by_quadrature(&a, e, order);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-6, "{g} vs {w}");
            }
        }
    }

    fn voiced_clip(f0: f64, amp: f64, seconds: f64) -> AudioClip {
        let rate = 16000u32;
        let n = (seconds * rate as f64) as usize;
        let samples: Vec<f64> = (0..n)
            .map(|t| {
                let phase = 2.0 * std::f64::consts::PI * f0 * t as f64 / rate as f64;
                amp * (0.6 * phase.sin() + 0.3 * (2.0 * phase).sin() + 0.1 * (3.0 * phase).sin())
            })
            .collect();
        AudioClip::new(samples, rate, "voiced").unwrap()
    }

    #[test]
    fn rasta_plp_shapes_and_order_limits() {
        let clip = voiced_clip(150.0, 0.5, 0.5);
        let params = FrameParams::new(512, 256).unwrap();
        let cepstra = rasta_plp(&clip, params, 10).unwrap();
        assert_eq!(cepstra.len(), 30);
        for c in &cepstra {
            assert_eq!(c.len(), 11);
            assert!(c.iter().all(|v| v.is_finite()));
        }
        assert!(matches!(
            rasta_plp(&clip, params, 0),
            Err(Error::InvalidOrder(0))
        ));
        assert!(matches!(
            rasta_plp(&clip, params, 21),
            Err(Error::OrderTooHigh {
                order: 21,
                bands: 21
            })
        ));
        assert!(rasta_plp(&clip, params, 20).is_ok());
    }

    #[test]
    fn rasta_plp_ignores_overall_gain() {
        let loud = voiced_clip(180.0, 0.8, 0.5);
        let soft = voiced_clip(180.0, 0.4, 0.5);
        let params = FrameParams::new(512, 256).unwrap();
        let a = rasta_plp(&loud, params, 10).unwrap();
        let b = rasta_plp(&soft, params, 10).unwrap();
        for (ca, cb) in a.iter().zip(&b) {
            for (x, y) in ca.iter().zip(cb) {
                assert!((x - y).abs() < 1e-9, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn stationary_input_converges_to_flat_reference() {
        // 125 Hz at 16 kHz: the period divides the hop, so successive
        // frames are sample-identical and the input is truly stationary.
        let clip = voiced_clip(125.0, 0.5, 4.0);
        let params = FrameParams::new(512, 256).unwrap();
        let cepstra = rasta_plp(&clip, params, 10).unwrap();
        let last = cepstra.last().unwrap();
        let reference = plp_of_flat_input(16000, 512, 10).unwrap();
        let diff: f64 = last
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(diff < 0.1 * scale, "relative gap {}", diff / scale);
    }
}
