//! Shared signal kernels: framing, windowing, spectra, autocorrelation
//! and median filtering.
//!
//! Everything downstream (SPL, pitch, RASTA-PLP) is built on these five
//! operations, so their numeric conventions are pinned here: power spectra
//! are one-sided and unnormalized, autocorrelation is the plain lag sum
//! without scaling, and median filters shrink their window at the edges.

use std::cell::RefCell;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::audio_io::AudioClip;
use crate::error::{Error, Result};

/// Consecutive, possibly overlapping frames cut from one clip.
#[derive(Debug, Clone)]
pub struct FrameSequence {
    pub frames: Vec<Vec<f64>>,
    pub frame_len: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl FrameSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Sample index where frame `i` starts.
    pub fn start_sample(&self, i: usize) -> usize {
        i * self.hop
    }

    /// Start time of frame `i` in seconds.
    pub fn start_time(&self, i: usize) -> f64 {
        self.start_sample(i) as f64 / self.sample_rate as f64
    }
}

/// Cuts a clip into frames of `frame_len` samples advancing by `hop`.
///
/// Yields `floor((len - frame_len) / hop) + 1` frames; trailing samples
/// that do not fill a frame are dropped.
pub fn frame_signal(clip: &AudioClip, frame_len: usize, hop: usize) -> Result<FrameSequence> {
    if frame_len == 0 || hop == 0 {
        return Err(Error::InvalidFraming { frame_len, hop });
    }
    if frame_len > clip.samples.len() {
        return Err(Error::FrameTooLong {
            frame_len,
            clip_len: clip.samples.len(),
        });
    }
    let count = (clip.samples.len() - frame_len) / hop + 1;
    let mut frames = Vec::with_capacity(count);
    for i in 0..count {
        let start = i * hop;
        frames.push(clip.samples[start..start + frame_len].to_vec());
    }
    Ok(FrameSequence {
        frames,
        frame_len,
        hop,
        sample_rate: clip.sample_rate,
    })
}

/// Hamming window: `w[t] = 0.54 - 0.46 cos(2 pi t / (n - 1))`.
pub fn hamming_window(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::WindowTooShort(n));
    }
    let denom = (n - 1) as f64;
    Ok((0..n)
        .map(|t| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * t as f64 / denom).cos())
        .collect())
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_in_place(buf: &mut [Complex<f64>], inverse: bool) {
    let fft = PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        if inverse {
            planner.plan_fft_inverse(buf.len())
        } else {
            planner.plan_fft_forward(buf.len())
        }
    });
    fft.process(buf);
}

/// One-sided power spectrum of a frame.
///
/// Returns `floor(n/2) + 1` values, `P[b] = |X(b)|^2` for the unnormalized
/// DFT `X(b) = sum_t x[t] exp(-2 pi i b t / n)`. Bin `b` is centered at
/// `b * sample_rate / n` Hz.
pub fn power_spectrum(frame: &[f64]) -> Result<Vec<f64>> {
    let n = frame.len();
    if n < 2 {
        return Err(Error::FrameTooShort(n));
    }
    let mut buf: Vec<Complex<f64>> = frame.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fft_in_place(&mut buf, false);
    Ok(buf[..n / 2 + 1].iter().map(|c| c.norm_sqr()).collect())
}

/// Autocorrelation `r[k] = sum_t x[t] x[t + k]` for `k = 0..=max_lag`.
///
/// Computed via FFT with zero padding, which matches the direct sum to
/// floating point rounding.
pub fn autocorrelation(frame: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = frame.len();
    if n == 0 {
        return Err(Error::FrameTooShort(n));
    }
    if max_lag >= n {
        return Err(Error::LagOutOfRange {
            max_lag,
            frame_len: n,
        });
    }
    let m = (n + max_lag + 1).next_power_of_two();
    let mut buf = vec![Complex::new(0.0, 0.0); m];
    for (slot, &x) in buf.iter_mut().zip(frame) {
        slot.re = x;
    }
    fft_in_place(&mut buf, false);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    fft_in_place(&mut buf, true);
    let scale = 1.0 / m as f64;
    Ok(buf[..=max_lag].iter().map(|c| c.re * scale).collect())
}

/// Sliding median with shrinking half-windows at the edges.
///
/// `window` must be odd. Interior points take the median of `window`
/// neighbours; edge points use whatever part of the window exists. For
/// even-sized edge windows the lower of the two middle values is taken,
/// so every output value occurs in the input.
pub fn median_filter(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if window.is_multiple_of(2) {
        return Err(Error::EvenMedianWindow(window));
    }
    let half = window / 2;
    let n = series.len();
    let mut out = Vec::with_capacity(n);
    let mut scratch = Vec::with_capacity(window);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n - 1);
        scratch.clear();
        scratch.extend_from_slice(&series[lo..=hi]);
        scratch.sort_unstable_by(|a, b| a.partial_cmp(b).expect("median of non-finite value"));
        out.push(scratch[(scratch.len() - 1) / 2]);
    }
    Ok(out)
}
