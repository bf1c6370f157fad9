//! Per-window heart rate from BVP or reference PPG signals.
//!
//! Each 10 s window (1 s step) is band-passed forward and backward, its
//! Welch PSD is taken as a single Hamming segment zero-padded to 4096
//! points, and the in-band peak gives the rate.

mod filter;
mod welch;

pub use filter::{butter_bandpass, filtfilt, Sos};
pub use welch::{hamming, Psd, Welch};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BvpSignal, GroundTruth, HrSeries, HR_MAX_BPM, HR_MIN_BPM};
use crate::par::Parallelism;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowConfig {
    pub window_s: f64,
    pub step_s: f64,
    /// Pass band in Hz.
    pub band: (f64, f64),
    pub nfft: usize,
    /// Order of the analog low-pass prototype.
    pub filter_order: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            window_s: 10.0,
            step_s: 1.0,
            band: (HR_MIN_BPM / 60.0, HR_MAX_BPM / 60.0),
            nfft: 4096,
            filter_order: 4,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_s > 0.0 && self.step_s > 0.0) {
            return Err(Error::invalid("window and step must be positive"));
        }
        if !(self.band.0 > 0.0 && self.band.0 < self.band.1) {
            return Err(Error::invalid("band must satisfy 0 < low < high"));
        }
        if self.nfft < 16 || self.filter_order == 0 {
            return Err(Error::invalid("nfft must be >= 16 and filter order >= 1"));
        }
        Ok(())
    }

    /// Samples per window at `fs`.
    pub fn window_len(&self, fs: f64) -> usize {
        (self.window_s * fs).round() as usize
    }

    /// Segment overlap `⌊n / 8⌋`.
    pub fn overlap(n: usize) -> usize {
        n / 8
    }
}

/// 4th-order (by default) Butterworth band-pass, applied forward and back.
pub fn bandpass_zero_phase(signal: &BvpSignal, band: (f64, f64), order: usize) -> Result<BvpSignal> {
    let sos = butter_bandpass(order, band.0, band.1, signal.fs)?;
    BvpSignal::new(filtfilt(&sos, &signal.samples)?, signal.fs)
}

/// `(start_s, samples)` for every full window.
pub fn sliding_windows<'a>(signal: &'a BvpSignal, cfg: &WindowConfig) -> Result<Vec<(f64, &'a [f64])>> {
    cfg.validate()?;
    let n = cfg.window_len(signal.fs);
    if n == 0 || signal.len() < n {
        return Err(Error::TooShort {
            needed: n,
            actual: signal.len(),
        });
    }
    let duration = signal.duration();
    let count = ((duration - cfg.window_s) / cfg.step_s + 1e-9).floor() as usize + 1;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let start_s = k as f64 * cfg.step_s;
        let start = (start_s * signal.fs).round() as usize;
        if start + n > signal.len() {
            break;
        }
        out.push((start_s, &signal.samples[start..start + n]));
    }
    Ok(out)
}

/// Welch PSD of one window with the configured segment rules.
pub fn welch_psd(window: &[f64], fs: f64, welch: &Welch) -> Result<Psd> {
    let n = window.len();
    if n < 16 {
        return Err(Error::TooShort {
            needed: 16,
            actual: n,
        });
    }
    welch.psd(window, fs, n, WindowConfig::overlap(n))
}

/// `60 ×` the PSD peak inside `band`.
///
/// Returns `None` (low SNR) when the in-band PSD is identically zero or
/// when the strongest component lies outside the band, i.e. the in-band
/// maximum is only leakage.
pub fn peak_bpm(psd: &Psd, band: (f64, f64)) -> Option<f64> {
    let mut best: Option<(usize, f64)> = None;
    let mut outside = 0.0f64;
    for (k, (&f, &p)) in psd.freqs.iter().zip(&psd.power).enumerate() {
        if f >= band.0 && f <= band.1 {
            if best.is_none_or(|(_, bp)| p > bp) {
                best = Some((k, p));
            }
        } else {
            outside = outside.max(p);
        }
    }
    let (k, p) = best?;
    if !(p > 0.0) || p < outside {
        return None;
    }
    Some(60.0 * psd.freqs[k])
}

/// Heart rate of an already-filtered window.
pub fn estimate_hr_window(window: &[f64], fs: f64, cfg: &WindowConfig, welch: &Welch) -> Result<Option<f64>> {
    let psd = welch_psd(window, fs, welch)?;
    Ok(peak_bpm(&psd, cfg.band))
}

/// Band-pass one raw window at `fs`, then estimate its rate.
pub fn filtered_window_hr(window: &[f64], fs: f64, cfg: &WindowConfig, welch: &Welch) -> Result<Option<f64>> {
    let sos = butter_bandpass(cfg.filter_order, cfg.band.0, cfg.band.1, fs)?;
    let filtered = filtfilt(&sos, window)?;
    estimate_hr_window(&filtered, fs, cfg, welch)
}

/// Windows → per-window band-pass → Welch peak.
pub fn hr_series(signal: &BvpSignal, cfg: &WindowConfig) -> Result<HrSeries> {
    hr_series_with(signal, cfg, Parallelism::default())
}

pub fn hr_series_with(signal: &BvpSignal, cfg: &WindowConfig, par: Parallelism) -> Result<HrSeries> {
    let windows = sliding_windows(signal, cfg)?;
    if cfg.window_len(signal.fs) > cfg.nfft {
        return Err(Error::invalid(format!(
            "window of {} samples exceeds nfft {}",
            cfg.window_len(signal.fs),
            cfg.nfft
        )));
    }
    let welch = Welch::new(cfg.nfft);
    let estimates = par.map_slice(&windows, |(_, w)| filtered_window_hr(w, signal.fs, cfg, &welch));
    let hr = estimates.into_iter().collect::<Result<Vec<_>>>()?;
    HrSeries::new(windows.iter().map(|(s, _)| *s).collect(), hr)
}

/// Reference series: waveforms are pipelined like any BVP signal.
pub fn reference_series(gt: &GroundTruth, cfg: &WindowConfig) -> Result<HrSeries> {
    match gt {
        GroundTruth::Ppg(sig) => hr_series(sig, cfg),
        GroundTruth::Hr(series) => Ok(series.clone()),
    }
}
