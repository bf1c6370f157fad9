//! Countermeasures: frame-drop strategies, image and signal denoising,
//! skin-only occlusion handling and L*a*b* color transfer.

mod color;
mod nlm;
mod tv;

pub use color::{
    color_transfer_lab, color_transfer_lab_values, lab_to_rgb, lab_to_rgb_f64, rgb_f64_to_lab,
    rgb_to_lab, LabStats,
};
pub use nlm::{nlm_denoise, nlm_denoise_with, NlmParams};
pub use tv::{
    total_variation_1d, total_variation_2d, tv_denoise_image, tv_denoise_plane, tv_denoise_raw,
    tv_denoise_signal, TvParams,
};

use std::fmt;
use std::str::FromStr;

use image::Rgb;
use serde::{Deserialize, Serialize};

use crate::degradation::{point_in_polygon, polygon_bbox};
use crate::error::{Error, Result};
use crate::hr::{filtered_window_hr, Welch, WindowConfig};
use crate::model::{BvpSignal, Frame, HrSeries};
use crate::temporal::DropManifest;

/// How the receiver copes with missing frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DropStrategy {
    /// Survivors treated as if nothing was lost.
    #[serde(alias = "s0")]
    None,
    /// Per-window frame-rate recomputation at the receiver.
    S1,
    /// Timestamp-based linear-interpolation reconstruction.
    S2,
}

impl DropStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            DropStrategy::None => "none",
            DropStrategy::S1 => "s1",
            DropStrategy::S2 => "s2",
        }
    }
}

impl fmt::Display for DropStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DropStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "s0" => Ok(DropStrategy::None),
            "s1" => Ok(DropStrategy::S1),
            "s2" => Ok(DropStrategy::S2),
            other => Err(Error::invalid(format!("unknown drop strategy '{other}'"))),
        }
    }
}

/// Surviving samples taken as uniformly spaced at the nominal rate.
pub fn strategy0_passthrough(samples: &[f64], nominal_fps: f64) -> Result<BvpSignal> {
    BvpSignal::new(samples.to_vec(), nominal_fps)
}

/// Receiver-side rate for one window: `count / duration`; `None` for an
/// empty window.
pub fn strategy1_effective_fps(window_sample_count: usize, window_duration_s: f64) -> Result<Option<f64>> {
    if !(window_duration_s > 0.0) {
        return Err(Error::invalid("window duration must be positive"));
    }
    Ok((window_sample_count > 0).then(|| window_sample_count as f64 / window_duration_s))
}

/// Heart rate per window with each window's rate recomputed from the
/// samples that arrived in it.
///
/// Windows start every `cfg.step_s` from 0 up to `duration_s − window_s`;
/// a sample belongs to a window when its timestamp is in
/// `[start, start + window_s)`. Windows whose recomputed rate cannot carry
/// the band are reported missing.
pub fn strategy1_hr_series(samples: &[f64], timestamps: &[f64], duration_s: f64, cfg: &WindowConfig) -> Result<HrSeries> {
    cfg.validate()?;
    if samples.len() != timestamps.len() {
        return Err(Error::invalid("samples and timestamps differ in length"));
    }
    if duration_s < cfg.window_s {
        return Err(Error::invalid(format!(
            "duration {duration_s} s shorter than one {} s window",
            cfg.window_s
        )));
    }
    let welch = Welch::new(cfg.nfft);
    let count = ((duration_s - cfg.window_s) / cfg.step_s + 1e-9).floor() as usize + 1;
    let mut starts = Vec::with_capacity(count);
    let mut hr = Vec::with_capacity(count);
    for k in 0..count {
        let start = k as f64 * cfg.step_s;
        let end = start + cfg.window_s;
        let lo = timestamps.partition_point(|&t| t < start - 1e-9);
        let hi = timestamps.partition_point(|&t| t < end - 1e-9);
        let window = &samples[lo..hi];
        let est = match strategy1_effective_fps(window.len(), cfg.window_s)? {
            Some(fs) if fs > 2.0 * cfg.band.1 && window.len() >= 16 && window.len() <= cfg.nfft => {
                filtered_window_hr(window, fs, cfg, &welch)?
            }
            _ => None,
        };
        starts.push(start);
        hr.push(est);
    }
    HrSeries::new(starts, hr)
}

/// Grid `k / fps` for `k = 0, 1, …` while `≤ last`.
pub fn uniform_grid(last: f64, fps: f64) -> Vec<f64> {
    let n = (last * fps + 1e-9).floor() as usize + 1;
    (0..n).map(|k| k as f64 / fps).collect()
}

/// Linear interpolation of surviving samples onto a uniform `target_fps`
/// grid from 0 to the last kept timestamp; grid points before the first
/// kept sample take its value.
pub fn strategy2_reconstruct(samples: &[f64], manifest: &DropManifest, target_fps: f64) -> Result<BvpSignal> {
    let ts = &manifest.original_timestamps;
    if samples.len() != ts.len() {
        return Err(Error::invalid(format!(
            "{} samples but {} manifest timestamps",
            samples.len(),
            ts.len()
        )));
    }
    if samples.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            actual: samples.len(),
        });
    }
    if !(target_fps > 0.0) {
        return Err(Error::invalid("target fps must be positive"));
    }
    let last = ts[ts.len() - 1];
    let grid = uniform_grid(last, target_fps);
    let values = grid
        .iter()
        .map(|&t| {
            let j = ts.partition_point(|&s| s <= t);
            if j == 0 {
                samples[0]
            } else if j >= ts.len() {
                samples[ts.len() - 1]
            } else {
                let (t0, t1) = (ts[j - 1], ts[j]);
                let w = (t - t0) / (t1 - t0);
                samples[j - 1] + w * (samples[j] - samples[j - 1])
            }
        })
        .collect();
    BvpSignal::new(values, target_fps)
}

/// Black out the occluder so skin averaging ignores it.
pub fn skin_only(frame: &Frame, occluder_polygon: &[(f64, f64)]) -> Frame {
    let mut out = frame.clone();
    if occluder_polygon.len() < 3 {
        return out;
    }
    let (w, h) = frame.dimensions();
    if let Some((x0, y0, x1, y1)) = polygon_bbox(occluder_polygon, w, h) {
        for y in y0..=y1 {
            for x in x0..=x1 {
                if point_in_polygon(occluder_polygon, x as f64, y as f64) {
                    out.put_pixel(x, y, Rgb([0, 0, 0]));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageDenoise {
    None,
    Nlm,
    Tvi,
}

impl FromStr for ImageDenoise {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(ImageDenoise::None),
            "nlm" => Ok(ImageDenoise::Nlm),
            "tvi" => Ok(ImageDenoise::Tvi),
            other => Err(Error::invalid(format!("unknown image denoiser '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalDenoise {
    None,
    Tvs,
}

impl FromStr for SignalDenoise {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(SignalDenoise::None),
            "tvs" => Ok(SignalDenoise::Tvs),
            other => Err(Error::invalid(format!("unknown signal denoiser '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OcclusionStrategy {
    None,
    /// Skin region only: occluder pixels blacked out.
    Os,
}

/// One mitigation configuration of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct Mitigation {
    pub drop: DropStrategy,
    pub denoise: ImageDenoise,
    pub signal_denoise: SignalDenoise,
    pub occlusion: OcclusionStrategy,
}

impl Default for Mitigation {
    fn default() -> Self {
        Self {
            drop: DropStrategy::None,
            denoise: ImageDenoise::None,
            signal_denoise: SignalDenoise::None,
            occlusion: OcclusionStrategy::None,
        }
    }
}

impl Mitigation {
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.drop != DropStrategy::None {
            parts.push(self.drop.as_str().to_string());
        }
        match self.denoise {
            ImageDenoise::None => {}
            ImageDenoise::Nlm => parts.push("nlm".into()),
            ImageDenoise::Tvi => parts.push("tvi".into()),
        }
        if self.signal_denoise == SignalDenoise::Tvs {
            parts.push("tvs".into());
        }
        if self.occlusion == OcclusionStrategy::Os {
            parts.push("os".into());
        }
        if parts.is_empty() {
            "none".into()
        } else {
            parts.join("+")
        }
    }
}
