//! Synthetic face-crop videos with a known pulse.

use std::f64::consts::PI;

use image::{Rgb, RgbImage, Rgba, RgbaImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::degradation::{add_gaussian_noise, frame_seed, NoiseSpec, OcclusionAsset};
use crate::error::{Error, Result};
use crate::hr::WindowConfig;
use crate::model::{
    BvpSignal, FrameSequence, GroundTruth, HrSeries, LandmarkSet, HR_MAX_BPM, HR_MIN_BPM,
};
use crate::par::Parallelism;

/// Heart-rate trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HrProfile {
    Constant { bpm: f64 },
    /// Linear sweep over the whole duration.
    Chirp { start_bpm: f64, end_bpm: f64 },
}

impl HrProfile {
    /// Instantaneous rate in Hz at `t`.
    pub fn freq_at(&self, t: f64, duration: f64) -> f64 {
        match *self {
            HrProfile::Constant { bpm } => bpm / 60.0,
            HrProfile::Chirp { start_bpm, end_bpm } => {
                (start_bpm + (end_bpm - start_bpm) * t / duration) / 60.0
            }
        }
    }

    /// `∫₀ᵗ f(τ) dτ` in cycles.
    pub fn cycles_at(&self, t: f64, duration: f64) -> f64 {
        match *self {
            HrProfile::Constant { bpm } => bpm / 60.0 * t,
            HrProfile::Chirp { start_bpm, end_bpm } => {
                (start_bpm * t + (end_bpm - start_bpm) * t * t / (2.0 * duration)) / 60.0
            }
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match *self {
            HrProfile::Constant { bpm } => (bpm, bpm),
            HrProfile::Chirp { start_bpm, end_bpm } => {
                (start_bpm.min(end_bpm), start_bpm.max(end_bpm))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub duration_s: f64,
    pub fps: f64,
    pub hr: HrProfile,
    /// Peak green-channel excursion in 8-bit levels.
    pub amplitude: f64,
    pub base_color: [f64; 3],
    /// Also modulate R and B at 0.5 and 0.3 of the green amplitude.
    pub rgb_modulation: bool,
    /// Per-frame Gaussian noise variance on the [0, 1] scale.
    pub noise_variance: f64,
    /// Half-range of a static per-pixel luminance offset (skin texture).
    pub texture: f64,
    pub seed: u64,
    pub frame_size: u32,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            duration_s: 60.0,
            fps: 30.0,
            hr: HrProfile::Constant { bpm: 72.0 },
            amplitude: 4.0,
            base_color: [180.0, 120.0, 100.0],
            rgb_modulation: true,
            noise_variance: 0.0,
            texture: 0.0,
            seed: 0,
            frame_size: 72,
        }
    }
}

pub const RB_RATIOS: [f64; 3] = [0.5, 1.0, 0.3];

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.fps > 0.0) {
            return Err(Error::invalid("duration and fps must be positive"));
        }
        let (lo, hi) = self.hr.bounds();
        if !(lo >= HR_MIN_BPM && hi <= HR_MAX_BPM) {
            return Err(Error::invalid(format!(
                "heart rate profile {lo}..{hi} bpm outside {HR_MIN_BPM}..{HR_MAX_BPM}"
            )));
        }
        if !(self.amplitude >= 0.0 && self.texture >= 0.0 && self.noise_variance >= 0.0) {
            return Err(Error::invalid("amplitude, texture and noise must be >= 0"));
        }
        if self.frame_size == 0 {
            return Err(Error::invalid("frame size must be positive"));
        }
        for (c, &base) in self.base_color.iter().enumerate() {
            let swing = self.ratio(c) * self.amplitude + self.texture;
            if base - swing < 0.0 || base + swing > 255.0 {
                return Err(Error::invalid(format!(
                    "channel {c}: base {base} +/- {swing} leaves [0, 255]"
                )));
            }
        }
        Ok(())
    }

    fn ratio(&self, c: usize) -> f64 {
        if self.rgb_modulation {
            RB_RATIOS[c]
        } else if c == 1 {
            1.0
        } else {
            0.0
        }
    }

    pub fn frame_count(&self) -> usize {
        (self.duration_s * self.fps).round() as usize
    }

    /// Unit-amplitude pulse at `t = i / fps`.
    pub fn pulse(&self) -> Vec<f64> {
        (0..self.frame_count())
            .map(|i| {
                let t = i as f64 / self.fps;
                (2.0 * PI * self.hr.cycles_at(t, self.duration_s)).sin()
            })
            .collect()
    }

    /// Mean instantaneous rate over each analysis window.
    pub fn true_hr(&self, cfg: &WindowConfig) -> Result<HrSeries> {
        let n = self.frame_count();
        let wl = cfg.window_len(self.fps);
        if n < wl {
            return Err(Error::TooShort { needed: wl, actual: n });
        }
        let step = (cfg.step_s * self.fps).round() as usize;
        let mut starts = Vec::new();
        let mut hr = Vec::new();
        let mut s = 0;
        while s + wl <= n {
            let t0 = s as f64 / self.fps;
            let span = cfg.window_s;
            let cycles = self.hr.cycles_at(t0 + span, self.duration_s) - self.hr.cycles_at(t0, self.duration_s);
            starts.push(t0);
            hr.push(Some(60.0 * cycles / span));
            s += step.max(1);
        }
        HrSeries::new(starts, hr)
    }
}

/// Static per-pixel offsets in `[-texture, texture]`.
fn texture_field(spec: &SynthSpec) -> Vec<f64> {
    let n = (spec.frame_size * spec.frame_size) as usize;
    if spec.texture == 0.0 {
        return vec![0.0; n];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x7E57_u64);
    (0..n).map(|_| rng.random_range(-spec.texture..=spec.texture)).collect()
}

/// Frames, reference PPG and per-frame landmarks for one synthetic subject.
pub fn synth_subject(spec: &SynthSpec) -> Result<(FrameSequence, GroundTruth)> {
    synth_subject_with(spec, Parallelism::default())
}

pub fn synth_subject_with(spec: &SynthSpec, par: Parallelism) -> Result<(FrameSequence, GroundTruth)> {
    spec.validate()?;
    let pulse = spec.pulse();
    let tex = texture_field(spec);
    let size = spec.frame_size;
    let frames = par.map_range(pulse.len(), |i| {
        let s = spec.amplitude * pulse[i];
        let level: Vec<f64> = (0..3).map(|c| spec.base_color[c] + spec.ratio(c) * s).collect();
        let frame = RgbImage::from_fn(size, size, |x, y| {
            let off = tex[(y * size + x) as usize];
            Rgb([0, 1, 2].map(|c| (level[c] + off).round().clamp(0.0, 255.0) as u8))
        });
        if spec.noise_variance > 0.0 {
            let noise = NoiseSpec::new(spec.noise_variance, frame_seed(spec.seed, i))?;
            Ok(add_gaussian_noise(&frame, &noise))
        } else {
            Ok(frame)
        }
    });
    let frames = frames.into_iter().collect::<Result<Vec<_>>>()?;
    let n = frames.len();
    let timestamps = (0..n).map(|i| i as f64 / spec.fps).collect();
    let lm = synth_landmarks(size);
    let seq = FrameSequence::new(frames, timestamps, spec.fps, None, Some(vec![lm; n]))?;
    let gt = GroundTruth::Ppg(BvpSignal::new(pulse, spec.fps)?);
    Ok((seq, gt))
}

/// Closed lower-face outline in unit coordinates: a jaw arc from the left
/// cheek through the chin to the right cheek, then back along the nose line.
fn unit_outline() -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = (0..16)
        .map(|k| {
            let th = PI - PI * k as f64 / 15.0;
            (0.5 + 0.5 * th.cos(), th.sin())
        })
        .collect();
    pts.extend((1..=6).map(|k| (1.0 - k as f64 / 7.0, 0.0)));
    pts
}

/// Landmarks for a centered face filling a `size`×`size` crop: 22 outline
/// points, the nose bridge and the outer eye corners.
pub fn synth_landmarks(size: u32) -> LandmarkSet {
    let s = (size - 1) as f64;
    let mut pts: Vec<(f64, f64)> = unit_outline()
        .into_iter()
        .map(|(u, v)| (s * (0.15 + 0.7 * u), s * (0.5 + 0.42 * v)))
        .collect();
    pts.push((0.5 * s, 0.4 * s));
    pts.push((0.22 * s, 0.38 * s));
    pts.push((0.78 * s, 0.38 * s));
    LandmarkSet::with_default_layout(pts)
}

/// Opaque black sunglasses template.
pub fn synth_sunglasses() -> OcclusionAsset {
    let img = RgbaImage::from_pixel(40, 12, Rgba([0, 0, 0, 255]));
    OcclusionAsset::new(img, None).expect("static asset is valid")
}

/// Opaque white facemask template with its outline points.
pub fn synth_facemask() -> OcclusionAsset {
    let (w, h) = (100u32, 60u32);
    let img = RgbaImage::from_pixel(w, h, Rgba([255, 255, 255, 255]));
    let pts = unit_outline()
        .into_iter()
        .map(|(u, v)| (u * (w - 1) as f64, v * (h - 1) as f64))
        .collect();
    OcclusionAsset::new(img, Some(pts)).expect("static asset is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hr::reference_series;
    use crate::model::mean_rgb;
    use crate::rppg::{extract, MethodId};
    use rustfft::{num_complex::Complex64, FftPlanner};

    fn short(bpm: f64) -> SynthSpec {
        SynthSpec {
            duration_s: 20.0,
            hr: HrProfile::Constant { bpm },
            frame_size: 16,
            ..Default::default()
        }
    }

    #[test]
    fn constant_profile_ground_truth() {
        let spec = SynthSpec {
            frame_size: 8,
            ..Default::default()
        };
        let cfg = WindowConfig::default();
        let truth = spec.true_hr(&cfg).unwrap();
        assert_eq!(truth.len(), 51);
        assert!(truth.hr_bpm().iter().all(|h| (h.unwrap() - 72.0).abs() < 1e-9));
        let (seq, gt) = synth_subject(&spec).unwrap();
        assert_eq!(seq.len(), 1800);
        let est = reference_series(&gt, &cfg).unwrap();
        assert!(est.hr_bpm().iter().all(|h| (h.unwrap() - 72.0).abs() <= 0.44));
    }

    #[test]
    fn trace_fft_peak_at_profile_rate() {
        let spec = short(90.0);
        let (seq, _) = synth_subject(&spec).unwrap();
        let g: Vec<f64> = mean_rgb(&seq).unwrap().g().to_vec();
        let m = g.iter().sum::<f64>() / g.len() as f64;
        let mut buf: Vec<Complex64> = g.iter().map(|v| Complex64::new(v - m, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        let k = (1..buf.len() / 2)
            .max_by(|&a, &b| buf[a].norm().total_cmp(&buf[b].norm()))
            .unwrap();
        let f = k as f64 * spec.fps / buf.len() as f64;
        assert!((f - 1.5).abs() <= spec.fps / buf.len() as f64);
    }

    #[test]
    fn zero_amplitude_gives_flat_signals() {
        let spec = SynthSpec {
            amplitude: 0.0,
            ..short(72.0)
        };
        let (seq, _) = synth_subject(&spec).unwrap();
        let tr = mean_rgb(&seq).unwrap();
        for m in MethodId::ALL {
            let out = extract(m, &tr).unwrap();
            assert!(out.bvp.samples.iter().all(|v| v.abs() < 1e-9), "{m}");
        }
    }

    #[test]
    fn rejects_out_of_range() {
        let bad = SynthSpec {
            amplitude: 130.0,
            ..short(72.0)
        };
        assert!(synth_subject(&bad).is_err());
        assert!(short(30.0).validate().is_err());
        assert!(short(250.0).validate().is_err());
    }

    #[test]
    fn chirp_truth_tracks_profile() {
        let spec = SynthSpec {
            hr: HrProfile::Chirp {
                start_bpm: 60.0,
                end_bpm: 120.0,
            },
            frame_size: 4,
            ..Default::default()
        };
        let truth = spec.true_hr(&WindowConfig::default()).unwrap();
        // Window starting at t has mean rate 60 + (t + 5).
        for (t, h) in truth.window_start().iter().zip(truth.hr_bpm()) {
            assert!((h.unwrap() - (65.0 + t)).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_and_textured() {
        let spec = SynthSpec {
            texture: 20.0,
            noise_variance: 0.001,
            seed: 3,
            ..short(72.0)
        };
        let (a, _) = synth_subject(&spec).unwrap();
        let (b, _) = synth_subject(&spec).unwrap();
        assert_eq!(a, b);
        let f = &a.frames()[0];
        assert_ne!(f.get_pixel(0, 0), f.get_pixel(5, 7));
    }

    #[test]
    fn landmarks_and_assets_fit() {
        let lm = synth_landmarks(72);
        lm.validate(72, 72).unwrap();
        let img = RgbImage::from_pixel(72, 72, Rgb([150, 100, 90]));
        let masked = crate::degradation::apply_facemask(&img, &lm, &synth_facemask()).unwrap();
        let white = masked.pixels().filter(|p| p.0 == [255, 255, 255]).count();
        assert!(white > 500, "{white}");
        let shaded = crate::degradation::apply_sunglasses(&img, &lm, &synth_sunglasses()).unwrap();
        assert!(shaded.pixels().any(|p| p.0 == [0, 0, 0]));
    }
}
