//! Shared data types and the frame-sequence → RGB-trace conversion.

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Parallelism;

/// An 8-bit RGB face crop.
pub type Frame = RgbImage;

/// Lowest and highest admissible heart rates, in bpm (0.75–4 Hz).
pub const HR_MIN_BPM: f64 = 45.0;
pub const HR_MAX_BPM: f64 = 240.0;

/// Number of face-outline landmarks a facemask is fitted to.
pub const MASK_OUTLINE_LEN: usize = 22;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkinMask {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl SkinMask {
    pub fn new(width: u32, height: u32, data: Vec<bool>) -> Result<Self> {
        if data.len() != (width as usize) * (height as usize) {
            return Err(Error::invalid(format!(
                "mask data has {} entries, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, value: bool) -> Self {
        Self {
            width,
            height,
            data: vec![value; (width as usize) * (height as usize)],
        }
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[(y * self.width + x) as usize]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }
}

/// Facial landmarks for one frame plus the semantic indices the occlusion
/// operations need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSet {
    pub points: Vec<(f64, f64)>,
    /// Nose-bridge point used to anchor sunglasses.
    pub nose_bridge: usize,
    /// Chin/face-outline points (plus nose bridge) delineating the facemask.
    pub mask_outline: Vec<usize>,
    /// Outer corners of the left and right eye.
    pub eye_outer: Option<(usize, usize)>,
}

impl LandmarkSet {
    /// Default semantic layout: points 0..22 are the mask outline, 22 is the
    /// nose bridge and 23/24 are the outer eye corners.
    pub fn with_default_layout(points: Vec<(f64, f64)>) -> Self {
        let eye_outer = (points.len() > 24).then_some((23, 24));
        Self {
            points,
            nose_bridge: MASK_OUTLINE_LEN,
            mask_outline: (0..MASK_OUTLINE_LEN).collect(),
            eye_outer,
        }
    }

    pub fn validate(&self, width: u32, height: u32) -> Result<()> {
        let n = self.points.len();
        for &(x, y) in &self.points {
            if !(x >= 0.0 && y >= 0.0 && x <= (width as f64 - 1.0) && y <= (height as f64 - 1.0)) {
                return Err(Error::invalid(format!(
                    "landmark ({x}, {y}) outside {width}x{height} frame"
                )));
            }
        }
        if self.nose_bridge >= n {
            return Err(Error::invalid("nose-bridge index out of range"));
        }
        if self.mask_outline.len() != MASK_OUTLINE_LEN {
            return Err(Error::invalid(format!(
                "mask outline needs {MASK_OUTLINE_LEN} indices, got {}",
                self.mask_outline.len()
            )));
        }
        let mut seen = self.mask_outline.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != MASK_OUTLINE_LEN || seen.last().is_some_and(|&i| i >= n) {
            return Err(Error::invalid(
                "mask outline indices must be distinct and in range",
            ));
        }
        if let Some((l, r)) = self.eye_outer {
            if l >= n || r >= n || l == r {
                return Err(Error::invalid("eye corner indices invalid"));
            }
        }
        Ok(())
    }

    pub fn outline_points(&self) -> Vec<(f64, f64)> {
        self.mask_outline.iter().map(|&i| self.points[i]).collect()
    }

    pub fn nose_bridge_point(&self) -> (f64, f64) {
        self.points[self.nose_bridge]
    }
}

fn check_timestamps(timestamps: &[f64]) -> Result<()> {
    if timestamps.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("non-finite timestamp"));
    }
    if let Some(i) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!(
            "timestamps not strictly increasing at index {}",
            i + 1
        )));
    }
    Ok(())
}

fn check_fps(fps: f64) -> Result<()> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::invalid(format!("nominal fps must be > 0, got {fps}")));
    }
    Ok(())
}

/// Timestamped face-crop frames with optional skin masks and landmarks.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Frame>,
    timestamps: Vec<f64>,
    nominal_fps: f64,
    skin_masks: Option<Vec<SkinMask>>,
    landmarks: Option<Vec<LandmarkSet>>,
}

impl FrameSequence {
    pub fn new(
        frames: Vec<Frame>,
        timestamps: Vec<f64>,
        nominal_fps: f64,
        skin_masks: Option<Vec<SkinMask>>,
        landmarks: Option<Vec<LandmarkSet>>,
    ) -> Result<Self> {
        check_fps(nominal_fps)?;
        if frames.len() != timestamps.len() {
            return Err(Error::invalid(format!(
                "{} frames but {} timestamps",
                frames.len(),
                timestamps.len()
            )));
        }
        check_timestamps(&timestamps)?;
        if let Some(first) = frames.first() {
            let dims = first.dimensions();
            for f in &frames {
                if f.dimensions() != dims {
                    return Err(Error::DimensionMismatch {
                        expected: dims,
                        actual: f.dimensions(),
                    });
                }
            }
            if let Some(masks) = &skin_masks {
                if masks.len() != frames.len() {
                    return Err(Error::invalid("one skin mask per frame required"));
                }
                for m in masks {
                    if m.dimensions() != dims {
                        return Err(Error::DimensionMismatch {
                            expected: dims,
                            actual: m.dimensions(),
                        });
                    }
                }
            }
            if let Some(lms) = &landmarks {
                if lms.len() != frames.len() {
                    return Err(Error::invalid("one landmark set per frame required"));
                }
                for lm in lms {
                    lm.validate(dims.0, dims.1)?;
                }
            }
        }
        Ok(Self {
            frames,
            timestamps,
            nominal_fps,
            skin_masks,
            landmarks,
        })
    }

    /// Frames on a uniform grid `t = i / fps`.
    pub fn uniform(frames: Vec<Frame>, fps: f64) -> Result<Self> {
        let timestamps = (0..frames.len()).map(|i| i as f64 / fps).collect();
        Self::new(frames, timestamps, fps, None, None)
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn nominal_fps(&self) -> f64 {
        self.nominal_fps
    }

    pub fn skin_masks(&self) -> Option<&[SkinMask]> {
        self.skin_masks.as_deref()
    }

    pub fn landmarks(&self) -> Option<&[LandmarkSet]> {
        self.landmarks.as_deref()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dimensions(&self) -> Option<(u32, u32)> {
        self.frames.first().map(|f| f.dimensions())
    }

    pub fn effective_fps(&self) -> Result<f64> {
        resample_check(&self.timestamps)
    }

    /// Same timing, masks and landmarks with replacement frames.
    pub fn with_frames(&self, frames: Vec<Frame>) -> Result<Self> {
        let masks = match (&self.skin_masks, frames.first()) {
            (Some(m), Some(f)) if m.first().map(|m| m.dimensions()) != Some(f.dimensions()) => None,
            (m, _) => m.clone(),
        };
        let landmarks = match (&self.landmarks, frames.first()) {
            (Some(_), Some(f)) if Some(f.dimensions()) != self.dimensions() => None,
            (l, _) => l.clone(),
        };
        Self::new(
            frames,
            self.timestamps.clone(),
            self.nominal_fps,
            masks,
            landmarks,
        )
    }

    /// Keep the frames at `indices` (sorted, in range).
    pub fn select(&self, indices: &[usize], nominal_fps: f64) -> Result<Self> {
        Self::new(
            indices.iter().map(|&i| self.frames[i].clone()).collect(),
            indices.iter().map(|&i| self.timestamps[i]).collect(),
            nominal_fps,
            self.skin_masks
                .as_ref()
                .map(|m| indices.iter().map(|&i| m[i].clone()).collect()),
            self.landmarks
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i].clone()).collect()),
        )
    }
}

/// Per-frame spatial-mean R, G, B on the 0–255 scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RgbTrace {
    timestamps: Vec<f64>,
    r: Vec<f64>,
    g: Vec<f64>,
    b: Vec<f64>,
    nominal_fps: f64,
}

impl RgbTrace {
    pub fn new(
        timestamps: Vec<f64>,
        r: Vec<f64>,
        g: Vec<f64>,
        b: Vec<f64>,
        nominal_fps: f64,
    ) -> Result<Self> {
        check_fps(nominal_fps)?;
        let n = timestamps.len();
        if r.len() != n || g.len() != n || b.len() != n {
            return Err(Error::invalid("trace channels and timestamps differ in length"));
        }
        check_timestamps(&timestamps)?;
        for v in r.iter().chain(&g).chain(&b) {
            if !(0.0..=255.0).contains(v) {
                return Err(Error::invalid(format!("trace value {v} outside [0, 255]")));
            }
        }
        Ok(Self {
            timestamps,
            r,
            g,
            b,
            nominal_fps,
        })
    }

    /// Trace on a uniform grid `t = i / fps`.
    pub fn uniform(r: Vec<f64>, g: Vec<f64>, b: Vec<f64>, fps: f64) -> Result<Self> {
        let timestamps = (0..r.len()).map(|i| i as f64 / fps).collect();
        Self::new(timestamps, r, g, b, fps)
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn channels(&self) -> [&[f64]; 3] {
        [&self.r, &self.g, &self.b]
    }

    pub fn nominal_fps(&self) -> f64 {
        self.nominal_fps
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn select(&self, indices: &[usize], nominal_fps: f64) -> Result<Self> {
        let pick = |v: &[f64]| indices.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Self::new(
            pick(&self.timestamps),
            pick(&self.r),
            pick(&self.g),
            pick(&self.b),
            nominal_fps,
        )
    }

    /// Same samples with a different nominal rate.
    pub fn with_nominal_fps(&self, fps: f64) -> Result<Self> {
        check_fps(fps)?;
        Ok(Self {
            nominal_fps: fps,
            ..self.clone()
        })
    }
}

/// Extracted blood-volume-pulse signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BvpSignal {
    pub samples: Vec<f64>,
    pub fs: f64,
}

impl BvpSignal {
    pub fn new(samples: Vec<f64>, fs: f64) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::invalid(format!("sampling rate must be > 0, got {fs}")));
        }
        Ok(Self { samples, fs })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }
}

/// Per-window heart-rate estimates; `None` marks a missing (low-SNR) window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HrSeries {
    window_start: Vec<f64>,
    hr_bpm: Vec<Option<f64>>,
}

impl HrSeries {
    pub fn new(window_start: Vec<f64>, hr_bpm: Vec<Option<f64>>) -> Result<Self> {
        if window_start.len() != hr_bpm.len() {
            return Err(Error::invalid("window starts and estimates differ in length"));
        }
        check_timestamps(&window_start)?;
        for hr in hr_bpm.iter().flatten() {
            if !(HR_MIN_BPM..=HR_MAX_BPM).contains(hr) {
                return Err(Error::invalid(format!(
                    "heart rate {hr} bpm outside [{HR_MIN_BPM}, {HR_MAX_BPM}]"
                )));
            }
        }
        Ok(Self {
            window_start,
            hr_bpm,
        })
    }

    pub fn window_start(&self) -> &[f64] {
        &self.window_start
    }

    pub fn hr_bpm(&self) -> &[Option<f64>] {
        &self.hr_bpm
    }

    pub fn len(&self) -> usize {
        self.window_start.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window_start.is_empty()
    }

    pub fn missing_count(&self) -> usize {
        self.hr_bpm.iter().filter(|h| h.is_none()).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroundTruth {
    /// Reference PPG waveform, windowed and estimated like any BVP signal.
    Ppg(BvpSignal),
    /// Precomputed heart rate per window.
    Hr(HrSeries),
}

/// Skin-pixel mean color per frame.
///
/// With masks present only `true` pixels count; otherwise pure black
/// `(0, 0, 0)` pixels are treated as background.
pub fn mean_rgb(seq: &FrameSequence) -> Result<RgbTrace> {
    mean_rgb_with(seq, Parallelism::default())
}

pub fn mean_rgb_with(seq: &FrameSequence, par: Parallelism) -> Result<RgbTrace> {
    let masks = seq.skin_masks();
    let means = par.map_range(seq.len(), |i| {
        frame_mean(&seq.frames()[i], masks.map(|m| &m[i])).ok_or(Error::NoSkinPixels { frame: i })
    });
    let n = seq.len();
    let (mut r, mut g, mut b) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for m in means {
        let [mr, mg, mb] = m?;
        r.push(mr);
        g.push(mg);
        b.push(mb);
    }
    RgbTrace::new(seq.timestamps().to_vec(), r, g, b, seq.nominal_fps())
}

fn frame_mean(frame: &Frame, mask: Option<&SkinMask>) -> Option<[f64; 3]> {
    let mut sum = [0u64; 3];
    let mut count = 0u64;
    for (idx, px) in frame.pixels().enumerate() {
        let skin = match mask {
            Some(m) => m.as_slice()[idx],
            None => px.0 != [0, 0, 0],
        };
        if skin {
            for (acc, &v) in sum.iter_mut().zip(&px.0) {
                *acc += v as u64;
            }
            count += 1;
        }
    }
    (count > 0).then(|| sum.map(|s| s as f64 / count as f64))
}

/// Effective frame rate `(count − 1) / (last − first)`.
pub fn resample_check(timestamps: &[f64]) -> Result<f64> {
    if timestamps.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            actual: timestamps.len(),
        });
    }
    let span = timestamps[timestamps.len() - 1] - timestamps[0];
    if span <= 0.0 {
        return Err(Error::invalid("timestamps span zero duration"));
    }
    Ok((timestamps.len() - 1) as f64 / span)
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;
    use proptest::prelude::*;

    fn uniform_frame(w: u32, h: u32, c: [u8; 3]) -> Frame {
        RgbImage::from_pixel(w, h, Rgb(c))
    }

    #[test]
    fn uniform_frame_mean() {
        let seq = FrameSequence::uniform(vec![uniform_frame(4, 3, [120, 80, 60])], 30.0).unwrap();
        let tr = mean_rgb(&seq).unwrap();
        assert_eq!((tr.r()[0], tr.g()[0], tr.b()[0]), (120.0, 80.0, 60.0));
    }

    #[test]
    fn black_background_excluded() {
        let mut f = uniform_frame(4, 4, [0, 0, 0]);
        for y in 0..2 {
            for x in 0..4 {
                f.put_pixel(x, y, Rgb([200, 0, 0]));
            }
        }
        let seq = FrameSequence::uniform(vec![f], 30.0).unwrap();
        let tr = mean_rgb(&seq).unwrap();
        assert_eq!((tr.r()[0], tr.g()[0], tr.b()[0]), (200.0, 0.0, 0.0));
    }

    #[test]
    fn green_ramp() {
        let frames = (0..3)
            .map(|i| uniform_frame(2, 2, [10, 100 + i as u8, 10]))
            .collect();
        let tr = mean_rgb(&FrameSequence::uniform(frames, 30.0).unwrap()).unwrap();
        assert_eq!(tr.g(), &[100.0, 101.0, 102.0]);
        assert_eq!(tr.timestamps()[1], 1.0 / 30.0);
        assert_eq!(tr.nominal_fps(), 30.0);
    }

    #[test]
    fn zero_skin_frame_reports_index() {
        let frames = vec![uniform_frame(2, 2, [5, 5, 5]), uniform_frame(2, 2, [0, 0, 0])];
        let err = mean_rgb(&FrameSequence::uniform(frames, 30.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NoSkinPixels { frame: 1 }));
    }

    #[test]
    fn mask_takes_precedence() {
        let mut f = uniform_frame(2, 1, [0, 0, 0]);
        f.put_pixel(1, 0, Rgb([90, 90, 90]));
        let mask = SkinMask::new(2, 1, vec![true, true]).unwrap();
        let seq = FrameSequence::new(vec![f], vec![0.0], 30.0, Some(vec![mask]), None).unwrap();
        assert_eq!(mean_rgb(&seq).unwrap().r()[0], 45.0);
    }

    #[test]
    fn sequence_validation() {
        let f = uniform_frame(2, 2, [1, 1, 1]);
        assert!(FrameSequence::new(vec![f.clone(), f.clone()], vec![0.0, 0.0], 30.0, None, None)
            .is_err());
        assert!(FrameSequence::new(vec![f.clone()], vec![0.0], 0.0, None, None).is_err());
        let g = uniform_frame(3, 2, [1, 1, 1]);
        assert!(matches!(
            FrameSequence::new(vec![f, g], vec![0.0, 1.0], 30.0, None, None),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn effective_fps() {
        let full: Vec<f64> = (0..300).map(|i| i as f64 / 30.0).collect();
        assert!((resample_check(&full).unwrap() - 30.0).abs() < 1e-9);
        // Every other frame of the grid, endpoints 0 and 298/30 s.
        let half: Vec<f64> = (0..150).map(|i| (2 * i) as f64 / 30.0).collect();
        let fps = resample_check(&half).unwrap();
        assert!((fps - 149.0 / (298.0 / 30.0)).abs() < 1e-9);
        assert!((fps - 15.0).abs() < 0.06);
        assert_eq!(resample_check(&[0.0, 0.5]).unwrap(), 2.0);
        assert!(resample_check(&[1.0]).is_err());
    }

    #[test]
    fn landmark_validation() {
        let pts: Vec<(f64, f64)> = (0..25).map(|i| (i as f64, 1.0)).collect();
        let lm = LandmarkSet::with_default_layout(pts);
        assert!(lm.validate(30, 30).is_ok());
        assert!(lm.validate(10, 10).is_err());
        let mut dup = lm.clone();
        dup.mask_outline[3] = 4;
        assert!(dup.validate(30, 30).is_err());
    }

    fn small_frame() -> impl Strategy<Value = (u32, u32, Vec<u8>)> {
        (1u32..6, 1u32..6).prop_flat_map(|(w, h)| {
            (
                Just(w),
                Just(h),
                prop::collection::vec(1u8..=255, (w * h * 3) as usize),
            )
        })
    }

    proptest! {
        #[test]
        fn all_true_mask_is_plain_mean((w, h, data) in small_frame()) {
            let frame = RgbImage::from_raw(w, h, data.clone()).unwrap();
            let mask = SkinMask::filled(w, h, true);
            let seq = FrameSequence::new(vec![frame], vec![0.0], 30.0, Some(vec![mask]), None).unwrap();
            let tr = mean_rgb(&seq).unwrap();
            let n = (w * h) as f64;
            for (c, got) in [tr.r()[0], tr.g()[0], tr.b()[0]].into_iter().enumerate() {
                let expect: f64 = data.iter().skip(c).step_by(3).map(|&v| v as f64).sum::<f64>() / n;
                prop_assert!((got - expect).abs() < 1e-9);
            }
        }

        #[test]
        fn permutation_invariant((w, h, data) in small_frame(), seed in any::<u64>()) {
            let mut pixels: Vec<[u8; 3]> = data.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
            let a = RgbImage::from_raw(w, h, data).unwrap();
            let k = pixels.len();
            pixels.rotate_left((seed % k as u64) as usize);
            pixels.reverse();
            let b = RgbImage::from_raw(w, h, pixels.concat()).unwrap();
            let ta = mean_rgb(&FrameSequence::uniform(vec![a], 30.0).unwrap()).unwrap();
            let tb = mean_rgb(&FrameSequence::uniform(vec![b], 30.0).unwrap()).unwrap();
            prop_assert_eq!(ta, tb);
        }

        #[test]
        fn uniform_frames_round_trip(vals in prop::collection::vec((1u8..=255, 0u8..=255, 0u8..=255), 1..20)) {
            let r: Vec<f64> = vals.iter().map(|v| v.0 as f64).collect();
            let g: Vec<f64> = vals.iter().map(|v| v.1 as f64).collect();
            let b: Vec<f64> = vals.iter().map(|v| v.2 as f64).collect();
            let trace = RgbTrace::uniform(r, g, b, 25.0).unwrap();
            let frames = vals.iter().map(|&(r, g, b)| uniform_frame(3, 2, [r, g, b])).collect();
            let seq = FrameSequence::new(frames, trace.timestamps().to_vec(), 25.0, None, None).unwrap();
            prop_assert_eq!(mean_rgb(&seq).unwrap(), trace);
        }
    }
}
