//! Spatial degradations and synthetic occlusion of face crops.

mod filters;
mod homography;
mod occlusion;

pub(crate) use occlusion::{point_in_polygon, polygon_bbox};

pub use filters::{add_gaussian_noise, gaussian_blur, gaussian_kernel_1d, BlurSpec, NoiseSpec};
pub use homography::{estimate_homography, Homography};
pub use occlusion::{
    apply_facemask, apply_sunglasses, sunglasses_footprint, OcclusionAsset, SUNGLASSES_SPAN_FACTOR,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Frame, FrameSequence};
use crate::par::Parallelism;

/// Target bit depth per channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorDepthSpec {
    nb: u8,
}

impl ColorDepthSpec {
    pub fn new(nb: u8) -> Result<Self> {
        match nb {
            2 | 4 | 6 | 8 => Ok(Self { nb }),
            _ => Err(Error::invalid(format!(
                "bit depth must be one of 2, 4, 6, 8; got {nb}"
            ))),
        }
    }

    pub fn bits(self) -> u8 {
        self.nb
    }

    /// `2^8 / 2^nb`
    pub fn reduction_factor(self) -> u8 {
        1u8 << (8 - self.nb) as u32
    }

    pub fn reduce(self, v: u8) -> u8 {
        let rf = self.reduction_factor();
        (v / rf) * rf
    }
}

/// `floor(v / rf) * rf` on every channel value.
pub fn reduce_color_depth(frame: &Frame, spec: ColorDepthSpec) -> Frame {
    let mut out = frame.clone();
    for v in out.iter_mut() {
        *v = spec.reduce(*v);
    }
    out
}

/// Bilinear resize with pixel-center alignment; results rounded half away
/// from zero.
pub fn resize(frame: &Frame, width: u32, height: u32) -> Result<Frame> {
    if width == 0 || height == 0 {
        return Err(Error::invalid("resize target must be positive"));
    }
    let (sw, sh) = frame.dimensions();
    if (sw, sh) == (width, height) {
        return Ok(frame.clone());
    }
    let sx = sw as f64 / width as f64;
    let sy = sh as f64 / height as f64;
    let mut out = Frame::new(width, height);
    for y in 0..height {
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (sh - 1) as f64);
        let y0 = fy.floor() as u32;
        let y1 = (y0 + 1).min(sh - 1);
        let wy = fy - y0 as f64;
        for x in 0..width {
            let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (sw - 1) as f64);
            let x0 = fx.floor() as u32;
            let x1 = (x0 + 1).min(sw - 1);
            let wx = fx - x0 as f64;
            let (p00, p10) = (frame.get_pixel(x0, y0).0, frame.get_pixel(x1, y0).0);
            let (p01, p11) = (frame.get_pixel(x0, y1).0, frame.get_pixel(x1, y1).0);
            let mut px = [0u8; 3];
            for c in 0..3 {
                let top = p00[c] as f64 * (1.0 - wx) + p10[c] as f64 * wx;
                let bot = p01[c] as f64 * (1.0 - wx) + p11[c] as f64 * wx;
                px[c] = (top * (1.0 - wy) + bot * wy).round().clamp(0.0, 255.0) as u8;
            }
            out.put_pixel(x, y, image::Rgb(px));
        }
    }
    Ok(out)
}

pub fn resize_square(frame: &Frame, size: u32) -> Result<Frame> {
    resize(frame, size, size)
}

/// One spatial corruption, applied frame by frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpatialDegradation {
    Resize { size: u32 },
    ColorDepth { bits: u8 },
    Blur { kernel_size: u32 },
    Noise { variance: f64, seed: u64 },
}

impl SpatialDegradation {
    pub fn label(&self) -> String {
        match self {
            SpatialDegradation::Resize { size } => format!("resize{size}"),
            SpatialDegradation::ColorDepth { bits } => format!("depth{bits}"),
            SpatialDegradation::Blur { kernel_size } => format!("blur{kernel_size}"),
            SpatialDegradation::Noise { variance, .. } => format!("noise{variance}"),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            SpatialDegradation::Noise { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    /// `index` decorrelates per-frame noise fields.
    pub fn apply(&self, frame: &Frame, index: usize) -> Result<Frame> {
        match *self {
            SpatialDegradation::Resize { size } => resize_square(frame, size),
            SpatialDegradation::ColorDepth { bits } => {
                Ok(reduce_color_depth(frame, ColorDepthSpec::new(bits)?))
            }
            SpatialDegradation::Blur { kernel_size } => {
                gaussian_blur(frame, &BlurSpec::new(kernel_size)?)
            }
            SpatialDegradation::Noise { variance, seed } => {
                let spec = NoiseSpec::new(variance, frame_seed(seed, index))?;
                Ok(add_gaussian_noise(frame, &spec))
            }
        }
    }
}

/// Per-frame seed derived from a sequence seed.
pub fn frame_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Apply `f` to every frame (in parallel when enabled), keeping timing,
/// masks and landmarks.
pub fn map_frames<F>(seq: &FrameSequence, par: Parallelism, f: F) -> Result<FrameSequence>
where
    F: Fn(usize, &Frame) -> Result<Frame> + Sync + Send,
{
    let frames = par.map_range(seq.len(), |i| f(i, &seq.frames()[i]));
    let frames = frames.into_iter().collect::<Result<Vec<_>>>()?;
    seq.with_frames(frames)
}

pub fn degrade_sequence(
    seq: &FrameSequence,
    degradation: &SpatialDegradation,
    par: Parallelism,
) -> Result<FrameSequence> {
    map_frames(seq, par, |i, f| degradation.apply(f, i))
}

/// Closed outline in pixel coordinates.
pub type Polygon = Vec<(f64, f64)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Occluder {
    Sunglasses,
    Facemask,
}

/// Composite an occluder onto every frame using its landmarks; also
/// returns each frame's occluded polygon.
pub fn occlude_sequence(
    seq: &FrameSequence,
    kind: Occluder,
    asset: &OcclusionAsset,
    par: Parallelism,
) -> Result<(FrameSequence, Vec<Polygon>)> {
    let lms = seq
        .landmarks()
        .ok_or_else(|| Error::invalid("occlusion needs per-frame landmarks"))?;
    let out = map_frames(seq, par, |i, f| match kind {
        Occluder::Sunglasses => apply_sunglasses(f, &lms[i], asset),
        Occluder::Facemask => apply_facemask(f, &lms[i], asset),
    })?;
    let polys = lms
        .iter()
        .map(|lm| match kind {
            Occluder::Sunglasses => sunglasses_footprint(lm, asset),
            Occluder::Facemask => Ok(lm.outline_points()),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((out, polys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{Rgb, RgbImage};
    use proptest::prelude::*;

    #[test]
    fn color_depth_examples() {
        let spec = ColorDepthSpec::new(6).unwrap();
        assert_eq!(spec.reduction_factor(), 4);
        assert_eq!(spec.reduce(255), 252);
        for nb in [2, 4, 6, 8] {
            assert_eq!(ColorDepthSpec::new(nb).unwrap().reduce(0), 0);
        }
        let rfs: Vec<u8> = [2, 4, 6, 8]
            .iter()
            .map(|&nb| ColorDepthSpec::new(nb).unwrap().reduction_factor())
            .collect();
        assert_eq!(rfs, vec![64, 16, 4, 1]);
        let frame = RgbImage::from_fn(7, 5, |x, y| Rgb([(x * 37) as u8, (y * 51) as u8, 201]));
        assert_eq!(reduce_color_depth(&frame, ColorDepthSpec::new(8).unwrap()), frame);
        assert!(ColorDepthSpec::new(3).is_err());
        assert!(ColorDepthSpec::new(0).is_err());
    }

    proptest! {
        #[test]
        fn color_depth_properties(v1 in any::<u8>(), v2 in any::<u8>(), nb in prop::sample::select(vec![2u8, 4, 6, 8])) {
            let spec = ColorDepthSpec::new(nb).unwrap();
            let rf = spec.reduction_factor();
            prop_assert_eq!(spec.reduce(spec.reduce(v1)), spec.reduce(v1));
            prop_assert_eq!(spec.reduce(v1) % rf, 0);
            if v1 <= v2 {
                prop_assert!(spec.reduce(v1) <= spec.reduce(v2));
            }
        }
    }

    #[test]
    fn distinct_levels_bounded() {
        let frame = RgbImage::from_fn(16, 16, |x, y| {
            let v = (y * 16 + x) as u8;
            Rgb([v, v, v])
        });
        for nb in [2u8, 4, 6] {
            let out = reduce_color_depth(&frame, ColorDepthSpec::new(nb).unwrap());
            let mut levels: Vec<u8> = out.pixels().map(|p| p.0[0]).collect();
            levels.sort_unstable();
            levels.dedup();
            assert_eq!(levels.len(), 1 << nb);
        }
    }

    #[test]
    fn resize_identity_and_uniform() {
        let frame = RgbImage::from_fn(72, 72, |x, y| Rgb([x as u8, y as u8, (x ^ y) as u8]));
        assert_eq!(resize_square(&frame, 72).unwrap(), frame);
        let flat = RgbImage::from_pixel(50, 40, Rgb([12, 200, 99]));
        for size in [36, 72, 128] {
            let out = resize_square(&flat, size).unwrap();
            assert_eq!(out.dimensions(), (size, size));
            assert!(out.pixels().all(|p| p.0 == [12, 200, 99]));
        }
        assert!(resize_square(&flat, 0).is_err());
    }

    #[test]
    fn checkerboard_to_single_pixel() {
        // Output center maps to source (0.5, 0.5): mean of the four pixels,
        // 127.5, rounded half away from zero.
        let board = RgbImage::from_fn(2, 2, |x, y| {
            let v = if (x + y) % 2 == 0 { 0 } else { 255 };
            Rgb([v, v, v])
        });
        let out = resize_square(&board, 1).unwrap();
        assert_eq!(out.get_pixel(0, 0).0, [128, 128, 128]);
    }

    #[test]
    fn frame_seeds_differ() {
        assert_ne!(frame_seed(7, 0), frame_seed(7, 1));
        assert_ne!(frame_seed(7, 0), frame_seed(8, 0));
    }
}
