use image::{Rgb, RgbaImage};

use super::homography::{estimate_homography, Homography};
use crate::error::{Error, Result};
use crate::model::{Frame, LandmarkSet, MASK_OUTLINE_LEN};

/// Sunglasses are scaled to this multiple of the outer-eye-corner span.
pub const SUNGLASSES_SPAN_FACTOR: f64 = 1.1;

/// RGBA overlay (sunglasses or facemask) with, for facemasks, the outline
/// points on the template that correspond to the face's mask outline.
#[derive(Debug, Clone)]
pub struct OcclusionAsset {
    pub image: RgbaImage,
    pub source_points: Option<Vec<(f64, f64)>>,
}

impl OcclusionAsset {
    pub fn new(image: RgbaImage, source_points: Option<Vec<(f64, f64)>>) -> Result<Self> {
        let (w, h) = image.dimensions();
        if w == 0 || h == 0 {
            return Err(Error::invalid("empty occlusion asset"));
        }
        if let Some(pts) = &source_points {
            if pts.len() != MASK_OUTLINE_LEN {
                return Err(Error::invalid(format!(
                    "facemask asset needs {MASK_OUTLINE_LEN} source points, got {}",
                    pts.len()
                )));
            }
            for &(x, y) in pts {
                if !(x >= 0.0 && y >= 0.0 && x <= (w - 1) as f64 && y <= (h - 1) as f64) {
                    return Err(Error::invalid(format!(
                        "source point ({x}, {y}) outside {w}x{h} asset"
                    )));
                }
            }
        }
        Ok(Self {
            image,
            source_points,
        })
    }

    /// Bilinear RGBA sample at asset coordinates; transparent outside.
    fn sample(&self, u: f64, v: f64) -> [f64; 4] {
        let (w, h) = self.image.dimensions();
        if !(u >= 0.0 && v >= 0.0 && u <= (w - 1) as f64 && v <= (h - 1) as f64) {
            return [0.0; 4];
        }
        let (x0, y0) = (u.floor() as u32, v.floor() as u32);
        let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
        let (fx, fy) = (u - x0 as f64, v - y0 as f64);
        let px = |x, y| self.image.get_pixel(x, y).0;
        let (a, b, c, d) = (px(x0, y0), px(x1, y0), px(x0, y1), px(x1, y1));
        let mut out = [0.0; 4];
        for i in 0..4 {
            let top = a[i] as f64 * (1.0 - fx) + b[i] as f64 * fx;
            let bot = c[i] as f64 * (1.0 - fx) + d[i] as f64 * fx;
            out[i] = top * (1.0 - fy) + bot * fy;
        }
        out
    }
}

fn composite(frame: &mut Frame, x: u32, y: u32, rgba: [f64; 4]) {
    let alpha = rgba[3] / 255.0;
    if alpha <= 0.0 {
        return;
    }
    let p = frame.get_pixel(x, y).0;
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = (alpha * rgba[c] + (1.0 - alpha) * p[c] as f64)
            .round()
            .clamp(0.0, 255.0) as u8;
    }
    frame.put_pixel(x, y, Rgb(out));
}

/// Even-odd test of the point against a closed polygon.
pub(crate) fn point_in_polygon(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Pixel-index bounding box of a polygon, clipped to the frame.
pub(crate) fn polygon_bbox(poly: &[(f64, f64)], w: u32, h: u32) -> Option<(u32, u32, u32, u32)> {
    if poly.is_empty() {
        return None;
    }
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &(x, y) in poly {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let clip = |v: f64, hi: u32| v.clamp(0.0, (hi - 1) as f64);
    Some((
        clip(x0.floor(), w) as u32,
        clip(y0.floor(), h) as u32,
        clip(x1.ceil(), w) as u32,
        clip(y1.ceil(), h) as u32,
    ))
}

/// Warp the facemask template onto the face.
///
/// The homography maps the asset's 22 source points onto the landmark
/// outline; compositing is confined to the destination outline polygon.
pub fn apply_facemask(frame: &Frame, lm: &LandmarkSet, asset: &OcclusionAsset) -> Result<Frame> {
    let (w, h) = frame.dimensions();
    lm.validate(w, h)?;
    let src = asset
        .source_points
        .as_ref()
        .ok_or_else(|| Error::invalid("facemask asset has no source points"))?;
    let dst = lm.outline_points();
    let to_asset = estimate_homography(src, &dst)?.inverse()?;
    let mut out = frame.clone();
    let Some((x0, y0, x1, y1)) = polygon_bbox(&dst, w, h) else {
        return Ok(out);
    };
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (fx, fy) = (x as f64, y as f64);
            if !point_in_polygon(&dst, fx, fy) {
                continue;
            }
            let (u, v) = to_asset.apply((fx, fy));
            composite(&mut out, x, y, asset.sample(u, v));
        }
    }
    Ok(out)
}

struct SunglassesPlacement {
    scale: f64,
    center: (f64, f64),
    mid: (f64, f64),
}

fn place_sunglasses(lm: &LandmarkSet, asset: &OcclusionAsset) -> Result<SunglassesPlacement> {
    let (le, re) = lm
        .eye_outer
        .ok_or_else(|| Error::invalid("sunglasses need outer eye-corner landmarks"))?;
    let span = (lm.points[re].0 - lm.points[le].0).abs();
    if span <= 0.0 {
        return Err(Error::Degenerate("eye corners share an x coordinate".into()));
    }
    let (aw, ah) = asset.image.dimensions();
    Ok(SunglassesPlacement {
        scale: SUNGLASSES_SPAN_FACTOR * span / aw as f64,
        center: lm.nose_bridge_point(),
        mid: ((aw - 1) as f64 / 2.0, (ah - 1) as f64 / 2.0),
    })
}

/// Frame-space rectangle covered by the placed sunglasses asset.
pub fn sunglasses_footprint(lm: &LandmarkSet, asset: &OcclusionAsset) -> Result<Vec<(f64, f64)>> {
    let p = place_sunglasses(lm, asset)?;
    let (hw, hh) = (p.mid.0 * p.scale, p.mid.1 * p.scale);
    let (nx, ny) = p.center;
    Ok(vec![
        (nx - hw, ny - hh),
        (nx + hw, ny - hh),
        (nx + hw, ny + hh),
        (nx - hw, ny + hh),
    ])
}

/// Place sunglasses centered on the nose bridge.
///
/// The asset is scaled (aspect preserved) so its width is
/// [`SUNGLASSES_SPAN_FACTOR`] times the horizontal distance between the
/// outer eye corners, then translated so its midpoint sits on the
/// nose-bridge landmark.
pub fn apply_sunglasses(frame: &Frame, lm: &LandmarkSet, asset: &OcclusionAsset) -> Result<Frame> {
    let (w, h) = frame.dimensions();
    lm.validate(w, h)?;
    let p = place_sunglasses(lm, asset)?;
    let (nx, ny) = p.center;
    let (mu, mv) = p.mid;
    let scale = p.scale;
    // Frame → asset: u = (x − nx)/scale + mu.
    let place = Homography(nalgebra::Matrix3::new(
        1.0 / scale,
        0.0,
        mu - nx / scale,
        0.0,
        1.0 / scale,
        mv - ny / scale,
        0.0,
        0.0,
        1.0,
    ));
    let corners = sunglasses_footprint(lm, asset)?;
    let mut out = frame.clone();
    let Some((x0, y0, x1, y1)) = polygon_bbox(&corners, w, h) else {
        return Ok(out);
    };
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (u, v) = place.apply((x as f64, y as f64));
            composite(&mut out, x, y, asset.sample(u, v));
        }
    }
    Ok(out)
}
