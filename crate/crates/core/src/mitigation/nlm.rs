//! Non-local means on a luma/chroma (L*a*b*) representation.

use serde::{Deserialize, Serialize};

use super::color::{lab_to_rgb, rgb_to_lab};
use crate::error::{Error, Result};
use crate::model::Frame;
use crate::par::Parallelism;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NlmParams {
    pub strength_luma: f64,
    pub strength_chroma: f64,
    /// Patch side in pixels.
    pub template: usize,
    /// Search window side in pixels.
    pub search: usize,
}

impl Default for NlmParams {
    fn default() -> Self {
        Self {
            strength_luma: 15.0,
            strength_chroma: 15.0,
            template: 7,
            search: 21,
        }
    }
}

impl NlmParams {
    pub fn validate(&self) -> Result<()> {
        if self.template.is_multiple_of(2) || self.search.is_multiple_of(2) || self.template >= self.search {
            return Err(Error::invalid(
                "template and search sizes must be odd with template < search",
            ));
        }
        if !(self.strength_luma >= 0.0 && self.strength_chroma >= 0.0) {
            return Err(Error::invalid("filter strengths must be >= 0"));
        }
        Ok(())
    }
}

/// Planes padded by reflection so every patch of every candidate exists.
struct Padded {
    width: usize,
    pad: usize,
    planes: Vec<Vec<f64>>,
}

impl Padded {
    fn new(planes: &[Vec<f64>], w: usize, h: usize, pad: usize) -> Self {
        let reflect = |i: isize, n: usize| -> usize {
            let n = n as isize;
            let period = 2 * (n - 1).max(1);
            let mut m = i.rem_euclid(period);
            if m >= n {
                m = period - m;
            }
            m as usize
        };
        let pw = w + 2 * pad;
        let ph = h + 2 * pad;
        let planes = planes
            .iter()
            .map(|p| {
                let mut out = vec![0.0; pw * ph];
                for y in 0..ph {
                    let sy = reflect(y as isize - pad as isize, h);
                    for x in 0..pw {
                        let sx = reflect(x as isize - pad as isize, w);
                        out[y * pw + x] = p[sy * w + sx];
                    }
                }
                out
            })
            .collect();
        Self {
            width: pw,
            pad,
            planes,
        }
    }
}

/// Denoise a group of planes that share patch weights (luma alone, or the
/// two chroma planes together) with strength `h`.
fn nlm_planes(planes: &[Vec<f64>], w: usize, h: usize, p: &NlmParams, strength: f64, par: Parallelism) -> Vec<Vec<f64>> {
    if strength <= 0.0 {
        return planes.to_vec();
    }
    let tr = p.template / 2;
    let sr = p.search / 2;
    let padded = Padded::new(planes, w, h, tr + sr);
    let pw = padded.width;
    let off = padded.pad as isize;
    let inv_h2 = 1.0 / (strength * strength);
    let norm = 1.0 / ((p.template * p.template * planes.len()) as f64);
    let n_planes = planes.len();

    let mut out = vec![0.0; w * h * n_planes];
    par.for_each_chunk_mut(&mut out, w * n_planes, |y, row| {
        let mut acc = vec![0.0; n_planes];
        for x in 0..w {
            let (cx, cy) = (x as isize + off, y as isize + off);
            let mut wsum = 0.0;
            acc.iter_mut().for_each(|a| *a = 0.0);
            for dy in -(sr as isize)..=sr as isize {
                for dx in -(sr as isize)..=sr as isize {
                    let (qx, qy) = (cx + dx, cy + dy);
                    let mut d2 = 0.0;
                    for plane in &padded.planes {
                        for ty in -(tr as isize)..=tr as isize {
                            let a = ((cy + ty) as usize) * pw;
                            let b = ((qy + ty) as usize) * pw;
                            for tx in -(tr as isize)..=tr as isize {
                                let diff = plane[a + (cx + tx) as usize] - plane[b + (qx + tx) as usize];
                                d2 += diff * diff;
                            }
                        }
                    }
                    // Noise pre-estimate sigma = 0: weight exp(-max(d2, 0)/h^2).
                    let wgt = (-(d2 * norm).max(0.0) * inv_h2).exp();
                    wsum += wgt;
                    let q = (qy as usize) * pw + qx as usize;
                    for (a, plane) in acc.iter_mut().zip(&padded.planes) {
                        *a += wgt * plane[q];
                    }
                }
            }
            for (c, a) in acc.iter().enumerate() {
                row[x * n_planes + c] = a / wsum;
            }
        }
    });
    (0..n_planes)
        .map(|c| (0..w * h).map(|i| out[i * n_planes + c]).collect())
        .collect()
}

/// Non-local means with the luminance and chrominance filtered separately
/// in L*a*b* scaled to 0–255 (L·255/100, a+128, b+128).
pub fn nlm_denoise(frame: &Frame, p: &NlmParams) -> Result<Frame> {
    nlm_denoise_with(frame, p, Parallelism::default())
}

pub fn nlm_denoise_with(frame: &Frame, p: &NlmParams, par: Parallelism) -> Result<Frame> {
    p.validate()?;
    let (w, h) = frame.dimensions();
    if (w as usize) < p.search || (h as usize) < p.search {
        return Err(Error::invalid(format!(
            "frame {w}x{h} smaller than the {0}x{0} search window",
            p.search
        )));
    }
    if p.strength_luma == 0.0 && p.strength_chroma == 0.0 {
        return Ok(frame.clone());
    }
    let (w, h) = (w as usize, h as usize);
    let lab: Vec<[f64; 3]> = frame.pixels().map(|px| rgb_to_lab(px.0)).collect();
    let luma = vec![lab.iter().map(|v| v[0] * 255.0 / 100.0).collect::<Vec<_>>()];
    let chroma = vec![
        lab.iter().map(|v| v[1] + 128.0).collect::<Vec<_>>(),
        lab.iter().map(|v| v[2] + 128.0).collect::<Vec<_>>(),
    ];
    let l = nlm_planes(&luma, w, h, p, p.strength_luma, par);
    let ab = nlm_planes(&chroma, w, h, p, p.strength_chroma, par);
    let mut out = frame.clone();
    for (i, px) in out.pixels_mut().enumerate() {
        px.0 = lab_to_rgb([l[0][i] * 100.0 / 255.0, ab[0][i] - 128.0, ab[1][i] - 128.0]);
    }
    Ok(out)
}
