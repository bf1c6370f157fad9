//! sRGB ↔ CIE L*a*b* (D65) and statistics-matching color transfer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

/// Reference white: the image of linear RGB (1, 1, 1).
const WHITE: [f64; 3] = [
    RGB_TO_XYZ[0][0] + RGB_TO_XYZ[0][1] + RGB_TO_XYZ[0][2],
    RGB_TO_XYZ[1][0] + RGB_TO_XYZ[1][1] + RGB_TO_XYZ[1][2],
    RGB_TO_XYZ[2][0] + RGB_TO_XYZ[2][1] + RGB_TO_XYZ[2][2],
];

const DELTA: f64 = 6.0 / 29.0;

fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn linear_to_srgb(c: f64) -> f64 {
    if c <= 0.0031308 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

fn lab_f(t: f64) -> f64 {
    if t > DELTA.powi(3) {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

fn lab_f_inv(f: f64) -> f64 {
    if f > DELTA {
        f * f * f
    } else {
        3.0 * DELTA * DELTA * (f - 4.0 / 29.0)
    }
}

fn xyz_to_rgb_matrix() -> [[f64; 3]; 3] {
    let m = nalgebra::Matrix3::from_fn(|r, c| RGB_TO_XYZ[r][c]);
    let inv = m.try_inverse().expect("sRGB matrix is invertible");
    std::array::from_fn(|r| std::array::from_fn(|c| inv[(r, c)]))
}

/// 8-bit sRGB to L*a*b*.
pub fn rgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    rgb_f64_to_lab(rgb.map(|v| v as f64))
}

/// sRGB on the 0–255 scale (real-valued) to L*a*b*.
pub fn rgb_f64_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let lin = rgb.map(|v| srgb_to_linear(v / 255.0));
    let xyz: [f64; 3] =
        std::array::from_fn(|r| (0..3).map(|c| RGB_TO_XYZ[r][c] * lin[c]).sum::<f64>());
    let fx = lab_f(xyz[0] / WHITE[0]);
    let fy = lab_f(xyz[1] / WHITE[1]);
    let fz = lab_f(xyz[2] / WHITE[2]);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// L*a*b* to sRGB on the 0–255 scale, clamped to the gamut, unrounded.
pub fn lab_to_rgb_f64(lab: [f64; 3]) -> [f64; 3] {
    let fy = (lab[0] + 16.0) / 116.0;
    let fx = fy + lab[1] / 500.0;
    let fz = fy - lab[2] / 200.0;
    let xyz = [
        WHITE[0] * lab_f_inv(fx),
        WHITE[1] * lab_f_inv(fy),
        WHITE[2] * lab_f_inv(fz),
    ];
    let m = xyz_to_rgb_matrix();
    std::array::from_fn(|r| {
        let lin: f64 = (0..3).map(|c| m[r][c] * xyz[c]).sum();
        255.0 * linear_to_srgb(lin.clamp(0.0, 1.0))
    })
}

pub fn lab_to_rgb(lab: [f64; 3]) -> [u8; 3] {
    lab_to_rgb_f64(lab).map(|v| v.round().clamp(0.0, 255.0) as u8)
}

/// Per-channel L*a*b* mean and (population) standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabStats {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl LabStats {
    pub fn of_lab(lab: &[[f64; 3]]) -> Result<Self> {
        if lab.is_empty() {
            return Err(Error::invalid("empty region"));
        }
        let n = lab.len() as f64;
        let mean: [f64; 3] = std::array::from_fn(|c| lab.iter().map(|p| p[c]).sum::<f64>() / n);
        let std = std::array::from_fn(|c| {
            (lab.iter().map(|p| (p[c] - mean[c]).powi(2)).sum::<f64>() / n).sqrt()
        });
        Ok(Self { mean, std })
    }

    pub fn of_pixels(pixels: &[[u8; 3]]) -> Result<Self> {
        let lab: Vec<[f64; 3]> = pixels.iter().map(|&p| rgb_to_lab(p)).collect();
        Self::of_lab(&lab)
    }
}

/// Standard deviations at or below this count as zero.
const FLAT_STD: f64 = 1e-9;

/// Transferred L*a*b* values before gamut clamping.
///
/// Per channel `out = (x − μ_src)·σ_tgt/σ_src + μ_tgt`; a flat source
/// channel is only shifted by `μ_tgt − μ_src`.
pub fn color_transfer_lab_values(region: &[[u8; 3]], target: &LabStats) -> Result<Vec<[f64; 3]>> {
    let lab: Vec<[f64; 3]> = region.iter().map(|&p| rgb_to_lab(p)).collect();
    let src = LabStats::of_lab(&lab)?;
    Ok(lab
        .iter()
        .map(|p| {
            std::array::from_fn(|c| {
                if src.std[c] <= FLAT_STD {
                    p[c] + target.mean[c] - src.mean[c]
                } else {
                    (p[c] - src.mean[c]) * (target.std[c] / src.std[c]) + target.mean[c]
                }
            })
        })
        .collect())
}

/// Recolor `region` so its L*a*b* statistics match `target`.
pub fn color_transfer_lab(region: &[[u8; 3]], target: &LabStats) -> Result<Vec<[u8; 3]>> {
    Ok(color_transfer_lab_values(region, target)?
        .into_iter()
        .map(lab_to_rgb)
        .collect())
}
