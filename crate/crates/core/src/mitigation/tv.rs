//! Total-variation (ROF) denoising by Chambolle's dual projection
//! algorithm, for images (per channel, 2-D) and 1-D signals.

use serde::{Deserialize, Serialize};

use crate::model::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TvParams {
    pub weight: f64,
    /// Relative change of the cost below which iteration stops.
    pub eps: f64,
    pub max_iters: usize,
}

impl Default for TvParams {
    fn default() -> Self {
        Self {
            weight: 0.25,
            eps: 0.0002,
            max_iters: 200,
        }
    }
}

/// Chambolle iteration on a row-major array of `shape` (1 or 2 dims).
fn chambolle(image: &[f64], shape: &[usize], p: &TvParams) -> Vec<f64> {
    if p.weight <= 0.0 || image.is_empty() {
        return image.to_vec();
    }
    let ndim = shape.len();
    let size = image.len();
    let strides: Vec<usize> = match ndim {
        1 => vec![1],
        _ => vec![shape[1], 1],
    };
    let last_along = |idx: usize, ax: usize| -> bool { (idx / strides[ax]) % shape[ax] == shape[ax] - 1 };
    let first_along = |idx: usize, ax: usize| -> bool { (idx / strides[ax]).is_multiple_of(shape[ax]) };

    let mut dual = vec![vec![0.0; size]; ndim];
    let mut grad = vec![vec![0.0; size]; ndim];
    let mut d = vec![0.0; size];
    let mut out = image.to_vec();
    let tau = 1.0 / (2.0 * ndim as f64);
    let (mut e_init, mut e_prev) = (0.0, 0.0);

    for i in 0..p.max_iters {
        if i > 0 {
            // d = −div p (backward differences, zero flux at the far edge)
            for idx in 0..size {
                let mut v = 0.0;
                for ax in 0..ndim {
                    v -= dual[ax][idx];
                    if !first_along(idx, ax) {
                        v += dual[ax][idx - strides[ax]];
                    }
                }
                d[idx] = v;
            }
            for idx in 0..size {
                out[idx] = image[idx] + d[idx];
            }
        }
        let mut energy: f64 = d.iter().map(|v| v * v).sum();

        for ax in 0..ndim {
            for idx in 0..size {
                grad[ax][idx] = if last_along(idx, ax) {
                    0.0
                } else {
                    out[idx + strides[ax]] - out[idx]
                };
            }
        }
        for idx in 0..size {
            let norm = (0..ndim).map(|ax| grad[ax][idx].powi(2)).sum::<f64>().sqrt();
            energy += p.weight * norm;
            let denom = 1.0 + tau / p.weight * norm;
            for ax in 0..ndim {
                dual[ax][idx] = (dual[ax][idx] - tau * grad[ax][idx]) / denom;
            }
        }
        energy /= size as f64;
        if i == 0 {
            e_init = energy;
            e_prev = energy;
        } else if (e_prev - energy).abs() < p.eps * e_init {
            break;
        } else {
            e_prev = energy;
        }
    }
    out
}

/// Total variation of a 1-D sequence.
pub fn total_variation_1d(x: &[f64]) -> f64 {
    x.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Isotropic total variation of a `width × height` plane.
pub fn total_variation_2d(x: &[f64], width: usize) -> f64 {
    let height = x.len() / width;
    let mut tv = 0.0;
    for y in 0..height {
        for xx in 0..width {
            let i = y * width + xx;
            let gx = if xx + 1 < width { x[i + 1] - x[i] } else { 0.0 };
            let gy = if y + 1 < height { x[i + width] - x[i] } else { 0.0 };
            tv += gx.hypot(gy);
        }
    }
    tv
}

/// Denoise one real-valued plane.
pub fn tv_denoise_plane(plane: &[f64], width: usize, p: &TvParams) -> Vec<f64> {
    chambolle(plane, &[plane.len() / width, width], p)
}

/// Per-channel TV denoising on intensities scaled to [0, 1].
pub fn tv_denoise_image(frame: &Frame, p: &TvParams) -> Frame {
    if p.weight <= 0.0 {
        return frame.clone();
    }
    let (w, h) = frame.dimensions();
    let n = (w * h) as usize;
    let raw = frame.as_raw();
    let mut out = frame.clone();
    for c in 0..3 {
        let plane: Vec<f64> = (0..n).map(|i| raw[i * 3 + c] as f64 / 255.0).collect();
        let den = tv_denoise_plane(&plane, w as usize, p);
        let buf: &mut [u8] = &mut out;
        for i in 0..n {
            buf[i * 3 + c] = (den[i].clamp(0.0, 1.0) * 255.0).round() as u8;
        }
    }
    out
}

/// 1-D TV denoising applied as-is (no rescaling).
pub fn tv_denoise_raw(signal: &[f64], p: &TvParams) -> Vec<f64> {
    chambolle(signal, &[signal.len()], p)
}

/// TV denoising of an rPPG signal.
///
/// The signal is standardized to zero mean and unit variance first so the
/// regularization weight has the same meaning for every extractor, then
/// mapped back to its original scale.
pub fn tv_denoise_signal(signal: &[f64], p: &TvParams) -> Vec<f64> {
    if signal.is_empty() || p.weight <= 0.0 {
        return signal.to_vec();
    }
    let n = signal.len() as f64;
    let mean = signal.iter().sum::<f64>() / n;
    let sd = (signal.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    if !(sd > 0.0) {
        return signal.to_vec();
    }
    let z: Vec<f64> = signal.iter().map(|v| (v - mean) / sd).collect();
    tv_denoise_raw(&z, p).into_iter().map(|v| v * sd + mean).collect()
}
