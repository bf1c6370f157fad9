//! Heart-rate and image-quality metrics.

use crate::error::{Error, Result};
use crate::model::{Frame, HrSeries};

/// Window starts closer than this are the same window.
const START_TOL: f64 = 1e-6;

/// `(est, ref)` pairs at shared window starts where both values exist.
pub fn valid_pairs(est: &HrSeries, reference: &HrSeries) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let (es, rs) = (est.window_start(), reference.window_start());
    let (mut i, mut j) = (0, 0);
    while i < es.len() && j < rs.len() {
        if (es[i] - rs[j]).abs() <= START_TOL {
            if let (Some(a), Some(b)) = (est.hr_bpm()[i], reference.hr_bpm()[j]) {
                out.push((a, b));
            }
            i += 1;
            j += 1;
        } else if es[i] < rs[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Mean absolute error in bpm over valid pairs.
pub fn mae(est: &HrSeries, reference: &HrSeries) -> Result<f64> {
    let pairs = valid_pairs(est, reference);
    if pairs.is_empty() {
        return Err(Error::NoValidPairs);
    }
    Ok(pairs.iter().map(|(a, b)| (a - b).abs()).sum::<f64>() / pairs.len() as f64)
}

/// Pearson correlation over valid pairs; `None` when fewer than two pairs
/// or either side has zero variance.
pub fn pcc(est: &HrSeries, reference: &HrSeries) -> Option<f64> {
    let pairs = valid_pairs(est, reference);
    let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    pearson(&x, &y)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    // Relative guard: a constant series accumulates only rounding noise.
    let scale_x = x.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    let scale_y = y.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    if sxx <= 1e-24 * scale_x || syy <= 1e-24 * scale_y {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

fn same_dims(a: &Frame, b: &Frame) -> Result<()> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::DimensionMismatch {
            expected: a.dimensions(),
            actual: b.dimensions(),
        });
    }
    Ok(())
}

/// PSNR from a mean squared error; `+inf` when the error is zero.
pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

pub fn mse(a: &Frame, b: &Frame) -> Result<f64> {
    same_dims(a, b)?;
    let sum: f64 = a
        .as_raw()
        .iter()
        .zip(b.as_raw())
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum();
    Ok(sum / a.as_raw().len() as f64)
}

/// Peak signal-to-noise ratio over all three channels, peak 255.
pub fn psnr(a: &Frame, b: &Frame) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?, 255.0))
}

/// Gaussian-window SSIM parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub data_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            data_range: 255.0,
        }
    }
}

fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let r = (size / 2) as f64;
    let w: Vec<f64> = (0..size)
        .map(|i| (-(i as f64 - r).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Separable weighted window sums at every fully contained position.
fn filter_valid(x: &[f64], w: usize, h: usize, k: &[f64]) -> (Vec<f64>, usize, usize) {
    let n = k.len();
    let (ow, oh) = (w + 1 - n, h + 1 - n);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x0 in 0..ow {
            rows[y * ow + x0] = (0..n).map(|i| k[i] * x[y * w + x0 + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y0 in 0..oh {
        for x0 in 0..ow {
            out[y0 * ow + x0] = (0..n).map(|i| k[i] * rows[(y0 + i) * ow + x0]).sum();
        }
    }
    (out, ow, oh)
}

/// Mean SSIM of two single-channel planes over the valid window positions.
pub fn ssim_plane(a: &[f64], b: &[f64], width: usize, height: usize, p: &SsimParams) -> Result<f64> {
    if a.len() != width * height || b.len() != a.len() {
        return Err(Error::invalid("plane sizes disagree with dimensions"));
    }
    if width < p.window || height < p.window {
        return Err(Error::invalid(format!(
            "{width}x{height} image smaller than the {} px SSIM window",
            p.window
        )));
    }
    let k = gaussian_window(p.window, p.sigma);
    let prod = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).collect::<Vec<_>>();
    let (mu_a, _, _) = filter_valid(a, width, height, &k);
    let (mu_b, _, _) = filter_valid(b, width, height, &k);
    let (aa, _, _) = filter_valid(&prod(a, a), width, height, &k);
    let (bb, _, _) = filter_valid(&prod(b, b), width, height, &k);
    let (ab, _, _) = filter_valid(&prod(a, b), width, height, &k);
    let c1 = (p.k1 * p.data_range).powi(2);
    let c2 = (p.k2 * p.data_range).powi(2);
    let n = mu_a.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = aa[i] - ma * ma;
            let vb = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .sum();
    Ok(total / n as f64)
}

/// BT.601 luma as reals.
pub fn luma(frame: &Frame) -> Vec<f64> {
    frame
        .pixels()
        .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
        .collect()
}

/// SSIM on luma with an 11×11 Gaussian window (σ = 1.5).
pub fn ssim(a: &Frame, b: &Frame) -> Result<f64> {
    same_dims(a, b)?;
    let (w, h) = a.dimensions();
    ssim_plane(&luma(a), &luma(b), w as usize, h as usize, &SsimParams::default())
}
