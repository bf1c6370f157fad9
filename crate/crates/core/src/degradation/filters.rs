use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Frame;

/// Additive Gaussian noise on intensities normalized to [0, 1].
///
/// Noise fields come from ChaCha8 seeded with `seed`, so they are identical
/// on every platform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mean: f64,
    pub variance: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub const DEFAULT_VARIANCE: f64 = 0.004;

    pub fn new(variance: f64, seed: u64) -> Result<Self> {
        if !(variance.is_finite() && variance >= 0.0) {
            return Err(Error::invalid(format!("noise variance must be >= 0, got {variance}")));
        }
        Ok(Self {
            mean: 0.0,
            variance,
            seed,
        })
    }
}

pub fn add_gaussian_noise(frame: &Frame, spec: &NoiseSpec) -> Frame {
    if spec.variance == 0.0 && spec.mean == 0.0 {
        return frame.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(spec.mean, spec.variance.sqrt()).expect("validated variance");
    let mut out = frame.clone();
    for v in out.iter_mut() {
        let x = *v as f64 / 255.0 + normal.sample(&mut rng);
        *v = (x.clamp(0.0, 1.0) * 255.0).round() as u8;
    }
    out
}

/// Square Gaussian blur kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlurSpec {
    pub kernel_size: u32,
    pub sigma: f64,
}

impl BlurSpec {
    pub const DEFAULT_KERNEL: u32 = 25;

    /// Sigma follows the usual size rule `0.3·((k−1)/2 − 1) + 0.8`.
    pub fn new(kernel_size: u32) -> Result<Self> {
        if kernel_size == 0 || kernel_size.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "kernel size must be odd and >= 1, got {kernel_size}"
            )));
        }
        let sigma = 0.3 * ((kernel_size as f64 - 1.0) * 0.5 - 1.0) + 0.8;
        Ok(Self { kernel_size, sigma })
    }
}

impl Default for BlurSpec {
    fn default() -> Self {
        Self::new(Self::DEFAULT_KERNEL).expect("odd kernel")
    }
}

/// Normalized 1-D Gaussian taps.
pub fn gaussian_kernel_1d(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let mut k: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - c;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Reflect-101 index (`dcb|abcd|cba`).
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - m;
    }
    m as usize
}

/// Separable Gaussian convolution per channel with reflected borders.
pub fn gaussian_blur(frame: &Frame, spec: &BlurSpec) -> Result<Frame> {
    let (w, h) = frame.dimensions();
    let k = spec.kernel_size;
    if w < k || h < k {
        return Err(Error::invalid(format!(
            "frame {w}x{h} smaller than {k}x{k} blur kernel"
        )));
    }
    let kernel = gaussian_kernel_1d(k as usize, spec.sigma);
    let r = (k / 2) as isize;
    let (wu, hu) = (w as usize, h as usize);
    let src = frame.as_raw();
    let mut tmp = vec![0.0f64; wu * hu * 3];
    for y in 0..hu {
        for x in 0..wu {
            for c in 0..3 {
                let mut acc = 0.0;
                for (t, kv) in kernel.iter().enumerate() {
                    let xx = reflect(x as isize + t as isize - r, wu);
                    acc += kv * src[(y * wu + xx) * 3 + c] as f64;
                }
                tmp[(y * wu + x) * 3 + c] = acc;
            }
        }
    }
    let mut out = Frame::new(w, h);
    let dst: &mut [u8] = &mut out;
    for y in 0..hu {
        for x in 0..wu {
            for c in 0..3 {
                let mut acc = 0.0;
                for (t, kv) in kernel.iter().enumerate() {
                    let yy = reflect(y as isize + t as isize - r, hu);
                    acc += kv * tmp[(yy * wu + x) * 3 + c];
                }
                dst[(y * wu + x) * 3 + c] = acc.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{Rgb, RgbImage};

    fn variance(frame: &Frame) -> f64 {
        let n = frame.as_raw().len() as f64;
        let mean = frame.as_raw().iter().map(|&v| v as f64).sum::<f64>() / n;
        frame.as_raw().iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n
    }

    #[test]
    fn zero_variance_is_identity() {
        let f = RgbImage::from_fn(9, 9, |x, y| Rgb([x as u8 * 20, y as u8 * 20, 3]));
        assert_eq!(add_gaussian_noise(&f, &NoiseSpec::new(0.0, 1).unwrap()), f);
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let f = RgbImage::from_pixel(64, 64, Rgb([100, 120, 140]));
        let spec = NoiseSpec::new(0.004, 42).unwrap();
        assert_eq!(add_gaussian_noise(&f, &spec), add_gaussian_noise(&f, &spec));
        let other = NoiseSpec::new(0.004, 43).unwrap();
        assert_ne!(add_gaussian_noise(&f, &spec), add_gaussian_noise(&f, &other));
    }

    #[test]
    fn noise_variance_matches_spec() {
        // 256x256 mid-gray: 196k samples, none clamped at +-3.9 sigma.
        let f = RgbImage::from_pixel(256, 256, Rgb([128, 128, 128]));
        let out = add_gaussian_noise(&f, &NoiseSpec::new(0.004, 9).unwrap());
        let diffs: Vec<f64> = out
            .as_raw()
            .iter()
            .map(|&v| (v as f64 - 128.0) / 255.0)
            .collect();
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
        assert!((var - 0.004).abs() < 0.0004, "variance {var}");
        assert!(mean.abs() < 1e-3);
    }

    #[test]
    fn negative_variance_rejected() {
        assert!(NoiseSpec::new(-0.1, 0).is_err());
    }

    #[test]
    fn blur_spec_sigma() {
        let spec = BlurSpec::default();
        assert_eq!(spec.kernel_size, 25);
        assert!((spec.sigma - 4.1).abs() < 1e-12);
        assert!(BlurSpec::new(24).is_err());
        let k = gaussian_kernel_1d(25, spec.sigma);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn blur_uniform_unchanged() {
        let f = RgbImage::from_pixel(30, 28, Rgb([17, 140, 233]));
        assert_eq!(gaussian_blur(&f, &BlurSpec::default()).unwrap(), f);
    }

    #[test]
    fn blur_impulse_response() {
        // Oracle: the 2-D Gaussian evaluated directly, not as a product of
        // the separable passes.
        let spec = BlurSpec::default();
        let (w, h, cx, cy) = (61u32, 61u32, 30i64, 30i64);
        let mut f = RgbImage::new(w, h);
        f.put_pixel(cx as u32, cy as u32, Rgb([255, 255, 255]));
        let out = gaussian_blur(&f, &spec).unwrap();
        let s2 = 2.0 * spec.sigma * spec.sigma;
        let mut z = 0.0;
        for dy in -12i64..=12 {
            for dx in -12i64..=12 {
                z += (-((dx * dx + dy * dy) as f64) / s2).exp();
            }
        }
        let mut mismatched = 0;
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                let (dx, dy) = (x - cx, y - cy);
                let expect = if dx.abs() <= 12 && dy.abs() <= 12 {
                    255.0 * (-((dx * dx + dy * dy) as f64) / s2).exp() / z
                } else {
                    0.0
                };
                let got = out.get_pixel(x as u32, y as u32).0[0] as f64;
                assert!((got - expect).abs() <= 0.5 + 1e-9, "({x},{y}) {got} vs {expect}");
                if got != expect.round() {
                    mismatched += 1;
                }
            }
        }
        assert_eq!(mismatched, 0);
    }

    #[test]
    fn blur_reduces_variance() {
        let f = RgbImage::from_fn(40, 33, |x, y| {
            Rgb([((x * 7919 + y * 104729) % 256) as u8, (x * 5) as u8, (y * 3) as u8])
        });
        let out = gaussian_blur(&f, &BlurSpec::new(7).unwrap()).unwrap();
        assert!(variance(&out) <= variance(&f));
    }

    #[test]
    fn blur_rejects_small_frames() {
        let f = RgbImage::new(20, 40);
        assert!(gaussian_blur(&f, &BlurSpec::default()).is_err());
    }

    #[test]
    fn reflect_101() {
        assert_eq!(reflect(-1, 5), 1);
        assert_eq!(reflect(-2, 5), 2);
        assert_eq!(reflect(5, 5), 3);
        assert_eq!(reflect(6, 5), 2);
        assert_eq!(reflect(2, 5), 2);
    }
}
