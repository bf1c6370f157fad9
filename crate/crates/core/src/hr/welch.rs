use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
}

impl Psd {
    pub fn bin_width(&self) -> f64 {
        self.freqs.get(1).copied().unwrap_or(0.0)
    }
}

/// Periodic (DFT-even) Hamming taper.
pub fn hamming(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / len as f64).cos())
        .collect()
}

/// Welch estimator with a reusable `nfft`-point transform.
#[derive(Clone)]
pub struct Welch {
    nfft: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Welch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Welch").field("nfft", &self.nfft).finish()
    }
}

impl Welch {
    pub fn new(nfft: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(nfft);
        Self { nfft, fft }
    }

    pub fn nfft(&self) -> usize {
        self.nfft
    }

    /// Density-scaled Welch estimate.
    ///
    /// Segments of `segment_len` samples (clipped to the input length)
    /// advance by `segment_len − overlap`; each is mean-detrended, Hamming
    /// tapered and zero-padded to `nfft`. Periodograms are averaged.
    pub fn psd(&self, x: &[f64], fs: f64, segment_len: usize, overlap: usize) -> Result<Psd> {
        if x.is_empty() {
            return Err(Error::invalid("empty window"));
        }
        let seg = segment_len.min(x.len()).max(1);
        if seg > self.nfft {
            return Err(Error::invalid(format!(
                "segment of {seg} samples exceeds nfft {}",
                self.nfft
            )));
        }
        if overlap >= seg {
            return Err(Error::invalid("overlap must be smaller than the segment"));
        }
        let step = seg - overlap;
        let n_seg = (x.len() - overlap) / step;
        let taper = hamming(seg);
        let scale = 1.0 / (fs * taper.iter().map(|w| w * w).sum::<f64>());
        let n_bins = self.nfft / 2 + 1;
        let mut power = vec![0.0; n_bins];
        let mut buf = vec![Complex64::new(0.0, 0.0); self.nfft];
        for s in 0..n_seg {
            let chunk = &x[s * step..s * step + seg];
            let mean = chunk.iter().sum::<f64>() / seg as f64;
            buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            for (i, (&v, &w)) in chunk.iter().zip(&taper).enumerate() {
                buf[i].re = (v - mean) * w;
            }
            self.fft.process(&mut buf);
            for (p, c) in power.iter_mut().zip(&buf) {
                *p += c.norm_sqr();
            }
        }
        let last = n_bins - 1;
        for (k, p) in power.iter_mut().enumerate() {
            *p *= scale / n_seg as f64;
            let is_nyquist = self.nfft.is_multiple_of(2) && k == last;
            if k != 0 && !is_nyquist {
                *p *= 2.0;
            }
        }
        let freqs = (0..n_bins).map(|k| k as f64 * fs / self.nfft as f64).collect();
        Ok(Psd { freqs, power })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct O(N·K) DFT periodogram of one mean-removed, tapered segment.
    fn naive_periodogram(x: &[f64], fs: f64, nfft: usize) -> Vec<f64> {
        let n = x.len();
        let w = hamming(n);
        let mean = x.iter().sum::<f64>() / n as f64;
        let s2: f64 = w.iter().map(|v| v * v).sum();
        (0..=nfft / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for i in 0..n {
                    let a = -2.0 * PI * (k * i) as f64 / nfft as f64;
                    let v = (x[i] - mean) * w[i];
                    re += v * a.cos();
                    im += v * a.sin();
                }
                let p = (re * re + im * im) / (fs * s2);
                if k == 0 || k == nfft / 2 {
                    p
                } else {
                    2.0 * p
                }
            })
            .collect()
    }

    fn test_signal(n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let t = i as f64 / 10.0;
                (2.0 * PI * 1.3 * t).sin() + 0.2 * (2.0 * PI * 2.9 * t).cos() + 0.5
            })
            .collect()
    }

    #[test]
    fn single_segment_matches_direct_dft() {
        let x = test_signal(64);
        let psd = Welch::new(256).psd(&x, 10.0, 64, 8).unwrap();
        let oracle = naive_periodogram(&x, 10.0, 256);
        for (a, b) in psd.power.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn matches_reference_values() {
        // Reference values from an independent Welch implementation
        // (Hamming, density scaling, constant detrend).
        let x = test_signal(64);
        let psd = Welch::new(256).psd(&x, 10.0, 64, 8).unwrap();
        let expect = [
            (0, 0.0015955059944532737),
            (1, 0.003161333561553449),
            (33, 2.3245427886752923),
            (34, 2.226101907075357),
            (74, 0.09400155977266246),
            (128, 6.7297852650143874e-06),
        ];
        for (k, v) in expect {
            assert!((psd.power[k] - v).abs() < 1e-9 * v.max(1.0), "bin {k}");
        }
        assert!((psd.freqs[33] - 1.2890625).abs() < 1e-12);

        // Two overlapping segments.
        let x: Vec<f64> = (0..120)
            .map(|i| {
                let t = i as f64 / 10.0;
                (2.0 * PI * 1.3 * t).sin() + 0.2 * (2.0 * PI * 2.9 * t).cos() + 0.5 + 0.01 * t * t
            })
            .collect();
        let psd = Welch::new(256).psd(&x, 10.0, 64, 8).unwrap();
        let expect = [
            (0, 0.004460313326601819),
            (1, 0.03412393338699795),
            (33, 2.331865969399698),
            (34, 2.2300342391560015),
            (74, 0.09315184787131295),
            (128, 7.70993240229043e-06),
        ];
        for (k, v) in expect {
            assert!((psd.power[k] - v).abs() < 1e-9 * v.max(1.0), "bin {k}");
        }
    }

    #[test]
    fn zero_input_zero_psd() {
        let psd = Welch::new(4096).psd(&[0.0; 300], 30.0, 300, 37).unwrap();
        assert!(psd.power.iter().all(|&p| p == 0.0));
        assert_eq!(psd.freqs.len(), 2049);
    }

    #[test]
    fn bin_spacing() {
        let psd = Welch::new(4096).psd(&[1.0, 2.0, 0.0, 1.0], 30.0, 4, 0).unwrap();
        assert!((psd.bin_width() - 0.00732421875).abs() < 1e-12);
        assert!((psd.bin_width() * 60.0 - 0.439453125).abs() < 1e-12);
    }

    #[test]
    fn tone_at_bin_peaks_there() {
        let fs = 30.0;
        let k = 164; // 164 · 30/4096 ≈ 1.2012 Hz
        let f = k as f64 * fs / 4096.0;
        let x: Vec<f64> = (0..300).map(|i| (2.0 * PI * f * i as f64 / fs).sin()).collect();
        let psd = Welch::new(4096).psd(&x, fs, 300, 37).unwrap();
        let argmax = (0..psd.power.len())
            .max_by(|&a, &b| psd.power[a].total_cmp(&psd.power[b]))
            .unwrap();
        assert_eq!(argmax, k);
    }

    #[test]
    fn parseval_broadband() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..3000).map(|_| normal.sample(&mut rng)).collect();
        let psd = Welch::new(4096).psd(&x, 30.0, 300, 37).unwrap();
        let area: f64 = psd.power.iter().sum::<f64>() * psd.bin_width();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64;
        assert!((area / var - 1.0).abs() < 0.05, "area {area} var {var}");
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(Welch::new(256).psd(&[], 10.0, 64, 8).is_err());
        assert!(Welch::new(16).psd(&[0.0; 64], 10.0, 64, 8).is_err());
    }
}
