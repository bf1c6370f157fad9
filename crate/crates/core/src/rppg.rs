//! Classical BVP extraction from RGB traces: GREEN, CHROM, POS and OMIT.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hr::{butter_bandpass, filtfilt, WindowConfig};
use crate::model::{BvpSignal, RgbTrace};

/// Standard deviations below this are treated as zero.
const STD_EPS: f64 = 1e-12;

/// POS temporal window in seconds.
pub const POS_WINDOW_S: f64 = 1.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodId {
    Green,
    Chrom,
    Pos,
    Omit,
}

impl MethodId {
    pub const ALL: [MethodId; 4] = [MethodId::Green, MethodId::Chrom, MethodId::Pos, MethodId::Omit];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodId::Green => "green",
            MethodId::Chrom => "chrom",
            MethodId::Pos => "pos",
            MethodId::Omit => "omit",
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "green" => Ok(MethodId::Green),
            "chrom" => Ok(MethodId::Chrom),
            "pos" => Ok(MethodId::Pos),
            "omit" => Ok(MethodId::Omit),
            other => Err(Error::invalid(format!("unknown method '{other}'"))),
        }
    }
}

/// An extracted pulse signal; `degenerate` marks inputs whose statistics
/// collapsed (zero chrominance or projection variance).
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub bvp: BvpSignal,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractOptions {
    /// Band used inside CHROM.
    pub band: (f64, f64),
    pub filter_order: usize,
    /// CHROM: estimate the mixing ratio per Hann-weighted 1.6 s window
    /// instead of over the whole trace.
    pub chrom_per_window: bool,
    pub pos_window_s: f64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        let w = WindowConfig::default();
        Self {
            band: w.band,
            filter_order: w.filter_order,
            chrom_per_window: false,
            pos_window_s: POS_WINDOW_S,
        }
    }
}

pub fn extract(method: MethodId, trace: &RgbTrace) -> Result<Extraction> {
    extract_with(method, trace, &ExtractOptions::default())
}

pub fn extract_with(method: MethodId, trace: &RgbTrace, opts: &ExtractOptions) -> Result<Extraction> {
    match method {
        MethodId::Green => extract_green(trace).map(|bvp| Extraction {
            bvp,
            degenerate: false,
        }),
        MethodId::Chrom => extract_chrom(trace, opts),
        MethodId::Pos => extract_pos(trace, opts.pos_window_s),
        MethodId::Omit => extract_omit(trace).map(|bvp| Extraction {
            bvp,
            degenerate: false,
        }),
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn std(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

fn demean(mut x: Vec<f64>) -> Vec<f64> {
    let m = mean(&x);
    x.iter_mut().for_each(|v| *v -= m);
    x
}

/// Channel divided by its mean; a zero-mean channel normalizes to ones.
fn normalized(x: &[f64]) -> Vec<f64> {
    let m = mean(x);
    if m == 0.0 {
        vec![1.0; x.len()]
    } else {
        x.iter().map(|v| v / m).collect()
    }
}

fn require_len(trace: &RgbTrace, needed: usize) -> Result<()> {
    if trace.len() < needed {
        return Err(Error::TooShort {
            needed,
            actual: trace.len(),
        });
    }
    Ok(())
}

/// Mean-removed green channel.
pub fn extract_green(trace: &RgbTrace) -> Result<BvpSignal> {
    require_len(trace, 2)?;
    BvpSignal::new(demean(trace.g().to_vec()), trace.nominal_fps())
}

/// Chrominance method: `X = 3Rn − 2Gn`, `Y = 1.5Rn + Gn − 1.5Bn`, both
/// band-passed, `S = Xf − (σX/σY)·Yf`.
pub fn extract_chrom(trace: &RgbTrace, opts: &ExtractOptions) -> Result<Extraction> {
    let fs = trace.nominal_fps();
    require_len(trace, ((2.0 * fs).ceil() as usize).max(2))?;
    let rn = normalized(trace.r());
    let gn = normalized(trace.g());
    let bn = normalized(trace.b());
    let x: Vec<f64> = rn.iter().zip(&gn).map(|(r, g)| 3.0 * r - 2.0 * g).collect();
    let y: Vec<f64> = rn
        .iter()
        .zip(&gn)
        .zip(&bn)
        .map(|((r, g), b)| 1.5 * r + g - 1.5 * b)
        .collect();
    let sos = butter_bandpass(opts.filter_order, opts.band.0, opts.band.1, fs)?;
    let xf = filtfilt(&sos, &x)?;
    let yf = filtfilt(&sos, &y)?;

    let (samples, degenerate) = if opts.chrom_per_window {
        chrom_overlap_add(&xf, &yf, (POS_WINDOW_S * fs).round() as usize)
    } else {
        let (sx, sy) = (std(&xf), std(&yf));
        if sy < STD_EPS {
            let s = if sx < STD_EPS {
                vec![0.0; xf.len()]
            } else {
                xf.iter().zip(&yf).map(|(a, b)| a - b).collect()
            };
            (s, true)
        } else {
            let alpha = sx / sy;
            (xf.iter().zip(&yf).map(|(a, b)| a - alpha * b).collect(), false)
        }
    };
    Ok(Extraction {
        bvp: BvpSignal::new(demean(samples), fs)?,
        degenerate,
    })
}

fn chrom_overlap_add(xf: &[f64], yf: &[f64], len: usize) -> (Vec<f64>, bool) {
    let n = xf.len();
    let len = len.clamp(2, n) & !1;
    let len = len.max(2);
    let step = len / 2;
    let hann: Vec<f64> = (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / len as f64).cos())
        .collect();
    let mut out = vec![0.0; n];
    let mut degenerate = false;
    let mut start = 0;
    while start + len <= n {
        let (xw, yw) = (&xf[start..start + len], &yf[start..start + len]);
        let sy = std(yw);
        let alpha = if sy < STD_EPS {
            degenerate = true;
            1.0
        } else {
            std(xw) / sy
        };
        let s: Vec<f64> = xw.iter().zip(yw).map(|(a, b)| a - alpha * b).collect();
        let s = demean(s);
        for i in 0..len {
            out[start + i] += s[i] * hann[i];
        }
        start += step;
    }
    (out, degenerate)
}

/// Plane-orthogonal-to-skin projection with overlap-add over windows of
/// `window_s` seconds.
pub fn extract_pos(trace: &RgbTrace, window_s: f64) -> Result<Extraction> {
    let fs = trace.nominal_fps();
    let l = ((window_s * fs).round() as usize).max(2);
    require_len(trace, l)?;
    let n = trace.len();
    let mut h = vec![0.0; n];
    let mut degenerate = false;
    let mut s1 = vec![0.0; l];
    let mut s2 = vec![0.0; l];
    for start in 0..=n - l {
        let end = start + l;
        let rn = normalized(&trace.r()[start..end]);
        let gn = normalized(&trace.g()[start..end]);
        let bn = normalized(&trace.b()[start..end]);
        for i in 0..l {
            s1[i] = gn[i] - bn[i];
            s2[i] = -2.0 * rn[i] + gn[i] + bn[i];
        }
        let sd2 = std(&s2);
        let win: Vec<f64> = if sd2 < STD_EPS {
            degenerate = true;
            s1.clone()
        } else {
            let ratio = std(&s1) / sd2;
            s1.iter().zip(&s2).map(|(a, b)| a + ratio * b).collect()
        };
        let win = demean(win);
        for (acc, v) in h[start..end].iter_mut().zip(win) {
            *acc += v;
        }
    }
    Ok(Extraction {
        bvp: BvpSignal::new(demean(h), fs)?,
        degenerate,
    })
}

/// Orthonormal basis whose first column is `m/‖m‖`, from the QR
/// factorization of `[m e1 e2]`.
pub fn omit_basis(m: [f64; 3]) -> Result<Matrix3<f64>> {
    let v = Vector3::from(m);
    if !(v.norm() > 0.0) {
        return Err(Error::Degenerate("mean color vector is zero".into()));
    }
    let a = Matrix3::from_columns(&[v, Vector3::x(), Vector3::y()]);
    Ok(a.qr().q())
}

/// Projection of the mean-normalized trace onto the second basis vector
/// orthogonal to the mean skin color.
pub fn extract_omit(trace: &RgbTrace) -> Result<BvpSignal> {
    require_len(trace, 2)?;
    let m = [mean(trace.r()), mean(trace.g()), mean(trace.b())];
    let q = omit_basis(m)?;
    let q2 = q.column(1);
    let chans = trace.channels();
    let samples = (0..trace.len())
        .map(|i| {
            (0..3)
                .map(|c| {
                    let x = if m[c] == 0.0 { 0.0 } else { chans[c][i] / m[c] - 1.0 };
                    q2[c] * x
                })
                .sum()
        })
        .collect();
    BvpSignal::new(demean(samples), trace.nominal_fps())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hr::Welch;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::PI;

    fn pulse_trace(f: f64, fs: f64, seconds: f64, amp: [f64; 3], base: [f64; 3]) -> RgbTrace {
        let n = (seconds * fs) as usize;
        let ch = |c: usize| -> Vec<f64> {
            (0..n)
                .map(|i| base[c] + amp[c] * (2.0 * PI * f * i as f64 / fs).sin())
                .collect()
        };
        RgbTrace::uniform(ch(0), ch(1), ch(2), fs).unwrap()
    }

    fn constant_trace() -> RgbTrace {
        RgbTrace::uniform(vec![150.0; 200], vec![100.0; 200], vec![80.0; 200], 30.0).unwrap()
    }

    /// FFT-oracle peak frequency of the whole signal.
    fn peak_hz(sig: &BvpSignal) -> f64 {
        let welch = Welch::new(4096);
        let psd = welch.psd(&sig.samples, sig.fs, sig.len(), sig.len() / 8).unwrap();
        let k = (0..psd.power.len())
            .filter(|&k| psd.freqs[k] >= 0.75 && psd.freqs[k] <= 4.0)
            .max_by(|&a, &b| psd.power[a].total_cmp(&psd.power[b]))
            .unwrap();
        psd.freqs[k]
    }

    fn scaled(t: &RgbTrace, k: f64) -> RgbTrace {
        let s = |v: &[f64]| v.iter().map(|x| x * k).collect::<Vec<_>>();
        RgbTrace::uniform(s(t.r()), s(t.g()), s(t.b()), t.nominal_fps()).unwrap()
    }

    fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
    }

    #[test]
    fn method_names_round_trip() {
        for m in MethodId::ALL {
            assert_eq!(m.as_str().parse::<MethodId>().unwrap(), m);
        }
        assert!("lgi".parse::<MethodId>().is_err());
    }

    #[test]
    fn constant_trace_gives_zero_signal() {
        let t = constant_trace();
        assert!(extract_green(&t).unwrap().samples.iter().all(|&v| v == 0.0));
        let chrom = extract_chrom(&t, &ExtractOptions::default()).unwrap();
        assert!(chrom.degenerate);
        assert!(chrom.bvp.samples.iter().all(|v| v.abs() < 1e-12));
        let pos = extract_pos(&t, POS_WINDOW_S).unwrap();
        assert!(pos.bvp.samples.iter().all(|v| v.abs() < 1e-12));
        assert!(extract_omit(&t).unwrap().samples.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn green_peak_and_length() {
        let t = pulse_trace(1.2, 30.0, 20.0, [0.0, 2.0, 0.0], [120.0, 100.0, 80.0]);
        let bvp = extract_green(&t).unwrap();
        assert_eq!(bvp.len(), t.len());
        assert_eq!(bvp.fs, 30.0);
        assert!((peak_hz(&bvp) - 1.2).abs() < 30.0 / 4096.0);
        let empty = RgbTrace::uniform(vec![], vec![], vec![], 30.0).unwrap();
        assert!(extract_green(&empty).is_err());
    }

    #[test]
    fn green_is_gain_equivariant() {
        let t = pulse_trace(1.4, 30.0, 12.0, [1.0, 2.0, 0.5], [120.0, 100.0, 80.0]);
        let a = extract_green(&t).unwrap();
        let b = extract_green(&scaled(&t, 1.5)).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((1.5 * x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn gain_invariance() {
        let t = pulse_trace(1.4, 30.0, 12.0, [1.0, 2.0, 0.5], [120.0, 100.0, 80.0]);
        let k = 0.7;
        let opts = ExtractOptions::default();
        let a = extract_chrom(&t, &opts).unwrap().bvp.samples;
        let b = extract_chrom(&scaled(&t, k), &opts).unwrap().bvp.samples;
        assert!(max_rel_diff(&a, &b) < 1e-9);
        let a = extract_pos(&t, POS_WINDOW_S).unwrap().bvp.samples;
        let b = extract_pos(&scaled(&t, k), POS_WINDOW_S).unwrap().bvp.samples;
        assert!(max_rel_diff(&a, &b) < 1e-9);
        let a = extract_omit(&t).unwrap().samples;
        let b = extract_omit(&scaled(&t, k)).unwrap().samples;
        assert!(max_rel_diff(&a, &b) < 1e-9);
    }

    #[test]
    fn chrom_skin_tone_pulse() {
        let t = pulse_trace(1.5, 30.0, 20.0, [1.0, 2.0, 0.6], [170.0, 120.0, 100.0]);
        for per_window in [false, true] {
            let opts = ExtractOptions {
                chrom_per_window: per_window,
                ..Default::default()
            };
            let e = extract_chrom(&t, &opts).unwrap();
            assert!(!e.degenerate);
            assert!((peak_hz(&e.bvp) - 1.5).abs() < 30.0 / 4096.0);
        }
        let short = pulse_trace(1.5, 30.0, 1.5, [1.0, 2.0, 0.6], [170.0, 120.0, 100.0]);
        assert!(extract_chrom(&short, &ExtractOptions::default()).is_err());
    }

    #[test]
    fn pos_green_only_modulation() {
        let t = pulse_trace(1.2, 30.0, 30.0, [0.0, 2.0, 0.0], [170.0, 120.0, 100.0]);
        let e = extract_pos(&t, POS_WINDOW_S).unwrap();
        assert!((60.0 * peak_hz(&e.bvp) - 72.0).abs() <= 0.5);
        let short = pulse_trace(1.2, 30.0, 1.0, [0.0, 2.0, 0.0], [170.0, 120.0, 100.0]);
        assert!(extract_pos(&short, POS_WINDOW_S).is_err());
    }

    #[test]
    fn omit_basis_is_orthonormal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let u = rand_distr::Uniform::new(1.0, 255.0).unwrap();
        for _ in 0..100 {
            let m = [u.sample(&mut rng), u.sample(&mut rng), u.sample(&mut rng)];
            let q = omit_basis(m).unwrap();
            let err = (q.transpose() * q - Matrix3::identity()).abs().max();
            assert!(err < 1e-12);
            let q1 = q.column(0);
            let mv = Vector3::from(m).normalize();
            assert!((q1.dot(&mv).abs() - 1.0).abs() < 1e-12);
        }
        assert!(omit_basis([0.0; 3]).is_err());
    }

    #[test]
    fn omit_recovers_orthogonal_pulse() {
        let base = [160.0, 110.0, 90.0];
        let q = omit_basis(base).unwrap();
        let dir = q.column(1);
        let fs = 30.0;
        let n = 600;
        let f = 1.8;
        let ch = |c: usize| -> Vec<f64> {
            (0..n)
                .map(|i| base[c] + 3.0 * dir[c] * (2.0 * PI * f * i as f64 / fs).sin())
                .collect()
        };
        let t = RgbTrace::uniform(ch(0), ch(1), ch(2), fs).unwrap();
        let bvp = extract_omit(&t).unwrap();
        assert!((peak_hz(&bvp) - f).abs() < fs / 4096.0);
    }

    #[test]
    fn outputs_zero_mean_and_deterministic() {
        let t = pulse_trace(2.2, 30.0, 15.0, [1.0, 2.0, 0.6], [170.0, 120.0, 100.0]);
        for m in MethodId::ALL {
            let a = extract(m, &t).unwrap();
            let b = extract(m, &t).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.bvp.fs, 30.0);
            let sd = std(&a.bvp.samples);
            assert!(mean(&a.bvp.samples).abs() < 1e-6 * sd, "{m}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10))]
        #[test]
        fn frequency_fidelity(f in 0.75f64..4.0, seed in any::<u64>()) {
            let fs = 30.0;
            let n = 600;
            let amp = [1.0, 2.0, 0.6];
            let base = [170.0, 120.0, 100.0];
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            // Noise power 30 dB below the green pulse.
            let noise = Normal::new(0.0, 2.0 / 2f64.sqrt() * 10f64.powf(-1.5)).unwrap();
            let mut ch: [Vec<f64>; 3] = std::array::from_fn(|_| Vec::with_capacity(n));
            for i in 0..n {
                let s = (2.0 * PI * f * i as f64 / fs).sin();
                for c in 0..3 {
                    ch[c].push(base[c] + amp[c] * s + noise.sample(&mut rng));
                }
            }
            let t = RgbTrace::uniform(ch[0].clone(), ch[1].clone(), ch[2].clone(), fs).unwrap();
            for m in MethodId::ALL {
                let e = extract(m, &t).unwrap();
                let got = peak_hz(&e.bvp);
                prop_assert!((got - f).abs() <= fs / 4096.0, "{} {} vs {}", m, got, f);
            }
        }
    }
}
