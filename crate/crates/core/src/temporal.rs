//! Frame-rate reduction and network-like random frame loss.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FrameSequence, RgbTrace};

/// Transmitter-side record of which frames survived and when they were
/// captured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropManifest {
    pub kept_indices: Vec<usize>,
    pub original_timestamps: Vec<f64>,
    /// Frame rate of the original stream.
    pub nominal_fps: f64,
    pub total_original: usize,
}

impl DropManifest {
    pub fn new(
        kept_indices: Vec<usize>,
        original_timestamps: Vec<f64>,
        nominal_fps: f64,
        total_original: usize,
    ) -> Result<Self> {
        if kept_indices.len() != original_timestamps.len() {
            return Err(Error::invalid("kept indices and timestamps differ in length"));
        }
        if kept_indices.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("kept indices must be strictly increasing"));
        }
        if kept_indices.last().is_some_and(|&i| i >= total_original) {
            return Err(Error::invalid("kept index beyond original length"));
        }
        if original_timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("manifest timestamps must be strictly increasing"));
        }
        if !(nominal_fps.is_finite() && nominal_fps > 0.0) {
            return Err(Error::invalid("manifest fps must be > 0"));
        }
        Ok(Self {
            kept_indices,
            original_timestamps,
            nominal_fps,
            total_original,
        })
    }

    /// Manifest of an untouched stream.
    pub fn full(timestamps: &[f64], nominal_fps: f64) -> Result<Self> {
        Self::new(
            (0..timestamps.len()).collect(),
            timestamps.to_vec(),
            nominal_fps,
            timestamps.len(),
        )
    }

    pub fn kept(&self) -> usize {
        self.kept_indices.len()
    }
}

/// Anything that can be thinned frame-by-frame.
pub trait Timeline: Sized {
    fn timeline(&self) -> &[f64];
    fn fps(&self) -> f64;
    fn keep(&self, indices: &[usize], nominal_fps: f64) -> Result<Self>;
}

impl Timeline for FrameSequence {
    fn timeline(&self) -> &[f64] {
        self.timestamps()
    }

    fn fps(&self) -> f64 {
        self.nominal_fps()
    }

    fn keep(&self, indices: &[usize], nominal_fps: f64) -> Result<Self> {
        self.select(indices, nominal_fps)
    }
}

impl Timeline for RgbTrace {
    fn timeline(&self) -> &[f64] {
        self.timestamps()
    }

    fn fps(&self) -> f64 {
        self.nominal_fps()
    }

    fn keep(&self, indices: &[usize], nominal_fps: f64) -> Result<Self> {
        self.select(indices, nominal_fps)
    }
}

/// Indices `floor(k · nominal / target)` below `total`, deduplicated.
pub fn decimation_schedule(total: usize, nominal_fps: f64, target_fps: f64) -> Result<Vec<usize>> {
    if !(target_fps.is_finite() && target_fps > 0.0) || target_fps > nominal_fps {
        return Err(Error::invalid(format!(
            "target fps {target_fps} must be in (0, {nominal_fps}]"
        )));
    }
    let ratio = nominal_fps / target_fps;
    let mut out = Vec::new();
    for k in 0.. {
        // Tolerance absorbs representation error in ratios such as 30/20.
        let idx = (k as f64 * ratio + 1e-9).floor() as usize;
        if idx >= total {
            break;
        }
        if out.last() != Some(&idx) {
            out.push(idx);
        }
    }
    Ok(out)
}

fn manifest_for<T: Timeline>(x: &T, kept: Vec<usize>) -> Result<DropManifest> {
    let ts = kept.iter().map(|&i| x.timeline()[i]).collect();
    DropManifest::new(kept, ts, x.fps(), x.timeline().len())
}

/// Regular decimation to `target_fps`; the output advertises the new rate.
pub fn downsample_uniform<T: Timeline>(x: &T, target_fps: f64) -> Result<(T, DropManifest)> {
    let kept = decimation_schedule(x.timeline().len(), x.fps(), target_fps)?;
    let out = x.keep(&kept, target_fps)?;
    Ok((out, manifest_for(x, kept)?))
}

/// Remove exactly `round(fraction · N)` frames chosen uniformly without
/// replacement by a ChaCha8 stream seeded with `seed`.
///
/// Survivors keep their order and the original nominal rate.
pub fn drop_random<T: Timeline>(x: &T, fraction: f64, seed: u64) -> Result<(T, DropManifest)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::invalid(format!("drop fraction {fraction} outside [0, 1)")));
    }
    let n = x.timeline().len();
    let n_drop = (fraction * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dropped = vec![false; n];
    for i in sample(&mut rng, n, n_drop) {
        dropped[i] = true;
    }
    let kept: Vec<usize> = (0..n).filter(|&i| !dropped[i]).collect();
    let out = x.keep(&kept, x.fps())?;
    Ok((out, manifest_for(x, kept)?))
}
