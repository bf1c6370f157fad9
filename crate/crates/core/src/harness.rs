//! Dataset manifests, evaluation configs and the glue that turns them into
//! a sweep report.
//!
//! Both files are TOML. A dataset manifest lists entries:
//!
//! ```toml
//! [[entries]]
//! id = "s01"
//! frames_dir = "s01/frames"      # or: trace_csv = "s01/trace.csv"
//! gt_path = "s01/ppg.csv"
//! gt_kind = "ppg"                # or "hr"
//! nominal_fps = 30.0
//! landmarks_path = "s01/lm.txt"  # optional
//! mask_dir = "s01/masks"         # optional
//! ```
//!
//! Relative paths resolve against the file that names them.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::degradation::OcclusionAsset;
use crate::error::{Error, Result};
use crate::evaluation::matrix::{
    run_matrix, Assets, Degradation, EvaluationReport, MatrixConfig, Subject, SubjectData,
};
use crate::evaluation::synth::{synth_subject_with, SynthSpec};
use crate::hr::WindowConfig;
use crate::io;
use crate::mitigation::{Mitigation, NlmParams, TvParams};
use crate::model::{mean_rgb_with, FrameSequence, GroundTruth};
use crate::par::Parallelism;
use crate::rppg::{ExtractOptions, MethodId};

pub const SEED_ENV: &str = "RPPG_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GtKind {
    Ppg,
    Hr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub id: String,
    #[serde(default)]
    pub frames_dir: Option<PathBuf>,
    #[serde(default)]
    pub trace_csv: Option<PathBuf>,
    pub gt_path: PathBuf,
    pub gt_kind: GtKind,
    pub nominal_fps: f64,
    /// Rate of a PPG reference; inferred from its timestamps when absent.
    #[serde(default)]
    pub gt_fps: Option<f64>,
    #[serde(default)]
    pub landmarks_path: Option<PathBuf>,
    #[serde(default)]
    pub mask_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub entries: Vec<DatasetEntry>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

impl DatasetManifest {
    pub fn from_toml(path: &Path, text: &str) -> Result<Self> {
        let m: Self = toml::from_str(text).map_err(|e| Error::parse(path, e.to_string()))?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(path, &text)
    }
}

fn entry_error(id: &str, e: Error) -> Error {
    Error::Entry {
        id: id.to_string(),
        source: Box::new(e),
    }
}

fn load_entry(e: &DatasetEntry, base: &Path) -> Result<Subject> {
    if !(e.nominal_fps.is_finite() && e.nominal_fps > 0.0) {
        return Err(Error::invalid(format!("nominal_fps must be > 0, got {}", e.nominal_fps)));
    }
    let existing = |p: &Path| -> Result<PathBuf> {
        let full = resolve(base, p);
        if full.exists() {
            Ok(full)
        } else {
            Err(Error::invalid(format!("missing path {}", full.display())))
        }
    };
    let gt_path = existing(&e.gt_path)?;
    let data = match (&e.frames_dir, &e.trace_csv) {
        (Some(dir), None) => {
            let frames = io::read_frames_dir(&existing(dir)?)?;
            let n = frames.len();
            let masks = e.mask_dir.as_ref().map(|d| existing(d).and_then(|d| io::read_mask_dir(&d))).transpose()?;
            let lms = e
                .landmarks_path
                .as_ref()
                .map(|p| existing(p).and_then(|p| io::read_landmarks(&p, n)))
                .transpose()?;
            let ts = (0..n).map(|i| i as f64 / e.nominal_fps).collect();
            SubjectData::Frames(FrameSequence::new(frames, ts, e.nominal_fps, masks, lms)?)
        }
        (None, Some(csv)) => SubjectData::Trace(io::read_trace_csv(&existing(csv)?, Some(e.nominal_fps))?),
        _ => return Err(Error::invalid("exactly one of frames_dir and trace_csv is required")),
    };
    let gt = match e.gt_kind {
        GtKind::Ppg => GroundTruth::Ppg(io::read_ppg_csv(&gt_path, e.gt_fps)?),
        GtKind::Hr => GroundTruth::Hr(io::read_hr_csv(&gt_path)?),
    };
    Ok(Subject {
        id: e.id.clone(),
        data,
        gt,
    })
}

/// Every entry loaded, each failure tagged with its entry id.
pub fn ingest_entries(manifest_path: &Path) -> Result<Vec<Result<Subject>>> {
    let m = DatasetManifest::load(manifest_path)?;
    let base = base_dir(manifest_path);
    Ok(m.entries
        .iter()
        .map(|e| load_entry(e, &base).map_err(|err| entry_error(&e.id, err)))
        .collect())
}

/// All entries, or the first entry error.
pub fn ingest(manifest_path: &Path) -> Result<Vec<Subject>> {
    ingest_entries(manifest_path)?.into_iter().collect()
}

/// A dataset manifest file, or an inline synthetic subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
    /// Keep only the mean trace of a synthetic subject.
    #[serde(default)]
    pub trace_only: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sunglasses: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facemask: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facemask_points: Option<PathBuf>,
}

/// The `evaluate` configuration. Missing keys take their defaults; the
/// resolved value is what reports embed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    pub seeds: Vec<u64>,
    pub methods: Vec<MethodId>,
    pub datasets: Vec<DatasetSource>,
    pub degradations: Vec<Degradation>,
    pub mitigations: Vec<Mitigation>,
    pub window: WindowConfig,
    pub extract: ExtractOptions,
    pub nlm: NlmParams,
    pub tv: TvParams,
    pub quality: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s2_target_fps: Option<f64>,
    pub assets: AssetPaths,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        let m = MatrixConfig::default();
        Self {
            seeds: m.seeds,
            methods: MethodId::ALL.to_vec(),
            datasets: Vec::new(),
            degradations: Vec::new(),
            mitigations: vec![Mitigation::default()],
            window: m.window,
            extract: m.extract,
            nlm: m.nlm,
            tv: m.tv,
            quality: m.quality,
            s2_target_fps: m.s2_target_fps,
            assets: AssetPaths::default(),
        }
    }
}

impl EvaluateConfig {
    pub fn from_toml(path: &Path, text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse(path, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(path, &text)
    }

    /// Replace the run seeds with a single override value.
    pub fn with_seed_override(mut self, value: Option<&str>) -> Result<Self> {
        if let Some(v) = value {
            let seed = v
                .trim()
                .parse::<u64>()
                .map_err(|_| Error::invalid(format!("{SEED_ENV}='{v}' is not an unsigned integer")))?;
            self.seeds = vec![seed];
        }
        Ok(self)
    }

    /// Applies `RPPG_SEED` when set.
    pub fn with_env_seed(self) -> Result<Self> {
        let v = std::env::var(SEED_ENV).ok();
        self.with_seed_override(v.as_deref())
    }

    pub fn matrix_config(&self) -> MatrixConfig {
        MatrixConfig {
            window: self.window,
            extract: self.extract,
            nlm: self.nlm,
            tv: self.tv,
            seeds: self.seeds.clone(),
            quality: self.quality,
            s2_target_fps: self.s2_target_fps,
        }
    }

    pub fn effective_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

fn load_subjects(cfg: &EvaluateConfig, base: &Path, par: Parallelism) -> Result<Vec<Subject>> {
    let mut out = Vec::new();
    for (i, d) in cfg.datasets.iter().enumerate() {
        match (&d.manifest, &d.synth) {
            (Some(m), None) => out.extend(ingest(&resolve(base, m))?),
            (None, Some(spec)) => {
                let id = d.id.clone().unwrap_or_else(|| format!("synth{i}"));
                let (seq, gt) = synth_subject_with(spec, par).map_err(|e| entry_error(&id, e))?;
                let data = if d.trace_only {
                    SubjectData::Trace(mean_rgb_with(&seq, par)?)
                } else {
                    SubjectData::Frames(seq)
                };
                out.push(Subject { id, data, gt });
            }
            _ => {
                return Err(Error::invalid(format!(
                    "dataset {i}: exactly one of 'manifest' and 'synth' is required"
                )))
            }
        }
    }
    if out.is_empty() {
        return Err(Error::invalid("configuration lists no datasets"));
    }
    Ok(out)
}

fn load_assets(paths: &AssetPaths, base: &Path) -> Result<Assets> {
    let mut a = Assets::default();
    if let Some(p) = &paths.sunglasses {
        a.sunglasses = io::read_asset(&resolve(base, p), None)?;
    }
    if let Some(p) = &paths.facemask {
        let pts = paths
            .facemask_points
            .as_ref()
            .map(|q| resolve(base, q))
            .ok_or_else(|| Error::invalid("facemask asset needs facemask_points"))?;
        a.facemask = io::read_asset(&resolve(base, p), Some(&pts))?;
    }
    Ok(a)
}

/// Sunglasses or facemask asset with its sidecar.
pub fn load_occlusion_asset(image: &Path, points: Option<&Path>) -> Result<OcclusionAsset> {
    io::read_asset(image, points)
}

/// Load everything `cfg` names (paths relative to `base`) and sweep it.
pub fn run_evaluation(cfg: &EvaluateConfig, base: &Path, par: Parallelism) -> Result<EvaluationReport> {
    let subjects = load_subjects(cfg, base, par)?;
    let assets = load_assets(&cfg.assets, base)?;
    run_matrix(
        &subjects,
        &cfg.degradations,
        &cfg.mitigations,
        &cfg.methods,
        &cfg.matrix_config(),
        &assets,
        par,
    )
}
