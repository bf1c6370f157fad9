//! Full-factorial degradation × mitigation × method sweeps.

use serde::{Deserialize, Serialize};

use super::metrics::{mae, pcc, psnr, ssim};
use super::synth::{synth_facemask, synth_sunglasses};
use crate::degradation::{
    degrade_sequence, map_frames, occlude_sequence, Occluder, OcclusionAsset, SpatialDegradation,
};
use crate::error::{Error, Result};
use crate::hr::{hr_series_with, reference_series, WindowConfig};
use crate::mitigation::{
    nlm_denoise_with, skin_only, strategy1_hr_series, strategy2_reconstruct, tv_denoise_image,
    tv_denoise_signal, DropStrategy, ImageDenoise, Mitigation, NlmParams, OcclusionStrategy,
    SignalDenoise, TvParams,
};
use crate::model::{mean_rgb_with, resample_check, BvpSignal, FrameSequence, GroundTruth, HrSeries, RgbTrace};
use crate::par::Parallelism;
use crate::rppg::{extract_with, ExtractOptions, MethodId};
use crate::temporal::{downsample_uniform, drop_random, DropManifest, Timeline};

pub const DEFAULT_NOISE_VARIANCE: f64 = 0.004;

fn default_noise_variance() -> f64 {
    DEFAULT_NOISE_VARIANCE
}

/// One corruption cell of a sweep. Stochastic kinds without an explicit
/// seed take each of the run seeds in turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Degradation {
    Resize {
        size: u32,
    },
    ColorDepth {
        bits: u8,
    },
    Blur {
        #[serde(default = "default_kernel")]
        kernel_size: u32,
    },
    Noise {
        #[serde(default = "default_noise_variance")]
        variance: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    Sunglasses,
    Facemask,
    Downsample {
        fps: f64,
    },
    Drop {
        fraction: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
}

fn default_kernel() -> u32 {
    25
}

impl Degradation {
    pub fn label(&self) -> String {
        match self {
            Degradation::Resize { size } => format!("resize{size}"),
            Degradation::ColorDepth { bits } => format!("depth{bits}"),
            Degradation::Blur { kernel_size } => format!("blur{kernel_size}"),
            Degradation::Noise { variance, .. } => format!("noise{variance}"),
            Degradation::Sunglasses => "sunglasses".into(),
            Degradation::Facemask => "facemask".into(),
            Degradation::Downsample { fps } => format!("fps{fps}"),
            Degradation::Drop { fraction, .. } => format!("drop{fraction}"),
        }
    }

    /// Seeds this cell runs under.
    pub fn seeds(&self, run_seeds: &[u64]) -> Vec<Option<u64>> {
        match self {
            Degradation::Noise { seed, .. } | Degradation::Drop { seed, .. } => match seed {
                Some(s) => vec![Some(*s)],
                None => run_seeds.iter().map(|&s| Some(s)).collect(),
            },
            _ => vec![None],
        }
    }

    fn spatial(&self, seed: Option<u64>) -> Option<SpatialDegradation> {
        Some(match *self {
            Degradation::Resize { size } => SpatialDegradation::Resize { size },
            Degradation::ColorDepth { bits } => SpatialDegradation::ColorDepth { bits },
            Degradation::Blur { kernel_size } => SpatialDegradation::Blur { kernel_size },
            Degradation::Noise { variance, .. } => SpatialDegradation::Noise {
                variance,
                seed: seed.unwrap_or(0),
            },
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubjectData {
    Frames(FrameSequence),
    Trace(RgbTrace),
}

/// A video (or its pre-extracted trace) with ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Subject {
    pub id: String,
    pub data: SubjectData,
    pub gt: GroundTruth,
}

#[derive(Debug, Clone)]
pub struct Assets {
    pub sunglasses: OcclusionAsset,
    pub facemask: OcclusionAsset,
}

impl Default for Assets {
    fn default() -> Self {
        Self {
            sunglasses: synth_sunglasses(),
            facemask: synth_facemask(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatrixConfig {
    pub window: WindowConfig,
    pub extract: ExtractOptions,
    pub nlm: NlmParams,
    pub tv: TvParams,
    pub seeds: Vec<u64>,
    /// Mean PSNR/SSIM of the processed frames against the clean ones.
    pub quality: bool,
    /// Reconstruction rate for S2; the original stream's rate when unset.
    pub s2_target_fps: Option<f64>,
}

impl Default for MatrixConfig {
    fn default() -> Self {
        Self {
            window: WindowConfig::default(),
            extract: ExtractOptions::default(),
            nlm: NlmParams::default(),
            tv: TvParams::default(),
            seeds: vec![0],
            quality: true,
            s2_target_fps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub subject: String,
    pub method: MethodId,
    pub degradation: String,
    pub mitigation: String,
    pub seed: Option<u64>,
    pub mae: Option<f64>,
    pub pcc: Option<f64>,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub missing_windows: usize,
    pub total_windows: usize,
    pub degenerate: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvaluationReport {
    pub rows: Vec<ReportRow>,
}

impl EvaluationReport {
    pub fn find(&self, subject: &str, method: MethodId, degradation: &str, mitigation: &str) -> Vec<&ReportRow> {
        self.rows
            .iter()
            .filter(|r| {
                r.subject == subject
                    && r.method == method
                    && r.degradation == degradation
                    && r.mitigation == mitigation
            })
            .collect()
    }
}

/// Trace plus the timing record after degradation and image-domain
/// mitigation.
#[derive(Debug, Clone)]
struct Prepared {
    trace: RgbTrace,
    manifest: DropManifest,
    quality: Option<(f64, f64)>,
}

struct Cell<'a> {
    subject: usize,
    degradation: Option<&'a Degradation>,
    seed: Option<u64>,
    mitigation: Mitigation,
}

fn needs_frames(what: &str) -> Error {
    Error::invalid(format!("{what} needs a frame sequence, subject has only a trace"))
}

fn mean_quality(clean: &FrameSequence, out: &FrameSequence, kept: &[usize]) -> Result<Option<(f64, f64)>> {
    if clean.dimensions() != out.dimensions() {
        return Ok(None);
    }
    let (mut p, mut s) = (0.0, 0.0);
    for (frame, &i) in out.frames().iter().zip(kept) {
        p += psnr(&clean.frames()[i], frame)?;
        s += ssim(&clean.frames()[i], frame)?;
    }
    let n = kept.len() as f64;
    Ok(Some((p / n, s / n)))
}

fn prepare_frames(seq: &FrameSequence, cell: &Cell, cfg: &MatrixConfig, assets: &Assets, par: Parallelism) -> Result<Prepared> {
    let full = DropManifest::full(seq.timestamps(), seq.nominal_fps())?;
    let (mut cur, manifest, polys) = match cell.degradation {
        None => (seq.clone(), full, None),
        Some(d) => match d {
            Degradation::Sunglasses | Degradation::Facemask => {
                let (kind, asset) = if matches!(d, Degradation::Sunglasses) {
                    (Occluder::Sunglasses, &assets.sunglasses)
                } else {
                    (Occluder::Facemask, &assets.facemask)
                };
                let (out, polys) = occlude_sequence(seq, kind, asset, par)?;
                (out, full, Some(polys))
            }
            Degradation::Downsample { fps } => {
                let (out, m) = downsample_uniform(seq, *fps)?;
                (out, m, None)
            }
            Degradation::Drop { fraction, .. } => {
                let (out, m) = drop_random(seq, *fraction, cell.seed.unwrap_or(0))?;
                (out, m, None)
            }
            spatial => {
                let s = spatial.spatial(cell.seed).expect("spatial kind");
                (degrade_sequence(seq, &s, par)?, full, None)
            }
        },
    };
    let inner = Parallelism::Sequential;
    cur = match cell.mitigation.denoise {
        ImageDenoise::None => cur,
        ImageDenoise::Nlm => map_frames(&cur, par, |_, f| nlm_denoise_with(f, &cfg.nlm, inner))?,
        ImageDenoise::Tvi => map_frames(&cur, par, |_, f| Ok(tv_denoise_image(f, &cfg.tv)))?,
    };
    if cell.mitigation.occlusion == OcclusionStrategy::Os {
        if let Some(polys) = &polys {
            cur = map_frames(&cur, par, |i, f| Ok(skin_only(f, &polys[i])))?;
        }
    }
    let quality = if cfg.quality {
        mean_quality(seq, &cur, &manifest.kept_indices)?
    } else {
        None
    };
    Ok(Prepared {
        trace: mean_rgb_with(&cur, par)?,
        manifest,
        quality,
    })
}

fn prepare_trace(tr: &RgbTrace, cell: &Cell) -> Result<Prepared> {
    if cell.mitigation.denoise != ImageDenoise::None {
        return Err(needs_frames("image denoising"));
    }
    let full = DropManifest::full(tr.timestamps(), tr.nominal_fps())?;
    let (trace, manifest) = match cell.degradation {
        None => (tr.clone(), full),
        Some(Degradation::Downsample { fps }) => downsample_uniform(tr, *fps)?,
        Some(Degradation::Drop { fraction, .. }) => drop_random(tr, *fraction, cell.seed.unwrap_or(0))?,
        Some(other) => return Err(needs_frames(&other.label())),
    };
    Ok(Prepared {
        trace,
        manifest,
        quality: None,
    })
}

/// Pulse signal (after signal-domain mitigation) and per-window rates.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    /// Sample times of `bvp`: the received timestamps, or the uniform grid
    /// after reconstruction.
    pub timestamps: Vec<f64>,
    pub bvp: BvpSignal,
    pub hr: HrSeries,
    pub degenerate: bool,
}

/// Extract `method` from a (possibly thinned) trace and estimate rates
/// under the drop strategy and signal denoiser of `mit`.
pub fn analyze(trace: &RgbTrace, manifest: &DropManifest, method: MethodId, mit: &Mitigation, cfg: &MatrixConfig) -> Result<Analysis> {
    if manifest.kept() != trace.len() {
        return Err(Error::invalid(format!(
            "manifest keeps {} frames but the trace has {}",
            manifest.kept(),
            trace.len()
        )));
    }
    let input = match mit.drop {
        DropStrategy::None => trace.clone(),
        DropStrategy::S1 | DropStrategy::S2 => {
            if trace.len() < 2 {
                return Err(Error::TooShort {
                    needed: 2,
                    actual: trace.len(),
                });
            }
            // Extraction at the rate actually received.
            trace.with_nominal_fps(resample_check(trace.timeline())?)?
        }
    };
    let ext = extract_with(method, &input, &cfg.extract)?;
    let mut samples = ext.bvp.samples;
    if mit.signal_denoise == SignalDenoise::Tvs {
        samples = tv_denoise_signal(&samples, &cfg.tv);
    }
    let seq = Parallelism::Sequential;
    let (timestamps, bvp, hr) = match mit.drop {
        DropStrategy::None => {
            let bvp = BvpSignal::new(samples, ext.bvp.fs)?;
            let hr = hr_series_with(&bvp, &cfg.window, seq)?;
            (trace.timeline().to_vec(), bvp, hr)
        }
        DropStrategy::S1 => {
            let duration = manifest.total_original as f64 / manifest.nominal_fps;
            let hr = strategy1_hr_series(&samples, &manifest.original_timestamps, duration, &cfg.window)?;
            (trace.timeline().to_vec(), BvpSignal::new(samples, ext.bvp.fs)?, hr)
        }
        DropStrategy::S2 => {
            let target = cfg.s2_target_fps.unwrap_or(manifest.nominal_fps);
            let bvp = strategy2_reconstruct(&samples, manifest, target)?;
            let hr = hr_series_with(&bvp, &cfg.window, seq)?;
            let ts = (0..bvp.len()).map(|k| k as f64 / target).collect();
            (ts, bvp, hr)
        }
    };
    Ok(Analysis {
        timestamps,
        bvp,
        hr,
        degenerate: ext.degenerate,
    })
}

fn score(
    subject: &str,
    prep: &Result<Prepared>,
    reference: &Result<HrSeries>,
    method: MethodId,
    cell: &Cell,
    cfg: &MatrixConfig,
) -> ReportRow {
    let mut row = ReportRow {
        subject: subject.to_string(),
        method,
        degradation: cell.degradation.map_or_else(|| "none".to_string(), |d| d.label()),
        mitigation: cell.mitigation.label(),
        seed: cell.seed,
        mae: None,
        pcc: None,
        psnr: None,
        ssim: None,
        missing_windows: 0,
        total_windows: 0,
        degenerate: false,
        error: None,
    };
    let describe = |e: &Error| format!("{}: {e}", e.kind());
    match (prep, reference) {
        (Err(e), _) | (_, Err(e)) => row.error = Some(describe(e)),
        (Ok(prep), Ok(reference)) => {
            if let Some((p, s)) = prep.quality {
                row.psnr = Some(p);
                row.ssim = Some(s);
            }
            let scored = analyze(&prep.trace, &prep.manifest, method, &cell.mitigation, cfg).and_then(|a| {
                let est = a.hr;
                row.degenerate = a.degenerate;
                row.missing_windows = est.missing_count();
                row.total_windows = est.len();
                row.pcc = pcc(&est, reference);
                mae(&est, reference)
            });
            match scored {
                Ok(v) => row.mae = Some(v),
                Err(e) => row.error = Some(describe(&e)),
            }
        }
    }
    row
}

/// Run every (subject, degradation, seed, mitigation, method) cell.
///
/// Rows come out grouped by subject then method, each group led by its
/// undegraded baseline. Failing cells carry their error and never stop the
/// sweep.
pub fn run_matrix(
    subjects: &[Subject],
    degradations: &[Degradation],
    mitigations: &[Mitigation],
    methods: &[MethodId],
    cfg: &MatrixConfig,
    assets: &Assets,
    par: Parallelism,
) -> Result<EvaluationReport> {
    cfg.window.validate()?;
    if methods.is_empty() {
        return Err(Error::invalid("no methods to evaluate"));
    }
    if cfg.seeds.is_empty() {
        return Err(Error::invalid("at least one seed is required"));
    }
    let default_mit = [Mitigation::default()];
    let mitigations = if mitigations.is_empty() { &default_mit[..] } else { mitigations };

    let mut cells = Vec::new();
    // Per subject: baseline first, then the factorial block.
    let mut groups = Vec::with_capacity(subjects.len());
    for s in 0..subjects.len() {
        let start = cells.len();
        cells.push(Cell {
            subject: s,
            degradation: None,
            seed: None,
            mitigation: Mitigation::default(),
        });
        for d in degradations {
            for seed in d.seeds(&cfg.seeds) {
                for m in mitigations {
                    cells.push(Cell {
                        subject: s,
                        degradation: Some(d),
                        seed,
                        mitigation: *m,
                    });
                }
            }
        }
        groups.push(start..cells.len());
    }

    let references = par.map_slice(subjects, |s| reference_series(&s.gt, &cfg.window));
    let prepared = par.map_slice(&cells, |c| match &subjects[c.subject].data {
        SubjectData::Frames(seq) => prepare_frames(seq, c, cfg, assets, par),
        SubjectData::Trace(tr) => prepare_trace(tr, c),
    });

    let mut jobs = Vec::new();
    for g in &groups {
        for &method in methods {
            for ci in g.clone() {
                jobs.push((ci, method));
            }
        }
    }
    let rows = par.map_slice(&jobs, |&(ci, method)| {
        let cell = &cells[ci];
        let subject = &subjects[cell.subject];
        score(&subject.id, &prepared[ci], &references[cell.subject], method, cell, cfg)
    });
    Ok(EvaluationReport { rows })
}
