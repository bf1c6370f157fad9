//! `rppg`: synthesize, degrade, extract, mitigate and evaluate.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use rppg_core::degradation::{
    degrade_sequence, occlude_sequence, Occluder, OcclusionAsset, SpatialDegradation,
};
use rppg_core::evaluation::synth::{synth_facemask, synth_sunglasses, synth_subject_with, HrProfile, SynthSpec};
use rppg_core::evaluation::{analyze, mae, pcc, write_report, MatrixConfig, SCHEMA_VERSION};
use rppg_core::harness::EvaluateConfig;
use rppg_core::hr::{hr_series_with, reference_series};
use rppg_core::io;
use rppg_core::mitigation::{
    nlm_denoise_with, skin_only, strategy1_hr_series, strategy2_reconstruct, tv_denoise_image,
    tv_denoise_signal, DropStrategy, ImageDenoise, Mitigation, SignalDenoise,
};
use rppg_core::model::{mean_rgb_with, BvpSignal, FrameSequence, GroundTruth, RgbTrace};
use rppg_core::par::{with_threads, Parallelism};
use rppg_core::rppg::MethodId;
use rppg_core::temporal::{downsample_uniform, drop_random, DropManifest};

#[derive(Parser, Debug)]
#[command(name = "rppg", version, about = "Remote-PPG degradation, mitigation and evaluation")]
struct Cli {
    /// Worker threads; 0 uses every logical core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic subject (frames, reference PPG, landmarks, manifest).
    Synth(SynthArgs),
    /// Apply spatial, occlusion and temporal degradations.
    Degrade(DegradeArgs),
    /// Extract a pulse signal and per-window heart rates.
    Extract(ExtractArgs),
    /// Denoise frames or pulse signals, or reconstruct dropped samples.
    Mitigate(MitigateArgs),
    /// Run a sweep from a TOML config and write CSV and JSON reports.
    Evaluate(EvaluateArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    Green,
    Chrom,
    Pos,
    Omit,
}

impl From<MethodArg> for MethodId {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Green => MethodId::Green,
            MethodArg::Chrom => MethodId::Chrom,
            MethodArg::Pos => MethodId::Pos,
            MethodArg::Omit => MethodId::Omit,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum DropArg {
    None,
    S1,
    S2,
}

impl From<DropArg> for DropStrategy {
    fn from(d: DropArg) -> Self {
        match d {
            DropArg::None => DropStrategy::None,
            DropArg::S1 => DropStrategy::S1,
            DropArg::S2 => DropStrategy::S2,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum DenoiseArg {
    None,
    Nlm,
    Tvi,
}

impl From<DenoiseArg> for ImageDenoise {
    fn from(d: DenoiseArg) -> Self {
        match d {
            DenoiseArg::None => ImageDenoise::None,
            DenoiseArg::Nlm => ImageDenoise::Nlm,
            DenoiseArg::Tvi => ImageDenoise::Tvi,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SignalDenoiseArg {
    None,
    Tvs,
}

impl From<SignalDenoiseArg> for SignalDenoise {
    fn from(d: SignalDenoiseArg) -> Self {
        match d {
            SignalDenoiseArg::None => SignalDenoise::None,
            SignalDenoiseArg::Tvs => SignalDenoise::Tvs,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum OccluderArg {
    Sunglasses,
    Facemask,
}

impl From<OccluderArg> for Occluder {
    fn from(o: OccluderArg) -> Self {
        match o {
            OccluderArg::Sunglasses => Occluder::Sunglasses,
            OccluderArg::Facemask => Occluder::Facemask,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct SynthArgs {
    /// Heart rate in bpm (start rate when --chirp-to is given).
    #[arg(long, default_value_t = 72.0)]
    hr: f64,
    /// End rate of a linear sweep.
    #[arg(long)]
    chirp_to: Option<f64>,
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    /// Seconds.
    #[arg(long, default_value_t = 60.0)]
    duration: f64,
    /// Peak green excursion in 8-bit levels.
    #[arg(long, default_value_t = 4.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 72)]
    size: u32,
    /// Half-range of static per-pixel texture.
    #[arg(long, default_value_t = 0.0)]
    texture: f64,
    /// Per-frame Gaussian noise variance on the [0, 1] scale.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write only the mean trace, not the frames.
    #[arg(long)]
    trace_only: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct InputArgs {
    /// Directory of PNG or binary PPM frames, read in name order.
    #[arg(long, conflicts_with = "trace", required_unless_present = "trace")]
    frames: Option<PathBuf>,
    /// Trace CSV with header t,r,g,b.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Nominal frame rate of the input.
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    /// Landmark file (lines `frame x y`).
    #[arg(long)]
    landmarks: Option<PathBuf>,
    /// Drop manifest naming the original frames the input holds.
    #[arg(long)]
    drop_manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct DegradeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Square output size in pixels.
    #[arg(long)]
    resize: Option<u32>,
    /// Bits per channel: 2, 4, 6 or 8.
    #[arg(long)]
    color_depth: Option<u8>,
    /// Gaussian blur kernel size.
    #[arg(long)]
    blur: Option<u32>,
    /// Gaussian noise variance on the [0, 1] scale.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    occlude: Option<OccluderArg>,
    /// RGBA occluder image; a built-in asset is used when absent.
    #[arg(long, requires = "occlude")]
    asset: Option<PathBuf>,
    /// 22-line `x y` outline for a facemask asset.
    #[arg(long, requires = "asset")]
    asset_points: Option<PathBuf>,
    /// Regular decimation to this frame rate.
    #[arg(long)]
    downsample: Option<f64>,
    /// Fraction of frames removed at random.
    #[arg(long)]
    drop: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ExtractArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "pos")]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "none")]
    mitigate: DropArg,
    #[arg(long, value_enum, default_value = "none")]
    denoise: DenoiseArg,
    #[arg(long, value_enum, default_value = "none")]
    signal_denoise: SignalDenoiseArg,
    /// Reconstruction rate for s2; the original stream's rate by default.
    #[arg(long)]
    target_fps: Option<f64>,
    /// Reference PPG (t,ppg) to score against.
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct MitigateArgs {
    /// Directory of frames to denoise or mask.
    #[arg(long, conflicts_with = "bvp", required_unless_present = "bvp")]
    frames: Option<PathBuf>,
    /// Pulse signal CSV (t,bvp) to denoise or reconstruct.
    #[arg(long)]
    bvp: Option<PathBuf>,
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    #[arg(long)]
    landmarks: Option<PathBuf>,
    #[arg(long)]
    drop_manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "none")]
    denoise: DenoiseArg,
    /// Black out this occluder's region (needs landmarks).
    #[arg(long, value_enum)]
    skin_only: Option<OccluderArg>,
    #[arg(long, value_enum, default_value = "none")]
    mitigate: DropArg,
    #[arg(long, value_enum, default_value = "none")]
    signal_denoise: SignalDenoiseArg,
    #[arg(long)]
    target_fps: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct EvaluateArgs {
    /// TOML sweep configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output path stem; `.csv` and `.json` are appended.
    #[arg(long, default_value = "report")]
    out: PathBuf,
}

fn parallelism(jobs: usize) -> Parallelism {
    if jobs == 1 {
        Parallelism::Sequential
    } else {
        Parallelism::default()
    }
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    io::write_atomic(path, s.as_bytes())?;
    Ok(())
}

fn sidecar(command: &str, args: &impl Serialize, extra: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": args,
        "result": extra,
    })
}

enum Loaded {
    Frames(FrameSequence),
    Trace(RgbTrace),
}

fn load_manifest(path: Option<&Path>, n: usize, fps: f64) -> Result<DropManifest> {
    match path {
        Some(p) => {
            let m = io::read_manifest_csv(p)?;
            if m.kept() != n {
                bail!("{}: manifest keeps {} frames but the input has {n}", p.display(), m.kept());
            }
            Ok(m)
        }
        None => {
            let ts: Vec<f64> = (0..n).map(|i| i as f64 / fps).collect();
            Ok(DropManifest::full(&ts, fps)?)
        }
    }
}

fn load_input(a: &InputArgs) -> Result<(Loaded, DropManifest)> {
    match (&a.frames, &a.trace) {
        (Some(dir), None) => {
            let frames = io::read_frames_dir(dir)?;
            let n = frames.len();
            let m = load_manifest(a.drop_manifest.as_deref(), n, a.fps)?;
            let lms = a.landmarks.as_deref().map(|p| io::read_landmarks(p, n)).transpose()?;
            let seq = FrameSequence::new(frames, m.original_timestamps.clone(), a.fps, None, lms)?;
            Ok((Loaded::Frames(seq), m))
        }
        (None, Some(csv)) => {
            let tr = io::read_trace_csv(csv, Some(a.fps))?;
            let m = match &a.drop_manifest {
                Some(_) => load_manifest(a.drop_manifest.as_deref(), tr.len(), a.fps)?,
                None => DropManifest::full(tr.timestamps(), a.fps)?,
            };
            Ok((Loaded::Trace(tr), m))
        }
        _ => bail!("give exactly one of --frames and --trace"),
    }
}

fn default_asset(kind: Occluder) -> OcclusionAsset {
    match kind {
        Occluder::Sunglasses => synth_sunglasses(),
        Occluder::Facemask => synth_facemask(),
    }
}

fn cmd_synth(a: &SynthArgs, par: Parallelism) -> Result<Value> {
    let spec = SynthSpec {
        duration_s: a.duration,
        fps: a.fps,
        hr: match a.chirp_to {
            Some(end) => HrProfile::Chirp {
                start_bpm: a.hr,
                end_bpm: end,
            },
            None => HrProfile::Constant { bpm: a.hr },
        },
        amplitude: a.amplitude,
        texture: a.texture,
        noise_variance: a.noise,
        seed: a.seed,
        frame_size: a.size,
        ..Default::default()
    };
    let (seq, gt) = synth_subject_with(&spec, par)?;
    let GroundTruth::Ppg(ppg) = &gt else { unreachable!("synthetic truth is a waveform") };
    io::write_ppg_csv(&a.out.join("ppg.csv"), ppg)?;
    io::write_trace_csv(&a.out.join("trace.csv"), &mean_rgb_with(&seq, par)?)?;
    let source = if a.trace_only {
        "trace_csv = \"trace.csv\"\n".to_string()
    } else {
        io::write_frames_dir(&a.out.join("frames"), seq.frames())?;
        let lms = seq.landmarks().expect("synthetic frames carry landmarks");
        io::write_atomic(&a.out.join("landmarks.txt"), io::landmarks_to_text(lms).as_bytes())?;
        "frames_dir = \"frames\"\nlandmarks_path = \"landmarks.txt\"\n".to_string()
    };
    let id = a.out.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "synth".into());
    let manifest = format!(
        "[[entries]]\nid = {}\n{source}gt_path = \"ppg.csv\"\ngt_kind = \"ppg\"\nnominal_fps = {:?}\n",
        toml_string(&id),
        a.fps
    );
    io::write_atomic(&a.out.join("manifest.toml"), manifest.as_bytes())?;
    let info = sidecar("synth", &json!({ "args": a, "spec": spec }), json!({ "frames": seq.len() }));
    write_json(&a.out.join("synth.json"), &info)?;
    Ok(json!({ "manifest": a.out.join("manifest.toml"), "frames": seq.len() }))
}

fn toml_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

fn cmd_degrade(a: &DegradeArgs, par: Parallelism) -> Result<Value> {
    let (input, manifest) = load_input(&a.input)?;
    let mut spatial = Vec::new();
    if let Some(size) = a.resize {
        spatial.push(SpatialDegradation::Resize { size });
    }
    if let Some(bits) = a.color_depth {
        spatial.push(SpatialDegradation::ColorDepth { bits });
    }
    if let Some(kernel_size) = a.blur {
        spatial.push(SpatialDegradation::Blur { kernel_size });
    }
    if let Some(variance) = a.noise {
        spatial.push(SpatialDegradation::Noise { variance, seed: a.seed });
    }
    if a.downsample.is_some() && a.drop.is_some() {
        bail!("--downsample and --drop are exclusive");
    }
    // Express the new selection in terms of the original stream.
    let compose = |inner: &DropManifest, sel: &DropManifest| -> Result<DropManifest> {
        let kept = sel.kept_indices.iter().map(|&i| inner.kept_indices[i]).collect();
        let ts = sel.kept_indices.iter().map(|&i| inner.original_timestamps[i]).collect();
        Ok(DropManifest::new(kept, ts, inner.nominal_fps, inner.total_original)?)
    };
    let (out_fps, mut result) = match input {
        Loaded::Frames(seq) => {
            let mut cur = seq;
            if let Some(kind) = a.occlude {
                let kind = Occluder::from(kind);
                let asset = match &a.asset {
                    Some(p) => io::read_asset(p, a.asset_points.as_deref())?,
                    None => default_asset(kind),
                };
                cur = occlude_sequence(&cur, kind, &asset, par)?.0;
            }
            for s in &spatial {
                cur = degrade_sequence(&cur, s, par)?;
            }
            let (cur, sel) = if let Some(fps) = a.downsample {
                downsample_uniform(&cur, fps)?
            } else if let Some(f) = a.drop {
                drop_random(&cur, f, a.seed)?
            } else {
                let m = DropManifest::full(cur.timestamps(), cur.nominal_fps())?;
                (cur, m)
            };
            let m = compose(&manifest, &sel)?;
            io::write_frames_dir(&a.out.join("frames"), cur.frames())?;
            if let Some(lms) = cur.landmarks() {
                io::write_atomic(&a.out.join("landmarks.txt"), io::landmarks_to_text(lms).as_bytes())?;
            }
            io::write_trace_csv(&a.out.join("trace.csv"), &mean_rgb_with(&cur, par)?)?;
            io::write_manifest_csv(&a.out.join("drop_manifest.csv"), &m)?;
            (cur.nominal_fps(), json!({ "frames": cur.len() }))
        }
        Loaded::Trace(tr) => {
            if !spatial.is_empty() || a.occlude.is_some() {
                bail!("spatial degradations and occlusion need --frames");
            }
            let (cur, sel) = if let Some(fps) = a.downsample {
                downsample_uniform(&tr, fps)?
            } else if let Some(f) = a.drop {
                drop_random(&tr, f, a.seed)?
            } else {
                let m = DropManifest::full(tr.timestamps(), tr.nominal_fps())?;
                (tr, m)
            };
            let m = compose(&manifest, &sel)?;
            io::write_trace_csv(&a.out.join("trace.csv"), &cur)?;
            io::write_manifest_csv(&a.out.join("drop_manifest.csv"), &m)?;
            (cur.nominal_fps(), json!({ "samples": cur.len() }))
        }
    };
    result["fps"] = json!(out_fps);
    write_json(&a.out.join("degrade.json"), &sidecar("degrade", a, result.clone()))?;
    Ok(result)
}

fn denoise_frames(seq: &FrameSequence, d: ImageDenoise, cfg: &MatrixConfig, par: Parallelism) -> Result<FrameSequence> {
    let frames = match d {
        ImageDenoise::None => return Ok(seq.clone()),
        ImageDenoise::Nlm => par.map_slice(seq.frames(), |f| nlm_denoise_with(f, &cfg.nlm, Parallelism::Sequential)),
        ImageDenoise::Tvi => par.map_slice(seq.frames(), |f| Ok(tv_denoise_image(f, &cfg.tv))),
    };
    Ok(seq.with_frames(frames.into_iter().collect::<rppg_core::Result<Vec<_>>>()?)?)
}

fn cmd_extract(a: &ExtractArgs, par: Parallelism) -> Result<Value> {
    let (input, manifest) = load_input(&a.input)?;
    let cfg = MatrixConfig {
        s2_target_fps: a.target_fps,
        ..Default::default()
    };
    let trace = match input {
        Loaded::Frames(seq) => mean_rgb_with(&denoise_frames(&seq, a.denoise.into(), &cfg, par)?, par)?,
        Loaded::Trace(tr) => {
            if !matches!(a.denoise, DenoiseArg::None) {
                bail!("--denoise needs --frames");
            }
            tr
        }
    };
    let mit = Mitigation {
        drop: a.mitigate.into(),
        signal_denoise: a.signal_denoise.into(),
        ..Default::default()
    };
    let res = analyze(&trace, &manifest, a.method.into(), &mit, &cfg)?;
    io::write_signal_csv(&a.out.join("bvp.csv"), &res.timestamps, &res.bvp.samples)?;
    io::write_hr_csv(&a.out.join("hr.csv"), &res.hr)?;
    let mut summary = json!({
        "windows": res.hr.len(),
        "missing_windows": res.hr.missing_count(),
        "degenerate": res.degenerate,
        "fs": res.bvp.fs,
    });
    if let Some(gt) = &a.gt {
        let reference = reference_series(&GroundTruth::Ppg(io::read_ppg_csv(gt, None)?), &cfg.window)?;
        summary["mae"] = json!(mae(&res.hr, &reference)?);
        summary["pcc"] = json!(pcc(&res.hr, &reference));
    }
    write_json(&a.out.join("extract.json"), &sidecar("extract", a, summary.clone()))?;
    Ok(summary)
}

fn cmd_mitigate(a: &MitigateArgs, par: Parallelism) -> Result<Value> {
    let cfg = MatrixConfig {
        s2_target_fps: a.target_fps,
        ..Default::default()
    };
    let summary = if let Some(dir) = &a.frames {
        let frames = io::read_frames_dir(dir)?;
        let n = frames.len();
        let m = load_manifest(a.drop_manifest.as_deref(), n, a.fps)?;
        let lms = a.landmarks.as_deref().map(|p| io::read_landmarks(p, n)).transpose()?;
        let seq = FrameSequence::new(frames, m.original_timestamps.clone(), a.fps, None, lms)?;
        let mut cur = denoise_frames(&seq, a.denoise.into(), &cfg, par)?;
        if let Some(kind) = a.skin_only {
            let kind = Occluder::from(kind);
            let lms = cur.landmarks().context("--skin-only needs --landmarks")?.to_vec();
            let asset = default_asset(kind);
            let polys = lms
                .iter()
                .map(|lm| match kind {
                    Occluder::Sunglasses => rppg_core::degradation::sunglasses_footprint(lm, &asset),
                    Occluder::Facemask => Ok(lm.outline_points()),
                })
                .collect::<rppg_core::Result<Vec<_>>>()?;
            let frames = cur.frames().iter().zip(&polys).map(|(f, p)| skin_only(f, p)).collect();
            cur = cur.with_frames(frames)?;
        }
        io::write_frames_dir(&a.out.join("frames"), cur.frames())?;
        io::write_trace_csv(&a.out.join("trace.csv"), &mean_rgb_with(&cur, par)?)?;
        json!({ "frames": cur.len() })
    } else {
        let path = a.bvp.as_ref().expect("clap enforces one input");
        let (t, v) = io::read_signal_csv(path)?;
        let m = load_manifest(a.drop_manifest.as_deref(), v.len(), a.fps)?;
        let v = match SignalDenoise::from(a.signal_denoise) {
            SignalDenoise::Tvs => tv_denoise_signal(&v, &cfg.tv),
            SignalDenoise::None => v,
        };
        let (ts, bvp, hr) = match DropStrategy::from(a.mitigate) {
            DropStrategy::None => {
                let bvp = BvpSignal::new(v, a.fps)?;
                let hr = hr_series_with(&bvp, &cfg.window, par)?;
                (t, bvp, hr)
            }
            DropStrategy::S1 => {
                let duration = m.total_original as f64 / m.nominal_fps;
                let hr = strategy1_hr_series(&v, &m.original_timestamps, duration, &cfg.window)?;
                (t, BvpSignal::new(v, a.fps)?, hr)
            }
            DropStrategy::S2 => {
                let target = a.target_fps.unwrap_or(m.nominal_fps);
                let bvp = strategy2_reconstruct(&v, &m, target)?;
                let ts = (0..bvp.len()).map(|k| k as f64 / target).collect();
                let hr = hr_series_with(&bvp, &cfg.window, par)?;
                (ts, bvp, hr)
            }
        };
        io::write_signal_csv(&a.out.join("bvp.csv"), &ts, &bvp.samples)?;
        io::write_hr_csv(&a.out.join("hr.csv"), &hr)?;
        json!({ "samples": bvp.len(), "windows": hr.len(), "missing_windows": hr.missing_count() })
    };
    write_json(&a.out.join("mitigate.json"), &sidecar("mitigate", a, summary.clone()))?;
    Ok(summary)
}

fn cmd_evaluate(a: &EvaluateArgs, par: Parallelism) -> Result<Value> {
    let cfg = EvaluateConfig::load(&a.config)?.with_env_seed()?;
    let base = a.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let report = rppg_core::harness::run_evaluation(&cfg, &base, par)?;
    write_report(&a.out, &report, &cfg.effective_json())?;
    let failed = report.rows.iter().filter(|r| r.error.is_some()).count();
    Ok(json!({
        "rows": report.rows.len(),
        "failed_cells": failed,
        "csv": a.out.with_extension("csv"),
        "json": a.out.with_extension("json"),
    }))
}

fn run(cli: &Cli) -> Result<Value> {
    let par = parallelism(cli.jobs);
    with_threads(cli.jobs, || match &cli.cmd {
        Command::Synth(a) => cmd_synth(a, par),
        Command::Degrade(a) => cmd_degrade(a, par),
        Command::Extract(a) => cmd_extract(a, par),
        Command::Mitigate(a) => cmd_mitigate(a, par),
        Command::Evaluate(a) => cmd_evaluate(a, par),
    })
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    e.chain()
        .find_map(|c| c.downcast_ref::<rppg_core::Error>())
        .map(|e| e.kind())
        .unwrap_or("error")
}

/// Context chain joined by ": ", skipping causes already spelled out by their parent.
fn error_message(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for part in e.chain().map(|c| c.to_string()) {
        if out.ends_with(&part) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&part);
    }
    out
}

fn error_record(kind: &str, message: &str) -> String {
    json!({
        "schema_version": SCHEMA_VERSION,
        "error": { "kind": kind, "message": message },
    })
    .to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            eprintln!("{}", error_record("usage", e.to_string().trim_end()));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(v) => {
            println!("{v}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_record(error_kind(&e), &error_message(&e)));
            ExitCode::FAILURE
        }
    }
}
