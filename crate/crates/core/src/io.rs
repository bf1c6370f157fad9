//! File formats: traces, heart-rate series, drop manifests, reference
//! PPG, landmarks, frame directories and occlusion assets.
//!
//! Every writer goes through [`write_atomic`].

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use image::{ImageFormat, RgbaImage};

use crate::degradation::OcclusionAsset;
use crate::error::{Error, Result};
use crate::model::{
    resample_check, BvpSignal, Frame, HrSeries, LandmarkSet, RgbTrace, SkinMask,
    MASK_OUTLINE_LEN,
};
use crate::temporal::DropManifest;

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Write to a sibling temporary file, flush it to disk, then rename over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}-{}",
        name.to_string_lossy(),
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn expect_header(path: &Path, rdr: &mut csv::Reader<&[u8]>, want: &[&str]) -> Result<()> {
    let got = rdr.headers().map_err(|e| Error::parse(path, e.to_string()))?;
    if got.iter().ne(want.iter().copied()) {
        return Err(Error::parse(
            path,
            format!("expected header '{}', found '{}'", want.join(","), got.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(())
}

fn field_f64(path: &Path, line: u64, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::parse(path, format!("line {line}: '{s}' is not a number")))
}

/// Numeric rows of a CSV with the given header. Empty cells become `None`.
fn read_columns(path: &Path, text: &str, header: &[&str]) -> Result<Vec<Vec<Option<f64>>>> {
    let mut rdr = csv_reader(text);
    expect_header(path, &mut rdr, header)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::parse(path, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(Error::parse(path, format!("line {line}: expected {} fields", header.len())));
        }
        let row = rec
            .iter()
            .map(|s| if s.is_empty() { Ok(None) } else { field_f64(path, line, s).map(Some) })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn required(path: &Path, rows: &[Vec<Option<f64>>], col: usize) -> Result<Vec<f64>> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| r[col].ok_or_else(|| Error::parse(path, format!("row {}: empty field", i + 1))))
        .collect()
}

fn csv_text(header: &str, rows: impl Iterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

pub fn trace_to_csv(trace: &RgbTrace) -> String {
    let rows = (0..trace.len()).map(|i| {
        format!(
            "{:?},{:?},{:?},{:?}",
            trace.timestamps()[i],
            trace.r()[i],
            trace.g()[i],
            trace.b()[i]
        )
    });
    csv_text("t,r,g,b", rows)
}

/// Parse a `t,r,g,b` trace; without `nominal_fps` the rate comes from the
/// timestamp span.
pub fn trace_from_csv(path: &Path, text: &str, nominal_fps: Option<f64>) -> Result<RgbTrace> {
    let rows = read_columns(path, text, &["t", "r", "g", "b"])?;
    let cols = (0..4).map(|c| required(path, &rows, c)).collect::<Result<Vec<_>>>()?;
    let [t, r, g, b]: [Vec<f64>; 4] = cols.try_into().expect("four columns");
    let fps = match nominal_fps {
        Some(f) => f,
        None => resample_check(&t).map_err(|e| Error::parse(path, e.to_string()))?,
    };
    RgbTrace::new(t, r, g, b, fps).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn read_trace_csv(path: &Path, nominal_fps: Option<f64>) -> Result<RgbTrace> {
    trace_from_csv(path, &read_text(path)?, nominal_fps)
}

pub fn write_trace_csv(path: &Path, trace: &RgbTrace) -> Result<()> {
    write_atomic(path, trace_to_csv(trace).as_bytes())
}

/// `t_start,hr_bpm`; a missing window leaves `hr_bpm` empty.
pub fn hr_to_csv(series: &HrSeries) -> String {
    let rows = series
        .window_start()
        .iter()
        .zip(series.hr_bpm())
        .map(|(t, h)| format!("{t:?},{}", h.map(|v| format!("{v:?}")).unwrap_or_default()));
    csv_text("t_start,hr_bpm", rows)
}

pub fn hr_from_csv(path: &Path, text: &str) -> Result<HrSeries> {
    let rows = read_columns(path, text, &["t_start", "hr_bpm"])?;
    let t = required(path, &rows, 0)?;
    let h = rows.iter().map(|r| r[1]).collect();
    HrSeries::new(t, h).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn read_hr_csv(path: &Path) -> Result<HrSeries> {
    hr_from_csv(path, &read_text(path)?)
}

pub fn write_hr_csv(path: &Path, series: &HrSeries) -> Result<()> {
    write_atomic(path, hr_to_csv(series).as_bytes())
}

/// `t,ppg` reference waveform.
pub fn ppg_to_csv(sig: &BvpSignal) -> String {
    let rows = sig
        .samples
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{:?},{v:?}", i as f64 / sig.fs));
    csv_text("t,ppg", rows)
}

/// Reference waveform; its rate is `fs` when given, otherwise taken from
/// the timestamp span.
pub fn ppg_from_csv(path: &Path, text: &str, fs: Option<f64>) -> Result<BvpSignal> {
    let rows = read_columns(path, text, &["t", "ppg"])?;
    let t = required(path, &rows, 0)?;
    let v = required(path, &rows, 1)?;
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::parse(path, "timestamps must be strictly increasing"));
    }
    let fs = match fs {
        Some(f) => f,
        None => resample_check(&t).map_err(|e| Error::parse(path, e.to_string()))?,
    };
    BvpSignal::new(v, fs)
}

pub fn read_ppg_csv(path: &Path, fs: Option<f64>) -> Result<BvpSignal> {
    ppg_from_csv(path, &read_text(path)?, fs)
}

pub fn write_ppg_csv(path: &Path, sig: &BvpSignal) -> Result<()> {
    write_atomic(path, ppg_to_csv(sig).as_bytes())
}

/// `t,bvp` pulse signal with explicit sample times.
pub fn signal_to_csv(timestamps: &[f64], values: &[f64]) -> String {
    let rows = timestamps.iter().zip(values).map(|(t, v)| format!("{t:?},{v:?}"));
    csv_text("t,bvp", rows)
}

pub fn signal_from_csv(path: &Path, text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let rows = read_columns(path, text, &["t", "bvp"])?;
    let t = required(path, &rows, 0)?;
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::parse(path, "timestamps must be strictly increasing"));
    }
    Ok((t, required(path, &rows, 1)?))
}

pub fn read_signal_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    signal_from_csv(path, &read_text(path)?)
}

pub fn write_signal_csv(path: &Path, timestamps: &[f64], values: &[f64]) -> Result<()> {
    write_atomic(path, signal_to_csv(timestamps, values).as_bytes())
}

/// `# nominal_fps=.. total_original=..` then `kept_index,timestamp`.
pub fn manifest_to_csv(m: &DropManifest) -> String {
    let mut s = format!("# nominal_fps={:?} total_original={}\n", m.nominal_fps, m.total_original);
    let rows = m
        .kept_indices
        .iter()
        .zip(&m.original_timestamps)
        .map(|(i, t)| format!("{i},{t:?}"));
    s.push_str(&csv_text("kept_index,timestamp", rows));
    s
}

pub fn manifest_from_csv(path: &Path, text: &str) -> Result<DropManifest> {
    let mut fps = None;
    let mut total = None;
    for line in text.lines().filter(|l| l.trim_start().starts_with('#')) {
        for kv in line.trim_start_matches(|c: char| c == '#' || c.is_whitespace()).split_whitespace() {
            match kv.split_once('=') {
                Some(("nominal_fps", v)) => fps = Some(field_f64(path, 1, v)?),
                Some(("total_original", v)) => {
                    total = Some(v.parse::<usize>().map_err(|_| Error::parse(path, format!("bad total_original '{v}'")))?)
                }
                _ => {}
            }
        }
    }
    let fps = fps.ok_or_else(|| Error::parse(path, "header comment lacks nominal_fps"))?;
    let total = total.ok_or_else(|| Error::parse(path, "header comment lacks total_original"))?;
    let rows = read_columns(path, text, &["kept_index", "timestamp"])?;
    let idx = required(path, &rows, 0)?;
    if idx.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
        return Err(Error::parse(path, "kept_index must be a non-negative integer"));
    }
    let ts = required(path, &rows, 1)?;
    DropManifest::new(idx.into_iter().map(|v| v as usize).collect(), ts, fps, total)
        .map_err(|e| Error::parse(path, e.to_string()))
}

pub fn read_manifest_csv(path: &Path) -> Result<DropManifest> {
    manifest_from_csv(path, &read_text(path)?)
}

pub fn write_manifest_csv(path: &Path, m: &DropManifest) -> Result<()> {
    write_atomic(path, manifest_to_csv(m).as_bytes())
}

/// Landmark file: lines `frame_idx x y`, points listed in order per frame.
///
/// An optional header comment overrides the default semantic layout:
/// `# nose_bridge=22 outline=0,1,…,21 eyes=23,24`.
pub fn landmarks_from_text(path: &Path, text: &str, frames: usize) -> Result<Vec<LandmarkSet>> {
    let mut per_frame: Vec<Vec<(f64, f64)>> = vec![Vec::new(); frames];
    let mut nose = None;
    let mut outline = None;
    let mut eyes = None;
    let bad = |n: usize, m: &str| Error::parse(path, format!("line {n}: {m}"));
    for (n, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            for kv in rest.split_whitespace() {
                let list = |v: &str| {
                    v.split(',')
                        .map(|s| s.parse::<usize>().map_err(|_| bad(n, "bad index list")))
                        .collect::<Result<Vec<_>>>()
                };
                match kv.split_once('=') {
                    Some(("nose_bridge", v)) => nose = Some(v.parse::<usize>().map_err(|_| bad(n, "bad nose_bridge"))?),
                    Some(("outline", v)) => outline = Some(list(v)?),
                    Some(("eyes", v)) => {
                        let e = list(v)?;
                        if e.len() != 2 {
                            return Err(bad(n, "eyes needs two indices"));
                        }
                        eyes = Some((e[0], e[1]));
                    }
                    _ => {}
                }
            }
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(bad(n, "expected 'idx x y'"));
        }
        let idx: usize = parts[0].parse().map_err(|_| bad(n, "bad frame index"))?;
        let x = field_f64(path, n as u64, parts[1])?;
        let y = field_f64(path, n as u64, parts[2])?;
        per_frame
            .get_mut(idx)
            .ok_or_else(|| bad(n, &format!("frame index {idx} beyond {frames} frames")))?
            .push((x, y));
    }
    per_frame
        .into_iter()
        .enumerate()
        .map(|(i, pts)| {
            if pts.is_empty() {
                return Err(Error::parse(path, format!("frame {i} has no landmarks")));
            }
            let mut lm = LandmarkSet::with_default_layout(pts);
            if let Some(v) = nose {
                lm.nose_bridge = v;
            }
            if let Some(v) = &outline {
                lm.mask_outline = v.clone();
            }
            if eyes.is_some() {
                lm.eye_outer = eyes;
            }
            Ok(lm)
        })
        .collect()
}

pub fn read_landmarks(path: &Path, frames: usize) -> Result<Vec<LandmarkSet>> {
    landmarks_from_text(path, &read_text(path)?, frames)
}

pub fn landmarks_to_text(lms: &[LandmarkSet]) -> String {
    let mut s = String::new();
    if let Some(first) = lms.first() {
        let outline: Vec<String> = first.mask_outline.iter().map(|i| i.to_string()).collect();
        s.push_str(&format!("# nose_bridge={} outline={}", first.nose_bridge, outline.join(",")));
        if let Some((l, r)) = first.eye_outer {
            s.push_str(&format!(" eyes={l},{r}"));
        }
        s.push('\n');
    }
    for (i, lm) in lms.iter().enumerate() {
        for (x, y) in &lm.points {
            s.push_str(&format!("{i} {x:?} {y:?}\n"));
        }
    }
    s
}

fn sniff(path: &Path, bytes: &[u8]) -> Result<ImageFormat> {
    if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
        Ok(ImageFormat::Png)
    } else if bytes.starts_with(b"P6") || bytes.starts_with(b"P5") || bytes.starts_with(b"P3") {
        Ok(ImageFormat::Pnm)
    } else {
        Err(Error::parse(path, "not a PNG or PPM file"))
    }
}

fn load_image(path: &Path) -> Result<image::DynamicImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let fmt = sniff(path, &bytes)?;
    image::load_from_memory_with_format(&bytes, fmt).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Regular files of `dir`, sorted by name, skipping dot-files.
pub fn sorted_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let p = entry.path();
        let hidden = p.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.'));
        if p.is_file() && !hidden {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

pub fn read_frame(path: &Path) -> Result<Frame> {
    let img = load_image(path)?;
    match img {
        image::DynamicImage::ImageRgb8(f) => Ok(f),
        other => {
            if other.color().has_alpha() || other.color().channel_count() != 3 {
                return Err(Error::parse(path, format!("expected 8-bit RGB, found {:?}", other.color())));
            }
            Ok(other.to_rgb8())
        }
    }
}

/// Lexicographically ordered PNG/PPM frames.
pub fn read_frames_dir(dir: &Path) -> Result<Vec<Frame>> {
    let files = sorted_files(dir)?;
    if files.is_empty() {
        return Err(Error::parse(dir, "no frame files"));
    }
    files.iter().map(|p| read_frame(p)).collect()
}

fn png_bytes(path: &Path, img: &image::DynamicImage) -> Result<Vec<u8>> {
    let mut buf = std::io::Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(buf.into_inner())
}

/// Frames as `frame_000000.png` …
pub fn write_frames_dir(dir: &Path, frames: &[Frame]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, f) in frames.iter().enumerate() {
        let p = dir.join(format!("frame_{i:06}.png"));
        let bytes = png_bytes(&p, &image::DynamicImage::ImageRgb8(f.clone()))?;
        write_atomic(&p, &bytes)?;
    }
    Ok(())
}

/// Gray masks, nonzero = skin, one per frame in name order.
pub fn read_mask_dir(dir: &Path) -> Result<Vec<SkinMask>> {
    sorted_files(dir)?
        .iter()
        .map(|p| {
            let g = load_image(p)?.to_luma8();
            let (w, h) = g.dimensions();
            SkinMask::new(w, h, g.as_raw().iter().map(|&v| v != 0).collect())
        })
        .collect()
}

/// 22 lines `x y`.
pub fn points_from_text(path: &Path, text: &str) -> Result<Vec<(f64, f64)>> {
    let mut pts = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Vec<&str> = line.split_whitespace().collect();
        if v.len() != 2 {
            return Err(Error::parse(path, format!("line {}: expected 'x y'", n + 1)));
        }
        pts.push((field_f64(path, n as u64 + 1, v[0])?, field_f64(path, n as u64 + 1, v[1])?));
    }
    if pts.len() != MASK_OUTLINE_LEN {
        return Err(Error::parse(path, format!("expected {MASK_OUTLINE_LEN} points, found {}", pts.len())));
    }
    Ok(pts)
}

/// RGBA overlay plus, for facemasks, its outline sidecar.
pub fn read_asset(image_path: &Path, points_path: Option<&Path>) -> Result<OcclusionAsset> {
    let img: RgbaImage = load_image(image_path)?.to_rgba8();
    let pts = points_path
        .map(|p| points_from_text(p, &read_text(p)?))
        .transpose()?;
    OcclusionAsset::new(img, pts)
}

pub fn write_asset(image_path: &Path, asset: &OcclusionAsset, points_path: Option<&Path>) -> Result<()> {
    let bytes = png_bytes(image_path, &image::DynamicImage::ImageRgba8(asset.image.clone()))?;
    write_atomic(image_path, &bytes)?;
    if let (Some(pp), Some(pts)) = (points_path, &asset.source_points) {
        let text: String = pts.iter().map(|(x, y)| format!("{x:?} {y:?}\n")).collect();
        write_atomic(pp, text.as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{Rgb, RgbImage};

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn trace_round_trip() {
        let t = RgbTrace::uniform(vec![1.5, 2.0, 3.25], vec![100.0, 101.0, 0.1], vec![9.0; 3], 30.0).unwrap();
        let text = trace_to_csv(&t);
        assert!(text.starts_with("t,r,g,b\n"));
        assert_eq!(trace_from_csv(p(), &text, Some(30.0)).unwrap(), t);
        let inferred = trace_from_csv(p(), &text, None).unwrap();
        assert!((inferred.nominal_fps() - 30.0).abs() < 1e-9);
    }

    #[test]
    fn trace_errors_name_the_problem() {
        assert!(matches!(trace_from_csv(p(), "t,r,g\n0,1,2\n", None), Err(Error::Parse { .. })));
        let e = trace_from_csv(p(), "t,r,g,b\n0,1,2,x\n", Some(1.0)).unwrap_err();
        assert!(e.to_string().contains("'x'"));
        assert!(trace_from_csv(p(), "t,r,g,b\n1,1,1,1\n0,1,1,1\n", Some(1.0)).is_err());
    }

    #[test]
    fn hr_round_trip_with_missing() {
        let s = HrSeries::new(vec![0.0, 1.0, 2.0], vec![Some(72.0), None, Some(75.5)]).unwrap();
        let text = hr_to_csv(&s);
        assert_eq!(text, "t_start,hr_bpm\n0.0,72.0\n1.0,\n2.0,75.5\n");
        assert_eq!(hr_from_csv(p(), &text).unwrap(), s);
    }

    #[test]
    fn signal_round_trip() {
        let text = signal_to_csv(&[0.0, 0.5], &[1.25, -3.0]);
        assert_eq!(text, "t,bvp\n0.0,1.25\n0.5,-3.0\n");
        assert_eq!(signal_from_csv(p(), &text).unwrap(), (vec![0.0, 0.5], vec![1.25, -3.0]));
    }

    #[test]
    fn manifest_round_trip() {
        let m = DropManifest::new(vec![0, 2, 5], vec![0.0, 2.0 / 30.0, 5.0 / 30.0], 30.0, 6).unwrap();
        let text = manifest_to_csv(&m);
        assert!(text.starts_with("# nominal_fps=30.0 total_original=6\nkept_index,timestamp\n"));
        assert_eq!(manifest_from_csv(p(), &text).unwrap(), m);
        assert!(manifest_from_csv(p(), "kept_index,timestamp\n0,0\n").is_err());
    }

    #[test]
    fn ppg_round_trip() {
        let s = BvpSignal::new(vec![0.0, 0.5, -0.25, 1.0], 4.0).unwrap();
        assert_eq!(ppg_from_csv(p(), &ppg_to_csv(&s), None).unwrap(), s);
    }

    #[test]
    fn landmark_parsing() {
        let text = "# nose_bridge=1 outline=0,1 eyes=0,1\n0 1 2\n0 3 4\n1 5 6\n1 7 8\n";
        let lms = landmarks_from_text(p(), text, 2).unwrap();
        assert_eq!(lms[1].points, vec![(5.0, 6.0), (7.0, 8.0)]);
        assert_eq!(lms[0].nose_bridge, 1);
        assert_eq!(lms[0].eye_outer, Some((0, 1)));
        assert!(landmarks_from_text(p(), "0 1 2\n", 2).is_err());
        assert!(landmarks_from_text(p(), "5 1 2\n", 2).is_err());
        let back = landmarks_from_text(p(), &landmarks_to_text(&lms), 2).unwrap();
        assert_eq!(back, lms);
    }

    #[test]
    fn frames_dir_round_trip_and_sniffing() {
        let dir = tempfile::tempdir().unwrap();
        let frames: Vec<RgbImage> = (0..3).map(|i| RgbImage::from_pixel(4, 3, Rgb([i * 10, 5, 7]))).collect();
        write_frames_dir(dir.path(), &frames).unwrap();
        // A PPM named to sort last, with a misleading extension.
        let mut ppm = b"P6\n4 3\n255\n".to_vec();
        ppm.extend(std::iter::repeat_n([9u8, 8, 7], 12).flatten());
        fs::write(dir.path().join("zzz.png"), &ppm).unwrap();
        let back = read_frames_dir(dir.path()).unwrap();
        assert_eq!(&back[..3], &frames[..]);
        assert_eq!(back[3].get_pixel(0, 0).0, [9, 8, 7]);
        fs::write(dir.path().join("zzzz.txt"), b"hello").unwrap();
        assert!(read_frames_dir(dir.path()).is_err());
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("out.txt");
        write_atomic(&f, b"one").unwrap();
        write_atomic(&f, b"two").unwrap();
        assert_eq!(fs::read(&f).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn asset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let a = crate::evaluation::synth::synth_facemask();
        let (ip, pp) = (dir.path().join("mask.png"), dir.path().join("mask.txt"));
        write_asset(&ip, &a, Some(&pp)).unwrap();
        let b = read_asset(&ip, Some(&pp)).unwrap();
        assert_eq!(a.image, b.image);
        assert_eq!(a.source_points, b.source_points);
    }
}
