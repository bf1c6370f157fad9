//! CSV and JSON renderings of an [`EvaluationReport`].

use serde_json::{json, Map, Value};

use super::matrix::{EvaluationReport, ReportRow};
use crate::error::Result;
use crate::io::write_atomic;

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 13] = [
    "subject",
    "method",
    "degradation",
    "mitigation",
    "seed",
    "mae",
    "pcc",
    "psnr",
    "ssim",
    "missing_windows",
    "total_windows",
    "degenerate",
    "error",
];

/// Shortest round-trip text; infinities spelled `inf` / `-inf`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn json_f64(v: Option<f64>) -> Value {
    match v {
        None => Value::Null,
        Some(x) if x.is_finite() => json!(x),
        Some(x) => Value::String(fmt_f64(x)),
    }
}

fn row_json(r: &ReportRow) -> Value {
    let mut m = Map::new();
    m.insert("subject".into(), json!(r.subject));
    m.insert("method".into(), json!(r.method.as_str()));
    m.insert("degradation".into(), json!(r.degradation));
    m.insert("mitigation".into(), json!(r.mitigation));
    m.insert("seed".into(), json!(r.seed));
    m.insert("mae".into(), json_f64(r.mae));
    m.insert("pcc".into(), json_f64(r.pcc));
    m.insert("psnr".into(), json_f64(r.psnr));
    m.insert("ssim".into(), json_f64(r.ssim));
    m.insert("missing_windows".into(), json!(r.missing_windows));
    m.insert("total_windows".into(), json!(r.total_windows));
    m.insert("degenerate".into(), json!(r.degenerate));
    m.insert("error".into(), json!(r.error));
    Value::Object(m)
}

/// `{schema_version, config, rows}`.
pub fn report_json(report: &EvaluationReport, config: &Value) -> String {
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "config": config,
        "rows": report.rows.iter().map(row_json).collect::<Vec<_>>(),
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Two `#` header lines (schema version, compact config) then the table.
pub fn report_csv(report: &EvaluationReport, config: &Value) -> Result<String> {
    let mut out = format!("# schema_version={SCHEMA_VERSION}\n# config={config}\n");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in &report.rows {
        w.write_record([
            r.subject.clone(),
            r.method.as_str().to_string(),
            r.degradation.clone(),
            r.mitigation.clone(),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            opt_f64(r.mae),
            opt_f64(r.pcc),
            opt_f64(r.psnr),
            opt_f64(r.ssim),
            r.missing_windows.to_string(),
            r.total_windows.to_string(),
            r.degenerate.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    let body = w.into_inner().map_err(|e| crate::error::Error::invalid(e.to_string()))?;
    out.push_str(&String::from_utf8(body).expect("CSV of UTF-8 fields is UTF-8"));
    Ok(out)
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    crate::error::Error::invalid(format!("csv: {e}"))
}

/// Write `<stem>.csv` and `<stem>.json` atomically.
pub fn write_report(stem: &std::path::Path, report: &EvaluationReport, config: &Value) -> Result<()> {
    write_atomic(&stem.with_extension("csv"), report_csv(report, config)?.as_bytes())?;
    write_atomic(&stem.with_extension("json"), report_json(report, config).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rppg::MethodId;

    fn row() -> ReportRow {
        ReportRow {
            subject: "s,1".into(),
            method: MethodId::Pos,
            degradation: "none".into(),
            mitigation: "none".into(),
            seed: Some(7),
            mae: Some(0.1),
            pcc: None,
            psnr: Some(f64::INFINITY),
            ssim: Some(1.0),
            missing_windows: 0,
            total_windows: 51,
            degenerate: false,
            error: None,
        }
    }

    #[test]
    fn csv_layout() {
        let rep = EvaluationReport { rows: vec![row()] };
        let cfg = json!({"seed": 7});
        let text = report_csv(&rep, &cfg).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# schema_version=1");
        assert_eq!(lines[1], "# config={\"seed\":7}");
        assert_eq!(lines[2], CSV_COLUMNS.join(","));
        assert_eq!(lines[3], "\"s,1\",pos,none,none,7,0.1,,inf,1.0,0,51,false,");
    }

    #[test]
    fn json_layout() {
        let rep = EvaluationReport { rows: vec![row()] };
        let v: Value = serde_json::from_str(&report_json(&rep, &json!({}))).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["rows"][0]["psnr"], "inf");
        assert_eq!(v["rows"][0]["pcc"], Value::Null);
        assert_eq!(v["rows"][0]["mae"], 0.1);
    }

    #[test]
    fn float_text_round_trips() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 123456.789] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
    }
}
