//! Metrics, synthetic subjects and degradation/mitigation sweeps.

pub mod matrix;
pub mod metrics;
pub mod report;
pub mod synth;

pub use matrix::{
    analyze, run_matrix, Analysis, Assets, Degradation, EvaluationReport, MatrixConfig, ReportRow, Subject,
    SubjectData,
};
pub use metrics::{mae, pcc, pearson, psnr, ssim, ssim_plane, SsimParams};
pub use report::{report_csv, report_json, write_report, SCHEMA_VERSION};
pub use synth::{synth_subject, synth_subject_with, HrProfile, SynthSpec};
