//! Degradation, remote-photoplethysmography extraction, mitigation and
//! heart-rate evaluation for face-video frame sequences and RGB traces.
//!
//! The pipeline is:
//!
//! 1. [`degradation`] and [`temporal`] corrupt a [`FrameSequence`] or an
//!    [`RgbTrace`] (resolution, color depth, blur, noise, occlusion, frame
//!    rate and random frame loss).
//! 2. [`rppg`] turns a trace into a blood-volume-pulse signal with one of the
//!    classical extractors (GREEN, CHROM, POS, OMIT).
//! 3. [`mitigation`] undoes part of the damage (frame-drop strategies,
//!    non-local means, total variation, skin-only masking, Lab color transfer).
//! 4. [`hr`] and [`evaluation`] turn signals into per-window heart rates and
//!    score them against ground truth.
//!
//! Data-parallel hot loops (per-pixel NLM, per-frame degradation, sweep cells)
//! run on rayon when the `parallel` feature is enabled and sequentially
//! otherwise; see [`par::Parallelism`].

// `!(x > 0.0)` is used on purpose to reject NaN alongside non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod degradation;
pub mod error;
pub mod evaluation;
pub mod harness;
pub mod hr;
pub mod io;
pub mod mitigation;
pub mod model;
pub mod par;
pub mod rppg;
pub mod temporal;

pub use error::{Error, Result};
pub use model::{
    mean_rgb, resample_check, BvpSignal, Frame, FrameSequence, GroundTruth, HrSeries, LandmarkSet,
    RgbTrace, SkinMask,
};
