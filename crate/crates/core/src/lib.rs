//! Sub-band spectral-mapping speech enhancement with teacher-student
//! distillation.
//!
//! The pipeline maps noisy STFT magnitudes to clean ones, one frequency
//! sub-band at a time. Per-band specialist models ("teachers") are trained
//! first; a single generalist ("student") that serves every band can then be
//! trained with an extra loss term pulling its output toward the frozen
//! teacher of whichever band the current batch was drawn from. Enhanced
//! magnitudes are recombined with the noisy phase and inverted back to a
//! waveform.
//!
//! Layout:
//! - [`spectral`] — forward/inverse STFT and magnitude/phase handling
//! - [`subband`] — band partition geometry, slice extraction and reassembly
//! - [`network`] — the bidirectional-LSTM enhancer: forward, BPTT, Adam,
//!   checkpoints
//! - [`training`] — losses, teacher/student training loops, enhancement
//! - [`data`] — WAV I/O, SNR-controlled mixing, synthetic corpus generation
//! - [`metrics`] — STOI, SI-SDR, segmental SNR, per-band spectral MSE
//!
//! All numeric kernels are generic over [`Scalar`] (`f32` or `f64`); the
//! trainers and metrics run in `f64`, and the aliases below name the
//! concrete types the rest of the crate trades in.

pub mod data;
pub mod error;
pub mod mat;
pub mod metrics;
pub mod network;
pub mod scalar;
pub mod spectral;
pub mod subband;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Sample rate every waveform in this crate runs at.
pub const SAMPLE_RATE: u32 = 16_000;

pub type Mat64 = mat::Mat<f64>;
pub type Waveform64 = spectral::Waveform<f64>;
pub type Spectrogram64 = spectral::Spectrogram<f64>;
pub type StftConfig64 = spectral::StftConfig<f64>;
pub type ModelParams64 = network::ModelParams<f64>;
pub type AdamState64 = network::AdamState<f64>;
