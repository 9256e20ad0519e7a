//! Full enhancement pipeline: STFT, per-band forward passes, reassembly
//! with residual passthrough, and noisy-phase resynthesis.

use crate::error::{Error, Result};
use crate::network::{Checkpoint, ModelParams};
use crate::spectral::{recombine, stft, StftConfig, Waveform};
use crate::subband::{assemble, extract, SubbandPartition};

/// Enhances `noisy` with one model applied to every band. Residual bins
/// pass through from the noisy magnitude; the noisy phase is reused for
/// synthesis.
pub fn enhance(
    model: &ModelParams<f64>,
    noisy: &Waveform<f64>,
    part: &SubbandPartition,
    cfg: &StftConfig<f64>,
) -> Result<Waveform<f64>> {
    if part.total_bins() != cfg.bins() {
        return Err(Error::invalid(format!(
            "partition covers {} bins but the STFT yields {}",
            part.total_bins(),
            cfg.bins()
        )));
    }
    if model.band_width() != part.band_width() {
        return Err(Error::invalid(format!(
            "model width {} does not match partition band width {}",
            model.band_width(),
            part.band_width()
        )));
    }

    let spec = stft(noisy, cfg)?;
    let mag = spec.magnitude();
    let phase = spec.phase();

    let mut slices = Vec::with_capacity(part.n_bands());
    for band in 0..part.n_bands() {
        let mut slice = extract(&mag, part, band)?;
        slice.values = model.forward(&slice.values)?;
        slices.push(slice);
    }
    let enhanced = assemble(&slices, &mag, part)?;
    recombine(&enhanced, &phase, cfg)
}

/// The pipeline with the model bypassed: a plain STFT round trip of the
/// noisy input.
pub fn enhance_bypass(noisy: &Waveform<f64>, cfg: &StftConfig<f64>) -> Result<Waveform<f64>> {
    let spec = stft(noisy, cfg)?;
    recombine(&spec.magnitude(), &spec.phase(), cfg)
}

/// Loads weights from a checkpoint, verifying its geometry against the
/// partition first.
pub fn enhance_with_checkpoint(
    ck: &Checkpoint,
    noisy: &Waveform<f64>,
    part: &SubbandPartition,
    cfg: &StftConfig<f64>,
) -> Result<Waveform<f64>> {
    if ck.params.band_width() != part.band_width() {
        return Err(Error::Checkpoint(format!(
            "checkpoint width {} does not match partition band width {}",
            ck.params.band_width(),
            part.band_width()
        )));
    }
    enhance(&ck.params_f64(), noisy, part, cfg)
}
