//! 16-bit PCM mono 16 kHz WAV reading and writing.
//!
//! Anything else (wrong rate, channel count, or depth) is rejected with a
//! descriptive error; there is no silent resampling.

use std::path::Path;

use crate::error::{Error, Result};
use crate::spectral::Waveform;
use crate::SAMPLE_RATE;

pub fn read_wav(path: &Path) -> Result<Waveform<f64>> {
    let reader = hound::WavReader::open(path)
        .map_err(|e| Error::data(format!("cannot open {}: {e}", path.display())))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::data(format!(
            "{}: expected mono, found {} channels",
            path.display(),
            spec.channels
        )));
    }
    if spec.sample_rate != SAMPLE_RATE {
        return Err(Error::data(format!(
            "{}: expected {} Hz, found {} Hz",
            path.display(),
            SAMPLE_RATE,
            spec.sample_rate
        )));
    }
    if spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::data(format!(
            "{}: expected 16-bit integer PCM, found {}-bit {:?}",
            path.display(),
            spec.bits_per_sample,
            spec.sample_format
        )));
    }
    let samples: std::result::Result<Vec<i16>, _> = reader.into_samples::<i16>().collect();
    let samples =
        samples.map_err(|e| Error::data(format!("{}: decode failed: {e}", path.display())))?;
    Ok(Waveform::new(
        samples.into_iter().map(|s| s as f64 / 32768.0).collect(),
    ))
}

/// Writes with amplitudes clipped to [-1, 1); a write/read round trip
/// reproduces samples to within one 16-bit LSB.
pub fn write_wav(path: &Path, wave: &Waveform<f64>) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: SAMPLE_RATE,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)
        .map_err(|e| Error::data(format!("cannot create {}: {e}", path.display())))?;
    for &s in wave.samples() {
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer
            .write_sample(q)
            .map_err(|e| Error::data(format!("write failed: {e}")))?;
    }
    writer
        .finalize()
        .map_err(|e| Error::data(format!("finalize failed: {e}")))?;
    Ok(())
}
