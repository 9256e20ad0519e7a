//! Scale-invariant SDR and segmental SNR.

use crate::error::{Error, Result};
use crate::spectral::Waveform;

/// Numerical cap applied symmetrically; a perfect (or perfectly scaled)
/// estimate reports +100 dB instead of infinity.
pub const SI_SDR_CAP_DB: f64 = 100.0;

/// Scale-invariant signal-to-distortion ratio in dB: the estimate is
/// projected onto the reference, and the ratio of projection power to
/// residual power is reported. Signals are cropped to the shorter length.
pub fn si_sdr(reference: &Waveform<f64>, estimate: &Waveform<f64>) -> Result<f64> {
    let n = reference.len().min(estimate.len());
    if n == 0 {
        return Err(Error::invalid("empty signals"));
    }
    let r = &reference.samples()[..n];
    let e = &estimate.samples()[..n];

    let p_ref: f64 = r.iter().map(|v| v * v).sum();
    if p_ref == 0.0 {
        return Err(Error::invalid("silent reference"));
    }
    let dot: f64 = r.iter().zip(e).map(|(a, b)| a * b).sum();
    let alpha = dot / p_ref;

    let mut p_target = 0.0;
    let mut p_residual = 0.0;
    for (a, b) in r.iter().zip(e) {
        let t = alpha * a;
        let d = b - t;
        p_target += t * t;
        p_residual += d * d;
    }

    if p_residual == 0.0 {
        return Ok(SI_SDR_CAP_DB);
    }
    if p_target == 0.0 {
        return Ok(-SI_SDR_CAP_DB);
    }
    Ok((10.0 * (p_target / p_residual).log10()).clamp(-SI_SDR_CAP_DB, SI_SDR_CAP_DB))
}

const SEG_FRAME: usize = 512; // 32 ms at 16 kHz
const SEG_HOP: usize = 256;
const SEG_SNR_MIN_DB: f64 = -10.0;
const SEG_SNR_MAX_DB: f64 = 35.0;

/// Mean of per-frame SNRs over 32 ms frames at 50% overlap, each clamped
/// to [-10, 35] dB.
pub fn seg_snr(clean: &Waveform<f64>, degraded: &Waveform<f64>) -> Result<f64> {
    let n = clean.len().min(degraded.len());
    if n < SEG_FRAME {
        return Err(Error::invalid(format!(
            "need at least {SEG_FRAME} samples for segmental snr, got {n}"
        )));
    }
    let c = &clean.samples()[..n];
    let d = &degraded.samples()[..n];
    let frames = (n - SEG_FRAME) / SEG_HOP + 1;

    let mut sum = 0.0;
    for m in 0..frames {
        let start = m * SEG_HOP;
        let mut p_sig = 0.0;
        let mut p_err = 0.0;
        for k in start..start + SEG_FRAME {
            p_sig += c[k] * c[k];
            let e = c[k] - d[k];
            p_err += e * e;
        }
        let snr = if p_err == 0.0 {
            SEG_SNR_MAX_DB
        } else if p_sig == 0.0 {
            SEG_SNR_MIN_DB
        } else {
            (10.0 * (p_sig / p_err).log10()).clamp(SEG_SNR_MIN_DB, SEG_SNR_MAX_DB)
        };
        sum += snr;
    }
    Ok(sum / frames as f64)
}
