//! Additive mixing at a target SNR.

use rand::{Rng, RngExt};

use crate::error::{Error, Result};
use crate::spectral::Waveform;

/// A clean/noise/noisy triple with the noise already scaled, so
/// `noisy == clean + noise` holds samplewise.
#[derive(Clone, Debug)]
pub struct MixtureSample {
    pub clean: Waveform<f64>,
    pub noise: Waveform<f64>,
    pub noisy: Waveform<f64>,
    pub snr_db: f64,
}

impl MixtureSample {
    /// Recomputed clean-to-noise power ratio in dB.
    pub fn achieved_snr_db(&self) -> f64 {
        10.0 * (self.clean.power() / self.noise.power()).log10()
    }
}

/// Scales `noise` so the clean-to-noise power ratio hits `snr_db`, then
/// adds it to `clean`. A noise clip longer than the clean signal is cropped
/// from a random offset drawn from `rng`; shorter noise is an error. An
/// infinite `snr_db` acts as a bypass: the noise is zeroed and
/// `noisy == clean`.
pub fn mix_at_snr(
    clean: &Waveform<f64>,
    noise: &Waveform<f64>,
    snr_db: f64,
    rng: &mut impl Rng,
) -> Result<MixtureSample> {
    let p_clean = clean.power();
    if p_clean == 0.0 {
        return Err(Error::data("clean signal is silent"));
    }
    if noise.len() < clean.len() {
        return Err(Error::data(format!(
            "noise clip ({} samples) shorter than clean signal ({})",
            noise.len(),
            clean.len()
        )));
    }

    let max_offset = noise.len() - clean.len();
    let offset = if max_offset > 0 {
        rng.random_range(0..=max_offset)
    } else {
        0
    };
    let segment = &noise.samples()[offset..offset + clean.len()];

    if snr_db.is_infinite() && snr_db > 0.0 {
        return Ok(MixtureSample {
            clean: clean.clone(),
            noise: Waveform::new(vec![0.0; clean.len()]),
            noisy: clean.clone(),
            snr_db,
        });
    }

    let p_noise: f64 = segment.iter().map(|v| v * v).sum::<f64>() / segment.len() as f64;
    if p_noise == 0.0 {
        return Err(Error::data("noise signal is silent"));
    }
    let scale = (p_clean / (p_noise * 10f64.powf(snr_db / 10.0))).sqrt();

    let scaled: Vec<f64> = segment.iter().map(|v| v * scale).collect();
    let noisy: Vec<f64> = clean
        .samples()
        .iter()
        .zip(&scaled)
        .map(|(c, n)| c + n)
        .collect();
    Ok(MixtureSample {
        clean: clean.clone(),
        noise: Waveform::new(scaled),
        noisy: Waveform::new(noisy),
        snr_db,
    })
}
