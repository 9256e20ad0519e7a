//! Synthetic desk-scale corpus: harmonic tone complexes with speech-like
//! envelopes, mixed with white / pink / band-limited noise at the training
//! SNRs {0, 5, 10, 15} dB and the slightly higher test SNRs
//! {2.5, 7.5, 12.5, 17.5} dB. Everything is drawn from one seeded
//! generator, so a fixed seed reproduces the corpus bit for bit.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use realfft::RealFftPlanner;

use crate::data::corpus::{CorpusEntry, CorpusIndex, Split};
use crate::data::mix::mix_at_snr;
use crate::data::wav::write_wav;
use crate::error::{Error, Result};
use crate::spectral::Waveform;
use crate::SAMPLE_RATE;

pub const TRAIN_SNRS_DB: [f64; 4] = [0.0, 5.0, 10.0, 15.0];
pub const TEST_SNRS_DB: [f64; 4] = [2.5, 7.5, 12.5, 17.5];

/// Generates `count` clean/noisy pairs of `duration_s` seconds under
/// `dir`, writes `index.json`, and returns the loaded index. Roughly a
/// fifth of the entries form the test split.
pub fn generate_toy_corpus(
    dir: &Path,
    seed: u64,
    count: usize,
    duration_s: f64,
) -> Result<CorpusIndex> {
    if count == 0 {
        return Err(Error::invalid("corpus size must be at least 1"));
    }
    if duration_s <= 0.0 {
        return Err(Error::invalid("duration must be positive"));
    }
    let n_test = if count == 1 { 0 } else { (count / 5).max(1) };
    let n_train = count - n_test;

    for split in ["train", "test"] {
        for kind in ["clean", "noisy"] {
            std::fs::create_dir_all(dir.join(split).join(kind))?;
        }
    }

    let len = (duration_s * SAMPLE_RATE as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(count);

    for idx in 0..count {
        let (split, split_name, number) = if idx < n_train {
            (Split::Train, "train", idx)
        } else {
            (Split::Test, "test", idx - n_train)
        };
        let snrs = match split {
            Split::Train => &TRAIN_SNRS_DB,
            Split::Test => &TEST_SNRS_DB,
        };
        let snr_db = snrs[idx % snrs.len()];

        let clean = synth_voice(len, &mut rng);
        let noise = synth_noise(len + SAMPLE_RATE as usize / 2, idx % 3, &mut rng);
        let mut mix = mix_at_snr(&clean, &noise, snr_db, &mut rng)?;

        // Keep the peak under full scale so quantization cannot clip;
        // a common factor preserves the SNR exactly.
        let peak = mix
            .noisy
            .samples()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 0.98 {
            let s = 0.98 / peak;
            mix.clean = Waveform::new(mix.clean.samples().iter().map(|v| v * s).collect());
            mix.noisy = Waveform::new(mix.noisy.samples().iter().map(|v| v * s).collect());
        }

        let clean_rel = format!("{split_name}/clean/{number:04}.wav");
        let noisy_rel = format!("{split_name}/noisy/{number:04}.wav");
        write_wav(&dir.join(&clean_rel), &mix.clean)?;
        write_wav(&dir.join(&noisy_rel), &mix.noisy)?;
        entries.push(CorpusEntry {
            clean: clean_rel.into(),
            noisy: noisy_rel.into(),
            duration_s: len as f64 / SAMPLE_RATE as f64,
            split,
            snr_db: Some(snr_db),
        });
    }

    let index = CorpusIndex::new(dir.to_path_buf(), entries);
    index.save()?;
    Ok(index)
}

/// Harmonic complex: fundamental in 80–300 Hz with slight vibrato,
/// harmonics decaying with frequency, syllabic amplitude modulation, and
/// short fades. Peak-normalized to 0.25.
fn synth_voice(len: usize, rng: &mut impl Rng) -> Waveform<f64> {
    let fs = SAMPLE_RATE as f64;
    let f0: f64 = rng.random_range(80.0..300.0);
    let n_harm = ((6000.0 / f0).floor() as usize).clamp(1, 14);
    let harmonics: Vec<(f64, f64)> = (1..=n_harm)
        .map(|k| {
            let amp = (k as f64).powf(-1.1) * rng.random_range(0.6..1.0);
            let phase = rng.random_range(0.0..2.0 * PI);
            (amp, phase)
        })
        .collect();
    let vib_depth = 0.012;
    let vib_rate = rng.random_range(4.0..6.0);
    let vib_phase = rng.random_range(0.0..2.0 * PI);
    let syl_rate = rng.random_range(1.8..4.5);
    let syl_phase = rng.random_range(0.0..2.0 * PI);

    let mut samples = vec![0.0f64; len];
    let mut phase_acc = 0.0f64;
    let fade = (0.02 * fs) as usize;
    for (n, s) in samples.iter_mut().enumerate() {
        let t = n as f64 / fs;
        let inst_f0 = f0 * (1.0 + vib_depth * (2.0 * PI * vib_rate * t + vib_phase).sin());
        phase_acc += 2.0 * PI * inst_f0 / fs;
        let mut v = 0.0;
        for (k, (amp, ph)) in harmonics.iter().enumerate() {
            v += amp * (phase_acc * (k + 1) as f64 + ph).sin();
        }
        let syl = 0.5 - 0.5 * (2.0 * PI * syl_rate * t + syl_phase).cos();
        let mut env = 0.2 + 0.8 * syl.powf(1.3);
        if n < fade {
            env *= 0.5 - 0.5 * (PI * n as f64 / fade as f64).cos();
        }
        if n + fade >= len {
            env *= 0.5 - 0.5 * (PI * (len - n) as f64 / fade as f64).cos();
        }
        *s = v * env;
    }

    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let s = 0.25 / peak;
        for v in &mut samples {
            *v *= s;
        }
    }
    Waveform::new(samples)
}

/// White, pink, or band-limited noise (selected by `kind % 3`), shaped in
/// the frequency domain and RMS-normalized to 0.1.
fn synth_noise(len: usize, kind: usize, rng: &mut impl Rng) -> Waveform<f64> {
    let mut samples: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();

    if kind != 0 {
        let mut planner = RealFftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(len);
        let ifft = planner.plan_fft_inverse(len);
        let mut spectrum = fft.make_output_vec();
        fft.process(&mut samples, &mut spectrum).expect("noise fft");

        let fs = SAMPLE_RATE as f64;
        let center: f64 = rng.random_range(400.0..5000.0);
        for (k, c) in spectrum.iter_mut().enumerate() {
            let f = k as f64 * fs / len as f64;
            let gain = match kind {
                1 => 1.0 / f.max(40.0).sqrt(), // pink: -3 dB/octave
                _ => {
                    let d = (f - center) / (0.35 * center);
                    (-d * d).exp() // smooth band-limited bump
                }
            };
            *c *= gain;
        }
        spectrum[0] *= 0.0;
        let mut shaped = ifft.make_output_vec();
        ifft.process(&mut spectrum, &mut shaped).expect("noise ifft");
        samples = shaped;
    }

    let rms = (samples.iter().map(|v| v * v).sum::<f64>() / len as f64).sqrt();
    if rms > 0.0 {
        let s = 0.1 / rms;
        for v in &mut samples {
            *v *= s;
        }
    }
    Waveform::new(samples)
}
