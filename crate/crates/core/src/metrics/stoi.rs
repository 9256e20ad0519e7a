//! Short-time objective intelligibility.
//!
//! Faithful to the defining algorithm: both signals resampled to 10 kHz,
//! silent frames removed by the clean signal's 40 dB energy mask,
//! 256-sample Hann frames zero-padded to a 512-point FFT at 50% overlap,
//! fifteen one-third-octave bands from 150 Hz, 384 ms (30-frame) analysis
//! segments, per-segment energy normalization with the −15 dB SDR clip,
//! and the mean of the per-band per-segment correlation coefficients.

use num_complex::Complex;
use realfft::RealFftPlanner;

use crate::error::{Error, Result};
use crate::metrics::resample::resample;
use crate::spectral::Waveform;

const STOI_FS: usize = 10_000;
const FRAME: usize = 256;
const HOP: usize = 128;
const FFT_LEN: usize = 512;
const N_BANDS: usize = 15;
const LOWEST_CF_HZ: f64 = 150.0;
const SEG_FRAMES: usize = 30;
const DYN_RANGE_DB: f64 = 40.0;
const BETA_DB: f64 = -15.0;

/// Intelligibility score in [0, 1]; identical signals score 1.
pub fn stoi(clean: &Waveform<f64>, degraded: &Waveform<f64>) -> Result<f64> {
    let n = clean.len().min(degraded.len());
    // 30 frames at 10 kHz need (30-1)*128 + 256 samples, i.e. 384 ms.
    let min_input = (SEG_FRAMES - 1) * HOP + FRAME;
    let x10 = resample(&clean.samples()[..n], 5, 8);
    let y10 = resample(&degraded.samples()[..n], 5, 8);
    if x10.len() < min_input {
        return Err(Error::invalid(format!(
            "input too short for stoi: need at least 384 ms, got {} ms",
            n * 1000 / crate::SAMPLE_RATE as usize
        )));
    }

    let (x_act, y_act) = remove_silent_frames(&x10, &y10)?;

    let x_spec = stft_512(&x_act);
    let y_spec = stft_512(&y_act);
    let frames = x_spec.len().min(y_spec.len());
    if frames < SEG_FRAMES {
        return Err(Error::invalid(
            "input too short for stoi after silence removal",
        ));
    }

    let bands = third_octave_bands();
    let x_band = band_amplitudes(&x_spec[..frames], &bands);
    let y_band = band_amplitudes(&y_spec[..frames], &bands);

    let clip = 1.0 + 10f64.powf(-BETA_DB / 20.0);
    let mut sum = 0.0;
    let mut count = 0usize;
    for m in SEG_FRAMES - 1..frames {
        for j in 0..N_BANDS {
            let x_seg = &x_band[j][m + 1 - SEG_FRAMES..=m];
            let y_seg = &y_band[j][m + 1 - SEG_FRAMES..=m];

            let norm_x = l2(x_seg);
            let norm_y = l2(y_seg);
            let alpha = norm_x / (norm_y + f64::EPSILON);
            let y_prim: Vec<f64> = y_seg
                .iter()
                .zip(x_seg)
                .map(|(&y, &x)| (y * alpha).min(x * clip))
                .collect();

            if let Some(d) = correlation(x_seg, &y_prim) {
                sum += d;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::invalid("no usable stoi segments"));
    }
    Ok(sum / count as f64)
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Sample correlation coefficient; `None` when the clean segment has no
/// variance (nothing to correlate against), 0 when only the degraded one
/// is flat.
fn correlation(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut dot = 0.0;
    let mut nx = 0.0;
    let mut ny = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let da = a - mx;
        let db = b - my;
        dot += da * db;
        nx += da * da;
        ny += db * db;
    }
    if nx == 0.0 {
        return None;
    }
    if ny == 0.0 {
        return Some(0.0);
    }
    Some(dot / (nx.sqrt() * ny.sqrt()))
}

/// Hann window without the zero endpoints (the `hanning(N)` convention of
/// the reference implementation).
fn hanning(len: usize) -> Vec<f64> {
    (0..len)
        .map(|k| {
            let phase = 2.0 * std::f64::consts::PI * (k + 1) as f64 / (len + 1) as f64;
            0.5 - 0.5 * phase.cos()
        })
        .collect()
}

/// Drops frames whose clean-signal energy is more than 40 dB below the
/// loudest frame, and overlap-adds the survivors back into a pair of
/// shorter signals. The clean mask is applied to both signals.
fn remove_silent_frames(x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let w = hanning(FRAME);
    let n_frames = if x.len() < FRAME {
        0
    } else {
        (x.len() - FRAME) / HOP + 1
    };
    if n_frames == 0 {
        return Err(Error::invalid("input too short for stoi"));
    }

    let energies_db: Vec<f64> = (0..n_frames)
        .map(|m| {
            let start = m * HOP;
            let e: f64 = (0..FRAME)
                .map(|k| {
                    let v = w[k] * x[start + k];
                    v * v
                })
                .sum();
            10.0 * e.log10() // 20·log10(norm) == 10·log10(energy)
        })
        .collect();
    let max_db = energies_db.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max_db.is_finite() {
        return Err(Error::invalid("clean signal is silent"));
    }
    let keep: Vec<usize> = (0..n_frames)
        .filter(|&m| energies_db[m] > max_db - DYN_RANGE_DB)
        .collect();
    if keep.is_empty() {
        return Err(Error::invalid("clean signal is silent"));
    }

    let out_len = (keep.len() - 1) * HOP + FRAME;
    let mut xs = vec![0.0; out_len];
    let mut ys = vec![0.0; out_len];
    for (slot, &m) in keep.iter().enumerate() {
        let src = m * HOP;
        let dst = slot * HOP;
        for k in 0..FRAME {
            xs[dst + k] += w[k] * x[src + k];
            ys[dst + k] += w[k] * y[src + k];
        }
    }
    Ok((xs, ys))
}

/// 256-sample Hann frames zero-padded to a 512-point FFT, hop 128.
fn stft_512(x: &[f64]) -> Vec<Vec<Complex<f64>>> {
    let w = hanning(FRAME);
    let n_frames = if x.len() < FRAME {
        0
    } else {
        (x.len() - FRAME) / HOP + 1
    };
    let mut planner = RealFftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(FFT_LEN);
    let mut buf = fft.make_input_vec();
    let mut out = fft.make_output_vec();

    let mut spec = Vec::with_capacity(n_frames);
    for m in 0..n_frames {
        let start = m * HOP;
        buf.fill(0.0);
        for k in 0..FRAME {
            buf[k] = w[k] * x[start + k];
        }
        fft.process(&mut buf, &mut out).expect("stoi fft");
        spec.push(out.clone());
    }
    spec
}

/// Half-open FFT-bin ranges of the 15 one-third-octave bands, edges
/// snapped to the nearest bin.
fn third_octave_bands() -> Vec<(usize, usize)> {
    let bin_hz = STOI_FS as f64 / FFT_LEN as f64;
    let nearest_bin = |f: f64| -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for b in 0..=FFT_LEN / 2 {
            let d = (b as f64 * bin_hz - f).abs();
            if d < best_d {
                best_d = d;
                best = b;
            }
        }
        best
    };
    (0..N_BANDS)
        .map(|j| {
            let cf = LOWEST_CF_HZ * 2f64.powf(j as f64 / 3.0);
            let lo = nearest_bin(cf * 2f64.powf(-1.0 / 6.0));
            let hi = nearest_bin(cf * 2f64.powf(1.0 / 6.0));
            (lo, hi)
        })
        .collect()
}

/// Per-band per-frame amplitudes: sqrt of the summed bin energies.
fn band_amplitudes(spec: &[Vec<Complex<f64>>], bands: &[(usize, usize)]) -> Vec<Vec<f64>> {
    bands
        .iter()
        .map(|&(lo, hi)| {
            spec.iter()
                .map(|frame| {
                    frame[lo..hi]
                        .iter()
                        .map(|c| c.norm_sqr())
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
        .collect()
}
