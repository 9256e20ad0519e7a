//! Forward and inverse STFT with magnitude and phase planes.
//!
//! Analysis uses a periodic Hann window at 50% overlap; with that pairing
//! the shifted windows sum to a constant, so the weighted overlap-add
//! inverse below reconstructs the interior of a signal exactly (up to
//! floating point). Frames are taken without centering; a tail shorter
//! than one frame is dropped.

use num_complex::Complex;
use realfft::RealFftPlanner;

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::scalar::Scalar;
use crate::SAMPLE_RATE;

/// Mono 16 kHz time-domain signal.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform<T> {
    samples: Vec<T>,
    sample_rate: u32,
}

impl<T: Scalar> Waveform<T> {
    pub fn new(samples: Vec<T>) -> Self {
        Waveform {
            samples,
            sample_rate: SAMPLE_RATE,
        }
    }

    #[inline]
    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    #[inline]
    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    /// Mean power of the signal.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let sum: f64 = self
            .samples
            .iter()
            .map(|s| {
                let v = s.to_f64_lossy();
                v * v
            })
            .sum();
        sum / self.samples.len() as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate != SAMPLE_RATE {
            return Err(Error::invalid(format!(
                "expected sample rate {} Hz, found {} Hz",
                SAMPLE_RATE, self.sample_rate
            )));
        }
        if !self.samples.iter().all(|s| s.is_finite()) {
            return Err(Error::invalid("waveform contains nonfinite samples"));
        }
        Ok(())
    }
}

/// STFT analysis parameters: frame length, hop, and the analysis window.
#[derive(Clone, Debug)]
pub struct StftConfig<T> {
    frame_len: usize,
    hop: usize,
    window: Vec<T>,
}

impl<T: Scalar> StftConfig<T> {
    /// Periodic Hann window of `frame_len` samples at 50% overlap.
    pub fn hann(frame_len: usize) -> Result<Self> {
        if frame_len < 2 || !frame_len.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "frame length must be even and >= 2, got {frame_len}"
            )));
        }
        let window = (0..frame_len)
            .map(|k| {
                let phase = 2.0 * std::f64::consts::PI * k as f64 / frame_len as f64;
                T::of(0.5 - 0.5 * phase.cos())
            })
            .collect();
        Ok(StftConfig {
            frame_len,
            hop: frame_len / 2,
            window,
        })
    }

    /// The paper-scale configuration: 320-sample frames, 160-sample hop,
    /// 161 one-sided bins.
    pub fn default_320() -> Self {
        StftConfig::hann(320).expect("320 is a valid frame length")
    }

    #[inline]
    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    #[inline]
    pub fn hop(&self) -> usize {
        self.hop
    }

    #[inline]
    pub fn window(&self) -> &[T] {
        &self.window
    }

    /// Number of one-sided spectrum bins, `frame_len / 2 + 1`.
    #[inline]
    pub fn bins(&self) -> usize {
        self.frame_len / 2 + 1
    }

    /// Frames a signal of `len` samples yields; tail samples are dropped.
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.frame_len {
            0
        } else {
            (len - self.frame_len) / self.hop + 1
        }
    }

    /// Samples produced when synthesizing `frames` frames.
    pub fn output_len(&self, frames: usize) -> usize {
        if frames == 0 {
            0
        } else {
            (frames - 1) * self.hop + self.frame_len
        }
    }
}

/// Complex T×F short-time spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram<T> {
    frames: usize,
    bins: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> Spectrogram<T> {
    pub fn zeros(frames: usize, bins: usize) -> Self {
        Spectrogram {
            frames,
            bins,
            data: vec![Complex::new(T::zero(), T::zero()); frames * bins],
        }
    }

    #[inline]
    pub fn frames(&self) -> usize {
        self.frames
    }

    #[inline]
    pub fn bins(&self) -> usize {
        self.bins
    }

    #[inline]
    pub fn row(&self, t: usize) -> &[Complex<T>] {
        &self.data[t * self.bins..(t + 1) * self.bins]
    }

    #[inline]
    pub fn row_mut(&mut self, t: usize) -> &mut [Complex<T>] {
        &mut self.data[t * self.bins..(t + 1) * self.bins]
    }

    /// Elementwise magnitudes; nonnegative by construction.
    pub fn magnitude(&self) -> Mat<T> {
        Mat::from_fn(self.frames, self.bins, |t, f| {
            self.data[t * self.bins + f].norm()
        })
    }

    /// Elementwise phase angles in radians.
    pub fn phase(&self) -> Mat<T> {
        Mat::from_fn(self.frames, self.bins, |t, f| {
            let c = self.data[t * self.bins + f];
            c.im.atan2(c.re)
        })
    }

    /// Builds `magnitude * exp(i * phase)` from matching planes.
    pub fn from_polar(magnitude: &Mat<T>, phase: &Mat<T>) -> Result<Self> {
        if !magnitude.same_shape(phase) {
            return Err(Error::shape(format!(
                "magnitude is {}x{} but phase is {}x{}",
                magnitude.rows(),
                magnitude.cols(),
                phase.rows(),
                phase.cols()
            )));
        }
        let frames = magnitude.rows();
        let bins = magnitude.cols();
        let mut data = Vec::with_capacity(frames * bins);
        for t in 0..frames {
            for f in 0..bins {
                let m = magnitude[(t, f)];
                let p = phase[(t, f)];
                data.push(Complex::new(m * p.cos(), m * p.sin()));
            }
        }
        Ok(Spectrogram { frames, bins, data })
    }
}

/// Short-time Fourier transform of `wave` under `cfg`.
pub fn stft<T: Scalar>(wave: &Waveform<T>, cfg: &StftConfig<T>) -> Result<Spectrogram<T>> {
    let samples = wave.samples();
    if samples.len() < cfg.frame_len() {
        return Err(Error::invalid(format!(
            "input too short: {} samples, need at least {}",
            samples.len(),
            cfg.frame_len()
        )));
    }
    let frames = cfg.frame_count(samples.len());
    let bins = cfg.bins();

    let mut planner = RealFftPlanner::<T>::new();
    let fft = planner.plan_fft_forward(cfg.frame_len());
    let mut buf = fft.make_input_vec();
    let mut out = fft.make_output_vec();

    let mut spec = Spectrogram::zeros(frames, bins);
    for m in 0..frames {
        let start = m * cfg.hop();
        for (k, b) in buf.iter_mut().enumerate() {
            *b = samples[start + k] * cfg.window()[k];
        }
        fft.process(&mut buf, &mut out)
            .map_err(|e| Error::invalid(format!("fft failed: {e}")))?;
        spec.row_mut(m).copy_from_slice(&out);
    }
    Ok(spec)
}

/// Weighted overlap-add inverse STFT.
///
/// Each frame is inverted, re-windowed with the analysis window, and
/// accumulated; the result is normalized by the summed squared window at
/// every sample. On the leading and trailing half-frame only one window
/// overlaps and that sum decays to zero, which would let a *modified*
/// spectrogram (the enhancement case) blow up there, so the denominator is
/// floored at its interior minimum: interior samples divide by the exact
/// window sum, edge samples taper instead of exploding.
pub fn istft<T: Scalar>(spec: &Spectrogram<T>, cfg: &StftConfig<T>) -> Result<Waveform<T>> {
    if spec.bins() != cfg.bins() {
        return Err(Error::shape(format!(
            "spectrogram has {} bins but config expects {}",
            spec.bins(),
            cfg.bins()
        )));
    }
    if spec.frames() == 0 {
        return Ok(Waveform::new(Vec::new()));
    }

    let frame_len = cfg.frame_len();
    let n = spec.frames();
    let out_len = cfg.output_len(n);

    let mut planner = RealFftPlanner::<T>::new();
    let ifft = planner.plan_fft_inverse(frame_len);
    let mut spectrum = ifft.make_input_vec();
    let mut frame = ifft.make_output_vec();

    let inv_n = T::one() / T::of(frame_len as f64);
    let mut acc = vec![T::zero(); out_len];
    let mut wsum = vec![T::zero(); out_len];

    for m in 0..n {
        spectrum.copy_from_slice(spec.row(m));
        // Bins 0 and N/2 of a real signal's spectrum are purely real;
        // clear any rounding residue before the c2r transform.
        spectrum[0].im = T::zero();
        spectrum[frame_len / 2].im = T::zero();
        ifft.process(&mut spectrum, &mut frame)
            .map_err(|e| Error::invalid(format!("inverse fft failed: {e}")))?;

        let start = m * cfg.hop();
        for k in 0..frame_len {
            let w = cfg.window()[k];
            acc[start + k] += frame[k] * inv_n * w;
            wsum[start + k] += w * w;
        }
    }

    // Keeps the half-frame edges bounded: where the summed squared window
    // falls under (0.05·w_max)² the division would amplify whatever a
    // modified spectrogram left there, so those few samples taper instead.
    let w_max = cfg
        .window()
        .iter()
        .fold(T::zero(), |m, &v| if v > m { v } else { m });
    let floor = T::of(0.0025) * w_max * w_max;
    let samples = acc
        .into_iter()
        .zip(wsum)
        .map(|(a, w)| a / if w > floor { w } else { floor })
        .collect();
    Ok(Waveform::new(samples))
}

/// Synthesizes the waveform of `magnitude * exp(i * phase)`.
pub fn recombine<T: Scalar>(
    magnitude: &Mat<T>,
    phase: &Mat<T>,
    cfg: &StftConfig<T>,
) -> Result<Waveform<T>> {
    let spec = Spectrogram::from_polar(magnitude, phase)?;
    istft(&spec, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngExt;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_wave(len: usize, seed: u64) -> Waveform<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Waveform::new((0..len).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    /// Relative L2 error between the interior samples of two signals,
    /// skipping one frame length at each end.
    fn interior_rel_l2(a: &[f64], b: &[f64], frame_len: usize) -> f64 {
        let lo = frame_len;
        let hi = a.len().min(b.len()) - frame_len;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in lo..hi {
            let d = a[i] - b[i];
            num += d * d;
            den += a[i] * a[i];
        }
        (num / den).sqrt()
    }

    #[test]
    fn window_is_periodic_hann_and_cola() {
        let cfg = StftConfig::<f64>::default_320();
        assert_eq!(cfg.frame_len(), 320);
        assert_eq!(cfg.hop(), 160);
        assert_eq!(cfg.bins(), 161);
        assert_eq!(cfg.window()[0], 0.0);
        for &w in cfg.window() {
            assert!((0.0..=1.0).contains(&w));
        }
        // Shifted copies at 50% overlap sum to 1 everywhere.
        for k in 0..160 {
            let s = cfg.window()[k] + cfg.window()[k + 160];
            assert!((s - 1.0).abs() < 1e-12, "cola violated at {k}: {s}");
        }
    }

    #[test]
    fn zero_input_gives_zero_spectrogram() {
        let cfg = StftConfig::<f64>::default_320();
        let wave = Waveform::new(vec![0.0; 1600]);
        let spec = stft(&wave, &cfg).unwrap();
        assert_eq!(spec.frames(), 9);
        assert_eq!(spec.bins(), 161);
        assert!(spec.magnitude().data().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn short_input_is_an_error() {
        let cfg = StftConfig::<f64>::default_320();
        let wave = Waveform::new(vec![0.0; 319]);
        let err = stft(&wave, &cfg).unwrap_err();
        assert!(err.to_string().contains("input too short"));
    }

    #[test]
    fn bin_centered_sinusoid_peaks_at_its_bin() {
        // 2500 Hz = bin 50 of a 320-point transform at 16 kHz. The Hann
        // kernel spreads energy over one neighboring bin on each side, so
        // the peak stays at bin 50 with magnitude N/4.
        let cfg = StftConfig::<f64>::default_320();
        let wave = Waveform::new(
            (0..3200)
                .map(|n| (2.0 * std::f64::consts::PI * 50.0 * n as f64 / 320.0).sin())
                .collect(),
        );
        let mag = stft(&wave, &cfg).unwrap().magnitude();
        for t in 0..mag.rows() {
            let row = mag.row(t);
            let argmax = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(argmax, 50, "frame {t}");
            assert!((row[50] - 80.0).abs() < 1e-9, "frame {t}: {}", row[50]);
        }
    }

    #[test]
    fn round_trip_reconstructs_interior() {
        let cfg = StftConfig::<f64>::default_320();
        for seed in 0..5 {
            let wave = random_wave(16_000, seed);
            let rec = istft(&stft(&wave, &cfg).unwrap(), &cfg).unwrap();
            let err = interior_rel_l2(wave.samples(), rec.samples(), cfg.frame_len());
            assert!(err < 1e-6, "seed {seed}: relative error {err}");
        }
    }

    #[test]
    fn zero_spectrogram_gives_silence() {
        let cfg = StftConfig::<f64>::default_320();
        let wave = istft(&Spectrogram::zeros(9, 161), &cfg).unwrap();
        assert_eq!(wave.len(), 8 * 160 + 320);
        assert!(wave.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn istft_output_length_matches_contract() {
        let cfg = StftConfig::<f64>::default_320();
        let spec = stft(&random_wave(4321, 7), &cfg).unwrap();
        let wave = istft(&spec, &cfg).unwrap();
        assert_eq!(wave.len(), (spec.frames() - 1) * 160 + 320);
    }

    #[test]
    fn recombine_polar_identity() {
        let cfg = StftConfig::<f64>::default_320();
        let wave = random_wave(8000, 11);
        let spec = stft(&wave, &cfg).unwrap();
        let direct = istft(&spec, &cfg).unwrap();
        let polar = recombine(&spec.magnitude(), &spec.phase(), &cfg).unwrap();
        let err = interior_rel_l2(direct.samples(), polar.samples(), cfg.frame_len());
        assert!(err < 1e-9, "relative error {err}");
    }

    #[test]
    fn recombine_zero_magnitude_is_silence() {
        let cfg = StftConfig::<f64>::default_320();
        let phase = Mat::from_fn(9, 161, |t, f| (t as f64 - f as f64) * 0.1);
        let mag = Mat::zeros(9, 161);
        let wave = recombine(&mag, &phase, &cfg).unwrap();
        assert!(wave.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn recombine_shape_mismatch_is_an_error() {
        let cfg = StftConfig::<f64>::default_320();
        let mag = Mat::zeros(9, 161);
        let phase = Mat::zeros(8, 161);
        assert!(recombine(&mag, &phase, &cfg).is_err());
    }

    #[test]
    fn halved_magnitude_halves_interior_norm() {
        let cfg = StftConfig::<f64>::default_320();
        let wave = random_wave(16_000, 3);
        let spec = stft(&wave, &cfg).unwrap();
        let full = recombine(&spec.magnitude(), &spec.phase(), &cfg).unwrap();
        let half = recombine(&spec.magnitude().map(|m| 0.5 * m), &spec.phase(), &cfg).unwrap();
        let lo = cfg.frame_len();
        let hi = full.len() - cfg.frame_len();
        let norm = |s: &[f64]| s[lo..hi].iter().map(|v| v * v).sum::<f64>().sqrt();
        let ratio = norm(half.samples()) / norm(full.samples());
        assert!((ratio - 0.5).abs() < 1e-5, "ratio {ratio}");
    }

    #[test]
    fn stft_is_linear_in_the_input() {
        // Scaling by a power of two commutes with every FFT butterfly, so
        // the spectrogram scales bit-exactly.
        let cfg = StftConfig::<f64>::default_320();
        let wave = random_wave(3200, 21);
        let scaled = Waveform::new(wave.samples().iter().map(|&s| 2.0 * s).collect());
        let a = stft(&wave, &cfg).unwrap();
        let b = stft(&scaled, &cfg).unwrap();
        for t in 0..a.frames() {
            for (x, y) in a.row(t).iter().zip(b.row(t)) {
                assert_eq!(x.re * 2.0, y.re);
                assert_eq!(x.im * 2.0, y.im);
            }
        }
    }

    #[test]
    fn magnitude_is_nonnegative() {
        let cfg = StftConfig::<f64>::default_320();
        let mag = stft(&random_wave(5000, 17), &cfg).unwrap().magnitude();
        assert!(mag.data().iter().all(|&m| m >= 0.0));
    }
}
