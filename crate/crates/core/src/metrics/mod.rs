//! Objective evaluation: STOI, SI-SDR, segmental SNR, and per-band
//! spectral MSE, plus the per-utterance report with CSV/JSON writers.
//!
//! STOI is kept in [0, 1] internally; multiplying by 100 for display is
//! the reporting layer's business.

mod resample;
mod sisdr;
mod stoi;

pub use resample::resample;
pub use sisdr::{seg_snr, si_sdr, SI_SDR_CAP_DB};
pub use stoi::stoi;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::spectral::{stft, StftConfig, Waveform};
use crate::subband::SubbandPartition;

/// Per-band mean squared magnitude difference over each band's T×w bins.
pub fn band_mse(
    clean_mag: &Mat<f64>,
    enhanced_mag: &Mat<f64>,
    part: &SubbandPartition,
) -> Result<Vec<f64>> {
    if !clean_mag.same_shape(enhanced_mag) {
        return Err(Error::shape(format!(
            "magnitude planes are {}x{} vs {}x{}",
            clean_mag.rows(),
            clean_mag.cols(),
            enhanced_mag.rows(),
            enhanced_mag.cols()
        )));
    }
    if clean_mag.cols() != part.total_bins() {
        return Err(Error::shape(format!(
            "planes have {} bins, partition expects {}",
            clean_mag.cols(),
            part.total_bins()
        )));
    }
    let mut out = Vec::with_capacity(part.n_bands());
    for band in 0..part.n_bands() {
        let range = part.band_range(band)?;
        let mut sum = 0.0;
        for t in 0..clean_mag.rows() {
            for f in range.clone() {
                let d = clean_mag[(t, f)] - enhanced_mag[(t, f)];
                sum += d * d;
            }
        }
        out.push(sum / (clean_mag.rows() * part.band_width()) as f64);
    }
    Ok(out)
}

/// Everything measured for one utterance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UtteranceMetrics {
    pub name: String,
    pub stoi: f64,
    pub si_sdr_db: f64,
    pub seg_snr_db: f64,
    pub band_mse: Vec<f64>,
    /// Externally computed PESQ, merged in when the caller has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pesq: Option<f64>,
}

/// Per-utterance rows plus their arithmetic mean.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricReport {
    pub utterances: Vec<UtteranceMetrics>,
    pub mean: UtteranceMetrics,
}

impl MetricReport {
    pub fn from_utterances(utterances: Vec<UtteranceMetrics>) -> Result<Self> {
        if utterances.is_empty() {
            return Err(Error::invalid("no utterances to report"));
        }
        let n = utterances.len() as f64;
        let n_bands = utterances[0].band_mse.len();
        let mut mean = UtteranceMetrics {
            name: "mean".into(),
            stoi: 0.0,
            si_sdr_db: 0.0,
            seg_snr_db: 0.0,
            band_mse: vec![0.0; n_bands],
            pesq: None,
        };
        let mut pesq_sum = 0.0;
        let mut pesq_n = 0usize;
        for u in &utterances {
            mean.stoi += u.stoi / n;
            mean.si_sdr_db += u.si_sdr_db / n;
            mean.seg_snr_db += u.seg_snr_db / n;
            for (acc, v) in mean.band_mse.iter_mut().zip(&u.band_mse) {
                *acc += v / n;
            }
            if let Some(p) = u.pesq {
                pesq_sum += p;
                pesq_n += 1;
            }
        }
        if pesq_n > 0 {
            mean.pesq = Some(pesq_sum / pesq_n as f64);
        }
        Ok(MetricReport { utterances, mean })
    }

    /// One row per utterance plus the final mean row.
    pub fn to_csv(&self) -> String {
        let n_bands = self.mean.band_mse.len();
        let mut s = String::from("name,stoi,si_sdr_db,seg_snr_db");
        for b in 0..n_bands {
            s.push_str(&format!(",band_mse_{b}"));
        }
        s.push_str(",pesq\n");
        for u in self.utterances.iter().chain(std::iter::once(&self.mean)) {
            s.push_str(&format!(
                "{},{:.6},{:.6},{:.6}",
                u.name, u.stoi, u.si_sdr_db, u.seg_snr_db
            ));
            for v in &u.band_mse {
                s.push_str(&format!(",{v:.8}"));
            }
            match u.pesq {
                Some(p) => s.push_str(&format!(",{p:.4}\n")),
                None => s.push_str(",\n"),
            }
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Runs every metric for one clean/degraded pair.
pub fn evaluate_pair(
    name: &str,
    clean: &Waveform<f64>,
    degraded: &Waveform<f64>,
    part: &SubbandPartition,
    stft_cfg: &StftConfig<f64>,
) -> Result<UtteranceMetrics> {
    let n = clean.len().min(degraded.len());
    let clean_cut = Waveform::new(clean.samples()[..n].to_vec());
    let deg_cut = Waveform::new(degraded.samples()[..n].to_vec());
    let clean_mag = stft(&clean_cut, stft_cfg)?.magnitude();
    let deg_mag = stft(&deg_cut, stft_cfg)?.magnitude();
    Ok(UtteranceMetrics {
        name: name.to_string(),
        stoi: stoi(&clean_cut, &deg_cut)?,
        si_sdr_db: si_sdr(&clean_cut, &deg_cut)?,
        seg_snr_db: seg_snr(&clean_cut, &deg_cut)?,
        band_mse: band_mse(&clean_mag, &deg_mag, part)?,
        pesq: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_mse_trivial_cases() {
        let part = SubbandPartition::new(161, 40).unwrap();
        let a = Mat::from_fn(5, 161, |t, f| (t * f) as f64 * 0.01);
        assert!(band_mse(&a, &a, &part).unwrap().iter().all(|&v| v == 0.0));

        let b = a.map(|v| v + 0.1);
        for v in band_mse(&a, &b, &part).unwrap() {
            assert!((v - 0.01).abs() < 1e-12);
        }

        let wrong = Mat::<f64>::zeros(5, 160);
        assert!(band_mse(&a, &wrong, &part).is_err());
    }

    #[test]
    fn band_mse_is_consistent_with_covered_mse() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let part = SubbandPartition::new(161, 40).unwrap();
        let a = Mat::from_fn(6, 161, |_, _| rng.random_range(0.0..2.0));
        let b = Mat::from_fn(6, 161, |_, _| rng.random_range(0.0..2.0));
        let per_band = band_mse(&a, &b, &part).unwrap();

        // Weighted by bin counts, the band values recombine into the MSE
        // over all covered bins.
        let covered: f64 = per_band.iter().sum::<f64>() * (6 * 40) as f64 / (6 * 160) as f64;
        let mut direct = 0.0;
        for t in 0..6 {
            for f in 0..160 {
                let d = a[(t, f)] - b[(t, f)];
                direct += d * d;
            }
        }
        direct /= (6 * 160) as f64;
        assert!((covered - direct).abs() < 1e-12);
    }

    #[test]
    fn report_mean_and_csv_shape() {
        let rows = vec![
            UtteranceMetrics {
                name: "a".into(),
                stoi: 0.8,
                si_sdr_db: 10.0,
                seg_snr_db: 5.0,
                band_mse: vec![0.1, 0.2],
                pesq: Some(2.0),
            },
            UtteranceMetrics {
                name: "b".into(),
                stoi: 0.6,
                si_sdr_db: 6.0,
                seg_snr_db: 3.0,
                band_mse: vec![0.3, 0.4],
                pesq: None,
            },
        ];
        let report = MetricReport::from_utterances(rows).unwrap();
        assert!((report.mean.stoi - 0.7).abs() < 1e-12);
        assert!((report.mean.si_sdr_db - 8.0).abs() < 1e-12);
        assert!((report.mean.band_mse[1] - 0.3).abs() < 1e-12);
        assert_eq!(report.mean.pesq, Some(2.0));

        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4); // header + 2 rows + mean
        assert!(lines[0].starts_with("name,stoi,si_sdr_db,seg_snr_db,band_mse_0,band_mse_1,pesq"));
        assert!(lines[3].starts_with("mean,"));
    }
}
