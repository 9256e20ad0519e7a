//! Run configuration: one JSON file, every field optional, defaults set to
//! the paper-scale hyperparameters. Command-line flags override file
//! values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sbse_core::error::{Error, Result};
use sbse_core::spectral::StftConfig;
use sbse_core::subband::SubbandPartition;
use sbse_core::training::TrainConfig;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub stft: StftSection,
    pub partition: PartitionSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub distill: DistillSection,
    pub paths: PathsSection,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            stft: StftSection::default(),
            partition: PartitionSection::default(),
            model: ModelSection::default(),
            train: TrainSection::default(),
            distill: DistillSection::default(),
            paths: PathsSection::default(),
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct StftSection {
    pub frame_len: usize,
    pub hop: usize,
}

impl Default for StftSection {
    fn default() -> Self {
        StftSection {
            frame_len: 320,
            hop: 160,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct PartitionSection {
    pub band_width: usize,
}

impl Default for PartitionSection {
    fn default() -> Self {
        PartitionSection { band_width: 40 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSection {
    pub hidden_size: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection { hidden_size: 256 }
    }
}

/// Mirrors [`TrainConfig`] minus the seed, which lives at the top level.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSection {
    pub lr: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub lr_reduce_factor: f64,
    pub lr_patience: usize,
    pub stop_patience: usize,
    pub stop_min_delta: f64,
    pub chunk_frames: usize,
    pub epochs: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            lr: t.lr,
            batch_size: t.batch_size,
            beta1: t.beta1,
            beta2: t.beta2,
            epsilon: t.epsilon,
            lr_reduce_factor: t.lr_reduce_factor,
            lr_patience: t.lr_patience,
            stop_patience: t.stop_patience,
            stop_min_delta: t.stop_min_delta,
            chunk_frames: t.chunk_frames,
            epochs: t.epochs,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct DistillSection {
    pub alpha: f64,
    pub teacher_dir: PathBuf,
}

impl Default for DistillSection {
    fn default() -> Self {
        DistillSection {
            alpha: 0.1,
            teacher_dir: PathBuf::from("checkpoints"),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsSection {
    pub corpus_dir: PathBuf,
    pub checkpoint_dir: PathBuf,
    pub report_dir: PathBuf,
}

impl Default for PathsSection {
    fn default() -> Self {
        PathsSection {
            corpus_dir: PathBuf::from("corpus"),
            checkpoint_dir: PathBuf::from("checkpoints"),
            report_dir: PathBuf::from("reports"),
        }
    }
}

impl RunConfig {
    /// Defaults when `path` is `None`, otherwise the parsed file with
    /// missing fields defaulted.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::data(format!("cannot read config {}: {e}", p.display())))?;
                let cfg: RunConfig = serde_json::from_str(&text)
                    .map_err(|e| Error::invalid(format!("bad config {}: {e}", p.display())))?;
                Ok(cfg)
            }
        }
    }

    pub fn stft_config(&self) -> Result<StftConfig<f64>> {
        if self.stft.hop * 2 != self.stft.frame_len {
            return Err(Error::invalid(format!(
                "hop must be frame_len/2 (50% overlap): got frame_len {} hop {}",
                self.stft.frame_len, self.stft.hop
            )));
        }
        StftConfig::hann(self.stft.frame_len)
    }

    pub fn partition(&self) -> Result<SubbandPartition> {
        let bins = self.stft.frame_len / 2 + 1;
        SubbandPartition::new(bins, self.partition.band_width)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.train.lr,
            batch_size: self.train.batch_size,
            beta1: self.train.beta1,
            beta2: self.train.beta2,
            epsilon: self.train.epsilon,
            lr_reduce_factor: self.train.lr_reduce_factor,
            lr_patience: self.train.lr_patience,
            stop_patience: self.train.stop_patience,
            stop_min_delta: self.train.stop_min_delta,
            chunk_frames: self.train.chunk_frames,
            epochs: self.train.epochs,
            seed: self.seed,
        }
    }
}
