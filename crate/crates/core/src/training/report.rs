//! Per-epoch training log.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
    pub wall_time_s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The configured epoch budget ran out.
    EpochLimit,
    /// `stop_patience` epochs passed without the validation loss improving
    /// by more than `stop_min_delta`.
    EarlyStopped,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainReport {
    /// Validation loss of the freshly initialized model, before any update.
    pub initial_val_loss: f64,
    pub epochs: Vec<EpochRecord>,
    pub stop_reason: StopReason,
}

impl TrainReport {
    pub fn final_val_loss(&self) -> f64 {
        self.epochs
            .last()
            .map(|e| e.val_loss)
            .unwrap_or(self.initial_val_loss)
    }

    pub fn best_val_loss(&self) -> f64 {
        self.epochs
            .iter()
            .map(|e| e.val_loss)
            .fold(self.initial_val_loss, f64::min)
    }

    /// One JSON record per epoch, then a final stop record.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        writeln!(
            file,
            "{}",
            serde_json::json!({"event": "start", "initial_val_loss": self.initial_val_loss})
        )?;
        for rec in &self.epochs {
            writeln!(file, "{}", serde_json::to_string(rec)?)?;
        }
        writeln!(
            file,
            "{}",
            serde_json::json!({"event": "stop", "reason": self.stop_reason})
        )?;
        Ok(())
    }
}
