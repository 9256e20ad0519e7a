//! Losses, training loops, and the enhancement pipeline.

mod enhance;
mod loss;
mod report;
mod trainer;

pub use enhance::{enhance, enhance_bypass, enhance_with_checkpoint};
pub use loss::{distill_loss, distill_loss_masked, mse_loss, mse_loss_masked};
pub use report::{EpochRecord, StopReason, TrainReport};
pub use trainer::{
    identity_band_mse, load_spectra, teacher_checkpoint_name, train_student, train_teacher,
    BandSampler, DistillConfig, TrainConfig, UtteranceSpectra,
};
