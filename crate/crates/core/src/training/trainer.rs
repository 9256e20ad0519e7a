//! Teacher and student training loops.
//!
//! Both trainers share one fit loop: seeded init, per-epoch shuffling,
//! fixed-length random crops (short utterances zero-padded with the loss
//! masked to real frames), averaged gradients per batch, Adam, a
//! reduce-on-plateau learning-rate schedule, and early stopping on the
//! validation loss. A teacher sees only its own band; the student draws a
//! fresh band uniformly at every optimizer step, and with distillation
//! enabled the matching frozen teacher's output joins the loss.

use std::time::Instant;

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{epoch_permutation, read_wav, CorpusIndex, Split};
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::network::{adam_step, AdamState, Checkpoint, ModelParams};
use crate::spectral::{stft, StftConfig};
use crate::subband::{extract, SubbandPartition};
use crate::training::loss::{distill_loss_masked, mse_loss, mse_loss_masked};
use crate::training::report::{EpochRecord, StopReason, TrainReport};

/// Hyperparameters for one training run. The defaults are the paper-scale
/// values; desk-scale runs typically shrink `batch_size` and `epochs`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
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
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.0002,
            batch_size: 600,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            lr_reduce_factor: 0.5,
            lr_patience: 3,
            stop_patience: 10,
            stop_min_delta: 1e-5,
            chunk_frames: 192,
            epochs: 100,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lr <= 0.0 {
            return Err(Error::invalid("lr must be positive"));
        }
        if !(0.0..1.0).contains(&self.lr_reduce_factor) || self.lr_reduce_factor == 0.0 {
            return Err(Error::invalid("lr_reduce_factor must be in (0, 1)"));
        }
        for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} must be in [0, 1)")));
            }
        }
        if self.lr_patience == 0 || self.stop_patience == 0 {
            return Err(Error::invalid("patience must be at least 1"));
        }
        if self.batch_size == 0 || self.chunk_frames == 0 || self.epochs == 0 {
            return Err(Error::invalid(
                "batch_size, chunk_frames and epochs must be at least 1",
            ));
        }
        Ok(())
    }
}

/// Frozen per-band teachers plus the weight of the guidance term.
#[derive(Clone, Debug)]
pub struct DistillConfig {
    pub alpha: f64,
    pub teacher_checkpoints: Vec<Checkpoint>,
}

impl DistillConfig {
    /// Loads `teacher_band{i}.ckpt` for every band of `part` from `dir`.
    pub fn load_from_dir(dir: &std::path::Path, alpha: f64, part: &SubbandPartition) -> Result<Self> {
        let mut teacher_checkpoints = Vec::with_capacity(part.n_bands());
        for band in 0..part.n_bands() {
            let path = dir.join(teacher_checkpoint_name(band));
            if !path.is_file() {
                return Err(Error::Checkpoint(format!(
                    "missing teacher checkpoint for band {band}: {}",
                    path.display()
                )));
            }
            teacher_checkpoints.push(Checkpoint::load(&path)?);
        }
        let cfg = DistillConfig {
            alpha,
            teacher_checkpoints,
        };
        cfg.validate(part)?;
        Ok(cfg)
    }

    pub fn validate(&self, part: &SubbandPartition) -> Result<()> {
        if self.alpha < 0.0 {
            return Err(Error::invalid("alpha must be nonnegative"));
        }
        if self.teacher_checkpoints.len() != part.n_bands() {
            return Err(Error::invalid(format!(
                "need {} teacher checkpoints, got {}",
                part.n_bands(),
                self.teacher_checkpoints.len()
            )));
        }
        for (band, ck) in self.teacher_checkpoints.iter().enumerate() {
            match ck.band {
                crate::network::BandSelector::Band(b) if b == band => {}
                other => {
                    return Err(Error::Checkpoint(format!(
                        "teacher at position {band} claims band {other:?}"
                    )))
                }
            }
            if ck.params.band_width() != part.band_width() {
                return Err(Error::Checkpoint(format!(
                    "teacher for band {band} has width {}, partition expects {}",
                    ck.params.band_width(),
                    part.band_width()
                )));
            }
        }
        Ok(())
    }

    /// Teachers are expected to be at least as large as the student; a
    /// smaller one is legal but worth flagging.
    pub fn capacity_warnings(&self, student_hidden: usize) -> Vec<String> {
        self.teacher_checkpoints
            .iter()
            .enumerate()
            .filter(|(_, ck)| ck.params.hidden() < student_hidden)
            .map(|(band, ck)| {
                format!(
                    "teacher for band {band} has hidden size {} < student {student_hidden}",
                    ck.params.hidden()
                )
            })
            .collect()
    }
}

pub fn teacher_checkpoint_name(band: usize) -> String {
    format!("teacher_band{band}.ckpt")
}

/// The student trainer's per-step band chooser: a seeded stream of uniform
/// draws over `0..n_bands`, one per optimizer step.
pub struct BandSampler {
    rng: ChaCha8Rng,
}

impl BandSampler {
    pub fn new(seed: u64) -> Self {
        BandSampler {
            rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, SALT_BAND)),
        }
    }

    pub fn next(&mut self, n_bands: usize) -> usize {
        self.rng.random_range(0..n_bands)
    }
}

/// Cached STFT magnitudes of one utterance.
#[derive(Clone, Debug)]
pub struct UtteranceSpectra {
    pub noisy_mag: Mat<f64>,
    pub clean_mag: Mat<f64>,
}

/// Reads and transforms every entry of a split.
pub fn load_spectra(
    index: &CorpusIndex,
    split: Split,
    stft_cfg: &StftConfig<f64>,
) -> Result<Vec<UtteranceSpectra>> {
    let entries = index.split(split);
    let mut out = Vec::with_capacity(entries.len());
    for e in entries {
        let noisy = read_wav(&index.resolve(&e.noisy))?;
        let clean = read_wav(&index.resolve(&e.clean))?;
        out.push(UtteranceSpectra {
            noisy_mag: stft(&noisy, stft_cfg)?.magnitude(),
            clean_mag: stft(&clean, stft_cfg)?.magnitude(),
        });
    }
    Ok(out)
}

/// Trains the specialist for `band_index` on (noisy band, clean band)
/// pairs with plain MSE.
pub fn train_teacher(
    index: &CorpusIndex,
    band_index: usize,
    part: &SubbandPartition,
    hidden: usize,
    stft_cfg: &StftConfig<f64>,
    cfg: &TrainConfig,
) -> Result<(Checkpoint, TrainReport)> {
    cfg.validate()?;
    if band_index >= part.n_bands() {
        return Err(Error::invalid(format!(
            "band index {band_index} out of range (0..{})",
            part.n_bands()
        )));
    }
    let (train, val) = split_train_val(index, stft_cfg, cfg.seed)?;
    let (params, report) = fit(
        &train,
        &val,
        part,
        hidden,
        cfg,
        Task::Teacher { band: band_index },
    )?;
    Ok((Checkpoint::teacher(band_index, params.convert()), report))
}

/// Trains the generalist over all bands, resampling the band uniformly at
/// every optimizer step. With `distill` present, the loss gains
/// `alpha * mse(student, teacher)` using the matching frozen teacher.
pub fn train_student(
    index: &CorpusIndex,
    part: &SubbandPartition,
    hidden: usize,
    stft_cfg: &StftConfig<f64>,
    cfg: &TrainConfig,
    distill: Option<&DistillConfig>,
) -> Result<(Checkpoint, TrainReport)> {
    cfg.validate()?;
    let teachers: Option<(f64, Vec<ModelParams<f64>>)> = match distill {
        Some(d) => {
            d.validate(part)?;
            Some((
                d.alpha,
                d.teacher_checkpoints.iter().map(|c| c.params_f64()).collect(),
            ))
        }
        None => None,
    };
    let (train, val) = split_train_val(index, stft_cfg, cfg.seed)?;
    let task = Task::Student {
        distill: teachers
            .as_ref()
            .map(|(alpha, params)| (*alpha, params.as_slice())),
    };
    let (params, report) = fit(&train, &val, part, hidden, cfg, task)?;
    Ok((Checkpoint::student(params.convert()), report))
}

/// Splits the train entries into train/validation spectra: a seeded 10%
/// (at least one utterance) is held out, except that a single-utterance
/// corpus validates on its one utterance.
fn split_train_val(
    index: &CorpusIndex,
    stft_cfg: &StftConfig<f64>,
    seed: u64,
) -> Result<(Vec<UtteranceSpectra>, Vec<UtteranceSpectra>)> {
    let all = load_spectra(index, Split::Train, stft_cfg)?;
    if all.is_empty() {
        return Err(Error::data("corpus has no training entries"));
    }
    if all.len() == 1 {
        let val = all.clone();
        return Ok((all, val));
    }
    let n_val = (all.len() / 10).max(1);
    let order = epoch_permutation(all.len(), derive_seed(seed, SALT_VAL_SPLIT), 0);
    let val_set: std::collections::BTreeSet<usize> = order[..n_val].iter().copied().collect();
    let mut train = Vec::with_capacity(all.len() - n_val);
    let mut val = Vec::with_capacity(n_val);
    for (i, u) in all.into_iter().enumerate() {
        if val_set.contains(&i) {
            val.push(u);
        } else {
            train.push(u);
        }
    }
    Ok((train, val))
}

enum Task<'a> {
    Teacher { band: usize },
    Student { distill: Option<(f64, &'a [ModelParams<f64>])> },
}

const SALT_INIT: u64 = 0x01;
const SALT_BAND: u64 = 0x02;
const SALT_SHUFFLE: u64 = 0x03;
const SALT_CROP: u64 = 0x04;
const SALT_VAL_SPLIT: u64 = 0x05;

/// splitmix64 of (seed, salt); keeps the independent RNG streams of one
/// run decorrelated without threading state between them.
fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fit(
    train: &[UtteranceSpectra],
    val: &[UtteranceSpectra],
    part: &SubbandPartition,
    hidden: usize,
    cfg: &TrainConfig,
    task: Task,
) -> Result<(ModelParams<f64>, TrainReport)> {
    let w = part.band_width();
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, SALT_INIT));
    let mut params = ModelParams::<f64>::init(w, hidden, &mut init_rng);
    let mut adam = AdamState::new(w, hidden);
    let mut band_sampler = BandSampler::new(cfg.seed);

    let mut lr = cfg.lr;
    let mut lr_stall = 0usize;
    let mut stop_stall = 0usize;

    let initial_val_loss = validation_loss(&params, val, part, &task)?;
    let mut best_val = initial_val_loss;
    let mut records = Vec::new();
    let mut stop_reason = StopReason::EpochLimit;

    for epoch in 0..cfg.epochs {
        let t0 = Instant::now();
        let order = epoch_permutation(
            train.len(),
            derive_seed(cfg.seed, SALT_SHUFFLE),
            epoch as u64,
        );
        let mut crop_rng =
            ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, SALT_CROP.wrapping_add(epoch as u64)));

        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;

        for batch in order.chunks(cfg.batch_size) {
            let band = match task {
                Task::Teacher { band } => band,
                Task::Student { .. } => band_sampler.next(part.n_bands()),
            };

            let mut grad_sum = ModelParams::<f64>::zeros(w, hidden);
            let mut batch_loss = 0.0;
            for &u in batch {
                let utt = &train[u];
                let (noisy, clean, valid) =
                    crop_band_chunk(utt, part, band, cfg.chunk_frames, &mut crop_rng)?;

                let (out, cache) = params.forward_cached(&noisy)?;
                let (loss, d_out) = match task {
                    Task::Student {
                        distill: Some((alpha, teachers)),
                    } => {
                        let teacher_out = teachers[band].forward(&noisy)?;
                        distill_loss_masked(&out, &clean, &teacher_out, alpha, valid)?
                    }
                    _ => mse_loss_masked(&out, &clean, valid)?,
                };
                if !loss.is_finite() {
                    return Err(Error::Diverged(format!("training loss is {loss}")));
                }
                batch_loss += loss;

                let g = params.backward_from_cache(&noisy, &cache, &d_out)?;
                for (acc, item) in grad_sum.flat_mut().into_iter().zip(g.flat()) {
                    for (a, b) in acc.iter_mut().zip(item) {
                        *a += *b;
                    }
                }
            }

            let inv = 1.0 / batch.len() as f64;
            for arr in grad_sum.flat_mut() {
                for v in arr {
                    *v *= inv;
                }
            }
            adam_step(
                &mut params,
                &grad_sum,
                &mut adam,
                lr,
                cfg.beta1,
                cfg.beta2,
                cfg.epsilon,
            )?;
            loss_sum += batch_loss;
            loss_count += batch.len();
        }

        let train_loss = loss_sum / loss_count.max(1) as f64;
        let val_loss = validation_loss(&params, val, part, &task)?;
        if !val_loss.is_finite() {
            return Err(Error::Diverged(format!("validation loss is {val_loss}")));
        }
        records.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            lr,
            wall_time_s: t0.elapsed().as_secs_f64(),
        });

        if best_val - val_loss > cfg.stop_min_delta {
            best_val = val_loss;
            lr_stall = 0;
            stop_stall = 0;
        } else {
            lr_stall += 1;
            stop_stall += 1;
            if lr_stall >= cfg.lr_patience {
                lr *= cfg.lr_reduce_factor;
                lr_stall = 0;
            }
            if stop_stall >= cfg.stop_patience {
                stop_reason = StopReason::EarlyStopped;
                break;
            }
        }
    }

    Ok((
        params,
        TrainReport {
            initial_val_loss,
            epochs: records,
            stop_reason,
        },
    ))
}

/// A `chunk_frames`-row crop of one utterance's band slice. Longer
/// utterances are cropped at a seeded random offset; shorter ones are
/// zero-padded, with the number of real frames returned for masking.
fn crop_band_chunk(
    utt: &UtteranceSpectra,
    part: &SubbandPartition,
    band: usize,
    chunk_frames: usize,
    rng: &mut impl Rng,
) -> Result<(Mat<f64>, Mat<f64>, usize)> {
    let frames = utt.noisy_mag.rows();
    let w = part.band_width();
    let range = part.band_range(band)?;

    if frames >= chunk_frames {
        let start = if frames > chunk_frames {
            rng.random_range(0..=frames - chunk_frames)
        } else {
            0
        };
        let noisy = Mat::from_fn(chunk_frames, w, |t, f| {
            utt.noisy_mag[(start + t, range.start + f)]
        });
        let clean = Mat::from_fn(chunk_frames, w, |t, f| {
            utt.clean_mag[(start + t, range.start + f)]
        });
        Ok((noisy, clean, chunk_frames))
    } else {
        let pick = |m: &Mat<f64>| {
            Mat::from_fn(chunk_frames, w, |t, f| {
                if t < frames {
                    m[(t, range.start + f)]
                } else {
                    0.0
                }
            })
        };
        Ok((pick(&utt.noisy_mag), pick(&utt.clean_mag), frames))
    }
}

/// Plain task MSE on the full-length validation utterances: the teacher's
/// own band for teachers, the mean over all bands for students.
fn validation_loss(
    params: &ModelParams<f64>,
    val: &[UtteranceSpectra],
    part: &SubbandPartition,
    task: &Task,
) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for utt in val {
        match task {
            Task::Teacher { band } => {
                sum += band_mse_of(params, utt, part, *band)?;
                count += 1;
            }
            Task::Student { .. } => {
                for band in 0..part.n_bands() {
                    sum += band_mse_of(params, utt, part, band)?;
                    count += 1;
                }
            }
        }
    }
    Ok(sum / count.max(1) as f64)
}

fn band_mse_of(
    params: &ModelParams<f64>,
    utt: &UtteranceSpectra,
    part: &SubbandPartition,
    band: usize,
) -> Result<f64> {
    let noisy = extract(&utt.noisy_mag, part, band)?.values;
    let clean = extract(&utt.clean_mag, part, band)?.values;
    let out = params.forward(&noisy)?;
    Ok(mse_loss(&out, &clean)?.0)
}

/// MSE of the identity mapping (output = noisy input) per band; the
/// floor any useful enhancer must beat.
pub fn identity_band_mse(
    val: &[UtteranceSpectra],
    part: &SubbandPartition,
    band: usize,
) -> Result<f64> {
    let mut sum = 0.0;
    for utt in val {
        let noisy = extract(&utt.noisy_mag, part, band)?.values;
        let clean = extract(&utt.clean_mag, part, band)?.values;
        sum += mse_loss(&noisy, &clean)?.0;
    }
    Ok(sum / val.len().max(1) as f64)
}
