//! Cross-module behavior: training contracts, checkpointing, schedule and
//! early-stopping semantics, and the assembled enhancement pipeline, all
//! on miniature corpora.

use sbse_core::data::{generate_toy_corpus, mix_at_snr, read_wav, CorpusEntry, CorpusIndex, Split};
use sbse_core::mat::Mat;
use sbse_core::network::{Checkpoint, ModelParams};
use sbse_core::spectral::{stft, StftConfig, Waveform};
use sbse_core::subband::{assemble, extract, SubbandPartition};
use sbse_core::training::{
    identity_band_mse, load_spectra, train_student, train_teacher, BandSampler, DistillConfig,
    StopReason, TrainConfig,
};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny_cfg(seed: u64, epochs: usize) -> TrainConfig {
    TrainConfig {
        lr: 1e-3,
        batch_size: 4,
        chunk_frames: 48,
        epochs,
        seed,
        ..TrainConfig::default()
    }
}

fn toy_setup(dir: &std::path::Path, count: usize) -> (CorpusIndex, StftConfig<f64>, SubbandPartition) {
    let index = generate_toy_corpus(dir, 11, count, 0.5).unwrap();
    let cfg = StftConfig::hann(80).unwrap();
    let part = SubbandPartition::new(41, 10).unwrap();
    (index, cfg, part)
}

#[test]
fn teacher_training_beats_its_starting_point() {
    let dir = tempfile::tempdir().unwrap();
    let (index, stft_cfg, part) = toy_setup(dir.path(), 12);
    let (_, report) = train_teacher(&index, 0, &part, 8, &stft_cfg, &tiny_cfg(3, 3)).unwrap();
    assert!(
        report.final_val_loss() < report.initial_val_loss,
        "{} !< {}",
        report.final_val_loss(),
        report.initial_val_loss
    );
}

#[test]
fn teacher_on_clean_equals_noisy_corpus_converges_from_epoch_one() {
    // A one-utterance corpus where noisy == clean: the task is the
    // identity map, and one epoch of training must already beat the
    // randomly initialized model.
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::create_dir_all(root.join("train")).unwrap();
    let clean = {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        Waveform::new(
            (0..8000)
                .map(|n| {
                    0.3 * (std::f64::consts::TAU * 220.0 * n as f64 / 16000.0).sin()
                        + 0.05 * rng.random_range(-1.0..1.0)
                })
                .collect(),
        )
    };
    sbse_core::data::write_wav(&root.join("train/u.wav"), &clean).unwrap();
    let index = CorpusIndex::new(
        root.to_path_buf(),
        vec![CorpusEntry {
            clean: "train/u.wav".into(),
            noisy: "train/u.wav".into(),
            duration_s: 0.5,
            split: Split::Train,
            snr_db: None,
        }],
    );
    let stft_cfg = StftConfig::hann(80).unwrap();
    let part = SubbandPartition::new(41, 10).unwrap();
    let (_, report) = train_teacher(&index, 1, &part, 8, &stft_cfg, &tiny_cfg(7, 1)).unwrap();
    assert_eq!(report.epochs.len(), 1);
    assert!(report.epochs[0].val_loss < report.initial_val_loss);
}

#[test]
fn trained_teacher_beats_identity_on_toy_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let (index, stft_cfg, part) = toy_setup(dir.path(), 40);
    let cfg = TrainConfig {
        lr: 2e-3,
        batch_size: 8,
        chunk_frames: 96,
        epochs: 12,
        seed: 2,
        ..TrainConfig::default()
    };
    let (ck, _) = train_teacher(&index, 2, &part, 16, &stft_cfg, &cfg).unwrap();

    let test = load_spectra(&index, Split::Test, &stft_cfg).unwrap();
    let identity = identity_band_mse(&test, &part, 2).unwrap();
    let model = ck.params_f64();
    let mut trained = 0.0;
    for utt in &test {
        let noisy = extract(&utt.noisy_mag, &part, 2).unwrap().values;
        let clean = extract(&utt.clean_mag, &part, 2).unwrap().values;
        let out = model.forward(&noisy).unwrap();
        trained += sbse_core::training::mse_loss(&out, &clean).unwrap().0;
    }
    trained /= test.len() as f64;
    assert!(
        trained < identity,
        "trained {trained} should beat identity {identity}"
    );
}

#[test]
fn same_seed_gives_bitwise_identical_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let (index, stft_cfg, part) = toy_setup(dir.path(), 10);
    let cfg = tiny_cfg(9, 2);
    let out = dir.path();
    for (band, name) in [(0usize, "a.ckpt"), (0, "b.ckpt")] {
        let (ck, _) = train_teacher(&index, band, &part, 6, &stft_cfg, &cfg).unwrap();
        ck.save(&out.join(name)).unwrap();
    }
    assert_eq!(
        std::fs::read(out.join("a.ckpt")).unwrap(),
        std::fs::read(out.join("b.ckpt")).unwrap()
    );
}

#[test]
fn student_training_leaves_teachers_bitwise_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let (index, stft_cfg, part) = toy_setup(dir.path(), 10);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let teachers: Vec<Checkpoint> = (0..part.n_bands())
        .map(|band| Checkpoint::teacher(band, ModelParams::<f32>::init(10, 8, &mut rng)))
        .collect();
    let distill = DistillConfig {
        alpha: 0.1,
        teacher_checkpoints: teachers.clone(),
    };
    let before = distill.teacher_checkpoints.clone();
    train_student(&index, &part, 8, &stft_cfg, &tiny_cfg(21, 2), Some(&distill)).unwrap();
    assert_eq!(distill.teacher_checkpoints, before);
}

#[test]
fn distill_validation_catches_geometry_problems() {
    let part = SubbandPartition::new(41, 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    // Wrong width.
    let bad_width = DistillConfig {
        alpha: 0.1,
        teacher_checkpoints: (0..4)
            .map(|b| Checkpoint::teacher(b, ModelParams::<f32>::init(20, 4, &mut rng)))
            .collect(),
    };
    let err = bad_width.validate(&part).unwrap_err().to_string();
    assert!(err.contains("width"), "{err}");

    // Missing one teacher.
    let missing = DistillConfig {
        alpha: 0.1,
        teacher_checkpoints: (0..3)
            .map(|b| Checkpoint::teacher(b, ModelParams::<f32>::init(10, 4, &mut rng)))
            .collect(),
    };
    assert!(missing.validate(&part).is_err());

    // Capacity warning fires only when a teacher is smaller.
    let small = DistillConfig {
        alpha: 0.1,
        teacher_checkpoints: (0..4)
            .map(|b| Checkpoint::teacher(b, ModelParams::<f32>::init(10, 4, &mut rng)))
            .collect(),
    };
    assert_eq!(small.capacity_warnings(4).len(), 0);
    assert_eq!(small.capacity_warnings(8).len(), 4);
}

#[test]
fn band_sampling_is_uniform_within_three_sigma() {
    let mut sampler = BandSampler::new(123);
    let n = 4;
    let draws = 10_000;
    let mut counts = vec![0usize; n];
    for _ in 0..draws {
        counts[sampler.next(n)] += 1;
    }
    let expect = draws as f64 / n as f64;
    let sigma = (draws as f64 * (1.0 / n as f64) * (1.0 - 1.0 / n as f64)).sqrt();
    for (band, &c) in counts.iter().enumerate() {
        let dev = (c as f64 - expect).abs();
        assert!(
            dev <= 3.0 * sigma,
            "band {band}: count {c} deviates {dev:.1} > 3σ ({:.1})",
            3.0 * sigma
        );
    }
}

#[test]
fn plateau_drives_lr_schedule_and_early_stopping() {
    // With an impossibly large min_delta no epoch ever counts as an
    // improvement: the learning rate halves every lr_patience epochs and
    // training stops after exactly stop_patience epochs.
    let dir = tempfile::tempdir().unwrap();
    let (index, stft_cfg, part) = toy_setup(dir.path(), 8);
    let cfg = TrainConfig {
        stop_min_delta: 1e9,
        lr_patience: 2,
        stop_patience: 6,
        ..tiny_cfg(31, 50)
    };
    let (_, report) = train_teacher(&index, 0, &part, 6, &stft_cfg, &cfg).unwrap();
    assert_eq!(report.stop_reason, StopReason::EarlyStopped);
    assert_eq!(report.epochs.len(), 6);

    let lrs: Vec<f64> = report.epochs.iter().map(|e| e.lr).collect();
    for pair in lrs.windows(2) {
        assert!(pair[1] <= pair[0], "lr must be non-increasing: {lrs:?}");
        let ratio = pair[1] / pair[0];
        assert!(
            (ratio - 1.0).abs() < 1e-12 || (ratio - 0.5).abs() < 1e-12,
            "each reduction multiplies by the factor: {lrs:?}"
        );
    }
    assert_eq!(lrs, vec![1e-3, 1e-3, 5e-4, 5e-4, 2.5e-4, 2.5e-4]);
}

#[test]
fn assembled_teacher_outputs_match_direct_stacking() {
    // Running one specialist per band and reassembling equals evaluating
    // the stacked map band-by-band into the covered columns.
    let part = SubbandPartition::new(41, 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let models: Vec<ModelParams<f64>> = (0..4)
        .map(|_| {
            let mut r = ChaCha8Rng::seed_from_u64(rng.random_range(0..1u64 << 40));
            ModelParams::init(10, 6, &mut r)
        })
        .collect();
    let mag = Mat::from_fn(9, 41, |_, _| rng.random_range(0.0..3.0));

    let slices: Vec<_> = (0..4)
        .map(|band| {
            let mut s = extract(&mag, &part, band).unwrap();
            s.values = models[band].forward(&s.values).unwrap();
            s
        })
        .collect();
    let assembled = assemble(&slices, &mag, &part).unwrap();

    let mut direct = mag.clone();
    for band in 0..4 {
        let out = models[band]
            .forward(&extract(&mag, &part, band).unwrap().values)
            .unwrap();
        for t in 0..9 {
            for f in 0..10 {
                direct[(t, band * 10 + f)] = out[(t, f)];
            }
        }
    }
    assert_eq!(assembled, direct);
}

#[test]
fn stft_linearity_validates_additive_mixing() {
    // Mixing is exact in the time domain, so the noisy spectrum equals
    // clean-plus-scaled-noise bin by bin.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let clean = Waveform::new(
        (0..8000)
            .map(|n| 0.4 * (std::f64::consts::TAU * 330.0 * n as f64 / 16000.0).sin())
            .collect(),
    );
    let noise = Waveform::new((0..9000).map(|_| rng.random_range(-0.3..0.3)).collect());
    let mix = mix_at_snr(&clean, &noise, 5.0, &mut rng).unwrap();

    let cfg = StftConfig::default_320();
    let sc = stft(&mix.clean, &cfg).unwrap();
    let sn = stft(&mix.noise, &cfg).unwrap();
    let sx = stft(&mix.noisy, &cfg).unwrap();
    for t in 0..sx.frames() {
        for ((x, c), n) in sx.row(t).iter().zip(sc.row(t)).zip(sn.row(t)) {
            assert!((x.re - (c.re + n.re)).abs() < 1e-9);
            assert!((x.im - (c.im + n.im)).abs() < 1e-9);
        }
    }
}

/// Independent parse of the checkpoint container: magic, version, header
/// length, JSON header fields, manifest order, offsets, and the raw f32
/// payload, without going through `Checkpoint::load`.
#[test]
fn checkpoint_wire_format_contract() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.ckpt");
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let params = ModelParams::<f32>::init(10, 4, &mut rng);
    Checkpoint::teacher(2, params.clone()).save(&path).unwrap();

    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[0..4], b"SBSE");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let header: serde_json::Value =
        serde_json::from_slice(&bytes[12..12 + header_len]).unwrap();

    assert_eq!(header["kind"], "teacher");
    assert_eq!(header["band_index"], 2);
    assert_eq!(header["w"], 10);
    assert_eq!(header["h"], 4);

    let arrays = header["arrays"].as_array().unwrap();
    assert_eq!(arrays.len(), 18);
    assert_eq!(arrays[0]["name"], "layer1.fwd.w_input");
    assert_eq!(
        arrays[0]["shape"].as_array().unwrap().len(),
        2,
        "weight arrays carry 2-d shapes"
    );
    assert_eq!(arrays[17]["name"], "output.bias");

    // Offsets are byte positions into the data section, in declared
    // order, and the payload is little-endian f32.
    let data = &bytes[12 + header_len..];
    let mut expected_offset = 0u64;
    for entry in arrays {
        assert_eq!(entry["offset"].as_u64().unwrap(), expected_offset);
        let len: usize = entry["shape"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap() as usize)
            .product();
        expected_offset += (len * 4) as u64;
    }
    assert_eq!(data.len() as u64, expected_offset);

    let first = f32::from_le_bytes(data[0..4].try_into().unwrap());
    assert_eq!(first, params.layer1.fwd.w_input[(0, 0)]);
}

#[test]
fn corpus_wavs_read_back_and_enhance_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let (index, stft_cfg, part) = toy_setup(dir.path(), 10);
    let entry = &index.split(Split::Test)[0];
    let noisy = read_wav(&index.resolve(&entry.noisy)).unwrap();
    noisy.validate().unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let model = ModelParams::<f64>::init(10, 6, &mut rng);
    let out = sbse_core::training::enhance(&model, &noisy, &part, &stft_cfg).unwrap();
    assert_eq!(out.len(), stft_cfg.output_len(stft_cfg.frame_count(noisy.len())));
    assert!(out.samples().iter().all(|s| s.is_finite()));
}
