// Scratch experiment for sizing the toy training runs. Not part of the
// deliverable surface; run with `cargo run -p sbse-core --example tune --release`.

use std::sync::mpsc;

use sbse_core::data::{generate_toy_corpus, read_wav, Split};
use sbse_core::metrics::si_sdr;
use sbse_core::network::Checkpoint;
use sbse_core::spectral::{recombine, stft, StftConfig, Waveform};
use sbse_core::subband::{assemble, extract, SubbandPartition};
use sbse_core::training::{train_student, train_teacher, DistillConfig, TrainConfig};

fn teacher_cfg() -> TrainConfig {
    TrainConfig {
        lr: 2e-3,
        batch_size: 8,
        chunk_frames: 96,
        epochs: 25,
        seed: 1,
        ..TrainConfig::default()
    }
}

fn main() {
    let t0 = std::time::Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let index = generate_toy_corpus(dir.path(), 7, 250, 1.0).unwrap();
    let stft_cfg = StftConfig::<f64>::hann(80).unwrap();
    let part = SubbandPartition::new(41, 10).unwrap();

    let eval_dir = tempfile::tempdir().unwrap();
    let eval_index = generate_toy_corpus(eval_dir.path(), 99, 40, 1.0).unwrap();

    let teachers: Vec<Checkpoint> = run_pool((0..4).map(|band| {
        let index = index.clone();
        let part = part.clone();
        let stft_cfg = stft_cfg.clone();
        move || train_teacher(&index, band, &part, 32, &stft_cfg, &teacher_cfg()).unwrap().0
    }));
    eprintln!("[{:6.1?}] teachers done", t0.elapsed());

    // A/B at the frozen protocol.
    enum AbJob { S1(u64), S2(u64) }
    let mut ab_jobs = Vec::new();
    for epochs in [30u64, 35] {
        for seed in 0..5u64 {
            ab_jobs.push(AbJob::S1(epochs * 1000 + seed));
            ab_jobs.push(AbJob::S2(epochs * 1000 + seed));
        }
    }
    let ab: Vec<(u64, bool, f64)> = run_pool(ab_jobs.into_iter().map(|job| {
        let index = index.clone();
        let part = part.clone();
        let stft_cfg = stft_cfg.clone();
        let teachers = teachers.clone();
        move || {
            let (tag, distilled) = match job { AbJob::S1(s) => (s, false), AbJob::S2(s) => (s, true) };
            let (epochs, seed) = (tag / 1000, tag % 1000);
            let cfg = TrainConfig { epochs: epochs as usize, seed: 100 + seed, ..teacher_cfg() };
            let d = DistillConfig { alpha: 0.1, teacher_checkpoints: teachers.clone() };
            let t1 = std::time::Instant::now();
            let (_, r) = train_student(&index, &part, 16, &stft_cfg, &cfg,
                if distilled { Some(&d) } else { None }).unwrap();
            eprintln!("  run e{epochs} seed {seed} distilled {distilled}: {:.1}s", t1.elapsed().as_secs_f64());
            (tag, distilled, r.final_val_loss())
        }
    }));
    for epochs in [30u64, 35] {
        let mut wins = 0;
        for seed in 0..5u64 {
            let tag = epochs * 1000 + seed;
            let s1 = ab.iter().find(|(s, d2, _)| *s == tag && !d2).unwrap().2;
            let s2 = ab.iter().find(|(s, d2, _)| *s == tag && *d2).unwrap().2;
            if s2 <= s1 { wins += 1; }
            eprintln!("e{epochs} seed {seed}: S1 {s1:.5} S2 {s2:.5} {}", if s2 <= s1 { "W" } else { "L" });
        }
        eprintln!("[{:6.1?}] e{epochs} alpha 0.1: S2 wins {wins}/5", t0.elapsed());
    }

    let _ = (&eval_index, &eval_dir);
    eprintln!("[{:6.1?}] all done", t0.elapsed());
}

fn run_pool<T: Send + 'static>(
    jobs: impl Iterator<Item = impl FnOnce() -> T + Send + 'static>,
) -> Vec<T> {
    let jobs: Vec<_> = jobs.enumerate().collect();
    let n = jobs.len();
    let queue = std::sync::Arc::new(std::sync::Mutex::new(jobs));
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| {
        for _ in 0..2 {
            let queue = queue.clone();
            let tx = tx.clone();
            scope.spawn(move || loop {
                let job = queue.lock().unwrap().pop();
                match job {
                    Some((i, f)) => tx.send((i, f())).unwrap(),
                    None => break,
                }
            });
        }
    });
    let mut out: Vec<(usize, T)> = rx.try_iter().take(n).collect();
    out.sort_by_key(|(i, _)| *i);
    out.into_iter().map(|(_, v)| v).collect()
}
