//! `sbse` — sub-band spectral-mapping speech enhancement.
//!
//! Subcommands: `gen-data`, `train-teacher`, `train-student`, `enhance`,
//! `evaluate`, `param-count`. A single JSON config file (see `--config`)
//! drives everything; flags override file values. Exit codes: 0 success,
//! 2 usage error, 3 data error, 4 numerical divergence.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use sbse_core::data::{generate_toy_corpus, read_wav, write_wav};
use sbse_core::error::{Error, Result};
use sbse_core::metrics::{evaluate_pair, MetricReport};
use sbse_core::network::{param_count, Checkpoint};
use sbse_core::training::{
    enhance_bypass, enhance_with_checkpoint, teacher_checkpoint_name, train_student,
    train_teacher, DistillConfig,
};

#[derive(Parser)]
#[command(name = "sbse", version, about = "Sub-band speech enhancement with teacher-student distillation")]
struct Cli {
    /// JSON config file; omitted fields fall back to the paper defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the STFT frame length (hop stays at 50%).
    #[arg(long, global = true)]
    frame_len: Option<usize>,

    /// Override the sub-band width in bins.
    #[arg(long, global = true)]
    band_width: Option<usize>,

    /// Override the LSTM hidden size.
    #[arg(long, global = true)]
    hidden: Option<usize>,

    /// Override the RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct TrainOverrides {
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    chunk_frames: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate the synthetic toy corpus.
    GenData {
        /// Number of clean/noisy pairs (train and test together).
        #[arg(long)]
        count: usize,
        /// Utterance length in seconds.
        #[arg(long, default_value_t = 1.0)]
        duration: f64,
        /// Output directory; defaults to the config's corpus_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the specialist model for one band.
    TrainTeacher {
        /// Band index in 0..n_bands.
        #[arg(long)]
        band: usize,
        #[command(flatten)]
        train: TrainOverrides,
    },
    /// Train the generalist model over all bands.
    TrainStudent {
        /// Add the frozen-teacher guidance term to the loss.
        #[arg(long)]
        distill: bool,
        /// Distillation weight; defaults to the config's alpha.
        #[arg(long)]
        alpha: Option<f64>,
        /// Directory holding teacher_band{i}.ckpt files.
        #[arg(long)]
        teacher_dir: Option<PathBuf>,
        #[command(flatten)]
        train: TrainOverrides,
    },
    /// Enhance one WAV file.
    Enhance {
        input: PathBuf,
        output: PathBuf,
        /// Student or teacher checkpoint to run.
        #[arg(long, required_unless_present = "bypass")]
        checkpoint: Option<PathBuf>,
        /// Skip the model: plain STFT round trip of the input.
        #[arg(long)]
        bypass: bool,
    },
    /// Score paired WAV directories (matched by file name).
    Evaluate {
        #[arg(long)]
        clean_dir: PathBuf,
        #[arg(long)]
        test_dir: PathBuf,
        /// Merge externally computed PESQ values (CSV: name,pesq).
        #[arg(long)]
        pesq: Option<PathBuf>,
        /// Where to write report.csv / report.json; defaults to report_dir.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print the trainable-parameter count for the configured model.
    ParamCount,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::InvalidInput(_) => 2,
                Error::Diverged(_) => 4,
                _ => 3,
            })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(frame_len) = cli.frame_len {
        cfg.stft.frame_len = frame_len;
        cfg.stft.hop = frame_len / 2;
    }
    if let Some(w) = cli.band_width {
        cfg.partition.band_width = w;
    }
    if let Some(h) = cli.hidden {
        cfg.model.hidden_size = h;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }

    match cli.cmd {
        Cmd::GenData {
            count,
            duration,
            out,
        } => cmd_gen_data(&cfg, count, duration, out),
        Cmd::TrainTeacher { band, train } => cmd_train_teacher(&cfg, band, &train),
        Cmd::TrainStudent {
            distill,
            alpha,
            teacher_dir,
            train,
        } => cmd_train_student(&cfg, distill, alpha, teacher_dir, &train),
        Cmd::Enhance {
            input,
            output,
            checkpoint,
            bypass,
        } => cmd_enhance(&cfg, checkpoint.as_deref(), &input, &output, bypass),
        Cmd::Evaluate {
            clean_dir,
            test_dir,
            pesq,
            out_dir,
        } => cmd_evaluate(&cfg, &clean_dir, &test_dir, pesq.as_deref(), out_dir),
        Cmd::ParamCount => cmd_param_count(&cfg),
    }
}

fn apply_overrides(cfg: &RunConfig, ov: &TrainOverrides) -> sbse_core::training::TrainConfig {
    let mut t = cfg.train_config();
    if let Some(lr) = ov.lr {
        t.lr = lr;
    }
    if let Some(epochs) = ov.epochs {
        t.epochs = epochs;
    }
    if let Some(b) = ov.batch_size {
        t.batch_size = b;
    }
    if let Some(c) = ov.chunk_frames {
        t.chunk_frames = c;
    }
    t
}

fn cmd_gen_data(cfg: &RunConfig, count: usize, duration: f64, out: Option<PathBuf>) -> Result<()> {
    if count == 0 {
        return Err(Error::invalid("--count must be at least 1"));
    }
    let dir = out.unwrap_or_else(|| cfg.paths.corpus_dir.clone());
    let index = generate_toy_corpus(&dir, cfg.seed, count, duration)?;
    println!(
        "wrote {} train + {} test pairs to {}",
        index.split(sbse_core::data::Split::Train).len(),
        index.split(sbse_core::data::Split::Test).len(),
        dir.display()
    );
    Ok(())
}

fn cmd_train_teacher(cfg: &RunConfig, band: usize, ov: &TrainOverrides) -> Result<()> {
    let stft_cfg = cfg.stft_config()?;
    let part = cfg.partition()?;
    let train_cfg = apply_overrides(cfg, ov);
    let index = sbse_core::data::CorpusIndex::load(&cfg.paths.corpus_dir)?;

    let (ck, report) = train_teacher(
        &index,
        band,
        &part,
        cfg.model.hidden_size,
        &stft_cfg,
        &train_cfg,
    )?;

    std::fs::create_dir_all(&cfg.paths.checkpoint_dir)?;
    std::fs::create_dir_all(&cfg.paths.report_dir)?;
    let ck_path = cfg.paths.checkpoint_dir.join(teacher_checkpoint_name(band));
    ck.save(&ck_path)?;
    let report_path = cfg
        .paths
        .report_dir
        .join(format!("train_teacher_band{band}.jsonl"));
    report.write_jsonl(&report_path)?;
    println!(
        "teacher band {band}: val loss {:.6} after {} epochs -> {}",
        report.final_val_loss(),
        report.epochs.len(),
        ck_path.display()
    );
    Ok(())
}

fn cmd_train_student(
    cfg: &RunConfig,
    distill: bool,
    alpha: Option<f64>,
    teacher_dir: Option<PathBuf>,
    ov: &TrainOverrides,
) -> Result<()> {
    let stft_cfg = cfg.stft_config()?;
    let part = cfg.partition()?;
    let train_cfg = apply_overrides(cfg, ov);
    let index = sbse_core::data::CorpusIndex::load(&cfg.paths.corpus_dir)?;

    let distill_cfg = if distill {
        let dir = teacher_dir.unwrap_or_else(|| cfg.distill.teacher_dir.clone());
        let d = DistillConfig::load_from_dir(&dir, alpha.unwrap_or(cfg.distill.alpha), &part)?;
        for warning in d.capacity_warnings(cfg.model.hidden_size) {
            eprintln!("warning: {warning}");
        }
        Some(d)
    } else {
        None
    };

    let (ck, report) = train_student(
        &index,
        &part,
        cfg.model.hidden_size,
        &stft_cfg,
        &train_cfg,
        distill_cfg.as_ref(),
    )?;

    std::fs::create_dir_all(&cfg.paths.checkpoint_dir)?;
    std::fs::create_dir_all(&cfg.paths.report_dir)?;
    let ck_path = cfg.paths.checkpoint_dir.join("student.ckpt");
    ck.save(&ck_path)?;
    report.write_jsonl(&cfg.paths.report_dir.join("train_student.jsonl"))?;
    println!(
        "student{}: val loss {:.6} after {} epochs -> {}",
        if distill { " (distilled)" } else { "" },
        report.final_val_loss(),
        report.epochs.len(),
        ck_path.display()
    );
    Ok(())
}

fn cmd_enhance(
    cfg: &RunConfig,
    checkpoint: Option<&Path>,
    input: &Path,
    output: &Path,
    bypass: bool,
) -> Result<()> {
    let stft_cfg = cfg.stft_config()?;
    let noisy = read_wav(input)?;
    let enhanced = if bypass {
        enhance_bypass(&noisy, &stft_cfg)?
    } else {
        let part = cfg.partition()?;
        let ck = Checkpoint::load(checkpoint.expect("clap enforces --checkpoint"))?;
        enhance_with_checkpoint(&ck, &noisy, &part, &stft_cfg)?
    };
    write_wav(output, &enhanced)?;
    println!("wrote {}", output.display());
    Ok(())
}

/// Lists the `.wav` files of a directory keyed by file name.
fn wav_files(dir: &Path) -> Result<std::collections::BTreeMap<String, PathBuf>> {
    let mut out = std::collections::BTreeMap::new();
    let entries = std::fs::read_dir(dir)
        .map_err(|e| Error::data(format!("cannot list {}: {e}", dir.display())))?;
    for entry in entries {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some("wav") {
            let name = path
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or_default()
                .to_string();
            out.insert(name, path);
        }
    }
    Ok(out)
}

fn cmd_evaluate(
    cfg: &RunConfig,
    clean_dir: &Path,
    test_dir: &Path,
    pesq: Option<&Path>,
    out_dir: Option<PathBuf>,
) -> Result<()> {
    let stft_cfg = cfg.stft_config()?;
    let part = cfg.partition()?;

    let clean_files = wav_files(clean_dir)?;
    let test_files = wav_files(test_dir)?;
    let unpaired: Vec<&String> = clean_files
        .keys()
        .filter(|k| !test_files.contains_key(*k))
        .chain(test_files.keys().filter(|k| !clean_files.contains_key(*k)))
        .collect();
    if !unpaired.is_empty() {
        let names: Vec<String> = unpaired.iter().map(|s| s.to_string()).collect();
        return Err(Error::data(format!(
            "unpaired files between {} and {}: {}",
            clean_dir.display(),
            test_dir.display(),
            names.join(", ")
        )));
    }
    if clean_files.is_empty() {
        return Err(Error::data("no wav files to evaluate"));
    }

    let pesq_by_name = match pesq {
        Some(p) => parse_pesq_csv(p)?,
        None => std::collections::BTreeMap::new(),
    };

    let mut rows = Vec::with_capacity(clean_files.len());
    for (name, clean_path) in &clean_files {
        let clean = read_wav(clean_path)?;
        let degraded = read_wav(&test_files[name])?;
        let mut row = evaluate_pair(name, &clean, &degraded, &part, &stft_cfg)?;
        row.pesq = pesq_by_name.get(name).copied();
        rows.push(row);
    }
    let report = MetricReport::from_utterances(rows)?;

    let dir = out_dir.unwrap_or_else(|| cfg.paths.report_dir.clone());
    std::fs::create_dir_all(&dir)?;
    report.write_csv(&dir.join("report.csv"))?;
    report.write_json(&dir.join("report.json"))?;
    println!(
        "{} utterances: stoi {:.4} ({:.2}%), si-sdr {:.2} dB, seg-snr {:.2} dB -> {}",
        report.utterances.len(),
        report.mean.stoi,
        report.mean.stoi * 100.0,
        report.mean.si_sdr_db,
        report.mean.seg_snr_db,
        dir.join("report.{csv,json}").display()
    );
    Ok(())
}

/// `name,pesq` rows; a header line is allowed and skipped.
fn parse_pesq_csv(path: &Path) -> Result<std::collections::BTreeMap<String, f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
    let mut out = std::collections::BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (name, value) = line
            .split_once(',')
            .ok_or_else(|| Error::data(format!("{}:{}: expected name,pesq", path.display(), i + 1)))?;
        match value.trim().parse::<f64>() {
            Ok(v) => {
                out.insert(name.trim().to_string(), v);
            }
            Err(_) if i == 0 => continue, // header
            Err(e) => {
                return Err(Error::data(format!(
                    "{}:{}: bad pesq value: {e}",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}

fn cmd_param_count(cfg: &RunConfig) -> Result<()> {
    let w = cfg.partition.band_width;
    let h = cfg.model.hidden_size;
    let count = param_count(w, h);
    println!(
        "parameters for band width {w}, hidden size {h}: {} ({:.2} M)",
        group_thousands(count),
        count as f64 / 1e6
    );
    Ok(())
}

fn group_thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}
