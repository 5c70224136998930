use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use baroslip::dataset::io::{parse_record_line, RECORD_HEADER};
use baroslip::dataset::{load_corpus, load_sequence_file, make_window_refs, save_corpus};
use baroslip::harness::report::{comparison_csv, grid_csv, latency_summary, metrics_summary};
use baroslip::harness::{
    corpus_fingerprint, default_sweep_sizes, evaluate_refs, measure_latency, prepare_splits, sweep_csv, train,
    window_sweep, TrainConfig,
};
use baroslip::models::{load_model, save_model, Classifier, ModelKind};
use baroslip::simgen::{default_grid, generate_corpus, SimConfig};
use baroslip::stream::{replay, ReplayOptions};
use baroslip::{Error, TactileFrame};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "baroslip", version, about = "Slip detection for barometric tactile sensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus over the default condition grid.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one classifier and save it.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long = "model-kind")]
        model_kind: ModelKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Window length in frames.
        #[arg(long, default_value_t = 100)]
        tk: usize,
        /// Spacing between training window end points.
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[arg(long = "batch-size", default_value_t = 256)]
        batch_size: usize,
        /// Adam learning rate.
        #[arg(long, default_value_t = 0.002)]
        lr: f64,
        #[arg(long = "no-augment")]
        no_augment: bool,
    },
    /// Evaluate a saved model; writes weighted metrics and the condition grid.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Train one TCN per window size and tabulate held-out F1.
    Sweep {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[arg(long = "batch-size", default_value_t = 256)]
        batch_size: usize,
        /// Comma-separated window sizes; defaults to 10,20,...,100.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
    },
    /// Stream frames through a model and log slip events.
    Detect {
        #[arg(long)]
        model: PathBuf,
        /// A record file, or `-`/`stdin` for one CSV frame per line on standard input.
        #[arg(long)]
        input: String,
        /// Consume frames at the 100 Hz sensor rate.
        #[arg(long)]
        paced: bool,
        #[arg(long)]
        events: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Divergence { .. } => 3,
        _ => 2,
    }
}

fn run(command: Command) -> baroslip::Result<()> {
    match command {
        Command::Simulate { config, out } => {
            let cfg = SimConfig::load(&config)?;
            let corpus = generate_corpus(&cfg, &default_grid())?;
            save_corpus(&out, &corpus)?;
            let frames: usize = corpus.iter().map(|s| s.len()).sum();
            let slip: usize = corpus.iter().map(|s| s.slip_frames()).sum();
            println!(
                "wrote {} sequences, {frames} frames ({slip} slip) to {}",
                corpus.len(),
                out.display()
            );
            Ok(())
        }
        Command::Train {
            corpus,
            model_kind,
            out,
            epochs,
            seed,
            tk,
            stride,
            batch_size,
            lr,
            no_augment,
        } => {
            let corpus = load_corpus(&corpus)?;
            let cfg = TrainConfig {
                epochs,
                seed,
                window_len: tk,
                stride,
                batch_size,
                lr,
                augment: !no_augment,
                ..TrainConfig::default()
            };
            let outcome = train(model_kind, &corpus, &cfg)?;
            for w in &outcome.splits.warnings {
                eprintln!("warning: {w}");
            }
            println!("epoch,samples,train_loss,train_accuracy,val_f1,wall_s");
            for l in &outcome.log {
                println!(
                    "{},{},{:.6},{:.6},{:.6},{:.2}",
                    l.epoch, l.samples, l.train_loss, l.train_accuracy, l.val_f1, l.wall_s
                );
            }
            if !outcome.splits.test.is_empty() {
                let r = evaluate_refs(&outcome.model, &corpus, &outcome.splits.test)?;
                print!("{}", metrics_summary(&format!("{model_kind} (test split)"), &r));
            }
            save_model(&out, &outcome.model)?;
            let meta = outcome.model.meta();
            println!("best epoch {} (val F1 {:.4}); saved {}", meta.best_epoch, meta.val_f1, out.display());
            Ok(())
        }
        Command::Eval { model, corpus, report } => {
            let model = load_model(&model)?;
            let corpus = load_corpus(&corpus)?;
            let meta = model.meta();
            let t = model.window_len();
            // The training corpus is recognised by content; its held-out split is rebuilt so
            // training windows are not scored.
            let (refs, scope) = if meta.data_fingerprint == corpus_fingerprint(&corpus) {
                let splits = prepare_splits(&corpus, t, meta.stride.max(1), meta.seed)?;
                (splits.test, "test split of the training corpus")
            } else {
                (make_window_refs(&corpus, t, 1)?, "all windows")
            };
            let r = evaluate_refs(&model, &corpus, &refs)?;
            let name = model.kind().as_str();
            write_text(&report, &comparison_csv([(name, &r)]))?;
            let grid_path = sibling(&report, "_grid");
            write_text(&grid_path, &grid_csv(&r.grid))?;
            print!("{}", metrics_summary(&format!("{name} ({scope})"), &r));
            println!("wrote {} and {}", report.display(), grid_path.display());
            Ok(())
        }
        Command::Sweep {
            corpus,
            out,
            epochs,
            seed,
            stride,
            batch_size,
            sizes,
        } => {
            let corpus = load_corpus(&corpus)?;
            let cfg = TrainConfig {
                epochs,
                seed,
                stride,
                batch_size,
                ..TrainConfig::default()
            };
            let sizes = sizes.unwrap_or_else(default_sweep_sizes);
            let rows = window_sweep(&corpus, &sizes, &cfg)?;
            let csv = sweep_csv(&rows, true);
            write_text(&out, &csv)?;
            print!("{csv}");
            Ok(())
        }
        Command::Detect {
            model,
            input,
            paced,
            events,
        } => {
            let model = load_model(&model)?;
            let file = File::create(&events).map_err(|e| Error::Io {
                path: events.clone(),
                source: e,
            })?;
            let mut log = BufWriter::new(file);
            let options = ReplayOptions { paced };
            let outcome = if input == "-" || input == "stdin" {
                let stdin = io::stdin();
                replay(stdin_frames(stdin.lock()), &model, options, Some(&mut log))?
            } else {
                let path = PathBuf::from(&input);
                let seq = load_sequence_file(&path)?;
                let outcome = replay(seq.frames.iter().copied().map(Ok), &model, options, Some(&mut log))?;
                if !seq.onsets().is_empty() {
                    print!("{}", latency_summary(&measure_latency(&model, &[seq])?));
                }
                outcome
            };
            log.flush().map_err(|e| Error::Io {
                path: events.clone(),
                source: e,
            })?;
            println!(
                "{} frames, {} events, mean inference {:.1} us; log in {}",
                outcome.frames,
                outcome.events.len(),
                outcome.mean_inference_us(),
                events.display()
            );
            Ok(())
        }
    }
}

/// Lazily parsed standard-input frames; a leading header line and blank lines are skipped.
fn stdin_frames(input: impl BufRead) -> impl Iterator<Item = baroslip::Result<TactileFrame>> {
    let stdin = PathBuf::from("<stdin>");
    input.lines().enumerate().filter_map(move |(k, line)| {
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(Error::Io { path: stdin.clone(), source: e })),
        };
        let trimmed = line.trim();
        if trimmed.is_empty() || (k == 0 && trimmed == RECORD_HEADER) {
            return None;
        }
        Some(
            parse_record_line(trimmed)
                .map(|(frame, _)| frame)
                .map_err(|msg| Error::Parse {
                    path: stdin.clone(),
                    line: k + 1,
                    msg,
                }),
        )
    })
}

fn write_text(path: &Path, text: &str) -> baroslip::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// `dir/report.csv` + `_grid` -> `dir/report_grid.csv`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}{ext}"))
}
