//! Acceptance runner: one `[PASS]`/`[FAIL]` line per criterion, non-zero exit if any fail.
//! Single-threaded; criteria 5 to 8 and their repeat runs dominate the wall time.

mod common;

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use baroslip::dataset::io::{record_path, MAGIC, MANIFEST};
use baroslip::dataset::{augment, load_corpus, random_augment_and_noise, save_corpus, AugmentOp, WindowSample};
use baroslip::harness::report::{comparison_csv, grid_csv, latency_csv, latency_summary, write_report};
use baroslip::harness::{
    default_sweep_sizes, evaluate_refs, measure_latency, sweep_csv, train, window_sweep, LatencyReport, MetricsReport,
    SweepRow, TrainConfig, TrainOutcome,
};
use baroslip::models::io::{from_bytes, to_bytes};
use baroslip::models::{load_model, save_model, Classifier, Model, ModelKind, TcnArchitecture, TcnModel};
use baroslip::neural::{dilated_causal_conv1d, Tensor};
use baroslip::simgen::{default_grid, generate_corpus, simulate_with_seed, SimConfig};
use baroslip::{label_frame, ClassLabel, ConditionTag, Corpus, Direction, Error, LabeledSequence, SlipType, Surface};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRADCHECK_SEED: u64 = 0xD1FF;
const GRADCHECK_BUDGET_S: f64 = 120.0;
const CAUSALITY_TRIALS: usize = 100;
const AUGMENT_DRAWS: usize = 100_000;
const AUGMENT_TOLERANCE: f64 = 0.01;
const LABEL_FRAMES: usize = 100_000;

const TRAIN_SEED: u64 = 1;
const WINDOW: usize = 100;
const TCN_EPOCHS: usize = 10;
const TCN_STRIDE: usize = 2;
const TCN_BATCH: usize = 256;
const TCN_MIN_F1: f64 = 0.90;
const TCN_MAX_EPOCHS: usize = 50;
const TCN_BUDGET_S: f64 = 3600.0;
const FREQCNN_EPOCHS: usize = 3;

const SWEEP_EPOCHS: usize = 8;
const SWEEP_STRIDE: usize = 4;
const SWEEP_BATCH: usize = 64;

const LATENCY_SECONDS: f64 = 12.0;
const LATENCY_GRID_STEP: usize = 7;
const LATENCY_SEED_BASE: u64 = 999;
const LATENCY_MIN_ONSETS: usize = 50;
const LATENCY_RANGE: (f64, f64) = (2.0, 30.0);
const LATENCY_MAX_MISS: f64 = 0.10;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Runner {
    failed: usize,
}

impl Runner {
    fn check(&mut self, id: u8, name: &str, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                self.failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {id:>2} {name}: {detail} ({secs:.1}s)");
    }
}

/// Everything criteria 5, 7 and 8 produce; computed twice for criterion 9.
struct Pipeline {
    tcn: TrainOutcome,
    tcn_test: MetricsReport,
    tcn_seconds: f64,
    latency: LatencyReport,
    sweep: Vec<SweepRow>,
}

fn tcn_config() -> TrainConfig {
    TrainConfig {
        epochs: TCN_EPOCHS,
        seed: TRAIN_SEED,
        window_len: WINDOW,
        stride: TCN_STRIDE,
        batch_size: TCN_BATCH,
        ..TrainConfig::default()
    }
}

fn latency_sequences() -> Vec<LabeledSequence> {
    let cfg = SimConfig::default();
    default_grid()
        .iter()
        .step_by(LATENCY_GRID_STEP)
        .enumerate()
        .map(|(i, (cond, _))| simulate_with_seed(&cfg, cond, LATENCY_SECONDS, LATENCY_SEED_BASE + i as u64).unwrap())
        .collect()
}

fn run_pipeline(corpus: &Corpus) -> baroslip::Result<Pipeline> {
    let start = Instant::now();
    let tcn = train(ModelKind::Tcn, corpus, &tcn_config())?;
    let tcn_seconds = start.elapsed().as_secs_f64();
    let tcn_test = evaluate_refs(&tcn.model, corpus, &tcn.splits.test)?;
    let latency = measure_latency(&tcn.model, &latency_sequences())?;
    let sweep_cfg = TrainConfig {
        epochs: SWEEP_EPOCHS,
        seed: TRAIN_SEED,
        stride: SWEEP_STRIDE,
        batch_size: SWEEP_BATCH,
        ..TrainConfig::default()
    };
    let sweep = window_sweep(corpus, &default_sweep_sizes(), &sweep_cfg)?;
    Ok(Pipeline {
        tcn,
        tcn_test,
        tcn_seconds,
        latency,
        sweep,
    })
}

fn criterion_gradients() -> Outcome {
    let start = Instant::now();
    let reports = common::gradcheck::all(GRADCHECK_SEED);
    let secs = start.elapsed().as_secs_f64();
    let failed: Vec<String> = reports
        .iter()
        .filter(|(_, r)| !r.passed())
        .map(|(n, r)| format!("{n}: {}", r.failures.join("; ")))
        .collect();
    let coords: usize = reports.iter().map(|(_, r)| r.coords).sum();
    let (worst_name, worst) = reports
        .iter()
        .map(|(n, r)| (*n, r.worst))
        .fold(("", 0.0), |a, b| if b.1 > a.1 { b } else { a });
    ensure(
        failed.is_empty() && secs < GRADCHECK_BUDGET_S,
        format!(
            "{} ops, {coords} coordinates, worst rel err {worst:.2e} ({worst_name}), {secs:.1}s of {GRADCHECK_BUDGET_S}s{}",
            reports.len(),
            if failed.is_empty() { String::new() } else { format!("; failures: {}", failed.join(" | ")) }
        ),
    )
}

fn perturb_after(x: &Tensor, cut: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let (ch, time) = (x.shape()[0], x.shape()[1]);
    let mut y = x.clone();
    for c in 0..ch {
        for t in cut + 1..time {
            y.data_mut()[c * time + t] = rng.random_range(-1e3..1e3);
        }
    }
    y
}

fn prefix_identical(a: &Tensor, b: &Tensor, cut: usize) -> bool {
    let time = a.shape()[1];
    (0..a.shape()[0]).all(|c| (0..=cut).all(|t| a.data()[c * time + t].to_bits() == b.data()[c * time + t].to_bits()))
}

fn criterion_causality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xCA05);
    let mut violations = Vec::new();
    for trial in 0..CAUSALITY_TRIALS {
        let (cin, cout, k, d) = (rng.random_range(1..7), rng.random_range(1..9), rng.random_range(1..5), rng.random_range(1..9));
        let time = rng.random_range(2..120);
        let cut = rng.random_range(0..time);
        let x = Tensor::randn(&[cin, time], 1.0, &mut rng);
        let kernel = Tensor::randn(&[cout, cin, k], 1.0, &mut rng);
        let y = perturb_after(&x, cut, &mut rng);
        let (a, b) = (dilated_causal_conv1d(&x, &kernel, d).unwrap(), dilated_causal_conv1d(&y, &kernel, d).unwrap());
        if !prefix_identical(&a, &b, cut) {
            violations.push(format!("conv trial {trial}"));
        }
    }
    for trial in 0..CAUSALITY_TRIALS {
        let model = TcnModel::new(TcnArchitecture::with_window(WINDOW), trial as u64).unwrap();
        let cut = rng.random_range(0..WINDOW);
        let x = Tensor::randn(&[6, WINDOW], 300.0, &mut rng);
        let y = perturb_after(&x, cut, &mut rng);
        if !prefix_identical(&model.features(&x).unwrap(), &model.features(&y).unwrap(), cut) {
            violations.push(format!("tcn trial {trial}"));
        }
    }
    ensure(
        violations.is_empty(),
        format!(
            "{CAUSALITY_TRIALS} conv1d + {CAUSALITY_TRIALS} full-TCN trials, {} violations {:?}",
            violations.len(),
            violations
        ),
    )
}

fn criterion_symmetry() -> Outcome {
    use AugmentOp::*;
    let mut problems = Vec::new();
    // Group table from the channel permutations themselves.
    for a in AugmentOp::ALL {
        for b in AugmentOp::ALL {
            let row: [f64; 6] = std::array::from_fn(|c| c as f64);
            let composed = b.apply_row(&a.apply_row(&row));
            if a.compose(b).apply_row(&row) != composed {
                problems.push(format!("{a:?}*{b:?}"));
            }
            if a.compose(b) != b.compose(a) {
                problems.push(format!("{a:?}*{b:?} not abelian"));
            }
        }
        if a.compose(a) != Identity {
            problems.push(format!("{a:?} not an involution"));
        }
    }
    let expected = [(FlipX, FlipY, Rot180), (FlipX, Rot180, FlipY), (FlipY, Rot180, FlipX)];
    for (a, b, c) in expected {
        if a.compose(b) != c {
            problems.push(format!("{a:?}*{b:?} != {c:?}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x4A);
    let mut counts: HashMap<AugmentOp, usize> = HashMap::new();
    let conditions = [
        ConditionTag::static_on(Surface::Planar),
        ConditionTag::new(Surface::CylX, SlipType::TransOblique, 0.05, Some(Direction::NE)).unwrap(),
        ConditionTag::new(Surface::Spherical, SlipType::Rotation, 1.0, Some(Direction::Cw)).unwrap(),
    ];
    for i in 0..AUGMENT_DRAWS {
        let sample = WindowSample {
            pressures: vec![std::array::from_fn(|c| (c + i % 7) as f64); 3],
            label: if i % 3 == 0 { ClassLabel::Stable } else { ClassLabel::Slip },
            condition: conditions[i % conditions.len()],
        };
        let (out, op) = random_augment_and_noise(&sample, &mut rng, 0.01, 1000.0);
        if out.label != sample.label || augment(&sample, op).label != sample.label {
            problems.push(format!("label changed on draw {i}"));
        }
        *counts.entry(op).or_default() += 1;
    }
    let freqs: Vec<String> = AugmentOp::ALL
        .iter()
        .map(|op| {
            let f = counts.get(op).copied().unwrap_or(0) as f64 / AUGMENT_DRAWS as f64;
            if (f - 0.25).abs() > AUGMENT_TOLERANCE {
                problems.push(format!("{op:?} frequency {f}"));
            }
            format!("{op:?} {:.4}", f)
        })
        .collect();
    problems.truncate(5);
    ensure(
        problems.is_empty(),
        format!("Klein table checked, {AUGMENT_DRAWS} draws: {}; problems {problems:?}", freqs.join(", ")),
    )
}

/// Written from the rule statement only.
fn reference_label(vx: f64, vy: f64, omega: f64) -> ClassLabel {
    if (vx * vx + vy * vy).sqrt() >= 0.003 || omega.abs() >= 0.2 {
        ClassLabel::Slip
    } else {
        ClassLabel::Stable
    }
}

fn criterion_labeling() -> Outcome {
    let cfg = SimConfig::default();
    let grid = default_grid();
    let (mut frames, mut disagreements, mut slip) = (0usize, 0usize, 0usize);
    let mut k = 0u64;
    while frames < LABEL_FRAMES {
        let (cond, _) = &grid[k as usize % grid.len()];
        let seq = simulate_with_seed(&cfg, cond, 10.0, 0x1ABE1 + k).unwrap();
        for (f, stored) in seq.frames.iter().zip(&seq.labels).take(LABEL_FRAMES - frames) {
            let reference = reference_label(f.v_xy[0], f.v_xy[1], f.omega);
            if label_frame(f).unwrap() != reference || *stored != reference {
                disagreements += 1;
            }
            slip += usize::from(reference == ClassLabel::Slip);
            frames += 1;
        }
        k += 1;
    }
    ensure(
        disagreements == 0,
        format!("{frames} frames over {k} sequences ({slip} slip), {disagreements} disagreements"),
    )
}

fn criterion_end_to_end(p: &Pipeline) -> Outcome {
    let best = p.tcn.model.meta();
    let log: Vec<String> = p.tcn.log.iter().map(|l| format!("{:.3}", l.val_f1)).collect();
    ensure(
        p.tcn_test.f1 >= TCN_MIN_F1 && TCN_EPOCHS <= TCN_MAX_EPOCHS && p.tcn_seconds < TCN_BUDGET_S,
        format!(
            "TCN T={WINDOW} test weighted F1 {:.4} (>= {TCN_MIN_F1}) on {} test windows; {TCN_EPOCHS} epochs, best {} (val {:.4}), val curve [{}], {:.0}s",
            p.tcn_test.f1,
            p.tcn_test.samples(),
            best.best_epoch,
            best.val_f1,
            log.join(" "),
            p.tcn_seconds
        ),
    )
}

fn criterion_baselines(corpus: &Corpus, p: &Pipeline, dir: &Path, models: &mut Vec<Model>) -> Outcome {
    let base = TrainConfig {
        seed: TRAIN_SEED,
        window_len: WINDOW,
        stride: TCN_STRIDE,
        batch_size: TCN_BATCH,
        ..TrainConfig::default()
    };
    let psd = train(ModelKind::Psd, corpus, &base).map_err(|e| e.to_string())?;
    let freq = train(ModelKind::FreqCnn, corpus, &TrainConfig { epochs: FREQCNN_EPOCHS, ..base })
        .map_err(|e| e.to_string())?;
    let psd_r = evaluate_refs(&psd.model, corpus, &psd.splits.test).map_err(|e| e.to_string())?;
    let freq_r = evaluate_refs(&freq.model, corpus, &freq.splits.test).map_err(|e| e.to_string())?;
    let rows = [("psd", &psd_r), ("freqcnn", &freq_r), ("tcn", &p.tcn_test)];
    let csv = comparison_csv(rows);
    write_report(dir, "comparison", TRAIN_SEED, &csv).map_err(|e| e.to_string())?;
    write_report(dir, "tcn_grid", TRAIN_SEED, &grid_csv(&p.tcn_test.grid)).map_err(|e| e.to_string())?;
    models.extend([freq.model, psd.model]);
    let in_unit = rows
        .iter()
        .all(|(_, r)| [r.accuracy, r.precision, r.recall, r.f1].iter().all(|v| (0.0..=1.0).contains(v)));
    let summary: Vec<String> = rows.iter().map(|(n, r)| format!("{n} F1 {:.4}", r.f1)).collect();
    ensure(in_unit, format!("{} ({})", summary.join(", "), csv.lines().count() - 1))
}

fn criterion_sweep(p: &Pipeline, dir: &Path) -> Outcome {
    let path = write_report(dir, "window_sweep", TRAIN_SEED, &sweep_csv(&p.sweep, true)).map_err(|e| e.to_string())?;
    let f1 = |t: usize| p.sweep.iter().find(|r| r.window_len == t).map(|r| r.test_f1);
    let sizes: Vec<usize> = p.sweep.iter().map(|r| r.window_len).collect();
    let (f10, f100) = (f1(10).ok_or("no T=10 row")?, f1(100).ok_or("no T=100 row")?);
    let curve: Vec<String> = p.sweep.iter().map(|r| format!("{}:{:.3}", r.window_len, r.test_f1)).collect();
    ensure(
        sizes == default_sweep_sizes() && f100 >= f10,
        format!(
            "F1(100) {f100:.4} vs F1(10) {f10:.4}; curve [{}]; {SWEEP_EPOCHS} epochs, stride {SWEEP_STRIDE}; {}",
            curve.join(" "),
            path.display()
        ),
    )
}

fn criterion_latency(p: &Pipeline, dir: &Path) -> Outcome {
    let r = &p.latency;
    write_report(dir, "latency", TRAIN_SEED, &latency_csv(r)).map_err(|e| e.to_string())?;
    print!("{}", latency_summary(r));
    let mean = r.mean.ok_or("no detections")?;
    ensure(
        r.onsets >= LATENCY_MIN_ONSETS
            && (LATENCY_RANGE.0..=LATENCY_RANGE.1).contains(&mean)
            && r.miss_rate() <= LATENCY_MAX_MISS,
        format!(
            "{} onsets, mean {mean:.2} samples (in [{}, {}]), missed {:.1}% (<= {}%), {} false events",
            r.onsets,
            LATENCY_RANGE.0,
            LATENCY_RANGE.1,
            100.0 * r.miss_rate(),
            100.0 * LATENCY_MAX_MISS,
            r.false_events
        ),
    )
}

fn criterion_determinism(a: &Pipeline, b: &Pipeline) -> Outcome {
    let mut diffs = Vec::new();
    if a.tcn.log.len() != b.tcn.log.len() || !a.tcn.log.iter().zip(&b.tcn.log).all(|(x, y)| x.reproducible_eq(y)) {
        diffs.push("epoch log");
    }
    if a.tcn.model != b.tcn.model {
        diffs.push("model parameters");
    }
    if a.tcn_test != b.tcn_test || comparison_csv([("tcn", &a.tcn_test)]) != comparison_csv([("tcn", &b.tcn_test)]) {
        diffs.push("test metrics");
    }
    if !a.latency.reproducible_eq(&b.latency) || latency_csv(&a.latency) != latency_csv(&b.latency) {
        diffs.push("latency report");
    }
    if a.sweep.len() != b.sweep.len()
        || !a.sweep.iter().zip(&b.sweep).all(|(x, y)| x.reproducible_eq(y))
        || sweep_csv(&a.sweep, false) != sweep_csv(&b.sweep, false)
    {
        diffs.push("sweep");
    }
    ensure(
        diffs.is_empty(),
        format!("second run of training, test metrics, latency and sweep; differing: {diffs:?}"),
    )
}

fn kind_of(e: &Error) -> &'static str {
    match e {
        Error::Parse { .. } => "Parse",
        Error::Version { .. } => "Version",
        Error::ModelField { .. } => "ModelField",
        Error::Io { .. } => "Io",
        _ => "other",
    }
}

fn criterion_round_trips(models: &[Model], dir: &Path) -> Outcome {
    let mut problems = Vec::new();
    let cfg = SimConfig {
        corpus_slip_frames: 4000,
        ..SimConfig::default()
    };
    let corpus = generate_corpus(&cfg, &default_grid()).map_err(|e| e.to_string())?;
    let cdir = dir.join("corpus");
    let _ = std::fs::remove_dir_all(&cdir);
    save_corpus(&cdir, &corpus).map_err(|e| e.to_string())?;
    if load_corpus(&cdir).map_err(|e| e.to_string())? != corpus {
        problems.push("corpus round trip".to_string());
    }
    let manifest = cdir.join(MANIFEST);
    let original = std::fs::read_to_string(&manifest).unwrap();
    let record = record_path(&cdir, 0);
    let original_record = std::fs::read_to_string(&record).unwrap();
    let mut expect = |what: &str, got: baroslip::Result<Corpus>, want: &str| match got {
        Err(e) if kind_of(&e) == want => {}
        other => problems.push(format!("{what}: expected {want}, got {:?}", other.map(|c| c.len()))),
    };
    std::fs::write(&manifest, original.replacen(MAGIC, "not-a-corpus", 1)).unwrap();
    expect("corpus magic", load_corpus(&cdir), "Parse");
    std::fs::write(&manifest, original.replace("format_version: 1", "format_version: 9")).unwrap();
    expect("corpus version", load_corpus(&cdir), "Version");
    std::fs::write(&manifest, &original).unwrap();
    std::fs::write(&record, original_record.replacen("\n0,", "\n0,x", 1)).unwrap();
    expect("corpus row", load_corpus(&cdir), "Parse");
    std::fs::remove_file(&record).unwrap();
    expect("corpus missing record", load_corpus(&cdir), "Io");
    std::fs::write(&record, &original_record).unwrap();

    for model in models {
        let path = dir.join(format!("{}.model", model.kind()));
        save_model(&path, model).map_err(|e| e.to_string())?;
        let back = load_model(&path).map_err(|e| e.to_string())?;
        let rows: Vec<_> = (0..model.window_len()).map(|i| [500.0 + (i % 13) as f64; 6]).collect();
        if &back != model || back.probabilities(&rows).unwrap() != model.probabilities(&rows).unwrap() {
            problems.push(format!("{} round trip", model.kind()));
        }
        let bytes = to_bytes(model);
        let mut check = |what: &str, bytes: &[u8], want: &str| match from_bytes(bytes, &path) {
            Err(e) if kind_of(&e) == want => {}
            other => problems.push(format!("{} {what}: expected {want}, got ok={}", model.kind(), other.is_ok())),
        };
        let text = String::from_utf8_lossy(&bytes).into_owned();
        let head_end = text.find("\nend\n").unwrap() + 5;
        let edit = |from: &str, to: &str| {
            let mut out = text[..head_end].replacen(from, to, 1).into_bytes();
            out.extend_from_slice(&bytes[head_end..]);
            out
        };
        check("magic", &edit("baroslip-model", "baroslip-mode1"), "Parse");
        check("version", &edit("format_version: 1", "format_version: 2"), "Version");
        check("kind", &edit(&format!("kind: {}", model.kind()), "kind: lstm"), "ModelField");
        if !matches!(model, Model::Psd(_)) {
            check("truncated", &bytes[..bytes.len() - 8], "ModelField");
        }
    }
    ensure(
        problems.is_empty(),
        format!("corpus of {} sequences and {} models; problems {problems:?}", corpus.len(), models.len()),
    )
}

fn report_dir() -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn main() {
    let dir = report_dir();
    let mut runner = Runner { failed: 0 };
    runner.check(1, "gradient correctness", criterion_gradients);
    runner.check(2, "causality", criterion_causality);
    runner.check(3, "augmentation symmetry group", criterion_symmetry);
    runner.check(4, "labeling oracle", criterion_labeling);

    let corpus = common::default_corpus();
    let frames: usize = corpus.iter().map(|s| s.len()).sum();
    println!("default corpus: {} sequences, {frames} frames; reports in {}", corpus.len(), dir.display());
    let first = run_pipeline(&corpus);
    let mut models = Vec::new();
    match &first {
        Ok(p) => {
            runner.check(5, "synthetic end-to-end TCN", || criterion_end_to_end(p));
            runner.check(6, "baseline comparison report", || criterion_baselines(&corpus, p, &dir, &mut models));
            runner.check(7, "window sweep", || criterion_sweep(p, &dir));
            runner.check(8, "streaming latency", || criterion_latency(p, &dir));
            models.insert(0, p.tcn.model.clone());
        }
        Err(e) => {
            for (id, name) in [(5, "synthetic end-to-end TCN"), (6, "baseline comparison report"), (7, "window sweep"), (8, "streaming latency")] {
                runner.check(id, name, || Err(format!("pipeline failed: {e}")));
            }
        }
    }
    runner.check(9, "determinism", || {
        let a = first.as_ref().map_err(|e| e.to_string())?;
        let b = run_pipeline(&corpus).map_err(|e| e.to_string())?;
        criterion_determinism(a, &b)
    });
    runner.check(10, "round trips", || criterion_round_trips(&models, &dir));

    if runner.failed > 0 {
        println!("{} criteria failed", runner.failed);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
