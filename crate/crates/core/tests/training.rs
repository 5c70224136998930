use baroslip::harness::{evaluate_refs, prepare_splits, train, train_on_splits, Splits, TrainConfig};
use baroslip::models::{load_model, save_model, ModelKind};
use baroslip::{ClassLabel, ConditionTag, Corpus, Direction, LabeledSequence, SlipType, Surface, TactileFrame};

const T: usize = 8;

/// Alternating 20-frame blocks; slip frames carry a +-40 Nyquist-rate oscillation on every
/// channel, stable frames are flat. Separable from the newest frame alone.
fn toy_corpus(sequences: usize, frames: usize) -> Corpus {
    let cond = ConditionTag::new(Surface::Planar, SlipType::TransPrimary, 0.05, Some(Direction::N)).unwrap();
    (0..sequences)
        .map(|s| {
            let frames = (0..frames)
                .map(|i| {
                    let slip = (i / 20 + s) % 2 == 1;
                    let swing = if slip { 40.0 * if i % 2 == 0 { 1.0 } else { -1.0 } } else { 0.0 };
                    TactileFrame {
                        t: i as f64 * 0.01,
                        pressure: std::array::from_fn(|c| 500.0 + c as f64 + swing),
                        v_xy: if slip { [0.0, 0.05] } else { [0.0, 0.0] },
                        omega: 0.0,
                    }
                })
                .collect();
            LabeledSequence::from_frames(frames, cond, 1000.0).unwrap()
        })
        .collect()
}

fn config(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        window_len: T,
        batch_size: 16,
        seed: 7,
        ..TrainConfig::default()
    }
}

#[test]
fn separable_toy_is_fitted_within_twenty_epochs() {
    let corpus = toy_corpus(6, 200);
    let out = train(ModelKind::Tcn, &corpus, &config(20)).unwrap();
    let r = evaluate_refs(&out.model, &corpus, &out.splits.train).unwrap();
    assert_eq!(r.accuracy, 1.0, "train accuracy {} after {:?}", r.accuracy, out.log.last());
    assert!(out.log.len() <= 20);
}

#[test]
fn training_is_bit_reproducible() {
    let corpus = toy_corpus(4, 120);
    for kind in [ModelKind::Tcn, ModelKind::FreqCnn, ModelKind::Psd] {
        let cfg = TrainConfig { window_len: 20, ..config(2) };
        let (a, b) = (train(kind, &corpus, &cfg).unwrap(), train(kind, &corpus, &cfg).unwrap());
        assert_eq!(a.model, b.model, "{kind}");
        assert_eq!(a.log.len(), b.log.len());
        assert!(a.log.iter().zip(&b.log).all(|(x, y)| x.reproducible_eq(y)), "{kind}");
        let w = vec![[500.0; 6]; 20];
        assert_eq!(a.model.probabilities(&w).unwrap(), b.model.probabilities(&w).unwrap());
    }
}

#[test]
fn different_seeds_give_different_models() {
    let corpus = toy_corpus(4, 120);
    let a = train(ModelKind::Tcn, &corpus, &config(1)).unwrap();
    let b = train(ModelKind::Tcn, &corpus, &TrainConfig { seed: 8, ..config(1) }).unwrap();
    assert_ne!(a.model, b.model);
}

#[test]
fn ten_window_smoke_run() {
    let corpus = toy_corpus(1, 60);
    let all = prepare_splits(&corpus, T, 1, 1).unwrap();
    let pick = |label| all.train.iter().chain(&all.val).chain(&all.test).filter(move |w| w.label == label).cloned();
    let mut train_refs: Vec<_> = pick(ClassLabel::Stable).take(5).collect();
    train_refs.extend(pick(ClassLabel::Slip).take(5));
    let val = train_refs.clone();
    let splits = Splits { train: train_refs, val, test: Vec::new(), warnings: Vec::new() };
    let out = train_on_splits(ModelKind::Tcn, &corpus, splits, &config(3)).unwrap();
    assert_eq!(out.log.len(), 3);
    assert!(out.log.iter().all(|l| l.samples == 10 && l.train_loss.is_finite()));
    assert!((1..=3).contains(&out.model.meta().best_epoch));
}

#[test]
fn single_class_corpus_cannot_be_balanced() {
    let cond = ConditionTag::static_on(Surface::Planar);
    let frames = (0..60)
        .map(|i| TactileFrame { t: i as f64 * 0.01, pressure: [500.0; 6], v_xy: [0.0; 2], omega: 0.0 })
        .collect();
    let corpus = vec![LabeledSequence::from_frames(frames, cond, 1000.0).unwrap()];
    assert!(train(ModelKind::Tcn, &corpus, &config(1)).is_err());
}

#[test]
fn trained_models_survive_a_save_and_load() {
    let corpus = toy_corpus(4, 120);
    let dir = tempfile::tempdir().unwrap();
    for kind in [ModelKind::Tcn, ModelKind::FreqCnn] {
        let out = train(kind, &corpus, &TrainConfig { window_len: 20, ..config(1) }).unwrap();
        let path = dir.path().join(format!("{kind}.model"));
        save_model(&path, &out.model).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, out.model, "{kind}");
        let w: Vec<_> = (0..20).map(|i| [500.0 + i as f64; 6]).collect();
        assert_eq!(back.probabilities(&w).unwrap(), out.model.probabilities(&w).unwrap());
    }
}
