use baroslip::stream::{replay, ReplayOptions};
use baroslip::{Direction, SlipType};
use baroslip_demo::{condition, fit_psd, simulate_trace, stream_trace};

#[test]
fn condition_defaults_and_errors() {
    let c = condition("cyl_x", "rotation", "", 1.0).unwrap();
    assert_eq!((c.slip_type, c.direction), (SlipType::Rotation, Some(Direction::Cw)));
    let s = condition("planar", "static", "E", 0.3).unwrap();
    assert_eq!((s.direction, s.max_speed), (None, 0.0));
    assert!(condition("flat", "rotation", "", 1.0).is_err());
    assert!(condition("planar", "trans_primary", "NE", 0.05).is_err());
}

#[test]
fn simulated_trace_is_seeded() {
    let c = condition("planar", "trans_primary", "N", 0.075).unwrap();
    let a = simulate_trace(&c, 4.0, 3).unwrap();
    assert_eq!(a.len(), 400);
    assert_eq!(a, simulate_trace(&c, 4.0, 3).unwrap());
    assert_ne!(a.frames, simulate_trace(&c, 4.0, 4).unwrap().frames);
    assert!(simulate_trace(&c, 0.0, 3).is_err());
}

#[test]
fn psd_stream_over_a_slip_trace() {
    let det = fit_psd(50, 10).unwrap();
    assert!(det.threshold.is_finite() && (0.0..=1.0).contains(&det.train_f1));
    let c = condition("spherical", "trans_oblique", "", 0.1).unwrap();
    let seq = simulate_trace(&c, 10.0, 11).unwrap();
    let (features, regs) = stream_trace(&det, &seq).unwrap();
    assert_eq!(features.len(), seq.len());
    assert!(features[..49].iter().all(|f| f.is_nan()));
    assert!(features[49..].iter().all(|f| f.is_finite() && *f >= 0.0));
    assert!(regs.windows(2).all(|w| w[0] < w[1]));
    assert!(regs.iter().all(|&r| r >= 50), "two classified windows precede any registration");
    assert!(!regs.is_empty(), "a 10 s trace with several slip segments registers at least once");
    let native = replay(seq.frames.iter().copied().map(Ok), &det, ReplayOptions::default(), None).unwrap();
    assert_eq!(regs, native.registrations());
}
