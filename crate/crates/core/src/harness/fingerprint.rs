use crate::sensor::LabeledSequence;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a, 64-bit. Stable across platforms and toolchains, unlike `DefaultHasher`.
#[derive(Debug, Clone, Copy)]
struct Fnv(u64);

impl Fnv {
    fn bytes(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
    }

    fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }

    fn str(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.bytes(s.as_bytes());
    }
}

/// Content hash over every frame, label and condition of a corpus, in order.
///
/// Used to recognise, at evaluation time, the corpus a model was trained on so the
/// held-out split can be reproduced.
pub fn corpus_fingerprint(corpus: &[LabeledSequence]) -> u64 {
    let mut h = Fnv(FNV_OFFSET);
    h.u64(corpus.len() as u64);
    for seq in corpus {
        let c = &seq.condition;
        h.str(c.surface.as_str());
        h.str(c.slip_type.as_str());
        h.f64(c.max_speed);
        h.str(c.direction_str());
        h.f64(seq.barometer_range);
        h.u64(seq.frames.len() as u64);
        for (f, l) in seq.frames.iter().zip(&seq.labels) {
            h.f64(f.t);
            f.pressure.iter().for_each(|&p| h.f64(p));
            h.f64(f.v_xy[0]);
            h.f64(f.v_xy[1]);
            h.f64(f.omega);
            h.bytes(&[l.index() as u8]);
        }
    }
    h.0
}
