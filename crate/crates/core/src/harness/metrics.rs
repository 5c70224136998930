use std::collections::BTreeMap;

use crate::sensor::{ClassLabel, ConditionTag, SlipType, Surface};

/// `counts[true][predicted]`, indexed by [`ClassLabel::index`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (ClassLabel, ClassLabel)>) -> Self {
        let mut m = Self::default();
        for (t, p) in pairs {
            m.add(t, p);
        }
        m
    }

    pub fn add(&mut self, truth: ClassLabel, predicted: ClassLabel) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for t in 0..2 {
            for p in 0..2 {
                self.counts[t][p] += other.counts[t][p];
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn support(&self, class: ClassLabel) -> u64 {
        self.counts[class.index()].iter().sum()
    }

    fn predicted(&self, class: ClassLabel) -> u64 {
        self.counts[0][class.index()] + self.counts[1][class.index()]
    }

    fn hits(&self, class: ClassLabel) -> u64 {
        let c = class.index();
        self.counts[c][c]
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.counts[0][0] + self.counts[1][1], self.total())
    }

    /// Zero when the class is never predicted.
    pub fn precision(&self, class: ClassLabel) -> f64 {
        ratio(self.hits(class), self.predicted(class))
    }

    pub fn recall(&self, class: ClassLabel) -> f64 {
        ratio(self.hits(class), self.support(class))
    }

    pub fn f1(&self, class: ClassLabel) -> f64 {
        let (p, r) = (self.precision(class), self.recall(class));
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    fn weighted(&self, metric: impl Fn(ClassLabel) -> f64) -> f64 {
        let n = self.total();
        if n == 0 {
            return 0.0;
        }
        [ClassLabel::Stable, ClassLabel::Slip]
            .into_iter()
            .map(|c| self.support(c) as f64 / n as f64 * metric(c))
            .sum()
    }

    pub fn weighted_precision(&self) -> f64 {
        self.weighted(|c| self.precision(c))
    }

    pub fn weighted_recall(&self) -> f64 {
        self.weighted(|c| self.recall(c))
    }

    pub fn weighted_f1(&self) -> f64 {
        self.weighted(|c| self.f1(c))
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Row key of the sensitivity grid: slip type and commanded speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MotionKey {
    pub slip_type: SlipType,
    /// `max_speed.to_bits()`; speeds are positive so bit order equals numeric order.
    pub speed_bits: u64,
}

impl MotionKey {
    pub fn of(condition: &ConditionTag) -> Self {
        Self {
            slip_type: condition.slip_type,
            speed_bits: condition.max_speed.to_bits(),
        }
    }

    pub fn speed(&self) -> f64 {
        f64::from_bits(self.speed_bits)
    }
}

/// Weighted F1 per (motion, surface) cell with pooled marginals.
///
/// Marginals pool the confusion matrices of their cells rather than averaging cell scores.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct F1Grid {
    pub cells: BTreeMap<(MotionKey, Surface), ConfusionMatrix>,
}

impl F1Grid {
    pub fn add(&mut self, condition: &ConditionTag, truth: ClassLabel, predicted: ClassLabel) {
        self.cells
            .entry((MotionKey::of(condition), condition.surface))
            .or_default()
            .add(truth, predicted);
    }

    pub fn motions(&self) -> Vec<MotionKey> {
        let mut m: Vec<MotionKey> = self.cells.keys().map(|k| k.0).collect();
        m.dedup();
        m
    }

    pub fn cell(&self, motion: MotionKey, surface: Surface) -> Option<f64> {
        self.cells.get(&(motion, surface)).map(ConfusionMatrix::weighted_f1)
    }

    fn pooled(&self, keep: impl Fn(&(MotionKey, Surface)) -> bool) -> Option<f64> {
        let mut m = ConfusionMatrix::default();
        let mut any = false;
        for (k, c) in &self.cells {
            if keep(k) {
                m.merge(c);
                any = true;
            }
        }
        any.then(|| m.weighted_f1())
    }

    /// Row marginal over all surfaces.
    pub fn motion_marginal(&self, motion: MotionKey) -> Option<f64> {
        self.pooled(|k| k.0 == motion)
    }

    /// Column marginal over all motions.
    pub fn surface_marginal(&self, surface: Surface) -> Option<f64> {
        self.pooled(|k| k.1 == surface)
    }

    pub fn overall(&self) -> Option<f64> {
        self.pooled(|_| true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::{Slip, Stable};

    #[test]
    fn all_slip_predictor_on_balanced_set() {
        let m = ConfusionMatrix::from_pairs((0..100).map(|i| (if i < 50 { Stable } else { Slip }, Slip)));
        assert_eq!(m.counts, [[0, 50], [0, 50]]);
        assert_eq!(m.accuracy(), 0.5);
        assert_eq!(m.precision(Stable), 0.0);
        assert_eq!(m.precision(Slip), 0.5);
        assert_eq!(m.weighted_precision(), 0.25);
        assert_eq!(m.weighted_recall(), 0.5);
        // F1(slip) = 2/3, F1(stable) = 0
        assert!((m.weighted_f1() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_predictions() {
        let m = ConfusionMatrix::from_pairs([(Stable, Stable), (Slip, Slip), (Slip, Slip)]);
        assert_eq!(
            (m.accuracy(), m.weighted_precision(), m.weighted_recall(), m.weighted_f1()),
            (1.0, 1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn hand_computed_unbalanced_case() {
        // truth stable: 6 right, 2 wrong; truth slip: 1 wrong, 3 right
        let mut pairs = vec![(Stable, Stable); 6];
        pairs.extend([(Stable, Slip); 2]);
        pairs.push((Slip, Stable));
        pairs.extend([(Slip, Slip); 3]);
        let m = ConfusionMatrix::from_pairs(pairs);
        let p_st = 6.0 / 7.0;
        let r_st = 6.0 / 8.0;
        let p_sl = 3.0 / 5.0;
        let r_sl = 3.0 / 4.0;
        let f = |p: f64, r: f64| 2.0 * p * r / (p + r);
        let want = 8.0 / 12.0 * f(p_st, r_st) + 4.0 / 12.0 * f(p_sl, r_sl);
        assert!((m.weighted_f1() - want).abs() < 1e-15);
        assert_eq!(m.accuracy(), 9.0 / 12.0);
    }
}
