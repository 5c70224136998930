use crate::error::{Error, Result};
use crate::sensor::{window_label, ClassLabel, ConditionTag, LabeledSequence, PressureRow};
use crate::Corpus;

use super::Labeled;

/// A `T_k x 6` pressure matrix, oldest row first, labeled by its newest frame.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub pressures: Vec<PressureRow>,
    pub label: ClassLabel,
    pub condition: ConditionTag,
}

impl WindowSample {
    pub fn len(&self) -> usize {
        self.pressures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pressures.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.pressures.is_empty() {
            return Err(Error::InvalidInput("window must hold at least one row".into()));
        }
        if self.pressures.iter().flatten().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("window contains non-finite pressure".into()));
        }
        Ok(())
    }
}

impl Labeled for WindowSample {
    fn label(&self) -> ClassLabel {
        self.label
    }
    fn condition(&self) -> &ConditionTag {
        &self.condition
    }
}

/// A window addressed by sequence and end index, materialized on demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRef {
    pub sequence: usize,
    pub end: usize,
    pub len: usize,
    pub label: ClassLabel,
    pub condition: ConditionTag,
}

impl WindowRef {
    pub fn rows<'a>(&self, corpus: &'a Corpus) -> impl Iterator<Item = &'a PressureRow> + 'a {
        let start = self.end + 1 - self.len;
        corpus[self.sequence].frames[start..=self.end].iter().map(|f| &f.pressure)
    }

    pub fn materialize(&self, corpus: &Corpus) -> WindowSample {
        WindowSample {
            pressures: self.rows(corpus).copied().collect(),
            label: self.label,
            condition: self.condition,
        }
    }

    pub fn barometer_range(&self, corpus: &Corpus) -> f64 {
        corpus[self.sequence].barometer_range
    }
}

impl Labeled for WindowRef {
    fn label(&self) -> ClassLabel {
        self.label
    }
    fn condition(&self) -> &ConditionTag {
        &self.condition
    }
}

fn check(len: usize, window_len: usize, stride: usize) -> Result<()> {
    if window_len == 0 || stride == 0 {
        return Err(Error::Range("window length and stride must be at least 1".into()));
    }
    if len < window_len {
        return Err(Error::Range(format!(
            "sequence of {len} frames is shorter than the window ({window_len})"
        )));
    }
    Ok(())
}

/// Windows ending at `T_k-1, T_k-1+stride, ...`; count = floor((L - T_k) / stride) + 1.
pub fn make_windows(seq: &LabeledSequence, window_len: usize, stride: usize) -> Result<Vec<WindowSample>> {
    check(seq.len(), window_len, stride)?;
    (window_len - 1..seq.len())
        .step_by(stride)
        .map(|end| {
            Ok(WindowSample {
                pressures: seq.frames[end + 1 - window_len..=end].iter().map(|f| f.pressure).collect(),
                label: window_label(&seq.labels, end, window_len)?,
                condition: seq.condition,
            })
        })
        .collect()
}

/// Index-only windows over a whole corpus. Sequences shorter than the window are skipped.
pub fn make_window_refs(corpus: &Corpus, window_len: usize, stride: usize) -> Result<Vec<WindowRef>> {
    check(usize::MAX, window_len, stride)?;
    let mut out = Vec::new();
    for (i, seq) in corpus.iter().enumerate() {
        if seq.len() < window_len {
            continue;
        }
        for end in (window_len - 1..seq.len()).step_by(stride) {
            out.push(WindowRef {
                sequence: i,
                end,
                len: window_len,
                label: window_label(&seq.labels, end, window_len)?,
                condition: seq.condition,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::{Surface, TactileFrame};

    fn seq(len: usize) -> LabeledSequence {
        let frames = (0..len)
            .map(|i| TactileFrame {
                t: i as f64 * 0.01,
                pressure: [i as f64; 6],
                v_xy: if i % 7 == 0 { [0.01, 0.0] } else { [0.0, 0.0] },
                omega: 0.0,
            })
            .collect();
        LabeledSequence::from_frames(frames, ConditionTag::static_on(Surface::Planar), 1000.0).unwrap()
    }

    #[test]
    fn window_counts() {
        assert_eq!(make_windows(&seq(100), 100, 1).unwrap().len(), 1);
        assert_eq!(make_windows(&seq(150), 100, 10).unwrap().len(), 6);
        assert!(matches!(make_windows(&seq(99), 100, 1), Err(Error::Range(_))));
        assert!(make_windows(&seq(100), 10, 0).is_err());
    }

    #[test]
    fn windows_are_oldest_first_and_newest_labeled() {
        let s = seq(30);
        let w = make_windows(&s, 5, 3).unwrap();
        for (k, win) in w.iter().enumerate() {
            let end = 4 + 3 * k;
            assert_eq!(win.pressures[0][0], (end - 4) as f64);
            assert_eq!(win.pressures[4][0], end as f64);
            assert_eq!(win.label, s.labels[end]);
        }
    }

    #[test]
    fn refs_match_materialized_windows() {
        let corpus = vec![seq(40), seq(3), seq(25)];
        let refs = make_window_refs(&corpus, 10, 2).unwrap();
        let direct: Vec<_> = [&corpus[0], &corpus[2]]
            .iter()
            .flat_map(|s| make_windows(s, 10, 2).unwrap())
            .collect();
        let via_refs: Vec<_> = refs.iter().map(|r| r.materialize(&corpus)).collect();
        assert_eq!(direct, via_refs);
    }
}
