use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::sensor::{ClassLabel, SlipType, Surface};
use crate::{derive_seed, rng_from};

use super::Labeled;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StratumKey {
    pub label: ClassLabel,
    pub surface: Surface,
    pub slip_type: SlipType,
    pub speed_bits: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            val_fraction: 0.1,
            test_fraction: 0.1,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train_fraction, self.val_fraction, self.test_fraction];
        if parts.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::InvalidInput("split fractions must lie in [0, 1]".into()));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("split fractions sum to {sum}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutcome<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
    /// Strata too small to split; each went wholly to train.
    pub warnings: Vec<String>,
}

/// Splits per (label, surface, slip type, speed) stratum, preserving input order within each part.
pub fn stratified_split<T: Labeled + Clone>(items: &[T], spec: &SplitSpec) -> Result<SplitOutcome<T>> {
    spec.validate()?;
    let mut strata: BTreeMap<StratumKey, Vec<usize>> = BTreeMap::new();
    for (i, item) in items.iter().enumerate() {
        strata.entry(item.stratum()).or_default().push(i);
    }
    let mut assignment = vec![0u8; items.len()];
    let mut warnings = Vec::new();
    for (k, (key, mut members)) in strata.into_iter().enumerate() {
        let n = members.len();
        let n_val = (spec.val_fraction * n as f64).round() as usize;
        let n_test = (spec.test_fraction * n as f64).round() as usize;
        let needs_val = spec.val_fraction > 0.0 && n_val == 0;
        let needs_test = spec.test_fraction > 0.0 && n_test == 0;
        if needs_val || needs_test || n_val + n_test > n {
            warnings.push(format!("stratum {key:?} has only {n} windows; assigned to train"));
            continue;
        }
        members.shuffle(&mut rng_from(derive_seed(spec.seed, k as u64)));
        for &i in &members[..n_val] {
            assignment[i] = 1;
        }
        for &i in &members[n_val..n_val + n_test] {
            assignment[i] = 2;
        }
    }
    let mut out = SplitOutcome {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
        warnings,
    };
    for (item, part) in items.iter().zip(assignment) {
        match part {
            0 => out.train.push(item.clone()),
            1 => out.val.push(item.clone()),
            _ => out.test.push(item.clone()),
        }
    }
    Ok(out)
}
