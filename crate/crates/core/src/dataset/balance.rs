use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::rng_from;

use super::Labeled;

/// Indices of a class-balanced subset: the minority class whole, the majority
/// sampled uniformly without replacement down to the minority count. Output is sorted.
pub fn undersample_indices<T: Labeled>(items: &[T], seed: u64) -> Result<Vec<usize>> {
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, item) in items.iter().enumerate() {
        by_class[item.label().index()].push(i);
    }
    let n = by_class[0].len().min(by_class[1].len());
    if n == 0 {
        return Err(Error::Balance(format!(
            "need both classes, got {} stable and {} slip",
            by_class[0].len(),
            by_class[1].len()
        )));
    }
    let mut rng = rng_from(seed);
    let mut out = Vec::with_capacity(2 * n);
    for class in &by_class {
        if class.len() == n {
            out.extend_from_slice(class);
        } else {
            out.extend(sample(&mut rng, class.len(), n).into_iter().map(|k| class[k]));
        }
    }
    out.sort_unstable();
    Ok(out)
}

pub fn undersample_balance<T: Labeled + Clone>(items: &[T], seed: u64) -> Result<Vec<T>> {
    Ok(undersample_indices(items, seed)?
        .into_iter()
        .map(|i| items[i].clone())
        .collect())
}

/// `[stable, slip]` counts.
pub fn class_counts<T: Labeled>(items: &[T]) -> [usize; 2] {
    let mut counts = [0; 2];
    for item in items {
        counts[item.label().index()] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::ClassLabel;
    use crate::sensor::{ConditionTag, Surface};

    #[derive(Clone, Debug, PartialEq)]
    struct Item(ClassLabel, usize);
    const COND: ConditionTag = ConditionTag {
        surface: Surface::Planar,
        slip_type: crate::sensor::SlipType::Static,
        max_speed: 0.0,
        direction: None,
    };
    impl Labeled for Item {
        fn label(&self) -> ClassLabel {
            self.0
        }
        fn condition(&self) -> &ConditionTag {
            &COND
        }
    }

    fn items(stable: usize, slip: usize) -> Vec<Item> {
        (0..stable)
            .map(|i| Item(ClassLabel::Stable, i))
            .chain((0..slip).map(|i| Item(ClassLabel::Slip, stable + i)))
            .collect()
    }

    #[test]
    fn large_realistic_counts() {
        let data = items(143_584, 122_918);
        let out = undersample_balance(&data, 1).unwrap();
        assert_eq!(class_counts(&out), [122_918, 122_918]);
        // minority untouched
        assert!(data.iter().filter(|i| i.0 == ClassLabel::Slip).all(|i| out.contains(i)));
    }

    #[test]
    fn small_cases() {
        let data = items(10, 10);
        let out = undersample_balance(&data, 3).unwrap();
        assert_eq!(out, data);
        let out = undersample_balance(&items(3, 1), 3).unwrap();
        assert_eq!(class_counts(&out), [1, 1]);
        assert!(matches!(undersample_balance(&items(4, 0), 3), Err(Error::Balance(_))));
    }

    #[test]
    fn fresh_seed_draws_a_different_subset() {
        let data = items(1000, 100);
        let a = undersample_indices(&data, 1).unwrap();
        let b = undersample_indices(&data, 2).unwrap();
        assert_ne!(a, b);
        assert_eq!(a, undersample_indices(&data, 1).unwrap());
    }
}
