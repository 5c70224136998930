use rand::Rng;

/// Inverted dropout: survivors are scaled by 1/(1-rate) in training, identity at inference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dropout {
    pub rate: f64,
}

/// Per-entry multipliers of one training pass (0 or 1/(1-rate)); empty when inactive.
#[derive(Debug, Clone, Default)]
pub struct DropoutMask(Vec<f64>);

impl Dropout {
    pub fn new(rate: f64) -> Self {
        assert!((0.0..1.0).contains(&rate), "dropout rate must lie in [0, 1)");
        Self { rate }
    }

    pub fn forward(&self, x: &mut [f64], rng: &mut impl Rng, training: bool) -> DropoutMask {
        if !training || self.rate == 0.0 {
            return DropoutMask::default();
        }
        let keep = 1.0 / (1.0 - self.rate);
        let mask: Vec<f64> = x
            .iter()
            .map(|_| if rng.random::<f64>() < self.rate { 0.0 } else { keep })
            .collect();
        x.iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
        DropoutMask(mask)
    }

    pub fn backward(&self, mask: &DropoutMask, grad: &mut [f64]) {
        if !mask.0.is_empty() {
            grad.iter_mut().zip(&mask.0).for_each(|(g, m)| *g *= m);
        }
    }
}

impl DropoutMask {
    pub fn from_multipliers(m: Vec<f64>) -> Self {
        Self(m)
    }
}
