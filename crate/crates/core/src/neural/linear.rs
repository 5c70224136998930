use rand::Rng;

use super::tensor::{Param, Tensor};
use crate::error::{Error, Result};

/// `y = W x + b` with `W: [out, in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Param,
    pub bias: Param,
}

impl Linear {
    pub fn new(name: &str, inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let std = 1.0 / (inputs as f64).sqrt();
        Self {
            weight: Param::new(format!("{name}.weight"), Tensor::randn(&[outputs, inputs], std, rng)),
            bias: Param::new(format!("{name}.bias"), Tensor::zeros(&[outputs])),
        }
    }

    pub fn from_parts(name: &str, weight: Tensor, bias: Tensor) -> Result<Self> {
        weight.expect_rank("linear weight", 2)?;
        bias.expect_shape("linear bias", &[weight.shape()[0]])?;
        Ok(Self {
            weight: Param::new(format!("{name}.weight"), weight),
            bias: Param::new(format!("{name}.bias"), bias),
        })
    }

    pub fn inputs(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn outputs(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.inputs() {
            return Err(Error::Shape(format!(
                "linear expects {} inputs, got {}",
                self.inputs(),
                x.len()
            )));
        }
        let w = self.weight.value.data();
        Ok(self
            .bias
            .value
            .data()
            .iter()
            .enumerate()
            .map(|(o, b)| b + dot(&w[o * x.len()..(o + 1) * x.len()], x))
            .collect())
    }

    /// Accumulates gradients; returns the gradient w.r.t. `x`.
    pub fn backward(&mut self, x: &[f64], grad_out: &[f64]) -> Result<Vec<f64>> {
        let n = self.inputs();
        if grad_out.len() != self.outputs() || x.len() != n {
            return Err(Error::Shape("linear backward shape mismatch".into()));
        }
        let gw = self.weight.grad.data_mut();
        for (o, &g) in grad_out.iter().enumerate() {
            for (acc, xi) in gw[o * n..(o + 1) * n].iter_mut().zip(x) {
                *acc += g * xi;
            }
        }
        for (acc, g) in self.bias.grad.data_mut().iter_mut().zip(grad_out) {
            *acc += g;
        }
        let w = self.weight.value.data();
        let mut gx = vec![0.0; n];
        for (o, &g) in grad_out.iter().enumerate() {
            for (acc, wi) in gx.iter_mut().zip(&w[o * n..(o + 1) * n]) {
                *acc += g * wi;
            }
        }
        Ok(gx)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the loop vectorize.
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * k + l] * b[4 * k + l];
        }
    }
    let mut tail = 0.0;
    for k in chunks * 4..a.len() {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_hand_product() {
        let id = Linear::from_parts(
            "l",
            Tensor::from_vec(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            Tensor::zeros(&[2]),
        )
        .unwrap();
        assert_eq!(id.forward(&[3.5, -2.0]).unwrap(), vec![3.5, -2.0]);
        let l = Linear::from_parts(
            "l",
            Tensor::from_vec(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap(),
            Tensor::from_vec(&[2], vec![0.0, 1.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(l.forward(&[1.0, 1.0]).unwrap(), vec![3.0, 8.0]);
        assert!(matches!(l.forward(&[1.0]), Err(Error::Shape(_))));
    }
}
