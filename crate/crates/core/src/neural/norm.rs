use super::tensor::{Param, Tensor};
use crate::error::Result;

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Layer normalization across channels, independently at every time step of a
/// `[channels, time]` tensor, followed by a per-channel affine map.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gain: Param,
    pub beta: Param,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct LayerNormCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
}

impl LayerNorm {
    pub fn new(name: &str, channels: usize) -> Self {
        let mut gain = Tensor::zeros(&[channels]);
        gain.fill(1.0);
        Self {
            gain: Param::new(format!("{name}.gain"), gain),
            beta: Param::new(format!("{name}.beta"), Tensor::zeros(&[channels])),
            eps: LAYER_NORM_EPS,
        }
    }

    pub fn channels(&self) -> usize {
        self.gain.value.len()
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, LayerNormCache)> {
        x.expect_rank("layer_norm input", 2)?;
        let c = self.channels();
        x.expect_shape("layer_norm input", &[c, x.shape()[1]])?;
        let time = x.shape()[1];
        let xd = x.data();
        let (gain, beta) = (self.gain.value.data(), self.beta.value.data());
        let mut xhat = vec![0.0; c * time];
        let mut inv_std = vec![0.0; time];
        let mut out = vec![0.0; c * time];
        let mut mean = vec![0.0; time];
        let mut var = vec![0.0; time];
        for ch in 0..c {
            for (m, v) in mean.iter_mut().zip(&xd[ch * time..(ch + 1) * time]) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= c as f64);
        for ch in 0..c {
            for ((s, v), m) in var.iter_mut().zip(&xd[ch * time..(ch + 1) * time]).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for (is, v) in inv_std.iter_mut().zip(&var) {
            *is = 1.0 / (v / c as f64 + self.eps).sqrt();
        }
        for ch in 0..c {
            let range = ch * time..(ch + 1) * time;
            for t in 0..time {
                let h = (xd[range.start + t] - mean[t]) * inv_std[t];
                xhat[range.start + t] = h;
                out[range.start + t] = gain[ch] * h + beta[ch];
            }
        }
        Ok((Tensor::from_vec(&[c, time], out)?, LayerNormCache { xhat, inv_std }))
    }

    pub fn backward(&mut self, cache: &LayerNormCache, grad_out: &Tensor) -> Result<Tensor> {
        let c = self.channels();
        let time = cache.inv_std.len();
        grad_out.expect_shape("layer_norm grad_out", &[c, time])?;
        let gy = grad_out.data();
        let gain = self.gain.value.data().to_vec();
        {
            let gg = self.gain.grad.data_mut();
            for ch in 0..c {
                let r = ch * time..(ch + 1) * time;
                gg[ch] += gy[r.clone()].iter().zip(&cache.xhat[r]).map(|(g, h)| g * h).sum::<f64>();
            }
        }
        {
            let gb = self.beta.grad.data_mut();
            for ch in 0..c {
                gb[ch] += gy[ch * time..(ch + 1) * time].iter().sum::<f64>();
            }
        }
        // dx = inv_std / C * (C * dxhat - sum(dxhat) - xhat * sum(dxhat * xhat))
        let mut sum_d = vec![0.0; time];
        let mut sum_dh = vec![0.0; time];
        for ch in 0..c {
            for t in 0..time {
                let i = ch * time + t;
                let d = gy[i] * gain[ch];
                sum_d[t] += d;
                sum_dh[t] += d * cache.xhat[i];
            }
        }
        let n = c as f64;
        let mut gx = vec![0.0; c * time];
        for ch in 0..c {
            for t in 0..time {
                let i = ch * time + t;
                let d = gy[i] * gain[ch];
                gx[i] = cache.inv_std[t] / n * (n * d - sum_d[t] - cache.xhat[i] * sum_dh[t]);
            }
        }
        Tensor::from_vec(&[c, time], gx)
    }
}

/// Normalizes a single feature vector (one time step).
pub fn layer_norm(x: &[f64], gain: &[f64], beta: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
    x.iter()
        .zip(gain.iter().zip(beta))
        .map(|(v, (g, b))| g * (v - mean) * inv + b)
        .collect()
}
