//! Dilated causal 1-D convolution over `[channels, time]` tensors.
//!
//! `out[o, t] = b[o] + sum_{i, j} w[o, i, j] * x[i, t + j*d - (k-1)*d]`, with the input
//! zero-padded on the left so the output keeps the input length and never reads the future.

use rand::Rng;

use super::gemm::{gemm, View};
use super::tensor::{Param, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DilatedConv1d {
    /// `[out_channels, in_channels, kernel]`
    pub weight: Param,
    /// `[out_channels]`
    pub bias: Param,
    pub dilation: usize,
}

/// Forward state needed by the backward pass.
#[derive(Debug, Clone)]
pub struct Conv1dCache {
    col: Vec<f64>,
    time: usize,
}

impl DilatedConv1d {
    /// LeCun-normal weights (std = 1/sqrt(fan_in)), zero bias.
    pub fn new(
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        dilation: usize,
        rng: &mut impl Rng,
    ) -> Self {
        assert!(kernel >= 1 && dilation >= 1);
        let std = 1.0 / ((in_channels * kernel) as f64).sqrt();
        Self {
            weight: Param::new(
                format!("{name}.weight"),
                Tensor::randn(&[out_channels, in_channels, kernel], std, rng),
            ),
            bias: Param::new(format!("{name}.bias"), Tensor::zeros(&[out_channels])),
            dilation,
        }
    }

    pub fn from_kernel(name: &str, kernel: Tensor, dilation: usize) -> Result<Self> {
        kernel.expect_rank("conv1d kernel", 3)?;
        if dilation == 0 || kernel.shape()[2] == 0 {
            return Err(Error::Shape("dilation and kernel size must be at least 1".into()));
        }
        let out = kernel.shape()[0];
        Ok(Self {
            weight: Param::new(format!("{name}.weight"), kernel),
            bias: Param::new(format!("{name}.bias"), Tensor::zeros(&[out])),
            dilation,
        })
    }

    pub fn in_channels(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn kernel(&self) -> usize {
        self.weight.value.shape()[2]
    }

    fn tap_shift(&self, j: usize) -> usize {
        (self.kernel() - 1 - j) * self.dilation
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, Conv1dCache)> {
        x.expect_rank("conv1d input", 2)?;
        let (c_in, time) = (x.shape()[0], x.shape()[1]);
        if c_in != self.in_channels() {
            return Err(Error::Shape(format!(
                "conv1d expects {} input channels, got {c_in}",
                self.in_channels()
            )));
        }
        let k = self.kernel();
        let rows = c_in * k;
        let xd = x.data();
        // Row (i, j) holds channel i delayed by tap j's shift, zero-filled on the left.
        let mut col = Vec::with_capacity(rows * time);
        for i in 0..c_in {
            let src = &xd[i * time..(i + 1) * time];
            for j in 0..k {
                let shift = self.tap_shift(j).min(time);
                col.extend(std::iter::repeat_n(0.0, shift));
                col.extend_from_slice(&src[..time - shift]);
            }
        }
        let c_out = self.out_channels();
        let bias = self.bias.value.data();
        let mut out: Vec<f64> = (0..c_out).flat_map(|o| std::iter::repeat_n(bias[o], time)).collect();
        gemm(
            1.0,
            View::row_major(self.weight.value.data(), c_out, rows),
            View::row_major(&col, rows, time),
            1.0,
            &mut out,
        );
        Ok((Tensor::from_vec(&[c_out, time], out)?, Conv1dCache { col, time }))
    }

    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        self.forward(x).map(|(y, _)| y)
    }

    /// Accumulates weight and bias gradients; returns the gradient w.r.t. the input.
    pub fn backward(&mut self, cache: &Conv1dCache, grad_out: &Tensor) -> Result<Tensor> {
        let (c_out, c_in, k, time) = (self.out_channels(), self.in_channels(), self.kernel(), cache.time);
        grad_out.expect_shape("conv1d grad_out", &[c_out, time])?;
        let rows = c_in * k;
        let gy = grad_out.data();
        gemm(
            1.0,
            View::row_major(gy, c_out, time),
            View::row_major(&cache.col, rows, time).t(),
            1.0,
            self.weight.grad.data_mut(),
        );
        for (o, g) in self.bias.grad.data_mut().iter_mut().enumerate() {
            *g += gy[o * time..(o + 1) * time].iter().sum::<f64>();
        }
        let mut gcol = vec![0.0; rows * time];
        gemm(
            1.0,
            View::row_major(self.weight.value.data(), c_out, rows).t(),
            View::row_major(gy, c_out, time),
            0.0,
            &mut gcol,
        );
        let mut gx = vec![0.0; c_in * time];
        for i in 0..c_in {
            let dst = &mut gx[i * time..(i + 1) * time];
            for j in 0..k {
                let shift = self.tap_shift(j);
                if shift >= time {
                    continue;
                }
                let src = &gcol[(i * k + j) * time..(i * k + j + 1) * time];
                for (d, s) in dst[..time - shift].iter_mut().zip(&src[shift..]) {
                    *d += s;
                }
            }
        }
        Tensor::from_vec(&[c_in, time], gx)
    }

    /// Number of past samples (including the current one) that reach each output.
    pub fn receptive_field(&self) -> usize {
        (self.kernel() - 1) * self.dilation + 1
    }
}

/// Stateless form: convolves `input [C_in, T]` with `kernel [C_out, C_in, k]`, no bias.
pub fn dilated_causal_conv1d(input: &Tensor, kernel: &Tensor, dilation: usize) -> Result<Tensor> {
    DilatedConv1d::from_kernel("conv", kernel.clone(), dilation)?.infer(input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_from;

    #[test]
    fn identity_kernel_copies_input() {
        let x = Tensor::from_vec(&[2, 5], (0..10).map(|v| v as f64).collect()).unwrap();
        let kernel = Tensor::from_vec(&[2, 2, 1], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(dilated_causal_conv1d(&x, &kernel, 1).unwrap(), x);
    }

    #[test]
    fn impulse_response_lands_on_dilated_taps() {
        let (a, b, c) = (2.0, 3.0, 5.0);
        let mut x = Tensor::zeros(&[1, 20]);
        x.data_mut()[5] = 1.0;
        let kernel = Tensor::from_vec(&[1, 1, 3], vec![a, b, c]).unwrap();
        let y = dilated_causal_conv1d(&x, &kernel, 4).unwrap();
        for (t, &v) in y.data().iter().enumerate() {
            let want = match t {
                5 => c,
                9 => b,
                13 => a,
                _ => 0.0,
            };
            assert_eq!(v, want, "t={t}");
        }
    }

    #[test]
    fn future_perturbation_leaves_past_bit_identical() {
        let mut rng = rng_from(3);
        let conv = DilatedConv1d::new("c", 3, 4, 3, 2, &mut rng);
        let x = Tensor::randn(&[3, 80], 1.0, &mut rng);
        let y = conv.infer(&x).unwrap();
        let mut x2 = x.clone();
        for i in 0..3 {
            x2.data_mut()[i * 80 + 50] += 1.0;
        }
        let y2 = conv.infer(&x2).unwrap();
        for o in 0..4 {
            for t in 0..50 {
                assert_eq!(y.data()[o * 80 + t].to_bits(), y2.data()[o * 80 + t].to_bits());
            }
            assert_ne!(y.data()[o * 80 + 50], y2.data()[o * 80 + 50]);
        }
    }

    #[test]
    fn channel_mismatch_is_a_shape_error() {
        let kernel = Tensor::zeros(&[2, 3, 2]);
        let x = Tensor::zeros(&[2, 10]);
        assert!(matches!(dilated_causal_conv1d(&x, &kernel, 1), Err(Error::Shape(_))));
    }

    #[test]
    fn long_dilation_on_short_input() {
        let mut x = Tensor::zeros(&[1, 4]);
        x.data_mut()[0] = 1.0;
        let kernel = Tensor::from_vec(&[1, 1, 2], vec![7.0, 1.0]).unwrap();
        let y = dilated_causal_conv1d(&x, &kernel, 10).unwrap();
        assert_eq!(y.data(), &[1.0, 0.0, 0.0, 0.0]);
    }
}
