//! 3x3 "same" convolution and 2x2 max pooling over `[channels, height, width]` images.

use rand::Rng;

use super::gemm::{gemm, View};
use super::tensor::{Param, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    /// `[out, in, k, k]`, odd `k`, zero padding `k/2`.
    pub weight: Param,
    pub bias: Param,
}

#[derive(Debug, Clone)]
pub struct Conv2dCache {
    col: Vec<f64>,
    height: usize,
    width: usize,
}

impl Conv2d {
    pub fn new(name: &str, in_channels: usize, out_channels: usize, kernel: usize, rng: &mut impl Rng) -> Self {
        assert!(kernel % 2 == 1, "kernel must be odd");
        let std = 1.0 / ((in_channels * kernel * kernel) as f64).sqrt();
        Self {
            weight: Param::new(
                format!("{name}.weight"),
                Tensor::randn(&[out_channels, in_channels, kernel, kernel], std, rng),
            ),
            bias: Param::new(format!("{name}.bias"), Tensor::zeros(&[out_channels])),
        }
    }

    fn dims(&self) -> (usize, usize, usize) {
        let s = self.weight.value.shape();
        (s[0], s[1], s[2])
    }

    fn im2col(&self, x: &[f64], c_in: usize, h: usize, w: usize) -> Vec<f64> {
        let k = self.dims().2;
        let pad = (k / 2) as isize;
        let hw = h * w;
        let mut col = vec![0.0; c_in * k * k * hw];
        for i in 0..c_in {
            for ky in 0..k {
                for kx in 0..k {
                    let row = (i * k + ky) * k + kx;
                    let dst = &mut col[row * hw..(row + 1) * hw];
                    for y in 0..h {
                        let sy = y as isize + ky as isize - pad;
                        if sy < 0 || sy >= h as isize {
                            continue;
                        }
                        for xx in 0..w {
                            let sx = xx as isize + kx as isize - pad;
                            if sx >= 0 && sx < w as isize {
                                dst[y * w + xx] = x[(i * h + sy as usize) * w + sx as usize];
                            }
                        }
                    }
                }
            }
        }
        col
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, Conv2dCache)> {
        x.expect_rank("conv2d input", 3)?;
        let (c_out, c_in, k) = self.dims();
        let (ci, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        if ci != c_in {
            return Err(Error::Shape(format!("conv2d expects {c_in} channels, got {ci}")));
        }
        let col = self.im2col(x.data(), c_in, h, w);
        let hw = h * w;
        let mut out = vec![0.0; c_out * hw];
        for (o, row) in out.chunks_exact_mut(hw).enumerate() {
            row.fill(self.bias.value.data()[o]);
        }
        let rows = c_in * k * k;
        gemm(
            1.0,
            View::row_major(self.weight.value.data(), c_out, rows),
            View::row_major(&col, rows, hw),
            1.0,
            &mut out,
        );
        Ok((
            Tensor::from_vec(&[c_out, h, w], out)?,
            Conv2dCache { col, height: h, width: w },
        ))
    }

    pub fn backward(&mut self, cache: &Conv2dCache, grad_out: &Tensor) -> Result<Tensor> {
        let (c_out, c_in, k) = self.dims();
        let (h, w) = (cache.height, cache.width);
        grad_out.expect_shape("conv2d grad_out", &[c_out, h, w])?;
        let hw = h * w;
        let rows = c_in * k * k;
        let gy = grad_out.data();
        gemm(
            1.0,
            View::row_major(gy, c_out, hw),
            View::row_major(&cache.col, rows, hw).t(),
            1.0,
            self.weight.grad.data_mut(),
        );
        for (o, g) in self.bias.grad.data_mut().iter_mut().enumerate() {
            *g += gy[o * hw..(o + 1) * hw].iter().sum::<f64>();
        }
        let mut gcol = vec![0.0; rows * hw];
        gemm(
            1.0,
            View::row_major(self.weight.value.data(), c_out, rows).t(),
            View::row_major(gy, c_out, hw),
            0.0,
            &mut gcol,
        );
        let pad = (k / 2) as isize;
        let mut gx = vec![0.0; c_in * hw];
        for i in 0..c_in {
            for ky in 0..k {
                for kx in 0..k {
                    let row = (i * k + ky) * k + kx;
                    let src = &gcol[row * hw..(row + 1) * hw];
                    for y in 0..h {
                        let sy = y as isize + ky as isize - pad;
                        if sy < 0 || sy >= h as isize {
                            continue;
                        }
                        for xx in 0..w {
                            let sx = xx as isize + kx as isize - pad;
                            if sx >= 0 && sx < w as isize {
                                gx[(i * h + sy as usize) * w + sx as usize] += src[y * w + xx];
                            }
                        }
                    }
                }
            }
        }
        Tensor::from_vec(&[c_in, h, w], gx)
    }
}

/// 2x2 max pooling with stride 2; trailing odd rows/columns are dropped.
#[derive(Debug, Clone)]
pub struct MaxPoolCache {
    argmax: Vec<usize>,
    input_shape: [usize; 3],
}

pub fn max_pool2x2(x: &Tensor) -> Result<(Tensor, MaxPoolCache)> {
    x.expect_rank("max_pool input", 3)?;
    let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (oh, ow) = (h / 2, w / 2);
    if oh == 0 || ow == 0 {
        return Err(Error::Shape(format!("max_pool input {:?} too small", x.shape())));
    }
    let xd = x.data();
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut argmax = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for y in 0..oh {
            for xx in 0..ow {
                let mut best = (ch * h + 2 * y) * w + 2 * xx;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = (ch * h + 2 * y + dy) * w + 2 * xx + dx;
                    if xd[idx] > xd[best] {
                        best = idx;
                    }
                }
                out.push(xd[best]);
                argmax.push(best);
            }
        }
    }
    Ok((
        Tensor::from_vec(&[c, oh, ow], out)?,
        MaxPoolCache { argmax, input_shape: [c, h, w] },
    ))
}

pub fn max_pool2x2_backward(cache: &MaxPoolCache, grad_out: &Tensor) -> Result<Tensor> {
    if grad_out.len() != cache.argmax.len() {
        return Err(Error::Shape("max_pool grad_out size mismatch".into()));
    }
    let mut gx = Tensor::zeros(&cache.input_shape);
    let g = gx.data_mut();
    for (&idx, &v) in cache.argmax.iter().zip(grad_out.data()) {
        g[idx] += v;
    }
    Ok(gx)
}
