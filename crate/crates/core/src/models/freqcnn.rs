//! CNN over per-channel magnitude spectra.
//!
//! Input image: `[1, 6, T/2 + 1]`, row `c` holding `|DFT(x_c - mean(x_c))|` scaled by
//! `1 / (input_scale * sqrt(T))`. Two conv(3×3, same) → SELU → maxpool(2×2) stages, then
//! FC → SELU → linear.

use rand_chacha::ChaCha8Rng;

use super::psd::{remove_mean, rfft};
use super::{argmax_label, expect_rows, two, Classifier, Trainable, TrainingMeta};
use crate::error::{Error, Result};
use crate::neural::{
    max_pool2x2, max_pool2x2_backward, selu_backward, selu_forward, softmax, softmax_cross_entropy, Conv2d,
    Linear, Param, Parameterized, Tensor,
};
use crate::sensor::{ClassLabel, PressureRow, CHANNELS};

#[derive(Debug, Clone, PartialEq)]
pub struct FreqCnnArchitecture {
    pub window_len: usize,
    pub filters: [usize; 2],
    pub kernel: usize,
    pub hidden: usize,
    pub input_scale: f64,
}

impl Default for FreqCnnArchitecture {
    fn default() -> Self {
        Self::with_window(100)
    }
}

impl FreqCnnArchitecture {
    pub fn with_window(window_len: usize) -> Self {
        Self {
            window_len,
            filters: [16, 32],
            kernel: 3,
            hidden: 64,
            input_scale: super::tcn::DEFAULT_INPUT_SCALE,
        }
    }

    pub fn bins(&self) -> usize {
        self.window_len / 2 + 1
    }

    /// `(height, width)` after both pooling stages.
    pub fn pooled_dims(&self) -> (usize, usize) {
        (CHANNELS / 4, self.bins() / 4)
    }

    pub fn flat_len(&self) -> usize {
        let (h, w) = self.pooled_dims();
        self.filters[1] * h * w
    }

    pub fn validate(&self) -> Result<()> {
        let bins = self.bins();
        if self.window_len < 6 || bins / 2 / 2 == 0 {
            return Err(Error::Config(format!(
                "window_len {} too short for two pooling stages",
                self.window_len
            )));
        }
        if self.filters.contains(&0) || self.hidden == 0 || self.kernel % 2 == 0 {
            return Err(Error::Config("filters/hidden must be >= 1 and kernel odd".into()));
        }
        if !(self.input_scale.is_finite() && self.input_scale > 0.0) {
            return Err(Error::Config("input_scale must be positive".into()));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        let k2 = self.kernel * self.kernel;
        let [f1, f2] = self.filters;
        (f1 * k2 + f1) + (f2 * f1 * k2 + f2) + (self.flat_len() * self.hidden + self.hidden) + (self.hidden * 2 + 2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreqCnnModel {
    pub arch: FreqCnnArchitecture,
    conv1: Conv2d,
    conv2: Conv2d,
    fc: Linear,
    out: Linear,
    pub meta: TrainingMeta,
}

impl FreqCnnModel {
    pub fn new(arch: FreqCnnArchitecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = crate::rng_from(seed);
        let [f1, f2] = arch.filters;
        Ok(Self {
            conv1: Conv2d::new("conv1", 1, f1, arch.kernel, &mut rng),
            conv2: Conv2d::new("conv2", f1, f2, arch.kernel, &mut rng),
            fc: Linear::new("fc", arch.flat_len(), arch.hidden, &mut rng),
            out: Linear::new("out", arch.hidden, 2, &mut rng),
            arch,
            meta: TrainingMeta::default(),
        })
    }

    /// The `[1, 6, T/2 + 1]` magnitude image.
    pub fn spectrum_image(&self, rows: &[PressureRow]) -> Result<Tensor> {
        expect_rows(rows, self.arch.window_len, "frequency CNN")?;
        let t = rows.len();
        let scale = 1.0 / (self.arch.input_scale * (t as f64).sqrt());
        let bins = self.arch.bins();
        let mut data = Vec::with_capacity(CHANNELS * bins);
        for c in 0..CHANNELS {
            let ch: Vec<f64> = rows.iter().map(|r| r[c]).collect();
            data.extend(rfft(&remove_mean(&ch)).iter().map(|z| z.norm() * scale));
        }
        Tensor::from_vec(&[1, CHANNELS, bins], data)
    }

    fn run(&self, image: &Tensor, train: bool) -> Result<(Vec<f64>, Option<Cache>)> {
        let (h1, c1) = self.conv1.forward(image)?;
        let shape1 = h1.shape().to_vec();
        let pre1 = h1.into_vec();
        let (p1, pool1) = max_pool2x2(&Tensor::from_vec(&shape1, selu_forward(&pre1))?)?;
        let (h2, c2) = self.conv2.forward(&p1)?;
        let shape2 = h2.shape().to_vec();
        let pre2 = h2.into_vec();
        let (p2, pool2) = max_pool2x2(&Tensor::from_vec(&shape2, selu_forward(&pre2))?)?;
        let pooled_shape = p2.shape().to_vec();
        let flat = p2.into_vec();
        let pre3 = self.fc.forward(&flat)?;
        let h3 = selu_forward(&pre3);
        let logits = self.out.forward(&h3)?;
        let cache = train.then(|| Cache {
            c1,
            shape1,
            pre1,
            pool1,
            c2,
            shape2,
            pre2,
            pool2,
            pooled_shape,
            flat,
            pre3,
            h3,
        });
        Ok((logits, cache))
    }

    pub fn logits_from_image(&self, image: &Tensor) -> Result<[f64; 2]> {
        image.expect_shape("frequency CNN image", &[1, CHANNELS, self.arch.bins()])?;
        Ok(two(&self.run(image, false)?.0))
    }

    pub fn logits(&self, rows: &[PressureRow]) -> Result<[f64; 2]> {
        self.logits_from_image(&self.spectrum_image(rows)?)
    }

    pub fn probabilities(&self, rows: &[PressureRow]) -> Result<[f64; 2]> {
        Ok(two(&softmax(&self.logits(rows)?)))
    }

    pub fn forward_backward(&mut self, image: &Tensor, target: ClassLabel) -> Result<(f64, [f64; 2])> {
        image.expect_shape("frequency CNN image", &[1, CHANNELS, self.arch.bins()])?;
        let (logits, cache) = self.run(image, true)?;
        let c = cache.expect("training run keeps its cache");
        let (loss, g) = softmax_cross_entropy(&logits, target);
        let g = self.out.backward(&c.h3, &g)?;
        let g = selu_backward(&c.pre3, &g);
        let g = self.fc.backward(&c.flat, &g)?;
        let g = max_pool2x2_backward(&c.pool2, &Tensor::from_vec(&c.pooled_shape, g)?)?;
        let g = Tensor::from_vec(&c.shape2, selu_backward(&c.pre2, g.data()))?;
        let g = self.conv2.backward(&c.c2, &g)?;
        let g = max_pool2x2_backward(&c.pool1, &g)?;
        let g = Tensor::from_vec(&c.shape1, selu_backward(&c.pre1, g.data()))?;
        self.conv1.backward(&c.c1, &g)?;
        Ok((loss, two(&logits)))
    }
}

struct Cache {
    c1: crate::neural::Conv2dCache,
    shape1: Vec<usize>,
    pre1: Vec<f64>,
    pool1: crate::neural::MaxPoolCache,
    c2: crate::neural::Conv2dCache,
    shape2: Vec<usize>,
    pre2: Vec<f64>,
    pool2: crate::neural::MaxPoolCache,
    pooled_shape: Vec<usize>,
    flat: Vec<f64>,
    pre3: Vec<f64>,
    h3: Vec<f64>,
}

impl Parameterized for FreqCnnModel {
    fn params(&self) -> Vec<&Param> {
        vec![
            &self.conv1.weight,
            &self.conv1.bias,
            &self.conv2.weight,
            &self.conv2.bias,
            &self.fc.weight,
            &self.fc.bias,
            &self.out.weight,
            &self.out.bias,
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![
            &mut self.conv1.weight,
            &mut self.conv1.bias,
            &mut self.conv2.weight,
            &mut self.conv2.bias,
            &mut self.fc.weight,
            &mut self.fc.bias,
            &mut self.out.weight,
            &mut self.out.bias,
        ]
    }
}

impl Classifier for FreqCnnModel {
    fn window_len(&self) -> usize {
        self.arch.window_len
    }

    fn classify(&self, rows: &[PressureRow]) -> Result<ClassLabel> {
        Ok(argmax_label(&self.probabilities(rows)?))
    }
}

impl Trainable for FreqCnnModel {
    fn accumulate_gradients(&mut self, rows: &[PressureRow], target: ClassLabel, _rng: &mut ChaCha8Rng) -> Result<(f64, [f64; 2])> {
        let image = self.spectrum_image(rows)?;
        self.forward_backward(&image, target)
    }

    fn meta_mut(&mut self) -> &mut TrainingMeta {
        &mut self.meta
    }
}
