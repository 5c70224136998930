//! Central finite-difference gradient checks.

use baroslip::neural::{
    max_pool2x2, max_pool2x2_backward, selu_backward, selu_forward, softmax_cross_entropy, Conv2d, DilatedConv1d,
    Dropout, LayerNorm, Linear, Parameterized, Tensor,
};
use baroslip::models::{FreqCnnArchitecture, FreqCnnModel, TcnArchitecture, TcnLevel, TcnModel, Trainable};
use baroslip::sensor::PressureRow;
use baroslip::ClassLabel;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-4;
pub const MAX_REL_ERR: f64 = 1e-4;
/// Coordinates probed per tensor (all of them when the tensor is smaller).
pub const COORDS: usize = 100;
/// Floor on the relative-error denominator, so gradients that are zero to rounding compare
/// by absolute difference instead of dividing noise by noise.
pub const DENOM_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub tensors: usize,
    pub coords: usize,
    pub worst: f64,
    pub worst_at: String,
    pub failures: Vec<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn merge(&mut self, other: Report) {
        self.tensors += other.tensors;
        self.coords += other.coords;
        if other.worst > self.worst {
            self.worst = other.worst;
            self.worst_at = other.worst_at;
        }
        self.failures.extend(other.failures);
    }
}

pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(DENOM_FLOOR)
}

/// Probes one tensor: `analytic[i]` against the central difference of `eval(i, delta)`, the
/// loss with coordinate `i` shifted by `delta`.
pub fn check_tensor(
    name: &str,
    analytic: &[f64],
    rng: &mut ChaCha8Rng,
    mut eval: impl FnMut(usize, f64) -> f64,
) -> Report {
    let n = analytic.len();
    let coords: Vec<usize> = if n <= COORDS { (0..n).collect() } else { sample(rng, n, COORDS).into_vec() };
    let mut r = Report {
        tensors: 1,
        coords: coords.len(),
        ..Report::default()
    };
    for i in coords {
        let numeric = (eval(i, STEP) - eval(i, -STEP)) / (2.0 * STEP);
        let e = rel_err(analytic[i], numeric);
        if e > r.worst {
            r.worst = e;
            r.worst_at = format!("{name}[{i}]");
        }
        if !(e <= MAX_REL_ERR) {
            r.failures.push(format!("{name}[{i}]: analytic {} numeric {numeric} rel {e:.3e}", analytic[i]));
        }
    }
    r
}

fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn shifted(t: &Tensor, i: usize, d: f64) -> Tensor {
    let mut t = t.clone();
    t.data_mut()[i] += d;
    t
}

/// Every parameter tensor of a model; `loss` must recompute the same forward the analytic
/// gradients came from.
pub fn check_model<M: Parameterized>(label: &str, model: &mut M, rng: &mut ChaCha8Rng, loss: impl Fn(&M) -> f64) -> Report {
    let grads: Vec<(String, Vec<f64>)> =
        model.params().iter().map(|p| (p.name.clone(), p.grad.data().to_vec())).collect();
    let mut total = Report::default();
    for (k, (name, g)) in grads.iter().enumerate() {
        let r = check_tensor(&format!("{label}/{name}"), g, rng, |i, d| {
            model.params_mut()[k].value.data_mut()[i] += d;
            let l = loss(model);
            model.params_mut()[k].value.data_mut()[i] -= d;
            l
        });
        total.merge(r);
    }
    total
}

pub fn conv1d(rng: &mut ChaCha8Rng) -> Report {
    let mut layer = DilatedConv1d::new("conv1d", 3, 4, 3, 2, rng);
    layer.bias.value = Tensor::randn(&[4], 0.5, rng);
    let x = Tensor::randn(&[3, 20], 1.0, rng);
    let w = weights(rng, 4 * 20);
    let loss = |l: &DilatedConv1d, x: &Tensor| dot(l.forward(x).unwrap().0.data(), &w);
    let (_, cache) = layer.forward(&x).unwrap();
    let gx = layer.backward(&cache, &Tensor::from_vec(&[4, 20], w.clone()).unwrap()).unwrap();
    let mut r = check_tensor("conv1d/input", gx.data(), rng, |i, d| loss(&layer, &shifted(&x, i, d)));
    let (gw, gb) = (layer.weight.grad.data().to_vec(), layer.bias.grad.data().to_vec());
    let mut probe = layer.clone();
    r.merge(check_tensor("conv1d/weight", &gw, rng, |i, d| {
        probe.weight.value.data_mut()[i] += d;
        let l = loss(&probe, &x);
        probe.weight.value.data_mut()[i] -= d;
        l
    }));
    r.merge(check_tensor("conv1d/bias", &gb, rng, |i, d| {
        probe.bias.value.data_mut()[i] += d;
        let l = loss(&probe, &x);
        probe.bias.value.data_mut()[i] -= d;
        l
    }));
    r
}

pub fn layer_norm(rng: &mut ChaCha8Rng) -> Report {
    let mut ln = LayerNorm::new("ln", 8);
    ln.gain.value = Tensor::randn(&[8], 1.0, rng);
    ln.beta.value = Tensor::randn(&[8], 1.0, rng);
    let x = Tensor::randn(&[8, 16], 2.0, rng);
    let w = weights(rng, 8 * 16);
    let loss = |l: &LayerNorm, x: &Tensor| dot(l.forward(x).unwrap().0.data(), &w);
    let (_, cache) = ln.forward(&x).unwrap();
    let gx = ln.backward(&cache, &Tensor::from_vec(&[8, 16], w.clone()).unwrap()).unwrap();
    let mut r = check_tensor("layer_norm/input", gx.data(), rng, |i, d| loss(&ln, &shifted(&x, i, d)));
    let (gg, gb) = (ln.gain.grad.data().to_vec(), ln.beta.grad.data().to_vec());
    let mut probe = ln.clone();
    r.merge(check_tensor("layer_norm/gain", &gg, rng, |i, d| {
        probe.gain.value.data_mut()[i] += d;
        let l = loss(&probe, &x);
        probe.gain.value.data_mut()[i] -= d;
        l
    }));
    r.merge(check_tensor("layer_norm/beta", &gb, rng, |i, d| {
        probe.beta.value.data_mut()[i] += d;
        let l = loss(&probe, &x);
        probe.beta.value.data_mut()[i] -= d;
        l
    }));
    r
}

pub fn linear(rng: &mut ChaCha8Rng) -> Report {
    let mut fc = Linear::new("fc", 150, 7, rng);
    fc.bias.value = Tensor::randn(&[7], 0.5, rng);
    let x: Vec<f64> = weights(rng, 150);
    let w = weights(rng, 7);
    let loss = |l: &Linear, x: &[f64]| dot(&l.forward(x).unwrap(), &w);
    let gx = fc.backward(&x, &w).unwrap();
    let mut r = check_tensor("linear/input", &gx, rng, |i, d| {
        let mut x = x.clone();
        x[i] += d;
        loss(&fc, &x)
    });
    let (gw, gb) = (fc.weight.grad.data().to_vec(), fc.bias.grad.data().to_vec());
    let mut probe = fc.clone();
    r.merge(check_tensor("linear/weight", &gw, rng, |i, d| {
        probe.weight.value.data_mut()[i] += d;
        let l = loss(&probe, &x);
        probe.weight.value.data_mut()[i] -= d;
        l
    }));
    r.merge(check_tensor("linear/bias", &gb, rng, |i, d| {
        probe.bias.value.data_mut()[i] += d;
        let l = loss(&probe, &x);
        probe.bias.value.data_mut()[i] -= d;
        l
    }));
    r
}

/// Inputs are kept at least 0.05 away from the kink at zero.
pub fn selu(rng: &mut ChaCha8Rng) -> Report {
    let x: Vec<f64> = (0..200)
        .map(|_| {
            let m = rng.random_range(0.05..3.0);
            if rng.random::<bool>() { m } else { -m }
        })
        .collect();
    let w = weights(rng, x.len());
    let g = selu_backward(&x, &w);
    check_tensor("selu/input", &g, rng, |i, d| {
        let mut x = x.clone();
        x[i] += d;
        dot(&selu_forward(&x), &w)
    })
}

/// With the mask held fixed, dropout is linear in its input.
pub fn dropout(rng: &mut ChaCha8Rng) -> Report {
    let drop = Dropout::new(0.3);
    let x = weights(rng, 120);
    let w = weights(rng, 120);
    let seed = rng.random::<u64>();
    let forward = |x: &[f64]| {
        let mut y = x.to_vec();
        let mask = drop.forward(&mut y, &mut ChaCha8Rng::seed_from_u64(seed), true);
        (y, mask)
    };
    let (_, mask) = forward(&x);
    let mut g = w.clone();
    drop.backward(&mask, &mut g);
    check_tensor("dropout/input", &g, rng, |i, d| {
        let mut x = x.clone();
        x[i] += d;
        dot(&forward(&x).0, &w)
    })
}

pub fn cross_entropy(rng: &mut ChaCha8Rng) -> Report {
    let mut r = Report::default();
    for target in ClassLabel::ALL {
        let z = weights(rng, 2).iter().map(|v| v * 4.0).collect::<Vec<_>>();
        let (_, g) = softmax_cross_entropy(&z, target);
        r.merge(check_tensor(&format!("cross_entropy/{target}"), &g, rng, |i, d| {
            let mut z = z.clone();
            z[i] += d;
            softmax_cross_entropy(&z, target).0
        }));
    }
    r
}

pub fn conv2d(rng: &mut ChaCha8Rng) -> Report {
    let mut conv = Conv2d::new("conv2d", 2, 3, 3, rng);
    conv.bias.value = Tensor::randn(&[3], 0.5, rng);
    let x = Tensor::randn(&[2, 6, 9], 1.0, rng);
    let w = weights(rng, 3 * 6 * 9);
    let loss = |c: &Conv2d, x: &Tensor| dot(c.forward(x).unwrap().0.data(), &w);
    let (_, cache) = conv.forward(&x).unwrap();
    let gx = conv.backward(&cache, &Tensor::from_vec(&[3, 6, 9], w.clone()).unwrap()).unwrap();
    let mut r = check_tensor("conv2d/input", gx.data(), rng, |i, d| loss(&conv, &shifted(&x, i, d)));
    let (gw, gb) = (conv.weight.grad.data().to_vec(), conv.bias.grad.data().to_vec());
    let mut probe = conv.clone();
    r.merge(check_tensor("conv2d/weight", &gw, rng, |i, d| {
        probe.weight.value.data_mut()[i] += d;
        let l = loss(&probe, &x);
        probe.weight.value.data_mut()[i] -= d;
        l
    }));
    r.merge(check_tensor("conv2d/bias", &gb, rng, |i, d| {
        probe.bias.value.data_mut()[i] += d;
        let l = loss(&probe, &x);
        probe.bias.value.data_mut()[i] -= d;
        l
    }));
    r
}

/// Input values are a shuffled grid with spacing 0.01, so no probe can change an argmax.
pub fn max_pool(rng: &mut ChaCha8Rng) -> Report {
    let n = 2 * 6 * 8;
    let mut vals: Vec<f64> = (0..n).map(|i| i as f64 * 0.01).collect();
    rand::seq::SliceRandom::shuffle(vals.as_mut_slice(), rng);
    let x = Tensor::from_vec(&[2, 6, 8], vals).unwrap();
    let w = weights(rng, 2 * 3 * 4);
    let (_, cache) = max_pool2x2(&x).unwrap();
    let gx = max_pool2x2_backward(&cache, &Tensor::from_vec(&[2, 3, 4], w.clone()).unwrap()).unwrap();
    check_tensor("max_pool/input", gx.data(), rng, |i, d| dot(max_pool2x2(&shifted(&x, i, d)).unwrap().0.data(), &w))
}

fn random_rows(rng: &mut ChaCha8Rng, t: usize) -> Vec<PressureRow> {
    (0..t).map(|_| std::array::from_fn(|_| 500.0 + 20.0 * rng.random_range(-1.0..1.0))).collect()
}

/// Whole TCN in training mode (dropout on, mask fixed by the rng seed), through the loss.
pub fn tcn(rng: &mut ChaCha8Rng, arch: TcnArchitecture) -> Report {
    let mut model = TcnModel::new(arch.clone(), rng.random()).unwrap();
    let rows = random_rows(rng, arch.window_len);
    let x = model.normalize(&rows).unwrap();
    let seed = rng.random::<u64>();
    model.zero_grad();
    model.forward_backward(&x, ClassLabel::Slip, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    check_model("tcn", &mut model, rng, |m| {
        let mut m = m.clone();
        m.forward_backward(&x, ClassLabel::Slip, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap().0
    })
}

/// A reduced TCN (two levels, short window) with the same block structure as the default.
pub fn small_tcn_arch() -> TcnArchitecture {
    TcnArchitecture {
        window_len: 20,
        levels: vec![
            TcnLevel { channels: 8, kernel: 3, dilation: 1 },
            TcnLevel { channels: 8, kernel: 3, dilation: 2 },
            TcnLevel { channels: 12, kernel: 2, dilation: 4 },
        ],
        fc_sizes: [16, 8],
        ..TcnArchitecture::with_window(20)
    }
}

pub fn freqcnn(rng: &mut ChaCha8Rng) -> Report {
    let mut model = FreqCnnModel::new(FreqCnnArchitecture::with_window(40), rng.random()).unwrap();
    let rows = random_rows(rng, 40);
    let image = model.spectrum_image(&rows).unwrap();
    model.zero_grad();
    model.forward_backward(&image, ClassLabel::Stable).unwrap();
    check_model("freqcnn", &mut model, rng, |m| {
        let mut m = m.clone();
        m.forward_backward(&image, ClassLabel::Stable).unwrap().0
    })
}

/// `Trainable` path used by the training loop, on the default-size TCN.
pub fn tcn_trainable(rng: &mut ChaCha8Rng) -> Report {
    let mut model = TcnModel::new(TcnArchitecture::default(), rng.random()).unwrap();
    let rows = random_rows(rng, 100);
    let seed = rng.random::<u64>();
    model.zero_grad();
    model.accumulate_gradients(&rows, ClassLabel::Stable, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    check_model("tcn_default", &mut model, rng, |m| {
        let mut m = m.clone();
        m.accumulate_gradients(&rows, ClassLabel::Stable, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap().0
    })
}

/// Every check above, in a fixed order from one seed.
pub fn all(seed: u64) -> Vec<(&'static str, Report)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        ("dilated_causal_conv1d", conv1d(&mut rng)),
        ("layer_norm", layer_norm(&mut rng)),
        ("linear", linear(&mut rng)),
        ("selu", selu(&mut rng)),
        ("dropout", dropout(&mut rng)),
        ("softmax_cross_entropy", cross_entropy(&mut rng)),
        ("conv2d", conv2d(&mut rng)),
        ("max_pool2x2", max_pool(&mut rng)),
        ("tcn_small", tcn(&mut rng, small_tcn_arch())),
        ("freqcnn", freqcnn(&mut rng)),
        ("tcn_default", tcn_trainable(&mut rng)),
    ]
}
