pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;
pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_3;

pub fn selu(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA * x
    } else {
        SELU_LAMBDA * SELU_ALPHA * (x.exp() - 1.0)
    }
}

pub fn selu_grad(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp()
    }
}

pub fn selu_forward(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| selu(v)).collect()
}

/// Gradient w.r.t. the input given the forward input and upstream gradient.
pub fn selu_backward(input: &[f64], grad_out: &[f64]) -> Vec<f64> {
    input.iter().zip(grad_out).map(|(&x, &g)| g * selu_grad(x)).collect()
}
