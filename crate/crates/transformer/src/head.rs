use candle_core::{Device, Module, Tensor, Var};
use candle_nn::{Linear, VarBuilder};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::TransformerError;

/// Linear map from the pooled representation to two logits
/// (index 0 = not causal, index 1 = causal).
#[derive(Debug, Clone)]
pub struct ClassificationHead {
    linear: Linear,
}

impl ClassificationHead {
    pub fn load(vb: VarBuilder, hidden_size: usize) -> Result<Self, TransformerError> {
        Ok(Self {
            linear: candle_nn::linear(hidden_size, 2, vb)?,
        })
    }

    pub fn from_weights(weight: Tensor, bias: Tensor) -> Self {
        Self {
            linear: Linear::new(weight, Some(bias)),
        }
    }

    pub fn logits(&self, pooled: &Tensor) -> Result<Tensor, TransformerError> {
        Ok(self.linear.forward(pooled)?)
    }
}

fn cross_entropy(head: &ClassificationHead, x: &Tensor, y: &Tensor) -> candle_core::Result<Tensor> {
    let logits = head.linear.forward(x)?;
    candle_nn::loss::cross_entropy(&logits, y)
}

/// Compares autograd gradients of the head's cross-entropy loss against
/// central finite differences on a random double-precision problem and
/// returns the largest relative error over all weights and biases.
pub fn head_gradient_check(
    hidden: usize,
    batch: usize,
    seed: u64,
) -> Result<f64, TransformerError> {
    let dev = Device::Cpu;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0f64, 1.0).expect("valid normal");
    let mut sample = |n: usize| {
        (0..n)
            .map(|_| normal.sample(&mut rng))
            .collect::<Vec<f64>>()
    };
    let x = Tensor::from_vec(sample(batch * hidden), (batch, hidden), &dev)?;
    let labels: Vec<u32> = (0..batch).map(|i| (i % 2) as u32).collect();
    let y = Tensor::from_vec(labels, batch, &dev)?;
    let w = Var::from_tensor(
        &Tensor::from_vec(sample(2 * hidden), (2, hidden), &dev)?.affine(0.5, 0.0)?,
    )?;
    let b = Var::from_tensor(&Tensor::from_vec(sample(2), 2, &dev)?)?;
    let head = ClassificationHead::from_weights(w.as_tensor().clone(), b.as_tensor().clone());
    let grads = cross_entropy(&head, &x, &y)?.backward()?;

    let eps = 1e-6;
    let mut worst = 0.0f64;
    for var in [&w, &b] {
        let analytic: Vec<f64> = grads
            .get(var.as_tensor())
            .ok_or_else(|| TransformerError::Config("no gradient for head parameter".into()))?
            .flatten_all()?
            .to_vec1()?;
        let base: Vec<f64> = var.as_tensor().flatten_all()?.to_vec1()?;
        let shape = var.as_tensor().shape().clone();
        for (i, g) in analytic.iter().enumerate() {
            let loss_at = |delta: f64| -> candle_core::Result<f64> {
                let mut p = base.clone();
                p[i] += delta;
                let t = Tensor::from_vec(p, shape.clone(), &dev)?;
                let probe = if std::ptr::eq(var, &w) {
                    ClassificationHead::from_weights(t, b.as_tensor().clone())
                } else {
                    ClassificationHead::from_weights(w.as_tensor().clone(), t)
                };
                cross_entropy(&probe, &x, &y)?.to_scalar::<f64>()
            };
            let numeric = (loss_at(eps)? - loss_at(-eps)?) / (2.0 * eps);
            let rel = (g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}
