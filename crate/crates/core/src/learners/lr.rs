//! L2-regularized logistic regression trained by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use super::{sigmoid, Dataset, ProbDist};
use crate::corpus::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LrParams {
    pub max_iter: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for LrParams {
    fn default() -> Self {
        LrParams {
            max_iter: 500,
            learning_rate: 0.1,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn zeros(n_features: usize) -> Self {
        LogisticModel {
            weights: vec![0.0; n_features],
            bias: 0.0,
        }
    }

    pub fn score(&self, x: &SparseVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    pub fn predict_proba(&self, x: &SparseVector) -> ProbDist {
        ProbDist::binary(sigmoid(self.score(x)))
    }
}

/// Numerically stable `ln(1 + e^z)`.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub grad_weights: Vec<f64>,
    pub grad_bias: f64,
}

/// Mean log-loss plus `l2 / 2 * |w|^2` (bias unpenalized), with its gradient.
pub fn loss_and_grad(model: &LogisticModel, data: &Dataset<'_>, l2: f64) -> LossGrad {
    let n = data.len() as f64;
    let mut grad_weights: Vec<f64> = model.weights.iter().map(|w| l2 * w).collect();
    let mut grad_bias = 0.0;
    let mut loss = 0.0;
    for (x, y) in data.iter() {
        let z = model.score(x);
        // -[y ln s + (1-y) ln(1-s)] = softplus(z) - y z
        loss += softplus(z) - f64::from(y) * z;
        let r = (sigmoid(z) - f64::from(y)) / n;
        for &(j, v) in x.pairs() {
            grad_weights[j] += r * v;
        }
        grad_bias += r;
    }
    let penalty: f64 = model.weights.iter().map(|w| w * w).sum::<f64>() * l2 / 2.0;
    LossGrad {
        loss: loss / n + penalty,
        grad_weights,
        grad_bias,
    }
}

pub fn fit(data: &Dataset<'_>, params: &LrParams) -> LogisticModel {
    let mut model = LogisticModel::zeros(data.n_features());
    for _ in 0..params.max_iter {
        let g = loss_and_grad(&model, data, params.l2);
        for (w, gw) in model.weights.iter_mut().zip(&g.grad_weights) {
            *w -= params.learning_rate * gw;
        }
        model.bias -= params.learning_rate * g.grad_bias;
    }
    model
}
