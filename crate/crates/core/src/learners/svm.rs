//! Linear soft-margin SVM trained by deterministic full-batch sub-gradient
//! descent on the hinge loss.
//!
//! The objective is `lambda/2 |w|^2 + mean(max(0, 1 - y (w.x + b)))` with
//! `lambda = 1 / (C n)`, i.e. the usual `1/2 |w|^2 + C sum(hinge)` scaled by
//! `1 / (C n)`. Probabilities come from a fixed-scale sigmoid of the margin.

use serde::{Deserialize, Serialize};

use super::{sigmoid, Dataset, ProbDist};
use crate::corpus::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub c: f64,
    pub max_iter: usize,
    /// Step size at iteration t is `eta0 / sqrt(t)`.
    pub eta0: f64,
    /// Slope of the sigmoid mapping margins to probabilities.
    pub prob_scale: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            max_iter: 500,
            eta0: 0.5,
            prob_scale: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub prob_scale: f64,
}

impl LinearSvm {
    pub fn margin(&self, x: &SparseVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    pub fn predict_proba(&self, x: &SparseVector) -> ProbDist {
        ProbDist::binary(sigmoid(self.prob_scale * self.margin(x)))
    }
}

pub fn fit(data: &Dataset<'_>, params: &SvmParams) -> LinearSvm {
    let n = data.len() as f64;
    let lambda = 1.0 / (params.c * n);
    let mut model = LinearSvm {
        weights: vec![0.0; data.n_features()],
        bias: 0.0,
        prob_scale: params.prob_scale,
    };
    let mut grad = vec![0.0; data.n_features()];
    for t in 1..=params.max_iter {
        for (g, w) in grad.iter_mut().zip(&model.weights) {
            *g = lambda * w;
        }
        let mut grad_bias = 0.0;
        for (x, y) in data.iter() {
            let s = if y == 1 { 1.0 } else { -1.0 };
            if s * model.margin(x) < 1.0 {
                for &(j, v) in x.pairs() {
                    grad[j] -= s * v / n;
                }
                grad_bias -= s / n;
            }
        }
        let eta = params.eta0 / (t as f64).sqrt();
        for (w, g) in model.weights.iter_mut().zip(&grad) {
            *w -= eta * g;
        }
        model.bias -= eta * grad_bias;
    }
    model
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;

    #[test]
    fn margins_have_the_right_sign() {
        let rows: Vec<(SparseVector, Label)> = vec![
            (SparseVector::from_pairs([(0, 1.0)]), 1),
            (SparseVector::from_pairs([(0, 2.0)]), 1),
            (SparseVector::from_pairs([(1, 1.0)]), 0),
            (SparseVector::from_pairs([(1, 2.0)]), 0),
        ];
        let data = Dataset::from_pairs(&rows, 2).unwrap();
        let m = fit(&data, &SvmParams::default());
        for (x, y) in data.iter() {
            assert_eq!(m.margin(x) > 0.0, y == 1);
        }
        let p = m.predict_proba(&SparseVector::from_pairs([(0, 1.0)]));
        assert!(p.probs()[1] > 0.5);
    }
}
