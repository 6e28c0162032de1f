//! Multinomial naive Bayes with additive smoothing.

use serde::{Deserialize, Serialize};

use super::{Dataset, ProbDist};
use crate::corpus::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NbParams {
    pub alpha: f64,
}

impl Default for NbParams {
    fn default() -> Self {
        NbParams { alpha: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayes {
    /// ln P(class)
    pub log_prior: [f64; 2],
    /// ln P(token | class), one row per class
    pub log_likelihood: [Vec<f64>; 2],
}

pub fn fit(data: &Dataset<'_>, params: &NbParams) -> NaiveBayes {
    let d = data.n_features();
    let mut counts = [vec![0.0; d], vec![0.0; d]];
    let mut docs = [0usize; 2];
    for (x, y) in data.iter() {
        let c = usize::from(y);
        docs[c] += 1;
        for &(j, v) in x.pairs() {
            counts[c][j] += v;
        }
    }
    let n = data.len() as f64;
    let log_prior = [(docs[0] as f64 / n).ln(), (docs[1] as f64 / n).ln()];
    let log_likelihood = counts.map(|row| {
        let total: f64 = row.iter().sum::<f64>() + params.alpha * d as f64;
        row.iter().map(|c| ((c + params.alpha) / total).ln()).collect()
    });
    NaiveBayes {
        log_prior,
        log_likelihood,
    }
}

impl NaiveBayes {
    pub fn predict_proba(&self, x: &SparseVector) -> ProbDist {
        let joint: Vec<f64> = (0..2)
            .map(|c| self.log_prior[c] + x.dot(&self.log_likelihood[c]))
            .collect();
        let m = joint[0].max(joint[1]);
        let e: Vec<f64> = joint.iter().map(|j| (j - m).exp()).collect();
        let z: f64 = e.iter().sum();
        ProbDist::binary(e[1] / z)
    }
}
