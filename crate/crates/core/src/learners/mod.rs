//! Binary text classifiers over sparse n-gram counts.
//!
//! Every learner exposes class probabilities through [`ProbDist`], which the
//! query strategies consume. Fitting is deterministic given the seed.

pub mod forest;
pub mod lr;
pub mod metrics;
pub mod nb;
pub mod stats;
pub mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Label, SparseVector};
use crate::error::{Error, Result};

pub use metrics::{evaluate, Metrics};
pub use stats::{mean_ci, MeanCi};

pub const CLASSES: [Label; 2] = [0, 1];

/// Per-class probabilities, indexed by class.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbDist(Vec<f64>);

impl ProbDist {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidDistribution(format!(
                "need at least 2 classes, got {}",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "negative or non-finite component in {probs:?}"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::TOLERANCE {
            return Err(Error::InvalidDistribution(format!("sums to {sum}")));
        }
        Ok(ProbDist(probs))
    }

    /// Binary distribution `[1 - p, p]`.
    pub fn binary(p_positive: f64) -> Self {
        let p = p_positive.clamp(0.0, 1.0);
        ProbDist(vec![1.0 - p, p])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn n_classes(&self) -> usize {
        self.0.len()
    }

    /// Most probable class; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate().skip(1) {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Lr,
    Nb,
    Rf,
    Svm,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 4] = [
        LearnerKind::Lr,
        LearnerKind::Nb,
        LearnerKind::Rf,
        LearnerKind::Svm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::Lr => "lr",
            LearnerKind::Nb => "nb",
            LearnerKind::Rf => "rf",
            LearnerKind::Svm => "svm",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "learner",
                name: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub lr: lr::LrParams,
    pub nb: nb::NbParams,
    pub rf: forest::ForestParams,
    pub svm: svm::SvmParams,
}

/// Training rows borrowed from a feature store, with labels.
#[derive(Debug, Clone)]
pub struct Dataset<'a> {
    rows: Vec<&'a SparseVector>,
    labels: Vec<Label>,
    n_features: usize,
}

impl<'a> Dataset<'a> {
    pub fn new(rows: Vec<&'a SparseVector>, labels: Vec<Label>, n_features: usize) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch(rows.len(), labels.len()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::InvalidLabel(i64::from(bad)));
        }
        for x in &rows {
            check_dims(x, n_features)?;
        }
        Ok(Dataset {
            rows,
            labels,
            n_features,
        })
    }

    pub fn from_pairs(pairs: &'a [(SparseVector, Label)], n_features: usize) -> Result<Self> {
        Dataset::new(
            pairs.iter().map(|(x, _)| x).collect(),
            pairs.iter().map(|(_, y)| *y).collect(),
            n_features,
        )
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[&'a SparseVector] {
        &self.rows
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'a SparseVector, Label)> + '_ {
        self.rows.iter().copied().zip(self.labels.iter().copied())
    }

    fn class_counts(&self) -> [usize; 2] {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - pos, pos]
    }
}

fn check_dims(x: &SparseVector, n_features: usize) -> Result<()> {
    match x.max_index() {
        Some(i) if i >= n_features => Err(Error::DimensionMismatch {
            index: i,
            size: n_features,
        }),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone)]
enum Fitted {
    Lr(lr::LogisticModel),
    Nb(nb::NaiveBayes),
    Rf(forest::RandomForest),
    Svm(svm::LinearSvm),
}

/// A fitted classifier. Immutable; prediction is deterministic.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    kind: LearnerKind,
    vocab_size: usize,
    train_seed: u64,
    fitted: Fitted,
}

impl TrainedModel {
    pub fn kind(&self) -> LearnerKind {
        self.kind
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn classes(&self) -> &'static [Label] {
        &CLASSES
    }

    pub fn train_seed(&self) -> u64 {
        self.train_seed
    }

    pub fn predict_proba(&self, x: &SparseVector) -> Result<ProbDist> {
        check_dims(x, self.vocab_size)?;
        Ok(match &self.fitted {
            Fitted::Lr(m) => m.predict_proba(x),
            Fitted::Nb(m) => m.predict_proba(x),
            Fitted::Rf(m) => m.predict_proba(x),
            Fitted::Svm(m) => m.predict_proba(x),
        })
    }

    pub fn predict(&self, x: &SparseVector) -> Result<Label> {
        Ok(self.predict_proba(x)?.argmax() as Label)
    }

    pub fn as_logistic(&self) -> Option<&lr::LogisticModel> {
        match &self.fitted {
            Fitted::Lr(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_forest(&self) -> Option<&forest::RandomForest> {
        match &self.fitted {
            Fitted::Rf(m) => Some(m),
            _ => None,
        }
    }
}

pub fn fit(kind: LearnerKind, data: &Dataset<'_>, params: &Hyperparams, seed: u64) -> Result<TrainedModel> {
    if data.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    if data.class_counts().contains(&0) {
        return Err(Error::SingleClass);
    }
    let fitted = match kind {
        LearnerKind::Lr => Fitted::Lr(lr::fit(data, &params.lr)),
        LearnerKind::Nb => Fitted::Nb(nb::fit(data, &params.nb)),
        LearnerKind::Rf => Fitted::Rf(forest::fit(data, &params.rf, seed)),
        LearnerKind::Svm => Fitted::Svm(svm::fit(data, &params.svm)),
    };
    Ok(TrainedModel {
        kind,
        vocab_size: data.n_features(),
        train_seed: seed,
        fitted,
    })
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(pairs: &[(usize, f64)]) -> SparseVector {
        SparseVector::from_pairs(pairs.iter().copied())
    }

    #[test]
    fn prob_dist_validation() {
        assert!(ProbDist::new(vec![0.5, 0.5]).is_ok());
        assert!(ProbDist::new(vec![1.0]).is_err());
        assert!(ProbDist::new(vec![0.6, 0.6]).is_err());
        assert!(ProbDist::new(vec![-0.1, 1.1]).is_err());
        assert!(ProbDist::new(vec![f64::NAN, 1.0]).is_err());
        assert_eq!(ProbDist::binary(0.5).argmax(), 0);
        assert_eq!(ProbDist::binary(0.7).argmax(), 1);
    }

    #[test]
    fn learner_names() {
        for k in LearnerKind::ALL {
            assert_eq!(k.as_str().parse::<LearnerKind>().unwrap(), k);
        }
        assert!("cnn".parse::<LearnerKind>().is_err());
    }

    #[test]
    fn fit_rejects_degenerate_sets() {
        let rows = [(sv(&[(0, 1.0)]), 1), (sv(&[(1, 1.0)]), 1)];
        let data = Dataset::from_pairs(&rows, 2).unwrap();
        for k in LearnerKind::ALL {
            assert!(matches!(
                fit(k, &data, &Hyperparams::default(), 0),
                Err(Error::SingleClass)
            ));
        }
        let empty = Dataset::new(vec![], vec![], 2).unwrap();
        assert!(fit(LearnerKind::Lr, &empty, &Hyperparams::default(), 0).is_err());
        assert!(Dataset::from_pairs(&rows, 1).is_err());
    }

    #[test]
    fn predict_checks_dimension() {
        let rows = [(sv(&[(0, 1.0)]), 1), (sv(&[(1, 1.0)]), 0)];
        let data = Dataset::from_pairs(&rows, 2).unwrap();
        let m = fit(LearnerKind::Nb, &data, &Hyperparams::default(), 0).unwrap();
        assert!(matches!(
            m.predict_proba(&sv(&[(5, 1.0)])),
            Err(Error::DimensionMismatch { index: 5, size: 2 })
        ));
    }

    #[test]
    fn every_learner_separates_a_toy_set() {
        let rows: Vec<(SparseVector, Label)> = (0..20)
            .map(|i| {
                let y = (i % 2) as Label;
                (sv(&[(usize::from(y), 1.0 + (i % 3) as f64), (2, 1.0)]), y)
            })
            .collect();
        let data = Dataset::from_pairs(&rows, 3).unwrap();
        for k in LearnerKind::ALL {
            let m = fit(k, &data, &Hyperparams::default(), 7).unwrap();
            for (x, y) in data.iter() {
                let p = m.predict_proba(x).unwrap();
                assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert_eq!(p.argmax() as Label, y, "{k} misclassified");
            }
        }
    }
}
