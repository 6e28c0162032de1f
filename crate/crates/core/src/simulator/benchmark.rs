//! Fully supervised benchmark: every learner trained on the whole train
//! split and scored on the test split, repeated over fresh splits.

use serde::{Deserialize, Serialize};

use super::experiment::{map, split_dataset, SPLIT, TRAIN};
use super::MetricKind;
use crate::corpus::{build_vocab, vectorize, Document, NgramConfig};
use crate::error::{Error, Result};
use crate::learners::{evaluate, fit, mean_ci, Dataset, Hyperparams, LearnerKind, Metrics};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub dataset: Option<std::path::PathBuf>,
    pub train_size: usize,
    pub test_size: usize,
    pub learners: Vec<LearnerKind>,
    pub repeats: usize,
    pub master_seed: u64,
    /// Metric the confidence interval is reported for.
    pub metric: MetricKind,
    pub fixed_split: bool,
    pub features: NgramConfig,
    pub hyperparams: Hyperparams,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            dataset: None,
            train_size: 2000,
            test_size: 1000,
            learners: LearnerKind::ALL.to_vec(),
            repeats: 10,
            master_seed: 0,
            metric: MetricKind::F1Pos,
            fixed_split: false,
            features: NgramConfig::default(),
            hyperparams: Hyperparams::default(),
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learners.is_empty() {
            return Err(Error::InvalidConfig("need at least one learner".into()));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be at least 1".into()));
        }
        if self.train_size == 0 || self.test_size == 0 {
            return Err(Error::InvalidConfig("train_size and test_size must be at least 1".into()));
        }
        self.features.validate()
    }
}

/// Mean scores of one learner over the repeats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub learner: LearnerKind,
    pub precision: f64,
    pub recall: f64,
    pub f1_pos: f64,
    pub f1_weighted: f64,
    pub metric: MetricKind,
    /// 95% Student-t interval of `metric`; equal to the mean for one repeat.
    pub ci_low: f64,
    pub ci_high: f64,
    pub per_repeat: Vec<Metrics>,
}

pub fn run_benchmark(config: &BenchmarkConfig, docs: &[Document]) -> Result<Vec<BenchmarkRow>> {
    config.validate()?;
    if let Some(d) = docs.iter().find(|d| d.label.is_none()) {
        return Err(Error::Unlabeled(d.id.clone()));
    }
    let per_repeat = map((0..config.repeats).collect(), |r| -> Result<Vec<Metrics>> {
        let split = if config.fixed_split {
            derive_seed(config.master_seed, &[SPLIT])
        } else {
            derive_seed(config.master_seed, &[SPLIT, r as u64])
        };
        let (train, test, _) = split_dataset(docs, config.train_size, config.test_size, split)?;
        let vocab = build_vocab(&train, config.features)?;
        let train_x: Vec<_> = train.iter().map(|d| vectorize(d, &vocab)).collect();
        let test_xy: Vec<_> = test
            .iter()
            .map(|d| (vectorize(d, &vocab), d.label.unwrap_or_default()))
            .collect();
        let data = Dataset::new(
            train_x.iter().collect(),
            train.iter().map(|d| d.label.unwrap_or_default()).collect(),
            vocab.len(),
        )?;
        let seed = derive_seed(config.master_seed, &[TRAIN, r as u64]);
        config
            .learners
            .iter()
            .map(|&kind| {
                let model = fit(kind, &data, &config.hyperparams, seed)
                    .map_err(|e| e.context(format!("{kind} / repeat {r}")))?;
                evaluate(&model, test_xy.iter().map(|(x, y)| (x, *y)))
            })
            .collect()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    config
        .learners
        .iter()
        .enumerate()
        .map(|(i, &learner)| {
            let runs: Vec<Metrics> = per_repeat.iter().map(|m| m[i]).collect();
            let avg = |f: fn(&Metrics) -> f64| {
                crate::learners::stats::mean(&runs.iter().map(f).collect::<Vec<_>>())
            };
            let scores: Vec<f64> = runs.iter().map(|m| config.metric.of(m)).collect();
            let (ci_low, ci_high) = if scores.len() >= 2 {
                let ci = mean_ci(&scores, 0.95)?;
                (ci.lower, ci.upper)
            } else {
                (scores[0], scores[0])
            };
            Ok(BenchmarkRow {
                learner,
                precision: avg(|m| m.precision),
                recall: avg(|m| m.recall),
                f1_pos: avg(|m| m.f1_pos),
                f1_weighted: avg(|m| m.f1_weighted),
                metric: config.metric,
                ci_low,
                ci_high,
                per_repeat: runs,
            })
        })
        .collect()
}
