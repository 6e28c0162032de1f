//! Pool-based active-learning simulation.
//!
//! The gold labels of the pool stand in for annotators: each iteration the
//! learner is retrained on the labeled set, evaluated on a held-out test set,
//! and the selected batch moves from the pool into the labeled set with its
//! gold labels, until the pool is exhausted.

mod active;
mod benchmark;
mod experiment;
pub mod io;
mod summary;
pub mod synth;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::NgramConfig;
use crate::error::{Error, Result};
use crate::learners::{Hyperparams, LearnerKind, Metrics};
use crate::strategies::StrategyKind;

pub use active::{fit_learner, run_active_learning, AlContext, AlRun, FittedLearner};
pub use benchmark::{run_benchmark, BenchmarkConfig, BenchmarkRow};
pub use experiment::{
    aggregate, prepare_repeat, run_experiment, split_dataset, CellSeeds, ExperimentResult,
    SeriesSummary, SummaryPoint,
};
pub use summary::{summarize_strategies, StrategyReport};
pub use synth::{generate_synthetic_corpus, SynthSpec};

/// A single learner or a committee of learners.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LearnerSpec {
    Single(LearnerKind),
    Committee(Vec<LearnerKind>),
}

impl LearnerSpec {
    /// The classical committee: LR, RF and SVM.
    pub fn ml_committee() -> Self {
        LearnerSpec::Committee(vec![LearnerKind::Lr, LearnerKind::Rf, LearnerKind::Svm])
    }

    pub fn is_committee(&self) -> bool {
        matches!(self, LearnerSpec::Committee(_))
    }

    pub fn supports(&self, strategy: StrategyKind) -> bool {
        match strategy {
            StrategyKind::Random => true,
            s if s.needs_committee() => self.is_committee(),
            _ => !self.is_committee(),
        }
    }

    pub fn check_arity(&self, strategy: StrategyKind) -> Result<()> {
        if self.supports(strategy) {
            return Ok(());
        }
        Err(Error::Arity {
            strategy: strategy.to_string(),
            learner: self.to_string(),
            message: if strategy.needs_committee() {
                "query-by-committee strategies need a committee of at least 2 learners"
            } else {
                "uncertainty strategies need exactly one learner"
            },
        })
    }
}

impl fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnerSpec::Single(k) => write!(f, "{k}"),
            LearnerSpec::Committee(ks) => {
                let names: Vec<&str> = ks.iter().map(|k| k.as_str()).collect();
                f.write_str(&names.join("+"))
            }
        }
    }
}

impl FromStr for LearnerSpec {
    type Err = Error;

    /// `lr`, `rf`, ... for one learner; `a+b+c` or `committee` (LR, RF, SVM)
    /// for a committee.
    fn from_str(s: &str) -> Result<Self> {
        if s == "committee" {
            return Ok(LearnerSpec::ml_committee());
        }
        if s.contains('+') {
            let members = s
                .split('+')
                .map(str::parse)
                .collect::<Result<Vec<LearnerKind>>>()?;
            if members.len() < 2 {
                return Err(Error::InvalidConfig(format!("committee {s:?} has one member")));
            }
            return Ok(LearnerSpec::Committee(members));
        }
        Ok(LearnerSpec::Single(s.parse()?))
    }
}

impl Serialize for LearnerSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LearnerSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    #[default]
    F1Pos,
    F1Weighted,
}

impl MetricKind {
    pub fn of(self, m: &Metrics) -> f64 {
        match self {
            MetricKind::F1Pos => m.f1_pos,
            MetricKind::F1Weighted => m.f1_weighted,
        }
    }

    pub fn of_cell(self, c: &CurveCell) -> f64 {
        match self {
            MetricKind::F1Pos => c.f1_pos,
            MetricKind::F1Weighted => c.f1_weighted,
        }
    }
}

/// Experiment settings. The JSON config file uses these field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: Option<PathBuf>,
    pub train_size: usize,
    pub test_size: usize,
    /// Labeled documents the active learner starts from, drawn from the pool.
    pub seed_size: usize,
    pub batch_size: usize,
    pub strategies: Vec<StrategyKind>,
    pub learners: Vec<LearnerSpec>,
    pub repeats: usize,
    pub master_seed: u64,
    pub metric: MetricKind,
    /// Reuse one split for every repeat instead of redrawing it.
    pub fixed_split: bool,
    /// Fraction of the full-pool score a strategy must reach.
    pub target_fraction: f64,
    pub features: NgramConfig,
    pub hyperparams: Hyperparams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: None,
            train_size: 2000,
            test_size: 1000,
            seed_size: 300,
            batch_size: 300,
            strategies: vec![
                StrategyKind::Random,
                StrategyKind::LeastConfident,
                StrategyKind::Entropy,
            ],
            learners: vec![LearnerSpec::Single(LearnerKind::Lr)],
            repeats: 10,
            master_seed: 0,
            metric: MetricKind::F1Pos,
            fixed_split: false,
            target_fraction: 0.95,
            features: NgramConfig::default(),
            hyperparams: Hyperparams::default(),
        }
    }
}

impl ExperimentConfig {
    /// Strategy/learner pairs to run: the cross product minus pairs whose
    /// arity does not match. A strategy or learner left without any partner
    /// is an error, so misconfigurations surface before training starts.
    pub fn cells(&self) -> Result<Vec<(StrategyKind, LearnerSpec)>> {
        if self.strategies.is_empty() || self.learners.is_empty() {
            return Err(Error::InvalidConfig(
                "need at least one strategy and one learner".into(),
            ));
        }
        for &s in &self.strategies {
            if !self.learners.iter().any(|l| l.supports(s)) {
                return Err(self.learners[0].check_arity(s).unwrap_err());
            }
        }
        for l in &self.learners {
            if let Some(&s) = self.strategies.iter().find(|&&s| !l.supports(s)) {
                if !self.strategies.iter().any(|&s| l.supports(s)) {
                    return Err(l.check_arity(s).unwrap_err());
                }
            }
        }
        let mut cells = Vec::new();
        for &s in &self.strategies {
            for l in &self.learners {
                if l.supports(s) && !cells.contains(&(s, l.clone())) {
                    cells.push((s, l.clone()));
                }
            }
        }
        Ok(cells)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        if self.repeats == 0 {
            return fail("repeats must be at least 1".into());
        }
        if self.seed_size == 0 {
            return fail("seed_size must be at least 1".into());
        }
        if self.test_size == 0 {
            return fail("test_size must be at least 1".into());
        }
        if !(self.target_fraction > 0.0 && self.target_fraction <= 1.0) {
            return fail(format!(
                "target_fraction must be in (0, 1], got {}",
                self.target_fraction
            ));
        }
        self.features.validate()?;
        self.cells()?;
        Ok(())
    }
}

/// One evaluation point of one (strategy, learner, repeat) series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveCell {
    pub strategy: StrategyKind,
    pub learner: LearnerSpec,
    pub repeat: usize,
    pub iteration: usize,
    pub labels_used: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1_pos: f64,
    pub f1_weighted: f64,
}
