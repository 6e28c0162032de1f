use std::collections::HashSet;

use serde::Serialize;

use super::{CurveCell, LearnerSpec};
use crate::corpus::{Label, SparseVector};
use crate::error::{Error, Result};
use crate::learners::metrics::Confusion;
use crate::learners::{evaluate, fit, Dataset, Hyperparams, Metrics, TrainedModel};
use crate::rng::derive_seed;
use crate::strategies::{
    entropy_score, kl_qbc_score, least_confident_score, random_batch, select_batch,
    vote_entropy_score, Committee, StrategyKind,
};

/// Featurized data for one repeat: a labeled seed set and an unlabeled pool
/// (both indices into `features`), plus a held-out test set.
#[derive(Debug, Clone)]
pub struct AlContext {
    pub ids: Vec<String>,
    pub features: Vec<SparseVector>,
    pub labels: Vec<Label>,
    pub n_features: usize,
    pub test: Vec<(SparseVector, Label)>,
    pub seed_set: Vec<usize>,
    pub pool: Vec<usize>,
}

impl AlContext {
    pub fn validate(&self) -> Result<()> {
        let n = self.features.len();
        if self.ids.len() != n || self.labels.len() != n {
            return Err(Error::LengthMismatch(self.ids.len(), n));
        }
        let mut seen = HashSet::new();
        for &i in self.seed_set.iter().chain(&self.pool) {
            if i >= n || !seen.insert(i) {
                return Err(Error::InvalidConfig(format!(
                    "seed set and pool must be disjoint indices below {n}; bad index {i}"
                )));
            }
        }
        if self.seed_set.is_empty() {
            return Err(Error::InvalidConfig("empty seed set".into()));
        }
        if self.test.is_empty() {
            return Err(Error::EmptyInput("test set"));
        }
        Ok(())
    }

    fn dataset(&self, rows: &[usize]) -> Result<Dataset<'_>> {
        Dataset::new(
            rows.iter().map(|&i| &self.features[i]).collect(),
            rows.iter().map(|&i| self.labels[i]).collect(),
            self.n_features,
        )
    }
}

/// Per-series seeds. `train` is shared by every iteration so that equal
/// label sets always yield equal models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellSeeds {
    pub train: u64,
    pub query: u64,
}

#[derive(Debug, Clone)]
pub enum FittedLearner {
    Single(TrainedModel),
    Committee(Committee),
}

pub fn fit_learner(
    spec: &LearnerSpec,
    data: &Dataset<'_>,
    params: &Hyperparams,
    seed: u64,
) -> Result<FittedLearner> {
    Ok(match spec {
        LearnerSpec::Single(kind) => FittedLearner::Single(fit(*kind, data, params, seed)?),
        LearnerSpec::Committee(kinds) => FittedLearner::Committee(Committee::new(
            kinds
                .iter()
                .enumerate()
                .map(|(m, &kind)| fit(kind, data, params, derive_seed(seed, &[m as u64])))
                .collect::<Result<_>>()?,
        )?),
    })
}

impl FittedLearner {
    pub fn predict(&self, x: &SparseVector) -> Result<Label> {
        match self {
            FittedLearner::Single(m) => m.predict(x),
            FittedLearner::Committee(c) => c.predict(x),
        }
    }

    /// Committees are evaluated by majority vote of their members.
    pub fn evaluate(&self, test: &[(SparseVector, Label)]) -> Result<Metrics> {
        match self {
            FittedLearner::Single(m) => evaluate(m, test.iter().map(|(x, y)| (x, *y))),
            FittedLearner::Committee(c) => Confusion::from_pairs(
                test.iter()
                    .map(|(x, y)| Ok((*y, c.predict(x)?)))
                    .collect::<Result<Vec<_>>>()?,
            )
            .metrics(),
        }
    }

    pub fn score(&self, strategy: StrategyKind, x: &SparseVector) -> Result<f64> {
        match (strategy, self) {
            (StrategyKind::LeastConfident, FittedLearner::Single(m)) => {
                least_confident_score(&m.predict_proba(x)?)
            }
            (StrategyKind::Entropy, FittedLearner::Single(m)) => entropy_score(&m.predict_proba(x)?),
            (StrategyKind::VoteEntropy, FittedLearner::Committee(c)) => {
                vote_entropy_score(&c.votes(x)?, 2)
            }
            (StrategyKind::KlDivergence, FittedLearner::Committee(c)) => {
                kl_qbc_score(&c.distributions(x)?)
            }
            (s, _) => Err(Error::Arity {
                strategy: s.to_string(),
                learner: self.describe(),
                message: "strategy cannot score with this learner",
            }),
        }
    }

    fn describe(&self) -> String {
        match self {
            FittedLearner::Single(m) => m.kind().to_string(),
            FittedLearner::Committee(c) => {
                let names: Vec<&str> = c.members().iter().map(|m| m.kind().as_str()).collect();
                names.join("+")
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AlRun {
    pub cells: Vec<CurveCell>,
    /// Document ids acquired at each iteration, in selection order.
    pub queried: Vec<Vec<String>>,
}

/// Runs one series to pool exhaustion, emitting a cell per iteration
/// starting with the seed-only model.
pub fn run_active_learning(
    ctx: &AlContext,
    strategy: StrategyKind,
    learner: &LearnerSpec,
    repeat: usize,
    batch_size: usize,
    params: &Hyperparams,
    seeds: CellSeeds,
) -> Result<AlRun> {
    learner.check_arity(strategy)?;
    ctx.validate()?;
    if batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
    }
    let mut labeled = ctx.seed_set.clone();
    let mut pool = ctx.pool.clone();
    let mut cells = Vec::new();
    let mut queried = Vec::new();

    for iteration in 0.. {
        // canonical order: equal label sets give bit-identical fits
        labeled.sort_unstable();
        let model = fit_learner(learner, &ctx.dataset(&labeled)?, params, seeds.train)?;
        let m = model.evaluate(&ctx.test)?;
        log::debug!(
            "{strategy} {learner} repeat {repeat} iter {iteration}: {} labels, f1 {:.4}",
            labeled.len(),
            m.f1_pos
        );
        cells.push(CurveCell {
            strategy,
            learner: learner.clone(),
            repeat,
            iteration,
            labels_used: labeled.len(),
            precision: m.precision,
            recall: m.recall,
            f1_pos: m.f1_pos,
            f1_weighted: m.f1_weighted,
        });
        if pool.is_empty() {
            break;
        }

        let k = batch_size.min(pool.len());
        let batch: Vec<usize> = if strategy == StrategyKind::Random {
            random_batch(&pool, k, derive_seed(seeds.query, &[iteration as u64]))?
        } else {
            let scores = pool
                .iter()
                .map(|&i| Ok(((ctx.ids[i].as_str(), i), model.score(strategy, &ctx.features[i])?)))
                .collect::<Result<Vec<_>>>()?;
            select_batch(&scores, k)?.into_iter().map(|(_, i)| i).collect()
        };
        let chosen: HashSet<usize> = batch.iter().copied().collect();
        pool.retain(|i| !chosen.contains(i));
        queried.push(batch.iter().map(|&i| ctx.ids[i].clone()).collect());
        labeled.extend(batch);
    }
    Ok(AlRun { cells, queried })
}
