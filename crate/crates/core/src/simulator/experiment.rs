use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::Serialize;

use super::active::{run_active_learning, AlContext};
use super::{CurveCell, ExperimentConfig, LearnerSpec, MetricKind};
use crate::corpus::{build_vocab, vectorize, Document, Label};
use crate::error::{Error, Result};
use crate::learners::mean_ci;
use crate::rng::{derive_seed, seeded_rng};
use crate::strategies::{random_batch, StrategyKind};

pub use super::active::CellSeeds;

pub(crate) const SPLIT: u64 = 1;
const SEED_SET: u64 = 2;
pub(crate) const TRAIN: u64 = 3;
const QUERY: u64 = 4;

impl CellSeeds {
    pub fn for_repeat(master_seed: u64, repeat: usize) -> Self {
        CellSeeds {
            train: derive_seed(master_seed, &[TRAIN, repeat as u64]),
            query: derive_seed(master_seed, &[QUERY, repeat as u64]),
        }
    }
}

fn split_seed(config: &ExperimentConfig, repeat: usize) -> u64 {
    if config.fixed_split {
        derive_seed(config.master_seed, &[SPLIT])
    } else {
        derive_seed(config.master_seed, &[SPLIT, repeat as u64])
    }
}

/// Uniform random disjoint split into (train, test, remainder).
pub fn split_dataset<T: Clone>(
    docs: &[T],
    train_size: usize,
    test_size: usize,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    if train_size + test_size > docs.len() {
        return Err(Error::InvalidConfig(format!(
            "train_size {train_size} + test_size {test_size} exceeds {} documents",
            docs.len()
        )));
    }
    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.shuffle(&mut seeded_rng(seed));
    let take = |range: &[usize]| range.iter().map(|&i| docs[i].clone()).collect::<Vec<T>>();
    Ok((
        take(&order[..train_size]),
        take(&order[train_size..train_size + test_size]),
        take(&order[train_size + test_size..]),
    ))
}

/// Splits, draws the seed set from the remainder pool and featurizes with a
/// vocabulary fitted on the pool text.
pub fn prepare_repeat(config: &ExperimentConfig, docs: &[Document], repeat: usize) -> Result<AlContext> {
    if let Some(d) = docs.iter().find(|d| d.label.is_none()) {
        return Err(Error::Unlabeled(d.id.clone()));
    }
    let (_, test, universe) = split_dataset(
        docs,
        config.train_size,
        config.test_size,
        split_seed(config, repeat),
    )?;
    if config.seed_size > universe.len() {
        return Err(Error::InvalidConfig(format!(
            "seed_size {} exceeds the {} documents left for active learning",
            config.seed_size,
            universe.len()
        )));
    }
    let positions: Vec<usize> = (0..universe.len()).collect();
    let seed_set = random_batch(
        &positions,
        config.seed_size,
        derive_seed(config.master_seed, &[SEED_SET, repeat as u64]),
    )?;
    let mut in_seed = vec![false; universe.len()];
    seed_set.iter().for_each(|&i| in_seed[i] = true);
    let pool = positions.into_iter().filter(|&i| !in_seed[i]).collect();

    let vocab = build_vocab(&universe, config.features)?;
    let label = |d: &Document| -> Label { d.label.expect("checked above") };
    Ok(AlContext {
        ids: universe.iter().map(|d| d.id.clone()).collect(),
        features: universe.iter().map(|d| vectorize(d, &vocab)).collect(),
        labels: universe.iter().map(label).collect(),
        n_features: vocab.len(),
        test: test.iter().map(|d| (vectorize(d, &vocab), label(d))).collect(),
        seed_set,
        pool,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryPoint {
    pub iteration: usize,
    pub labels_used: usize,
    pub n_repeats: usize,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Set when fewer than two repeats exist and the interval is a point.
    pub ci_degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub strategy: StrategyKind,
    pub learner: LearnerSpec,
    pub metric: MetricKind,
    pub points: Vec<SummaryPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub curve: Vec<CurveCell>,
    pub summary: Vec<SeriesSummary>,
}

pub(crate) fn map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

/// Runs every (strategy, learner, repeat) series. Series are independent
/// and may run on any number of threads; output order is fixed.
pub fn run_experiment(config: &ExperimentConfig, docs: &[Document]) -> Result<ExperimentResult> {
    config.validate()?;
    let cells = config.cells()?;
    let contexts = map((0..config.repeats).collect(), |r| {
        prepare_repeat(config, docs, r).map_err(|e| e.context(format!("repeat {r}")))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.repeats).map(move |r| (c, r)))
        .collect();
    let runs = map(jobs, |(c, r)| {
        let (strategy, learner) = &cells[c];
        run_active_learning(
            &contexts[r],
            *strategy,
            learner,
            r,
            config.batch_size,
            &config.hyperparams,
            CellSeeds::for_repeat(config.master_seed, r),
        )
        .map_err(|e| e.context(format!("{strategy} / {learner} / repeat {r}")))
    });
    let mut curve = Vec::new();
    for run in runs {
        curve.extend(run?.cells);
    }
    let summary = aggregate(&curve, config.metric)?;
    Ok(ExperimentResult { curve, summary })
}

pub(crate) fn group_series(
    curve: &[CurveCell],
) -> Vec<((StrategyKind, LearnerSpec), Vec<&CurveCell>)> {
    let mut order: Vec<(StrategyKind, LearnerSpec)> = Vec::new();
    let mut groups: BTreeMap<(StrategyKind, LearnerSpec), Vec<&CurveCell>> = BTreeMap::new();
    for c in curve {
        let key = (c.strategy, c.learner.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(c);
    }
    order
        .into_iter()
        .map(|k| {
            let v = groups.remove(&k).unwrap_or_default();
            (k, v)
        })
        .collect()
}

/// Per-iteration mean and 95% Student-t interval across repeats.
pub fn aggregate(curve: &[CurveCell], metric: MetricKind) -> Result<Vec<SeriesSummary>> {
    group_series(curve)
        .into_iter()
        .map(|((strategy, learner), cells)| {
            let mut by_iter: BTreeMap<usize, (usize, Vec<f64>)> = BTreeMap::new();
            for c in cells {
                let e = by_iter.entry(c.iteration).or_insert((c.labels_used, Vec::new()));
                e.1.push(metric.of_cell(c));
            }
            let points = by_iter
                .into_iter()
                .map(|(iteration, (labels_used, values))| {
                    let (mean, ci_low, ci_high, ci_degenerate) = if values.len() >= 2 {
                        let ci = mean_ci(&values, 0.95)?;
                        (ci.mean, ci.lower, ci.upper, false)
                    } else {
                        (values[0], values[0], values[0], true)
                    };
                    Ok(SummaryPoint {
                        iteration,
                        labels_used,
                        n_repeats: values.len(),
                        mean,
                        ci_low,
                        ci_high,
                        ci_degenerate,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SeriesSummary {
                strategy,
                learner,
                metric,
                points,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes() {
        let docs: Vec<usize> = (0..7220).collect();
        let (tr, te, rest) = split_dataset(&docs, 2000, 1000, 1).unwrap();
        assert_eq!((tr.len(), te.len(), rest.len()), (2000, 1000, 4220));
        let mut all: Vec<usize> = tr.iter().chain(&te).chain(&rest).copied().collect();
        all.sort_unstable();
        assert_eq!(all, docs);

        let (_, _, rest) = split_dataset(&docs[..30], 20, 10, 1).unwrap();
        assert!(rest.is_empty());
        assert!(split_dataset(&docs[..30], 20, 11, 1).is_err());
        assert_eq!(
            split_dataset(&docs, 5, 5, 9).unwrap(),
            split_dataset(&docs, 5, 5, 9).unwrap()
        );
    }
}
