use serde::{Serialize, Serializer};

use super::experiment::{aggregate, group_series};
use super::{CurveCell, LearnerSpec, MetricKind};
use crate::error::{Error, Result};
use crate::strategies::StrategyKind;

fn target<S: Serializer>(v: &Option<usize>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(n) => s.serialize_u64(*n as u64),
        None => s.serialize_str("not reached"),
    }
}

fn targets<S: Serializer>(v: &[Option<usize>], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    #[derive(Serialize)]
    struct T(#[serde(serialize_with = "target")] Option<usize>);
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&T(*x))?;
    }
    seq.end()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyReport {
    pub strategy: StrategyKind,
    pub learner: LearnerSpec,
    pub metric: MetricKind,
    pub target_fraction: f64,
    /// Mean score once the pool is exhausted.
    pub full_score: f64,
    /// Fewest labels at which the mean curve reaches the target.
    #[serde(serialize_with = "target")]
    pub labels_to_target: Option<usize>,
    /// Trapezoidal area under (labels_used, mean score).
    pub auc: f64,
    /// Labels-to-target of each repeat against its own final score.
    #[serde(serialize_with = "targets")]
    pub per_repeat_labels_to_target: Vec<Option<usize>>,
}

fn labels_to_target(points: &[(usize, f64)], fraction: f64) -> Option<usize> {
    let full = points.last()?.1;
    points
        .iter()
        .find(|(_, v)| *v >= fraction * full)
        .map(|(n, _)| *n)
}

fn trapezoid(points: &[(usize, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) as f64 * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

pub fn summarize_strategies(
    curve: &[CurveCell],
    metric: MetricKind,
    target_fraction: f64,
) -> Result<Vec<StrategyReport>> {
    if curve.is_empty() {
        return Err(Error::EmptyInput("learning curve"));
    }
    let summaries = aggregate(curve, metric)?;
    let series = group_series(curve);
    summaries
        .into_iter()
        .zip(series)
        .map(|(s, (_, cells))| {
            let mean: Vec<(usize, f64)> = s.points.iter().map(|p| (p.labels_used, p.mean)).collect();
            let mut repeats: Vec<usize> = cells.iter().map(|c| c.repeat).collect();
            repeats.sort_unstable();
            repeats.dedup();
            let per_repeat_labels_to_target = repeats
                .iter()
                .map(|&r| {
                    let mut pts: Vec<(usize, usize, f64)> = cells
                        .iter()
                        .filter(|c| c.repeat == r)
                        .map(|c| (c.iteration, c.labels_used, metric.of_cell(c)))
                        .collect();
                    pts.sort_by_key(|p| p.0);
                    let pts: Vec<(usize, f64)> = pts.into_iter().map(|p| (p.1, p.2)).collect();
                    labels_to_target(&pts, target_fraction)
                })
                .collect();
            Ok(StrategyReport {
                strategy: s.strategy,
                learner: s.learner,
                metric,
                target_fraction,
                full_score: mean.last().map(|p| p.1).unwrap_or(0.0),
                labels_to_target: labels_to_target(&mean, target_fraction),
                auc: trapezoid(&mean),
                per_repeat_labels_to_target,
            })
        })
        .collect()
}
