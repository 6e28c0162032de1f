//! Informativeness scores for pool-based querying, and batch selection.
//!
//! Uncertainty strategies score one model's distribution; query-by-committee
//! strategies score the disagreement between committee members. All logs are
//! natural. Higher scores are more informative.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::corpus::{Label, SparseVector};
use crate::error::{Error, Result};
use crate::learners::{ProbDist, TrainedModel};
use crate::rng::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Random,
    LeastConfident,
    Entropy,
    VoteEntropy,
    KlDivergence,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::Random,
        StrategyKind::LeastConfident,
        StrategyKind::Entropy,
        StrategyKind::VoteEntropy,
        StrategyKind::KlDivergence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::LeastConfident => "least_confident",
            StrategyKind::Entropy => "entropy",
            StrategyKind::VoteEntropy => "vote_entropy",
            StrategyKind::KlDivergence => "kl_divergence",
        }
    }

    pub fn needs_committee(self) -> bool {
        matches!(self, StrategyKind::VoteEntropy | StrategyKind::KlDivergence)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "strategy",
                name: s.to_string(),
            })
    }
}

fn check(p: &ProbDist) -> Result<&[f64]> {
    let probs = p.probs();
    let sum: f64 = probs.iter().sum();
    if probs.len() < 2
        || probs.iter().any(|q| !q.is_finite() || *q < 0.0)
        || (sum - 1.0).abs() > ProbDist::TOLERANCE
    {
        return Err(Error::InvalidDistribution(format!("{probs:?}")));
    }
    Ok(probs)
}

/// `1 - max_y p(y)`.
pub fn least_confident_score(p: &ProbDist) -> Result<f64> {
    let probs = check(p)?;
    Ok(1.0 - probs.iter().copied().fold(0.0, f64::max))
}

fn entropy_of(probs: impl IntoIterator<Item = f64>) -> f64 {
    -probs
        .into_iter()
        .filter(|&q| q > 0.0)
        .map(|q| q * q.ln())
        .sum::<f64>()
}

/// Shannon entropy with `0 ln 0 = 0`.
pub fn entropy_score(p: &ProbDist) -> Result<f64> {
    Ok(entropy_of(check(p)?.iter().copied()).max(0.0))
}

/// Entropy of the committee's hard-vote distribution over `n_classes`.
pub fn vote_entropy_score(votes: &[usize], n_classes: usize) -> Result<f64> {
    if votes.is_empty() {
        return Err(Error::EmptyInput("vote list"));
    }
    let mut counts = vec![0usize; n_classes];
    for &v in votes {
        *counts.get_mut(v).ok_or_else(|| {
            Error::InvalidDistribution(format!("vote {v} outside {n_classes} classes"))
        })? += 1;
    }
    let c = votes.len() as f64;
    Ok(entropy_of(counts.into_iter().map(|n| n as f64 / c)).max(0.0))
}

/// Mean KL divergence of each member from the componentwise mean.
pub fn kl_qbc_score(members: &[ProbDist]) -> Result<f64> {
    let Some(first) = members.first() else {
        return Err(Error::EmptyInput("committee distributions"));
    };
    let k = first.n_classes();
    let mut consensus = vec![0.0; k];
    for m in members {
        let probs = check(m)?;
        if probs.len() != k {
            return Err(Error::InvalidDistribution(format!(
                "mixed class counts {k} and {}",
                probs.len()
            )));
        }
        for (c, q) in consensus.iter_mut().zip(probs) {
            *c += q;
        }
    }
    let n = members.len() as f64;
    consensus.iter_mut().for_each(|c| *c /= n);
    let total: f64 = members
        .iter()
        .map(|m| {
            m.probs()
                .iter()
                .zip(&consensus)
                .filter(|(&p, _)| p > 0.0)
                .map(|(&p, &q)| p * (p / q).ln())
                .sum::<f64>()
        })
        .sum();
    Ok((total / n).max(0.0))
}

/// The `k` highest-scoring ids, ties broken by ascending id.
pub fn select_batch<I: Ord + Clone>(scores: &[(I, f64)], k: usize) -> Result<Vec<I>> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("score list"));
    }
    let mut order: Vec<&(I, f64)> = scores.iter().collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(order.into_iter().take(k).map(|(id, _)| id.clone()).collect())
}

/// Uniform sample of `k` ids without replacement.
pub fn random_batch<I: Clone>(pool: &[I], k: usize, seed: u64) -> Result<Vec<I>> {
    if k > pool.len() {
        return Err(Error::SampleTooLarge {
            k,
            pool: pool.len(),
        });
    }
    let mut rng = seeded_rng(seed);
    Ok(sample(&mut rng, pool.len(), k)
        .into_iter()
        .map(|i| pool[i].clone())
        .collect())
}

/// Two or more models trained on the same labeled set.
#[derive(Debug, Clone)]
pub struct Committee {
    members: Vec<TrainedModel>,
}

impl Committee {
    pub fn new(members: Vec<TrainedModel>) -> Result<Self> {
        if members.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "a committee needs at least 2 members, got {}",
                members.len()
            )));
        }
        let size = members[0].vocab_size();
        if members.iter().any(|m| m.vocab_size() != size) {
            return Err(Error::InvalidConfig(
                "committee members disagree on vocabulary size".into(),
            ));
        }
        Ok(Committee { members })
    }

    pub fn members(&self) -> &[TrainedModel] {
        &self.members
    }

    pub fn distributions(&self, x: &SparseVector) -> Result<Vec<ProbDist>> {
        self.members.iter().map(|m| m.predict_proba(x)).collect()
    }

    pub fn votes(&self, x: &SparseVector) -> Result<Vec<usize>> {
        self.members
            .iter()
            .map(|m| Ok(m.predict_proba(x)?.argmax()))
            .collect()
    }

    /// Majority of member votes; ties go to the lowest class.
    pub fn predict(&self, x: &SparseVector) -> Result<Label> {
        let votes = self.votes(x)?;
        let pos = votes.iter().filter(|&&v| v == 1).count();
        Ok(Label::from(pos * 2 > votes.len()))
    }
}
