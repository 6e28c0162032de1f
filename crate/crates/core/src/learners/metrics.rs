use serde::{Deserialize, Serialize};

use super::TrainedModel;
use crate::corpus::{Label, SparseVector};
use crate::error::{Error, Result};

/// Positive-class precision/recall/F1 plus the support-weighted F1.
///
/// Cells whose denominator is zero are reported as 0 and flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1_pos: f64,
    pub f1_weighted: f64,
    /// Test items per class, `[negative, positive]`.
    pub support: [usize; 2],
    pub precision_undefined: bool,
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> Self {
        let mut c = Confusion::default();
        for (truth, pred) in pairs {
            match (truth, pred) {
                (1, 1) => c.tp += 1,
                (0, 1) => c.fp += 1,
                (1, _) => c.fn_ += 1,
                _ => c.tn += 1,
            }
        }
        c
    }

    pub fn metrics(&self) -> Result<Metrics> {
        let total = self.tp + self.fp + self.tn + self.fn_;
        if total == 0 {
            return Err(Error::EmptyInput("test set"));
        }
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                (0.0, true)
            } else {
                (num as f64 / den as f64, false)
            }
        };
        let f1 = |p: f64, r: f64| if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };

        let (precision, precision_undefined) = ratio(self.tp, self.tp + self.fp);
        let (recall, recall_undefined) = ratio(self.tp, self.tp + self.fn_);
        let f1_pos = f1(precision, recall);

        // the negative class mirrored
        let (p_neg, _) = ratio(self.tn, self.tn + self.fn_);
        let (r_neg, _) = ratio(self.tn, self.tn + self.fp);
        let f1_neg = f1(p_neg, r_neg);

        let support = [self.tn + self.fp, self.tp + self.fn_];
        let f1_weighted =
            (f1_neg * support[0] as f64 + f1_pos * support[1] as f64) / total as f64;
        Ok(Metrics {
            precision,
            recall,
            f1_pos,
            f1_weighted,
            support,
            precision_undefined,
            recall_undefined,
        })
    }
}

pub fn evaluate<'a>(
    model: &TrainedModel,
    test: impl IntoIterator<Item = (&'a SparseVector, Label)>,
) -> Result<Metrics> {
    let pairs = test
        .into_iter()
        .map(|(x, y)| Ok((y, model.predict(x)?)))
        .collect::<Result<Vec<_>>>()?;
    Confusion::from_pairs(pairs).metrics()
}
