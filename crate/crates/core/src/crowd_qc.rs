//! Quality control for crowdsourced annotations.
//!
//! Responses are validated against the assignment they answer (minimum
//! duration and hidden control items), aggregated per item by strict
//! majority, and scored with Cohen's kappa against gold labels or Fleiss'
//! kappa among workers.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::corpus::{parse_label, Label};
use crate::error::{Error, Result};
use crate::learners::stats::{mean, percentile};
use crate::rng::{derive_seed, seeded_rng};

pub const ITEMS_PER_ASSIGNMENT: usize = 12;
pub const CONTROLS_PER_ASSIGNMENT: usize = 2;
pub const DEFAULT_MIN_DURATION_S: f64 = 47.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentSpec {
    pub assignment_id: String,
    pub item_ids: Vec<String>,
    #[serde(rename = "controls")]
    pub control_items: BTreeMap<String, Label>,
}

impl AssignmentSpec {
    pub fn new(
        assignment_id: impl Into<String>,
        item_ids: Vec<String>,
        control_items: BTreeMap<String, Label>,
    ) -> Result<Self> {
        let spec = AssignmentSpec {
            assignment_id: assignment_id.into(),
            item_ids,
            control_items,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| Error::InvalidAssignment {
            id: self.assignment_id.clone(),
            message,
        };
        if self.item_ids.len() != ITEMS_PER_ASSIGNMENT {
            return Err(fail(format!(
                "expected {ITEMS_PER_ASSIGNMENT} items, found {}",
                self.item_ids.len()
            )));
        }
        let distinct: BTreeSet<&String> = self.item_ids.iter().collect();
        if distinct.len() != self.item_ids.len() {
            return Err(fail("repeated item id".into()));
        }
        if self.control_items.len() != CONTROLS_PER_ASSIGNMENT {
            return Err(fail(format!(
                "expected {CONTROLS_PER_ASSIGNMENT} control items, found {}",
                self.control_items.len()
            )));
        }
        for (id, &answer) in &self.control_items {
            if !distinct.contains(id) {
                return Err(fail(format!("control {id:?} is not one of the items")));
            }
            if answer > 1 {
                return Err(fail(format!("control {id:?} has non-binary answer")));
            }
        }
        Ok(())
    }

    pub fn is_control(&self, item_id: &str) -> bool {
        self.control_items.contains_key(item_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerResponse {
    pub assignment_id: String,
    pub worker_id: String,
    pub duration_s: f64,
    pub answers: BTreeMap<String, Label>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationPolicy {
    pub min_duration_s: f64,
    pub require_controls: bool,
}

impl Default for ValidationPolicy {
    fn default() -> Self {
        ValidationPolicy {
            min_duration_s: DEFAULT_MIN_DURATION_S,
            require_controls: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Ok,
    TooFast,
    ControlFailed,
    Both,
}

impl Verdict {
    pub fn is_valid(self) -> bool {
        self == Verdict::Ok
    }
}

fn check_complete(resp: &WorkerResponse, spec: &AssignmentSpec) -> Result<()> {
    let fail = |message: String| Error::IncompleteAnswers {
        assignment: spec.assignment_id.clone(),
        worker: resp.worker_id.clone(),
        message,
    };
    if let Some(missing) = spec.item_ids.iter().find(|id| !resp.answers.contains_key(*id)) {
        return Err(fail(format!("no answer for item {missing:?}")));
    }
    if resp.answers.len() != spec.item_ids.len() {
        let extra = resp
            .answers
            .keys()
            .find(|k| !spec.item_ids.contains(k))
            .cloned()
            .unwrap_or_default();
        return Err(fail(format!("answer for unknown item {extra:?}")));
    }
    if let Some((id, _)) = resp.answers.iter().find(|(_, &a)| a > 1) {
        return Err(fail(format!("non-binary answer for item {id:?}")));
    }
    Ok(())
}

/// Valid iff the worker spent at least the minimum duration and answered
/// both control items correctly.
pub fn validate_response(
    resp: &WorkerResponse,
    spec: &AssignmentSpec,
    policy: &ValidationPolicy,
) -> Result<Verdict> {
    if resp.assignment_id != spec.assignment_id {
        return Err(Error::AssignmentMismatch {
            response: resp.assignment_id.clone(),
            spec: spec.assignment_id.clone(),
        });
    }
    check_complete(resp, spec)?;
    let too_fast = resp.duration_s < policy.min_duration_s;
    let control_failed = policy.require_controls && !controls_passed(resp, spec);
    Ok(match (too_fast, control_failed) {
        (false, false) => Verdict::Ok,
        (true, false) => Verdict::TooFast,
        (false, true) => Verdict::ControlFailed,
        (true, true) => Verdict::Both,
    })
}

fn controls_passed(resp: &WorkerResponse, spec: &AssignmentSpec) -> bool {
    spec.control_items
        .iter()
        .all(|(id, expected)| resp.answers.get(id) == Some(expected))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Consensus {
    Label(Label),
    Unresolved,
}

impl Consensus {
    pub fn label(self) -> Option<Label> {
        match self {
            Consensus::Label(l) => Some(l),
            Consensus::Unresolved => None,
        }
    }
}

/// Strict-majority vote over binary answers; exact ties are unresolved.
pub fn consensus_label(answers: &[Label]) -> Result<Consensus> {
    if answers.is_empty() {
        return Err(Error::EmptyInput("consensus over no answers"));
    }
    let ones = answers.iter().filter(|&&a| a == 1).count();
    let zeros = answers.len() - ones;
    Ok(match ones.cmp(&zeros) {
        std::cmp::Ordering::Greater => Consensus::Label(1),
        std::cmp::Ordering::Less => Consensus::Label(0),
        std::cmp::Ordering::Equal => Consensus::Unresolved,
    })
}

/// Cohen's kappa between two raters over the same items.
pub fn cohen_kappa<T: Ord>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::EmptyInput("cohen kappa over no items"));
    }
    let n = a.len() as f64;
    let mut marg_a: BTreeMap<&T, usize> = BTreeMap::new();
    let mut marg_b: BTreeMap<&T, usize> = BTreeMap::new();
    let mut agree = 0usize;
    for (x, y) in a.iter().zip(b) {
        *marg_a.entry(x).or_default() += 1;
        *marg_b.entry(y).or_default() += 1;
        if x == y {
            agree += 1;
        }
    }
    if marg_a.len() == 1 && marg_b.len() == 1 {
        // chance agreement is 1; the formula is 0/0
        return if agree == a.len() {
            Ok(1.0)
        } else {
            Ok(0.0)
        };
    }
    let p_o = agree as f64 / n;
    let p_e: f64 = marg_a
        .iter()
        .map(|(k, &ca)| ca as f64 / n * marg_b.get(k).copied().unwrap_or(0) as f64 / n)
        .sum();
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Per-item category counts with a constant number of raters per item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingMatrix {
    rows: Vec<Vec<u32>>,
    n_categories: usize,
    raters_per_item: u32,
}

impl RatingMatrix {
    pub fn new(rows: Vec<Vec<u32>>) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::InvalidRatingMatrix("no items".into()))?;
        let n_categories = first.len();
        if n_categories < 2 {
            return Err(Error::InvalidRatingMatrix(
                "need at least two categories".into(),
            ));
        }
        let raters: u32 = first.iter().sum();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_categories {
                return Err(Error::InvalidRatingMatrix(format!(
                    "row {i} has {} categories, expected {n_categories}",
                    row.len()
                )));
            }
            let s: u32 = row.iter().sum();
            if s != raters {
                return Err(Error::InvalidRatingMatrix(format!(
                    "row {i} has {s} ratings, expected {raters}"
                )));
            }
        }
        Ok(RatingMatrix {
            rows,
            n_categories,
            raters_per_item: raters,
        })
    }

    /// Builds counts from per-item label lists.
    pub fn from_labels(items: &[Vec<usize>], n_categories: usize) -> Result<Self> {
        let rows = items
            .iter()
            .map(|labels| {
                let mut row = vec![0u32; n_categories];
                for &l in labels {
                    let slot = row.get_mut(l).ok_or_else(|| {
                        Error::InvalidRatingMatrix(format!(
                            "category {l} out of range for {n_categories}"
                        ))
                    })?;
                    *slot += 1;
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        RatingMatrix::new(rows)
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn n_items(&self) -> usize {
        self.rows.len()
    }

    pub fn n_categories(&self) -> usize {
        self.n_categories
    }

    pub fn raters_per_item(&self) -> u32 {
        self.raters_per_item
    }
}

pub fn fleiss_kappa(m: &RatingMatrix) -> Result<f64> {
    if m.n_items() < 2 {
        return Err(Error::InvalidRatingMatrix(
            "need at least two items".into(),
        ));
    }
    let n = f64::from(m.raters_per_item);
    if m.raters_per_item < 2 {
        return Err(Error::InvalidRatingMatrix(
            "need at least two raters per item".into(),
        ));
    }
    let items = m.n_items() as f64;
    let mut totals = vec![0f64; m.n_categories];
    let mut p_bar = 0.0;
    for row in &m.rows {
        let sq: f64 = row.iter().map(|&c| f64::from(c) * f64::from(c)).sum();
        p_bar += (sq - n) / (n * (n - 1.0));
        for (t, &c) in totals.iter_mut().zip(row) {
            *t += f64::from(c);
        }
    }
    p_bar /= items;
    let p_e: f64 = totals.iter().map(|t| (t / (items * n)).powi(2)).sum();
    let used = totals.iter().filter(|&&t| t > 0.0).count();
    if used <= 1 {
        // every rating in one category: perfect agreement, 0/0 in the formula
        return Ok(1.0);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SweepDirection {
    /// Keep responses with duration >= cutoff.
    Lower,
    /// Keep responses with duration <= cutoff.
    Upper,
}

impl SweepDirection {
    pub fn keeps(self, duration_s: f64, cutoff_s: f64) -> bool {
        match self {
            SweepDirection::Lower => duration_s >= cutoff_s,
            SweepDirection::Upper => duration_s <= cutoff_s,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SweepDirection::Lower => "LOWER",
            SweepDirection::Upper => "UPPER",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub cutoff_s: f64,
    pub direction: SweepDirection,
    pub n_retained: usize,
    pub n_workers: usize,
    /// `None` when no retained worker overlaps the gold labels.
    pub mean_kappa: Option<f64>,
}

/// Cohen's kappa of each worker against gold, pooling that worker's
/// answers over every retained response. Items without gold are skipped.
pub fn per_worker_kappa<'a>(
    responses: impl IntoIterator<Item = &'a WorkerResponse>,
    gold: &HashMap<String, Label>,
) -> Result<BTreeMap<String, f64>> {
    let mut pairs: BTreeMap<&str, (Vec<Label>, Vec<Label>)> = BTreeMap::new();
    for resp in responses {
        let entry = pairs.entry(resp.worker_id.as_str()).or_default();
        for (item, &answer) in &resp.answers {
            if let Some(&g) = gold.get(item) {
                entry.0.push(answer);
                entry.1.push(g);
            }
        }
    }
    pairs
        .into_iter()
        .filter(|(_, (a, _))| !a.is_empty())
        .map(|(w, (a, g))| Ok((w.to_string(), cohen_kappa(&a, &g)?)))
        .collect()
}

pub fn default_cutoffs() -> Vec<f64> {
    (0..=30).map(|i| f64::from(i) * 10.0).collect()
}

/// Mean per-worker kappa against gold after filtering responses by
/// duration at each cutoff.
pub fn cutoff_sweep(
    responses: &[WorkerResponse],
    gold: &HashMap<String, Label>,
    cutoffs: &[f64],
    direction: SweepDirection,
) -> Result<Vec<SweepRow>> {
    if cutoffs.is_empty() {
        return Err(Error::EmptyInput("cutoff list"));
    }
    cutoffs
        .iter()
        .map(|&cutoff_s| {
            let kept: Vec<&WorkerResponse> = responses
                .iter()
                .filter(|r| direction.keeps(r.duration_s, cutoff_s))
                .collect();
            let kappas = per_worker_kappa(kept.iter().copied(), gold)?;
            let mean_kappa = if kappas.is_empty() {
                None
            } else {
                Some(kappas.values().sum::<f64>() / kappas.len() as f64)
            };
            Ok(SweepRow {
                cutoff_s,
                direction,
                n_retained: kept.len(),
                n_workers: kappas.len(),
                mean_kappa,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reliability {
    pub k: usize,
    pub trials: usize,
    pub n_items: usize,
    pub mean: f64,
    /// 2.5th and 97.5th percentiles of the per-trial kappas.
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Fleiss' kappa over random k-subsets of each item's responses.
///
/// Trial `t` draws from its own stream derived from `(seed, t)`.
pub fn worker_subset_reliability(
    per_item: &[Vec<Label>],
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<Reliability> {
    if trials == 0 {
        return Err(Error::EmptyInput("zero trials"));
    }
    if let Some(short) = per_item.iter().find(|r| r.len() < k) {
        return Err(Error::NotEnoughResponses {
            k,
            available: short.len(),
        });
    }
    let kappas = (0..trials)
        .map(|t| {
            let mut rng = seeded_rng(derive_seed(seed, &[t as u64]));
            let rows: Vec<Vec<usize>> = per_item
                .iter()
                .map(|answers| {
                    sample(&mut rng, answers.len(), k)
                        .into_iter()
                        .map(|i| usize::from(answers[i]))
                        .collect()
                })
                .collect();
            fleiss_kappa(&RatingMatrix::from_labels(&rows, 2)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = mean(&kappas);
    Ok(Reliability {
        k,
        trials,
        n_items: per_item.len(),
        mean,
        ci_low: percentile(&kappas, 0.025),
        ci_high: percentile(&kappas, 0.975),
    })
}

/// Gold label per item: the expert label when present, otherwise the
/// resolved worker consensus.
pub fn resolve_gold(
    expert: &HashMap<String, Label>,
    consensus: &BTreeMap<String, Consensus>,
) -> HashMap<String, Label> {
    let mut gold: HashMap<String, Label> = consensus
        .iter()
        .filter_map(|(id, c)| c.label().map(|l| (id.clone(), l)))
        .collect();
    gold.extend(expert.iter().map(|(k, v)| (k.clone(), *v)));
    gold
}

#[derive(Debug, Clone, Serialize)]
pub struct ResponseVerdict {
    pub assignment_id: String,
    pub worker_id: String,
    pub duration_s: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct ItemConsensus {
    pub id: String,
    pub n_valid: usize,
    pub consensus: Consensus,
    pub gold: Option<Label>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QcReport {
    pub policy: ValidationPolicy,
    pub n_responses: usize,
    pub n_valid: usize,
    pub verdict_counts: BTreeMap<String, usize>,
    pub verdicts: Vec<ResponseVerdict>,
    pub consensus: Vec<ItemConsensus>,
    pub n_unresolved: usize,
    pub worker_kappa: BTreeMap<String, f64>,
    pub reliability: Vec<ReliabilityEntry>,
    pub sweep: Vec<SweepRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReliabilityEntry {
    pub k: usize,
    pub n_items_skipped: usize,
    /// `None` when fewer than two items have k valid responses.
    pub estimate: Option<Reliability>,
}

#[derive(Debug, Clone)]
pub struct QcOptions {
    pub policy: ValidationPolicy,
    pub worker_counts: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub cutoffs: Vec<f64>,
}

impl Default for QcOptions {
    fn default() -> Self {
        QcOptions {
            policy: ValidationPolicy::default(),
            worker_counts: vec![3, 5],
            trials: 200,
            seed: 0,
            cutoffs: default_cutoffs(),
        }
    }
}

/// Full quality-control pass. Referential problems (unknown assignments,
/// incomplete answer maps) are collected and returned together.
pub fn run_qc(
    assignments: &[AssignmentSpec],
    responses: &[WorkerResponse],
    expert_gold: &HashMap<String, Label>,
    opts: &QcOptions,
) -> Result<QcReport> {
    let mut by_id: HashMap<&str, &AssignmentSpec> = HashMap::new();
    let mut problems = Vec::new();
    for a in assignments {
        if let Err(e) = a.validate() {
            problems.push(e.to_string());
        }
        if by_id.insert(a.assignment_id.as_str(), a).is_some() {
            problems.push(format!("duplicate assignment {:?}", a.assignment_id));
        }
    }

    let mut verdicts = Vec::with_capacity(responses.len());
    for r in responses {
        let Some(spec) = by_id.get(r.assignment_id.as_str()) else {
            problems.push(format!(
                "response from worker {:?} references unknown assignment {:?}",
                r.worker_id, r.assignment_id
            ));
            continue;
        };
        match validate_response(r, spec, &opts.policy) {
            Ok(v) => verdicts.push((r, *spec, v)),
            Err(e) => problems.push(e.to_string()),
        }
    }
    if !problems.is_empty() {
        return Err(Error::Referential(problems));
    }

    let mut verdict_counts = BTreeMap::new();
    for (_, _, v) in &verdicts {
        let key = serde_json::to_value(v)?.as_str().unwrap_or_default().to_string();
        *verdict_counts.entry(key).or_insert(0) += 1;
    }

    // answers from fully valid responses, control items excluded
    let mut per_item: BTreeMap<String, Vec<Label>> = BTreeMap::new();
    for (r, spec, v) in &verdicts {
        if !v.is_valid() {
            continue;
        }
        for id in &spec.item_ids {
            if !spec.is_control(id) {
                per_item.entry(id.clone()).or_default().push(r.answers[id]);
            }
        }
    }
    let consensus: BTreeMap<String, Consensus> = per_item
        .iter()
        .map(|(id, answers)| Ok((id.clone(), consensus_label(answers)?)))
        .collect::<Result<_>>()?;
    let gold = resolve_gold(expert_gold, &consensus);

    let valid: Vec<&WorkerResponse> = verdicts
        .iter()
        .filter(|(_, _, v)| v.is_valid())
        .map(|(r, _, _)| *r)
        .collect();
    let worker_kappa = per_worker_kappa(valid.iter().copied(), &gold)?;

    let mut reliability = Vec::new();
    for &k in &opts.worker_counts {
        let eligible: Vec<Vec<Label>> = per_item
            .values()
            .filter(|a| a.len() >= k)
            .cloned()
            .collect();
        let skipped = per_item.len() - eligible.len();
        let estimate = if eligible.len() >= 2 && k >= 2 {
            Some(worker_subset_reliability(&eligible, k, opts.trials, opts.seed)?)
        } else {
            None
        };
        reliability.push(ReliabilityEntry {
            k,
            n_items_skipped: skipped,
            estimate,
        });
    }

    // the sweep studies duration, so only the control check filters here
    let control_ok: Vec<WorkerResponse> = verdicts
        .iter()
        .filter(|(_, _, v)| matches!(v, Verdict::Ok | Verdict::TooFast))
        .map(|(r, _, _)| (*r).clone())
        .collect();
    let mut sweep = cutoff_sweep(&control_ok, &gold, &opts.cutoffs, SweepDirection::Lower)?;
    sweep.extend(cutoff_sweep(
        &control_ok,
        &gold,
        &opts.cutoffs,
        SweepDirection::Upper,
    )?);

    let items: Vec<ItemConsensus> = consensus
        .iter()
        .map(|(id, c)| ItemConsensus {
            id: id.clone(),
            n_valid: per_item[id].len(),
            consensus: *c,
            gold: gold.get(id).copied(),
        })
        .collect();
    let n_unresolved = items
        .iter()
        .filter(|c| c.consensus == Consensus::Unresolved)
        .count();

    Ok(QcReport {
        policy: opts.policy,
        n_responses: responses.len(),
        n_valid: valid.len(),
        verdict_counts,
        verdicts: verdicts
            .iter()
            .map(|(r, _, v)| ResponseVerdict {
                assignment_id: r.assignment_id.clone(),
                worker_id: r.worker_id.clone(),
                duration_s: r.duration_s,
                verdict: *v,
            })
            .collect(),
        consensus: items,
        n_unresolved,
        worker_kappa,
        reliability,
        sweep,
    })
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(reader: impl BufRead) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: n + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn read_assignments(reader: impl BufRead) -> Result<Vec<AssignmentSpec>> {
    read_jsonl(reader)
}

pub fn read_responses(reader: impl BufRead) -> Result<Vec<WorkerResponse>> {
    read_jsonl(reader)
}

#[derive(Deserialize)]
struct GoldRecord {
    id: String,
    label: i64,
}

pub fn read_gold(reader: impl BufRead) -> Result<HashMap<String, Label>> {
    let records: Vec<GoldRecord> = read_jsonl(reader)?;
    records
        .into_iter()
        .map(|r| Ok((r.id, parse_label(r.label)?)))
        .collect()
}
