//! Random forest of Gini decision trees over sparse count features.
//!
//! Each tree draws a bootstrap sample and, at every node, considers a random
//! subset of the features that are not constant within the node. Sampling
//! among non-constant features is what makes trees keep splitting on very
//! sparse text data instead of stopping at nodes whose sampled columns happen
//! to be all zero. Probabilities are the fraction of trees voting for each
//! class.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, ProbDist};
use crate::corpus::{Label, SparseVector};
use crate::rng::{derive_seed, seeded_rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    /// Features tried per split; `None` means `ceil(sqrt(n_features))`.
    pub max_features: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            bootstrap: true,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(Label),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

fn feature_value(x: &SparseVector, feature: usize) -> f64 {
    let pairs = x.pairs();
    pairs
        .binary_search_by_key(&feature, |&(j, _)| j)
        .map(|i| pairs[i].1)
        .unwrap_or(0.0)
}

impl DecisionTree {
    pub fn predict(&self, x: &SparseVector) -> Label {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(c) => return c,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if feature_value(x, feature) <= threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((at, d)) = stack.pop() {
            best = best.max(d);
            if let Node::Split { left, right, .. } = self.nodes[at] {
                stack.push((left, d + 1));
                stack.push((right, d + 1));
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn votes(&self, x: &SparseVector) -> [usize; 2] {
        let pos = self.trees.iter().filter(|t| t.predict(x) == 1).count();
        [self.trees.len() - pos, pos]
    }

    pub fn predict_proba(&self, x: &SparseVector) -> ProbDist {
        let [_, pos] = self.votes(x);
        ProbDist::binary(pos as f64 / self.trees.len() as f64)
    }
}

pub fn fit(data: &Dataset<'_>, params: &ForestParams, seed: u64) -> RandomForest {
    let n_trees = params.n_trees.max(1);
    let columns = columns(data);
    let build = |t: usize| {
        let mut rng = seeded_rng(derive_seed(seed, &[t as u64]));
        build_tree(data, &columns, params, &mut rng)
    };
    #[cfg(feature = "parallel")]
    let trees = {
        use rayon::prelude::*;
        (0..n_trees).into_par_iter().map(build).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let trees = (0..n_trees).map(build).collect();
    RandomForest { trees }
}

/// Column-major copy of the rows: `(row, value)` per feature.
fn columns(data: &Dataset<'_>) -> Vec<Vec<(u32, f64)>> {
    let mut cols = vec![Vec::new(); data.n_features()];
    for (i, x) in data.rows().iter().enumerate() {
        for &(j, v) in x.pairs() {
            cols[j].push((i as u32, v));
        }
    }
    cols
}

fn gini_sum(w0: f64, w1: f64) -> f64 {
    // weight * impurity = w - (w0^2 + w1^2) / w
    let w = w0 + w1;
    if w <= 0.0 {
        0.0
    } else {
        w - (w0 * w0 + w1 * w1) / w
    }
}

/// Per-tree work arrays, reset between nodes by bumping `epoch`.
struct Scratch {
    epoch: u32,
    member: Vec<u32>,
    scanned: Vec<u32>,
    perm: Vec<usize>,
    perm_stamp: Vec<u32>,
    stamp: Vec<u32>,
    first_value: Vec<f64>,
    nonzero_weight: Vec<f64>,
    varied: Vec<bool>,
    slot: Vec<usize>,
    slot_stamp: Vec<u32>,
    cols: Vec<Column>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    cost: f64,
}

struct Tree<'a> {
    rows: &'a [&'a SparseVector],
    columns: &'a [Vec<(u32, f64)>],
    labels: &'a [Label],
    weight: Vec<u32>,
    mtry: usize,
    min_leaf: f64,
}

fn build_tree(
    data: &Dataset<'_>,
    columns: &[Vec<(u32, f64)>],
    params: &ForestParams,
    rng: &mut ChaCha8Rng,
) -> DecisionTree {
    let n = data.len();
    let d = data.n_features();
    let mut weight = vec![0u32; n];
    if params.bootstrap {
        for _ in 0..n {
            weight[rng.gen_range(0..n)] += 1;
        }
    } else {
        weight.fill(1);
    }
    let tree = Tree {
        rows: data.rows(),
        columns,
        labels: data.labels(),
        weight,
        mtry: params
            .max_features
            .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
            .max(1),
        min_leaf: params.min_samples_leaf.max(1) as f64,
    };
    let mut scratch = Scratch {
        epoch: 0,
        member: vec![0; n],
        scanned: vec![0; d],
        perm: vec![0; d],
        perm_stamp: vec![0; d],
        stamp: vec![0; d],
        first_value: vec![0.0; d],
        nonzero_weight: vec![0.0; d],
        varied: vec![false; d],
        slot: vec![0; d],
        slot_stamp: vec![0; d],
        cols: Vec::new(),
    };

    let mut order: Vec<u32> = (0..n as u32).filter(|&i| tree.weight[i as usize] > 0).collect();
    let mut nodes = vec![Node::Leaf(0)];
    // (node, start, end, depth) over ranges of `order`
    let mut stack = vec![(0usize, 0usize, order.len(), 0usize)];

    while let Some((at, start, end, depth)) = stack.pop() {
        let members = &mut order[start..end];
        let mut class_w = [0.0f64; 2];
        for &i in members.iter() {
            class_w[usize::from(tree.labels[i as usize])] += f64::from(tree.weight[i as usize]);
        }
        let majority: Label = if class_w[1] > class_w[0] { 1 } else { 0 };
        let total = class_w[0] + class_w[1];
        let pure = class_w[0] == 0.0 || class_w[1] == 0.0;
        if pure || params.max_depth.is_some_and(|m| depth >= m) || total < 2.0 * tree.min_leaf {
            nodes[at] = Node::Leaf(majority);
            continue;
        }

        let Some(best) = find_split(&tree, members, class_w, &mut scratch, rng) else {
            nodes[at] = Node::Leaf(majority);
            continue;
        };
        // stamp the rows above the threshold, then move the others to the front
        scratch.epoch += 1;
        let right_mark = scratch.epoch;
        for &(i, v) in &tree.columns[best.feature] {
            if v > best.threshold {
                scratch.member[i as usize] = right_mark;
            }
        }
        let mut split = 0;
        for k in 0..members.len() {
            if scratch.member[members[k] as usize] != right_mark {
                members.swap(k, split);
                split += 1;
            }
        }
        let left = nodes.len();
        nodes.push(Node::Leaf(0));
        let right = nodes.len();
        nodes.push(Node::Leaf(0));
        nodes[at] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        stack.push((right, start + split, end, depth + 1));
        stack.push((left, start, start + split, depth + 1));
    }
    DecisionTree { nodes }
}

type Column = Vec<(f64, Label, f64)>;

/// Picks a uniform random subset of `mtry` features among those not
/// constant in the node and returns the best Gini split over them.
///
/// Features are drawn one at a time from a lazy permutation and tested by
/// scanning their columns, which is cheap in large nodes. Once the scans
/// cost more than half the node's nonzeros, the remaining picks are drawn
/// from the full candidate set computed row-wise. Both routes keep the
/// selection uniform.
fn find_split(
    tree: &Tree<'_>,
    members: &[u32],
    class_w: [f64; 2],
    s: &mut Scratch,
    rng: &mut ChaCha8Rng,
) -> Option<BestSplit> {
    s.epoch += 1;
    let epoch = s.epoch;
    let total = class_w[0] + class_w[1];
    let d = tree.columns.len();
    let non_constant = |nonzero_weight: f64, varied: bool| {
        varied || (nonzero_weight > 0.0 && nonzero_weight < total)
    };
    for &i in members {
        s.member[i as usize] = epoch;
    }
    let node_nnz: usize = members.iter().map(|&i| tree.rows[i as usize].nnz()).sum();

    let mut picked: Vec<usize> = Vec::new();
    let mut cols = std::mem::take(&mut s.cols);
    let mut spare: Vec<Column> = Vec::new();
    let fresh = |spare: &mut Vec<Column>| {
        let mut c = spare.pop().unwrap_or_default();
        c.clear();
        c
    };
    spare.append(&mut cols);
    let mut drawn = 0;
    let mut spent = 0;
    while picked.len() < tree.mtry && drawn < d && spent < node_nnz / 2 {
        let r = rng.gen_range(drawn..d);
        let at = |k: usize, s: &Scratch| if s.perm_stamp[k] == epoch { s.perm[k] } else { k };
        let j = at(r, s);
        s.perm[r] = at(drawn, s);
        s.perm_stamp[r] = epoch;
        drawn += 1;
        s.scanned[j] = epoch;
        spent += tree.columns[j].len();

        let mut col = fresh(&mut spare);
        let mut nonzero_weight = 0.0;
        let mut varied = false;
        for &(i, v) in &tree.columns[j] {
            if s.member[i as usize] == epoch {
                let w = f64::from(tree.weight[i as usize]);
                nonzero_weight += w;
                varied |= col.first().is_some_and(|&(v0, _, _)| v0 != v);
                col.push((v, tree.labels[i as usize], w));
            }
        }
        if non_constant(nonzero_weight, varied) {
            picked.push(j);
            cols.push(col);
        } else {
            spare.push(col);
        }
    }

    if picked.len() < tree.mtry && drawn < d {
        let mut touched = Vec::new();
        for &i in members {
            let w = f64::from(tree.weight[i as usize]);
            for &(j, v) in tree.rows[i as usize].pairs() {
                if s.stamp[j] != epoch {
                    s.stamp[j] = epoch;
                    s.first_value[j] = v;
                    s.nonzero_weight[j] = 0.0;
                    s.varied[j] = false;
                    touched.push(j);
                }
                s.nonzero_weight[j] += w;
                if v != s.first_value[j] {
                    s.varied[j] = true;
                }
            }
        }
        let candidates: Vec<usize> = touched
            .into_iter()
            .filter(|&j| s.scanned[j] != epoch && non_constant(s.nonzero_weight[j], s.varied[j]))
            .collect();
        let need = (tree.mtry - picked.len()).min(candidates.len());
        let extra: Vec<usize> = sample(rng, candidates.len(), need)
            .into_iter()
            .map(|k| candidates[k])
            .collect();

        let column_cost: usize = extra.iter().map(|&j| tree.columns[j].len()).sum();
        if column_cost <= node_nnz {
            for &j in &extra {
                let mut col = fresh(&mut spare);
                col.extend(
                    tree.columns[j]
                        .iter()
                        .filter(|&&(i, _)| s.member[i as usize] == epoch)
                        .map(|&(i, v)| (v, tree.labels[i as usize], f64::from(tree.weight[i as usize]))),
                );
                cols.push(col);
            }
        } else {
            let base = cols.len();
            for (k, &j) in extra.iter().enumerate() {
                s.slot[j] = base + k;
                s.slot_stamp[j] = epoch;
            }
            for _ in &extra {
                let col = fresh(&mut spare);
                cols.push(col);
            }
            for &i in members {
                let w = f64::from(tree.weight[i as usize]);
                let y = tree.labels[i as usize];
                for &(j, v) in tree.rows[i as usize].pairs() {
                    if s.slot_stamp[j] == epoch {
                        cols[s.slot[j]].push((v, y, w));
                    }
                }
            }
        }
        picked.extend(extra);
    }

    let mut best: Option<BestSplit> = None;
    for (k, col) in cols.iter_mut().enumerate() {
        col.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut nz = [0.0f64; 2];
        for &(_, y, w) in col.iter() {
            nz[usize::from(y)] += w;
        }
        // left side starts with the implicit zeros
        let mut left = [class_w[0] - nz[0], class_w[1] - nz[1]];
        let mut prev = 0.0;
        let mut idx = 0;
        while idx < col.len() {
            let v = col[idx].0;
            let lw = left[0] + left[1];
            if lw > 0.0 && v > prev {
                let rw = total - lw;
                if lw >= tree.min_leaf && rw >= tree.min_leaf {
                    let cost = gini_sum(left[0], left[1])
                        + gini_sum(class_w[0] - left[0], class_w[1] - left[1]);
                    if best.as_ref().is_none_or(|b| cost < b.cost) {
                        best = Some(BestSplit {
                            feature: picked[k],
                            threshold: prev + (v - prev) / 2.0,
                            cost,
                        });
                    }
                }
            }
            while idx < col.len() && col[idx].0 == v {
                left[usize::from(col[idx].1)] += col[idx].2;
                idx += 1;
            }
            prev = v;
        }
    }
    cols.append(&mut spare);
    s.cols = cols;
    best
}
