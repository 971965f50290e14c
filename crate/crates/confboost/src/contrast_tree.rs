//! Greedy contrast tree over the feature space.
//!
//! The tree partitions rows to expose regions whose empirical coverage
//! deviates most from the target rate 1-α. Each round considers every
//! (leaf, feature, threshold) candidate, scores it by the larger child
//! deviation weighted by the square root of the child size, and splits only
//! when the winning candidate raises the current maximum leaf deviation and
//! both children keep at least `min_leaf` rows. Thresholds are searched over
//! at most 64 empirical quantile cut points per feature.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conformal::Interval;
use crate::data::FeatureMatrix;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("empty group")]
    EmptyGroup,
    #[error("need at least {needed} rows for min_leaf={min_leaf}, got {got}")]
    InsufficientRows {
        needed: usize,
        got: usize,
        min_leaf: usize,
    },
    #[error("max_leaves must be at least 1")]
    ZeroLeaves,
    #[error("no rows to evaluate")]
    NoEvaluationRows,
    #[error("feature count mismatch: tree fitted on {fitted}, got {got}")]
    FeatureMismatch { fitted: usize, got: usize },
}

/// Per-sample coverage indicators 1(y_i ∈ C(x_i)).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageIndicators(pub Vec<bool>);

impl CoverageIndicators {
    pub fn from_intervals(intervals: &[Interval], y: &[f64]) -> Self {
        CoverageIndicators(
            intervals
                .iter()
                .zip(y.iter())
                .map(|(iv, &yi)| iv.contains(yi))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// |mean coverage over `idx` - (1-α)|.
pub fn group_deviation(
    covered: &CoverageIndicators,
    idx: &[usize],
    alpha: f64,
) -> Result<f64, TreeError> {
    if idx.is_empty() {
        return Err(TreeError::EmptyGroup);
    }
    let hits = idx.iter().filter(|&&i| covered.0[i]).count();
    Ok((hits as f64 / idx.len() as f64 - (1.0 - alpha)).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        leaf: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafInfo {
    /// Row positions of the fit data routed to this leaf.
    pub indices: Vec<usize>,
    /// Deviation of this leaf on the fit data.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastTree {
    nodes: Vec<Node>,
    leaves: Vec<LeafInfo>,
    pub alpha: f64,
    pub min_leaf: usize,
    pub max_leaves: usize,
    n_features: usize,
}

/// Default minimum leaf size: max(50, ⌈0.05·n⌉).
pub fn default_min_leaf(n: usize) -> usize {
    50.max((0.05 * n as f64).ceil() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct SplitCandidate {
    /// Selection score: the larger of the two children's deviation scaled by
    /// the square root of the child size. Plain deviation would chase noise
    /// pockets of size min_leaf, whose binomial fluctuations dominate any
    /// real signal; the √n scaling is the z-statistic of the deviation and
    /// discourages small subsets.
    score: f64,
    /// Raw (unweighted) deviation of the better child, for the stop rule.
    max_child_dev: f64,
    feature: usize,
    threshold: f64,
}

/// Up to `max_cuts` empirical quantile cut values from a sorted value slice,
/// excluding the maximum (a cut at the max leaves the right child empty).
fn quantile_cuts(sorted_values: &[f64], max_cuts: usize) -> Vec<f64> {
    let n = sorted_values.len();
    if n < 2 {
        return Vec::new();
    }
    let max_value = sorted_values[n - 1];
    let mut cuts = Vec::new();
    if n <= max_cuts + 1 {
        for &v in sorted_values {
            if v < max_value && cuts.last() != Some(&v) {
                cuts.push(v);
            }
        }
    } else {
        for k in 1..=max_cuts {
            let pos = k * n / (max_cuts + 1);
            let v = sorted_values[pos.min(n - 1)];
            if v < max_value && cuts.last() != Some(&v) {
                cuts.push(v);
            }
        }
    }
    cuts
}

/// Best admissible split of one leaf along one feature, if any.
fn best_split_on_feature(
    x: &FeatureMatrix,
    covered: &CoverageIndicators,
    rows: &[usize],
    feature: usize,
    alpha: f64,
    min_leaf: usize,
) -> Option<SplitCandidate> {
    let mut pairs: Vec<(f64, bool)> = rows
        .iter()
        .map(|&i| (x.get(i, feature), covered.0[i]))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let sorted_values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let cuts = quantile_cuts(&sorted_values, 64);

    let n = pairs.len();
    let total_hits = pairs.iter().filter(|p| p.1).count();
    let target = 1.0 - alpha;

    let mut best: Option<SplitCandidate> = None;
    let mut ptr = 0usize;
    let mut left_hits = 0usize;
    for &cut in &cuts {
        while ptr < n && pairs[ptr].0 <= cut {
            if pairs[ptr].1 {
                left_hits += 1;
            }
            ptr += 1;
        }
        let n_left = ptr;
        let n_right = n - ptr;
        if n_left < min_leaf || n_right < min_leaf {
            continue;
        }
        let d_left = (left_hits as f64 / n_left as f64 - target).abs();
        let d_right = ((total_hits - left_hits) as f64 / n_right as f64 - target).abs();
        let score = (d_left * (n_left as f64).sqrt()).max(d_right * (n_right as f64).sqrt());
        // Strict improvement keeps the lowest threshold on ties.
        if best.map_or(true, |b| score > b.score) {
            best = Some(SplitCandidate {
                score,
                max_child_dev: d_left.max(d_right),
                feature,
                threshold: cut,
            });
        }
    }
    best
}

fn best_split_of_leaf(
    x: &FeatureMatrix,
    covered: &CoverageIndicators,
    rows: &[usize],
    alpha: f64,
    min_leaf: usize,
) -> Option<SplitCandidate> {
    if rows.len() < 2 * min_leaf {
        return None;
    }
    // Ordered collect keeps the reduction independent of thread count.
    let per_feature: Vec<Option<SplitCandidate>> = (0..x.n_cols())
        .into_par_iter()
        .map(|f| best_split_on_feature(x, covered, rows, f, alpha, min_leaf))
        .collect();
    let mut best: Option<SplitCandidate> = None;
    for cand in per_feature.into_iter().flatten() {
        let better = match best {
            None => true,
            // Lowest feature index, then lowest threshold, on score ties.
            Some(b) => cand.score > b.score,
        };
        if better {
            best = Some(cand);
        }
    }
    best
}

/// Grow a contrast tree on the fit data.
pub fn fit_contrast_tree(
    x: &FeatureMatrix,
    covered: &CoverageIndicators,
    alpha: f64,
    max_leaves: usize,
    min_leaf: usize,
) -> Result<ContrastTree, TreeError> {
    if max_leaves == 0 {
        return Err(TreeError::ZeroLeaves);
    }
    let n = x.n_rows();
    if n < 2 * min_leaf {
        return Err(TreeError::InsufficientRows { needed: 2 * min_leaf, got: n, min_leaf });
    }
    let all_rows: Vec<usize> = (0..n).collect();
    let root_dev = group_deviation(covered, &all_rows, alpha)?;
    let mut tree = ContrastTree {
        nodes: vec![Node::Leaf { leaf: 0 }],
        leaves: vec![LeafInfo { indices: all_rows, deviation: root_dev }],
        alpha,
        min_leaf,
        max_leaves,
        n_features: x.n_cols(),
    };
    // Node arena position of each leaf id.
    let mut leaf_node: Vec<usize> = vec![0];

    while tree.leaves.len() < max_leaves {
        let current_max = tree
            .leaves
            .iter()
            .map(|l| l.deviation)
            .fold(f64::NEG_INFINITY, f64::max);

        let mut chosen: Option<(usize, SplitCandidate)> = None;
        for (leaf_id, leaf) in tree.leaves.iter().enumerate() {
            if let Some(cand) = best_split_of_leaf(x, covered, &leaf.indices, alpha, min_leaf) {
                let better = match &chosen {
                    None => true,
                    Some((_, b)) => cand.score > b.score,
                };
                if better {
                    chosen = Some((leaf_id, cand));
                }
            }
        }
        let Some((leaf_id, cand)) = chosen else { break };
        // Split only when it raises the maximum leaf deviation.
        if cand.max_child_dev <= current_max {
            break;
        }

        let old = std::mem::take(&mut tree.leaves[leaf_id].indices);
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = old
            .into_iter()
            .partition(|&i| x.get(i, cand.feature) <= cand.threshold);
        let d_left = group_deviation(covered, &left_rows, alpha)?;
        let d_right = group_deviation(covered, &right_rows, alpha)?;

        let left_node = tree.nodes.len();
        let right_node = tree.nodes.len() + 1;
        tree.nodes.push(Node::Leaf { leaf: leaf_id });
        let right_leaf = tree.leaves.len();
        tree.nodes.push(Node::Leaf { leaf: right_leaf });
        tree.nodes[leaf_node[leaf_id]] = Node::Split {
            feature: cand.feature,
            threshold: cand.threshold,
            left: left_node,
            right: right_node,
        };
        tree.leaves[leaf_id] = LeafInfo { indices: left_rows, deviation: d_left };
        leaf_node[leaf_id] = left_node;
        tree.leaves.push(LeafInfo { indices: right_rows, deviation: d_right });
        leaf_node.push(right_node);
    }
    Ok(tree)
}

impl ContrastTree {
    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn leaves(&self) -> &[LeafInfo] {
        &self.leaves
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Maximum leaf deviation recorded on the fit data.
    pub fn fit_max_deviation(&self) -> f64 {
        self.leaves
            .iter()
            .map(|l| l.deviation)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The root split (feature, threshold), if the tree has one.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes[0] {
            Node::Split { feature, threshold, .. } => Some((feature, threshold)),
            Node::Leaf { .. } => None,
        }
    }

    /// Route one feature row to its leaf id (left on `value <= threshold`).
    pub fn route(&self, row: &[f64]) -> usize {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                Node::Split { feature, threshold, left, right } => {
                    at = if row[feature] <= threshold { left } else { right };
                }
                Node::Leaf { leaf } => return leaf,
            }
        }
    }
}

/// Leaf label of every row of `x`.
pub fn assign_leaves(tree: &ContrastTree, x: &FeatureMatrix) -> Result<Vec<usize>, TreeError> {
    if x.n_cols() != tree.n_features {
        return Err(TreeError::FeatureMismatch { fitted: tree.n_features, got: x.n_cols() });
    }
    Ok((0..x.n_rows()).map(|i| tree.route(x.row(i))).collect())
}

/// Maximum within-leaf deviation on (possibly held-out) evaluation data; leaves
/// that receive no rows are skipped.
pub fn max_deviation(
    tree: &ContrastTree,
    x: &FeatureMatrix,
    covered: &CoverageIndicators,
    alpha: f64,
) -> Result<f64, TreeError> {
    let labels = assign_leaves(tree, x)?;
    let mut hits = vec![0usize; tree.n_leaves()];
    let mut counts = vec![0usize; tree.n_leaves()];
    for (i, &leaf) in labels.iter().enumerate() {
        counts[leaf] += 1;
        if covered.0[i] {
            hits[leaf] += 1;
        }
    }
    let target = 1.0 - alpha;
    let mut max_dev: Option<f64> = None;
    for leaf in 0..tree.n_leaves() {
        if counts[leaf] == 0 {
            continue;
        }
        let dev = (hits[leaf] as f64 / counts[leaf] as f64 - target).abs();
        max_dev = Some(max_dev.map_or(dev, |m: f64| m.max(dev)));
    }
    max_dev.ok_or(TreeError::NoEvaluationRows)
}
