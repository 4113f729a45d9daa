//! Histogram-based regression trees with Newton split finding.
//!
//! Trees are grown best-first (loss-guide): the candidate split with the
//! highest gain anywhere in the tree is applied next, until `max_leaves` is
//! reached or no admissible split remains. Split gain and leaf weights follow
//! the second-order expansion of the loss:
//!
//!   gain = 1/2 [ G_L^2/(H_L+l) + G_R^2/(H_R+l) - (G_L+G_R)^2/(H_L+H_R+l) ]
//!   leaf weight = -G / (H + l)
//!
//! Split search parallelizes across features; per-feature accumulation is
//! sequential in row order, so results are independent of thread count.

use crate::bins::{BinMapper, BinnedDataset, FeatureMatrix};
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Tree growth hyper-parameters. Defaults mirror the benchmark settings
/// (max_bin 64, max_leaves 16, min_data_in_leaf 1, min_split_gain 0, lambda 1).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TreeParams {
    pub learning_rate: f64,
    pub max_bin: usize,
    pub max_leaves: usize,
    /// 0 = unlimited depth.
    pub max_depth: usize,
    pub min_data_in_leaf: usize,
    pub min_split_gain: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            learning_rate: 0.1,
            max_bin: 64,
            max_leaves: 16,
            max_depth: 0,
            min_data_in_leaf: 1,
            min_split_gain: 0.0,
            lambda: 1.0,
        }
    }
}

impl TreeParams {
    /// Check every bound, collecting all violations into one message.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.learning_rate > 0.0) {
            problems.push(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if self.max_bin < 2 {
            problems.push(format!("max_bin must be >= 2, got {}", self.max_bin));
        }
        if self.max_bin > u16::MAX as usize {
            problems.push(format!("max_bin must fit in 16 bits, got {}", self.max_bin));
        }
        if self.max_leaves < 2 {
            problems.push(format!("max_leaves must be >= 2, got {}", self.max_leaves));
        }
        if self.min_data_in_leaf < 1 {
            problems.push(format!("min_data_in_leaf must be >= 1, got {}", self.min_data_in_leaf));
        }
        if !(self.min_split_gain >= 0.0) {
            problems.push(format!("min_split_gain must be >= 0, got {}", self.min_split_gain));
        }
        if !(self.lambda >= 0.0) {
            problems.push(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(problems.join("; ")))
        }
    }
}

/// One tree node; children index into the owning tree's node array.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum Node {
    Branch {
        feature: usize,
        /// Rows with bin index <= `bin` go left; the missing bin follows `missing_left`.
        bin: u16,
        missing_left: bool,
        gain: f64,
        left: usize,
        right: usize,
    },
    Leaf { weight: f64 },
}

/// A regression tree. Node 0 is the root.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn single_leaf(weight: f64) -> Self {
        Tree { nodes: vec![Node::Leaf { weight }] }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Route one row of raw feature values (NaN = missing).
    pub fn predict_row(&self, mapper: &BinMapper, row: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { weight } => return *weight,
                Node::Branch { feature, bin, missing_left, left, right, .. } => {
                    let v = row[*feature];
                    let go_left = if v.is_nan() {
                        *missing_left
                    } else {
                        mapper.bin_for_value(*feature, v) <= *bin
                    };
                    idx = if go_left { *left } else { *right };
                }
            }
        }
    }

    /// Predict every row of a raw feature matrix.
    pub fn predict(&self, mapper: &BinMapper, features: &FeatureMatrix) -> Result<Vec<f64>> {
        if features.n_cols != mapper.n_features() {
            return Err(Error::invalid_input(format!(
                "feature count mismatch: data has {}, model expects {}",
                features.n_cols,
                mapper.n_features()
            )));
        }
        Ok((0..features.n_rows)
            .map(|r| self.predict_row(mapper, features.row(r)))
            .collect())
    }

    /// Predict training rows through their precomputed bin indices.
    pub fn predict_binned(&self, data: &BinnedDataset) -> Vec<f64> {
        (0..data.n_rows())
            .map(|row| {
                let mut idx = 0;
                loop {
                    match &self.nodes[idx] {
                        Node::Leaf { weight } => return *weight,
                        Node::Branch { feature, bin, missing_left, left, right, .. } => {
                            let b = data.bin(row, *feature);
                            let go_left = if b == data.mapper.missing_bin(*feature) {
                                *missing_left
                            } else {
                                b <= *bin
                            };
                            idx = if go_left { *left } else { *right };
                        }
                    }
                }
            })
            .collect()
    }

    /// Total split gain per feature, the plain importance measure.
    pub fn accumulate_split_gain(&self, out: &mut [f64]) {
        for node in &self.nodes {
            if let Node::Branch { feature, gain, .. } = node {
                out[*feature] += gain;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct BinAcc {
    g: f64,
    h: f64,
    count: u32,
}

type Histogram = Vec<Vec<BinAcc>>;

fn build_histogram(data: &BinnedDataset, rows: &[u32], grad: &[f64], hess: &[f64]) -> Histogram {
    let n_features = data.n_features();
    (0..n_features)
        .into_par_iter()
        .map(|feature| {
            let mut bins = vec![BinAcc::default(); data.mapper.n_bins(feature)];
            for &row in rows {
                let r = row as usize;
                let b = data.bin(r, feature) as usize;
                let acc = &mut bins[b];
                acc.g += grad[r];
                acc.h += hess[r];
                acc.count += 1;
            }
            bins
        })
        .collect()
}

fn subtract_histogram(parent: &Histogram, child: &Histogram) -> Histogram {
    parent
        .iter()
        .zip(child)
        .map(|(p, c)| {
            p.iter()
                .zip(c)
                .map(|(pb, cb)| BinAcc {
                    g: pb.g - cb.g,
                    h: pb.h - cb.h,
                    count: pb.count - cb.count,
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Split {
    gain: f64,
    feature: usize,
    bin: u16,
    missing_left: bool,
    left_g: f64,
    left_h: f64,
}

#[inline]
fn leaf_objective(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

/// Best split for one feature, scanning bins in ascending order so the lowest
/// admissible bin wins gain ties. The missing bin is tried on both sides.
fn best_split_for_feature(
    feature: usize,
    bins: &[BinAcc],
    n_value_bins: usize,
    total_g: f64,
    total_h: f64,
    total_count: u32,
    params: &TreeParams,
) -> Option<Split> {
    let missing = bins[n_value_bins];
    let parent_obj = leaf_objective(total_g, total_h, params.lambda);
    let mut best: Option<Split> = None;

    let mut finite_g = 0.0;
    let mut finite_h = 0.0;
    let mut finite_count = 0u32;
    for t in 0..n_value_bins {
        finite_g += bins[t].g;
        finite_h += bins[t].h;
        finite_count += bins[t].count;
        // missing-left first so it is preferred when gains tie exactly
        for missing_left in [true, false] {
            let (lg, lh, lc) = if missing_left {
                (finite_g + missing.g, finite_h + missing.h, finite_count + missing.count)
            } else {
                (finite_g, finite_h, finite_count)
            };
            let rc = total_count - lc;
            if (lc as usize) < params.min_data_in_leaf || (rc as usize) < params.min_data_in_leaf {
                continue;
            }
            let rg = total_g - lg;
            let rh = total_h - lh;
            let gain = 0.5
                * (leaf_objective(lg, lh, params.lambda) + leaf_objective(rg, rh, params.lambda)
                    - parent_obj);
            if gain <= params.min_split_gain {
                continue;
            }
            if best.map_or(true, |b| gain > b.gain) {
                best = Some(Split {
                    gain,
                    feature,
                    bin: t as u16,
                    missing_left,
                    left_g: lg,
                    left_h: lh,
                });
            }
        }
    }
    best
}

/// Best split over all features. Per-feature searches run in parallel; the
/// reduction scans features in index order with strict improvement, so the
/// lowest feature index wins ties and thread count never changes the result.
fn best_split(
    data: &BinnedDataset,
    hist: &Histogram,
    total_g: f64,
    total_h: f64,
    total_count: u32,
    params: &TreeParams,
) -> Option<Split> {
    let candidates: Vec<Option<Split>> = (0..data.n_features())
        .into_par_iter()
        .map(|feature| {
            best_split_for_feature(
                feature,
                &hist[feature],
                data.mapper.n_value_bins(feature),
                total_g,
                total_h,
                total_count,
                params,
            )
        })
        .collect();
    let mut best: Option<Split> = None;
    for cand in candidates.into_iter().flatten() {
        if best.map_or(true, |b| cand.gain > b.gain) {
            best = Some(cand);
        }
    }
    best
}

struct Candidate {
    split: Split,
    node_idx: usize,
    depth: usize,
    rows: Vec<u32>,
    hist: Histogram,
    total_g: f64,
    total_h: f64,
    /// Creation sequence; earlier candidates win exact gain ties.
    seq: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.split
            .gain
            .total_cmp(&other.split.gain)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Grow one tree on (grad, hess). Hessians must already be non-negative;
/// flooring is the boosting layer's job.
pub fn grow_tree(
    data: &BinnedDataset,
    grad: &[f64],
    hess: &[f64],
    params: &TreeParams,
) -> Result<Tree> {
    params.validate()?;
    let n = data.n_rows();
    if grad.len() != n || hess.len() != n {
        return Err(Error::invalid_input(format!(
            "gradient/hessian length ({}, {}) does not match row count {}",
            grad.len(),
            hess.len(),
            n
        )));
    }
    debug_assert!(hess.iter().all(|&h| h >= 0.0), "hessians must be >= 0");

    let rows: Vec<u32> = (0..n as u32).collect();
    let total_g: f64 = grad.iter().sum();
    let total_h: f64 = hess.iter().sum();

    let mut tree = Tree {
        nodes: vec![Node::Leaf { weight: -total_g / (total_h + params.lambda) }],
    };
    let mut heap: BinaryHeap<Candidate> = BinaryHeap::new();
    let mut seq = 0usize;

    let can_split_depth = |depth: usize| params.max_depth == 0 || depth < params.max_depth;
    if n >= 2 * params.min_data_in_leaf && can_split_depth(0) {
        let hist = build_histogram(data, &rows, grad, hess);
        if let Some(split) = best_split(data, &hist, total_g, total_h, n as u32, params) {
            heap.push(Candidate {
                split,
                node_idx: 0,
                depth: 0,
                rows,
                hist,
                total_g,
                total_h,
                seq,
            });
            seq += 1;
        }
    }

    let mut n_leaves = 1;
    while n_leaves < params.max_leaves {
        let Some(cand) = heap.pop() else { break };
        let split = cand.split;

        // stable partition keeps row order, so child histograms are reproducible
        let missing_bin = data.mapper.missing_bin(split.feature);
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = cand.rows.into_iter().partition(|&row| {
            let b = data.bin(row as usize, split.feature);
            if b == missing_bin {
                split.missing_left
            } else {
                b <= split.bin
            }
        });

        let left_g = split.left_g;
        let left_h = split.left_h;
        let right_g = cand.total_g - left_g;
        let right_h = cand.total_h - left_h;

        let left_idx = tree.nodes.len();
        tree.nodes.push(Node::Leaf { weight: -left_g / (left_h + params.lambda) });
        let right_idx = tree.nodes.len();
        tree.nodes.push(Node::Leaf { weight: -right_g / (right_h + params.lambda) });
        tree.nodes[cand.node_idx] = Node::Branch {
            feature: split.feature,
            bin: split.bin,
            missing_left: split.missing_left,
            gain: split.gain,
            left: left_idx,
            right: right_idx,
        };
        n_leaves += 1;

        let child_depth = cand.depth + 1;
        if !can_split_depth(child_depth) {
            continue;
        }

        // subtraction trick: build the smaller child's histogram, derive the other
        let left_smaller = left_rows.len() <= right_rows.len();
        let small_rows = if left_smaller { &left_rows } else { &right_rows };
        let small_hist = build_histogram(data, small_rows, grad, hess);
        let large_hist = subtract_histogram(&cand.hist, &small_hist);
        let (left_hist, right_hist) = if left_smaller {
            (small_hist, large_hist)
        } else {
            (large_hist, small_hist)
        };

        let mut push_child = |rows: Vec<u32>, hist: Histogram, idx: usize, g: f64, h: f64| {
            if rows.len() >= 2 * params.min_data_in_leaf {
                if let Some(split) = best_split(data, &hist, g, h, rows.len() as u32, params) {
                    heap.push(Candidate {
                        split,
                        node_idx: idx,
                        depth: child_depth,
                        rows,
                        hist,
                        total_g: g,
                        total_h: h,
                        seq,
                    });
                    seq += 1;
                }
            }
        };
        push_child(left_rows, left_hist, left_idx, left_g, left_h);
        push_child(right_rows, right_hist, right_idx, right_g, right_h);
    }

    Ok(tree)
}
