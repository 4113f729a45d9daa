//! Multi-parameter Newton boosting.
//!
//! One tree per distributional parameter per round. Every round evaluates the
//! head's gradients and hessians once, from the same raw-score snapshot, then
//! grows the K trees independently and applies them together; hessians are
//! floored at `hessian_floor` before tree growth. Raw scores start at the
//! head's unconditional maximum-likelihood offsets.

use crate::bins::{build_bins, BinMapper, BinnedDataset, FeatureMatrix};
use crate::data::{TabularData, TransformSpec};
use crate::error::{Error, Result};
use crate::head::{DistributionHead, HeadDescriptor};
use crate::tree::{grow_tree, Tree, TreeParams};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Early-stopping policy: hold out a validation fraction and stop once the
/// validation NLL has not improved for `patience` rounds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct EarlyStopping {
    pub validation_fraction: f64,
    pub patience: usize,
}

/// Boosting-loop configuration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FitConfig {
    pub boosting_rounds: usize,
    /// Hessians are clamped from below at this value before tree growth.
    pub hessian_floor: f64,
    /// Off by default.
    pub early_stopping: Option<EarlyStopping>,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            boosting_rounds: 1000,
            hessian_floor: 1e-6,
            early_stopping: None,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.hessian_floor > 0.0) {
            problems.push(format!("hessian_floor must be > 0, got {}", self.hessian_floor));
        }
        if let Some(es) = &self.early_stopping {
            if !(es.validation_fraction > 0.0 && es.validation_fraction < 1.0) {
                problems.push(format!(
                    "validation_fraction must be in (0,1), got {}",
                    es.validation_fraction
                ));
            }
            if es.patience < 1 {
                problems.push("patience must be >= 1".to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(problems.join("; ")))
        }
    }
}

/// A fitted distributional model: offsets plus rounds x K trees.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionalModel {
    pub schema_version: u32,
    pub head: HeadDescriptor,
    pub offsets: Vec<f64>,
    /// trees[r][k] is the round-r tree for raw parameter k.
    pub trees: Vec<Vec<Tree>>,
    pub tree_params: TreeParams,
    pub mapper: BinMapper,
    pub n_features: usize,
    pub feature_names: Vec<String>,
    pub response_name: String,
    /// Transform the response was trained under; predictions invert it.
    pub response_transform: TransformSpec,
}

impl DistributionalModel {
    pub fn n_params(&self) -> usize {
        self.offsets.len()
    }

    pub fn n_rounds(&self) -> usize {
        self.trees.len()
    }

    fn check_invariants(&self) -> Result<()> {
        let k = self.offsets.len();
        if k == 0 {
            return Err(Error::model("model has no offsets"));
        }
        if self.offsets.iter().any(|o| !o.is_finite()) {
            return Err(Error::model("model offsets must be finite"));
        }
        for (r, round) in self.trees.iter().enumerate() {
            if round.len() != k {
                return Err(Error::model(format!(
                    "round {r} has {} trees, expected {k}",
                    round.len()
                )));
            }
        }
        if self.mapper.n_features() != self.n_features {
            return Err(Error::model(format!(
                "bin mapper covers {} features, model declares {}",
                self.mapper.n_features(),
                self.n_features
            )));
        }
        Ok(())
    }

    /// Total split gain per feature, summed over all rounds and parameters.
    pub fn split_gain_importance(&self) -> Vec<f64> {
        let mut gains = vec![0.0; self.n_features];
        for round in &self.trees {
            for tree in round {
                tree.accumulate_split_gain(&mut gains);
            }
        }
        gains
    }
}

/// Raw-score matrix: one row of K scores per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawScores {
    pub values: Vec<f64>,
    pub n_rows: usize,
    pub k: usize,
}

impl RawScores {
    fn from_offsets(offsets: &[f64], n_rows: usize) -> Self {
        let k = offsets.len();
        let mut values = Vec::with_capacity(n_rows * k);
        for _ in 0..n_rows {
            values.extend_from_slice(offsets);
        }
        RawScores { values, n_rows, k }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }
}

/// Unconditional-MLE offsets for the head; raw scores start here.
pub fn compute_offsets(head: &dyn DistributionHead, y: &[f64]) -> Result<Vec<f64>> {
    if y.is_empty() {
        return Err(Error::invalid_input("offsets need a non-empty response"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid_input("offsets need a finite response"));
    }
    head.unconditional_fit(y)
}

/// Per-round training trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitLog {
    /// Mean train NLL at the offsets, before any tree.
    pub initial_nll: f64,
    /// Mean train NLL after each round.
    pub train_nll: Vec<f64>,
    /// Mean validation NLL after each round (early stopping only).
    pub val_nll: Vec<f64>,
    /// Round the model was truncated to when early stopping fired.
    pub stopped_at: Option<usize>,
}

/// Model plus its training trace.
#[derive(Debug)]
pub struct FitOutput {
    pub model: DistributionalModel,
    pub log: FitLog,
}

fn mean_nll(head: &dyn DistributionHead, y: &[f64], eta: &RawScores) -> f64 {
    let per_row: Vec<f64> = y
        .par_iter()
        .enumerate()
        .map(|(i, &yi)| head.nll(yi, eta.row(i)))
        .collect();
    per_row.iter().sum::<f64>() / y.len() as f64
}

/// Fit a distributional model.
///
/// Each round: gradients/hessians for all K parameters from the round-start
/// raw scores, hessian flooring, one tree per parameter (grown in parallel),
/// then all K updates applied at once with the learning rate.
pub fn fit(
    data: &TabularData,
    head: &dyn DistributionHead,
    tree_params: &TreeParams,
    config: &FitConfig,
) -> Result<FitOutput> {
    tree_params.validate()?;
    config.validate()?;
    let n = data.n_rows();
    if n < 2 {
        return Err(Error::invalid_input(format!("fit needs at least 2 rows, got {n}")));
    }
    if data.response.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid_input("response must be finite"));
    }

    // offsets come from the full training response, before any internal split
    let offsets = compute_offsets(head, &data.response)?;
    let k = head.n_params();
    debug_assert_eq!(offsets.len(), k);

    // optional early-stopping holdout
    let (train_rows, val_rows): (Vec<usize>, Vec<usize>) = match &config.early_stopping {
        Some(es) => {
            let mut idx: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            idx.shuffle(&mut rng);
            let val_size = ((es.validation_fraction * n as f64).round() as usize).clamp(1, n - 1);
            let val = idx[n - val_size..].to_vec();
            let train = idx[..n - val_size].to_vec();
            (train, val)
        }
        None => ((0..n).collect(), Vec::new()),
    };
    let train = data.select(&train_rows);
    let mapper = build_bins(&train.features, tree_params.max_bin)?;
    let binned = BinnedDataset::from_parts(mapper, train.features.clone(), train.response.clone())?;

    let val = (!val_rows.is_empty()).then(|| data.select(&val_rows));
    let val_bins = match &val {
        Some(v) => Some(binned.mapper.bin_matrix(&v.features)?),
        None => None,
    };

    let n_train = train.n_rows();
    let mut eta = RawScores::from_offsets(&offsets, n_train);
    let mut eta_val = val.as_ref().map(|v| RawScores::from_offsets(&offsets, v.n_rows()));

    let initial_nll = mean_nll(head, &train.response, &eta);
    if !initial_nll.is_finite() {
        return Err(Error::Numeric {
            round: 0,
            param: 0,
            message: "mean NLL non-finite at the offsets".to_string(),
        });
    }

    let mut trees: Vec<Vec<Tree>> = Vec::with_capacity(config.boosting_rounds);
    let mut log = FitLog {
        initial_nll,
        train_nll: Vec::new(),
        val_nll: Vec::new(),
        stopped_at: None,
    };
    let mut best_val = f64::INFINITY;
    let mut best_round = 0usize;

    for round in 0..config.boosting_rounds {
        // one gradient/hessian snapshot for all K parameters
        let gh: Vec<(Vec<f64>, Vec<f64>)> = train
            .response
            .par_iter()
            .enumerate()
            .map(|(i, &yi)| {
                let mut g = vec![0.0; k];
                let mut h = vec![0.0; k];
                head.grad_hess(yi, eta.row(i), &mut g, &mut h);
                (g, h)
            })
            .collect();

        // column layout with flooring, plus finiteness checks naming the parameter
        let mut grad_cols = vec![vec![0.0; n_train]; k];
        let mut hess_cols = vec![vec![0.0; n_train]; k];
        for (i, (g, h)) in gh.iter().enumerate() {
            for p in 0..k {
                if !g[p].is_finite() || !h[p].is_finite() {
                    return Err(Error::Numeric {
                        round,
                        param: p,
                        message: format!(
                            "non-finite gradient/hessian ({}, {}) at row {i}",
                            g[p], h[p]
                        ),
                    });
                }
                grad_cols[p][i] = g[p];
                hess_cols[p][i] = h[p].max(config.hessian_floor);
            }
        }

        let round_trees: Vec<Tree> = (0..k)
            .into_par_iter()
            .map(|p| grow_tree(&binned, &grad_cols[p], &hess_cols[p], tree_params))
            .collect::<Result<Vec<Tree>>>()?;

        // apply all K updates together
        for (p, tree) in round_trees.iter().enumerate() {
            let preds = tree.predict_binned(&binned);
            for (i, pred) in preds.iter().enumerate() {
                eta.values[i * k + p] += tree_params.learning_rate * pred;
            }
            if let (Some(ev), Some(vb), Some(v)) = (eta_val.as_mut(), val_bins.as_ref(), val.as_ref())
            {
                for i in 0..v.n_rows() {
                    let row_bins = &vb[i * v.n_features()..(i + 1) * v.n_features()];
                    let pred = predict_tree_bins(tree, &binned.mapper, row_bins);
                    ev.values[i * k + p] += tree_params.learning_rate * pred;
                }
            }
        }
        trees.push(round_trees);

        let train_nll = mean_nll(head, &train.response, &eta);
        if !train_nll.is_finite() {
            return Err(Error::Numeric {
                round,
                param: 0,
                message: "mean train NLL became non-finite".to_string(),
            });
        }
        log.train_nll.push(train_nll);

        if let (Some(ev), Some(v)) = (eta_val.as_ref(), val.as_ref()) {
            let val_nll = mean_nll(head, &v.response, ev);
            log.val_nll.push(val_nll);
            let patience = config.early_stopping.as_ref().unwrap().patience;
            if val_nll < best_val {
                best_val = val_nll;
                best_round = round;
            } else if round - best_round >= patience {
                trees.truncate(best_round + 1);
                log.stopped_at = Some(best_round);
                break;
            }
        }
    }

    let model = DistributionalModel {
        schema_version: MODEL_SCHEMA_VERSION,
        head: head.descriptor(),
        offsets,
        trees,
        tree_params: tree_params.clone(),
        mapper: binned.mapper,
        n_features: data.n_features(),
        feature_names: data.feature_names.clone(),
        response_name: data.response_name.clone(),
        response_transform: TransformSpec::default(),
    };
    Ok(FitOutput { model, log })
}

fn predict_tree_bins(tree: &Tree, mapper: &BinMapper, row_bins: &[u16]) -> f64 {
    let mut idx = 0;
    loop {
        match &tree.nodes[idx] {
            crate::tree::Node::Leaf { weight } => return *weight,
            crate::tree::Node::Branch { feature, bin, missing_left, left, right, .. } => {
                let b = row_bins[*feature];
                let go_left = if b == mapper.missing_bin(*feature) {
                    *missing_left
                } else {
                    b <= *bin
                };
                idx = if go_left { *left } else { *right };
            }
        }
    }
}

/// Raw scores for every row: offset_k + sum_r lr * tree_{r,k}(x).
pub fn predict_raw(model: &DistributionalModel, features: &FeatureMatrix) -> Result<RawScores> {
    if features.n_cols != model.n_features {
        return Err(Error::invalid_input(format!(
            "feature count mismatch: data has {}, model expects {}",
            features.n_cols, model.n_features
        )));
    }
    let k = model.n_params();
    let bins = model.mapper.bin_matrix(features)?;
    let lr = model.tree_params.learning_rate;
    let values: Vec<f64> = (0..features.n_rows)
        .into_par_iter()
        .flat_map_iter(|i| {
            let row_bins = &bins[i * features.n_cols..(i + 1) * features.n_cols];
            let mut eta = model.offsets.clone();
            for round in &model.trees {
                for (p, tree) in round.iter().enumerate() {
                    eta[p] += lr * predict_tree_bins(tree, &model.mapper, row_bins);
                }
            }
            eta
        })
        .collect();
    Ok(RawScores { values, n_rows: features.n_rows, k })
}

/// Serialize a model as versioned JSON (full round-trip number precision).
pub fn save_model(model: &DistributionalModel, path: &Path) -> Result<()> {
    model.check_invariants()?;
    let file = std::fs::File::create(path)?;
    let mut writer = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, model)
        .map_err(|e| Error::model(format!("serialization failed: {e}")))?;
    use std::io::Write;
    writer.flush()?;
    Ok(())
}

/// Load and validate a model file.
pub fn load_model(path: &Path) -> Result<DistributionalModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::model(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::model(format!("malformed JSON at line {}, column {}: {e}", e.line(), e.column())))?;

    let version = value.get("schema_version").and_then(|v| v.as_u64());
    match version {
        Some(v) if v == MODEL_SCHEMA_VERSION as u64 => {}
        Some(v) => {
            return Err(Error::model(format!(
                "unsupported schema version {v}, this build reads version {MODEL_SCHEMA_VERSION}"
            )))
        }
        None => return Err(Error::model("missing schema_version field".to_string())),
    }
    if let Some(name) = value.get("head").and_then(|h| h.get("name")).and_then(|n| n.as_str()) {
        if !HeadDescriptor::SUPPORTED.contains(&name) {
            return Err(Error::model(format!(
                "unknown head '{name}'; supported heads: {}",
                HeadDescriptor::SUPPORTED.join(", ")
            )));
        }
    }

    let model: DistributionalModel = serde_json::from_value(value)
        .map_err(|e| Error::model(format!("invalid model document: {e}")))?;
    model.check_invariants()?;
    Ok(model)
}

/// Instantiate the head a model was trained with.
pub fn head_for(descriptor: &HeadDescriptor) -> Result<Box<dyn DistributionHead>> {
    match descriptor {
        HeadDescriptor::Gaussian => Ok(Box::new(crate::gaussian::GaussianHead)),
        HeadDescriptor::BernsteinFlow { order } => {
            Ok(Box::new(crate::flow::BernsteinFlowHead::new(*order)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::simulate_heteroskedastic;
    use crate::gaussian::GaussianHead;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn noise_data(n: usize, seed: u64, gen_y: impl Fn(&mut ChaCha8Rng) -> f64) -> TabularData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let response: Vec<f64> = (0..n).map(|_| gen_y(&mut rng)).collect();
        TabularData {
            feature_names: vec!["noise".to_string()],
            response_name: "y".to_string(),
            features: FeatureMatrix::new(values, n, 1),
            response,
        }
    }

    #[test]
    fn gaussian_offsets_examples() {
        let head = GaussianHead;
        let off = compute_offsets(&head, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(off[0], 2.0);
        assert!((off[1] - (-0.202733)).abs() < 1e-5);
        assert!(compute_offsets(&head, &[]).is_err());
        assert!(compute_offsets(&head, &[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn zero_rounds_predicts_offsets() {
        let data = noise_data(50, 1, |rng| rng.gen_range(-1.0..1.0));
        let head = GaussianHead;
        let config = FitConfig { boosting_rounds: 0, ..FitConfig::default() };
        let out = fit(&data, &head, &TreeParams::default(), &config).unwrap();
        assert_eq!(out.model.n_rounds(), 0);
        let raw = predict_raw(&out.model, &data.features).unwrap();
        for i in 0..data.n_rows() {
            assert_eq!(raw.row(i), out.model.offsets.as_slice());
        }
    }

    #[test]
    fn recovers_constant_gaussian_moments() {
        // y ~ N(3, 2^2), one pure-noise feature: mu within 0.1, sigma within 15%
        let data = noise_data(1500, 2, |rng| 3.0 + 2.0 * rng.sample::<f64, _>(StandardNormal));
        let head = GaussianHead;
        let config = FitConfig { boosting_rounds: 200, ..FitConfig::default() };
        let params = TreeParams { learning_rate: 0.1, ..TreeParams::default() };
        let out = fit(&data, &head, &params, &config).unwrap();
        let raw = predict_raw(&out.model, &data.features).unwrap();
        let mean_mu: f64 =
            (0..data.n_rows()).map(|i| raw.row(i)[0]).sum::<f64>() / data.n_rows() as f64;
        let mean_sigma: f64 =
            (0..data.n_rows()).map(|i| raw.row(i)[1].exp()).sum::<f64>() / data.n_rows() as f64;
        assert!((mean_mu - 3.0).abs() < 0.1, "mu {mean_mu}");
        assert!((mean_sigma - 2.0).abs() / 2.0 < 0.15, "sigma {mean_sigma}");
    }

    #[test]
    fn train_nll_decreases() {
        let data = simulate_heteroskedastic(800, 3).unwrap();
        let head = GaussianHead;
        let config = FitConfig { boosting_rounds: 50, ..FitConfig::default() };
        let out = fit(&data, &head, &TreeParams::default(), &config).unwrap();
        assert!(out.log.train_nll.last().unwrap() < &out.log.initial_nll);
    }

    #[test]
    fn predict_raw_matches_manual_tree_sum() {
        let data = simulate_heteroskedastic(300, 4).unwrap();
        let head = GaussianHead;
        let config = FitConfig { boosting_rounds: 7, ..FitConfig::default() };
        let out = fit(&data, &head, &TreeParams::default(), &config).unwrap();
        let model = &out.model;
        let raw = predict_raw(model, &data.features).unwrap();
        // brute-force additive oracle through the public per-tree prediction
        for i in (0..data.n_rows()).step_by(29) {
            for p in 0..2 {
                let mut eta = model.offsets[p];
                for round in &model.trees {
                    let preds = round[p].predict(&model.mapper, &data.features).unwrap();
                    eta += model.tree_params.learning_rate * preds[i];
                }
                assert!((raw.row(i)[p] - eta).abs() < 1e-12);
            }
        }
    }

    /// Reconstructing a round by hand (even with the per-parameter trees grown
    /// in reverse order) must reproduce fit's trees: all K gradients come from
    /// the same round-start snapshot.
    #[test]
    fn round_updates_are_order_invariant() {
        let data = simulate_heteroskedastic(400, 5).unwrap();
        let head = GaussianHead;
        let params = TreeParams::default();
        let config = FitConfig { boosting_rounds: 3, ..FitConfig::default() };
        let out = fit(&data, &head, &params, &config).unwrap();

        // manual simulation
        let mapper = build_bins(&data.features, params.max_bin).unwrap();
        let binned =
            BinnedDataset::from_parts(mapper, data.features.clone(), data.response.clone()).unwrap();
        let offsets = compute_offsets(&head, &data.response).unwrap();
        let n = data.n_rows();
        let mut eta = RawScores::from_offsets(&offsets, n);
        for round in 0..3 {
            let mut grads = vec![vec![0.0; n]; 2];
            let mut hesses = vec![vec![0.0; n]; 2];
            for i in 0..n {
                let mut g = [0.0; 2];
                let mut h = [0.0; 2];
                head.grad_hess(data.response[i], eta.row(i), &mut g, &mut h);
                for p in 0..2 {
                    grads[p][i] = g[p];
                    hesses[p][i] = h[p].max(1e-6);
                }
            }
            // grow in reverse parameter order
            let t1 = grow_tree(&binned, &grads[1], &hesses[1], &params).unwrap();
            let t0 = grow_tree(&binned, &grads[0], &hesses[0], &params).unwrap();
            assert_eq!(t0, out.model.trees[round][0]);
            assert_eq!(t1, out.model.trees[round][1]);
            for (p, tree) in [t0, t1].iter().enumerate() {
                let preds = tree.predict_binned(&binned);
                for i in 0..n {
                    eta.values[i * 2 + p] += params.learning_rate * preds[i];
                }
            }
        }
    }

    #[test]
    fn reproducible_given_seed() {
        let data = simulate_heteroskedastic(300, 6).unwrap();
        let head = GaussianHead;
        let config = FitConfig { boosting_rounds: 5, ..FitConfig::default() };
        let a = fit(&data, &head, &TreeParams::default(), &config).unwrap();
        let b = fit(&data, &head, &TreeParams::default(), &config).unwrap();
        assert_eq!(a.model.trees, b.model.trees);
        assert_eq!(a.model.offsets, b.model.offsets);
    }

    #[test]
    fn early_stopping_truncates() {
        let data = noise_data(400, 7, |rng| rng.sample::<f64, _>(StandardNormal));
        let head = GaussianHead;
        let config = FitConfig {
            boosting_rounds: 300,
            early_stopping: Some(EarlyStopping { validation_fraction: 0.2, patience: 5 }),
            ..FitConfig::default()
        };
        let out = fit(&data, &head, &TreeParams::default(), &config).unwrap();
        // pure noise: validation NLL stops improving well before 300 rounds
        let stopped = out.log.stopped_at.expect("early stopping should fire on noise");
        assert_eq!(out.model.n_rounds(), stopped + 1);
        assert!(out.model.n_rounds() < 300);
    }

    #[test]
    fn save_load_round_trip_bit_identical() {
        let data = simulate_heteroskedastic(200, 8).unwrap();
        let head = GaussianHead;
        let config = FitConfig { boosting_rounds: 4, ..FitConfig::default() };
        let out = fit(&data, &head, &TreeParams::default(), &config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&out.model, &path).unwrap();
        let loaded = load_model(&path).unwrap();

        let test = simulate_heteroskedastic(100, 9).unwrap();
        let a = predict_raw(&out.model, &test.features).unwrap();
        let b = predict_raw(&loaded, &test.features).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truncated_model_file_rejected() {
        let data = simulate_heteroskedastic(100, 10).unwrap();
        let head = GaussianHead;
        let config = FitConfig { boosting_rounds: 2, ..FitConfig::default() };
        let out = fit(&data, &head, &TreeParams::default(), &config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&out.model, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, &text[..text.len() / 2]).unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(matches!(err, Error::Model(_)));
        assert!(err.to_string().contains("line"), "{err}");
    }

    #[test]
    fn unknown_head_name_lists_supported() {
        let data = simulate_heteroskedastic(100, 11).unwrap();
        let head = GaussianHead;
        let config = FitConfig { boosting_rounds: 1, ..FitConfig::default() };
        let out = fit(&data, &head, &TreeParams::default(), &config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&out.model, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace("\"gaussian\"", "\"cauchy\"")).unwrap();
        let err = load_model(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("cauchy"), "{msg}");
        assert!(msg.contains("gaussian") && msg.contains("bernstein_flow"), "{msg}");
    }

    #[test]
    fn schema_version_mismatch_rejected() {
        let data = simulate_heteroskedastic(100, 12).unwrap();
        let head = GaussianHead;
        let config = FitConfig { boosting_rounds: 1, ..FitConfig::default() };
        let out = fit(&data, &head, &TreeParams::default(), &config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&out.model, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace("\"schema_version\": 1", "\"schema_version\": 99")).unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(err.to_string().contains("schema version 99"), "{err}");
    }
}
