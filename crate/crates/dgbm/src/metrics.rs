//! Probabilistic-forecast scoring and benchmark report aggregation.
//!
//! CRPS comes in two estimators: the sample form
//!
//!   CRPS = (1/n) sum_i |x_i - y|  -  (1/(2 n^2)) sum_ij |x_i - x_j|
//!
//! computed in O(n log n) after sorting, and the pinball-loss form that
//! integrates the quantile loss QL_a = 2 (1{y <= q(a)} - a)(q(a) - y) over a
//! grid of levels. Reports aggregate per-fold scores into median [q25, q75]
//! cells with per-dataset ranks and average ranks per model.

use crate::error::{Error, Result};
use crate::math::percentile_sorted;
use serde::{Deserialize, Serialize};

/// Sample-based CRPS estimator, O(n log n).
pub fn crps_samples(samples: &[f64], y: f64) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::invalid_input(format!(
            "CRPS needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mean_abs: f64 = xs.iter().map(|x| (x - y).abs()).sum::<f64>() / n;
    // sum_{i<j} (x_(j) - x_(i)) = sum_i (2i - n + 1) x_(i) for sorted samples
    let pair_sum: f64 = xs
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * i as f64 - n + 1.0) * x)
        .sum();
    Ok(mean_abs - pair_sum / (n * n))
}

/// Pinball (quantile) loss at level `alpha`.
#[inline]
pub fn quantile_loss(quantile: f64, y: f64, alpha: f64) -> f64 {
    let indicator = if y <= quantile { 1.0 } else { 0.0 };
    2.0 * (indicator - alpha) * (quantile - y)
}

/// CRPS via quantile-loss integration over `alpha_grid` (strictly increasing,
/// inside (0,1)). Trapezoidal weights are closed to the full unit interval,
/// so a single level carries weight one.
pub fn crps_quantile_integration(
    quantile_fn: impl Fn(f64) -> f64,
    y: f64,
    alpha_grid: &[f64],
) -> Result<f64> {
    if alpha_grid.is_empty() {
        return Err(Error::invalid_input("alpha grid must not be empty"));
    }
    for (i, &a) in alpha_grid.iter().enumerate() {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::invalid_input(format!(
                "alpha grid entries must lie in (0,1), got {a}"
            )));
        }
        if i > 0 && a <= alpha_grid[i - 1] {
            return Err(Error::invalid_input("alpha grid must be strictly increasing"));
        }
    }
    let k = alpha_grid.len();
    let mut total = 0.0;
    for (i, &a) in alpha_grid.iter().enumerate() {
        let lo = if i == 0 { 0.0 } else { 0.5 * (alpha_grid[i - 1] + a) };
        let hi = if i == k - 1 { 1.0 } else { 0.5 * (a + alpha_grid[i + 1]) };
        total += quantile_loss(quantile_fn(a), y, a) * (hi - lo);
    }
    Ok(total)
}

/// Fraction of observations inside [lower, upper], inclusive.
pub fn coverage(lower: &[f64], upper: &[f64], y: &[f64]) -> Result<f64> {
    if lower.len() != upper.len() || lower.len() != y.len() {
        return Err(Error::invalid_input(format!(
            "coverage length mismatch: lower {}, upper {}, y {}",
            lower.len(),
            upper.len(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::invalid_input("coverage needs at least one observation"));
    }
    let inside = y
        .iter()
        .zip(lower)
        .zip(upper)
        .filter(|&((&yi, &lo), &hi)| lo <= yi && yi <= hi)
        .count();
    Ok(inside as f64 / y.len() as f64)
}

/// Per-fold scores for one (dataset, model) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldScores {
    pub dataset: String,
    pub model: String,
    pub scores: Vec<f64>,
}

/// Median and interquartile bounds of one cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSummary {
    pub dataset: String,
    pub model: String,
    pub n_folds: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

/// Ranks of the models on one dataset (1 = best, ascending median).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetRanks {
    pub dataset: String,
    /// (model, rank); models with an empty cell are excluded.
    pub ranks: Vec<(String, usize)>,
}

/// Aggregated benchmark report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub cells: Vec<CellSummary>,
    pub dataset_ranks: Vec<DatasetRanks>,
    /// (model, average rank over datasets where the model has a cell).
    pub average_ranks: Vec<(String, f64)>,
    /// Cells that had no scores, listed as (dataset, model).
    pub missing: Vec<(String, String)>,
}

/// Aggregate per-fold scores. Dataset and model order follows first
/// appearance in `scores`; ranks are by ascending median with ties broken by
/// model order, so every rank list is a permutation of 1..n.
pub fn aggregate_report(scores: &[FoldScores]) -> EvalReport {
    let mut datasets: Vec<String> = Vec::new();
    let mut models: Vec<String> = Vec::new();
    for s in scores {
        if !datasets.contains(&s.dataset) {
            datasets.push(s.dataset.clone());
        }
        if !models.contains(&s.model) {
            models.push(s.model.clone());
        }
    }

    let mut cells = Vec::new();
    let mut missing = Vec::new();
    for ds in &datasets {
        for model in &models {
            let cell: Vec<f64> = scores
                .iter()
                .filter(|s| &s.dataset == ds && &s.model == model)
                .flat_map(|s| s.scores.iter().copied())
                .collect();
            if cell.is_empty() {
                missing.push((ds.clone(), model.clone()));
                continue;
            }
            let mut sorted = cell.clone();
            sorted.sort_by(f64::total_cmp);
            cells.push(CellSummary {
                dataset: ds.clone(),
                model: model.clone(),
                n_folds: cell.len(),
                median: percentile_sorted(&sorted, 0.5),
                q25: percentile_sorted(&sorted, 0.25),
                q75: percentile_sorted(&sorted, 0.75),
            });
        }
    }

    let mut dataset_ranks = Vec::new();
    for ds in &datasets {
        let mut entries: Vec<(usize, String, f64)> = cells
            .iter()
            .filter(|c| &c.dataset == ds)
            .map(|c| {
                let order = models.iter().position(|m| m == &c.model).unwrap();
                (order, c.model.clone(), c.median)
            })
            .collect();
        entries.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));
        let mut ranks: Vec<(String, usize)> = entries
            .into_iter()
            .enumerate()
            .map(|(i, (_, model, _))| (model, i + 1))
            .collect();
        // present ranks in model order for stable output
        ranks.sort_by_key(|(model, _)| models.iter().position(|m| m == model).unwrap());
        dataset_ranks.push(DatasetRanks { dataset: ds.clone(), ranks });
    }

    let average_ranks = models
        .iter()
        .map(|model| {
            let rs: Vec<f64> = dataset_ranks
                .iter()
                .flat_map(|dr| {
                    dr.ranks
                        .iter()
                        .filter(|(m, _)| m == model)
                        .map(|(_, r)| *r as f64)
                })
                .collect();
            let avg = if rs.is_empty() {
                f64::NAN
            } else {
                rs.iter().sum::<f64>() / rs.len() as f64
            };
            (model.clone(), avg)
        })
        .collect();

    EvalReport { cells, dataset_ranks, average_ranks, missing }
}

/// Format a score the way the report tables print it: four decimals with
/// trailing zeros trimmed, e.g. 1.7300 -> "1.73".
pub fn format_score(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

impl EvalReport {
    /// Plain-text tables: one median [q25, q75] grid and one rank grid.
    pub fn render_text(&self) -> String {
        let mut datasets: Vec<&str> = Vec::new();
        let mut models: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !datasets.contains(&c.dataset.as_str()) {
                datasets.push(&c.dataset);
            }
            if !models.contains(&c.model.as_str()) {
                models.push(&c.model);
            }
        }

        let cell_text = |ds: &str, model: &str| -> String {
            self.cells
                .iter()
                .find(|c| c.dataset == ds && c.model == model)
                .map(|c| {
                    format!(
                        "{} [{}, {}]",
                        format_score(c.median),
                        format_score(c.q25),
                        format_score(c.q75)
                    )
                })
                .unwrap_or_else(|| "-".to_string())
        };

        let mut width = vec![0usize; models.len() + 1];
        width[0] = datasets.iter().map(|d| d.len()).max().unwrap_or(7).max(7);
        for (j, model) in models.iter().enumerate() {
            width[j + 1] = model.len();
            for ds in &datasets {
                width[j + 1] = width[j + 1].max(cell_text(ds, model).len());
            }
        }

        let mut out = String::new();
        out.push_str(&format!("{:<w$}", "dataset", w = width[0]));
        for (j, model) in models.iter().enumerate() {
            out.push_str(&format!("  {:>w$}", model, w = width[j + 1]));
        }
        out.push('\n');
        for ds in &datasets {
            out.push_str(&format!("{:<w$}", ds, w = width[0]));
            for (j, model) in models.iter().enumerate() {
                out.push_str(&format!("  {:>w$}", cell_text(ds, model), w = width[j + 1]));
            }
            out.push('\n');
        }

        out.push_str("\nranks (1 = best)\n");
        out.push_str(&format!("{:<w$}", "dataset", w = width[0]));
        for model in &models {
            out.push_str(&format!("  {:>w$}", model, w = model.len().max(4)));
        }
        out.push('\n');
        for dr in &self.dataset_ranks {
            out.push_str(&format!("{:<w$}", dr.dataset, w = width[0]));
            for model in &models {
                let rank = dr
                    .ranks
                    .iter()
                    .find(|(m, _)| m == model)
                    .map(|(_, r)| r.to_string())
                    .unwrap_or_else(|| "-".to_string());
                out.push_str(&format!("  {:>w$}", rank, w = model.len().max(4)));
            }
            out.push('\n');
        }
        out.push_str(&format!("{:<w$}", "average", w = width[0]));
        for model in &models {
            let avg = self
                .average_ranks
                .iter()
                .find(|(m, _)| m == model)
                .map(|(_, a)| format!("{a:.1}"))
                .unwrap_or_else(|| "-".to_string());
            out.push_str(&format!("  {:>w$}", avg, w = model.len().max(4)));
        }
        out.push('\n');
        out
    }
}
