//! Dataset ingestion, fold protocol, response transforms and the
//! heteroskedastic simulation generator.
//!
//! CSV files are comma-separated with a header row, '.' decimal point and
//! empty cells as missing markers. The response column must be fully finite.
//! Folds follow the shuffled-split protocol: each fold independently shuffles
//! the row indices and holds out the last round(0.1 N) rows for testing.

use crate::bins::FeatureMatrix;
use crate::error::{Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// A loaded tabular dataset: features (NaN = missing) plus a finite response.
#[derive(Debug, Clone)]
pub struct TabularData {
    pub feature_names: Vec<String>,
    pub response_name: String,
    pub features: FeatureMatrix,
    pub response: Vec<f64>,
}

impl TabularData {
    pub fn n_rows(&self) -> usize {
        self.features.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols
    }

    /// Row subset in the given index order.
    pub fn select(&self, rows: &[usize]) -> TabularData {
        let n_cols = self.features.n_cols;
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        let mut response = Vec::with_capacity(rows.len());
        for &r in rows {
            values.extend_from_slice(self.features.row(r));
            response.push(self.response[r]);
        }
        TabularData {
            feature_names: self.feature_names.clone(),
            response_name: self.response_name.clone(),
            features: FeatureMatrix::new(values, rows.len(), n_cols),
            response,
        }
    }

    /// Write as CSV with the feature columns followed by the response.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        let mut header: Vec<&str> = self.feature_names.iter().map(|s| s.as_str()).collect();
        header.push(&self.response_name);
        w.write_record(&header).map_err(csv_err)?;
        for r in 0..self.n_rows() {
            let mut record: Vec<String> = self
                .features
                .row(r)
                .iter()
                .map(|v| if v.is_nan() { String::new() } else { format!("{v}") })
                .collect();
            record.push(format!("{}", self.response[r]));
            w.write_record(&record).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::data(e.to_string())
}

/// Load a CSV file, parsing every non-response column as a feature.
/// Empty feature cells become missing markers; empty or non-numeric response
/// cells are errors naming the offending data row.
pub fn load_csv(path: &Path, response_column: &str) -> Result<TabularData> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|s| s.to_string())
        .collect();
    let response_idx = headers
        .iter()
        .position(|h| h == response_column)
        .ok_or_else(|| {
            Error::data(format!(
                "response column '{response_column}' not found; available: {}",
                headers.join(", ")
            ))
        })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != response_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if feature_names.is_empty() {
        return Err(Error::data("dataset needs at least one feature column"));
    }

    let mut values = Vec::new();
    let mut response = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::data(format!("row {}: {e}", row_idx + 1)))?;
        if record.len() != headers.len() {
            return Err(Error::data(format!(
                "row {}: expected {} columns, found {}",
                row_idx + 1,
                headers.len(),
                record.len()
            )));
        }
        for (col_idx, cell) in record.iter().enumerate() {
            if col_idx == response_idx {
                let v: f64 = cell.parse().map_err(|_| {
                    Error::data(format!(
                        "row {}: response cell '{cell}' is not numeric",
                        row_idx + 1
                    ))
                })?;
                if !v.is_finite() {
                    return Err(Error::data(format!(
                        "row {}: response must be finite, got {v}",
                        row_idx + 1
                    )));
                }
                response.push(v);
            } else if cell.is_empty() {
                values.push(f64::NAN);
            } else {
                let v: f64 = cell.parse().map_err(|_| {
                    Error::data(format!(
                        "row {}: cell '{cell}' in column '{}' is not numeric",
                        row_idx + 1,
                        headers[col_idx]
                    ))
                })?;
                values.push(v);
            }
        }
    }
    if response.is_empty() {
        return Err(Error::data("dataset has no data rows"));
    }
    let n_rows = response.len();
    Ok(TabularData {
        features: FeatureMatrix::new(values, n_rows, feature_names.len()),
        feature_names,
        response_name: response_column.to_string(),
        response,
    })
}

/// One train/test split of the row indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// The shuffled-split fold plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub seed: u64,
    pub folds: Vec<Fold>,
}

/// Build `n_folds` independent shuffled 90/10 splits. Fold f shuffles with
/// seed `seed + f` and holds out the last round(0.1 N) indices.
pub fn make_folds(n_rows: usize, n_folds: usize, seed: u64) -> Result<FoldPlan> {
    if n_rows < 10 {
        return Err(Error::invalid_input(format!(
            "fold protocol needs at least 10 rows for a 10% test split, got {n_rows}"
        )));
    }
    if n_folds < 1 {
        return Err(Error::invalid_parameter("n_folds must be >= 1".to_string()));
    }
    let test_size = (0.1 * n_rows as f64).round() as usize;
    let folds = (0..n_folds)
        .map(|f| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed + f as u64);
            let mut idx: Vec<usize> = (0..n_rows).collect();
            idx.shuffle(&mut rng);
            let train = idx[..n_rows - test_size].to_vec();
            let test = idx[n_rows - test_size..].to_vec();
            Fold { train, test }
        })
        .collect();
    Ok(FoldPlan { seed, folds })
}

/// Response transform: optional log, then multiplicative scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransformSpec {
    pub log: bool,
    pub scale: f64,
}

impl Default for TransformSpec {
    fn default() -> Self {
        TransformSpec { log: false, scale: 1.0 }
    }
}

impl TransformSpec {
    pub fn is_identity(&self) -> bool {
        !self.log && self.scale == 1.0
    }

    /// Forward transform of a full response vector; log requires y > 0 and
    /// the error names every offending row.
    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        if self.log {
            let bad: Vec<usize> = y
                .iter()
                .enumerate()
                .filter(|(_, v)| **v <= 0.0)
                .map(|(i, _)| i + 1)
                .collect();
            if !bad.is_empty() {
                return Err(Error::data(format!(
                    "log transform requires positive responses; non-positive at rows {}",
                    bad.iter()
                        .take(10)
                        .map(|i| i.to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                )));
            }
        }
        Ok(y.iter().map(|&v| self.apply_value(v)).collect())
    }

    #[inline]
    pub fn apply_value(&self, y: f64) -> f64 {
        let v = if self.log { y.ln() } else { y };
        self.scale * v
    }

    /// Inverse transform for predictions and samples.
    #[inline]
    pub fn invert_value(&self, y: f64) -> f64 {
        let v = y / self.scale;
        if self.log {
            v.exp()
        } else {
            v
        }
    }
}

/// True conditional standard deviation of the simulated response:
/// 1 + 4 on (0.3, 0.5) + 2 above 0.7.
pub fn simulation_true_sd(x: f64) -> f64 {
    let mut s = 1.0;
    if x > 0.3 && x < 0.5 {
        s += 4.0;
    }
    if x > 0.7 {
        s += 2.0;
    }
    s
}

/// Heteroskedastic simulation: x ~ U(0,1), y ~ N(10, sd(x)^2), plus ten
/// uniform noise features X1..X10. Columns: "x", "X1".."X10", "y".
pub fn simulate_heteroskedastic(n: usize, seed: u64) -> Result<TabularData> {
    if n < 1 {
        return Err(Error::invalid_parameter("simulation size must be >= 1".to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_noise = 10;
    let n_cols = 1 + n_noise;
    let mut values = Vec::with_capacity(n * n_cols);
    let mut response = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = rng.gen_range(0.0..1.0);
        values.push(x);
        for _ in 0..n_noise {
            values.push(rng.gen_range(0.0..1.0));
        }
        let z: f64 = rng.sample(StandardNormal);
        response.push(10.0 + simulation_true_sd(x) * z);
    }
    let mut feature_names = vec!["x".to_string()];
    for i in 1..=n_noise {
        feature_names.push(format!("X{i}"));
    }
    Ok(TabularData {
        features: FeatureMatrix::new(values, n, n_cols),
        feature_names,
        response_name: "y".to_string(),
        response,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn load_basic_csv() {
        let f = write_temp("a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
        let data = load_csv(f.path(), "y").unwrap();
        assert_eq!(data.n_rows(), 3);
        assert_eq!(data.n_features(), 2);
        assert_eq!(data.response, vec![3.0, 6.0, 9.0]);
        assert_eq!(data.feature_names, vec!["a", "b"]);
    }

    #[test]
    fn empty_cell_becomes_missing() {
        let f = write_temp("a,y\n1,3\n,6\n");
        let data = load_csv(f.path(), "y").unwrap();
        assert!(data.features.get(1, 0).is_nan());
        assert!(!data.features.get(0, 0).is_nan());
    }

    #[test]
    fn bad_response_cell_names_row() {
        let f = write_temp("a,y\n1,3\n2,abc\n");
        let err = load_csv(f.path(), "y").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2"), "{msg}");
        assert!(msg.contains("abc"), "{msg}");
    }

    #[test]
    fn missing_response_column_lists_available() {
        let f = write_temp("a,b\n1,2\n");
        let err = load_csv(f.path(), "y").unwrap_err();
        assert!(err.to_string().contains("'y' not found"));
    }

    #[test]
    fn ragged_row_reported() {
        let f = write_temp("a,b,y\n1,2,3\n4,5\n");
        let err = load_csv(f.path(), "y").unwrap_err();
        assert!(err.to_string().contains("row 2") || err.to_string().contains("2"));
    }

    #[test]
    fn csv_round_trip() {
        let data = simulate_heteroskedastic(50, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sim.csv");
        data.write_csv(&path).unwrap();
        let back = load_csv(&path, "y").unwrap();
        assert_eq!(back.n_rows(), 50);
        assert_eq!(back.feature_names, data.feature_names);
        for i in 0..50 {
            assert!((back.response[i] - data.response[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn fold_sizes_follow_rounding_rule() {
        let plan = make_folds(506, 5, 1).unwrap();
        for f in &plan.folds {
            assert_eq!(f.test.len(), 51); // round(50.6)
            assert_eq!(f.train.len(), 455);
        }
        let plan = make_folds(100, 5, 1).unwrap();
        for f in &plan.folds {
            assert_eq!(f.test.len(), 10);
        }
    }

    #[test]
    fn folds_partition_rows() {
        let plan = make_folds(100, 5, 9).unwrap();
        for f in &plan.folds {
            let mut all: Vec<usize> = f.train.iter().chain(f.test.iter()).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..100).collect::<Vec<_>>());
        }
    }

    #[test]
    fn folds_deterministic_and_distinct_per_fold() {
        let a = make_folds(200, 5, 42).unwrap();
        let b = make_folds(200, 5, 42).unwrap();
        assert_eq!(a, b);
        // different folds use different derived seeds
        assert_ne!(a.folds[0].test, a.folds[1].test);
    }

    #[test]
    fn too_few_rows_rejected() {
        assert!(make_folds(9, 5, 0).is_err());
        assert!(make_folds(10, 5, 0).is_ok());
    }

    #[test]
    fn transform_examples() {
        let t = TransformSpec { log: false, scale: 0.01 };
        assert_eq!(t.apply_value(200.0), 2.0);

        let t = TransformSpec { log: true, scale: 0.01 };
        let v = t.apply_value(100.0);
        assert!((v - 0.046052).abs() < 1e-6); // ln(100)/100, log applied first
    }

    #[test]
    fn transform_log_rejects_nonpositive() {
        let t = TransformSpec { log: true, scale: 1.0 };
        let err = t.apply(&[1.0, -2.0, 3.0, 0.0]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("rows 2, 4"), "{msg}");
    }

    proptest! {
        #[test]
        fn transform_round_trip(
            y in 0.001..1e6f64,
            scale in 0.0001..100.0f64,
            log in any::<bool>(),
        ) {
            let t = TransformSpec { log, scale };
            let v = t.apply_value(y);
            let back = t.invert_value(v);
            prop_assert!((back - y).abs() <= 1e-12 * (1.0 + y.abs()).max(y.abs()));
        }
    }

    #[test]
    fn simulation_shapes_and_determinism() {
        let a = simulate_heteroskedastic(100, 7).unwrap();
        let b = simulate_heteroskedastic(100, 7).unwrap();
        let c = simulate_heteroskedastic(100, 8).unwrap();
        assert_eq!(a.n_rows(), 100);
        assert_eq!(a.n_features(), 11);
        assert_eq!(a.feature_names[0], "x");
        assert_eq!(a.feature_names[10], "X10");
        assert_eq!(a.response, b.response);
        assert_ne!(a.response, c.response);
    }

    #[test]
    fn simulation_sd_profile() {
        assert_eq!(simulation_true_sd(0.4), 5.0);
        assert_eq!(simulation_true_sd(0.8), 3.0);
        assert_eq!(simulation_true_sd(0.1), 1.0);
        assert_eq!(simulation_true_sd(0.6), 1.0);
        // true 95% quantile at x = 0.1
        let q95 = 10.0 + crate::math::normal_quantile(0.95) * simulation_true_sd(0.1);
        assert!((q95 - 11.6449).abs() < 1e-4);
    }

    #[test]
    fn simulation_segment_sd_converges() {
        let data = simulate_heteroskedastic(100_000, 123).unwrap();
        let mut seg: std::collections::BTreeMap<u8, Vec<f64>> = Default::default();
        for r in 0..data.n_rows() {
            let x = data.features.get(r, 0);
            let key = if x > 0.3 && x < 0.5 {
                1
            } else if x > 0.7 {
                2
            } else {
                0
            };
            seg.entry(key).or_default().push(data.response[r]);
        }
        for (key, expected) in [(0u8, 1.0), (1, 5.0), (2, 3.0)] {
            let ys = &seg[&key];
            let sd = crate::math::variance_mle(ys).sqrt();
            assert!(
                (sd - expected).abs() / expected < 0.05,
                "segment {key}: sd {sd} expected {expected}"
            );
        }
    }
}
