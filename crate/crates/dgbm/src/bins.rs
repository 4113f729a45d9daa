//! Feature quantization for histogram tree growth.
//!
//! Each feature gets a sorted list of boundaries carving the real line into
//! value bins, plus one reserved bin for missing values (NaN). Boundaries are
//! empirical-quantile cuts; features with few distinct values get one bin per
//! value. The mapper is stored in trained models so prediction routes raw
//! values through the same thresholds used during training.

use crate::error::{Error, Result};
use crate::math::percentile_sorted;
use serde::{Deserialize, Serialize};

/// Per-feature quantization rules.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BinMapper {
    /// Strictly increasing upper-inclusive boundaries per feature.
    /// A feature with `b` boundaries has `b + 1` value bins.
    boundaries: Vec<Vec<f64>>,
}

impl BinMapper {
    pub fn n_features(&self) -> usize {
        self.boundaries.len()
    }

    /// Number of bins holding finite values for `feature`.
    pub fn n_value_bins(&self, feature: usize) -> usize {
        self.boundaries[feature].len() + 1
    }

    /// Reserved bin index for missing values; also the largest index.
    pub fn missing_bin(&self, feature: usize) -> u16 {
        self.boundaries[feature].len() as u16 + 1
    }

    /// Total bin count including the missing bin.
    pub fn n_bins(&self, feature: usize) -> usize {
        self.boundaries[feature].len() + 2
    }

    pub fn boundaries(&self, feature: usize) -> &[f64] {
        &self.boundaries[feature]
    }

    /// Map one value (NaN = missing) to its bin index.
    pub fn bin_for_value(&self, feature: usize, value: f64) -> u16 {
        if value.is_nan() {
            return self.missing_bin(feature);
        }
        let bounds = &self.boundaries[feature];
        // first boundary >= value; values on a boundary go into the lower bin
        bounds.partition_point(|b| *b < value) as u16
    }

    /// Quantize a full row-major matrix.
    pub fn bin_matrix(&self, features: &FeatureMatrix) -> Result<Vec<u16>> {
        if features.n_cols != self.n_features() {
            return Err(Error::invalid_input(format!(
                "feature count mismatch: data has {}, mapper expects {}",
                features.n_cols,
                self.n_features()
            )));
        }
        let mut out = vec![0u16; features.n_rows * features.n_cols];
        for row in 0..features.n_rows {
            for col in 0..features.n_cols {
                out[row * features.n_cols + col] = self.bin_for_value(col, features.get(row, col));
            }
        }
        Ok(out)
    }
}

/// Row-major dense feature storage; NaN marks missing entries.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Vec<f64>,
    pub n_rows: usize,
    pub n_cols: usize,
}

impl FeatureMatrix {
    pub fn new(values: Vec<f64>, n_rows: usize, n_cols: usize) -> Self {
        assert_eq!(values.len(), n_rows * n_cols, "matrix shape mismatch");
        FeatureMatrix { values, n_rows, n_cols }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.n_cols..(row + 1) * self.n_cols]
    }

    /// Column copy, used by binning.
    fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.get(r, col)).collect()
    }
}

/// Quantized dataset: bin indices plus the raw matrix and response.
#[derive(Debug, Clone)]
pub struct BinnedDataset {
    pub mapper: BinMapper,
    /// Row-major bin indices, n_rows x n_features.
    pub bins: Vec<u16>,
    pub features: FeatureMatrix,
    pub response: Vec<f64>,
}

impl BinnedDataset {
    pub fn n_rows(&self) -> usize {
        self.features.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols
    }

    #[inline]
    pub fn bin(&self, row: usize, feature: usize) -> u16 {
        self.bins[row * self.features.n_cols + feature]
    }

    pub fn from_parts(mapper: BinMapper, features: FeatureMatrix, response: Vec<f64>) -> Result<Self> {
        if features.n_rows == 0 {
            return Err(Error::invalid_input("dataset has no rows"));
        }
        if response.len() != features.n_rows {
            return Err(Error::invalid_input(format!(
                "response length {} != row count {}",
                response.len(),
                features.n_rows
            )));
        }
        let bins = mapper.bin_matrix(&features)?;
        Ok(BinnedDataset { mapper, bins, features, response })
    }
}

/// Build quantile bin boundaries from training features.
///
/// Features with at most `max_bin - 1` distinct finite values get one bin per
/// value (boundaries at midpoints); otherwise boundaries sit at the empirical
/// quantiles j/(max_bin-1), deduplicated to stay strictly increasing. The
/// remaining bin slot is the reserved missing bin.
pub fn build_bins(features: &FeatureMatrix, max_bin: usize) -> Result<BinMapper> {
    if max_bin < 2 {
        return Err(Error::invalid_parameter(format!(
            "max_bin must be >= 2, got {max_bin}"
        )));
    }
    if features.n_rows == 0 {
        return Err(Error::invalid_input("cannot build bins on an empty matrix"));
    }
    let max_value_bins = max_bin - 1;
    let mut boundaries = Vec::with_capacity(features.n_cols);
    for col in 0..features.n_cols {
        let mut finite: Vec<f64> = features
            .column(col)
            .into_iter()
            .filter(|v| v.is_finite())
            .collect();
        finite.sort_by(f64::total_cmp);

        if finite.is_empty() {
            // all-missing feature: single (empty) value bin
            boundaries.push(Vec::new());
            continue;
        }

        let mut distinct: Vec<f64> = Vec::new();
        for &v in &finite {
            if distinct.last() != Some(&v) {
                distinct.push(v);
            }
        }

        let cuts = if distinct.len() <= max_value_bins {
            // one bin per distinct value, boundaries at midpoints
            distinct
                .windows(2)
                .map(|w| 0.5 * (w[0] + w[1]))
                .collect::<Vec<f64>>()
        } else {
            let mut cuts = Vec::with_capacity(max_value_bins - 1);
            for j in 1..max_value_bins {
                let q = j as f64 / max_value_bins as f64;
                let c = percentile_sorted(&finite, q);
                // keep strictly increasing; collapse duplicates from heavy ties
                if cuts.last().map_or(true, |&last| c > last) && c < *finite.last().unwrap() {
                    cuts.push(c);
                }
            }
            cuts
        };
        boundaries.push(cuts);
    }
    Ok(BinMapper { boundaries })
}
