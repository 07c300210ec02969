//! Online per-user standardization of feature rows into model vectors.
//!
//! Numeric features are z-scored against running statistics (update with the
//! new value first, then transform); missing numerics impute to the running
//! mean, i.e. 0 after standardization. Booleans pass through. Every feature
//! contributes its missingness bit, so the model vector is
//! `[47 values, 47 mask bits]`.

use super::{Feature, FeatureRow, FEATURE_COUNT, MODEL_DIM};
use serde::{Deserialize, Serialize};

/// Standard deviations are floored here so constant features map to 0.
pub const STD_FLOOR: f64 = 1e-6;

/// Welford running statistics per feature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OnlineStandardizer {
    count: Vec<u64>,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Default for OnlineStandardizer {
    fn default() -> Self {
        Self::new()
    }
}

impl OnlineStandardizer {
    pub fn new() -> Self {
        OnlineStandardizer {
            count: vec![0; FEATURE_COUNT],
            mean: vec![0.0; FEATURE_COUNT],
            m2: vec![0.0; FEATURE_COUNT],
        }
    }

    fn update(&mut self, i: usize, v: f64) {
        self.count[i] += 1;
        let delta = v - self.mean[i];
        self.mean[i] += delta / self.count[i] as f64;
        self.m2[i] += delta * (v - self.mean[i]);
    }

    fn std(&self, i: usize) -> f64 {
        if self.count[i] == 0 {
            return STD_FLOOR;
        }
        (self.m2[i] / self.count[i] as f64).sqrt().max(STD_FLOOR)
    }

    /// Fold one row into the statistics and emit its model vector.
    /// Deterministic given stream order; never produces non-finite values.
    pub fn transform(&mut self, row: &FeatureRow) -> Vec<f64> {
        let mut out = vec![0.0; MODEL_DIM];
        for f in Feature::ALL {
            let i = f.index();
            let present = !row.missing[i];
            if present {
                let v = row.values[i];
                if f.is_boolean() {
                    out[i] = v;
                } else {
                    self.update(i, v);
                    out[i] = (v - self.mean[i]) / self.std(i);
                }
            }
            // missing: value stays 0 (the imputed running mean / false)
            out[FEATURE_COUNT + i] = if present { 0.0 } else { 1.0 };
        }
        out
    }
}
