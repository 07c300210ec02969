//! Composite covariance function: constant + rational quadratic + squared
//! exponential, with a white-noise term on the training diagonal.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Hyperparameters of the composite kernel. None of them are optimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelConfig {
    pub const_value: f64,
    pub rq_length_scale: f64,
    pub rq_alpha: f64,
    pub se_length_scale: f64,
    /// White-noise variance, applied on the training diagonal only.
    pub noise_variance: f64,
    /// Extra diagonal regularization for factorization stability.
    pub jitter: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            const_value: 1.0,
            rq_length_scale: 0.2,
            rq_alpha: 1.0,
            se_length_scale: 1.0,
            noise_variance: 1e-8,
            jitter: 1e-8,
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rq_length_scale > 0.0) {
            return Err(Error::Config("rq_length_scale must be > 0".into()));
        }
        if !(self.se_length_scale > 0.0) {
            return Err(Error::Config("se_length_scale must be > 0".into()));
        }
        if !(self.rq_alpha > 0.0) {
            return Err(Error::Config("rq_alpha must be > 0".into()));
        }
        if !(self.noise_variance >= 0.0) {
            return Err(Error::Config("noise_variance must be >= 0".into()));
        }
        if !(self.jitter >= 0.0) {
            return Err(Error::Config("jitter must be >= 0".into()));
        }
        Ok(())
    }

    /// Covariance between two distinct observations:
    /// `const + RQ(a,b) + SE(a,b)`. The white-noise term never appears here.
    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::Usage(format!(
                "kernel dimension mismatch: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        Ok(self.eval_sq_dist(sq_dist(a, b)))
    }

    /// Kernel value from a precomputed squared distance.
    #[inline]
    pub fn eval_sq_dist(&self, d2: f64) -> f64 {
        let rq = {
            let l2 = self.rq_length_scale * self.rq_length_scale;
            (1.0 + d2 / (2.0 * self.rq_alpha * l2)).powf(-self.rq_alpha)
        };
        let se = {
            let l2 = self.se_length_scale * self.se_length_scale;
            (-d2 / (2.0 * l2)).exp()
        };
        self.const_value + rq + se
    }

    /// Covariance of an observation with itself *as a training point*:
    /// the self-covariance plus the white-noise variance. This kernel is
    /// stationary, so the value does not depend on the point.
    pub fn train_diag(&self) -> f64 {
        self.self_cov() + self.noise_variance
    }

    /// Self-covariance of the latent function (no noise): `const + 2`.
    #[inline]
    pub fn self_cov(&self) -> f64 {
        self.const_value + 2.0
    }

    /// Regularized diagonal entry used when factorizing the Gram matrix.
    #[inline]
    pub(crate) fn reg_diag(&self, jitter: f64) -> f64 {
        self.self_cov() + self.noise_variance + jitter
    }
}

/// Squared Euclidean distance; shared by both distance-based terms.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Dense regularized Gram matrix of a set of rows: off-diagonal entries are
/// `eval`, the diagonal carries the white-noise variance plus jitter.
pub fn gram(cfg: &KernelConfig, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = rows.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let dim = rows[0].len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(Error::Usage(format!(
                "gram row {i} has dimension {} expected {dim}",
                r.len()
            )));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("gram row {i} contains non-finite values")));
        }
    }
    let mut k = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let v = if i == j {
                cfg.reg_diag(cfg.jitter)
            } else {
                cfg.eval_sq_dist(sq_dist(&rows[i], &rows[j]))
            };
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    Ok(k)
}
