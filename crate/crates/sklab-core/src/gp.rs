//! Exact Gaussian-process regression on the composite kernel, with O(n²)
//! incremental extension, FIFO capacity eviction, and a one-vs-rest
//! multi-class wrapper.
//!
//! Posterior equations are the standard ones: with `L·Lᵀ = K + (σ²+jitter)I`
//! and `w = L⁻¹y`, a probe `x*` gets `v = L⁻¹k*`, mean `vᵀw` and variance
//! `k(x*,x*) − vᵀv`. The white-noise variance σ² sits on the training
//! diagonal only, never on probes.

use crate::chol::PackedLower;
use crate::error::{Error, Result};
use crate::kernel::{gram, sq_dist, KernelConfig};
use crate::taxonomy::{ClassId, Taxonomy};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Factorization jitter is escalated ×10 from the configured value up to
/// this ceiling before giving up.
pub const JITTER_MAX: f64 = 1e-4;

/// Default per-class training-set cap; keeps the O(n²) update affordable
/// over a four-week study (28 × 48 windows).
pub const DEFAULT_CAPACITY: usize = 2000;

/// Posterior of a single-output GP at one probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpPosterior {
    pub mean: f64,
    pub variance: f64,
}

impl GpPosterior {
    pub fn std(&self) -> f64 {
        self.variance.max(0.0).sqrt()
    }
}

/// Training inputs plus the packed Cholesky factor of their regularized
/// Gram matrix. Shared by every class head of the one-vs-rest wrapper,
/// since all heads train on the same inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct GramFactor {
    cfg: KernelConfig,
    inputs: Vec<Vec<f64>>,
    l: PackedLower,
    /// Effective jitter; starts at `cfg.jitter`, escalates on failure.
    jitter: f64,
}

/// What an append had to do; `Refactored` invalidates cached solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum AppendOutcome {
    Appended,
    Refactored,
}

impl GramFactor {
    fn empty(cfg: KernelConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(GramFactor {
            jitter: cfg.jitter,
            cfg,
            inputs: Vec::new(),
            l: PackedLower::new(),
        })
    }

    fn fit(cfg: KernelConfig, inputs: Vec<Vec<f64>>) -> Result<Self> {
        let mut f = GramFactor::empty(cfg)?;
        if inputs.is_empty() {
            return Ok(f);
        }
        f.inputs = inputs;
        f.refactor()?;
        Ok(f)
    }

    /// (Re)factorize from scratch at the current jitter, escalating as needed.
    fn refactor(&mut self) -> Result<()> {
        loop {
            let mut cfg = self.cfg;
            cfg.jitter = self.jitter;
            let k = gram(&cfg, &self.inputs)?;
            match PackedLower::factor(&k) {
                Some(l) => {
                    self.l = l;
                    return Ok(());
                }
                None => self.escalate()?,
            }
        }
    }

    fn escalate(&mut self) -> Result<()> {
        let next = if self.jitter == 0.0 { 1e-10 } else { self.jitter * 10.0 };
        if next > JITTER_MAX {
            return Err(Error::Numeric(format!(
                "Cholesky factorization failed at maximum jitter {JITTER_MAX:e}"
            )));
        }
        self.jitter = next;
        Ok(())
    }

    fn len(&self) -> usize {
        self.inputs.len()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if let Some(first) = self.inputs.first() {
            if x.len() != first.len() {
                return Err(Error::Usage(format!(
                    "point dimension {} does not match model dimension {}",
                    x.len(),
                    first.len()
                )));
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite value in input point".into()));
        }
        Ok(())
    }

    /// Covariances of `x` against every stored input.
    fn kernel_col(&self, x: &[f64]) -> Vec<f64> {
        self.inputs
            .iter()
            .map(|xi| self.cfg.eval_sq_dist(sq_dist(xi, x)))
            .collect()
    }

    fn append(&mut self, x: Vec<f64>) -> Result<AppendOutcome> {
        self.check_point(&x)?;
        let col = self.kernel_col(&x);
        self.append_with_col(x, col)
    }

    fn append_with_col(&mut self, x: Vec<f64>, col: Vec<f64>) -> Result<AppendOutcome> {
        self.check_point(&x)?;
        debug_assert_eq!(col.len(), self.inputs.len());
        let diag = self.cfg.train_diag() + self.jitter;
        if self.l.append_row(&col, diag) {
            self.inputs.push(x);
            Ok(AppendOutcome::Appended)
        } else {
            // accumulated rounding or a near-duplicate defeated the append;
            // refit from scratch, escalating jitter if the batch also fails
            self.inputs.push(x);
            self.refactor()?;
            Ok(AppendOutcome::Refactored)
        }
    }

    fn remove_first(&mut self) {
        if self.inputs.is_empty() {
            return;
        }
        self.inputs.remove(0);
        self.l.remove_first();
    }
}

/// A single binary-target GP: training set, factor and the cached forward
/// solve `w = L⁻¹y`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GpState {
    factor: GramFactor,
    targets: Vec<f64>,
    w: Vec<f64>,
    capacity: usize,
}

fn check_target(y: f64) -> Result<()> {
    if y != 1.0 && y != -1.0 {
        return Err(Error::Usage(format!("target must be ±1, got {y}")));
    }
    Ok(())
}

impl GpState {
    /// Empty state: the GP prior.
    pub fn new(cfg: KernelConfig, capacity: usize) -> Result<Self> {
        Ok(GpState {
            factor: GramFactor::empty(cfg)?,
            targets: Vec::new(),
            w: Vec::new(),
            capacity,
        })
    }

    /// Exact batch fit.
    pub fn fit(cfg: KernelConfig, inputs: Vec<Vec<f64>>, targets: Vec<f64>, capacity: usize) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::Usage(format!(
                "{} inputs vs {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        if inputs.len() > capacity {
            return Err(Error::Usage(format!(
                "training set size {} exceeds capacity {capacity}",
                inputs.len()
            )));
        }
        for &y in &targets {
            check_target(y)?;
        }
        let factor = GramFactor::fit(cfg, inputs)?;
        let w = factor.l.solve_lower(&targets);
        Ok(GpState {
            factor,
            targets,
            w,
            capacity,
        })
    }

    /// Exact incremental extension; evicts the oldest point first when at
    /// capacity. Cost O(n²).
    pub fn extend(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        check_target(y)?;
        if self.targets.len() >= self.capacity {
            self.factor.remove_first();
            self.targets.remove(0);
            self.w = self.factor.l.solve_lower(&self.targets);
        }
        match self.factor.append(x)? {
            AppendOutcome::Appended => {
                let n = self.targets.len();
                let row = self.factor.l.row(n);
                let mut sum = y;
                for k in 0..n {
                    sum -= row[k] * self.w[k];
                }
                self.w.push(sum / row[n]);
                self.targets.push(y);
            }
            AppendOutcome::Refactored => {
                self.targets.push(y);
                self.w = self.factor.l.solve_lower(&self.targets);
            }
        }
        Ok(())
    }

    /// Posterior mean and variance at a probe.
    pub fn predict(&self, x: &[f64]) -> Result<GpPosterior> {
        self.factor.check_point(x)?;
        let prior_var = self.factor.cfg.self_cov();
        if self.targets.is_empty() {
            return Ok(GpPosterior {
                mean: 0.0,
                variance: prior_var,
            });
        }
        let kstar = self.factor.kernel_col(x);
        let v = self.factor.l.solve_lower(&kstar);
        let mean: f64 = v.iter().zip(&self.w).map(|(a, b)| a * b).sum();
        let variance = prior_var - v.iter().map(|a| a * a).sum::<f64>();
        Ok(GpPosterior { mean, variance })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.factor.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn config(&self) -> &KernelConfig {
        &self.factor.cfg
    }

    /// Max relative error of `L·Lᵀ` against a fresh regularized Gram matrix.
    pub fn factor_residual(&self) -> f64 {
        let mut cfg = self.factor.cfg;
        cfg.jitter = self.factor.jitter;
        let k = match gram(&cfg, &self.factor.inputs) {
            Ok(k) => k,
            Err(_) => return f64::INFINITY,
        };
        let r = self.factor.l.reconstruct();
        let mut worst = 0.0f64;
        for i in 0..k.len() {
            for j in 0..k.len() {
                let denom = k[i][j].abs().max(1.0);
                worst = worst.max((r[i][j] - k[i][j]).abs() / denom);
            }
        }
        worst
    }
}

/// Per-class posterior summary of the one-vs-rest model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassPosterior {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Argmax of the means; ties broken by lowest class index.
    pub predicted: ClassId,
    /// Best mean minus second-best mean.
    pub margin: f64,
}

impl ClassPosterior {
    pub fn mean_of(&self, c: ClassId) -> f64 {
        self.means[c]
    }

    pub fn std_of(&self, c: ClassId) -> f64 {
        self.stds[c]
    }
}

/// One-vs-rest GP multi-class model: one binary GP per taxonomy class, all
/// sharing the training inputs (every update touches every class with ±1),
/// hence one shared Cholesky factor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GpOvr {
    taxonomy: Taxonomy,
    factor: GramFactor,
    class_targets: Vec<Vec<f64>>,
    class_w: Vec<Vec<f64>>,
    capacity: usize,
}

impl GpOvr {
    pub fn new(cfg: KernelConfig, taxonomy: Taxonomy, capacity: usize) -> Result<Self> {
        let c = taxonomy.num_classes();
        Ok(GpOvr {
            taxonomy,
            factor: GramFactor::empty(cfg)?,
            class_targets: vec![Vec::new(); c],
            class_w: vec![Vec::new(); c],
            capacity,
        })
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn len(&self) -> usize {
        self.factor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factor.len() == 0
    }

    /// Per-class posterior at a probe. Deterministic in (state, x).
    pub fn predict(&self, x: &[f64]) -> Result<ClassPosterior> {
        Ok(self.predict_with_col(x)?.0)
    }

    /// Posterior plus the probe's kernel column against the training set,
    /// reusable by an immediately following `update_with_col` on the same
    /// probe (the hot path trains on what it just predicted).
    pub fn predict_with_col(&self, x: &[f64]) -> Result<(ClassPosterior, Vec<f64>)> {
        self.factor.check_point(x)?;
        let nc = self.taxonomy.num_classes();
        let prior_var = self.factor.cfg.self_cov();
        let kstar = self.factor.kernel_col(x);
        let (means, variance) = if self.factor.len() == 0 {
            (vec![0.0; nc], prior_var)
        } else {
            let v = self.factor.l.solve_lower(&kstar);
            let means = self
                .class_w
                .iter()
                .map(|w| v.iter().zip(w).map(|(a, b)| a * b).sum())
                .collect();
            let variance = prior_var - v.iter().map(|a| a * a).sum::<f64>();
            (means, variance)
        };
        // all classes share inputs, so they share the posterior variance
        let std = variance.max(0.0).sqrt();
        let stds = vec![std; nc];
        let mut predicted = 0;
        for c in 1..nc {
            if means[c] > means[predicted] {
                predicted = c;
            }
        }
        let mut second = f64::NEG_INFINITY;
        for c in 0..nc {
            if c != predicted && means[c] > second {
                second = means[c];
            }
        }
        Ok((
            ClassPosterior {
                margin: means[predicted] - second,
                predicted,
                means,
                stds,
            },
            kstar,
        ))
    }

    /// Extend every class head with target +1 for `class`, −1 otherwise.
    pub fn update(&mut self, x: Vec<f64>, class: ClassId) -> Result<()> {
        self.update_inner(x, None, class)
    }

    /// `update` with the probe's kernel column already computed by
    /// `predict_with_col` against the current state.
    pub fn update_with_col(&mut self, x: Vec<f64>, col: Vec<f64>, class: ClassId) -> Result<()> {
        self.update_inner(x, Some(col), class)
    }

    fn update_inner(&mut self, x: Vec<f64>, col: Option<Vec<f64>>, class: ClassId) -> Result<()> {
        let nc = self.taxonomy.num_classes();
        if class >= nc {
            return Err(Error::Usage(format!(
                "unknown class {class} (taxonomy has {nc})"
            )));
        }
        let mut col = col;
        if self.factor.len() >= self.capacity {
            self.factor.remove_first();
            for c in 0..nc {
                self.class_targets[c].remove(0);
                self.class_w[c] = self.factor.l.solve_lower(&self.class_targets[c]);
            }
            col = None; // the training set changed under the column
        }
        let outcome = match col {
            Some(col) => self.factor.append_with_col(x, col)?,
            None => self.factor.append(x)?,
        };
        for c in 0..nc {
            let y = if c == class { 1.0 } else { -1.0 };
            self.class_targets[c].push(y);
            match outcome {
                AppendOutcome::Appended => {
                    let n = self.class_w[c].len();
                    let row = self.factor.l.row(n);
                    let mut sum = y;
                    for k in 0..n {
                        sum -= row[k] * self.class_w[c][k];
                    }
                    self.class_w[c].push(sum / row[n]);
                }
                AppendOutcome::Refactored => {
                    self.class_w[c] = self.factor.l.solve_lower(&self.class_targets[c]);
                }
            }
        }
        Ok(())
    }

    /// Materialize one class head as a standalone GP (equivalence checks).
    pub fn class_state(&self, class: ClassId) -> Result<GpState> {
        if class >= self.taxonomy.num_classes() {
            return Err(Error::Usage(format!("unknown class {class}")));
        }
        Ok(GpState {
            factor: self.factor.clone(),
            targets: self.class_targets[class].clone(),
            w: self.class_w[class].clone(),
            capacity: self.capacity,
        })
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.factor.inputs
    }

    pub fn class_targets(&self, class: ClassId) -> &[f64] {
        &self.class_targets[class]
    }

    pub fn config(&self) -> &KernelConfig {
        &self.factor.cfg
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// SHA-256 over kernel config, taxonomy, and the exact bits of the
    /// training set. Identical hash ⇔ identical trained model.
    pub fn state_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&self.factor.cfg).expect("kernel config serializes"));
        h.update(serde_json::to_vec(&self.taxonomy).expect("taxonomy serializes"));
        h.update((self.capacity as u64).to_le_bytes());
        h.update((self.factor.len() as u64).to_le_bytes());
        for row in &self.factor.inputs {
            for v in row {
                h.update(v.to_le_bytes());
            }
        }
        for ys in &self.class_targets {
            for y in ys {
                h.update(y.to_le_bytes());
            }
        }
        hex_string(&h.finalize())
    }

    pub fn snapshot(&self) -> ModelSnapshot {
        ModelSnapshot {
            version: SNAPSHOT_VERSION,
            kernel: self.factor.cfg,
            taxonomy: self.taxonomy,
            capacity: self.capacity,
            inputs: self.factor.inputs.clone(),
            class_targets: self.class_targets.clone(),
        }
    }

    pub fn from_snapshot(s: ModelSnapshot) -> Result<Self> {
        if s.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported model snapshot version {} (expected {SNAPSHOT_VERSION})",
                s.version
            )));
        }
        let nc = s.taxonomy.num_classes();
        if s.class_targets.len() != nc {
            return Err(Error::Snapshot(format!(
                "snapshot has {} class target lists, taxonomy has {nc} classes",
                s.class_targets.len()
            )));
        }
        for ys in &s.class_targets {
            if ys.len() != s.inputs.len() {
                return Err(Error::Snapshot(
                    "snapshot target length does not match inputs".into(),
                ));
            }
            for &y in ys {
                check_target(y).map_err(|_| Error::Snapshot("snapshot target not ±1".into()))?;
            }
        }
        if s.inputs.len() > s.capacity {
            return Err(Error::Snapshot("snapshot exceeds its own capacity".into()));
        }
        let factor = GramFactor::fit(s.kernel, s.inputs)?;
        let class_w = s
            .class_targets
            .iter()
            .map(|ys| factor.l.solve_lower(ys))
            .collect();
        Ok(GpOvr {
            taxonomy: s.taxonomy,
            factor,
            class_targets: s.class_targets,
            class_w,
            capacity: s.capacity,
        })
    }
}

pub const SNAPSHOT_VERSION: u32 = 1;

/// Versioned container for a trained model; the Cholesky factor is
/// recomputed on load, so only inputs and targets are persisted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub version: u32,
    pub kernel: KernelConfig,
    pub taxonomy: Taxonomy,
    pub capacity: usize,
    pub inputs: Vec<Vec<f64>>,
    pub class_targets: Vec<Vec<f64>>,
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}
