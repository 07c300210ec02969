//! The per-user skeptical learning loop: predict, decide whether to query,
//! decide whether to contradict the annotator, defer suspicious examples,
//! resolve contradictions, and update the model.

use crate::error::{Error, Result};
use crate::gp::{ClassPosterior, GpOvr, ModelSnapshot};
use crate::kernel::KernelConfig;
use crate::scheduler::Phase;
use crate::taxonomy::{ClassId, Granularity, Label, Subcategory, Taxonomy};
use crate::clock::SimTime;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// When to ask the user for a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QueryPolicy {
    /// Ask on every incoming example regardless of confidence (the study
    /// default: examples were not available in real time, so active
    /// querying was disabled).
    #[default]
    Always,
    /// Ask only when the prediction margin falls under the threshold.
    Uncertainty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub query_policy: QueryPolicy,
    /// Minimum margin below which an uncertainty-policy engine queries.
    pub query_threshold: f64,
    /// Skepticism scale κ: contradict when the mean gap between the
    /// predicted and the asserted class exceeds κ·(s_ŷ + s_ỹ). An infinite
    /// κ never contradicts (the gp_never baseline).
    pub skeptic_threshold: f64,
    pub phase: Phase,
    pub learn_granularity: Granularity,
    /// Feed confirmed-correct evaluation verdicts back into the model
    /// (off by default: the last part is a pure hold-out).
    pub train_on_evaluation: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            query_policy: QueryPolicy::Always,
            query_threshold: 0.5,
            skeptic_threshold: 1.0,
            phase: Phase::Bootstrap,
            learn_granularity: Granularity::MainCategory,
            train_on_evaluation: false,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.query_threshold >= 0.0) {
            return Err(Error::Config("query_threshold must be >= 0".into()));
        }
        if self.skeptic_threshold.is_nan() || self.skeptic_threshold < 0.0 {
            return Err(Error::Config("skeptic_threshold must be >= 0".into()));
        }
        Ok(())
    }

    /// The baseline variant that never contradicts the user.
    pub fn gp_never(mut self) -> Self {
        self.skeptic_threshold = f64::INFINITY;
        self
    }
}

/// Where a training label came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationSource {
    TimeDiary,
    ContradictionConfirmedMachine,
    ContradictionReasserted,
    ContradictionNewLabel,
    /// Contradiction expired unanswered; the original label stands.
    ExpiredUnresolved,
}

/// A resolved label for one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub window_index: u64,
    pub label: Label,
    pub source: AnnotationSource,
    pub answered_at: SimTime,
}

/// One standardized example entering the engine.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleWindow {
    pub window_index: u64,
    pub start: SimTime,
    /// Model-ready vector (imputed + standardized).
    pub features: Vec<f64>,
}

/// A contradiction awaiting the user's verdict; its example is withheld
/// from training until then.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingContradiction {
    pub window_index: u64,
    pub features: Vec<f64>,
    pub machine_label: Label,
    pub machine_class: ClassId,
    pub original: Annotation,
}

/// The user's reaction to a contradiction (or its expiry).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContradictionResponse {
    ConfirmMachine,
    ReassertOriginal,
    NewLabel(Subcategory),
    Expired,
}

/// What one engine step did.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineOutcome {
    pub window_index: u64,
    pub prediction: ClassPosterior,
    pub queried: bool,
    pub suspicious: bool,
    /// (window, machine ŷ, user ỹ) when a contradiction was registered.
    pub pending_contradiction: Option<(u64, Label, Label)>,
    pub trained_on: Option<Annotation>,
}

/// Ask the user? Always-policy always does; uncertainty-policy only under
/// the margin threshold (a cold model has margin 0 and is always asked).
pub fn decide_query(p: &ClassPosterior, cfg: &EngineConfig) -> bool {
    match cfg.query_policy {
        QueryPolicy::Always => true,
        QueryPolicy::Uncertainty => p.margin < cfg.query_threshold,
    }
}

/// Contradict the user? Never during bootstrap and never on agreement;
/// otherwise when the model's mean for its own prediction beats the mean
/// for the user's label by more than κ times the summed uncertainties.
pub fn decide_skeptical(p: &ClassPosterior, user_class: ClassId, cfg: &EngineConfig) -> bool {
    if cfg.phase == Phase::Bootstrap {
        return false;
    }
    if p.predicted == user_class {
        return false;
    }
    if !cfg.skeptic_threshold.is_finite() {
        return false;
    }
    let gap = p.mean_of(p.predicted) - p.mean_of(user_class);
    let scale = p.std_of(p.predicted) + p.std_of(user_class);
    gap > cfg.skeptic_threshold * scale
}

/// Per-user engine state.
#[derive(Debug, Clone)]
pub struct Engine {
    model: GpOvr,
    cfg: EngineConfig,
    pending: BTreeMap<u64, PendingContradiction>,
    last_window: Option<u64>,
    trained_windows: BTreeSet<u64>,
}

impl Engine {
    pub fn new(kernel: KernelConfig, cfg: EngineConfig, capacity: usize) -> Result<Self> {
        cfg.validate()?;
        let taxonomy = Taxonomy::new(cfg.learn_granularity);
        Ok(Engine {
            model: GpOvr::new(kernel, taxonomy, capacity)?,
            cfg,
            pending: BTreeMap::new(),
            last_window: None,
            trained_windows: BTreeSet::new(),
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.cfg.phase = phase;
    }

    pub fn model(&self) -> &GpOvr {
        &self.model
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        self.model.taxonomy()
    }

    pub fn pending_contradictions(&self) -> impl Iterator<Item = &PendingContradiction> {
        self.pending.values()
    }

    pub fn pending_count(&self) -> usize {
        self.pending.len()
    }

    /// Hash of the trained model state; constant hash ⇔ no training happened.
    pub fn state_hash(&self) -> String {
        self.model.state_hash()
    }

    pub fn predict(&self, features: &[f64]) -> Result<ClassPosterior> {
        self.model.predict(features)
    }

    fn train(
        &mut self,
        window: u64,
        features: Vec<f64>,
        col: Option<Vec<f64>>,
        annotation: Annotation,
    ) -> Result<()> {
        if !self.trained_windows.insert(window) {
            return Err(Error::Usage(format!("window {window} already trained")));
        }
        let class = self.taxonomy().class_of(annotation.label)?;
        match col {
            Some(col) => self.model.update_with_col(features, col, class),
            None => self.model.update(features, class),
        }
    }

    /// One iteration of the loop for one example window. The annotation is
    /// present iff the scheduler obtained an answer for it; windows must
    /// arrive in strictly increasing order.
    pub fn step(
        &mut self,
        w: &ExampleWindow,
        annotation: Option<Annotation>,
    ) -> Result<EngineOutcome> {
        if let Some(last) = self.last_window {
            if w.window_index <= last {
                return Err(Error::Usage(format!(
                    "window {} after {} (duplicate or out of order)",
                    w.window_index, last
                )));
            }
        }
        let (prediction, col) = self.model.predict_with_col(&w.features)?;
        self.last_window = Some(w.window_index);

        let mut outcome = EngineOutcome {
            window_index: w.window_index,
            prediction,
            queried: false,
            suspicious: false,
            pending_contradiction: None,
            trained_on: None,
        };
        // the last part only observes; the model is frozen
        if self.cfg.phase == Phase::Evaluation {
            return Ok(outcome);
        }
        outcome.queried = decide_query(&outcome.prediction, &self.cfg);
        if !outcome.queried {
            return Ok(outcome);
        }
        let Some(annotation) = annotation else {
            // diary expired: no ground truth for this window, skip it
            return Ok(outcome);
        };
        let user_class = self.taxonomy().class_of(annotation.label)?;
        outcome.suspicious = decide_skeptical(&outcome.prediction, user_class, &self.cfg);
        if outcome.suspicious {
            let machine_class = outcome.prediction.predicted;
            let machine_label = self.taxonomy().label_of(machine_class)?;
            self.pending.insert(
                w.window_index,
                PendingContradiction {
                    window_index: w.window_index,
                    features: w.features.clone(),
                    machine_label,
                    machine_class,
                    original: annotation,
                },
            );
            outcome.pending_contradiction =
                Some((w.window_index, machine_label, annotation.label));
        } else {
            self.train(w.window_index, w.features.clone(), Some(col), annotation)?;
            outcome.trained_on = Some(annotation);
        }
        Ok(outcome)
    }

    /// Settle a pending contradiction: the final label is the machine's on
    /// confirmation, the original on reassertion or expiry, or the freshly
    /// provided one; the model trains on it either way.
    pub fn resolve_contradiction(
        &mut self,
        window_index: u64,
        response: ContradictionResponse,
        now: SimTime,
    ) -> Result<Annotation> {
        let pending = self.pending.remove(&window_index).ok_or_else(|| {
            Error::Usage(format!("no pending contradiction for window {window_index}"))
        })?;
        let (label, source) = match response {
            ContradictionResponse::ConfirmMachine => (
                pending.machine_label,
                AnnotationSource::ContradictionConfirmedMachine,
            ),
            ContradictionResponse::ReassertOriginal => (
                pending.original.label,
                AnnotationSource::ContradictionReasserted,
            ),
            ContradictionResponse::NewLabel(sub) => (
                Label::from_sub(sub),
                AnnotationSource::ContradictionNewLabel,
            ),
            ContradictionResponse::Expired => {
                (pending.original.label, AnnotationSource::ExpiredUnresolved)
            }
        };
        let annotation = Annotation {
            window_index,
            label,
            source,
            answered_at: now,
        };
        self.train(window_index, pending.features, None, annotation)?;
        Ok(annotation)
    }

    /// Train on a window the user confirmed as correctly predicted in the
    /// evaluation part. Only active behind the config flag.
    pub fn train_evaluation_confirmed(
        &mut self,
        window_index: u64,
        features: Vec<f64>,
        label: Label,
        now: SimTime,
    ) -> Result<bool> {
        if !self.cfg.train_on_evaluation {
            return Ok(false);
        }
        self.train(
            window_index,
            features,
            None,
            Annotation {
                window_index,
                label,
                source: AnnotationSource::TimeDiary,
                answered_at: now,
            },
        )?;
        Ok(true)
    }

    pub fn save_state(&self) -> EngineSnapshot {
        EngineSnapshot {
            version: ENGINE_SNAPSHOT_VERSION,
            cfg: self.cfg,
            model: self.model.snapshot(),
            pending: self.pending.values().cloned().collect(),
            last_window: self.last_window,
            trained_windows: self.trained_windows.iter().copied().collect(),
        }
    }

    pub fn load_state(snapshot: EngineSnapshot) -> Result<Self> {
        if snapshot.version != ENGINE_SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported engine snapshot version {} (expected {ENGINE_SNAPSHOT_VERSION})",
                snapshot.version
            )));
        }
        snapshot.cfg.validate()?;
        let model = GpOvr::from_snapshot(snapshot.model)?;
        Ok(Engine {
            model,
            cfg: snapshot.cfg,
            pending: snapshot
                .pending
                .into_iter()
                .map(|p| (p.window_index, p))
                .collect(),
            last_window: snapshot.last_window,
            trained_windows: snapshot.trained_windows.into_iter().collect(),
        })
    }
}

pub const ENGINE_SNAPSHOT_VERSION: u32 = 1;

/// Versioned engine container: model snapshot plus loop bookkeeping.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EngineSnapshot {
    pub version: u32,
    pub cfg: EngineConfig,
    pub model: ModelSnapshot,
    pub pending: Vec<PendingContradiction>,
    pub last_window: Option<u64>,
    pub trained_windows: Vec<u64>,
}
