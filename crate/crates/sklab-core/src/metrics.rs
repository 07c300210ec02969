//! Evaluation metrics: progressive F1 over prediction/truth streams and the
//! aggregated per-run bundle.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Per-class confusion counts over a growing stream.
#[derive(Debug, Clone, Default)]
pub struct ConfusionCounts {
    /// class → (tp, fp, fn)
    counts: BTreeMap<usize, (u64, u64, u64)>,
}

impl ConfusionCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, predicted: usize, truth: usize) {
        if predicted == truth {
            self.counts.entry(truth).or_default().0 += 1;
        } else {
            self.counts.entry(predicted).or_default().1 += 1;
            self.counts.entry(truth).or_default().2 += 1;
        }
    }

    fn f1_of(tp: u64, fp: u64, fneg: u64) -> f64 {
        let denom = 2 * tp + fp + fneg;
        if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        }
    }

    /// Macro F1 over the classes seen so far (in truth or prediction).
    pub fn macro_f1(&self) -> f64 {
        if self.counts.is_empty() {
            return 0.0;
        }
        let sum: f64 = self
            .counts
            .values()
            .map(|&(tp, fp, fneg)| Self::f1_of(tp, fp, fneg))
            .sum();
        sum / self.counts.len() as f64
    }

    /// F1 weighted by true support; classes that only ever appeared as
    /// predictions carry no weight.
    pub fn weighted_f1(&self) -> f64 {
        let total: u64 = self.counts.values().map(|&(tp, _, fneg)| tp + fneg).sum();
        if total == 0 {
            return 0.0;
        }
        self.counts
            .values()
            .map(|&(tp, fp, fneg)| (tp + fneg) as f64 * Self::f1_of(tp, fp, fneg))
            .sum::<f64>()
            / total as f64
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Progressive macro F1: at each slot, the macro F1 over every slot up to it
/// that has both a prediction and a truth label. Slots without such a pair
/// carry the previous value (`None` before the first one).
pub fn progressive_f1(pred: &[Option<usize>], truth: &[Option<usize>]) -> Vec<Option<f64>> {
    progressive_f1_from(pred, truth, 0)
}

/// Progressive macro F1 with the cumulative counts starting at `start`
/// (earlier slots stay `None`). A nonzero start reports the stream the way
/// longitudinal runs usually are: after the warm-up weeks.
pub fn progressive_f1_from(
    pred: &[Option<usize>],
    truth: &[Option<usize>],
    start: usize,
) -> Vec<Option<f64>> {
    assert_eq!(pred.len(), truth.len(), "series must be aligned");
    let mut counts = ConfusionCounts::new();
    let mut out = Vec::with_capacity(pred.len());
    let mut last = None;
    for (i, (p, t)) in pred.iter().zip(truth.iter()).enumerate() {
        if i >= start {
            if let (Some(p), Some(t)) = (p, t) {
                counts.observe(*p, *t);
                last = Some(counts.macro_f1());
            }
        }
        out.push(last);
    }
    out
}

/// Same series via the weighted variant.
pub fn progressive_weighted_f1(
    pred: &[Option<usize>],
    truth: &[Option<usize>],
) -> Vec<Option<f64>> {
    assert_eq!(pred.len(), truth.len());
    let mut counts = ConfusionCounts::new();
    let mut out = Vec::with_capacity(pred.len());
    let mut last = None;
    for (p, t) in pred.iter().zip(truth.iter()) {
        if let (Some(p), Some(t)) = (p, t) {
            counts.observe(*p, *t);
            last = Some(counts.weighted_f1());
        }
        out.push(last);
    }
    out
}

/// Contradiction traffic of one user's run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ContradictionStats {
    pub sent: u64,
    pub answered: u64,
    pub confirmed_machine: u64,
    pub reasserted: u64,
    pub new_label: u64,
    pub expired: u64,
    /// Diaries answered during the skeptical part (the contradiction base).
    pub answered_diaries_post_bootstrap: u64,
}

impl ContradictionStats {
    pub fn confirm_fraction(&self) -> Option<f64> {
        if self.answered == 0 {
            None
        } else {
            Some(self.confirmed_machine as f64 / self.answered as f64)
        }
    }

    pub fn contradiction_rate(&self) -> Option<f64> {
        if self.answered_diaries_post_bootstrap == 0 {
            None
        } else {
            Some(self.sent as f64 / self.answered_diaries_post_bootstrap as f64)
        }
    }
}

/// One user's outputs under one method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UserRunMetrics {
    pub user_id: String,
    /// Progressive macro F1 per slot, from the stream start.
    pub progressive_f1: Vec<Option<f64>>,
    pub progressive_weighted_f1: Vec<Option<f64>>,
    /// Progressive macro F1 restarted after the warm-up window (the
    /// headline reporting series).
    pub progressive_f1_reporting: Vec<Option<f64>>,
    /// Slots carrying both a prediction and a truth label.
    pub scored_slots: Vec<bool>,
    pub contradictions: ContradictionStats,
    /// Fraction of listed predictions the user rated correct, over the
    /// answered evaluation questions.
    pub evaluation_correctness: Option<f64>,
    pub final_f1: Option<f64>,
    /// Final value of the reporting-window series.
    pub final_f1_reporting: Option<f64>,
}

/// Whole-cohort metrics for one method.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct MethodMetrics {
    pub users: Vec<UserRunMetrics>,
    /// Mean progressive F1 per slot over users scored at that slot.
    pub mean_f1: Vec<Option<f64>>,
    /// Same, for the reporting-window series.
    pub mean_f1_reporting: Vec<Option<f64>>,
    /// Number of users contributing at each slot.
    pub active_users: Vec<u64>,
}

impl MethodMetrics {
    pub fn aggregate(users: Vec<UserRunMetrics>, slots: usize) -> Self {
        let mean_over = |pick: &dyn Fn(&UserRunMetrics) -> &Vec<Option<f64>>| {
            let mut mean = Vec::with_capacity(slots);
            let mut active = Vec::with_capacity(slots);
            for slot in 0..slots {
                let mut sum = 0.0;
                let mut n = 0u64;
                for u in &users {
                    if u.scored_slots.get(slot).copied().unwrap_or(false) {
                        if let Some(Some(v)) = pick(u).get(slot) {
                            sum += v;
                            n += 1;
                        }
                    }
                }
                active.push(n);
                mean.push(if n > 0 { Some(sum / n as f64) } else { None });
            }
            (mean, active)
        };
        let (mean_f1, active_users) = mean_over(&|u| &u.progressive_f1);
        let (mean_f1_reporting, _) = mean_over(&|u| &u.progressive_f1_reporting);
        MethodMetrics {
            users,
            mean_f1,
            mean_f1_reporting,
            active_users,
        }
    }

    /// Mean of the users' final progressive F1 values (full stream).
    pub fn mean_final_f1(&self) -> Option<f64> {
        mean_opt(self.users.iter().map(|u| u.final_f1))
    }

    /// Mean of the final reporting-window F1 values (the headline figure).
    pub fn mean_final_f1_reporting(&self) -> Option<f64> {
        mean_opt(self.users.iter().map(|u| u.final_f1_reporting))
    }
}

fn mean_opt(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let finals: Vec<f64> = values.flatten().collect();
    if finals.is_empty() {
        None
    } else {
        Some(finals.iter().sum::<f64>() / finals.len() as f64)
    }
}

/// Everything a run produces, per method.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct MetricsBundle {
    pub slots: u64,
    pub methods: BTreeMap<String, MethodMetrics>,
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The oracle: recompute the macro F1 from scratch at every slot.
    pub fn naive_progressive_f1(
        pred: &[Option<usize>],
        truth: &[Option<usize>],
    ) -> Vec<Option<f64>> {
        let mut out = Vec::with_capacity(pred.len());
        for t in 0..pred.len() {
            let mut counts = ConfusionCounts::new();
            for i in 0..=t {
                if let (Some(p), Some(y)) = (pred[i], truth[i]) {
                    counts.observe(p, y);
                }
            }
            out.push(if counts.is_empty() {
                out.last().copied().flatten()
            } else {
                Some(counts.macro_f1())
            });
        }
        out
    }

    #[test]
    fn all_correct_is_constant_one() {
        let pred: Vec<Option<usize>> = (0..20).map(|i| Some(i % 3)).collect();
        let series = progressive_f1(&pred, &pred.clone());
        assert!(series.iter().all(|v| *v == Some(1.0)));
    }

    #[test]
    fn hand_checked_two_class_case() {
        // stream: class A predicted right once, then B mispredicted as A
        // → A: tp=1 fp=1 fn=0 → F1_A = 2/3; B: tp=0 fp=0 fn=1 → F1_B = 0
        // macro over {A, B} = 1/3
        let pred = vec![Some(0), Some(0)];
        let truth = vec![Some(0), Some(1)];
        let series = progressive_f1(&pred, &truth);
        assert_eq!(series[0], Some(1.0));
        let got = series[1].unwrap();
        assert!((got - 1.0 / 3.0).abs() < 1e-15, "got {got}");
    }

    #[test]
    fn missing_truth_carries_previous_value() {
        let pred = vec![Some(0), Some(1), Some(0)];
        let truth = vec![Some(0), None, Some(0)];
        let series = progressive_f1(&pred, &truth);
        assert_eq!(series[0], Some(1.0));
        assert_eq!(series[1], Some(1.0));
        assert_eq!(series[2], Some(1.0));
    }

    #[test]
    fn empty_overlap_is_empty_series() {
        let pred = vec![None, Some(1)];
        let truth = vec![Some(0), None];
        let series = progressive_f1(&pred, &truth);
        assert!(series.iter().all(|v| v.is_none()));
    }

    #[test]
    fn incremental_matches_naive_oracle_exactly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let n = rng.gen_range(1..200);
            let pred: Vec<Option<usize>> = (0..n)
                .map(|_| rng.gen_bool(0.8).then(|| rng.gen_range(0..4)))
                .collect();
            let truth: Vec<Option<usize>> = (0..n)
                .map(|_| rng.gen_bool(0.8).then(|| rng.gen_range(0..4)))
                .collect();
            let fast = progressive_f1(&pred, &truth);
            let slow = naive_progressive_f1(&pred, &truth);
            assert_eq!(fast, slow, "exact match required");
        }
    }

    #[test]
    fn aggregation_counts_only_scored_users() {
        let u1 = UserRunMetrics {
            user_id: "a".into(),
            progressive_f1: vec![Some(1.0), Some(1.0)],
            progressive_weighted_f1: vec![Some(1.0), Some(1.0)],
            progressive_f1_reporting: vec![None, Some(1.0)],
            scored_slots: vec![true, false],
            contradictions: ContradictionStats::default(),
            evaluation_correctness: None,
            final_f1: Some(1.0),
            final_f1_reporting: Some(1.0),
        };
        let u2 = UserRunMetrics {
            user_id: "b".into(),
            progressive_f1: vec![Some(0.0), Some(0.5)],
            progressive_weighted_f1: vec![Some(0.0), Some(0.5)],
            progressive_f1_reporting: vec![None, Some(0.5)],
            scored_slots: vec![true, true],
            contradictions: ContradictionStats::default(),
            evaluation_correctness: None,
            final_f1: Some(0.5),
            final_f1_reporting: Some(0.5),
        };
        let m = MethodMetrics::aggregate(vec![u1, u2], 2);
        assert_eq!(m.active_users, vec![2, 1]);
        assert_eq!(m.mean_f1[0], Some(0.5));
        assert_eq!(m.mean_f1[1], Some(0.5));
        assert_eq!(m.mean_final_f1(), Some(0.75));
    }
}
