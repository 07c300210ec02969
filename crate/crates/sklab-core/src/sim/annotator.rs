//! Simulated annotators: the four prototypical behaviors answering diaries,
//! contradictions, and evaluation questions.

use crate::engine::ContradictionResponse;
use crate::error::{Error, Result};
use crate::taxonomy::{Label, Subcategory};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotatorKind {
    /// Answers the truth, checks contradictions against reality.
    Reliable,
    /// Mislabels uniformly at random with probability `noise_rate`.
    Inattentive,
    /// Answers the routine's modal label; wrong whenever the day deviates.
    Predictable,
    /// Systematically swaps a fixed confusable pair and resists correction.
    Tricky,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorProfile {
    pub kind: AnnotatorKind,
    /// Diary mislabel probability (inattentive).
    pub noise_rate: f64,
    /// Probability a dispatched question gets answered at all.
    pub response_rate: f64,
    /// Recall when flagging wrong predictions in evaluation questions.
    pub eval_recall: f64,
    /// Contradiction mix for the human-like profiles.
    pub confirm_machine_prob: f64,
    pub reassert_prob: f64,
    pub new_label_prob: f64,
    /// The swap the tricky annotator insists on.
    pub tricky_pair: (Subcategory, Subcategory),
}

impl AnnotatorProfile {
    fn base(kind: AnnotatorKind) -> Self {
        AnnotatorProfile {
            kind,
            noise_rate: 0.0,
            response_rate: 0.85,
            eval_recall: 0.7,
            // in-the-wild contradiction statistics: a quarter of answers
            // accept the machine label; four fifths of rejections keep the
            // original answer
            confirm_machine_prob: 0.25,
            reassert_prob: 0.60,
            new_label_prob: 0.15,
            tricky_pair: (Subcategory::MyFaculty, Subcategory::MainHome),
        }
    }

    pub fn reliable() -> Self {
        AnnotatorProfile {
            response_rate: 0.9,
            eval_recall: 1.0,
            ..Self::base(AnnotatorKind::Reliable)
        }
    }

    pub fn inattentive(noise_rate: f64) -> Self {
        AnnotatorProfile {
            noise_rate,
            response_rate: 0.9,
            ..Self::base(AnnotatorKind::Inattentive)
        }
    }

    pub fn predictable() -> Self {
        Self::base(AnnotatorKind::Predictable)
    }

    pub fn tricky() -> Self {
        AnnotatorProfile {
            response_rate: 0.9,
            ..Self::base(AnnotatorKind::Tricky)
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("noise_rate", self.noise_rate),
            ("response_rate", self.response_rate),
            ("eval_recall", self.eval_recall),
            ("confirm_machine_prob", self.confirm_machine_prob),
            ("reassert_prob", self.reassert_prob),
            ("new_label_prob", self.new_label_prob),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} out of [0,1]")));
            }
        }
        let total = self.confirm_machine_prob + self.reassert_prob + self.new_label_prob;
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "contradiction probabilities sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    /// Decide whether a dispatched question gets answered at all.
    pub fn responds(&self, rng: &mut ChaCha8Rng) -> bool {
        rng.gen_bool(self.response_rate)
    }

    /// Answer a time diary for a window with ground truth `truth` and
    /// routine-modal label `modal`; `None` models a non-response.
    pub fn answer_diary(
        &self,
        truth: Label,
        modal: Label,
        rng: &mut ChaCha8Rng,
    ) -> Option<Subcategory> {
        if !self.responds(rng) {
            return None;
        }
        let truth_sub = truth.sub.expect("world truth carries subcategories");
        Some(match self.kind {
            AnnotatorKind::Reliable => truth_sub,
            AnnotatorKind::Inattentive => {
                if rng.gen_bool(self.noise_rate) {
                    // a uniformly random wrong label
                    let mut idx = rng.gen_range(0..Subcategory::ALL.len() - 1);
                    if idx >= truth_sub.index() {
                        idx += 1;
                    }
                    Subcategory::from_index(idx).unwrap()
                } else {
                    truth_sub
                }
            }
            AnnotatorKind::Predictable => modal.sub.expect("modal carries subcategories"),
            AnnotatorKind::Tricky => {
                if truth_sub == self.tricky_pair.0 {
                    self.tricky_pair.1
                } else {
                    truth_sub
                }
            }
        })
    }

    /// React to a contradiction: the machine asserts `machine_label` against
    /// the user's `original` answer; `truth` is the slot's ground truth.
    pub fn answer_contradiction(
        &self,
        original: Label,
        machine_label: Label,
        truth: Label,
        rng: &mut ChaCha8Rng,
    ) -> ContradictionResponse {
        match self.kind {
            AnnotatorKind::Reliable => {
                let machine_right = match machine_label.sub {
                    Some(s) => truth.sub == Some(s),
                    None => machine_label.main == truth.main,
                };
                if machine_right {
                    ContradictionResponse::ConfirmMachine
                } else if original.main == truth.main && original.sub == truth.sub {
                    ContradictionResponse::ReassertOriginal
                } else {
                    ContradictionResponse::NewLabel(truth.sub.unwrap())
                }
            }
            AnnotatorKind::Tricky => ContradictionResponse::ReassertOriginal,
            AnnotatorKind::Inattentive | AnnotatorKind::Predictable => {
                let draw: f64 = rng.gen();
                if draw < self.confirm_machine_prob {
                    ContradictionResponse::ConfirmMachine
                } else if draw < self.confirm_machine_prob + self.reassert_prob {
                    ContradictionResponse::ReassertOriginal
                } else {
                    // a moment of attention: the fresh answer is the truth
                    ContradictionResponse::NewLabel(truth.sub.unwrap())
                }
            }
        }
    }

    /// Flag the wrong predictions in an evaluation list. The reliable
    /// annotator flags exactly the mistakes; the others catch each one
    /// independently with recall `eval_recall`.
    pub fn answer_evaluation(
        &self,
        listed: &[(u64, Label)],
        truth_of: impl Fn(u64) -> Label,
        rng: &mut ChaCha8Rng,
    ) -> Vec<u64> {
        let mut flagged = Vec::new();
        for (window, predicted) in listed {
            let truth = truth_of(*window);
            let correct = match predicted.sub {
                Some(s) => truth.sub == Some(s),
                None => predicted.main == truth.main,
            };
            if correct {
                continue;
            }
            let caught = match self.kind {
                AnnotatorKind::Reliable => true,
                _ => rng.gen_bool(self.eval_recall),
            };
            if caught {
                flagged.push(*window);
            }
        }
        flagged
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::world::user_rng;
    use crate::taxonomy::MainCategory;

    fn rng() -> ChaCha8Rng {
        user_rng(1234, 0, 99)
    }

    fn home() -> Label {
        Label::from_sub(Subcategory::MainHome)
    }

    fn faculty() -> Label {
        Label::from_sub(Subcategory::MyFaculty)
    }

    #[test]
    fn reliable_full_response_is_ground_truth() {
        let mut p = AnnotatorProfile::reliable();
        p.response_rate = 1.0;
        let mut r = rng();
        for _ in 0..100 {
            assert_eq!(p.answer_diary(home(), faculty(), &mut r), Some(Subcategory::MainHome));
        }
    }

    #[test]
    fn inattentive_forced_noise_never_truthful() {
        let mut p = AnnotatorProfile::inattentive(1.0);
        p.response_rate = 1.0;
        let mut r = rng();
        for _ in 0..200 {
            let ans = p.answer_diary(home(), home(), &mut r).unwrap();
            assert_ne!(ans, Subcategory::MainHome);
        }
    }

    #[test]
    fn response_rate_binomial() {
        let mut p = AnnotatorProfile::reliable();
        p.response_rate = 0.5;
        let mut r = rng();
        let n = 10_000;
        let answered = (0..n)
            .filter(|_| p.answer_diary(home(), home(), &mut r).is_some())
            .count() as f64;
        let frac = answered / n as f64;
        assert!((frac - 0.5).abs() < 0.02, "answered {frac}");
    }

    #[test]
    fn predictable_reports_the_routine() {
        let mut p = AnnotatorProfile::predictable();
        p.response_rate = 1.0;
        let mut r = rng();
        // deviation day: truth is home, the routine says faculty
        assert_eq!(p.answer_diary(home(), faculty(), &mut r), Some(Subcategory::MyFaculty));
    }

    #[test]
    fn tricky_swaps_the_pair_and_reasserts() {
        let mut p = AnnotatorProfile::tricky();
        p.response_rate = 1.0;
        let mut r = rng();
        assert_eq!(p.answer_diary(faculty(), faculty(), &mut r), Some(Subcategory::MainHome));
        assert_eq!(p.answer_diary(home(), home(), &mut r), Some(Subcategory::MainHome));
        let resp = p.answer_contradiction(home(), Label::main_only(MainCategory::University), faculty(), &mut r);
        assert_eq!(resp, ContradictionResponse::ReassertOriginal);
    }

    #[test]
    fn reliable_contradiction_follows_truth() {
        let p = AnnotatorProfile::reliable();
        let mut r = rng();
        // machine right → confirm
        let resp = p.answer_contradiction(home(), Label::main_only(MainCategory::University), faculty(), &mut r);
        assert_eq!(resp, ContradictionResponse::ConfirmMachine);
        // machine wrong, original right → reassert
        let resp = p.answer_contradiction(home(), Label::main_only(MainCategory::University), home(), &mut r);
        assert_eq!(resp, ContradictionResponse::ReassertOriginal);
    }

    #[test]
    fn human_like_contradiction_mix_matches_defaults() {
        let p = AnnotatorProfile::inattentive(0.3);
        let mut r = rng();
        let n = 10_000;
        let mut confirms = 0;
        let mut reasserts = 0;
        for _ in 0..n {
            match p.answer_contradiction(home(), Label::main_only(MainCategory::University), faculty(), &mut r) {
                ContradictionResponse::ConfirmMachine => confirms += 1,
                ContradictionResponse::ReassertOriginal => reasserts += 1,
                _ => {}
            }
        }
        let confirm_rate = confirms as f64 / n as f64;
        assert!((confirm_rate - 0.25).abs() < 0.02, "confirm {confirm_rate}");
        let reassert_rate = reasserts as f64 / n as f64;
        assert!((reassert_rate - 0.60).abs() < 0.02, "reassert {reassert_rate}");
    }

    #[test]
    fn evaluation_reliable_flags_exactly_the_mistakes() {
        let p = AnnotatorProfile::reliable();
        let mut r = rng();
        let listed = vec![
            (10, Label::main_only(MainCategory::Home)),
            (11, Label::main_only(MainCategory::University)),
            (12, Label::main_only(MainCategory::Home)),
        ];
        let truth_of = |w: u64| if w == 11 { home() } else { home() };
        let flagged = p.answer_evaluation(&listed, truth_of, &mut r);
        assert_eq!(flagged, vec![11]);
        // all correct → nothing flagged
        let all_right = vec![(10, home()), (11, home())];
        assert!(p.answer_evaluation(&all_right, truth_of, &mut r).is_empty());
    }

    #[test]
    fn evaluation_recall_binomial() {
        let mut p = AnnotatorProfile::predictable();
        p.eval_recall = 0.7;
        let mut r = rng();
        let listed: Vec<(u64, Label)> = (0..10_000)
            .map(|w| (w, Label::main_only(MainCategory::University)))
            .collect();
        let flagged = p.answer_evaluation(&listed, |_| home(), &mut r);
        let frac = flagged.len() as f64 / listed.len() as f64;
        assert!((frac - 0.7).abs() < 0.02, "recall {frac}");
    }

    #[test]
    fn profile_validation() {
        let mut p = AnnotatorProfile::reliable();
        assert!(p.validate().is_ok());
        p.confirm_machine_prob = 0.5;
        assert!(p.validate().is_err());
    }
}
