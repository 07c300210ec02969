//! Study-protocol scheduler on the simulated clock: diary dispatch, the
//! evening contradiction batch, daily evaluation questions, expiries, and
//! phase transitions.

use crate::clock::SimTime;
use crate::error::{Error, Result};
use crate::taxonomy::{Label, Subcategory};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Study phases. Bootstrap trusts every annotation; the skeptical phase may
/// contradict; the evaluation phase only asks for prediction verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Bootstrap,
    Skeptical,
    Evaluation,
    /// Past the last study day; nothing is dispatched.
    Ended,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub bootstrap_days: u64,
    pub skeptical_days: u64,
    pub evaluation_days: u64,
    pub diary_period_minutes: u64,
    pub diary_expiry_hours: f64,
    pub question_expiry_hours: f64,
    /// Minute of day of the evening batch; 19:00 by default.
    pub batch_dispatch_minute: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            bootstrap_days: 7,
            skeptical_days: 14,
            evaluation_days: 7,
            diary_period_minutes: 30,
            diary_expiry_hours: 8.0,
            question_expiry_hours: 12.0,
            batch_dispatch_minute: 19 * 60,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bootstrap_days == 0 || self.skeptical_days == 0 || self.evaluation_days == 0 {
            return Err(Error::Config("all study parts need at least one day".into()));
        }
        if self.diary_period_minutes == 0 || (24 * 60) % self.diary_period_minutes != 0 {
            return Err(Error::Config("diary period must divide 24 hours".into()));
        }
        if !(self.diary_expiry_hours > 0.0) || !(self.question_expiry_hours > 0.0) {
            return Err(Error::Config("expiry horizons must be positive".into()));
        }
        if self.batch_dispatch_minute >= 24 * 60 {
            return Err(Error::Config("batch dispatch minute out of range".into()));
        }
        Ok(())
    }

    pub fn total_days(&self) -> u64 {
        self.bootstrap_days + self.skeptical_days + self.evaluation_days
    }

    pub fn total_windows(&self) -> u64 {
        self.total_days() * self.windows_per_day()
    }

    pub fn windows_per_day(&self) -> u64 {
        24 * 60 / self.diary_period_minutes
    }

    /// First day of the evaluation part.
    pub fn evaluation_start_day(&self) -> u64 {
        self.bootstrap_days + self.skeptical_days
    }

    pub fn phase_of_day(&self, day: u64) -> Phase {
        if day < self.bootstrap_days {
            Phase::Bootstrap
        } else if day < self.bootstrap_days + self.skeptical_days {
            Phase::Skeptical
        } else if day < self.total_days() {
            Phase::Evaluation
        } else {
            Phase::Ended
        }
    }

    pub fn phase_at(&self, t: SimTime) -> Phase {
        self.phase_of_day(t.day())
    }

    pub fn window_of(&self, t: SimTime) -> u64 {
        t.minutes() / self.diary_period_minutes
    }

    pub fn window_start(&self, window: u64) -> SimTime {
        SimTime::from_minutes(window * self.diary_period_minutes)
    }
}

pub type QuestionId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuestionKind {
    /// "Where are you now?", every diary period.
    Q1Diary,
    /// "Is <time> <predicted label> correct?"
    Q2Skeptic,
    /// "Where are you at <time>?" follow-up after a rejected Q2.
    Q3Relabel,
    /// "Select the labels that are incorrect", daily in the last part.
    Q4Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum QuestionPayload {
    None,
    /// Q2: the machine label being asserted.
    MachineLabel(Label),
    /// Q4: the last day of (window, predicted label) pairs.
    Predictions(Vec<(u64, Label)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: QuestionId,
    pub kind: QuestionKind,
    pub window_refs: Vec<u64>,
    pub dispatched_at: SimTime,
    pub expires_at: SimTime,
    pub payload: QuestionPayload,
}

/// Answer content supplied by an annotator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Answer {
    Diary(Subcategory),
    /// Q2: yes = the machine label is correct.
    YesNo(bool),
    Relabel(Subcategory),
    /// Q4 verdicts: the flagged (incorrect) windows; empty = all correct.
    Evaluation { flagged: Vec<u64> },
}

/// What an accepted answer means for the engine.
#[derive(Debug, Clone, PartialEq)]
pub enum AnswerEvent {
    Diary {
        window: u64,
        label: Subcategory,
        answered_at: SimTime,
    },
    /// Q2 answered "Yes": the machine label stands.
    ConfirmMachine { window: u64, answered_at: SimTime },
    /// Q2 answered "No": a relabel question was dispatched in its place.
    FollowUpRelabel { question: Question },
    /// Q3 answered with a label (the original one or a new one).
    Relabel {
        window: u64,
        label: Subcategory,
        answered_at: SimTime,
    },
    /// Q4 verdicts per listed window: true = flagged incorrect.
    Evaluation {
        verdicts: Vec<(u64, bool)>,
        answered_at: SimTime,
    },
}

/// Per-user scheduler state.
#[derive(Debug, Clone)]
pub struct Scheduler {
    cfg: StudyConfig,
    next_id: QuestionId,
    live: BTreeMap<QuestionId, Question>,
    /// Suspicions accumulated since the last evening batch.
    pending_suspicions: Vec<(u64, Label)>,
    /// Prediction per window, for evaluation questions.
    predictions: BTreeMap<u64, Label>,
}

impl Scheduler {
    pub fn new(cfg: StudyConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Scheduler {
            cfg,
            next_id: 0,
            live: BTreeMap::new(),
            pending_suspicions: Vec::new(),
            predictions: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> &StudyConfig {
        &self.cfg
    }

    fn make_question(
        &mut self,
        kind: QuestionKind,
        window_refs: Vec<u64>,
        now: SimTime,
        payload: QuestionPayload,
    ) -> Question {
        let expiry_hours = match kind {
            QuestionKind::Q1Diary => self.cfg.diary_expiry_hours,
            _ => self.cfg.question_expiry_hours,
        };
        let q = Question {
            id: self.next_id,
            kind,
            window_refs,
            dispatched_at: now,
            expires_at: now.plus_hours(expiry_hours),
            payload,
        };
        self.next_id += 1;
        self.live.insert(q.id, q.clone());
        q
    }

    /// Record a suspicion for the next evening batch.
    pub fn note_suspicion(&mut self, window: u64, machine_label: Label) {
        self.pending_suspicions.push((window, machine_label));
    }

    /// Record a prediction so evaluation questions can list it.
    pub fn record_prediction(&mut self, window: u64, label: Label) {
        self.predictions.insert(window, label);
    }

    /// Advance to a clock instant on the slot grid; returns what was
    /// dispatched. Diaries go out at every period boundary during the first
    /// two parts; at the batch minute, part two flushes the accumulated
    /// contradictions and part three sends one evaluation question over the
    /// previous day of predictions.
    pub fn tick(&mut self, now: SimTime) -> Vec<Question> {
        let mut out = Vec::new();
        let phase = self.cfg.phase_at(now);
        let diary_boundary = now.minutes() % self.cfg.diary_period_minutes == 0;
        if diary_boundary && matches!(phase, Phase::Bootstrap | Phase::Skeptical) {
            let window = self.cfg.window_of(now);
            out.push(self.make_question(
                QuestionKind::Q1Diary,
                vec![window],
                now,
                QuestionPayload::None,
            ));
        }
        if now.minute_of_day() == self.cfg.batch_dispatch_minute {
            match phase {
                Phase::Skeptical => {
                    let batch = std::mem::take(&mut self.pending_suspicions);
                    for (window, label) in batch {
                        out.push(self.make_question(
                            QuestionKind::Q2Skeptic,
                            vec![window],
                            now,
                            QuestionPayload::MachineLabel(label),
                        ));
                    }
                }
                Phase::Evaluation => {
                    let horizon = now.minutes().saturating_sub(24 * 60);
                    let listed: Vec<(u64, Label)> = self
                        .predictions
                        .range(self.cfg.window_of(SimTime(horizon))..self.cfg.window_of(now))
                        .map(|(w, l)| (*w, *l))
                        .collect();
                    if !listed.is_empty() {
                        let windows = listed.iter().map(|(w, _)| *w).collect();
                        out.push(self.make_question(
                            QuestionKind::Q4Evaluation,
                            windows,
                            now,
                            QuestionPayload::Predictions(listed),
                        ));
                    }
                }
                _ => {}
            }
        }
        out
    }

    /// Remove questions whose expiry instant has passed (strictly).
    pub fn expire(&mut self, now: SimTime) -> Vec<Question> {
        let dead: Vec<QuestionId> = self
            .live
            .values()
            .filter(|q| now > q.expires_at)
            .map(|q| q.id)
            .collect();
        dead.into_iter()
            .map(|id| self.live.remove(&id).unwrap())
            .collect()
    }

    /// Force-expire every live question (phase-boundary sweep, study close).
    pub fn force_expire_all(&mut self) -> Vec<Question> {
        let dead: Vec<QuestionId> = self.live.keys().copied().collect();
        dead.into_iter()
            .map(|id| self.live.remove(&id).unwrap())
            .collect()
    }

    /// Suspicions noted but not yet dispatched (phase-boundary sweep).
    pub fn drain_suspicions(&mut self) -> Vec<(u64, Label)> {
        std::mem::take(&mut self.pending_suspicions)
    }

    pub fn live_count(&self) -> usize {
        self.live.len()
    }

    pub fn is_drained(&self) -> bool {
        self.live.is_empty() && self.pending_suspicions.is_empty()
    }

    pub fn live_question(&self, id: QuestionId) -> Option<&Question> {
        self.live.get(&id)
    }

    /// Accept an answer to a live question. Answering an expired or unknown
    /// question is a usage error; a rejected Q2 dispatches the follow-up
    /// relabel question immediately.
    pub fn record_answer(
        &mut self,
        id: QuestionId,
        answer: Answer,
        now: SimTime,
    ) -> Result<AnswerEvent> {
        let q = self
            .live
            .get(&id)
            .ok_or_else(|| Error::Usage(format!("question {id} is not live")))?;
        if now > q.expires_at {
            return Err(Error::Usage(format!("question {id} already expired")));
        }
        let fits = matches!(
            (q.kind, &answer),
            (QuestionKind::Q1Diary, Answer::Diary(_))
                | (QuestionKind::Q2Skeptic, Answer::YesNo(_))
                | (QuestionKind::Q3Relabel, Answer::Relabel(_))
                | (QuestionKind::Q4Evaluation, Answer::Evaluation { .. })
        );
        if !fits {
            return Err(Error::Usage(format!(
                "answer {answer:?} does not fit question kind {:?}",
                q.kind
            )));
        }
        let q = self.live.remove(&id).unwrap();
        match (q.kind, answer) {
            (QuestionKind::Q1Diary, Answer::Diary(label)) => Ok(AnswerEvent::Diary {
                window: q.window_refs[0],
                label,
                answered_at: now,
            }),
            (QuestionKind::Q2Skeptic, Answer::YesNo(true)) => Ok(AnswerEvent::ConfirmMachine {
                window: q.window_refs[0],
                answered_at: now,
            }),
            (QuestionKind::Q2Skeptic, Answer::YesNo(false)) => {
                let follow = self.make_question(
                    QuestionKind::Q3Relabel,
                    q.window_refs.clone(),
                    now,
                    QuestionPayload::None,
                );
                Ok(AnswerEvent::FollowUpRelabel { question: follow })
            }
            (QuestionKind::Q3Relabel, Answer::Relabel(label)) => Ok(AnswerEvent::Relabel {
                window: q.window_refs[0],
                label,
                answered_at: now,
            }),
            (QuestionKind::Q4Evaluation, Answer::Evaluation { flagged }) => {
                let verdicts = q
                    .window_refs
                    .iter()
                    .map(|w| (*w, flagged.contains(w)))
                    .collect();
                Ok(AnswerEvent::Evaluation {
                    verdicts,
                    answered_at: now,
                })
            }
            _ => unreachable!("shape checked above"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::SLOT_MINUTES;
    use crate::taxonomy::MainCategory;

    fn sched() -> Scheduler {
        Scheduler::new(StudyConfig::default()).unwrap()
    }

    fn run_day(s: &mut Scheduler, day: u64) -> Vec<Question> {
        let mut qs = Vec::new();
        for slot in 0..48 {
            let t = SimTime::from_minutes(day * 24 * 60 + slot * SLOT_MINUTES);
            qs.extend(s.tick(t));
        }
        qs
    }

    #[test]
    fn diary_cadence_by_phase() {
        let mut s = sched();
        for day in [0u64, 3, 10, 20] {
            let qs = run_day(&mut s, day);
            let diaries = qs.iter().filter(|q| q.kind == QuestionKind::Q1Diary).count();
            assert_eq!(diaries, 48, "day {day}");
        }
        let qs = run_day(&mut s, 21); // evaluation part: no diaries
        assert_eq!(qs.iter().filter(|q| q.kind == QuestionKind::Q1Diary).count(), 0);
    }

    #[test]
    fn afternoon_tick_emits_one_diary() {
        let mut s = sched();
        let t = SimTime::from_minutes(3 * 24 * 60 + 14 * 60);
        let qs = s.tick(t);
        assert_eq!(qs.len(), 1);
        assert_eq!(qs[0].kind, QuestionKind::Q1Diary);
        assert_eq!(qs[0].window_refs, vec![t.slot()]);
        assert_eq!(qs[0].expires_at, t.plus_hours(8.0));
    }

    #[test]
    fn suspicions_batch_at_seven_pm() {
        let mut s = sched();
        let home = Label::main_only(MainCategory::Home);
        s.note_suspicion(100, home);
        s.note_suspicion(101, home);
        s.note_suspicion(102, home);
        // nothing dispatched before the batch minute
        let t = SimTime::from_minutes(10 * 24 * 60 + 18 * 60 + 30);
        assert!(s
            .tick(t)
            .iter()
            .all(|q| q.kind != QuestionKind::Q2Skeptic));
        let t19 = SimTime::from_minutes(10 * 24 * 60 + 19 * 60);
        let qs = s.tick(t19);
        let q2: Vec<_> = qs.iter().filter(|q| q.kind == QuestionKind::Q2Skeptic).collect();
        assert_eq!(q2.len(), 3);
        for q in &q2 {
            assert_eq!(q.window_refs.len(), 1);
            assert_eq!(q.expires_at, t19.plus_hours(12.0));
        }
    }

    #[test]
    fn no_q2_batch_during_bootstrap() {
        let mut s = sched();
        s.note_suspicion(5, Label::main_only(MainCategory::Home));
        let t19 = SimTime::from_minutes(2 * 24 * 60 + 19 * 60);
        assert!(s.tick(t19).iter().all(|q| q.kind != QuestionKind::Q2Skeptic));
        // still queued for the first skeptical-phase evening
        let t19b = SimTime::from_minutes(7 * 24 * 60 + 19 * 60);
        assert!(s.tick(t19b).iter().any(|q| q.kind == QuestionKind::Q2Skeptic));
    }

    #[test]
    fn evaluation_question_lists_last_day_of_predictions() {
        let mut s = sched();
        let day = 24u64;
        let t19 = SimTime::from_minutes(day * 24 * 60 + 19 * 60);
        // predictions over a full day; only windows inside the 24 h horizon list
        for w in ((day - 1) * 48 + 10)..(day * 48 + 38) {
            s.record_prediction(w, Label::main_only(MainCategory::Home));
        }
        let qs = s.tick(t19);
        let q4: Vec<_> = qs.iter().filter(|q| q.kind == QuestionKind::Q4Evaluation).collect();
        assert_eq!(q4.len(), 1);
        let n = q4[0].window_refs.len();
        assert!(n <= 48, "n = {n}");
        // horizon [t-24h, t): windows (day-1)*48+38 .. day*48+38, we recorded from +10
        assert_eq!(n, 48);
        let w0 = *q4[0].window_refs.first().unwrap();
        assert_eq!(w0, (day - 1) * 48 + 38);
    }

    #[test]
    fn expiry_boundaries() {
        let mut s = sched();
        let dispatch = SimTime::from_minutes(8 * 60); // day 0 08:00
        let qs = s.tick(dispatch);
        assert_eq!(qs.len(), 1);
        // at exactly +8h the diary is still answerable
        assert!(s.expire(dispatch.plus_hours(8.0)).is_empty());
        // one minute later it is gone
        let expired = s.expire(SimTime::from_minutes(16 * 60 + 1));
        assert_eq!(expired.len(), 1);
        assert_eq!(expired[0].id, qs[0].id);
        // and can no longer be answered
        assert!(s
            .record_answer(qs[0].id, Answer::Diary(Subcategory::MainHome), SimTime(16 * 60 + 2))
            .is_err());
    }

    #[test]
    fn q2_live_until_seven_next_morning() {
        let mut s = sched();
        s.note_suspicion(400, Label::main_only(MainCategory::University));
        let t19 = SimTime::from_minutes(9 * 24 * 60 + 19 * 60);
        let q2 = s.tick(t19).into_iter().find(|q| q.kind == QuestionKind::Q2Skeptic).unwrap();
        let t0659 = SimTime::from_minutes(10 * 24 * 60 + 6 * 60 + 59);
        // the same-tick diary has expired by now, the skeptical question not
        let expired = s.expire(t0659);
        assert!(expired.iter().all(|q| q.kind == QuestionKind::Q1Diary));
        let ev = s.record_answer(q2.id, Answer::YesNo(true), t0659).unwrap();
        assert!(matches!(ev, AnswerEvent::ConfirmMachine { window: 400, .. }));
    }

    #[test]
    fn rejected_q2_dispatches_relabel() {
        let mut s = sched();
        s.note_suspicion(500, Label::main_only(MainCategory::Home));
        let t19 = SimTime::from_minutes(9 * 24 * 60 + 19 * 60);
        let q2 = s.tick(t19).into_iter().find(|q| q.kind == QuestionKind::Q2Skeptic).unwrap();
        let ev = s.record_answer(q2.id, Answer::YesNo(false), t19.plus_hours(1.0)).unwrap();
        let q3 = match ev {
            AnswerEvent::FollowUpRelabel { question } => question,
            other => panic!("expected follow-up, got {other:?}"),
        };
        assert_eq!(q3.kind, QuestionKind::Q3Relabel);
        assert_eq!(q3.window_refs, vec![500]);
        assert_eq!(q3.expires_at, t19.plus_hours(1.0).plus_hours(12.0));
        let ev = s
            .record_answer(q3.id, Answer::Relabel(Subcategory::MyFaculty), t19.plus_hours(2.0))
            .unwrap();
        assert!(matches!(
            ev,
            AnswerEvent::Relabel { window: 500, label: Subcategory::MyFaculty, .. }
        ));
    }

    #[test]
    fn evaluation_all_correct_marks_every_window() {
        let mut s = sched();
        for w in 1104..1110 {
            s.record_prediction(w, Label::main_only(MainCategory::Home));
        }
        let t19 = SimTime::from_minutes(23 * 24 * 60 + 19 * 60);
        let q4 = s.tick(t19).into_iter().find(|q| q.kind == QuestionKind::Q4Evaluation).unwrap();
        let ev = s
            .record_answer(q4.id, Answer::Evaluation { flagged: vec![] }, t19.plus_hours(1.0))
            .unwrap();
        match ev {
            AnswerEvent::Evaluation { verdicts, .. } => {
                assert_eq!(verdicts.len(), 6);
                assert!(verdicts.iter().all(|(_, flagged)| !flagged));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_queue_expire_is_noop() {
        let mut s = sched();
        assert!(s.expire(SimTime::from_minutes(1_000_000)).is_empty());
    }

    #[test]
    fn answer_mismatch_is_usage_error_and_keeps_question_live() {
        let mut s = sched();
        let t = SimTime::from_minutes(60);
        let q1 = s.tick(t).pop().unwrap();
        assert!(s.record_answer(q1.id, Answer::YesNo(true), t.plus_minutes(30)).is_err());
        assert!(s.live_question(q1.id).is_some());
        assert!(s
            .record_answer(q1.id, Answer::Diary(Subcategory::MainHome), t.plus_minutes(30))
            .is_ok());
    }
}
