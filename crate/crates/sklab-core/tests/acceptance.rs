//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured values (run with `--nocapture` to see them).

use sklab_core::clock::SimTime;
use sklab_core::engine::{
    decide_skeptical, Annotation, AnnotationSource, ContradictionResponse, Engine, EngineConfig,
    ExampleWindow,
};
use sklab_core::experiment::{run_experiment, CohortGroup, Method, RunConfig};
use sklab_core::features::{
    compute_features, geo, standardize::OnlineStandardizer, windowize, Feature, FeatureConfig,
    FeatureRow, WindowizeConfig,
};
use sklab_core::gp::GpState;
use sklab_core::kernel::{gram, KernelConfig};
use sklab_core::metrics::{progressive_f1, ConfusionCounts};
use sklab_core::report::write_report;
use sklab_core::scheduler::{Phase, QuestionKind, Scheduler, StudyConfig};
use sklab_core::sim::{generate_world, AnnotatorKind, WorldConfig};
use sklab_core::taxonomy::{Granularity, Label, Subcategory, Taxonomy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn random_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect()
}

/// GP correctness: incremental equals batch refit within 1e-8 relative on 50
/// random streams of 300 points; 100 random Gram factorizations succeed;
/// everything under 60 s.
#[test]
fn criterion_gp_correctness() {
    let start = Instant::now();
    let cfg = KernelConfig::default();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let d = rng.gen_range(4..12);
        let mut inc = GpState::new(cfg, 10_000).unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..300 {
            let x = random_point(&mut rng, d);
            let y = if i % 3 == 0 { -1.0 } else { 1.0 };
            inc.extend(x.clone(), y).unwrap();
            xs.push(x);
            ys.push(y);
        }
        let batch = GpState::fit(cfg, xs, ys, 10_000).unwrap();
        for _ in 0..20 {
            let probe = random_point(&mut rng, d);
            let a = inc.predict(&probe).unwrap();
            let b = batch.predict(&probe).unwrap();
            worst = worst.max(rel(a.mean, b.mean)).max(rel(a.variance, b.variance));
        }
    }
    assert!(worst <= 1e-8, "incremental vs batch relative error {worst}");

    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let n = rng.gen_range(1..=200);
        let d = rng.gen_range(1..=40);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| random_point(&mut rng, d)).collect();
        let ys: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let gp = GpState::fit(cfg, rows, ys, 10_000).unwrap();
        assert!(
            gp.factor_residual() <= 1e-8,
            "seed {seed}: factor residual {}",
            gp.factor_residual()
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    println!(
        "ACCEPT gp_correctness: PASS (worst rel err {worst:.2e}, 100 factorizations, {elapsed:?})"
    );
}

/// Kernel values: the three pinned examples to 1e-9.
#[test]
fn criterion_kernel_values() {
    let cfg = KernelConfig::default();
    // SE term at zero distance
    let zero = cfg.eval(&[0.3, 0.7], &[0.3, 0.7]).unwrap();
    let se_at_zero = zero - cfg.const_value - 1.0; // subtract const and RQ(0)=1
    assert!((se_at_zero - 1.0).abs() <= 1e-9);
    // RQ at distance 0.2 with the default hyperparameters
    let full = cfg.eval(&[0.0], &[0.2]).unwrap();
    let se = (-0.04f64 / 2.0).exp();
    let rq = full - cfg.const_value - se;
    assert!((rq - 2.0 / 3.0).abs() <= 1e-9, "rq {rq}");
    // training diagonal: const + RQ(0) + SE(0) + noise
    let diag = cfg.train_diag();
    assert!((diag - 3.000_000_01).abs() <= 1e-9, "diag {diag}");
    println!("ACCEPT kernel_values: PASS (se0 {se_at_zero}, rq {rq:.9}, diag {diag:.9})");
}

fn diary(window: u64, sub: Subcategory) -> Annotation {
    Annotation {
        window_index: window,
        label: Label::from_sub(sub),
        source: AnnotationSource::TimeDiary,
        answered_at: SimTime::from_slot(window + 1),
    }
}

/// Algorithm conformance on scripted traces: bootstrap never contradicts,
/// suspicion requires disagreement, contradictions resolve or expire exactly
/// once, and the evaluation phase never trains.
#[test]
fn criterion_algorithm_conformance() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // bootstrap never contradicts, whatever the stream looks like
    let mut cfg = EngineConfig::default();
    cfg.phase = Phase::Bootstrap;
    let mut engine = Engine::new(KernelConfig::default(), cfg, 4000).unwrap();
    for w in 0..200u64 {
        let x = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let sub = Subcategory::ALL[rng.gen_range(0..18)];
        let out = engine
            .step(&ExampleWindow { window_index: w, start: SimTime::from_slot(w), features: x }, Some(diary(w, sub)))
            .unwrap();
        assert!(!out.suspicious, "bootstrap contradicted window {w}");
        assert!(out.trained_on.is_some());
    }

    // suspicion requires disagreement: random posteriors through the rule
    let mut skeptical = EngineConfig::default();
    skeptical.phase = Phase::Skeptical;
    for _ in 0..2000 {
        let means: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let stds: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.5)).collect();
        let mut predicted = 0;
        for c in 1..4 {
            if means[c] > means[predicted] {
                predicted = c;
            }
        }
        let mut second = f64::NEG_INFINITY;
        for (c, m) in means.iter().enumerate() {
            if c != predicted && *m > second {
                second = *m;
            }
        }
        let posterior = sklab_core::gp::ClassPosterior {
            margin: means[predicted] - second,
            predicted,
            means,
            stds,
        };
        let user = rng.gen_range(0..4);
        if decide_skeptical(&posterior, user, &skeptical) {
            assert_ne!(posterior.predicted, user, "suspicious despite agreement");
        }
        assert!(!decide_skeptical(&posterior, posterior.predicted, &skeptical));
    }

    // a contradiction resolves exactly once; a second resolution is an error
    let mut engine = Engine::new(KernelConfig::default(), skeptical, 4000).unwrap();
    engine.set_phase(Phase::Bootstrap);
    for w in 0..5u64 {
        engine
            .step(
                &ExampleWindow { window_index: w, start: SimTime::from_slot(w), features: vec![2.0, -2.0] },
                Some(diary(w, Subcategory::MainHome)),
            )
            .unwrap();
    }
    engine.set_phase(Phase::Skeptical);
    let out = engine
        .step(
            &ExampleWindow { window_index: 50, start: SimTime::from_slot(50), features: vec![2.0, -2.0] },
            Some(diary(50, Subcategory::MyFaculty)),
        )
        .unwrap();
    assert!(out.suspicious);
    engine
        .resolve_contradiction(50, ContradictionResponse::Expired, SimTime(0))
        .unwrap();
    assert!(engine
        .resolve_contradiction(50, ContradictionResponse::Expired, SimTime(0))
        .is_err());

    // evaluation phase: the model hash is constant whatever arrives
    engine.set_phase(Phase::Evaluation);
    let h = engine.state_hash();
    for w in 100..150u64 {
        let x = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let sub = Subcategory::ALL[rng.gen_range(0..18)];
        engine
            .step(&ExampleWindow { window_index: w, start: SimTime::from_slot(w), features: x }, Some(diary(w, sub)))
            .unwrap();
    }
    assert_eq!(engine.state_hash(), h, "evaluation phase trained");
    println!("ACCEPT algorithm_conformance: PASS");
}

/// Scheduler conformance on a deterministic clock: 48 diaries per day in the
/// first two parts and none in the third, exact 8 h and 12 h expiries, all
/// contradictions at 19:00, one evaluation question per evaluation day.
#[test]
fn criterion_scheduler_conformance() {
    let cfg = StudyConfig::default();
    let mut s = Scheduler::new(cfg).unwrap();
    let mut q1_per_day = vec![0u64; 28];
    let mut q2_dispatch_minutes = Vec::new();
    let mut q4_per_day = vec![0u64; 28];
    for day in 0..28u64 {
        for slot in 0..48u64 {
            let now = SimTime::from_minutes(day * 1440 + slot * 30);
            // keep a suspicion queued so every skeptical evening batches one
            if cfg.phase_at(now) == Phase::Skeptical && now.minute_of_day() == 0 {
                s.note_suspicion(now.slot(), Label::main_only(sklab_core::taxonomy::MainCategory::Home));
            }
            if cfg.phase_at(now) == Phase::Evaluation && now.minute_of_day() == 0 {
                for w in now.slot().saturating_sub(40)..now.slot() {
                    s.record_prediction(w, Label::main_only(sklab_core::taxonomy::MainCategory::Home));
                }
            }
            for q in s.tick(now) {
                match q.kind {
                    QuestionKind::Q1Diary => {
                        q1_per_day[day as usize] += 1;
                        assert_eq!(q.expires_at, now.plus_hours(8.0), "diary expiry");
                    }
                    QuestionKind::Q2Skeptic => {
                        q2_dispatch_minutes.push(now.minute_of_day());
                        assert_eq!(q.expires_at, now.plus_hours(12.0), "question expiry");
                        assert!(cfg.phase_at(now) == Phase::Skeptical);
                    }
                    QuestionKind::Q4Evaluation => {
                        q4_per_day[day as usize] += 1;
                        assert!(q.window_refs.len() <= 48);
                    }
                    QuestionKind::Q3Relabel => unreachable!(),
                }
            }
            s.force_expire_all();
        }
    }
    for day in 0..21 {
        assert_eq!(q1_per_day[day], 48, "day {day}");
    }
    for day in 21..28 {
        assert_eq!(q1_per_day[day], 0, "day {day}");
        assert_eq!(q4_per_day[day], 1, "day {day}");
    }
    assert!(!q2_dispatch_minutes.is_empty());
    assert!(q2_dispatch_minutes.iter().all(|m| *m == 19 * 60));

    // exact expiry boundaries
    let mut s = Scheduler::new(cfg).unwrap();
    let q1 = s.tick(SimTime::from_minutes(8 * 60)).pop().unwrap();
    assert!(s.expire(SimTime::from_minutes(16 * 60)).is_empty());
    let expired = s.expire(SimTime::from_minutes(16 * 60 + 1));
    assert_eq!(expired.len(), 1);
    assert_eq!(expired[0].id, q1.id);
    println!("ACCEPT scheduler_conformance: PASS (48 Q1/day, 19:00 batches, 8h/12h expiries)");
}

/// κ→∞ SkeL is bit-identical to the never-contradicting baseline.
#[test]
fn criterion_baseline_equivalence() {
    let mut cfg = RunConfig::default();
    cfg.seed = 33;
    cfg.emit_traces = false;
    cfg.study.bootstrap_days = 2;
    cfg.study.skeptical_days = 4;
    cfg.study.evaluation_days = 1;
    cfg.engine.skeptic_threshold = f64::INFINITY;
    cfg.cohort = vec![CohortGroup {
        profile: AnnotatorKind::Inattentive,
        count: 2,
        noise_rate: Some(0.4),
        response_rate: None,
        eval_recall: None,
    }];
    let out = run_experiment(&cfg, None).unwrap();
    for user in ["u000", "u001"] {
        assert_eq!(
            out.model_hashes[&(Method::Skel, user.to_string())],
            out.model_hashes[&(Method::GpNever, user.to_string())],
            "trained datasets differ for {user}"
        );
    }
    let a = serde_json::to_string(&out.metrics.methods["skel"]).unwrap();
    let b = serde_json::to_string(&out.metrics.methods["gp_never"]).unwrap();
    assert_eq!(a, b, "metrics differ");
    println!("ACCEPT baseline_equivalence: PASS (hashes and metrics bit-identical)");
}

fn cohort_run(kind: AnnotatorKind, noise: Option<f64>, seeds: std::ops::RangeInclusive<u64>) -> (f64, f64, Vec<f64>) {
    let mut skel = Vec::new();
    let mut never = Vec::new();
    let mut contra_rates = Vec::new();
    for seed in seeds {
        let mut cfg = RunConfig::default();
        cfg.seed = seed;
        cfg.emit_traces = false;
        cfg.cohort = vec![CohortGroup {
            profile: kind,
            count: 20,
            noise_rate: noise,
            response_rate: None,
            eval_recall: None,
        }];
        let out = run_experiment(&cfg, None).unwrap();
        skel.push(out.metrics.methods["skel"].mean_final_f1_reporting().unwrap());
        never.push(out.metrics.methods["gp_never"].mean_final_f1_reporting().unwrap());
        for u in &out.metrics.methods["skel"].users {
            if let Some(r) = u.contradictions.contradiction_rate() {
                contra_rates.push(r);
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    (mean(&skel), mean(&never), contra_rates)
}

/// Qualitative reproduction, 10 seeds × 20 users × 28 days, main categories:
/// the inattentive cohort gains ≥ 0.05 final progressive F1, the reliable
/// cohort sees no material difference and almost no contradictions, and the
/// tricky cohort's difference is reported. Budget: 10 minutes.
#[test]
fn criterion_qualitative_cohorts() {
    let start = Instant::now();
    let (skel_i, never_i, _) = cohort_run(AnnotatorKind::Inattentive, Some(0.3), 1..=10);
    let diff_inattentive = skel_i - never_i;
    println!(
        "  inattentive: skel {skel_i:.4} vs gp_never {never_i:.4} -> diff {diff_inattentive:+.4}"
    );
    let (skel_r, never_r, contra_rates) = cohort_run(AnnotatorKind::Reliable, None, 1..=10);
    let diff_reliable = skel_r - never_r;
    let worst_rate = contra_rates.iter().cloned().fold(0.0f64, f64::max);
    println!(
        "  reliable: skel {skel_r:.4} vs gp_never {never_r:.4} -> diff {diff_reliable:+.4}, max contradiction rate {worst_rate:.4}"
    );
    let (skel_t, never_t, _) = cohort_run(AnnotatorKind::Tricky, None, 1..=10);
    let diff_tricky = skel_t - never_t;
    println!(
        "  tricky: skel {skel_t:.4} vs gp_never {never_t:.4} -> diff {diff_tricky:+.4} (reported; skepticism cannot correct a consistent mislabeler)"
    );
    let elapsed = start.elapsed();

    assert!(
        diff_inattentive >= 0.05,
        "inattentive advantage {diff_inattentive} < 0.05"
    );
    assert!(
        diff_reliable.abs() <= 0.02,
        "reliable difference {diff_reliable} exceeds 0.02"
    );
    assert!(
        worst_rate <= 0.02,
        "reliable contradiction rate {worst_rate} exceeds 2%"
    );
    assert!(diff_tricky.is_finite());
    assert!(elapsed.as_secs() < 600, "took {elapsed:?}");
    println!(
        "ACCEPT qualitative_cohorts: PASS (inattentive {diff_inattentive:+.4}, reliable {diff_reliable:+.4}, tricky {diff_tricky:+.4}, {elapsed:?})"
    );
}

/// Feature pipeline: the geographic oracles, the hour-encoding identities,
/// total ≥ direct on 1000 random windows, and finite model inputs under 90%
/// injected missingness.
#[test]
fn criterion_feature_pipeline() {
    // 0.001° of latitude ≈ 111.19 m
    let g = geo::geo_features(&[(45.0, 9.0), (45.001, 9.0)]).unwrap();
    let d = g.direct_distance.unwrap();
    assert!((d - 111.19).abs() < 0.1, "{d}");
    // two points: gyration radius is half the distance
    let p = [(45.0, 9.0), (45.03, 9.01)];
    let dist = geo::haversine_m(p[0], p[1]).unwrap();
    let rg = geo::geo_features(&p).unwrap().radius_of_gyration.unwrap();
    assert!((rg - dist / 2.0).abs() <= 1e-6 * dist);

    // hour encoding identities on every slot of a week
    for slot in 0..(7 * 48) {
        let w = sklab_core::features::Window {
            user_id: "u".into(),
            index: slot,
            start: SimTime::from_slot(slot),
            period_minutes: 30,
            events: vec![],
        };
        let row = compute_features(&w, &FeatureConfig::default()).unwrap();
        let s = row.get(Feature::TimeSinHour).unwrap();
        let c = row.get(Feature::TimeCosHour).unwrap();
        assert!((s * s + c * c - 1.0).abs() <= 1e-12);
        let day_parts: f64 = [
            Feature::TimeIsMorning,
            Feature::TimeIsNoon,
            Feature::TimeIsAfternoon,
            Feature::TimeIsEvening,
            Feature::TimeIsNight,
        ]
        .iter()
        .map(|f| row.get(*f).unwrap())
        .sum();
        assert_eq!(day_parts, 1.0, "slot {slot}");
    }

    // total ≥ direct over 1000 random synthetic windows
    let world = generate_world(
        99,
        0,
        &WorldConfig {
            days: 28,
            ..Default::default()
        },
    )
    .unwrap();
    let windows = windowize(
        &world.events,
        &WindowizeConfig {
            period_minutes: 30,
            start_index: Some(0),
            end_index: Some(world.slots()),
        },
    )
    .unwrap();
    let mut checked = 0;
    for w in &windows {
        let row = compute_features(w, &FeatureConfig::default()).unwrap();
        if let (Some(total), Some(direct)) = (
            row.get(Feature::LocationTotalDistance),
            row.get(Feature::LocationDirectDistance),
        ) {
            assert!(total >= direct - 1e-9, "window {}", w.index);
            checked += 1;
        }
    }
    assert!(checked >= 1000, "only {checked} windows had distances");

    // standardization stays finite under 90% injected missingness
    let sparse = generate_world(
        77,
        0,
        &WorldConfig {
            days: 7,
            missingness: sklab_core::sim::MissingnessConfig::uniform(0.9),
            device_off_rate: 0.05,
            ..Default::default()
        },
    )
    .unwrap();
    let windows = windowize(
        &sparse.events,
        &WindowizeConfig {
            period_minutes: 30,
            start_index: Some(0),
            end_index: Some(sparse.slots()),
        },
    )
    .unwrap();
    let mut std = OnlineStandardizer::new();
    for w in &windows {
        let row = compute_features(w, &FeatureConfig::default()).unwrap();
        let v = std.transform(&row);
        assert!(v.iter().all(|x| x.is_finite()), "window {}", w.index);
    }
    println!("ACCEPT feature_pipeline: PASS ({checked} distance windows, 90% missingness finite)");
}

/// The incremental progressive-F1 matches a naive full recomputation exactly
/// on 100 random streams.
#[test]
fn criterion_metrics_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    for case in 0..100 {
        let n = rng.gen_range(1..=500);
        let pred: Vec<Option<usize>> = (0..n)
            .map(|_| rng.gen_bool(0.85).then(|| rng.gen_range(0..4)))
            .collect();
        let truth: Vec<Option<usize>> = (0..n)
            .map(|_| rng.gen_bool(0.85).then(|| rng.gen_range(0..4)))
            .collect();
        let fast = progressive_f1(&pred, &truth);
        // naive oracle: rebuild the confusion from scratch at every slot
        let mut naive = Vec::with_capacity(n);
        for t in 0..n {
            let mut counts = ConfusionCounts::new();
            for i in 0..=t {
                if let (Some(p), Some(y)) = (pred[i], truth[i]) {
                    counts.observe(p, y);
                }
            }
            naive.push(if counts.is_empty() {
                None
            } else {
                Some(counts.macro_f1())
            });
        }
        assert_eq!(fast, naive, "case {case}: exact match required");
    }
    println!("ACCEPT metrics_oracle: PASS (100 streams, exact)");
}

/// Identical seeds produce identical report file bytes across two runs.
#[test]
fn criterion_determinism() {
    let mut cfg = RunConfig::default();
    cfg.seed = 2026;
    cfg.study.bootstrap_days = 2;
    cfg.study.skeptical_days = 3;
    cfg.study.evaluation_days = 1;
    cfg.emit_traces = false;
    cfg.cohort = vec![CohortGroup {
        profile: AnnotatorKind::Predictable,
        count: 2,
        noise_rate: None,
        response_rate: None,
        eval_recall: None,
    }];
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [dir_a.path(), dir_b.path()] {
        let out = run_experiment(&cfg, None).unwrap();
        write_report(&out.metrics, dir).unwrap();
    }
    use sha2::{Digest, Sha256};
    let mut names: Vec<_> = std::fs::read_dir(dir_a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for name in names {
        let a = std::fs::read(dir_a.path().join(&name)).unwrap();
        let b = std::fs::read(dir_b.path().join(&name)).unwrap();
        let ha = Sha256::digest(&a);
        let hb = Sha256::digest(&b);
        assert_eq!(ha, hb, "{name:?} differs between runs");
    }
    println!("ACCEPT determinism: PASS (identical report hashes)");
}

/// The engine's model snapshot reloads fast enough at desk scale.
#[test]
fn criterion_snapshot_reload_speed() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut cfg = EngineConfig::default();
    cfg.phase = Phase::Bootstrap;
    let mut engine = Engine::new(KernelConfig::default(), cfg, 4000).unwrap();
    let tax = Taxonomy::new(Granularity::MainCategory);
    for w in 0..500u64 {
        let x: Vec<f64> = (0..20).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let sub = Subcategory::ALL[rng.gen_range(0..18)];
        engine
            .step(&ExampleWindow { window_index: w, start: SimTime::from_slot(w), features: x }, Some(diary(w, sub)))
            .unwrap();
    }
    assert_eq!(engine.model().len(), 500);
    let snap = serde_json::to_string(&engine.save_state()).unwrap();
    let t0 = Instant::now();
    let restored = Engine::load_state(serde_json::from_str(&snap).unwrap()).unwrap();
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "reload took {elapsed:?}");
    let probe: Vec<f64> = (0..20).map(|_| 0.1).collect();
    let a = engine.predict(&probe).unwrap();
    let b = restored.predict(&probe).unwrap();
    for c in 0..4 {
        assert!((a.means[c] - b.means[c]).abs() < 1e-10);
    }
    let _ = tax;
    println!("ACCEPT snapshot_reload: PASS (500-point model reloads in {elapsed:?})");
}
