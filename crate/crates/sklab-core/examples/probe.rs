//! Diagnostics harness used while calibrating the simulator defaults:
//! runs small cohorts per annotator kind and prints the metrics the
//! qualitative criteria look at.

use sklab_core::experiment::{run_experiment, CohortGroup, Method, RunConfig};
use sklab_core::sim::AnnotatorKind;

fn run(kind: AnnotatorKind, noise: Option<f64>, seeds: &[u64], users: u32, days: (u64, u64, u64)) {
    let mut skel_finals = Vec::new();
    let mut never_finals = Vec::new();
    let mut full_diffs = Vec::new();
    let mut contra_rates = Vec::new();
    let mut confirm_rates = Vec::new();
    let mut eval_corr = Vec::new();
    for &seed in seeds {
        let mut cfg = RunConfig::default();
        cfg.seed = seed;
        cfg.study.bootstrap_days = days.0;
        cfg.study.skeptical_days = days.1;
        cfg.study.evaluation_days = days.2;
        cfg.emit_traces = false;
        cfg.cohort = vec![CohortGroup {
            profile: kind,
            count: users,
            noise_rate: noise,
            response_rate: None,
            eval_recall: None,
        }];
        let out = run_experiment(&cfg, None).expect("run");
        let skel = &out.metrics.methods["skel"];
        let never = &out.metrics.methods["gp_never"];
        skel_finals.push(skel.mean_final_f1_reporting().unwrap_or(0.0));
        never_finals.push(never.mean_final_f1_reporting().unwrap_or(0.0));
        full_diffs.push(
            skel.mean_final_f1().unwrap_or(0.0) - never.mean_final_f1().unwrap_or(0.0),
        );
        for u in &skel.users {
            if let Some(r) = u.contradictions.contradiction_rate() {
                contra_rates.push(r);
            }
            if let Some(c) = u.contradictions.confirm_fraction() {
                confirm_rates.push(c);
            }
            if let Some(e) = u.evaluation_correctness {
                eval_corr.push(e);
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let diffs: Vec<f64> = skel_finals
        .iter()
        .zip(&never_finals)
        .map(|(a, b)| a - b)
        .collect();
    let sd = {
        let m = mean(&diffs);
        (diffs.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / diffs.len().max(1) as f64).sqrt()
    };
    println!(
        "{kind:?}{} seeds={} users={users}: skel={:.4} gp_never={:.4} diff={:+.4}±{:.4} min={:+.4} (full {:+.4}) contra_rate={:.4} confirm={:.3} evalcorr={:.3}",
        noise.map(|p| format!("(p={p})")).unwrap_or_default(),
        seeds.len(),
        mean(&skel_finals),
        mean(&never_finals),
        mean(&diffs),
        sd,
        diffs.iter().cloned().fold(f64::INFINITY, f64::min),
        mean(&full_diffs),
        mean(&contra_rates),
        mean(&confirm_rates),
        mean(&eval_corr),
    );
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let quick = args.iter().any(|a| a == "--quick");
    let (seeds, users, days): (Vec<u64>, u32, (u64, u64, u64)) = if quick {
        ((1..=2).collect(), 4, (7, 14, 7))
    } else {
        ((1..=10).collect(), 20, (7, 14, 7))
    };
    let t0 = std::time::Instant::now();
    run(AnnotatorKind::Reliable, None, &seeds, users, days);
    println!("  [{:?}]", t0.elapsed());
    run(AnnotatorKind::Inattentive, Some(0.3), &seeds, users, days);
    println!("  [{:?}]", t0.elapsed());
    run(AnnotatorKind::Tricky, None, &seeds, users, days);
    println!("  [{:?}]", t0.elapsed());
    run(AnnotatorKind::Predictable, None, &seeds, users, days);
    println!("total [{:?}]", t0.elapsed());
    let _ = Method::Skel;
}
