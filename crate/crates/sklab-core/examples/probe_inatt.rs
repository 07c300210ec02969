//! Calibration: inattentive cohort at criterion scale (seeds × users),
//! printing the per-seed reporting-window F1 difference.

use sklab_core::experiment::{run_experiment, CohortGroup, RunConfig};
use sklab_core::sim::AnnotatorKind;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seeds: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let users: u32 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10);
    let t0 = std::time::Instant::now();
    let mut diffs = Vec::new();
    for seed in 1..=seeds {
        let mut cfg = RunConfig::default();
        cfg.seed = seed;
        cfg.emit_traces = false;
        cfg.reporting_start_day = std::env::args()
            .nth(3)
            .and_then(|s| s.parse().ok());
        cfg.cohort = vec![CohortGroup {
            profile: AnnotatorKind::Inattentive,
            count: users,
            noise_rate: Some(0.3),
            response_rate: None,
            eval_recall: None,
        }];
        if let Ok(v) = std::env::var("DEVIATION") {
            cfg.world.deviation_rate = v.parse().unwrap();
        }
        if let Ok(v) = std::env::var("DEVICE_OFF") {
            cfg.world.device_off_rate = v.parse().unwrap();
        }
        if let Ok(v) = std::env::var("RESP") {
            cfg.cohort[0].response_rate = Some(v.parse().unwrap());
        }
        let out = run_experiment(&cfg, None).unwrap();
        let d = out.metrics.methods["skel"].mean_final_f1_reporting().unwrap()
            - out.metrics.methods["gp_never"]
                .mean_final_f1_reporting()
                .unwrap();
        println!("seed {seed}: diff {d:+.4}  [{:?}]", t0.elapsed());
        diffs.push(d);
    }
    let m = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let sd = (diffs.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / diffs.len() as f64).sqrt();
    println!(
        "mean {m:+.4} sd {sd:.4} min {:+.4}",
        diffs.iter().cloned().fold(f64::INFINITY, f64::min)
    );
}
