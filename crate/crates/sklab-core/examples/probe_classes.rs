//! Calibration diagnostic: per-class confusion over the reporting window,
//! for both methods on one inattentive user.

use sklab_core::experiment::{run_user, CohortGroup, Method, RunConfig};
use sklab_core::logio::EngineLogEvent;
use sklab_core::sim::{generate_world, AnnotatorKind};
use sklab_core::taxonomy::MainCategory;

fn main() {
    let mut cfg = RunConfig::default();
    cfg.seed = 2;
    cfg.emit_traces = true;
    cfg.cohort = vec![CohortGroup {
        profile: AnnotatorKind::Inattentive,
        count: 1,
        noise_rate: Some(0.3),
        response_rate: None,
        eval_recall: None,
    }];
    let world = generate_world(cfg.seed, 0, &cfg.world_for_study()).unwrap();
    let profile = cfg.cohort[0].build_profile().unwrap();
    let start = cfg.reporting_start_slot();

    for method in [Method::Skel, Method::GpNever] {
        let out = run_user(&cfg, 0, &world, &profile, method).unwrap();
        // confusion[truth][pred]
        let mut conf = [[0u32; 4]; 4];
        for e in &out.engine_trace {
            if let EngineLogEvent::Step { window, predicted, .. } = e {
                if *window < start {
                    continue;
                }
                let t = world.truth[*window as usize].main.index();
                let p = MainCategory::ALL
                    .iter()
                    .position(|m| m.name() == predicted.as_str())
                    .unwrap();
                conf[t][p] += 1;
            }
        }
        println!("{method:?} (rows=truth, cols=pred: uni home travel other)");
        for (t, row) in conf.iter().enumerate() {
            let support: u32 = row.iter().sum();
            let tp = row[t];
            let fp: u32 = (0..4).map(|i| conf[i][t]).sum::<u32>() - tp;
            let f1 = if 2 * tp + fp + (support - tp) == 0 {
                0.0
            } else {
                2.0 * tp as f64 / (2 * tp + fp + (support - tp)) as f64
            };
            println!(
                "  {:12} {:4} {:4} {:4} {:4}  | support {:4} F1 {:.3}",
                MainCategory::ALL[t].name(),
                row[0],
                row[1],
                row[2],
                row[3],
                support,
                f1
            );
        }
    }
}
