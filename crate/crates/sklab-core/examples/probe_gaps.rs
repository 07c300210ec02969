//! Calibration diagnostic: distribution of the skepticism statistic at
//! disagreeing steps (how close the decision rule is to firing).

use sklab_core::experiment::{run_user, CohortGroup, Method, RunConfig};
use sklab_core::logio::EngineLogEvent;
use sklab_core::sim::{generate_world, AnnotatorKind};
use sklab_core::taxonomy::MainCategory;

fn main() {
    let mut cfg = RunConfig::default();
    cfg.seed = 1;
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
    let out = run_user(&cfg, 0, &world, &profile, Method::Skel).unwrap();

    let mut rows = Vec::new();
    for e in &out.engine_trace {
        if let EngineLogEvent::Step {
            window,
            phase,
            predicted,
            means,
            std,
            annotation: Some(ann),
            ..
        } = e
        {
            if phase != "Skeptical" {
                continue;
            }
            let user_main = ann.split('/').next().unwrap();
            if user_main == predicted {
                continue;
            }
            let user_idx = MainCategory::ALL
                .iter()
                .position(|m| m.name() == user_main)
                .unwrap();
            let pred_idx = MainCategory::ALL
                .iter()
                .position(|m| m.name() == predicted.as_str())
                .unwrap();
            let gap = means[pred_idx] - means[user_idx];
            let scale = 2.0 * std;
            rows.push((gap, scale, *window, gap / scale.max(1e-12)));
        }
    }
    rows.sort_by(|a, b| b.3.partial_cmp(&a.3).unwrap());
    println!("disagreeing skeptical-phase steps: {}", rows.len());
    // how many contradictions hit labels that were actually right?
    let mut fired_right = 0;
    let mut fired_wrong = 0;
    for e in &out.engine_trace {
        if let EngineLogEvent::Step { window, suspicious: true, annotation: Some(ann), .. } = e {
            let truth = world.truth[*window as usize];
            let user_main = ann.split('/').next().unwrap();
            if user_main == truth.main.name() {
                fired_right += 1;
            } else {
                fired_wrong += 1;
            }
        }
    }
    println!("contradictions on right labels: {fired_right}, on wrong labels: {fired_wrong}");
    for (gap, scale, w, ratio) in rows.iter().take(25) {
        println!("  w={w:5} gap={gap:+.3} 2s={scale:.3} gap/2s={ratio:+.3}");
    }
    let fire = rows.iter().filter(|r| r.3 > 1.0).count();
    println!("would fire at kappa=1: {fire}");
    // also: what do stds look like over ALL steps late in the study?
    let mut stds: Vec<f64> = out
        .engine_trace
        .iter()
        .filter_map(|e| match e {
            EngineLogEvent::Step { window, std, .. } if *window > 700 => Some(*std),
            _ => None,
        })
        .collect();
    stds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if !stds.is_empty() {
        let q = |p: f64| stds[(p * (stds.len() - 1) as f64) as usize];
        println!(
            "late-study posterior std quantiles: p10={:.3} p50={:.3} p90={:.3}",
            q(0.1),
            q(0.5),
            q(0.9)
        );
    }
}
