//! Calibration diagnostic: within-context distances in standardized feature
//! space (same weekday+slot across weeks), with per-dimension offenders.

use sklab_core::experiment::RunConfig;
use sklab_core::features::{
    compute_features, standardize::OnlineStandardizer, windowize, Feature, FeatureConfig,
    WindowizeConfig, FEATURE_COUNT,
};
use sklab_core::sim::generate_world;
use sklab_core::taxonomy::MainCategory;

fn main() {
    let cfg = RunConfig::default();
    let world = generate_world(1, 0, &cfg.world_for_study()).unwrap();
    let total = world.slots();
    let windows = windowize(
        &world.events,
        &WindowizeConfig {
            period_minutes: 30,
            start_index: Some(0),
            end_index: Some(total),
        },
    )
    .unwrap();
    let mut std = OnlineStandardizer::new();
    let fcfg = FeatureConfig::default();
    let vectors: Vec<Vec<f64>> = windows
        .iter()
        .map(|w| std.transform(&compute_features(w, &fcfg).unwrap()))
        .collect();

    // compare week 3 slots to the same (dow, slot) in week 2
    let mut per_dim = vec![0.0f64; 2 * FEATURE_COUNT];
    let mut total_d2 = Vec::new();
    let mut n = 0usize;
    for w in (14 * 48)..(21 * 48) {
        let prev = w - 7 * 48;
        // only same-context (same true label) pairs
        if world.truth[w].main != world.truth[prev].main {
            continue;
        }
        if world.truth[w].main == MainCategory::Travelling {
            continue;
        }
        let (a, b) = (&vectors[w], &vectors[prev]);
        let mut d2 = 0.0;
        for i in 0..a.len() {
            let d = a[i] - b[i];
            per_dim[i] += d * d;
            d2 += d * d;
        }
        total_d2.push(d2);
        n += 1;
    }
    total_d2.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| total_d2[(p * (total_d2.len() - 1) as f64) as usize];
    println!(
        "same-context pairs: {n}; r2 p10={:.2} p50={:.2} p90={:.2}",
        q(0.1),
        q(0.5),
        q(0.9)
    );
    let mut dims: Vec<(usize, f64)> = per_dim
        .iter()
        .enumerate()
        .map(|(i, v)| (i, v / n as f64))
        .collect();
    dims.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    println!("top offending dimensions (mean squared diff):");
    for (i, v) in dims.iter().take(20) {
        let name = if *i < FEATURE_COUNT {
            Feature::ALL[*i].name().to_string()
        } else {
            format!("{}_missing", Feature::ALL[*i - FEATURE_COUNT].name())
        };
        println!("  {name:35} {v:.4}");
    }
}
