//! `sklab`: run simulated skeptical-learning studies from the command line.

use clap::{Args, Parser, Subcommand};
use sklab_core::error::{Error, Result};
use sklab_core::experiment::{run_experiment, Method, RunConfig};
use sklab_core::features::{compute_features, windowize, WindowizeConfig};
use sklab_core::logio;
use sklab_core::metrics::MetricsBundle;
use sklab_core::report::write_report;
use sklab_core::sim::{generate_world, UserWorld};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "sklab",
    about = "Skeptical-learning laboratory: simulate annotator cohorts, run \
             studies against the never-contradicting baseline, and report the \
             evaluation metrics",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML run configuration; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a simulated world: sensor JSON-lines plus label timelines.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate a raw sensor log into per-window feature rows.
    Featurize {
        /// Sensor log (`.jsonl` or `.csv`).
        #[arg(long)]
        input: PathBuf,
        /// Output feature CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full study over the configured cohort and baselines.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory for metrics, report files and traces.
        #[arg(long)]
        out: PathBuf,
        /// Replay a dumped world instead of generating one.
        #[arg(long)]
        world: Option<PathBuf>,
    },
    /// Render report files from a saved metrics bundle.
    Report {
        /// `metrics.json` produced by `run`.
        #[arg(long)]
        metrics: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(args: &ConfigArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn generate_worlds(cfg: &RunConfig) -> Result<Vec<UserWorld>> {
    let world_cfg = cfg.world_for_study();
    let users: u32 = cfg.cohort.iter().map(|g| g.count).sum();
    (0..users).map(|u| generate_world(cfg.seed, u, &world_cfg)).collect()
}

fn simulate(cfg: &RunConfig, out: &Path) -> Result<()> {
    let worlds = generate_worlds(cfg)?;
    fs::create_dir_all(out)?;
    let mut all_events = Vec::new();
    let mut truth_rows = Vec::new();
    let mut modal_rows = Vec::new();
    for w in &worlds {
        all_events.extend(w.events.iter().cloned());
        for (slot, label) in w.truth.iter().enumerate() {
            truth_rows.push((w.user_id.clone(), slot as u64, *label));
        }
        for (slot, label) in w.modal.iter().enumerate() {
            modal_rows.push((w.user_id.clone(), slot as u64, *label));
        }
    }
    let f = fs::File::create(out.join("sensors.jsonl"))?;
    logio::write_sensor_jsonl(std::io::BufWriter::new(f), &all_events)?;
    let f = fs::File::create(out.join("truth.csv"))?;
    logio::write_label_timeline(std::io::BufWriter::new(f), &truth_rows)?;
    let f = fs::File::create(out.join("modal.csv"))?;
    logio::write_label_timeline(std::io::BufWriter::new(f), &modal_rows)?;
    println!(
        "wrote {} events for {} users under {}",
        all_events.len(),
        worlds.len(),
        out.display()
    );
    Ok(())
}

fn featurize(input: &Path, out: &Path) -> Result<()> {
    let file = fs::File::open(input)?;
    let events = if input.extension().and_then(|e| e.to_str()) == Some("csv") {
        logio::read_sensor_csv(file)?
    } else {
        logio::read_sensor_jsonl(file)?
    };
    let by_user = logio::group_by_user(events);
    let mut rows = Vec::new();
    for (user, events) in by_user {
        let windows = windowize(&events, &WindowizeConfig::default())?;
        for w in windows {
            let row = compute_features(&w, &Default::default())?;
            rows.push((user.clone(), w.index, row));
        }
    }
    if let Some(parent) = out.parent() {
        fs::create_dir_all(parent)?;
    }
    let f = fs::File::create(out)?;
    logio::write_feature_csv(std::io::BufWriter::new(f), &rows)?;
    println!("wrote {} feature rows to {}", rows.len(), out.display());
    Ok(())
}

/// Load a world dump (`simulate` output) back into per-user worlds, in
/// cohort order.
fn load_worlds(dir: &Path, cfg: &RunConfig) -> Result<Vec<UserWorld>> {
    let events = logio::read_sensor_jsonl(fs::File::open(dir.join("sensors.jsonl"))?)?;
    let truth = logio::read_label_timeline(fs::File::open(dir.join("truth.csv"))?)?;
    let modal = logio::read_label_timeline(fs::File::open(dir.join("modal.csv"))?)?;
    let mut by_user = logio::group_by_user(events);
    let slots = cfg.study.total_windows();
    let mut worlds = Vec::new();
    for user_id in truth.keys() {
        let t = &truth[user_id];
        let m = modal
            .get(user_id)
            .ok_or_else(|| Error::Data(format!("no modal timeline for {user_id}")))?;
        let collect = |map: &BTreeMap<u64, sklab_core::taxonomy::Label>| -> Result<Vec<_>> {
            (0..slots)
                .map(|s| {
                    map.get(&s)
                        .copied()
                        .ok_or_else(|| Error::Data(format!("{user_id}: missing slot {s}")))
                })
                .collect()
        };
        worlds.push(UserWorld {
            user_id: user_id.clone(),
            days: cfg.study.total_days(),
            truth: collect(t)?,
            modal: collect(m)?,
            events: by_user.remove(user_id).unwrap_or_default(),
        });
    }
    Ok(worlds)
}

fn run(cfg: &RunConfig, out: &Path, world_dir: Option<&Path>) -> Result<()> {
    let worlds = match world_dir {
        Some(dir) => Some(load_worlds(dir, cfg)?),
        None => None,
    };
    let output = run_experiment(cfg, worlds)?;
    fs::create_dir_all(out)?;
    let metrics_json = serde_json::to_vec_pretty(&output.metrics)?;
    logio::write_file(&out.join("metrics.json"), &metrics_json)?;
    write_report(&output.metrics, &out.join("report"))?;
    for (method, user, engine_trace, question_trace) in &output.traces {
        let dir = out.join("traces").join(method.name()).join(user);
        fs::create_dir_all(&dir)?;
        let f = fs::File::create(dir.join("engine.jsonl"))?;
        logio::write_jsonl(std::io::BufWriter::new(f), engine_trace)?;
        let f = fs::File::create(dir.join("questions.jsonl"))?;
        logio::write_jsonl(std::io::BufWriter::new(f), question_trace)?;
    }
    for method in &cfg.baselines {
        let m = &output.metrics.methods[method.name()];
        println!(
            "{}: mean final F1 {:.4} (reporting window {:.4}) over {} users",
            method.name(),
            m.mean_final_f1().unwrap_or(f64::NAN),
            m.mean_final_f1_reporting().unwrap_or(f64::NAN),
            m.users.len()
        );
    }
    if cfg.baselines.contains(&Method::Skel) && cfg.baselines.contains(&Method::GpNever) {
        let a = output.metrics.methods[Method::Skel.name()]
            .mean_final_f1_reporting()
            .unwrap_or(f64::NAN);
        let b = output.metrics.methods[Method::GpNever.name()]
            .mean_final_f1_reporting()
            .unwrap_or(f64::NAN);
        println!("skel - gp_never (reporting window): {:+.4}", a - b);
    }
    println!("metrics and report written under {}", out.display());
    Ok(())
}

fn report(metrics: &Path, out: &Path) -> Result<()> {
    let bundle: MetricsBundle = serde_json::from_reader(fs::File::open(metrics)?)?;
    let files = write_report(&bundle, out)?;
    println!("wrote {} report files under {}", files.len(), out.display());
    Ok(())
}

fn real_main(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Simulate { config, out } => simulate(&load_config(&config)?, &out),
        Cmd::Featurize { input, out } => featurize(&input, &out),
        Cmd::Run { config, out, world } => {
            run(&load_config(&config)?, &out, world.as_deref())
        }
        Cmd::Report { metrics, out } => report(&metrics, &out),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = real_main(cli) {
        let record =
            serde_json::json!({ "error": e.kind(), "message": e.to_string() });
        eprintln!("{record}");
        std::process::exit(1);
    }
}
