//! Report emission: per-metric CSV files, a run summary, and an SVG chart
//! of the progressive F1 curves with the active-user overlay. All output is
//! byte-stable for identical inputs.

use crate::error::{Error, Result};
use crate::logio::write_file;
use crate::metrics::MetricsBundle;
use std::fmt::Write as _;
use std::path::Path;

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v}"),
        None => String::new(),
    }
}

/// `progressive_f1.csv`: slot, then per method the mean full-stream series,
/// the reporting-window series, and the active-user counts.
fn progressive_csv(m: &MetricsBundle) -> String {
    let mut s = String::from("slot");
    for name in m.methods.keys() {
        let _ = write!(s, ",{name}_f1,{name}_f1_reporting,{name}_users");
    }
    s.push('\n');
    for slot in 0..m.slots as usize {
        let _ = write!(s, "{slot}");
        for mm in m.methods.values() {
            let _ = write!(
                s,
                ",{},{},{}",
                fmt_opt(mm.mean_f1.get(slot).copied().flatten()),
                fmt_opt(mm.mean_f1_reporting.get(slot).copied().flatten()),
                mm.active_users.get(slot).copied().unwrap_or(0)
            );
        }
        s.push('\n');
    }
    s
}

fn per_user_csv(m: &MetricsBundle) -> String {
    let mut s = String::from(
        "method,user_id,final_f1,final_f1_reporting,evaluation_correctness\n",
    );
    for (name, mm) in &m.methods {
        for u in &mm.users {
            let _ = writeln!(
                s,
                "{name},{},{},{},{}",
                u.user_id,
                fmt_opt(u.final_f1),
                fmt_opt(u.final_f1_reporting),
                fmt_opt(u.evaluation_correctness)
            );
        }
    }
    s
}

fn contradictions_csv(m: &MetricsBundle) -> String {
    let mut s = String::from(
        "method,user_id,sent,answered,confirmed_machine,reasserted,new_label,expired,\
         answered_diaries_post_bootstrap,confirm_fraction,contradiction_rate\n",
    );
    for (name, mm) in &m.methods {
        for u in &mm.users {
            let c = &u.contradictions;
            let _ = writeln!(
                s,
                "{name},{},{},{},{},{},{},{},{},{},{}",
                u.user_id,
                c.sent,
                c.answered,
                c.confirmed_machine,
                c.reasserted,
                c.new_label,
                c.expired,
                c.answered_diaries_post_bootstrap,
                fmt_opt(c.confirm_fraction()),
                fmt_opt(c.contradiction_rate())
            );
        }
    }
    s
}

fn summary_json(m: &MetricsBundle) -> Result<String> {
    let mut methods = serde_json::Map::new();
    for (name, mm) in &m.methods {
        let confirm: Vec<f64> = mm
            .users
            .iter()
            .filter_map(|u| u.contradictions.confirm_fraction())
            .collect();
        let eval: Vec<f64> = mm
            .users
            .iter()
            .filter_map(|u| u.evaluation_correctness)
            .collect();
        let mean = |v: &[f64]| {
            if v.is_empty() {
                None
            } else {
                Some(v.iter().sum::<f64>() / v.len() as f64)
            }
        };
        methods.insert(
            name.clone(),
            serde_json::json!({
                "users": mm.users.len(),
                "mean_final_f1": mm.mean_final_f1(),
                "mean_final_f1_reporting": mm.mean_final_f1_reporting(),
                "mean_confirm_fraction": mean(&confirm),
                "mean_evaluation_correctness": mean(&eval),
                "contradictions_sent": mm.users.iter().map(|u| u.contradictions.sent).sum::<u64>(),
                "contradictions_answered": mm.users.iter().map(|u| u.contradictions.answered).sum::<u64>(),
            }),
        );
    }
    let v = serde_json::json!({ "slots": m.slots, "methods": methods });
    Ok(format!("{:#}\n", v))
}

/// Minimal deterministic line chart: one colored polyline per method's
/// reporting series plus a dashed active-user overlay.
fn progressive_svg(m: &MetricsBundle) -> String {
    const W: f64 = 960.0;
    const H: f64 = 480.0;
    const ML: f64 = 60.0; // margins
    const MR: f64 = 70.0;
    const MT: f64 = 30.0;
    const MB: f64 = 50.0;
    let plot_w = W - ML - MR;
    let plot_h = H - MT - MB;
    let slots = m.slots.max(1) as f64;
    let max_users = m
        .methods
        .values()
        .flat_map(|mm| mm.active_users.iter())
        .copied()
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let x = |slot: f64| ML + plot_w * slot / slots;
    let y_f1 = |v: f64| MT + plot_h * (1.0 - v.clamp(0.0, 1.0));
    let y_users = |n: f64| MT + plot_h * (1.0 - n / max_users);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    // axes and gridlines
    for k in 0..=5 {
        let v = k as f64 / 5.0;
        let yy = y_f1(v);
        let _ = writeln!(
            s,
            r##"<line x1="{ML}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#dddddd"/>"##,
            W - MR
        );
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end" fill="#333333">{v:.1}</text>"##,
            ML - 6.0,
            yy + 4.0
        );
    }
    for day in (0..=(slots as u64 / 48)).step_by(7) {
        let xx = x((day * 48) as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{xx:.2}" y1="{MT}" x2="{xx:.2}" y2="{:.2}" stroke="#eeeeee"/>"##,
            H - MB
        );
        let _ = writeln!(
            s,
            r##"<text x="{xx:.2}" y="{:.2}" font-size="12" text-anchor="middle" fill="#333333">day {day}</text>"##,
            H - MB + 18.0
        );
    }
    let _ = writeln!(
        s,
        r##"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle" fill="#333333" transform="rotate(-90 {rx:.2} {ry:.2})" >progressive macro F1</text>"##,
        18.0,
        MT + plot_h / 2.0,
        rx = 18.0,
        ry = MT + plot_h / 2.0
    );

    let colors = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"];
    let mut legend_y = MT + 10.0;
    for (i, (name, mm)) in m.methods.iter().enumerate() {
        let color = colors[i % colors.len()];
        let mut path = String::new();
        let mut pen_down = false;
        for (slot, v) in mm.mean_f1_reporting.iter().enumerate() {
            if let Some(v) = v {
                let cmd = if pen_down { 'L' } else { 'M' };
                let _ = write!(path, "{cmd}{:.2} {:.2} ", x(slot as f64), y_f1(*v));
                pen_down = true;
            }
        }
        if !path.is_empty() {
            let _ = writeln!(
                s,
                r##"<path d="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"##,
                path.trim_end()
            );
        }
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{legend_y:.2}" x2="{:.2}" y2="{legend_y:.2}" stroke="{color}" stroke-width="3"/>"##,
            ML + 10.0,
            ML + 34.0
        );
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" font-size="13" fill="#333333">{name}</text>"##,
            ML + 40.0,
            legend_y + 4.0
        );
        legend_y += 18.0;
    }
    // active users (first method), dashed, right axis
    if let Some(mm) = m.methods.values().next() {
        let mut path = String::new();
        for (slot, n) in mm.active_users.iter().enumerate() {
            let cmd = if slot == 0 { 'M' } else { 'L' };
            let _ = write!(path, "{cmd}{:.2} {:.2} ", x(slot as f64), y_users(*n as f64));
        }
        let _ = writeln!(
            s,
            r##"<path d="{}" fill="none" stroke="#9467bd" stroke-width="1" stroke-dasharray="4 3"/>"##,
            path.trim_end()
        );
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle" fill="#9467bd" transform="rotate(90 {rx:.2} {ry:.2})">active users (max {mu})</text>"##,
            W - 20.0,
            MT + plot_h / 2.0,
            rx = W - 20.0,
            ry = MT + plot_h / 2.0,
            mu = max_users as u64
        );
    }
    let _ = writeln!(s, "</svg>");
    s
}

/// Write the report files for a metrics bundle into `dir`.
pub fn write_report(m: &MetricsBundle, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    if m.slots == 0 && m.methods.is_empty() {
        // still emit headers-only files
    }
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Io(e))?;
    let files = vec![
        ("progressive_f1.csv", progressive_csv(m)),
        ("per_user.csv", per_user_csv(m)),
        ("contradictions.csv", contradictions_csv(m)),
        ("summary.json", summary_json(m)?),
        ("progressive_f1.svg", progressive_svg(m)),
    ];
    let mut written = Vec::new();
    for (name, content) in files {
        let path = dir.join(name);
        write_file(&path, content.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{MethodMetrics, MetricsBundle};

    #[test]
    fn empty_bundle_writes_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = MetricsBundle::default();
        m.methods.insert("skel".into(), MethodMetrics::default());
        let files = write_report(&m, dir.path()).unwrap();
        assert_eq!(files.len(), 5);
        let csv = std::fs::read_to_string(dir.path().join("per_user.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1); // header only
        let f1 = std::fs::read_to_string(dir.path().join("progressive_f1.csv")).unwrap();
        assert!(f1.starts_with("slot,skel_f1,skel_f1_reporting,skel_users"));
    }

    #[test]
    fn report_is_byte_stable() {
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let mut m = MetricsBundle::default();
        m.slots = 4;
        m.methods.insert("skel".into(), MethodMetrics::default());
        m.methods.insert("gp_never".into(), MethodMetrics::default());
        write_report(&m, dir1.path()).unwrap();
        write_report(&m, dir2.path()).unwrap();
        for name in [
            "progressive_f1.csv",
            "per_user.csv",
            "contradictions.csv",
            "summary.json",
            "progressive_f1.svg",
        ] {
            let a = std::fs::read(dir1.path().join(name)).unwrap();
            let b = std::fs::read(dir2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs");
        }
    }
}
