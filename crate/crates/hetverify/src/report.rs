//! Text renderings: loss-trace CSV, the VR@FAR table and the ROC CSV.

use std::fmt::Write;

use hetverify_core::eval::EvalReport;
use hetverify_core::trainer::LossTrace;

pub fn trace_csv(trace: &LossTrace) -> String {
    let mut out = String::from("step,lr,loss\n");
    for e in &trace.entries {
        writeln!(out, "{},{},{}", e.step, e.lr, e.loss).unwrap();
    }
    out
}

/// `0.0001` → `VR@FAR=0.01%`.
fn far_header(far: f64) -> String {
    let pct = format!("{:.6}", far * 100.0);
    format!("VR@FAR={}%", pct.trim_end_matches('0').trim_end_matches('.'))
}

fn pct(v: f64) -> String {
    format!("{:.4}", v * 100.0)
}

/// One row per fold and a `mean ± std` row for cross-validation reports;
/// a single `all` row otherwise. VR values are percentages.
pub fn table(report: &EvalReport) -> String {
    let fars: Vec<f64> = report.vr_at_far.iter().map(|v| v.far_target).collect();
    let mut rows: Vec<Vec<String>> = vec![];
    let mut header = vec!["fold".to_string(), "train".into(), "test".into()];
    header.extend(fars.iter().map(|&f| far_header(f)));
    rows.push(header);
    match &report.fold_stats {
        Some(stats) => {
            for f in &stats.folds {
                let mut row = vec![(f.fold + 1).to_string(), f.train_subjects.to_string(), f.test_subjects.to_string()];
                row.extend(f.vr_at_far.iter().map(|v| pct(v.vr)));
                rows.push(row);
            }
            let mut row = vec!["mean ± std".to_string(), String::new(), String::new()];
            row.extend(
                stats
                    .mean
                    .iter()
                    .zip(&stats.std)
                    .map(|(m, s)| format!("{} ± {}", pct(*m), pct(*s))),
            );
            rows.push(row);
        }
        None => {
            let mut row = vec!["all".to_string(), "-".into(), report.num_subjects.to_string()];
            row.extend(report.vr_at_far.iter().map(|v| pct(v.vr)));
            rows.push(row);
        }
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        writeln!(out, "{}", cells.join("  ").trim_end()).unwrap();
    }
    writeln!(out, "subjects: {}", report.num_subjects).unwrap();
    writeln!(out, "fused probes: {}", report.fused_probes).unwrap();
    out
}

pub fn roc_csv(report: &EvalReport) -> String {
    let mut out = String::from("far,tar\n");
    for p in &report.roc_points {
        writeln!(out, "{:.6},{:.6}", p.far, p.tar).unwrap();
    }
    out
}
