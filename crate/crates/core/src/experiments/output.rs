use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::error::Result;

use super::safety::SafetyReport;
use super::svg::boxplot;
use super::tradeoff::{SummaryRow, TradeoffOutcome, TradeoffRecord};
use super::validation::ValidationReport;

pub const RECORDS_HEADER: [&str; 5] = ["epsilon", "rep", "objective", "violation", "status"];

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

pub fn write_records(path: &Path, records: &[TradeoffRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RECORDS_HEADER)?;
    for r in records {
        w.write_record([
            r.epsilon.to_string(),
            r.rep.to_string(),
            r.objective.to_string(),
            r.violation.to_string(),
            r.status.as_str().to_owned(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epsilon", "metric", "count", "min", "q1", "median", "q3", "max"])?;
    for r in rows {
        let mut rec = vec![r.epsilon.to_string(), r.metric.to_owned(), r.count.to_string()];
        match r.stats {
            Some(s) => rec.extend([s.min, s.q1, s.median, s.q3, s.max].iter().map(f64::to_string)),
            None => rec.extend(std::iter::repeat_n(String::new(), 5)),
        }
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

fn panel(rows: &[SummaryRow], title: &str, y_label: &str) -> String {
    let groups: Vec<_> = rows.iter().map(|r| (format!("{}", r.epsilon), r.stats)).collect();
    boxplot(title, "Wasserstein radius ε", y_label, &groups)
}

/// Writes `records.csv`, `summary.csv`, both SVG panels, `tradeoff.json` and,
/// for the theoretical radius, `radius.json`.
pub fn write_tradeoff(dir: &Path, out: &TradeoffOutcome) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str| {
        let p = dir.join(name);
        written.push(p.clone());
        p
    };
    write_records(&emit("records.csv"), &out.records)?;
    let all: Vec<SummaryRow> = out.objective_summary.iter().chain(&out.violation_summary).cloned().collect();
    write_summary(&emit("summary.csv"), &all)?;
    fs::write(emit("tradeoff_objective.svg"), panel(&out.objective_summary, "Objective value", "1ᵀx"))?;
    fs::write(emit("tradeoff_violation.svg"), panel(&out.violation_summary, "Constraint violation", "βᵀx − 1"))?;
    write_json(
        &emit("tradeoff.json"),
        &json!({
            "grid": out.grid,
            "trend": out.trend,
            "certainty_equivalent": out.certainty_equivalent,
        }),
    )?;
    if let Some(b) = &out.radius {
        write_json(&emit("radius.json"), b)?;
    }
    Ok(written)
}

pub fn write_safety(dir: &Path, rep: &SafetyReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join("safety.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["epsilon", "trials", "optimal", "failures", "frequency", "ci_low", "ci_high", "mean_objective", "mean_true_risk"])?;
    for r in &rep.rows {
        w.write_record([
            r.epsilon.to_string(),
            r.trials.to_string(),
            r.optimal.to_string(),
            r.failures.to_string(),
            r.frequency.to_string(),
            r.ci_low.to_string(),
            r.ci_high.to_string(),
            r.mean_objective.to_string(),
            r.mean_true_risk.to_string(),
        ])?;
    }
    w.flush()?;
    let json_path = dir.join("safety.json");
    write_json(&json_path, rep)?;
    Ok(vec![csv_path, json_path])
}

pub fn write_validation(dir: &Path, rep: &ValidationReport) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join("report.json");
    write_json(&path, rep)?;
    Ok(path)
}
