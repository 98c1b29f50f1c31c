//! Report files. `report.csv` and `summary.json` depend only on the data,
//! configuration and seed; wall-clock numbers go to `timing.csv`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::replay::ReplayReport;
use crate::error::Result;

pub const REPORT_CSV: &str = "report.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const TIMING_CSV: &str = "timing.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityAverages {
    pub hr: Option<f64>,
    pub mrr: Option<f64>,
    pub wji: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub label: String,
    pub top_n: usize,
    pub chunks: usize,
    pub stability_users: usize,
    pub averages: QualityAverages,
    pub config: serde_json::Value,
}

impl Summary {
    pub fn of(report: &ReplayReport, config: serde_json::Value) -> Self {
        let a = report.averages();
        Self {
            label: report.label.clone(),
            top_n: report.top_n,
            chunks: report.chunks.len(),
            stability_users: report.stability_users,
            averages: QualityAverages {
                hr: a.hr,
                mrr: a.mrr,
                wji: a.wji,
            },
            config,
        }
    }
}

/// Long format: one `(chunk, metric, value)` row per chunk and metric.
/// Undefined metrics are left empty.
pub fn report_csv(report: &ReplayReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["chunk", "metric", "value"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for c in &report.chunks {
        let rows: [(&str, String); 11] = [
            ("day", c.day.to_string()),
            ("events", c.events.to_string()),
            ("hr", opt(c.hr)),
            ("mrr", opt(c.mrr)),
            ("wji", opt(c.wji)),
            ("eligible", c.eligible.to_string()),
            ("excluded", c.excluded.to_string()),
            ("new_entity", c.new_entity.to_string()),
            ("new_user", c.new_user.to_string()),
            ("new_item", c.new_item.to_string()),
            ("known", c.known.to_string()),
        ];
        for (metric, value) in rows {
            w.write_record([c.chunk.to_string(), metric.to_string(), value])?;
        }
        if let Some(s) = c.sweeps {
            w.write_record([c.chunk.to_string(), "sweeps".into(), s.to_string()])?;
        }
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8"))
}

pub fn timing_csv(report: &ReplayReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["chunk", "update_seconds"])?;
    w.write_record(["fit".to_string(), report.fit_seconds.to_string()])?;
    for c in &report.chunks {
        w.write_record([c.chunk.to_string(), c.update_seconds.to_string()])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8"))
}

pub fn write_report(dir: &Path, report: &ReplayReport, config: serde_json::Value) -> Result<Summary> {
    fs::create_dir_all(dir)?;
    let summary = Summary::of(report, config);
    fs::write(dir.join(REPORT_CSV), report_csv(report)?)?;
    fs::write(dir.join(SUMMARY_JSON), serde_json::to_string_pretty(&summary)? + "\n")?;
    fs::write(dir.join(TIMING_CSV), timing_csv(report)?)?;
    Ok(summary)
}

pub fn read_summary(dir: &Path) -> Result<Summary> {
    Ok(serde_json::from_str(&fs::read_to_string(dir.join(SUMMARY_JSON))?)?)
}

/// Mean per-chunk update time from `timing.csv`, if present.
pub fn read_mean_update_seconds(dir: &Path) -> Result<Option<f64>> {
    let path = dir.join(TIMING_CSV);
    if !path.exists() {
        return Ok(None);
    }
    let mut r = csv::Reader::from_path(path)?;
    let mut values = Vec::new();
    for row in r.records() {
        let row = row?;
        if &row[0] != "fit" {
            values.push(row[1].parse::<f64>().unwrap_or(f64::NAN));
        }
    }
    Ok(super::metrics::mean(values))
}

/// Plain-text comparison of several runs, one row per run.
pub fn comparison_table(rows: &[(Summary, Option<f64>)]) -> String {
    let fmt = |v: Option<f64>, digits: usize| v.map_or("-".to_string(), |x| format!("{x:.digits$}"));
    let width = rows.iter().map(|(s, _)| s.label.len()).max().unwrap_or(5).max(5);
    let n = rows.first().map_or(0, |(s, _)| s.top_n);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>8}  {:>8}  {:>8}  {:>10}",
        "model",
        format!("HR@{n}"),
        format!("MRR@{n}"),
        format!("WJI@{n}"),
        "update_s"
    );
    for (s, t) in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>8}  {:>8}  {:>8}  {:>10}",
            s.label,
            fmt(s.averages.hr, 4),
            fmt(s.averages.mrr, 4),
            fmt(s.averages.wji, 3),
            fmt(*t, 4)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval_harness::replay::ChunkRecord;

    fn report() -> ReplayReport {
        let rec = |k: usize, hr: Option<f64>| ChunkRecord {
            chunk: k,
            day: 10 + k as i64,
            events: 3,
            hr,
            mrr: hr.map(|h| h / 2.0),
            eligible: 2,
            excluded: 0,
            wji: Some(1.0),
            update_seconds: 0.25,
            new_entity: 0,
            new_user: 1,
            new_item: 0,
            known: 2,
            sweeps: None,
        };
        ReplayReport {
            label: "psirec".into(),
            top_n: 5,
            stability_users: 2,
            fit_seconds: 1.0,
            chunks: vec![rec(0, Some(0.5)), rec(1, None)],
        }
    }

    #[test]
    fn averages_recomputable_from_csv() {
        let r = report();
        let csv = report_csv(&r).unwrap();
        let hrs: Vec<f64> = csv
            .lines()
            .filter(|l| l.contains(",hr,"))
            .filter_map(|l| l.rsplit(',').next().unwrap().parse().ok())
            .collect();
        assert_eq!(hrs, vec![0.5]);
        assert_eq!(Summary::of(&r, serde_json::Value::Null).averages.hr, Some(0.5));
        assert!(csv.contains("1,hr,\n"));
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = write_report(dir.path(), &report(), serde_json::json!({"seed": 1})).unwrap();
        assert_eq!(read_summary(dir.path()).unwrap(), s);
        assert_eq!(read_mean_update_seconds(dir.path()).unwrap(), Some(0.25));
        let table = comparison_table(&[(s, Some(0.25))]);
        assert!(table.contains("psirec") && table.contains("HR@5"));
    }
}
