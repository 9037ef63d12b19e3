//! Report writers. Every file goes through a write-to-temp plus atomic
//! rename so an interrupted run never leaves a partial artifact behind.

use std::fs;
use std::path::Path;

use cfrlab_core::metrics::MetricsReport;
use cfrlab_core::sem::{TheoremReport, TheoremTrialRow};
use cfrlab_core::trainer::TrainLogRow;

use crate::error::{io_err, Result};

pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))?;
    Ok(())
}

pub fn training_log_csv(log: &[TrainLogRow]) -> String {
    let mut out = String::from(TrainLogRow::CSV_HEADER);
    out.push('\n');
    for row in log {
        out.push_str(&row.to_csv_row());
        out.push('\n');
    }
    out
}

/// One row per split, labeled with the model variant.
pub fn metrics_csv(label: &str, reports: &[MetricsReport]) -> String {
    let mut out = String::from("model,");
    out.push_str(MetricsReport::CSV_HEADER);
    out.push('\n');
    for report in reports {
        out.push_str(label);
        out.push(',');
        out.push_str(&report.to_csv_row());
        out.push('\n');
    }
    out
}

/// One grid-cell evaluation; `result` is `(ate_error, sqrt_pehe)` on the
/// held-out split, or `None` for a failed cell.
pub struct GridCell {
    pub alpha: f64,
    pub eps: f64,
    pub seed: u64,
    pub result: Option<(f64, f64)>,
}

/// Grid CSV: one `run` row per cell evaluation plus one `agg` row per
/// (alpha, eps) cell with mean and standard deviation over its successful
/// runs, sorted by (alpha, eps, seed). Failed runs are flagged in the status
/// column and excluded from aggregates.
pub fn grid_csv(mut rows: Vec<GridCell>) -> String {
    rows.sort_by(|a, b| {
        (a.alpha, a.eps, a.seed)
            .partial_cmp(&(b.alpha, b.eps, b.seed))
            .expect("finite grid values")
    });
    let mut out = String::from(
        "alpha,eps,seed,kind,status,ate_error,sqrt_pehe,ate_error_std,sqrt_pehe_std\n",
    );
    let mut i = 0;
    while i < rows.len() {
        let cell: Vec<&GridCell> = rows[i..]
            .iter()
            .take_while(|r| r.alpha == rows[i].alpha && r.eps == rows[i].eps)
            .collect();
        for row in &cell {
            match row.result {
                Some((ate, pehe)) => out.push_str(&format!(
                    "{},{},{},run,ok,{},{},,\n",
                    row.alpha, row.eps, row.seed, ate, pehe
                )),
                None => out.push_str(&format!(
                    "{},{},{},run,failed,,,,\n",
                    row.alpha, row.eps, row.seed
                )),
            }
        }
        let ok: Vec<(f64, f64)> = cell.iter().filter_map(|r| r.result).collect();
        if ok.is_empty() {
            out.push_str(&format!("{},{},,agg,failed,,,,\n", rows[i].alpha, rows[i].eps));
        } else {
            let k = ok.len() as f64;
            let mean_ate = ok.iter().map(|(a, _)| a).sum::<f64>() / k;
            let mean_pehe = ok.iter().map(|(_, p)| p).sum::<f64>() / k;
            let std_ate =
                (ok.iter().map(|(a, _)| (a - mean_ate).powi(2)).sum::<f64>() / k).sqrt();
            let std_pehe =
                (ok.iter().map(|(_, p)| (p - mean_pehe).powi(2)).sum::<f64>() / k).sqrt();
            out.push_str(&format!(
                "{},{},,agg,ok,{},{},{},{}\n",
                rows[i].alpha, rows[i].eps, mean_ate, mean_pehe, std_ate, std_pehe
            ));
        }
        i += cell.len();
    }
    out
}

const THEOREM_HEADER: &str = "trial,nodes,hidden,anchor_edge,pairs,premise_pairs,violations,\
side_condition_failures,max_adjusted_given_premise,violation_fraction,\
violation_fraction_given_premise";

fn theorem_row(row: &TheoremTrialRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},,",
        row.trial,
        row.nodes,
        row.hidden_count,
        row.anchor_edge,
        row.pairs,
        row.premise_pairs,
        row.violations,
        row.side_condition_failures,
        row.max_adjusted_given_premise
    )
}

pub fn theorem_csv(report: &TheoremReport) -> String {
    let mut out = String::from(THEOREM_HEADER);
    out.push('\n');
    for row in &report.rows {
        out.push_str(&theorem_row(row));
        out.push('\n');
    }
    out.push_str(&format!(
        "summary,,,,{},{},{},{},,{},{}\n",
        report.total_pairs,
        report.premise_pairs,
        report.violations,
        report.side_condition_failures,
        report.violation_fraction,
        report.violation_fraction_given_premise
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_csv_sorted_with_aggregates() {
        let rows = vec![
            GridCell { alpha: 10.0, eps: 0.5, seed: 1, result: Some((0.2, 1.0)) },
            GridCell { alpha: 0.0, eps: 0.5, seed: 0, result: Some((0.4, 1.2)) },
            GridCell { alpha: 10.0, eps: 0.5, seed: 0, result: Some((0.1, 0.9)) },
            GridCell { alpha: 0.0, eps: 0.9, seed: 0, result: Some((0.5, 1.3)) },
        ];
        let csv = grid_csv(rows);
        let lines: Vec<&str> = csv.lines().collect();
        // Header + 4 run rows + 3 aggregate rows (cells: (0,0.5), (0,0.9), (10,0.5)).
        assert_eq!(lines.len(), 1 + 4 + 3);
        assert!(lines[1].starts_with("0,0.5,0,run,ok"));
        assert!(lines[2].starts_with("0,0.5,,agg,ok"));
        assert!(lines[3].starts_with("0,0.9,0,run,ok"));
        let agg = lines[7];
        assert!(agg.starts_with("10,0.5,,agg,ok,0.15000000000000002,0.95,"), "line: {agg}");
    }

    #[test]
    fn failed_cells_flagged_and_excluded_from_aggregates() {
        let rows = vec![
            GridCell { alpha: 1.0, eps: 0.5, seed: 0, result: Some((0.2, 1.0)) },
            GridCell { alpha: 1.0, eps: 0.5, seed: 1, result: None },
        ];
        let csv = grid_csv(rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[2].contains(",run,failed,"));
        assert!(lines[3].starts_with("1,0.5,,agg,ok,0.2,1,"));
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "first\n").unwrap();
        write_atomic(&path, "second\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second\n");
        assert!(!path.with_extension("tmp").exists());
    }
}
