//! Text and CSV renderings of a transfer matrix.

use std::fmt::Write;
use std::str::FromStr;

use super::matrix::{Cell, TransferMatrix};
use super::pools::Pool;
use crate::corpus::DatasetId;

pub const CSV_HEADER: &str = "pool,backend,target,precision,recall,f1";
const AVG_HEADING: &str = "Avg (incl. in-domain)";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    TableText,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "table" | "text" | "table-text" | "txt" => Ok(ReportFormat::TableText),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format `{other}` (expected table-text or csv)")),
        }
    }
}

/// Two decimals without the leading zero: 0.5 -> ".50", 1.0 -> "1.00".
pub fn format_score(x: f64) -> String {
    let s = format!("{x:.2}");
    match s.strip_prefix("0.") {
        Some(rest) => format!(".{rest}"),
        None => s,
    }
}

pub fn render_report(matrix: &TransferMatrix, format: ReportFormat) -> String {
    match format {
        ReportFormat::TableText => render_table(matrix),
        ReportFormat::Csv => render_csv(matrix),
    }
}

fn ordered_pools(matrix: &TransferMatrix) -> Vec<Pool> {
    let mut pools: Vec<Pool> = matrix.cells.iter().map(|c| c.pool.clone()).collect();
    pools.extend(matrix.metadata.pools.iter().cloned());
    pools.sort();
    pools.dedup();
    pools
}

fn ordered_targets(matrix: &TransferMatrix) -> Vec<DatasetId> {
    let mut targets: Vec<DatasetId> = matrix.cells.iter().map(|c| c.target).collect();
    targets.extend(matrix.metadata.targets.iter().copied());
    targets.sort();
    targets.dedup();
    targets
}

fn ordered_backends(matrix: &TransferMatrix) -> Vec<String> {
    let mut backends = matrix.metadata.backends.clone();
    for c in &matrix.cells {
        if !backends.contains(&c.backend) {
            backends.push(c.backend.clone());
        }
    }
    backends
}

fn cell_text(cell: Option<&Cell>) -> String {
    match cell {
        None => "-".to_string(),
        Some(c) => match c.metrics {
            None => "ERR".to_string(),
            Some(m) => format!("{}{}", format_score(m.f1), if c.in_domain { "*" } else { "" }),
        },
    }
}

/// Mean F1 over every target of the row, in-domain included; `None` when a
/// cell is missing or failed.
fn row_average(matrix: &TransferMatrix, backend: &str, pool: &Pool, targets: &[DatasetId]) -> Option<f64> {
    let f1s: Option<Vec<f64>> = targets.iter().map(|t| matrix.f1(backend, pool, *t)).collect();
    let f1s = f1s?;
    if f1s.is_empty() {
        return None;
    }
    Some(f1s.iter().sum::<f64>() / f1s.len() as f64)
}

fn render_table(matrix: &TransferMatrix) -> String {
    let pools = ordered_pools(matrix);
    let targets = ordered_targets(matrix);
    let backends = ordered_backends(matrix);
    let sub = backends.iter().map(|b| b.len()).max().unwrap_or(0).max(5);
    let group = (sub + 1) * backends.len().max(1) - 1;
    let group_width = |title: &str| group.max(title.len());
    let pool_width = pools
        .iter()
        .map(|p| p.name().len())
        .max()
        .unwrap_or(0)
        .max("Pool".len());

    let mut headings: Vec<String> = targets.iter().map(|t| t.as_str().to_string()).collect();
    headings.push(AVG_HEADING.to_string());

    let mut out = String::new();
    let _ = write!(out, "{:<pool_width$}", "Pool");
    for h in &headings {
        let _ = write!(out, " | {:<w$}", h, w = group_width(h));
    }
    out.push('\n');
    let _ = write!(out, "{:<pool_width$}", "");
    for h in &headings {
        let subs: Vec<String> = backends.iter().map(|b| format!("{b:<sub$}")).collect();
        let _ = write!(out, " | {:<w$}", subs.join(" "), w = group_width(h));
    }
    out.push('\n');
    let rule_len = out.lines().next().map(|l| l.trim_end().len()).unwrap_or(0);
    out.push_str(&"-".repeat(rule_len));
    out.push('\n');

    for pool in &pools {
        let mut line = format!("{:<pool_width$}", pool.name());
        for (i, h) in headings.iter().enumerate() {
            let values: Vec<String> = backends
                .iter()
                .map(|b| {
                    let text = match targets.get(i) {
                        Some(t) => cell_text(matrix.cell(b, pool, *t)),
                        None => row_average(matrix, b, pool, &targets)
                            .map(format_score)
                            .unwrap_or_else(|| "ERR".into()),
                    };
                    format!("{text:<sub$}")
                })
                .collect();
            let _ = write!(line, " | {:<w$}", values.join(" "), w = group_width(h));
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out.push_str("\nF1 of the Facts class. * in-domain cell; ERR failed cell; Avg is the mean over all targets including the in-domain cell.\n");
    let failed: Vec<&Cell> = matrix.failed_cells().collect();
    if !failed.is_empty() {
        out.push_str("\nFailed cells:\n");
        for c in failed {
            let _ = writeln!(
                out,
                "  {} / {} -> {}: {}",
                c.backend,
                c.pool,
                c.target,
                c.error.as_deref().unwrap_or("unknown error")
            );
        }
    }
    out
}

/// One line per cell; failed cells leave the metric fields empty.
fn render_csv(matrix: &TransferMatrix) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for pool in ordered_pools(matrix) {
        for b in ordered_backends(matrix) {
            for t in ordered_targets(matrix) {
                let Some(cell) = matrix.cell(&b, &pool, t) else {
                    continue;
                };
                let _ = match cell.metrics {
                    Some(m) => writeln!(out, "{pool},{b},{t},{},{},{}", m.precision, m.recall, m.f1),
                    None => writeln!(out, "{pool},{b},{t},,,"),
                };
            }
        }
    }
    out
}
