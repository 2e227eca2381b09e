//! Result tables: one row per experiment, one column per metric.
//!
//! Cross-validation rows show `mean ± std` over folds; held-out test rows
//! show the single test-set value.

use super::metrics::Metric;
use super::pipeline::{EvalReport, TestEvaluation};

/// One table row: a label and one cell per metric.
pub trait TableRow {
    fn cells(&self) -> Vec<String>;
    fn footer() -> &'static str;
}

impl TableRow for EvalReport {
    fn cells(&self) -> Vec<String> {
        std::iter::once(self.experiment.label.clone())
            .chain(Metric::ALL.iter().map(|m| self.summary(*m).to_string()))
            .collect()
    }

    fn footer() -> &'static str {
        "(mean ± std over cross-validation folds)"
    }
}

impl TableRow for TestEvaluation {
    fn cells(&self) -> Vec<String> {
        std::iter::once(self.experiment.label.clone())
            .chain(Metric::ALL.iter().map(|m| format!("{:.3}", m.of(&self.metrics))))
            .collect()
    }

    fn footer() -> &'static str {
        "(held-out test set)"
    }
}

fn header() -> Vec<String> {
    std::iter::once("Algorithm".to_string())
        .chain(Metric::ALL.iter().map(|m| m.heading().to_string()))
        .collect()
}

/// Aligned plain-text table.
pub fn render_text<R: TableRow>(rows: &[R]) -> String {
    let rows: Vec<Vec<String>> = std::iter::once(header()).chain(rows.iter().map(R::cells)).collect();
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, w))| {
                let pad = w - cell.chars().count();
                if c == 0 {
                    format!("{cell}{}", " ".repeat(pad))
                } else {
                    format!("{}{cell}", " ".repeat(pad))
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out.push_str(R::footer());
    out.push('\n');
    out
}

pub fn render_csv<R: TableRow>(rows: &[R]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header()).expect("in-memory write");
    for r in rows {
        w.write_record(r.cells()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn render_markdown<R: TableRow>(rows: &[R]) -> String {
    let h = header();
    let mut out = format!("| {} |\n|{}|\n", h.join(" | "), vec!["---"; h.len()].join("|"));
    for r in rows {
        out.push_str(&format!("| {} |\n", r.cells().join(" | ")));
    }
    out
}
