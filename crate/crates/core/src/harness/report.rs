//! Table-shaped summaries regenerated from the ledger.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ledger::{read_ledger, LedgerEntry};
use super::scoring::median_of_runs;
use crate::attacks::EpsilonBudget;
use crate::error::Result;

pub const REPORT_MD: &str = "report.md";
pub const REPORT_CSV: &str = "report.csv";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mean: f64,
    pub sem: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetCell {
    pub epsilon: f64,
    pub mean: f64,
    pub sem: f64,
}

/// Payload of a `final` ledger entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalEval {
    /// `final` or `best_along_path`.
    pub selection: String,
    pub nominal: Cell,
    pub adversarial: Vec<BudgetCell>,
    pub score: f64,
    pub phases: usize,
    pub eps_best: f64,
    pub reached_target: bool,
}

struct Row {
    method: String,
    selection: String,
    seeds: Vec<u64>,
    evals: Vec<FinalEval>,
}

fn rows(entries: &[LedgerEntry]) -> Result<Vec<Row>> {
    let mut rows: Vec<Row> = Vec::new();
    for e in entries.iter().filter(|e| e.kind == "final") {
        let fe: FinalEval = serde_json::from_value(e.data.clone())?;
        match rows
            .iter_mut()
            .find(|r| r.method == e.method && r.selection == fe.selection)
        {
            Some(r) => {
                r.seeds.push(e.seed);
                r.evals.push(fe);
            }
            None => rows.push(Row {
                method: e.method.clone(),
                selection: fe.selection.clone(),
                seeds: vec![e.seed],
                evals: vec![fe],
            }),
        }
    }
    Ok(rows)
}

fn budget_label(eps: f64) -> String {
    match EpsilonBudget::new(eps) {
        Ok(b) => b.to_string(),
        Err(_) => format!("{eps}"),
    }
}

fn columns(rows: &[Row]) -> Vec<f64> {
    let mut cols: Vec<f64> = Vec::new();
    for r in rows {
        for fe in &r.evals {
            for c in &fe.adversarial {
                if !cols.iter().any(|x| x.to_bits() == c.epsilon.to_bits()) {
                    cols.push(c.epsilon);
                }
            }
        }
    }
    cols
}

/// Markdown table: one row per method and model selection, showing the
/// median run by score; cells are `mean ± SEM`.
pub fn render_markdown(entries: &[LedgerEntry]) -> Result<String> {
    let rows = rows(entries)?;
    let cols = columns(&rows);
    let mut md = String::from("| Method | Selection | Runs | Median seed | Phases | Nominal |");
    for c in &cols {
        md.push_str(&format!(" ε = {} |", budget_label(*c)));
    }
    md.push_str(" Score |\n|---|---|---|---|---|---|");
    for _ in &cols {
        md.push_str("---|");
    }
    md.push_str("---|\n");
    for r in &rows {
        let scores: Vec<f64> = r.evals.iter().map(|e| e.score).collect();
        let m = median_of_runs(&scores).unwrap_or(0);
        let fe = &r.evals[m];
        md.push_str(&format!(
            "| {} | {} | {} | {} | {} | {:.3} ± {:.3} |",
            r.method,
            r.selection,
            r.evals.len(),
            r.seeds[m],
            fe.phases,
            fe.nominal.mean,
            fe.nominal.sem
        ));
        for c in &cols {
            match fe.adversarial.iter().find(|b| b.epsilon.to_bits() == c.to_bits()) {
                Some(b) => md.push_str(&format!(" {:.3} ± {:.3} |", b.mean, b.sem)),
                None => md.push_str(" – |"),
            }
        }
        md.push_str(&format!(" {:.3} |\n", fe.score));
    }
    Ok(md)
}

/// CSV with one line per run (not only the medians).
pub fn render_csv(entries: &[LedgerEntry]) -> Result<String> {
    let rows = rows(entries)?;
    let cols = columns(&rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "method".to_string(),
        "selection".to_string(),
        "seed".to_string(),
        "phases".to_string(),
        "eps_best".to_string(),
        "reached_target".to_string(),
        "nominal_mean".to_string(),
        "nominal_sem".to_string(),
    ];
    for c in &cols {
        header.push(format!("adv_{}_mean", budget_label(*c)));
        header.push(format!("adv_{}_sem", budget_label(*c)));
    }
    header.push("score".to_string());
    w.write_record(&header).map_err(csv_err)?;
    for r in &rows {
        for (seed, fe) in r.seeds.iter().zip(&r.evals) {
            let mut rec = vec![
                r.method.clone(),
                r.selection.clone(),
                seed.to_string(),
                fe.phases.to_string(),
                fe.eps_best.to_string(),
                fe.reached_target.to_string(),
                fe.nominal.mean.to_string(),
                fe.nominal.sem.to_string(),
            ];
            for c in &cols {
                match fe.adversarial.iter().find(|b| b.epsilon.to_bits() == c.to_bits()) {
                    Some(b) => {
                        rec.push(b.mean.to_string());
                        rec.push(b.sem.to_string());
                    }
                    None => {
                        rec.push(String::new());
                        rec.push(String::new());
                    }
                }
            }
            rec.push(fe.score.to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn csv_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e.to_string())
}

/// Read `ledger` and (re)write `report.md` and `report.csv` into `dir`.
/// The ledger itself is only read.
pub fn write_report(ledger: &Path, dir: &Path) -> Result<()> {
    let entries = read_ledger(ledger)?;
    fs::create_dir_all(dir)?;
    fs::write(dir.join(REPORT_MD), render_markdown(&entries)?)?;
    fs::write(dir.join(REPORT_CSV), render_csv(&entries)?)?;
    Ok(())
}
