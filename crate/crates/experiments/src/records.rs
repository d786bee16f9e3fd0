//! Convergence CSV.
//!
//! One row per [`IterationRecord`]. Floats are written in shortest
//! round-trip exponent form, so parsing a file gives back the exact records.
//! `lambda` and `model_err` are empty when absent.

use penopt::optim::{IterationRecord, Status};

use crate::error::{ExpError, Result};

pub const RECORD_COLUMNS: [&str; 15] = [
    "k",
    "lambda",
    "fval",
    "norm_Lm",
    "norm_Lu",
    "norm_Lv",
    "data_misfit",
    "pde_misfit",
    "model_err",
    "step",
    "pde_solves",
    "status",
    "eval_solves",
    "cg_iterations",
    "hvp_solves",
];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn record_row(r: &IterationRecord) -> String {
    [
        r.k.to_string(),
        opt(r.lambda),
        fmt_f64(r.value),
        fmt_f64(r.norm_lm),
        fmt_f64(r.norm_lu),
        fmt_f64(r.norm_lv),
        fmt_f64(r.data_misfit),
        fmt_f64(r.pde_misfit),
        opt(r.model_error),
        fmt_f64(r.step),
        r.pde_solves.to_string(),
        r.status.as_str().to_string(),
        r.eval_solves.to_string(),
        r.cg_iterations.to_string(),
        r.hvp_solves.to_string(),
    ]
    .join(",")
}

pub fn records_to_csv(records: &[IterationRecord]) -> String {
    let mut out = RECORD_COLUMNS.join(",");
    out.push('\n');
    for r in records {
        out.push_str(&record_row(r));
        out.push('\n');
    }
    out
}

pub fn parse_records(text: &str) -> Result<Vec<IterationRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(RECORD_COLUMNS.join(",").as_str()) {
        return Err(ExpError::Format("records: unexpected header".into()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = |what: &str| ExpError::Format(format!("records row {}: bad {what}", i + 1));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != RECORD_COLUMNS.len() {
                return Err(bad("column count"));
            }
            let float = |j: usize| f[j].parse::<f64>().map_err(|_| bad(RECORD_COLUMNS[j]));
            let maybe = |j: usize| if f[j].is_empty() { Ok(None) } else { float(j).map(Some) };
            let int = |j: usize| f[j].parse::<usize>().map_err(|_| bad(RECORD_COLUMNS[j]));
            Ok(IterationRecord {
                k: int(0)?,
                lambda: maybe(1)?,
                value: float(2)?,
                norm_lm: float(3)?,
                norm_lu: float(4)?,
                norm_lv: float(5)?,
                data_misfit: float(6)?,
                pde_misfit: float(7)?,
                model_error: maybe(8)?,
                step: float(9)?,
                pde_solves: int(10)?,
                status: Status::parse(f[11]).ok_or_else(|| bad("status"))?,
                eval_solves: int(12)?,
                cg_iterations: int(13)?,
                hvp_solves: int(14)?,
            })
        })
        .collect()
}
