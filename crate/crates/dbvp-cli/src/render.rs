//! Text renderings: JSON, CSV and aligned tables.

use std::io::Write;

use clap::ValueEnum;
use dbvp_modes::IndexReport;
use serde::Serialize;

use crate::error::CliError;
use crate::run::{ManifestEntry, SpectrumDoc};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    #[default]
    Table,
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialise");
    s.push('\n');
    s
}

const CSV_HEADER: [&str; 9] = ["kind", "check", "conditions", "mode", "value", "lhs", "rhs", "pass", "note"];

#[derive(Default)]
struct Rows(Vec<[String; 9]>);

impl Rows {
    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, kind: &str, check: &str, conds: &str, mode: String, value: String, lhs: String, rhs: String, pass: String, note: String) {
        self.0.push([kind.into(), check.into(), conds.into(), mode, value, lhs, rhs, pass, note]);
    }
}

fn spectrum_rows(doc: &SpectrumDoc, rows: &mut Rows) {
    for c in &doc.conditions {
        let Some(s) = &c.spectrum else { continue };
        for e in &s.eigenvalues {
            rows.push("eigenvalue", "", &c.tag, e.mode.to_string(), fmt17(e.value), String::new(), String::new(), String::new(), String::new());
        }
    }
}

fn index_rows(reports: &[IndexReport], rows: &mut Rows) {
    for r in reports {
        rows.push(
            "index",
            "index",
            &r.condition,
            String::new(),
            r.index.to_string(),
            r.kernel.to_string(),
            r.cokernel.to_string(),
            r.warnings.is_empty().to_string(),
            r.warnings.join("; "),
        );
    }
}

fn check_rows(entries: &[ManifestEntry], rows: &mut Rows) {
    for e in entries {
        rows.push(
            "check",
            &e.check,
            &e.condition_tags.join(";"),
            String::new(),
            String::new(),
            e.lhs.to_string(),
            e.rhs.to_string(),
            e.pass.to_string(),
            e.note.clone().unwrap_or_default(),
        );
    }
}

fn write_csv(rows: &Rows) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in &rows.0 {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// The `results.csv` artifact.
pub fn results_csv(doc: &SpectrumDoc, reports: &[IndexReport], entries: &[ManifestEntry]) -> Result<String, CliError> {
    let mut rows = Rows::default();
    spectrum_rows(doc, &mut rows);
    index_rows(reports, &mut rows);
    check_rows(entries, &mut rows);
    write_csv(&rows)
}

pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in width.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = Vec::new();
    let line = |cells: Vec<&str>, out: &mut Vec<u8>| {
        let padded: Vec<String> = cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
        writeln!(out, "{}", padded.join("  ").trim_end()).expect("write to vec");
    };
    line(header.to_vec(), &mut out);
    for r in rows {
        line(r.iter().map(|s| s.as_str()).collect(), &mut out);
    }
    String::from_utf8(out).expect("table is utf-8")
}

pub fn checks(entries: &[ManifestEntry], format: Format) -> Result<String, CliError> {
    Ok(match format {
        Format::Json => json(&entries),
        Format::Csv => {
            let mut rows = Rows::default();
            check_rows(entries, &mut rows);
            write_csv(&rows)?
        }
        Format::Table => {
            let rows: Vec<Vec<String>> = entries
                .iter()
                .map(|e| {
                    vec![
                        e.check.clone(),
                        e.condition_tags.join(";"),
                        e.lhs.to_string(),
                        e.rhs.to_string(),
                        if e.pass { "PASS".into() } else { "FAIL".into() },
                        e.note.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            table(&["check", "conditions", "lhs", "rhs", "result", "note"], &rows)
        }
    })
}

pub fn indices(reports: &[IndexReport], errors: &[String], format: Format) -> Result<String, CliError> {
    Ok(match format {
        Format::Json => json(&serde_json::json!({ "indices": reports, "errors": errors })),
        Format::Csv => {
            let mut rows = Rows::default();
            index_rows(reports, &mut rows);
            write_csv(&rows)?
        }
        Format::Table => {
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| {
                    vec![
                        r.condition.clone(),
                        r.kernel.to_string(),
                        r.cokernel.to_string(),
                        r.index.to_string(),
                        fmt17(r.tail_bound),
                        r.warnings.join("; "),
                    ]
                })
                .collect();
            let mut s = table(&["condition", "kernel", "cokernel", "index", "tail_bound", "warnings"], &rows);
            for e in errors {
                s.push_str(&format!("error: {e}\n"));
            }
            s
        }
    })
}

pub fn spectrum(doc: &SpectrumDoc, format: Format) -> Result<String, CliError> {
    Ok(match format {
        Format::Json => json(doc),
        Format::Csv => {
            let mut rows = Rows::default();
            spectrum_rows(doc, &mut rows);
            write_csv(&rows)?
        }
        Format::Table => {
            let mut s = format!("geometry: {}\n", doc.geometry);
            if let Some(b) = &doc.boundary {
                s.push_str(&format!("boundary: dim {}, dim ker A = {}\n", b.dim, b.kernel_dim));
                let rows: Vec<Vec<String>> = b
                    .lines
                    .iter()
                    .map(|l| vec![l.id.to_string(), fmt17(l.lambda), l.mult.to_string(), l.component.to_string()])
                    .collect();
                s.push_str(&table(&["id", "lambda", "mult", "component"], &rows));
            } else {
                s.push_str("boundary: none\n");
            }
            if let Some(c) = &doc.coercivity {
                s.push_str(&format!("coercivity: {:?}\n", c.at_infinity));
                if let Some(g) = c.gap_radius {
                    s.push_str(&format!("gap radius: {}\n", fmt17(g)));
                }
            }
            for c in &doc.conditions {
                s.push_str(&format!(
                    "\n{} ({}): dim {}, {}, {}\n",
                    c.recipe,
                    c.tag,
                    c.dim,
                    if c.elliptic { "elliptic" } else { "not elliptic" },
                    c.classification
                ));
                if let Some([v, w, l]) = c.normal_form {
                    s.push_str(&format!("  normal form: dim V = {v}, dim W = {w}, dim L = {l}\n"));
                }
                if let Some(m) = c.min_abs {
                    s.push_str(&format!("  min |eigenvalue|: {}\n", fmt17(m)));
                }
                if let Some(sp) = &c.spectrum {
                    let vals: Vec<String> = sp.eigenvalues.iter().map(|e| fmt17(e.value)).collect();
                    s.push_str(&format!("  eigenvalues: {}\n", vals.join(" ")));
                    for w in &sp.warnings {
                        s.push_str(&format!("  warning: {w}\n"));
                    }
                }
                if let Some(n) = &c.note {
                    s.push_str(&format!("  note: {n}\n"));
                }
                if let Some(e) = &c.error {
                    s.push_str(&format!("  error: {e}\n"));
                }
            }
            s
        }
    })
}
