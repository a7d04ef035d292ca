//! MPS writer and reader.
//!
//! Output follows the fixed-format column layout (fields start at columns 2,
//! 5, 15, 25, 40) but names may exceed eight characters, so readers should
//! tokenize on whitespace. Every column sits inside an `INTORG`/`INTEND`
//! marker pair and carries a `BV` bound.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use super::{BilpModel, Sense};
use crate::scalar::Scalar;

/// Decimal with at most 12 significant digits.
pub(crate) fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e12 {
        return format!("{}", v as i64);
    }
    let s = format!("{v:.11e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let mantissa = if mantissa.contains('.') {
        mantissa.trim_end_matches('0').trim_end_matches('.')
    } else {
        mantissa
    };
    format!("{mantissa}e{exp}")
}

fn field(out: &mut String, f1: &str, f2: &str, f3: &str, f4: &str) {
    let _ = writeln!(out, " {f1:<2} {f2:<8}  {f3:<8}  {f4}");
}

pub fn export_mps<S: Scalar>(m: &BilpModel<S>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME          edgealloc_{}", m.objective_kind);
    out.push_str("ROWS\n");
    field(&mut out, "N", "obj", "", "");
    for r in &m.rows {
        let s = match r.sense {
            Sense::Le => "L",
            Sense::Eq => "E",
            Sense::Ge => "G",
        };
        field(&mut out, s, &r.label, "", "");
    }

    let mut by_column: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m.variables.len()];
    for (ri, r) in m.rows.iter().enumerate() {
        for (c, v) in &r.coefficients {
            by_column[*c].push((ri, v.to_f64()));
        }
    }

    out.push_str("COLUMNS\n");
    out.push_str("    MARKER                 'MARKER'                 'INTORG'\n");
    for (c, var) in m.variables.iter().enumerate() {
        let obj = m.objective[c].to_f64();
        if obj != 0.0 {
            field(&mut out, "", &var.name, "obj", &fmt_num(obj));
        }
        for (ri, v) in &by_column[c] {
            field(&mut out, "", &var.name, &m.rows[*ri].label, &fmt_num(*v));
        }
        if obj == 0.0 && by_column[c].is_empty() {
            field(&mut out, "", &var.name, "obj", "0");
        }
    }
    out.push_str("    MARKER                 'MARKER'                 'INTEND'\n");

    out.push_str("RHS\n");
    for r in &m.rows {
        let v = r.rhs.to_f64();
        if v != 0.0 {
            field(&mut out, "", "RHS", &r.label, &fmt_num(v));
        }
    }
    out.push_str("BOUNDS\n");
    for var in &m.variables {
        field(&mut out, "BV", "BND", &var.name, "");
    }
    out.push_str("ENDATA\n");
    out
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MpsError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing ENDATA")]
    Truncated,
}

/// A parsed MPS problem (minimization).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MpsProblem {
    pub name: String,
    pub objective_row: String,
    /// Constraint rows in file order.
    pub rows: Vec<(String, Sense)>,
    /// Columns in file order.
    pub columns: Vec<String>,
    pub objective: Vec<f64>,
    /// (column, row) -> coefficient
    pub coefficients: BTreeMap<(usize, usize), f64>,
    pub rhs: Vec<f64>,
    pub integer: BTreeSet<usize>,
    pub binary: BTreeSet<usize>,
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Bounds,
    Ranges,
}

pub fn parse_mps(text: &str) -> Result<MpsProblem, MpsError> {
    let mut p = MpsProblem::default();
    let mut section = Section::None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut in_int = false;
    let mut ended = false;

    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let err = |msg: &str| MpsError::Syntax { line, msg: msg.to_string() };
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match tokens[0] {
                "NAME" => {
                    p.name = tokens.get(1).unwrap_or(&"").to_string();
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "RANGES" => Section::Ranges,
                "ENDATA" => {
                    ended = true;
                    break;
                }
                other => return Err(err(&format!("unknown section {other}"))),
            };
            continue;
        }
        match section {
            Section::Rows => {
                let [kind, name] = tokens[..] else { return Err(err("expected <type> <name>")) };
                let sense = match kind {
                    "N" => {
                        if p.objective_row.is_empty() {
                            p.objective_row = name.to_string();
                        }
                        continue;
                    }
                    "L" => Sense::Le,
                    "E" => Sense::Eq,
                    "G" => Sense::Ge,
                    _ => return Err(err("row type must be N, L, E or G")),
                };
                row_index.insert(name.to_string(), p.rows.len());
                p.rows.push((name.to_string(), sense));
                p.rhs.push(0.0);
            }
            Section::Columns => {
                if tokens.len() >= 3 && tokens[1] == "'MARKER'" {
                    match tokens[2] {
                        "'INTORG'" => in_int = true,
                        "'INTEND'" => in_int = false,
                        _ => return Err(err("unknown marker")),
                    }
                    continue;
                }
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(err("expected <column> <row> <value> [<row> <value>]"));
                }
                let col = match col_index.get(tokens[0]) {
                    Some(&c) => c,
                    None => {
                        let c = p.columns.len();
                        col_index.insert(tokens[0].to_string(), c);
                        p.columns.push(tokens[0].to_string());
                        p.objective.push(0.0);
                        c
                    }
                };
                if in_int {
                    p.integer.insert(col);
                }
                for pair in tokens[1..].chunks(2) {
                    let v: f64 = pair[1].parse().map_err(|_| err("bad number"))?;
                    if pair[0] == p.objective_row {
                        p.objective[col] = v;
                    } else {
                        let r = *row_index.get(pair[0]).ok_or_else(|| err("unknown row"))?;
                        p.coefficients.insert((col, r), v);
                    }
                }
            }
            Section::Rhs => {
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(err("expected <set> <row> <value> [<row> <value>]"));
                }
                for pair in tokens[1..].chunks(2) {
                    let v: f64 = pair[1].parse().map_err(|_| err("bad number"))?;
                    if pair[0] == p.objective_row {
                        continue;
                    }
                    let r = *row_index.get(pair[0]).ok_or_else(|| err("unknown row"))?;
                    p.rhs[r] = v;
                }
            }
            Section::Bounds => {
                if tokens.len() < 3 {
                    return Err(err("expected <type> <set> <column> [value]"));
                }
                let c = *col_index.get(tokens[2]).ok_or_else(|| err("unknown column"))?;
                match tokens[0] {
                    "BV" => {
                        p.binary.insert(c);
                    }
                    "UP" | "LO" | "FX" | "FR" | "MI" | "PL" | "LI" | "UI" => {}
                    _ => return Err(err("unknown bound type")),
                }
            }
            Section::Ranges => return Err(err("RANGES are not supported")),
            Section::None => return Err(err("data outside a section")),
        }
    }
    if !ended {
        return Err(MpsError::Truncated);
    }
    Ok(p)
}
