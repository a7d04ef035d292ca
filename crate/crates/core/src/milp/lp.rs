//! CPLEX LP text format.

use std::fmt::Write as _;

use super::mps::fmt_num;
use super::{BilpModel, Sense};
use crate::scalar::Scalar;

const WRAP: usize = 78;

fn push_terms(out: &mut String, head: &str, terms: impl Iterator<Item = (f64, String)>) {
    let mut line = head.to_string();
    let mut first = true;
    for (v, name) in terms {
        let term = if first {
            if v < 0.0 {
                format!("- {} {name}", fmt_num(-v))
            } else {
                format!("{} {name}", fmt_num(v))
            }
        } else if v < 0.0 {
            format!(" - {} {name}", fmt_num(-v))
        } else {
            format!(" + {} {name}", fmt_num(v))
        };
        first = false;
        if line.len() + term.len() > WRAP {
            out.push_str(line.trim_end());
            out.push('\n');
            line = String::from("   ");
        }
        line.push_str(&term);
    }
    if first {
        line.push_str("0");
    }
    out.push_str(&line);
}

pub fn export_lp<S: Scalar>(m: &BilpModel<S>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ edgealloc {} model", m.objective_kind);
    out.push_str("Minimize\n");
    push_terms(
        &mut out,
        " obj: ",
        m.objective
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(c, v)| (v.to_f64(), m.variables[c].name.clone())),
    );
    out.push_str("\nSubject To\n");
    for r in &m.rows {
        push_terms(
            &mut out,
            &format!(" {}: ", r.label),
            r.coefficients.iter().map(|(c, v)| (v.to_f64(), m.variables[*c].name.clone())),
        );
        let op = match r.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        let _ = writeln!(out, " {op} {}", fmt_num(r.rhs.to_f64()));
    }
    out.push_str("Binary\n");
    let mut line = String::from(" ");
    for v in &m.variables {
        if line.len() + v.name.len() + 1 > WRAP {
            out.push_str(line.trim_end());
            out.push('\n');
            line = String::from(" ");
        }
        line.push_str(&v.name);
        line.push(' ');
    }
    out.push_str(line.trim_end());
    out.push_str("\nEnd\n");
    out
}
