//! CPLEX LP text format for the full screening LP.

use std::fmt::Write;

use screenlab_core::screening::LpProblem;

/// Terms per line before wrapping; CPLEX readers cap line length.
const TERMS_PER_LINE: usize = 8;

fn push_terms(out: &mut String, idx: impl Iterator<Item = (usize, f64)>, names: &[String]) {
    let mut first = true;
    let mut on_line = 0;
    for (i, v) in idx {
        if v == 0.0 {
            continue;
        }
        if on_line == TERMS_PER_LINE {
            out.push_str("\n   ");
            on_line = 0;
        }
        let sign = if v < 0.0 { '-' } else { '+' };
        if first && v >= 0.0 {
            let _ = write!(out, " {:e} {}", v, names[i]);
        } else {
            let _ = write!(out, " {sign} {:e} {}", v.abs(), names[i]);
        }
        first = false;
        on_line += 1;
    }
    if first {
        let _ = write!(out, " 0 {}", names[0]);
    }
}

/// The problem as a maximization in CPLEX LP format. Every variable is
/// non-negative, which is the format's default bound.
pub fn to_cplex_lp(p: &LpProblem) -> String {
    let mut out = String::new();
    out.push_str("\\ screening LP: q_j_b = probability type j gets bundle b, u_j = utility of type j\n");
    out.push_str("Maximize\n obj:");
    push_terms(&mut out, p.objective.iter().copied().enumerate(), &p.var_names);
    out.push_str("\nSubject To\n");
    for (row, name) in p.rows.iter().zip(&p.row_names) {
        let _ = write!(out, " {name}:");
        push_terms(&mut out, row.idx.iter().copied().zip(row.val.iter().copied()), &p.var_names);
        let _ = writeln!(out, " <= {:e}", row.rhs);
    }
    out.push_str("End\n");
    out
}
