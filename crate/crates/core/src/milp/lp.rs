//! Writer for the CPLEX LP text format.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use super::model::{MilpModel, Var, VarKind};

/// Terms per output line.
const WRAP: usize = 8;

/// Renders `model` as LP text. The output depends only on the model.
pub fn export_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ {} tasks, {} cpus, horizon {} slots of {} us, lambda {}",
        model.tasks().len(),
        model.m_cpus(),
        model.horizon(),
        model.slot().as_micros(),
        model.weights().lambda()
    );
    out.push_str("Minimize\n obj:");
    write_terms(&mut out, model, &model.objective());
    out.push_str("\nSubject To\n");
    model.for_each_constraint(|c| {
        if c.terms.is_empty() {
            return;
        }
        let _ = write!(out, " {}:", c.name);
        write_terms(&mut out, model, &c.terms);
        let _ = writeln!(out, " {} {}", c.sense.symbol(), c.rhs);
    });

    let mut binaries = Vec::new();
    let mut generals = Vec::new();
    out.push_str("Bounds\n");
    model.for_each_var(|v| match model.var_kind(v) {
        VarKind::Binary => binaries.push(v),
        VarKind::Integer => {
            let (lo, hi) = model.var_bounds(v);
            let _ = writeln!(out, " {} <= {} <= {}", lo, model.var_name(v), hi);
            generals.push(v);
        }
        VarKind::Fixed => {
            let _ = writeln!(out, " {} = {}", model.var_name(v), model.var_bounds(v).0);
        }
    });
    write_section(&mut out, model, "Binaries", &binaries);
    write_section(&mut out, model, "Generals", &generals);
    out.push_str("End\n");
    out
}

fn write_terms(out: &mut String, model: &MilpModel, terms: &[(Var, f64)]) {
    for (k, &(v, c)) in terms.iter().enumerate() {
        if k > 0 && k % WRAP == 0 {
            out.push_str("\n   ");
        }
        let sign = if c < 0.0 { '-' } else { '+' };
        let mag = c.abs();
        if k == 0 && sign == '+' {
            out.push(' ');
        } else {
            let _ = write!(out, " {sign} ");
        }
        if mag != 1.0 {
            let _ = write!(out, "{mag} ");
        }
        out.push_str(&model.var_name(v));
    }
}

fn write_section(out: &mut String, model: &MilpModel, title: &str, vars: &[Var]) {
    out.push_str(title);
    for (k, &v) in vars.iter().enumerate() {
        out.push_str(if k % WRAP == 0 { "\n " } else { " " });
        out.push_str(&model.var_name(v));
    }
    out.push('\n');
}
