use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use kdsat_core::formula::{parse_dimacs, stats, CnfFormula};
use kdsat_core::satcheck::{dpll_sat, moser_tardos, verify_mu, MtResult, SatResult, DEFAULT_NODE_BUDGET};
use kdsat_core::Error;
use serde_json::{json, Value};

use crate::args::{Method, SolveArgs, VerifyArgs};
use crate::construct::pass;
use crate::report::{CmdResult, Exit, Failure, Outcome};

fn read_cnf(path: &Path) -> Result<CnfFormula, Failure> {
    let file = File::open(path).map_err(|e| Failure::input(format!("cannot open {}: {e}", path.display())))?;
    Ok(parse_dimacs(BufReader::new(file))?)
}

/// `Some(true)` passed, `Some(false)` failed, `None` undecided within budget.
fn tri(v: Option<bool>) -> Value {
    match v {
        Some(b) => json!(b),
        None => json!("budgetExhausted"),
    }
}

fn tri_text(v: Option<bool>) -> &'static str {
    match v {
        Some(b) => pass(b),
        None => "budget exhausted",
    }
}

pub fn cmd_verify(a: &VerifyArgs) -> CmdResult {
    let f = read_cnf(&a.file)?;
    let st = stats(&f);
    let k = a.k.unwrap_or(f.k());
    let width_ok = f.k() == k;
    let occ_ok = a.d.map(|d| st.max_var_occurrences as u64 <= d);
    let deficiency_one = f.n_clauses() == f.n_vars() + 1;
    let unsat = match dpll_sat(&f, a.budget) {
        Ok(SatResult::Unsat) => Some(true),
        Ok(SatResult::Sat(_)) => Some(false),
        Err(Error::BudgetExhausted { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    // minimality only makes sense once the formula is known unsatisfiable
    let minimal = match unsat {
        Some(true) => match verify_mu(&f, a.budget) {
            Ok(b) => Some(b),
            Err(Error::BudgetExhausted { .. }) => None,
            Err(e) => return Err(e.into()),
        },
        Some(false) => Some(false),
        None => None,
    };
    let failed = !width_ok || occ_ok == Some(false) || unsat == Some(false) || minimal == Some(false);
    let exit = if failed {
        Exit::VerificationFailed
    } else if unsat.is_none() || minimal.is_none() {
        Exit::BudgetExhausted
    } else {
        Exit::Success
    };
    let result = json!({
        "stats": st,
        "checks": {
            "width": width_ok,
            "occurrences": occ_ok,
            "unsatisfiable": tri(unsat),
            "minimal": tri(minimal),
            "clausesEqualVarsPlusOne": deficiency_one,
        }
    });
    let mut text = format!(
        "{}: {} variables, {} clauses, width {}\nmax occurrences: variable {}, literal {}; max neighborhood {}\n",
        a.file.display(),
        st.n_vars,
        st.n_clauses,
        f.k(),
        st.max_var_occurrences,
        st.max_literal_occurrences,
        st.max_neighborhood
    );
    text += &format!("width {k}: {}\n", pass(width_ok));
    if let (Some(d), Some(ok)) = (a.d, occ_ok) {
        text += &format!("occurrences <= {d}: {}\n", pass(ok));
    }
    text += &format!("unsatisfiable: {}\n", tri_text(unsat));
    text += &format!("minimal unsatisfiable: {}\n", tri_text(minimal));
    text += &format!(
        "clauses = variables + 1: {}\n",
        if deficiency_one { "yes" } else { "no" }
    );
    Ok(Outcome::new(exit, result, text))
}

pub fn cmd_solve(a: &SolveArgs) -> CmdResult {
    let f = read_cnf(&a.file)?;
    let (answer, used, exit) = match a.method {
        Method::Dpll => match dpll_sat(&f, a.budget.unwrap_or(DEFAULT_NODE_BUDGET)) {
            Ok(r) => (Some(r), None, Exit::Success),
            Err(Error::BudgetExhausted { used }) => (None, Some(used), Exit::BudgetExhausted),
            Err(e) => return Err(e.into()),
        },
        Method::MoserTardos => {
            let budget = a.budget.unwrap_or(10_000 * f.n_clauses().max(1) as u64);
            match moser_tardos(&f, a.seed, budget) {
                MtResult::Sat { assignment, resamples } => {
                    (Some(SatResult::Sat(assignment)), Some(resamples), Exit::Success)
                }
                MtResult::GaveUp { resamples } => (None, Some(resamples), Exit::BudgetExhausted),
            }
        }
    };
    let (status, model, text) = match &answer {
        Some(SatResult::Sat(m)) => {
            debug_assert!(f.is_satisfied_by(&m.values));
            ("SATISFIABLE", Some(m), format!("s SATISFIABLE\n{}\n", m.to_v_line()))
        }
        Some(SatResult::Unsat) => ("UNSATISFIABLE", None, "s UNSATISFIABLE\n".to_string()),
        None => ("UNKNOWN", None, "s UNKNOWN\n".to_string()),
    };
    let result = json!({
        "status": status,
        "model": model.map(|m| m.to_v_line()),
        "work": used,
    });
    Ok(Outcome::new(exit, result, text))
}
