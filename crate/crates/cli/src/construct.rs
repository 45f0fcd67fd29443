use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use kdsat_core::formula::{emit_dimacs, stats, tree_to_cnf};
use kdsat_core::recursion::{
    derive_params, find_min_d, ratio_to_threshold, run, verify_closed_form, Ratio, RecursionTrace, Status,
};
use kdsat_core::tree_builder::{plan_from_trace, prune_to_minimal, BuildPlan};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use crate::args::{ConstructArgs, FindMinDArgs};
use crate::report::{CmdResult, Exit, Failure, Outcome};

pub fn cmd_construct(a: &ConstructArgs) -> CmdResult {
    let p = derive_params(a.k, a.d.clone())?;
    let k = a.k;
    let trace = run(&p, a.max_steps);
    let ratio = ratio_to_threshold(k, p.d());
    let mut result = json!({
        "k": k,
        "d": p.d().to_string(),
        "l": p.l(),
        "s": p.s(),
        "status": trace.status,
        "recursionSteps": trace.steps.len() - 1,
        "ratio": ratio_json(&ratio),
    });
    let mut text = format!(
        "k = {k}\nd = {}\nstatus: {} after {} recursion step(s)\nratio d*e*k/2^(k+1) ~ {} (decimal approximation, not rigorous)\n",
        p.d(),
        trace.status.name(),
        trace.steps.len() - 1,
        ratio.approx
    );
    if let Some(path) = &a.trace {
        write_file(
            path,
            &(serde_json::to_string_pretty(&trace.to_json()).expect("trace serializes") + "\n"),
        )?;
        result["tracePath"] = json!(path);
    }
    if !trace.status.is_success() {
        let exit = match trace.status {
            Status::BudgetExhausted(_) => Exit::BudgetExhausted,
            _ => Exit::VerificationFailed,
        };
        return Ok(Outcome::new(exit, result, text));
    }

    let closed = verify_closed_form(&trace);
    let plan = plan_from_trace(&trace)?;
    let plan_ok = plan.validate(None).map_err(|v| v.to_string());
    let depth_ok = BigUint::from(plan.depth()) <= BigUint::from(k) * p.d();
    let plan_path = a
        .plan
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("kdsat-k{k}-plan.json")));
    write_file(&plan_path, &(plan.to_json_string() + "\n"))?;
    let sha = plan.sha256_hex();
    result["leafCount"] = json!(plan.leaf_count().to_string());
    result["depth"] = json!(plan.depth().to_string());
    result["planNodes"] = json!(plan.len());
    result["planPath"] = json!(plan_path);
    result["planSha256"] = json!(sha);
    result["checks"] = json!({
        "closedForm": closed.ok(),
        "closedFormEntries": closed.entries_checked,
        "planValid": plan_ok.is_ok(),
        "depthAtMostKD": depth_ok,
    });
    text += &format!(
        "leaves: {}\ndepth: {}\nplan: {} ({} nodes, sha256 {sha})\nchecks: closed form {}, plan {}, depth <= k*d {}\n",
        plan.leaf_count(),
        plan.depth(),
        plan_path.display(),
        plan.len(),
        pass(closed.ok()),
        pass(plan_ok.is_ok()),
        pass(depth_ok)
    );
    if let Err(v) = &plan_ok {
        text += &format!("plan violation: {v}\n");
        result["planViolation"] = json!(v);
    }
    let mut exit = if closed.ok() && plan_ok.is_ok() && depth_ok {
        Exit::Success
    } else {
        Exit::VerificationFailed
    };

    if let Some(path) = &a.emit_dimacs {
        if exit == Exit::Success {
            let comments = vec![
                "kdsat construct".to_string(),
                format!("k {k}"),
                format!("d {}", p.d()),
                format!("plan sha256 {sha}"),
            ];
            let (e, info, line) = write_plan_dimacs(&plan, a.cap, path, &comments)?;
            exit = exit.worst(e);
            result["dimacs"] = info;
            text += &line;
        }
    }
    Ok(Outcome::new(exit, result, text))
}

/// Materializes `plan` under the vertex cap, prunes it to a minimal tree and
/// writes its formula.
pub fn write_plan_dimacs(
    plan: &BuildPlan,
    cap: u64,
    path: &Path,
    comments: &[String],
) -> Result<(Exit, Value, String), Failure> {
    let required = plan.vertex_count();
    if required > BigUint::from(cap) {
        let info = json!({
            "written": false,
            "reason": "CapExceeded",
            "requiredVertices": required.to_string(),
            "cap": cap,
        });
        let line = format!("dimacs: not written, needs {required} vertices (cap {cap})\n");
        return Ok((Exit::BudgetExhausted, info, line));
    }
    let k = plan.k();
    let d = plan
        .d()
        .to_u64()
        .ok_or_else(|| Failure::input("d too large to materialize"))?;
    let tree = plan.materialize(&BigUint::from(cap))?;
    let minimal = prune_to_minimal(&tree, k, d)?;
    let f = tree_to_cnf(&minimal, k)?;
    let st = stats(&f);
    let mut out = BufWriter::new(File::create(path)?);
    emit_dimacs(&f, comments, &mut out)?;
    out.flush()?;
    let info = json!({
        "written": true,
        "path": path,
        "stats": st,
    });
    let line = format!(
        "dimacs: {} ({} variables, {} clauses, max occurrence {})\n",
        path.display(),
        st.n_vars,
        st.n_clauses,
        st.max_var_occurrences
    );
    Ok((Exit::Success, info, line))
}

pub fn cmd_find_min_d(a: &FindMinDArgs) -> CmdResult {
    let mut rows = Vec::new();
    let mut exit = Exit::Success;
    let mut text = format!(
        "{:>6}  {:>22}  {:>14}  {:>6}  {:>7}  {:>6}  checks\n",
        "k", "d_min", "ratio~", "steps", "depth", "probes"
    );
    for k in a.k.iter() {
        let m = find_min_d(k, a.max_steps)?;
        let row = check_min_d(k, &m.d_min, &m.at_min, m.below_min.as_ref());
        if !row.ok {
            exit = Exit::VerificationFailed;
        }
        text += &format!(
            "{:>6}  {:>22}  {:>14}  {:>6}  {:>7}  {:>6}  {}\n",
            k,
            short_decimal(&m.d_min),
            row.ratio.approx,
            m.at_min.steps.len() - 1,
            row.depth,
            m.probes,
            pass(row.ok)
        );
        rows.push(json!({
            "k": k,
            "dMin": m.d_min.to_string(),
            "ratio": ratio_json(&row.ratio),
            "recursionSteps": m.at_min.steps.len() - 1,
            "planDepth": row.depth.to_string(),
            "probes": m.probes,
            "statusAtMin": m.at_min.status,
            "statusBelowMin": m.below_min.as_ref().map(|t| t.status),
            "checks": row.checks,
        }));
    }
    text += "ratio is a decimal approximation; the JSON report carries rigorous bounds\n";
    Ok(Outcome::new(exit, json!({ "rows": rows }), text))
}

struct MinDRow {
    ok: bool,
    ratio: Ratio,
    depth: u64,
    checks: Value,
}

fn check_min_d(k: usize, d: &BigUint, at: &RecursionTrace, below: Option<&RecursionTrace>) -> MinDRow {
    let succeeds = at.status.is_success();
    let fails_below = below.is_none_or(|t| !t.status.is_success());
    let closed = verify_closed_form(at).ok() && below.is_none_or(|t| verify_closed_form(t).ok());
    let plan = plan_from_trace(at).ok();
    let depth = plan.as_ref().map_or(0, BuildPlan::depth);
    let plan_ok = plan.as_ref().is_some_and(|p| p.validate(None).is_ok());
    let depth_ok = BigUint::from(depth) <= BigUint::from(k) * d;
    MinDRow {
        ok: succeeds && fails_below && closed && plan_ok && depth_ok,
        ratio: ratio_to_threshold(k, d),
        depth,
        checks: json!({
            "succeedsAtMin": succeeds,
            "failsBelowMin": fails_below,
            "closedForm": closed,
            "planValid": plan_ok,
            "depthAtMostKD": depth_ok,
        }),
    }
}

fn ratio_json(r: &Ratio) -> Value {
    json!({
        "lower": r.lower,
        "upper": r.upper,
        "approx": r.approx,
        "approxIsRigorous": false,
    })
}

/// Long numbers as `head...tail (n digits)`.
pub fn short_decimal(n: &BigUint) -> String {
    let s = n.to_string();
    if s.len() <= 12 {
        s
    } else {
        format!("{}...{} ({} digits)", &s[..4], &s[s.len() - 2..], s.len())
    }
}

pub fn pass(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}
