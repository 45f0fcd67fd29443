use std::path::Path;

use kdsat_core::bounds::bounds_report;
use kdsat_core::search::{
    f2, kd_tree_exists, min_tree_plan, min_tree_size, CacheRecord, MinTreeSize, ResultCache, CACHE_VERSION, F2,
    MAX_SEARCH_K,
};
use kdsat_core::Error;
use num_bigint::BigUint;
use serde_json::json;

use crate::args::{BoundsArgs, MintreeArgs, SearchF2Args};
use crate::construct::{pass, short_decimal, write_file, write_plan_dimacs};
use crate::report::{CmdResult, Exit, Failure, Outcome};

pub fn cmd_bounds(a: &BoundsArgs) -> CmdResult {
    let mut rows = Vec::new();
    let mut exit = Exit::Success;
    let mut text = format!(
        "{:>5}  {:>22}  {:>22}  {:>22}  {:>22}  {:>6}\n",
        "k", "lll_l", "kst_f", "bks_f", "construction_d", "f2"
    );
    for k in a.k.iter() {
        let mut r = bounds_report(k)?;
        if a.with_f2 && k <= MAX_SEARCH_K {
            match f2(k, a.max_d, a.budget)? {
                F2::Exact { value, .. } => r.f2_exact = Some(value),
                F2::Inconclusive { .. } => exit = Exit::BudgetExhausted,
            }
        }
        text += &format!(
            "{:>5}  {:>22}  {:>22}  {:>22}  {:>22}  {:>6}\n",
            k,
            short_decimal(&r.lll_l),
            short_decimal(&r.kst_f),
            short_decimal(&r.bks_f),
            short_decimal(&r.construction_d),
            r.f2_exact.map_or("-".to_string(), |v| v.to_string())
        );
        rows.push(r);
    }
    Ok(Outcome::new(exit, json!({ "rows": rows }), text))
}

pub fn cmd_search_f2(a: &SearchF2Args) -> CmdResult {
    let cache = a.cache.as_ref().map(ResultCache::new);
    let mut rows = Vec::new();
    let mut exit = Exit::Success;
    let mut text = String::new();
    for k in a.k.iter() {
        let mut spent = 0u64;
        let mut reused = 0usize;
        let mut decided = None;
        let mut undecided_from = None;
        for d in 1..=a.max_d {
            let known = match (&cache, a.resume) {
                (Some(c), true) => c.lookup(k, d, false)?,
                _ => None,
            };
            let exists = if let Some(rec) = known {
                reused += 1;
                rec.exists
            } else {
                match kd_tree_exists(k, d, a.budget.saturating_sub(spent)) {
                    Ok(ex) => {
                        spent += ex.combinations;
                        if let Some(c) = &cache {
                            c.append(&CacheRecord {
                                k,
                                d,
                                exists: ex.exists,
                                min_size: None,
                                budget_used: ex.combinations,
                                version: CACHE_VERSION,
                            })?;
                        }
                        ex.exists
                    }
                    Err(Error::BudgetExhausted { used }) => {
                        spent += used;
                        undecided_from = Some(d);
                        break;
                    }
                    Err(e) => return Err(e.into()),
                }
            };
            if exists {
                decided = Some(d - 1);
                break;
            }
        }
        let row = match decided {
            Some(v) => {
                text += &format!("f2({k}) = {v}\n");
                json!({ "k": k, "status": "exact", "f2": v, "combinations": spent, "cachedProbes": reused })
            }
            None => {
                exit = Exit::BudgetExhausted;
                let from = undecided_from.unwrap_or(a.max_d + 1);
                text += &format!(
                    "f2({k}): inconclusive, no (k,d)-tree for d < {from}, so f2({k}) >= {}\n",
                    from - 1
                );
                json!({
                    "k": k,
                    "status": "inconclusive",
                    "undecidedFrom": from,
                    "combinations": spent,
                    "cachedProbes": reused,
                })
            }
        };
        rows.push(row);
    }
    Ok(Outcome::new(exit, json!({ "rows": rows }), text))
}

pub fn cmd_mintree(a: &MintreeArgs) -> CmdResult {
    let (k, d) = (a.k, a.d);
    let cache = a.cache.as_ref().map(ResultCache::new);
    let wants_tree = a.plan.is_some() || a.emit_dimacs.is_some();
    let cached = match (&cache, a.resume) {
        (Some(c), true) => c.lookup(k, d, true)?,
        _ => None,
    };
    let (size, from_cache) = match cached {
        Some(rec) if !wants_tree => {
            let size = match rec.min_size {
                Some(s) => MinTreeSize::Exact {
                    size: s,
                    combinations: 0,
                },
                None => MinTreeSize::NoTree { combinations: 0 },
            };
            (size, true)
        }
        _ => (min_tree_size(k, d, a.budget)?, false),
    };
    if let (Some(c), false) = (&cache, from_cache) {
        let rec = match &size {
            MinTreeSize::Exact { size, combinations } => Some((true, Some(size.clone()), *combinations)),
            MinTreeSize::NoTree { combinations } => Some((false, None, *combinations)),
            MinTreeSize::LowerBound { .. } => None,
        };
        if let Some((exists, min_size, used)) = rec {
            c.append(&CacheRecord {
                k,
                d,
                exists,
                min_size,
                budget_used: used,
                version: CACHE_VERSION,
            })?;
        }
    }
    let mut result = json!({ "k": k, "d": d, "outcome": size, "fromCache": from_cache });
    let (mut exit, mut text) = match &size {
        MinTreeSize::Exact { size, .. } => (Exit::Success, format!("f2({k},{d}) = {size}\n")),
        MinTreeSize::NoTree { .. } => (Exit::Success, format!("no ({k},{d})-tree exists\n")),
        MinTreeSize::LowerBound { bound, .. } => (
            Exit::BudgetExhausted,
            format!("budget exhausted; every ({k},{d})-tree has at least {bound} leaves\n"),
        ),
    };
    if let (MinTreeSize::Exact { size, .. }, true) = (&size, wants_tree) {
        let plan = min_tree_plan(k, d, a.budget)?.ok_or_else(|| Failure {
            exit: Exit::VerificationFailed,
            message: "search found a size but no plan".into(),
        })?;
        let valid = plan.validate(None).is_ok() && plan.leaf_count() == size;
        text += &format!("plan check: {}\n", pass(valid));
        result["planValid"] = json!(valid);
        if !valid {
            exit = Exit::VerificationFailed;
        }
        if let Some(path) = &a.plan {
            write_file(path, &(plan.to_json_string() + "\n"))?;
            result["planPath"] = json!(path);
        }
        if let (Some(path), true) = (&a.emit_dimacs, valid) {
            let (e, info, line) = write_plan_dimacs(&plan, a.cap, Path::new(path), &dimacs_comments(k, d, size))?;
            exit = exit.worst(e);
            result["dimacs"] = info;
            text += &line;
        }
    }
    Ok(Outcome::new(exit, result, text))
}

fn dimacs_comments(k: usize, d: u64, size: &BigUint) -> Vec<String> {
    vec![
        "kdsat mintree".to_string(),
        format!("k {k}"),
        format!("d {d}"),
        format!("leaves {size}"),
    ]
}
