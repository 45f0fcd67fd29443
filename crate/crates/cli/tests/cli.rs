use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const DEMO: &str = "c k 2\np cnf 3 4\n1 2 0\n1 -2 0\n-1 3 0\n-1 -3 0\n";

fn kdsat(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kdsat"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(dir: &Path, args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let out = kdsat(dir, &all);
    let v: Value = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stdout)));
    (out.status.code().unwrap(), v)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn solve_demo_is_unsat() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.cnf"), DEMO).unwrap();
    let out = kdsat(dir.path(), &["solve", "--method", "dpll", "small.cnf"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "s UNSATISFIABLE\n");
}

#[test]
fn solve_satisfiable_with_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    // the demo minus its last clause
    std::fs::write(dir.path().join("sat.cnf"), "p cnf 3 3\n1 2 0\n1 -2 0\n-1 3 0\n").unwrap();
    for method in ["dpll", "moser-tardos"] {
        let out = kdsat(dir.path(), &["solve", "--method", method, "--seed", "7", "sat.cnf"]);
        assert_eq!(out.status.code(), Some(0), "{method}");
        let text = stdout(&out);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("s SATISFIABLE"));
        let v: Vec<i32> = lines.next().unwrap()[2..]
            .split_whitespace()
            .map(|t| t.parse().unwrap())
            .collect();
        assert_eq!(v.last(), Some(&0));
        assert!(v.contains(&1) && v.contains(&3), "{method}: {v:?}");
    }
}

#[test]
fn resampling_gives_up_on_unsat() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.cnf"), DEMO).unwrap();
    let out = kdsat(
        dir.path(),
        &["solve", "--method", "moser-tardos", "--budget", "50", "small.cnf"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stdout(&out), "s UNKNOWN\n");
}

#[test]
fn bounds_table() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = json(dir.path(), &["bounds", "--k", "5..9"]);
    assert_eq!(code, 0);
    assert_eq!(v["schemaVersion"], 1);
    assert_eq!(v["config"]["k"], "5..9");
    let bks: Vec<&str> = v["result"]["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["bksF"].as_str().unwrap())
        .collect();
    assert_eq!(bks, ["3", "6", "12", "22", "40"]);
    let text = stdout(&kdsat(dir.path(), &["bounds", "--k", "5..9"]));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn bounds_with_exact_f2() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = json(dir.path(), &["bounds", "--k", "5..6", "--with-f2"]);
    assert_eq!(code, 0);
    let rows = v["result"]["rows"].as_array().unwrap();
    assert_eq!(rows[0]["f2Exact"], 7);
    assert_eq!(rows[1]["f2Exact"], 11);
}

#[test]
fn search_f2_with_cache_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = json(dir.path(), &["search-f2", "--k", "5", "--cache", "c.jsonl"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["rows"][0]["f2"], 7);
    assert_eq!(v["result"]["rows"][0]["cachedProbes"], 0);
    let lines: Vec<Value> = std::fs::read_to_string(dir.path().join("c.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 8);
    for (i, rec) in lines.iter().enumerate() {
        assert_eq!(rec["k"], 5);
        assert_eq!(rec["d"], i as u64 + 1);
        assert_eq!(rec["exists"], i == 7);
        assert_eq!(rec["version"], 1);
        assert!(rec["budgetUsed"].is_u64());
    }
    let (code, v) = json(dir.path(), &["search-f2", "--k", "5", "--cache", "c.jsonl", "--resume"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["rows"][0]["f2"], 7);
    assert_eq!(v["result"]["rows"][0]["cachedProbes"], 8);
}

#[test]
fn search_f2_budget_is_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let out = kdsat(dir.path(), &["search-f2", "--k", "6", "--budget", "10"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("inconclusive"));
}

#[test]
fn construct_k16_writes_plan() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = json(dir.path(), &["construct", "--k", "16"]);
    assert_eq!(code, 0);
    let r = &v["result"];
    assert_eq!(r["status"]["kind"], "ReachedWeightOne");
    assert_eq!(r["leafCount"], "131072");
    assert_eq!(r["depth"], "17");
    assert_eq!(v["config"]["k"], 16);
    assert_eq!(v["config"]["cap"], 10_000_000);
    let plan: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("kdsat-k16-plan.json")).unwrap()).unwrap();
    assert_eq!(plan["leafCount"], "131072");
    assert_eq!(plan["k"], 16);
}

#[test]
fn construct_fails_when_d_is_tiny() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = json(dir.path(), &["construct", "--k", "64", "--d", "1"]);
    assert_eq!(code, 2);
    assert_eq!(v["result"]["status"]["kind"], "ThresholdUnreachable");
}

#[test]
fn construct_dimacs_respects_cap() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = json(
        dir.path(),
        &["construct", "--k", "16", "--emit-dimacs", "a.cnf", "--cap", "100000000"],
    );
    assert_eq!(code, 0);
    assert_eq!(v["result"]["dimacs"]["written"], true);
    assert!(dir.path().join("a.cnf").exists());

    let (code, v) = json(
        dir.path(),
        &["construct", "--k", "16", "--emit-dimacs", "b.cnf", "--cap", "1000"],
    );
    assert_eq!(code, 3);
    assert_eq!(v["result"]["dimacs"]["written"], false);
    assert_eq!(v["result"]["dimacs"]["requiredVertices"], "262143");
    assert!(!dir.path().join("b.cnf").exists());
}

#[test]
fn dimacs_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["x.cnf", "y.cnf"] {
        let out = kdsat(dir.path(), &["mintree", "--k", "4", "--d", "6", "--emit-dimacs", name]);
        assert_eq!(out.status.code(), Some(0));
    }
    let x = std::fs::read(dir.path().join("x.cnf")).unwrap();
    let y = std::fs::read(dir.path().join("y.cnf")).unwrap();
    assert!(!x.is_empty());
    assert_eq!(x, y);
}

#[test]
fn mintree_formula_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = json(
        dir.path(),
        &[
            "mintree",
            "--k",
            "3",
            "--d",
            "4",
            "--emit-dimacs",
            "m.cnf",
            "--plan",
            "m.json",
        ],
    );
    assert_eq!(code, 0);
    assert_eq!(v["result"]["outcome"]["kind"], "exact");
    assert_eq!(v["result"]["planValid"], true);
    let (code, v) = json(dir.path(), &["verify", "m.cnf", "--k", "3", "--d", "4"]);
    assert_eq!(code, 0, "{v}");
    let c = &v["result"]["checks"];
    assert_eq!(c["unsatisfiable"], true);
    assert_eq!(c["minimal"], true);
    assert_eq!(c["clausesEqualVarsPlusOne"], true);
    // a tighter declared cap fails
    let (code, _) = json(dir.path(), &["verify", "m.cnf", "--k", "3", "--d", "1"]);
    assert_eq!(code, 2);
}

#[test]
fn mintree_cache_resume() {
    let dir = tempfile::tempdir().unwrap();
    let (code, first) = json(dir.path(), &["mintree", "--k", "4", "--d", "5", "--cache", "m.jsonl"]);
    assert_eq!(code, 0);
    let (code, second) = json(
        dir.path(),
        &["mintree", "--k", "4", "--d", "5", "--cache", "m.jsonl", "--resume"],
    );
    assert_eq!(code, 0);
    assert_eq!(second["result"]["fromCache"], true);
    assert_eq!(first["result"]["outcome"]["size"], second["result"]["outcome"]["size"]);
    let (code, v) = json(dir.path(), &["mintree", "--k", "4", "--d", "4"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["outcome"]["kind"], "noTree");
}

#[test]
fn verify_rejects_satisfiable() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("sat.cnf"), "p cnf 3 3\n1 2 0\n1 -2 0\n-1 3 0\n").unwrap();
    let out = kdsat(dir.path(), &["verify", "sat.cnf"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn find_min_d_small_range() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = json(dir.path(), &["find-min-d", "--k", "16..18"]);
    assert_eq!(code, 0);
    for row in v["result"]["rows"].as_array().unwrap() {
        for (name, ok) in row["checks"].as_object().unwrap() {
            assert_eq!(ok, true, "k={} {name}", row["k"]);
        }
    }
}

#[test]
fn input_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["construct", "--k", "8"],
        &["construct", "--k", "16", "--d", "0"],
        &["bounds", "--k", "9..5"],
        &["bounds", "--k", "2"],
        &["solve", "missing.cnf"],
        &["search-f2", "--k", "5", "--resume"],
        &["frobnicate"],
    ];
    for args in cases {
        let out = kdsat(dir.path(), args);
        assert_eq!(
            out.status.code(),
            Some(4),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out = kdsat(dir.path(), &["construct", "--k", "8"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("search-f2"));
    std::fs::write(dir.path().join("bad.cnf"), "p cnf 2 1\n1 x 0\n").unwrap();
    assert_eq!(kdsat(dir.path(), &["verify", "bad.cnf"]).status.code(), Some(4));
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(kdsat(dir.path(), &["--help"]).status.code(), Some(0));
}
