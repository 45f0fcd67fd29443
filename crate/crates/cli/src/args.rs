use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kdsat_core::recursion::DEFAULT_MAX_STEPS;
use kdsat_core::satcheck::DEFAULT_NODE_BUDGET;
use kdsat_core::search::{DEFAULT_BUDGET, MAX_SEARCH_D};
use kdsat_core::tree_builder::DEFAULT_VERTEX_CAP;
use num_bigint::BigUint;
use serde::{Serialize, Serializer};

#[derive(Parser, Debug)]
#[command(
    name = "kdsat",
    version,
    about = "Bounded-occurrence unsatisfiable k-CNF from (k,d)-trees"
)]
pub struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the large-k construction and write its plan.
    Construct(ConstructArgs),
    /// Binary-search the smallest d for which the construction succeeds.
    FindMinD(FindMinDArgs),
    /// Lower and upper bounds on the occurrence threshold.
    Bounds(BoundsArgs),
    /// Exact f2(k) by exhaustive search.
    SearchF2(SearchF2Args),
    /// Leaf count of a smallest (k,d)-tree.
    Mintree(MintreeArgs),
    /// Check a DIMACS file against a declared (k,d).
    Verify(VerifyArgs),
    /// Solve a DIMACS file.
    Solve(SolveArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Construct(_) => "construct",
            Command::FindMinD(_) => "find-min-d",
            Command::Bounds(_) => "bounds",
            Command::SearchF2(_) => "search-f2",
            Command::Mintree(_) => "mintree",
            Command::Verify(_) => "verify",
            Command::Solve(_) => "solve",
        }
    }

    pub fn config(&self) -> serde_json::Value {
        let v = match self {
            Command::Construct(a) => serde_json::to_value(a),
            Command::FindMinD(a) => serde_json::to_value(a),
            Command::Bounds(a) => serde_json::to_value(a),
            Command::SearchF2(a) => serde_json::to_value(a),
            Command::Mintree(a) => serde_json::to_value(a),
            Command::Verify(a) => serde_json::to_value(a),
            Command::Solve(a) => serde_json::to_value(a),
        };
        v.expect("arguments serialize")
    }
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConstructArgs {
    /// Clause width (at least 16).
    #[arg(long)]
    pub k: usize,
    /// Occurrence cap; defaults to the closed-form value for k.
    #[arg(long, value_parser = parse_big)]
    #[serde(serialize_with = "big_opt")]
    pub d: Option<BigUint>,
    /// Where to write the plan JSON [default: kdsat-k<K>-plan.json].
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Also write the recursion trace JSON here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Materialize the tree and write the formula as DIMACS.
    #[arg(long)]
    pub emit_dimacs: Option<PathBuf>,
    /// Most vertices a materialized tree may have.
    #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
    pub cap: u64,
    /// Most recursion steps.
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    pub max_steps: usize,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FindMinDArgs {
    /// A single k or an inclusive range `a..b`.
    #[arg(long)]
    pub k: KRange,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    pub max_steps: usize,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundsArgs {
    /// A single k or an inclusive range `a..b` (k >= 3).
    #[arg(long)]
    pub k: KRange,
    /// Add exact f2(k) from the search (small k only).
    #[arg(long)]
    pub with_f2: bool,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    #[arg(long, default_value_t = MAX_SEARCH_D)]
    pub max_d: u64,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchF2Args {
    /// A single k or an inclusive range `a..b` (k <= 15).
    #[arg(long)]
    pub k: KRange,
    /// Largest d to try.
    #[arg(long, default_value_t = MAX_SEARCH_D)]
    pub max_d: u64,
    /// Combination budget per k.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    /// Append decided results to this JSON-lines file.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Reuse results already in the cache.
    #[arg(long, requires = "cache")]
    pub resume: bool,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MintreeArgs {
    /// Clause width.
    #[arg(long)]
    pub k: usize,
    /// Occurrence cap per variable.
    #[arg(long)]
    pub d: u64,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long, requires = "cache")]
    pub resume: bool,
    /// Write the plan of a smallest tree here.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long)]
    pub emit_dimacs: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
    pub cap: u64,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyArgs {
    pub file: PathBuf,
    /// Declared clause width [default: width found in the file].
    #[arg(long)]
    pub k: Option<usize>,
    /// Declared occurrence cap per variable.
    #[arg(long)]
    pub d: Option<u64>,
    /// DPLL node budget for the unsatisfiability and minimality checks.
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    pub budget: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dpll,
    MoserTardos,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SolveArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Dpll)]
    pub method: Method,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// DPLL nodes or resampling steps [default: 10^7 nodes, 10^4 * clauses resamples].
    #[arg(long)]
    pub budget: Option<u64>,
}

/// `a` or the inclusive range `a..b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KRange {
    pub lo: usize,
    pub hi: usize,
}

impl KRange {
    pub fn iter(&self) -> impl Iterator<Item = usize> {
        self.lo..=self.hi
    }
}

impl FromStr for KRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad number {t:?}: {e}"));
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (num(a)?, num(b)?),
            None => {
                let v = num(s)?;
                (v, v)
            }
        };
        if lo > hi {
            return Err(format!("empty range {lo}..{hi}"));
        }
        Ok(KRange { lo, hi })
    }
}

impl fmt::Display for KRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "{}..{}", self.lo, self.hi)
        }
    }
}

impl Serialize for KRange {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn parse_big(s: &str) -> Result<BigUint, String> {
    let v: BigUint = s.parse().map_err(|_| format!("not a non-negative integer: {s:?}"))?;
    if v == BigUint::default() {
        return Err("must be positive".into());
    }
    Ok(v)
}

fn big_opt<S: Serializer>(v: &Option<BigUint>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(b) => s.collect_str(b),
        None => s.serialize_none(),
    }
}
