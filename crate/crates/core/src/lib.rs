//! (k,d)-trees and the unsatisfiable bounded-occurrence CNF formulas they
//! encode: exact vector arithmetic, the large-k construction, tree plans,
//! formula generation, a small SAT toolkit, rigorous lower bounds and an
//! exact search for the smallest trees.

pub mod bounds;
pub mod error;
pub mod formula;
pub mod kd_vectors;
pub mod recursion;
pub mod satcheck;
pub mod search;
mod serde_big;
pub mod tree_builder;

pub use error::{Error, Result};
pub use kd_vectors::{KdVector, OpParams, ScaledWeight};
pub use recursion::{ConstructionParams, RecursionTrace, Status};
pub use tree_builder::{BinaryTree, BuildPlan, PlanBuilder, PlanNode, PlanNodeId};
