//! Exact solvers over the assignment space of an ETFG.
//!
//! Arc variables are fully determined by the node choice at both ends, so all
//! solvers search over task-to-device assignments. Among optimal assignments
//! every solver returns the lexicographically smallest one (task order, then
//! `e < h < c`), so results are comparable across solvers and thread counts.

mod bnb;
mod bruteforce;
mod tree_dp;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::etfg::Etfg;
use crate::milp::{evaluate, Assignment, MilpError, Objective, ObjectiveBreakdown};
use crate::scalar::Scalar;

pub use bnb::{partial_bound, solve_branch_and_bound};
pub use bruteforce::{solve_bruteforce, ENUMERATION_LIMIT};
pub use tree_dp::{is_forest, solve_tree_dp};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("{0} assignments exceed the enumeration limit")]
    TooLarge(f64),
    #[error("tree DP needs a forest-shaped task graph")]
    NotAForest,
    #[error("tree DP needs unbounded budgets and no latency threshold")]
    Constrained,
    #[error("time limit reached before any feasible assignment was found")]
    NoIncumbent,
    #[error(transparent)]
    Model(#[from] MilpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", content = "gap", rename_all = "kebab-case")]
pub enum Optimality {
    ProvenOptimal,
    /// Relative gap `(incumbent - lower bound) / incumbent`.
    IncumbentWithGap(f64),
    Infeasible,
}

impl fmt::Display for Optimality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Optimality::ProvenOptimal => f.write_str("proven optimal"),
            Optimality::IncumbentWithGap(g) => write!(f, "incumbent, gap {:.4}%", g * 100.0),
            Optimality::Infeasible => f.write_str("infeasible"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation<S> {
    pub assignment: Assignment,
    pub objective: Objective,
    pub objective_value: S,
    pub breakdown: ObjectiveBreakdown<S>,
    pub optimality: Optimality,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolverStats {
    pub solver: String,
    pub nodes_explored: u64,
    pub pruned_by_bound: u64,
    pub pruned_by_budget: u64,
    pub pruned_by_latency: u64,
    pub wall_time_s: f64,
    pub root_bound: Option<f64>,
    pub lower_bound: Option<f64>,
    pub gap: Option<f64>,
    pub timed_out: bool,
}

/// Outcome of one solve; `allocation` is `None` exactly when infeasible.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<S> {
    pub allocation: Option<Allocation<S>>,
    pub optimality: Optimality,
    pub stats: SolverStats,
}

impl<S: Scalar> Solution<S> {
    pub fn is_feasible(&self) -> bool {
        self.allocation.is_some()
    }

    pub fn value(&self) -> Option<&S> {
        self.allocation.as_ref().map(|a| &a.objective_value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub time_limit: Option<Duration>,
    pub threads: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { time_limit: None, threads: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    #[default]
    Auto,
    BruteForce,
    TreeDp,
    BranchAndBound,
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(SolverKind::Auto),
            "bruteforce" | "brute-force" => Ok(SolverKind::BruteForce),
            "tree-dp" | "treedp" => Ok(SolverKind::TreeDp),
            "bnb" | "branch-and-bound" => Ok(SolverKind::BranchAndBound),
            _ => Err(format!("unknown solver {s:?} (auto|bruteforce|tree-dp|bnb)")),
        }
    }
}

/// The threshold that applies to `objective`, validated.
pub(crate) fn effective_threshold<S: Scalar>(objective: Objective, l_thr: Option<&S>) -> Result<Option<S>, MilpError> {
    match (objective, l_thr) {
        (Objective::Energy, Some(t)) if *t <= S::zero() => Err(MilpError::NonPositiveThreshold),
        (Objective::Energy, Some(t)) => Ok(Some(t.clone())),
        _ => Ok(None),
    }
}

pub(crate) fn allocation<S: Scalar>(
    etfg: &Etfg<S>,
    objective: Objective,
    l_thr: Option<&S>,
    assignment: Assignment,
    optimality: Optimality,
) -> Result<Allocation<S>, MilpError> {
    let breakdown = evaluate(etfg, &assignment, l_thr)?;
    Ok(Allocation {
        objective_value: breakdown.value(objective).clone(),
        assignment,
        objective,
        breakdown,
        optimality,
    })
}

pub(crate) fn infeasible<S>(stats: SolverStats) -> Solution<S> {
    Solution { allocation: None, optimality: Optimality::Infeasible, stats }
}

/// True when the tree DP fast path is exact for this instance.
pub fn tree_dp_applies<S: Scalar>(etfg: &Etfg<S>, objective: Objective, l_thr: Option<&S>) -> bool {
    is_forest(etfg.graph()) && !etfg.has_finite_budgets() && (objective == Objective::Latency || l_thr.is_none())
}

/// Runs `kind`; `Auto` picks the tree DP when it applies and branch-and-bound
/// otherwise.
pub fn solve<S: Scalar>(
    etfg: &Etfg<S>,
    objective: Objective,
    l_thr: Option<&S>,
    kind: SolverKind,
    cfg: &SolveConfig,
) -> Result<Solution<S>, SolveError> {
    match kind {
        SolverKind::Auto if tree_dp_applies(etfg, objective, l_thr) => solve_tree_dp(etfg, objective),
        SolverKind::Auto | SolverKind::BranchAndBound => solve_branch_and_bound(etfg, objective, l_thr, cfg),
        SolverKind::BruteForce => solve_bruteforce(etfg, objective, l_thr),
        SolverKind::TreeDp => {
            if effective_threshold(objective, l_thr)?.is_some() {
                return Err(SolveError::Constrained);
            }
            solve_tree_dp(etfg, objective)
        }
    }
}

#[cfg(test)]
mod tests;
