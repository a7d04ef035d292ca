use std::time::Instant;

use super::{allocation, effective_threshold, infeasible, Optimality, Solution, SolveError, SolverStats};
use crate::etfg::Etfg;
use crate::milp::{evaluate, Assignment, Objective};
use crate::scalar::Scalar;

/// Largest assignment space `solve_bruteforce` will enumerate.
pub const ENUMERATION_LIMIT: f64 = 1e7;

/// Evaluates every assignment in lexicographic order and keeps the first
/// feasible one of minimum objective value.
pub fn solve_bruteforce<S: Scalar>(etfg: &Etfg<S>, objective: Objective, l_thr: Option<&S>) -> Result<Solution<S>, SolveError> {
    let start = Instant::now();
    let l_thr = effective_threshold(objective, l_thr)?;
    let widths: Vec<usize> = etfg.composite_nodes().iter().map(Vec::len).collect();
    let space: f64 = widths.iter().map(|&w| w as f64).product();
    if space > ENUMERATION_LIMIT {
        return Err(SolveError::TooLarge(space));
    }

    let mut stats = SolverStats { solver: "bruteforce".into(), ..Default::default() };
    let mut slots = vec![0usize; widths.len()];
    let mut best: Option<(S, Assignment)> = None;
    loop {
        stats.nodes_explored += 1;
        let a = Assignment(
            slots.iter().enumerate().map(|(t, &s)| etfg.composite_nodes()[t][s].device).collect(),
        );
        let b = evaluate(etfg, &a, l_thr.as_ref())?;
        if b.feasible() {
            let v = b.value(objective);
            if best.as_ref().map_or(true, |(bv, _)| v < bv) {
                best = Some((v.clone(), a));
            }
        } else {
            stats.pruned_by_budget += 1;
        }

        // odometer, last task fastest
        let mut t = widths.len();
        loop {
            if t == 0 {
                stats.wall_time_s = start.elapsed().as_secs_f64();
                return Ok(match best {
                    None => infeasible(stats),
                    Some((_, a)) => {
                        stats.gap = Some(0.0);
                        Solution {
                            allocation: Some(allocation(etfg, objective, l_thr.as_ref(), a, Optimality::ProvenOptimal)?),
                            optimality: Optimality::ProvenOptimal,
                            stats,
                        }
                    }
                });
            }
            t -= 1;
            slots[t] += 1;
            if slots[t] < widths[t] {
                break;
            }
            slots[t] = 0;
        }
    }
}
