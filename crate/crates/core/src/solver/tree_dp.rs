use std::time::Instant;

use super::{allocation, Optimality, Solution, SolveError, SolverStats};
use crate::etfg::Etfg;
use crate::milp::{Assignment, Objective};
use crate::model::TaskGraph;
use crate::scalar::Scalar;

/// True when the task graph, viewed undirected, has no cycle.
pub fn is_forest(g: &TaskGraph) -> bool {
    let mut parent: Vec<usize> = (0..g.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (i, j) in &g.arcs {
        let (a, b) = (find(&mut parent, i.index()), find(&mut parent, j.index()));
        if a == b {
            return false;
        }
        parent[a] = b;
    }
    true
}

struct Tree<'a, S> {
    etfg: &'a Etfg<S>,
    objective: Objective,
    /// (composite arc, neighbour) per task
    adj: Vec<Vec<(usize, usize)>>,
    /// tasks in BFS order, roots first within their component
    order: Vec<usize>,
    /// (tree parent, composite arc) of each non-root task
    up: Vec<Option<(usize, usize)>>,
    roots: Vec<usize>,
}

impl<'a, S: Scalar> Tree<'a, S> {
    fn new(etfg: &'a Etfg<S>, objective: Objective) -> Self {
        let n = etfg.task_count();
        let mut adj = vec![Vec::new(); n];
        for (a, c) in etfg.composite_arcs().iter().enumerate() {
            adj[c.parent.index()].push((a, c.child.index()));
            adj[c.child.index()].push((a, c.parent.index()));
        }
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut up = vec![None; n];
        let mut roots = Vec::new();
        for r in 0..n {
            if seen[r] {
                continue;
            }
            seen[r] = true;
            roots.push(r);
            let mut head = order.len();
            order.push(r);
            while head < order.len() {
                let t = order[head];
                head += 1;
                for &(a, v) in &adj[t] {
                    if !seen[v] {
                        seen[v] = true;
                        up[v] = Some((t, a));
                        order.push(v);
                    }
                }
            }
        }
        Tree { etfg, objective, adj, order, up, roots }
    }

    fn node(&self, t: usize, s: usize) -> S {
        let n = &self.etfg.composite_nodes()[t][s];
        match self.objective {
            Objective::Latency => n.comp_latency.clone(),
            Objective::Energy => n.comp_energy.clone(),
        }
    }

    /// Cost of arc `a` with task `t` on slot `st` and neighbour `u` on `su`.
    fn pair(&self, a: usize, t: usize, st: usize, su: usize) -> S {
        let parent_side = self.etfg.composite_arcs()[a].parent.index() == t;
        let arc = if parent_side { self.etfg.arc_at(a, st, su) } else { self.etfg.arc_at(a, su, st) };
        match self.objective {
            Objective::Latency => arc.comm_latency.clone(),
            Objective::Energy => arc.comm_energy.clone(),
        }
    }

    fn children(&self, t: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj[t].iter().copied().filter(move |&(_, v)| self.up[v].map(|(p, _)| p) == Some(t))
    }

    /// Per task and slot, the optimum of its component with that slot
    /// forced (`None` for excluded slots), plus the unconstrained optimum.
    fn marginals(&self, allowed: &[Vec<bool>]) -> (Vec<Vec<Option<S>>>, S) {
        let n = self.order.len();
        let widths: Vec<usize> = allowed.iter().map(Vec::len).collect();
        let mut inside: Vec<Vec<Option<S>>> = widths.iter().map(|&w| vec![None; w]).collect();
        // best[c][sp]: cheapest way to attach child c's subtree to its parent on sp
        let mut best: Vec<Vec<Option<S>>> = vec![Vec::new(); n];

        for &t in self.order.iter().rev() {
            for s in 0..widths[t] {
                if !allowed[t][s] {
                    continue;
                }
                let mut v = self.node(t, s);
                let mut ok = true;
                for (_, c) in self.children(t) {
                    match &best[c][s] {
                        Some(b) => v += b.clone(),
                        None => ok = false,
                    }
                }
                if ok {
                    inside[t][s] = Some(v);
                }
            }
            if let Some((p, a)) = self.up[t] {
                best[t] = (0..widths[p])
                    .map(|sp| {
                        (0..widths[t])
                            .filter_map(|s| inside[t][s].as_ref().map(|f| self.pair(a, p, sp, s) + f.clone()))
                            .reduce(S::min_of)
                    })
                    .collect();
            }
        }

        let mut outside: Vec<Vec<Option<S>>> = widths.iter().map(|&w| vec![None; w]).collect();
        for &r in &self.roots {
            for s in 0..widths[r] {
                if allowed[r][s] {
                    outside[r][s] = Some(S::zero());
                }
            }
        }
        for &p in &self.order {
            let kids: Vec<usize> = self.children(p).map(|(_, c)| c).collect();
            if kids.is_empty() {
                continue;
            }
            // base[sp] = outside + node cost; prefix/suffix sums of sibling attachments
            for sp in 0..widths[p] {
                let Some(o) = outside[p][sp].clone() else { continue };
                let base = o + self.node(p, sp);
                let mut prefix: Vec<Option<S>> = Vec::with_capacity(kids.len() + 1);
                prefix.push(Some(S::zero()));
                for &c in &kids {
                    let next = match (prefix.last().unwrap(), &best[c][sp]) {
                        (Some(x), Some(b)) => Some(x.clone() + b.clone()),
                        _ => None,
                    };
                    prefix.push(next);
                }
                let mut suffix: Vec<Option<S>> = vec![Some(S::zero()); kids.len() + 1];
                for i in (0..kids.len()).rev() {
                    suffix[i] = match (&suffix[i + 1], &best[kids[i]][sp]) {
                        (Some(x), Some(b)) => Some(x.clone() + b.clone()),
                        _ => None,
                    };
                }
                for (i, &c) in kids.iter().enumerate() {
                    let (Some(pre), Some(suf)) = (&prefix[i], &suffix[i + 1]) else { continue };
                    let a = self.up[c].unwrap().1;
                    let rest = base.clone() + pre.clone() + suf.clone();
                    for sc in 0..widths[c] {
                        if !allowed[c][sc] {
                            continue;
                        }
                        let v = rest.clone() + self.pair(a, p, sp, sc);
                        outside[c][sc] = Some(match outside[c][sc].take() {
                            Some(cur) => S::min_of(cur, v),
                            None => v,
                        });
                    }
                }
            }
        }

        let marg: Vec<Vec<Option<S>>> = (0..n)
            .map(|t| {
                (0..widths[t])
                    .map(|s| match (&inside[t][s], &outside[t][s]) {
                        (Some(i), Some(o)) => Some(i.clone() + o.clone()),
                        _ => None,
                    })
                    .collect()
            })
            .collect();
        let total = self
            .roots
            .iter()
            .map(|&r| inside[r].iter().flatten().cloned().reduce(S::min_of).expect("every task has a slot"))
            .sum();
        (marg, total)
    }
}

/// Exact dynamic program over a forest-shaped task graph without budgets.
pub fn solve_tree_dp<S: Scalar>(etfg: &Etfg<S>, objective: Objective) -> Result<Solution<S>, SolveError> {
    let start = Instant::now();
    if !is_forest(etfg.graph()) {
        return Err(SolveError::NotAForest);
    }
    if etfg.has_finite_budgets() {
        return Err(SolveError::Constrained);
    }
    let tree = Tree::new(etfg, objective);
    let mut allowed: Vec<Vec<bool>> = etfg.composite_nodes().iter().map(|c| vec![true; c.len()]).collect();
    let (mut marg, _) = tree.marginals(&allowed);
    let mut passes = 1;
    let mut slots = Vec::with_capacity(etfg.task_count());
    for t in 0..etfg.task_count() {
        let min = marg[t].iter().flatten().cloned().reduce(S::min_of).expect("allowed slot");
        let ties: Vec<usize> = (0..marg[t].len()).filter(|&s| marg[t][s].as_ref() == Some(&min)).collect();
        let s = ties[0];
        allowed[t] = (0..allowed[t].len()).map(|x| x == s).collect();
        if ties.len() > 1 {
            marg = tree.marginals(&allowed).0;
            passes += 1;
        }
        slots.push(s);
    }

    let assignment = Assignment(slots.iter().enumerate().map(|(t, &s)| etfg.composite_nodes()[t][s].device).collect());
    let stats = SolverStats {
        solver: "tree-dp".into(),
        nodes_explored: passes,
        wall_time_s: start.elapsed().as_secs_f64(),
        gap: Some(0.0),
        ..Default::default()
    };
    Ok(Solution {
        allocation: Some(allocation(etfg, objective, None, assignment, Optimality::ProvenOptimal)?),
        optimality: Optimality::ProvenOptimal,
        stats,
    })
}
