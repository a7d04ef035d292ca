//! Depth-first branch-and-bound over task-to-device assignments.
//!
//! Tasks are assigned in topological order. The lower bound of a partial
//! assignment is the cost already fixed, plus for every unassigned task the
//! cheapest device counting arcs to already assigned neighbours, plus the
//! cheapest device pair of every arc between two unassigned tasks.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use super::{allocation, effective_threshold, infeasible, Optimality, SolveConfig, Solution, SolveError, SolverStats};
use crate::etfg::Etfg;
use crate::milp::{arc_energy_on, Assignment, MilpError, Objective};
use crate::model::DeviceRole;
use crate::scalar::{relative_gap, Scalar};

struct Costs<S> {
    node: Vec<Vec<S>>,
    /// per composite arc, indexed `parent_slot * child_width + child_slot`
    arc: Vec<Vec<S>>,
    min_pair: Vec<S>,
}

impl<S: Scalar> Costs<S> {
    fn new(etfg: &Etfg<S>, pick: impl Fn(&S, &S) -> S) -> Self {
        let node = etfg
            .composite_nodes()
            .iter()
            .map(|c| c.iter().map(|n| pick(&n.comp_latency, &n.comp_energy)).collect())
            .collect();
        let arc: Vec<Vec<S>> = etfg
            .composite_arcs()
            .iter()
            .map(|c| c.arcs.iter().map(|a| pick(&a.comm_latency, &a.comm_energy)).collect())
            .collect();
        let min_pair = arc.iter().map(|v| v.iter().cloned().reduce(S::min_of).expect("non-empty arc")).collect();
        Costs { node, arc, min_pair }
    }
}

struct Problem<'a, S> {
    _etfg: std::marker::PhantomData<&'a Etfg<S>>,
    widths: Vec<usize>,
    devices: Vec<Vec<DeviceRole>>,
    order: Vec<usize>,
    /// (parent, child) task index of every composite arc
    ends: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
    obj: Costs<S>,
    lat: Option<Costs<S>>,
    l_thr: Option<S>,
    budgeted: bool,
    /// `[resource][device]`, resources are memory, storage, energy
    budgets: [[Option<S>; 3]; 3],
    mem: Vec<S>,
    sto: Vec<S>,
    comp_energy: Vec<Vec<S>>,
    arc_energy: Vec<Vec<[S; 3]>>,
    /// usage of fixed tasks at order positions `>= d`
    mandatory: Vec<[[S; 3]; 3]>,
}

fn zero9<S: Scalar>() -> [[S; 3]; 3] {
    std::array::from_fn(|_| std::array::from_fn(|_| S::zero()))
}

impl<'a, S: Scalar> Problem<'a, S> {
    fn new(etfg: &'a Etfg<S>, objective: Objective, l_thr: Option<S>) -> Self {
        let n = etfg.task_count();
        let order: Vec<usize> = etfg
            .graph()
            .topological_order()
            .expect("validated graph is acyclic")
            .into_iter()
            .map(|t| t.index())
            .collect();
        let ends: Vec<(usize, usize)> =
            etfg.composite_arcs().iter().map(|c| (c.parent.index(), c.child.index())).collect();
        let mut adj = vec![Vec::new(); n];
        for (a, &(p, c)) in ends.iter().enumerate() {
            adj[p].push(a);
            adj[c].push(a);
        }
        let obj = match objective {
            Objective::Latency => Costs::new(etfg, |l, _| l.clone()),
            Objective::Energy => Costs::new(etfg, |_, e| e.clone()),
        };
        let lat = l_thr.as_ref().map(|_| Costs::new(etfg, |l, _| l.clone()));
        let budgets = DeviceRole::ALL.map(|k| etfg.budgets(k).clone());
        let budgets = [
            budgets.clone().map(|b| b.memory),
            budgets.clone().map(|b| b.storage),
            budgets.map(|b| b.energy),
        ];
        let devices: Vec<Vec<DeviceRole>> =
            etfg.composite_nodes().iter().map(|c| c.iter().map(|n| n.device).collect()).collect();
        let mem: Vec<S> = (0..n).map(|t| etfg.memory(crate::TaskId::from_index(t)).clone()).collect();
        let sto: Vec<S> = (0..n).map(|t| etfg.storage(crate::TaskId::from_index(t)).clone()).collect();
        let comp_energy: Vec<Vec<S>> =
            etfg.composite_nodes().iter().map(|c| c.iter().map(|n| n.comp_energy.clone()).collect()).collect();

        let mut mandatory = vec![zero9::<S>(); n + 1];
        for d in (0..n).rev() {
            let mut m = mandatory[d + 1].clone();
            let t = order[d];
            if devices[t].len() == 1 {
                let k = devices[t][0].index();
                m[0][k] += mem[t].clone();
                m[1][k] += sto[t].clone();
                m[2][k] += comp_energy[t][0].clone();
            }
            mandatory[d] = m;
        }

        Problem {
            widths: devices.iter().map(Vec::len).collect(),
            budgeted: etfg.has_finite_budgets(),
            arc_energy: etfg
                .composite_arcs()
                .iter()
                .map(|c| c.arcs.iter().map(|a| DeviceRole::ALL.map(|k| arc_energy_on(a, k))).collect())
                .collect(),
            _etfg: std::marker::PhantomData,
            devices,
            order,
            ends,
            adj,
            obj,
            lat,
            l_thr,
            budgets,
            mem,
            sto,
            comp_energy,
            mandatory,
        }
    }

    /// Index into a composite arc's cost vector.
    fn arc_index(&self, a: usize, u: usize, su: usize, v: usize, sv: usize) -> usize {
        let (p, c) = self.ends[a];
        if p == u {
            su * self.widths[c] + sv
        } else {
            debug_assert_eq!((p, c), (v, u));
            sv * self.widths[u] + su
        }
    }

    fn other_end(&self, a: usize, u: usize) -> usize {
        let (p, c) = self.ends[a];
        if p == u {
            c
        } else {
            p
        }
    }
}

#[derive(Clone)]
struct Tracker<S> {
    extra: Vec<Vec<S>>,
    h: Vec<S>,
    fixed: S,
    h_sum: S,
    pair_sum: S,
}

struct TrackerUndo<S> {
    fixed: S,
    h_sum: S,
    pair_sum: S,
    neighbours: Vec<(usize, Vec<S>, S)>,
}

impl<S: Scalar> Tracker<S> {
    fn new(p: &Problem<S>, costs: &Costs<S>) -> Self {
        let extra: Vec<Vec<S>> = p.widths.iter().map(|&w| vec![S::zero(); w]).collect();
        let h: Vec<S> = costs.node.iter().map(|v| v.iter().cloned().reduce(S::min_of).expect("slot")).collect();
        Tracker {
            h_sum: h.iter().cloned().sum(),
            pair_sum: costs.min_pair.iter().cloned().sum(),
            extra,
            h,
            fixed: S::zero(),
        }
    }

    fn bound(&self) -> S {
        self.fixed.clone() + self.h_sum.clone() + self.pair_sum.clone()
    }

    fn partial(&self, costs: &Costs<S>, u: usize, su: usize) -> S {
        costs.node[u][su].clone() + self.extra[u][su].clone()
    }

    fn apply(&mut self, p: &Problem<S>, costs: &Costs<S>, assigned: &[Option<usize>], u: usize, su: usize) -> TrackerUndo<S> {
        let mut undo = TrackerUndo {
            fixed: self.fixed.clone(),
            h_sum: self.h_sum.clone(),
            pair_sum: self.pair_sum.clone(),
            neighbours: Vec::new(),
        };
        self.fixed += self.partial(costs, u, su);
        self.h_sum -= self.h[u].clone();
        for &a in &p.adj[u] {
            let v = p.other_end(a, u);
            if assigned[v].is_some() {
                continue;
            }
            self.pair_sum -= costs.min_pair[a].clone();
            undo.neighbours.push((v, self.extra[v].clone(), self.h[v].clone()));
            for sv in 0..p.widths[v] {
                self.extra[v][sv] += costs.arc[a][p.arc_index(a, u, su, v, sv)].clone();
            }
            let h = (0..p.widths[v]).map(|sv| self.partial(costs, v, sv)).reduce(S::min_of).expect("slot");
            self.h_sum += h.clone() - self.h[v].clone();
            self.h[v] = h;
        }
        undo
    }

    fn undo(&mut self, undo: TrackerUndo<S>) {
        for (v, extra, h) in undo.neighbours.into_iter().rev() {
            self.extra[v] = extra;
            self.h[v] = h;
        }
        self.fixed = undo.fixed;
        self.h_sum = undo.h_sum;
        self.pair_sum = undo.pair_sum;
    }
}

struct Shared<S> {
    incumbent: Mutex<Option<(S, Assignment)>>,
    deadline: Option<Instant>,
    aborted: AtomicBool,
}

#[derive(Default, Clone, Copy)]
struct Counters {
    nodes: u64,
    bound: u64,
    budget: u64,
    latency: u64,
}

enum Verdict {
    Open,
    Budget,
    Latency,
    Bound,
}

struct Undo<S> {
    obj: TrackerUndo<S>,
    lat: Option<TrackerUndo<S>>,
    usage: Option<[[S; 3]; 3]>,
    task: usize,
}

struct Worker<'p, 'a, S> {
    p: &'p Problem<'a, S>,
    shared: &'p Shared<S>,
    assigned: Vec<Option<usize>>,
    obj: Tracker<S>,
    lat: Option<Tracker<S>>,
    usage: [[S; 3]; 3],
    open_bound: Option<S>,
    count: Counters,
}

impl<'p, 'a, S: Scalar> Worker<'p, 'a, S> {
    fn new(p: &'p Problem<'a, S>, shared: &'p Shared<S>) -> Self {
        Worker {
            assigned: vec![None; p.widths.len()],
            obj: Tracker::new(p, &p.obj),
            lat: p.lat.as_ref().map(|c| Tracker::new(p, c)),
            usage: zero9(),
            open_bound: None,
            count: Counters::default(),
            p,
            shared,
        }
    }

    fn apply(&mut self, u: usize, su: usize) -> Undo<S> {
        let p = self.p;
        let obj = self.obj.apply(p, &p.obj, &self.assigned, u, su);
        let lat = match (&mut self.lat, &p.lat) {
            (Some(t), Some(c)) => Some(t.apply(p, c, &self.assigned, u, su)),
            _ => None,
        };
        let usage = p.budgeted.then(|| {
            let saved = self.usage.clone();
            let k = p.devices[u][su].index();
            self.usage[0][k] += p.mem[u].clone();
            self.usage[1][k] += p.sto[u].clone();
            self.usage[2][k] += p.comp_energy[u][su].clone();
            for &a in &p.adj[u] {
                let v = p.other_end(a, u);
                if let Some(sv) = self.assigned[v] {
                    for (d, e) in p.arc_energy[a][p.arc_index(a, u, su, v, sv)].iter().enumerate() {
                        self.usage[2][d] += e.clone();
                    }
                }
            }
            saved
        });
        self.assigned[u] = Some(su);
        Undo { obj, lat, usage, task: u }
    }

    fn undo(&mut self, undo: Undo<S>) {
        self.assigned[undo.task] = None;
        self.obj.undo(undo.obj);
        if let (Some(t), Some(u)) = (&mut self.lat, undo.lat) {
            t.undo(u);
        }
        if let Some(u) = undo.usage {
            self.usage = u;
        }
    }

    /// Lexicographically smallest completion of the current partial assignment.
    fn lex_min_completion_exceeds(&self, inc: &Assignment) -> bool {
        for (t, s) in self.assigned.iter().enumerate() {
            let k = self.p.devices[t][s.unwrap_or(0)];
            match k.cmp(&inc.0[t]) {
                std::cmp::Ordering::Less => return false,
                std::cmp::Ordering::Greater => return true,
                std::cmp::Ordering::Equal => {}
            }
        }
        false
    }

    /// Feasibility and bound test after `depth` order positions are assigned.
    fn verdict(&self, depth: usize, against_incumbent: bool) -> Verdict {
        let p = self.p;
        if p.budgeted {
            for r in 0..3 {
                for k in 0..3 {
                    if let Some(b) = &p.budgets[r][k] {
                        if self.usage[r][k].clone() + p.mandatory[depth][r][k].clone() > *b {
                            return Verdict::Budget;
                        }
                    }
                }
            }
        }
        if let (Some(t), Some(thr)) = (&self.lat, &p.l_thr) {
            if t.bound() > *thr {
                return Verdict::Latency;
            }
        }
        if against_incumbent {
            let inc = self.shared.incumbent.lock().expect("incumbent lock");
            if let Some((v, a)) = inc.as_ref() {
                let b = self.obj.bound();
                if b > *v || (b == *v && self.lex_min_completion_exceeds(a)) {
                    return Verdict::Bound;
                }
            }
        }
        Verdict::Open
    }

    fn note_open(&mut self) {
        let b = self.obj.bound();
        self.open_bound = Some(match self.open_bound.take() {
            Some(x) => S::min_of(x, b),
            None => b,
        });
    }

    fn timed_out(&self) -> bool {
        if self.shared.aborted.load(Ordering::Relaxed) {
            return true;
        }
        if let Some(d) = self.shared.deadline {
            if self.count.nodes % 64 == 0 && Instant::now() >= d {
                self.shared.aborted.store(true, Ordering::Relaxed);
                return true;
            }
        }
        false
    }

    fn leaf(&mut self) {
        let value = self.obj.fixed.clone();
        let a = Assignment(self.assigned.iter().enumerate().map(|(t, s)| self.p.devices[t][s.unwrap()]).collect());
        let mut inc = self.shared.incumbent.lock().expect("incumbent lock");
        let better = match inc.as_ref() {
            None => true,
            Some((v, b)) => value < *v || (value == *v && a < *b),
        };
        if better {
            *inc = Some((value, a));
        }
    }

    fn dfs(&mut self, depth: usize) {
        self.count.nodes += 1;
        if depth == self.p.order.len() {
            self.leaf();
            return;
        }
        let u = self.p.order[depth];
        let mut slots: Vec<usize> = (0..self.p.widths[u]).collect();
        slots.sort_by(|&x, &y| {
            self.obj
                .partial(&self.p.obj, u, x)
                .partial_cmp(&self.obj.partial(&self.p.obj, u, y))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for (i, &s) in slots.iter().enumerate() {
            if self.timed_out() {
                for &rest in &slots[i..] {
                    self.note_open_child(depth, u, rest);
                }
                return;
            }
            let undo = self.apply(u, s);
            match self.verdict(depth + 1, true) {
                Verdict::Open => self.dfs(depth + 1),
                Verdict::Budget => self.count.budget += 1,
                Verdict::Latency => self.count.latency += 1,
                Verdict::Bound => self.count.bound += 1,
            }
            self.undo(undo);
        }
    }

    fn note_open_child(&mut self, depth: usize, u: usize, s: usize) {
        let undo = self.apply(u, s);
        if let Verdict::Open = self.verdict(depth + 1, false) {
            self.note_open();
        }
        self.undo(undo);
    }

    /// Applies a subproblem prefix; returns the undo stack, or `None` when
    /// the prefix is already pruned.
    fn enter(&mut self, prefix: &[usize], explore: bool) -> (Vec<Undo<S>>, bool) {
        let mut stack = Vec::with_capacity(prefix.len());
        for (d, &s) in prefix.iter().enumerate() {
            stack.push(self.apply(self.p.order[d], s));
            match self.verdict(d + 1, explore) {
                Verdict::Open => {}
                Verdict::Budget => {
                    self.count.budget += 1;
                    return (stack, false);
                }
                Verdict::Latency => {
                    self.count.latency += 1;
                    return (stack, false);
                }
                Verdict::Bound => {
                    self.count.bound += 1;
                    return (stack, false);
                }
            }
        }
        (stack, true)
    }

    fn leave(&mut self, stack: Vec<Undo<S>>) {
        for u in stack.into_iter().rev() {
            self.undo(u);
        }
    }

    fn run(&mut self, prefixes: &[Vec<usize>], next: &AtomicUsize) {
        loop {
            let i = next.fetch_add(1, Ordering::Relaxed);
            let Some(prefix) = prefixes.get(i) else { return };
            let aborted = self.timed_out();
            let (stack, open) = self.enter(prefix, !aborted);
            if open {
                if aborted {
                    self.note_open();
                } else {
                    self.dfs(prefix.len());
                }
            }
            self.leave(stack);
        }
    }
}

/// Splits the top of the search tree into at least `4 * threads` prefixes.
fn prefixes(p: &Problem<impl Scalar>, threads: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    if threads <= 1 {
        return out;
    }
    let mut depth = 0;
    while out.len() < 4 * threads && depth < p.order.len() {
        let w = p.widths[p.order[depth]];
        out = out
            .into_iter()
            .flat_map(|pre| {
                (0..w).map(move |s| {
                    let mut q = pre.clone();
                    q.push(s);
                    q
                })
            })
            .collect();
        depth += 1;
    }
    out
}

/// Lower bound at a partial assignment (tasks in dense order, `None` for
/// unassigned); budgets and thresholds are ignored.
pub fn partial_bound<S: Scalar>(etfg: &Etfg<S>, objective: Objective, partial: &[Option<DeviceRole>]) -> Result<S, MilpError> {
    if partial.len() != etfg.task_count() {
        return Err(MilpError::AssignmentLength { expected: etfg.task_count(), got: partial.len() });
    }
    let p = Problem::new(etfg, objective, None);
    let mut t = Tracker::new(&p, &p.obj);
    let mut assigned = vec![None; partial.len()];
    for (u, k) in partial.iter().enumerate() {
        if let Some(k) = k {
            let id = crate::TaskId::from_index(u);
            let su = etfg.slot(id, *k).ok_or(MilpError::NotAllowed(id, *k))?;
            t.apply(&p, &p.obj, &assigned, u, su);
            assigned[u] = Some(su);
        }
    }
    Ok(t.bound())
}

/// Exact branch-and-bound. With a time limit the best assignment found so far
/// is returned together with its relative gap.
pub fn solve_branch_and_bound<S: Scalar>(
    etfg: &Etfg<S>,
    objective: Objective,
    l_thr: Option<&S>,
    cfg: &SolveConfig,
) -> Result<Solution<S>, SolveError> {
    let start = Instant::now();
    let l_thr = effective_threshold(objective, l_thr)?;
    let p = Problem::new(etfg, objective, l_thr.clone());
    let shared = Shared {
        incumbent: Mutex::new(None),
        deadline: cfg.time_limit.map(|d| start + d.min(Duration::from_secs(60 * 60 * 24 * 365))),
        aborted: AtomicBool::new(false),
    };

    let root = Worker::new(&p, &shared);
    let root_bound = root.obj.bound();
    let mut stats = SolverStats {
        solver: "bnb".into(),
        root_bound: Some(root_bound.to_f64()),
        ..Default::default()
    };

    let root_open = matches!(root.verdict(0, false), Verdict::Open);
    let mut open_bound: Option<S> = None;
    if root_open {
        let prefixes = prefixes(&p, cfg.threads);
        let next = AtomicUsize::new(0);
        let threads = cfg.threads.max(1).min(prefixes.len());
        let results: Vec<(Counters, Option<S>)> = if threads == 1 {
            let mut w = Worker::new(&p, &shared);
            w.run(&prefixes, &next);
            vec![(w.count, w.open_bound)]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = (0..threads)
                    .map(|_| {
                        scope.spawn(|| {
                            let mut w = Worker::new(&p, &shared);
                            w.run(&prefixes, &next);
                            (w.count, w.open_bound)
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
            })
        };
        for (c, ob) in results {
            stats.nodes_explored += c.nodes;
            stats.pruned_by_bound += c.bound;
            stats.pruned_by_budget += c.budget;
            stats.pruned_by_latency += c.latency;
            if let Some(b) = ob {
                open_bound = Some(match open_bound {
                    Some(x) => S::min_of(x, b),
                    None => b,
                });
            }
        }
    } else {
        stats.pruned_by_budget += 1;
    }

    let timed_out = shared.aborted.load(Ordering::Relaxed);
    stats.timed_out = timed_out;
    stats.wall_time_s = start.elapsed().as_secs_f64();
    let incumbent = shared.incumbent.into_inner().expect("incumbent lock");

    match (incumbent, timed_out) {
        (None, false) => Ok(infeasible(stats)),
        (None, true) => Err(SolveError::NoIncumbent),
        (Some((value, a)), timed_out) => {
            let lower = match (&open_bound, timed_out) {
                (Some(b), true) => S::min_of(b.clone(), value.clone()),
                _ => value.clone(),
            };
            let gap = relative_gap(&value, &lower);
            let optimality = if timed_out && gap > 0.0 { Optimality::IncumbentWithGap(gap) } else { Optimality::ProvenOptimal };
            stats.lower_bound = Some(lower.to_f64());
            stats.gap = Some(gap);
            Ok(Solution {
                allocation: Some(allocation(etfg, objective, l_thr.as_ref(), a, optimality)?),
                optimality,
                stats,
            })
        }
    }
}
