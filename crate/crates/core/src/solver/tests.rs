use std::time::Duration;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::etfg::transform;
use crate::model::{Budget, DeviceRole::*, DeviceSet, TaskGraph, TaskId};
use crate::scalar::ratio;
use crate::testkit::{fig2, profiled, random_dag, random_forest, run1, unbounded};
use crate::Exact;

fn cfg(threads: usize) -> SolveConfig {
    SolveConfig { time_limit: None, threads }
}

fn thr() -> Exact {
    Exact::from_f64(8.0)
}

fn assignment_of(s: &Solution<Exact>) -> Vec<crate::DeviceRole> {
    s.allocation.as_ref().unwrap().assignment.0.clone()
}

#[test]
fn degenerate_instance_breaks_ties_lexicographically() {
    let g = TaskGraph::new(
        vec![profiled(1, DeviceSet::ALL, [1.0; 3], [1.0; 3], 0.0), profiled(2, DeviceSet::ALL, [1.0; 3], [1.0; 3], 0.0)],
        vec![(TaskId(1), TaskId(2))],
    );
    let e = transform::<Exact>(&g, &unbounded()).unwrap();
    for obj in [Objective::Latency, Objective::Energy] {
        let bf = solve_bruteforce(&e, obj, None).unwrap();
        assert_eq!(assignment_of(&bf), vec![Edge, Edge]);
        assert_eq!(assignment_of(&solve_branch_and_bound(&e, obj, None, &cfg(1)).unwrap()), vec![Edge, Edge]);
        assert_eq!(assignment_of(&solve_tree_dp(&e, obj).unwrap()), vec![Edge, Edge]);
    }
}

#[test]
fn single_task_argmin() {
    let g = TaskGraph::new(vec![profiled(1, DeviceSet::ALL, [3.0, 2.0, 1.0], [1.0; 3], 0.0)], vec![]);
    let e = transform::<Exact>(&g, &run1()).unwrap();
    let s = solve_bruteforce(&e, Objective::Latency, None).unwrap();
    assert_eq!(assignment_of(&s), vec![Cloud]);
    assert_eq!(s.value(), Some(&Exact::from_f64(1.0)));
    let e = transform::<Exact>(&g, &unbounded()).unwrap();
    assert_eq!(assignment_of(&solve_tree_dp(&e, Objective::Latency).unwrap()), vec![Cloud]);
}

#[test]
fn two_task_chain_matches_hand_enumeration() {
    let g = TaskGraph::new(
        vec![
            profiled(1, DeviceSet::ALL, [1.0, 10.0, 10.0], [1.0; 3], 1e6),
            profiled(2, DeviceSet::ALL, [10.0, 10.0, 1.0], [1.0; 3], 0.0),
        ],
        vec![(TaskId(1), TaskId(2))],
    );
    let e = transform::<Exact>(&g, &run1()).unwrap();
    let s = solve_bruteforce(&e, Objective::Latency, None).unwrap();
    // 1e -> 2c costs 1 + 1 + 1/15 + 1/25; every other pair costs at least 11
    assert_eq!(assignment_of(&s), vec![Edge, Cloud]);
    assert_eq!(s.value(), Some(&(Exact::from_f64(2.0) + ratio(1, 15) + ratio(1, 25))));
    assert_eq!(solve_branch_and_bound(&e, Objective::Latency, None, &cfg(1)).unwrap().value(), s.value());
}

#[test]
fn tree_dp_small_shapes() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let chain = random_dag(&mut rng, 3, 0.0, 0.0);
    let mut chain = chain;
    chain.arcs = vec![(TaskId(1), TaskId(2)), (TaskId(2), TaskId(3))];
    let mut star = random_dag(&mut rng, 5, 0.0, 0.0);
    star.arcs = (2..=5).map(|j| (TaskId(1), TaskId(j))).collect();
    for g in [chain, star] {
        let e = transform::<Exact>(&g, &unbounded()).unwrap();
        for obj in [Objective::Latency, Objective::Energy] {
            let dp = solve_tree_dp(&e, obj).unwrap();
            let bf = solve_bruteforce(&e, obj, None).unwrap();
            assert_eq!(dp.value(), bf.value());
            assert_eq!(assignment_of(&dp), assignment_of(&bf));
        }
    }
}

#[test]
fn tree_dp_refuses_unsupported_inputs() {
    let e = transform::<Exact>(&fig2(DeviceSet::ALL, 1e6), &run1()).unwrap();
    assert_eq!(solve_tree_dp(&e, Objective::Latency).unwrap_err(), SolveError::Constrained);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut g = random_dag(&mut rng, 3, 0.0, 0.0);
    g.arcs = vec![(TaskId(1), TaskId(2)), (TaskId(2), TaskId(3)), (TaskId(1), TaskId(3))];
    assert!(!is_forest(&g));
    let e = transform::<Exact>(&g, &unbounded()).unwrap();
    assert_eq!(solve_tree_dp(&e, Objective::Latency).unwrap_err(), SolveError::NotAForest);
    assert!(!tree_dp_applies(&e, Objective::Latency, None));
}

#[test]
fn memory_infeasible_instance() {
    let mut sys = run1();
    sys.devices[0].memory_budget = Budget::Finite(1.0);
    let g = fig2(DeviceSet::only(Edge), 1e6);
    let e = transform::<Exact>(&g, &sys).unwrap();
    for obj in [Objective::Latency, Objective::Energy] {
        let s = solve_branch_and_bound(&e, obj, None, &cfg(1)).unwrap();
        assert_eq!(s.optimality, Optimality::Infeasible);
        assert!(!solve_bruteforce(&e, obj, None).unwrap().is_feasible());
    }
}

#[test]
fn latency_threshold_is_enforced() {
    let e = transform::<Exact>(&fig2(DeviceSet::only(Edge), 1e6), &run1()).unwrap();
    let tight = Exact::from_f64(0.45);
    let s = solve_branch_and_bound(&e, Objective::Energy, Some(&tight), &cfg(1)).unwrap();
    let a = s.allocation.unwrap();
    assert!(a.breakdown.total_latency <= tight);
    assert_eq!(Some(&a.objective_value), solve_bruteforce(&e, Objective::Energy, Some(&tight)).unwrap().value());
    let impossible = Exact::from_f64(0.01);
    assert!(!solve_branch_and_bound(&e, Objective::Energy, Some(&impossible), &cfg(1)).unwrap().is_feasible());
    assert!(matches!(
        solve_branch_and_bound(&e, Objective::Energy, Some(&Exact::zero()), &cfg(1)),
        Err(SolveError::Model(MilpError::NonPositiveThreshold))
    ));
}

#[test]
fn bruteforce_guard() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = random_dag(&mut rng, 15, 0.1, 0.0);
    let e = transform::<f64>(&g, &run1()).unwrap();
    assert!(matches!(solve_bruteforce(&e, Objective::Latency, None), Err(SolveError::TooLarge(_))));
}

fn random_system(rng: &mut ChaCha8Rng) -> crate::SystemModel {
    let mut sys = if rng.gen_bool(0.5) {
        run1()
    } else {
        crate::presets::Configuration::C2.system_with(crate::presets::ChannelProfile::Run2)
    };
    for d in &mut sys.devices {
        if rng.gen_bool(0.5) {
            d.memory_budget = Budget::Finite(rng.gen_range(1..200) as f64 * 1024.0 * 1024.0);
        }
        if rng.gen_bool(0.3) {
            d.energy_budget = Budget::Finite(rng.gen_range(1..80) as f64);
        }
    }
    sys
}

#[test]
fn bnb_matches_bruteforce_on_random_instances() {
    for seed in 0..60u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=7);
        let g = random_dag(&mut rng, n, 0.4, 0.2);
        let sys = random_system(&mut rng);
        let e = transform::<Exact>(&g, &sys).unwrap();
        for obj in [Objective::Latency, Objective::Energy] {
            let l = Exact::from_f64(rng.gen_range(1..40) as f64 / 4.0);
            let bf = solve_bruteforce(&e, obj, Some(&l)).unwrap();
            for threads in [1, 3] {
                let bb = solve_branch_and_bound(&e, obj, Some(&l), &cfg(threads)).unwrap();
                assert_eq!(bb.value(), bf.value(), "seed {seed} {obj} threads {threads}");
                assert_eq!(bb.allocation.map(|a| a.assignment), bf.allocation.clone().map(|a| a.assignment));
            }
        }
    }
}

#[test]
fn tree_dp_matches_bruteforce_on_random_forests() {
    for seed in 0..60u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=8);
        let g = random_forest(&mut rng, n, 0.85, 0.2);
        let e = transform::<Exact>(&g, &unbounded()).unwrap();
        for obj in [Objective::Latency, Objective::Energy] {
            let dp = solve_tree_dp(&e, obj).unwrap();
            let bf = solve_bruteforce(&e, obj, None).unwrap();
            assert_eq!(dp.value(), bf.value(), "seed {seed}");
            assert_eq!(assignment_of(&dp), assignment_of(&bf), "seed {seed}");
        }
    }
}

#[test]
fn bound_is_admissible() {
    for seed in 0..40u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=6);
        let g = random_dag(&mut rng, n, 0.5, 0.2);
        let e = transform::<Exact>(&g, &unbounded()).unwrap();
        for obj in [Objective::Latency, Objective::Energy] {
            for _ in 0..5 {
                let partial: Vec<Option<crate::DeviceRole>> = e
                    .composite_nodes()
                    .iter()
                    .map(|c| rng.gen_bool(0.5).then(|| c[rng.gen_range(0..c.len())].device))
                    .collect();
                let bound = partial_bound(&e, obj, &partial).unwrap();
                // best completion by enumeration
                let mut best: Option<Exact> = None;
                let mut stack = vec![Vec::new()];
                while let Some(prefix) = stack.pop() {
                    if prefix.len() == n {
                        let a = crate::milp::Assignment(prefix);
                        let v = crate::evaluate(&e, &a, None).unwrap().value(obj).clone();
                        best = Some(best.map_or(v.clone(), |b| Exact::min_of(b, v)));
                        continue;
                    }
                    let t = prefix.len();
                    let choices: Vec<_> = match partial[t] {
                        Some(k) => vec![k],
                        None => e.composite_nodes()[t].iter().map(|c| c.device).collect(),
                    };
                    for k in choices {
                        let mut p = prefix.clone();
                        p.push(k);
                        stack.push(p);
                    }
                }
                assert!(bound <= best.unwrap(), "seed {seed}");
            }
        }
    }
}

#[test]
fn thread_count_does_not_change_result() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let g = random_dag(&mut rng, 11, 0.3, 0.1);
    let e = transform::<Exact>(&g, &run1()).unwrap();
    let one = solve_branch_and_bound(&e, Objective::Energy, Some(&thr()), &cfg(1)).unwrap();
    for threads in [2, 4, 8] {
        let many = solve_branch_and_bound(&e, Objective::Energy, Some(&thr()), &cfg(threads)).unwrap();
        assert_eq!(many.allocation, one.allocation);
    }
}

#[test]
fn time_limit_reports_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = random_dag(&mut rng, 40, 0.15, 0.05);
    let e = transform::<f64>(&g, &unbounded()).unwrap();
    let c = SolveConfig { time_limit: Some(Duration::from_millis(30)), threads: 1 };
    let s = solve_branch_and_bound(&e, Objective::Latency, None, &c).unwrap();
    assert!(s.stats.timed_out);
    match s.optimality {
        Optimality::IncumbentWithGap(g) => assert!(g > 0.0 && g < 1.0),
        Optimality::ProvenOptimal => assert_eq!(s.stats.gap, Some(0.0)),
        Optimality::Infeasible => panic!("unbounded instance is feasible"),
    }
    let lb = s.stats.lower_bound.unwrap();
    assert!(lb <= s.allocation.unwrap().objective_value + 1e-9);
    assert!(lb >= s.stats.root_bound.unwrap() - 1e-9);
}

#[test]
fn auto_dispatch() {
    let e = transform::<Exact>(&fig2(DeviceSet::ALL, 1e6), &unbounded()).unwrap();
    let s = solve(&e, Objective::Latency, None, SolverKind::Auto, &cfg(1)).unwrap();
    assert_eq!(s.stats.solver, "tree-dp");
    let e = transform::<Exact>(&fig2(DeviceSet::ALL, 1e6), &run1()).unwrap();
    let s = solve(&e, Objective::Latency, None, SolverKind::Auto, &cfg(1)).unwrap();
    assert_eq!(s.stats.solver, "bnb");
    assert_eq!("tree-dp".parse::<SolverKind>(), Ok(SolverKind::TreeDp));
    assert!("gurobi".parse::<SolverKind>().is_err());
}
