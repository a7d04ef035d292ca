//! Fixtures shared by unit tests.

use rand::Rng;

use crate::model::{Budget, DeviceRole, DeviceSet, SystemModel, Task, TaskGraph, TaskId};
use crate::presets::{ChannelProfile, Configuration};

pub fn run1() -> SystemModel {
    Configuration::C1.system_with(ChannelProfile::Run1)
}

/// `run1()` with every budget removed.
pub fn unbounded() -> SystemModel {
    let mut s = run1();
    for d in &mut s.devices {
        d.memory_budget = Budget::Unbounded;
        d.storage_budget = Budget::Unbounded;
        d.energy_budget = Budget::Unbounded;
    }
    s
}

pub fn profiled(id: u32, allowed: DeviceSet, latency: [f64; 3], power: [f64; 3], data: f64) -> Task {
    let mut t = Task::unprofiled(id);
    t.allowed = allowed;
    t.output_data = data;
    t.memory = 1024.0 * 1024.0;
    t.storage = 1024.0 * 1024.0;
    for k in allowed.iter() {
        t.latency.insert(k, latency[k.index()]);
        t.power.insert(k, power[k.index()]);
    }
    t
}

/// Two-task chain 1 -> 2; `first` is the allowed set of task 1.
pub fn fig2(first: DeviceSet, data: f64) -> TaskGraph {
    TaskGraph::new(
        vec![
            profiled(1, first, [0.3, 0.05, 0.02], [4.0, 20.0, 400.0], data),
            profiled(2, DeviceSet::ALL, [0.5, 0.08, 0.03], [4.5, 25.0, 450.0], 0.0),
        ],
        vec![(TaskId(1), TaskId(2))],
    )
}

/// Random DAG over `n` tasks with arcs only from lower to higher ids.
pub fn random_dag(rng: &mut impl Rng, n: usize, arc_p: f64, fixed_p: f64) -> TaskGraph {
    let mut tasks = Vec::with_capacity(n);
    for i in 0..n {
        let allowed = if rng.gen_bool(fixed_p) {
            DeviceSet::only(DeviceRole::from_index(rng.gen_range(0..3)))
        } else {
            DeviceSet::ALL
        };
        let mut lat = [0.0; 3];
        let mut pow = [0.0; 3];
        for k in 0..3 {
            lat[k] = rng.gen_range(1..200) as f64 / 100.0;
            pow[k] = rng.gen_range(1..50) as f64 / 2.0;
        }
        let mut t = profiled(i as u32 + 1, allowed, lat, pow, rng.gen_range(0..40) as f64 * 2.5e5);
        t.memory = rng.gen_range(1..64) as f64 * 1024.0 * 1024.0;
        t.storage = rng.gen_range(1..64) as f64 * 1024.0 * 1024.0;
        tasks.push(t);
    }
    let mut arcs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(arc_p) {
                arcs.push((TaskId::from_index(i), TaskId::from_index(j)));
            }
        }
    }
    TaskGraph::new(tasks, arcs)
}

/// Random forest: every task after the first links to one earlier task with
/// probability `link_p`, in a random direction.
pub fn random_forest(rng: &mut impl Rng, n: usize, link_p: f64, fixed_p: f64) -> TaskGraph {
    let mut g = random_dag(rng, n, 0.0, fixed_p);
    for j in 1..n {
        if rng.gen_bool(link_p) {
            let i = rng.gen_range(0..j);
            let (a, b) = (TaskId::from_index(i), TaskId::from_index(j));
            g.arcs.push(if rng.gen_bool(0.5) { (a, b) } else { (b, a) });
        }
    }
    g
}
