use std::fmt;

use serde::{Deserialize, Serialize};

use super::{arc_energy_on, MilpError};
use crate::etfg::Etfg;
use crate::model::{DeviceRole, TaskId};
use crate::scalar::Scalar;

/// Device of every task, indexed by dense task position. Orders
/// lexicographically by task, then `e < h < c`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(pub Vec<DeviceRole>);

impl Assignment {
    pub fn uniform(n: usize, k: DeviceRole) -> Self {
        Assignment(vec![k; n])
    }

    pub fn device(&self, task: TaskId) -> DeviceRole {
        self.0[task.index()]
    }

    /// Slot of each task's device within its composite node.
    pub fn slots<S: Scalar>(&self, etfg: &Etfg<S>) -> Result<Vec<usize>, MilpError> {
        if self.0.len() != etfg.task_count() {
            return Err(MilpError::AssignmentLength { expected: etfg.task_count(), got: self.0.len() });
        }
        self.0
            .iter()
            .enumerate()
            .map(|(t, &k)| {
                let id = TaskId::from_index(t);
                etfg.slot(id, k).ok_or(MilpError::NotAllowed(id, k))
            })
            .collect()
    }

    pub fn distinct_devices(&self) -> usize {
        DeviceRole::ALL.iter().filter(|k| self.0.contains(k)).count()
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().enumerate().map(|(t, k)| format!("{}:{k}", t + 1)).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Traffic carried by one directional channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelUsage<S> {
    pub from: DeviceRole,
    pub to: DeviceRole,
    pub latency: S,
    /// transmit plus receive energy of this hop
    pub energy: S,
}

/// Latency/energy decomposition of an assignment and its budget verdicts.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveBreakdown<S> {
    pub total_latency: S,
    pub total_energy: S,
    pub comp_latency: [S; 3],
    pub comp_energy: [S; 3],
    /// Every channel of the system, sorted by (from, to).
    pub channels: Vec<ChannelUsage<S>>,
    /// Computation plus transmit, receive and relay energy per device.
    pub device_energy: [S; 3],
    pub memory: [S; 3],
    pub storage: [S; 3],
    pub memory_ok: [bool; 3],
    pub storage_ok: [bool; 3],
    pub energy_ok: [bool; 3],
    /// `None` when no threshold applies.
    pub latency_ok: Option<bool>,
}

impl<S: Scalar> ObjectiveBreakdown<S> {
    pub fn feasible(&self) -> bool {
        self.memory_ok.iter().chain(&self.storage_ok).chain(&self.energy_ok).all(|b| *b)
            && self.latency_ok.unwrap_or(true)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for k in DeviceRole::ALL {
            let i = k.index();
            if !self.memory_ok[i] {
                v.push(format!("memory budget of {k}"));
            }
            if !self.storage_ok[i] {
                v.push(format!("storage budget of {k}"));
            }
            if !self.energy_ok[i] {
                v.push(format!("energy budget of {k}"));
            }
        }
        if self.latency_ok == Some(false) {
            v.push("latency threshold".to_string());
        }
        v
    }

    pub fn value(&self, objective: super::Objective) -> &S {
        match objective {
            super::Objective::Latency => &self.total_latency,
            super::Objective::Energy => &self.total_energy,
        }
    }

    pub fn channel(&self, from: DeviceRole, to: DeviceRole) -> Option<&ChannelUsage<S>> {
        self.channels.iter().find(|c| c.from == from && c.to == to)
    }

    pub fn comm_latency(&self) -> S {
        self.channels.iter().map(|c| c.latency.clone()).sum()
    }

    pub fn comm_energy(&self) -> S {
        self.channels.iter().map(|c| c.energy.clone()).sum()
    }
}

fn zeros<S: Scalar>() -> [S; 3] {
    [S::zero(), S::zero(), S::zero()]
}

/// Evaluates both objectives and every budget at a full assignment.
/// `l_thr`, when given, is checked against the total latency.
pub fn evaluate<S: Scalar>(etfg: &Etfg<S>, a: &Assignment, l_thr: Option<&S>) -> Result<ObjectiveBreakdown<S>, MilpError> {
    let slots = a.slots(etfg)?;
    let mut comp_latency = zeros::<S>();
    let mut comp_energy = zeros::<S>();
    let mut device_energy = zeros::<S>();
    let mut memory = zeros::<S>();
    let mut storage = zeros::<S>();
    let mut node_latency = S::zero();
    let mut node_energy = S::zero();

    for (t, &s) in slots.iter().enumerate() {
        let n = &etfg.composite_nodes()[t][s];
        let k = n.device.index();
        node_latency += n.comp_latency.clone();
        node_energy += n.comp_energy.clone();
        comp_latency[k] += n.comp_latency.clone();
        comp_energy[k] += n.comp_energy.clone();
        device_energy[k] += n.comp_energy.clone();
        memory[k] += etfg.memory(n.task).clone();
        storage[k] += etfg.storage(n.task).clone();
    }

    let mut channel_keys: Vec<(DeviceRole, DeviceRole)> =
        etfg.system().channels.iter().map(|c| (c.from, c.to)).collect();
    channel_keys.sort();
    let mut channels: Vec<ChannelUsage<S>> = channel_keys
        .into_iter()
        .map(|(from, to)| ChannelUsage { from, to, latency: S::zero(), energy: S::zero() })
        .collect();

    let mut arc_latency = S::zero();
    let mut arc_energy = S::zero();
    for (ai, composite) in etfg.composite_arcs().iter().enumerate() {
        let arc = etfg.arc_at(ai, slots[composite.parent.index()], slots[composite.child.index()]);
        arc_latency += arc.comm_latency.clone();
        arc_energy += arc.comm_energy.clone();
        for h in &arc.hops {
            let u = channels
                .iter_mut()
                .find(|c| c.from == h.from && c.to == h.to)
                .expect("hop uses a system channel");
            u.latency += h.latency.clone();
            u.energy += h.tx_energy.clone() + h.rx_energy.clone();
        }
        for k in DeviceRole::ALL {
            device_energy[k.index()] += arc_energy_on(arc, k);
        }
    }

    let total_latency = node_latency + arc_latency;
    let total_energy = node_energy + arc_energy;
    let within = |usage: &S, b: &Option<S>| b.as_ref().map_or(true, |b| usage <= b);
    let check = |usage: &[S; 3], pick: &dyn Fn(DeviceRole) -> Option<S>| {
        DeviceRole::ALL.map(|k| within(&usage[k.index()], &pick(k)))
    };
    let memory_ok = check(&memory, &|k| etfg.budgets(k).memory.clone());
    let storage_ok = check(&storage, &|k| etfg.budgets(k).storage.clone());
    let energy_ok = check(&device_energy, &|k| etfg.budgets(k).energy.clone());
    let latency_ok = l_thr.map(|t| &total_latency <= t);

    Ok(ObjectiveBreakdown {
        total_latency,
        total_energy,
        comp_latency,
        comp_energy,
        channels,
        device_energy,
        memory,
        storage,
        memory_ok,
        storage_ok,
        energy_ok,
        latency_ok,
    })
}
