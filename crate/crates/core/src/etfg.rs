//! Extended task flow graph: one candidate node per (task, allowed device)
//! and one candidate arc per (parent device, child device) pair, each carrying
//! its latency and energy coefficients.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::model::{DeviceRole, ModelError, Route, SystemModel, TaskGraph, TaskId};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Task `task` placed on `device`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateNode<S> {
    pub task: TaskId,
    pub device: DeviceRole,
    /// seconds
    pub comp_latency: S,
    /// watts
    pub comp_power: S,
    /// joules, `comp_power * comp_latency`
    pub comp_energy: S,
}

/// One channel traversal of an arc's data, with the energy charged to the
/// sending and receiving device of that hop.
#[derive(Debug, Clone, PartialEq)]
pub struct Hop<S> {
    pub from: DeviceRole,
    pub to: DeviceRole,
    pub latency: S,
    pub tx_energy: S,
    pub rx_energy: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtfgArc<S> {
    pub parent: TaskId,
    pub child: TaskId,
    /// device of the parent task
    pub from: DeviceRole,
    /// device of the child task
    pub to: DeviceRole,
    pub comm_latency: S,
    pub comm_energy: S,
    /// intermediate device when the two devices have no direct channel
    pub relay: Option<DeviceRole>,
    pub hops: Vec<Hop<S>>,
}

impl<S> EtfgArc<S> {
    pub fn indirect(&self) -> bool {
        self.relay.is_some()
    }
}

/// All candidate arcs generated from one task-graph arc, ordered by
/// (parent device, child device) in canonical device order.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeArc<S> {
    pub parent: TaskId,
    pub child: TaskId,
    pub arcs: Vec<EtfgArc<S>>,
}

/// Budgets converted to the scalar type; `None` is unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarBudgets<S> {
    pub memory: Option<S>,
    pub storage: Option<S>,
    pub energy: Option<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Etfg<S> {
    graph: TaskGraph,
    system: SystemModel,
    nodes: Vec<Vec<CandidateNode<S>>>,
    arcs: Vec<CompositeArc<S>>,
    memory: Vec<S>,
    storage: Vec<S>,
    budgets: [ScalarBudgets<S>; 3],
}

/// Indirect-communication indicator for an ordered device pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Indicator {
    pub indirect: bool,
    pub via: Option<DeviceRole>,
}

/// `(1, m)` when `k -> l` has no direct channel and is relayed through `m`;
/// `(0, none)` otherwise, including `k == l`.
pub fn indicator(k: DeviceRole, l: DeviceRole, sys: &SystemModel) -> Indicator {
    match sys.route(k, l) {
        Ok(Route::Relayed { via, .. }) => Indicator { indirect: true, via: Some(via) },
        _ => Indicator { indirect: false, via: None },
    }
}

/// Time to move `d` bits from `k` to `l`.
pub fn comm_latency<S: Scalar>(d: &S, k: DeviceRole, l: DeviceRole, sys: &SystemModel) -> Result<S, ModelError> {
    Ok(match sys.route(k, l)? {
        Route::Local => S::zero(),
        Route::Direct(c) => d.clone() / S::from_f64(c.bandwidth),
        Route::Relayed { first, second, .. } => {
            d.clone() * (S::one() / S::from_f64(first.bandwidth) + S::one() / S::from_f64(second.bandwidth))
        }
    })
}

/// Energy to move `d` bits from `k` to `l`, both ends of every hop included.
pub fn comm_energy<S: Scalar>(d: &S, k: DeviceRole, l: DeviceRole, sys: &SystemModel) -> Result<S, ModelError> {
    Ok(match sys.route(k, l)? {
        Route::Local => S::zero(),
        Route::Direct(c) => d.clone() * (S::from_f64(c.tx_energy) + S::from_f64(c.rx_energy)),
        Route::Relayed { first, second, .. } => {
            d.clone()
                * (S::from_f64(first.tx_energy)
                    + S::from_f64(first.rx_energy)
                    + S::from_f64(second.tx_energy)
                    + S::from_f64(second.rx_energy))
        }
    })
}

pub fn comp_energy<S: Scalar>(power: &S, latency: &S) -> S {
    power.clone() * latency.clone()
}

fn budget<S: Scalar>(b: crate::model::Budget) -> Option<S> {
    b.finite().map(S::from_f64)
}

/// Expands a validated task graph into its ETFG under `sys`.
pub fn transform<S: Scalar>(g: &TaskGraph, sys: &SystemModel) -> Result<Etfg<S>, TransformError> {
    g.validate().into_result()?;

    let mut nodes = Vec::with_capacity(g.len());
    for t in &g.tasks {
        let mut composite = Vec::with_capacity(t.allowed.len());
        for k in t.allowed.iter() {
            // presence is guaranteed by validation
            let comp_latency = S::from_f64(t.latency[&k]);
            let comp_power = S::from_f64(t.power[&k]);
            let comp_energy = comp_energy(&comp_power, &comp_latency);
            composite.push(CandidateNode { task: t.id, device: k, comp_latency, comp_power, comp_energy });
        }
        nodes.push(composite);
    }

    let mut tfg_arcs = g.arcs.clone();
    tfg_arcs.sort();
    let mut arcs = Vec::with_capacity(tfg_arcs.len());
    for (i, j) in tfg_arcs {
        let (ti, tj) = (&g.tasks[i.index()], &g.tasks[j.index()]);
        let d = S::from_f64(ti.output_data);
        let mut composite = Vec::with_capacity(ti.allowed.len() * tj.allowed.len());
        for k in ti.allowed.iter() {
            for l in tj.allowed.iter() {
                let route = sys.route(k, l)?;
                let hops = route
                    .hops()
                    .into_iter()
                    .map(|c| Hop {
                        from: c.from,
                        to: c.to,
                        latency: d.clone() / S::from_f64(c.bandwidth),
                        tx_energy: d.clone() * S::from_f64(c.tx_energy),
                        rx_energy: d.clone() * S::from_f64(c.rx_energy),
                    })
                    .collect();
                let relay = match route {
                    Route::Relayed { via, .. } => Some(via),
                    _ => None,
                };
                composite.push(EtfgArc {
                    parent: i,
                    child: j,
                    from: k,
                    to: l,
                    comm_latency: comm_latency(&d, k, l, sys)?,
                    comm_energy: comm_energy(&d, k, l, sys)?,
                    relay,
                    hops,
                });
            }
        }
        arcs.push(CompositeArc { parent: i, child: j, arcs: composite });
    }

    let budgets = sys.devices.clone().map(|d| ScalarBudgets {
        memory: budget(d.memory_budget),
        storage: budget(d.storage_budget),
        energy: budget(d.energy_budget),
    });

    Ok(Etfg {
        memory: g.tasks.iter().map(|t| S::from_f64(t.memory)).collect(),
        storage: g.tasks.iter().map(|t| S::from_f64(t.storage)).collect(),
        graph: g.clone(),
        system: sys.clone(),
        nodes,
        arcs,
        budgets,
    })
}

impl<S: Scalar> Etfg<S> {
    pub fn graph(&self) -> &TaskGraph {
        &self.graph
    }

    pub fn system(&self) -> &SystemModel {
        &self.system
    }

    pub fn task_count(&self) -> usize {
        self.nodes.len()
    }

    /// Composite nodes indexed by dense task position.
    pub fn composite_nodes(&self) -> &[Vec<CandidateNode<S>>] {
        &self.nodes
    }

    /// Composite arcs sorted by (parent, child).
    pub fn composite_arcs(&self) -> &[CompositeArc<S>] {
        &self.arcs
    }

    pub fn node_count(&self) -> usize {
        self.nodes.iter().map(Vec::len).sum()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.iter().map(|a| a.arcs.len()).sum()
    }

    pub fn candidates(&self, task: TaskId) -> &[CandidateNode<S>] {
        &self.nodes[task.index()]
    }

    /// Position of `device` within the composite node of `task`.
    pub fn slot(&self, task: TaskId, device: DeviceRole) -> Option<usize> {
        self.nodes[task.index()].iter().position(|n| n.device == device)
    }

    pub fn node(&self, task: TaskId, device: DeviceRole) -> Option<&CandidateNode<S>> {
        self.slot(task, device).map(|s| &self.nodes[task.index()][s])
    }

    /// Candidate arc of composite arc `a` for parent slot `si`, child slot `sj`.
    pub fn arc_at(&self, a: usize, si: usize, sj: usize) -> &EtfgArc<S> {
        let ca = &self.arcs[a];
        let width = self.nodes[ca.child.index()].len();
        &ca.arcs[si * width + sj]
    }

    pub fn memory(&self, task: TaskId) -> &S {
        &self.memory[task.index()]
    }

    pub fn storage(&self, task: TaskId) -> &S {
        &self.storage[task.index()]
    }

    pub fn budgets(&self, device: DeviceRole) -> &ScalarBudgets<S> {
        &self.budgets[device.index()]
    }

    /// True when any device has a finite memory, storage or energy budget.
    pub fn has_finite_budgets(&self) -> bool {
        self.budgets.iter().any(|b| b.memory.is_some() || b.storage.is_some() || b.energy.is_some())
    }

    /// Same graph, coefficients mapped by `f` (used for scaling checks).
    pub fn map_latencies(&self, f: impl Fn(&S) -> S) -> Etfg<S> {
        let mut e = self.clone();
        for n in e.nodes.iter_mut().flatten() {
            n.comp_latency = f(&n.comp_latency);
        }
        for a in e.arcs.iter_mut().flat_map(|c| c.arcs.iter_mut()) {
            a.comm_latency = f(&a.comm_latency);
            for h in &mut a.hops {
                h.latency = f(&h.latency);
            }
        }
        e
    }

    pub fn to_json(&self) -> String {
        let view = EtfgJson {
            schema: crate::schema::SCHEMA_VERSION,
            system: self.system.name.clone(),
            node_count: self.node_count(),
            arc_count: self.arc_count(),
            nodes: self
                .nodes
                .iter()
                .flatten()
                .map(|n| NodeJson {
                    id: node_name(n.task, n.device),
                    task: n.task.0,
                    device: n.device,
                    latency_s: n.comp_latency.to_f64(),
                    power_w: n.comp_power.to_f64(),
                    energy_j: n.comp_energy.to_f64(),
                })
                .collect(),
            arcs: self
                .arcs
                .iter()
                .flat_map(|c| &c.arcs)
                .map(|a| ArcJson {
                    from: node_name(a.parent, a.from),
                    to: node_name(a.child, a.to),
                    latency_s: a.comm_latency.to_f64(),
                    energy_j: a.comm_energy.to_f64(),
                    indirect: u8::from(a.indirect()),
                    via: a.relay,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&view).expect("serializable")
    }

    /// Graphviz rendering; indirect arcs are dashed orange.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph etfg {\n  rankdir=TB;\n  node [shape=circle];\n");
        for (i, composite) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "  subgraph cluster_{} {{", i + 1);
            let _ = writeln!(s, "    label=\"N{}'\";\n    style=rounded;", i + 1);
            for n in composite {
                let _ = writeln!(
                    s,
                    "    \"{}\" [label=\"N{}{}\\nL={:.6} E={:.6}\"];",
                    node_name(n.task, n.device),
                    n.task,
                    n.device,
                    n.comp_latency.to_f64(),
                    n.comp_energy.to_f64()
                );
            }
            s.push_str("  }\n");
        }
        for a in self.arcs.iter().flat_map(|c| &c.arcs) {
            let style = if a.indirect() { ",style=dashed,color=orange" } else { "" };
            let _ = writeln!(
                s,
                "  \"{}\" -> \"{}\" [label=\"CL={:.6} CE={:.6}\"{}];",
                node_name(a.parent, a.from),
                node_name(a.child, a.to),
                a.comm_latency.to_f64(),
                a.comm_energy.to_f64(),
                style
            );
        }
        s.push_str("}\n");
        s
    }
}

pub fn node_name(task: TaskId, device: DeviceRole) -> String {
    format!("{task}{device}")
}

#[derive(Serialize)]
struct NodeJson {
    id: String,
    task: u32,
    device: DeviceRole,
    latency_s: f64,
    power_w: f64,
    energy_j: f64,
}

#[derive(Serialize)]
struct ArcJson {
    from: String,
    to: String,
    latency_s: f64,
    energy_j: f64,
    indirect: u8,
    via: Option<DeviceRole>,
}

#[derive(Serialize)]
struct EtfgJson {
    schema: u32,
    system: String,
    node_count: usize,
    arc_count: usize,
    nodes: Vec<NodeJson>,
    arcs: Vec<ArcJson>,
}
