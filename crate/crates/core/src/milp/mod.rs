//! Binary integer linear program over an ETFG.
//!
//! Columns are all node variables in (task, device) order followed by all arc
//! variables in (task-graph arc, parent device, child device) order. Rows are
//! emitted as: assignment, out-degree, linking (three per candidate arc),
//! memory, storage and energy budgets for finite budgets, and the latency
//! threshold when minimizing energy.

mod evaluate;
mod lp;
mod mps;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::etfg::Etfg;
use crate::model::{DeviceRole, TaskId};
use crate::scalar::Scalar;

pub use evaluate::{evaluate, Assignment, ChannelUsage, ObjectiveBreakdown};
pub use lp::export_lp;
pub use mps::{export_mps, parse_mps, MpsError, MpsProblem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MilpError {
    #[error("latency threshold must be positive")]
    NonPositiveThreshold,
    #[error("device {0} has no finite energy budget")]
    UnboundedEnergyBudget(DeviceRole),
    #[error("assignment covers {got} tasks, graph has {expected}")]
    AssignmentLength { expected: usize, got: usize },
    #[error("task {0} is not allowed on device {1}")]
    NotAllowed(TaskId, DeviceRole),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Latency,
    Energy,
}

impl FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "latency" | "l" => Ok(Objective::Latency),
            "energy" | "e" => Ok(Objective::Energy),
            _ => Err(format!("unknown objective {s:?} (latency|energy)")),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::Latency => "latency",
            Objective::Energy => "energy",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Node { task: TaskId, device: DeviceRole },
    Arc { parent: TaskId, from: DeviceRole, child: TaskId, to: DeviceRole },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub kind: VarKind,
    pub column: usize,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn holds<S: Scalar>(self, lhs: &S, rhs: &S) -> bool {
        match self {
            Sense::Le => lhs <= rhs,
            Sense::Eq => lhs == rhs,
            Sense::Ge => lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowFamily {
    Assignment,
    OutDegree,
    /// arc <= parent node
    LinkParent,
    /// arc <= child node
    LinkChild,
    /// arc >= parent + child - 1
    LinkBoth,
    Memory,
    Storage,
    Energy,
    LatencyThreshold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow<S> {
    pub label: String,
    pub family: RowFamily,
    /// Sorted by column, no duplicates.
    pub coefficients: Vec<(usize, S)>,
    pub sense: Sense,
    pub rhs: S,
}

impl<S: Scalar> ConstraintRow<S> {
    pub fn activity(&self, x: &[u8]) -> S {
        self.coefficients.iter().filter(|(c, _)| x[*c] == 1).map(|(_, v)| v.clone()).sum()
    }

    pub fn satisfied_by(&self, x: &[u8]) -> bool {
        self.sense.holds(&self.activity(x), &self.rhs)
    }

    pub fn coefficient(&self, column: usize) -> Option<&S> {
        self.coefficients
            .binary_search_by_key(&column, |(c, _)| *c)
            .ok()
            .map(|i| &self.coefficients[i].1)
    }
}

/// Summary counts in both row conventions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelStats {
    pub variables: usize,
    pub node_variables: usize,
    pub arc_variables: usize,
    /// rows as exported (three linking rows per candidate arc)
    pub algebraic_rows: usize,
    /// one linking constraint per candidate arc
    pub logical_constraints: usize,
    /// `logical_constraints` plus the omitted out-degree rows of sink tasks
    pub logical_constraints_with_vacuous: usize,
    pub vacuous_outdegree_rows_omitted: usize,
    pub nonzeros: usize,
    pub objective_nonzeros: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BilpModel<S> {
    pub objective_kind: Objective,
    pub latency_threshold: Option<S>,
    pub variables: Vec<Variable>,
    /// Dense, one coefficient per column; the sense is minimize.
    pub objective: Vec<S>,
    pub rows: Vec<ConstraintRow<S>>,
    node_offsets: Vec<usize>,
    arc_offsets: Vec<usize>,
    vacuous_outdegree: usize,
}

fn var_node_name(task: TaskId, k: DeviceRole) -> String {
    format!("x{task}{k}")
}

fn var_arc_name(i: TaskId, k: DeviceRole, j: TaskId, l: DeviceRole) -> String {
    format!("x{i}{k}_{j}{l}")
}

/// Energy budget row of device `k`: computation on `k`, data sent and
/// received by `k`, and data relayed through `k`.
pub fn energy_budget_row<S: Scalar>(etfg: &Etfg<S>, k: DeviceRole) -> Result<ConstraintRow<S>, MilpError> {
    let rhs = etfg.budgets(k).energy.clone().ok_or(MilpError::UnboundedEnergyBudget(k))?;
    let layout = Layout::of(etfg);
    Ok(ConstraintRow {
        label: format!("energy_{k}"),
        family: RowFamily::Energy,
        coefficients: energy_coefficients(etfg, &layout, k),
        sense: Sense::Le,
        rhs,
    })
}

/// Per-device energy charged on candidate arc `arc`.
pub(crate) fn arc_energy_on<S: Scalar>(arc: &crate::etfg::EtfgArc<S>, k: DeviceRole) -> S {
    let mut c = S::zero();
    for h in &arc.hops {
        if h.from == k {
            c += h.tx_energy.clone();
        }
        if h.to == k {
            c += h.rx_energy.clone();
        }
    }
    c
}

fn energy_coefficients<S: Scalar>(etfg: &Etfg<S>, layout: &Layout, k: DeviceRole) -> Vec<(usize, S)> {
    let mut coefs = Vec::new();
    for (t, composite) in etfg.composite_nodes().iter().enumerate() {
        for (s, n) in composite.iter().enumerate() {
            if n.device == k && !n.comp_energy.is_zero() {
                coefs.push((layout.node[t] + s, n.comp_energy.clone()));
            }
        }
    }
    for (a, composite) in etfg.composite_arcs().iter().enumerate() {
        for (x, arc) in composite.arcs.iter().enumerate() {
            let c = arc_energy_on(arc, k);
            if !c.is_zero() {
                coefs.push((layout.arc[a] + x, c));
            }
        }
    }
    coefs
}

struct Layout {
    node: Vec<usize>,
    arc: Vec<usize>,
}

impl Layout {
    fn of<S: Scalar>(etfg: &Etfg<S>) -> Self {
        let mut next = 0;
        let node = etfg
            .composite_nodes()
            .iter()
            .map(|c| {
                let o = next;
                next += c.len();
                o
            })
            .collect();
        let arc = etfg
            .composite_arcs()
            .iter()
            .map(|c| {
                let o = next;
                next += c.arcs.len();
                o
            })
            .collect();
        Layout { node, arc }
    }
}

fn one<S: Scalar>() -> S {
    S::one()
}

fn neg_one<S: Scalar>() -> S {
    S::zero() - S::one()
}

/// Builds the model for `objective`. `l_thr` is only used with the energy
/// objective.
pub fn build_model<S: Scalar>(etfg: &Etfg<S>, objective: Objective, l_thr: Option<S>) -> Result<BilpModel<S>, MilpError> {
    let latency_threshold = match (objective, l_thr) {
        (Objective::Energy, Some(t)) => {
            if t <= S::zero() {
                return Err(MilpError::NonPositiveThreshold);
            }
            Some(t)
        }
        _ => None,
    };
    let layout = Layout::of(etfg);

    let mut variables = Vec::with_capacity(etfg.node_count() + etfg.arc_count());
    let mut obj = Vec::with_capacity(variables.capacity());
    let mut lat = Vec::with_capacity(variables.capacity());
    for n in etfg.composite_nodes().iter().flatten() {
        variables.push(Variable {
            kind: VarKind::Node { task: n.task, device: n.device },
            column: variables.len(),
            name: var_node_name(n.task, n.device),
        });
        lat.push(n.comp_latency.clone());
        obj.push(match objective {
            Objective::Latency => n.comp_latency.clone(),
            Objective::Energy => n.comp_energy.clone(),
        });
    }
    for a in etfg.composite_arcs().iter().flat_map(|c| &c.arcs) {
        variables.push(Variable {
            kind: VarKind::Arc { parent: a.parent, from: a.from, child: a.child, to: a.to },
            column: variables.len(),
            name: var_arc_name(a.parent, a.from, a.child, a.to),
        });
        lat.push(a.comm_latency.clone());
        obj.push(match objective {
            Objective::Latency => a.comm_latency.clone(),
            Objective::Energy => a.comm_energy.clone(),
        });
    }

    let mut rows = Vec::new();
    for (t, composite) in etfg.composite_nodes().iter().enumerate() {
        rows.push(ConstraintRow {
            label: format!("assign_{}", TaskId::from_index(t)),
            family: RowFamily::Assignment,
            coefficients: (0..composite.len()).map(|s| (layout.node[t] + s, one())).collect(),
            sense: Sense::Eq,
            rhs: one(),
        });
    }

    let nc = etfg.graph().out_degrees();
    let mut vacuous = 0;
    for (t, &children) in nc.iter().enumerate() {
        if children == 0 {
            vacuous += 1;
            continue;
        }
        let id = TaskId::from_index(t);
        let mut coefficients = Vec::new();
        for (a, composite) in etfg.composite_arcs().iter().enumerate() {
            if composite.parent == id {
                coefficients.extend((0..composite.arcs.len()).map(|x| (layout.arc[a] + x, one())));
            }
        }
        rows.push(ConstraintRow {
            label: format!("outdeg_{id}"),
            family: RowFamily::OutDegree,
            coefficients,
            sense: Sense::Eq,
            rhs: S::from_f64(children as f64),
        });
    }

    for (a, composite) in etfg.composite_arcs().iter().enumerate() {
        let (pi, ci) = (composite.parent.index(), composite.child.index());
        let width = etfg.composite_nodes()[ci].len();
        for (x, arc) in composite.arcs.iter().enumerate() {
            let col = layout.arc[a] + x;
            let parent_col = layout.node[pi] + x / width;
            let child_col = layout.node[ci] + x % width;
            let suffix = format!("{}{}_{}{}", arc.parent, arc.from, arc.child, arc.to);
            rows.push(ConstraintRow {
                label: format!("link1_{suffix}"),
                family: RowFamily::LinkParent,
                coefficients: sorted(vec![(col, one()), (parent_col, neg_one())]),
                sense: Sense::Le,
                rhs: S::zero(),
            });
            rows.push(ConstraintRow {
                label: format!("link2_{suffix}"),
                family: RowFamily::LinkChild,
                coefficients: sorted(vec![(col, one()), (child_col, neg_one())]),
                sense: Sense::Le,
                rhs: S::zero(),
            });
            rows.push(ConstraintRow {
                label: format!("link3_{suffix}"),
                family: RowFamily::LinkBoth,
                coefficients: sorted(vec![(col, one()), (parent_col, neg_one()), (child_col, neg_one())]),
                sense: Sense::Ge,
                rhs: neg_one(),
            });
        }
    }

    let node_resource_row = |k: DeviceRole, per_task: &dyn Fn(TaskId) -> S| {
        let mut coefficients = Vec::new();
        for (t, composite) in etfg.composite_nodes().iter().enumerate() {
            for (s, n) in composite.iter().enumerate() {
                let v = per_task(n.task);
                if n.device == k && !v.is_zero() {
                    coefficients.push((layout.node[t] + s, v));
                }
            }
        }
        coefficients
    };
    for k in DeviceRole::ALL {
        if let Some(b) = &etfg.budgets(k).memory {
            rows.push(ConstraintRow {
                label: format!("mem_{k}"),
                family: RowFamily::Memory,
                coefficients: node_resource_row(k, &|t| etfg.memory(t).clone()),
                sense: Sense::Le,
                rhs: b.clone(),
            });
        }
    }
    for k in DeviceRole::ALL {
        if let Some(b) = &etfg.budgets(k).storage {
            rows.push(ConstraintRow {
                label: format!("sto_{k}"),
                family: RowFamily::Storage,
                coefficients: node_resource_row(k, &|t| etfg.storage(t).clone()),
                sense: Sense::Le,
                rhs: b.clone(),
            });
        }
    }
    for k in DeviceRole::ALL {
        if let Some(b) = &etfg.budgets(k).energy {
            rows.push(ConstraintRow {
                label: format!("energy_{k}"),
                family: RowFamily::Energy,
                coefficients: energy_coefficients(etfg, &layout, k),
                sense: Sense::Le,
                rhs: b.clone(),
            });
        }
    }
    if let Some(t) = &latency_threshold {
        rows.push(ConstraintRow {
            label: "lthr".to_string(),
            family: RowFamily::LatencyThreshold,
            coefficients: lat.into_iter().enumerate().filter(|(_, v)| !v.is_zero()).collect(),
            sense: Sense::Le,
            rhs: t.clone(),
        });
    }

    Ok(BilpModel {
        objective_kind: objective,
        latency_threshold,
        variables,
        objective: obj,
        rows,
        node_offsets: layout.node,
        arc_offsets: layout.arc,
        vacuous_outdegree: vacuous,
    })
}

fn sorted<S>(mut v: Vec<(usize, S)>) -> Vec<(usize, S)> {
    v.sort_by_key(|(c, _)| *c);
    v
}

impl<S: Scalar> BilpModel<S> {
    pub fn column_count(&self) -> usize {
        self.variables.len()
    }

    pub fn node_column(&self, task: TaskId, slot: usize) -> usize {
        self.node_offsets[task.index()] + slot
    }

    /// 0/1 vector induced by a full assignment: the chosen node of every
    /// task and every arc whose two endpoints are chosen.
    pub fn point(&self, etfg: &Etfg<S>, a: &Assignment) -> Result<Vec<u8>, MilpError> {
        let slots = a.slots(etfg)?;
        let mut x = vec![0u8; self.variables.len()];
        for (t, s) in slots.iter().enumerate() {
            x[self.node_offsets[t] + s] = 1;
        }
        for (ai, composite) in etfg.composite_arcs().iter().enumerate() {
            let width = etfg.composite_nodes()[composite.child.index()].len();
            let x_idx = slots[composite.parent.index()] * width + slots[composite.child.index()];
            x[self.arc_offsets[ai] + x_idx] = 1;
        }
        Ok(x)
    }

    pub fn objective_value(&self, x: &[u8]) -> S {
        self.objective.iter().zip(x).filter(|(_, &b)| b == 1).map(|(v, _)| v.clone()).sum()
    }

    /// Labels of rows violated by `x`.
    pub fn violated_rows(&self, x: &[u8]) -> Vec<&str> {
        self.rows.iter().filter(|r| !r.satisfied_by(x)).map(|r| r.label.as_str()).collect()
    }

    pub fn row(&self, label: &str) -> Option<&ConstraintRow<S>> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn column_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn stats(&self) -> ModelStats {
        let count = |f: RowFamily| self.rows.iter().filter(|r| r.family == f).count();
        let arc_variables = self.variables.iter().filter(|v| matches!(v.kind, VarKind::Arc { .. })).count();
        let algebraic_rows = self.rows.len();
        let link_rows = count(RowFamily::LinkParent) + count(RowFamily::LinkChild) + count(RowFamily::LinkBoth);
        let logical = algebraic_rows - link_rows + arc_variables;
        ModelStats {
            variables: self.variables.len(),
            node_variables: self.variables.len() - arc_variables,
            arc_variables,
            algebraic_rows,
            logical_constraints: logical,
            logical_constraints_with_vacuous: logical + self.vacuous_outdegree,
            vacuous_outdegree_rows_omitted: self.vacuous_outdegree,
            nonzeros: self.rows.iter().map(|r| r.coefficients.len()).sum(),
            objective_nonzeros: self.objective.iter().filter(|v| !v.is_zero()).count(),
        }
    }
}

#[cfg(test)]
mod tests;
