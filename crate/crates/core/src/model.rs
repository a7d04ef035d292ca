//! Application task graph and the edge/hub/cloud system model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One of the three computational devices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DeviceRole {
    #[serde(rename = "e")]
    Edge,
    #[serde(rename = "h")]
    Hub,
    #[serde(rename = "c")]
    Cloud,
}

impl DeviceRole {
    /// Canonical order `e < h < c`.
    pub const ALL: [DeviceRole; 3] = [DeviceRole::Edge, DeviceRole::Hub, DeviceRole::Cloud];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> DeviceRole {
        DeviceRole::ALL[i]
    }

    pub fn letter(self) -> char {
        match self {
            DeviceRole::Edge => 'e',
            DeviceRole::Hub => 'h',
            DeviceRole::Cloud => 'c',
        }
    }

    pub fn parse(s: &str) -> Option<DeviceRole> {
        match s {
            "e" | "edge" => Some(DeviceRole::Edge),
            "h" | "hub" => Some(DeviceRole::Hub),
            "c" | "cloud" => Some(DeviceRole::Cloud),
            _ => None,
        }
    }
}

impl fmt::Display for DeviceRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Subset of device roles, iterated in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct DeviceSet(u8);

impl DeviceSet {
    pub const EMPTY: DeviceSet = DeviceSet(0);
    pub const ALL: DeviceSet = DeviceSet(0b111);

    pub fn only(role: DeviceRole) -> Self {
        DeviceSet(1 << role.index())
    }

    pub fn contains(self, role: DeviceRole) -> bool {
        self.0 & (1 << role.index()) != 0
    }

    pub fn insert(&mut self, role: DeviceRole) {
        self.0 |= 1 << role.index();
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = DeviceRole> {
        DeviceRole::ALL.into_iter().filter(move |r| self.contains(*r))
    }

    /// The single device of a fixed-allocation task.
    pub fn single(self) -> Option<DeviceRole> {
        if self.len() == 1 {
            self.iter().next()
        } else {
            None
        }
    }
}

impl FromIterator<DeviceRole> for DeviceSet {
    fn from_iter<I: IntoIterator<Item = DeviceRole>>(iter: I) -> Self {
        let mut s = DeviceSet::EMPTY;
        for r in iter {
            s.insert(r);
        }
        s
    }
}

impl Serialize for DeviceSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for DeviceSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<DeviceRole>::deserialize(d)?;
        Ok(v.into_iter().collect())
    }
}

/// 1-based task identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub u32);

impl TaskId {
    /// Position in a validated (dense) graph.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(i: usize) -> TaskId {
        TaskId(i as u32 + 1)
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Device-independent requirements plus per-device profile of one task.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: TaskId,
    /// bytes
    pub memory: f64,
    /// bytes
    pub storage: f64,
    /// bits
    pub output_data: f64,
    pub allowed: DeviceSet,
    /// seconds, per allowed device
    pub latency: BTreeMap<DeviceRole, f64>,
    /// watts, per allowed device
    pub power: BTreeMap<DeviceRole, f64>,
}

impl Task {
    /// A task allowed everywhere with no profile yet.
    pub fn unprofiled(id: u32) -> Self {
        Task {
            id: TaskId(id),
            memory: 0.0,
            storage: 0.0,
            output_data: 0.0,
            allowed: DeviceSet::ALL,
            latency: BTreeMap::new(),
            power: BTreeMap::new(),
        }
    }

    pub fn is_fixed(&self) -> bool {
        self.allowed.len() == 1
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TaskGraph {
    pub tasks: Vec<Task>,
    pub arcs: Vec<(TaskId, TaskId)>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown task {0}")]
    UnknownTask(TaskId),
    #[error("task graph is invalid:\n{0}")]
    Invalid(ValidationReport),
    #[error("no channel and no relay between {0} and {1}")]
    NoRoute(DeviceRole, DeviceRole),
    #[error("system model is invalid: {0}")]
    InvalidSystem(String),
}

/// One violated graph invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Cycle(Vec<TaskId>),
    DanglingArc(TaskId, TaskId),
    SelfArc(TaskId),
    DuplicateArc(TaskId, TaskId),
    DuplicateTaskId(TaskId),
    NonDenseIds,
    EmptyAllowedSet(TaskId),
    MissingLatency(TaskId, DeviceRole),
    MissingPower(TaskId, DeviceRole),
    ProfileOutsideAllowed(TaskId, DeviceRole),
    NegativeOrNonFinite(TaskId, &'static str),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Cycle(ids) => {
                let path: Vec<String> = ids.iter().map(|t| t.to_string()).collect();
                write!(f, "cycle through tasks {}", path.join(" -> "))
            }
            Violation::DanglingArc(a, b) => write!(f, "dangling arc {a} -> {b}"),
            Violation::SelfArc(a) => write!(f, "self arc on task {a}"),
            Violation::DuplicateArc(a, b) => write!(f, "duplicate arc {a} -> {b}"),
            Violation::DuplicateTaskId(a) => write!(f, "duplicate task id {a}"),
            Violation::NonDenseIds => write!(f, "task ids are not dense 1..n"),
            Violation::EmptyAllowedSet(a) => write!(f, "task {a} has an empty allowed-device set"),
            Violation::MissingLatency(a, k) => write!(f, "task {a}: missing latency profile for {k}"),
            Violation::MissingPower(a, k) => write!(f, "task {a}: missing power profile for {k}"),
            Violation::ProfileOutsideAllowed(a, k) => {
                write!(f, "task {a}: profile entry for {k} which is not an allowed device")
            }
            Violation::NegativeOrNonFinite(a, what) => {
                write!(f, "task {a}: {what} must be finite and non-negative")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<(), ModelError> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(ModelError::Invalid(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Checks every task-graph invariant and lists all violations.
pub fn validate_task_graph(g: &TaskGraph) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen = BTreeSet::new();
    for t in &g.tasks {
        if !seen.insert(t.id) {
            violations.push(Violation::DuplicateTaskId(t.id));
        }
    }
    let n = g.tasks.len();
    let dense = g.tasks.iter().enumerate().all(|(i, t)| t.id == TaskId::from_index(i));
    if !dense && seen.len() == n {
        violations.push(Violation::NonDenseIds);
    }

    for t in &g.tasks {
        for (what, v) in [("memory", t.memory), ("storage", t.storage), ("output data", t.output_data)] {
            if !(v.is_finite() && v >= 0.0) {
                violations.push(Violation::NegativeOrNonFinite(t.id, what));
            }
        }
        if t.allowed.is_empty() {
            violations.push(Violation::EmptyAllowedSet(t.id));
        }
        for k in t.allowed.iter() {
            match t.latency.get(&k) {
                None => violations.push(Violation::MissingLatency(t.id, k)),
                Some(v) if !(v.is_finite() && *v >= 0.0) => {
                    violations.push(Violation::NegativeOrNonFinite(t.id, "latency"))
                }
                _ => {}
            }
            match t.power.get(&k) {
                None => violations.push(Violation::MissingPower(t.id, k)),
                Some(v) if !(v.is_finite() && *v >= 0.0) => {
                    violations.push(Violation::NegativeOrNonFinite(t.id, "power"))
                }
                _ => {}
            }
        }
        for k in t.latency.keys().chain(t.power.keys()) {
            if !t.allowed.contains(*k) {
                violations.push(Violation::ProfileOutsideAllowed(t.id, *k));
            }
        }
    }

    let mut arc_set = BTreeSet::new();
    for &(a, b) in &g.arcs {
        if a == b {
            violations.push(Violation::SelfArc(a));
        } else if !seen.contains(&a) || !seen.contains(&b) {
            violations.push(Violation::DanglingArc(a, b));
        } else if !arc_set.insert((a, b)) {
            violations.push(Violation::DuplicateArc(a, b));
        }
    }

    if let Some(cycle) = find_cycle(&seen, &arc_set) {
        violations.push(Violation::Cycle(cycle));
    }
    violations.dedup();
    ValidationReport { violations }
}

fn find_cycle(nodes: &BTreeSet<TaskId>, arcs: &BTreeSet<(TaskId, TaskId)>) -> Option<Vec<TaskId>> {
    let mut succ: BTreeMap<TaskId, Vec<TaskId>> = BTreeMap::new();
    for &(a, b) in arcs {
        succ.entry(a).or_default().push(b);
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state: BTreeMap<TaskId, u8> = nodes.iter().map(|&n| (n, 0)).collect();
    for &start in nodes {
        if state[&start] != 0 {
            continue;
        }
        let mut stack: Vec<(TaskId, usize)> = vec![(start, 0)];
        state.insert(start, 1);
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            let children = succ.get(&node).map(|v| v.as_slice()).unwrap_or(&[]);
            if *next < children.len() {
                let child = children[*next];
                *next += 1;
                match state[&child] {
                    0 => {
                        state.insert(child, 1);
                        stack.push((child, 0));
                    }
                    1 => {
                        let pos = stack.iter().position(|(n, _)| *n == child).unwrap();
                        let mut cyc: Vec<TaskId> = stack[pos..].iter().map(|(n, _)| *n).collect();
                        cyc.push(child);
                        return Some(cyc);
                    }
                    _ => {}
                }
            } else {
                state.insert(node, 2);
                stack.pop();
            }
        }
    }
    None
}

impl TaskGraph {
    pub fn new(tasks: Vec<Task>, arcs: Vec<(TaskId, TaskId)>) -> Self {
        TaskGraph { tasks, arcs }
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn task(&self, id: TaskId) -> Result<&Task, ModelError> {
        self.tasks.iter().find(|t| t.id == id).ok_or(ModelError::UnknownTask(id))
    }

    /// Number of immediate successors of `id`.
    pub fn out_degree(&self, id: TaskId) -> Result<usize, ModelError> {
        self.task(id)?;
        Ok(self.arcs.iter().filter(|(a, _)| *a == id).count())
    }

    pub fn in_degree(&self, id: TaskId) -> Result<usize, ModelError> {
        self.task(id)?;
        Ok(self.arcs.iter().filter(|(_, b)| *b == id).count())
    }

    /// Out-degrees indexed by dense task position.
    pub fn out_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.tasks.len()];
        for (a, _) in &self.arcs {
            d[a.index()] += 1;
        }
        d
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.tasks.len()];
        for (_, b) in &self.arcs {
            d[b.index()] += 1;
        }
        d
    }

    /// Kahn's algorithm, smallest ready id first. `None` if the graph has a
    /// cycle. Requires dense ids.
    pub fn topological_order(&self) -> Option<Vec<TaskId>> {
        let n = self.tasks.len();
        let mut indeg = vec![0usize; n];
        let mut succ = vec![Vec::new(); n];
        for &(a, b) in &self.arcs {
            if a.index() >= n || b.index() >= n {
                return None;
            }
            succ[a.index()].push(b.index());
            indeg[b.index()] += 1;
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(TaskId::from_index(i));
            for &j in &succ[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    ready.insert(j);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn validate(&self) -> ValidationReport {
        validate_task_graph(self)
    }
}

/// A resource budget; unbounded budgets produce no constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Finite(f64),
    Unbounded,
}

impl Budget {
    pub fn finite(self) -> Option<f64> {
        match self {
            Budget::Finite(v) => Some(v),
            Budget::Unbounded => None,
        }
    }

    pub fn allows(self, usage: f64) -> bool {
        match self {
            Budget::Finite(v) => usage <= v,
            Budget::Unbounded => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    pub role: DeviceRole,
    pub name: String,
    pub processor: String,
    /// bytes
    pub memory_budget: Budget,
    /// bytes
    pub storage_budget: Budget,
    /// joules
    pub energy_budget: Budget,
    /// watts
    pub idle_power: f64,
    /// watts
    pub max_power: f64,
}

/// Directional communication channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub from: DeviceRole,
    pub to: DeviceRole,
    /// bits/second
    pub bandwidth: f64,
    /// joules/bit
    pub tx_energy: f64,
    /// joules/bit
    pub rx_energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Relay {
    pub from: DeviceRole,
    pub to: DeviceRole,
    pub via: DeviceRole,
}

/// How data travels from one device to another.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Route {
    Local,
    Direct(Channel),
    Relayed { via: DeviceRole, first: Channel, second: Channel },
}

impl Route {
    /// Channels traversed in order.
    pub fn hops(&self) -> Vec<Channel> {
        match *self {
            Route::Local => vec![],
            Route::Direct(c) => vec![c],
            Route::Relayed { first, second, .. } => vec![first, second],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    pub name: String,
    /// Indexed by `DeviceRole::index`.
    pub devices: [Device; 3],
    pub channels: Vec<Channel>,
    pub relays: Vec<Relay>,
}

impl SystemModel {
    pub fn device(&self, role: DeviceRole) -> &Device {
        &self.devices[role.index()]
    }

    pub fn channel(&self, from: DeviceRole, to: DeviceRole) -> Option<&Channel> {
        self.channels.iter().find(|c| c.from == from && c.to == to)
    }

    pub fn route(&self, from: DeviceRole, to: DeviceRole) -> Result<Route, ModelError> {
        if from == to {
            return Ok(Route::Local);
        }
        if let Some(c) = self.channel(from, to) {
            return Ok(Route::Direct(*c));
        }
        let relay = self
            .relays
            .iter()
            .find(|r| r.from == from && r.to == to)
            .ok_or(ModelError::NoRoute(from, to))?;
        let first = self.channel(from, relay.via).ok_or(ModelError::NoRoute(from, to))?;
        let second = self.channel(relay.via, to).ok_or(ModelError::NoRoute(from, to))?;
        Ok(Route::Relayed { via: relay.via, first: *first, second: *second })
    }

    /// Replaces the channel parameters, keeping devices and relays.
    pub fn with_channels(&self, channels: Vec<Channel>) -> SystemModel {
        SystemModel { channels, ..self.clone() }
    }

    /// Device and topology invariants.
    pub fn check(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidSystem(m));
        for (i, d) in self.devices.iter().enumerate() {
            if d.role.index() != i {
                return bad(format!("device slot {i} holds role {}", d.role));
            }
            if !(d.idle_power >= 0.0 && d.idle_power < d.max_power && d.max_power.is_finite()) {
                return bad(format!("device {}: need 0 <= idle power < max power", d.role));
            }
            for b in [d.memory_budget, d.storage_budget, d.energy_budget] {
                if let Budget::Finite(v) = b {
                    if !(v > 0.0 && v.is_finite()) {
                        return bad(format!("device {}: finite budgets must be > 0", d.role));
                    }
                }
            }
        }
        let mut pairs = BTreeSet::new();
        for c in &self.channels {
            if c.from == c.to {
                return bad(format!("channel {} -> {} connects a device to itself", c.from, c.to));
            }
            if !pairs.insert((c.from, c.to)) {
                return bad(format!("duplicate channel {} -> {}", c.from, c.to));
            }
            if !(c.bandwidth > 0.0 && c.tx_energy >= 0.0 && c.rx_energy >= 0.0) {
                return bad(format!("channel {} -> {}: need W > 0, tau >= 0, rho >= 0", c.from, c.to));
            }
        }
        for k in DeviceRole::ALL {
            for l in DeviceRole::ALL {
                if k == l {
                    continue;
                }
                let relays = self.relays.iter().filter(|r| r.from == k && r.to == l).count();
                if self.channel(k, l).is_some() {
                    if relays > 0 {
                        return bad(format!("{k} -> {l} is direct but also has a relay entry"));
                    }
                } else if relays != 1 {
                    return bad(format!("{k} -> {l} needs exactly one relay entry"));
                }
                self.route(k, l)?;
            }
        }
        Ok(())
    }
}
