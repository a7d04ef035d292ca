//! JSON file formats for task graphs and system models (schema version 1).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    Budget, Channel, Device, DeviceRole, DeviceSet, ModelError, Relay, SystemModel, Task, TaskGraph, TaskId,
};
use crate::units::{Dimension, RawQuantity, UnitError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {0} (expected {SCHEMA_VERSION})")]
    Version(u32),
    #[error("{context}: {source}")]
    Unit { context: String, source: UnitError },
    #[error("system model must list exactly one device per role; {0}")]
    Devices(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn q(raw: &RawQuantity, dim: Dimension, context: impl Fn() -> String) -> Result<f64, SchemaError> {
    raw.resolve(dim).map_err(|source| SchemaError::Unit { context: context(), source })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskJson {
    pub id: u32,
    pub memory: RawQuantity,
    pub storage: RawQuantity,
    pub output_data: RawQuantity,
    pub allowed: DeviceSet,
    #[serde(default)]
    pub latency: BTreeMap<DeviceRole, RawQuantity>,
    #[serde(default)]
    pub power: BTreeMap<DeviceRole, RawQuantity>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskGraphJson {
    pub schema: u32,
    pub tasks: Vec<TaskJson>,
    pub arcs: Vec<(u32, u32)>,
}

impl TaskGraphJson {
    pub fn into_graph(self) -> Result<TaskGraph, SchemaError> {
        if self.schema != SCHEMA_VERSION {
            return Err(SchemaError::Version(self.schema));
        }
        let mut tasks = Vec::with_capacity(self.tasks.len());
        for t in self.tasks {
            let id = t.id;
            let ctx = |f: &str| {
                let f = f.to_string();
                move || format!("task {id} {f}")
            };
            let mut latency = BTreeMap::new();
            for (k, v) in &t.latency {
                latency.insert(*k, q(v, Dimension::Seconds, ctx("latency"))?);
            }
            let mut power = BTreeMap::new();
            for (k, v) in &t.power {
                power.insert(*k, q(v, Dimension::Watts, ctx("power"))?);
            }
            tasks.push(Task {
                id: TaskId(id),
                memory: q(&t.memory, Dimension::Bytes, ctx("memory"))?,
                storage: q(&t.storage, Dimension::Bytes, ctx("storage"))?,
                output_data: q(&t.output_data, Dimension::Bits, ctx("output_data"))?,
                allowed: t.allowed,
                latency,
                power,
            });
        }
        let arcs = self.arcs.into_iter().map(|(a, b)| (TaskId(a), TaskId(b))).collect();
        Ok(TaskGraph { tasks, arcs })
    }

    /// SI values written with base-unit suffixes; parses back bit-exactly.
    pub fn from_graph(g: &TaskGraph) -> Self {
        let si = RawQuantity::si;
        TaskGraphJson {
            schema: SCHEMA_VERSION,
            tasks: g
                .tasks
                .iter()
                .map(|t| TaskJson {
                    id: t.id.0,
                    memory: si(t.memory, Dimension::Bytes),
                    storage: si(t.storage, Dimension::Bytes),
                    output_data: si(t.output_data, Dimension::Bits),
                    allowed: t.allowed,
                    latency: t.latency.iter().map(|(k, v)| (*k, si(*v, Dimension::Seconds))).collect(),
                    power: t.power.iter().map(|(k, v)| (*k, si(*v, Dimension::Watts))).collect(),
                })
                .collect(),
            arcs: g.arcs.iter().map(|(a, b)| (a.0, b.0)).collect(),
        }
    }
}

pub fn parse_task_graph(text: &str) -> Result<TaskGraph, SchemaError> {
    serde_json::from_str::<TaskGraphJson>(text)?.into_graph()
}

pub fn task_graph_to_json(g: &TaskGraph) -> String {
    serde_json::to_string_pretty(&TaskGraphJson::from_graph(g)).expect("serializable")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviceJson {
    pub role: DeviceRole,
    pub name: String,
    #[serde(default)]
    pub processor: String,
    /// `null` means unbounded.
    pub memory_budget: Option<RawQuantity>,
    pub storage_budget: Option<RawQuantity>,
    pub energy_budget: Option<RawQuantity>,
    pub idle_power: RawQuantity,
    pub max_power: RawQuantity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelJson {
    pub from: DeviceRole,
    pub to: DeviceRole,
    pub bandwidth: RawQuantity,
    pub tx_energy: RawQuantity,
    pub rx_energy: RawQuantity,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RelayJson {
    pub from: DeviceRole,
    pub to: DeviceRole,
    pub via: DeviceRole,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemModelJson {
    pub schema: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    pub devices: Vec<DeviceJson>,
    pub channels: Vec<ChannelJson>,
    #[serde(default)]
    pub relays: Vec<RelayJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelProfileJson {
    pub schema: u32,
    pub name: String,
    pub channels: Vec<ChannelJson>,
}

fn budget(raw: &Option<RawQuantity>, dim: Dimension, ctx: impl Fn() -> String) -> Result<Budget, SchemaError> {
    match raw {
        None => Ok(Budget::Unbounded),
        Some(RawQuantity::Text(s)) if s == "-" || s.eq_ignore_ascii_case("unbounded") => Ok(Budget::Unbounded),
        Some(r) => Ok(Budget::Finite(q(r, dim, ctx)?)),
    }
}

pub fn parse_channels(list: &[ChannelJson]) -> Result<Vec<Channel>, SchemaError> {
    list.iter()
        .map(|c| {
            let ctx = || format!("channel {} -> {}", c.from, c.to);
            Ok(Channel {
                from: c.from,
                to: c.to,
                bandwidth: q(&c.bandwidth, Dimension::BitsPerSecond, ctx)?,
                tx_energy: q(&c.tx_energy, Dimension::JoulesPerBit, ctx)?,
                rx_energy: q(&c.rx_energy, Dimension::JoulesPerBit, ctx)?,
            })
        })
        .collect()
}

impl SystemModelJson {
    pub fn into_model(self) -> Result<SystemModel, SchemaError> {
        if self.schema != SCHEMA_VERSION {
            return Err(SchemaError::Version(self.schema));
        }
        let mut slots: [Option<Device>; 3] = [None, None, None];
        for d in &self.devices {
            let ctx = || format!("device {} ({})", d.role, d.name);
            let dev = Device {
                role: d.role,
                name: d.name.clone(),
                processor: d.processor.clone(),
                memory_budget: budget(&d.memory_budget, Dimension::Bytes, ctx)?,
                storage_budget: budget(&d.storage_budget, Dimension::Bytes, ctx)?,
                energy_budget: budget(&d.energy_budget, Dimension::Joules, ctx)?,
                idle_power: q(&d.idle_power, Dimension::Watts, ctx)?,
                max_power: q(&d.max_power, Dimension::Watts, ctx)?,
            };
            if slots[d.role.index()].replace(dev).is_some() {
                return Err(SchemaError::Devices(format!("role {} listed twice", d.role)));
            }
        }
        let [e, h, c] = slots;
        let missing = |r: DeviceRole| SchemaError::Devices(format!("role {r} missing"));
        let devices = [
            e.ok_or_else(|| missing(DeviceRole::Edge))?,
            h.ok_or_else(|| missing(DeviceRole::Hub))?,
            c.ok_or_else(|| missing(DeviceRole::Cloud))?,
        ];
        let sys = SystemModel {
            name: self.name,
            devices,
            channels: parse_channels(&self.channels)?,
            relays: self.relays.iter().map(|r| Relay { from: r.from, to: r.to, via: r.via }).collect(),
        };
        sys.check()?;
        Ok(sys)
    }
}

pub fn parse_system_model(text: &str) -> Result<SystemModel, SchemaError> {
    serde_json::from_str::<SystemModelJson>(text)?.into_model()
}

pub fn parse_channel_profile(text: &str) -> Result<Vec<Channel>, SchemaError> {
    let p: ChannelProfileJson = serde_json::from_str(text)?;
    if p.schema != SCHEMA_VERSION {
        return Err(SchemaError::Version(p.schema));
    }
    parse_channels(&p.channels)
}
