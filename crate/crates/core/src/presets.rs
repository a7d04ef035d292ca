//! Shipped device configurations, channel profiles and performance ratios.
//!
//! The JSON sources live in `data/` and are embedded at compile time.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Deserialize;

use crate::generator::{synthesize_params, GenError, ParamSpec};
use crate::model::{Channel, DeviceRole, DeviceSet, SystemModel, Task, TaskGraph, TaskId};
use crate::schema::{parse_channel_profile, parse_system_model};

/// Latency threshold used with the energy objective, in seconds.
pub const DEFAULT_LATENCY_THRESHOLD: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Configuration {
    /// Jetson TX2 edge device
    C1,
    /// Odroid XU4 edge device
    C2,
    /// Raspberry Pi 3 Model B edge device
    C3,
}

impl Configuration {
    pub const ALL: [Configuration; 3] = [Configuration::C1, Configuration::C2, Configuration::C3];

    pub fn json(self) -> &'static str {
        match self {
            Configuration::C1 => include_str!("../data/c1.json"),
            Configuration::C2 => include_str!("../data/c2.json"),
            Configuration::C3 => include_str!("../data/c3.json"),
        }
    }

    /// The configuration with Run 1 channels.
    pub fn system(self) -> SystemModel {
        parse_system_model(self.json()).expect("embedded preset is valid")
    }

    pub fn system_with(self, profile: ChannelProfile) -> SystemModel {
        self.system().with_channels(profile.channels())
    }
}

impl FromStr for Configuration {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "C1" => Ok(Configuration::C1),
            "C2" => Ok(Configuration::C2),
            "C3" => Ok(Configuration::C3),
            _ => Err(format!("unknown configuration {s:?}")),
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelProfile {
    Run1,
    Run2,
}

impl ChannelProfile {
    pub fn json(self) -> &'static str {
        match self {
            ChannelProfile::Run1 => include_str!("../data/run1.json"),
            ChannelProfile::Run2 => include_str!("../data/run2.json"),
        }
    }

    pub fn channels(self) -> Vec<Channel> {
        parse_channel_profile(self.json()).expect("embedded profile is valid")
    }
}

impl FromStr for ChannelProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "run1" => Ok(ChannelProfile::Run1),
            "run2" => Ok(ChannelProfile::Run2),
            _ => Err(format!("unknown channel profile {s:?}")),
        }
    }
}

#[derive(Deserialize)]
struct RatiosJson {
    ratios: BTreeMap<String, f64>,
}

/// Average performance ratio per device name, relative to the slowest
/// benchmarked device.
pub fn performance_ratios() -> BTreeMap<String, f64> {
    let r: RatiosJson = serde_json::from_str(include_str!("../data/perf_ratios.json")).expect("embedded ratios");
    r.ratios
}

pub fn default_param_json() -> &'static str {
    include_str!("../data/default_params.json")
}

/// Fifteen-task visual-inspection pipeline: image acquisition (1, edge
/// only), preprocessing (2-5), line detection (6-9), tower detection
/// (10-14) and display (15, hub only). Unprofiled.
pub fn inspection_topology() -> TaskGraph {
    let mut tasks: Vec<Task> = (1..=15).map(Task::unprofiled).collect();
    tasks[0].allowed = DeviceSet::only(DeviceRole::Edge);
    tasks[14].allowed = DeviceSet::only(DeviceRole::Hub);
    let mut arcs = vec![(1, 2), (1, 10), (9, 15), (14, 15)];
    arcs.extend((2..9).map(|i| (i, i + 1)));
    arcs.extend((10..14).map(|i| (i, i + 1)));
    arcs.sort();
    let arcs = arcs.into_iter().map(|(a, b)| (TaskId(a), TaskId(b))).collect();
    TaskGraph::new(tasks, arcs)
}

/// The inspection pipeline with parameters synthesized for `sys`.
pub fn inspection_app(sys: &SystemModel, seed: u64) -> Result<TaskGraph, GenError> {
    synthesize_params(&inspection_topology(), &ParamSpec::for_system(sys)?, sys, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Budget, DeviceRole::*};

    fn ch(sys: &SystemModel, a: crate::model::DeviceRole, b: crate::model::DeviceRole) -> (f64, f64, f64) {
        let c = sys.channel(a, b).unwrap();
        (c.bandwidth, c.tx_energy, c.rx_energy)
    }

    #[test]
    fn run_profiles_match_published_table() {
        let r1 = Configuration::C1.system_with(ChannelProfile::Run1);
        assert_eq!(ch(&r1, Edge, Hub), (15e6, 1.0e-6, 0.70e-6));
        assert_eq!(ch(&r1, Hub, Edge), (20e6, 1.0e-6, 0.70e-6));
        assert_eq!(ch(&r1, Hub, Cloud), (25e6, 2.5e-6, 1.25e-6));
        assert_eq!(ch(&r1, Cloud, Hub), (35e6, 2.5e-6, 1.25e-6));
        let r2 = Configuration::C1.system_with(ChannelProfile::Run2);
        assert_eq!(ch(&r2, Edge, Hub), (10e6, 1.0e-6, 0.7e-6));
        assert_eq!(ch(&r2, Hub, Edge), (10e6, 1.0e-6, 0.7e-6));
        assert_eq!(ch(&r2, Hub, Cloud), (0.5e6, 6.5e-6, 4.5e-6));
        assert_eq!(ch(&r2, Cloud, Hub), (1.5e6, 6.5e-6, 4.5e-6));
        assert!(r1.channel(Edge, Cloud).is_none());
    }

    #[test]
    fn device_budgets_match_published_table() {
        let gib = 1024f64.powi(3);
        let c1 = Configuration::C1.system();
        assert_eq!(c1.device(Edge).name, "Jetson TX2");
        assert_eq!(c1.device(Edge).memory_budget, Budget::Finite(8.0 * gib));
        assert_eq!(c1.device(Edge).energy_budget, Budget::Finite(129.96 * 3600.0));
        assert_eq!(c1.device(Hub).energy_budget, Budget::Finite(60.0 * 3600.0));
        assert_eq!(c1.device(Cloud).energy_budget, Budget::Unbounded);
        assert_eq!(c1.device(Cloud).storage_budget, Budget::Finite(10.0 * 1024.0 * gib));
        assert_eq!(Configuration::C2.system().device(Edge).memory_budget, Budget::Finite(2.0 * gib));
        assert_eq!(Configuration::C3.system().device(Edge).name, "Raspberry Pi 3 Model B");
    }

    #[test]
    fn switching_profile_only_touches_channels() {
        let a = Configuration::C2.system_with(ChannelProfile::Run1);
        let b = Configuration::C2.system_with(ChannelProfile::Run2);
        assert_eq!(a.devices, b.devices);
        assert_eq!(a.relays, b.relays);
        assert_ne!(a.channels, b.channels);
    }

    #[test]
    fn ratio_table() {
        let r = performance_ratios();
        assert_eq!(r["Raspberry Pi 3 Model B"], 1.0);
        assert_eq!(r["Odroid XU4"], 2.99);
        assert_eq!(r["Jetson TX2"], 6.99);
        assert_eq!(r["Mi Notebook Pro"], 50.77);
        assert_eq!(r["HPE ProLiant DL580 Gen10"], 105.55);
    }

    #[test]
    fn inspection_model_size() {
        use crate::milp::{build_model, Objective};
        let sys = Configuration::C1.system();
        let g = inspection_app(&sys, 5).unwrap();
        assert!(g.validate().is_valid());
        let e = crate::etfg::transform::<f64>(&g, &sys).unwrap();
        assert_eq!((e.node_count(), e.arc_count()), (41, 111));
        let lat = build_model(&e, Objective::Latency, None).unwrap().stats();
        let en = build_model(&e, Objective::Energy, Some(8.0)).unwrap().stats();
        assert_eq!(lat.variables, 152);
        assert_eq!(lat.logical_constraints_with_vacuous, 149);
        assert_eq!(en.logical_constraints_with_vacuous, 150);
    }
}
