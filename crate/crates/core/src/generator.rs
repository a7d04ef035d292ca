//! Seeded random task-graph generation in parallel, serial and mixed shapes,
//! and synthesis of task parameters from reference-device profiles scaled by
//! per-device performance ratios.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DeviceRole, DeviceSet, SystemModel, Task, TaskGraph, TaskId};
use crate::units::{Dimension, RawQuantity, UnitError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("invalid generator spec: {0}")]
    Spec(String),
    #[error("invalid parameter spec: {0}")]
    Params(String),
    #[error("no performance ratio for device {0} ({1})")]
    MissingRatio(DeviceRole, String),
    #[error(transparent)]
    Unit(#[from] UnitError),
    #[error("parameter spec JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    Parallel,
    Serial,
    Mixed,
}

impl Structure {
    pub fn letter(self) -> char {
        match self {
            Structure::Parallel => 'P',
            Structure::Serial => 'S',
            Structure::Mixed => 'M',
        }
    }

    fn default_extra_arc_probability(self) -> f64 {
        match self {
            Structure::Serial => 1.0,
            Structure::Parallel | Structure::Mixed => 0.3,
        }
    }
}

impl FromStr for Structure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "parallel" | "p" => Ok(Structure::Parallel),
            "serial" | "s" => Ok(Structure::Serial),
            "mixed" | "m" => Ok(Structure::Mixed),
            _ => Err(format!("unknown structure {s:?} (parallel|serial|mixed)")),
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Structure::Parallel => "parallel",
            Structure::Serial => "serial",
            Structure::Mixed => "mixed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub structure: Structure,
    pub node_count: usize,
    pub max_in_degree: usize,
    pub max_out_degree: usize,
    #[serde(default)]
    pub fixed_edge_fraction: f64,
    #[serde(default)]
    pub fixed_hub_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    /// Chance of each optional extra arc; `None` uses the structure default
    /// (every window arc for serial graphs, 0.3 otherwise).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra_arc_probability: Option<f64>,
}

impl GenSpec {
    pub fn new(structure: Structure, node_count: usize, max_in: usize, max_out: usize, seed: u64) -> Self {
        GenSpec {
            structure,
            node_count,
            max_in_degree: max_in,
            max_out_degree: max_out,
            fixed_edge_fraction: 0.0,
            fixed_hub_fraction: 0.0,
            seed,
            extra_arc_probability: None,
        }
    }

    pub fn with_fixed(mut self, edge: f64, hub: f64) -> Self {
        self.fixed_edge_fraction = edge;
        self.fixed_hub_fraction = hub;
        self
    }

    fn extra_p(&self) -> f64 {
        self.extra_arc_probability.unwrap_or_else(|| self.structure.default_extra_arc_probability())
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::Spec(m.to_string()));
        if self.node_count < 2 {
            return bad("node_count must be at least 2");
        }
        if self.max_in_degree < 1 || self.max_out_degree < 1 {
            return bad("maximum degrees must be at least 1");
        }
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        if !in_unit(self.fixed_edge_fraction) || !in_unit(self.fixed_hub_fraction) {
            return bad("fixed fractions must lie in [0, 1]");
        }
        if self.fixed_edge_fraction + self.fixed_hub_fraction > 1.0 {
            return bad("fixed_edge_fraction + fixed_hub_fraction exceeds 1");
        }
        if let Some(p) = self.extra_arc_probability {
            if !in_unit(p) {
                return bad("extra_arc_probability must lie in [0, 1]");
            }
            if p > 0.0 && self.structure == Structure::Serial && (self.max_out_degree < 2 || self.max_in_degree < 2) {
                return bad("a serial graph with maximum degree 1 cannot take extra arcs");
            }
        }
        if self.structure != Structure::Serial && self.max_out_degree < 2 {
            return bad("parallel and mixed graphs need max_out_degree >= 2 to branch");
        }
        if self.structure == Structure::Mixed && self.max_in_degree < 2 {
            return bad("mixed graphs need max_in_degree >= 2 to join branches");
        }
        Ok(())
    }

    /// Number of edge- and hub-fixed tasks, rounding halves up.
    pub fn fixed_counts(&self) -> (usize, usize) {
        let r = |f: f64| (f * self.node_count as f64 + 0.5).floor() as usize;
        let e = r(self.fixed_edge_fraction).min(self.node_count);
        let h = r(self.fixed_hub_fraction).min(self.node_count - e);
        (e, h)
    }
}

/// Level widths summing to `n`.
fn width_profile(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = spec.node_count;
    let out = spec.max_out_degree;
    match spec.structure {
        Structure::Serial => vec![1; n],
        Structure::Parallel => {
            let depth = ((n as f64).powf(0.45).round() as usize).max(2);
            let cap = (n - 1).div_ceil(depth - 1).max(2);
            let mut widths = vec![1];
            let mut left = n - 1;
            while left > 0 {
                let w = (widths.last().unwrap() * out).min(cap).min(left);
                widths.push(w);
                left -= w;
            }
            widths
        }
        Structure::Mixed => {
            let cap = ((n as f64).sqrt().ceil() as usize).max(2);
            let mut widths = Vec::new();
            let mut left = n;
            while left > 0 {
                for _ in 0..rng.gen_range(1..=3) {
                    if left == 0 {
                        break;
                    }
                    widths.push(1);
                    left -= 1;
                }
                let peak = rng.gen_range(2..=cap);
                let mut w = 1usize;
                let mut grow: Vec<usize> = Vec::new();
                while w < peak {
                    w = (w * out).min(peak);
                    grow.push(w);
                }
                let plateau = rng.gen_range(0..=2);
                let mut block = grow.clone();
                block.extend(std::iter::repeat(peak).take(plateau));
                block.extend(grow.iter().rev().skip(1).copied());
                for w in block {
                    if left == 0 {
                        break;
                    }
                    let w = w.min(left);
                    widths.push(w);
                    left -= w;
                }
            }
            widths
        }
    }
}

struct Builder {
    max_in: usize,
    max_out: usize,
    indeg: Vec<usize>,
    outdeg: Vec<usize>,
    arcs: BTreeSet<(usize, usize)>,
}

impl Builder {
    fn try_add(&mut self, i: usize, j: usize) -> bool {
        if i == j || self.outdeg[i] >= self.max_out || self.indeg[j] >= self.max_in || self.arcs.contains(&(i, j)) {
            return false;
        }
        self.arcs.insert((i, j));
        self.outdeg[i] += 1;
        self.indeg[j] += 1;
        true
    }
}

/// Random task graph with the requested shape. Tasks are unprofiled: every
/// task allows all devices except the fixed ones, and no latency or power is
/// set yet.
pub fn generate_tfg(spec: &GenSpec) -> Result<TaskGraph, GenError> {
    spec.validate()?;
    let n = spec.node_count;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let p = spec.extra_p();
    let mut b = Builder {
        max_in: spec.max_in_degree,
        max_out: spec.max_out_degree,
        indeg: vec![0; n],
        outdeg: vec![0; n],
        arcs: BTreeSet::new(),
    };

    if spec.structure == Structure::Serial {
        for i in 0..n - 1 {
            b.try_add(i, i + 1);
        }
        for i in 0..n {
            for j in i + 2..(i + 1 + spec.max_out_degree).min(n) {
                if rng.gen_bool(p) {
                    b.try_add(i, j);
                }
            }
        }
    } else {
        let widths = width_profile(spec, &mut rng);
        let mut start = 0;
        let mut prev: Option<std::ops::Range<usize>> = None;
        for w in widths {
            let level = start..start + w;
            if let Some(up) = &prev {
                let (a, c) = (up.len(), level.len());
                if c >= a {
                    for t in 0..c {
                        b.try_add(up.start + t * a / c, level.start + t);
                    }
                } else {
                    for s in 0..a {
                        b.try_add(up.start + s, level.start + s * c / a);
                    }
                }
                for j in level.clone() {
                    for _ in 1..spec.max_in_degree {
                        if rng.gen_bool(p) {
                            let i = rng.gen_range(up.clone());
                            b.try_add(i, j);
                        }
                    }
                }
            }
            prev = Some(level);
            start += w;
        }
    }

    let (fe, fh) = spec.fixed_counts();
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut rng);
    let mut allowed = vec![DeviceSet::ALL; n];
    for &i in &ids[..fe] {
        allowed[i] = DeviceSet::only(DeviceRole::Edge);
    }
    for &i in &ids[fe..fe + fh] {
        allowed[i] = DeviceSet::only(DeviceRole::Hub);
    }

    let tasks = (0..n)
        .map(|i| {
            let mut t = Task::unprofiled(i as u32 + 1);
            t.allowed = allowed[i];
            t
        })
        .collect();
    let arcs = b.arcs.into_iter().map(|(i, j)| (TaskId::from_index(i), TaskId::from_index(j))).collect();
    Ok(TaskGraph::new(tasks, arcs))
}

/// Shape statistics in the columns used to describe benchmark graphs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralStats {
    pub nodes: usize,
    pub arcs: usize,
    /// arcs / nodes; equal for in- and out-degree
    pub avg_degree: f64,
    pub max_in_degree: usize,
    pub max_out_degree: usize,
    /// nodes on a longest path
    pub depth: usize,
    /// most nodes sharing one longest-path level
    pub max_width: usize,
    pub fixed_edge: usize,
    pub fixed_hub: usize,
}

pub fn structural_stats(g: &TaskGraph) -> StructuralStats {
    let n = g.len();
    let order = g.topological_order().unwrap_or_default();
    let mut level = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for (i, j) in &g.arcs {
        children[i.index()].push(j.index());
    }
    for t in &order {
        let i = t.index();
        for &j in &children[i] {
            level[j] = level[j].max(level[i] + 1);
        }
    }
    let depth = if n == 0 { 0 } else { level.iter().max().unwrap() + 1 };
    let mut per_level = vec![0usize; depth];
    for &l in &level {
        per_level[l] += 1;
    }
    let fixed = |k: DeviceRole| g.tasks.iter().filter(|t| t.allowed == DeviceSet::only(k)).count();
    StructuralStats {
        nodes: n,
        arcs: g.arcs.len(),
        avg_degree: if n == 0 { 0.0 } else { g.arcs.len() as f64 / n as f64 },
        max_in_degree: g.in_degrees().into_iter().max().unwrap_or(0),
        max_out_degree: g.out_degrees().into_iter().max().unwrap_or(0),
        depth,
        max_width: per_level.into_iter().max().unwrap_or(0),
        fixed_edge: fixed(DeviceRole::Edge),
        fixed_hub: fixed(DeviceRole::Hub),
    }
}

/// Closed interval in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub fn new(min: f64, max: f64) -> Self {
        Range { min, max }
    }

    fn check(&self, what: &str) -> Result<(), GenError> {
        if !(self.min > 0.0 && self.min <= self.max && self.max.is_finite()) {
            return Err(GenError::Params(format!("{what} range must satisfy 0 < min <= max")));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        if self.min == self.max {
            self.min
        } else {
            rng.gen_range(self.min..=self.max)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    /// seconds, on the reference device
    pub reference_latency: Range,
    /// watts, on the reference device
    pub reference_power: Range,
    /// bytes
    pub memory: Range,
    /// bytes
    pub storage: Range,
    /// bits
    pub data: Range,
    /// performance ratio of each device relative to the reference device
    pub perf_ratios: BTreeMap<DeviceRole, f64>,
    pub clamp_alpha: Range,
}

#[derive(Deserialize)]
struct ParamJson {
    reference_latency_range: [RawQuantity; 2],
    reference_power_range: [RawQuantity; 2],
    memory_range: [RawQuantity; 2],
    storage_range: [RawQuantity; 2],
    data_range: [RawQuantity; 2],
    clamp_alpha_range: [f64; 2],
    #[serde(default)]
    perf_ratios: BTreeMap<DeviceRole, f64>,
}

impl ParamSpec {
    /// Parses the range file format; ratios may be given or left for
    /// [`ParamSpec::with_system_ratios`].
    pub fn from_json(text: &str) -> Result<Self, GenError> {
        let j: ParamJson = serde_json::from_str(text).map_err(|e| GenError::Json(e.to_string()))?;
        let r = |q: &[RawQuantity; 2], d: Dimension| -> Result<Range, GenError> {
            Ok(Range::new(q[0].resolve(d)?, q[1].resolve(d)?))
        };
        Ok(ParamSpec {
            reference_latency: r(&j.reference_latency_range, Dimension::Seconds)?,
            reference_power: r(&j.reference_power_range, Dimension::Watts)?,
            memory: r(&j.memory_range, Dimension::Bytes)?,
            storage: r(&j.storage_range, Dimension::Bytes)?,
            data: r(&j.data_range, Dimension::Bits)?,
            clamp_alpha: Range::new(j.clamp_alpha_range[0], j.clamp_alpha_range[1]),
            perf_ratios: j.perf_ratios,
        })
    }

    /// Shipped default ranges with ratios looked up by device name.
    pub fn for_system(sys: &SystemModel) -> Result<Self, GenError> {
        ParamSpec::from_json(crate::presets::default_param_json())?.with_system_ratios(sys)
    }

    /// Fills missing ratios from the performance table by device name.
    pub fn with_system_ratios(mut self, sys: &SystemModel) -> Result<Self, GenError> {
        let table = crate::presets::performance_ratios();
        for d in &sys.devices {
            if !self.perf_ratios.contains_key(&d.role) {
                let r = table.get(&d.name).ok_or_else(|| GenError::MissingRatio(d.role, d.name.clone()))?;
                self.perf_ratios.insert(d.role, *r);
            }
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), GenError> {
        self.reference_latency.check("reference latency")?;
        self.reference_power.check("reference power")?;
        self.memory.check("memory")?;
        self.storage.check("storage")?;
        self.data.check("data")?;
        self.clamp_alpha.check("clamp alpha")?;
        if self.clamp_alpha.max >= 1.0 {
            return Err(GenError::Params("clamp alpha must stay below 1".into()));
        }
        for (k, r) in &self.perf_ratios {
            if !(*r > 0.0 && r.is_finite()) {
                return Err(GenError::Params(format!("performance ratio of {k} must be positive")));
            }
        }
        Ok(())
    }
}

pub fn scale_latency(reference: f64, ratio: f64) -> f64 {
    reference / ratio
}

pub fn scale_power(reference: f64, ratio: f64) -> f64 {
    reference * ratio
}

/// Moves `p` into `(idle, max]`: values at or below idle become
/// `idle * (1 + alpha)`, values above max become `max * (1 - alpha)`.
pub fn clamp_power(p: f64, idle: f64, max: f64, alpha: f64) -> f64 {
    if p <= idle {
        idle * (1.0 + alpha)
    } else if p > max {
        max * (1.0 - alpha)
    } else {
        p
    }
}

/// Draws every task's profile and requirements. Fixed tasks get a profile
/// for their single device only.
pub fn synthesize_params(g: &TaskGraph, pspec: &ParamSpec, sys: &SystemModel, seed: u64) -> Result<TaskGraph, GenError> {
    pspec.validate()?;
    for d in &sys.devices {
        if !pspec.perf_ratios.contains_key(&d.role) {
            return Err(GenError::MissingRatio(d.role, d.name.clone()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = g.clone();
    for t in &mut out.tasks {
        let l_ref = pspec.reference_latency.draw(&mut rng);
        let p_ref = pspec.reference_power.draw(&mut rng);
        t.latency.clear();
        t.power.clear();
        for k in t.allowed.iter() {
            let phi = pspec.perf_ratios[&k];
            let dev = sys.device(k);
            let raw = scale_power(p_ref, phi);
            let p = if raw <= dev.idle_power || raw > dev.max_power {
                clamp_power(raw, dev.idle_power, dev.max_power, pspec.clamp_alpha.draw(&mut rng))
            } else {
                raw
            };
            t.latency.insert(k, scale_latency(l_ref, phi));
            t.power.insert(k, p);
        }
        t.memory = pspec.memory.draw(&mut rng);
        t.storage = pspec.storage.draw(&mut rng);
        t.output_data = pspec.data.draw(&mut rng);
    }
    Ok(out)
}

/// Sidecar written next to a generated benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkMeta {
    pub schema: u32,
    pub spec: GenSpec,
    pub params: ParamSpec,
    pub param_seed: u64,
    pub system: String,
    pub stats: StructuralStats,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Configuration;
    use proptest::prelude::*;

    #[test]
    fn serial_ten_nodes_degree_two() {
        let g = generate_tfg(&GenSpec::new(Structure::Serial, 10, 2, 2, 1)).unwrap();
        let s = structural_stats(&g);
        assert_eq!((s.nodes, s.depth, s.max_width), (10, 10, 1));
        assert_eq!(s.arcs, 17);
    }

    #[test]
    fn serial_saturated_arc_counts() {
        // window arcs to the next max_out tasks
        let g = generate_tfg(&GenSpec::new(Structure::Serial, 11, 5, 5, 3)).unwrap();
        assert_eq!(g.arcs.len(), 40);
        let g = generate_tfg(&GenSpec::new(Structure::Serial, 1000, 2, 2, 3)).unwrap();
        assert_eq!(g.arcs.len(), 1997);
    }

    #[test]
    fn parallel_ten_nodes_is_wide() {
        let g = generate_tfg(&GenSpec::new(Structure::Parallel, 10, 2, 2, 1)).unwrap();
        let s = structural_stats(&g);
        assert_eq!(s.nodes, 10);
        assert!(s.max_width >= 4, "{s:?}");
        assert!(s.depth < 10);
        assert!(g.topological_order().is_some());
    }

    #[test]
    fn fixed_counts_round_half_up() {
        let s = GenSpec::new(Structure::Parallel, 10, 2, 2, 0).with_fixed(0.05, 0.02);
        assert_eq!(s.fixed_counts(), (1, 0));
        let s = GenSpec::new(Structure::Parallel, 1000, 2, 2, 0).with_fixed(0.048, 0.02);
        assert_eq!(s.fixed_counts(), (48, 20));
        let g = generate_tfg(&GenSpec::new(Structure::Mixed, 100, 4, 3, 9).with_fixed(0.1, 0.05)).unwrap();
        let st = structural_stats(&g);
        assert_eq!((st.fixed_edge, st.fixed_hub), (10, 5));
    }

    #[test]
    fn infeasible_specs_are_rejected() {
        let mut s = GenSpec::new(Structure::Serial, 10, 1, 1, 0);
        assert!(generate_tfg(&s).is_ok());
        s.extra_arc_probability = Some(0.5);
        assert!(matches!(generate_tfg(&s), Err(GenError::Spec(_))));
        assert!(generate_tfg(&GenSpec::new(Structure::Parallel, 10, 2, 1, 0)).is_err());
        assert!(generate_tfg(&GenSpec::new(Structure::Serial, 1, 2, 2, 0)).is_err());
        assert!(generate_tfg(&GenSpec::new(Structure::Serial, 5, 2, 2, 0).with_fixed(0.7, 0.5)).is_err());
    }

    #[test]
    fn ratios_scale_the_reference_profile() {
        assert!((scale_latency(3.8, 105.55) - 0.036).abs() < 5e-4);
        assert_eq!(scale_latency(3.8, 1.0), 3.8);
        assert_eq!(clamp_power(2000.0, 250.0, 1600.0, 0.001), 1600.0 * 0.999);
        assert_eq!(clamp_power(100.0, 250.0, 1600.0, 0.005), 250.0 * 1.005);
        assert_eq!(clamp_power(300.0, 250.0, 1600.0, 0.005), 300.0);
    }

    #[test]
    fn default_param_spec_uses_published_ratios() {
        let p = ParamSpec::for_system(&Configuration::C1.system()).unwrap();
        assert_eq!(p.perf_ratios[&DeviceRole::Edge], 6.99);
        assert_eq!(p.perf_ratios[&DeviceRole::Hub], 50.77);
        assert_eq!(p.perf_ratios[&DeviceRole::Cloud], 105.55);
        assert_eq!(p.reference_latency, Range::new(0.01, 0.5));
        assert_eq!(p.clamp_alpha, Range::new(0.001, 0.005));
        let c3 = ParamSpec::for_system(&Configuration::C3.system()).unwrap();
        assert_eq!(c3.perf_ratios[&DeviceRole::Edge], 1.0);
    }

    #[test]
    fn synthesized_graph_validates() {
        let sys = Configuration::C2.system();
        let g = generate_tfg(&GenSpec::new(Structure::Mixed, 60, 4, 3, 2).with_fixed(0.05, 0.05)).unwrap();
        let p = ParamSpec::for_system(&sys).unwrap();
        let full = synthesize_params(&g, &p, &sys, 11).unwrap();
        assert!(full.validate().is_valid(), "{}", full.validate());
        assert_eq!(full, synthesize_params(&g, &p, &sys, 11).unwrap());
        assert_ne!(full, synthesize_params(&g, &p, &sys, 12).unwrap());
    }

    fn structure() -> impl Strategy<Value = Structure> {
        prop_oneof![Just(Structure::Parallel), Just(Structure::Serial), Just(Structure::Mixed)]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn generated_graphs_respect_spec(
            st in structure(), n in 2usize..300, din in 2usize..8, dout in 2usize..8, seed: u64,
            fe in 0.0f64..0.5, fh in 0.0f64..0.5,
        ) {
            let spec = GenSpec::new(st, n, din, dout, seed).with_fixed(fe, fh);
            let g = generate_tfg(&spec).unwrap();
            prop_assert_eq!(g.len(), n);
            prop_assert!(g.topological_order().is_some());
            let s = structural_stats(&g);
            prop_assert!(s.max_in_degree <= din && s.max_out_degree <= dout);
            prop_assert_eq!((s.fixed_edge, s.fixed_hub), spec.fixed_counts());
            if st == Structure::Serial {
                prop_assert_eq!((s.depth, s.max_width), (n, 1));
            }
            prop_assert_eq!(&g, &generate_tfg(&spec).unwrap());
        }

        #[test]
        fn synthesized_power_stays_in_range(seed: u64, n in 2usize..40) {
            let sys = Configuration::C1.system();
            let g = generate_tfg(&GenSpec::new(Structure::Parallel, n, 3, 3, seed)).unwrap();
            let p = ParamSpec::for_system(&sys).unwrap();
            let full = synthesize_params(&g, &p, &sys, seed).unwrap();
            for t in &full.tasks {
                for (k, pw) in &t.power {
                    let d = sys.device(*k);
                    prop_assert!(*pw > d.idle_power && *pw <= d.max_power);
                }
                // faster device, shorter latency
                let l: Vec<f64> = DeviceRole::ALL.iter().map(|k| t.latency[k]).collect();
                prop_assert!(l[0] > l[1] && l[1] > l[2]);
            }
        }
    }
}
