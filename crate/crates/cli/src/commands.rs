use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use anyhow::{Context, Result};
use serde_json::{json, Value};

use edgealloc::analysis::{run_baselines, ComparisonReport};
use edgealloc::generator::{
    generate_tfg, structural_stats, synthesize_params, BenchmarkMeta, GenSpec, ParamSpec,
};
use edgealloc::milp::{build_model, export_lp, export_mps, ObjectiveBreakdown};
use edgealloc::model::{DeviceRole, SystemModel, TaskGraph};
use edgealloc::presets::{inspection_app, ChannelProfile, Configuration, DEFAULT_LATENCY_THRESHOLD};
use edgealloc::schema::{parse_channel_profile, parse_system_model, parse_task_graph, task_graph_to_json};
use edgealloc::solver::{solve as run_solver, Optimality, SolveConfig, SolveError};
use edgealloc::units::{parse_quantity, Dimension};
use edgealloc::{transform as expand, Etfg, Exact, Objective, Scalar};

use crate::{GenerateArgs, InputArgs, Invalid, ModelArgs, Outcome, SolveArgs};

fn invalid(msg: impl std::fmt::Display) -> anyhow::Error {
    Invalid(msg.to_string()).into()
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| invalid(format!("reading {}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let p = dir.join(name);
    fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
    eprintln!("wrote {}", p.display());
    Ok(())
}

fn system(config: &str) -> Result<SystemModel> {
    match Configuration::from_str(config) {
        Ok(c) => Ok(c.system()),
        Err(_) => parse_system_model(&read(Path::new(config))?).map_err(invalid),
    }
}

fn system_with_profile(a: &InputArgs) -> Result<SystemModel> {
    let sys = system(&a.config)?;
    let channels = match ChannelProfile::from_str(&a.channel_profile) {
        Ok(p) => p.channels(),
        Err(_) => parse_channel_profile(&read(Path::new(&a.channel_profile))?).map_err(invalid)?,
    };
    let sys = sys.with_channels(channels);
    sys.check().map_err(invalid)?;
    Ok(sys)
}

fn load(a: &InputArgs) -> Result<(TaskGraph, SystemModel)> {
    let sys = system_with_profile(a)?;
    let g = match a.tfg.as_str() {
        "builtin:inspection" => inspection_app(&sys, a.seed).map_err(invalid)?,
        path => parse_task_graph(&read(Path::new(path))?).map_err(invalid)?,
    };
    let report = g.validate();
    if !report.is_valid() {
        return Err(invalid(format!("task graph is invalid:\n{report}")));
    }
    Ok((g, sys))
}

fn etfg<S: Scalar>(g: &TaskGraph, sys: &SystemModel) -> Result<Etfg<S>> {
    expand(g, sys).map_err(invalid)
}

fn seconds(s: &str, what: &str) -> Result<f64> {
    parse_quantity(s, Dimension::Seconds).map_err(|e| invalid(format!("{what}: {e}")))
}

/// The threshold in seconds, defaulting under the energy objective.
fn threshold(m: &ModelArgs) -> Result<Option<f64>> {
    let t = match &m.lthr {
        Some(s) => Some(seconds(s, "--lthr")?),
        None if m.objective == Objective::Energy => Some(DEFAULT_LATENCY_THRESHOLD),
        None => None,
    };
    if let Some(t) = t {
        if t <= 0.0 {
            return Err(invalid("--lthr must be positive"));
        }
    }
    Ok(t)
}

pub fn transform(a: &InputArgs) -> Result<Outcome> {
    let (g, sys) = load(a)?;
    let e: Etfg<f64> = etfg(&g, &sys)?;
    write(&a.out, "etfg.json", &(e.to_json() + "\n"))?;
    write(&a.out, "etfg.dot", &e.to_dot())?;
    println!("{} tasks -> {} candidate nodes, {} candidate arcs", g.len(), e.node_count(), e.arc_count());
    Ok(Outcome::Ok)
}

fn breakdown_json<S: Scalar>(b: &ObjectiveBreakdown<S>) -> Value {
    let per = |xs: &[S; 3]| -> Value {
        DeviceRole::ALL.iter().map(|k| (k.to_string(), json!(xs[k.index()].to_f64()))).collect()
    };
    json!({
        "total_latency_s": b.total_latency.to_f64(),
        "total_energy_j": b.total_energy.to_f64(),
        "comp_latency_s": per(&b.comp_latency),
        "comp_energy_j": per(&b.comp_energy),
        "device_energy_j": per(&b.device_energy),
        "memory_bytes": per(&b.memory),
        "storage_bytes": per(&b.storage),
        "channels": b.channels.iter().map(|c| json!({
            "from": c.from, "to": c.to,
            "latency_s": c.latency.to_f64(), "energy_j": c.energy.to_f64(),
        })).collect::<Vec<_>>(),
        "violations": b.violations(),
    })
}

fn solve_config(a: &SolveArgs) -> Result<SolveConfig> {
    let time_limit = match &a.time_limit {
        Some(s) => Some(Duration::from_secs_f64(seconds(s, "--time-limit")?)),
        None => None,
    };
    if a.threads == 0 {
        return Err(invalid("--threads must be at least 1"));
    }
    Ok(SolveConfig { time_limit, threads: a.threads })
}

fn solve_with<S: Scalar>(a: &SolveArgs, g: &TaskGraph, sys: &SystemModel) -> Result<Outcome> {
    let m = &a.model;
    let e: Etfg<S> = etfg(g, sys)?;
    let thr = threshold(m)?.map(S::from_f64);
    let cfg = solve_config(a)?;
    let sol = match run_solver(&e, m.objective, thr.as_ref(), a.solver, &cfg) {
        Ok(s) => s,
        Err(SolveError::NoIncumbent) => {
            eprintln!("time limit reached with no feasible allocation found");
            return Ok(Outcome::TimeLimit);
        }
        Err(err @ (SolveError::NotAForest | SolveError::Constrained | SolveError::TooLarge(_))) => {
            return Err(invalid(err));
        }
        Err(err) => return Err(err.into()),
    };
    let mut stats = serde_json::to_value(&sol.stats)?;
    stats.as_object_mut().expect("stats object").remove("wall_time_s");
    let mut doc = json!({
        "system": sys.name,
        "objective": m.objective,
        "latency_threshold_s": thr.as_ref().map(|t| t.to_f64()),
        "optimality": sol.optimality,
        "stats": stats,
    });
    if let Some(alloc) = &sol.allocation {
        doc["objective_value"] = json!(alloc.objective_value.to_f64());
        doc["assignment"] = alloc
            .assignment
            .0
            .iter()
            .zip(&g.tasks)
            .map(|(k, t)| (t.id.to_string(), json!(k)))
            .collect::<serde_json::Map<_, _>>()
            .into();
        doc["breakdown"] = breakdown_json(&alloc.breakdown);
        if S::is_exact() {
            doc["objective_value_exact"] = json!(alloc.objective_value.to_string());
        }
    }
    write(&m.input.out, "solution.json", &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    match (&sol.allocation, sol.optimality) {
        (None, _) => {
            println!("infeasible: no allocation satisfies the budgets and threshold");
            Ok(Outcome::Infeasible)
        }
        (Some(a), o) => {
            println!("{} = {} ({o})", m.objective, a.objective_value.to_f64());
            println!("assignment {}", a.assignment);
            println!("solved in {:.3} s by {}", sol.stats.wall_time_s, sol.stats.solver);
            Ok(if matches!(o, Optimality::IncumbentWithGap(_)) { Outcome::TimeLimit } else { Outcome::Ok })
        }
    }
}

pub fn solve(a: &SolveArgs) -> Result<Outcome> {
    let (g, sys) = load(&a.model.input)?;
    if a.exact {
        solve_with::<Exact>(a, &g, &sys)
    } else {
        solve_with::<f64>(a, &g, &sys)
    }
}

fn baseline_with<S: Scalar>(a: &SolveArgs, g: &TaskGraph, sys: &SystemModel) -> Result<Outcome> {
    let m = &a.model;
    let e: Etfg<S> = etfg(g, sys)?;
    let thr = threshold(m)?.map(S::from_f64);
    let cfg = solve_config(a)?;
    let cases = run_baselines(&e, m.objective, thr.as_ref(), a.solver, &cfg)?;
    let report = ComparisonReport::new(&e, &cases, thr.as_ref());
    let out = &m.input.out;
    write(out, "report.csv", &report.to_csv()?)?;
    write(out, "report.json", &report.to_json())?;
    write(out, "report.dat", &report.to_gnuplot())?;
    for r in &report.rows {
        match (r.total_latency_s, r.total_energy_j) {
            (Some(l), Some(en)) => println!("{:<4} latency {l:.6} s  energy {en:.6} J  {}", r.case, r.status),
            _ => println!("{:<4} {}: {}", r.case, r.status, r.violations.join("; ")),
        }
    }
    if let Some(same) = report.same_optimal_allocation {
        println!("O_L and O_E allocations {}", if same { "coincide" } else { "differ" });
    }
    Ok(Outcome::Ok)
}

pub fn baseline(a: &SolveArgs) -> Result<Outcome> {
    let (g, sys) = load(&a.model.input)?;
    if a.exact {
        baseline_with::<Exact>(a, &g, &sys)
    } else {
        baseline_with::<f64>(a, &g, &sys)
    }
}

pub fn generate(a: &GenerateArgs) -> Result<Outcome> {
    let sys = system(&a.config)?;
    let spec = GenSpec {
        structure: a.structure,
        node_count: a.nodes,
        max_in_degree: a.max_in,
        max_out_degree: a.max_out,
        fixed_edge_fraction: a.fixed_edge,
        fixed_hub_fraction: a.fixed_hub,
        seed: a.seed,
        extra_arc_probability: a.extra_arcs,
    };
    let params = match &a.params {
        Some(p) => ParamSpec::from_json(&read(p)?).and_then(|p| p.with_system_ratios(&sys)),
        None => ParamSpec::for_system(&sys),
    }
    .map_err(invalid)?;
    let shape = generate_tfg(&spec).map_err(invalid)?;
    let g = synthesize_params(&shape, &params, &sys, a.seed).map_err(invalid)?;
    let stats = structural_stats(&g);
    let meta = BenchmarkMeta { schema: 1, spec, params, param_seed: a.seed, system: sys.name.clone(), stats };
    let stem = format!("{}{}_s{}", a.structure.letter(), a.nodes, a.seed);
    write(&a.out, &format!("{stem}.json"), &(task_graph_to_json(&g) + "\n"))?;
    write(&a.out, &format!("{stem}.meta.json"), &(serde_json::to_string_pretty(&meta)? + "\n"))?;
    println!(
        "{} nodes, {} arcs, depth {}, width {}, fixed e/h {}/{}",
        stats.nodes, stats.arcs, stats.depth, stats.max_width, stats.fixed_edge, stats.fixed_hub
    );
    Ok(Outcome::Ok)
}

pub fn export(a: &ModelArgs) -> Result<Outcome> {
    let (g, sys) = load(&a.input)?;
    let e: Etfg<f64> = etfg(&g, &sys)?;
    let m = build_model(&e, a.objective, threshold(a)?).map_err(invalid)?;
    write(&a.input.out, "model.mps", &export_mps(&m))?;
    write(&a.input.out, "model.lp", &export_lp(&m))?;
    Ok(Outcome::Ok)
}

pub fn stats(a: &ModelArgs) -> Result<Outcome> {
    let (g, sys) = load(&a.input)?;
    let e: Etfg<f64> = etfg(&g, &sys)?;
    let m = build_model(&e, a.objective, threshold(a)?).map_err(invalid)?;
    let doc = json!({
        "system": sys.name,
        "objective": a.objective,
        "graph": structural_stats(&g),
        "etfg": { "nodes": e.node_count(), "arcs": e.arc_count() },
        "model": m.stats(),
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(Outcome::Ok)
}
