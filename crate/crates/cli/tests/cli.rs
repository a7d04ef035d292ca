use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use edgealloc::milp::parse_mps;
use serde_json::{json, Value};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edgealloc")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn task(id: u32, allowed: &[&str], memory: &str) -> Value {
    let lat = [("e", "300ms"), ("h", "50ms"), ("c", "20ms")];
    let pow = [("e", "4W"), ("h", "20W"), ("c", "400W")];
    let pick = |xs: &[(&str, &str)]| -> Value {
        xs.iter().filter(|(k, _)| allowed.contains(k)).map(|(k, v)| (k.to_string(), json!(v))).collect()
    };
    json!({
        "id": id, "memory": memory, "storage": "1MiB", "output_data": "1Mbit",
        "allowed": allowed, "latency": pick(&lat), "power": pick(&pow),
    })
}

fn write_graph(dir: &Path, name: &str, tasks: Vec<Value>, arcs: Value) -> String {
    let p = dir.join(name);
    fs::write(&p, json!({ "schema": 1, "tasks": tasks, "arcs": arcs }).to_string()).unwrap();
    p.to_string_lossy().into_owned()
}

fn all() -> &'static [&'static str] {
    &["e", "h", "c"]
}

#[test]
fn transform_fig2_scenarios() {
    let dir = TempDir::new().unwrap();
    let free = write_graph(dir.path(), "free.json", vec![task(1, all(), "1MiB"), task(2, all(), "1MiB")], json!([[1, 2]]));
    let out = dir.path().join("free");
    let o = run(&["transform", "--tfg", &free, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dot = fs::read_to_string(out.join("etfg.dot")).unwrap();
    assert_eq!(dot.matches(" -> ").count(), 9);
    assert_eq!(dot.matches("style=dashed").count(), 2);
    let etfg: Value = serde_json::from_str(&fs::read_to_string(out.join("etfg.json")).unwrap()).unwrap();
    assert_eq!(etfg["node_count"], 6);

    let fixed = write_graph(dir.path(), "fixed.json", vec![task(1, &["e"], "1MiB"), task(2, all(), "1MiB")], json!([[1, 2]]));
    let out = dir.path().join("fixed");
    assert_eq!(code(&run(&["transform", "--tfg", &fixed, "--out", out.to_str().unwrap()])), 0);
    let dot = fs::read_to_string(out.join("etfg.dot")).unwrap();
    assert_eq!(dot.matches(" -> ").count(), 3);
    assert_eq!(dot.matches("style=dashed").count(), 1);
}

#[test]
fn cyclic_graph_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let g = write_graph(
        dir.path(),
        "cyc.json",
        vec![task(1, all(), "1MiB"), task(2, all(), "1MiB"), task(3, all(), "1MiB")],
        json!([[1, 2], [2, 3], [3, 1]]),
    );
    let o = run(&["transform", "--tfg", &g, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cycle"), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!dir.path().join("etfg.dot").exists());
}

#[test]
fn malformed_inputs_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"schema\": 1, \"tasks\": [").unwrap();
    assert_eq!(code(&run(&["stats", "--tfg", bad.to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["stats", "--tfg", "builtin:inspection", "--objective", "energy", "--lthr", "3 parsecs"])), 2);
    assert_eq!(code(&run(&["stats", "--tfg", "builtin:inspection", "--channel-profile", "run9"])), 2);
}

#[test]
fn generate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let gen = |sub: &str| {
        let out = dir.path().join(sub);
        let o = run(&[
            "generate", "--structure", "serial", "--nodes", "10", "--seed", "1", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        (fs::read(out.join("S10_s1.json")).unwrap(), fs::read(out.join("S10_s1.meta.json")).unwrap())
    };
    let a = gen("a");
    assert_eq!(a, gen("b"));
    let meta: Value = serde_json::from_slice(&a.1).unwrap();
    assert_eq!(meta["stats"]["arcs"], 17);
    assert_eq!(meta["stats"]["depth"], 10);
}

#[test]
fn solve_generated_benchmark() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = run(&[
        "generate", "--structure", "mixed", "--nodes", "10", "--max-in", "4", "--max-out", "3",
        "--fixed-edge", "0.1", "--seed", "4", "--out", d,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let g = dir.path().join("M10_s4.json");
    let g = g.to_str().unwrap();
    for obj in ["latency", "energy"] {
        let out = dir.path().join(obj);
        let o = run(&["solve", "--tfg", g, "--objective", obj, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let sol: Value = serde_json::from_str(&fs::read_to_string(out.join("solution.json")).unwrap()).unwrap();
        assert_eq!(sol["optimality"]["status"], "proven-optimal");
        assert_eq!(sol["assignment"].as_object().unwrap().len(), 10);
    }
    // exact and float arithmetic agree on the allocation
    let ex = dir.path().join("exact");
    assert_eq!(code(&run(&["solve", "--tfg", g, "--exact", "--out", ex.to_str().unwrap()])), 0);
    let a: Value = serde_json::from_str(&fs::read_to_string(ex.join("solution.json")).unwrap()).unwrap();
    let b: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("latency/solution.json")).unwrap()).unwrap();
    assert_eq!(a["assignment"], b["assignment"]);
}

#[test]
fn infeasible_exits_three() {
    let dir = TempDir::new().unwrap();
    let g = write_graph(dir.path(), "big.json", vec![task(1, &["e"], "9GiB"), task(2, all(), "1MiB")], json!([[1, 2]]));
    let o = run(&["solve", "--tfg", &g, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let sol: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("solution.json")).unwrap()).unwrap();
    assert_eq!(sol["optimality"]["status"], "infeasible");
}

#[test]
fn time_limit_exits_four() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = run(&["generate", "--structure", "parallel", "--nodes", "300", "--max-out", "3", "--seed", "2", "--out", d]);
    assert_eq!(code(&o), 0);
    let g = dir.path().join("P300_s2.json");
    let o = run(&[
        "solve", "--tfg", g.to_str().unwrap(), "--objective", "energy", "--solver", "bnb", "--time-limit", "1ms",
        "--out", d,
    ]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn export_and_stats() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = run(&["export", "--tfg", "builtin:inspection", "--objective", "energy", "--lthr", "8000ms", "--out", d]);
    assert_eq!(code(&o), 0);
    let mps = parse_mps(&fs::read_to_string(dir.path().join("model.mps")).unwrap()).unwrap();
    assert_eq!(mps.columns.len(), 152);
    assert!(mps.rows.iter().any(|(n, _)| n == "lthr"));
    assert!(fs::read_to_string(dir.path().join("model.lp")).unwrap().contains("Binary"));

    let o = run(&["stats", "--tfg", "builtin:inspection"]);
    let s: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(s["model"]["variables"], 152);
    assert_eq!(s["model"]["logical_constraints_with_vacuous"], 149);
}

#[test]
fn baseline_writes_all_formats() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = run(&["baseline", "--tfg", "builtin:inspection", "--config", "C2", "--channel-profile", "run2", "--out", d]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let cases: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(cases, ["E", "H", "C", "O_L", "O_E"]);
    let dat = fs::read_to_string(dir.path().join("report.dat")).unwrap();
    assert_eq!(dat.lines().filter(|l| !l.starts_with('#')).count(), 5);
    let json: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["system"], "C2");
}
