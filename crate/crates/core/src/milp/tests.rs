use num_traits::Zero;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::etfg::transform;
use crate::model::{DeviceRole::*, DeviceSet, TaskGraph};
use crate::scalar::ratio;
use crate::testkit::{fig2, profiled, random_dag, run1};
use crate::Exact;

fn exact(g: &TaskGraph) -> Etfg<Exact> {
    transform(g, &run1()).unwrap()
}

fn all_assignments(e: &Etfg<Exact>) -> Vec<Assignment> {
    let mut out = vec![Vec::new()];
    for c in e.composite_nodes() {
        out = out
            .into_iter()
            .flat_map(|p: Vec<DeviceRole>| {
                c.iter().map(move |n| {
                    let mut q = p.clone();
                    q.push(n.device);
                    q
                })
            })
            .collect();
    }
    out.into_iter().map(Assignment).collect()
}

#[test]
fn fig2b_model_shape() {
    let e = exact(&fig2(DeviceSet::ALL, 1e6));
    let m = build_model(&e, Objective::Latency, None).unwrap();
    assert_eq!(m.column_count(), 15);
    let s = m.stats();
    assert_eq!((s.node_variables, s.arc_variables), (6, 9));
    // 2 assignment, 1 out-degree, 27 linking, 8 finite budgets (cloud energy unbounded)
    assert_eq!(s.algebraic_rows, 2 + 1 + 27 + 8);
    assert_eq!(s.logical_constraints, 2 + 1 + 9 + 8);
    assert_eq!(s.logical_constraints_with_vacuous, 2 + 2 + 9 + 8);
    assert_eq!(s.vacuous_outdegree_rows_omitted, 1);
    assert!(m.row("lthr").is_none());
    assert!(m.row("energy_c").is_none());
    assert_eq!(m.variables[0].name, "x1e");
    assert_eq!(m.variables[6].name, "x1e_2e");
    assert_eq!(m.variables[14].name, "x1c_2c");
}

#[test]
fn fig2c_model_has_seven_columns() {
    let e = exact(&fig2(DeviceSet::only(Edge), 1e6));
    let m = build_model(&e, Objective::Energy, Some(Exact::from_f64(8.0))).unwrap();
    assert_eq!(m.column_count(), 7);
    assert_eq!(m.row("lthr").unwrap().rhs, Exact::from_f64(8.0));
    assert_eq!(m.stats().algebraic_rows, 2 + 1 + 9 + 8 + 1);
}

#[test]
fn threshold_must_be_positive() {
    let e = exact(&fig2(DeviceSet::ALL, 1e6));
    assert_eq!(build_model(&e, Objective::Energy, Some(Exact::zero())), Err(MilpError::NonPositiveThreshold));
    let m = build_model(&e, Objective::Latency, Some(Exact::from_f64(1.0))).unwrap();
    assert_eq!(m.latency_threshold, None);
}

#[test]
fn energy_rows_exist_under_both_objectives() {
    let e = exact(&fig2(DeviceSet::ALL, 1e6));
    for obj in [Objective::Latency, Objective::Energy] {
        let m = build_model(&e, obj, None).unwrap();
        assert!(m.row("energy_e").is_some() && m.row("energy_h").is_some());
    }
}

#[test]
fn hub_energy_row_charges_relay() {
    let e = exact(&fig2(DeviceSet::ALL, 1e6));
    let m = build_model(&e, Objective::Latency, None).unwrap();
    let row = m.row("energy_h").unwrap();
    let col = m.column_of("x1e_2c").unwrap();
    // D1 (rho_eh + tau_hc) = 1e6 * (0.70 + 2.5) uJ
    assert_eq!(row.coefficient(col), Some(&ratio(32, 10)));
    assert_eq!(row.coefficient(m.column_of("x1c_2e").unwrap()), Some(&ratio(225, 100)));
    assert_eq!(row.coefficient(m.column_of("x1e_2h").unwrap()), Some(&ratio(7, 10)));
    assert_eq!(row.coefficient(m.column_of("x1h_2c").unwrap()), Some(&ratio(25, 10)));
    assert_eq!(row.coefficient(m.column_of("x1h_2h").unwrap()), None);
    assert_eq!(row.coefficient(m.column_of("x2h").unwrap()), Some(&(Exact::from_f64(25.0) * Exact::from_f64(0.08))));
    assert_eq!(energy_budget_row(&e, Hub).unwrap(), row.clone());

    let erow = m.row("energy_e").unwrap();
    assert_eq!(erow.coefficient(col), Some(&ratio(1, 1)));
    let crow = energy_budget_row(&e, Cloud);
    assert_eq!(crow, Err(MilpError::UnboundedEnergyBudget(Cloud)));
}

#[test]
fn single_fixed_task_energy_row() {
    let g = TaskGraph::new(vec![profiled(1, DeviceSet::only(Edge), [2.0, 0.0, 0.0], [3.0, 0.0, 0.0], 5e6)], vec![]);
    let e = exact(&g);
    let row = energy_budget_row(&e, Edge).unwrap();
    assert_eq!(row.coefficients, vec![(0, Exact::from_f64(6.0))]);
    assert_eq!(row.rhs, Exact::from_f64(129.96 * 3600.0));
    assert!(energy_budget_row(&e, Hub).unwrap().coefficients.is_empty());
}

#[test]
fn evaluate_edge_to_hub() {
    let e = exact(&fig2(DeviceSet::ALL, 1e6));
    let a = Assignment(vec![Edge, Hub]);
    let b = evaluate(&e, &a, None).unwrap();
    assert_eq!(b.comm_latency(), ratio(1, 15));
    assert_eq!(b.comm_energy(), ratio(17, 10));
    assert_eq!(b.channel(Edge, Hub).unwrap().energy, ratio(17, 10));
    let comp_e = Exact::from_f64(4.0) * Exact::from_f64(0.3);
    let comp_h = Exact::from_f64(25.0) * Exact::from_f64(0.08);
    assert_eq!(b.device_energy[0], comp_e.clone() + ratio(1, 1));
    assert_eq!(b.device_energy[1], comp_h.clone() + ratio(7, 10));
    assert_eq!(b.total_energy, comp_e + comp_h + ratio(17, 10));
    assert_eq!(b.total_latency, Exact::from_f64(0.3) + Exact::from_f64(0.08) + ratio(1, 15));
    assert!(b.feasible());
    assert_eq!(b.latency_ok, None);
}

#[test]
fn evaluate_relay_charges_hub() {
    let e = exact(&fig2(DeviceSet::ALL, 1e6));
    let b = evaluate(&e, &Assignment(vec![Edge, Cloud]), Some(&Exact::from_f64(0.1))).unwrap();
    assert_eq!(b.comp_latency[1], Exact::zero());
    assert_eq!(b.device_energy[1], ratio(32, 10));
    assert_eq!(b.comm_latency(), ratio(1, 15) + ratio(1, 25));
    assert_eq!(b.latency_ok, Some(false));
    assert_eq!(b.violations(), vec!["latency threshold".to_string()]);
}

#[test]
fn single_device_has_no_communication() {
    let e = exact(&fig2(DeviceSet::ALL, 1e6));
    for k in DeviceRole::ALL {
        let b = evaluate(&e, &Assignment::uniform(2, k), None).unwrap();
        assert!(b.comm_latency().is_zero() && b.comm_energy().is_zero());
        assert_eq!(b.total_latency, b.comp_latency[k.index()]);
    }
}

#[test]
fn evaluate_rejects_disallowed_device() {
    let e = exact(&fig2(DeviceSet::only(Edge), 1e6));
    assert_eq!(
        evaluate(&e, &Assignment(vec![Hub, Hub]), None),
        Err(MilpError::NotAllowed(crate::TaskId(1), Hub))
    );
    assert!(matches!(evaluate(&e, &Assignment(vec![Edge]), None), Err(MilpError::AssignmentLength { .. })));
}

#[test]
fn mps_round_trip_fig2c() {
    let e = exact(&fig2(DeviceSet::only(Edge), 1e6));
    let m = build_model(&e, Objective::Energy, Some(Exact::from_f64(8.0))).unwrap();
    let text = export_mps(&m);
    let p = parse_mps(&text).unwrap();
    assert_eq!(p.columns.len(), 7);
    assert_eq!(p.binary.len(), 7);
    assert_eq!(p.integer.len(), 7);
    assert_eq!(p.rows.len(), m.rows.len());
    for (ri, r) in m.rows.iter().enumerate() {
        assert_eq!(p.rows[ri].0, r.label);
        assert_eq!(p.rows[ri].1, r.sense);
        assert!((p.rhs[ri] - r.rhs.to_f64()).abs() <= 1e-11 * r.rhs.to_f64().abs());
        for (c, v) in &r.coefficients {
            let got = p.coefficients[&(*c, ri)];
            assert!((got - v.to_f64()).abs() <= 1e-11 * v.to_f64().abs());
        }
    }
    assert_eq!(p.coefficients.len(), m.stats().nonzeros);
    assert_eq!(export_mps(&m), text);
}

#[test]
fn mps_single_task_has_one_column() {
    let g = TaskGraph::new(vec![profiled(1, DeviceSet::only(Hub), [1.0; 3], [1.0; 3], 0.0)], vec![]);
    let m = build_model(&exact(&g), Objective::Latency, None).unwrap();
    let p = parse_mps(&export_mps(&m)).unwrap();
    assert_eq!(p.columns, vec!["x1h".to_string()]);
}

#[test]
fn lp_export_shape() {
    let e = exact(&fig2(DeviceSet::ALL, 1e6));
    let m = build_model(&e, Objective::Energy, Some(Exact::from_f64(8.0))).unwrap();
    let lp = export_lp(&m);
    assert!(lp.starts_with("\\ edgealloc energy model\nMinimize\n obj: "));
    assert!(lp.contains("\nSubject To\n assign_1: 1 x1e + 1 x1h + 1 x1c = 1\n"));
    assert!(lp.contains(" link3_1e_2c: - 1 x1e - 1 x2c + 1 x1e_2c >= -1\n"));
    assert!(lp.ends_with("x1c_2c\nEnd\n"));
    assert!(lp.lines().all(|l| l.len() <= 80));
    assert_eq!(export_lp(&m), lp);
}

fn small_instance(seed: u64) -> Etfg<Exact> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 2 + (seed % 4) as usize;
    exact(&random_dag(&mut rng, n, 0.5, 0.25))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn point_objective_matches_evaluate(seed in 0u64..10_000) {
        let e = small_instance(seed);
        let ml = build_model(&e, Objective::Latency, None).unwrap();
        let me = build_model(&e, Objective::Energy, Some(Exact::from_f64(8.0))).unwrap();
        for a in all_assignments(&e) {
            let b = evaluate(&e, &a, Some(&Exact::from_f64(8.0))).unwrap();
            let x = ml.point(&e, &a).unwrap();
            prop_assert_eq!(ml.objective_value(&x), b.total_latency.clone());
            prop_assert_eq!(me.objective_value(&x), b.total_energy.clone());
            // structural rows always hold; budget rows hold iff evaluate agrees
            let violated = me.violated_rows(&x);
            prop_assert!(violated.iter().all(|l| !l.starts_with("assign") && !l.starts_with("outdeg") && !l.starts_with("link")));
            prop_assert_eq!(violated.is_empty(), b.feasible());
            let selected_arcs = x[e.node_count()..].iter().filter(|&&v| v == 1).count();
            prop_assert_eq!(selected_arcs, e.graph().out_degrees().iter().sum::<usize>());
        }
    }

    #[test]
    fn linking_rows_reject_inconsistent_arcs(seed in 0u64..10_000) {
        let e = small_instance(seed);
        prop_assume!(e.arc_count() > 0);
        let m = build_model(&e, Objective::Latency, None).unwrap();
        let a = all_assignments(&e).remove(0);
        let mut x = m.point(&e, &a).unwrap();
        let col = e.node_count() + (seed as usize % e.arc_count());
        x[col] ^= 1;
        prop_assert!(m.violated_rows(&x).iter().any(|l| l.starts_with("link") || l.starts_with("outdeg")));
    }

    #[test]
    fn latency_scaling_preserves_argmin(seed in 0u64..10_000, c in 1i64..20) {
        let e = small_instance(seed);
        let factor = ratio(c, 7);
        let scaled = e.map_latencies(|v| v.clone() * factor.clone());
        let best = |e: &Etfg<Exact>| {
            let mut vals: Vec<(Exact, Assignment)> = all_assignments(e)
                .into_iter()
                .map(|a| (evaluate(e, &a, None).unwrap().total_latency, a))
                .collect();
            vals.sort();
            vals
        };
        let (b0, b1) = (best(&e), best(&scaled));
        for ((v0, a0), (v1, a1)) in b0.iter().zip(&b1) {
            prop_assert_eq!(a0, a1);
            prop_assert_eq!(v0.clone() * factor.clone(), v1.clone());
        }
    }
}
