//! Extreme single-device baselines, optimal-versus-baseline and
//! latency-versus-energy comparisons, and per-device/per-channel breakdown
//! reports.

use std::fmt;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::etfg::Etfg;
use crate::milp::{evaluate, Assignment, MilpError, Objective, ObjectiveBreakdown};
use crate::model::{DeviceRole, TaskId};
use crate::scalar::Scalar;
use crate::solver::{solve, Optimality, SolveConfig, SolveError, SolverKind};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Model(#[from] MilpError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CaseKind {
    E,
    H,
    C,
    #[serde(rename = "O_L")]
    OL,
    #[serde(rename = "O_E")]
    OE,
}

impl CaseKind {
    pub const ALL: [CaseKind; 5] = [CaseKind::E, CaseKind::H, CaseKind::C, CaseKind::OL, CaseKind::OE];

    /// Device every non-fixed task is forced onto, for the extreme cases.
    pub fn forced_device(self) -> Option<DeviceRole> {
        match self {
            CaseKind::E => Some(DeviceRole::Edge),
            CaseKind::H => Some(DeviceRole::Hub),
            CaseKind::C => Some(DeviceRole::Cloud),
            CaseKind::OL | CaseKind::OE => None,
        }
    }

    pub fn objective(self) -> Option<Objective> {
        match self {
            CaseKind::OL => Some(Objective::Latency),
            CaseKind::OE => Some(Objective::Energy),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CaseKind::E => "E",
            CaseKind::H => "H",
            CaseKind::C => "C",
            CaseKind::OL => "O_L",
            CaseKind::OE => "O_E",
        }
    }
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One evaluated allocation case.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineCase<S> {
    pub kind: CaseKind,
    /// `None` when the case is inapplicable or no feasible allocation exists.
    pub assignment: Option<Assignment>,
    pub breakdown: Option<ObjectiveBreakdown<S>>,
    pub feasible: bool,
    /// False when a forced device is not allowed for some task.
    pub applicable: bool,
    /// Solver verdict for the optimized cases.
    pub optimality: Option<Optimality>,
    pub violations: Vec<String>,
}

impl<S: Scalar> BaselineCase<S> {
    pub fn value(&self, objective: Objective) -> Option<&S> {
        if !self.feasible {
            return None;
        }
        self.breakdown.as_ref().map(|b| b.value(objective))
    }

    pub fn devices_used(&self) -> usize {
        self.assignment.as_ref().map_or(0, |a| {
            DeviceRole::ALL.iter().filter(|k| a.0.contains(k)).count()
        })
    }
}

/// Places every non-fixed task on `device`; `Err` names the first task that
/// does not allow it.
pub fn forced_assignment<S: Scalar>(etfg: &Etfg<S>, device: DeviceRole) -> Result<Assignment, TaskId> {
    etfg.graph()
        .tasks
        .iter()
        .map(|t| match t.allowed.single() {
            Some(k) => Ok(k),
            None if t.allowed.contains(device) => Ok(device),
            None => Err(t.id),
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Assignment)
}

fn extreme_case<S: Scalar>(etfg: &Etfg<S>, kind: CaseKind, l_thr: Option<&S>) -> Result<BaselineCase<S>, MilpError> {
    let device = kind.forced_device().expect("extreme case");
    match forced_assignment(etfg, device) {
        Err(task) => Ok(BaselineCase {
            kind,
            assignment: None,
            breakdown: None,
            feasible: false,
            applicable: false,
            optimality: None,
            violations: vec![format!("task {task} cannot run on {device}")],
        }),
        Ok(a) => {
            let b = evaluate(etfg, &a, l_thr)?;
            Ok(BaselineCase {
                kind,
                feasible: b.feasible(),
                violations: b.violations(),
                assignment: Some(a),
                breakdown: Some(b),
                applicable: true,
                optimality: None,
            })
        }
    }
}

fn optimal_case<S: Scalar>(
    etfg: &Etfg<S>,
    kind: CaseKind,
    l_thr: Option<&S>,
    solver: SolverKind,
    cfg: &SolveConfig,
) -> Result<BaselineCase<S>, SolveError> {
    let objective = kind.objective().expect("optimized case");
    let thr = if objective == Objective::Energy { l_thr } else { None };
    let sol = solve(etfg, objective, thr, solver, cfg)?;
    Ok(match sol.allocation {
        None => BaselineCase {
            kind,
            assignment: None,
            breakdown: None,
            feasible: false,
            applicable: true,
            optimality: Some(sol.optimality),
            violations: vec!["no allocation satisfies every budget and the latency threshold".to_string()],
        },
        Some(a) => BaselineCase {
            kind,
            feasible: a.breakdown.feasible(),
            violations: a.breakdown.violations(),
            assignment: Some(a.assignment),
            breakdown: Some(a.breakdown),
            applicable: true,
            optimality: Some(sol.optimality),
        },
    })
}

/// Cases E, H, C, O_L and O_E in that order. The threshold applies to the
/// extreme cases only under the energy objective, and always to O_E.
pub fn run_baselines<S: Scalar>(
    etfg: &Etfg<S>,
    objective: Objective,
    l_thr: Option<&S>,
    solver: SolverKind,
    cfg: &SolveConfig,
) -> Result<Vec<BaselineCase<S>>, AnalysisError> {
    let extreme_thr = if objective == Objective::Energy { l_thr } else { None };
    let mut cases = Vec::with_capacity(5);
    for kind in [CaseKind::E, CaseKind::H, CaseKind::C] {
        cases.push(extreme_case(etfg, kind, extreme_thr)?);
    }
    cases.push(optimal_case(etfg, CaseKind::OL, l_thr, solver, cfg)?);
    cases.push(optimal_case(etfg, CaseKind::OE, l_thr, solver, cfg)?);
    Ok(cases)
}

/// Solves under both objectives and reports the two optimal cases.
pub fn compare_objectives<S: Scalar>(
    etfg: &Etfg<S>,
    l_thr: Option<&S>,
    solver: SolverKind,
    cfg: &SolveConfig,
) -> Result<ComparisonReport, AnalysisError> {
    let cases = vec![
        optimal_case(etfg, CaseKind::OL, l_thr, solver, cfg)?,
        optimal_case(etfg, CaseKind::OE, l_thr, solver, cfg)?,
    ];
    Ok(ComparisonReport::new(etfg, &cases, l_thr))
}

/// True when the per-device and per-channel parts add up to both totals,
/// exactly for exact scalars and to `rel_tol` otherwise.
pub fn conserves<S: Scalar>(b: &ObjectiveBreakdown<S>, rel_tol: f64) -> bool {
    let sum = |xs: &[S]| xs.iter().cloned().sum::<S>();
    let lat = sum(&b.comp_latency) + b.comm_latency();
    let en = sum(&b.comp_energy) + b.comm_energy();
    let dev = sum(&b.device_energy);
    let close = |x: &S, y: &S| if S::is_exact() { x == y } else { crate::scalar::rel_close(x, y, rel_tol) };
    close(&lat, &b.total_latency) && close(&en, &b.total_energy) && close(&dev, &b.total_energy)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelRow {
    pub from: DeviceRole,
    pub to: DeviceRole,
    pub latency_s: f64,
    pub energy_j: f64,
}

/// Share of a finite budget in use; `None` for unbounded budgets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Utilization {
    pub memory: [Option<f64>; 3],
    pub storage: [Option<f64>; 3],
    pub energy: [Option<f64>; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub case: CaseKind,
    pub applicable: bool,
    pub feasible: bool,
    pub status: String,
    pub assignment: Option<String>,
    /// Absent for infeasible cases.
    pub total_latency_s: Option<f64>,
    pub total_energy_j: Option<f64>,
    /// e, h, c
    pub comp_latency_s: Option<[f64; 3]>,
    pub comp_energy_j: Option<[f64; 3]>,
    pub channels: Option<Vec<ChannelRow>>,
    /// Computation plus transmit, receive and relay energy, e, h, c.
    pub device_energy_j: Option<[f64; 3]>,
    pub utilization: Option<Utilization>,
    pub violations: Vec<String>,
}

/// Case-by-case breakdown table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub system: String,
    pub latency_threshold_s: Option<f64>,
    /// Channels reported per row, in order.
    pub channels: Vec<(DeviceRole, DeviceRole)>,
    pub rows: Vec<ReportRow>,
    /// Whether O_L and O_E chose the same allocation; `None` unless both
    /// were computed and feasible.
    pub same_optimal_allocation: Option<bool>,
}

fn arr<S: Scalar>(xs: &[S; 3]) -> [f64; 3] {
    [xs[0].to_f64(), xs[1].to_f64(), xs[2].to_f64()]
}

fn util<S: Scalar>(usage: &[S; 3], budget: impl Fn(DeviceRole) -> Option<S>) -> [Option<f64>; 3] {
    DeviceRole::ALL.map(|k| budget(k).map(|b| usage[k.index()].to_f64() / b.to_f64()))
}

impl ReportRow {
    fn new<S: Scalar>(etfg: &Etfg<S>, c: &BaselineCase<S>) -> ReportRow {
        let status = match (&c.optimality, c.applicable, c.feasible) {
            (_, false, _) => "inapplicable".to_string(),
            (Some(o), _, _) => o.to_string(),
            (None, _, true) => "feasible".to_string(),
            (None, _, false) => "infeasible".to_string(),
        };
        let mut row = ReportRow {
            case: c.kind,
            applicable: c.applicable,
            feasible: c.feasible,
            status,
            assignment: c.assignment.as_ref().map(|a| a.to_string()),
            total_latency_s: None,
            total_energy_j: None,
            comp_latency_s: None,
            comp_energy_j: None,
            channels: None,
            device_energy_j: None,
            utilization: None,
            violations: c.violations.clone(),
        };
        if let Some(b) = &c.breakdown {
            row.utilization = Some(Utilization {
                memory: util(&b.memory, |k| etfg.budgets(k).memory.clone()),
                storage: util(&b.storage, |k| etfg.budgets(k).storage.clone()),
                energy: util(&b.device_energy, |k| etfg.budgets(k).energy.clone()),
            });
            if c.feasible {
                row.total_latency_s = Some(b.total_latency.to_f64());
                row.total_energy_j = Some(b.total_energy.to_f64());
                row.comp_latency_s = Some(arr(&b.comp_latency));
                row.comp_energy_j = Some(arr(&b.comp_energy));
                row.device_energy_j = Some(arr(&b.device_energy));
                row.channels = Some(
                    b.channels
                        .iter()
                        .map(|u| ChannelRow {
                            from: u.from,
                            to: u.to,
                            latency_s: u.latency.to_f64(),
                            energy_j: u.energy.to_f64(),
                        })
                        .collect(),
                );
            }
        }
        row
    }

    /// Largest relative mismatch between the totals and the sums of their
    /// parts; zero for rows without numbers.
    pub fn conservation_residual(&self) -> f64 {
        let (Some(tl), Some(te), Some(cl), Some(ce), Some(ch), Some(de)) = (
            self.total_latency_s,
            self.total_energy_j,
            self.comp_latency_s,
            self.comp_energy_j,
            &self.channels,
            self.device_energy_j,
        ) else {
            return 0.0;
        };
        let rel = |sum: f64, total: f64| (sum - total).abs() / total.abs().max(f64::MIN_POSITIVE);
        let lat = cl.iter().sum::<f64>() + ch.iter().map(|c| c.latency_s).sum::<f64>();
        let en = ce.iter().sum::<f64>() + ch.iter().map(|c| c.energy_j).sum::<f64>();
        let dev = de.iter().sum::<f64>();
        rel(lat, tl).max(rel(en, te)).max(rel(dev, te))
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

impl ComparisonReport {
    pub fn new<S: Scalar>(etfg: &Etfg<S>, cases: &[BaselineCase<S>], l_thr: Option<&S>) -> ComparisonReport {
        let mut channels: Vec<_> = etfg.system().channels.iter().map(|c| (c.from, c.to)).collect();
        channels.sort();
        let find = |k: CaseKind| cases.iter().find(|c| c.kind == k && c.feasible);
        let same_optimal_allocation = match (find(CaseKind::OL), find(CaseKind::OE)) {
            (Some(a), Some(b)) => Some(a.assignment == b.assignment),
            _ => None,
        };
        ComparisonReport {
            system: etfg.system().name.clone(),
            latency_threshold_s: l_thr.map(|t| t.to_f64()),
            channels,
            rows: cases.iter().map(|c| ReportRow::new(etfg, c)).collect(),
            same_optimal_allocation,
        }
    }

    pub fn row(&self, kind: CaseKind) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.case == kind)
    }

    fn numeric_header(&self) -> Vec<String> {
        let mut h: Vec<String> = vec!["total_latency_s".into(), "total_energy_j".into()];
        for k in DeviceRole::ALL {
            h.push(format!("comp_latency_{}_s", k.letter()));
        }
        for (a, b) in &self.channels {
            h.push(format!("comm_latency_{}{}_s", a.letter(), b.letter()));
        }
        for k in DeviceRole::ALL {
            h.push(format!("comp_energy_{}_j", k.letter()));
        }
        for (a, b) in &self.channels {
            h.push(format!("comm_energy_{}{}_j", a.letter(), b.letter()));
        }
        for k in DeviceRole::ALL {
            h.push(format!("energy_{}_j", k.letter()));
        }
        h
    }

    fn numeric_cells(&self, r: &ReportRow) -> Vec<Option<f64>> {
        let n = self.channels.len();
        let mut v = vec![r.total_latency_s, r.total_energy_j];
        let three = |x: Option<[f64; 3]>| (0..3).map(move |i| x.map(|a| a[i]));
        let chan = |f: fn(&ChannelRow) -> f64| -> Vec<Option<f64>> {
            match &r.channels {
                Some(c) => c.iter().map(|c| Some(f(c))).collect(),
                None => vec![None; n],
            }
        };
        v.extend(three(r.comp_latency_s));
        v.extend(chan(|c| c.latency_s));
        v.extend(three(r.comp_energy_j));
        v.extend(chan(|c| c.energy_j));
        v.extend(three(r.device_energy_j));
        v
    }

    /// One row per case; infeasible cases leave the numbers empty and list
    /// their violations.
    pub fn to_csv(&self) -> Result<String, AnalysisError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = vec!["case".into(), "applicable".into(), "feasible".into(), "status".into()];
        header.extend(self.numeric_header());
        for what in ["memory", "storage", "energy"] {
            for k in DeviceRole::ALL {
                header.push(format!("{what}_util_{}", k.letter()));
            }
        }
        header.push("assignment".into());
        header.push("violations".into());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.case.to_string(), r.applicable.to_string(), r.feasible.to_string(), r.status.clone()];
            rec.extend(self.numeric_cells(r).into_iter().map(opt));
            for pick in [|u: &Utilization| u.memory, |u: &Utilization| u.storage, |u: &Utilization| u.energy] {
                for i in 0..3 {
                    rec.push(opt(r.utilization.as_ref().and_then(|u| pick(u)[i])));
                }
            }
            rec.push(r.assignment.clone().unwrap_or_default());
            rec.push(r.violations.join("; "));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| AnalysisError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Whitespace-separated columns for gnuplot; missing values are `NaN`.
    pub fn to_gnuplot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# system {}", self.system);
        let _ = writeln!(out, "# case {}", self.numeric_header().join(" "));
        for r in &self.rows {
            let cells: Vec<String> =
                self.numeric_cells(r).into_iter().map(|x| x.map_or_else(|| "NaN".to_string(), |v| v.to_string())).collect();
            let _ = writeln!(out, "{} {}", r.case, cells.join(" "));
        }
        out
    }
}
