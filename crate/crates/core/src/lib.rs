//! Design-time task allocation for edge/hub/cloud systems.
//!
//! A task flow graph is expanded into an extended task flow graph (ETFG)
//! whose candidate nodes and arcs carry latency and energy coefficients. The
//! ETFG is turned into a binary integer linear program under a latency or an
//! energy objective with per-device memory, storage and energy budgets, and
//! solved exactly.
//!
//! Everything from the ETFG onwards is generic over [`Scalar`]; use
//! [`Exact`] for reproducible optimal values and `f64` for speed.

pub mod analysis;
pub mod etfg;
pub mod generator;
pub mod milp;
pub mod model;
pub mod presets;
pub mod scalar;
pub mod schema;
pub mod solver;
pub mod units;

#[cfg(test)]
mod testkit;

pub use etfg::{transform, Etfg};
pub use milp::{build_model, evaluate, BilpModel, Objective, ObjectiveBreakdown};
pub use model::{DeviceRole, DeviceSet, SystemModel, Task, TaskGraph, TaskId};
pub use scalar::Scalar;
pub use solver::{Allocation, Optimality, SolveConfig};

/// Exact rational scalar.
pub type Exact = num_rational::BigRational;

pub type ExactEtfg = Etfg<Exact>;
pub type FloatEtfg = Etfg<f64>;
pub type ExactModel = BilpModel<Exact>;
pub type FloatModel = BilpModel<f64>;
pub type ExactAllocation = Allocation<Exact>;
pub type FloatAllocation = Allocation<f64>;
