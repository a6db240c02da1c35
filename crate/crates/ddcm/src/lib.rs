//! Data-driven solvers for one-dimensional elasticity.
//!
//! This crate solves static bar and planar-truss problems directly from a
//! material dataset of stress-strain pairs, without fitting a constitutive
//! model. The boundary-value problem is posed as a distance minimization:
//! find the state fields satisfying equilibrium and compatibility that are
//! closest (in a weighted squared L2 sense) to points of the dataset, and
//! the per-element dataset points realizing that distance.
//!
//! Two solving strategies are provided:
//!
//! * [`solvers::adm_solve`] — the alternating direction method: alternate a
//!   Newton solve of the fixed-data stationarity system with a per-element
//!   nearest-data reassignment until the assignment is a fixed point.
//! * [`solvers::go_adm_solve`] — the same, wrapped in a greedy outer loop
//!   that trials alternative data points element by element and commits
//!   only strict improvements of the global objective.
//!
//! A brute-force enumeration oracle ([`oracle::enumerate_global`]) provides
//! the exact global optimum of the data-selection problem on small
//! instances, and [`bench`] carries a manufactured-solution benchmark for
//! convergence studies. Both strain measures `e = u' + (alpha/2) u'^2` with
//! `alpha` in {0, 1} are supported.

pub mod assembly;
pub mod bench;
pub mod cyclic;
pub mod dataset;
pub mod oracle;
pub mod solvers;
pub mod structure;

pub use assembly::{KktSystem, SolverConfig, State};
pub use dataset::{ConsistencyReport, DataPoint, Dataset};
pub use oracle::{OracleError, OracleResult};
pub use solvers::{Assignment, InitMode, RunRecord, SolverError, SolverKind};
pub use structure::{BenchmarkSpec, StrainMeasure, Structure};
