//! Exhaustive global reference solver for the data-selection problem.
//!
//! The assignment of dataset points to elements is a one-hot binary
//! selection; on small instances the globally optimal selection can be
//! found by complete enumeration: for every one of the `n_D^m` assignments
//! solve the fixed-data stationarity system and keep the converged result
//! with the lowest global objective. For linear strain measures each
//! subproblem is a single linear solve and the enumeration is exact.
//! For nonlinear strains the reference is exact over the Newton-reachable
//! set: assignments whose solve fails are counted and excluded.

use nalgebra::DVector;
use thiserror::Error;

use crate::assembly::{SolverConfig, State};
use crate::dataset::Dataset;
use crate::solvers::{newton_solve, Assignment, Problem, SolverError};
use crate::structure::Structure;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("enumeration of {required} assignments exceeds the budget of {budget}")]
    BudgetExceeded { required: u128, budget: u64 },
    #[error("no assignment converged out of {0} enumerated")]
    AllFailed(u64),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Initial state for each fixed-data subproblem.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OracleStart {
    /// Zero state.
    #[default]
    Zero,
    /// Solution of the corresponding linear-strain problem.
    LinearSolution,
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub best_assignment: Assignment,
    pub best_state: State,
    pub best_objective: f64,
    /// Number of assignments whose subproblem was solved.
    pub n_evaluated: u64,
    /// Number of assignments whose subproblem failed to converge.
    pub n_failed: u64,
}

pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Enumerates every one-hot assignment in lexicographic order, solves the
/// fixed-data stationarity system for each, and returns the converged
/// minimum of the global objective. Ties keep the lexicographically
/// smallest assignment. Applies the single given load (no stepping).
pub fn enumerate_global(
    structure: &Structure,
    dataset: &Dataset,
    config: &SolverConfig,
    load: &DVector<f64>,
    budget: u64,
    start: OracleStart,
) -> Result<OracleResult, OracleError> {
    let m = structure.n_elements();
    let n_data = dataset.len() as u128;
    let required = n_data.checked_pow(m as u32).unwrap_or(u128::MAX);
    if required > budget as u128 {
        return Err(OracleError::BudgetExceeded { required, budget });
    }
    let problem = Problem::new(structure, dataset, config)?;

    let guess = match start {
        OracleStart::Zero => State::zeros(structure),
        OracleStart::LinearSolution => {
            let linear_cfg = SolverConfig {
                strain: crate::structure::StrainMeasure::Linear,
                ..config.clone()
            };
            let linear = Problem::new(structure, dataset, &linear_cfg)?;
            let origin = dataset
                .origin_index()
                .unwrap_or_else(|| dataset.nearest_to_origin(problem.c()));
            let assignment = Assignment::uniform(origin, m);
            newton_solve(&linear, &State::zeros(structure), &assignment, load)?.state
        }
    };

    let mut best: Option<OracleResult> = None;
    let mut n_evaluated = 0u64;
    let mut n_failed = 0u64;
    let mut digits = vec![0usize; m];
    loop {
        let assignment = Assignment::new(digits.clone());
        n_evaluated += 1;
        match newton_solve(&problem, &guess, &assignment, load) {
            Ok(out) => {
                let objective = problem.objective(&out.state, &assignment);
                // Strict improvement keeps the lexicographically smallest
                // assignment among ties (enumeration order is lexicographic).
                if best.as_ref().map_or(true, |b| objective < b.best_objective) {
                    best = Some(OracleResult {
                        best_assignment: assignment,
                        best_state: out.state,
                        best_objective: objective,
                        n_evaluated: 0,
                        n_failed: 0,
                    });
                }
            }
            Err(SolverError::Diverged { .. })
            | Err(SolverError::Singular)
            | Err(SolverError::NoConvergence(_)) => n_failed += 1,
            Err(e) => return Err(e.into()),
        }

        // Advance the mixed-radix counter.
        let mut pos = m;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < dataset.len() {
                break;
            }
            digits[pos] = 0;
            if pos == 0 {
                let mut result = best.ok_or(OracleError::AllFailed(n_evaluated))?;
                result.n_evaluated = n_evaluated;
                result.n_failed = n_failed;
                return Ok(result);
            }
        }
    }
}
