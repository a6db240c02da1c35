//! Manufactured-solution benchmark harness: bar construction under the
//! manufactured load, relative L2 displacement errors, and the
//! (mesh x dataset) convergence grid.

use serde::Serialize;

use crate::assembly::SolverConfig;
use crate::dataset::{generate_linear, Dataset, DatasetError};
use crate::solvers::{solve_structure, RunRecord, SolverError, SolverKind};
use crate::structure::{
    build_bar, manufactured_bar_load, BarLoad, BarSupports, BenchmarkSpec, Structure,
    StructureError,
};

/// Default factor between the dataset strain range and the largest strain
/// of the reference solution.
pub const DEFAULT_RANGE_FACTOR: f64 = 1.5;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("load step {step} failed: {message}")]
    StepFailed { step: usize, message: String },
}

/// Fixed-fixed bar discretized with `n_elements`, loaded by the
/// manufactured axial force density.
pub fn benchmark_structure(
    spec: &BenchmarkSpec,
    n_elements: usize,
) -> Result<Structure, StructureError> {
    build_bar(
        spec.l0,
        n_elements,
        spec.area,
        BarSupports::FixedFixed,
        BarLoad::Distributed(&|xi| manufactured_bar_load(xi, spec)),
    )
}

/// Symmetric linear dataset spanning `range_factor` times the largest
/// reference strain.
pub fn benchmark_dataset(
    spec: &BenchmarkSpec,
    n_points: usize,
    range_factor: f64,
) -> Result<Dataset, DatasetError> {
    generate_linear(spec.e_modulus, n_points, range_factor * spec.max_strain())
}

// 5-point Gauss-Legendre nodes and weights on [-1, 1].
const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568888888888888889),
    (0.538469310105683091, 0.478628670499366468),
    (-0.538469310105683091, 0.478628670499366468),
    (0.906179845938663993, 0.236926885056189088),
    (-0.906179845938663993, 0.236926885056189088),
];

/// Relative L2 error of a piecewise-linear nodal displacement against the
/// manufactured reference, integrated with 5-point Gauss per element.
pub fn relative_l2_error(
    structure: &Structure,
    u: &nalgebra::DVector<f64>,
    spec: &BenchmarkSpec,
) -> f64 {
    let mut err_sq = 0.0;
    let mut ref_sq = 0.0;
    for el in structure.elements() {
        let [a, b] = el.nodes;
        let xa = structure.node(a)[0];
        let xb = structure.node(b)[0];
        let h = xb - xa;
        for (xi, w) in GAUSS5 {
            let x = 0.5 * (xa + xb) + 0.5 * h * xi;
            let weight = 0.5 * h * w;
            let t = (x - xa) / h;
            let uh = (1.0 - t) * u[a] + t * u[b];
            let uref = spec.displacement(x);
            err_sq += weight * (uh - uref) * (uh - uref);
            ref_sq += weight * uref * uref;
        }
    }
    (err_sq / ref_sq).sqrt()
}

/// Relative L2 displacement errors over a grid of mesh and dataset sizes.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorGrid {
    pub n_elements: Vec<usize>,
    pub n_data: Vec<usize>,
    /// `errors[i][j]` belongs to `n_elements[i]` and `n_data[j]`.
    pub errors: Vec<Vec<f64>>,
}

impl ErrorGrid {
    /// True when the error is non-increasing along both axes.
    pub fn is_monotone_nonincreasing(&self) -> bool {
        for i in 0..self.errors.len() {
            for j in 0..self.errors[i].len() {
                if i > 0 && self.errors[i][j] > self.errors[i - 1][j] {
                    return false;
                }
                if j > 0 && self.errors[i][j] > self.errors[i][j - 1] {
                    return false;
                }
            }
        }
        true
    }

    /// Largest relative variation of the error across mesh refinement at
    /// fixed dataset size: `max_j (max_i e_ij - min_i e_ij) / min_i e_ij`.
    pub fn mesh_variation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.n_data.len() {
            let column: Vec<f64> = self.errors.iter().map(|row| row[j]).collect();
            let max = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = column.iter().cloned().fold(f64::INFINITY, f64::min);
            if min > 0.0 {
                worst = worst.max((max - min) / min);
            }
        }
        worst
    }
}

/// Runs the benchmark over every (mesh, dataset) combination and collects
/// the relative L2 displacement error of the final load step.
pub fn convergence_grid(
    spec: &BenchmarkSpec,
    meshes: &[usize],
    data_sizes: &[usize],
    config: &SolverConfig,
    kind: SolverKind,
    range_factor: f64,
) -> Result<ErrorGrid, BenchError> {
    let mut errors = Vec::with_capacity(meshes.len());
    for &n_elements in meshes {
        let structure = benchmark_structure(spec, n_elements)?;
        let mut row = Vec::with_capacity(data_sizes.len());
        for &n_data in data_sizes {
            let dataset = benchmark_dataset(spec, n_data, range_factor)?;
            let record = solve_structure(&structure, &dataset, config, kind)?;
            let last = completed(&record)?;
            row.push(relative_l2_error(&structure, &last.state.u, spec));
        }
        errors.push(row);
    }
    Ok(ErrorGrid {
        n_elements: meshes.to_vec(),
        n_data: data_sizes.to_vec(),
        errors,
    })
}

fn completed(record: &RunRecord) -> Result<&crate::solvers::StepRecord, BenchError> {
    if let Some(f) = &record.failure {
        return Err(BenchError::StepFailed {
            step: f.step,
            message: f.message.clone(),
        });
    }
    record.steps.last().ok_or(BenchError::StepFailed {
        step: 0,
        message: "no load steps configured".into(),
    })
}
