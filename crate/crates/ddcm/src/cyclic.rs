//! Cyclic-test pipeline: a synthetic loading/unloading/reloading series
//! generator standing in for proprietary rope test data, and the
//! three-phase warm-started solve producing a load-deflection curve.
//!
//! Each phase of a cyclic test follows its own stress-strain branch, so
//! the pipeline splits the series into per-phase sub-datasets and solves
//! them sequentially: the converged state of one phase becomes the initial
//! state of the next, and the assignment is re-derived against the new
//! sub-dataset. Distinct loading and unloading branches produce a
//! hysteresis loop of strictly positive enclosed area in the
//! load-deflection plane.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::assembly::SolverConfig;
use crate::dataset::{check_pairs_consistency, DataPoint, Dataset, DatasetError, Provenance};
use crate::solvers::{
    solve_structure_from, RunRecord, SolverError, SolverKind, StartCondition,
};
use crate::structure::{build_bar, BarLoad, BarSupports, StructureError};

/// Parameters of the synthetic cyclic test series.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CyclicSpec {
    /// Rows per phase.
    pub steps_per_phase: usize,
    /// Peak applied force (N).
    pub force_peak: f64,
    /// Smallest force held during unloading, as a fraction of the peak.
    pub force_floor: f64,
    /// Strain at peak force on the first loading branch.
    pub strain_peak: f64,
    /// Residual strain after full unloading, as a fraction of
    /// `strain_peak`.
    pub permanent_set: f64,
    /// Rope cross-section area (m^2), converting force to stress.
    pub area: f64,
}

impl Default for CyclicSpec {
    fn default() -> Self {
        Self {
            steps_per_phase: 40,
            force_peak: 4.0e5,
            force_floor: 0.05,
            strain_peak: 0.05,
            permanent_set: 0.35,
            area: std::f64::consts::PI * 0.104 * 0.104,
        }
    }
}

/// One row of a cyclic test log.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CyclicRow {
    pub time: f64,
    pub force: f64,
    pub strain: f64,
}

/// A synthetic cyclic test: the combined row log plus the index ranges of
/// the three phases (first loading, first unloading, second loading).
#[derive(Clone, Debug)]
pub struct CyclicSeries {
    pub rows: Vec<CyclicRow>,
    pub splits: [Range<usize>; 3],
}

impl CyclicSeries {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "time,force,strain")?;
        for r in &self.rows {
            writeln!(w, "{},{},{}", r.time, r.force, r.strain)?;
        }
        Ok(())
    }

    /// Per-phase sub-datasets with stresses `force / area`.
    pub fn phase_datasets(&self, area: f64) -> Result<Vec<Dataset>, DatasetError> {
        self.splits
            .iter()
            .enumerate()
            .map(|(phase, r)| {
                let points = self.rows[r.clone()]
                    .iter()
                    .map(|row| DataPoint::new(row.strain, row.force / area))
                    .collect();
                Dataset::new(
                    points,
                    Provenance::Custom {
                        label: format!("synthetic-cyclic phase {phase}"),
                    },
                )
            })
            .collect()
    }

    /// Per-phase applied force sequences.
    pub fn phase_forces(&self) -> Vec<Vec<f64>> {
        self.splits
            .iter()
            .map(|r| self.rows[r.clone()].iter().map(|row| row.force).collect())
            .collect()
    }
}

/// Generates the synthetic cyclic series. The loading, unloading, and
/// reloading branches are distinct monotone power laws in the normalized
/// force, with a permanent set after the first unloading; every branch is
/// pairwise consistent on its own.
pub fn synthetic_cyclic(spec: &CyclicSpec) -> CyclicSeries {
    let n = spec.steps_per_phase.max(2);
    let e_peak = spec.strain_peak;
    let e_res = spec.permanent_set * e_peak;
    let f_floor = spec.force_floor;
    let mut rows = Vec::with_capacity(3 * n);
    let mut time = 0.0;
    let mut push = |rows: &mut Vec<CyclicRow>, force: f64, strain: f64| {
        time += 1.0;
        rows.push(CyclicRow {
            time,
            force,
            strain,
        });
    };

    // First loading: x from >0 to 1.
    for j in 1..=n {
        let x = j as f64 / n as f64;
        push(&mut rows, x * spec.force_peak, e_peak * x.powf(0.7));
    }
    // First unloading: x from 1 down to force_floor; the branch sits above
    // the loading branch in strain, ending at the permanent set.
    for j in 1..=n {
        let x = 1.0 - (1.0 - f_floor) * j as f64 / n as f64;
        let strain = e_res + (e_peak - e_res) * x.powf(0.5);
        push(&mut rows, x * spec.force_peak, strain);
    }
    // Second loading: back up from force_floor to 1 between the branches.
    for j in 1..=n {
        let x = f_floor + (1.0 - f_floor) * j as f64 / n as f64;
        let strain = e_res + (e_peak - e_res) * x.powf(0.8);
        push(&mut rows, x * spec.force_peak, strain);
    }

    CyclicSeries {
        rows,
        splits: [0..n, n..2 * n, 2 * n..3 * n],
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RopeError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("phase {phase} failed at load step {step}: {message}")]
    PhaseFailed {
        phase: usize,
        step: usize,
        message: String,
    },
    #[error("phase {phase} dataset is thermomechanically inconsistent ({violations} violating pairs)")]
    InconsistentDataset { phase: usize, violations: usize },
}

/// Result of the multi-phase cyclic solve.
#[derive(Clone, Debug, Serialize)]
pub struct RopeRun {
    pub records: Vec<RunRecord>,
    /// `(applied force, end displacement)` per load step across all
    /// phases, in order.
    pub load_deflection: Vec<(f64, f64)>,
}

impl RopeRun {
    /// Signed shoelace area of the closed load-deflection polyline;
    /// nonzero magnitude means the loading and unloading paths enclose a
    /// hysteresis loop.
    pub fn loop_area(&self) -> f64 {
        polyline_area(&self.load_deflection)
    }

    /// Consistency of the solved per-element stress-strain pairs at the
    /// final step of every phase.
    pub fn results_consistent(&self) -> bool {
        self.records.iter().all(|record| {
            record.steps.last().map_or(false, |step| {
                let pairs: Vec<DataPoint> = step
                    .state
                    .e
                    .iter()
                    .zip(step.state.s.iter())
                    .map(|(&e, &s)| DataPoint::new(e, s))
                    .collect();
                check_pairs_consistency(&pairs).consistent
            })
        })
    }
}

/// Shoelace area of the polygon obtained by closing the polyline.
pub fn polyline_area(points: &[(f64, f64)]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let mut twice_area = 0.0;
    for i in 0..points.len() {
        let (x1, y1) = points[i];
        let (x2, y2) = points[(i + 1) % points.len()];
        twice_area += x1 * y2 - x2 * y1;
    }
    0.5 * twice_area
}

/// Solves a sequence of (sub-dataset, force schedule) phases on a
/// fixed-free bar of `n_elements`, warm-starting each phase from the
/// previous one. With `check` set, phase datasets failing the consistency
/// check are rejected.
pub fn rope_pipeline(
    phases: &[(Dataset, Vec<f64>)],
    l0: f64,
    n_elements: usize,
    area: f64,
    base_config: &SolverConfig,
    kind: SolverKind,
    check: bool,
) -> Result<RopeRun, RopeError> {
    // Unit end force as the reference load; the per-phase force values act
    // as load factors.
    let bar = build_bar(
        l0,
        n_elements,
        area,
        BarSupports::FixedFree,
        BarLoad::EndForce(1.0),
    )?;
    let end_dof = bar.n_dofs() - 1;

    let mut records = Vec::with_capacity(phases.len());
    let mut load_deflection = Vec::new();
    let mut warm_state: Option<crate::assembly::State> = None;
    for (phase, (dataset, forces)) in phases.iter().enumerate() {
        if check {
            let report = dataset.check_consistency();
            if !report.consistent {
                return Err(RopeError::InconsistentDataset {
                    phase,
                    violations: report.violations.len(),
                });
            }
        }
        let config = SolverConfig {
            load_factors: forces.clone(),
            ..base_config.clone()
        };
        let start = match &warm_state {
            None => StartCondition::Fresh,
            Some(state) => StartCondition::Warm { state },
        };
        let record = solve_structure_from(&bar, dataset, &config, kind, start)?;
        if let Some(f) = &record.failure {
            return Err(RopeError::PhaseFailed {
                phase,
                step: f.step,
                message: f.message.clone(),
            });
        }
        for step in &record.steps {
            load_deflection.push((step.load_factor, step.state.u[end_dof]));
        }
        warm_state = record.steps.last().map(|s| s.state.clone());
        records.push(record);
    }
    Ok(RopeRun {
        records,
        load_deflection,
    })
}
