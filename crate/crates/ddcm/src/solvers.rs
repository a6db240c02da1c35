//! The Newton-Raphson inner solver, the alternating direction method
//! (ADM), its greedy-optimization extension (GO-ADM), the data
//! initialization schemes, and the multi-load-step driver.
//!
//! ADM alternates two subproblems: with the per-element data pairs held
//! fixed, a Newton solve of the stationarity system yields the state; with
//! the state held fixed, each element is reassigned to its nearest dataset
//! point. The alternation stops when the assignment (an index vector,
//! compared exactly) is a fixed point. Every Newton solve inside one ADM
//! call starts from the same solution guess; only the selected data pairs
//! change between alternations.
//!
//! GO-ADM wraps ADM in a greedy outer loop: elements are sorted by
//! descending element objective, the two nearest data alternatives are
//! determined for the worst element, the better one not currently assigned
//! is trialed as a modified initialization of a fresh ADM solve, and the
//! result is committed only when it strictly lowers the global objective.
//! Each commit restarts the sweep; every attempted search counts against
//! the `k_max` budget, including failures and diverged trials.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{
    assemble_kkt, element_objective, global_objective, DofMap, SolverConfig, State,
};
use crate::dataset::Dataset;
use crate::structure::Structure;

/// Per-element selection of dataset points, stored as indices.
///
/// Equivalent to a binary selection matrix with one-hot rows; see
/// [`Assignment::to_onehot`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment(Vec<usize>);

impl Assignment {
    pub fn new(indices: Vec<usize>) -> Self {
        Self(indices)
    }

    pub fn uniform(index: usize, n_elements: usize) -> Self {
        Self(vec![index; n_elements])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index(&self, element: usize) -> usize {
        self.0[element]
    }

    pub fn set(&mut self, element: usize, data_index: usize) {
        self.0[element] = data_index;
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    /// Binary selection matrix with exactly one `true` per row.
    pub fn to_onehot(&self, n_data: usize) -> Vec<Vec<bool>> {
        self.0
            .iter()
            .map(|&j| {
                let mut row = vec![false; n_data];
                row[j] = true;
                row
            })
            .collect()
    }

    /// Inverse of [`Assignment::to_onehot`]; `None` unless every row has
    /// exactly one `true`.
    pub fn from_onehot(rows: &[Vec<bool>]) -> Option<Self> {
        let mut indices = Vec::with_capacity(rows.len());
        for row in rows {
            let mut hits = row.iter().enumerate().filter(|(_, &v)| v);
            let (j, _) = hits.next()?;
            if hits.next().is_some() {
                return None;
            }
            indices.push(j);
        }
        Some(Self(indices))
    }
}

/// Data initialization scheme for the first load step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum InitMode {
    /// Seeded uniform random data indices.
    Random { seed: u64 },
    /// Every element starts at the `(0, 0)` point (or the point nearest
    /// the origin when the dataset lacks an exact origin).
    StressFree,
    /// Stresses from the minimum-norm solution of the linear equilibrium
    /// conditions; each element picks the data point with nearest stress.
    StructureSpecific,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Adm,
    GoAdm,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("newton diverged after {iterations} iterations (last increment norm {last_increment:e})")]
    Diverged {
        iterations: usize,
        last_increment: f64,
    },
    #[error("kkt matrix factorization failed (singular system)")]
    Singular,
    #[error("alternation did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("structure-specific initialization is ill-posed: {0}")]
    IllPosedInit(String),
    #[error("objective weighting could not be resolved from the dataset; set c explicitly")]
    NoWeighting,
}

/// A solvable instance: structure, dataset, and configuration with the
/// objective weighting resolved.
pub struct Problem<'a> {
    pub structure: &'a Structure,
    pub dataset: &'a Dataset,
    pub config: &'a SolverConfig,
    c: f64,
}

impl<'a> Problem<'a> {
    pub fn new(
        structure: &'a Structure,
        dataset: &'a Dataset,
        config: &'a SolverConfig,
    ) -> Result<Self, SolverError> {
        let c = config.resolve_c(dataset).ok_or(SolverError::NoWeighting)?;
        if !(c > 0.0) || !c.is_finite() {
            return Err(SolverError::NoWeighting);
        }
        Ok(Self {
            structure,
            dataset,
            config,
            c,
        })
    }

    /// Resolved objective weighting constant.
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn objective(&self, state: &State, assignment: &Assignment) -> f64 {
        global_objective(state, assignment, self.dataset, self.c, self.structure)
    }

    fn element_distance(&self, element: usize, pair: (f64, f64), data_index: usize) -> f64 {
        element_objective(
            pair,
            self.dataset.point(data_index),
            self.c,
            self.structure.elements()[element].length,
        )
    }
}

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub state: State,
    pub iterations: usize,
}

fn scaled_state_norm(structure: &Structure, state: &State, beta_s: f64) -> f64 {
    let mut sq = 0.0;
    for &dof in structure.free_dofs() {
        sq += state.u[dof] * state.u[dof] + state.lambda[dof] * state.lambda[dof];
    }
    sq += state.e.norm_squared();
    sq += beta_s * beta_s * (state.s.norm_squared() + state.mu.norm_squared());
    sq.sqrt()
}

fn apply_increment(structure: &Structure, state: &mut State, map: &DofMap, dq: &DVector<f64>) {
    for (free, &dof) in structure.free_dofs().iter().enumerate() {
        state.u[dof] += dq[map.u(free)];
        state.lambda[dof] += dq[map.lambda(free)];
    }
    for e in 0..structure.n_elements() {
        state.e[e] += dq[map.e(e)];
        state.s[e] += dq[map.s(e)];
        state.mu[e] += dq[map.mu(e)];
    }
}

/// Newton-Raphson solve of the fixed-data stationarity system.
///
/// Converges when the scaled increment norm drops below `newton_tol` (or
/// below the floating-point floor of the current state scale) or when the
/// residual falls below `newton_res_rtol` times the initial residual. For
/// linear strain measures the system is linear and one iteration suffices.
pub fn newton_solve(
    problem: &Problem<'_>,
    guess: &State,
    assignment: &Assignment,
    load: &DVector<f64>,
) -> Result<NewtonOutcome, SolverError> {
    let structure = problem.structure;
    if !guess.dims_match(structure) {
        return Err(SolverError::Dimension(format!(
            "guess dims do not match structure with {} dofs / {} elements",
            structure.n_dofs(),
            structure.n_elements()
        )));
    }
    let config = problem.config;
    let mut state = guess.clone();
    let mut initial_residual: Option<f64> = None;
    let mut first_increment: Option<f64> = None;

    for k in 0..=config.newton_max_iters {
        let sys = assemble_kkt(
            &state,
            assignment,
            structure,
            problem.dataset,
            problem.c,
            config.strain,
            config.beta_s,
            load,
        );
        let res_norm = sys.rhs.norm();
        let initial = *initial_residual.get_or_insert(res_norm);
        if res_norm <= config.newton_res_rtol * initial {
            return Ok(NewtonOutcome {
                state,
                iterations: k,
            });
        }
        if k == config.newton_max_iters {
            return Err(SolverError::Diverged {
                iterations: k,
                last_increment: res_norm,
            });
        }

        let lu = sys.matrix.clone().lu();
        let Some(dq_scaled) = lu.solve(&sys.rhs) else {
            return Err(SolverError::Singular);
        };
        let increment_norm = dq_scaled.norm();
        if !increment_norm.is_finite() {
            return Err(SolverError::Diverged {
                iterations: k + 1,
                last_increment: increment_norm,
            });
        }
        match first_increment {
            None => first_increment = Some(increment_norm),
            Some(first) => {
                if increment_norm > 1e6 * first.max(f64::MIN_POSITIVE) {
                    return Err(SolverError::Diverged {
                        iterations: k + 1,
                        last_increment: increment_norm,
                    });
                }
            }
        }
        let dq = sys.unscale_increment(dq_scaled);
        apply_increment(structure, &mut state, &sys.dof_map, &dq);

        // In double precision the increment cannot shrink below the
        // roundoff floor of the state scale, so accept that floor as
        // converged even when newton_tol is tighter.
        let floor = 64.0
            * f64::EPSILON
            * (1.0 + scaled_state_norm(structure, &state, config.beta_s));
        if increment_norm <= config.newton_tol.max(floor) {
            return Ok(NewtonOutcome {
                state,
                iterations: k + 1,
            });
        }
    }
    unreachable!("loop returns before exhausting the iteration range");
}

/// For each element, the dataset index minimizing the element objective
/// against the element's state pair; ties break to the smallest index.
pub fn local_state_assignment(problem: &Problem<'_>, state: &State) -> Assignment {
    let m = problem.structure.n_elements();
    let n_data = problem.dataset.len();
    let mut indices = Vec::with_capacity(m);
    for i in 0..m {
        let pair = (state.e[i], state.s[i]);
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for j in 0..n_data {
            let d = problem.element_distance(i, pair, j);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        indices.push(best);
    }
    Assignment::new(indices)
}

/// Indices of the two nearest dataset points to a state pair; the second
/// is `None` for single-point datasets. Ties prefer smaller indices.
fn two_best_alternatives(
    problem: &Problem<'_>,
    element: usize,
    pair: (f64, f64),
) -> (usize, Option<usize>) {
    let mut best = (f64::INFINITY, 0usize);
    let mut second: Option<(f64, usize)> = None;
    for j in 0..problem.dataset.len() {
        let d = problem.element_distance(element, pair, j);
        if d < best.0 {
            second = Some(best);
            best = (d, j);
        } else if second.map_or(true, |(sd, _)| d < sd) {
            second = Some((d, j));
        }
    }
    let second = match second {
        Some((d, j)) if d.is_finite() => Some(j),
        _ => None,
    };
    (best.1, second)
}

#[derive(Clone, Debug)]
pub struct AdmOutcome {
    pub state: State,
    pub assignment: Assignment,
    pub objective: f64,
    pub adm_iterations: usize,
    pub newton_iterations: usize,
}

/// Direct data-driven solve by alternation: Newton with fixed data, then
/// nearest-data reassignment, until the assignment repeats exactly. Every
/// Newton solve starts from the same `guess`.
pub fn adm_solve(
    problem: &Problem<'_>,
    guess: &State,
    init_assignment: &Assignment,
    load: &DVector<f64>,
) -> Result<AdmOutcome, SolverError> {
    if init_assignment.len() != problem.structure.n_elements() {
        return Err(SolverError::Dimension(format!(
            "assignment has {} entries for {} elements",
            init_assignment.len(),
            problem.structure.n_elements()
        )));
    }
    let mut assignment = init_assignment.clone();
    let mut newton_total = 0usize;
    for iteration in 1..=problem.config.adm_max_iters {
        let newton = newton_solve(problem, guess, &assignment, load)?;
        newton_total += newton.iterations;
        let next = local_state_assignment(problem, &newton.state);
        if next == assignment {
            let objective = problem.objective(&newton.state, &assignment);
            return Ok(AdmOutcome {
                state: newton.state,
                assignment,
                objective,
                adm_iterations: iteration,
                newton_iterations: newton_total,
            });
        }
        assignment = next;
    }
    Err(SolverError::NoConvergence(problem.config.adm_max_iters))
}

#[derive(Clone, Debug)]
pub struct GoAdmOutcome {
    pub state: State,
    pub assignment: Assignment,
    pub objective: f64,
    /// Number of attempted greedy searches, at most `k_max`.
    pub searches: usize,
    /// Number of committed improvements.
    pub improvements: usize,
    /// Objective after the initial ADM solve followed by every committed
    /// improvement; strictly decreasing.
    pub committed_objectives: Vec<f64>,
    pub adm_iterations: usize,
    pub newton_iterations: usize,
}

/// ADM wrapped in the greedy search for better data alternatives.
///
/// Elements are swept in descending order of their element objective; for
/// each, the best alternative data point (or the second-best, when the
/// best is already assigned) seeds a fresh ADM solve from the same guess.
/// Strict global-objective improvements are committed and restart the
/// sweep; diverged trials are discarded but still consume budget. With
/// `k_max = 0` the result is exactly the plain ADM outcome.
pub fn go_adm_solve(
    problem: &Problem<'_>,
    guess: &State,
    init_assignment: &Assignment,
    load: &DVector<f64>,
) -> Result<GoAdmOutcome, SolverError> {
    let first = adm_solve(problem, guess, init_assignment, load)?;
    let mut best_state = first.state;
    let mut best_assignment = first.assignment;
    let mut best_objective = first.objective;
    let mut committed = vec![best_objective];
    let mut adm_total = first.adm_iterations;
    let mut newton_total = first.newton_iterations;
    let mut searches = 0usize;
    let mut improvements = 0usize;
    let m = problem.structure.n_elements();

    'sweep: loop {
        // Elements in descending order of their contribution to the
        // global objective; ties keep the lower element index first.
        let distances: Vec<f64> = (0..m)
            .map(|i| {
                problem.element_distance(
                    i,
                    (best_state.e[i], best_state.s[i]),
                    best_assignment.index(i),
                )
            })
            .collect();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            distances[b]
                .partial_cmp(&distances[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });

        for &element in &order {
            if searches == problem.config.k_max {
                break 'sweep;
            }
            searches += 1;

            let pair = (best_state.e[element], best_state.s[element]);
            let (nearest, second) = two_best_alternatives(problem, element, pair);
            let current = best_assignment.index(element);
            let candidate = if current != nearest {
                nearest
            } else {
                match second {
                    Some(p) => p,
                    None => continue,
                }
            };
            let mut trial = best_assignment.clone();
            trial.set(element, candidate);

            match adm_solve(problem, guess, &trial, load) {
                Ok(outcome) => {
                    adm_total += outcome.adm_iterations;
                    newton_total += outcome.newton_iterations;
                    if outcome.objective < best_objective {
                        best_objective = outcome.objective;
                        best_state = outcome.state;
                        best_assignment = outcome.assignment;
                        committed.push(best_objective);
                        improvements += 1;
                        continue 'sweep;
                    }
                }
                // A diverged or non-converging trial is a non-improvement:
                // counted against the budget, otherwise discarded.
                Err(_) => {}
            }
        }
        if problem.config.k_max == 0 {
            break;
        }
    }

    Ok(GoAdmOutcome {
        state: best_state,
        assignment: best_assignment,
        objective: best_objective,
        searches,
        improvements,
        committed_objectives: committed,
        adm_iterations: adm_total,
        newton_iterations: newton_total,
    })
}

/// Minimum-norm solution of the linear equilibrium conditions
/// `E s = f` for the element stresses, via QR of the transposed
/// equilibrium operator.
pub fn equilibrium_stresses(
    structure: &Structure,
    load: &DVector<f64>,
) -> Result<DVector<f64>, SolverError> {
    let n_free = structure.free_dofs().len();
    let m = structure.n_elements();
    if n_free > m {
        return Err(SolverError::IllPosedInit(format!(
            "{n_free} free dofs exceed {m} elements; equilibrium alone cannot balance arbitrary loads"
        )));
    }
    let dim = structure.dim();
    let mut operator = DMatrix::zeros(n_free, m);
    for (e, el) in structure.elements().iter().enumerate() {
        let t = el.tangent();
        let [n1, n2] = el.nodes;
        for (node, sign) in [(n1, -1.0), (n2, 1.0)] {
            for d in 0..dim {
                if let Some(free) = structure.free_index(node * dim + d) {
                    operator[(free, e)] += sign * el.area * t[d];
                }
            }
        }
    }
    let f = DVector::from_iterator(
        n_free,
        structure.free_dofs().iter().map(|&dof| load[dof]),
    );
    for row in 0..n_free {
        if f[row] != 0.0 && operator.row(row).iter().all(|&v: &f64| v == 0.0) {
            return Err(SolverError::IllPosedInit(format!(
                "loaded dof {} has an all-zero equilibrium row",
                structure.free_dofs()[row]
            )));
        }
    }

    // Minimum-norm solve: with E^T = QR, solve R^T z = f, then s = Q z.
    let qr = operator.transpose().qr();
    let r = qr.r();
    for i in 0..n_free {
        if r[(i, i)].abs() <= 1e-12 * operator.norm().max(f64::MIN_POSITIVE) {
            return Err(SolverError::IllPosedInit(
                "equilibrium operator is rank deficient".into(),
            ));
        }
    }
    let z = r
        .transpose()
        .solve_lower_triangular(&f)
        .ok_or_else(|| SolverError::IllPosedInit("triangular solve failed".into()))?;
    Ok(qr.q() * z)
}

/// Initial data assignment for the first load step; see [`InitMode`].
///
/// `load` is the effective external load of the first step (reference load
/// times the first load factor).
pub fn initialize_data(
    problem: &Problem<'_>,
    load: &DVector<f64>,
) -> Result<Assignment, SolverError> {
    let m = problem.structure.n_elements();
    let dataset = problem.dataset;
    match problem.config.init {
        InitMode::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(Assignment::new(
                (0..m).map(|_| rng.gen_range(0..dataset.len())).collect(),
            ))
        }
        InitMode::StressFree => {
            let index = dataset
                .origin_index()
                .unwrap_or_else(|| dataset.nearest_to_origin(problem.c));
            Ok(Assignment::uniform(index, m))
        }
        InitMode::StructureSpecific => {
            let stresses = equilibrium_stresses(problem.structure, load)?;
            let mut indices = Vec::with_capacity(m);
            for e in 0..m {
                let mut best = 0usize;
                let mut best_d = f64::INFINITY;
                for j in 0..dataset.len() {
                    let ds = stresses[e] - dataset.point(j).stress;
                    let d = 0.5 / problem.c * ds * ds;
                    if d < best_d {
                        best_d = d;
                        best = j;
                    }
                }
                indices.push(best);
            }
            Ok(Assignment::new(indices))
        }
    }
}

/// Metrics and converged results of one load step.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepRecord {
    pub load_factor: f64,
    pub objective: f64,
    pub newton_iterations: usize,
    pub adm_iterations: usize,
    /// Greedy searches attempted in this step (0 for plain ADM).
    pub searches: usize,
    /// Whether any greedy search improved the objective in this step.
    pub improved: bool,
    pub wall_seconds: f64,
    pub state: State,
    pub assignment: Assignment,
}

/// Why and where a run stopped early.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunFailure {
    /// Zero-based index of the failing load step; equal to the number of
    /// completed steps.
    pub step: usize,
    pub message: String,
}

/// Full history of a multi-load-step run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub solver: SolverKind,
    pub strain: crate::structure::StrainMeasure,
    pub c: f64,
    pub beta_s: f64,
    pub k_max: usize,
    pub init: InitMode,
    pub steps: Vec<StepRecord>,
    pub failure: Option<RunFailure>,
}

impl RunRecord {
    pub fn final_objective(&self) -> Option<f64> {
        self.steps.last().map(|s| s.objective)
    }

    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

/// Initial conditions for a run.
pub enum StartCondition<'a> {
    /// Zero state; assignment from the configured initialization scheme.
    Fresh,
    /// Warm start from a previous solution: the state is reused and the
    /// assignment is re-derived as the nearest data in the (possibly
    /// different) dataset.
    Warm { state: &'a State },
}

/// Multi-load-step driver: step `j` applies `gamma_j` times the reference
/// load, warm-starting state and assignment from the preceding step. The
/// run aborts at the first failing step, preserving the partial record.
pub fn solve_structure(
    structure: &Structure,
    dataset: &Dataset,
    config: &SolverConfig,
    kind: SolverKind,
) -> Result<RunRecord, SolverError> {
    solve_structure_from(structure, dataset, config, kind, StartCondition::Fresh)
}

/// [`solve_structure`] with explicit initial conditions; used for phase
/// sequences that hand a converged state from one dataset to the next.
pub fn solve_structure_from(
    structure: &Structure,
    dataset: &Dataset,
    config: &SolverConfig,
    kind: SolverKind,
    start: StartCondition<'_>,
) -> Result<RunRecord, SolverError> {
    let problem = Problem::new(structure, dataset, config)?;
    let mut record = RunRecord {
        solver: kind,
        strain: config.strain,
        c: problem.c(),
        beta_s: config.beta_s,
        k_max: config.k_max,
        init: config.init,
        steps: Vec::with_capacity(config.load_factors.len()),
        failure: None,
    };

    let first_load = structure.loads() * config.load_factors.first().copied().unwrap_or(1.0);
    let (mut state, mut assignment) = match start {
        StartCondition::Fresh => {
            let assignment = match initialize_data(&problem, &first_load) {
                Ok(a) => a,
                Err(e) => {
                    record.failure = Some(RunFailure {
                        step: 0,
                        message: e.to_string(),
                    });
                    return Ok(record);
                }
            };
            (State::zeros(structure), assignment)
        }
        StartCondition::Warm { state } => {
            if !state.dims_match(structure) {
                return Err(SolverError::Dimension(
                    "warm-start state does not match the structure".into(),
                ));
            }
            (state.clone(), local_state_assignment(&problem, state))
        }
    };

    for (j, &gamma) in config.load_factors.iter().enumerate() {
        let load = structure.loads() * gamma;
        let started = Instant::now();
        let step = match kind {
            SolverKind::Adm => adm_solve(&problem, &state, &assignment, &load).map(|out| {
                StepRecord {
                    load_factor: gamma,
                    objective: out.objective,
                    newton_iterations: out.newton_iterations,
                    adm_iterations: out.adm_iterations,
                    searches: 0,
                    improved: false,
                    wall_seconds: started.elapsed().as_secs_f64(),
                    state: out.state,
                    assignment: out.assignment,
                }
            }),
            SolverKind::GoAdm => go_adm_solve(&problem, &state, &assignment, &load).map(|out| {
                StepRecord {
                    load_factor: gamma,
                    objective: out.objective,
                    newton_iterations: out.newton_iterations,
                    adm_iterations: out.adm_iterations,
                    searches: out.searches,
                    improved: out.improvements > 0,
                    wall_seconds: started.elapsed().as_secs_f64(),
                    state: out.state,
                    assignment: out.assignment,
                }
            }),
        };
        match step {
            Ok(step) => {
                state = step.state.clone();
                assignment = step.assignment.clone();
                record.steps.push(step);
            }
            Err(e) => {
                record.failure = Some(RunFailure {
                    step: j,
                    message: e.to_string(),
                });
                break;
            }
        }
    }
    Ok(record)
}
