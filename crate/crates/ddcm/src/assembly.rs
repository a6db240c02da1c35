//! Strain measures, objective functions, and assembly of the scaled KKT
//! saddle-point system for the discretized distance-minimization problem.
//!
//! The unknown block vector is `q = [u, e, s, mu, lambda]` with nodal `u`
//! and `lambda` (boundary dofs eliminated) and per-element constant `e`,
//! `s`, `mu`. The first-order stationarity residual `g(q)` of the
//! objective-plus-constraints Lagrangian is quadratic in `q`; one Newton
//! step solves `A dq = -g` where `A` is the exact (symmetric) Jacobian of
//! `g`.
//!
//! Stresses live on the Pa scale while displacements and strains are O(1),
//! which makes the raw saddle-point matrix badly conditioned. Assembly
//! therefore applies a variable/equation scaling with factor `beta_s`: the
//! `u`, `e`, and `lambda` rows are multiplied by `beta_s` and the solve is
//! carried out for the scaled increments `[du, de, beta_s ds, beta_s dmu,
//! dlambda]`. With `beta_s = 1` the system reduces to the plain Jacobian
//! and negated residual.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{DataPoint, Dataset};
use crate::solvers::{Assignment, InitMode};
use crate::structure::{StrainMeasure, Structure};

/// Full primal-dual state on a structure. `u` and `lambda` are stored over
/// all nodal dofs with fixed entries pinned at zero; `e`, `s`, `mu` have
/// one entry per element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    #[serde(with = "dvector_as_array")]
    pub u: DVector<f64>,
    #[serde(with = "dvector_as_array")]
    pub e: DVector<f64>,
    #[serde(with = "dvector_as_array")]
    pub s: DVector<f64>,
    #[serde(with = "dvector_as_array")]
    pub mu: DVector<f64>,
    #[serde(with = "dvector_as_array")]
    pub lambda: DVector<f64>,
}

/// Serializes state vectors as plain arrays in result files.
mod dvector_as_array {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Vec::<f64>::deserialize(d).map(DVector::from_vec)
    }
}

impl State {
    pub fn zeros(structure: &Structure) -> Self {
        let n = structure.n_dofs();
        let m = structure.n_elements();
        Self {
            u: DVector::zeros(n),
            e: DVector::zeros(m),
            s: DVector::zeros(m),
            mu: DVector::zeros(m),
            lambda: DVector::zeros(n),
        }
    }

    pub fn dims_match(&self, structure: &Structure) -> bool {
        let n = structure.n_dofs();
        let m = structure.n_elements();
        self.u.len() == n
            && self.lambda.len() == n
            && self.e.len() == m
            && self.s.len() == m
            && self.mu.len() == m
    }

    /// Exact negation of every field.
    pub fn negated(&self) -> Self {
        Self {
            u: -&self.u,
            e: -&self.e,
            s: -&self.s,
            mu: -&self.mu,
            lambda: -&self.lambda,
        }
    }
}

/// Solver parameters shared by the ADM and GO-ADM strategies.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    pub strain: StrainMeasure,
    /// Objective weighting constant `c` (Pa). `None` resolves to the
    /// dataset's least-squares slope through the origin.
    pub c: Option<f64>,
    /// Scaling factor applied to the KKT system; see the module docs.
    pub beta_s: f64,
    /// Absolute tolerance on the scaled Newton increment norm.
    pub newton_tol: f64,
    /// Residual-based exit: converged when `|g|` falls below this fraction
    /// of the initial residual of the current Newton solve.
    pub newton_res_rtol: f64,
    pub newton_max_iters: usize,
    pub adm_max_iters: usize,
    /// Budget of greedy searches per GO-ADM solve.
    pub k_max: usize,
    /// Load factors `gamma_j`, one per load step.
    pub load_factors: Vec<f64>,
    pub init: InitMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            strain: StrainMeasure::Linear,
            c: None,
            beta_s: 1e-5,
            newton_tol: 1e-9,
            newton_res_rtol: 1e-10,
            newton_max_iters: 50,
            adm_max_iters: 200,
            k_max: 100,
            load_factors: vec![1.0],
            init: InitMode::StructureSpecific,
        }
    }
}

impl SolverConfig {
    /// Resolves the weighting constant against a dataset; `None` when the
    /// dataset admits no positive least-squares slope and `c` is unset.
    pub fn resolve_c(&self, dataset: &Dataset) -> Option<f64> {
        self.c.or_else(|| dataset.least_squares_slope())
    }

    pub fn with_steps(mut self, n_steps: usize) -> Self {
        self.load_factors = (1..=n_steps).map(|j| j as f64 / n_steps as f64).collect();
        self
    }
}

/// Bookkeeping from block unknowns to row indices of the reduced system.
#[derive(Clone, Debug)]
pub struct DofMap {
    n_free: usize,
    n_elements: usize,
}

impl DofMap {
    pub fn new(structure: &Structure) -> Self {
        Self {
            n_free: structure.free_dofs().len(),
            n_elements: structure.n_elements(),
        }
    }

    pub fn size(&self) -> usize {
        2 * self.n_free + 3 * self.n_elements
    }

    pub fn u(&self, free_dof: usize) -> usize {
        free_dof
    }

    pub fn e(&self, element: usize) -> usize {
        self.n_free + element
    }

    pub fn s(&self, element: usize) -> usize {
        self.n_free + self.n_elements + element
    }

    pub fn mu(&self, element: usize) -> usize {
        self.n_free + 2 * self.n_elements + element
    }

    pub fn lambda(&self, free_dof: usize) -> usize {
        self.n_free + 3 * self.n_elements + free_dof
    }
}

/// The scaled linearized system `A dq_scaled = b` at one state.
#[derive(Clone, Debug)]
pub struct KktSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub dof_map: DofMap,
    pub beta_s: f64,
}

impl KktSystem {
    /// Undoes the variable scaling of a solved increment, returning the
    /// physical `[du, de, ds, dmu, dlambda]` increments.
    pub fn unscale_increment(&self, mut dq: DVector<f64>) -> DVector<f64> {
        let map = &self.dof_map;
        for e in 0..map.n_elements {
            dq[map.s(e)] /= self.beta_s;
            dq[map.mu(e)] /= self.beta_s;
        }
        dq
    }
}

/// Axial strain of one element: `e = t . u' + (alpha/2) u' . u'`.
pub fn strain(structure: &Structure, element: usize, u: &DVector<f64>, measure: StrainMeasure) -> f64 {
    let grad = structure.element_gradient(element, u);
    let t = structure.elements()[element].tangent();
    let dim = structure.dim();
    let mut linear = 0.0;
    let mut quad = 0.0;
    for d in 0..dim {
        linear += t[d] * grad[d];
        quad += grad[d] * grad[d];
    }
    linear + 0.5 * measure.alpha() * quad
}

/// Element objective `L * [(c/2)(e - e~)^2 + (1/2c)(s - s~)^2]`, the
/// constant-field L2 distance over one element.
pub fn element_objective(state_pair: (f64, f64), data: DataPoint, c: f64, length: f64) -> f64 {
    let de = state_pair.0 - data.strain;
    let ds = state_pair.1 - data.stress;
    length * (0.5 * c * de * de + 0.5 / c * ds * ds)
}

/// Global objective: sum of the element objectives over the structure.
pub fn global_objective(
    state: &State,
    assignment: &Assignment,
    dataset: &Dataset,
    c: f64,
    structure: &Structure,
) -> f64 {
    structure
        .elements()
        .iter()
        .enumerate()
        .map(|(i, el)| {
            let data = dataset.point(assignment.index(i));
            element_objective((state.e[i], state.s[i]), data, c, el.length)
        })
        .sum()
}

/// Stationarity residual `g(q)` on the reduced (free) dofs, unscaled.
///
/// `load` is the effective external load over all dofs (reference load
/// already multiplied by the current load factor).
pub fn residual(
    state: &State,
    assignment: &Assignment,
    structure: &Structure,
    dataset: &Dataset,
    c: f64,
    measure: StrainMeasure,
    load: &DVector<f64>,
) -> DVector<f64> {
    assert!(state.dims_match(structure), "state dimensions mismatch");
    let map = DofMap::new(structure);
    let dim = structure.dim();
    let alpha = measure.alpha();
    let mut g = DVector::zeros(map.size());

    for (i, el) in structure.elements().iter().enumerate() {
        let length = el.length;
        let area = el.area;
        let t = el.tangent();
        let u_grad = structure.element_gradient(i, &state.u);
        let l_grad = structure.element_gradient(i, &state.lambda);
        let data = dataset.point(assignment.index(i));
        let s_i = state.s[i];
        let mu_i = state.mu[i];

        // a = t + alpha u', the current strain-displacement direction.
        let mut a = [0.0; 2];
        let mut eps_lin = 0.0;
        let mut u_grad_sq = 0.0;
        let mut a_dot_lgrad = 0.0;
        for d in 0..dim {
            a[d] = t[d] + alpha * u_grad[d];
            eps_lin += t[d] * u_grad[d];
            u_grad_sq += u_grad[d] * u_grad[d];
            a_dot_lgrad += a[d] * l_grad[d];
        }
        let eps = eps_lin + 0.5 * alpha * u_grad_sq;

        // u-block: integral of N'^T (mu a + alpha area s lambda').
        // e-block: c (e - e~) - mu.
        // s-block: (1/c)(s - s~) + area a . lambda'.
        // mu-block: eps(u) - e.
        // lambda-block: internal force N'^T (area a s); external load below.
        for d in 0..dim {
            let gu = mu_i * a[d] + alpha * area * s_i * l_grad[d];
            let gl = area * a[d] * s_i;
            let [n1, n2] = el.nodes;
            for (node, sign) in [(n1, -1.0), (n2, 1.0)] {
                if let Some(free) = structure.free_index(node * dim + d) {
                    // integral of N'^T v over the element = [-v; +v]
                    g[map.u(free)] += sign * gu;
                    g[map.lambda(free)] += sign * gl;
                }
            }
        }
        g[map.e(i)] += length * (c * (state.e[i] - data.strain) - mu_i);
        g[map.s(i)] += length * ((s_i - data.stress) / c + area * a_dot_lgrad);
        g[map.mu(i)] += length * (eps - state.e[i]);
    }

    for (free, &dof) in structure.free_dofs().iter().enumerate() {
        g[map.lambda(free)] -= load[dof];
    }
    g
}

/// Assembles the scaled KKT system `A dq_scaled = b` at the given state.
///
/// With `alpha = 0` every state-dependent block vanishes and the matrix is
/// independent of `state`. The returned matrix is symmetric for any
/// `beta_s`; `rhs` is the scaled negative residual.
pub fn assemble_kkt(
    state: &State,
    assignment: &Assignment,
    structure: &Structure,
    dataset: &Dataset,
    c: f64,
    measure: StrainMeasure,
    beta_s: f64,
    load: &DVector<f64>,
) -> KktSystem {
    assert!(state.dims_match(structure), "state dimensions mismatch");
    assert_eq!(assignment.len(), structure.n_elements());
    let map = DofMap::new(structure);
    let dim = structure.dim();
    let alpha = measure.alpha();
    let n = map.size();
    let mut a_mat = DMatrix::zeros(n, n);

    for (i, el) in structure.elements().iter().enumerate() {
        let length = el.length;
        let area = el.area;
        let t = el.tangent();
        let u_grad = structure.element_gradient(i, &state.u);
        let l_grad = structure.element_gradient(i, &state.lambda);
        let s_i = state.s[i];
        let mu_i = state.mu[i];
        let mut a = [0.0; 2];
        for d in 0..dim {
            a[d] = t[d] + alpha * u_grad[d];
        }
        let [n1, n2] = el.nodes;
        let nodes_signed = [(n1, -1.0), (n2, 1.0)];

        // Nodal-by-nodal blocks: integral of N'^T N' couples the element's
        // dofs with weight 1/L per scalar pair.
        for (na, sa) in nodes_signed {
            for d1 in 0..dim {
                let Some(ra) = structure.free_index(na * dim + d1) else {
                    continue;
                };
                for (nb, sb) in nodes_signed {
                    for d2 in 0..dim {
                        let Some(rb) = structure.free_index(nb * dim + d2) else {
                            continue;
                        };
                        if d1 == d2 {
                            let w = sa * sb / length;
                            // (u,u): alpha mu N'^T N'
                            a_mat[(map.u(ra), map.u(rb))] += alpha * mu_i * w;
                            // (u,lambda) and (lambda,u): alpha area s N'^T N'
                            a_mat[(map.u(ra), map.lambda(rb))] += alpha * area * s_i * w;
                            a_mat[(map.lambda(ra), map.u(rb))] += alpha * area * s_i * w;
                        }
                    }
                }
                // Couplings of nodal dofs with the element scalars:
                // integral of N'^T v R = [-v; +v].
                // (u,s)/(s,u): alpha area lambda'
                a_mat[(map.u(ra), map.s(i))] += alpha * area * sa * l_grad[d1];
                a_mat[(map.s(i), map.u(ra))] += alpha * area * sa * l_grad[d1];
                // (u,mu)/(mu,u): a
                a_mat[(map.u(ra), map.mu(i))] += sa * a[d1];
                a_mat[(map.mu(i), map.u(ra))] += sa * a[d1];
                // (s,lambda)/(lambda,s): area a
                a_mat[(map.s(i), map.lambda(ra))] += area * sa * a[d1];
                a_mat[(map.lambda(ra), map.s(i))] += area * sa * a[d1];
            }
        }

        // Element-diagonal blocks: integral of R^T R = L.
        a_mat[(map.e(i), map.e(i))] += c * length;
        a_mat[(map.s(i), map.s(i))] += length / c;
        a_mat[(map.e(i), map.mu(i))] -= length;
        a_mat[(map.mu(i), map.e(i))] -= length;
    }

    let g = residual(state, assignment, structure, dataset, c, measure, load);
    let mut rhs = -g;

    // Equation/variable scaling: rows u, e, lambda by beta_s; columns s,
    // mu by 1/beta_s (the solve then yields beta_s*ds and beta_s*dmu).
    if beta_s != 1.0 {
        let nf = map.n_free;
        let m = map.n_elements;
        for r in 0..n {
            let in_u = r < nf;
            let in_e = r >= nf && r < nf + m;
            let in_lambda = r >= nf + 3 * m;
            if in_u || in_e || in_lambda {
                for col in 0..n {
                    a_mat[(r, col)] *= beta_s;
                }
                rhs[r] *= beta_s;
            }
        }
        for e in 0..m {
            for col in [map.s(e), map.mu(e)] {
                for r in 0..n {
                    a_mat[(r, col)] /= beta_s;
                }
            }
        }
    }

    KktSystem {
        matrix: a_mat,
        rhs,
        dof_map: map,
        beta_s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_linear;
    use crate::structure::{build_bar, build_truss, BarLoad, BarSupports, Member, NodalLoad, Support};
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn two_member_truss() -> Structure {
        build_truss(
            &[[0.0, 0.0], [0.0, 2.0], [1.0, 1.0]],
            &[
                Member {
                    nodes: [0, 2],
                    area: 0.002,
                },
                Member {
                    nodes: [1, 2],
                    area: 0.002,
                },
            ],
            &[
                Support {
                    node: 0,
                    fix_x: true,
                    fix_y: true,
                },
                Support {
                    node: 1,
                    fix_x: true,
                    fix_y: true,
                },
            ],
            &[NodalLoad {
                node: 2,
                force: [0.0, -40000.0],
            }],
        )
        .unwrap()
    }

    fn random_state(structure: &Structure, c: f64, rng: &mut StdRng) -> State {
        let n = structure.n_dofs();
        let m = structure.n_elements();
        let mut state = State {
            u: DVector::from_fn(n, |_, _| rng.gen_range(-0.1..0.1)),
            e: DVector::from_fn(m, |_, _| rng.gen_range(-0.1..0.1)),
            s: DVector::from_fn(m, |_, _| c * rng.gen_range(-0.1..0.1)),
            mu: DVector::from_fn(m, |_, _| c * rng.gen_range(-0.1..0.1)),
            lambda: DVector::from_fn(n, |_, _| rng.gen_range(-0.5..0.5)),
        };
        for &dof in structure.fixed_dofs() {
            state.u[dof] = 0.0;
            state.lambda[dof] = 0.0;
        }
        state
    }

    #[test]
    fn strain_examples() {
        // Straight element along x with axial stretch gradient 0.1.
        let bar = build_bar(1.0, 1, 1.0, BarSupports::FixedFree, BarLoad::None).unwrap();
        let mut u = DVector::zeros(2);
        u[1] = 0.1;
        assert!((strain(&bar, 0, &u, StrainMeasure::Linear) - 0.1).abs() < 1e-15);
        assert!((strain(&bar, 0, &u, StrainMeasure::Nonlinear) - 0.105).abs() < 1e-15);

        // Vertical element, transverse displacement gradient (0.1, 0):
        // the linear term vanishes, the quadratic one remains.
        let vertical = build_truss(
            &[[0.0, 0.0], [0.0, 1.0]],
            &[Member {
                nodes: [0, 1],
                area: 1.0,
            }],
            &[Support {
                node: 0,
                fix_x: true,
                fix_y: true,
            }],
            &[],
        )
        .unwrap();
        let mut u = DVector::zeros(4);
        u[2] = 0.1; // x-displacement of the top node
        assert!(strain(&vertical, 0, &u, StrainMeasure::Linear).abs() < 1e-15);
        assert!((strain(&vertical, 0, &u, StrainMeasure::Nonlinear) - 0.005).abs() < 1e-15);
    }

    #[test]
    fn objective_hand_values() {
        // Single element, L=2, c=1, state (1, 0) against data (0, 0).
        let v = element_objective((1.0, 0.0), DataPoint::new(0.0, 0.0), 1.0, 2.0);
        assert!((v - 1.0).abs() < 1e-15);
        // L=1, c=2, de=1, ds=2: 0.5*2*1 + (1/4)*4 = 2.
        let v = element_objective((1.0, 2.0), DataPoint::new(0.0, 0.0), 2.0, 1.0);
        assert!((v - 2.0).abs() < 1e-15);
        // Zero distance.
        let v = element_objective((0.3, 5.0), DataPoint::new(0.3, 5.0), 2.0, 1.0);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn global_objective_is_sum_of_element_objectives() {
        let bar = build_bar(1.0, 4, 0.01, BarSupports::FixedFixed, BarLoad::None).unwrap();
        let dataset = generate_linear(10.0, 5, 1.0).unwrap();
        let mut rng = StdRng::seed_from_u64(3);
        let state = random_state(&bar, 10.0, &mut rng);
        let assignment = Assignment::new(vec![0, 2, 4, 1]);
        let total = global_objective(&state, &assignment, &dataset, 10.0, &bar);
        let by_hand: f64 = (0..4)
            .map(|i| {
                element_objective(
                    (state.e[i], state.s[i]),
                    dataset.point(assignment.index(i)),
                    10.0,
                    bar.elements()[i].length,
                )
            })
            .sum();
        assert_eq!(total, by_hand);
        assert!(total >= 0.0);
    }

    #[test]
    fn zero_state_rhs_is_external_load_in_equilibrium_block() {
        let bar = build_bar(
            1.0,
            4,
            0.01,
            BarSupports::FixedFixed,
            BarLoad::Distributed(&|x| 100.0 * x),
        )
        .unwrap();
        let dataset = generate_linear(10.0, 5, 1.0).unwrap();
        let state = State::zeros(&bar);
        // Assignment pinned to the origin point so all data terms vanish.
        let assignment = Assignment::new(vec![dataset.origin_index().unwrap(); 4]);
        let sys = assemble_kkt(
            &state,
            &assignment,
            &bar,
            &dataset,
            10.0,
            StrainMeasure::Nonlinear,
            1.0,
            bar.loads(),
        );
        let map = &sys.dof_map;
        for free in 0..bar.free_dofs().len() {
            assert_eq!(sys.rhs[map.u(free)], 0.0);
            let dof = bar.free_dofs()[free];
            assert_eq!(sys.rhs[map.lambda(free)], bar.loads()[dof]);
        }
        for e in 0..4 {
            assert_eq!(sys.rhs[map.e(e)], 0.0);
            assert_eq!(sys.rhs[map.s(e)], 0.0);
            assert_eq!(sys.rhs[map.mu(e)], 0.0);
        }
    }

    #[test]
    fn matrix_is_state_independent_for_linear_strain() {
        let truss = two_member_truss();
        let dataset = generate_linear(70e9, 9, 0.2).unwrap();
        let c = 70e9;
        let assignment = Assignment::new(vec![1, 7]);
        let mut rng = StdRng::seed_from_u64(11);
        let zero = State::zeros(&truss);
        let sys0 = assemble_kkt(
            &zero,
            &assignment,
            &truss,
            &dataset,
            c,
            StrainMeasure::Linear,
            1e-5,
            truss.loads(),
        );
        for _ in 0..3 {
            let state = random_state(&truss, c, &mut rng);
            let sys = assemble_kkt(
                &state,
                &assignment,
                &truss,
                &dataset,
                c,
                StrainMeasure::Linear,
                1e-5,
                truss.loads(),
            );
            assert_eq!(sys.matrix, sys0.matrix);
        }
    }

    fn symmetry_defect(m: &DMatrix<f64>) -> f64 {
        let norm = m.norm();
        ((m - m.transpose()).norm()) / norm.max(f64::MIN_POSITIVE)
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        // Central-difference oracle on the residual: since g is quadratic
        // in q, central differences are exact up to roundoff.
        let c = 70e9;
        let dataset = generate_linear(70e9, 9, 0.2).unwrap();
        let mut rng = StdRng::seed_from_u64(5);
        for structure in [
            build_bar(
                std::f64::consts::PI,
                4,
                1.2e-3,
                BarSupports::FixedFixed,
                BarLoad::Distributed(&|x| 1e6 * (x - 1.0)),
            )
            .unwrap(),
            two_member_truss(),
        ] {
            let assignment = Assignment::new(vec![2; structure.n_elements()]);
            for _ in 0..5 {
                let state = random_state(&structure, c, &mut rng);
                let defect = jacobian_fd_defect(
                    &state,
                    &assignment,
                    &structure,
                    &dataset,
                    c,
                    StrainMeasure::Nonlinear,
                    &mut rng,
                );
                assert!(defect < 1e-6, "fd defect {defect} too large");
            }
        }
    }

    /// Relative defect between `A v` and a central difference of the
    /// residual along a random unit direction.
    pub(crate) fn jacobian_fd_defect(
        state: &State,
        assignment: &Assignment,
        structure: &Structure,
        dataset: &Dataset,
        c: f64,
        measure: StrainMeasure,
        rng: &mut StdRng,
    ) -> f64 {
        let load = structure.loads().clone();
        let sys = assemble_kkt(state, assignment, structure, dataset, c, measure, 1.0, &load);
        let n = sys.dof_map.size();
        let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)).normalize();

        let q_norm = state_norm(structure, state);
        let h = 1e-6 * (1.0 + q_norm);
        let plus = perturbed_state(structure, state, &sys.dof_map, &v, h);
        let minus = perturbed_state(structure, state, &sys.dof_map, &v, -h);
        let g_plus = residual(&plus, assignment, structure, dataset, c, measure, &load);
        let g_minus = residual(&minus, assignment, structure, dataset, c, measure, &load);
        let fd = (g_plus - g_minus) / (2.0 * h);
        let av = &sys.matrix * &v;
        (&av - &fd).norm() / av.norm().max(1e-300)
    }

    pub(crate) fn state_norm(structure: &Structure, state: &State) -> f64 {
        let mut sq = 0.0;
        for &dof in structure.free_dofs() {
            sq += state.u[dof] * state.u[dof] + state.lambda[dof] * state.lambda[dof];
        }
        sq += state.e.norm_squared() + state.s.norm_squared() + state.mu.norm_squared();
        sq.sqrt()
    }

    fn perturbed_state(
        structure: &Structure,
        state: &State,
        map: &DofMap,
        v: &DVector<f64>,
        h: f64,
    ) -> State {
        let mut out = state.clone();
        for (free, &dof) in structure.free_dofs().iter().enumerate() {
            out.u[dof] += h * v[map.u(free)];
            out.lambda[dof] += h * v[map.lambda(free)];
        }
        for e in 0..structure.n_elements() {
            out.e[e] += h * v[map.e(e)];
            out.s[e] += h * v[map.s(e)];
            out.mu[e] += h * v[map.mu(e)];
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn prop_matrix_symmetric_for_any_state(seed in 0u64..1000, scaled in proptest::bool::ANY) {
            let truss = two_member_truss();
            let dataset = generate_linear(70e9, 9, 0.2).unwrap();
            let c = 70e9;
            let mut rng = StdRng::seed_from_u64(seed);
            let state = random_state(&truss, c, &mut rng);
            let assignment = Assignment::new(vec![(seed % 9) as usize, ((seed / 9) % 9) as usize]);
            let beta_s = if scaled { 1e-5 } else { 1.0 };
            let sys = assemble_kkt(
                &state, &assignment, &truss, &dataset, c,
                StrainMeasure::Nonlinear, beta_s, truss.loads(),
            );
            prop_assert!(symmetry_defect(&sys.matrix) <= 1e-12);
        }

        #[test]
        fn prop_objective_nonnegative_zero_iff_match(e0 in -1.0f64..1.0, s0 in -1.0f64..1.0) {
            let d = DataPoint::new(0.25, -0.5);
            let v = element_objective((e0, s0), d, 2.0, 1.5);
            prop_assert!(v >= 0.0);
            prop_assert_eq!(v == 0.0, e0 == d.strain && s0 == d.stress);
        }
    }
}
