//! Discretized physical systems: nodes, two-node axial elements, boundary
//! conditions, and external loads, for 1D bars and planar trusses.
//!
//! Displacements and the dual nodal multipliers live on the nodes (`dim`
//! components per node), strains/stresses/element multipliers are constant
//! per element. A [`Structure`] is immutable after construction; its
//! reference external load vector is assembled once (nodal forces directly,
//! distributed bar loads with 2-point Gauss quadrature) and scaled by load
//! factors during solves.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Strain measure selector: `e(u) = t . u' + (alpha/2) u' . u'` with
/// `alpha = 0` (linear) or `alpha = 1` (quadratic term retained).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrainMeasure {
    Linear,
    Nonlinear,
}

impl StrainMeasure {
    /// The factor multiplying the quadratic strain term.
    pub fn alpha(self) -> f64 {
        match self {
            StrainMeasure::Linear => 0.0,
            StrainMeasure::Nonlinear => 1.0,
        }
    }

    pub fn from_alpha(alpha: u8) -> Option<Self> {
        match alpha {
            0 => Some(StrainMeasure::Linear),
            1 => Some(StrainMeasure::Nonlinear),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum StructureError {
    #[error("a bar needs at least one element")]
    NoElements,
    #[error("element {element} references node {node} outside 0..{n_nodes}")]
    NodeOutOfRange {
        element: usize,
        node: usize,
        n_nodes: usize,
    },
    #[error("element {0} connects a node to itself")]
    DegenerateElement(usize),
    #[error("members {0} and {1} connect the same node pair")]
    DuplicateMember(usize, usize),
    #[error("node {0} is not connected to any member")]
    DanglingNode(usize),
    #[error("element {0} has zero reference length")]
    ZeroLength(usize),
    #[error("element {element} has non-positive area {area}")]
    BadArea { element: usize, area: f64 },
    #[error("at least one support is required")]
    NoSupport,
    #[error("support references node {node} outside 0..{n_nodes}")]
    SupportOutOfRange { node: usize, n_nodes: usize },
    #[error("load references node {node} outside 0..{n_nodes}")]
    LoadOutOfRange { node: usize, n_nodes: usize },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Two-node axial element with constant cross-section.
#[derive(Clone, Debug)]
pub struct Element {
    pub nodes: [usize; 2],
    /// Cross-section area (m^2).
    pub area: f64,
    /// Reference length (m).
    pub length: f64,
    tangent: [f64; 2],
}

impl Element {
    /// Unit reference tangent `(X2 - X1) / L` (first `dim` entries).
    pub fn tangent(&self) -> &[f64; 2] {
        &self.tangent
    }
}

/// An immutable discretized bar or planar truss.
#[derive(Clone, Debug)]
pub struct Structure {
    dim: usize,
    coords: Vec<f64>,
    elements: Vec<Element>,
    fixed_dofs: BTreeSet<usize>,
    free_dofs: Vec<usize>,
    full_to_free: Vec<Option<usize>>,
    loads: DVector<f64>,
}

impl Structure {
    fn build(
        dim: usize,
        coords: Vec<f64>,
        raw: Vec<(usize, usize, f64)>,
        fixed_dofs: BTreeSet<usize>,
        loads: DVector<f64>,
    ) -> Result<Self, StructureError> {
        let n_nodes = coords.len() / dim;
        let mut elements = Vec::with_capacity(raw.len());
        for (idx, &(a, b, area)) in raw.iter().enumerate() {
            for node in [a, b] {
                if node >= n_nodes {
                    return Err(StructureError::NodeOutOfRange {
                        element: idx,
                        node,
                        n_nodes,
                    });
                }
            }
            if a == b {
                return Err(StructureError::DegenerateElement(idx));
            }
            if !(area > 0.0) {
                return Err(StructureError::BadArea {
                    element: idx,
                    area,
                });
            }
            let mut tangent = [0.0; 2];
            let mut length_sq = 0.0;
            for d in 0..dim {
                let delta = coords[b * dim + d] - coords[a * dim + d];
                tangent[d] = delta;
                length_sq += delta * delta;
            }
            let length = length_sq.sqrt();
            if length == 0.0 {
                return Err(StructureError::ZeroLength(idx));
            }
            for t in tangent.iter_mut() {
                *t /= length;
            }
            elements.push(Element {
                nodes: [a, b],
                area,
                length,
                tangent,
            });
        }
        if fixed_dofs.is_empty() {
            return Err(StructureError::NoSupport);
        }
        let n_dofs = n_nodes * dim;
        let mut full_to_free = vec![None; n_dofs];
        let mut free_dofs = Vec::with_capacity(n_dofs - fixed_dofs.len());
        for dof in 0..n_dofs {
            if !fixed_dofs.contains(&dof) {
                full_to_free[dof] = Some(free_dofs.len());
                free_dofs.push(dof);
            }
        }
        Ok(Self {
            dim,
            coords,
            elements,
            fixed_dofs,
            free_dofs,
            full_to_free,
            loads,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn n_dofs(&self) -> usize {
        self.coords.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    /// Reference coordinates of a node (length `dim`).
    pub fn node(&self, index: usize) -> &[f64] {
        &self.coords[index * self.dim..(index + 1) * self.dim]
    }

    pub fn fixed_dofs(&self) -> &BTreeSet<usize> {
        &self.fixed_dofs
    }

    /// Unconstrained dof indices in ascending order.
    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    /// Position of a full dof in the free numbering, `None` if fixed.
    pub fn free_index(&self, dof: usize) -> Option<usize> {
        self.full_to_free[dof]
    }

    /// Reference external load vector (N) over all dofs.
    pub fn loads(&self) -> &DVector<f64> {
        &self.loads
    }

    /// Discrete gradient of a nodal field over one element,
    /// `(v_2 - v_1) / L` per component.
    pub fn element_gradient(&self, element: usize, field: &DVector<f64>) -> [f64; 2] {
        let e = &self.elements[element];
        let [a, b] = e.nodes;
        let mut grad = [0.0; 2];
        for d in 0..self.dim {
            grad[d] = (field[b * self.dim + d] - field[a * self.dim + d]) / e.length;
        }
        grad
    }
}

/// End constraints for [`build_bar`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarSupports {
    /// Both end displacements fixed.
    FixedFixed,
    /// Left end fixed, right end free.
    FixedFree,
}

/// Axial load specification for [`build_bar`].
pub enum BarLoad<'a> {
    None,
    /// Axial nodal force (N) applied at the right end.
    EndForce(f64),
    /// Axial line load density f(xi) (N/m), integrated with 2-point Gauss
    /// quadrature per element.
    Distributed(&'a dyn Fn(f64) -> f64),
}

/// Builds a straight 1D bar on `[0, l0]` with `n_elements` equal elements.
pub fn build_bar(
    l0: f64,
    n_elements: usize,
    area: f64,
    supports: BarSupports,
    load: BarLoad<'_>,
) -> Result<Structure, StructureError> {
    if n_elements == 0 {
        return Err(StructureError::NoElements);
    }
    if !(l0 > 0.0) {
        return Err(StructureError::Config(format!(
            "bar length must be positive, got {l0}"
        )));
    }
    let n_nodes = n_elements + 1;
    let coords: Vec<f64> = (0..n_nodes)
        .map(|i| l0 * i as f64 / n_elements as f64)
        .collect();
    let raw: Vec<(usize, usize, f64)> = (0..n_elements).map(|i| (i, i + 1, area)).collect();
    let mut fixed = BTreeSet::new();
    fixed.insert(0);
    if supports == BarSupports::FixedFixed {
        fixed.insert(n_nodes - 1);
    }
    let mut loads = DVector::zeros(n_nodes);
    match load {
        BarLoad::None => {}
        BarLoad::EndForce(f) => loads[n_nodes - 1] = f,
        BarLoad::Distributed(f) => {
            // 2-point Gauss per element: exact for linear shape functions
            // against smooth loads at mesh resolution.
            let inv_sqrt3 = 1.0 / 3f64.sqrt();
            for i in 0..n_elements {
                let x1 = coords[i];
                let x2 = coords[i + 1];
                let h = x2 - x1;
                let mid = 0.5 * (x1 + x2);
                for sign in [-1.0, 1.0] {
                    let xi = mid + sign * 0.5 * h * inv_sqrt3;
                    let w = 0.5 * h;
                    let n1 = (x2 - xi) / h;
                    let n2 = (xi - x1) / h;
                    let fx = f(xi);
                    loads[i] += w * n1 * fx;
                    loads[i + 1] += w * n2 * fx;
                }
            }
        }
    }
    Structure::build(1, coords, raw, fixed, loads)
}

/// A truss member connecting two nodes.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Member {
    pub nodes: [usize; 2],
    pub area: f64,
}

/// Constrained displacement components of a node.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Support {
    pub node: usize,
    #[serde(default = "default_true")]
    pub fix_x: bool,
    #[serde(default = "default_true")]
    pub fix_y: bool,
}

fn default_true() -> bool {
    true
}

/// Nodal force (N).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NodalLoad {
    pub node: usize,
    pub force: [f64; 2],
}

/// Builds a planar truss from nodes, members, supports, and nodal loads.
pub fn build_truss(
    nodes: &[[f64; 2]],
    members: &[Member],
    supports: &[Support],
    loads: &[NodalLoad],
) -> Result<Structure, StructureError> {
    let n_nodes = nodes.len();
    for (i, a) in members.iter().enumerate() {
        for (j, b) in members.iter().enumerate().skip(i + 1) {
            let same = (a.nodes[0] == b.nodes[0] && a.nodes[1] == b.nodes[1])
                || (a.nodes[0] == b.nodes[1] && a.nodes[1] == b.nodes[0]);
            if same {
                return Err(StructureError::DuplicateMember(i, j));
            }
        }
    }
    let mut connected = vec![false; n_nodes];
    for m in members {
        for &n in &m.nodes {
            if n < n_nodes {
                connected[n] = true;
            }
        }
    }
    if let Some(node) = connected.iter().position(|&c| !c) {
        return Err(StructureError::DanglingNode(node));
    }

    let coords: Vec<f64> = nodes.iter().flat_map(|p| p.iter().copied()).collect();
    let raw: Vec<(usize, usize, f64)> = members
        .iter()
        .map(|m| (m.nodes[0], m.nodes[1], m.area))
        .collect();

    if supports.is_empty() {
        return Err(StructureError::NoSupport);
    }
    let mut fixed = BTreeSet::new();
    for s in supports {
        if s.node >= n_nodes {
            return Err(StructureError::SupportOutOfRange {
                node: s.node,
                n_nodes,
            });
        }
        if s.fix_x {
            fixed.insert(s.node * 2);
        }
        if s.fix_y {
            fixed.insert(s.node * 2 + 1);
        }
    }

    let mut f = DVector::zeros(n_nodes * 2);
    for l in loads {
        if l.node >= n_nodes {
            return Err(StructureError::LoadOutOfRange {
                node: l.node,
                n_nodes,
            });
        }
        f[l.node * 2] += l.force[0];
        f[l.node * 2 + 1] += l.force[1];
    }
    Structure::build(2, coords, raw, fixed, f)
}

/// JSON description of a truss; see `docs/file_formats.md`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrussConfig {
    pub nodes: Vec<[f64; 2]>,
    pub members: Vec<Member>,
    pub supports: Vec<Support>,
    #[serde(default)]
    pub loads: Vec<NodalLoad>,
}

impl TrussConfig {
    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self, StructureError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| StructureError::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<Structure, StructureError> {
        build_truss(&self.nodes, &self.members, &self.supports, &self.loads)
    }
}

/// Parameters of the manufactured bar benchmark: a fixed-fixed bar with
/// axial displacement field `u(xi) = beta * sin(pi * xi / l0)` under the
/// load that makes `u` the exact solution for a linear constitutive law
/// with modulus `e_modulus`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    /// Young's modulus (Pa).
    pub e_modulus: f64,
    /// Displacement amplitude (m).
    pub beta: f64,
    /// Bar length (m).
    pub l0: f64,
    pub strain: StrainMeasure,
    /// Cross-section area (m^2).
    pub area: f64,
}

impl BenchmarkSpec {
    /// The benchmark configuration used throughout the crate's studies:
    /// aluminum bar of length pi with circular cross-section of radius
    /// 0.02 m and amplitude 0.15 * l0.
    pub fn aluminum_bar(strain: StrainMeasure) -> Self {
        let l0 = std::f64::consts::PI;
        Self {
            e_modulus: 70e9,
            beta: 0.15 * l0,
            l0,
            strain,
            area: std::f64::consts::PI * 0.02 * 0.02,
        }
    }

    /// Manufactured displacement `u(xi)`.
    pub fn displacement(&self, xi: f64) -> f64 {
        self.beta * (std::f64::consts::PI * xi / self.l0).sin()
    }

    /// First derivative `u'(xi)`.
    pub fn displacement_grad(&self, xi: f64) -> f64 {
        let k = std::f64::consts::PI / self.l0;
        self.beta * k * (k * xi).cos()
    }

    /// Largest strain magnitude of the manufactured solution under the
    /// configured strain measure.
    pub fn max_strain(&self) -> f64 {
        let g = (self.beta * std::f64::consts::PI / self.l0).abs();
        g + 0.5 * self.strain.alpha() * g * g
    }
}

/// Axial force density (N/m) that manufactures the benchmark displacement:
/// `area * (-E u'' (1 + 3 a u' + (3 a^2 / 2) u' u'))` with
/// `u = beta sin(pi xi / l0)`. The area factor converts the stress-based
/// equilibrium residual to force units.
pub fn manufactured_bar_load(xi: f64, spec: &BenchmarkSpec) -> f64 {
    debug_assert!((0.0..=spec.l0).contains(&xi));
    let k = std::f64::consts::PI / spec.l0;
    let up = spec.displacement_grad(xi);
    let upp = -spec.beta * k * k * (k * xi).sin();
    let a = spec.strain.alpha();
    spec.area * (-spec.e_modulus * upp * (1.0 + 3.0 * a * up + 1.5 * a * a * up * up))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bar_single_element() {
        let bar = build_bar(1.0, 1, 0.01, BarSupports::FixedFixed, BarLoad::None).unwrap();
        assert_eq!(bar.n_nodes(), 2);
        assert_eq!(bar.n_elements(), 1);
        assert_eq!(bar.elements()[0].length, 1.0);
        assert!(bar.free_dofs().is_empty());
    }

    #[test]
    fn bar_mesh_geometry() {
        let area = std::f64::consts::PI * 0.02 * 0.02;
        let bar = build_bar(
            std::f64::consts::PI,
            8,
            area,
            BarSupports::FixedFixed,
            BarLoad::None,
        )
        .unwrap();
        assert_eq!(bar.n_nodes(), 9);
        assert_eq!(bar.free_dofs().len(), 7);
        for e in bar.elements() {
            assert!((e.length - std::f64::consts::PI / 8.0).abs() < 1e-15);
            assert_eq!(e.area, area);
        }

        let rope_mesh = build_bar(
            std::f64::consts::PI,
            16,
            area,
            BarSupports::FixedFree,
            BarLoad::EndForce(10.0),
        )
        .unwrap();
        assert_eq!(rope_mesh.n_elements(), 16);
        assert_eq!(rope_mesh.free_dofs().len(), 16);
        assert_eq!(rope_mesh.loads()[16], 10.0);
    }

    #[test]
    fn bar_rejects_zero_elements() {
        assert!(matches!(
            build_bar(1.0, 0, 1.0, BarSupports::FixedFixed, BarLoad::None),
            Err(StructureError::NoElements)
        ));
    }

    #[test]
    fn element_lengths_match_coordinates() {
        let truss = build_truss(
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
                force: [0.0, -400.0],
            }],
        )
        .unwrap();
        for e in truss.elements() {
            let [a, b] = e.nodes;
            let dx = truss.node(b)[0] - truss.node(a)[0];
            let dy = truss.node(b)[1] - truss.node(a)[1];
            let l = (dx * dx + dy * dy).sqrt();
            assert!((l - e.length).abs() <= 1e-12 * e.length);
            let t = e.tangent();
            assert!((t[0] - dx / l).abs() < 1e-15);
            assert!((t[1] - dy / l).abs() < 1e-15);
        }
        assert_eq!(truss.free_dofs(), &[4, 5]);
    }

    #[test]
    fn truss_rejects_duplicates_and_dangling() {
        let nodes = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        let supports = [Support {
            node: 0,
            fix_x: true,
            fix_y: true,
        }];
        let dup = build_truss(
            &nodes,
            &[
                Member {
                    nodes: [0, 1],
                    area: 1.0,
                },
                Member {
                    nodes: [1, 2],
                    area: 1.0,
                },
                Member {
                    nodes: [1, 0],
                    area: 1.0,
                },
            ],
            &supports,
            &[],
        );
        assert!(matches!(dup, Err(StructureError::DuplicateMember(0, 2))));

        let dangling = build_truss(
            &nodes,
            &[Member {
                nodes: [0, 1],
                area: 1.0,
            }],
            &supports,
            &[],
        );
        assert!(matches!(dangling, Err(StructureError::DanglingNode(2))));
    }

    #[test]
    fn manufactured_load_boundary_and_midspan() {
        let spec = BenchmarkSpec::aluminum_bar(StrainMeasure::Nonlinear);
        // u'' vanishes at the ends.
        assert!(manufactured_bar_load(0.0, &spec).abs() < 1e-6);
        // u' vanishes at midspan, so the nonlinear terms drop out there.
        let linear = BenchmarkSpec {
            strain: StrainMeasure::Linear,
            ..spec
        };
        let mid = 0.5 * spec.l0;
        let fl = manufactured_bar_load(mid, &linear);
        let fn_ = manufactured_bar_load(mid, &spec);
        assert!((fl - fn_).abs() <= 1e-12 * fl.abs());
    }

    #[test]
    fn manufactured_load_matches_hand_derivative() {
        // Independent oracle: differentiate u = beta sin(k xi) by hand and
        // evaluate the linear-strain load at xi = l0 / 4.
        let spec = BenchmarkSpec::aluminum_bar(StrainMeasure::Linear);
        let xi = spec.l0 / 4.0;
        let k = std::f64::consts::PI / spec.l0;
        let upp = -spec.beta * k * k * (k * xi).sin();
        let expected = -spec.area * spec.e_modulus * upp;
        let got = manufactured_bar_load(xi, &spec);
        assert!((got - expected).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn manufactured_load_antisymmetric_in_beta_for_linear_strain() {
        let spec = BenchmarkSpec::aluminum_bar(StrainMeasure::Linear);
        let negated = BenchmarkSpec {
            beta: -spec.beta,
            ..spec
        };
        for i in 0..=16 {
            let xi = spec.l0 * i as f64 / 16.0;
            let f = manufactured_bar_load(xi, &spec);
            let g = manufactured_bar_load(xi, &negated);
            assert_eq!(g, -f);
        }
    }

    #[test]
    fn distributed_load_assembly_matches_quadrature_oracle() {
        // Constant line load q on a fixed-free bar: consistent nodal loads
        // are q*h/2 at the ends and q*h inside, exactly reproduced by the
        // 2-point Gauss rule.
        let q = 3.5;
        let bar = build_bar(2.0, 4, 1.0, BarSupports::FixedFree, BarLoad::Distributed(&|_| q))
            .unwrap();
        let h = 0.5;
        for node in 0..=4 {
            let expected = if node == 0 || node == 4 {
                q * h / 2.0
            } else {
                q * h
            };
            assert!((bar.loads()[node] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn truss_config_round_trip() {
        let json = r#"{
            "nodes": [[0.0, 0.0], [0.0, 2.0], [1.0, 1.0]],
            "members": [
                {"nodes": [0, 2], "area": 0.002},
                {"nodes": [1, 2], "area": 0.002}
            ],
            "supports": [{"node": 0}, {"node": 1}],
            "loads": [{"node": 2, "force": [0.0, -40000.0]}]
        }"#;
        let cfg: TrussConfig = serde_json::from_str(json).unwrap();
        let truss = cfg.build().unwrap();
        assert_eq!(truss.n_elements(), 2);
        assert_eq!(truss.loads()[5], -40000.0);
    }
}
