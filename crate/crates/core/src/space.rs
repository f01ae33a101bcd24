//! Cross-section geometry and the quadratic / linear Lagrange spaces on it.
//!
//! Velocity lives on the P2 nodes (vertices followed by edge midpoints),
//! pressure on the vertices. On the disk, boundary edges are curved: their
//! midpoint node sits on the circle and the cell map is quadratic.

use serde::{Deserialize, Serialize};

use crate::error::GnfError;
use crate::mesh::{Mesh, ShapeSpec};
use crate::quadrature::TriangleRule;

/// Quadrature points per cell.
pub const NQ: usize = 12;

/// Values of the six P2 shape functions at barycentric `l`.
#[inline]
pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// Reference gradients `(∂ξ, ∂η)` of the P2 shape functions, `λ1 = ξ`, `λ2 = η`.
#[inline]
pub fn p2_ref_gradients(l: [f64; 3]) -> [[f64; 2]; 6] {
    let g = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    let mut out = [[0.0; 2]; 6];
    for i in 0..3 {
        for d in 0..2 {
            out[i][d] = (4.0 * l[i] - 1.0) * g[i][d];
        }
    }
    for (k, (a, b)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
        for d in 0..2 {
            out[3 + k][d] = 4.0 * (l[a] * g[b][d] + l[b] * g[a][d]);
        }
    }
    out
}

/// Geometry, degrees of freedom and precomputed quadrature data of `Σ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossSection {
    pub mesh: Mesh,
    pub shape: ShapeSpec,
    pub delta: f64,
    /// `|Σ|`
    pub area: f64,
    /// `‖1/B‖_∞`
    pub m: f64,
    /// `‖B‖_∞`
    pub n: f64,
    /// `‖B‖₁`
    pub b_l1: f64,
    /// Longest straight edge.
    pub h: f64,
    /// P2 node coordinates: vertices, then edge midpoints.
    pub nodes: Vec<[f64; 2]>,
    pub node_on_boundary: Vec<bool>,
    /// Local order: three vertices, then midpoints of edges 01, 12, 20.
    pub cell_nodes: Vec<[usize; 6]>,
    /// Interior index of each node, `usize::MAX` on the boundary.
    pub interior_index: Vec<usize>,
    pub n_interior: usize,
    pub quad: QuadData,
}

/// Per-quadrature-point data, indexed by `cell * NQ + q`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct QuadData {
    pub x: Vec<[f64; 2]>,
    /// Physical weight including the Jacobian.
    pub w: Vec<f64>,
    pub phi: Vec<[f64; 6]>,
    /// Physical gradients `[∂1 N_a, ∂2 N_a]`.
    pub dphi: Vec<[[f64; 6]; 2]>,
    /// Linear (pressure) shape functions.
    pub psi: Vec<[f64; 3]>,
}

/// Builds the cross-section of the given shape with target mesh size `h`.
pub fn build_cross_section(shape: &ShapeSpec, h: f64, delta: f64) -> Result<CrossSection, GnfError> {
    let mesh = match shape {
        ShapeSpec::Disk => Mesh::unit_disk(h)?,
        ShapeSpec::Rectangle { x_min, x_max, y_min, y_max } => Mesh::rectangle(*x_min, *x_max, *y_min, *y_max, h)?,
        ShapeSpec::External { path } => Mesh::read(std::path::Path::new(path))?,
    };
    CrossSection::from_mesh(mesh, shape.clone(), delta)
}

impl CrossSection {
    pub fn from_mesh(mesh: Mesh, shape: ShapeSpec, delta: f64) -> Result<Self, GnfError> {
        if !(0.0..1.0).contains(&delta) {
            return Err(GnfError::InvalidParameter(format!("curvature ratio δ = {delta} must lie in [0, 1)")));
        }
        mesh.validate()?;
        let nv = mesh.vertices.len();
        let (edges, cell_edges, counts) = mesh.edges();
        let mut nodes = mesh.vertices.clone();
        let mut node_on_boundary = vec![false; nv + edges.len()];
        for &b in &mesh.boundary {
            node_on_boundary[b] = true;
        }
        for (k, (e, &c)) in edges.iter().zip(&counts).enumerate() {
            let (a, b) = (mesh.vertices[e[0]], mesh.vertices[e[1]]);
            let mut mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            if c == 1 {
                node_on_boundary[nv + k] = true;
                if shape.is_curved() {
                    let r = mid[0].hypot(mid[1]);
                    mid = [mid[0] / r, mid[1] / r];
                }
            }
            nodes.push(mid);
        }
        let cell_nodes: Vec<[usize; 6]> =
            mesh.cells.iter().zip(&cell_edges).map(|(c, e)| [c[0], c[1], c[2], nv + e[0], nv + e[1], nv + e[2]]).collect();
        let mut interior_index = vec![usize::MAX; nodes.len()];
        let mut n_interior = 0;
        for (k, &b) in node_on_boundary.iter().enumerate() {
            if !b {
                interior_index[k] = n_interior;
                n_interior += 1;
            }
        }
        let quad = Self::quadrature_data(&nodes, &cell_nodes)?;
        let mut cs = CrossSection {
            h: mesh.max_edge_length(),
            mesh,
            shape,
            delta,
            area: 0.0,
            m: 0.0,
            n: 0.0,
            b_l1: 0.0,
            nodes,
            node_on_boundary,
            cell_nodes,
            interior_index,
            n_interior,
            quad,
        };
        cs.area = cs.quad.w.iter().sum();
        cs.b_l1 = cs.quad.w.iter().zip(&cs.quad.x).map(|(w, x)| w * cs.b(*x)).sum();
        let (mut bmin, mut bmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for x in cs.nodes.iter().chain(&cs.quad.x) {
            bmin = bmin.min(cs.b(*x));
            bmax = bmax.max(cs.b(*x));
        }
        if !(bmin > 0.0) {
            return Err(GnfError::InvalidMesh("B = 1 + δx₂ is not positive on the section".into()));
        }
        cs.m = 1.0 / bmin;
        cs.n = bmax;
        Ok(cs)
    }

    fn quadrature_data(nodes: &[[f64; 2]], cell_nodes: &[[usize; 6]]) -> Result<QuadData, GnfError> {
        let rule = TriangleRule::order6();
        let nc = cell_nodes.len();
        let mut qd = QuadData {
            x: Vec::with_capacity(nc * NQ),
            w: Vec::with_capacity(nc * NQ),
            phi: Vec::with_capacity(nc * NQ),
            dphi: Vec::with_capacity(nc * NQ),
            psi: Vec::with_capacity(nc * NQ),
        };
        for (c, cn) in cell_nodes.iter().enumerate() {
            let xs: [[f64; 2]; 6] = std::array::from_fn(|a| nodes[cn[a]]);
            for (l, wref) in rule.points.iter().zip(&rule.weights) {
                let n = p2_values(*l);
                let g = p2_ref_gradients(*l);
                let mut x = [0.0; 2];
                let mut jac = [[0.0; 2]; 2];
                for a in 0..6 {
                    for i in 0..2 {
                        x[i] += n[a] * xs[a][i];
                        for d in 0..2 {
                            jac[i][d] += xs[a][i] * g[a][d];
                        }
                    }
                }
                let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
                if !(det > 0.0) {
                    return Err(GnfError::InvalidMesh(format!("cell {c} has a non-positive Jacobian")));
                }
                // J^{-T} ∇_ξ N
                let inv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
                let mut dphi = [[0.0; 6]; 2];
                for a in 0..6 {
                    for j in 0..2 {
                        dphi[j][a] = inv[0][j] * g[a][0] + inv[1][j] * g[a][1];
                    }
                }
                qd.x.push(x);
                qd.w.push(0.5 * wref * det);
                qd.phi.push(n);
                qd.dphi.push(dphi);
                qd.psi.push(*l);
            }
        }
        Ok(qd)
    }

    /// `B(x) = 1 + δx₂`.
    #[inline]
    pub fn b(&self, x: [f64; 2]) -> f64 {
        1.0 + self.delta * x[1]
    }

    pub fn n_cells(&self) -> usize {
        self.mesh.cells.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.mesh.vertices.len()
    }

    pub fn n_quad(&self) -> usize {
        self.quad.w.len()
    }

    /// Same mesh and spaces with another curvature ratio.
    pub fn with_delta(&self, delta: f64) -> Result<Self, GnfError> {
        Self::from_mesh(self.mesh.clone(), self.shape.clone(), delta)
    }

    /// `∫ f` by quadrature, `f` evaluated per quadrature index.
    pub fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        (0..self.n_quad()).map(|k| self.quad.w[k] * f(k)).sum()
    }

    /// `(∫ B |f|^q)^{1/q}`; `f` gives the pointwise magnitude per quadrature index.
    pub fn weighted_norm(&self, q: f64, f: impl Fn(usize) -> f64) -> f64 {
        self.integrate(|k| self.b(self.quad.x[k]) * f(k).abs().powf(q)).powf(1.0 / q)
    }

    /// `(∫ |f|^q)^{1/q}`.
    pub fn norm(&self, q: f64, f: impl Fn(usize) -> f64) -> f64 {
        self.integrate(|k| f(k).abs().powf(q)).powf(1.0 / q)
    }
}

/// Weighted `L^q` norm of per-quadrature-point magnitudes.
pub fn weighted_norm(values: &[f64], q: f64, cs: &CrossSection) -> f64 {
    cs.weighted_norm(q, |k| values[k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn shape_functions_partition_unity() {
        let l = [0.2, 0.3, 0.5];
        let n = p2_values(l);
        assert!((n.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let g = p2_ref_gradients(l);
        for d in 0..2 {
            assert!(g.iter().map(|v| v[d]).sum::<f64>().abs() < 1e-14);
        }
    }

    #[test]
    fn disk_constants() {
        let cs = build_cross_section(&ShapeSpec::Disk, 0.1, 0.0).unwrap();
        assert!((cs.area - PI).abs() < 1e-3);
        assert_eq!(cs.m, 1.0);
        assert_eq!(cs.n, 1.0);
        let cs = build_cross_section(&ShapeSpec::Disk, 0.05, 0.5).unwrap();
        assert!((cs.m - 2.0).abs() < 1e-6);
        assert!((cs.n - 1.5).abs() < 1e-6);
        // curved cells make the area and ‖B‖₁ accurate well beyond h²
        assert!((cs.area - PI).abs() < 1e-6, "{}", cs.area - PI);
        assert!((cs.b_l1 - PI).abs() < 1e-6);
    }

    #[test]
    fn rectangle_constants() {
        let shape = ShapeSpec::Rectangle { x_min: -0.5, x_max: 0.5, y_min: -0.5, y_max: 0.5 };
        let cs = build_cross_section(&shape, 0.1, 0.2).unwrap();
        assert!((cs.area - 1.0).abs() < 1e-13);
        assert!((cs.b_l1 - 1.0).abs() < 1e-13);
        assert!((cs.n - 1.1).abs() < 1e-14);
        assert!((cs.m - 1.0 / 0.9).abs() < 1e-14);
        assert!(cs.m * cs.n >= 1.0);
    }

    #[test]
    fn quadrature_integrates_polynomials_on_curved_disk() {
        let cs = build_cross_section(&ShapeSpec::Disk, 0.1, 0.0).unwrap();
        // ∫ r² over the unit disk = π/2
        let v = cs.integrate(|k| {
            let x = cs.quad.x[k];
            x[0] * x[0] + x[1] * x[1]
        });
        assert!((v - PI / 2.0).abs() < 1e-6);
    }

    #[test]
    fn gradients_reproduce_quadratics() {
        let cs = build_cross_section(&ShapeSpec::Rectangle { x_min: -0.5, x_max: 0.5, y_min: -0.5, y_max: 0.5 }, 0.25, 0.3).unwrap();
        let f = |x: [f64; 2]| 1.0 + 2.0 * x[0] - x[1] + x[0] * x[1] + 0.5 * x[1] * x[1];
        for c in 0..cs.n_cells() {
            for q in 0..NQ {
                let k = c * NQ + q;
                let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
                for a in 0..6 {
                    let fx = f(cs.nodes[cs.cell_nodes[c][a]]);
                    v += cs.quad.phi[k][a] * fx;
                    gx += cs.quad.dphi[k][0][a] * fx;
                    gy += cs.quad.dphi[k][1][a] * fx;
                }
                let x = cs.quad.x[k];
                assert!((v - f(x)).abs() < 1e-12);
                assert!((gx - (2.0 + x[1])).abs() < 1e-11);
                assert!((gy - (-1.0 + x[0] + x[1])).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn weighted_norm_examples() {
        let cs = build_cross_section(&ShapeSpec::Disk, 0.1, 0.4).unwrap();
        assert_eq!(cs.weighted_norm(2.0, |_| 0.0), 0.0);
        assert!((cs.weighted_norm(1.0, |_| 1.0) - PI).abs() < 1e-6);
        let flat = cs.with_delta(0.0).unwrap();
        let f = |k: usize| flat.quad.x[k][0].sin() + 2.0;
        assert!((flat.weighted_norm(3.0, f) - flat.norm(3.0, f)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_delta() {
        assert!(build_cross_section(&ShapeSpec::Disk, 0.2, 1.0).is_err());
        assert!(build_cross_section(&ShapeSpec::Disk, 0.2, -0.1).is_err());
    }
}
