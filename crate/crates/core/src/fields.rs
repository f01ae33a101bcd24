//! Discrete fields on a cross-section and their quadrature-point evaluations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::space::{CrossSection, NQ};
use crate::tensor::SymTensor3;

/// Velocity `(u₁, u₂, u₃)` as P2 nodal coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityField {
    pub coeffs: Vec<[f64; 3]>,
}

impl VelocityField {
    pub fn zeros(cs: &CrossSection) -> Self {
        Self { coeffs: vec![[0.0; 3]; cs.n_nodes()] }
    }

    /// Nodal interpolant of `f`; boundary values are kept as given.
    pub fn interpolate(cs: &CrossSection, f: impl Fn([f64; 2]) -> [f64; 3]) -> Self {
        Self { coeffs: cs.nodes.iter().map(|x| f(*x)).collect() }
    }

    /// Interior coefficients i.i.d. uniform in `[−1, 1]`, boundary zero.
    pub fn random(cs: &CrossSection, rng: &mut impl Rng) -> Self {
        let coeffs =
            cs.node_on_boundary.iter().map(|&b| if b { [0.0; 3] } else { std::array::from_fn(|_| rng.random_range(-1.0..=1.0)) }).collect();
        Self { coeffs }
    }

    pub fn enforce_dirichlet(&mut self, cs: &CrossSection) {
        for (c, &b) in self.coeffs.iter_mut().zip(&cs.node_on_boundary) {
            if b {
                *c = [0.0; 3];
            }
        }
    }

    pub fn vanishes_on_boundary(&self, cs: &CrossSection) -> bool {
        self.coeffs.iter().zip(&cs.node_on_boundary).all(|(c, &b)| !b || *c == [0.0; 3])
    }

    /// In-plane part `(u₁, u₂, 0)`.
    pub fn in_plane(&self) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| [c[0], c[1], 0.0]).collect() }
    }

    /// Axial part `(0, 0, u₃)`.
    pub fn axial(&self) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| [0.0, 0.0, c[2]]).collect() }
    }

    pub fn axial_scalar(&self) -> ScalarField {
        ScalarField { values: self.coeffs.iter().map(|c| c[2]).collect() }
    }

    pub fn from_axial(s: &ScalarField) -> Self {
        Self { coeffs: s.values.iter().map(|&v| [0.0, 0.0, v]).collect() }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c.map(|v| s * v)).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| std::array::from_fn(|i| a[i] - b[i])).collect() }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| std::array::from_fn(|i| a[i] + b[i])).collect() }
    }

    /// Interior coefficients in solver order `3·interior_index + component`.
    pub fn to_reduced(&self, cs: &CrossSection) -> Vec<f64> {
        let mut out = vec![0.0; 3 * cs.n_interior];
        for (k, c) in self.coeffs.iter().enumerate() {
            let r = cs.interior_index[k];
            if r != usize::MAX {
                out[3 * r..3 * r + 3].copy_from_slice(c);
            }
        }
        out
    }

    pub fn from_reduced(cs: &CrossSection, x: &[f64]) -> Self {
        let coeffs =
            cs.interior_index.iter().map(|&r| if r == usize::MAX { [0.0; 3] } else { [x[3 * r], x[3 * r + 1], x[3 * r + 2]] }).collect();
        Self { coeffs }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().flat_map(|c| c.iter()).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Scalar P2 field (e.g. the axial velocity of the reduced problem).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(cs: &CrossSection) -> Self {
        Self { values: vec![0.0; cs.n_nodes()] }
    }
}

/// Pressure as P1 vertex values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureField {
    pub values: Vec<f64>,
}

impl PressureField {
    pub fn zeros(cs: &CrossSection) -> Self {
        Self { values: vec![0.0; cs.n_vertices()] }
    }

    /// Values at all quadrature points.
    pub fn at_quadrature(&self, cs: &CrossSection) -> Vec<f64> {
        let mut out = Vec::with_capacity(cs.n_quad());
        for (c, cell) in cs.mesh.cells.iter().enumerate() {
            for q in 0..NQ {
                let l = cs.quad.psi[c * NQ + q];
                out.push(l[0] * self.values[cell[0]] + l[1] * self.values[cell[1]] + l[2] * self.values[cell[2]]);
            }
        }
        out
    }

    pub fn mean(&self, cs: &CrossSection) -> f64 {
        let v = self.at_quadrature(cs);
        cs.integrate(|k| v[k]) / cs.area
    }

    /// Plain `L^q` norm.
    pub fn norm(&self, q: f64, cs: &CrossSection) -> f64 {
        let v = self.at_quadrature(cs);
        cs.norm(q, |k| v[k])
    }
}

/// Values and gradients `grad[j][i] = ∂_j u_i` at every quadrature point.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadField {
    pub val: Vec<[f64; 3]>,
    pub grad: Vec<[[f64; 3]; 2]>,
}

impl QuadField {
    pub fn from_velocity(u: &VelocityField, cs: &CrossSection) -> Self {
        let nq = cs.n_quad();
        let mut val = Vec::with_capacity(nq);
        let mut grad = Vec::with_capacity(nq);
        for (c, cn) in cs.cell_nodes.iter().enumerate() {
            let loc: [[f64; 3]; 6] = std::array::from_fn(|a| u.coeffs[cn[a]]);
            for q in 0..NQ {
                let k = c * NQ + q;
                let (phi, dphi) = (&cs.quad.phi[k], &cs.quad.dphi[k]);
                let mut v = [0.0; 3];
                let mut g = [[0.0; 3]; 2];
                for a in 0..6 {
                    for i in 0..3 {
                        v[i] += phi[a] * loc[a][i];
                        g[0][i] += dphi[0][a] * loc[a][i];
                        g[1][i] += dphi[1][a] * loc[a][i];
                    }
                }
                val.push(v);
                grad.push(g);
            }
        }
        Self { val, grad }
    }

    pub fn from_scalar(s: &ScalarField, cs: &CrossSection) -> Self {
        Self::from_velocity(&VelocityField::from_axial(s), cs)
    }

    /// Samples an analytic field given as `x ↦ (u, ∇u)`.
    pub fn from_fn(cs: &CrossSection, f: impl Fn([f64; 2]) -> ([f64; 3], [[f64; 3]; 2])) -> Self {
        let (val, grad) = cs.quad.x.iter().map(|x| f(*x)).unzip();
        Self { val, grad }
    }

    pub fn len(&self) -> usize {
        self.val.len()
    }

    pub fn is_empty(&self) -> bool {
        self.val.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            val: self.val.iter().map(|v| v.map(|x| s * x)).collect(),
            grad: self.grad.iter().map(|g| g.map(|r| r.map(|x| s * x))).collect(),
        }
    }

    /// Classical symmetric gradient of the in-plane part (2×2 block).
    pub fn in_plane_strain(&self, k: usize) -> SymTensor3 {
        let g = &self.grad[k];
        SymTensor3 { d11: g[0][0], d22: g[1][1], d12: 0.5 * (g[0][1] + g[1][0]), ..SymTensor3::ZERO }
    }

    /// Flat symmetric gradient of the full 3-vector (third row of `∇u` is zero).
    pub fn flat_strain(&self, k: usize) -> SymTensor3 {
        let g = &self.grad[k];
        SymTensor3 { d11: g[0][0], d22: g[1][1], d33: 0.0, d12: 0.5 * (g[0][1] + g[1][0]), d13: 0.5 * g[0][2], d23: 0.5 * g[1][2] }
    }

    /// `|∇u₃|`.
    pub fn axial_gradient_norm(&self, k: usize) -> f64 {
        self.grad[k][0][2].hypot(self.grad[k][1][2])
    }
}

/// Symmetric tensor per quadrature point.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub values: Vec<SymTensor3>,
}

impl TensorField {
    pub fn random(cs: &CrossSection, scale: f64, rng: &mut impl Rng) -> Self {
        let values =
            (0..cs.n_quad()).map(|_| SymTensor3::from_array(std::array::from_fn(|_| scale * rng.random_range(-1.0..=1.0)))).collect();
        Self { values }
    }

    pub fn weighted_norm(&self, q: f64, cs: &CrossSection) -> f64 {
        cs.weighted_norm(q, |k| self.values[k].norm())
    }

    pub fn norm(&self, q: f64, cs: &CrossSection) -> f64 {
        cs.norm(q, |k| self.values[k].norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::ShapeSpec;
    use crate::space::build_cross_section;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn split_is_lossless() {
        let cs = build_cross_section(&ShapeSpec::Disk, 0.3, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = VelocityField::random(&cs, &mut rng);
        assert!(u.vanishes_on_boundary(&cs));
        assert_eq!(u.in_plane().add(&u.axial()), u);
        let back = VelocityField::from_reduced(&cs, &u.to_reduced(&cs));
        assert_eq!(back, u);
    }

    #[test]
    fn quad_field_matches_analytic() {
        let cs = build_cross_section(&ShapeSpec::Rectangle { x_min: -0.5, x_max: 0.5, y_min: -0.5, y_max: 0.5 }, 0.25, 0.0).unwrap();
        let f = |x: [f64; 2]| [x[0] * x[1], 1.0 - x[0] * x[0], x[1] * x[1]];
        let u = VelocityField::interpolate(&cs, f);
        let qf = QuadField::from_velocity(&u, &cs);
        let exact = QuadField::from_fn(&cs, |x| (f(x), [[x[1], -2.0 * x[0], 0.0], [x[0], 0.0, 2.0 * x[1]]]));
        for k in 0..qf.len() {
            for i in 0..3 {
                assert!((qf.val[k][i] - exact.val[k][i]).abs() < 1e-12);
                for j in 0..2 {
                    assert!((qf.grad[k][j][i] - exact.grad[k][j][i]).abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn pressure_mean_and_norm() {
        let cs = build_cross_section(&ShapeSpec::Disk, 0.2, 0.0).unwrap();
        let p = PressureField { values: vec![2.0; cs.n_vertices()] };
        assert!((p.mean(&cs) - 2.0).abs() < 1e-12);
        assert_eq!(PressureField::zeros(&cs).norm(1.5, &cs), 0.0);
    }
}
