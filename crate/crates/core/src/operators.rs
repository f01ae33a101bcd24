//! Curved-pipe differential operators evaluated at quadrature points.
//!
//! Gradients use `(∇u)_{ij} = ∂_i u_j`. The starred gradient adds the third
//! row `(0, −δu₃/B, δu₂/B)`; everything else follows from it.

use serde::{Deserialize, Serialize};

use crate::constants::korn_constant;
use crate::fields::{QuadField, TensorField, VelocityField};
use crate::space::{CrossSection, NQ};
use crate::tensor::SymTensor3;

pub type Mat3 = [[f64; 3]; 3];

/// `∇⋆u` at one point from the value, in-plane gradient, `B` and `δ`.
#[inline]
pub fn grad_star_point(val: &[f64; 3], grad: &[[f64; 3]; 2], b: f64, delta: f64) -> Mat3 {
    let c = delta / b;
    [grad[0], grad[1], [0.0, -c * val[2], c * val[1]]]
}

/// `D⋆u` at one point.
#[inline]
pub fn d_star_point(val: &[f64; 3], grad: &[[f64; 3]; 2], b: f64, delta: f64) -> SymTensor3 {
    let c = delta / b;
    SymTensor3 {
        d11: grad[0][0],
        d22: grad[1][1],
        d33: c * val[1],
        d12: 0.5 * (grad[0][1] + grad[1][0]),
        d13: 0.5 * grad[0][2],
        d23: 0.5 * (grad[1][2] - c * val[2]),
    }
}

/// `(1/B)∇·(Bu) = ∂₁u₁ + ∂₂u₂ + δu₂/B` at one point.
#[inline]
pub fn weighted_divergence_point(val: &[f64; 3], grad: &[[f64; 3]; 2], b: f64, delta: f64) -> f64 {
    grad[0][0] + grad[1][1] + delta / b * val[1]
}

pub fn frobenius_sq(m: &Mat3) -> f64 {
    m.iter().flatten().map(|v| v * v).sum()
}

/// `∇⋆u` at every quadrature point.
pub fn grad_star(u: &VelocityField, cs: &CrossSection, delta: f64) -> Vec<Mat3> {
    let f = QuadField::from_velocity(u, cs);
    (0..f.len()).map(|k| grad_star_point(&f.val[k], &f.grad[k], 1.0 + delta * cs.quad.x[k][1], delta)).collect()
}

/// `D⋆u` at every quadrature point.
pub fn d_star(u: &VelocityField, cs: &CrossSection, delta: f64) -> TensorField {
    d_star_of(&QuadField::from_velocity(u, cs), cs, delta)
}

pub fn d_star_of(f: &QuadField, cs: &CrossSection, delta: f64) -> TensorField {
    let values = (0..f.len()).map(|k| d_star_point(&f.val[k], &f.grad[k], 1.0 + delta * cs.quad.x[k][1], delta)).collect();
    TensorField { values }
}

/// `(1/B)∇·(Bu)` at every quadrature point.
pub fn weighted_divergence(u: &VelocityField, cs: &CrossSection, delta: f64) -> Vec<f64> {
    let f = QuadField::from_velocity(u, cs);
    (0..f.len()).map(|k| weighted_divergence_point(&f.val[k], &f.grad[k], 1.0 + delta * cs.quad.x[k][1], delta)).collect()
}

/// Weak starred divergence: the coefficient for node `a`, component `i` is
/// `(∇⋆·S, Bφ) = −(S, B D⋆φ)` with `φ = N_a e_i`. Boundary entries are zero.
pub fn div_star_tensor(s: &TensorField, cs: &CrossSection, delta: f64) -> VelocityField {
    let mut out = VelocityField::zeros(cs);
    for (c, cn) in cs.cell_nodes.iter().enumerate() {
        for q in 0..NQ {
            let k = c * NQ + q;
            let b = 1.0 + delta * cs.quad.x[k][1];
            let wb = cs.quad.w[k] * b;
            for a in 0..6 {
                for i in 0..3 {
                    let mut val = [0.0; 3];
                    let mut grad = [[0.0; 3]; 2];
                    val[i] = cs.quad.phi[k][a];
                    grad[0][i] = cs.quad.dphi[k][0][a];
                    grad[1][i] = cs.quad.dphi[k][1][a];
                    let phi_star = d_star_point(&val, &grad, b, delta);
                    out.coeffs[cn[a]][i] -= wb * s.values[k].ddot(&phi_star);
                }
            }
        }
    }
    out.enforce_dirichlet(cs);
    out
}

/// Strong `∇⋆·S = (1/B)∇·(BS) + (δ/B)(S₂₃a₃ − S₃₃a₂)` from `S` and its derivatives.
pub fn div_star_pointwise(s: &SymTensor3, ds: &[SymTensor3; 2], b: f64, delta: f64) -> [f64; 3] {
    let (m, d1, d2) = (s.to_matrix(), ds[0].to_matrix(), ds[1].to_matrix());
    let c = delta / b;
    let mut out: [f64; 3] = std::array::from_fn(|i| d1[0][i] + d2[1][i] + c * m[1][i]);
    out[1] -= c * m[2][2];
    out[2] += c * m[1][2];
    out
}

/// Pointwise `∇⋆·S − ∇·S = (δ/B)(S₁₂, S₂₂ − S₃₃, 2S₂₃)`.
pub fn curvature_defect(s: &SymTensor3, b: f64, delta: f64) -> [f64; 3] {
    let c = delta / b;
    [c * s.d12, c * (s.d22 - s.d33), 2.0 * c * s.d23]
}

/// `a⋆(u, v, w)` (or `a⋆(Bu, v, w)` when `weighted_first`) by quadrature:
/// `∫ (u₁∂₁v + u₂∂₂v)·w + (δ/B) u₃(v₂w₃ − v₃w₂)`.
pub fn trilinear_a_star(u: &QuadField, v: &QuadField, w: &QuadField, cs: &CrossSection, delta: f64, weighted_first: bool) -> f64 {
    cs.integrate(|k| {
        let b = 1.0 + delta * cs.quad.x[k][1];
        let s = if weighted_first { b } else { 1.0 };
        let (uk, vk, wk, gv) = (&u.val[k], &v.val[k], &w.val[k], &v.grad[k]);
        let conv: f64 = (0..3).map(|i| (uk[0] * gv[0][i] + uk[1] * gv[1][i]) * wk[i]).sum();
        s * (conv + delta / b * uk[2] * (vk[1] * wk[2] - vk[2] * wk[1]))
    })
}

/// Skew form `½[a⋆(Bu,v,w) − a⋆(Bu,w,v)]` used by the solver.
pub fn trilinear_skew(u: &QuadField, v: &QuadField, w: &QuadField, cs: &CrossSection, delta: f64) -> f64 {
    0.5 * (trilinear_a_star(u, v, w, cs, delta, true) - trilinear_a_star(u, w, v, cs, delta, true))
}

/// Both sides of `‖∇⋆u‖²_{2,B} = 2‖D⋆u‖²_{2,B} − ‖(1/B)∇·(Bu)‖²_{2,B}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KornIdentity {
    pub grad_sq: f64,
    pub sym_sq: f64,
    pub div_sq: f64,
    /// `grad_sq − (2 sym_sq − div_sq)`.
    pub residual: f64,
}

impl KornIdentity {
    pub fn relative(&self) -> f64 {
        if self.grad_sq == 0.0 {
            self.residual.abs()
        } else {
            self.residual.abs() / self.grad_sq
        }
    }
}

pub fn korn_identity_residual(u: &VelocityField, cs: &CrossSection, delta: f64) -> KornIdentity {
    korn_identity_of(&QuadField::from_velocity(u, cs), cs, delta)
}

pub fn korn_identity_of(f: &QuadField, cs: &CrossSection, delta: f64) -> KornIdentity {
    let (mut g, mut s, mut d) = (0.0, 0.0, 0.0);
    for k in 0..f.len() {
        let b = 1.0 + delta * cs.quad.x[k][1];
        let wb = cs.quad.w[k] * b;
        g += wb * frobenius_sq(&grad_star_point(&f.val[k], &f.grad[k], b, delta));
        s += wb * d_star_point(&f.val[k], &f.grad[k], b, delta).norm_sq();
        d += wb * weighted_divergence_point(&f.val[k], &f.grad[k], b, delta).powi(2);
    }
    KornIdentity { grad_sq: g, sym_sq: s, div_sq: d, residual: g - (2.0 * s - d) }
}

/// Outcome of `C_K‖∇⋆u‖_{p,B} ≤ ‖D⋆u‖_{p,B}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KornThinCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub c_k: f64,
    pub c_k1: f64,
    pub holds: bool,
}

pub fn korn_thin_check(u: &VelocityField, p: f64, delta: f64, cs: &CrossSection, c_k1: f64) -> KornThinCheck {
    let f = QuadField::from_velocity(u, cs);
    let grad = cs.weighted_norm(p, |k| {
        let b = 1.0 + delta * cs.quad.x[k][1];
        frobenius_sq(&grad_star_point(&f.val[k], &f.grad[k], b, delta)).sqrt()
    });
    let sym = d_star_of(&f, cs, delta).weighted_norm(p, cs);
    let c_k = korn_constant(p, delta, cs.m, cs.n, c_k1);
    let lhs = c_k * grad;
    KornThinCheck { lhs, rhs: sym, c_k, c_k1, holds: lhs <= sym * (1.0 + 1e-12) }
}

/// `‖∂₁u‖_{q,B} − ‖u‖_{q,B}` with Euclidean pointwise norms.
pub fn poincare_residual(f: &QuadField, q: f64, cs: &CrossSection) -> f64 {
    let d1 = cs.weighted_norm(q, |k| {
        let g = &f.grad[k][0];
        (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt()
    });
    let u = cs.weighted_norm(q, |k| {
        let v = &f.val[k];
        (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
    });
    d1 - u
}

/// `(‖u₃‖_r, ‖∇u₃‖_q)` of the axial component, unweighted.
pub fn sobolev_sides(f: &QuadField, q: f64, r: f64, cs: &CrossSection) -> (f64, f64) {
    (cs.norm(r, |k| f.val[k][2]), cs.norm(q, |k| f.axial_gradient_norm(k)))
}
