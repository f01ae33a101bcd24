//! Symmetric 3×3 tensors and the power-law extra stress.
//!
//! The stress law is `τ(η) = 2(1+γ̇²|η|²)^{(p−2)/2} η`. Besides evaluation
//! this module exposes the directional derivative used by Newton and the
//! pointwise continuity / coercivity / monotonicity checks for both the
//! shear-thickening (`p ≥ 2`) and shear-thinning (`1 < p < 2`) regimes.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::GnfError;
use crate::tolerances::POINTWISE_REL_SLACK;

/// Symmetric tensor stored as `(d11, d22, d33, d12, d13, d23)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymTensor3 {
    pub d11: f64,
    pub d22: f64,
    pub d33: f64,
    pub d12: f64,
    pub d13: f64,
    pub d23: f64,
}

impl SymTensor3 {
    pub const ZERO: Self = Self { d11: 0.0, d22: 0.0, d33: 0.0, d12: 0.0, d13: 0.0, d23: 0.0 };

    pub fn new(d11: f64, d22: f64, d33: f64, d12: f64, d13: f64, d23: f64) -> Self {
        Self { d11, d22, d33, d12, d13, d23 }
    }

    /// Symmetric part `½(G + Gᵀ)` of a full matrix.
    pub fn sym_part(g: &[[f64; 3]; 3]) -> Self {
        Self {
            d11: g[0][0],
            d22: g[1][1],
            d33: g[2][2],
            d12: 0.5 * (g[0][1] + g[1][0]),
            d13: 0.5 * (g[0][2] + g[2][0]),
            d23: 0.5 * (g[1][2] + g[2][1]),
        }
    }

    pub fn to_matrix(&self) -> [[f64; 3]; 3] {
        [[self.d11, self.d12, self.d13], [self.d12, self.d22, self.d23], [self.d13, self.d23, self.d33]]
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.d11, self.d22, self.d33, self.d12, self.d13, self.d23]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4], a[5])
    }

    /// Frobenius product over the full matrix; off-diagonals count twice.
    #[inline]
    pub fn ddot(&self, o: &Self) -> f64 {
        self.d11 * o.d11 + self.d22 * o.d22 + self.d33 * o.d33 + 2.0 * (self.d12 * o.d12 + self.d13 * o.d13 + self.d23 * o.d23)
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.ddot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Self {
        Self { d11: s * self.d11, d22: s * self.d22, d33: s * self.d33, d12: s * self.d12, d13: s * self.d13, d23: s * self.d23 }
    }

    /// In-plane 2×2 block `(d11, d22, d12)` as a tensor with zero third row.
    pub fn in_plane(&self) -> Self {
        Self { d11: self.d11, d22: self.d22, d12: self.d12, ..Self::ZERO }
    }
}

impl Add for SymTensor3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::from_array(std::array::from_fn(|k| self.as_array()[k] + o.as_array()[k]))
    }
}

impl Sub for SymTensor3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::from_array(std::array::from_fn(|k| self.as_array()[k] - o.as_array()[k]))
    }
}

impl Neg for SymTensor3 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul<SymTensor3> for f64 {
    type Output = SymTensor3;
    fn mul(self, t: SymTensor3) -> SymTensor3 {
        t.scale(self)
    }
}

/// Rheological regime of a power-law model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Thinning,
    Newtonian,
    Thickening,
}

/// Power-law exponent `p` and shear-rate scale `γ̇`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawModel {
    pub p: f64,
    pub gamma_dot: f64,
}

impl PowerLawModel {
    pub fn new(p: f64) -> Result<Self, GnfError> {
        Self::with_shear_rate(p, 1.0)
    }

    pub fn with_shear_rate(p: f64, gamma_dot: f64) -> Result<Self, GnfError> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(GnfError::InvalidParameter(format!("power-law exponent p = {p} must exceed 1")));
        }
        if !(gamma_dot > 0.0) || !gamma_dot.is_finite() {
            return Err(GnfError::InvalidParameter(format!("shear rate {gamma_dot} must be positive")));
        }
        Ok(Self { p, gamma_dot })
    }

    pub fn regime(&self) -> Regime {
        if self.p < 2.0 {
            Regime::Thinning
        } else if self.p == 2.0 {
            Regime::Newtonian
        } else {
            Regime::Thickening
        }
    }

    /// Viscosity factor `(1+γ̇²|η|²)^{(p−2)/2}` given `|η|²`.
    #[inline]
    pub fn viscosity_factor(&self, norm_sq: f64) -> f64 {
        if self.p == 2.0 {
            1.0
        } else {
            (1.0 + self.gamma_dot * self.gamma_dot * norm_sq).powf(0.5 * (self.p - 2.0))
        }
    }
}

/// Extra stress `τ(η)`.
#[inline]
pub fn tau(eta: &SymTensor3, model: &PowerLawModel) -> SymTensor3 {
    eta.scale(2.0 * model.viscosity_factor(eta.norm_sq()))
}

/// Directional derivative `Dτ[η](ξ)`.
pub fn tau_jacobian(eta: &SymTensor3, xi: &SymTensor3, model: &PowerLawModel) -> SymTensor3 {
    let lin = TauLinearization::at(eta, model);
    lin.apply(xi)
}

/// Frozen linearization of `τ` at a point, cheap to apply many times.
#[derive(Debug, Clone, Copy)]
pub struct TauLinearization {
    pub eta: SymTensor3,
    /// `2(1+γ̇²|η|²)^{(p−2)/2}`
    pub a: f64,
    /// `2(p−2)γ̇²(1+γ̇²|η|²)^{(p−4)/2}`
    pub b: f64,
}

impl TauLinearization {
    pub fn at(eta: &SymTensor3, model: &PowerLawModel) -> Self {
        let g2 = model.gamma_dot * model.gamma_dot;
        let base = 1.0 + g2 * eta.norm_sq();
        let s = model.viscosity_factor(eta.norm_sq());
        let b = if model.p == 2.0 { 0.0 } else { 2.0 * (model.p - 2.0) * g2 * s / base };
        Self { eta: *eta, a: 2.0 * s, b }
    }

    pub fn tau(&self) -> SymTensor3 {
        self.eta.scale(self.a)
    }

    pub fn apply(&self, xi: &SymTensor3) -> SymTensor3 {
        xi.scale(self.a) + self.eta.scale(self.b * self.eta.ddot(xi))
    }

    /// `Dτ[η](ξ):ζ` without forming the intermediate tensor.
    #[inline]
    pub fn bilinear(&self, xi: &SymTensor3, zeta: &SymTensor3) -> f64 {
        self.a * xi.ddot(zeta) + self.b * self.eta.ddot(xi) * self.eta.ddot(zeta)
    }
}

/// One checked inequality `lhs ≤ rhs` (or `lhs ≥ rhs` stored flipped).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityOutcome {
    pub name: String,
    /// Small side of the inequality.
    pub lower: f64,
    /// Large side of the inequality.
    pub upper: f64,
    pub holds: bool,
    /// `(upper − lower) / max(|upper|, |lower|, 1e-300)`.
    pub relative_slack: f64,
}

impl InequalityOutcome {
    /// Records `lower ≤ upper` with a relative slack floor.
    pub fn le(name: &str, lower: f64, upper: f64, rel_floor: f64) -> Self {
        let scale = lower.abs().max(upper.abs()).max(1e-300);
        let relative_slack = (upper - lower) / scale;
        let holds = upper - lower >= -rel_floor * scale || (lower.abs() <= 1e-300 && upper.abs() <= 1e-300);
        Self { name: name.to_string(), lower, upper, holds, relative_slack }
    }
}

/// Pointwise property report for a pair `(η, ζ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub p: f64,
    /// The inequalities exactly as stated.
    pub checks: Vec<InequalityOutcome>,
    /// Corrected variants of stated inequalities that fail; not part of [`Self::all_hold`].
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub supplementary: Vec<InequalityOutcome>,
}

impl PropertyReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn worst_slack(&self) -> f64 {
        self.checks.iter().map(|c| c.relative_slack).fold(f64::INFINITY, f64::min)
    }
}

/// Continuity, coercivity and monotonicity of `τ` for `p ≥ 2` (five inequalities).
pub fn check_thickening_properties(eta: &SymTensor3, zeta: &SymTensor3, p: f64) -> Result<PropertyReport, GnfError> {
    if !(p >= 2.0) {
        return Err(GnfError::InvalidParameter(format!("thickening checks need p >= 2, got {p}")));
    }
    let model = PowerLawModel::new(p)?;
    let (te, tz) = (tau(eta, &model), tau(zeta, &model));
    let diff = *eta - *zeta;
    let dn = diff.norm();
    let (ne2, nz2) = (eta.norm_sq(), zeta.norm_sq());
    let gap = (te - tz).ddot(&diff);
    let pow_term = te.ddot(eta);
    let f = POINTWISE_REL_SLACK;
    let checks = vec![
        InequalityOutcome::le("continuity", (te - tz).norm(), (p - 1.0) * (1.0 + ne2 + nz2).powf(0.5 * (p - 2.0)) * dn, f),
        InequalityOutcome::le("coercivity_quadratic", 2.0 * ne2, pow_term, f),
        InequalityOutcome::le("coercivity_power", 2.0 * ne2.sqrt().powf(p), pow_term, f),
        InequalityOutcome::le("monotonicity_quadratic", dn * dn, gap, f),
        InequalityOutcome::le("monotonicity_power", dn.powf(p) / (2f64.powf(p - 1.0) * (p - 1.0)), gap, f),
    ];
    // τ carries a factor 2, so the Lipschitz factor is 2(p−1)(...); at p = 2 the
    // stated (p−1) gives |τ(η)−τ(ζ)| = 2|η−ζ| ≤ |η−ζ|, false for every η ≠ ζ
    let supplementary = vec![InequalityOutcome::le(
        "continuity_factor_two",
        (te - tz).norm(),
        2.0 * (p - 1.0) * (1.0 + ne2 + nz2).powf(0.5 * (p - 2.0)) * dn,
        f,
    )];
    Ok(PropertyReport { p, checks, supplementary })
}

/// Thinning constant `C_p = 1 + 2^{(2−p)/2}`.
pub fn thinning_continuity_constant(p: f64) -> f64 {
    1.0 + 2f64.powf(0.5 * (2.0 - p))
}

/// Continuity, coercivity and monotonicity of `τ` for `1 < p < 2` (three inequalities).
pub fn check_thinning_properties(eta: &SymTensor3, zeta: &SymTensor3, p: f64) -> Result<PropertyReport, GnfError> {
    if !(p > 1.0 && p < 2.0) {
        return Err(GnfError::InvalidParameter(format!("thinning checks need 1 < p < 2, got {p}")));
    }
    let model = PowerLawModel::new(p)?;
    let (te, tz) = (tau(eta, &model), tau(zeta, &model));
    let diff = *eta - *zeta;
    let dn = diff.norm();
    let (ne2, nz2) = (eta.norm_sq(), zeta.norm_sq());
    let f = POINTWISE_REL_SLACK;
    let checks = vec![
        InequalityOutcome::le("continuity", (te - tz).norm(), thinning_continuity_constant(p) * dn.powf(p - 1.0), f),
        InequalityOutcome::le("coercivity", 2.0 * (1.0 + ne2).powf(0.5 * (p - 2.0)) * ne2, te.ddot(eta), f),
        InequalityOutcome::le(
            "monotonicity",
            2.0 * (p - 1.0) * (1.0 + ne2 + nz2).powf(0.5 * (p - 2.0)) * dn * dn,
            (te - tz).ddot(&diff),
            f,
        ),
    ];
    // same missing factor 2: η = −ζ = tE gives 4(1+t²)^{(p−2)/2}t against C_p(2t)^{p−1}
    let supplementary =
        vec![InequalityOutcome::le("continuity_factor_two", (te - tz).norm(), 2.0 * thinning_continuity_constant(p) * dn.powf(p - 1.0), f)];
    Ok(PropertyReport { p, checks, supplementary })
}

/// Dispatches to the regime-appropriate property check.
pub fn check_properties(eta: &SymTensor3, zeta: &SymTensor3, p: f64) -> Result<PropertyReport, GnfError> {
    if p >= 2.0 {
        check_thickening_properties(eta, zeta, p)
    } else {
        check_thinning_properties(eta, zeta, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (SymTensor3, SymTensor3) {
        (SymTensor3::new(0.3, -1.2, 0.7, 0.25, -0.4, 1.1), SymTensor3::new(-0.8, 0.1, 0.05, 0.6, 0.9, -0.3))
    }

    #[test]
    fn frobenius_counts_off_diagonals_twice() {
        let (a, b) = sample();
        let (ma, mb) = (a.to_matrix(), b.to_matrix());
        let full: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| ma[i][j] * mb[i][j]).sum();
        assert!((a.ddot(&b) - full).abs() < 1e-14);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(ma[i][j], ma[j][i]);
            }
        }
    }

    #[test]
    fn tau_closed_form_examples() {
        let m4 = PowerLawModel::new(4.0).unwrap();
        assert_eq!(tau(&SymTensor3::ZERO, &m4), SymTensor3::ZERO);
        // |η|² = 1 with p = 4 gives τ = 2·(1+1)·η = 4η
        let eta = SymTensor3::new(0.5, 0.5, 0.0, 0.5, 0.0, 0.0);
        assert!((eta.norm_sq() - 1.0).abs() < 1e-15);
        let t = tau(&eta, &m4);
        assert!((t - eta.scale(4.0)).norm() < 1e-14);
        let m2 = PowerLawModel::new(2.0).unwrap();
        let (a, _) = sample();
        assert_eq!(tau(&a, &m2), a.scale(2.0));
    }

    #[test]
    fn jacobian_trivial_cases() {
        let (a, b) = sample();
        for p in [1.5, 3.0] {
            let m = PowerLawModel::new(p).unwrap();
            assert!((tau_jacobian(&SymTensor3::ZERO, &b, &m) - b.scale(2.0)).norm() < 1e-15);
        }
        let m2 = PowerLawModel::new(2.0).unwrap();
        assert!((tau_jacobian(&a, &b, &m2) - b.scale(2.0)).norm() < 1e-15);
    }

    #[test]
    fn jacobian_is_symmetric() {
        let (a, b) = sample();
        let c = SymTensor3::new(1.0, 0.2, -0.3, 0.4, 0.0, -0.7);
        let m = PowerLawModel::new(3.0).unwrap();
        let lhs = tau_jacobian(&a, &b, &m).ddot(&c);
        let rhs = tau_jacobian(&a, &c, &m).ddot(&b);
        assert!((lhs - rhs).abs() < 1e-12);
        let lin = TauLinearization::at(&a, &m);
        assert!((lin.bilinear(&b, &c) - lhs).abs() < 1e-12);
    }

    #[test]
    fn tau_is_odd() {
        let (a, _) = sample();
        let m = PowerLawModel::new(1.5).unwrap();
        assert!((tau(&-a, &m) + tau(&a, &m)).norm() < 1e-15);
    }

    #[test]
    fn equal_arguments_make_gaps_vanish() {
        let (a, _) = sample();
        let r = check_thickening_properties(&a, &a, 3.0).unwrap();
        assert!(r.all_hold());
        let r = check_thinning_properties(&a, &a, 1.5).unwrap();
        assert!(r.all_hold());
        let z = SymTensor3::ZERO;
        assert!(check_thinning_properties(&z, &z, 1.75).unwrap().all_hold());
    }

    #[test]
    fn newtonian_monotonicity_gap_is_exact() {
        let (a, b) = sample();
        let m = PowerLawModel::new(2.0).unwrap();
        let d = a - b;
        let gap = (tau(&a, &m) - tau(&b, &m)).ddot(&d);
        assert!((gap - 2.0 * d.norm_sq()).abs() < 1e-13);
    }

    #[test]
    fn stated_continuity_fails_at_p_two() {
        let (a, b) = sample();
        let r = check_thickening_properties(&a, &b, 2.0).unwrap();
        let c = &r.checks[0];
        assert!(!c.holds);
        assert!((c.lower - 2.0 * c.upper).abs() < 1e-12 * c.lower);
        assert!(r.supplementary.iter().all(|s| s.holds));
    }

    #[test]
    fn stated_thinning_continuity_fails_for_opposite_arguments() {
        let e = SymTensor3::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0).scale(10.0);
        let r = check_thinning_properties(&e, &-e, 1.5).unwrap();
        assert!(!r.checks[0].holds);
        assert!(r.supplementary[0].holds);
    }

    #[test]
    fn regime_guards() {
        let (a, b) = sample();
        assert!(check_thickening_properties(&a, &b, 1.9).is_err());
        assert!(check_thinning_properties(&a, &b, 2.0).is_err());
        assert!(check_thinning_properties(&a, &b, 1.0).is_err());
        assert!(PowerLawModel::new(1.0).is_err());
        assert_eq!(PowerLawModel::new(1.5).unwrap().regime(), Regime::Thinning);
        assert_eq!(PowerLawModel::new(2.0).unwrap().regime(), Regime::Newtonian);
        assert_eq!(PowerLawModel::new(3.0).unwrap().regime(), Regime::Thickening);
    }
}
