//! Flow parameters and the explicit constants of the a priori estimates.

use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

use crate::error::GnfError;
use crate::space::CrossSection;
use crate::tensor::PowerLawModel;

/// Default classical Korn constant `C_{K,1}` (exact for `p = 2` in `H¹₀`).
pub const DEFAULT_KORN_CONSTANT: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Dimensionless parameters of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub p: f64,
    pub re: f64,
    pub delta: f64,
    pub g: f64,
    #[serde(default = "one")]
    pub gamma_dot: f64,
}

fn one() -> f64 {
    1.0
}

impl FlowParams {
    pub fn new(p: f64, re: f64, delta: f64, g: f64) -> Self {
        Self { p, re, delta, g, gamma_dot: 1.0 }
    }

    /// Checks the ranges required by the solvers.
    pub fn validate(&self) -> Result<(), GnfError> {
        if !(self.p >= 1.5) || !self.p.is_finite() {
            return Err(GnfError::InvalidParameter(format!("p = {} must be at least 3/2", self.p)));
        }
        if !(self.re >= 0.0) || !self.re.is_finite() {
            return Err(GnfError::InvalidParameter(format!("Re = {} must be non-negative", self.re)));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(GnfError::InvalidParameter(format!("δ = {} must lie in [0, 1)", self.delta)));
        }
        if !self.g.is_finite() {
            return Err(GnfError::InvalidParameter("G must be finite".into()));
        }
        PowerLawModel::with_shear_rate(self.p, self.gamma_dot)?;
        Ok(())
    }

    pub fn model(&self) -> PowerLawModel {
        PowerLawModel { p: self.p, gamma_dot: self.gamma_dot }
    }

    /// Dean number `√δ·Re`.
    pub fn dean_number(&self) -> f64 {
        self.delta.sqrt() * self.re
    }

    /// Conjugate exponent `p' = p/(p−1)`.
    pub fn p_conj(&self) -> f64 {
        conjugate(self.p)
    }
}

pub fn conjugate(q: f64) -> f64 {
    q / (q - 1.0)
}

/// Sobolev exponent `q* = 2q/(2−q)` for `q < 2`.
pub fn sobolev_exponent(q: f64) -> f64 {
    2.0 * q / (2.0 - q)
}

/// Constant `S_{q,r}` of `‖u‖_r ≤ S_{q,r}‖∇u‖_q` on a domain of area `area`.
pub fn sobolev_constant(q: f64, r: f64, area: f64) -> Result<f64, GnfError> {
    let vol = area.powf(0.5 + 1.0 / r - 1.0 / q);
    if q >= 2.0 && r >= q {
        return Ok(q.max(0.5 * r) / (2.0 * SQRT_2) * vol);
    }
    if q > 1.0 && q < 2.0 {
        let qs = sobolev_exponent(q);
        if r > 1.0 && r <= q {
            return Ok(qs / (4.0 * SQRT_2) * vol);
        }
        if r > q && r <= qs * (1.0 + 1e-14) {
            return Ok(q.max(0.5 * r) / (2.0 * SQRT_2) * vol);
        }
    }
    Err(GnfError::InvalidParameter(format!("no Sobolev constant for (q, r) = ({q}, {r})")))
}

/// Constants `(D_{q,α}, E_{q,α})` of the σ-estimates.
pub fn sigma_constants(q: f64, alpha: f64, area: f64, thinning: bool) -> Result<(f64, f64), GnfError> {
    if !(alpha >= 0.0) {
        return Err(GnfError::InvalidParameter(format!("σ growth exponent α = {alpha} must be non-negative")));
    }
    if !thinning {
        if q < 2.0 {
            return Err(GnfError::InvalidParameter(format!("thickening σ-constants need q >= 2, got {q}")));
        }
        let qc = conjugate(q);
        let d =
            (q / (2.0 * SQRT_2)).max(alpha * q / (4.0 * SQRT_2)).powf(alpha + 1.0) * area.powf(1.0 / qc + 0.5 * (alpha + 1.0) - alpha / q);
        let e = (1.0 / SQRT_2).max(alpha / (2.0 * SQRT_2)).powf(alpha) * area.powf(1.0 / qc);
        return Ok((d, e));
    }
    if !(1.5..2.0).contains(&q) {
        return Err(GnfError::InvalidParameter(format!("thinning σ-constants need 3/2 <= q < 2, got {q}")));
    }
    let (qs, qc) = (sobolev_exponent(q), conjugate(q));
    if alpha > qs - 1.0 {
        return Err(GnfError::InvalidParameter(format!("α = {alpha} exceeds q* − 1 = {}", qs - 1.0)));
    }
    let d = sobolev_constant(q, qs, area)?.powf(alpha + 1.0);
    // E needs 1/q' < α ≤ q*/q'; outside that range it is not defined
    let e = if alpha > 1.0 / qc && alpha <= qs / qc { sobolev_constant(q, alpha * qc, area)?.powf(alpha) } else { f64::NAN };
    Ok((d, e))
}

/// Korn constant `C_K = C_{K,1}(nm)^{−1/p} / (2(1+δm))` of the starred inequality.
pub fn korn_constant(p: f64, delta: f64, m: f64, n: f64, c_k1: f64) -> f64 {
    c_k1 * (n * m).powf(-1.0 / p) / (2.0 * (1.0 + delta * m))
}

/// Constants of the a priori estimates for the full problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaTable {
    pub thinning: bool,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    /// Thinning only.
    pub kappa4: Option<f64>,
    pub kappa5: Option<f64>,
    pub kappa6: Option<f64>,
    /// `S_{p,2p'}` (thinning only).
    pub sobolev_p_2pc: Option<f64>,
    pub c_k1: f64,
    /// Reynolds number below which the weak solution is unique.
    pub re_threshold: f64,
}

/// κ constants and the uniqueness threshold for `params` on `cs`.
pub fn kappa_constants(params: &FlowParams, cs: &CrossSection) -> Result<KappaTable, GnfError> {
    kappa_constants_with_korn(params, cs, DEFAULT_KORN_CONSTANT)
}

pub fn kappa_constants_with_korn(params: &FlowParams, cs: &CrossSection, c_k1: f64) -> Result<KappaTable, GnfError> {
    let (p, g, delta) = (params.p, params.g.abs(), params.delta);
    let (m, n, area, bl1) = (cs.m, cs.n, cs.area, cs.b_l1);
    if p >= 2.0 {
        let kappa1 = (0.5 * m).sqrt() * g * area;
        let kappa2 = m.powf(1.5) * area / 2.0 * kappa1 * kappa1;
        let kappa3 = n * m.powf(1.5) * area.powf(0.75);
        let re_threshold = 2.0 / (kappa1 * kappa3);
        return Ok(KappaTable {
            thinning: false,
            kappa1,
            kappa2,
            kappa3,
            kappa4: None,
            kappa5: None,
            kappa6: None,
            sobolev_p_2pc: None,
            c_k1,
            re_threshold,
        });
    }
    if p < 1.5 {
        return Err(GnfError::InvalidParameter(format!("κ constants need p >= 3/2, got {p}")));
    }
    let pc = conjugate(p);
    let kappa1 = m.powf(1.0 / p) / 2.0 * g * area.powf(1.0 / pc);
    let bracket = bl1 / (p - 1.0) + kappa1.powf(pc);
    let kappa2 = kappa1 * bracket.powf((2.0 - p) / p);
    let kappa3 = pc * bl1 + (2f64.powf(0.5 * (2.0 - p)) * kappa1).powf(pc);
    let kappa4 = 2f64.powf(2.0 - p) * (1.0 + delta * m) * kappa2;
    let s = sobolev_constant(p, 2.0 * pc, area)?;
    let kappa5 = m.powf(3.0 / p) / c_k1 * s.powi(3) * kappa4 * kappa4 * bracket.powf((2.0 - p) / p);
    let kappa6 = 8.0 * n.powf((p + 1.0) / p) * m.powf(6.0 / p) * (1.0 + delta * m).powi(3) / c_k1.powi(3) * s * s;
    let re_threshold = if kappa1 > 0.0 { 1.0 / (2.0 * kappa1 * kappa6) * bracket.powf(-2.0 * (2.0 - p) / p) } else { f64::INFINITY };
    Ok(KappaTable {
        thinning: true,
        kappa1,
        kappa2,
        kappa3,
        kappa4: Some(kappa4),
        kappa5: Some(kappa5),
        kappa6: Some(kappa6),
        sobolev_p_2pc: Some(s),
        c_k1,
        re_threshold,
    })
}

/// Constants of the Dean-problem estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeanConstants {
    pub thinning: bool,
    pub c1: f64,
    pub c2: f64,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    /// Whether α meets the hypothesis of the thinning estimate.
    pub alpha_admissible: bool,
}

pub fn dean_constants(params: &FlowParams, cs: &CrossSection, alpha: f64, c_k1: f64) -> Result<DeanConstants, GnfError> {
    let (p, g, m, area) = (params.p, params.g.abs(), cs.m, cs.area);
    if p >= 2.0 {
        let c1 = m * area * g / SQRT_2;
        let (d, _) = sigma_constants(2.0, alpha, area, false)?;
        let c2 = d * c1.powf(alpha) / SQRT_2;
        return Ok(DeanConstants { thinning: false, c1, c2, c3: None, c4: None, alpha_admissible: true });
    }
    let (pc, ps) = (conjugate(p), sobolev_exponent(p));
    let c1 = m * area.powf(1.0 / pc) * g;
    let admissible = alpha > 1.0 / pc && alpha < ps / (2.0 * pc);
    if !admissible {
        return Ok(DeanConstants { thinning: true, c1, c2: f64::NAN, c3: None, c4: None, alpha_admissible: false });
    }
    let (d, _) = sigma_constants(p, alpha, area, true)?;
    let c2 = d / (2.0 * c_k1);
    Ok(DeanConstants { thinning: true, c1, c2, c3: None, c4: None, alpha_admissible: true })
}

/// Completes `c3`, `c4` of the thinning Dean estimate for growth constant `c0`.
pub fn dean_thinning_c3_c4(p: f64, alpha: f64, c0: f64, area: f64, c1: f64, c2: f64) -> (f64, f64) {
    let e = (2.0 - p) * (alpha + 1.0);
    let c3 = (c1 + c0 * c1.powf(alpha) * c2) * (1.0 + area).powf(e / p);
    let c4 = c3 * (1.0 / (1.0 - e) + c3.powf(1.0 / (1.0 - e))).powf(e / p);
    (c3, c4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::ShapeSpec;
    use crate::space::build_cross_section;
    use std::f64::consts::PI;

    #[test]
    fn sobolev_examples() {
        assert!((sobolev_constant(2.0, 2.0, PI).unwrap() - (PI / 2.0).sqrt()).abs() < 1e-14);
        assert!((sobolev_constant(2.0, 4.0, PI).unwrap() - PI.powf(0.25) / SQRT_2).abs() < 1e-14);
        // q = 3/2, r = q* = 6: third branch with max(q, r/2) = 3, volume exponent 1/2 + 1/6 − 2/3 = 0
        assert!((sobolev_constant(1.5, 6.0, PI).unwrap() - 3.0 / (2.0 * SQRT_2)).abs() < 1e-13);
        // second branch r ≤ q: q*/(4√2)
        let v = sobolev_constant(1.5, 1.5, 1.0).unwrap();
        assert!((v - 6.0 / (4.0 * SQRT_2)).abs() < 1e-14);
        assert!(sobolev_constant(1.5, 7.0, PI).is_err());
        assert!(sobolev_constant(3.0, 2.0, PI).is_err());
    }

    #[test]
    fn sigma_constant_examples() {
        let (d, e) = sigma_constants(2.0, 0.0, PI, false).unwrap();
        assert!((d - PI / SQRT_2).abs() < 1e-13);
        assert!((e - PI.sqrt()).abs() < 1e-13);
        // α = 2: max(1/√2, 1/√2)³ π^{1/2+3/2−1} = π/(2√2)
        let (d, _) = sigma_constants(2.0, 2.0, PI, false).unwrap();
        assert!((d - PI / (2.0 * SQRT_2)).abs() < 1e-13);
        let (d, _) = sigma_constants(1.5, 2.0, PI, true).unwrap();
        assert!((d - sobolev_constant(1.5, 6.0, PI).unwrap().powi(3)).abs() < 1e-13);
        assert!(sigma_constants(1.5, 5.5, PI, true).is_err());
    }

    #[test]
    fn kappa_examples_on_disk() {
        let cs = build_cross_section(&ShapeSpec::Disk, 0.1, 0.0).unwrap();
        let k = kappa_constants(&FlowParams::new(3.0, 0.0, 0.0, 1.0), &cs).unwrap();
        let area = cs.area;
        assert!((k.kappa1 - area / SQRT_2).abs() < 1e-12);
        assert!((k.kappa1 - PI / SQRT_2).abs() < 1e-3);
        assert!((k.kappa3 - PI.powf(0.75)).abs() < 1e-3);
        assert!((k.re_threshold - 2.0 / (k.kappa1 * k.kappa3)).abs() < 1e-15);
        // identical table at p = 2: the constants do not depend on p
        let k2 = kappa_constants(&FlowParams::new(2.0, 0.0, 0.0, 1.0), &cs).unwrap();
        assert_eq!(k.kappa1, k2.kappa1);
        assert_eq!(k.re_threshold, k2.re_threshold);
    }

    #[test]
    fn kappas_grow_with_curvature() {
        let c0 = build_cross_section(&ShapeSpec::Disk, 0.1, 0.0).unwrap();
        let c5 = c0.with_delta(0.5).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let a = kappa_constants(&FlowParams::new(p, 0.0, 0.0, 1.0), &c0).unwrap();
            let b = kappa_constants(&FlowParams::new(p, 0.0, 0.5, 1.0), &c5).unwrap();
            assert!(b.kappa1 > a.kappa1 && b.kappa2 > a.kappa2);
            assert!(b.re_threshold < a.re_threshold);
        }
    }

    #[test]
    fn thinning_table_is_complete() {
        let cs = build_cross_section(&ShapeSpec::Disk, 0.1, 0.0).unwrap();
        let k = kappa_constants(&FlowParams::new(1.5, 0.0, 0.0, 1.0), &cs).unwrap();
        assert!(k.thinning);
        // κ₁ = ½ |Σ|^{1/3} at m = 1, G = 1
        assert!((k.kappa1 - 0.5 * cs.area.powf(1.0 / 3.0)).abs() < 1e-13);
        assert!(k.kappa4.unwrap() > k.kappa2);
        assert!(k.re_threshold > 0.0 && k.re_threshold < 0.1);
    }

    #[test]
    fn korn_constant_reduces_at_zero_curvature() {
        assert!((korn_constant(2.0, 0.0, 1.0, 1.0, DEFAULT_KORN_CONSTANT) - DEFAULT_KORN_CONSTANT / 2.0).abs() < 1e-15);
    }

    #[test]
    fn dean_constants_examples() {
        let cs = build_cross_section(&ShapeSpec::Disk, 0.1, 0.0).unwrap();
        let d = dean_constants(&FlowParams::new(2.0, 1.0, 0.0, 1.0), &cs, 2.0, DEFAULT_KORN_CONSTANT).unwrap();
        assert!((d.c1 - cs.area / SQRT_2).abs() < 1e-13);
        let thin = dean_constants(&FlowParams::new(1.5, 1.0, 0.0, 1.0), &cs, 2.0, DEFAULT_KORN_CONSTANT).unwrap();
        assert!(!thin.alpha_admissible);
        let thin = dean_constants(&FlowParams::new(1.5, 1.0, 0.0, 1.0), &cs, 2.0 / 3.0, DEFAULT_KORN_CONSTANT).unwrap();
        assert!(thin.alpha_admissible && thin.c2 > 0.0);
    }
}
