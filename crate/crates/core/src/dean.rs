//! Dean-type approximation: flat operators, forcing `(G/B)a₃ + δσ(w₃)a₂`.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{dean_constants, kappa_constants_with_korn, FlowParams};
use crate::error::GnfError;
use crate::estimates::dean_records;
use crate::fields::{PressureField, QuadField, VelocityField};
use crate::solver::{nonlinear_solve, solve_full, Forcing, InitialGuess, NormSummary, Problem, SolveReport, SolverOptions};
use crate::space::CrossSection;
use crate::stats::loglog_slope;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Nonlinearity `σ` with growth `|σ(λ)| ≤ c₀|λ|^α`.
#[derive(Clone)]
pub struct SigmaSpec {
    pub name: String,
    pub c0: f64,
    pub alpha: f64,
    eval: ScalarFn,
    deriv: Option<ScalarFn>,
}

impl fmt::Debug for SigmaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SigmaSpec").field("name", &self.name).field("c0", &self.c0).field("alpha", &self.alpha).finish()
    }
}

impl SigmaSpec {
    /// Classical Dean choice `σ(λ) = Re·λ²`.
    pub fn dean(re: f64) -> Self {
        Self { name: "dean".into(), c0: re, alpha: 2.0, eval: Arc::new(move |l| re * l * l), deriv: Some(Arc::new(move |l| 2.0 * re * l)) }
    }

    /// `σ(λ) = c₀|λ|^α`.
    pub fn power(c0: f64, alpha: f64) -> Self {
        let d: Option<ScalarFn> = (alpha >= 1.0).then(|| -> ScalarFn {
            Arc::new(move |l: f64| if l == 0.0 { 0.0 } else { c0 * alpha * l.abs().powf(alpha - 1.0) * l.signum() })
        });
        Self { name: format!("power({c0},{alpha})"), c0, alpha, eval: Arc::new(move |l: f64| c0 * l.abs().powf(alpha)), deriv: d }
    }

    /// User-supplied `σ` without a derivative (lagged in the iteration).
    pub fn custom(name: &str, c0: f64, alpha: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), c0, alpha, eval: Arc::new(f), deriv: None }
    }

    #[inline]
    pub fn eval(&self, l: f64) -> f64 {
        (self.eval)(l)
    }

    /// `σ'(λ)`, zero when no derivative is known.
    #[inline]
    pub fn derivative(&self, l: f64) -> f64 {
        self.deriv.as_ref().map_or(0.0, |d| d(l))
    }

    pub fn validate(&self) -> Result<(), GnfError> {
        if !(self.c0 >= 0.0 && self.c0.is_finite()) || !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(GnfError::InvalidParameter(format!("σ growth data c0 = {}, α = {} invalid", self.c0, self.alpha)));
        }
        Ok(())
    }

    /// Worst sampled `|σ(λ)| − c₀|λ|^α` on `[−10, 10]` (10⁴ points); `≤ 0` means the growth bound holds.
    pub fn growth_excess(&self) -> f64 {
        (0..10_000)
            .map(|i| {
                let l = -10.0 + 20.0 * i as f64 / 9_999.0;
                self.eval(l).abs() - self.c0 * l.abs().powf(self.alpha) * (1.0 + 1e-12)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `1/p' < α < p*/(2p')`.
    pub fn admissible_for_thinning(&self, p: f64) -> bool {
        let (pc, ps) = (p / (p - 1.0), 2.0 * p / (2.0 - p));
        self.alpha > 1.0 / pc && self.alpha < ps / (2.0 * pc)
    }
}

/// Solves `(E_σ)` on the cross-section built with the same `δ` as `params`.
pub fn solve_dean(
    params: &FlowParams,
    cs: &CrossSection,
    sigma: &SigmaSpec,
    opts: &SolverOptions,
) -> Result<(VelocityField, PressureField, SolveReport), GnfError> {
    params.validate()?;
    opts.validate()?;
    sigma.validate()?;
    if (params.delta - cs.delta).abs() > 1e-15 {
        return Err(GnfError::InvalidParameter(format!(
            "cross-section built with δ = {} but parameters ask for δ = {}",
            cs.delta, params.delta
        )));
    }
    let start = Instant::now();
    let prob = Problem::new(cs, params.model(), params.re, 0.0, Forcing::Dean { g: params.g, delta: params.delta, sigma: sigma.clone() });
    let u0 = match &opts.initial_guess {
        InitialGuess::Supplied(u) if u.coeffs.len() == cs.n_nodes() => u.clone(),
        _ => VelocityField::zeros(cs),
    };
    let out = nonlinear_solve(&prob, prob.pack(&u0, &PressureField::zeros(cs)), opts)?;
    let (w, pi) = prob.unpack(&out.x);
    let norms = NormSummary::compute(&w, &pi, params.p, cs, 0.0);
    let consts = dean_constants(params, cs, sigma.alpha, opts.c_k1).ok();
    let records = consts.as_ref().map(|c| dean_records(&norms, params, c, sigma, cs.area)).unwrap_or_default();
    let kappa = kappa_constants_with_korn(params, cs, opts.c_k1).ok();
    let report = SolveReport {
        problem: "dean".into(),
        params: *params,
        converged: out.converged,
        iterations: out.iterations,
        residual_history: out.history,
        monotone: out.monotone,
        load_norm: out.load_norm,
        norms,
        uniqueness_guaranteed: kappa.as_ref().is_some_and(|k| params.re < k.re_threshold),
        kappa,
        records,
        energy_residual: prob.energy_residual(&w),
        pressure_mean: pi.mean(cs),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok((w, pi, report))
}

/// One row of a δ-approximation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaApproxRow {
    pub p: f64,
    pub re: f64,
    pub delta: f64,
    /// `‖D(u−w)‖₂` of the full 3-vector difference.
    pub diff_d2: f64,
    pub diff_dp: f64,
    pub norm_du_2b: f64,
    pub norm_dw_2: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaApproxReport {
    pub sigma: String,
    pub re0_surrogate: f64,
    pub rows: Vec<DeltaApproxRow>,
    pub slope_d2: f64,
    pub slope_dp: f64,
    /// Guaranteed order of the measured quantity: `‖D(u−w)‖_p` for thinning, `‖D(u−w)‖₂` otherwise.
    pub theoretical_order: f64,
    pub observed_order: f64,
    /// `‖D(u−w)‖` non-increasing as δ decreases.
    pub monotone: bool,
}

/// Half the uniqueness threshold at the largest `δ`.
pub fn re0_surrogate(params: &FlowParams, cs: &CrossSection, deltas: &[f64], c_k1: f64) -> Result<f64, GnfError> {
    let dmax = deltas.iter().cloned().fold(0.0, f64::max);
    let cs_max = cs.with_delta(dmax)?;
    let k = kappa_constants_with_korn(&FlowParams { delta: dmax, ..*params }, &cs_max, c_k1)?;
    Ok(0.5 * k.re_threshold)
}

/// Solves both problems for each `δ` on the shared mesh and fits observed orders.
pub fn delta_approx_study(
    params: &FlowParams,
    cs: &CrossSection,
    sigma: &SigmaSpec,
    deltas: &[f64],
    opts: &SolverOptions,
) -> Result<DeltaApproxReport, GnfError> {
    if deltas.len() < 2 || deltas.iter().any(|d| !(*d > 0.0 && *d <= 0.3)) {
        return Err(GnfError::InvalidParameter("δ-approximation needs at least two δ in (0, 0.3]".into()));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(GnfError::InvalidParameter("δ sequence must be decreasing".into()));
    }
    let re0 = re0_surrogate(params, cs, deltas, opts.c_k1)?;
    if params.re > re0 {
        return Err(GnfError::InvalidParameter(format!("Re = {} exceeds the Re₀ surrogate {re0}", params.re)));
    }
    let p = params.p;
    let rows: Vec<Result<DeltaApproxRow, GnfError>> = deltas
        .par_iter()
        .map(|&delta| {
            let csd = cs.with_delta(delta)?;
            let prm = FlowParams { delta, ..*params };
            let (u, _, ru) = solve_full(&prm, &csd, opts)?;
            let (w, _, rw) = solve_dean(&prm, &csd, sigma, opts)?;
            let f = QuadField::from_velocity(&u.sub(&w), &csd);
            Ok(DeltaApproxRow {
                p,
                re: params.re,
                delta,
                diff_d2: csd.norm(2.0, |k| f.flat_strain(k).norm()),
                diff_dp: csd.norm(p, |k| f.flat_strain(k).norm()),
                norm_du_2b: ru.norms.du_2b,
                norm_dw_2: rw.norms.du_2,
                converged: ru.converged && rw.converged,
            })
        })
        .collect();
    let mut done = Vec::new();
    for r in rows {
        match r {
            Ok(row) => done.push(row),
            Err(e) => {
                return Err(GnfError::StudyAborted(format!("{e}; completed rows: {}", serde_json::to_string(&done)?)));
            }
        }
    }
    let ds: Vec<f64> = done.iter().map(|r| r.delta).collect();
    let slope_d2 = loglog_slope(&ds, &done.iter().map(|r| r.diff_d2).collect::<Vec<_>>());
    let slope_dp = loglog_slope(&ds, &done.iter().map(|r| r.diff_dp).collect::<Vec<_>>());
    let (theoretical_order, observed_order, measured): (f64, f64, Vec<f64>) = if p < 2.0 {
        (p - 1.0, slope_dp, done.iter().map(|r| r.diff_dp).collect())
    } else if p == 2.0 {
        (1.0, slope_d2, done.iter().map(|r| r.diff_d2).collect())
    } else {
        (p / (p - 1.0) / p, slope_dp, done.iter().map(|r| r.diff_dp).collect())
    };
    let monotone = measured.windows(2).all(|w| w[1] <= w[0]);
    Ok(DeltaApproxReport {
        sigma: sigma.name.clone(),
        re0_surrogate: re0,
        rows: done,
        slope_d2,
        slope_dp,
        theoretical_order,
        observed_order,
        monotone,
    })
}

/// One `(δ, Re)` point of the secondary-flow scaling table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeanScalingRow {
    pub p: f64,
    pub re: f64,
    pub delta: f64,
    pub de: f64,
    pub norm_du_2b: f64,
    /// `κ₂δRe` for thickening, `κ₅δRe` for thinning.
    pub bound: f64,
    pub bound_ratio: f64,
    pub bound_ok: bool,
    pub above_threshold: bool,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeanScalingReport {
    pub rows: Vec<DeanScalingRow>,
    /// Slope of `log‖Du‖_{2,B}` against `log δ`, one per `Re` (δ > 0 rows).
    pub slopes: Vec<(f64, f64)>,
}

pub fn dean_scaling_study(
    params: &FlowParams,
    cs: &CrossSection,
    res: &[f64],
    deltas: &[f64],
    opts: &SolverOptions,
) -> Result<DeanScalingReport, GnfError> {
    if res.is_empty() || deltas.is_empty() {
        return Err(GnfError::InvalidParameter("empty Re or δ list".into()));
    }
    let grid: Vec<(f64, f64)> = res.iter().flat_map(|&re| deltas.iter().map(move |&d| (re, d))).collect();
    let out: Vec<Result<DeanScalingRow, GnfError>> = grid
        .par_iter()
        .map(|&(re, delta)| {
            let csd = cs.with_delta(delta)?;
            let prm = FlowParams { re, delta, ..*params };
            let (_, _, rep) = solve_full(&prm, &csd, opts)?;
            let k = rep.kappa.clone().ok_or_else(|| GnfError::InvalidParameter("no κ constants".into()))?;
            let c = if k.thinning { k.kappa5.unwrap_or(f64::NAN) } else { k.kappa2 };
            let bound = c * delta * re;
            let ratio = if bound > 0.0 {
                rep.norms.du_2b / bound
            } else if rep.norms.du_2b == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            Ok(DeanScalingRow {
                p: prm.p,
                re,
                delta,
                de: prm.dean_number(),
                norm_du_2b: rep.norms.du_2b,
                bound,
                bound_ratio: ratio,
                bound_ok: rep.norms.du_2b <= bound + crate::tolerances::QUADRATURE_SLACK,
                above_threshold: !rep.uniqueness_guaranteed,
                converged: rep.converged,
            })
        })
        .collect();
    let mut rows = Vec::new();
    for r in out {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => return Err(GnfError::StudyAborted(format!("{e}; completed rows: {}", rows.len()))),
        }
    }
    let slopes = res
        .iter()
        .map(|&re| {
            let pts: Vec<&DeanScalingRow> = rows.iter().filter(|r| r.re == re && r.delta > 0.0).collect();
            let s = if pts.len() >= 2 {
                loglog_slope(&pts.iter().map(|r| r.delta).collect::<Vec<_>>(), &pts.iter().map(|r| r.norm_du_2b).collect::<Vec<_>>())
            } else {
                f64::NAN
            };
            (re, s)
        })
        .collect();
    Ok(DeanScalingReport { rows, slopes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::ShapeSpec;
    use crate::space::build_cross_section;

    #[test]
    fn sigma_growth() {
        assert!(SigmaSpec::dean(3.0).growth_excess() <= 0.0);
        assert!(SigmaSpec::power(2.0, 0.5).growth_excess() <= 0.0);
        let bad = SigmaSpec::custom("cubic", 1.0, 2.0, |l| l * l * l);
        assert!(bad.growth_excess() > 0.0);
        assert!(SigmaSpec::power(1.0, 2.0 / 3.0).admissible_for_thinning(1.5));
        assert!(!SigmaSpec::dean(1.0).admissible_for_thinning(1.5));
        assert!(SigmaSpec::power(-1.0, 1.0).validate().is_err());
    }

    #[test]
    fn power_derivative_matches_difference() {
        let s = SigmaSpec::power(1.5, 2.5);
        let h = 1e-6;
        for l in [-2.0, -0.3, 0.7, 3.0] {
            let fd = (s.eval(l + h) - s.eval(l - h)) / (2.0 * h);
            assert!((fd - s.derivative(l)).abs() < 1e-6 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn flat_dean_is_unidirectional() {
        let cs = build_cross_section(&ShapeSpec::Disk, 0.25, 0.0).unwrap();
        let params = FlowParams::new(2.0, 10.0, 0.0, 1.0);
        let (_, _, rep) = solve_dean(&params, &cs, &SigmaSpec::dean(10.0), &SolverOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.norms.du_2 < 1e-12);
        assert!(rep.records.iter().all(|r| r.pass));
    }

    #[test]
    fn curved_dean_has_secondary_flow() {
        let cs = build_cross_section(&ShapeSpec::Disk, 0.25, 0.2).unwrap();
        let params = FlowParams::new(2.0, 10.0, 0.2, 1.0);
        let (_, _, rep) = solve_dean(&params, &cs, &SigmaSpec::dean(10.0), &SolverOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.norms.du_2 > 1e-6);
        assert_eq!(rep.records.len(), 4);
        assert!(rep.records.iter().all(|r| r.pass), "{:?}", rep.records);
    }

    #[test]
    fn study_rejects_bad_sequences() {
        let cs = build_cross_section(&ShapeSpec::Disk, 0.3, 0.0).unwrap();
        let params = FlowParams::new(2.0, 0.01, 0.0, 1.0);
        let o = SolverOptions::default();
        let s = SigmaSpec::dean(0.01);
        assert!(delta_approx_study(&params, &cs, &s, &[0.1], &o).is_err());
        assert!(delta_approx_study(&params, &cs, &s, &[0.1, 0.2], &o).is_err());
        assert!(delta_approx_study(&params, &cs, &s, &[0.5, 0.2], &o).is_err());
        let big = FlowParams::new(2.0, 100.0, 0.0, 1.0);
        assert!(delta_approx_study(&big, &cs, &s, &[0.2, 0.1], &o).is_err());
    }
}
