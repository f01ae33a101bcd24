//! Mixed Galerkin solver for the fully developed curved-pipe system.
//!
//! Unknowns are the interior P2 velocity coefficients (three per node) and
//! the P1 pressure at every vertex but one. The discrete problem is
//!
//! ```text
//! (τ(D⋆u), B D⋆φ) + Re·c(u,u,φ) − (π, ∇·(Bφ)) = (f, φ)
//!                                  −(q, ∇·(Bu)) = 0
//! ```
//!
//! with the skew convective form `c`. The Dean problem reuses the same
//! assembly with flat operators (`δ = 0` inside `D⋆`, `B`) and its own forcing.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::constants::{kappa_constants_with_korn, FlowParams, KappaTable, DEFAULT_KORN_CONSTANT};
use crate::dean::SigmaSpec;
use crate::error::GnfError;
use crate::estimates::{apriori_records, VerificationRecord};
use crate::fields::{PressureField, QuadField, VelocityField};
use crate::linalg::{norm2, TripletMatrix};
use crate::operators::d_star_point;
use crate::space::{CrossSection, NQ};
use crate::tensor::{PowerLawModel, SymTensor3, TauLinearization};
use crate::tolerances::{NONLINEAR_ATOL, NONLINEAR_RTOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonlinearScheme {
    Picard,
    Newton,
    PicardThenNewton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialGuess {
    Zero,
    AxialPoiseuille,
    Supplied(VelocityField),
}

/// Parameter ladder from `(p, δ, Re) = (2, 0, 0)` towards the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Continuation {
    pub p_steps: usize,
    pub delta_steps: usize,
    /// Geometric steps in `Re`, ending at the target.
    pub re_steps: usize,
}

impl Default for Continuation {
    fn default() -> Self {
        Self { p_steps: 2, delta_steps: 2, re_steps: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub scheme: NonlinearScheme,
    /// Relaxation of each update, in `(0, 1]`.
    pub damping: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_iter: usize,
    /// Relative residual at which picard-then-newton switches to Newton.
    pub switch_tol: f64,
    pub continuation: Option<Continuation>,
    pub initial_guess: InitialGuess,
    /// Classical Korn constant used by the thinning constants.
    pub c_k1: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            scheme: NonlinearScheme::PicardThenNewton,
            damping: 1.0,
            rtol: NONLINEAR_RTOL,
            atol: NONLINEAR_ATOL,
            max_iter: 200,
            switch_tol: 1e-2,
            continuation: None,
            initial_guess: InitialGuess::Zero,
            c_k1: DEFAULT_KORN_CONSTANT,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), GnfError> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(GnfError::InvalidParameter(format!("damping {} must lie in (0, 1]", self.damping)));
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(GnfError::InvalidParameter("tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(GnfError::InvalidParameter("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Norms of a computed solution.
///
/// Weighted norms carry the suffix `_b`; `du` is the in-plane symmetric
/// gradient, `dstar` the starred one of the full velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NormSummary {
    pub dstar_2b: f64,
    pub dstar_pb: f64,
    pub grad_u3_2b: f64,
    pub grad_u3_pb: f64,
    pub du_2b: f64,
    pub du_pb: f64,
    pub u2_pb: f64,
    pub grad_u3_2: f64,
    pub grad_u3_p: f64,
    pub du_2: f64,
    pub du_p: f64,
    pub pressure_pc: f64,
}

impl NormSummary {
    pub fn compute(u: &VelocityField, pi: &PressureField, p: f64, cs: &CrossSection, op_delta: f64) -> Self {
        let f = QuadField::from_velocity(u, cs);
        let ds: Vec<f64> =
            (0..f.len()).map(|k| d_star_point(&f.val[k], &f.grad[k], 1.0 + op_delta * cs.quad.x[k][1], op_delta).norm()).collect();
        let du: Vec<f64> = (0..f.len()).map(|k| f.in_plane_strain(k).norm()).collect();
        let g3: Vec<f64> = (0..f.len()).map(|k| f.axial_gradient_norm(k)).collect();
        NormSummary {
            dstar_2b: cs.weighted_norm(2.0, |k| ds[k]),
            dstar_pb: cs.weighted_norm(p, |k| ds[k]),
            grad_u3_2b: cs.weighted_norm(2.0, |k| g3[k]),
            grad_u3_pb: cs.weighted_norm(p, |k| g3[k]),
            du_2b: cs.weighted_norm(2.0, |k| du[k]),
            du_pb: cs.weighted_norm(p, |k| du[k]),
            u2_pb: cs.weighted_norm(p, |k| f.val[k][1]),
            grad_u3_2: cs.norm(2.0, |k| g3[k]),
            grad_u3_p: cs.norm(p, |k| g3[k]),
            du_2: cs.norm(2.0, |k| du[k]),
            du_p: cs.norm(p, |k| du[k]),
            pressure_pc: pi.norm(p / (p - 1.0), cs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub problem: String,
    pub params: FlowParams,
    pub converged: bool,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    /// False if a line search had to accept a non-decreasing step.
    pub monotone: bool,
    pub load_norm: f64,
    pub norms: NormSummary,
    pub kappa: Option<KappaTable>,
    pub records: Vec<VerificationRecord>,
    /// `Re` below the uniqueness threshold.
    pub uniqueness_guaranteed: bool,
    /// `|(τ, B D⋆u) + Re c(u,u,u) − (f, u)| / |(f, u)|` at the returned iterate.
    pub energy_residual: f64,
    pub pressure_mean: f64,
    pub wall_time_s: f64,
}

/// Right-hand side of the momentum equation.
#[derive(Clone, Debug)]
pub(crate) enum Forcing {
    /// `(G, φ₃)`.
    Axial { g: f64 },
    /// `((G/B)a₃ + δσ(w₃)a₂, φ)` with the true curvature ratio in `B`.
    Dean { g: f64, delta: f64, sigma: SigmaSpec },
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Mode {
    Residual,
    Picard,
    Newton,
}

/// Assembled problem on a cross-section.
pub(crate) struct Problem<'a> {
    pub cs: &'a CrossSection,
    pub model: PowerLawModel,
    pub re: f64,
    /// Curvature ratio inside the operators (zero for the Dean problem).
    pub op_delta: f64,
    pub forcing: Forcing,
    n_u: usize,
    n_p: usize,
    pin: usize,
}

/// `D⋆(N e_i)` for one shape function.
#[inline]
fn basis_d_star(n: f64, d0: f64, d1: f64, i: usize, b: f64, delta: f64) -> SymTensor3 {
    let c = delta / b;
    match i {
        0 => SymTensor3 { d11: d0, d12: 0.5 * d1, ..SymTensor3::ZERO },
        1 => SymTensor3 { d22: d1, d12: 0.5 * d0, d33: c * n, ..SymTensor3::ZERO },
        _ => SymTensor3 { d13: 0.5 * d0, d23: 0.5 * (d1 - c * n), ..SymTensor3::ZERO },
    }
}

impl<'a> Problem<'a> {
    pub fn new(cs: &'a CrossSection, model: PowerLawModel, re: f64, op_delta: f64, forcing: Forcing) -> Self {
        Self { cs, model, re, op_delta, forcing, n_u: 3 * cs.n_interior, n_p: cs.n_vertices() - 1, pin: 0 }
    }

    pub fn n_dofs(&self) -> usize {
        self.n_u + self.n_p
    }

    #[inline]
    fn p_index(&self, v: usize) -> Option<usize> {
        match v.cmp(&self.pin) {
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Less => Some(self.n_u + v),
            std::cmp::Ordering::Greater => Some(self.n_u + v - 1),
        }
    }

    pub fn pack(&self, u: &VelocityField, pi: &PressureField) -> Vec<f64> {
        let mut x = u.to_reduced(self.cs);
        x.resize(self.n_dofs(), 0.0);
        for v in 0..self.cs.n_vertices() {
            if let Some(i) = self.p_index(v) {
                x[i] = pi.values[v] - pi.values[self.pin];
            }
        }
        x
    }

    /// Velocity and zero-mean pressure from a solution vector.
    pub fn unpack(&self, x: &[f64]) -> (VelocityField, PressureField) {
        let u = VelocityField::from_reduced(self.cs, &x[..self.n_u]);
        let mut pi = PressureField { values: (0..self.cs.n_vertices()).map(|v| self.p_index(v).map_or(0.0, |i| x[i])).collect() };
        let mean = pi.mean(self.cs);
        for v in &mut pi.values {
            *v -= mean;
        }
        (u, pi)
    }

    /// Norm of the assembled axial load, the reference for relative tolerances.
    pub fn load_norm(&self) -> f64 {
        let g = match &self.forcing {
            Forcing::Axial { g } | Forcing::Dean { g, .. } => *g,
        };
        let mut load = vec![0.0; self.cs.n_interior];
        for (c, cn) in self.cs.cell_nodes.iter().enumerate() {
            for q in 0..NQ {
                let k = c * NQ + q;
                let x = self.cs.quad.x[k];
                let f3 = match &self.forcing {
                    Forcing::Axial { .. } => g,
                    Forcing::Dean { delta, .. } => g / (1.0 + delta * x[1]),
                };
                for a in 0..6 {
                    let r = self.cs.interior_index[cn[a]];
                    if r != usize::MAX {
                        load[r] += self.cs.quad.w[k] * f3 * self.cs.quad.phi[k][a];
                    }
                }
            }
        }
        norm2(&load)
    }

    fn assemble(&self, x: &[f64], mode: Mode) -> (Vec<f64>, Option<TripletMatrix>) {
        let cs = self.cs;
        let n = self.n_dofs();
        let mut res = vec![0.0; n];
        let mut jac = (mode != Mode::Residual).then(|| TripletMatrix::with_capacity(n, cs.n_cells() * 432));
        let (re, dop) = (self.re, self.op_delta);
        let mut kloc = [[0.0; 21]; 21];
        for (c, cn) in cs.cell_nodes.iter().enumerate() {
            let cell = cs.mesh.cells[c];
            let mut gdof = [usize::MAX; 21];
            let mut uloc = [[0.0; 3]; 6];
            for a in 0..6 {
                let r = cs.interior_index[cn[a]];
                if r != usize::MAX {
                    for i in 0..3 {
                        gdof[3 * a + i] = 3 * r + i;
                        uloc[a][i] = x[3 * r + i];
                    }
                }
            }
            let mut ploc = [0.0; 3];
            for v in 0..3 {
                if let Some(i) = self.p_index(cell[v]) {
                    gdof[18 + v] = i;
                    ploc[v] = x[i];
                }
            }
            let mut rloc = [0.0; 21];
            if jac.is_some() {
                kloc = [[0.0; 21]; 21];
            }
            for q in 0..NQ {
                let k = c * NQ + q;
                let w = cs.quad.w[k];
                let xq = cs.quad.x[k];
                let bop = 1.0 + dop * xq[1];
                let (phi, dphi, psi) = (&cs.quad.phi[k], &cs.quad.dphi[k], &cs.quad.psi[k]);
                let mut val = [0.0; 3];
                let mut grad = [[0.0; 3]; 2];
                for a in 0..6 {
                    for i in 0..3 {
                        val[i] += phi[a] * uloc[a][i];
                        grad[0][i] += dphi[0][a] * uloc[a][i];
                        grad[1][i] += dphi[1][a] * uloc[a][i];
                    }
                }
                let pi = psi[0] * ploc[0] + psi[1] * ploc[1] + psi[2] * ploc[2];
                let e = d_star_point(&val, &grad, bop, dop);
                let lin = TauLinearization::at(&e, &self.model);
                let t = lin.tau();
                let (force, dforce) = match &self.forcing {
                    Forcing::Axial { g } => ([0.0, 0.0, *g], 0.0),
                    Forcing::Dean { g, delta, sigma } => {
                        let b = 1.0 + delta * xq[1];
                        ([0.0, delta * sigma.eval(val[2]), g / b], delta * sigma.derivative(val[2]))
                    }
                };
                let div_bu = bop * (grad[0][0] + grad[1][1]) + dop * val[1];
                let adv = [bop * val[0], bop * val[1]];
                let mut phis = [SymTensor3::ZERO; 18];
                let mut div_b = [0.0; 18];
                for a in 0..6 {
                    for i in 0..3 {
                        phis[3 * a + i] = basis_d_star(phi[a], dphi[0][a], dphi[1][a], i, bop, dop);
                    }
                    div_b[3 * a] = bop * dphi[0][a];
                    div_b[3 * a + 1] = bop * dphi[1][a] + dop * phi[a];
                }
                for a in 0..6 {
                    let adv_grad_na = adv[0] * dphi[0][a] + adv[1] * dphi[1][a];
                    for i in 0..3 {
                        let adv_grad_ui = adv[0] * grad[0][i] + adv[1] * grad[1][i];
                        let mut conv = 0.5 * (adv_grad_ui * phi[a] - adv_grad_na * val[i]);
                        if i == 2 {
                            conv += dop * val[2] * val[1] * phi[a];
                        } else if i == 1 {
                            conv -= dop * val[2] * val[2] * phi[a];
                        }
                        rloc[3 * a + i] += w * (bop * t.ddot(&phis[3 * a + i]) - pi * div_b[3 * a + i] - force[i] * phi[a] + re * conv);
                    }
                }
                for v in 0..3 {
                    rloc[18 + v] -= w * psi[v] * div_bu;
                }
                if jac.is_none() {
                    continue;
                }
                let newton = mode == Mode::Newton;
                for a in 0..6 {
                    let adv_grad_na = adv[0] * dphi[0][a] + adv[1] * dphi[1][a];
                    for i in 0..3 {
                        let row = 3 * a + i;
                        let phis_t = lin.eta.ddot(&phis[row]);
                        for b in 0..6 {
                            let adv_grad_nb = adv[0] * dphi[0][b] + adv[1] * dphi[1][b];
                            for kc in 0..3 {
                                let col = 3 * b + kc;
                                let mut visc = lin.a * phis[col].ddot(&phis[row]);
                                if newton {
                                    visc += lin.b * lin.eta.ddot(&phis[col]) * phis_t;
                                }
                                let mut cj = 0.0;
                                if kc == i {
                                    cj += 0.5 * (adv_grad_nb * phi[a] - adv_grad_na * phi[b]);
                                }
                                if kc == 1 && i == 2 {
                                    cj += dop * val[2] * phi[b] * phi[a];
                                } else if kc == 2 && i == 1 {
                                    cj -= dop * val[2] * phi[b] * phi[a];
                                }
                                let mut extra = 0.0;
                                if newton {
                                    if kc < 2 {
                                        cj += 0.5 * bop * phi[b] * (grad[kc][i] * phi[a] - dphi[kc][a] * val[i]);
                                    } else if i == 2 {
                                        cj += dop * phi[b] * val[1] * phi[a];
                                    } else if i == 1 {
                                        cj -= dop * phi[b] * val[2] * phi[a];
                                    }
                                    if kc == 2 && i == 1 {
                                        extra = -dforce * phi[b] * phi[a];
                                    }
                                }
                                kloc[row][col] += w * (bop * visc + re * cj + extra);
                            }
                        }
                        for v in 0..3 {
                            kloc[row][18 + v] -= w * div_b[row] * psi[v];
                            kloc[18 + v][row] -= w * psi[v] * div_b[row];
                        }
                    }
                }
            }
            for r in 0..21 {
                if gdof[r] != usize::MAX {
                    res[gdof[r]] += rloc[r];
                }
            }
            if let Some(j) = jac.as_mut() {
                for r in 0..21 {
                    if gdof[r] == usize::MAX {
                        continue;
                    }
                    for s in 0..21 {
                        if gdof[s] != usize::MAX && kloc[r][s] != 0.0 {
                            j.push(gdof[r], gdof[s], kloc[r][s]);
                        }
                    }
                }
            }
        }
        (res, jac)
    }

    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.assemble(x, Mode::Residual).0
    }

    /// Energy balance `(τ(D⋆u), B D⋆u) + Re c(u,u,u) − (f, u)`, relative to `|(f, u)|`.
    pub fn energy_residual(&self, u: &VelocityField) -> f64 {
        let cs = self.cs;
        let f = QuadField::from_velocity(u, cs);
        let (mut visc, mut work) = (0.0, 0.0);
        for k in 0..f.len() {
            let x = cs.quad.x[k];
            let bop = 1.0 + self.op_delta * x[1];
            let e = d_star_point(&f.val[k], &f.grad[k], bop, self.op_delta);
            visc += cs.quad.w[k] * bop * crate::tensor::tau(&e, &self.model).ddot(&e);
            let force = match &self.forcing {
                Forcing::Axial { g } => [0.0, 0.0, *g],
                Forcing::Dean { g, delta, sigma } => [0.0, delta * sigma.eval(f.val[k][2]), g / (1.0 + delta * x[1])],
            };
            work += cs.quad.w[k] * (0..3).map(|i| force[i] * f.val[k][i]).sum::<f64>();
        }
        if work == 0.0 {
            visc.abs()
        } else {
            (visc - work).abs() / work.abs()
        }
    }
}

/// Outcome of one nonlinear solve.
pub(crate) struct NonlinearOutcome {
    pub x: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub history: Vec<f64>,
    pub monotone: bool,
    pub load_norm: f64,
}

pub(crate) fn nonlinear_solve(prob: &Problem<'_>, x0: Vec<f64>, opts: &SolverOptions) -> Result<NonlinearOutcome, GnfError> {
    let load = prob.load_norm();
    let tol = (opts.rtol * load).max(opts.atol);
    let mut x = x0;
    let mut r = prob.residual(&x);
    let mut rn = norm2(&r);
    let mut history = vec![rn];
    let mut monotone = true;
    let mut converged = rn <= tol;
    let mut it = 0;
    let mut use_newton = opts.scheme == NonlinearScheme::Newton;
    while !converged && it < opts.max_iter {
        it += 1;
        if opts.scheme == NonlinearScheme::PicardThenNewton && !use_newton && rn <= opts.switch_tol * load.max(opts.atol) {
            use_newton = true;
        }
        if opts.scheme == NonlinearScheme::PicardThenNewton && it > 25 {
            use_newton = true;
        }
        let mode = if use_newton { Mode::Newton } else { Mode::Picard };
        let (_, jac) = prob.assemble(&x, mode);
        let jac = jac.expect("jacobian requested");
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let d = jac.solve(&neg).ok_or(GnfError::SingularSystem { iteration: it })?;
        let mut alpha = opts.damping;
        loop {
            let xt: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            let rt = prob.residual(&xt);
            let rtn = norm2(&rt);
            let accept = rtn <= (1.0 - 1e-4 * alpha) * rn || mode == Mode::Picard || alpha < 1.0 / 512.0;
            if accept {
                if rtn > rn && mode == Mode::Newton {
                    monotone = false;
                }
                x = xt;
                r = rt;
                rn = rtn;
                break;
            }
            alpha *= 0.5;
        }
        history.push(rn);
        converged = rn <= tol;
        if !rn.is_finite() {
            break;
        }
    }
    Ok(NonlinearOutcome { x, converged, iterations: it, history, monotone, load_norm: load })
}

fn initial_vector(prob: &Problem<'_>, params: &FlowParams, opts: &SolverOptions) -> Result<Vec<f64>, GnfError> {
    let cs = prob.cs;
    let u = match &opts.initial_guess {
        InitialGuess::Zero => VelocityField::zeros(cs),
        InitialGuess::AxialPoiseuille => {
            let flat = FlowParams { p: 2.0, re: 0.0, delta: 0.0, ..*params };
            let cs0 = cs.with_delta(0.0)?;
            let (u3, _) = crate::axial::axial_only_solve(&flat, &cs0, &SolverOptions::default())?;
            VelocityField::from_axial(&u3)
        }
        InitialGuess::Supplied(u) => {
            if u.coeffs.len() != cs.n_nodes() {
                return Err(GnfError::InvalidParameter("supplied initial guess has the wrong size".into()));
            }
            let mut u = u.clone();
            u.enforce_dirichlet(cs);
            u
        }
    };
    Ok(prob.pack(&u, &PressureField::zeros(cs)))
}

fn check_delta(params: &FlowParams, cs: &CrossSection) -> Result<(), GnfError> {
    if (params.delta - cs.delta).abs() > 1e-15 {
        return Err(GnfError::InvalidParameter(format!(
            "cross-section built with δ = {} but parameters ask for δ = {}",
            cs.delta, params.delta
        )));
    }
    Ok(())
}

/// Continuation rungs `(p, δ, Re)` ending at the target parameters.
pub fn continuation_ladder(params: &FlowParams, c: &Continuation) -> Vec<(f64, f64, f64)> {
    let mut rungs = Vec::new();
    let lerp = |a: f64, b: f64, s: usize, n: usize| a + (b - a) * s as f64 / n as f64;
    for s in 0..=c.p_steps.max(1) {
        rungs.push((lerp(2.0, params.p, s, c.p_steps.max(1)), 0.0, 0.0));
    }
    for s in 1..=c.delta_steps.max(1) {
        rungs.push((params.p, lerp(0.0, params.delta, s, c.delta_steps.max(1)), 0.0));
    }
    if params.re > 0.0 {
        let n = c.re_steps.max(1);
        for s in 0..n {
            let re = params.re / 2f64.powi((n - 1 - s) as i32);
            rungs.push((params.p, params.delta, re));
        }
    }
    rungs.dedup();
    rungs
}

/// Solves the full curved-pipe problem.
pub fn solve_full(
    params: &FlowParams,
    cs: &CrossSection,
    opts: &SolverOptions,
) -> Result<(VelocityField, PressureField, SolveReport), GnfError> {
    params.validate()?;
    opts.validate()?;
    check_delta(params, cs)?;
    let start = Instant::now();
    let mut opts_run = opts.clone();
    let mut iterations = 0;
    let mut history = Vec::new();
    let mut monotone = true;
    if let Some(c) = opts.continuation {
        let rungs = continuation_ladder(params, &c);
        let mut guess: Option<VelocityField> = None;
        for &(p, delta, re) in &rungs[..rungs.len().saturating_sub(1)] {
            let cs_r = cs.with_delta(delta)?;
            let prm = FlowParams { p, delta, re, ..*params };
            let mut o = opts.clone();
            o.continuation = None;
            if let Some(g) = guess.take() {
                o.initial_guess = InitialGuess::Supplied(g);
            }
            let (u, _, rep) = solve_full(&prm, &cs_r, &o)?;
            iterations += rep.iterations;
            history.extend(rep.residual_history);
            monotone &= rep.monotone;
            guess = Some(u);
        }
        if let Some(g) = guess {
            opts_run.initial_guess = InitialGuess::Supplied(g);
        }
        opts_run.continuation = None;
    }
    let prob = Problem::new(cs, params.model(), params.re, cs.delta, Forcing::Axial { g: params.g });
    let x0 = initial_vector(&prob, params, &opts_run)?;
    let out = nonlinear_solve(&prob, x0, &opts_run)?;
    let (u, pi) = prob.unpack(&out.x);
    let norms = NormSummary::compute(&u, &pi, params.p, cs, cs.delta);
    let kappa = kappa_constants_with_korn(params, cs, opts.c_k1).ok();
    let records = kappa.as_ref().map(|k| apriori_records(&norms, params, k)).unwrap_or_default();
    history.extend(out.history);
    let report = SolveReport {
        problem: "full".into(),
        params: *params,
        converged: out.converged,
        iterations: iterations + out.iterations,
        residual_history: history,
        monotone: monotone && out.monotone,
        load_norm: out.load_norm,
        norms,
        uniqueness_guaranteed: kappa.as_ref().is_some_and(|k| params.re < k.re_threshold),
        kappa,
        records,
        energy_residual: prob.energy_residual(&u),
        pressure_mean: pi.mean(cs),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok((u, pi, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::ShapeSpec;
    use crate::space::build_cross_section;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn disk(h: f64, delta: f64) -> CrossSection {
        build_cross_section(&ShapeSpec::Disk, h, delta).unwrap()
    }

    // Directional finite difference of the residual against the Newton matrix.
    #[test]
    fn newton_matrix_matches_residual_derivative() {
        let cs = disk(0.34, 0.4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (p, forcing, op_delta) in [
            (3.0, Forcing::Axial { g: 1.0 }, 0.4),
            (1.5, Forcing::Axial { g: 1.0 }, 0.4),
            (2.5, Forcing::Dean { g: 1.0, delta: 0.4, sigma: SigmaSpec::dean(3.0) }, 0.0),
        ] {
            let prob = Problem::new(&cs, PowerLawModel::new(p).unwrap(), 7.0, op_delta, forcing);
            let x: Vec<f64> = (0..prob.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let d: Vec<f64> = (0..prob.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (_, j) = prob.assemble(&x, Mode::Newton);
            let jd = j.unwrap().mul_vec(&d);
            let h = 1e-6;
            let xp: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + h * b).collect();
            let xm: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a - h * b).collect();
            let (rp, rm) = (prob.residual(&xp), prob.residual(&xm));
            let fd: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            let err: Vec<f64> = fd.iter().zip(&jd).map(|(a, b)| a - b).collect();
            assert!(norm2(&err) < 1e-6 * norm2(&jd), "p = {p}: {} vs {}", norm2(&err), norm2(&jd));
        }
    }

    #[test]
    fn picard_matrix_reproduces_residual() {
        // R(x) = A(x) x − F for the frozen-coefficient Oseen matrix A
        let cs = disk(0.34, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let prob = Problem::new(&cs, PowerLawModel::new(1.75).unwrap(), 4.0, 0.3, Forcing::Axial { g: 1.3 });
        let x: Vec<f64> = (0..prob.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (r, j) = prob.assemble(&x, Mode::Picard);
        let ax = j.unwrap().mul_vec(&x);
        let r0 = prob.residual(&vec![0.0; prob.n_dofs()]);
        let lhs: Vec<f64> = ax.iter().zip(&r0).map(|(a, b)| a + b).collect();
        let err: Vec<f64> = lhs.iter().zip(&r).map(|(a, b)| a - b).collect();
        assert!(norm2(&err) < 1e-11 * norm2(&r));
    }

    #[test]
    fn poiseuille_on_coarse_disk() {
        let cs = disk(0.2, 0.0);
        let params = FlowParams::new(2.0, 0.0, 0.0, 1.0);
        let (u, pi, rep) = solve_full(&params, &cs, &SolverOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.norms.du_2b < 1e-12);
        assert!(pi.norm(2.0, &cs) < 1e-10);
        let f = QuadField::from_velocity(&u, &cs);
        let err = cs.norm(2.0, |k| {
            let x = cs.quad.x[k];
            f.val[k][2] - (1.0 - x[0] * x[0] - x[1] * x[1]) / 4.0
        });
        assert!(err < 1e-4, "{err}");
        assert!(rep.energy_residual < 1e-8);
    }

    #[test]
    fn delta_mismatch_is_rejected() {
        let cs = disk(0.3, 0.1);
        let params = FlowParams::new(2.0, 0.0, 0.2, 1.0);
        assert!(solve_full(&params, &cs, &SolverOptions::default()).is_err());
        let thin = FlowParams::new(1.4, 0.0, 0.1, 1.0);
        assert!(solve_full(&thin, &cs, &SolverOptions::default()).is_err());
    }

    #[test]
    fn ladder_ends_at_target() {
        let params = FlowParams::new(3.0, 8.0, 0.3, 1.0);
        let rungs = continuation_ladder(&params, &Continuation::default());
        assert_eq!(rungs[0], (2.0, 0.0, 0.0));
        assert_eq!(*rungs.last().unwrap(), (3.0, 0.3, 8.0));
    }
}
