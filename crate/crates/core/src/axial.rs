//! Reduced scalar problem for unidirectional flows.
//!
//! Weak form: find `u₃` with `∫ B μ ∇⋆u₃·∇⋆φ = ∫ G φ`, where
//! `∇⋆v = (∂₁v, ∂₂v − δv/B)` and `μ = (1 + ½γ̇²|∇⋆u₃|²)^{(p−2)/2}`.

use std::time::Instant;

use crate::constants::{kappa_constants_with_korn, FlowParams};
use crate::error::GnfError;
use crate::estimates::apriori_records;
use crate::fields::{PressureField, ScalarField, VelocityField};
use crate::linalg::{norm2, TripletMatrix};
use crate::solver::{NormSummary, SolveReport, SolverOptions};
use crate::space::{CrossSection, NQ};

struct Axial<'a> {
    cs: &'a CrossSection,
    p: f64,
    gd2: f64,
    g: f64,
}

impl Axial<'_> {
    fn assemble(&self, x: &[f64], with_jac: bool) -> (Vec<f64>, Option<TripletMatrix>) {
        let cs = self.cs;
        let delta = cs.delta;
        let mut res = vec![0.0; cs.n_interior];
        let mut jac = with_jac.then(|| TripletMatrix::with_capacity(cs.n_interior, 36 * cs.n_cells()));
        for (c, cn) in cs.cell_nodes.iter().enumerate() {
            let idx: [usize; 6] = std::array::from_fn(|a| cs.interior_index[cn[a]]);
            let loc: [f64; 6] = std::array::from_fn(|a| if idx[a] == usize::MAX { 0.0 } else { x[idx[a]] });
            let mut rloc = [0.0; 6];
            let mut kloc = [[0.0; 6]; 6];
            for q in 0..NQ {
                let k = c * NQ + q;
                let (w, xq) = (cs.quad.w[k], cs.quad.x[k]);
                let b = 1.0 + delta * xq[1];
                let (phi, dphi) = (&cs.quad.phi[k], &cs.quad.dphi[k]);
                let gs: [[f64; 2]; 6] = std::array::from_fn(|a| [dphi[0][a], dphi[1][a] - delta * phi[a] / b]);
                let mut g = [0.0; 2];
                for a in 0..6 {
                    g[0] += loc[a] * gs[a][0];
                    g[1] += loc[a] * gs[a][1];
                }
                let s = 1.0 + 0.5 * self.gd2 * (g[0] * g[0] + g[1] * g[1]);
                let mu = s.powf(0.5 * (self.p - 2.0));
                let dmu = 0.5 * (self.p - 2.0) * self.gd2 * s.powf(0.5 * (self.p - 4.0));
                for a in 0..6 {
                    let ga = g[0] * gs[a][0] + g[1] * gs[a][1];
                    rloc[a] += w * (b * mu * ga - self.g * phi[a]);
                    if with_jac {
                        for bb in 0..6 {
                            let gb = g[0] * gs[bb][0] + g[1] * gs[bb][1];
                            let ab = gs[a][0] * gs[bb][0] + gs[a][1] * gs[bb][1];
                            kloc[a][bb] += w * b * (mu * ab + dmu * ga * gb);
                        }
                    }
                }
            }
            for a in 0..6 {
                if idx[a] == usize::MAX {
                    continue;
                }
                res[idx[a]] += rloc[a];
                if let Some(j) = jac.as_mut() {
                    for bb in 0..6 {
                        if idx[bb] != usize::MAX {
                            j.push(idx[a], idx[bb], kloc[a][bb]);
                        }
                    }
                }
            }
        }
        (res, jac)
    }
}

/// Newton solve of the reduced axial problem; `u₁ = u₂ = 0`, `π = 0`.
pub fn axial_only_solve(params: &FlowParams, cs: &CrossSection, opts: &SolverOptions) -> Result<(ScalarField, SolveReport), GnfError> {
    params.validate()?;
    opts.validate()?;
    if (params.delta - cs.delta).abs() > 1e-15 {
        return Err(GnfError::InvalidParameter(format!(
            "cross-section built with δ = {} but parameters ask for δ = {}",
            cs.delta, params.delta
        )));
    }
    let start = Instant::now();
    let prob = Axial { cs, p: params.p, gd2: params.gamma_dot * params.gamma_dot, g: params.g };
    let load = {
        let (r0, _) = prob.assemble(&vec![0.0; cs.n_interior], false);
        norm2(&r0)
    };
    let tol = (opts.rtol * load).max(opts.atol);
    let mut x = vec![0.0; cs.n_interior];
    let mut r = prob.assemble(&x, false).0;
    let mut rn = norm2(&r);
    let mut history = vec![rn];
    let mut monotone = true;
    let mut it = 0;
    while rn > tol && it < opts.max_iter {
        it += 1;
        let (_, jac) = prob.assemble(&x, true);
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let d = jac.unwrap().solve(&neg).ok_or(GnfError::SingularSystem { iteration: it })?;
        let mut alpha = opts.damping;
        loop {
            let xt: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            let rt = prob.assemble(&xt, false).0;
            let rtn = norm2(&rt);
            if rtn <= (1.0 - 1e-4 * alpha) * rn || alpha < 1.0 / 512.0 {
                monotone &= rtn <= rn;
                x = xt;
                r = rt;
                rn = rtn;
                break;
            }
            alpha *= 0.5;
        }
        history.push(rn);
        if !rn.is_finite() {
            break;
        }
    }
    let mut values = vec![0.0; cs.n_nodes()];
    for (k, &i) in cs.interior_index.iter().enumerate() {
        if i != usize::MAX {
            values[k] = x[i];
        }
    }
    let u3 = ScalarField { values };
    let u = VelocityField::from_axial(&u3);
    let pi = PressureField::zeros(cs);
    let norms = NormSummary::compute(&u, &pi, params.p, cs, cs.delta);
    let kappa = kappa_constants_with_korn(params, cs, opts.c_k1).ok();
    let records = kappa.as_ref().map(|k| apriori_records(&norms, params, k)).unwrap_or_default();
    let work: f64 = {
        let f = crate::fields::QuadField::from_scalar(&u3, cs);
        cs.integrate(|k| params.g * f.val[k][2])
    };
    let visc = {
        let (r, _) = prob.assemble(&x, false);
        // R·x = visc − work
        r.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + work
    };
    let report = SolveReport {
        problem: "axial".into(),
        params: *params,
        converged: rn <= tol,
        iterations: it,
        residual_history: history,
        monotone,
        load_norm: load,
        norms,
        uniqueness_guaranteed: kappa.as_ref().is_some_and(|k| params.re < k.re_threshold),
        kappa,
        records,
        energy_residual: if work == 0.0 { visc.abs() } else { (visc - work).abs() / work.abs() },
        pressure_mean: 0.0,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok((u3, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::QuadField;
    use crate::mesh::ShapeSpec;
    use crate::space::build_cross_section;

    #[test]
    fn poisson_on_disk() {
        let cs = build_cross_section(&ShapeSpec::Disk, 0.2, 0.0).unwrap();
        let (u3, rep) = axial_only_solve(&FlowParams::new(2.0, 0.0, 0.0, 2.0), &cs, &SolverOptions::default()).unwrap();
        assert!(rep.converged);
        let f = QuadField::from_scalar(&u3, &cs);
        let err = cs.norm(2.0, |k| {
            let x = cs.quad.x[k];
            f.val[k][2] - 2.0 * (1.0 - x[0] * x[0] - x[1] * x[1]) / 4.0
        });
        assert!(err < 2e-4, "{err}");
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let cs = build_cross_section(&ShapeSpec::Disk, 0.3, 0.0).unwrap();
        for p in [1.5, 3.0] {
            let (u3, rep) = axial_only_solve(&FlowParams::new(p, 0.0, 0.0, 0.0), &cs, &SolverOptions::default()).unwrap();
            assert!(rep.converged);
            assert!(u3.values.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn nonlinear_runs_converge() {
        let cs = build_cross_section(&ShapeSpec::Disk, 0.25, 0.3).unwrap();
        for p in [1.5, 4.0] {
            let (_, rep) = axial_only_solve(&FlowParams::new(p, 0.0, 0.3, 5.0), &cs, &SolverOptions::default()).unwrap();
            assert!(rep.converged, "p = {p}: {:?}", rep.residual_history);
            assert!(rep.energy_residual < 1e-6);
        }
    }
}
