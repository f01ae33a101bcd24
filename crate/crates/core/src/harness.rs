//! Verification campaigns: solver runs and random fields turned into records.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{conjugate, kappa_constants_with_korn, sobolev_constant, FlowParams, DEFAULT_KORN_CONSTANT};
use crate::dean::{solve_dean, SigmaSpec};
use crate::error::GnfError;
use crate::estimates::{
    apriori_records, curvature_defect_record, sigma_records, tensor_field_records, trilinear_record, VerificationRecord,
};
use crate::fields::{PressureField, QuadField, TensorField, VelocityField};
use crate::mesh::ShapeSpec;
use crate::operators::{korn_identity_of, korn_thin_check, poincare_residual, sobolev_sides};
use crate::solver::{solve_full, InitialGuess, NormSummary, SolveReport, SolverOptions};
use crate::space::{build_cross_section, CrossSection};
use crate::stats::loglog_slope;
use crate::tensor::{check_properties, tau, tau_jacobian, PowerLawModel, SymTensor3};
use crate::tolerances::{IDENTITY_REL_TOL, QUADRATURE_SLACK, UNIDIRECTIONAL_TOL};

/// Checks a campaign can run at each grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CampaignCheck {
    /// Bounds on the full solution.
    Apriori,
    /// `‖Du‖_{2,B}` against the δRe = 0 dichotomy.
    Unidirectional,
    /// Solve of the Dean-type problem at the same point, with its bounds.
    Dean,
    /// Several initial guesses, one solution (skipped at or above half the threshold).
    Uniqueness,
}

/// Grid of `(h, p, δ, Re, G)` points and what to check at each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSpec {
    pub shape: ShapeSpec,
    pub hs: Vec<f64>,
    pub ps: Vec<f64>,
    pub deltas: Vec<f64>,
    /// `Re` as a multiple of the uniqueness threshold at the point.
    pub re_fractions: Vec<f64>,
    pub gs: Vec<f64>,
    pub checks: Vec<CampaignCheck>,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl CampaignSpec {
    pub fn validate(&self) -> Result<(), GnfError> {
        if [self.hs.len(), self.ps.len(), self.deltas.len(), self.re_fractions.len(), self.gs.len()].contains(&0) {
            return Err(GnfError::InvalidParameter("campaign grid has an empty axis".into()));
        }
        if self.checks.is_empty() {
            return Err(GnfError::InvalidParameter("campaign has no checks".into()));
        }
        if self.re_fractions.iter().any(|f| !(*f >= 0.0 && f.is_finite())) {
            return Err(GnfError::InvalidParameter("Re fractions must be non-negative".into()));
        }
        self.solver.validate()
    }

    /// Points in the order `h, p, δ, Re fraction, G`.
    pub fn points(&self) -> Vec<(f64, f64, f64, f64, f64)> {
        let mut out = Vec::new();
        for &h in &self.hs {
            for &p in &self.ps {
                for &d in &self.deltas {
                    for &f in &self.re_fractions {
                        for &g in &self.gs {
                            out.push((h, p, d, f, g));
                        }
                    }
                }
            }
        }
        out
    }
}

/// A record with the grid point it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRecord {
    pub p: f64,
    pub re: f64,
    pub delta: f64,
    pub g: f64,
    pub h: f64,
    #[serde(flatten)]
    pub record: VerificationRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub seed: u64,
    pub records: Vec<CampaignRecord>,
}

impl CampaignResult {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.record.pass)
    }

    pub fn n_failed(&self) -> usize {
        self.records.iter().filter(|r| !r.record.pass).count()
    }

    /// Per-claim `(claim, records, failures)`, in claim order.
    pub fn tally(&self) -> Vec<(String, usize, usize)> {
        let mut m: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for r in &self.records {
            let e = m.entry(&r.record.claim).or_default();
            e.0 += 1;
            e.1 += usize::from(!r.record.pass);
        }
        m.into_iter().map(|(k, (n, f))| (k.to_string(), n, f)).collect()
    }
}

/// Sorts by claim id, then by `(p, Re, δ, G, h)`.
pub fn sort_records(records: &mut [CampaignRecord]) {
    records.sort_by(|a, b| {
        a.record
            .claim
            .cmp(&b.record.claim)
            .then(a.p.total_cmp(&b.p))
            .then(a.re.total_cmp(&b.re))
            .then(a.delta.total_cmp(&b.delta))
            .then(a.g.total_cmp(&b.g))
            .then(a.h.total_cmp(&b.h))
            .then(a.record.lhs.total_cmp(&b.record.lhs))
    });
}

/// σ used by the Dean check at exponent `p`: the Dean choice when `p ≥ 2`,
/// `|λ|^α` with α mid-way through the admissible interval otherwise.
pub fn default_sigma(p: f64, re: f64) -> SigmaSpec {
    if p >= 2.0 {
        SigmaSpec::dean(re)
    } else {
        SigmaSpec::power(1.0, thinning_alpha_midpoint(p))
    }
}

/// Midpoint of `(1/p', p*/(2p'))`.
pub fn thinning_alpha_midpoint(p: f64) -> f64 {
    let (pc, ps) = (conjugate(p), 2.0 * p / (2.0 - p));
    0.5 * (1.0 / pc + ps / (2.0 * pc))
}

/// Bounds on a converged solution of the full problem.
pub fn verify_apriori(
    u: &VelocityField,
    pi: &PressureField,
    params: &FlowParams,
    cs: &CrossSection,
    c_k1: f64,
) -> Result<Vec<VerificationRecord>, GnfError> {
    let norms = NormSummary::compute(u, pi, params.p, cs, cs.delta);
    let k = kappa_constants_with_korn(params, cs, c_k1)?;
    Ok(apriori_records(&norms, params, &k))
}

/// `(‖Du‖_{2,B} ≤ tol, ‖Du‖_{2,B})`.
pub fn unidirectional_check(u: &VelocityField, cs: &CrossSection, tol: f64) -> (bool, f64) {
    let f = QuadField::from_velocity(u, cs);
    let n = cs.weighted_norm(2.0, |k| f.in_plane_strain(k).norm());
    (n <= tol, n)
}

/// Record for the dichotomy: no secondary flow iff `δRe = 0`.
pub fn unidirectional_record(du_2b: f64, params: &FlowParams, tol: f64) -> VerificationRecord {
    if params.delta * params.re == 0.0 {
        VerificationRecord::le("unidirectional", du_2b, tol, 0.0).with_note("δRe = 0: expect none")
    } else {
        VerificationRecord::ge("unidirectional", du_2b, tol, 0.0).with_note("δRe > 0: expect secondary flow")
    }
}

fn convergence_record(rep: &SolveReport, opts: &SolverOptions) -> VerificationRecord {
    let last = rep.residual_history.last().copied().unwrap_or(0.0);
    let tol = (opts.rtol * rep.load_norm).max(opts.atol);
    VerificationRecord::le("solver.converged", last, tol, 0.0).with_note(rep.problem.clone())
}

/// Outcome of solving from several initial guesses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub params: FlowParams,
    pub re_threshold: f64,
    pub n_guesses: usize,
    pub converged: Vec<bool>,
    pub max_distance: f64,
}

/// Solves from `zero`, `axial-poiseuille` and random perturbations and returns
/// the largest pairwise `‖D⋆(uᵢ−uⱼ)‖_{2,B}`.
pub fn uniqueness_probe(
    params: &FlowParams,
    cs: &CrossSection,
    opts: &SolverOptions,
    n_guesses: usize,
    seed: u64,
) -> Result<UniquenessReport, GnfError> {
    if n_guesses < 2 {
        return Err(GnfError::InvalidParameter("uniqueness probe needs at least two guesses".into()));
    }
    let k = kappa_constants_with_korn(params, cs, opts.c_k1)?;
    if !(params.re < 0.5 * k.re_threshold) {
        return Err(GnfError::InvalidParameter(format!("Re = {} is not below half the threshold {}", params.re, k.re_threshold)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let guesses: Vec<InitialGuess> = (0..n_guesses)
        .map(|i| match i {
            0 => InitialGuess::Zero,
            1 => InitialGuess::AxialPoiseuille,
            _ => InitialGuess::Supplied(VelocityField::random(cs, &mut rng).scaled(0.1 * i as f64)),
        })
        .collect();
    let mut sols = Vec::with_capacity(n_guesses);
    let mut converged = Vec::with_capacity(n_guesses);
    for g in guesses {
        let o = SolverOptions { initial_guess: g, continuation: None, ..opts.clone() };
        let (u, _, rep) = solve_full(params, cs, &o)?;
        converged.push(rep.converged);
        sols.push(QuadField::from_velocity(&u, cs));
    }
    let mut max_distance: f64 = 0.0;
    for i in 0..sols.len() {
        for j in i + 1..sols.len() {
            let (a, b) = (&sols[i], &sols[j]);
            let d = cs.weighted_norm(2.0, |k| {
                let bk = 1.0 + cs.delta * cs.quad.x[k][1];
                let v: [f64; 3] = std::array::from_fn(|c| a.val[k][c] - b.val[k][c]);
                let g: [[f64; 3]; 2] = std::array::from_fn(|r| std::array::from_fn(|c| a.grad[k][r][c] - b.grad[k][r][c]));
                crate::operators::d_star_point(&v, &g, bk, cs.delta).norm()
            });
            max_distance = max_distance.max(d);
        }
    }
    Ok(UniquenessReport { params: *params, re_threshold: k.re_threshold, n_guesses, converged, max_distance })
}

fn run_point(spec: &CampaignSpec, idx: usize, pt: (f64, f64, f64, f64, f64)) -> Result<Vec<CampaignRecord>, GnfError> {
    let (h, p, delta, frac, g) = pt;
    let cs = build_cross_section(&spec.shape, h, delta)?;
    let base = FlowParams::new(p, 0.0, delta, g);
    let k = kappa_constants_with_korn(&base, &cs, spec.solver.c_k1)?;
    let re = if frac == 0.0 { 0.0 } else { frac * k.re_threshold };
    let params = FlowParams { re, ..base };
    let mut recs = Vec::new();
    let needs_full = spec.checks.iter().any(|c| matches!(c, CampaignCheck::Apriori | CampaignCheck::Unidirectional));
    if needs_full {
        let (_, _, rep) = solve_full(&params, &cs, &spec.solver)?;
        recs.push(convergence_record(&rep, &spec.solver));
        if rep.converged {
            if spec.checks.contains(&CampaignCheck::Apriori) {
                recs.extend(rep.records.iter().cloned());
            }
            if spec.checks.contains(&CampaignCheck::Unidirectional) {
                recs.push(unidirectional_record(rep.norms.du_2b, &params, UNIDIRECTIONAL_TOL));
            }
        }
    }
    if spec.checks.contains(&CampaignCheck::Dean) {
        let sigma = default_sigma(p, re);
        let (_, _, rep) = solve_dean(&params, &cs, &sigma, &spec.solver)?;
        recs.push(convergence_record(&rep, &spec.solver));
        if rep.converged {
            recs.extend(rep.records.iter().cloned());
            // the in-plane forcing is δσ(w₃), so here the switch is δc₀ rather than δRe
            let uni = if params.delta * sigma.c0 == 0.0 {
                VerificationRecord::le("unidirectional", rep.norms.du_2, UNIDIRECTIONAL_TOL, 0.0)
            } else {
                VerificationRecord::ge("unidirectional", rep.norms.du_2, UNIDIRECTIONAL_TOL, 0.0)
            };
            recs.push(uni.with_note(format!("dean, σ = {}", sigma.name)));
        }
    }
    if spec.checks.contains(&CampaignCheck::Uniqueness) && re < 0.5 * k.re_threshold {
        let rep = uniqueness_probe(&params, &cs, &spec.solver, 4, spec.seed.wrapping_add(idx as u64))?;
        recs.push(VerificationRecord::le("uniqueness", rep.max_distance, 1e-6, 0.0).with_note(format!(
            "{} guesses, Re/threshold = {}",
            rep.n_guesses,
            re / rep.re_threshold
        )));
    }
    Ok(recs.into_iter().map(|record| CampaignRecord { p, re, delta, g, h, record }).collect())
}

/// Runs every grid point (in parallel) and merges records deterministically.
pub fn run_campaign(spec: &CampaignSpec) -> Result<CampaignResult, GnfError> {
    spec.validate()?;
    let pts = spec.points();
    let out: Vec<Result<Vec<CampaignRecord>, GnfError>> = pts.par_iter().enumerate().map(|(i, &pt)| run_point(spec, i, pt)).collect();
    let mut records = Vec::new();
    for r in out {
        records.extend(r?);
    }
    sort_records(&mut records);
    Ok(CampaignResult { seed: spec.seed, records })
}

/// Column order of the record CSV.
pub const CSV_HEADER: [&str; 12] = ["claim", "anchor", "p", "re", "delta", "g", "h", "lhs", "rhs", "pass", "margin", "note"];

fn fmt_f(x: f64) -> String {
    format!("{x:.12e}")
}

/// Writes records as CSV with fixed float formatting.
pub fn write_records_csv<W: Write>(out: W, records: &[CampaignRecord]) -> Result<(), GnfError> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| GnfError::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        let v = &r.record;
        w.write_record([
            v.claim.clone(),
            v.anchor.clone(),
            fmt_f(r.p),
            fmt_f(r.re),
            fmt_f(r.delta),
            fmt_f(r.g),
            fmt_f(r.h),
            fmt_f(v.lhs),
            fmt_f(v.rhs),
            v.pass.to_string(),
            fmt_f(v.margin),
            v.note.clone(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn records_csv_string(records: &[CampaignRecord]) -> Result<String, GnfError> {
    let mut buf = Vec::new();
    write_records_csv(&mut buf, records)?;
    String::from_utf8(buf).map_err(|e| GnfError::Io(std::io::Error::other(e)))
}

/// Settings of [`fuzz_inequalities`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzConfig {
    pub seed: u64,
    /// Random `(η, ζ)` pairs per `p`.
    pub n_pointwise: usize,
    /// Random discrete fields per `(p, δ)`.
    pub n_fields: usize,
    pub ps: Vec<f64>,
    pub deltas: Vec<f64>,
    pub h: f64,
    pub c_k1: f64,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            n_pointwise: 10_000,
            n_fields: 100,
            ps: vec![1.5, 1.75, 2.0, 2.5, 3.0, 4.0],
            deltas: vec![0.0, 0.3, 0.7],
            h: 0.1,
            c_k1: DEFAULT_KORN_CONSTANT,
        }
    }
}

/// Per-claim tally of a fuzz run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimSummary {
    pub claim: String,
    pub samples: usize,
    pub violations: usize,
    pub worst_margin: f64,
    /// The sample with the smallest margin.
    pub worst: Option<CampaignRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FuzzSummary {
    pub seed: u64,
    pub claims: Vec<ClaimSummary>,
}

impl FuzzSummary {
    pub fn get(&self, claim: &str) -> Option<&ClaimSummary> {
        self.claims.iter().find(|c| c.claim == claim)
    }

    pub fn total_violations(&self) -> usize {
        self.claims.iter().map(|c| c.violations).sum()
    }

    /// Claims with at least one violation.
    pub fn violated(&self) -> Vec<&ClaimSummary> {
        self.claims.iter().filter(|c| c.violations > 0).collect()
    }

    /// Worst record of every claim, as campaign rows.
    pub fn worst_records(&self) -> Vec<CampaignRecord> {
        self.claims.iter().filter_map(|c| c.worst.clone()).collect()
    }
}

#[derive(Default)]
struct Tally(BTreeMap<String, ClaimSummary>);

impl Tally {
    fn add(&mut self, rec: CampaignRecord) {
        let e = self.0.entry(rec.record.claim.clone()).or_insert_with(|| ClaimSummary {
            claim: rec.record.claim.clone(),
            samples: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            worst: None,
        });
        e.samples += 1;
        e.violations += usize::from(!rec.record.pass);
        let worse = match &e.worst {
            None => true,
            Some(w) => (!rec.record.pass && w.record.pass) || (rec.record.pass == w.record.pass && rec.record.margin < w.record.margin),
        };
        if worse {
            e.worst_margin = rec.record.margin;
            e.worst = Some(rec);
        }
    }

    fn merge(&mut self, o: Tally) {
        for (_, c) in o.0 {
            if let Some(w) = c.worst.clone() {
                let e = self.0.entry(c.claim.clone()).or_insert_with(|| ClaimSummary {
                    claim: c.claim.clone(),
                    samples: 0,
                    violations: 0,
                    worst_margin: f64::INFINITY,
                    worst: None,
                });
                let (s, v) = (e.samples + c.samples, e.violations + c.violations);
                let worse = match &e.worst {
                    None => true,
                    Some(x) => (!w.record.pass && x.record.pass) || (w.record.pass == x.record.pass && w.record.margin < x.record.margin),
                };
                if worse {
                    e.worst_margin = w.record.margin;
                    e.worst = Some(w);
                }
                e.samples = s;
                e.violations = v;
            }
        }
    }
}

fn row(p: f64, delta: f64, h: f64, record: VerificationRecord) -> CampaignRecord {
    CampaignRecord { p, re: 0.0, delta, g: 0.0, h, record }
}

/// Random symmetric tensor with components uniform in `[−a, a]`.
pub fn random_sym(rng: &mut impl Rng, a: f64) -> SymTensor3 {
    SymTensor3::from_array(std::array::from_fn(|_| rng.random_range(-a..=a)))
}

/// Pointwise inequalities of `τ` on `n` random pairs with components in `[−5, 5]`.
pub fn fuzz_pointwise(seed: u64, n: usize, ps: &[f64]) -> Result<FuzzSummary, GnfError> {
    let mut t = Tally::default();
    for (i, &p) in ps.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1000 * i as u64));
        let prefix = if p >= 2.0 { "pointwise-thick." } else { "pointwise-thin." };
        for _ in 0..n {
            let (a, b) = (random_sym(&mut rng, 5.0), random_sym(&mut rng, 5.0));
            let rep = check_properties(&a, &b, p)?;
            for c in rep.checks.iter().chain(&rep.supplementary) {
                let mut r = VerificationRecord::le(&format!("{prefix}{}", c.name), c.lower, c.upper, 0.0);
                r.pass = c.holds;
                t.add(row(p, 0.0, 0.0, r));
            }
        }
    }
    Ok(FuzzSummary { seed, claims: t.0.into_values().collect() })
}

/// Observed order of central differences of `τ` along `ξ`, one per pair.
pub fn jacobian_fd_orders(seed: u64, n: usize, p: f64, hs: &[f64]) -> Result<Vec<f64>, GnfError> {
    let model = PowerLawModel::new(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let (eta, xi) = (random_sym(&mut rng, 1.0), random_sym(&mut rng, 1.0));
            let j = tau_jacobian(&eta, &xi, &model);
            let errs: Vec<f64> = hs
                .iter()
                .map(|&h| {
                    let fd = (tau(&(eta + h * xi), &model) - tau(&(eta - h * xi), &model)).scale(0.5 / h);
                    (fd - j).norm()
                })
                .collect();
            loglog_slope(hs, &errs)
        })
        .collect())
}

/// Analytic `B`-divergence-free field `u = (∂₂ψ, −∂₁ψ)/B` with a bubble axial part on
/// `[−a, a]×[−b, b]`, `ψ = (x₁²−a²)²(x₂²−b²)²(c₀+c₁x₁+c₂x₂+c₃x₁x₂)`.
pub fn div_free_field(cs: &CrossSection, a: f64, b: f64, c: [f64; 4], d: [f64; 3]) -> QuadField {
    QuadField::from_fn(cs, |x| div_free_point(x, cs.delta, a, b, c, d))
}

fn div_free_point(x: [f64; 2], delta: f64, a: f64, b: f64, c: [f64; 4], d: [f64; 3]) -> ([f64; 3], [[f64; 3]; 2]) {
    {
        let (x1, x2) = (x[0], x[1]);
        let (pa, qa) = (x1 * x1 - a * a, x2 * x2 - b * b);
        let (pp, pp1, pp2) = (pa * pa, 4.0 * x1 * pa, 4.0 * pa + 8.0 * x1 * x1);
        let (qq, qq1, qq2) = (qa * qa, 4.0 * x2 * qa, 4.0 * qa + 8.0 * x2 * x2);
        let r = c[0] + c[1] * x1 + c[2] * x2 + c[3] * x1 * x2;
        let (r1, r2, r12) = (c[1] + c[3] * x2, c[2] + c[3] * x1, c[3]);
        let s1 = pp1 * qq * r + pp * qq * r1;
        let s2 = pp * qq1 * r + pp * qq * r2;
        let s11 = pp2 * qq * r + 2.0 * pp1 * qq * r1;
        let s12 = pp1 * qq1 * r + pp1 * qq * r2 + pp * qq1 * r1 + pp * qq * r12;
        let s22 = pp * qq2 * r + 2.0 * pp * qq1 * r2;
        let bb = 1.0 + delta * x2;
        let s = d[0] + d[1] * x1 + d[2] * x2;
        let u3 = pa * qa * s;
        let val = [s2 / bb, -s1 / bb, u3];
        let grad = [
            [s12 / bb, -s11 / bb, 2.0 * x1 * qa * s + pa * qa * d[1]],
            [s22 / bb - delta * s2 / (bb * bb), -s12 / bb + delta * s1 / (bb * bb), 2.0 * x2 * pa * s + pa * qa * d[2]],
        ];
        (val, grad)
    }
}

/// Sobolev pairs `(q, r)` exercised by the fuzz suite.
pub const SOBOLEV_PAIRS: [(f64, f64); 7] = [(2.0, 2.0), (2.0, 4.0), (3.0, 3.0), (3.0, 6.0), (1.5, 1.5), (1.5, 3.0), (1.5, 6.0)];

/// Quadrature-level suites of the fuzz run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldSuite {
    /// Tensor-field continuity, coercivity, monotonicity and the curvature defect.
    Tensor,
    Trilinear,
    Sigma,
    Korn,
    Poincare,
    Sobolev,
}

impl FieldSuite {
    pub const ALL: [FieldSuite; 6] =
        [FieldSuite::Tensor, FieldSuite::Trilinear, FieldSuite::Sigma, FieldSuite::Korn, FieldSuite::Poincare, FieldSuite::Sobolev];
}

fn field_suite(cfg: &FuzzConfig, which: &[FieldSuite], di: usize, delta: f64) -> Result<Tally, GnfError> {
    let mut t = Tally::default();
    let h = cfg.h;
    let on = |s: FieldSuite| which.contains(&s);
    let cs = build_cross_section(&ShapeSpec::Disk, h, delta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(7919 * (di as u64 + 1)));
    let scales = [0.1, 1.0, 5.0];
    for (pi, &p) in cfg.ps.iter().enumerate() {
        if on(FieldSuite::Tensor) {
            for i in 0..cfg.n_fields {
                let s = scales[(i + pi) % scales.len()];
                let f = TensorField::random(&cs, s, &mut rng);
                let g = TensorField::random(&cs, s, &mut rng);
                for r in tensor_field_records(&f, &g, p, &cs) {
                    t.add(row(p, delta, h, r));
                }
                t.add(row(p, delta, h, curvature_defect_record(&f, p, delta, &cs)));
            }
        }
        if p < 1.5 || !(on(FieldSuite::Trilinear) || on(FieldSuite::Sigma) || on(FieldSuite::Korn)) {
            continue;
        }
        let sigma = default_sigma(p, 1.0);
        let q = if p >= 2.0 { 2.0 } else { p };
        for _ in 0..cfg.n_fields.div_ceil(4) {
            let (u, v, w) =
                (VelocityField::random(&cs, &mut rng), VelocityField::random(&cs, &mut rng), VelocityField::random(&cs, &mut rng));
            if on(FieldSuite::Trilinear) {
                t.add(row(p, delta, h, trilinear_record(&u, &v, &w, p, &cs, cfg.c_k1)?));
            }
            if on(FieldSuite::Sigma) {
                for r in sigma_records(&u, &v, &sigma, q, &cs)? {
                    t.add(row(p, delta, h, r));
                }
            }
            if on(FieldSuite::Korn) && p < 2.0 {
                let k = korn_thin_check(&u, p, delta, &cs, cfg.c_k1);
                t.add(row(
                    p,
                    delta,
                    h,
                    VerificationRecord::le("korn.thin", k.lhs, k.rhs, 0.0).with_note(format!("conditional on C_K1 = {}", k.c_k1)),
                ));
            }
        }
    }
    if !(on(FieldSuite::Korn) || on(FieldSuite::Poincare) || on(FieldSuite::Sobolev)) {
        return Ok(t);
    }
    for _ in 0..cfg.n_fields {
        let u = VelocityField::random(&cs, &mut rng);
        let f = QuadField::from_velocity(&u, &cs);
        if on(FieldSuite::Korn) {
            let k = korn_identity_of(&f, &cs, delta);
            t.add(row(2.0, delta, h, VerificationRecord::le("korn.identity", k.relative(), IDENTITY_REL_TOL, 0.0)));
        }
        if on(FieldSuite::Poincare) {
            for q in [1.5, 2.0, 3.0] {
                let res = poincare_residual(&f, q, &cs);
                let rhs = cs.weighted_norm(q, |k| {
                    let g = &f.grad[k][0];
                    (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt()
                });
                t.add(row(q, delta, h, VerificationRecord::le("poincare", rhs - res, rhs, QUADRATURE_SLACK)));
            }
        }
        if on(FieldSuite::Sobolev) {
            for (q, r) in SOBOLEV_PAIRS {
                let (lhs, g) = sobolev_sides(&f, q, r, &cs);
                let s = sobolev_constant(q, r, cs.area)?;
                t.add(row(
                    q,
                    delta,
                    h,
                    VerificationRecord::le("sobolev", lhs, s * g, QUADRATURE_SLACK).with_note(format!("(q, r) = ({q}, {r})")),
                ));
            }
        }
    }
    if on(FieldSuite::Korn) {
        // B-divergence-free fields on a rectangle, where they can be written down exactly
        let rect = ShapeSpec::Rectangle { x_min: -0.5, x_max: 0.5, y_min: -0.5, y_max: 0.5 };
        let cr = build_cross_section(&rect, h, delta)?;
        for _ in 0..cfg.n_fields {
            let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
            let d: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
            let f = div_free_field(&cr, 0.5, 0.5, c, d);
            let k = korn_identity_of(&f, &cr, delta);
            let rel = (k.grad_sq - 2.0 * k.sym_sq).abs() / k.grad_sq;
            t.add(row(2.0, delta, h, VerificationRecord::le("korn.div-free", rel, IDENTITY_REL_TOL, 0.0)));
        }
    }
    Ok(t)
}

/// Selected quadrature-level suites, one task per `δ`.
pub fn fuzz_fields(cfg: &FuzzConfig, which: &[FieldSuite]) -> Result<FuzzSummary, GnfError> {
    if cfg.ps.is_empty() || cfg.deltas.is_empty() {
        return Err(GnfError::InvalidParameter("fuzz needs at least one p and one δ".into()));
    }
    let parts: Vec<Result<Tally, GnfError>> = cfg.deltas.par_iter().enumerate().map(|(i, &d)| field_suite(cfg, which, i, d)).collect();
    let mut t = Tally::default();
    for p in parts {
        t.merge(p?);
    }
    Ok(FuzzSummary { seed: cfg.seed, claims: t.0.into_values().collect() })
}

/// Pointwise and quadrature-level inequality suites.
pub fn fuzz_inequalities(cfg: &FuzzConfig) -> Result<FuzzSummary, GnfError> {
    if cfg.ps.is_empty() || cfg.deltas.is_empty() {
        return Err(GnfError::InvalidParameter("fuzz needs at least one p and one δ".into()));
    }
    let mut t = Tally::default();
    for part in [fuzz_pointwise(cfg.seed, cfg.n_pointwise, &cfg.ps)?, fuzz_fields(cfg, &FieldSuite::ALL)?] {
        t.merge(Tally(part.claims.into_iter().map(|c| (c.claim.clone(), c)).collect()));
    }
    Ok(FuzzSummary { seed: cfg.seed, claims: t.0.into_values().collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointwise_fuzz_is_deterministic_and_flags_the_p2_continuity() {
        let a = fuzz_pointwise(3, 200, &[1.5, 2.0, 3.0]).unwrap();
        let b = fuzz_pointwise(3, 200, &[1.5, 2.0, 3.0]).unwrap();
        assert_eq!(a, b);
        let c = a.get("pointwise-thick.continuity").unwrap();
        assert_eq!(c.samples, 400);
        assert!(c.violations >= 200, "every p = 2 pair violates the stated constant");
        assert!(a.get("pointwise-thin.continuity").unwrap().violations > 0);
        for claim in [
            "pointwise-thick.continuity_factor_two",
            "pointwise-thin.continuity_factor_two",
            "pointwise-thin.monotonicity",
            "pointwise-thin.coercivity",
            "pointwise-thick.monotonicity_power",
            "pointwise-thick.coercivity_power",
        ] {
            assert_eq!(a.get(claim).unwrap().violations, 0, "{claim}");
        }
    }

    #[test]
    fn jacobian_orders_are_two() {
        for p in [1.5, 3.0] {
            for o in jacobian_fd_orders(1, 20, p, &[1e-2, 1e-3, 1e-4]).unwrap() {
                assert!((o - 2.0).abs() < 0.2, "p = {p}: {o}");
            }
        }
    }

    #[test]
    fn div_free_field_has_zero_weighted_divergence() {
        let rect = ShapeSpec::Rectangle { x_min: -0.5, x_max: 0.5, y_min: -0.5, y_max: 0.5 };
        let cs = build_cross_section(&rect, 0.2, 0.7).unwrap();
        let f = div_free_field(&cs, 0.5, 0.5, [0.3, -0.2, 0.5, 0.1], [1.0, 0.2, -0.4]);
        let k = korn_identity_of(&f, &cs, 0.7);
        assert!(k.div_sq < 1e-24 * k.grad_sq, "{k:?}");
        assert!((k.grad_sq - 2.0 * k.sym_sq).abs() < 1e-6 * k.grad_sq, "{k:?}");
        // central difference of the closed-form gradient
        let x = [0.13, -0.21];
        let pt = |y: [f64; 2]| div_free_point(y, 0.7, 0.5, 0.5, [0.3, -0.2, 0.5, 0.1], [1.0, 0.2, -0.4]);
        let h = 1e-6;
        let g = pt(x).1;
        for j in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let (fp, fm) = (pt(xp).0, pt(xm).0);
            for i in 0..3 {
                assert!(((fp[i] - fm[i]) / (2.0 * h) - g[j][i]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn csv_quotes_anchors_and_is_stable() {
        let r =
            CampaignRecord { p: 2.0, re: 0.0, delta: 0.1, g: 1.0, h: 0.1, record: VerificationRecord::le("thick.dstar-2b", 0.5, 1.0, 0.0) };
        let s = records_csv_string(&[r.clone(), r]).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(
            lines.next().unwrap(),
            "thick.dstar-2b,\"‖D⋆u‖_{2,B} ≤ κ₁\",2.000000000000e0,0.000000000000e0,1.000000000000e-1,1.000000000000e0,\
             1.000000000000e-1,5.000000000000e-1,1.000000000000e0,true,5.000000000000e-1,"
        );
    }

    #[test]
    fn alpha_midpoint_for_p_three_halves() {
        assert!((thinning_alpha_midpoint(1.5) - 2.0 / 3.0).abs() < 1e-15);
        assert!(default_sigma(1.5, 3.0).admissible_for_thinning(1.5));
    }

    #[test]
    fn campaign_rejects_empty_axes() {
        let spec = CampaignSpec {
            shape: ShapeSpec::Disk,
            hs: vec![0.3],
            ps: vec![],
            deltas: vec![0.0],
            re_fractions: vec![0.0],
            gs: vec![1.0],
            checks: vec![CampaignCheck::Apriori],
            seed: 1,
            solver: SolverOptions::default(),
        };
        assert!(run_campaign(&spec).is_err());
    }

    #[test]
    fn small_campaign_passes_and_is_sorted() {
        let spec = CampaignSpec {
            shape: ShapeSpec::Disk,
            hs: vec![0.35],
            ps: vec![1.5, 3.0],
            deltas: vec![0.0, 0.3],
            re_fractions: vec![0.0, 0.3],
            gs: vec![1.0],
            checks: vec![CampaignCheck::Apriori, CampaignCheck::Unidirectional, CampaignCheck::Dean, CampaignCheck::Uniqueness],
            seed: 2,
            solver: SolverOptions::default(),
        };
        let res = run_campaign(&spec).unwrap();
        let bad: Vec<_> = res.records.iter().filter(|r| !r.record.pass).collect();
        assert!(bad.is_empty(), "{bad:#?}");
        assert!(res.records.windows(2).all(|w| w[0].record.claim <= w[1].record.claim));
        assert!(res.records.iter().any(|r| r.record.claim == "uniqueness"));
        assert!(res.records.iter().any(|r| r.record.claim.starts_with("dean-thin")));
    }
}
