//! Run configuration: TOML file, command-line overrides, canonical text form.

use std::path::PathBuf;

use gnf_core::dean::SigmaSpec;
use gnf_core::harness::thinning_alpha_midpoint;
use gnf_core::solver::Continuation;
use gnf_core::{FlowParams, InitialGuess, NonlinearScheme, ShapeSpec, SolverOptions};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// e.g. `solve`, `verify korn`, `study dean`.
    pub command: String,
    pub seed: u64,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    pub out_dir: String,
    /// Random samples (pairs for `verify tensors`, fields otherwise).
    pub samples: usize,
    pub n_guesses: usize,
    pub params: ParamsConfig,
    pub mesh: MeshConfig,
    pub solver: SolverConfig,
    pub sigma: SigmaConfig,
    pub grid: GridConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsConfig {
    pub p: f64,
    pub re: f64,
    pub delta: f64,
    pub g: f64,
    pub gamma_dot: f64,
    /// `Re` as a multiple of the uniqueness threshold (uniqueness probe).
    pub re_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    /// `disk`, `rectangle` or `file`.
    pub shape: String,
    pub h: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub scheme: NonlinearScheme,
    pub damping: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_iter: usize,
    pub switch_tol: f64,
    pub continuation: bool,
    pub p_steps: usize,
    pub delta_steps: usize,
    pub re_steps: usize,
    /// `zero` or `axial-poiseuille`.
    pub initial_guess: String,
    pub c_k1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SigmaConfig {
    /// `dean` (σ = Re λ²) or `power` (σ = c₀|λ|^α).
    pub kind: String,
    pub c0: f64,
    /// Negative: midpoint of the admissible interval when p < 2, else 2.
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub ps: Vec<f64>,
    pub deltas: Vec<f64>,
    pub res: Vec<f64>,
    pub re_fractions: Vec<f64>,
    pub gs: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            seed: 7,
            threads: 0,
            out_dir: "gnf-out".into(),
            samples: 0,
            n_guesses: 4,
            params: ParamsConfig::default(),
            mesh: MeshConfig::default(),
            solver: SolverConfig::default(),
            sigma: SigmaConfig::default(),
            grid: GridConfig::default(),
        }
    }
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self { p: 2.0, re: 0.0, delta: 0.0, g: 1.0, gamma_dot: 1.0, re_fraction: 0.4 }
    }
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { shape: "disk".into(), h: 0.1, x_min: -0.5, x_max: 0.5, y_min: -0.5, y_max: 0.5, path: String::new() }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        let c = Continuation::default();
        Self {
            scheme: o.scheme,
            damping: o.damping,
            rtol: o.rtol,
            atol: o.atol,
            max_iter: o.max_iter,
            switch_tol: o.switch_tol,
            continuation: false,
            p_steps: c.p_steps,
            delta_steps: c.delta_steps,
            re_steps: c.re_steps,
            initial_guess: "zero".into(),
            c_k1: o.c_k1,
        }
    }
}

impl Default for SigmaConfig {
    fn default() -> Self {
        Self { kind: "dean".into(), c0: 1.0, alpha: -1.0 }
    }
}

/// A configuration problem; the process exits with status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError(format!("config: {e}")))
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        parse(&text)
    }

    /// Canonical text; `parse(c.canonical())` returns `c`.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Fills command-dependent defaults for empty lists and zero sample counts.
    pub fn resolve(&mut self) {
        let cmd = self.command.clone();
        let g = &mut self.grid;
        let fill = |v: &mut Vec<f64>, d: &[f64]| {
            if v.is_empty() {
                v.extend_from_slice(d);
            }
        };
        match cmd.as_str() {
            "verify tensors" => {
                fill(&mut g.ps, &[1.5, 1.75, 2.0, 2.5, 3.0, 4.0]);
                if self.samples == 0 {
                    self.samples = 10_000;
                }
            }
            "verify korn" | "verify poincare" | "verify sobolev" | "verify sigma" => {
                fill(&mut g.ps, if cmd == "verify korn" { &[1.5, 1.75] } else { &[1.5, 1.75, 2.0, 3.0] });
                fill(&mut g.deltas, &[0.0, 0.3, 0.7]);
                if self.samples == 0 {
                    self.samples = 100;
                }
            }
            "verify apriori" => {
                fill(&mut g.ps, &[1.5, 2.0, 3.0]);
                fill(&mut g.deltas, &[0.0, 0.1, 0.3]);
                fill(&mut g.re_fractions, &[0.0, 0.3]);
                fill(&mut g.gs, &[0.5, 1.0]);
            }
            "study dean" => {
                let re = if self.params.re > 0.0 { self.params.re } else { 5.0 };
                fill(&mut g.res, &[re]);
                fill(&mut g.deltas, &[0.2, 0.1, 0.05, 0.025]);
            }
            "study delta-approx" => fill(&mut g.deltas, &[0.2, 0.1, 0.05, 0.025]),
            _ => {}
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError(m));
        if !["disk", "rectangle", "file"].contains(&self.mesh.shape.as_str()) {
            return bad(format!("unknown shape '{}'", self.mesh.shape));
        }
        if self.mesh.shape == "file" && self.mesh.path.is_empty() {
            return bad("shape 'file' needs mesh.path".into());
        }
        if !(self.mesh.h > 0.0) {
            return bad(format!("mesh size h = {} must be positive", self.mesh.h));
        }
        if !["zero", "axial-poiseuille"].contains(&self.solver.initial_guess.as_str()) {
            return bad(format!("unknown initial guess '{}'", self.solver.initial_guess));
        }
        if !["dean", "power"].contains(&self.sigma.kind.as_str()) {
            return bad(format!("unknown sigma '{}'", self.sigma.kind));
        }
        self.flow_params().validate().map_err(|e| ConfigError(e.to_string()))?;
        self.solver_options().validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(())
    }

    pub fn shape(&self) -> ShapeSpec {
        match self.mesh.shape.as_str() {
            "rectangle" => {
                ShapeSpec::Rectangle { x_min: self.mesh.x_min, x_max: self.mesh.x_max, y_min: self.mesh.y_min, y_max: self.mesh.y_max }
            }
            "file" => ShapeSpec::External { path: self.mesh.path.clone() },
            _ => ShapeSpec::Disk,
        }
    }

    pub fn flow_params(&self) -> FlowParams {
        let p = &self.params;
        FlowParams { p: p.p, re: p.re, delta: p.delta, g: p.g, gamma_dot: p.gamma_dot }
    }

    pub fn solver_options(&self) -> SolverOptions {
        let s = &self.solver;
        SolverOptions {
            scheme: s.scheme,
            damping: s.damping,
            rtol: s.rtol,
            atol: s.atol,
            max_iter: s.max_iter,
            switch_tol: s.switch_tol,
            continuation: s.continuation.then_some(Continuation { p_steps: s.p_steps, delta_steps: s.delta_steps, re_steps: s.re_steps }),
            initial_guess: if s.initial_guess == "axial-poiseuille" { InitialGuess::AxialPoiseuille } else { InitialGuess::Zero },
            c_k1: s.c_k1,
        }
    }

    /// σ for exponent `p` and Reynolds number `re`.
    pub fn sigma_spec(&self, p: f64, re: f64) -> SigmaSpec {
        if self.sigma.kind == "dean" {
            return SigmaSpec::dean(re);
        }
        let alpha = if self.sigma.alpha >= 0.0 {
            self.sigma.alpha
        } else if p < 2.0 {
            thinning_alpha_midpoint(p)
        } else {
            2.0
        };
        SigmaSpec::power(self.sigma.c0, alpha)
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        PathBuf::from(&self.out_dir).join(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_text_round_trips() {
        let mut c = RunConfig { command: "verify apriori".into(), ..Default::default() };
        c.params.re = 0.1 + 0.2;
        c.mesh.h = 1.0 / 3.0;
        c.resolve();
        let t = c.canonical();
        let back = parse(&t).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.canonical(), t);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse("bogus = 1").is_err());
        assert!(parse("[params]\nq = 2.0").is_err());
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = parse("seed = 3\n[params]\np = 1.5\n").unwrap();
        assert_eq!((c.seed, c.params.p, c.params.g), (3, 1.5, 1.0));
        assert_eq!(c.solver, SolverConfig::default());
    }

    #[test]
    fn sigma_selection() {
        let mut c = RunConfig::default();
        assert_eq!(c.sigma_spec(1.5, 2.0).name, "dean");
        c.sigma.kind = "power".into();
        assert!((c.sigma_spec(1.5, 0.0).alpha - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.sigma_spec(3.0, 0.0).alpha, 2.0);
    }
}
