//! `gnf`: solves, verification campaigns and studies from the command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gnf_core::dean::{dean_scaling_study, delta_approx_study, re0_surrogate};
use gnf_core::harness::{
    fuzz_fields, fuzz_pointwise, records_csv_string, run_campaign, sort_records, unidirectional_check, uniqueness_probe, CampaignCheck,
    CampaignRecord, CampaignSpec, FieldSuite, FuzzConfig, FuzzSummary,
};
use gnf_core::{build_cross_section, io, solve_full, GnfError, Mesh, NonlinearScheme};

use config::{ConfigError, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "gnf", version, about = "Generalized Newtonian flow in a curved pipe cross-section")]
struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (beats GNF_OUT_DIR and the config file).
    #[arg(long, global = true)]
    out_dir: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 1 is the reproducible mode.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the full problem at one parameter point.
    Solve(Overrides),
    #[command(subcommand)]
    Verify(Verify),
    #[command(subcommand)]
    Study(Study),
    #[command(subcommand)]
    Mesh(MeshCmd),
}

#[derive(Subcommand, Debug)]
enum Verify {
    /// Pointwise stress-law inequalities on random tensor pairs.
    Tensors(Overrides),
    /// Korn identity and inequalities on random fields.
    Korn(Overrides),
    Poincare(Overrides),
    Sobolev(Overrides),
    /// A priori bounds over a (p, δ, Re, G) grid.
    Apriori(Overrides),
    /// Bounds on the σ term.
    Sigma(Overrides),
}

#[derive(Subcommand, Debug)]
enum Study {
    /// Secondary-flow magnitude against δ.
    Dean(Overrides),
    /// Distance between full and Dean-type solutions as δ → 0.
    DeltaApprox(Overrides),
    /// Solves from several initial guesses below the threshold.
    Uniqueness(Overrides),
}

#[derive(Subcommand, Debug)]
enum MeshCmd {
    /// Write the mesh (text and VTK) to the output directory.
    Build(Overrides),
    /// Print mesh statistics.
    Info(Overrides),
}

fn list(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|e| format!("'{s}': {e}"))
}

#[derive(Args, Debug, Default, Clone)]
struct Overrides {
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    re: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    gamma_dot: Option<f64>,
    /// Re as a multiple of the uniqueness threshold.
    #[arg(long)]
    re_fraction: Option<f64>,
    /// disk, rectangle or file.
    #[arg(long)]
    shape: Option<String>,
    #[arg(long)]
    h: Option<f64>,
    /// Mesh file (implies --shape file).
    #[arg(long)]
    mesh_file: Option<String>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Continuation in (p, δ, Re) from the Poiseuille problem.
    #[arg(long)]
    continuation: bool,
    /// zero or axial-poiseuille.
    #[arg(long)]
    initial_guess: Option<String>,
    #[arg(long)]
    c_k1: Option<f64>,
    /// dean or power.
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_delimiter = ',', value_parser = list)]
    ps: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', value_parser = list)]
    deltas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', value_parser = list)]
    res: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', value_parser = list)]
    re_fractions: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', value_parser = list)]
    gs: Option<Vec<f64>>,
    /// `default` resets the grid to the built-in one.
    #[arg(long)]
    grid: Option<String>,
    /// Number of random samples.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n_guesses: Option<usize>,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy)]
enum SchemeArg {
    Picard,
    Newton,
    PicardThenNewton,
}

enum Failure {
    Usage(String),
    Compute(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<GnfError> for Failure {
    fn from(e: GnfError) -> Self {
        match e {
            GnfError::InvalidParameter(_) | GnfError::InvalidMesh(_) | GnfError::MeshParse { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn split(cmd: &Command) -> (&'static str, &Overrides) {
    match cmd {
        Command::Solve(o) => ("solve", o),
        Command::Verify(v) => match v {
            Verify::Tensors(o) => ("verify tensors", o),
            Verify::Korn(o) => ("verify korn", o),
            Verify::Poincare(o) => ("verify poincare", o),
            Verify::Sobolev(o) => ("verify sobolev", o),
            Verify::Apriori(o) => ("verify apriori", o),
            Verify::Sigma(o) => ("verify sigma", o),
        },
        Command::Study(s) => match s {
            Study::Dean(o) => ("study dean", o),
            Study::DeltaApprox(o) => ("study delta-approx", o),
            Study::Uniqueness(o) => ("study uniqueness", o),
        },
        Command::Mesh(m) => match m {
            MeshCmd::Build(o) => ("mesh build", o),
            MeshCmd::Info(o) => ("mesh info", o),
        },
    }
}

/// File, then environment, then flags.
fn resolve_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let (name, o) = split(&cli.command);
    let mut c = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if !c.command.is_empty() && c.command != name {
        return Err(Failure::Usage(format!("config is for '{}', not '{name}'", c.command)));
    }
    c.command = name.into();
    if let Ok(dir) = std::env::var("GNF_OUT_DIR") {
        if !dir.is_empty() {
            c.out_dir = dir;
        }
    }
    if let Some(d) = &cli.out_dir {
        c.out_dir = d.clone();
    }
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if let Some(t) = cli.threads {
        c.threads = t;
    }
    apply(&mut c, o);
    c.resolve();
    c.validate()?;
    Ok(c)
}

fn apply(c: &mut RunConfig, o: &Overrides) {
    let set = |dst: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *dst = v;
        }
    };
    if o.grid.as_deref() == Some("default") {
        c.grid = Default::default();
    }
    set(&mut c.params.p, o.p);
    set(&mut c.params.re, o.re);
    set(&mut c.params.delta, o.delta);
    set(&mut c.params.g, o.g);
    set(&mut c.params.gamma_dot, o.gamma_dot);
    set(&mut c.params.re_fraction, o.re_fraction);
    if let Some(s) = &o.shape {
        c.mesh.shape = s.clone();
    }
    if let Some(f) = &o.mesh_file {
        c.mesh.shape = "file".into();
        c.mesh.path = f.clone();
    }
    set(&mut c.mesh.h, o.h);
    if let Some(s) = o.scheme {
        c.solver.scheme = match s {
            SchemeArg::Picard => NonlinearScheme::Picard,
            SchemeArg::Newton => NonlinearScheme::Newton,
            SchemeArg::PicardThenNewton => NonlinearScheme::PicardThenNewton,
        };
    }
    set(&mut c.solver.damping, o.damping);
    set(&mut c.solver.rtol, o.rtol);
    set(&mut c.solver.atol, o.atol);
    if let Some(m) = o.max_iter {
        c.solver.max_iter = m;
    }
    if o.continuation {
        c.solver.continuation = true;
    }
    if let Some(g) = &o.initial_guess {
        c.solver.initial_guess = g.clone();
    }
    set(&mut c.solver.c_k1, o.c_k1);
    if let Some(s) = &o.sigma {
        c.sigma.kind = s.clone();
    }
    set(&mut c.sigma.c0, o.c0);
    set(&mut c.sigma.alpha, o.alpha);
    // a single value on a grid command means a one-point axis
    let grid_cmd = c.command.starts_with("verify ");
    let axis = |dst: &mut Vec<f64>, many: &Option<Vec<f64>>, one: Option<f64>, use_one: bool| {
        if let Some(v) = many {
            *dst = v.clone();
        } else if let (Some(x), true) = (one, use_one) {
            *dst = vec![x];
        }
    };
    axis(&mut c.grid.ps, &o.ps, o.p, grid_cmd);
    axis(&mut c.grid.deltas, &o.deltas, o.delta, grid_cmd);
    axis(&mut c.grid.res, &o.res, o.re, false);
    axis(&mut c.grid.re_fractions, &o.re_fractions, o.re_fraction, c.command == "verify apriori");
    axis(&mut c.grid.gs, &o.gs, o.g, c.command == "verify apriori");
    if let Some(n) = o.n {
        c.samples = n;
    }
    if let Some(n) = o.n_guesses {
        c.n_guesses = n;
    }
}

fn run(cli: Cli) -> Outcome {
    if let Some(o) = split(&cli.command).1.grid.as_deref() {
        if o != "default" {
            return Err(Failure::Usage(format!("unknown grid '{o}' (only 'default')")));
        }
    }
    let c = resolve_config(&cli)?;
    if cli.dry_run {
        print!("{}", c.canonical());
        return Ok(true);
    }
    if c.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(c.threads).build_global().map_err(|e| Failure::Compute(e.to_string()))?;
    }
    match c.command.as_str() {
        "solve" => cmd_solve(&c),
        "verify tensors" => {
            let s = fuzz_pointwise(c.seed, c.samples, &c.grid.ps)?;
            report_fuzz(&c, &s)
        }
        "verify korn" => verify_fields(&c, FieldSuite::Korn),
        "verify poincare" => verify_fields(&c, FieldSuite::Poincare),
        "verify sobolev" => verify_fields(&c, FieldSuite::Sobolev),
        "verify sigma" => verify_fields(&c, FieldSuite::Sigma),
        "verify apriori" => cmd_apriori(&c),
        "study dean" => cmd_study_dean(&c),
        "study delta-approx" => cmd_delta_approx(&c),
        "study uniqueness" => cmd_uniqueness(&c),
        "mesh build" | "mesh info" => cmd_mesh(&c),
        other => Err(Failure::Usage(format!("unknown command '{other}'"))),
    }
}

fn out_dir(c: &RunConfig) -> Result<(), Failure> {
    std::fs::create_dir_all(&c.out_dir)?;
    Ok(())
}

fn write(c: &RunConfig, name: &str, text: &str) -> Result<(), Failure> {
    io::write_text(&c.out_path(name), text)?;
    Ok(())
}

fn print_records(recs: &[gnf_core::VerificationRecord]) {
    for r in recs {
        let mark = if r.pass { "ok  " } else { "FAIL" };
        println!("  {mark} {:<28} {:>14.6e} <= {:<14.6e} margin {:+.3e}", r.claim, r.lhs, r.rhs, r.margin);
    }
}

fn cmd_solve(c: &RunConfig) -> Outcome {
    let params = c.flow_params();
    let cs = build_cross_section(&c.shape(), c.mesh.h, params.delta)?;
    let (u, pi, rep) = solve_full(&params, &cs, &c.solver_options())?;
    out_dir(c)?;
    write(c, "solution.vtk", &io::velocity_pressure_vtk(&cs, &u, &pi))?;
    write(c, "coefficients.txt", &io::coefficient_dump(&u, &pi))?;
    write(c, "report.json", &io::to_json(&rep)?)?;
    let (uni, in_plane) = unidirectional_check(&u, &cs, gnf_core::tolerances::UNIDIRECTIONAL_TOL);
    let n = &rep.norms;
    println!("p = {}, Re = {}, δ = {}, G = {}", params.p, params.re, params.delta, params.g);
    println!("converged: {} after {} iterations", rep.converged, rep.iterations);
    println!("‖D⋆u‖_p,B = {:.6e}  ‖Du‖_2,B = {:.6e}  ‖Du‖_p = {:.6e}  ‖π‖ = {:.6e}", n.dstar_pb, n.du_2b, n.du_p, n.pressure_pc);
    println!("unidirectional: {uni} (in-plane ‖Du‖_2 = {in_plane:.3e})");
    if let Some(k) = &rep.kappa {
        println!("uniqueness threshold: Re < {:.6e}", k.re_threshold);
    }
    print_records(&rep.records);
    Ok(rep.converged)
}

fn report_fuzz(c: &RunConfig, s: &FuzzSummary) -> Outcome {
    out_dir(c)?;
    let mut worst = s.worst_records();
    sort_records(&mut worst);
    write(c, "records.csv", &records_csv_string(&worst)?)?;
    let mut text = format!("{}\nseed {}\n", c.command, s.seed);
    for cl in &s.claims {
        text.push_str(&format!(
            "{:<36} samples {:>8} violations {:>6} worst margin {:+.3e}\n",
            cl.claim, cl.samples, cl.violations, cl.worst_margin
        ));
    }
    text.push_str(&format!("total violations: {}\n", s.total_violations()));
    write(c, "summary.txt", &text)?;
    print!("{text}");
    Ok(s.total_violations() == 0)
}

fn verify_fields(c: &RunConfig, suite: FieldSuite) -> Outcome {
    let cfg = FuzzConfig {
        seed: c.seed,
        n_pointwise: 0,
        n_fields: c.samples,
        ps: c.grid.ps.clone(),
        deltas: c.grid.deltas.clone(),
        h: c.mesh.h,
        c_k1: c.solver.c_k1,
    };
    let s = fuzz_fields(&cfg, &[suite])?;
    report_fuzz(c, &s)
}

fn cmd_apriori(c: &RunConfig) -> Outcome {
    let spec = CampaignSpec {
        shape: c.shape(),
        hs: vec![c.mesh.h],
        ps: c.grid.ps.clone(),
        deltas: c.grid.deltas.clone(),
        re_fractions: c.grid.re_fractions.clone(),
        gs: c.grid.gs.clone(),
        checks: vec![CampaignCheck::Apriori, CampaignCheck::Unidirectional],
        seed: c.seed,
        solver: c.solver_options(),
    };
    spec.validate()?;
    let r = run_campaign(&spec)?;
    out_dir(c)?;
    write(c, "records.csv", &records_csv_string(&r.records)?)?;
    let mut text = format!("{}\nseed {}, {} points\n", c.command, c.seed, spec.points().len());
    for (claim, n, f) in r.tally() {
        text.push_str(&format!("{claim:<36} records {n:>5} failed {f:>5}\n"));
    }
    for rec in r.records.iter().filter(|r| !r.record.pass) {
        text.push_str(&format!("FAIL {} at {}\n", rec.record.claim, point(rec)));
    }
    text.push_str(&format!("failed records: {}\n", r.n_failed()));
    write(c, "summary.txt", &text)?;
    print!("{text}");
    Ok(r.all_pass())
}

fn point(r: &CampaignRecord) -> String {
    format!("p = {}, Re = {:.6e}, δ = {}, G = {}, h = {}", r.p, r.re, r.delta, r.g, r.h)
}

fn csv_rows<T: serde::Serialize>(rows: &[T]) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Failure::Compute(e.to_string()))?;
    }
    let buf = w.into_inner().map_err(|e| Failure::Compute(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| Failure::Compute(e.to_string()))
}

fn cmd_study_dean(c: &RunConfig) -> Outcome {
    let params = c.flow_params();
    let cs = build_cross_section(&c.shape(), c.mesh.h, 0.0)?;
    let r = dean_scaling_study(&params, &cs, &c.grid.res, &c.grid.deltas, &c.solver_options())?;
    out_dir(c)?;
    write(c, "dean.csv", &csv_rows(&r.rows)?)?;
    for row in &r.rows {
        println!(
            "Re = {:<8} δ = {:<8} De = {:.4e}  ‖Du‖_2,B = {:.6e}  bound {:.6e}  {}{}",
            row.re,
            row.delta,
            row.de,
            row.norm_du_2b,
            row.bound,
            if row.bound_ok { "ok" } else { "VIOLATED" },
            if row.above_threshold { " (above uniqueness threshold)" } else { "" }
        );
    }
    for (re, s) in &r.slopes {
        println!("slope of log‖Du‖ against log δ at Re = {re}: {s:.4}");
    }
    Ok(r.rows.iter().all(|x| x.converged && x.bound_ok))
}

fn cmd_delta_approx(c: &RunConfig) -> Outcome {
    let mut params = c.flow_params();
    let cs = build_cross_section(&c.shape(), c.mesh.h, 0.0)?;
    let opts = c.solver_options();
    if params.re == 0.0 {
        params.re = 0.5 * re0_surrogate(&params, &cs, &c.grid.deltas, opts.c_k1)?;
    }
    let sigma = c.sigma_spec(params.p, params.re);
    let r = delta_approx_study(&params, &cs, &sigma, &c.grid.deltas, &opts)?;
    out_dir(c)?;
    write(c, "delta_approx.csv", &csv_rows(&r.rows)?)?;
    for row in &r.rows {
        println!("δ = {:<8} ‖D(u−w)‖_2 = {:.6e}  ‖D(u−w)‖_p = {:.6e}", row.delta, row.diff_d2, row.diff_dp);
    }
    println!("σ = {}, Re = {:.6e} (surrogate Re₀ = {:.6e})", r.sigma, params.re, r.re0_surrogate);
    println!("observed order {:.4}, guaranteed order {:.4}", r.observed_order, r.theoretical_order);
    let ok = r.rows.iter().all(|x| x.converged) && r.observed_order >= r.theoretical_order - 0.1;
    Ok(ok)
}

fn cmd_uniqueness(c: &RunConfig) -> Outcome {
    let mut params = c.flow_params();
    let cs = build_cross_section(&c.shape(), c.mesh.h, params.delta)?;
    let opts = c.solver_options();
    if params.re == 0.0 {
        let k = gnf_core::constants::kappa_constants_with_korn(&params, &cs, opts.c_k1)?;
        params.re = c.params.re_fraction * k.re_threshold;
    }
    let r = uniqueness_probe(&params, &cs, &opts, c.n_guesses, c.seed)?;
    out_dir(c)?;
    write(c, "uniqueness.json", &io::to_json(&r)?)?;
    println!("Re = {:.6e} (threshold {:.6e}), {} guesses, converged {:?}", params.re, r.re_threshold, r.n_guesses, r.converged);
    println!("max pairwise distance: {:.6e}", r.max_distance);
    Ok(r.converged.iter().all(|&x| x) && r.max_distance < 1e-6)
}

fn cmd_mesh(c: &RunConfig) -> Outcome {
    let cs = build_cross_section(&c.shape(), c.mesh.h, 0.0)?;
    let m: &Mesh = &cs.mesh;
    if c.command == "mesh build" {
        out_dir(c)?;
        m.write(&c.out_path("mesh.txt"))?;
        write(c, "mesh.vtk", &m.to_vtk())?;
        println!("wrote {} and {}", c.out_path("mesh.txt").display(), c.out_path("mesh.vtk").display());
    }
    let worst = (0..m.cells.len()).map(|i| m.aspect_ratio(i)).fold(0.0, f64::max);
    let mut out = std::io::stdout().lock();
    writeln!(out, "vertices {}", m.vertices.len())?;
    writeln!(out, "cells {}", m.cells.len())?;
    writeln!(out, "boundary vertices {}", m.boundary.len())?;
    writeln!(out, "P2 nodes {}", cs.n_nodes())?;
    writeln!(out, "max edge length {:.6e}", m.max_edge_length())?;
    writeln!(out, "max aspect ratio {worst:.4}")?;
    writeln!(out, "area {:.12e}", cs.area)?;
    Ok(true)
}
