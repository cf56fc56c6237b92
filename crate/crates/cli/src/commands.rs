//! Subcommand implementations. Each writes its files under the output
//! directory and returns a short summary for the terminal.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hybrid_fv::mesh::{build_box_mesh, read_mesh, refine_random, validate, write_mesh, Mesh, MeshError};
use hybrid_fv::problem::{check_hypotheses, ProblemSpec, SampleRange, Test2Params};
use hybrid_fv::solver::{run as solve, RunOutput, SolverError, TimeGrid};
use hybrid_fv::verification::{convergence_study, error_metric, front_position, MeshLevel, VerificationError};
use thiserror::Error;

use crate::config::{ConfigError, ProblemKind, RunConfig};
use crate::output;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("mesh: {0}")]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Verification(#[from] VerificationError),
    #[error("run {0}")]
    Run(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Invalid(String),
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CommandError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CommandError::Io { path, source })
}

fn prepare(dir: &Path) -> Result<(), CommandError> {
    fs::create_dir_all(dir).map_err(|source| CommandError::Io { path: dir.to_path_buf(), source })
}

pub fn build_mesh(cfg: &RunConfig, spec: &ProblemSpec) -> Result<Mesh, CommandError> {
    if let Some(f) = &cfg.mesh.file {
        return Ok(read_mesh(f)?);
    }
    let base = build_box_mesh(&spec.domain, &cfg.mesh.resolution)?;
    if cfg.mesh.refine_probability > 0.0 {
        Ok(refine_random(&base, cfg.mesh.refine_probability, cfg.mesh.seed)?)
    } else {
        Ok(base)
    }
}

fn test2_params(cfg: &RunConfig) -> Test2Params {
    let d = Test2Params::default();
    let p = &cfg.problem;
    Test2Params { p: p.p.unwrap_or(d.p), v: p.v.unwrap_or(d.v), delta: p.delta.unwrap_or(d.delta) }
}

fn summary_line(mesh: &Mesh) -> String {
    let q = mesh.quality();
    format!("{} cells, {} faces, h = {:.6}, theta = {:.4}", mesh.n_cells(), mesh.n_faces(), q.h, q.theta)
}

/// Resolves everything a command needs without writing files.
pub fn dry_run(cfg: &RunConfig) -> Result<String, CommandError> {
    let spec = cfg.problem_spec()?;
    let mesh = build_mesh(cfg, &spec)?;
    TimeGrid::new(cfg.time.t_final, cfg.time.steps)?;
    cfg.newton().validate()?;
    Ok(format!("configuration ok: problem {}, mesh {}\n", spec.name, summary_line(&mesh)))
}

pub fn mesh_gen(cfg: &RunConfig) -> Result<String, CommandError> {
    let spec = cfg.problem_spec()?;
    let mesh = build_mesh(cfg, &spec)?;
    let report = validate(&mesh);
    let dir = &cfg.output.dir;
    prepare(dir)?;
    write_mesh(&mesh, dir.join("mesh.txt"))?;
    write(dir, "mesh.vtk", &output::vtk(&mesh, "mesh", &[]))?;
    let text = output::mesh_report(&report);
    write(dir, "mesh_report.txt", &text)?;
    if !report.is_valid() {
        return Err(CommandError::Invalid(format!("generated mesh failed validation:\n{text}")));
    }
    Ok(text)
}

pub fn check(cfg: &RunConfig) -> Result<String, CommandError> {
    let spec = cfg.problem_spec()?;
    let mesh = build_mesh(cfg, &spec)?;
    let report = validate(&mesh);
    let mut s = output::mesh_report(&report);
    let hyp = check_hypotheses(&spec, SampleRange::new(-1.0, 2.0));
    let _ = writeln!(s, "beta: {} (min slope {:.4e})", spec.beta.name(), hyp.beta_min_slope);
    let _ = writeln!(s, "diffusion eigenvalues in [{:.4e}, {:.4e}]", hyp.lambda_min, hyp.lambda_max);
    for w in &hyp.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    if !report.is_valid() {
        return Err(CommandError::Invalid(s));
    }
    Ok(s)
}

fn snapshot_steps(n_levels: usize, stride: usize) -> Vec<usize> {
    let last = n_levels - 1;
    let mut v: Vec<usize> = if stride == 0 { vec![0] } else { (0..=last).step_by(stride).collect() };
    if v.last() != Some(&last) {
        v.push(last);
    }
    v
}

fn write_outputs(cfg: &RunConfig, spec: &ProblemSpec, mesh: &Mesh, out: &RunOutput) -> Result<String, CommandError> {
    let dir = &cfg.output.dir;
    let h = &out.history;
    let mut summary = String::new();
    write(dir, "diagnostics.csv", &output::diagnostics_csv(&out.diagnostics))?;
    if let (Some(exact), true) = (&spec.exact, h.times.len() > 1) {
        let m = error_metric(mesh, h, exact)?;
        write(dir, "errors.csv", &output::errors_csv(&h.times, &m.snapshots, m.absolute))?;
        let _ = writeln!(summary, "Err = {:.6e}", m.err);
    }
    if cfg.problem.kind == ProblemKind::Test2 {
        let params = test2_params(cfg);
        let th = cfg.output.front_threshold;
        let mut s = String::from("# t front exact_front\n");
        for (t, cells) in h.times.iter().zip(&h.cells) {
            let x = front_position(mesh, cells, 0, th).unwrap_or(f64::NAN);
            let _ = writeln!(s, "{t:.8e} {x:.8e} {:.8e}", params.front(*t));
        }
        write(dir, "front.dat", &s)?;
    }
    if cfg.output.vtk && !h.cells.is_empty() {
        let region: Vec<f64> = mesh.cells().iter().map(|c| spec.region_of(&c.center) as f64).collect();
        for n in snapshot_steps(h.cells.len(), cfg.output.snapshot_stride) {
            let u = &h.cells[n];
            let beta: Vec<f64> = u.iter().map(|&v| spec.beta.value(v)).collect();
            let title = format!("{} t = {:.8e}", spec.name, h.times[n]);
            let text = output::vtk(mesh, &title, &[("u", u), ("beta_u", &beta), ("region", &region)]);
            write(dir, &format!("solution_{n:05}.vtk"), &text)?;
        }
    }
    let d = &out.diagnostics;
    let _ = writeln!(
        summary,
        "{} steps, {} Newton iterations, max conservation defect {:.3e}",
        d.steps.len(),
        d.total_iterations(),
        d.max_conservation_defect()
    );
    for w in &d.warnings {
        let _ = writeln!(summary, "warning: {w}");
    }
    Ok(summary)
}

pub fn run(cfg: &RunConfig) -> Result<String, CommandError> {
    let spec = cfg.problem_spec()?;
    let mesh = build_mesh(cfg, &spec)?;
    let grid = TimeGrid::new(cfg.time.t_final, cfg.time.steps)?;
    let dir = &cfg.output.dir;
    prepare(dir)?;
    write(dir, "metadata.toml", &cfg.to_toml())?;
    log::info!("mesh: {}", summary_line(&mesh));
    match solve(&mesh, &spec, grid, &cfg.newton()) {
        Ok(out) => Ok(format!("mesh: {}\n{}", summary_line(&mesh), write_outputs(cfg, &spec, &mesh, &out)?)),
        Err(e) => {
            // keep what was computed before the failure
            write_outputs(cfg, &spec, &mesh, &e.partial)?;
            Err(CommandError::Run(e.to_string()))
        }
    }
}

pub fn convergence(cfg: &RunConfig) -> Result<String, CommandError> {
    let spec = cfg.problem_spec()?;
    if spec.exact.is_none() {
        return Err(CommandError::Invalid("convergence needs a problem with an exact solution".into()));
    }
    if cfg.mesh.file.is_some() {
        return Err(CommandError::Invalid("convergence generates its meshes; remove mesh.file".into()));
    }
    let levels: Vec<MeshLevel> = (0..cfg.convergence.levels)
        .map(|l| MeshLevel {
            resolution: cfg.mesh.resolution.iter().map(|r| r << l).collect(),
            probability: cfg.mesh.refine_probability,
            seed: cfg.mesh.seed,
            steps: cfg.time.steps << l,
        })
        .collect();
    let dir = &cfg.output.dir;
    prepare(dir)?;
    write(dir, "metadata.toml", &cfg.to_toml())?;
    let (table, _) = convergence_study(&spec, &levels, cfg.time.t_final, &cfg.newton())?;
    let csv = table.to_csv(true);
    write(dir, "convergence.csv", &csv)?;
    write(dir, "convergence.dat", &table.to_dat())?;
    if let Some(r) = table.rows.iter().find(|r| r.failure.is_some()) {
        return Err(CommandError::Run(format!("level N = {} failed: {}", r.steps, r.failure.as_deref().unwrap_or(""))));
    }
    Ok(csv)
}
