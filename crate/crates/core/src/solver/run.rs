//! Initialization and the time loop.

use std::fmt;

use super::newton::newton_solve;
use super::system::{FaceKind, Layout, NonlinearSystem};
use super::{NewtonConfig, SolverError, TimeGrid};
use crate::discretization::{
    assemble_cell_operators, convective_flux, diffusive_flux, gradient_l2, Alpha, CellOperators, DiscreteField,
};
use crate::mesh::Mesh;
use crate::problem::ProblemSpec;

/// `u_K = u_0(x_K)`; Dirichlet faces take `g(x_s, 0)`, the others the mean
/// of their adjacent cells.
pub fn initialize(mesh: &Mesh, spec: &ProblemSpec) -> Result<DiscreteField, SolverError> {
    let layout = Layout::new(mesh, spec);
    let cells = mesh.cells().iter().map(|c| spec.initial.eval(&c.center, 0.0)).collect::<Result<Vec<_>, _>>()?;
    let faces = mesh
        .faces()
        .iter()
        .zip(&layout.kinds)
        .map(|(face, kind)| match kind {
            FaceKind::Dirichlet => spec.dirichlet.eval(&face.center, 0.0),
            _ => Ok(face.sides.iter().map(|s| cells[s.cell]).sum::<f64>() / face.sides.len() as f64),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DiscreteField { cells, faces })
}

/// Largest total-flux imbalance over the non-Dirichlet faces, recomputed from
/// the field through the public flux functions.
pub fn conservation_defect(mesh: &Mesh, ops: &CellOperators, layout: &Layout, field: &DiscreteField) -> f64 {
    let mut worst: f64 = 0.0;
    for (f, face) in mesh.faces().iter().enumerate() {
        if layout.kinds[f] == FaceKind::Dirichlet {
            continue;
        }
        let total: f64 = face
            .sides
            .iter()
            .enumerate()
            .map(|(s, side)| {
                let k = side.cell;
                let v = ops.local(k).convective[mesh.local_index(f, s)];
                diffusive_flux(ops, mesh, field, k, f) + convective_flux(field.cells[k], field.faces[f], v)
            })
            .sum();
        worst = worst.max(total.abs());
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    pub iterations: usize,
    pub residual: f64,
    pub tolerance: f64,
    pub damped: usize,
    pub conservation_defect: f64,
    pub min_u: f64,
    pub max_u: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolverDiagnostics {
    pub steps: Vec<StepDiagnostics>,
    /// `max_n |u^n|_{L2}` over `n = 1..N`.
    pub linf_l2_u: f64,
    /// `(sum_n dt |grad_D u^n|^2)^{1/2}`.
    pub l2_grad: f64,
    /// `max_n |beta(u^n)|_{L2}`.
    pub linf_l2_beta: f64,
    pub warnings: Vec<String>,
}

impl SolverDiagnostics {
    pub fn total_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.iterations).sum()
    }

    pub fn max_conservation_defect(&self) -> f64 {
        self.steps.iter().map(|s| s.conservation_defect).fold(0.0, f64::max)
    }
}

/// Cell values at every completed time level and the last full field.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    pub times: Vec<f64>,
    pub cells: Vec<Vec<f64>>,
    pub last: DiscreteField,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    pub history: History,
    pub diagnostics: SolverDiagnostics,
}

/// A failed run with everything computed before the failure.
#[derive(Debug, Clone)]
pub struct RunError {
    pub error: SolverError,
    /// Step that failed; 0 when setup failed.
    pub step: usize,
    pub partial: Box<RunOutput>,
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.step == 0 {
            write!(f, "setup failed: {}", self.error)
        } else {
            write!(f, "step {} failed: {}", self.step, self.error)
        }
    }
}

impl std::error::Error for RunError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

fn l2(mesh: &Mesh, v: impl Iterator<Item = f64>) -> f64 {
    mesh.cells().iter().zip(v).map(|(c, v)| c.measure * v * v).sum::<f64>().sqrt()
}

/// Runs the scheme from `initialize(mesh, spec)` over `grid`.
pub fn run(mesh: &Mesh, spec: &ProblemSpec, grid: TimeGrid, config: &NewtonConfig) -> Result<RunOutput, RunError> {
    let mut out = RunOutput::default();
    let setup = |e: SolverError, out: RunOutput| RunError { error: e, step: 0, partial: Box::new(out) };
    if let Err(e) = config.validate() {
        return Err(setup(e, out));
    }
    let alpha = Alpha::Uniform(config.alpha.unwrap_or((mesh.dim() as f64).sqrt()));
    let ops = match assemble_cell_operators(mesh, spec, &alpha) {
        Ok(o) => o,
        Err(e) => return Err(setup(e.into(), out)),
    };
    let layout = Layout::new(mesh, spec);
    let mut field = match initialize(mesh, spec) {
        Ok(f) => f,
        Err(e) => return Err(setup(e, out)),
    };
    let dt = grid.dt();
    let d = spec.declared;
    if d.reaction_lower > 0.0 && dt >= d.beta_lower / d.reaction_lower {
        let w = format!("time step {dt} violates dt < beta_/F_ = {}", d.beta_lower / d.reaction_lower);
        log::warn!("{w}");
        out.diagnostics.warnings.push(w);
    }
    out.history.times.push(0.0);
    out.history.cells.push(field.cells.clone());
    let mut grad_sq = 0.0;
    for n in 1..=grid.steps {
        let t = grid.time(n);
        let step = (|| {
            let sys = NonlinearSystem::new(mesh, spec, &ops, &layout, dt, t, &field.cells, config.switch)?;
            let mut state = sys.state_from_field(&field);
            sys.impose_dirichlet(&mut state, t)?;
            let info = newton_solve(&sys, &mut state, config)?;
            Ok::<_, SolverError>((sys.field_from_state(&state), info))
        })();
        let (next, info) = match step {
            Ok(v) => v,
            Err(error) => {
                out.history.last = field;
                return Err(RunError { error, step: n, partial: Box::new(out) });
            }
        };
        field = next;
        let defect = conservation_defect(mesh, &ops, &layout, &field);
        let (lo, hi) = field.cells.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &u| (a.min(u), b.max(u)));
        log::debug!(
            "step {n}/{}: t = {t}, {} Newton iterations, residual {:e}",
            grid.steps,
            info.iterations,
            info.residual
        );
        let diag = &mut out.diagnostics;
        diag.steps.push(StepDiagnostics {
            step: n,
            time: t,
            iterations: info.iterations,
            residual: info.residual,
            tolerance: info.tolerance,
            damped: info.damped,
            conservation_defect: defect,
            min_u: lo,
            max_u: hi,
        });
        diag.linf_l2_u = diag.linf_l2_u.max(l2(mesh, field.cells.iter().copied()));
        diag.linf_l2_beta = diag.linf_l2_beta.max(l2(mesh, field.cells.iter().map(|&u| spec.beta.value(u))));
        grad_sq += dt * gradient_l2(mesh, &field, &alpha).powi(2);
        diag.l2_grad = grad_sq.sqrt();
        out.history.times.push(t);
        out.history.cells.push(field.cells.clone());
    }
    out.history.last = field;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Tensor};
    use crate::linalg::LinearSolver;
    use crate::mesh::{build_box_mesh, refine_random};
    use crate::problem::{make_test1, make_test2, Beta, Reaction, Region, ScalarField, Test2Params};

    #[test]
    fn zero_data_stays_zero() {
        let mut spec = make_test1();
        spec.source = ScalarField::Zero;
        spec.initial = ScalarField::Zero;
        spec.dirichlet = ScalarField::Zero;
        let mesh = build_box_mesh(&spec.domain, &[2, 2, 2]).unwrap();
        let out = run(&mesh, &spec, TimeGrid::new(1.0, 4).unwrap(), &NewtonConfig::default()).unwrap();
        assert!(out.history.cells.iter().flatten().all(|&u| u == 0.0));
        assert!(out.diagnostics.steps.iter().all(|s| s.iterations == 0));
    }

    #[test]
    fn initialization() {
        let mut spec = make_test1();
        spec.initial = ScalarField::Const(2.5);
        let mesh = build_box_mesh(&spec.domain, &[2, 1, 1]).unwrap();
        let u = initialize(&mesh, &spec).unwrap();
        assert!(u.cells.iter().all(|&c| c == 2.5));
        let t1 = make_test1();
        let u = initialize(&mesh, &t1).unwrap();
        let x = mesh.cell(0).center;
        assert_eq!(u.cells[0], (x[0] + x[1] + x[2] - 3.0).exp());
        // the interior face between the two cells takes the mean
        let f = (0..mesh.n_faces()).find(|&f| !mesh.face(f).is_boundary()).unwrap();
        assert_eq!(u.faces[f], 0.5 * (u.cells[0] + u.cells[1]));
        let t2 = make_test2(Test2Params::default()).unwrap();
        let m2 = build_box_mesh(&t2.domain, &[10, 1, 1]).unwrap();
        let u = initialize(&m2, &t2).unwrap();
        assert_eq!(u.cells[9], 0.0);
    }

    fn linear_spec() -> ProblemSpec {
        let mut spec = make_test1();
        spec.beta = Beta::Linear;
        spec.reaction = Reaction::Linear(0.5);
        spec.regions = vec![Region { diffusion: Tensor::identity(), velocity: Point::new(1.0, 0.5, 0.0) }];
        spec.split = None;
        spec
    }

    #[test]
    fn linear_problem_converges_in_one_iteration() {
        let spec = linear_spec();
        let mesh = refine_random(&build_box_mesh(&spec.domain, &[2, 2, 2]).unwrap(), 0.4, 1).unwrap();
        let out = run(&mesh, &spec, TimeGrid::new(0.2, 2).unwrap(), &NewtonConfig::default()).unwrap();
        assert!(out.diagnostics.steps.iter().all(|s| s.iterations == 1), "{:?}", out.diagnostics.steps);
    }

    #[test]
    fn switch_on_and_off_agree_for_linear_beta() {
        let spec = linear_spec();
        let mesh = refine_random(&build_box_mesh(&spec.domain, &[2, 2, 2]).unwrap(), 0.4, 1).unwrap();
        let grid = TimeGrid::new(0.2, 2).unwrap();
        let a = run(&mesh, &spec, grid, &NewtonConfig::default()).unwrap();
        let b = run(&mesh, &spec, grid, &NewtonConfig { switch: false, ..Default::default() }).unwrap();
        for (x, y) in a.history.last.cells.iter().zip(&b.history.last.cells) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn condensed_and_full_newton_agree() {
        let spec = make_test1();
        let mesh = refine_random(&build_box_mesh(&spec.domain, &[2, 2, 2]).unwrap(), 0.4, 3).unwrap();
        let grid = TimeGrid::new(0.1, 2).unwrap();
        let on = run(&mesh, &spec, grid, &NewtonConfig::default()).unwrap();
        let off = run(&mesh, &spec, grid, &NewtonConfig { condense: false, ..Default::default() }).unwrap();
        for (x, y) in on.history.last.faces.iter().zip(&off.history.last.faces) {
            assert!((x - y).abs() <= 1e-10 * x.abs().max(1e-300), "{x} vs {y}");
        }
        let it = NewtonConfig { linear: LinearSolver::Iterative, ..Default::default() };
        let iter = run(&mesh, &spec, grid, &it).unwrap();
        for (x, y) in on.history.last.cells.iter().zip(&iter.history.last.cells) {
            assert!((x - y).abs() <= 1e-10 * x.abs());
        }
    }

    #[test]
    fn step_failure_keeps_partial_history() {
        let spec = make_test1();
        let mesh = build_box_mesh(&spec.domain, &[2, 1, 1]).unwrap();
        let cfg = NewtonConfig { max_iter: 1, abs_tol: 1e-300, ..Default::default() };
        let err = run(&mesh, &spec, TimeGrid::new(1.0, 3).unwrap(), &cfg).unwrap_err();
        assert_eq!(err.step, 1);
        assert!(matches!(err.error, SolverError::NewtonFailed { .. }));
        assert_eq!(err.partial.history.cells.len(), 1);
    }
}
