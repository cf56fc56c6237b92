//! Damped Newton iteration for one time step.

use super::system::{NonlinearSystem, State};
use super::{NewtonConfig, SolverError};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonInfo {
    pub iterations: usize,
    pub residual: f64,
    pub initial_residual: f64,
    pub tolerance: f64,
    /// Iterations that needed at least one halving.
    pub damped: usize,
}

fn inf_norm(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

/// Newton direction `J dx = -R`, through the condensed face system when
/// `config.condense` is set.
fn direction(sys: &NonlinearSystem, state: &State, config: &NewtonConfig) -> Result<Vec<f64>, SolverError> {
    if config.condense {
        let locals = sys.local_systems(state);
        let (_, schur, rhs) = sys.assemble_condensed(&locals)?;
        let df = if schur.n > 0 { config.linear.solve(&schur, &rhs)? } else { Vec::new() };
        let nc = sys.layout.n_cells;
        let mut dx: Vec<f64> = locals
            .iter()
            .enumerate()
            .map(|(k, l)| {
                let s: f64 = sys
                    .mesh
                    .cell_faces(k)
                    .iter()
                    .enumerate()
                    .filter_map(|(j, &f)| sys.layout.face_index[f].map(|g| l.b[j] * df[g - nc]))
                    .sum();
                (-l.rc - s) / l.d
            })
            .collect();
        dx.extend(df);
        Ok(dx)
    } else {
        let (r, j) = sys.linearize(state);
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        Ok(config.linear.solve(&j, &rhs)?)
    }
}

/// Solves the step system in place, starting from `state`.
pub fn newton_solve(
    sys: &NonlinearSystem,
    state: &mut State,
    config: &NewtonConfig,
) -> Result<NewtonInfo, SolverError> {
    let mut norm = inf_norm(&sys.residual(state));
    if !norm.is_finite() {
        return Err(SolverError::NonFinite);
    }
    let tolerance = (config.abs_tol * sys.scale().max(1.0)).max(config.rel_tol * norm);
    let mut info = NewtonInfo { iterations: 0, residual: norm, initial_residual: norm, tolerance, damped: 0 };
    while norm > tolerance {
        if info.iterations == config.max_iter {
            return Err(SolverError::NewtonFailed { iterations: info.iterations, residual: norm, tolerance });
        }
        let dx = direction(sys, state, config)?;
        let mut lambda = 1.0;
        let mut trial = state.clone();
        trial.axpy(sys.layout, lambda, &dx);
        let mut trial_norm = inf_norm(&sys.residual(&trial));
        let mut halvings = 0;
        while !(trial_norm < norm) && halvings < config.max_halvings {
            lambda *= 0.5;
            halvings += 1;
            trial = state.clone();
            trial.axpy(sys.layout, lambda, &dx);
            trial_norm = inf_norm(&sys.residual(&trial));
        }
        if !trial_norm.is_finite() {
            return Err(SolverError::NonFinite);
        }
        if halvings > 0 {
            info.damped += 1;
        }
        *state = trial;
        norm = trial_norm;
        info.iterations += 1;
        info.residual = norm;
    }
    Ok(info)
}
