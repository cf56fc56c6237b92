//! Fully implicit time stepping. Each step solves the cell balances and the
//! face conservation equations for `w_K = beta(u_K)` and the face values by
//! damped Newton iteration, optionally eliminating the cell unknowns first.

mod condense;
mod newton;
mod run;
mod system;

pub use condense::{condense, Condensed};
pub use newton::{newton_solve, NewtonInfo};
pub use run::{conservation_defect, initialize, run, History, RunError, RunOutput, SolverDiagnostics, StepDiagnostics};
pub use system::{FaceKind, Layout, NonlinearSystem, State};

use thiserror::Error;

use crate::discretization::DiscretizationError;
use crate::expr::ExprError;
use crate::linalg::{LinalgError, LinearSolver};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid time grid: {0}")]
    TimeGrid(String),
    #[error("invalid solver setting: {0}")]
    Config(String),
    #[error("discretization failed: {0}")]
    Discretization(String),
    #[error("coefficient evaluation failed: {0}")]
    Expr(#[from] ExprError),
    #[error("linear solve failed: {0}")]
    Linear(#[from] LinalgError),
    #[error("zero cell pivot in row {0} during condensation")]
    ZeroPivot(usize),
    #[error("cell rows {0} and {1} are coupled; condensation needs a diagonal cell block")]
    CoupledCells(usize, usize),
    #[error("Newton did not converge in {iterations} iterations (residual {residual:e}, tolerance {tolerance:e})")]
    NewtonFailed { iterations: usize, residual: f64, tolerance: f64 },
    #[error("non-finite residual")]
    NonFinite,
}

impl From<DiscretizationError> for SolverError {
    fn from(e: DiscretizationError) -> Self {
        SolverError::Discretization(e.to_string())
    }
}

/// Uniform time grid `t_n = n T / N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t_final: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, steps: usize) -> Result<Self, SolverError> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(SolverError::TimeGrid(format!("final time must be positive, got {t_final}")));
        }
        if steps == 0 {
            return Err(SolverError::TimeGrid("step count must be at least 1".into()));
        }
        Ok(TimeGrid { t_final, steps })
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        if n == self.steps {
            self.t_final
        } else {
            n as f64 * self.dt()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonConfig {
    /// Stop when `|R|_inf <= abs_tol * max(1, scale)`.
    pub abs_tol: f64,
    /// Also stop when `|R|_inf <= rel_tol * |R_0|_inf`; 0 disables it.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Number of step halvings tried before accepting a non-decreasing step.
    pub max_halvings: usize,
    pub condense: bool,
    /// Use `w = beta(u)` as cell unknown; off solves for `u_K` directly.
    pub switch: bool,
    /// Stabilization override; `sqrt(d)` when unset.
    pub alpha: Option<f64>,
    pub linear: LinearSolver,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_iter: 50,
            max_halvings: 8,
            condense: true,
            switch: true,
            alpha: None,
            linear: LinearSolver::default(),
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.abs_tol > 0.0) {
            return Err(SolverError::Config(format!("abs_tol must be positive, got {}", self.abs_tol)));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(SolverError::Config(format!("rel_tol must be non-negative, got {}", self.rel_tol)));
        }
        if self.max_iter == 0 {
            return Err(SolverError::Config("max_iter must be at least 1".into()));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0) {
                return Err(SolverError::Config(format!("alpha must be positive, got {a}")));
            }
        }
        Ok(())
    }
}
