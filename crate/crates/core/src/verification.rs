//! Error metrics, convergence tables and front tracking.

use std::fmt::Write as _;
use std::time::Instant;

use thiserror::Error;

use crate::expr::ExprError;
use crate::mesh::{build_box_mesh, refine_random, Mesh, MeshError};
use crate::problem::{ProblemSpec, ScalarField};
use crate::solver::{run, History, NewtonConfig, RunError, RunOutput, SolverError, TimeGrid};

#[derive(Debug, Error)]
pub enum VerificationError {
    #[error("problem has no exact solution")]
    NoExact,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("no cell value exceeds the threshold {0}")]
    NoFront(f64),
    #[error("history has no time levels after the initial one")]
    EmptyHistory,
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Centroid-rule L2 error of cell values against `exact` at time `t`:
/// `(absolute, norm of exact)`.
pub fn l2_error(mesh: &Mesh, cells: &[f64], exact: &ScalarField, t: f64) -> Result<(f64, f64), ExprError> {
    let (mut e, mut n) = (0.0, 0.0);
    for (c, u) in mesh.cells().iter().zip(cells) {
        let ue = exact.eval(&c.center, t)?;
        e += c.measure * (u - ue).powi(2);
        n += c.measure * ue * ue;
    }
    Ok((e.sqrt(), n.sqrt()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorMetric {
    /// `max_n |u^n - u(t_n)|_{L2} / |u(t_n)|_{L2}`, `n >= 1`.
    pub err: f64,
    /// Error at each `t_n`, `n >= 1`; relative unless `absolute` is set.
    pub snapshots: Vec<f64>,
    /// Set when the exact solution vanished at some snapshot and absolute
    /// errors were used there.
    pub absolute: bool,
}

pub fn error_metric(mesh: &Mesh, history: &History, exact: &ScalarField) -> Result<ErrorMetric, VerificationError> {
    if history.times.len() < 2 {
        return Err(VerificationError::EmptyHistory);
    }
    let mut m = ErrorMetric { err: 0.0, snapshots: Vec::new(), absolute: false };
    for (t, cells) in history.times.iter().zip(&history.cells).skip(1) {
        let (e, n) = l2_error(mesh, cells, exact, *t)?;
        let v = if n > 0.0 {
            e / n
        } else {
            m.absolute = true;
            e
        };
        m.snapshots.push(v);
        m.err = m.err.max(v);
    }
    Ok(m)
}

/// `log(e0/e1) / log(h0/h1)`.
pub fn fitted_order(h0: f64, e0: f64, h1: f64, e1: f64) -> f64 {
    (e0 / e1).ln() / (h0 / h1).ln()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub steps: usize,
    pub h: f64,
    pub elements: usize,
    pub faces: usize,
    pub err: f64,
    /// Order against the previous row.
    pub order: Option<f64>,
    pub runtime_s: f64,
    pub seed: u64,
    /// Solver failure message, in which case `err` is NaN.
    pub failure: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Sorts by decreasing `h` and recomputes the orders.
    pub fn finish(&mut self) {
        self.rows.sort_by(|a, b| b.h.total_cmp(&a.h));
        for i in 0..self.rows.len() {
            self.rows[i].order = None;
            if i > 0 {
                let (p, c) = (&self.rows[i - 1], &self.rows[i]);
                if p.err.is_finite() && c.err.is_finite() && c.err > 0.0 && p.h != c.h {
                    self.rows[i].order = Some(fitted_order(p.h, p.err, c.h, c.err));
                }
            }
        }
    }

    /// Order fitted between the last two rows.
    pub fn final_order(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.order)
    }

    /// `N,h,elements,faces,Err,order,runtime_s`; the order is empty on the first row.
    pub fn to_csv(&self, with_runtime: bool) -> String {
        let mut s = String::from("N,h,elements,faces,Err,order,runtime_s\n");
        for r in &self.rows {
            let order = r.order.map(|o| format!("{o:.6}")).unwrap_or_default();
            let rt = if with_runtime { format!("{:.3}", r.runtime_s) } else { String::new() };
            let _ = writeln!(s, "{},{:.6},{},{},{:.6e},{},{}", r.steps, r.h, r.elements, r.faces, r.err, order, rt);
        }
        s
    }

    /// Whitespace-separated `h Err` for plotting.
    pub fn to_dat(&self) -> String {
        let mut s = String::from("# h Err\n");
        for r in &self.rows {
            let _ = writeln!(s, "{:.8e} {:.8e}", r.h, r.err);
        }
        s
    }
}

/// Seeded random refinement of a uniform box grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshLevel {
    pub resolution: Vec<usize>,
    pub probability: f64,
    pub seed: u64,
    pub steps: usize,
}

impl MeshLevel {
    pub fn build(&self, spec: &ProblemSpec) -> Result<Mesh, MeshError> {
        let base = build_box_mesh(&spec.domain, &self.resolution)?;
        if self.probability > 0.0 {
            refine_random(&base, self.probability, self.seed)
        } else {
            Ok(base)
        }
    }
}

/// Runs every level; a failed level is kept with `Err = NaN`.
pub fn convergence_study(
    spec: &ProblemSpec,
    levels: &[MeshLevel],
    t_final: f64,
    config: &NewtonConfig,
) -> Result<(ConvergenceTable, Vec<Result<RunOutput, RunError>>), VerificationError> {
    let exact = spec.exact.as_ref().ok_or(VerificationError::NoExact)?;
    let mut table = ConvergenceTable::default();
    let mut outputs = Vec::new();
    for level in levels {
        let mesh = level.build(spec)?;
        let grid = TimeGrid::new(t_final, level.steps)?;
        let start = Instant::now();
        let result = run(&mesh, spec, grid, config);
        let runtime_s = start.elapsed().as_secs_f64();
        let (err, failure) = match &result {
            Ok(out) => (error_metric(&mesh, &out.history, exact)?.err, None),
            Err(e) => (f64::NAN, Some(e.to_string())),
        };
        table.rows.push(ConvergenceRow {
            steps: level.steps,
            h: mesh.quality().h,
            elements: mesh.n_cells(),
            faces: mesh.n_faces(),
            err,
            order: None,
            runtime_s,
            seed: level.seed,
            failure,
        });
        outputs.push(result);
    }
    table.finish();
    Ok((table, outputs))
}

/// Largest centroid coordinate along `axis` of a cell with `u_K > threshold`.
pub fn front_position(mesh: &Mesh, cells: &[f64], axis: usize, threshold: f64) -> Result<f64, VerificationError> {
    mesh.cells()
        .iter()
        .zip(cells)
        .filter(|(_, &u)| u > threshold)
        .map(|(c, _)| c.center[axis])
        .reduce(f64::max)
        .ok_or(VerificationError::NoFront(threshold))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscillationReport {
    pub min: f64,
    pub max: f64,
    /// `max(0, lo - min)` for the admissible range `[lo, hi]`.
    pub undershoot: f64,
    /// `max(0, max - hi)`.
    pub overshoot: f64,
}

/// Extremes of the cell values over all time levels against `[lo, hi]`.
pub fn oscillation_report(history: &History, lo: f64, hi: f64) -> OscillationReport {
    let (min, max) =
        history.cells.iter().flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &u| (a.min(u), b.max(u)));
    OscillationReport { min, max, undershoot: (lo - min).max(0.0), overshoot: (max - hi).max(0.0) }
}
