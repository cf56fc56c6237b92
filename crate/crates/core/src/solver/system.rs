//! The nonlinear system of one time step.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::SolverError;
use crate::discretization::{CellOperators, DiscreteField};
use crate::linalg::{Csr, Triplets};
use crate::mesh::Mesh;
use crate::problem::{BoundaryMode, ProblemSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceKind {
    Interior,
    Dirichlet,
    ZeroFlux,
}

/// Numbering of the unknowns: cells first, then the non-Dirichlet faces.
#[derive(Clone, Debug)]
pub struct Layout {
    pub n_cells: usize,
    pub kinds: Vec<FaceKind>,
    /// Global unknown index of each face, `None` for Dirichlet faces.
    pub face_index: Vec<Option<usize>>,
    pub n_unknowns: usize,
}

impl Layout {
    pub fn new(mesh: &Mesh, spec: &ProblemSpec) -> Self {
        let mut kinds = Vec::with_capacity(mesh.n_faces());
        let mut face_index = Vec::with_capacity(mesh.n_faces());
        let mut next = mesh.n_cells();
        for face in mesh.faces() {
            let kind = if !face.is_boundary() {
                FaceKind::Interior
            } else {
                match spec.boundary.mode(&face.sides[0].normal) {
                    BoundaryMode::Dirichlet => FaceKind::Dirichlet,
                    BoundaryMode::ZeroFlux => FaceKind::ZeroFlux,
                }
            };
            kinds.push(kind);
            if kind == FaceKind::Dirichlet {
                face_index.push(None);
            } else {
                face_index.push(Some(next));
                next += 1;
            }
        }
        Layout { n_cells: mesh.n_cells(), kinds, face_index, n_unknowns: next }
    }

    pub fn n_face_unknowns(&self) -> usize {
        self.n_unknowns - self.n_cells
    }
}

/// Newton iterate: cell unknowns (`w_K` with the switch, `u_K` without) and
/// every face value, Dirichlet faces included.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub cells: Vec<f64>,
    pub faces: Vec<f64>,
}

impl State {
    pub fn to_vector(&self, layout: &Layout) -> Vec<f64> {
        let mut x = self.cells.clone();
        x.resize(layout.n_unknowns, 0.0);
        for (f, idx) in layout.face_index.iter().enumerate() {
            if let Some(i) = idx {
                x[*i] = self.faces[f];
            }
        }
        x
    }

    /// `self += scale * dx` on the unknowns.
    pub fn axpy(&mut self, layout: &Layout, scale: f64, dx: &[f64]) {
        for (c, d) in self.cells.iter_mut().zip(dx) {
            *c += scale * d;
        }
        for (f, idx) in layout.face_index.iter().enumerate() {
            if let Some(i) = idx {
                self.faces[f] += scale * dx[*i];
            }
        }
    }
}

/// Per-cell pieces of the residual and its derivatives, in local face order.
pub(crate) struct LocalSystem {
    /// Cell row residual.
    pub rc: f64,
    /// One-sided total fluxes.
    pub totals: Vec<f64>,
    /// d(cell row)/d(cell unknown).
    pub d: f64,
    /// d(cell row)/d(u_j).
    pub b: Vec<f64>,
    /// d(total_i)/d(cell unknown).
    pub c: Vec<f64>,
    /// d(total_i)/d(u_j).
    pub e: DMatrix<f64>,
}

/// One implicit step: `m(K)(beta(u_K) - beta(u_K^{n-1})) + dt(sum of total
/// fluxes + m(K) F(u_K) - m(K) q_K) = 0` per cell, and vanishing total flux
/// sum on every non-Dirichlet face.
pub struct NonlinearSystem<'a> {
    pub mesh: &'a Mesh,
    pub spec: &'a ProblemSpec,
    pub ops: &'a CellOperators,
    pub layout: &'a Layout,
    pub dt: f64,
    /// `beta(u_K^{n-1})`.
    pub beta_old: Vec<f64>,
    /// `q_K^n`.
    pub source: Vec<f64>,
    pub switch: bool,
}

impl<'a> NonlinearSystem<'a> {
    /// Step from `previous` (cell values `u_K`) to time `t`, with the source
    /// sampled at the cell centroids and the interval midpoint.
    pub fn new(
        mesh: &'a Mesh,
        spec: &'a ProblemSpec,
        ops: &'a CellOperators,
        layout: &'a Layout,
        dt: f64,
        t: f64,
        previous: &[f64],
        switch: bool,
    ) -> Result<Self, SolverError> {
        let tm = t - 0.5 * dt;
        let source = mesh.cells().iter().map(|c| spec.source.eval(&c.center, tm)).collect::<Result<Vec<_>, _>>()?;
        let beta_old = previous.iter().map(|&u| spec.beta.value(u)).collect();
        Ok(NonlinearSystem { mesh, spec, ops, layout, dt, beta_old, source, switch })
    }

    /// Cell value `u_K` from the cell unknown.
    pub fn cell_value(&self, x: f64) -> f64 {
        if self.switch {
            self.spec.beta.inverse(x)
        } else {
            x
        }
    }

    /// Cell unknown from `u_K`.
    pub fn cell_unknown(&self, u: f64) -> f64 {
        if self.switch {
            self.spec.beta.value(u)
        } else {
            u
        }
    }

    pub fn state_from_field(&self, field: &DiscreteField) -> State {
        State { cells: field.cells.iter().map(|&u| self.cell_unknown(u)).collect(), faces: field.faces.clone() }
    }

    pub fn field_from_state(&self, state: &State) -> DiscreteField {
        DiscreteField { cells: state.cells.iter().map(|&x| self.cell_value(x)).collect(), faces: state.faces.clone() }
    }

    /// Sets the Dirichlet faces of `state` to `g(x_s, t)`.
    pub fn impose_dirichlet(&self, state: &mut State, t: f64) -> Result<(), SolverError> {
        for (f, kind) in self.layout.kinds.iter().enumerate() {
            if *kind == FaceKind::Dirichlet {
                state.faces[f] = self.spec.dirichlet.eval(&self.mesh.face(f).center, t)?;
            }
        }
        Ok(())
    }

    /// Constant part of the cell rows, used to scale the stopping tolerance.
    pub fn scale(&self) -> f64 {
        (0..self.mesh.n_cells())
            .map(|k| {
                let m = self.mesh.cell(k).measure;
                (m * self.beta_old[k] + self.dt * m * self.source[k]).abs()
            })
            .fold(0.0, f64::max)
    }

    fn local_totals(&self, k: usize, state: &State) -> (f64, Vec<f64>) {
        let op = self.ops.local(k);
        let faces = self.mesh.cell_faces(k);
        let uk = self.cell_value(state.cells[k]);
        let uf: Vec<f64> = faces.iter().map(|&f| state.faces[f]).collect();
        let totals =
            (0..faces.len()).map(|i| op.flux(i, uk, &uf) + op.v_plus(i) * uk + op.v_minus(i) * uf[i]).collect();
        (uk, totals)
    }

    fn cell_row(&self, k: usize, x: f64, uk: f64, totals: &[f64]) -> f64 {
        let m = self.mesh.cell(k).measure;
        let storage = if self.switch { x } else { self.spec.beta.value(x) };
        m * (storage - self.beta_old[k])
            + self.dt * (totals.iter().sum::<f64>() + m * self.spec.reaction.value(uk) - m * self.source[k])
    }

    pub(crate) fn local_system(&self, k: usize, state: &State) -> LocalSystem {
        let op = self.ops.local(k);
        let n = op.a.nrows();
        let x = state.cells[k];
        let (uk, totals) = self.local_totals(k, state);
        let rc = self.cell_row(k, x, uk, &totals);
        let m = self.mesh.cell(k).measure;
        let (du, dstore, dreact) = if self.switch {
            let du = self.spec.beta.inverse_derivative(x);
            (du, 1.0, self.spec.reaction.derivative_in_w(self.spec.beta, x))
        } else {
            (1.0, self.spec.beta.derivative_finite(x), self.spec.reaction.derivative_finite(x))
        };
        let c: Vec<f64> = (0..n).map(|i| (op.a.row(i).sum() + op.v_plus(i)) * du).collect();
        let d = m * dstore + self.dt * (c.iter().sum::<f64>() + m * dreact);
        let mut e = -op.a.clone();
        for i in 0..n {
            e[(i, i)] += op.v_minus(i);
        }
        let b = (0..n).map(|j| self.dt * e.column(j).sum()).collect();
        LocalSystem { rc, totals, d, b, c, e }
    }

    /// Residual in unknown ordering.
    pub fn residual(&self, state: &State) -> Vec<f64> {
        let locals: Vec<(f64, Vec<f64>)> = (0..self.mesh.n_cells())
            .into_par_iter()
            .map(|k| {
                let (uk, totals) = self.local_totals(k, state);
                (self.cell_row(k, state.cells[k], uk, &totals), totals)
            })
            .collect();
        let mut r = vec![0.0; self.layout.n_unknowns];
        for (k, (rc, totals)) in locals.into_iter().enumerate() {
            r[k] = rc;
            for (i, &f) in self.mesh.cell_faces(k).iter().enumerate() {
                if let Some(g) = self.layout.face_index[f] {
                    r[g] += totals[i];
                }
            }
        }
        r
    }

    pub(crate) fn local_systems(&self, state: &State) -> Vec<LocalSystem> {
        (0..self.mesh.n_cells()).into_par_iter().map(|k| self.local_system(k, state)).collect()
    }

    /// Residual and full Jacobian.
    pub fn linearize(&self, state: &State) -> (Vec<f64>, Csr) {
        let locals = self.local_systems(state);
        self.assemble_full(&locals)
    }

    pub(crate) fn assemble_full(&self, locals: &[LocalSystem]) -> (Vec<f64>, Csr) {
        let cap: usize = locals.iter().map(|l| (l.b.len() + 1).pow(2)).sum();
        let mut t = Triplets::with_capacity(self.layout.n_unknowns, cap);
        let mut r = vec![0.0; self.layout.n_unknowns];
        for (k, l) in locals.iter().enumerate() {
            let idx: Vec<Option<usize>> = self.mesh.cell_faces(k).iter().map(|&f| self.layout.face_index[f]).collect();
            r[k] = l.rc;
            t.push(k, k, l.d);
            for (j, gj) in idx.iter().enumerate() {
                if let Some(gj) = gj {
                    t.push(k, *gj, l.b[j]);
                }
            }
            for (i, gi) in idx.iter().enumerate() {
                let Some(gi) = *gi else { continue };
                r[gi] += l.totals[i];
                t.push(gi, k, l.c[i]);
                for (j, gj) in idx.iter().enumerate() {
                    if let Some(gj) = gj {
                        t.push(gi, *gj, l.e[(i, j)]);
                    }
                }
            }
        }
        (r, t.to_csr())
    }

    /// Residual, Schur complement on the face unknowns, and the pieces needed
    /// to recover the cell updates, assembled cell by cell.
    pub(crate) fn assemble_condensed(&self, locals: &[LocalSystem]) -> Result<(Vec<f64>, Csr, Vec<f64>), SolverError> {
        let nc = self.layout.n_cells;
        let nf = self.layout.n_face_unknowns();
        let cap: usize = locals.iter().map(|l| l.b.len().pow(2)).sum();
        let mut t = Triplets::with_capacity(nf, cap);
        let mut r = vec![0.0; self.layout.n_unknowns];
        let mut rhs = vec![0.0; nf];
        for (k, l) in locals.iter().enumerate() {
            if l.d == 0.0 || !l.d.is_finite() {
                return Err(SolverError::ZeroPivot(k));
            }
            let idx: Vec<Option<usize>> = self.mesh.cell_faces(k).iter().map(|&f| self.layout.face_index[f]).collect();
            r[k] = l.rc;
            for (i, gi) in idx.iter().enumerate() {
                let Some(gi) = *gi else { continue };
                r[gi] += l.totals[i];
                rhs[gi - nc] += l.c[i] * l.rc / l.d;
                for (j, gj) in idx.iter().enumerate() {
                    if let Some(gj) = gj {
                        t.push(gi - nc, gj - nc, l.e[(i, j)] - l.c[i] * l.b[j] / l.d);
                    }
                }
            }
        }
        for (g, v) in rhs.iter_mut().enumerate() {
            *v -= r[nc + g];
        }
        Ok((r, t.to_csr(), rhs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{assemble_cell_operators, Alpha};
    use crate::geometry::{Cuboid, Point, Tensor};
    use crate::mesh::{build_box_mesh, refine_random};
    use crate::problem::{make_test1, make_test2, Beta, Reaction, ScalarField, Test2Params};

    fn fd_jacobian(sys: &NonlinearSystem, state: &State) -> Vec<Vec<f64>> {
        let n = sys.layout.n_unknowns;
        let x0 = state.to_vector(sys.layout);
        let mut cols = Vec::new();
        for j in 0..n {
            let h = 1e-6 * x0[j].abs().max(1e-2);
            let mut dx = vec![0.0; n];
            dx[j] = 1.0;
            let (mut sp, mut sm) = (state.clone(), state.clone());
            sp.axpy(sys.layout, h, &dx);
            sm.axpy(sys.layout, -h, &dx);
            let (rp, rm) = (sys.residual(&sp), sys.residual(&sm));
            cols.push(rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<f64>>());
        }
        cols
    }

    fn check_jacobian(spec: &ProblemSpec, switch: bool) {
        let b = spec.domain;
        let mesh = refine_random(&build_box_mesh(&b, &[2, 2, 2]).unwrap(), 0.3, 2).unwrap();
        let ops = assemble_cell_operators(&mesh, spec, &Alpha::standard(3)).unwrap();
        let layout = Layout::new(&mesh, spec);
        let prev: Vec<f64> = mesh.cells().iter().map(|c| 0.3 + 0.2 * c.center[0]).collect();
        let sys = NonlinearSystem::new(&mesh, spec, &ops, &layout, 0.05, 0.05, &prev, switch).unwrap();
        let field = crate::discretization::project(&mesh, |x| 0.5 + 0.3 * x[0] - 0.1 * x[1] * x[2]);
        let state = sys.state_from_field(&field);
        let (_, j) = sys.linearize(&state);
        let fd = fd_jacobian(&sys, &state);
        let dense = j.to_dense();
        for (c, col) in fd.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                assert!((dense[r][c] - v).abs() <= 1e-6 * (1.0 + v.abs()), "({r},{c}): {} vs {v}", dense[r][c]);
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let t1 = make_test1();
        check_jacobian(&t1, true);
        check_jacobian(&t1, false);
        let t2 = make_test2(Test2Params::default()).unwrap();
        check_jacobian(&t2, true);
        check_jacobian(&t2, false);
    }

    #[test]
    fn zero_data_gives_zero_residual() {
        let mut spec = make_test1();
        spec.source = ScalarField::Zero;
        spec.dirichlet = ScalarField::Zero;
        let mesh = build_box_mesh(&spec.domain, &[2, 1, 1]).unwrap();
        let ops = assemble_cell_operators(&mesh, &spec, &Alpha::standard(3)).unwrap();
        let layout = Layout::new(&mesh, &spec);
        let sys = NonlinearSystem::new(&mesh, &spec, &ops, &layout, 0.1, 0.1, &[0.0; 2], true).unwrap();
        let state = sys.state_from_field(&DiscreteField::zeros(&mesh));
        assert!(sys.residual(&state).iter().all(|&r| r == 0.0));
    }

    #[test]
    fn single_cube_hand_assembly() {
        // beta(u) = u, Lambda = I, V = 0, F = 0: the operator is two-point,
        // A = diag(m(s)/d) = diag(2) on the unit cube.
        let mut spec = make_test1();
        spec.beta = Beta::Linear;
        spec.reaction = Reaction::Zero;
        spec.regions = vec![crate::problem::Region { diffusion: Tensor::identity(), velocity: Point::zeros() }];
        spec.split = None;
        spec.source = ScalarField::Const(3.0);
        spec.domain = Cuboid::unit(3);
        let mesh = build_box_mesh(&spec.domain, &[1, 1, 1]).unwrap();
        let ops = assemble_cell_operators(&mesh, &spec, &Alpha::standard(3)).unwrap();
        let layout = Layout::new(&mesh, &spec);
        let dt = 0.25;
        let sys = NonlinearSystem::new(&mesh, &spec, &ops, &layout, dt, dt, &[1.0], true).unwrap();
        let faces = vec![0.5, -0.5, 1.0, 2.0, 0.0, 0.25];
        let state = State { cells: vec![1.5], faces: faces.clone() };
        let r = sys.residual(&state);
        let expected = (1.5 - 1.0) + dt * (faces.iter().map(|u| 2.0 * (1.5 - u)).sum::<f64>() - 3.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - expected).abs() < 1e-12, "{} vs {expected}", r[0]);
    }
}
