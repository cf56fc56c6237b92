//! Local flux matrices and convective face integrals.

use nalgebra::{DMatrix, Matrix3xX};
use rayon::prelude::*;

use super::gradient::{local_cone_gradients, Alpha};
use super::{DiscreteField, DiscretizationError};
use crate::geometry::{asymmetry, eigenvalues, Point, Tensor};
use crate::mesh::Mesh;

/// Diffusion tensor and velocity as seen by the scheme.
///
/// `owner` is the center of the cell requesting the value; piecewise
/// coefficients resolve their region from it so that points on a region
/// interface take the owning cell's values.
pub trait CoefficientField: Sync {
    fn diffusion(&self, owner: &Point, x: &Point) -> Tensor;
    fn velocity(&self, owner: &Point, x: &Point) -> Point;
}

/// Spatially constant coefficients.
#[derive(Clone, Copy, Debug)]
pub struct UniformCoefficients {
    pub diffusion: Tensor,
    pub velocity: Point,
}

impl UniformCoefficients {
    pub fn isotropic(lambda: f64) -> Self {
        UniformCoefficients { diffusion: Tensor::identity() * lambda, velocity: Point::zeros() }
    }
}

impl CoefficientField for UniformCoefficients {
    fn diffusion(&self, _: &Point, _: &Point) -> Tensor {
        self.diffusion
    }
    fn velocity(&self, _: &Point, _: &Point) -> Point {
        self.velocity
    }
}

/// Operator data of one cell, indexed by the cell's local face order.
#[derive(Clone, Debug)]
pub struct LocalOperator {
    /// Symmetric matrix `A_K^{s s'}`.
    pub a: DMatrix<f64>,
    /// `V_{K,s}`: integral of `V . n_{K,s}` over the face.
    pub convective: Vec<f64>,
    pub alpha: f64,
}

impl LocalOperator {
    pub fn v_plus(&self, i: usize) -> f64 {
        self.convective[i].max(0.0)
    }

    pub fn v_minus(&self, i: usize) -> f64 {
        self.convective[i].min(0.0)
    }

    /// `F_{K,s}(u) = sum_{s'} A^{s s'} (u_K - u_{s'})` from local values.
    pub fn flux(&self, i: usize, u_k: f64, u_faces: &[f64]) -> f64 {
        self.a.row(i).iter().zip(u_faces).map(|(a, u)| a * (u_k - u)).sum()
    }
}

#[derive(Clone, Debug)]
pub struct CellOperators {
    pub cells: Vec<LocalOperator>,
}

impl CellOperators {
    pub fn local(&self, k: usize) -> &LocalOperator {
        &self.cells[k]
    }
}

/// Gradient coefficient vectors `y^{s s'}` of cell `k`: column `s'` of the
/// `s`-th matrix is the cone gradient on `s` of the field with `u_{s'} = 1`
/// and every other local value zero.
pub fn gradient_coefficients(mesh: &Mesh, k: usize, alpha: f64) -> Vec<Matrix3xX<f64>> {
    let n = mesh.cell_faces(k).len();
    let mut y = vec![Matrix3xX::zeros(n); n];
    let mut unit = vec![0.0; n];
    for j in 0..n {
        unit[j] = 1.0;
        for (i, g) in local_cone_gradients(mesh, k, 0.0, &unit, alpha).into_iter().enumerate() {
            y[i].set_column(j, &g);
        }
        unit[j] = 0.0;
    }
    y
}

fn check_tensor(t: &Tensor, dim: usize, cell: usize) -> Result<(), DiscretizationError> {
    let asym = asymmetry(t, dim);
    if asym > 1e-12 {
        return Err(DiscretizationError::AsymmetricDiffusion { cell, asymmetry: asym });
    }
    let lo = eigenvalues(t, dim)[0];
    if lo < 0.0 {
        return Err(DiscretizationError::NegativeDiffusion { cell, eigenvalue: lo });
    }
    Ok(())
}

fn assemble_local(
    mesh: &Mesh,
    coeffs: &dyn CoefficientField,
    k: usize,
    alpha: f64,
) -> Result<LocalOperator, DiscretizationError> {
    let owner = mesh.cell(k).center;
    let faces = mesh.cell_faces(k);
    let n = faces.len();
    let y = gradient_coefficients(mesh, k, alpha);
    let mut a = DMatrix::zeros(n, n);
    for (i, &f) in faces.iter().enumerate() {
        let lambda = coeffs.diffusion(&owner, &mesh.cone_centroid(f, k));
        check_tensor(&lambda, mesh.dim(), k)?;
        let weighted = lambda * mesh.cone_measure(f, k);
        a += y[i].transpose() * weighted * &y[i];
    }
    // Symmetric by construction up to roundoff; enforce it exactly.
    let a = (&a + a.transpose()) * 0.5;
    let convective = faces
        .iter()
        .map(|&f| {
            let face = mesh.face(f);
            coeffs.velocity(&owner, &face.center).dot(&mesh.side(f, k).normal) * face.measure
        })
        .collect();
    Ok(LocalOperator { a, convective, alpha })
}

/// Builds the local operators of every cell, in parallel over cells.
pub fn assemble_cell_operators(
    mesh: &Mesh,
    coeffs: &dyn CoefficientField,
    alpha: &Alpha,
) -> Result<CellOperators, DiscretizationError> {
    let cells = (0..mesh.n_cells())
        .into_par_iter()
        .map(|k| assemble_local(mesh, coeffs, k, alpha.get(k)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CellOperators { cells })
}

/// Diffusive flux `F_{K,s}(u)` out of cell `k` through face `f`.
pub fn diffusive_flux(ops: &CellOperators, mesh: &Mesh, field: &DiscreteField, k: usize, f: usize) -> f64 {
    let faces = mesh.cell_faces(k);
    let i = faces.iter().position(|&g| g == f).expect("face not in cell");
    let local: Vec<f64> = faces.iter().map(|&g| field.faces[g]).collect();
    ops.local(k).flux(i, field.cells[k], &local)
}

/// Upwind value: the cell value for outflow (`v >= 0`), the face value otherwise.
pub fn upwind_value(u_cell: f64, u_face: f64, v: f64) -> f64 {
    if v >= 0.0 {
        u_cell
    } else {
        u_face
    }
}

/// `V^+ u_K + V^- u_s`, equal to `v * upwind_value(..)`.
pub fn convective_flux(u_cell: f64, u_face: f64, v: f64) -> f64 {
    v.max(0.0) * u_cell + v.min(0.0) * u_face
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Cuboid;
    use crate::mesh::{build_box_mesh, refine_random};

    /// Closed-form coefficient vectors for `alpha = sqrt(d)`, transcribed independently.
    fn closed_form_y(mesh: &Mesh, k: usize) -> Vec<Vec<Point>> {
        let d = mesh.dim() as f64;
        let mk = mesh.cell(k).measure;
        let xk = mesh.cell(k).center;
        let faces = mesh.cell_faces(k);
        let mut y = Vec::new();
        for &s in faces {
            let ns = mesh.side(s, k).normal;
            let ds = mesh.side(s, k).distance;
            let xs = mesh.face(s).center;
            let mut row = Vec::new();
            for &sp in faces {
                let msp = mesh.face(sp).measure;
                let nsp = mesh.side(sp, k).normal;
                let v = if s == sp {
                    msp / mk * nsp + d.sqrt() / ds * (1.0 - msp / mk * nsp.dot(&(xs - xk))) * ns
                } else {
                    msp / mk * nsp - d.sqrt() / ds * (msp / mk) * nsp.dot(&(xs - xk)) * ns
                };
                row.push(v);
            }
            y.push(row);
        }
        y
    }

    #[test]
    fn coefficients_match_closed_form_at_standard_alpha() {
        let b = Cuboid::new(3, &[0.0; 3], &[2.0, 1.0, 1.0]).unwrap();
        let m = refine_random(&build_box_mesh(&b, &[4, 2, 2]).unwrap(), 0.5, 9).unwrap();
        for k in 0..m.n_cells() {
            let y = gradient_coefficients(&m, k, 3f64.sqrt());
            let cf = closed_form_y(&m, k);
            for (i, row) in cf.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    assert!((y[i].column(j) - v).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn two_point_reduction_on_cube() {
        let m = build_box_mesh(&Cuboid::unit(3), &[1, 1, 1]).unwrap();
        let ops = assemble_cell_operators(&m, &UniformCoefficients::isotropic(1.0), &Alpha::standard(3)).unwrap();
        let u = DiscreteField { cells: vec![0.7], faces: vec![0.1, -0.4, 1.3, 0.25, 2.0, -1.1] };
        for f in 0..6 {
            let tpfa = m.face(f).measure / m.side(f, 0).distance * (u.cells[0] - u.faces[f]);
            let flux = diffusive_flux(&ops, &m, &u, 0, f);
            assert!((flux - tpfa).abs() < 1e-12, "face {f}: {flux} vs {tpfa}");
        }
    }

    #[test]
    fn zero_diffusion_gives_zero_matrix() {
        let m = build_box_mesh(&Cuboid::unit(3), &[2, 1, 1]).unwrap();
        let ops = assemble_cell_operators(&m, &UniformCoefficients::isotropic(0.0), &Alpha::standard(3)).unwrap();
        assert!(ops.cells.iter().all(|c| c.a.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn invalid_tensors_rejected() {
        let m = build_box_mesh(&Cuboid::unit(3), &[1, 1, 1]).unwrap();
        let mut c = UniformCoefficients::isotropic(1.0);
        c.diffusion[(0, 1)] = 0.5;
        assert!(matches!(
            assemble_cell_operators(&m, &c, &Alpha::standard(3)),
            Err(DiscretizationError::AsymmetricDiffusion { .. })
        ));
        let c = UniformCoefficients::isotropic(-1.0);
        assert!(matches!(
            assemble_cell_operators(&m, &c, &Alpha::standard(3)),
            Err(DiscretizationError::NegativeDiffusion { .. })
        ));
    }

    #[test]
    fn upwind_cases() {
        assert_eq!(convective_flux(3.0, 5.0, 0.0), 0.0);
        assert_eq!(convective_flux(3.0, 5.0, 2.0), 6.0);
        assert_eq!(convective_flux(3.0, 5.0, -2.0), -10.0);
        assert_eq!(upwind_value(3.0, 5.0, 0.0), 3.0);
        assert_eq!(upwind_value(3.0, 5.0, -1e-300), 5.0);
    }

    #[test]
    fn convective_integrals_are_antisymmetric() {
        let b = Cuboid::new(3, &[0.0; 3], &[2.0, 1.0, 1.0]).unwrap();
        let m = refine_random(&build_box_mesh(&b, &[4, 2, 2]).unwrap(), 0.5, 1).unwrap();
        let c = UniformCoefficients { diffusion: Tensor::identity(), velocity: Point::new(4.0, 7.0, 7.0) };
        let ops = assemble_cell_operators(&m, &c, &Alpha::standard(3)).unwrap();
        for (f, face) in m.faces().iter().enumerate() {
            if let [a, b] = face.sides.as_slice() {
                let va = ops.local(a.cell).convective[m.local_index(f, 0)];
                let vb = ops.local(b.cell).convective[m.local_index(f, 1)];
                assert!((va + vb).abs() < 1e-14);
            }
        }
    }
}
