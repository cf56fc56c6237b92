//! Bilinear forms and discrete norms.

use super::gradient::{Alpha, GradientField};
use super::operator::{convective_flux, CellOperators, CoefficientField};
use super::{DiscreteField, DiscretizationError};
use crate::mesh::Mesh;

fn local_faces(mesh: &Mesh, field: &DiscreteField, k: usize) -> Vec<f64> {
    mesh.cell_faces(k).iter().map(|&f| field.faces[f]).collect()
}

/// Diffusive form `<v,u>_F = sum_K sum_s (v_K - v_s) F_{K,s}(u)`, evaluated face by face.
pub fn bilinear_f(ops: &CellOperators, mesh: &Mesh, v: &DiscreteField, u: &DiscreteField) -> f64 {
    let mut s = 0.0;
    for k in 0..mesh.n_cells() {
        let uf = local_faces(mesh, u, k);
        let op = ops.local(k);
        for (i, &f) in mesh.cell_faces(k).iter().enumerate() {
            s += (v.cells[k] - v.faces[f]) * op.flux(i, u.cells[k], &uf);
        }
    }
    s
}

/// `int grad_D v . Lambda grad_D u`, evaluated cone by cone with the one-point
/// rule at cone centroids. Agrees with [`bilinear_f`] when the operators were
/// assembled from the same coefficients and stabilization.
pub fn bilinear_f_by_cones(
    mesh: &Mesh,
    coeffs: &dyn CoefficientField,
    alpha: &Alpha,
    v: &DiscreteField,
    u: &DiscreteField,
) -> f64 {
    let gv = GradientField::new(mesh, v, alpha);
    let gu = GradientField::new(mesh, u, alpha);
    let mut s = 0.0;
    for k in 0..mesh.n_cells() {
        let owner = mesh.cell(k).center;
        for (i, &f) in mesh.cell_faces(k).iter().enumerate() {
            let lambda = coeffs.diffusion(&owner, &mesh.cone_centroid(f, k));
            s += mesh.cone_measure(f, k) * gv.cones[k][i].dot(&(lambda * gu.cones[k][i]));
        }
    }
    s
}

/// Convective form `<v,u>_T = sum_K sum_s (v_K - v_s) V_{K,s} ubar_{K,s}`.
pub fn bilinear_t(ops: &CellOperators, mesh: &Mesh, v: &DiscreteField, u: &DiscreteField) -> f64 {
    let mut s = 0.0;
    for k in 0..mesh.n_cells() {
        let op = ops.local(k);
        for (i, &f) in mesh.cell_faces(k).iter().enumerate() {
            s += (v.cells[k] - v.faces[f]) * convective_flux(u.cells[k], u.faces[f], op.convective[i]);
        }
    }
    s
}

/// `|v|_X`, with `|v|_X^2 = sum_K sum_s m(s)/d_{K,s} (v_s - v_K)^2`.
pub fn seminorm_x(mesh: &Mesh, v: &DiscreteField) -> f64 {
    let mut s = 0.0;
    for k in 0..mesh.n_cells() {
        for &f in mesh.cell_faces(k) {
            s += mesh.face(f).measure / mesh.side(f, k).distance * (v.faces[f] - v.cells[k]).powi(2);
        }
    }
    s.sqrt()
}

/// Discrete `W^{1,p}` norm of a cellwise-constant function.
pub fn norm_1pm(mesh: &Mesh, cells: &[f64], p: f64) -> Result<f64, DiscretizationError> {
    if !(p >= 1.0) {
        return Err(DiscretizationError::NormExponent(p));
    }
    let mut s = 0.0;
    for k in 0..mesh.n_cells() {
        for &f in mesh.cell_faces(k) {
            let face = mesh.face(f);
            let jump = match face.sides.as_slice() {
                [a, b] => (cells[a.cell] - cells[b.cell]).abs(),
                _ => cells[k].abs(),
            };
            s += face.measure * mesh.side(f, k).distance * (jump / face.distance_sum()).powf(p);
        }
    }
    Ok(s.powf(1.0 / p))
}

/// `||grad_D u||_{L2}`.
pub fn gradient_l2(mesh: &Mesh, u: &DiscreteField, alpha: &Alpha) -> f64 {
    GradientField::new(mesh, u, alpha).l2_squared(mesh).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{assemble_cell_operators, UniformCoefficients};
    use crate::geometry::{Cuboid, Point, Tensor};
    use crate::mesh::{build_box_mesh, refine_random};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(mesh: &Mesh, rng: &mut ChaCha8Rng) -> DiscreteField {
        DiscreteField {
            cells: (0..mesh.n_cells()).map(|_| rng.random_range(-1.0..1.0)).collect(),
            faces: (0..mesh.n_faces()).map(|_| rng.random_range(-1.0..1.0)).collect(),
        }
    }

    #[test]
    fn flux_and_cone_routes_agree() {
        let b = Cuboid::new(3, &[0.0; 3], &[2.0, 1.0, 1.0]).unwrap();
        let m = refine_random(&build_box_mesh(&b, &[4, 2, 2]).unwrap(), 0.5, 3).unwrap();
        let c = UniformCoefficients {
            diffusion: Tensor::new(8.0, -5.0, -2.0, -5.0, 20.0, -7.0, -2.0, -7.0, 19.0),
            velocity: Point::zeros(),
        };
        for alpha in [Alpha::standard(3), Alpha::Uniform(0.4)] {
            let ops = assemble_cell_operators(&m, &c, &alpha).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            for _ in 0..10 {
                let (u, v) = (random_field(&m, &mut rng), random_field(&m, &mut rng));
                let a = bilinear_f(&ops, &m, &v, &u);
                let b = bilinear_f_by_cones(&m, &c, &alpha, &v, &u);
                assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn single_cube_seminorm() {
        let m = build_box_mesh(&Cuboid::unit(3), &[1, 1, 1]).unwrap();
        let v = DiscreteField { cells: vec![1.0], faces: vec![0.0; 6] };
        assert!((seminorm_x(&m, &v).powi(2) - 12.0).abs() < 1e-14);
        // one cell, all boundary faces: sum m(s) d (1/d)^2 = 6 * 2 = 12
        assert!((norm_1pm(&m, &v.cells, 2.0).unwrap().powi(2) - 12.0).abs() < 1e-14);
    }

    #[test]
    fn zero_field_and_bad_exponent() {
        let m = build_box_mesh(&Cuboid::unit(3), &[2, 2, 2]).unwrap();
        let z = DiscreteField::zeros(&m);
        let ops = assemble_cell_operators(&m, &UniformCoefficients::isotropic(1.0), &Alpha::standard(3)).unwrap();
        assert_eq!(seminorm_x(&m, &z), 0.0);
        assert_eq!(norm_1pm(&m, &z.cells, 1.0).unwrap(), 0.0);
        assert_eq!(bilinear_f(&ops, &m, &z, &z), 0.0);
        assert_eq!(bilinear_t(&ops, &m, &z, &z), 0.0);
        assert!(matches!(norm_1pm(&m, &z.cells, 0.5), Err(DiscretizationError::NormExponent(_))));
    }
}
