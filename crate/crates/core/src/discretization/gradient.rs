//! Discrete gradients: the consistent cell gradient and its stabilized cone
//! corrections.

use super::DiscreteField;
use crate::geometry::Point;
use crate::mesh::Mesh;

/// Stabilization coefficient per cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Alpha {
    Uniform(f64),
    PerCell(Vec<f64>),
}

impl Alpha {
    /// `sqrt(d)`, which recovers the two-point flux on orthogonal meshes
    /// with scalar diffusion.
    pub fn standard(dim: usize) -> Self {
        Alpha::Uniform((dim as f64).sqrt())
    }

    pub fn get(&self, k: usize) -> f64 {
        match self {
            Alpha::Uniform(a) => *a,
            Alpha::PerCell(v) => v[k],
        }
    }
}

/// Cell gradient from local values: `u_k` and the face values listed in
/// `cell_faces(k)` order.
pub(crate) fn local_cell_gradient(mesh: &Mesh, k: usize, u_k: f64, u_faces: &[f64]) -> Point {
    let mut g = Point::zeros();
    for (i, &f) in mesh.cell_faces(k).iter().enumerate() {
        let face = mesh.face(f);
        g += face.measure * (u_faces[i] - u_k) * mesh.side(f, k).normal;
    }
    g / mesh.cell(k).measure
}

/// Residual `R_{K,s}` of the `i`-th face of `k`, given the cell gradient.
pub(crate) fn local_stabilization(
    mesh: &Mesh,
    k: usize,
    i: usize,
    u_k: f64,
    u_face: f64,
    grad: &Point,
    alpha: f64,
) -> f64 {
    let f = mesh.cell_faces(k)[i];
    let side = mesh.side(f, k);
    let offset = mesh.face(f).center - mesh.cell(k).center;
    alpha / side.distance * (u_face - u_k - grad.dot(&offset))
}

/// All cone gradients of cell `k` from local values.
pub(crate) fn local_cone_gradients(mesh: &Mesh, k: usize, u_k: f64, u_faces: &[f64], alpha: f64) -> Vec<Point> {
    let grad = local_cell_gradient(mesh, k, u_k, u_faces);
    mesh.cell_faces(k)
        .iter()
        .enumerate()
        .map(|(i, &f)| grad + local_stabilization(mesh, k, i, u_k, u_faces[i], &grad, alpha) * mesh.side(f, k).normal)
        .collect()
}

fn gather(mesh: &Mesh, field: &DiscreteField, k: usize) -> Vec<f64> {
    mesh.cell_faces(k).iter().map(|&f| field.faces[f]).collect()
}

/// `(1/m(K)) sum m(s) (u_s - u_K) n_{K,s}`.
pub fn cell_gradient(mesh: &Mesh, field: &DiscreteField, k: usize) -> Point {
    local_cell_gradient(mesh, k, field.cells[k], &gather(mesh, field, k))
}

/// Stabilization residual `R_{K,s} u` for face `f` of cell `k`.
pub fn stabilization(mesh: &Mesh, field: &DiscreteField, k: usize, f: usize, alpha: f64) -> f64 {
    let grad = cell_gradient(mesh, field, k);
    let i = mesh.cell_faces(k).iter().position(|&g| g == f).expect("face not in cell");
    local_stabilization(mesh, k, i, field.cells[k], field.faces[f], &grad, alpha)
}

/// Cone gradient `grad_K u + R_{K,s} u n_{K,s}` on the cone over face `f`.
pub fn stabilized_gradient(mesh: &Mesh, field: &DiscreteField, k: usize, f: usize, alpha: f64) -> Point {
    let grad = cell_gradient(mesh, field, k);
    grad + stabilization(mesh, field, k, f, alpha) * mesh.side(f, k).normal
}

/// Piecewise-constant discrete gradient over all cones.
#[derive(Clone, Debug)]
pub struct GradientField {
    /// Per cell, per local face: the cone gradient.
    pub cones: Vec<Vec<Point>>,
    /// Per cell: the consistent cell gradient.
    pub cells: Vec<Point>,
}

impl GradientField {
    pub fn new(mesh: &Mesh, field: &DiscreteField, alpha: &Alpha) -> Self {
        let mut cones = Vec::with_capacity(mesh.n_cells());
        let mut cells = Vec::with_capacity(mesh.n_cells());
        for k in 0..mesh.n_cells() {
            let local = gather(mesh, field, k);
            cells.push(local_cell_gradient(mesh, k, field.cells[k], &local));
            cones.push(local_cone_gradients(mesh, k, field.cells[k], &local, alpha.get(k)));
        }
        GradientField { cones, cells }
    }

    /// Squared L2 norm of the piecewise-constant cone gradient.
    pub fn l2_squared(&self, mesh: &Mesh) -> f64 {
        let mut s = 0.0;
        for (k, cone) in self.cones.iter().enumerate() {
            for (g, &f) in cone.iter().zip(mesh.cell_faces(k)) {
                s += mesh.cone_measure(f, k) * g.norm_squared();
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::project;
    use crate::geometry::Cuboid;
    use crate::mesh::{build_box_mesh, refine_random};

    fn refined() -> Mesh {
        let b = Cuboid::new(3, &[0.0; 3], &[2.0, 1.0, 1.0]).unwrap();
        refine_random(&build_box_mesh(&b, &[4, 2, 2]).unwrap(), 0.5, 5).unwrap()
    }

    #[test]
    fn constant_field_has_zero_gradient() {
        let m = refined();
        let u = DiscreteField::constant(&m, 2.0);
        for k in 0..m.n_cells() {
            assert_eq!(cell_gradient(&m, &u, k), Point::zeros());
            for &f in m.cell_faces(k) {
                assert!(stabilized_gradient(&m, &u, k, f, 3f64.sqrt()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn unit_cube_face_x_component() {
        // u_K = 0, u_s = x_s . e1: faces at x=0 and x=1 contribute, the rest vanish.
        let m = build_box_mesh(&Cuboid::unit(3), &[1, 1, 1]).unwrap();
        let u = DiscreteField { cells: vec![0.0], faces: m.faces().iter().map(|f| f.center[0]).collect() };
        let g = cell_gradient(&m, &u, 0);
        assert_eq!(g, Point::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn affine_fields_are_exact_and_unstabilized() {
        let m = refined();
        let a = Point::new(0.3, -1.7, 2.2);
        let u = project(&m, |x| a.dot(x) + 0.9);
        for k in 0..m.n_cells() {
            assert!((cell_gradient(&m, &u, k) - a).norm() < 1e-12);
            for &f in m.cell_faces(k) {
                assert!(stabilization(&m, &u, k, f, 1.3).abs() < 1e-12);
                assert!((stabilized_gradient(&m, &u, k, f, 1.3) - a).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn stabilization_is_orthogonal_to_cone_sum() {
        // sum m(D) R n = 0 per cell, so the cone gradients average to the cell gradient.
        let m = refined();
        let u = project(&m, |x| (3.0 * x[0]).sin() * x[1] + x[2].powi(3));
        let alpha = Alpha::standard(3);
        let g = GradientField::new(&m, &u, &alpha);
        for k in 0..m.n_cells() {
            let mut acc = Point::zeros();
            let mut weighted = Point::zeros();
            for &f in m.cell_faces(k) {
                let r = stabilization(&m, &u, k, f, alpha.get(k));
                acc += m.cone_measure(f, k) * r * m.side(f, k).normal;
            }
            for (gc, &f) in g.cones[k].iter().zip(m.cell_faces(k)) {
                weighted += m.cone_measure(f, k) * gc;
            }
            let scale = m.cell(k).measure;
            assert!(acc.norm() <= 1e-12 * scale, "cell {k}: {}", acc.norm());
            assert!((weighted - scale * g.cells[k]).norm() <= 1e-12 * scale * (1.0 + g.cells[k].norm()));
        }
    }
}
