use crate::geometry::Point;
use crate::mesh::Mesh;

/// One value per cell and one per face.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiscreteField {
    pub cells: Vec<f64>,
    pub faces: Vec<f64>,
}

impl DiscreteField {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self::constant(mesh, 0.0)
    }

    pub fn constant(mesh: &Mesh, c: f64) -> Self {
        DiscreteField { cells: vec![c; mesh.n_cells()], faces: vec![c; mesh.n_faces()] }
    }

    pub fn fits(&self, mesh: &Mesh) -> bool {
        self.cells.len() == mesh.n_cells() && self.faces.len() == mesh.n_faces()
    }

    /// Membership in the subspace with vanishing boundary face values.
    pub fn is_boundary_constrained(&self, mesh: &Mesh) -> bool {
        mesh.boundary_faces().all(|f| self.faces[f] == 0.0)
    }

    pub fn constrain_boundary(&mut self, mesh: &Mesh) {
        for f in mesh.boundary_faces() {
            self.faces[f] = 0.0;
        }
    }
}

/// Samples `phi` at cell centers and face barycenters.
pub fn project(mesh: &Mesh, phi: impl Fn(&Point) -> f64) -> DiscreteField {
    DiscreteField {
        cells: mesh.cells().iter().map(|c| phi(&c.center)).collect(),
        faces: mesh.faces().iter().map(|f| phi(&f.center)).collect(),
    }
}
