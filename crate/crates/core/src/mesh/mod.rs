//! Polyhedral meshes: control volumes, faces with per-side normals and
//! distances, and the cell centers used as cone apexes.
//!
//! A mesh may be nonmatching: a coarse cell next to refined neighbors lists
//! every sub-face of the refined side as a separate face of its own.

mod generate;
mod io;
mod validate;

pub use generate::{build_box_mesh, refine_random, HexGrid};
pub use io::{format_mesh, parse_mesh, read_mesh, write_mesh};
pub use validate::{validate, MeshIssue, MeshReport};

use crate::geometry::{Cuboid, Point};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("degenerate box: every extent must be positive and finite")]
    DegenerateBox,
    #[error("resolution must be at least 1 along every axis, got {0:?}")]
    BadResolution(Vec<usize>),
    #[error("refinement probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("operation requires a hexahedral grid mesh")]
    NotHexahedral,
    #[error("dimension {0} not supported (expected 2 or 3)")]
    BadDimension(usize),
    #[error("face {face}: {reason}")]
    Incidence { face: usize, reason: String },
    #[error("cell {0} has no faces")]
    EmptyCell(usize),
    #[error("non-positive measure in {0}")]
    NonPositiveMeasure(String),
    #[error("face {face} at cell {cell}: distance {distance} is not positive")]
    NonPositiveDistance { face: usize, cell: usize, distance: f64 },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A control volume.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub center: Point,
    pub measure: f64,
    pub diameter: f64,
}

/// One side of a face as seen from an incident cell.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceSide {
    pub cell: usize,
    /// Outward unit normal with respect to `cell`.
    pub normal: Point,
    /// Orthogonal distance from the cell center to the face hyperplane.
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    pub center: Point,
    pub measure: f64,
    /// One side for boundary faces, two for interior ones.
    pub sides: Vec<FaceSide>,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.sides.len() == 1
    }

    pub fn side_of(&self, cell: usize) -> Option<&FaceSide> {
        self.sides.iter().find(|s| s.cell == cell)
    }

    /// `d_sigma`: sum of the one-sided distances (the single distance on the boundary).
    pub fn distance_sum(&self) -> f64 {
        self.sides.iter().map(|s| s.distance).sum()
    }
}

/// Size and regularity of a discretization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshQuality {
    /// Largest cell diameter.
    pub h: f64,
    /// Largest of the neighbor distance ratios and diameter/distance ratios.
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    dim: usize,
    cells: Vec<Cell>,
    faces: Vec<Face>,
    cell_faces: Vec<Vec<usize>>,
    /// Local position of each face in the face lists of its sides' cells.
    face_local: Vec<[usize; 2]>,
    domain: Option<Cuboid>,
    hex: Option<HexGrid>,
}

impl Mesh {
    /// Assembles a mesh from cells and faces, deriving `E_K` from face
    /// incidence in face order.
    pub fn from_parts(dim: usize, cells: Vec<Cell>, faces: Vec<Face>) -> Result<Self, MeshError> {
        if !(2..=3).contains(&dim) {
            return Err(MeshError::BadDimension(dim));
        }
        let mut cell_faces = vec![Vec::new(); cells.len()];
        let mut face_local = vec![[usize::MAX; 2]; faces.len()];
        for (f, face) in faces.iter().enumerate() {
            let reason = match face.sides.len() {
                1 => None,
                2 if face.sides[0].cell == face.sides[1].cell => Some("both sides reference the same cell".to_string()),
                2 => None,
                n => Some(format!("{n} incident cells (expected 1 or 2)")),
            };
            if let Some(reason) = reason {
                return Err(MeshError::Incidence { face: f, reason });
            }
            if !(face.measure > 0.0) {
                return Err(MeshError::NonPositiveMeasure(format!("face {f}")));
            }
            for (k, side) in face.sides.iter().enumerate() {
                let Some(list) = cell_faces.get_mut(side.cell) else {
                    return Err(MeshError::Incidence {
                        face: f,
                        reason: format!("references missing cell {}", side.cell),
                    });
                };
                if !(side.distance > 0.0) {
                    return Err(MeshError::NonPositiveDistance { face: f, cell: side.cell, distance: side.distance });
                }
                face_local[f][k] = list.len();
                list.push(f);
            }
        }
        for (k, cell) in cells.iter().enumerate() {
            if cell_faces[k].is_empty() {
                return Err(MeshError::EmptyCell(k));
            }
            if !(cell.measure > 0.0) || !(cell.diameter > 0.0) {
                return Err(MeshError::NonPositiveMeasure(format!("cell {k}")));
            }
        }
        Ok(Mesh { dim, cells, faces, cell_faces, face_local, domain: None, hex: None })
    }

    pub(crate) fn with_domain(mut self, domain: Cuboid) -> Self {
        self.domain = Some(domain);
        self
    }

    pub(crate) fn with_hex(mut self, hex: HexGrid) -> Self {
        self.hex = Some(hex);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn cell(&self, k: usize) -> &Cell {
        &self.cells[k]
    }

    pub fn face(&self, f: usize) -> &Face {
        &self.faces[f]
    }

    /// `E_K`, the faces of cell `k`, in face-index order.
    pub fn cell_faces(&self, k: usize) -> &[usize] {
        &self.cell_faces[k]
    }

    /// Position of face `f` inside `cell_faces(face.sides[side].cell)`.
    pub fn local_index(&self, f: usize, side: usize) -> usize {
        self.face_local[f][side]
    }

    /// The side record of face `f` belonging to cell `k`; panics if not incident.
    pub fn side(&self, f: usize, k: usize) -> &FaceSide {
        self.faces[f].side_of(k).expect("face not incident to cell")
    }

    /// Measure of the cone with apex `x_K` and base `f`.
    pub fn cone_measure(&self, f: usize, k: usize) -> f64 {
        self.faces[f].measure * self.side(f, k).distance / self.dim as f64
    }

    /// Centroid of the cone with apex `x_K` and base `f`.
    pub fn cone_centroid(&self, f: usize, k: usize) -> Point {
        let d = self.dim as f64;
        let apex = self.cells[k].center;
        apex + (self.faces[f].center - apex) * (d / (d + 1.0))
    }

    pub fn domain(&self) -> Option<&Cuboid> {
        self.domain.as_ref()
    }

    pub fn hex(&self) -> Option<&HexGrid> {
        self.hex.as_ref()
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.faces.len()).filter(|&f| self.faces[f].is_boundary())
    }

    pub fn n_interior_faces(&self) -> usize {
        self.faces.iter().filter(|f| !f.is_boundary()).count()
    }

    pub fn total_measure(&self) -> f64 {
        self.cells.iter().map(|c| c.measure).sum()
    }

    pub fn quality(&self) -> MeshQuality {
        let h = self.cells.iter().map(|c| c.diameter).fold(0.0, f64::max);
        let mut theta: f64 = 1.0;
        for face in &self.faces {
            for s in &face.sides {
                theta = theta.max(self.cells[s.cell].diameter / s.distance);
            }
            if let [a, b] = face.sides.as_slice() {
                theta = theta.max(a.distance / b.distance).max(b.distance / a.distance);
            }
        }
        MeshQuality { h, theta }
    }

    /// Face-adjacent neighbor of `k` across `f`, if `f` is interior.
    pub fn neighbor(&self, f: usize, k: usize) -> Option<usize> {
        self.faces[f].sides.iter().map(|s| s.cell).find(|&c| c != k).filter(|_| !self.faces[f].is_boundary())
    }
}
