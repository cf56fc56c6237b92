//! Axis-aligned hexahedral (quadrilateral in 2D) mesh generation and seeded
//! random refinement.
//!
//! Cells live on an integer lattice; refining doubles every lattice
//! coordinate, so coarse geometry is reproduced bit for bit. Faces are the
//! intersections of touching cell sides, which yields one face per
//! fine/coarse pair across a nonmatching interface.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Cell, Face, FaceSide, Mesh, MeshError};
use crate::geometry::{Cuboid, Point};

/// Lattice box: `[lo, hi]` corners in lattice units.
pub type LatticeBox = [[i64; 3]; 2];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Refinement {
    pub probability: f64,
    pub seed: u64,
}

/// Integer description of an axis-aligned hexahedral mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct HexGrid {
    pub dim: usize,
    pub origin: Point,
    /// Lattice spacing per axis.
    pub spacing: [f64; 3],
    /// Domain size in lattice units.
    pub extent: [i64; 3],
    pub boxes: Vec<LatticeBox>,
    /// Refinement passes applied since generation, in order.
    pub refinements: Vec<Refinement>,
}

impl HexGrid {
    /// Physical corners of cell `k`.
    pub fn cell_box(&self, k: usize) -> Cuboid {
        let [lo, hi] = self.boxes[k];
        let mut min = self.origin;
        let mut max = self.origin;
        for a in 0..self.dim {
            min[a] += lo[a] as f64 * self.spacing[a];
            max[a] += hi[a] as f64 * self.spacing[a];
        }
        Cuboid { dim: self.dim, min, max }
    }

    fn coord(&self, axis: usize, twice: i64) -> f64 {
        self.origin[axis] + twice as f64 * 0.5 * self.spacing[axis]
    }
}

/// Conforming `resolution[0] x ... ` grid of the box. Cell centers are the
/// centroids and face centers the face barycenters.
pub fn build_box_mesh(domain: &Cuboid, resolution: &[usize]) -> Result<Mesh, MeshError> {
    let dim = domain.dim;
    if !(2..=3).contains(&dim) {
        return Err(MeshError::BadDimension(dim));
    }
    if (0..dim).any(|a| !(domain.extent(a) > 0.0 && domain.extent(a).is_finite())) {
        return Err(MeshError::DegenerateBox);
    }
    if resolution.len() != dim || resolution.contains(&0) {
        return Err(MeshError::BadResolution(resolution.to_vec()));
    }
    let mut res = [1i64; 3];
    let mut spacing = [0.0; 3];
    for a in 0..dim {
        res[a] = resolution[a] as i64;
        spacing[a] = domain.extent(a) / resolution[a] as f64;
    }
    let mut boxes = Vec::with_capacity(res.iter().product::<i64>() as usize);
    for k in 0..res[2] {
        for j in 0..res[1] {
            for i in 0..res[0] {
                boxes.push([[i, j, k], [i + 1, j + 1, k + 1]]);
            }
        }
    }
    if dim == 2 {
        for b in &mut boxes {
            b[0][2] = 0;
            b[1][2] = 0;
        }
        res[2] = 0;
    }
    let grid = HexGrid { dim, origin: domain.min, spacing, extent: res, boxes, refinements: Vec::new() };
    mesh_from_grid(grid, *domain)
}

/// Splits each cell into `2^d` children with the given probability. The
/// draw sequence comes from a ChaCha8 stream seeded with `seed`, one draw per
/// cell in cell order, so the result is reproducible across platforms.
pub fn refine_random(mesh: &Mesh, probability: f64, seed: u64) -> Result<Mesh, MeshError> {
    if !(0.0..=1.0).contains(&probability) {
        return Err(MeshError::BadProbability(probability));
    }
    let grid = mesh.hex().ok_or(MeshError::NotHexahedral)?;
    let domain = *mesh.domain().ok_or(MeshError::NotHexahedral)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let selected: Vec<bool> = grid.boxes.iter().map(|_| rng.random::<f64>() < probability).collect();
    if !selected.iter().any(|&s| s) {
        return Ok(mesh.clone());
    }

    let dim = grid.dim;
    let mut spacing = grid.spacing;
    let mut extent = grid.extent;
    for a in 0..dim {
        spacing[a] *= 0.5;
        extent[a] *= 2;
    }
    let mut boxes = Vec::with_capacity(grid.boxes.len() * 2);
    for (b, &split) in grid.boxes.iter().zip(&selected) {
        let mut lo = b[0];
        let mut hi = b[1];
        for a in 0..dim {
            lo[a] *= 2;
            hi[a] *= 2;
        }
        if !split {
            boxes.push([lo, hi]);
            continue;
        }
        let mut mid = lo;
        for a in 0..dim {
            mid[a] = (lo[a] + hi[a]) / 2;
        }
        for child in 0..(1usize << dim) {
            let mut clo = lo;
            let mut chi = hi;
            for a in 0..dim {
                if child >> a & 1 == 0 {
                    chi[a] = mid[a];
                } else {
                    clo[a] = mid[a];
                }
            }
            boxes.push([clo, chi]);
        }
    }
    let mut refinements = grid.refinements.clone();
    refinements.push(Refinement { probability, seed });
    let refined = HexGrid { dim, origin: grid.origin, spacing, extent, boxes, refinements };
    mesh_from_grid(refined, domain)
}

fn other_axes(dim: usize, axis: usize) -> [Option<usize>; 2] {
    let mut out = [None, None];
    let mut n = 0;
    for a in 0..dim {
        if a != axis {
            out[n] = Some(a);
            n += 1;
        }
    }
    out
}

/// Lattice squares covered by the side of `b` orthogonal to `axis`.
fn side_squares(b: &LatticeBox, others: [Option<usize>; 2]) -> impl Iterator<Item = (i64, i64)> {
    let range = |o: Option<usize>| match o {
        Some(a) => b[0][a]..b[1][a],
        None => 0..1,
    };
    let (r0, r1) = (range(others[0]), range(others[1]));
    r0.flat_map(move |i| r1.clone().map(move |j| (i, j)))
}

fn mesh_from_grid(grid: HexGrid, domain: Cuboid) -> Result<Mesh, MeshError> {
    let dim = grid.dim;
    let cells: Vec<Cell> = (0..grid.boxes.len())
        .map(|k| {
            let cb = grid.cell_box(k);
            let [lo, hi] = grid.boxes[k];
            let mut center = Point::zeros();
            for a in 0..dim {
                center[a] = grid.coord(a, lo[a] + hi[a]);
            }
            Cell { center, measure: cb.measure(), diameter: cb.diameter() }
        })
        .collect();

    let mut faces = Vec::new();
    let make_face =
        |axis: usize, plane: i64, rect: [[i64; 2]; 2], others: [Option<usize>; 2], sides: &[(usize, f64)]| {
            let mut center = Point::zeros();
            center[axis] = grid.coord(axis, 2 * plane);
            let mut measure = 1.0;
            for (r, o) in rect.iter().zip(others) {
                if let Some(o) = o {
                    center[o] = grid.coord(o, r[0] + r[1]);
                    measure *= (r[1] - r[0]) as f64 * grid.spacing[o];
                }
            }
            let sides = sides
                .iter()
                .map(|&(cell, sign)| {
                    let mut normal = Point::zeros();
                    normal[axis] = sign;
                    let distance = (center - cells[cell].center).dot(&normal);
                    FaceSide { cell, normal, distance }
                })
                .collect();
            Face { center, measure, sides }
        };
    let rect_of = |b: &LatticeBox, others: [Option<usize>; 2]| {
        let mut r = [[0, 1]; 2];
        for (ri, o) in r.iter_mut().zip(others) {
            if let Some(o) = o {
                *ri = [b[0][o], b[1][o]];
            }
        }
        r
    };

    for axis in 0..dim {
        let others = other_axes(dim, axis);
        let mut planes: BTreeMap<i64, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for (k, b) in grid.boxes.iter().enumerate() {
            planes.entry(b[1][axis]).or_default().0.push(k);
            planes.entry(b[0][axis]).or_default().1.push(k);
        }
        for (&plane, (minus, plus)) in &planes {
            if plane == 0 {
                for &k in plus {
                    faces.push(make_face(axis, plane, rect_of(&grid.boxes[k], others), others, &[(k, -1.0)]));
                }
                continue;
            }
            if plane == grid.extent[axis] {
                for &k in minus {
                    faces.push(make_face(axis, plane, rect_of(&grid.boxes[k], others), others, &[(k, 1.0)]));
                }
                continue;
            }
            let mut owner: HashMap<(i64, i64), usize> = HashMap::new();
            for &k in minus {
                for sq in side_squares(&grid.boxes[k], others) {
                    owner.insert(sq, k);
                }
            }
            for &k in plus {
                let mut touching: Vec<usize> = Vec::new();
                for sq in side_squares(&grid.boxes[k], others) {
                    let m = *owner.get(&sq).ok_or_else(|| MeshError::Incidence {
                        face: faces.len(),
                        reason: format!("cell {k} has an uncovered side on an interior plane"),
                    })?;
                    if !touching.contains(&m) {
                        touching.push(m);
                    }
                }
                let pr = rect_of(&grid.boxes[k], others);
                for m in touching {
                    let mr = rect_of(&grid.boxes[m], others);
                    let rect = [
                        [pr[0][0].max(mr[0][0]), pr[0][1].min(mr[0][1])],
                        [pr[1][0].max(mr[1][0]), pr[1][1].min(mr[1][1])],
                    ];
                    faces.push(make_face(axis, plane, rect, others, &[(m, 1.0), (k, -1.0)]));
                }
            }
        }
    }

    Ok(Mesh::from_parts(dim, cells, faces)?.with_domain(domain).with_hex(grid))
}
