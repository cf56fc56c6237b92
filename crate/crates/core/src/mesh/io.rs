//! Plain-text polyhedral mesh format.
//!
//! ```text
//! # comment
//! dim n_cells n_faces
//! x_K (dim floats)  m(K)  h_K                                  -- n_cells lines
//! x_s (dim floats)  m(s)  cellA [cellB]  n_A (dim floats)  d_A [d_B]   -- n_faces lines
//! ```
//!
//! Boundary faces carry one cell and one distance, interior faces two of
//! each; the normal seen from `cellB` is `-n_A`. Floats are written in
//! shortest round-trip form, so reading a written mesh is exact.

use std::fmt::Write as _;
use std::path::Path;

use super::{Cell, Face, FaceSide, Mesh, MeshError};
use crate::geometry::Point;

pub fn format_mesh(mesh: &Mesh) -> String {
    let dim = mesh.dim();
    let mut out = String::new();
    let _ = writeln!(out, "# hybrid-fv mesh: cells then faces");
    let _ = writeln!(out, "{} {} {}", dim, mesh.n_cells(), mesh.n_faces());
    for c in mesh.cells() {
        for a in 0..dim {
            let _ = write!(out, "{:?} ", c.center[a]);
        }
        let _ = writeln!(out, "{:?} {:?}", c.measure, c.diameter);
    }
    for f in mesh.faces() {
        for a in 0..dim {
            let _ = write!(out, "{:?} ", f.center[a]);
        }
        let _ = write!(out, "{:?}", f.measure);
        for s in &f.sides {
            let _ = write!(out, " {}", s.cell);
        }
        for a in 0..dim {
            let _ = write!(out, " {:?}", f.sides[0].normal[a]);
        }
        for s in &f.sides {
            let _ = write!(out, " {:?}", s.distance);
        }
        out.push('\n');
    }
    out
}

pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    std::fs::write(path, format_mesh(mesh))?;
    Ok(())
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

fn parse_err(line: usize, reason: impl Into<String>) -> MeshError {
    MeshError::Parse { line, reason: reason.into() }
}

pub fn parse_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hl, header) = lines.next().ok_or_else(|| parse_err(0, "empty file"))?;
    let head: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| parse_err(hl, format!("bad header token `{t}`"))))
        .collect::<Result<_, _>>()?;
    let [dim, n_cells, n_faces] = head[..] else {
        return Err(parse_err(hl, "header must be `dim n_cells n_faces`"));
    };
    if !(2..=3).contains(&dim) {
        return Err(MeshError::BadDimension(dim));
    }

    let floats = |ln: usize, l: &str| -> Result<Vec<f64>, MeshError> {
        l.split_whitespace().map(|t| t.parse::<f64>().map_err(|_| parse_err(ln, format!("bad number `{t}`")))).collect()
    };

    let mut cells = Vec::with_capacity(n_cells);
    for _ in 0..n_cells {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(0, "unexpected end of file in cell block"))?;
        let v = floats(ln, l)?;
        if v.len() != dim + 2 {
            return Err(parse_err(ln, format!("cell line needs {} numbers, got {}", dim + 2, v.len())));
        }
        let cell = Cell { center: crate::geometry::point(&v[..dim]), measure: v[dim], diameter: v[dim + 1] };
        if !(cell.measure > 0.0) || !(cell.diameter > 0.0) {
            return Err(MeshError::NonPositiveMeasure(format!("cell {} (line {ln})", cells.len())));
        }
        cells.push(cell);
    }

    let mut faces = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(0, "unexpected end of file in face block"))?;
        let v = floats(ln, l)?;
        let n_sides = if v.len() == 2 * dim + 3 {
            1
        } else if v.len() == 2 * dim + 5 {
            2
        } else {
            return Err(parse_err(ln, format!("face line has {} numbers", v.len())));
        };
        let center = crate::geometry::point(&v[..dim]);
        let measure = v[dim];
        let cell_ids = &v[dim + 1..dim + 1 + n_sides];
        let normal = crate::geometry::point(&v[dim + 1 + n_sides..2 * dim + 1 + n_sides]);
        let dists = &v[2 * dim + 1 + n_sides..];
        let mut sides = Vec::with_capacity(n_sides);
        for (i, (&c, &d)) in cell_ids.iter().zip(dists).enumerate() {
            if c < 0.0 || c.fract() != 0.0 {
                return Err(parse_err(ln, format!("bad cell index {c}")));
            }
            let n: Point = if i == 0 { normal } else { -normal };
            sides.push(FaceSide { cell: c as usize, normal: n, distance: d });
        }
        faces.push(Face { center, measure, sides });
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing data after face block"));
    }
    Mesh::from_parts(dim, cells, faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Cuboid;
    use crate::mesh::{build_box_mesh, refine_random, validate};

    #[test]
    fn single_cube_round_trip() {
        let m = build_box_mesh(&Cuboid::unit(3), &[1, 1, 1]).unwrap();
        let back = parse_mesh(&format_mesh(&m)).unwrap();
        assert_eq!(back.cells(), m.cells());
        assert_eq!(back.faces(), m.faces());
        for k in 0..m.n_cells() {
            assert_eq!(back.cell_faces(k), m.cell_faces(k));
        }
    }

    #[test]
    fn refined_round_trip_keeps_report() {
        let base = build_box_mesh(&Cuboid::new(3, &[0.0; 3], &[2.0, 1.0, 1.0]).unwrap(), &[4, 3, 2]).unwrap();
        let m = refine_random(&base, 0.6, 3).unwrap();
        let back = parse_mesh(&format_mesh(&m)).unwrap();
        let (a, b) = (validate(&m), validate(&back));
        assert_eq!(a.identity_residual, b.identity_residual);
        assert_eq!((a.h, a.theta, a.cells, a.faces), (b.h, b.theta, b.cells, b.faces));
    }

    #[test]
    fn missing_cell_is_incidence_error() {
        let text = "3 1 1\n0.5 0.5 0.5 1 1.7\n0 0.5 0.5 1 3 -1 0 0 0.5\n";
        assert!(matches!(parse_mesh(text), Err(MeshError::Incidence { face: 0, .. })));
    }

    #[test]
    fn malformed_lines_rejected() {
        assert!(matches!(parse_mesh("3 1\n"), Err(MeshError::Parse { line: 1, .. })));
        assert!(matches!(parse_mesh("3 1 0\n0.5 0.5 1 1\n"), Err(MeshError::Parse { line: 2, .. })));
        assert!(matches!(parse_mesh("3 1 0\n0.5 0.5 0.5 -1 1\n"), Err(MeshError::NonPositiveMeasure(_))));
        assert!(matches!(
            parse_mesh("3 1 1\n0.5 0.5 0.5 1 1\n0 0.5 0.5 1 0 -1 0 0 -0.5\n"),
            Err(MeshError::NonPositiveDistance { .. })
        ));
    }
}
