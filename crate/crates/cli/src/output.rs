//! Legacy VTK and CSV writers.

use std::fmt::Write as _;

use hybrid_fv::geometry::Point;
use hybrid_fv::mesh::{Mesh, MeshReport};
use hybrid_fv::solver::SolverDiagnostics;

const VTK_VERTEX: u8 = 1;
const VTK_LINE: u8 = 3;
const VTK_PIXEL: u8 = 8;
const VTK_VOXEL: u8 = 11;

/// Corners of cell `k` in VTK pixel/voxel order, or its center when the mesh
/// carries no box geometry.
fn cell_points(mesh: &Mesh, k: usize) -> (Vec<Point>, u8) {
    let Some(hex) = mesh.hex() else {
        return (vec![mesh.cell(k).center], VTK_VERTEX);
    };
    let b = hex.cell_box(k);
    let corner = |i: usize, j: usize, l: usize| {
        let pick = |a: usize, bit: usize| if bit == 0 { b.min[a] } else { b.max[a] };
        Point::new(pick(0, i), if b.dim > 1 { pick(1, j) } else { 0.0 }, if b.dim > 2 { pick(2, l) } else { 0.0 })
    };
    match b.dim {
        1 => (vec![corner(0, 0, 0), corner(1, 0, 0)], VTK_LINE),
        2 => (vec![corner(0, 0, 0), corner(1, 0, 0), corner(0, 1, 0), corner(1, 1, 0)], VTK_PIXEL),
        _ => {
            let pts = (0..8).map(|c| corner(c & 1, (c >> 1) & 1, c >> 2)).collect();
            (pts, VTK_VOXEL)
        }
    }
}

/// ASCII unstructured grid with one block per cell (corners are not shared)
/// and the given cell data arrays.
pub fn vtk(mesh: &Mesh, title: &str, cell_data: &[(&str, &[f64])]) -> String {
    let cells: Vec<_> = (0..mesh.n_cells()).map(|k| cell_points(mesh, k)).collect();
    let n_points: usize = cells.iter().map(|(p, _)| p.len()).sum();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {n_points} double");
    for (pts, _) in &cells {
        for p in pts {
            let _ = writeln!(s, "{:.12e} {:.12e} {:.12e}", p[0], p[1], p[2]);
        }
    }
    let _ = writeln!(s, "CELLS {} {}", cells.len(), n_points + cells.len());
    let mut next = 0;
    for (pts, _) in &cells {
        let ids: Vec<String> = (next..next + pts.len()).map(|i| i.to_string()).collect();
        let _ = writeln!(s, "{} {}", pts.len(), ids.join(" "));
        next += pts.len();
    }
    let _ = writeln!(s, "CELL_TYPES {}", cells.len());
    for (_, t) in &cells {
        let _ = writeln!(s, "{t}");
    }
    if !cell_data.is_empty() {
        let _ = writeln!(s, "CELL_DATA {}", cells.len());
        for (name, values) in cell_data {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in *values {
                let _ = writeln!(s, "{v:.12e}");
            }
        }
    }
    s
}

pub fn diagnostics_csv(d: &SolverDiagnostics) -> String {
    let mut s = String::from("step,time,iterations,residual,tolerance,damped,conservation_defect,min_u,max_u\n");
    for r in &d.steps {
        let _ = writeln!(
            s,
            "{},{:.8e},{},{:.6e},{:.6e},{},{:.6e},{:.10e},{:.10e}",
            r.step, r.time, r.iterations, r.residual, r.tolerance, r.damped, r.conservation_defect, r.min_u, r.max_u
        );
    }
    s
}

/// `time,error` with one row per snapshot after the initial one.
pub fn errors_csv(times: &[f64], errors: &[f64], absolute: bool) -> String {
    let mut s = String::from(if absolute { "time,abs_error\n" } else { "time,rel_error\n" });
    for (t, e) in times.iter().skip(1).zip(errors) {
        let _ = writeln!(s, "{t:.8e},{e:.10e}");
    }
    s
}

pub fn mesh_report(r: &MeshReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "cells: {}\nfaces: {}\ninterior faces: {}", r.cells, r.faces, r.interior_faces);
    let _ = writeln!(s, "h: {:.6}\ntheta: {:.6}", r.h, r.theta);
    let _ = writeln!(s, "max identity residual: {:.3e}", r.max_identity_residual());
    let _ = writeln!(s, "max closure residual: {:.3e}", r.max_closure_residual());
    let _ = writeln!(s, "cone sum residual: {:.3e}", r.cone_sum_residual);
    if let Some(d) = r.domain_measure_residual {
        let _ = writeln!(s, "domain measure residual: {d:.3e}");
    }
    if r.issues.is_empty() {
        let _ = writeln!(s, "valid: yes");
    } else {
        let _ = writeln!(s, "valid: no");
        for i in &r.issues {
            let _ = writeln!(s, "  {i:?}");
        }
    }
    s
}
