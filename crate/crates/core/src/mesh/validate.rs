use nalgebra::Matrix3;

use super::Mesh;
use crate::geometry::Point;

/// Relative tolerance applied to every geometric identity.
pub const GEOMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum MeshIssue {
    /// `sum m(s) n (x_s - x_K)^T != m(K) Id` beyond tolerance (relative residual).
    CenterIdentity {
        cell: usize,
        residual: f64,
    },
    /// `sum m(s) n != 0` beyond tolerance (relative residual).
    Closure {
        cell: usize,
        residual: f64,
    },
    NormalNotUnit {
        face: usize,
    },
    NormalsNotOpposite {
        face: usize,
    },
    NonPositiveDistance {
        face: usize,
        cell: usize,
    },
    /// Sum of cone measures differs from `d * sum m(K)` (relative).
    ConeSum {
        residual: f64,
    },
    /// Total cell measure differs from the domain measure (relative).
    DomainMeasure {
        residual: f64,
    },
}

/// Geometric diagnostics of a mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshReport {
    pub cells: usize,
    pub faces: usize,
    pub interior_faces: usize,
    pub h: f64,
    pub theta: f64,
    /// Per-cell Frobenius residual of the center identity divided by `m(K)`.
    pub identity_residual: Vec<f64>,
    /// Per-cell `|sum m(s) n|` divided by `sum m(s)`.
    pub closure_residual: Vec<f64>,
    pub cone_sum_residual: f64,
    pub domain_measure_residual: Option<f64>,
    pub issues: Vec<MeshIssue>,
}

impl MeshReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn max_identity_residual(&self) -> f64 {
        self.identity_residual.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_closure_residual(&self) -> f64 {
        self.closure_residual.iter().copied().fold(0.0, f64::max)
    }
}

pub fn validate(mesh: &Mesh) -> MeshReport {
    let dim = mesh.dim();
    let mut issues = Vec::new();
    let mut identity_residual = Vec::with_capacity(mesh.n_cells());
    let mut closure_residual = Vec::with_capacity(mesh.n_cells());
    let mut cone_sum = 0.0;

    for k in 0..mesh.n_cells() {
        let cell = mesh.cell(k);
        let mut moment = Matrix3::<f64>::zeros();
        let mut closure = Point::zeros();
        let mut area = 0.0;
        for &f in mesh.cell_faces(k) {
            let face = mesh.face(f);
            let side = mesh.side(f, k);
            moment += face.measure * side.normal * (face.center - cell.center).transpose();
            closure += face.measure * side.normal;
            area += face.measure;
            cone_sum += face.measure * side.distance;
        }
        let mut res = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let target = if i == j { cell.measure } else { 0.0 };
                res += (moment[(i, j)] - target).powi(2);
            }
        }
        let res = res.sqrt() / cell.measure;
        if res > GEOMETRY_TOL {
            issues.push(MeshIssue::CenterIdentity { cell: k, residual: res });
        }
        identity_residual.push(res);
        let cres = closure.norm() / area;
        if cres > GEOMETRY_TOL {
            issues.push(MeshIssue::Closure { cell: k, residual: cres });
        }
        closure_residual.push(cres);
    }

    for (f, face) in mesh.faces().iter().enumerate() {
        for s in &face.sides {
            if (s.normal.norm() - 1.0).abs() > GEOMETRY_TOL {
                issues.push(MeshIssue::NormalNotUnit { face: f });
            }
            if !(s.distance > 0.0) {
                issues.push(MeshIssue::NonPositiveDistance { face: f, cell: s.cell });
            }
        }
        if let [a, b] = face.sides.as_slice() {
            if (a.normal + b.normal).norm() > GEOMETRY_TOL {
                issues.push(MeshIssue::NormalsNotOpposite { face: f });
            }
        }
    }

    let total = mesh.total_measure();
    let cone_sum_residual = (cone_sum - dim as f64 * total).abs() / (dim as f64 * total);
    if cone_sum_residual > GEOMETRY_TOL {
        issues.push(MeshIssue::ConeSum { residual: cone_sum_residual });
    }
    let domain_measure_residual = mesh.domain().map(|d| (total - d.measure()).abs() / d.measure());
    if let Some(r) = domain_measure_residual {
        if r > GEOMETRY_TOL {
            issues.push(MeshIssue::DomainMeasure { residual: r });
        }
    }

    let q = mesh.quality();
    MeshReport {
        cells: mesh.n_cells(),
        faces: mesh.n_faces(),
        interior_faces: mesh.n_interior_faces(),
        h: q.h,
        theta: q.theta,
        identity_residual,
        closure_residual,
        cone_sum_residual,
        domain_measure_residual,
        issues,
    }
}
