//! Elimination of cell unknowns from a linear system whose cell-cell block is
//! diagonal.

use super::SolverError;
use crate::linalg::{Csr, Triplets};

/// Face-only system `S x_f = r_f` and the data to recover the cell part.
#[derive(Clone, Debug)]
pub struct Condensed {
    pub schur: Csr,
    pub rhs: Vec<f64>,
    n_cells: usize,
    diag: Vec<f64>,
    /// Per cell: its face couplings `(face unknown - n_cells, value)`.
    cell_rows: Vec<Vec<(usize, f64)>>,
    cell_rhs: Vec<f64>,
}

/// Eliminates the first `n_cells` unknowns of `A x = b`.
pub fn condense(a: &Csr, b: &[f64], n_cells: usize) -> Result<Condensed, SolverError> {
    let nf = a.n - n_cells;
    let mut diag = vec![0.0; n_cells];
    let mut cell_rows = vec![Vec::new(); n_cells];
    for k in 0..n_cells {
        let (cols, vals) = a.row(k);
        for (&c, &v) in cols.iter().zip(vals) {
            if c == k {
                diag[k] = v;
            } else if c < n_cells {
                if v != 0.0 {
                    return Err(SolverError::CoupledCells(k, c));
                }
            } else {
                cell_rows[k].push((c - n_cells, v));
            }
        }
        if diag[k] == 0.0 || !diag[k].is_finite() {
            return Err(SolverError::ZeroPivot(k));
        }
    }
    let mut t = Triplets::new(nf);
    let mut rhs: Vec<f64> = b[n_cells..].to_vec();
    for i in 0..nf {
        let (cols, vals) = a.row(n_cells + i);
        for (&c, &v) in cols.iter().zip(vals) {
            if c >= n_cells {
                t.push(i, c - n_cells, v);
            } else {
                // face row i couples to cell c: subtract v/d times the cell row
                let s = v / diag[c];
                rhs[i] -= s * b[c];
                for &(j, w) in &cell_rows[c] {
                    t.push(i, j, -s * w);
                }
            }
        }
    }
    Ok(Condensed { schur: t.to_csr(), rhs, n_cells, diag, cell_rows, cell_rhs: b[..n_cells].to_vec() })
}

impl Condensed {
    /// Full solution from the face part.
    pub fn recover(&self, faces: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = (0..self.n_cells)
            .map(|k| {
                let s: f64 = self.cell_rows[k].iter().map(|&(j, w)| w * faces[j]).sum();
                (self.cell_rhs[k] - s) / self.diag[k]
            })
            .collect();
        x.extend_from_slice(faces);
        x
    }
}
