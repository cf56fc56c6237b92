//! Sparse storage and linear solvers for the Newton systems, which are
//! nonsymmetric because of upwinding.

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular or numerically singular ({0})")]
    Singular(String),
    #[error("iterative solver did not converge: relative residual {residual:e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },
    #[error("linear solve reached relative residual {0:e}, above the required bound")]
    Inaccurate(f64),
}

/// Required relative residual `|b - A x| / |b|` of every linear solve.
pub const LINEAR_TOL: f64 = 1e-12;

/// Coordinate-format assembly buffer; duplicate entries are summed.
#[derive(Clone, Debug, Default)]
pub struct Triplets {
    pub n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Triplets { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Triplets { n, entries: Vec::with_capacity(cap) }
    }

    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.n && c < self.n);
        self.entries.push((r, c, v));
    }

    pub fn extend(&mut self, other: Triplets) {
        self.entries.extend(other.entries);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_csr(&self) -> Csr {
        Csr::from_triplets(self.n, &self.entries)
    }
}

/// Compressed sparse row matrix with sorted, unique column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    pub fn from_triplets(n: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut sorted = entries.to_vec();
        sorted.sort_by_key(|e| (e.0, e.1));
        let mut indptr = vec![0; n + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut data: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        Csr { n, indptr, indices, data }
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.data[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |p| vals[p])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&c, v)| v * x[c]).sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        d
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn relative_residual(a: &Csr, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
    let nb = norm2(b);
    if nb == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / nb
    }
}

/// Sparse LU with one step of iterative refinement.
pub fn solve_direct(a: &Csr, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = a.n;
    let trip: Vec<Triplet<usize, usize, f64>> = (0..n)
        .flat_map(|i| {
            let (cols, vals) = a.row(i);
            cols.iter().zip(vals).map(move |(&c, &v)| Triplet::new(i, c, v))
        })
        .collect();
    let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
        .map_err(|e| LinalgError::Singular(format!("{e:?}")))?;
    let sym = SymbolicLu::try_new(m.symbolic()).map_err(|e| LinalgError::Singular(format!("{e:?}")))?;
    let lu = Lu::try_new_with_symbolic(sym, m.as_ref()).map_err(|e| LinalgError::Singular(format!("{e:?}")))?;
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let r = Mat::from_fn(n, 1, |i, _| rhs[i]);
        let x = lu.solve(&r);
        (0..n).map(|i| x[(i, 0)]).collect()
    };
    let mut x = solve(b);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::Singular("non-finite solution".into()));
    }
    let ax = a.matvec(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
    let dx = solve(&r);
    for (xi, d) in x.iter_mut().zip(&dx) {
        *xi += d;
    }
    Ok(x)
}

/// Incomplete LU factorization with the sparsity of `A`.
#[derive(Clone, Debug)]
pub struct Ilu0 {
    lu: Csr,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &Csr) -> Result<Self, LinalgError> {
        let mut lu = a.clone();
        let n = a.n;
        let mut diag = vec![usize::MAX; n];
        for (i, d) in diag.iter_mut().enumerate() {
            let (cols, _) = lu.row(i);
            if let Ok(p) = cols.binary_search(&i) {
                *d = lu.indptr[i] + p;
            } else {
                return Err(LinalgError::Singular(format!("missing diagonal in row {i}")));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.indptr[i], lu.indptr[i + 1]);
            for p in start..end {
                pos[lu.indices[p]] = p;
            }
            for p in start..end {
                let k = lu.indices[p];
                if k >= i {
                    break;
                }
                let pivot = lu.data[diag[k]];
                if pivot == 0.0 {
                    return Err(LinalgError::Singular(format!("zero pivot in row {k}")));
                }
                lu.data[p] /= pivot;
                let lik = lu.data[p];
                for q in diag[k] + 1..lu.indptr[k + 1] {
                    let j = lu.indices[q];
                    if pos[j] != usize::MAX {
                        lu.data[pos[j]] -= lik * lu.data[q];
                    }
                }
            }
            for p in start..end {
                pos[lu.indices[p]] = usize::MAX;
            }
            if lu.data[diag[i]] == 0.0 {
                return Err(LinalgError::Singular(format!("zero pivot in row {i}")));
            }
        }
        Ok(Ilu0 { lu, diag })
    }

    pub fn apply(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for p in self.lu.indptr[i]..self.diag[i] {
                s -= self.lu.data[p] * y[self.lu.indices[p]];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for p in self.diag[i] + 1..self.lu.indptr[i + 1] {
                s -= self.lu.data[p] * y[self.lu.indices[p]];
            }
            y[i] = s / self.lu.data[self.diag[i]];
        }
        y
    }
}

/// Right-preconditioned BiCGStab with ILU(0).
pub fn solve_bicgstab(a: &Csr, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>, LinalgError> {
    let n = a.n;
    let nb = norm2(b);
    if nb == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let m = Ilu0::new(a)?;
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut res = 1.0;
    for it in 0..max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            return Err(LinalgError::NotConverged { residual: res, iterations: it });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let y = m.apply(&p);
        v = a.matvec(&y);
        alpha = rho_new / dot(&r_hat, &v);
        let s: Vec<f64> = r.iter().zip(&v).map(|(r, v)| r - alpha * v).collect();
        if norm2(&s) / nb <= tol {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return Ok(x);
        }
        let z = m.apply(&s);
        let t = a.matvec(&z);
        let tt = dot(&t, &t);
        omega = if tt == 0.0 { 0.0 } else { dot(&t, &s) / tt };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        rho = rho_new;
        res = norm2(&r) / nb;
        if !res.is_finite() {
            return Err(LinalgError::NotConverged { residual: res, iterations: it + 1 });
        }
        if res <= tol {
            return Ok(x);
        }
    }
    Err(LinalgError::NotConverged { residual: res, iterations: max_iter })
}

/// Backend selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinearSolver {
    Direct,
    Iterative,
    /// Direct below `threshold` unknowns, iterative with direct fallback above.
    Auto {
        threshold: usize,
    },
}

impl Default for LinearSolver {
    fn default() -> Self {
        LinearSolver::Auto { threshold: 4000 }
    }
}

impl LinearSolver {
    /// Solves `A x = b` and checks the relative residual against [`LINEAR_TOL`].
    pub fn solve(self, a: &Csr, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let iterative = |a: &Csr, b: &[f64]| solve_bicgstab(a, b, 0.1 * LINEAR_TOL, 2000);
        let x = match self {
            LinearSolver::Direct => solve_direct(a, b)?,
            LinearSolver::Iterative => iterative(a, b)?,
            LinearSolver::Auto { threshold } if a.n < threshold => solve_direct(a, b)?,
            LinearSolver::Auto { .. } => match iterative(a, b) {
                Ok(x) if relative_residual(a, &x, b) <= LINEAR_TOL => x,
                Ok(_) | Err(_) => {
                    log::debug!("iterative solve failed on n = {}, falling back to LU", a.n);
                    solve_direct(a, b)?
                }
            },
        };
        let res = relative_residual(a, &x, b);
        if res > LINEAR_TOL {
            return Err(LinalgError::Inaccurate(res));
        }
        Ok(x)
    }
}
