//! Small geometric vocabulary shared by every module.
//!
//! Points and tensors are always stored as 3-vectors / 3x3 matrices. Two
//! dimensional problems leave the third component (and the third row and
//! column of tensors) at zero.

use nalgebra::{Matrix3, Vector3};

pub type Point = Vector3<f64>;
pub type Tensor = Matrix3<f64>;

/// Builds a point from up to three coordinates, padding with zeros.
pub fn point(coords: &[f64]) -> Point {
    let mut p = Point::zeros();
    for (i, c) in coords.iter().take(3).enumerate() {
        p[i] = *c;
    }
    p
}

/// Axis-aligned box in `dim` dimensions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cuboid {
    pub dim: usize,
    pub min: Point,
    pub max: Point,
}

impl Cuboid {
    pub fn new(dim: usize, min: &[f64], max: &[f64]) -> Option<Self> {
        if !(2..=3).contains(&dim) || min.len() != dim || max.len() != dim {
            return None;
        }
        let b = Cuboid { dim, min: point(min), max: point(max) };
        if (0..dim).all(|a| b.extent(a) > 0.0 && b.extent(a).is_finite()) {
            Some(b)
        } else {
            None
        }
    }

    pub fn unit(dim: usize) -> Self {
        let ones = vec![1.0; dim];
        let zeros = vec![0.0; dim];
        Self::new(dim, &zeros, &ones).expect("unit box is valid")
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.max[axis] - self.min[axis]
    }

    pub fn measure(&self) -> f64 {
        (0..self.dim).map(|a| self.extent(a)).product()
    }

    pub fn center(&self) -> Point {
        (self.min + self.max) * 0.5
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim).map(|a| self.extent(a).powi(2)).sum::<f64>().sqrt()
    }

    /// Membership in the closed box, with an absolute slack `tol` per axis.
    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        (0..self.dim).all(|a| x[a] >= self.min[a] - tol && x[a] <= self.max[a] + tol)
    }
}

/// Symmetric eigenvalues of the leading `dim x dim` block of `t`.
pub fn eigenvalues(t: &Tensor, dim: usize) -> Vec<f64> {
    let mut ev: Vec<f64> = if dim == 2 {
        let m = nalgebra::Matrix2::new(t[(0, 0)], t[(0, 1)], t[(1, 0)], t[(1, 1)]);
        m.symmetric_eigenvalues().iter().copied().collect()
    } else {
        t.symmetric_eigenvalues().iter().copied().collect()
    };
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Frobenius norm of the asymmetric part of the leading block, relative to the
/// norm of the block itself (absolute when the block is zero).
pub fn asymmetry(t: &Tensor, dim: usize) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            num += (t[(i, j)] - t[(j, i)]).powi(2);
            den += t[(i, j)].powi(2);
        }
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}
