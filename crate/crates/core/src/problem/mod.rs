//! PDE data: nonlinearities, region-wise coefficients, source, initial and
//! boundary data, and an optional exact solution.

mod catalog;
mod hypotheses;
mod nonlinear;

pub use catalog::{make_test1, make_test2, Test2Params, TEST1_DIFFUSION_RIGHT};
pub use hypotheses::{check_hypotheses, HypothesisReport, SampleRange};
pub use nonlinear::{Beta, Reaction};

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::discretization::CoefficientField;
use crate::expr::{ExprError, Expression};
use crate::geometry::{Cuboid, Point, Tensor};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("point ({}, {}, {}) lies outside the domain", .0[0], .0[1], .0[2])]
    OutsideDomain(Point),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

type ScalarFn = Arc<dyn Fn(&Point, f64) -> f64 + Send + Sync>;

/// A scalar function of space and time.
#[derive(Clone)]
pub enum ScalarField {
    Zero,
    Const(f64),
    Expr(Expression),
    Builtin(ScalarFn),
}

impl ScalarField {
    pub fn builtin(f: impl Fn(&Point, f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField::Builtin(Arc::new(f))
    }

    pub fn eval(&self, x: &Point, t: f64) -> Result<f64, ExprError> {
        match self {
            ScalarField::Zero => Ok(0.0),
            ScalarField::Const(c) => Ok(*c),
            ScalarField::Expr(e) => e.eval(x, t),
            ScalarField::Builtin(f) => Ok(f(x, t)),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarField::Zero) || matches!(self, ScalarField::Const(c) if *c == 0.0)
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Zero => f.write_str("Zero"),
            ScalarField::Const(c) => write!(f, "Const({c})"),
            ScalarField::Expr(e) => write!(f, "Expr({e})"),
            ScalarField::Builtin(_) => f.write_str("Builtin"),
        }
    }
}

/// Constant coefficients of one region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub diffusion: Tensor,
    pub velocity: Point,
}

/// Two regions separated by the plane `x[axis] = threshold`; region 0 is
/// `x[axis] <= threshold`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionSplit {
    pub axis: usize,
    pub threshold: f64,
}

/// One side of the bounding box: `axis` and whether it is the upper face.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BoundarySide {
    pub axis: usize,
    pub upper: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryMode {
    Dirichlet,
    ZeroFlux,
}

/// Zero-flux sides of the box; every other boundary face is Dirichlet.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundarySpec {
    pub zero_flux: Vec<BoundarySide>,
}

impl BoundarySpec {
    pub fn dirichlet() -> Self {
        BoundarySpec::default()
    }

    /// Mode of a boundary face from its outward unit normal.
    pub fn mode(&self, normal: &Point) -> BoundaryMode {
        let axis = normal.iamax();
        let side = BoundarySide { axis, upper: normal[axis] > 0.0 };
        if self.zero_flux.contains(&side) {
            BoundaryMode::ZeroFlux
        } else {
            BoundaryMode::Dirichlet
        }
    }
}

/// Declared constants of the structural hypotheses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Declared {
    /// Lower slope of `beta`.
    pub beta_lower: f64,
    pub lambda_lower: f64,
    pub lambda_upper: f64,
    /// `F_` in the one-sided Lipschitz bound of `F`; 0 when `F` is nondecreasing.
    pub reaction_lower: f64,
}

/// Coefficients at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointCoefficients {
    pub diffusion: Tensor,
    pub velocity: Point,
    pub source: f64,
    pub region: usize,
}

#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub name: String,
    pub domain: Cuboid,
    pub beta: Beta,
    pub reaction: Reaction,
    /// One region, or two when `split` is set.
    pub regions: Vec<Region>,
    pub split: Option<RegionSplit>,
    pub source: ScalarField,
    pub initial: ScalarField,
    pub dirichlet: ScalarField,
    pub exact: Option<ScalarField>,
    pub boundary: BoundarySpec,
    pub declared: Declared,
}

impl ProblemSpec {
    /// Region containing `x`; points on the split plane belong to region 0.
    pub fn region_of(&self, x: &Point) -> usize {
        match self.split {
            Some(s) if x[s.axis] > s.threshold => 1.min(self.regions.len() - 1),
            _ => 0,
        }
    }

    pub fn region(&self, x: &Point) -> &Region {
        &self.regions[self.region_of(x)]
    }

    pub fn eval_coefficients(&self, x: &Point, t: f64) -> Result<PointCoefficients, ProblemError> {
        if !self.domain.contains(x, 1e-12) {
            return Err(ProblemError::OutsideDomain(*x));
        }
        let region = self.region_of(x);
        Ok(PointCoefficients {
            diffusion: self.regions[region].diffusion,
            velocity: self.regions[region].velocity,
            source: self.source.eval(x, t)?,
            region,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim
    }
}

impl CoefficientField for ProblemSpec {
    fn diffusion(&self, owner: &Point, _: &Point) -> Tensor {
        self.region(owner).diffusion
    }

    fn velocity(&self, owner: &Point, _: &Point) -> Point {
        self.region(owner).velocity
    }
}

/// Evaluates `f` at `x`, or by a central secant when the closed form is not
/// finite (the degenerate points of `beta` and `F`).
pub(crate) fn finite_derivative(df: f64, f: impl Fn(f64) -> f64, x: f64) -> f64 {
    if df.is_finite() {
        return df;
    }
    let h = 1e-8 * x.abs().max(1e-8);
    (f(x + h) - f(x - h)) / (2.0 * h)
}
