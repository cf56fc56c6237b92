//! Built-in test problems.

use super::{Beta, Reaction};
use super::{BoundarySide, BoundarySpec, Declared, ProblemError, ProblemSpec, Region, RegionSplit, ScalarField};
use crate::geometry::{eigenvalues, Cuboid, Point, Tensor};

/// Anisotropic diffusion of the right half of Test I.
pub const TEST1_DIFFUSION_RIGHT: [[f64; 3]; 3] = [[8.0, -5.0, -2.0], [-5.0, 20.0, -7.0], [-2.0, -7.0, 19.0]];

fn test1_exact(x: &Point, t: f64) -> f64 {
    (x[0] + x[1] + x[2] - t - 3.0).exp()
}

/// Test I on `(0,2) x (0,1) x (0,1)`: `beta(u) = u + sqrt(u)`, `F(u) = sqrt(u)/2`,
/// piecewise constant anisotropic diffusion and velocity split at `x1 = 1`,
/// exact solution `exp(x1 + x2 + x3 - t - 3)` imposed on the whole boundary.
///
/// With the stated right-half coefficients the exact solution leaves a
/// residual of `-2u` there (the row sums of the tensor give 19 while the
/// velocity divergence term gives 18). The source `q = -2u` on `x1 > 1`
/// restores it as an exact solution; on the left `q = 0`.
pub fn make_test1() -> ProblemSpec {
    let right = Tensor::from_fn(|i, j| TEST1_DIFFUSION_RIGHT[i][j]);
    let lambda_lower = eigenvalues(&right, 3)[0].min(1.0);
    let lambda_upper = eigenvalues(&right, 3)[2].max(1.0);
    ProblemSpec {
        name: "test1".into(),
        domain: Cuboid::new(3, &[0.0; 3], &[2.0, 1.0, 1.0]).expect("valid box"),
        beta: Beta::LinearPlusSqrt,
        reaction: Reaction::HalfSqrt,
        regions: vec![
            Region { diffusion: Tensor::identity(), velocity: Point::new(4.0, 0.0, 0.0) },
            Region { diffusion: right, velocity: Point::new(4.0, 7.0, 7.0) },
        ],
        split: Some(RegionSplit { axis: 0, threshold: 1.0 }),
        source: ScalarField::builtin(|x, t| if x[0] > 1.0 { -2.0 * test1_exact(x, t) } else { 0.0 }),
        initial: ScalarField::builtin(|x, _| test1_exact(x, 0.0)),
        dirichlet: ScalarField::builtin(test1_exact),
        exact: Some(ScalarField::builtin(test1_exact)),
        boundary: BoundarySpec::dirichlet(),
        declared: Declared { beta_lower: 1.0, lambda_lower, lambda_upper, reaction_lower: 0.0 },
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Test2Params {
    /// Front offset at `t = 0`.
    pub p: f64,
    /// Front speed.
    pub v: f64,
    /// Diffusivity.
    pub delta: f64,
}

impl Default for Test2Params {
    fn default() -> Self {
        Test2Params { p: 0.2, v: 0.8, delta: 0.01 }
    }
}

impl Test2Params {
    /// Travelling wave `(1 - exp(v/(2 delta) (x - v t - p)))^2` behind the front, 0 ahead.
    pub fn exact(&self, x: f64, t: f64) -> f64 {
        let s = x - self.v * t - self.p;
        if s > 0.0 {
            0.0
        } else {
            (1.0 - (self.v / (2.0 * self.delta) * s).exp()).powi(2)
        }
    }

    pub fn front(&self, t: f64) -> f64 {
        self.v * t + self.p
    }
}

/// Test II on the unit cube: `beta(u) = sqrt(u)`, `F = 0`, `Lambda = delta I`,
/// `V = (v, 0, 0)`, Dirichlet data on `x1 = 0` and `x1 = 1`, zero flux elsewhere.
pub fn make_test2(params: Test2Params) -> Result<ProblemSpec, ProblemError> {
    if !(params.delta > 0.0) || !(params.v > 0.0) || !params.p.is_finite() {
        return Err(ProblemError::BadParameter(format!(
            "test2 needs delta > 0 and v > 0, got delta = {}, v = {}, p = {}",
            params.delta, params.v, params.p
        )));
    }
    let exact = ScalarField::builtin(move |x, t| params.exact(x[0], t));
    let zero_flux =
        [1, 2].into_iter().flat_map(|axis| [false, true].map(|upper| BoundarySide { axis, upper })).collect();
    Ok(ProblemSpec {
        name: "test2".into(),
        domain: Cuboid::unit(3),
        beta: Beta::Sqrt,
        reaction: Reaction::Zero,
        regions: vec![Region {
            diffusion: Tensor::identity() * params.delta,
            velocity: Point::new(params.v, 0.0, 0.0),
        }],
        split: None,
        source: ScalarField::Zero,
        initial: ScalarField::builtin(move |x, _| params.exact(x[0], 0.0)),
        dirichlet: exact.clone(),
        exact: Some(exact),
        boundary: BoundarySpec { zero_flux },
        // slope of sqrt on (0, 1]; there is no global lower slope
        declared: Declared {
            beta_lower: 0.5,
            lambda_lower: params.delta,
            lambda_upper: params.delta,
            reaction_lower: 0.0,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{BoundaryMode, PointCoefficients};

    #[test]
    fn test1_exact_and_coefficients() {
        let p = make_test1();
        let e = p.exact.as_ref().unwrap();
        assert_eq!(e.eval(&Point::new(1.0, 1.0, 1.0), 0.0).unwrap(), 1.0);
        let PointCoefficients { diffusion, velocity, region, .. } =
            p.eval_coefficients(&Point::new(0.5, 0.5, 0.5), 0.0).unwrap();
        assert_eq!((diffusion, velocity, region), (Tensor::identity(), Point::new(4.0, 0.0, 0.0), 0));
        let c = p.eval_coefficients(&Point::new(1.5, 0.5, 0.5), 0.0).unwrap();
        assert_eq!(c.diffusion[(1, 1)], 20.0);
        assert_eq!(c.velocity, Point::new(4.0, 7.0, 7.0));
        assert_eq!(c.region, 1);
        assert!(p.eval_coefficients(&Point::new(2.5, 0.5, 0.5), 0.0).is_err());
    }

    #[test]
    fn test1_interface_normal_traces_match() {
        let p = make_test1();
        let (l, r) = (&p.regions[0], &p.regions[1]);
        let n = Point::new(1.0, 0.0, 0.0);
        assert_eq!(l.velocity.dot(&n), r.velocity.dot(&n));
        // Lambda grad u . n with grad u parallel to (1,1,1)
        let g = Point::new(1.0, 1.0, 1.0);
        assert_eq!((l.diffusion * g).dot(&n), (r.diffusion * g).dot(&n));
    }

    #[test]
    fn test1_right_tensor_is_positive_definite() {
        let p = make_test1();
        let ev = eigenvalues(&p.regions[1].diffusion, 3);
        assert!(ev[0] > 0.0, "{ev:?}");
        assert!(p.declared.lambda_lower > 0.0 && p.declared.lambda_lower <= 1.0);
    }

    /// Residual of the strong equation at `x`, by central finite differences on the exact solution.
    fn strong_residual(p: &ProblemSpec, x: Point, t: f64) -> f64 {
        let u = |y: &Point, s: f64| p.exact.as_ref().unwrap().eval(y, s).unwrap();
        let h = 1e-4;
        let reg = p.region(&x);
        let dt = (p.beta.value(u(&x, t + h)) - p.beta.value(u(&x, t - h))) / (2.0 * h);
        let e = |i: usize| Point::from_fn(|j, _| if i == j { h } else { 0.0 });
        let mut hess = Tensor::zeros();
        for i in 0..3 {
            for j in 0..3 {
                hess[(i, j)] = (u(&(x + e(i) + e(j)), t) - u(&(x + e(i) - e(j)), t) - u(&(x - e(i) + e(j)), t)
                    + u(&(x - e(i) - e(j)), t))
                    / (4.0 * h * h);
            }
        }
        let grad = Point::from_fn(|i, _| (u(&(x + e(i)), t) - u(&(x - e(i)), t)) / (2.0 * h));
        let diffusion = (reg.diffusion.component_mul(&hess)).sum();
        let q = p.source.eval(&x, t).unwrap();
        dt - diffusion + reg.velocity.dot(&grad) + p.reaction.value(u(&x, t)) - q
    }

    #[test]
    fn test1_exact_solution_satisfies_equation() {
        let p = make_test1();
        for x in
            [Point::new(0.3, 0.4, 0.6), Point::new(0.8, 0.9, 0.2), Point::new(1.3, 0.5, 0.5), Point::new(1.9, 0.1, 0.8)]
        {
            for t in [0.1, 0.5, 0.9] {
                let r = strong_residual(&p, x, t);
                assert!(r.abs() <= 1e-6, "x = {x:?}, t = {t}: {r}");
            }
        }
    }

    #[test]
    fn test2_exact_values() {
        let q = Test2Params::default();
        assert_eq!(q.exact(q.front(0.3), 0.3), 0.0);
        assert!((q.exact(0.0, 0.0) - (1.0 - (-8f64).exp()).powi(2)).abs() < 1e-15);
        assert!((q.exact(0.0, 0.0) - 0.99933).abs() < 1e-5);
        assert_eq!(q.exact(0.9, 0.0), 0.0);
    }

    #[test]
    fn test2_boundary_and_coefficients() {
        let p = make_test2(Test2Params { delta: 1e-4, ..Default::default() }).unwrap();
        assert_eq!(p.boundary.mode(&Point::new(-1.0, 0.0, 0.0)), BoundaryMode::Dirichlet);
        assert_eq!(p.boundary.mode(&Point::new(1.0, 0.0, 0.0)), BoundaryMode::Dirichlet);
        for n in [Point::new(0.0, 1.0, 0.0), Point::new(0.0, 0.0, -1.0)] {
            assert_eq!(p.boundary.mode(&n), BoundaryMode::ZeroFlux);
        }
        let c = p.eval_coefficients(&Point::new(0.1, 0.9, 0.3), 0.4).unwrap();
        assert_eq!(c.diffusion, Tensor::identity() * 1e-4);
        assert!(make_test2(Test2Params { delta: 0.0, ..Default::default() }).is_err());
    }
}
