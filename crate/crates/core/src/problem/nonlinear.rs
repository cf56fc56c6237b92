//! Scalar nonlinearities `beta` and `F`, odd-extended to negative arguments.

use super::finite_derivative;

/// Time-derivative nonlinearity together with its inverse `phi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Beta {
    /// `u`
    Linear,
    /// `u + sqrt(u)`
    LinearPlusSqrt,
    /// `sqrt(u)`
    Sqrt,
}

impl Beta {
    pub fn value(self, u: f64) -> f64 {
        match self {
            Beta::Linear => u,
            Beta::LinearPlusSqrt => u + u.signum() * u.abs().sqrt(),
            Beta::Sqrt => u.signum() * u.abs().sqrt(),
        }
    }

    /// `beta'(u)`; infinite at 0 for the square-root types.
    pub fn derivative(self, u: f64) -> f64 {
        match self {
            Beta::Linear => 1.0,
            Beta::LinearPlusSqrt => 1.0 + 0.5 / u.abs().sqrt(),
            Beta::Sqrt => 0.5 / u.abs().sqrt(),
        }
    }

    /// `phi = beta^{-1}`.
    pub fn inverse(self, w: f64) -> f64 {
        match self {
            Beta::Linear => w,
            Beta::LinearPlusSqrt => {
                // s = sqrt|u| solves s^2 + s = |w|; this form avoids cancellation
                let s = 2.0 * w.abs() / ((1.0 + 4.0 * w.abs()).sqrt() + 1.0);
                w.signum() * s * s
            }
            Beta::Sqrt => w.signum() * w * w,
        }
    }

    /// `phi'(w)`, finite everywhere.
    pub fn inverse_derivative(self, w: f64) -> f64 {
        match self {
            Beta::Linear => 1.0,
            Beta::LinearPlusSqrt => {
                let r = (1.0 + 4.0 * w.abs()).sqrt();
                2.0 * (2.0 * w.abs() / (r + 1.0)) / r
            }
            Beta::Sqrt => 2.0 * w.abs(),
        }
    }

    /// `beta'(u)` with the degenerate point replaced by a finite secant.
    pub fn derivative_finite(self, u: f64) -> f64 {
        finite_derivative(self.derivative(u), |x| self.value(x), u)
    }

    /// Whether a single positive lower slope holds on all of R.
    pub fn globally_coercive(self) -> bool {
        !matches!(self, Beta::Sqrt)
    }

    pub fn name(self) -> &'static str {
        match self {
            Beta::Linear => "linear",
            Beta::LinearPlusSqrt => "linear_plus_sqrt",
            Beta::Sqrt => "sqrt",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Beta::Linear, Beta::LinearPlusSqrt, Beta::Sqrt].into_iter().find(|b| b.name() == s)
    }
}

/// Reaction term `F`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Reaction {
    Zero,
    /// `c u`
    Linear(f64),
    /// `sqrt(u) / 2`
    HalfSqrt,
}

impl Reaction {
    pub fn value(self, u: f64) -> f64 {
        match self {
            Reaction::Zero => 0.0,
            Reaction::Linear(c) => c * u,
            Reaction::HalfSqrt => 0.5 * u.signum() * u.abs().sqrt(),
        }
    }

    pub fn derivative(self, u: f64) -> f64 {
        match self {
            Reaction::Zero => 0.0,
            Reaction::Linear(c) => c,
            Reaction::HalfSqrt => 0.25 / u.abs().sqrt(),
        }
    }

    pub fn derivative_finite(self, u: f64) -> f64 {
        finite_derivative(self.derivative(u), |x| self.value(x), u)
    }

    /// `d F(phi(w)) / dw`, finite where the chain rule gives `inf * 0`.
    pub fn derivative_in_w(self, beta: Beta, w: f64) -> f64 {
        let u = beta.inverse(w);
        let d = self.derivative(u) * beta.inverse_derivative(w);
        finite_derivative(d, |x| self.value(beta.inverse(x)), w)
    }

    pub fn name(self) -> &'static str {
        match self {
            Reaction::Zero => "zero",
            Reaction::Linear(_) => "linear",
            Reaction::HalfSqrt => "half_sqrt",
        }
    }
}
