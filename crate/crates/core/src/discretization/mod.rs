//! Hybrid cell/face discretization: discrete gradients, local flux
//! matrices, upwind convective fluxes, bilinear forms and norms.

mod field;
mod forms;
mod gradient;
mod operator;

pub use field::{project, DiscreteField};
pub use forms::{bilinear_f, bilinear_f_by_cones, bilinear_t, gradient_l2, norm_1pm, seminorm_x};
pub use gradient::{cell_gradient, stabilization, stabilized_gradient, Alpha, GradientField};
pub use operator::{
    assemble_cell_operators, convective_flux, diffusive_flux, gradient_coefficients, upwind_value, CellOperators,
    CoefficientField, LocalOperator, UniformCoefficients,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiscretizationError {
    #[error("diffusion tensor at cell {cell} is not symmetric (relative asymmetry {asymmetry:e})")]
    AsymmetricDiffusion { cell: usize, asymmetry: f64 },
    #[error("diffusion tensor at cell {cell} has negative eigenvalue {eigenvalue}")]
    NegativeDiffusion { cell: usize, eigenvalue: f64 },
    #[error("norm exponent must be >= 1, got {0}")]
    NormExponent(f64),
}
