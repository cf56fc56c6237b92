//! Hybrid finite volume solver for degenerate parabolic
//! convection-reaction-diffusion equations
//!
//! ```text
//! d beta(u)/dt - div(Lambda grad u) + div(V u) + F(u) = q
//! ```
//!
//! on general, possibly nonmatching, polyhedral meshes. Cell and face
//! unknowns are coupled through a stabilized piecewise-constant gradient,
//! convection uses partial upwinding against face values, and each implicit
//! time step is solved by Newton's method in the variable `w = beta(u)` with
//! optional elimination of the cell unknowns.

pub mod discretization;
pub mod expr;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod problem;
pub mod solver;
pub mod verification;
