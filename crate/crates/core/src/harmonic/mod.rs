//! Harmonic functions on horns by separation into spherical harmonics.

mod checks;
mod field;
mod global;
mod ode;
pub mod radial;

pub use checks::{
    admissible_exponent, ball_sup, cheng_yau_check, gradient_sup, three_circle_check,
    three_circle_sweep, weak_residual, ChengYau, ThreeCircle, ThreeCircleSweep, WeakResidual,
    WEAK_TOLERANCE,
};
pub use field::{
    constant_data, dirichlet_solve, single_degree, y10, BoundaryCoeffs, HarmonicField, ModeTerm,
    DEFAULT_K_MAX, MAX_DEGREE,
};
pub use global::{
    global_construct_with, global_harmonic_construct, sup_difference, GlobalConstruction,
    CONVERGENCE_THRESHOLD,
};
pub use ode::{integrate_riccati, Node, RiccatiOptions};
pub use radial::{
    cone_exponents, default_span, eta_relation_exponents, frozen_root, indicial_exponents,
    radial_ode_coefficients, solve_radial, solve_radial_with, RadialCoefficients, RadialMode,
    RadialSample, WkbAsymptotic,
};
