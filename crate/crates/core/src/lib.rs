//! Numerical toolkit for the Dirichlet problem of the quaternionic
//! Monge-Ampere equation
//!
//!   -det(u) + F(q, u) = 0  on a bounded domain in H^n,  u = g on the
//!   boundary,
//!
//! where det is the Moore determinant of the quaternionic Hessian and
//! the solution is understood in the viscosity sense. The crate
//! provides exact hyperhermitian matrix algebra, Cauchy-Fueter second
//! derivatives, sup/inf-convolution regularization, and a monotone
//! wide-stencil solver for the Bellman form of the operator.

pub mod diff_ops;
mod error;
pub mod grid;
pub mod hha;
pub mod properties;
pub mod quaternion;
pub mod regularization;
pub mod sampling;
pub mod solver;

pub use diff_ops::{
    delta_a, det_inequality_gap, ma_det, psh_check, quaternionic_hessian, real_hessian,
    DetInequalityGap, PshReport, PshWitness, QHessian, ScalarField,
};
pub use error::CoreError;
pub use grid::{Domain, GridFunction, NodeMask};
pub use hha::{
    inf_trace_value, is_psd, min_q_eigenvalue, moore_det, moore_det_oracle, q_eigenvalues,
    HyperhermitianMatrix, QEigenSpectrum, QMatrix,
};
pub use quaternion::{left_mult_matrix, QPoint, Quaternion};
pub use regularization::{
    inf_convolution, oscillation, perturbed_rhs, sup_convolution, PerturbSign, RhsFunction,
};
pub use solver::{
    bellman_residual, build_direction_set, comparison_check, discrete_delta_a, solve_dirichlet,
    ComparisonReport, DirectionMember, DirectionSet, DirichletProblem, InitStrategy, SolveReport,
    SolverParams,
};
