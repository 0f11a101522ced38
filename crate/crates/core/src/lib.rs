//! Translation-invariant splitting Gibbs measures of a four-interaction
//! spin model with spin space [0,1] on the order-2 Cayley tree.
//!
//! Such measures are generated by the positive continuous solutions of a
//! single nonlinear integral equation, the fixed-point equation of the
//! normalized quadratic operator H built from the model kernel K. This
//! crate solves that equation two independent ways and cross-validates
//! them:
//!
//! * [`reduction`]: for rank-2 separable kernels
//!   K(t,u,v) = ψ1(t)φ1(u) + ψ2(t)φ2(v), the problem reduces exactly to a
//!   plane quadratic map, then to the positive roots of a cubic, which a
//!   total sign-pattern classifier counts before any root is computed.
//! * [`operator`]: a discretized realization of the integral operator
//!   on a Gauss-Legendre grid with a multistart Picard oracle; the only
//!   route available for general exponential kernels, and the
//!   independent check for every analytic prediction.
//!
//! Supporting modules: [`expr`] (the expression mini-language all model
//! functions are written in), [`kernel`] (kernel construction and
//! validation), [`quadrature`] (deterministic Gauss-Legendre rules).

pub mod expr;
pub mod kernel;
pub mod operator;
pub mod quadrature;
pub mod reduction;

pub use expr::{Bindings, ExpressionAst, Var};
pub use kernel::{DegenerateKernel, GeneralKernel, Kernel, ModelParams, PositivityReport};
pub use operator::{
    apply_h, apply_l, eigen_check, iterate_h, multistart_solve, GridFunction, KernelTable,
    MultistartOptions, MultistartOutcome, SolveResult,
};
pub use quadrature::{gauss_legendre, integrate_1d, integrate_2d, QuadratureRule};
pub use reduction::{
    analyze, build_cubic, classify, compute_coefficients, h_from_l, l_fixed_points,
    positive_roots, reconstruct_plane_point, ClassificationReport, CubicCase, CubicPolynomial,
    CubicRoot, HFixedPoint, LFixedPoint, PlaneFixedPoint, QuadraticSystem, ReductionOutcome,
};
