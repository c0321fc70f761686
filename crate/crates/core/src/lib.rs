//! Solver library for linearly constrained multi-block convex composite
//! optimization.
//!
//! The centerpiece is ALPDSN, an augmented-Lagrangian primal-dual semismooth
//! Newton method: the nonsmooth blocks of the objective are replaced by their
//! Moreau envelopes, which turns the optimality conditions into a semismooth
//! nonlinear system `F(w) = 0` in the primal variables and multipliers. The
//! solver drives `‖F‖` to zero with regularized Newton steps accepted by a
//! nonmonotone residual test.
//!
//! The crate is organized bottom-up:
//!
//! * [`linop`] — matrix-free linear operators with adjoints (dense, sparse,
//!   FFT convolutions, finite differences, sampling, stacking).
//! * [`tsvd`] — third-order tensor algebra: t-product, t-SVD, tensor
//!   singular-value thresholding and its generalized Jacobian.
//! * [`prox`] — proximal operators, Moreau envelopes and Clarke generalized
//!   Jacobian elements for the supported nonsmooth functions.
//! * [`alcore`] — the saddle function Φ, the residual map F, Jacobian
//!   element assembly and the reduced (Schur-complement) Newton system.
//! * [`newton`] — the ALPDSN iteration with the τ line search and a
//!   transpose-free QMR inner solver.
//! * [`firstorder`] — PD3O and Condat–Vu baselines used to produce
//!   reference optima and matvec-count comparisons.
//! * [`apps`] — problem builders for image restoration and corrected
//!   tensor-nuclear-norm completion, plus evaluation metrics and file I/O.

pub mod alcore;
pub mod apps;
pub mod firstorder;
pub mod linop;
pub mod newton;
pub mod prox;
pub mod tsvd;

mod util;

pub use util::rng_from_seed;
