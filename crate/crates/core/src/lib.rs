//! Numerical toolbox for switched nonsmooth dynamical systems.
//!
//! The crate is organized around a small set of building blocks:
//!
//! * [`hull`] — vertex-represented convex sets (support functions, membership,
//!   Carathéodory reduction, union hulls, and small linear programs). Every
//!   other module trades in these polytopes.
//! * [`fields`] — piecewise vector fields, switching signals, switched
//!   assembly, and sampling-based Krasovskii/Filippov regularization with a
//!   subsystem containment check.
//! * [`nonsmooth`] — piecewise-C¹ Lyapunov candidates and their Clarke
//!   gradients, returned as polytopes in state ⊕ time coordinates.
//! * [`lyap`] — generalized time derivatives (max–max, min–max, and reduced
//!   variants) and grid certification of non-strict common Lyapunov
//!   conditions.
//! * [`sim`] — fixed-step integration of switched fields and inclusion
//!   selections, with equivalent-control sliding, trajectory monitors, and
//!   built-in demonstration scenarios.
//!
//! All estimator and certification routines are pure functions of their
//! inputs (including the seed), so runs are reproducible and grid points can
//! be evaluated concurrently.

// Callback fields spell out their boxed signatures where they appear, and
// `!(x > 0.0)` guards must also reject NaN.
#![allow(clippy::type_complexity, clippy::neg_cmp_op_on_partial_ord)]

pub mod fields;
pub mod hull;
pub mod lyap;
pub mod nonsmooth;
pub mod parallel;
pub mod rng;
pub mod sim;

pub use hull::{ConvexWeights, Polytope};
