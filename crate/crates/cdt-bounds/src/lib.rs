//! Lower bounds for the two-constraint trust-region problem: minimize a
//! (possibly nonconvex) quadratic over the intersection of the unit ball and an
//! ellipsoid.
//!
//! The classical Lagrangian dual of this problem can leave a duality gap. This
//! crate computes the dual bound and then tightens it by relaxing the ellipsoid
//! constraint while keeping one or two supporting-hyperplane cuts of the
//! ellipsoid in the subproblem. Each relaxation is still solvable to global
//! optimality through trust-region subproblem machinery, and the resulting
//! bounds close much of the gap in practice — often all of it.
//!
//! Module map:
//!
//! - [`trs`] — trust-region subproblem kernel: global solves, the
//!   local-nonglobal minimizer, secular-equation utilities.
//! - [`model`] — problem data, feasibility checks, boundary projection, and
//!   supporting-hyperplane cuts of the ellipsoid.
//! - [`lagrangian`] — the relaxed subproblem for a fixed multiplier, with
//!   zero, one, or two cuts, plus its minimizer enumeration.
//! - [`bounds`] — the five bound drivers (dual, one-cut, optimized one-cut,
//!   two-cut, optimized two-cut), upper bounds, and gap certificates.
//! - [`io`] — instance files, seeded instance generation, and benchmark runs.

pub mod bounds;
mod error;
pub mod io;
pub mod lagrangian;
mod linalg;
pub mod model;
pub mod trs;

pub use error::CdtError;

/// Convenience result alias used across the crate.
pub type Result<T> = std::result::Result<T, CdtError>;
