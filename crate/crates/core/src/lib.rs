//! Exact and numerical toolkit for asymptotically locally Hermitian (ALH*)
//! gravitational instantons and their model metrics near infinity.
//!
//! The crate is organised bottom-up:
//!
//! * [`ratfun`]: exact multivariate rational functions over Q.
//! * [`geometry`]: metrics on the boundary chart and their curvature.
//! * [`forms`]: differential forms, the Hodge star and the self-dual basis.
//! * [`operators`]: structure vector fields, Laplacians, mode projection
//!   and blow-up lifts.
//! * [`indicial`]: indicial polynomials, roots and Fredholm weights.
//! * [`modes`]: graded-mesh boundary value solver and weighted norms.
//! * [`hk`]: hyperKaehler triples, gauge fixing and deformation families.
//! * [`cohomology`]: table-driven L2 cohomology and moduli dimensions.

pub mod cohomology;
pub mod forms;
pub mod geometry;
pub mod hk;
pub mod indicial;
pub mod linalg;
pub mod modes;
pub mod operators;
pub mod ratfun;
