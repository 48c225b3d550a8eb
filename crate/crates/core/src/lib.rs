//! Knowledge-graph embeddings on the pseudo-hyperboloid.
//!
//! Entities live on the manifold of points with pseudo-norm `-alpha^2` in a
//! signature-`(p, q)` space. Each relation is a pseudo-orthogonal operator
//! built from Givens rotations, Givens reflections and hyperbolic boosts.

pub mod cli;
pub mod eval;
pub mod geometry;
pub mod kgdata;
pub mod model;
pub mod operators;
pub mod training;
