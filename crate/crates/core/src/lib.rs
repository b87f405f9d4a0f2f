//! Explicit chirp matrices with the restricted isometry property.
//!
//! The crate builds chirp ensembles `u_{a,b}(x) = e_p(a x² + b x)/√p` over
//! index sets with controlled additive structure, measures their
//! restricted isometry behaviour at small scale, and solves the exact
//! linear program that bounds how far the construction beats the
//! square-root bottleneck.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod addcomb;
pub mod chirp;
pub mod number_theory;
pub mod exact;
pub mod io;
pub mod optimizer;
pub mod rip;
