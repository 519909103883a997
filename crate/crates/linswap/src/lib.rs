//! Linear-swap regret minimization and linear correlated equilibria over
//! convex bodies described by oracles.
//!
//! The crate is layered. [`geometry`] provides bodies and their oracles,
//! [`endo`] works with affine maps of a body into itself, [`ellipsoid`]
//! holds the central-cut engine, [`regret`] builds the online learner on
//! top of those, and [`equilibrium`] computes and verifies correlated
//! solutions of convex games.
//!
//! ```
//! use linswap::endo::{semi_separate, AffineMap, SemiSeparation};
//! use linswap::geometry::BoundedBody;
//! use nalgebra::dvector;
//!
//! let square = BoundedBody::cube(dvector![0.0, 0.0], dvector![1.0, 1.0]).unwrap();
//! let shift = AffineMap::translation(&dvector![2.0, 0.0]);
//! match semi_separate(&square, &shift, 1e-8).unwrap() {
//!     SemiSeparation::Cut(cut) => assert!(cut.violation(&shift) > 0.0),
//!     SemiSeparation::FixedPoint(_) => unreachable!("a translation has no fixed point"),
//! }
//! ```

// Tests written as `!(x <= bound)` reject NaN along with large values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ellipsoid;
pub mod endo;
pub mod equilibrium;
pub mod error;
pub mod geometry;
pub mod regret;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/bodies.md")]
    struct Bodies;
    #[doc = include_str!("../../../book/src/endomorphisms.md")]
    struct Endomorphisms;
    #[doc = include_str!("../../../book/src/ellipsoid.md")]
    struct EllipsoidChapter;
    #[doc = include_str!("../../../book/src/learning.md")]
    struct Learning;
    #[doc = include_str!("../../../book/src/equilibria.md")]
    struct Equilibria;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
