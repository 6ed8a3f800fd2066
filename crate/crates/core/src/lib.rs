//! First-passage percolation on random tessellations.
//!
//! The crate covers two families of models:
//!
//! * Poisson hyperplane tessellations, where passage times are sums of marks
//!   over the hyperplanes separating two points and the time constant has a
//!   closed form ([`hyperplane`], [`pht_fpp`]).
//! * Planar Poisson–Voronoi tessellations, where passage times are shortest
//!   paths in the marked cell-adjacency graph ([`voronoi`], [`tess_fpp`]).
//!
//! On top of these sit Monte Carlo checks of the graph-ball ergodic theorem
//! and Palm identities ([`ergodic`]) and lattice-animal tameness diagnostics
//! ([`tameness`]). Shared geometry lives in [`geometry`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod directional;
pub mod ergodic;
pub mod error;
pub mod geometry;
pub mod hyperplane;
pub mod marks;
pub mod pht_fpp;
pub mod polygon;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod tameness;
pub mod tess_fpp;
pub mod voronoi;

pub use directional::DirectionalDistribution;
pub use error::{Error, Result};
pub use geometry::{Covering, SphericalSector, Vector};
pub use hyperplane::{Hyperplane, PhtSample};
pub use marks::MarkDistribution;
pub use voronoi::Tessellation2D;
