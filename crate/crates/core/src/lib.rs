//! Simulation toolkit for navigable small-world networks.
//!
//! Vertices are placed in the unit square by a spatial Poisson process (or on a
//! regular lattice), joined by a short-range base graph, and given long-range
//! shortcuts either by explicit probability laws or by the destination-sampling
//! rewiring dynamic. Greedy routing over the result is measured by the
//! [`experiment`] harness.

pub mod alias;
pub mod augment;
pub mod basegraph;
pub mod delaunay;
pub mod error;
pub mod experiment;
pub mod format;
pub mod population;
pub mod predicates;
pub mod rewire;
pub mod rng;
pub mod routing;
pub mod stats;

pub use augment::{PopularityDist, ShortcutTable};
pub use basegraph::{BaseGraph, Geometry};
pub use error::{Error, Result};
pub use population::{DensityModel, PointSet, RasterGrid};
pub use rewire::{RewireConfig, RewireReport};
pub use routing::{greedy_route, Outcome, Route};

/// Version string written into every output header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
