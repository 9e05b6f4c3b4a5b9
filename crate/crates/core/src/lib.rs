//! Monte Carlo simulator for k-nearest-neighbour satellite swarms.
//!
//! * [`geometry`]: unit-cube point clouds, exact k-NN and baseline queries
//! * [`graph`]: directed k-NN graphs, SCCs, in-component classification
//! * [`energy`]: transmission costs and the generalized gamma cost law
//! * [`protocol`]: energy budgets, pruning, job allocation, coverage
//! * [`harness`]: seeded campaigns over parameter grids
//! * [`output`]: CSV/JSON tables

pub mod energy;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod harness;
pub mod output;
pub mod protocol;
pub mod quadrature;

pub use error::{Result, SwarmError};
