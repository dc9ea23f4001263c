//! causebound: partial identification of causal effects from finite samples.
//!
//! Given an acyclic directed mixed graph and a dataset of discrete
//! observations, the engine bounds interventional queries, splits the bound
//! width into a non-identifiability core (which no amount of extra data can
//! shrink) and a finite-sample band (which more data does shrink), and turns
//! the split into a Return / Observe / Collect recommendation.
//!
//! Module map:
//! - [`graph`]: mixed graphs, orderings, confounded components.
//! - [`dist`]: probability tables, datasets, factorizations, sampling.
//! - [`confset`]: Hoeffding boxes around the empirical factorization and the
//!   ε-net of candidate joints inside them.
//! - [`canon`]: response-function parameterization of discrete mechanisms.
//! - [`lpsolve`]: dense two-phase simplex used by the exact bound path.
//! - [`bounds`]: per-distribution causal-effect bounds (closed form, LP,
//!   Lagrangian gradient trainer).
//! - [`decompose`]: aggregation of per-candidate bounds into the four
//!   quantities, inner region, outer band, and the decision.
//! - [`harness`]: synthetic-model generators, brute-force oracles, scripted
//!   experiment protocols.
//! - [`cli`]: command implementations behind the `causebound` binary.

pub mod bounds;
pub mod canon;
pub mod cli;
pub mod confset;
pub mod decompose;
pub mod dist;
pub mod graph;
pub mod harness;
pub mod lpsolve;
pub mod rng;

pub use bounds::BoundPair;
pub use confset::{ConfidenceBox, EpsilonNet};
pub use decompose::{Move, UncertaintyDecomposition};
pub use dist::{Dataset, DiscreteJoint};
pub use graph::Admg;
