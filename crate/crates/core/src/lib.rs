//! Entanglement percolation on small-world quantum networks.
//!
//! The crate builds the network families ([`generators`]), rewrites them with
//! quantum pre-processing ([`preprocess`]), runs Monte Carlo bond percolation
//! ([`percolation`]) and certifies the quantum-walk GHZ fusion that the walk
//! rewrite relies on ([`walk`]). [`experiments`] holds the figure recipes used
//! by the `qperc` binary.

pub mod experiments;
pub mod generators;
pub mod graph;
pub mod percolation;
pub mod preprocess;
pub mod rng;
pub mod union_find;
pub mod walk;

pub use graph::{
    analytic_threshold, degree_stats, parse, serialize, DegreeDistribution, DegreeStats, EdgeOrigin, EdgeState,
    EntangledGraph, NodeFlag,
};
pub use percolation::{
    estimate_threshold, sweep, BidirectionalRule, GccNormalization, PercolationConfig, PercolationCurve, ThresholdMethod,
};
pub use preprocess::{qswap_directed, qswap_undirected, walk_rewrite, SwapReport, WalkMode};
