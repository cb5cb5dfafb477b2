//! Reachability analysis for linear hybrid systems via Cartesian block
//! decomposition. Flowpipes, guard intersections, assignments, clustering and
//! fixpoint checks are all performed in low-dimensional subspaces.

pub mod decomposition;
pub mod geometry;
pub mod hybrid;
pub mod lp;
pub mod lti;
pub mod models;

pub use decomposition::{Block, BlockStructure, DecomposedSet, Template};
pub use geometry::{HPolyhedron, HalfSpace, Hyperrectangle, Interval, LazySet, SetError};
pub use hybrid::{HybridAutomaton, ReachConfig, ReachResult, SymbolicState, Verdict};
pub use lti::{DiscretizedSystem, Flowpipe, LTISystem};
