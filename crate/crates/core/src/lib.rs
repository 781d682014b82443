//! Range-constrained multi-robot task allocation coupled with a
//! guidance-point global path planner.
//!
//! * [`geometry`]: points, polygons, inflation, merging, intersection tests.
//! * [`planner`]: the global guidance-point planner.
//! * [`auction`]: reward model, lazy bids, and the greedy allocation loop.
//! * [`oracles`]: grid A*, visibility-graph Dijkstra, brute-force and
//!   straight-line baseline allocators.
//! * [`sim`]: scenario files, map generation and mission replay.

pub mod auction;
pub mod geometry;
pub mod oracles;
pub mod planner;
pub mod sim;

pub use geometry::{ObstacleSet, Point, Polygon, Segment};
pub use planner::{GosPlanner, PlannedPath};
