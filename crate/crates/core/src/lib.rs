//! Event-traffic engine.
//!
//! Assigns baseline and event-perturbed vehicle demand to a road network
//! under several behavioural scenarios and evaluates demand-management
//! strategies that move trips onto rapid transit.

pub mod assign;
pub mod config;
pub mod cost;
pub mod demand;
pub mod error;
pub mod fixtures;
pub mod geo;
pub mod io;
pub mod metrics;
pub mod network;
pub mod path;
pub mod pipeline;
pub mod strategy;

pub use assign::{AssignmentResult, Assigner, LinkFlow, OdTime, PathFlow, Scenario, SolverConfig};
pub use cost::{bpr_integral, bpr_time, marginal_edge_cost, BprParams};
pub use demand::{DemandMatrix, OdPair, OdRecord, Zone};
pub use error::{Error, Result};
pub use network::{CapacityOverlay, Link, Node, RoadNetwork};
pub use path::{shortest_path, Route};
