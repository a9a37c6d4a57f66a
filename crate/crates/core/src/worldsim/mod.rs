//! Maze worlds: generation, decoration, agent dynamics and path planning.

mod dynamics;
mod generate;
mod map;
mod path;
mod types;

use alloc::string::String;

pub use dynamics::{execute, step, Execution};
pub use generate::{decorate, generate_maze, WorldConfig};
pub use map::{compute_halls, Area, EdgeAttr, Hall, HallRun, WorldMap};
pub use path::{bfs_distances, path_to_actions, sample_endpoints, shortest_path, ENDPOINT_ATTEMPTS};
pub use types::{Action, Axis, Direction, Edge, FloorPattern, Item, Node, Outcome, Pose, StepResult, WallPainting};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WorldError {
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("no path between the endpoints")]
    NoPath,
    #[error("path nodes {index} and its predecessor are not adjacent")]
    InvalidPath { index: usize },
    #[error("no endpoint pair at least {min_dist} hops apart; resample the map")]
    EndpointsUnavailable { min_dist: usize },
}

/// Random 8×8-style world, used by tests and generators alike.
pub fn random_world<R: rand::Rng + ?Sized>(rng: &mut R, config: &WorldConfig) -> Result<WorldMap, WorldError> {
    let edges = generate_maze(config.width, config.height, rng)?;
    decorate(edges, rng, config)
}
