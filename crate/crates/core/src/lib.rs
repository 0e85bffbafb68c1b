//! Phototrope: a deterministic plant-growth control environment.
//!
//! A 2D plant is grown with the space colonization algorithm. Scattered
//! photons act as attraction points, a movable light source decides which
//! photons are visible to the plant, and an agent moves the light to steer
//! growth toward a goal, toward several plants fairly, or into a digit shape.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`] and [`params`]: points, vectors and the tunable constants.
//! - [`sca`]: photon assignment, growth direction and the growth step.
//! - [`light`]: light sources, photon scattering and shading.
//! - [`raster`]: occupancy masks, frame buffers and observation rendering.
//! - [`task`] and [`shapes`]: task layouts, reward functions, digit targets.
//! - [`env`]: the reset/step facade with action decoding.
//! - [`agents`]: random and scripted oracle policies.
//! - [`runner`], [`config`], [`export`]: batch execution, records, settings
//!   and image export used by the command-line tool.

pub mod agents;
pub mod config;
pub mod env;
pub mod error;
pub mod export;
pub mod geometry;
pub mod light;
pub mod params;
pub mod raster;
pub mod rng;
pub mod runner;
pub mod sca;
pub mod shapes;
pub mod task;

pub use agents::{OracleConfig, Policy, PolicyKind};
pub use env::{Action, ActionMode, ActionSpace, EnvConfig, Environment, EpisodeState, Observation, StepInfo};
pub use error::{Error, Result};
pub use geometry::{Point, Vec2};
pub use light::LightSource;
pub use params::GrowthParams;
pub use sca::{PhotonField, PlantState, Segment};
pub use task::{Difficulty, ShapeSpec, Target, TaskKind};

/// Engine version recorded in episode headers.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
