//! Reset/step facade.
//!
//! A step runs a fixed pipeline: decode the action and move the light,
//! collect the photons the light reaches, grow every plant from those
//! photons, score the task, advance the step counter and render.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::light::{apply_light_action, illuminated, LightSource};
use crate::params::GrowthParams;
use crate::raster::render;
use crate::sca::{grow_plants, PhotonField, PlantState};
use crate::shapes::DigitSet;
use crate::task::{evaluate_reward, init_episode, Difficulty, LayoutConfig, Target, TaskKind};

/// Steps per episode.
pub const EPISODE_LENGTH: usize = 50;

pub const BEAM_ACTIONS: usize = 5;
pub const SPOT_ACTIONS: usize = 7;

/// Discrete beam actions.
pub mod beam {
    pub const LEFT: usize = 0;
    pub const RIGHT: usize = 1;
    pub const STAY: usize = 2;
    pub const WIDEN: usize = 3;
    pub const NARROW: usize = 4;
}

/// Discrete spotlight actions.
pub mod spot {
    pub const LEFT: usize = 0;
    pub const RIGHT: usize = 1;
    pub const UP: usize = 2;
    pub const DOWN: usize = 3;
    pub const GROW: usize = 4;
    pub const SHRINK: usize = 5;
    pub const STAY: usize = 6;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionMode {
    Discrete,
    Continuous,
}

impl std::str::FromStr for ActionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discrete" => Ok(ActionMode::Discrete),
            "continuous" => Ok(ActionMode::Continuous),
            other => Err(Error::InvalidConfig(format!("unknown action mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Discrete(usize),
    /// Both components in `[-1, 1]`.
    Continuous {
        velocity: f64,
        width: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionSpace {
    Discrete(usize),
    Continuous { dims: usize, low: f64, high: f64 },
}

impl ActionSpace {
    pub fn contains(&self, action: &Action) -> bool {
        match (*self, *action) {
            (ActionSpace::Discrete(n), Action::Discrete(k)) => k < n,
            (ActionSpace::Continuous { low, high, .. }, Action::Continuous { velocity, width }) => {
                [velocity, width].iter().all(|v| v.is_finite() && (low..=high).contains(v))
            }
            _ => false,
        }
    }
}

/// Action space of `kind` under `mode`. The spotlight has no continuous form.
pub fn action_space(kind: &TaskKind, mode: ActionMode) -> Result<ActionSpace> {
    match (kind.uses_spotlight(), mode) {
        (false, ActionMode::Discrete) => Ok(ActionSpace::Discrete(BEAM_ACTIONS)),
        (true, ActionMode::Discrete) => Ok(ActionSpace::Discrete(SPOT_ACTIONS)),
        (false, ActionMode::Continuous) => Ok(ActionSpace::Continuous { dims: 2, low: -1.0, high: 1.0 }),
        (true, ActionMode::Continuous) => {
            Err(Error::UnsupportedMode { task: kind.name().into(), mode: "continuous".into() })
        }
    }
}

/// Light change `(delta_x, delta_y, delta_size)` in pixels for an action.
///
/// Discrete moves and size changes use the light displacement. Continuous
/// components are scaled by twice the displacement and rounded to whole
/// pixels, so every discrete beam move has a continuous equivalent.
pub fn decode_action(action: &Action, spotlight: bool, displacement: f64) -> (f64, f64, f64) {
    let d = displacement;
    match *action {
        Action::Discrete(k) if !spotlight => match k {
            beam::LEFT => (-d, 0.0, 0.0),
            beam::RIGHT => (d, 0.0, 0.0),
            beam::WIDEN => (0.0, 0.0, d),
            beam::NARROW => (0.0, 0.0, -d),
            _ => (0.0, 0.0, 0.0),
        },
        Action::Discrete(k) => match k {
            spot::LEFT => (-d, 0.0, 0.0),
            spot::RIGHT => (d, 0.0, 0.0),
            spot::UP => (0.0, d, 0.0),
            spot::DOWN => (0.0, -d, 0.0),
            spot::GROW => (0.0, 0.0, d),
            spot::SHRINK => (0.0, 0.0, -d),
            _ => (0.0, 0.0, 0.0),
        },
        Action::Continuous { velocity, width } => {
            let scale = 2.0 * d;
            ((velocity * scale).round(), 0.0, (width * scale).round())
        }
    }
}

/// Continuous counterpart of a discrete beam action.
pub fn beam_action_to_continuous(k: usize) -> Action {
    let (velocity, width) = match k {
        beam::LEFT => (-0.5, 0.0),
        beam::RIGHT => (0.5, 0.0),
        beam::WIDEN => (0.0, 0.5),
        beam::NARROW => (0.0, -0.5),
        _ => (0.0, 0.0),
    };
    Action::Continuous { velocity, width }
}

/// Row-major RGB image, top row first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

/// Diagnostic counters returned with each step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub branch_counts: Vec<usize>,
    pub new_branches: Vec<usize>,
    pub tip_count: usize,
    pub alive_photons: usize,
    pub illuminated: usize,
    pub light: LightSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Complete simulation state. Stepping depends on nothing else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeState {
    pub task: TaskKind,
    pub difficulty: Difficulty,
    pub seed: u64,
    pub step: usize,
    pub width: usize,
    pub height: usize,
    pub plants: Vec<PlantState>,
    pub photons: PhotonField,
    pub light: LightSource,
    pub target: Target,
    /// Index of the digit image used for shape targets.
    pub shape_index: Option<usize>,
    pub params: GrowthParams,
    pub done: bool,
    /// Reward after the most recent step (or at reset).
    pub last_reward: f64,
}

impl EpisodeState {
    pub fn observe(&self) -> Observation {
        let fb = render(self);
        Observation { width: fb.width(), height: fb.height(), pixels: fb.into_bytes() }
    }

    pub fn info(&self, new_branches: Vec<usize>, illuminated: usize) -> StepInfo {
        StepInfo {
            branch_counts: self.plants.iter().map(PlantState::branch_count).collect(),
            new_branches,
            tip_count: self.plants.iter().map(|p| p.tips().len()).sum(),
            alive_photons: self.photons.alive_count(),
            illuminated,
            light: self.light,
        }
    }

    /// Advances one step. The action must belong to `space`.
    pub fn step(&mut self, action: &Action, space: &ActionSpace) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::SteppedAfterDone);
        }
        if !space.contains(action) {
            return Err(Error::InvalidAction(format!("{action:?} is not in {space:?}")));
        }
        let (dx, dy, ds) = decode_action(action, self.task.uses_spotlight(), self.params.light_displacement_px);
        self.light = apply_light_action(&self.light, dx, dy, ds, self.width as f64, self.height as f64);

        let lit = illuminated(&self.photons, &self.light, &self.plants);
        let new_branches = grow_plants(&mut self.plants, &mut self.photons, &lit, &self.params);
        debug_assert!(self.plants.iter().all(|p| p.rasterize() == *p.occupancy()));

        self.last_reward = evaluate_reward(&self.plants, &self.target);
        self.step += 1;
        self.done = self.step == EPISODE_LENGTH;
        Ok(StepOutcome {
            observation: self.observe(),
            reward: self.last_reward,
            done: self.done,
            info: self.info(new_branches, lit.len()),
        })
    }
}

/// Everything besides the task and seed that shapes an episode.
#[derive(Debug, Clone)]
pub struct EnvConfig {
    /// `None` uses the defaults for the task's resolution.
    pub params: Option<GrowthParams>,
    pub layout: LayoutConfig,
    pub action_mode: ActionMode,
    pub digits: Arc<DigitSet>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            params: None,
            layout: LayoutConfig::default(),
            action_mode: ActionMode::Discrete,
            digits: DigitSet::bundled(),
        }
    }
}

impl EnvConfig {
    pub fn params_for(&self, kind: &TaskKind) -> GrowthParams {
        self.params.clone().unwrap_or_else(|| GrowthParams::for_resolution(kind.resolution()))
    }
}

/// One environment instance bound to a task, difficulty and action mode.
#[derive(Debug, Clone)]
pub struct Environment {
    kind: TaskKind,
    difficulty: Difficulty,
    config: EnvConfig,
    space: ActionSpace,
    state: EpisodeState,
}

impl Environment {
    /// Creates the environment and resets it with `seed`.
    pub fn new(kind: TaskKind, difficulty: Difficulty, config: EnvConfig, seed: u64) -> Result<(Self, Observation)> {
        let space = action_space(&kind, config.action_mode)?;
        let state = Self::initial_state(&kind, difficulty, &config, seed)?;
        let obs = state.observe();
        Ok((Self { kind, difficulty, config, space, state }, obs))
    }

    fn initial_state(kind: &TaskKind, difficulty: Difficulty, config: &EnvConfig, seed: u64) -> Result<EpisodeState> {
        init_episode(kind, seed, &config.params_for(kind), difficulty, &config.layout, &config.digits)
    }

    pub fn reset(&mut self, seed: u64) -> Result<Observation> {
        self.state = Self::initial_state(&self.kind, self.difficulty, &self.config, seed)?;
        Ok(self.state.observe())
    }

    pub fn step(&mut self, action: &Action) -> Result<StepOutcome> {
        self.state.step(action, &self.space)
    }

    pub fn action_space(&self) -> ActionSpace {
        self.space
    }

    pub fn action_mode(&self) -> ActionMode {
        self.config.action_mode
    }

    pub fn state(&self) -> &EpisodeState {
        &self.state
    }

    pub fn kind(&self) -> &TaskKind {
        &self.kind
    }

    pub fn difficulty(&self) -> Difficulty {
        self.difficulty
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    /// Replaces the current state, e.g. to resume from a snapshot.
    pub fn restore(&mut self, state: EpisodeState) {
        self.state = state;
    }
}
