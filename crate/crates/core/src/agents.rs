//! Scripted policies: uniform random and one privileged oracle per task.
//!
//! Oracles read the full episode state, target included, and never draw
//! random numbers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{beam, beam_action_to_continuous, spot, Action, ActionMode, ActionSpace, EpisodeState};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::light::LightSource;
use crate::raster::PixelMask;
use crate::rng::{self, EngineRng, Stream};
use crate::task::{distance, Target, TaskKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Random,
    Oracle,
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(PolicyKind::Random),
            "oracle" => Ok(PolicyKind::Oracle),
            other => Err(Error::InvalidConfig(format!("unknown policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// The goal oracle stops narrowing the beam at this width.
    pub min_beam_width_px: f64,
    /// Steps between focus switches in the fairness oracle.
    pub fair_period: usize,
    /// Distance gap beyond which the fairness oracle favours the trailing plant.
    pub fair_lag_px: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { min_beam_width_px: 11.0, fair_period: 3, fair_lag_px: 5.0 }
    }
}

/// Uniform choice over the action space.
pub fn random_action<R: Rng + ?Sized>(rng: &mut R, space: &ActionSpace) -> Action {
    match *space {
        ActionSpace::Discrete(n) => Action::Discrete(rng.random_range(0..n)),
        ActionSpace::Continuous { low, high, .. } => {
            Action::Continuous { velocity: rng.random_range(low..=high), width: rng.random_range(low..=high) }
        }
    }
}

fn goal_of(state: &EpisodeState) -> Option<Point> {
    match state.target {
        Target::Goal(g) => Some(g),
        Target::Shape(_) => None,
    }
}

/// Node of `plant` closest to `goal`.
fn closest_node(nodes: &[Point], goal: Point) -> Point {
    *nodes
        .iter()
        .min_by(|a, b| distance(**a, goal).total_cmp(&distance(**b, goal)))
        .expect("plants have at least one segment")
}

/// Beam action that moves its centre toward `x`, or `None` when already there.
fn beam_toward(light: &LightSource, x: f64, tolerance: f64) -> Option<usize> {
    let c = light.center_x();
    if x < c - tolerance {
        Some(beam::LEFT)
    } else if x > c + tolerance {
        Some(beam::RIGHT)
    } else {
        None
    }
}

/// Greedy pursuit for the goal and find tasks.
///
/// Keeps the closest tip under the beam and drags the beam toward the goal
/// column, narrowing it once the tip is within one beam width of the goal.
pub fn oracle_goal(state: &EpisodeState, config: &OracleConfig) -> usize {
    let Some(goal) = goal_of(state) else { return beam::STAY };
    let LightSource::Beam { x, width } = state.light else { return beam::STAY };
    let tip = closest_node(&state.plants[0].node_positions(), goal);
    let step = state.params.light_displacement_px;
    if tip.x < x {
        return beam::LEFT;
    }
    if tip.x > x + width {
        return beam::RIGHT;
    }
    if (tip.x - goal.x).abs() <= width && width - step >= config.min_beam_width_px {
        return beam::NARROW;
    }
    // lead the tip toward the goal while keeping it inside the beam
    let lead = (goal.x - tip.x).clamp(-(width / 2.0 - 1.0).max(0.0), (width / 2.0 - 1.0).max(0.0));
    beam_toward(&state.light, tip.x + lead, step / 2.0).unwrap_or(beam::STAY)
}

/// Beam action that moves toward covering `[lo, hi]`: width first, then
/// position. `None` once both are within half a displacement.
fn beam_seek(state: &EpisodeState, lo: f64, hi: f64) -> Option<usize> {
    let LightSource::Beam { width, .. } = state.light else { return None };
    let half_step = state.params.light_displacement_px / 2.0;
    let want = (hi - lo).max(crate::light::MIN_LIGHT_SIZE_PX);
    if want > width + half_step {
        return Some(beam::WIDEN);
    }
    if want < width - half_step {
        return Some(beam::NARROW);
    }
    beam_toward(&state.light, (lo + hi) / 2.0, half_step)
}

/// Fairness oracle with a private alternation phase.
#[derive(Debug, Clone, Default)]
pub struct FairOracle {
    focus: usize,
    lagging: bool,
}

impl FairOracle {
    /// The beam covers every stem column and the goal column, so each plant
    /// is lit on its goal side. Every `fair_period` steps the focus moves to
    /// the plant farthest from the goal (ties continue the rotation); while
    /// that plant trails the closest one by more than `fair_lag_px`, the beam
    /// is displaced one step toward it.
    pub fn act(&mut self, state: &EpisodeState, config: &OracleConfig) -> usize {
        let Some(goal) = goal_of(state) else { return beam::STAY };
        let n = state.plants.len();
        let d: Vec<f64> =
            state.plants.iter().map(|p| distance(closest_node(&p.node_positions(), goal), goal)).collect();
        if state.step.is_multiple_of(config.fair_period.max(1)) {
            let far = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let near = d.iter().copied().fold(f64::INFINITY, f64::min);
            let tied: Vec<usize> = (0..n).filter(|&k| far - d[k] <= 1e-9).collect();
            self.focus =
                if tied.len() == 1 { tied[0] } else { *tied.iter().find(|&&k| k > self.focus).unwrap_or(&tied[0]) };
            self.lagging = far - near > config.fair_lag_px;
        }
        let stems: Vec<f64> = state.plants.iter().map(|p| p.segments()[0].start.x).collect();
        let lo = stems.iter().copied().fold(goal.x, f64::min);
        let hi = stems.iter().copied().fold(goal.x, f64::max);
        let shift = if self.lagging {
            let focus_x = closest_node(&state.plants[self.focus].node_positions(), goal).x;
            (focus_x - (lo + hi) / 2.0).signum() * state.params.light_displacement_px
        } else {
            0.0
        };
        beam_seek(state, lo + shift, hi + shift).unwrap_or(beam::STAY)
    }

    pub fn focus(&self) -> usize {
        self.focus
    }
}

fn mask_pixel(mask: &PixelMask, p: Point) -> Option<(usize, usize)> {
    let (i, j) = (p.x.round(), p.y.round());
    let inside = i >= 0.0 && j >= 0.0 && (i as usize) < mask.width() && (j as usize) < mask.height();
    inside.then_some((i as usize, j as usize))
}

/// Next point for the spotlight: the lowest alive photon lying on an
/// uncovered mask pixel within `reach` of a growth node. When none is in
/// reach, the in-mask photon nearest to the plant is used instead.
fn next_shape_photon(state: &EpisodeState, mask: &PixelMask, reach: f64) -> Option<Point> {
    let plant = &state.plants[0];
    let nodes = plant.node_positions();
    let gap = |p: Point| nodes.iter().map(|n| n.distance_sq(p)).fold(f64::INFINITY, f64::min);
    let open: Vec<Point> = state
        .photons
        .photons
        .iter()
        .filter(|p| p.alive)
        .filter(|p| mask_pixel(mask, p.position).is_some_and(|(i, j)| mask.get(i, j) && !plant.occupancy().get(i, j)))
        .map(|p| p.position)
        .collect();
    let reach_sq = reach * reach;
    open.iter()
        .filter(|&&p| gap(p) <= reach_sq)
        .min_by(|a, b| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)))
        .or_else(|| open.iter().min_by(|a, b| gap(**a).total_cmp(&gap(**b))))
        .copied()
}

/// Horizontal and vertical stroke width through a mask pixel (the smaller).
fn stroke_width(mask: &PixelMask, i: usize, j: usize) -> usize {
    let run = |di: i64, dj: i64| {
        let mut n = 0;
        let (mut x, mut y) = (i as i64 + di, j as i64 + dj);
        while x >= 0
            && y >= 0
            && (x as usize) < mask.width()
            && (y as usize) < mask.height()
            && mask.get(x as usize, y as usize)
        {
            n += 1;
            x += di;
            y += dj;
        }
        n
    };
    (1 + run(1, 0) + run(-1, 0)).min(1 + run(0, 1) + run(0, -1))
}

/// Shape oracle: fills the digit bottom-up by moving the spotlight onto the
/// lowest uncovered mask pixel that still holds a photon the plant can reach.
/// An enlarged spotlight shrinks back once the stroke under it is no wider
/// than its diameter; a small one grows only where the stroke has room.
pub fn oracle_shape(state: &EpisodeState) -> usize {
    let Target::Shape(mask) = &state.target else { return spot::STAY };
    let LightSource::Spot { center, radius } = state.light else { return spot::STAY };
    let Some(target) = next_shape_photon(state, mask, state.params.radius_of_influence_px) else {
        return spot::STAY;
    };
    let step = state.params.light_displacement_px;
    let (dx, dy) = (target.x - center.x, target.y - center.y);
    if dx.hypot(dy) > radius.max(step / 2.0) {
        return if dx.abs() >= dy.abs() {
            if dx < 0.0 {
                spot::LEFT
            } else {
                spot::RIGHT
            }
        } else if dy < 0.0 {
            spot::DOWN
        } else {
            spot::UP
        };
    }
    let default_radius = crate::light::DEFAULT_SPOT_RADIUS_FRAC * state.width as f64;
    let (i, j) = mask_pixel(mask, target).expect("target lies on the mask");
    let stroke = stroke_width(mask, i, j) as f64;
    if radius > default_radius && stroke <= 2.0 * radius {
        return spot::SHRINK;
    }
    if radius < default_radius && stroke > 2.0 * (radius + step) {
        return spot::GROW;
    }
    spot::STAY
}

/// Oracle action for any task, as a discrete index.
#[derive(Debug, Clone, Default)]
pub struct Oracle {
    pub config: OracleConfig,
    fair: FairOracle,
}

impl Oracle {
    pub fn new(config: OracleConfig) -> Self {
        Self { config, fair: FairOracle::default() }
    }

    pub fn act_discrete(&mut self, state: &EpisodeState) -> usize {
        match state.task {
            TaskKind::GrowPlantToGoal | TaskKind::FindPlant => oracle_goal(state, &self.config),
            TaskKind::GrowMultiplePlants { .. } => self.fair.act(state, &self.config),
            TaskKind::GrowPlantToShape { .. } => oracle_shape(state),
        }
    }
}

/// A policy bound to one action space.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)] // one per episode; boxing buys nothing
pub enum Policy {
    Random { rng: EngineRng, space: ActionSpace },
    Oracle { oracle: Oracle, mode: ActionMode },
}

impl Policy {
    /// Random policies draw from the policy stream of `seed`.
    pub fn new(kind: PolicyKind, space: ActionSpace, seed: u64, config: OracleConfig) -> Self {
        let mode = match space {
            ActionSpace::Discrete(_) => ActionMode::Discrete,
            ActionSpace::Continuous { .. } => ActionMode::Continuous,
        };
        match kind {
            PolicyKind::Random => Policy::Random { rng: rng::stream(seed, Stream::Policy), space },
            PolicyKind::Oracle => Policy::Oracle { oracle: Oracle::new(config), mode },
        }
    }

    pub fn kind(&self) -> PolicyKind {
        match self {
            Policy::Random { .. } => PolicyKind::Random,
            Policy::Oracle { .. } => PolicyKind::Oracle,
        }
    }

    pub fn act(&mut self, state: &EpisodeState) -> Action {
        match self {
            Policy::Random { rng, space } => random_action(rng, space),
            Policy::Oracle { oracle, mode } => {
                let k = oracle.act_discrete(state);
                match mode {
                    ActionMode::Discrete => Action::Discrete(k),
                    ActionMode::Continuous => beam_action_to_continuous(k),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvConfig, Environment};
    use crate::rng::stream;
    use crate::task::{Difficulty, ShapeSpec};

    fn control_state(seed: u64) -> EpisodeState {
        Environment::new(TaskKind::GrowPlantToGoal, Difficulty::Random, EnvConfig::default(), seed)
            .unwrap()
            .0
            .state()
            .clone()
    }

    #[test]
    fn random_actions_are_uniform() {
        let mut rng = stream(1, Stream::Policy);
        let mut counts = [0usize; 5];
        for _ in 0..100_000 {
            let Action::Discrete(k) = random_action(&mut rng, &ActionSpace::Discrete(5)) else { unreachable!() };
            counts[k] += 1;
        }
        for c in counts {
            assert!((c as f64 / 100_000.0 - 0.2).abs() <= 0.01, "{counts:?}");
        }
    }

    #[test]
    fn random_actions_are_seeded_and_bounded() {
        let space = ActionSpace::Continuous { dims: 2, low: -1.0, high: 1.0 };
        let a: Vec<Action> = (0..50)
            .map({
                let mut r = stream(4, Stream::Policy);
                move |_| random_action(&mut r, &space)
            })
            .collect();
        let b: Vec<Action> = (0..50)
            .map({
                let mut r = stream(4, Stream::Policy);
                move |_| random_action(&mut r, &space)
            })
            .collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|x| space.contains(x)));
    }

    #[test]
    fn goal_oracle_pursues() {
        let mut s = control_state(1);
        let stem_x = s.plants[0].segments()[0].start.x;
        s.light = LightSource::Beam { x: (stem_x - 30.0).max(0.0), width: 10.0 };
        s.target = Target::Goal(Point::new(stem_x, 70.0));
        if stem_x > 10.0 {
            assert_eq!(oracle_goal(&s, &OracleConfig::default()), beam::RIGHT);
        }
        // light over the stem, target to the left
        s.light = LightSource::Beam { x: stem_x - 5.0, width: 10.0 };
        s.target = Target::Goal(Point::new(stem_x - 40.0, 70.0));
        assert_eq!(oracle_goal(&s, &OracleConfig::default()), beam::LEFT);
        // tip under a wide beam and close to the goal column: narrow
        s.light = LightSource::beam_centered(stem_x, 21.0, 84.0);
        s.target = Target::Goal(Point::new(stem_x + 2.0, 70.0));
        assert_eq!(oracle_goal(&s, &OracleConfig::default()), beam::NARROW);
    }

    #[test]
    fn fair_oracle_chases_the_far_plant() {
        let cfg = OracleConfig::default();
        let kind = TaskKind::GrowMultiplePlants { plants: 2 };
        let (env, _) = Environment::new(kind, Difficulty::Hard, EnvConfig::default(), 3).unwrap();
        let mut s = env.state().clone();
        // stems at 8 and 76; put the goal near plant 1 so plant 0 is farther
        s.target = Target::Goal(Point::new(60.0, 70.0));
        s.light = LightSource::beam_centered(42.0, 11.0, 84.0);
        let mut o = FairOracle::default();
        assert_eq!(o.act(&s, &cfg), beam::WIDEN);
        s.light = LightSource::beam_centered(42.0, 68.0, 84.0);
        assert_eq!(o.act(&s, &cfg), beam::LEFT);
        assert_eq!(o.focus(), 0);
        // equal distances: rotation continues from the current focus
        s.target = Target::Goal(Point::new(42.0, 70.0));
        s.step = 3;
        assert_eq!(o.act(&s, &cfg), beam::STAY);
        assert_eq!(o.focus(), 1);
        s.step = 6;
        o.act(&s, &cfg);
        assert_eq!(o.focus(), 0);
    }

    #[test]
    fn shape_oracle_moves_up_then_stays_when_done() {
        let kind = TaskKind::GrowPlantToShape { shape: ShapeSpec::Digit(3) };
        let (env, _) = Environment::new(kind, Difficulty::Easy, EnvConfig::default(), 2).unwrap();
        let mut s = env.state().clone();
        let Target::Shape(mask) = s.target.clone() else { unreachable!() };
        let t = next_shape_photon(&s, &mask, 8.4).unwrap();
        s.light = LightSource::Spot { center: Point::new(t.x, t.y - 10.0), radius: 2.8 };
        if t.y >= 10.0 {
            assert_eq!(oracle_shape(&s), spot::UP);
        }
        s.light = LightSource::Spot { center: t, radius: 2.8 };
        assert_eq!(oracle_shape(&s), spot::STAY);
        // a shape already covered by the plant leaves nothing to do
        s.target = Target::Shape(s.plants[0].occupancy().clone());
        assert_eq!(oracle_shape(&s), spot::STAY);
    }

    #[test]
    fn oracles_are_deterministic() {
        let s = control_state(9);
        let space = ActionSpace::Discrete(5);
        let mut a = Policy::new(PolicyKind::Oracle, space, 0, OracleConfig::default());
        let mut b = Policy::new(PolicyKind::Oracle, space, 99, OracleConfig::default());
        assert_eq!(a.act(&s), b.act(&s));
    }
}
