//! The four tasks: layouts, targets, rewards and the digit curriculum.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::EpisodeState;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::light::{LightSource, DEFAULT_SPOT_RADIUS_FRAC};
use crate::params::{GrowthParams, DEFAULT_RESOLUTION, SHAPE_RESOLUTION};
use crate::raster::PixelMask;
use crate::rng::{self, Stream};
use crate::sca::PlantState;
use crate::shapes::{load_shape_target, DigitSet};

/// Digits ordered from easiest to hardest to grow.
pub const DIGIT_RANKING: [u8; 10] = [3, 6, 2, 1, 4, 5, 7, 8, 9, 0];
/// Episodes per curriculum block.
pub const CURRICULUM_BLOCK: usize = 2000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeSpec {
    Digit(u8),
    Mask(PixelMask),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum TaskKind {
    GrowPlantToGoal,
    FindPlant,
    GrowMultiplePlants { plants: usize },
    GrowPlantToShape { shape: ShapeSpec },
}

impl TaskKind {
    pub fn resolution(&self) -> u32 {
        match self {
            TaskKind::GrowPlantToShape { .. } => SHAPE_RESOLUTION,
            _ => DEFAULT_RESOLUTION,
        }
    }

    pub fn uses_spotlight(&self) -> bool {
        matches!(self, TaskKind::GrowPlantToShape { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::GrowPlantToGoal => "control",
            TaskKind::FindPlant => "find",
            TaskKind::GrowMultiplePlants { .. } => "fairness",
            TaskKind::GrowPlantToShape { .. } => "shape",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Easy,
    Hard,
    Random,
}

impl std::str::FromStr for Difficulty {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "easy" => Ok(Difficulty::Easy),
            "hard" => Ok(Difficulty::Hard),
            "random" => Ok(Difficulty::Random),
            other => Err(Error::InvalidConfig(format!("unknown difficulty {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Goal(Point),
    Shape(PixelMask),
}

/// Tunable geometry of the easy and hard layouts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutConfig {
    /// Distance of "extremity" stems and targets from the side walls.
    pub edge_margin_frac: f64,
    /// Minimum spacing of randomly placed stems.
    pub min_stem_separation_frac: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self { edge_margin_frac: 0.1, min_stem_separation_frac: 0.1 }
    }
}

pub fn distance(b: Point, g: Point) -> f64 {
    ((b.x - g.x).powi(2) + (b.y - g.y).powi(2)).sqrt()
}

/// Inverse distance from the closest tip to the goal, capped at 1.
pub fn reward_goal(tips: &[Point], goal: Point) -> f64 {
    assert!(!tips.is_empty(), "reward_goal needs at least one tip");
    let best = tips.iter().map(|&t| 1.0 / distance(t, goal)).fold(0.0, f64::max);
    best.min(1.0)
}

/// Goal reward of the worst-off plant.
pub fn reward_fair(per_plant_tips: &[Vec<Point>], goal: Point) -> f64 {
    per_plant_tips.iter().map(|tips| reward_goal(tips, goal)).fold(f64::INFINITY, f64::min)
}

/// Jaccard index of plant pixels against the shape; 0 when both are empty.
pub fn reward_shape(occupancy: &PixelMask, shape: &PixelMask) -> f64 {
    let union = occupancy.union_count(shape);
    if union == 0 {
        return 0.0;
    }
    occupancy.intersection_count(shape) as f64 / union as f64
}

/// Current reward of the task for the given plants.
pub fn evaluate_reward(plants: &[PlantState], target: &Target) -> f64 {
    match target {
        Target::Goal(g) => {
            let tips: Vec<Vec<Point>> = plants.iter().map(|p| p.node_positions()).collect();
            reward_fair(&tips, *g)
        }
        Target::Shape(mask) => {
            let mut occ = plants[0].occupancy().clone();
            for p in &plants[1..] {
                occ.union_with(p.occupancy());
            }
            reward_shape(&occ, mask)
        }
    }
}

/// Digits available at `episode_index`: the two easiest first, one more per
/// block, everything from the ninth block on.
pub fn curriculum_schedule(episode_index: usize) -> Vec<u8> {
    let count = (2 + episode_index / CURRICULUM_BLOCK).min(DIGIT_RANKING.len());
    DIGIT_RANKING[..count].to_vec()
}

/// Integer column uniformly drawn from `[lo, hi]`.
fn column<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let (lo, hi) = (lo.ceil() as i64, hi.floor() as i64);
    rng.random_range(lo..=hi.max(lo)) as f64
}

fn goal_height<R: Rng>(rng: &mut R, h: f64) -> f64 {
    rng.random_range(0.75 * h..=h - crate::raster::TARGET_RADIUS_PX)
}

/// Beam of the default width somewhere that does not cover `avoid_x`.
fn beam_away_from<R: Rng>(rng: &mut R, avoid_x: f64, width: f64, w: f64) -> LightSource {
    let left = (avoid_x - width).max(0.0);
    let right = (w - width - avoid_x - 1.0).max(0.0);
    if left + right <= 0.0 {
        return LightSource::beam_centered(rng.random_range(0.0..=w), width, w);
    }
    let u = rng.random_range(0.0..left + right);
    let x = if u < left { u } else { avoid_x + 1.0 + (u - left) };
    LightSource::Beam { x: x.min(w - width), width }
}

fn random_beam<R: Rng>(rng: &mut R, width: f64, w: f64) -> LightSource {
    LightSource::beam_centered(rng.random_range(0.0..=w), width, w)
}

/// `count` integer columns in `[lo, hi]` at least `gap` apart.
fn spaced_columns<R: Rng>(rng: &mut R, count: usize, gap: f64, lo: f64, hi: f64) -> Vec<f64> {
    let gap = gap.ceil() as i64;
    let (lo, hi) = (lo.ceil() as i64, hi.floor() as i64);
    let slack = (hi - lo) - (count as i64 - 1) * gap;
    let mut offsets: Vec<i64> = (0..count).map(|_| rng.random_range(0..=slack.max(0))).collect();
    offsets.sort_unstable();
    offsets.iter().enumerate().map(|(k, &o)| (lo + o + k as i64 * gap) as f64).collect()
}

/// Builds the initial state of an episode.
pub fn init_episode(
    kind: &TaskKind,
    seed: u64,
    params: &GrowthParams,
    difficulty: Difficulty,
    layout: &LayoutConfig,
    digits: &DigitSet,
) -> Result<EpisodeState> {
    params.validate()?;
    let side = kind.resolution() as usize;
    let (w, h) = (side as f64, side as f64);
    let mut rng = rng::stream(seed, Stream::Layout);
    let margin = (layout.edge_margin_frac * w).round();
    let beam_width = params.initial_light_width_px();
    let stem = |x: f64, base_y: f64| {
        PlantState::stem(
            Point::new(x, base_y),
            params.stem_segments(),
            params.branch_length_px(),
            side,
            side,
            params.thickness_px(),
        )
    };

    let mut shape_index = None;
    let (plants, light, target) = match kind {
        TaskKind::GrowPlantToGoal | TaskKind::FindPlant => {
            let (stem_x, goal_x) = match difficulty {
                Difficulty::Easy => {
                    let x = column(&mut rng, margin, w - margin);
                    (x, x)
                }
                Difficulty::Hard => {
                    if rng.random_bool(0.5) {
                        (margin, w - margin)
                    } else {
                        (w - margin, margin)
                    }
                }
                Difficulty::Random => (column(&mut rng, margin, w - margin), rng.random_range(margin..=w - margin)),
            };
            let goal = Point::new(goal_x, goal_height(&mut rng, h));
            let light = if *kind == TaskKind::FindPlant {
                beam_away_from(&mut rng, stem_x, beam_width, w)
            } else {
                LightSource::beam_centered(stem_x, beam_width, w)
            };
            (vec![stem(stem_x, 0.0)], light, Target::Goal(goal))
        }
        TaskKind::GrowMultiplePlants { plants: n } => {
            let n = *n;
            if n < 2 {
                return Err(Error::InvalidConfig(format!("fairness task needs at least 2 plants, got {n}")));
            }
            let sep = layout.min_stem_separation_frac * w;
            if n as f64 * sep > w {
                return Err(Error::InvalidConfig(format!("{n} plants {sep} px apart do not fit in {w} px")));
            }
            let (xs, goal_x) = match difficulty {
                Difficulty::Easy => {
                    let span = (n - 1) as f64 * beam_width;
                    if span > w - 2.0 * margin {
                        return Err(Error::InvalidConfig(format!("{n} plants one beam width apart do not fit")));
                    }
                    let left = column(&mut rng, margin, w - margin - span);
                    let xs: Vec<f64> = (0..n).map(|k| (left + k as f64 * beam_width).round()).collect();
                    (xs, left + span / 2.0)
                }
                Difficulty::Hard => {
                    let step = (w - 2.0 * margin) / (n - 1) as f64;
                    ((0..n).map(|k| (margin + k as f64 * step).round()).collect(), w / 2.0)
                }
                Difficulty::Random => {
                    let xs = spaced_columns(&mut rng, n, sep, sep / 2.0, w - sep / 2.0);
                    (xs, rng.random_range(margin..=w - margin))
                }
            };
            let goal = Point::new(goal_x, goal_height(&mut rng, h));
            let light = random_beam(&mut rng, beam_width, w);
            (xs.into_iter().map(|x| stem(x, 0.0)).collect(), light, Target::Goal(goal))
        }
        TaskKind::GrowPlantToShape { shape } => {
            let mask = match shape {
                ShapeSpec::Digit(d) => {
                    let t = load_shape_target(digits, *d, &mut rng::stream(seed, Stream::ShapeImage))?;
                    shape_index = Some(t.index);
                    t.mask
                }
                ShapeSpec::Mask(m) => m.clone(),
            };
            if (mask.width(), mask.height()) != (side, side) {
                return Err(Error::InvalidConfig(format!("shape mask must be {side}x{side}")));
            }
            let (x, y) = lowest_pixel(&mask).ok_or_else(|| Error::InvalidConfig("shape mask is empty".into()))?;
            let stem_height = params.stem_segments() as f64 * params.branch_length_px();
            let base_y = (y as f64 - stem_height).max(0.0);
            let center = Point::new(rng.random_range(0.0..=w), rng.random_range(0.0..=h));
            let light = LightSource::Spot { center, radius: DEFAULT_SPOT_RADIUS_FRAC * w };
            (vec![stem(x as f64, base_y)], light, Target::Shape(mask))
        }
    };

    let photons = crate::light::scatter_photons(&mut rng::stream(seed, Stream::Scatter), params.light_density, w, h);
    let mut state = EpisodeState {
        task: kind.clone(),
        difficulty,
        seed,
        step: 0,
        width: side,
        height: side,
        plants,
        photons,
        light,
        target,
        shape_index,
        params: params.clone(),
        done: false,
        last_reward: 0.0,
    };
    state.last_reward = evaluate_reward(&state.plants, &state.target);
    Ok(state)
}

/// Middle pixel of the lowest occupied row.
pub fn lowest_pixel(mask: &PixelMask) -> Option<(usize, usize)> {
    let j = (0..mask.height()).find(|&j| (0..mask.width()).any(|i| mask.get(i, j)))?;
    let row: Vec<usize> = (0..mask.width()).filter(|&i| mask.get(i, j)).collect();
    Some((row[(row.len() - 1) / 2], j))
}
