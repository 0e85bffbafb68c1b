//! Light sources, photon scattering and shading.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::sca::{Photon, PhotonField, PlantState};

/// Smallest beam width or spot radius.
pub const MIN_LIGHT_SIZE_PX: f64 = 1.0;

/// Fraction of the environment width used as the default spot radius.
pub const DEFAULT_SPOT_RADIUS_FRAC: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LightSource {
    /// Full-height vertical band starting at `x` (left edge).
    Beam { x: f64, width: f64 },
    /// Overhead circular spotlight.
    Spot { center: Point, radius: f64 },
}

impl LightSource {
    /// Beam of `width` centred on `center_x`, clamped into a `frame_width` frame.
    pub fn beam_centered(center_x: f64, width: f64, frame_width: f64) -> Self {
        let width = width.clamp(MIN_LIGHT_SIZE_PX, frame_width);
        let x = (center_x - width / 2.0).clamp(0.0, frame_width - width);
        LightSource::Beam { x, width }
    }

    /// Horizontal centre of the light.
    pub fn center_x(&self) -> f64 {
        match *self {
            LightSource::Beam { x, width } => x + width / 2.0,
            LightSource::Spot { center, .. } => center.x,
        }
    }

    /// Beam width or spot diameter.
    pub fn extent(&self) -> f64 {
        match *self {
            LightSource::Beam { width, .. } => width,
            LightSource::Spot { radius, .. } => 2.0 * radius,
        }
    }

    /// Whether the column at `x` lies under the beam (beam only).
    pub fn covers_x(&self, px: f64) -> bool {
        match *self {
            LightSource::Beam { x, width } => x <= px && px <= x + width,
            LightSource::Spot { center, radius } => (px - center.x).abs() <= radius,
        }
    }
}

/// Draws `density` photons uniformly over `[0, width] × [0, height]`.
pub fn scatter_photons<R: Rng + ?Sized>(rng: &mut R, density: usize, width: f64, height: f64) -> PhotonField {
    let photons = (0..density)
        .map(|_| {
            let x = rng.random_range(0.0..=width);
            let y = rng.random_range(0.0..=height);
            Photon { position: Point::new(x, y), alive: true }
        })
        .collect();
    PhotonField { photons, stream: crate::rng::Stream::Scatter as u64 }
}

/// Highest occupied row per column over all plants, `None` for bare columns.
pub fn canopy_heights<'a>(plants: impl IntoIterator<Item = &'a PlantState>, width: usize) -> Vec<Option<usize>> {
    let mut top = vec![None; width];
    for plant in plants {
        let mask = plant.occupancy();
        for (i, slot) in top.iter_mut().enumerate().take(mask.width()) {
            if let Some(j) = (0..mask.height()).rev().find(|&j| mask.get(i, j)) {
                *slot = Some(slot.map_or(j, |t: usize| t.max(j)));
            }
        }
    }
    top
}

/// Column index of a world x coordinate, with the right wall folded into the
/// last column.
pub fn column_of(x: f64, width: usize) -> usize {
    (x.floor().max(0.0) as usize).min(width.saturating_sub(1))
}

/// Ids of the alive photons the light reaches.
///
/// A beam reaches photons inside its x interval unless some plant pixel in
/// the same column sits strictly above the photon. The spotlight reaches
/// photons inside its disc and is not shaded.
pub fn illuminated(photons: &PhotonField, light: &LightSource, plants: &[PlantState]) -> Vec<usize> {
    let alive = photons.photons.iter().enumerate().filter(|(_, p)| p.alive);
    match *light {
        LightSource::Beam { x, width } => {
            let frame_width = plants.first().map_or(0, |p| p.occupancy().width());
            let canopy = canopy_heights(plants, frame_width);
            alive
                .filter(|(_, p)| x <= p.position.x && p.position.x <= x + width)
                .filter(|(_, p)| {
                    let shaded = canopy
                        .get(column_of(p.position.x, frame_width))
                        .copied()
                        .flatten()
                        .is_some_and(|top| top as f64 > p.position.y);
                    !shaded
                })
                .map(|(k, _)| k)
                .collect()
        }
        LightSource::Spot { center, radius } => {
            let r_sq = radius * radius;
            alive.filter(|(_, p)| p.position.distance_sq(center) <= r_sq).map(|(k, _)| k).collect()
        }
    }
}

/// Moves and resizes the light, clamping it back inside the frame.
///
/// Size changes keep the centre fixed. Beams ignore `delta_y`. Width and
/// radius stay within `[1, width]`.
pub fn apply_light_action(
    light: &LightSource,
    delta_x: f64,
    delta_y: f64,
    delta_size: f64,
    width: f64,
    height: f64,
) -> LightSource {
    match *light {
        LightSource::Beam { x, width: w } => {
            let center = x + w / 2.0;
            let w = (w + delta_size).clamp(MIN_LIGHT_SIZE_PX, width);
            let x = (center - w / 2.0 + delta_x).clamp(0.0, width - w);
            LightSource::Beam { x, width: w }
        }
        LightSource::Spot { center, radius } => LightSource::Spot {
            center: Point::new((center.x + delta_x).clamp(0.0, width), (center.y + delta_y).clamp(0.0, height)),
            radius: (radius + delta_size).clamp(MIN_LIGHT_SIZE_PX, width),
        },
    }
}
