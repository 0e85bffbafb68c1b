//! Software rasterization.
//!
//! Pixel `(i, j)` is the lattice point `(i, j)` in world coordinates, so a
//! segment covers every lattice point within half its thickness. Frame
//! buffers are stored top row first: world row `j` lands in buffer row
//! `height - 1 - j`. Nothing is anti-aliased.

use serde::{Deserialize, Serialize};

use crate::env::EpisodeState;
use crate::geometry::{point_segment_distance_sq, Point};
use crate::light::LightSource;
use crate::task::Target;

/// Slack on squared-distance coverage tests so that exact boundary hits
/// are included regardless of rounding in the projection.
pub const COVER_EPS: f64 = 1e-9;

pub type Rgb = [u8; 3];

pub const BACKGROUND: Rgb = [0, 0, 0];
pub const PLANT: Rgb = [0, 128, 0];
pub const LIGHT: Rgb = [128, 128, 0];
pub const TARGET: Rgb = [255, 0, 0];

/// Radius of the goal marker in pixels.
pub const TARGET_RADIUS_PX: f64 = 3.0;

/// Boolean pixel grid in world orientation (`j = 0` is the bottom row).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl PixelMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![false; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[j * self.width + i]
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.bits[j * self.width + i] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Occupied pixels as `(i, j)` pairs, row by row from the bottom.
    pub fn iter_set(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(move |(k, _)| (k % self.width, k / self.width))
    }

    pub fn union_with(&mut self, other: &PixelMask) {
        assert_eq!((self.width, self.height), (other.width, other.height));
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    pub fn intersection_count(&self, other: &PixelMask) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(&a, &b)| a && b).count()
    }

    pub fn union_count(&self, other: &PixelMask) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(&a, &b)| a || b).count()
    }

    /// Marks every pixel covered by the thick segment `a..b`.
    pub fn stamp_segment(&mut self, a: Point, b: Point, thickness: f64) {
        let (w, h) = (self.width, self.height);
        for_each_segment_pixel(a, b, thickness, w, h, |i, j| self.set(i, j, true));
    }
}

/// Calls `f(i, j)` for each in-frame lattice point within `thickness / 2` of
/// the segment `a..b`. Only the segment's bounding box is scanned.
pub fn for_each_segment_pixel(
    a: Point,
    b: Point,
    thickness: f64,
    width: usize,
    height: usize,
    mut f: impl FnMut(usize, usize),
) {
    if width == 0 || height == 0 {
        return;
    }
    let r = thickness.max(1.0) / 2.0;
    let r_sq = r * r + COVER_EPS;
    let Some((i0, i1)) = clip_range(a.x.min(b.x) - r, a.x.max(b.x) + r, width) else { return };
    let Some((j0, j1)) = clip_range(a.y.min(b.y) - r, a.y.max(b.y) + r, height) else { return };
    for j in j0..=j1 {
        for i in i0..=i1 {
            let p = Point::new(i as f64, j as f64);
            if point_segment_distance_sq(p, a, b) <= r_sq {
                f(i, j);
            }
        }
    }
}

/// Integer lattice range `[ceil(lo), floor(hi)]` clipped to `0..len`.
fn clip_range(lo: f64, hi: f64, len: usize) -> Option<(usize, usize)> {
    let lo = lo.ceil().max(0.0);
    let hi = hi.floor().min(len as f64 - 1.0);
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return None;
    }
    Some((lo as usize, hi as usize))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameBuffer {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl FrameBuffer {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, pixels: vec![0; width * height * 3] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.pixels
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        ((self.height - 1 - j) * self.width + i) * 3
    }

    /// Color of world pixel `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> Rgb {
        let o = self.offset(i, j);
        [self.pixels[o], self.pixels[o + 1], self.pixels[o + 2]]
    }

    pub fn put(&mut self, i: usize, j: usize, c: Rgb) {
        let o = self.offset(i, j);
        self.pixels[o..o + 3].copy_from_slice(&c);
    }

    pub fn fill(&mut self, c: Rgb) {
        for px in self.pixels.chunks_exact_mut(3) {
            px.copy_from_slice(&c);
        }
    }

    pub fn draw_segment(&mut self, a: Point, b: Point, thickness: f64, c: Rgb) {
        let (w, h) = (self.width, self.height);
        for_each_segment_pixel(a, b, thickness, w, h, |i, j| self.put(i, j, c));
    }

    pub fn fill_circle(&mut self, center: Point, radius: f64, c: Rgb) {
        let r_sq = radius * radius + COVER_EPS;
        let Some((i0, i1)) = clip_range(center.x - radius, center.x + radius, self.width) else { return };
        let Some((j0, j1)) = clip_range(center.y - radius, center.y + radius, self.height) else { return };
        for j in j0..=j1 {
            for i in i0..=i1 {
                if Point::new(i as f64, j as f64).distance_sq(center) <= r_sq {
                    self.put(i, j, c);
                }
            }
        }
    }

    /// Full-height band over the columns in `[left, right]`.
    pub fn fill_columns(&mut self, left: f64, right: f64, c: Rgb) {
        let Some((i0, i1)) = clip_range(left, right, self.width) else { return };
        for j in 0..self.height {
            for i in i0..=i1 {
                self.put(i, j, c);
            }
        }
    }

    pub fn paint_mask(&mut self, mask: &PixelMask, c: Rgb) {
        for (i, j) in mask.iter_set() {
            if i < self.width && j < self.height {
                self.put(i, j, c);
            }
        }
    }
}

/// Draws the observation for `state`: background, light, target, plants.
/// Photons are never drawn.
pub fn render(state: &EpisodeState) -> FrameBuffer {
    let mut fb = FrameBuffer::new(state.width, state.height);
    fb.fill(BACKGROUND);
    match state.light {
        LightSource::Beam { x, width } => fb.fill_columns(x, x + width, LIGHT),
        LightSource::Spot { center, radius } => fb.fill_circle(center, radius, LIGHT),
    }
    match &state.target {
        Target::Goal(g) => fb.fill_circle(*g, TARGET_RADIUS_PX, TARGET),
        Target::Shape(mask) => fb.paint_mask(mask, TARGET),
    }
    for plant in &state.plants {
        fb.paint_mask(plant.occupancy(), PLANT);
    }
    fb
}
