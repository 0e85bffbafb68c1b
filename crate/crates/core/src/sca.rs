//! Space colonization growth.
//!
//! Each segment end is a growth node. On every step, each candidate photon
//! attracts the nearest node within the radius of influence; a node with
//! attractors grows one new segment along the normalized sum of the unit
//! vectors toward them. Photons that end up within the kill distance of the
//! structure are removed for good.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point, Vec2};
use crate::params::GrowthParams;
use crate::raster::PixelMask;

/// Below this norm the summed attraction vector has no usable direction.
pub const DEGENERATE_NORM: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Photon {
    pub position: Point,
    pub alive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonField {
    pub photons: Vec<Photon>,
    /// Random stream the field was drawn from.
    pub stream: u64,
}

impl PhotonField {
    pub fn from_points(points: impl IntoIterator<Item = Point>) -> Self {
        let photons = points.into_iter().map(|position| Photon { position, alive: true }).collect();
        Self { photons, stream: 0 }
    }

    pub fn len(&self) -> usize {
        self.photons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.photons.is_empty()
    }

    pub fn alive_count(&self) -> usize {
        self.photons.iter().filter(|p| p.alive).count()
    }

    pub fn alive_ids(&self) -> Vec<usize> {
        self.photons.iter().enumerate().filter(|(_, p)| p.alive).map(|(k, _)| k).collect()
    }
}

pub type SegmentId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: Point,
    pub end: Point,
    pub parent: Option<SegmentId>,
    pub is_tip: bool,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }
}

/// Branch graph of one plant together with its rasterized footprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    segments: Vec<Segment>,
    children: Vec<Vec<SegmentId>>,
    tips: BTreeSet<SegmentId>,
    occupancy: PixelMask,
    thickness: f64,
}

impl PlantState {
    /// Empty plant in a `width × height` frame.
    pub fn new(width: usize, height: usize, thickness: f64) -> Self {
        Self {
            segments: Vec::new(),
            children: Vec::new(),
            tips: BTreeSet::new(),
            occupancy: PixelMask::new(width, height),
            thickness,
        }
    }

    /// Vertical stem of `count` segments of `length` rising from `base`.
    pub fn stem(base: Point, count: usize, length: f64, width: usize, height: usize, thickness: f64) -> Self {
        let mut plant = Self::new(width, height, thickness);
        let up = Vec2::new(0.0, 1.0);
        let mut last = plant.add_root(base, up, length);
        for _ in 1..count {
            last = plant.extend(last, up, length);
        }
        plant
    }

    /// Adds a parentless segment starting at `base`.
    pub fn add_root(&mut self, base: Point, direction: Vec2, length: f64) -> SegmentId {
        self.push(Segment { start: base, end: base + direction * length, parent: None, is_tip: true })
    }

    /// Grows a child from the end of `parent`.
    pub fn extend(&mut self, parent: SegmentId, direction: Vec2, length: f64) -> SegmentId {
        let start = self.segments[parent].end;
        let id = self.push(Segment { start, end: start + direction * length, parent: Some(parent), is_tip: true });
        self.children[parent].push(id);
        self.segments[parent].is_tip = false;
        self.tips.remove(&parent);
        id
    }

    fn push(&mut self, seg: Segment) -> SegmentId {
        let id = self.segments.len();
        self.occupancy.stamp_segment(seg.start, seg.end, self.thickness);
        self.segments.push(seg);
        self.children.push(Vec::new());
        self.tips.insert(id);
        id
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Segments without children.
    pub fn tips(&self) -> &BTreeSet<SegmentId> {
        &self.tips
    }

    pub fn children(&self, id: SegmentId) -> &[SegmentId] {
        &self.children[id]
    }

    pub fn occupancy(&self) -> &PixelMask {
        &self.occupancy
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    pub fn branch_count(&self) -> usize {
        self.segments.len()
    }

    /// Segment end points, indexed by segment id. These are the growth
    /// nodes and the branch tips used by the distance rewards.
    pub fn node_positions(&self) -> Vec<Point> {
        self.segments.iter().map(|s| s.end).collect()
    }

    /// Every distinct segment end point, including root bases.
    pub fn endpoints(&self) -> impl Iterator<Item = Point> + '_ {
        self.segments
            .iter()
            .flat_map(|s| s.parent.is_none().then_some(s.start).into_iter().chain(std::iter::once(s.end)))
    }

    /// Rebuilds the occupancy mask from scratch.
    pub fn rasterize(&self) -> PixelMask {
        let mut mask = PixelMask::new(self.occupancy.width(), self.occupancy.height());
        for s in &self.segments {
            mask.stamp_segment(s.start, s.end, self.thickness);
        }
        mask
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("attraction vectors cancel out")]
pub struct DegenerateDirection;

/// Unit vector along the sum of unit vectors from `tip` to each attractor.
pub fn growth_direction(tip: Point, attractors: &[Point]) -> Result<Vec2, DegenerateDirection> {
    let mut sum = Vec2::ORIGIN;
    for &p in attractors {
        let d = p - tip;
        let n = d.norm();
        if n > 0.0 {
            sum += d * (1.0 / n);
        }
    }
    let n = sum.norm();
    if n < DEGENERATE_NORM {
        return Err(DegenerateDirection);
    }
    Ok(sum * (1.0 / n))
}

/// Bucket grid over a point set with cells of one query radius.
struct PointGrid {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl PointGrid {
    fn new(points: &[Point], cell: f64) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (k, &p) in points.iter().enumerate() {
            buckets.entry(Self::key(p, cell)).or_default().push(k);
        }
        Self { cell, buckets }
    }

    fn key(p: Point, cell: f64) -> (i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
    }

    /// Indices of points in the 3×3 cell block around `p`.
    fn near(&self, p: Point) -> impl Iterator<Item = usize> + '_ {
        let (cx, cy) = Self::key(p, self.cell);
        (cx - 1..=cx + 1)
            .flat_map(move |x| (cy - 1..=cy + 1).map(move |y| (x, y)))
            .filter_map(|k| self.buckets.get(&k))
            .flatten()
            .copied()
    }
}

/// Assigns every alive photon to its nearest tip within `radius`.
pub fn assign_attractors(photons: &PhotonField, tips: &[Point], radius: f64) -> BTreeMap<usize, Vec<usize>> {
    assign_candidates(photons, &photons.alive_ids(), tips, radius)
}

/// Like [`assign_attractors`] but only the listed photon ids are considered.
/// Ties between equidistant tips go to the lowest tip index.
pub fn assign_candidates(
    photons: &PhotonField,
    candidates: &[usize],
    tips: &[Point],
    radius: f64,
) -> BTreeMap<usize, Vec<usize>> {
    let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    if tips.is_empty() || candidates.is_empty() || radius.is_nan() || radius <= 0.0 {
        return out;
    }
    let grid = PointGrid::new(tips, radius);
    let r_sq = radius * radius;
    for &id in candidates {
        let photon = &photons.photons[id];
        if !photon.alive {
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for t in grid.near(photon.position) {
            let d = tips[t].distance_sq(photon.position);
            if d > r_sq {
                continue;
            }
            let better = match best {
                None => true,
                Some((bd, bt)) => d < bd || (d == bd && t < bt),
            };
            if better {
                best = Some((d, t));
            }
        }
        if let Some((_, t)) = best {
            out.entry(t).or_default().push(id);
        }
    }
    out
}

/// One growth step for a single plant with every alive photon as a candidate.
/// Returns the number of new segments.
pub fn grow_step(plant: &mut PlantState, photons: &mut PhotonField, params: &GrowthParams) -> usize {
    let candidates = photons.alive_ids();
    grow_plants(std::slice::from_mut(plant), photons, &candidates, params)[0]
}

/// One growth step for plants competing over the same candidate photons.
///
/// Photons go to the nearest node across all plants. Each plant then grows
/// from at most `max_branching` of its attracted nodes, preferring nodes
/// with more attractors and then lower segment ids. After any growth, every
/// alive photon within the kill distance of a segment end point dies. A step
/// without growth leaves plants and photons untouched.
pub fn grow_plants(
    plants: &mut [PlantState],
    photons: &mut PhotonField,
    candidates: &[usize],
    params: &GrowthParams,
) -> Vec<usize> {
    let length = params.branch_length_px();
    let mut owners = Vec::new();
    let mut nodes = Vec::new();
    for (p, plant) in plants.iter().enumerate() {
        for (seg, pos) in plant.node_positions().into_iter().enumerate() {
            owners.push((p, seg));
            nodes.push(pos);
        }
    }
    let assignment = assign_candidates(photons, candidates, &nodes, params.radius_of_influence_px);

    let mut growth: Vec<Vec<(usize, SegmentId, Vec2)>> = vec![Vec::new(); plants.len()];
    for (node, ids) in &assignment {
        let (p, seg) = owners[*node];
        let tip = nodes[*node];
        let attractors: Vec<Point> = ids.iter().map(|&k| photons.photons[k].position).filter(|&q| q != tip).collect();
        let Ok(dir) = growth_direction(tip, &attractors) else { continue };
        let plant = &plants[p];
        let end = tip + dir * length;
        // a node whose attractors did not change would regrow the same child
        let duplicate = plant.children(seg).iter().any(|&c| plant.segments()[c].end.distance_sq(end) < 1e-18);
        if !duplicate {
            growth[p].push((ids.len(), seg, dir));
        }
    }

    let mut counts = vec![0; plants.len()];
    for (p, mut grown) in growth.into_iter().enumerate() {
        grown.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        grown.truncate(params.max_branching);
        grown.sort_by_key(|g| g.1);
        for &(_, seg, dir) in &grown {
            plants[p].extend(seg, dir, length);
        }
        counts[p] = grown.len();
    }

    if counts.iter().any(|&c| c > 0) {
        kill_near_structure(plants, photons, params.kill_distance_px);
    }
    counts
}

fn kill_near_structure(plants: &[PlantState], photons: &mut PhotonField, radius: f64) {
    let ends: Vec<Point> = plants.iter().flat_map(|p| p.endpoints()).collect();
    if ends.is_empty() {
        return;
    }
    let grid = PointGrid::new(&ends, radius);
    let r_sq = radius * radius;
    for photon in photons.photons.iter_mut().filter(|p| p.alive) {
        if grid.near(photon.position).any(|k| ends[k].distance_sq(photon.position) <= r_sq) {
            photon.alive = false;
        }
    }
}
