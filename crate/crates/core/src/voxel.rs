//! Tri-state voxel occupancy grid: scan integration, exact grid-stepping ray
//! casts, capsule collision checks and ground-projection queries.
//!
//! The store is sparse (block-hashed, 16^3 voxel blocks) so unbounded worlds
//! need no preallocation. Voxels start `Unknown`; `Occupied` is sticky within
//! an episode and wins over `Free` inside a single scan.

use std::fmt::Write as _;

use rustc_hash::FxHashMap;

use crate::math::{Aabb, Configuration, Vec3};

/// Observation state of one voxel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VoxelState {
    Free,
    Occupied,
    Unknown,
}

impl VoxelState {
    pub fn letter(self) -> char {
        match self {
            VoxelState::Free => 'F',
            VoxelState::Occupied => 'O',
            VoxelState::Unknown => 'U',
        }
    }
}

/// Integer grid coordinates of a voxel (world position / resolution, floored).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VoxelIndex {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

impl VoxelIndex {
    pub fn new(x: i32, y: i32, z: i32) -> Self {
        VoxelIndex { x, y, z }
    }

    pub fn offset(self, dx: i32, dy: i32, dz: i32) -> Self {
        VoxelIndex::new(self.x + dx, self.y + dy, self.z + dz)
    }

    /// The six face neighbors.
    pub fn neighbors6(self) -> [VoxelIndex; 6] {
        [
            self.offset(1, 0, 0),
            self.offset(-1, 0, 0),
            self.offset(0, 1, 0),
            self.offset(0, -1, 0),
            self.offset(0, 0, 1),
            self.offset(0, 0, -1),
        ]
    }
}

const BLOCK_SHIFT: i32 = 4;
const BLOCK_DIM: i32 = 1 << BLOCK_SHIFT;
const BLOCK_MASK: i32 = BLOCK_DIM - 1;
const BLOCK_VOL: usize = (BLOCK_DIM * BLOCK_DIM * BLOCK_DIM) as usize;

const CELL_UNKNOWN: u8 = 0;
const CELL_FREE: u8 = 1;
const CELL_OCCUPIED: u8 = 2;

struct Block {
    cells: Box<[u8; BLOCK_VOL]>,
}

impl Block {
    fn new() -> Self {
        Block { cells: Box::new([CELL_UNKNOWN; BLOCK_VOL]) }
    }
}

fn block_key(idx: VoxelIndex) -> (i32, i32, i32) {
    (idx.x >> BLOCK_SHIFT, idx.y >> BLOCK_SHIFT, idx.z >> BLOCK_SHIFT)
}

fn block_offset(idx: VoxelIndex) -> usize {
    let x = (idx.x & BLOCK_MASK) as usize;
    let y = (idx.y & BLOCK_MASK) as usize;
    let z = (idx.z & BLOCK_MASK) as usize;
    (x << (2 * BLOCK_SHIFT)) | (y << BLOCK_SHIFT) | z
}

/// One ray of a depth scan: an endpoint and whether it was a surface return
/// (`hit`) or a max-range truncation (`!hit`).
#[derive(Clone, Copy, Debug)]
pub struct ScanRay {
    pub endpoint: Vec3,
    pub hit: bool,
}

/// What a ray cast ran into first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HitKind {
    Occupied,
    Unknown,
    MaxRange,
}

/// Result of [`OccupancyMap::raycast`].
#[derive(Clone, Copy, Debug)]
pub struct RayHit {
    pub kind: HitKind,
    /// Distance at which the ray entered the reported voxel (or `max_range`).
    pub distance: f64,
    /// The voxel behind the result, absent for `MaxRange`.
    pub voxel: Option<VoxelIndex>,
}

/// Result of a ground-projection query.
#[derive(Clone, Copy, Debug)]
pub struct GroundProjection {
    pub projected: Configuration,
    /// False means hanging: no supportive ground within reach.
    pub attached: bool,
    /// Vertical drop from the query point to the projected configuration.
    pub drop: f64,
}

/// Parameters for [`OccupancyMap::project_to_ground`].
#[derive(Clone, Copy, Debug)]
pub struct GroundParams {
    pub max_drop: f64,
    pub ring_radius: f64,
    pub clearance: f64,
}

/// Number of probe points on the ground-check ring.
pub const N_RING: usize = 8;

/// Free/occupied/unknown voxel tallies. `unknown` is only defined for bounded
/// maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MapCounts {
    pub free: u64,
    pub occupied: u64,
    pub unknown: Option<u64>,
}

/// Sparse tri-state occupancy grid.
pub struct OccupancyMap {
    resolution: f64,
    blocks: FxHashMap<(i32, i32, i32), Block>,
    /// Inclusive voxel-index extent; writes and reads outside are Unknown.
    bounds: Option<(VoxelIndex, VoxelIndex)>,
    free_count: u64,
    occ_count: u64,
}

impl OccupancyMap {
    pub fn new(resolution: f64) -> Self {
        assert!(resolution > 0.0, "voxel resolution must be positive");
        OccupancyMap {
            resolution,
            blocks: FxHashMap::default(),
            bounds: None,
            free_count: 0,
            occ_count: 0,
        }
    }

    pub fn with_bounds(resolution: f64, min: VoxelIndex, max: VoxelIndex) -> Self {
        let mut m = Self::new(resolution);
        assert!(min.x <= max.x && min.y <= max.y && min.z <= max.z);
        m.bounds = Some((min, max));
        m
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn bounds(&self) -> Option<(VoxelIndex, VoxelIndex)> {
        self.bounds
    }

    /// World-space box covering the bounded extent, if any.
    pub fn bounds_aabb(&self) -> Option<Aabb> {
        self.bounds.map(|(lo, hi)| {
            Aabb::new(
                self.index_min_corner(lo),
                self.index_min_corner(hi) + Vec3::new(self.resolution, self.resolution, self.resolution),
            )
        })
    }

    pub fn world_to_index(&self, p: Vec3) -> VoxelIndex {
        VoxelIndex::new(
            (p.x / self.resolution).floor() as i32,
            (p.y / self.resolution).floor() as i32,
            (p.z / self.resolution).floor() as i32,
        )
    }

    /// Center of a voxel in world coordinates.
    pub fn index_center(&self, idx: VoxelIndex) -> Vec3 {
        Vec3::new(
            (idx.x as f64 + 0.5) * self.resolution,
            (idx.y as f64 + 0.5) * self.resolution,
            (idx.z as f64 + 0.5) * self.resolution,
        )
    }

    /// Minimum corner of a voxel in world coordinates.
    pub fn index_min_corner(&self, idx: VoxelIndex) -> Vec3 {
        Vec3::new(
            idx.x as f64 * self.resolution,
            idx.y as f64 * self.resolution,
            idx.z as f64 * self.resolution,
        )
    }

    pub fn in_bounds(&self, idx: VoxelIndex) -> bool {
        match self.bounds {
            None => true,
            Some((lo, hi)) => {
                idx.x >= lo.x
                    && idx.x <= hi.x
                    && idx.y >= lo.y
                    && idx.y <= hi.y
                    && idx.z >= lo.z
                    && idx.z <= hi.z
            }
        }
    }

    pub fn state(&self, idx: VoxelIndex) -> VoxelState {
        if !self.in_bounds(idx) {
            return VoxelState::Unknown;
        }
        match self.blocks.get(&block_key(idx)) {
            None => VoxelState::Unknown,
            Some(b) => match b.cells[block_offset(idx)] {
                CELL_FREE => VoxelState::Free,
                CELL_OCCUPIED => VoxelState::Occupied,
                _ => VoxelState::Unknown,
            },
        }
    }

    pub fn state_at(&self, p: Vec3) -> VoxelState {
        self.state(self.world_to_index(p))
    }

    /// Set a voxel state. Out-of-bounds writes are dropped and `Occupied`
    /// never reverts to `Free` or `Unknown`.
    pub fn set_state(&mut self, idx: VoxelIndex, s: VoxelState) {
        if !self.in_bounds(idx) {
            return;
        }
        let block = self.blocks.entry(block_key(idx)).or_insert_with(Block::new);
        let cell = &mut block.cells[block_offset(idx)];
        let old = *cell;
        let new = match s {
            VoxelState::Free => {
                if old == CELL_OCCUPIED {
                    return;
                }
                CELL_FREE
            }
            VoxelState::Occupied => CELL_OCCUPIED,
            VoxelState::Unknown => {
                if old != CELL_UNKNOWN {
                    return; // knowledge is monotone within an episode
                }
                CELL_UNKNOWN
            }
        };
        if old == new {
            return;
        }
        match old {
            CELL_FREE => self.free_count -= 1,
            CELL_OCCUPIED => self.occ_count -= 1,
            _ => {}
        }
        match new {
            CELL_FREE => self.free_count += 1,
            CELL_OCCUPIED => self.occ_count += 1,
            _ => {}
        }
        *cell = new;
    }

    pub fn counts(&self) -> MapCounts {
        let unknown = self.bounds.map(|(lo, hi)| {
            let total = (hi.x - lo.x + 1) as u64
                * (hi.y - lo.y + 1) as u64
                * (hi.z - lo.z + 1) as u64;
            total - self.free_count - self.occ_count
        });
        MapCounts { free: self.free_count, occupied: self.occ_count, unknown }
    }

    /// Free voxels whose centers fall inside `bb`, sorted by index.
    pub fn free_voxels_in(&self, bb: &Aabb) -> Vec<VoxelIndex> {
        let mut out = Vec::new();
        let res = self.resolution;
        for (&(bx, by, bz), block) in &self.blocks {
            // cheap block-level cull
            let lo = Vec3::new(
                (bx << BLOCK_SHIFT) as f64 * res,
                (by << BLOCK_SHIFT) as f64 * res,
                (bz << BLOCK_SHIFT) as f64 * res,
            );
            let span = BLOCK_DIM as f64 * res;
            let hi = lo + Vec3::new(span, span, span);
            if hi.x < bb.min.x || lo.x > bb.max.x || hi.y < bb.min.y || lo.y > bb.max.y
                || hi.z < bb.min.z || lo.z > bb.max.z
            {
                continue;
            }
            for (off, &cell) in block.cells.iter().enumerate() {
                if cell != CELL_FREE {
                    continue;
                }
                let x = (bx << BLOCK_SHIFT) + ((off >> (2 * BLOCK_SHIFT)) as i32 & BLOCK_MASK);
                let y = (by << BLOCK_SHIFT) + ((off >> BLOCK_SHIFT) as i32 & BLOCK_MASK);
                let z = (bz << BLOCK_SHIFT) + (off as i32 & BLOCK_MASK);
                let idx = VoxelIndex::new(x, y, z);
                if bb.contains(self.index_center(idx)) {
                    out.push(idx);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// All non-Unknown voxels, sorted by index.
    pub fn known_voxels(&self) -> Vec<(VoxelIndex, VoxelState)> {
        let mut out = Vec::with_capacity((self.free_count + self.occ_count) as usize);
        for (&(bx, by, bz), block) in &self.blocks {
            for (off, &cell) in block.cells.iter().enumerate() {
                if cell == CELL_UNKNOWN {
                    continue;
                }
                let x = (bx << BLOCK_SHIFT) + ((off >> (2 * BLOCK_SHIFT)) as i32 & BLOCK_MASK);
                let y = (by << BLOCK_SHIFT) + ((off >> BLOCK_SHIFT) as i32 & BLOCK_MASK);
                let z = (bz << BLOCK_SHIFT) + (off as i32 & BLOCK_MASK);
                let state = if cell == CELL_FREE { VoxelState::Free } else { VoxelState::Occupied };
                out.push((VoxelIndex::new(x, y, z), state));
            }
        }
        out.sort_unstable_by_key(|(i, _)| *i);
        out
    }

    /// Integrate one depth scan taken from `origin`.
    ///
    /// Voxels traversed by each ray become Free; the terminal voxel of a
    /// surface return becomes Occupied. Truncated rays only carve free space.
    /// Rays leaving a bounded extent are clipped at the boundary.
    pub fn integrate_scan(&mut self, origin: Vec3, rays: &[ScanRay]) {
        let eps = self.resolution * 1e-6;
        for ray in rays {
            let mut endpoint = ray.endpoint;
            let mut hit = ray.hit;
            if let Some(bb) = self.bounds_aabb() {
                if !bb.contains(endpoint) {
                    match bb.clip_segment(origin, endpoint) {
                        Some((_, t1)) => {
                            endpoint = origin.lerp(endpoint, t1);
                            hit = false; // truncated at the map boundary
                        }
                        None => continue, // entirely outside
                    }
                }
            }
            let delta = endpoint - origin;
            let len = delta.norm();
            if hit {
                if len <= eps {
                    let idx = self.world_to_index(endpoint);
                    self.set_state(idx, VoxelState::Occupied);
                    continue;
                }
                let dir = delta / len;
                // Stop free-space carving just short of the surface so the
                // boundary voxel is attributed to the occupied side.
                let back = endpoint - dir * eps;
                traverse_segment(self.resolution, origin, back, |idx, _| {
                    self.set_state(idx, VoxelState::Free);
                    true
                });
                let fwd = endpoint + dir * eps;
                let idx = self.world_to_index(fwd);
                self.set_state(idx, VoxelState::Occupied);
            } else {
                traverse_segment(self.resolution, origin, endpoint, |idx, _| {
                    self.set_state(idx, VoxelState::Free);
                    true
                });
            }
        }
    }

    /// March a ray and report the first non-Free voxel, or `MaxRange`.
    pub fn raycast(&self, origin: Vec3, direction: Vec3, max_range: f64) -> RayHit {
        debug_assert!((direction.norm() - 1.0).abs() < 1e-6, "direction must be unit length");
        let end = origin + direction * max_range;
        let mut result = RayHit { kind: HitKind::MaxRange, distance: max_range, voxel: None };
        traverse_segment(self.resolution, origin, end, |idx, t_entry| {
            match self.state(idx) {
                VoxelState::Free => true,
                VoxelState::Occupied => {
                    result = RayHit {
                        kind: HitKind::Occupied,
                        distance: t_entry * max_range,
                        voxel: Some(idx),
                    };
                    false
                }
                VoxelState::Unknown => {
                    result = RayHit {
                        kind: HitKind::Unknown,
                        distance: t_entry * max_range,
                        voxel: Some(idx),
                    };
                    false
                }
            }
        });
        result
    }

    /// True iff every voxel within `robot_radius` of segment `ab` is Free.
    /// Unknown counts as not free; the check is symmetric in `a`, `b`.
    pub fn segment_free(&self, a: Vec3, b: Vec3, robot_radius: f64) -> bool {
        let r = robot_radius.max(0.0);
        let res = self.resolution;
        let lo = a.min_by_component(b) - Vec3::new(r, r, r);
        let hi = a.max_by_component(b) + Vec3::new(r, r, r);
        let lo_idx = self.world_to_index(lo);
        let hi_idx = self.world_to_index(hi);
        let half_diag = res * 0.5 * 3f64.sqrt();
        let r_sq = r * r;
        for ix in lo_idx.x..=hi_idx.x {
            for iy in lo_idx.y..=hi_idx.y {
                for iz in lo_idx.z..=hi_idx.z {
                    let idx = VoxelIndex::new(ix, iy, iz);
                    if self.state(idx) == VoxelState::Free {
                        continue;
                    }
                    let center = self.index_center(idx);
                    let center_d = point_segment_dist(center, a, b);
                    if center_d > r + half_diag {
                        continue; // cube cannot reach the capsule
                    }
                    if center_d + half_diag <= r {
                        return false; // cube fully inside the capsule
                    }
                    let cube_min = self.index_min_corner(idx);
                    let cube_max = cube_min + Vec3::new(res, res, res);
                    if segment_box_dist_sq(a, b, cube_min, cube_max) <= r_sq {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Mark every voxel whose cube lies within `radius` of `center` Free
    /// (Occupied voxels keep their state). Models the proprioceptive
    /// evidence that the robot's own body volume is traversable, covering
    /// the sensor's blind cones.
    pub fn clear_ball(&mut self, center: Vec3, radius: f64) {
        let r = radius.max(0.0);
        let lo = self.world_to_index(center - Vec3::new(r, r, r));
        let hi = self.world_to_index(center + Vec3::new(r, r, r));
        let res = self.resolution;
        for ix in lo.x..=hi.x {
            for iy in lo.y..=hi.y {
                for iz in lo.z..=hi.z {
                    let idx = VoxelIndex::new(ix, iy, iz);
                    let cube_min = self.index_min_corner(idx);
                    let cube_max = cube_min + Vec3::new(res, res, res);
                    if point_box_dist_sq(center, cube_min, cube_max) <= r * r {
                        self.set_state(idx, VoxelState::Free);
                    }
                }
            }
        }
    }

    /// True iff no Occupied voxel lies within `robot_radius` of segment
    /// `ab`. Unlike [`Self::segment_free`], Unknown space passes: used when
    /// tracking paths through space the robot has not observed itself yet.
    pub fn segment_clear_of_occupied(&self, a: Vec3, b: Vec3, robot_radius: f64) -> bool {
        let r = robot_radius.max(0.0);
        let res = self.resolution;
        let lo = a.min_by_component(b) - Vec3::new(r, r, r);
        let hi = a.max_by_component(b) + Vec3::new(r, r, r);
        let lo_idx = self.world_to_index(lo);
        let hi_idx = self.world_to_index(hi);
        let half_diag = res * 0.5 * 3f64.sqrt();
        for ix in lo_idx.x..=hi_idx.x {
            for iy in lo_idx.y..=hi_idx.y {
                for iz in lo_idx.z..=hi_idx.z {
                    let idx = VoxelIndex::new(ix, iy, iz);
                    if self.state(idx) != VoxelState::Occupied {
                        continue;
                    }
                    let center = self.index_center(idx);
                    let center_d = point_segment_dist(center, a, b);
                    if center_d > r + half_diag {
                        continue;
                    }
                    if center_d + half_diag <= r {
                        return false;
                    }
                    let cube_min = self.index_min_corner(idx);
                    let cube_max = cube_min + Vec3::new(res, res, res);
                    if segment_box_dist_sq(a, b, cube_min, cube_max) <= r * r {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Project a free-space point downward onto supportive ground.
    ///
    /// Scans voxel levels below `p` up to `max_drop`. A level supports the
    /// point if its column voxel is Occupied, or if any of [`N_RING`] probe
    /// points on a circle of `ring_radius` at that level is Occupied (ground
    /// occasionally maps as free straight below, e.g. water puddles). Without
    /// support the point is hanging and returned unchanged.
    pub fn project_to_ground(&self, p: Vec3, yaw: f64, prm: &GroundParams) -> GroundProjection {
        let res = self.resolution;
        let base = self.world_to_index(p);
        let levels = (prm.max_drop / res).ceil().max(1.0) as i32;
        for k in 1..=levels {
            let level_z = base.z - k;
            let column = VoxelIndex::new(base.x, base.y, level_z);
            let mut support = None;
            if self.state(column) == VoxelState::Occupied {
                support = Some(column);
            } else {
                for j in 0..N_RING {
                    let angle = j as f64 * std::f64::consts::TAU / N_RING as f64;
                    let probe = Vec3::new(
                        p.x + prm.ring_radius * angle.cos(),
                        p.y + prm.ring_radius * angle.sin(),
                        0.0,
                    );
                    let mut idx = self.world_to_index(probe);
                    idx.z = level_z;
                    if self.state(idx) == VoxelState::Occupied {
                        support = Some(idx);
                        break;
                    }
                }
            }
            if let Some(sup) = support {
                let top = (sup.z + 1) as f64 * res;
                let projected = Configuration::new(p.x, p.y, top + prm.clearance, yaw);
                return GroundProjection { projected, attached: true, drop: p.z - projected.pos.z };
            }
        }
        GroundProjection {
            projected: Configuration::from_pos(p, yaw),
            attached: false,
            drop: 0.0,
        }
    }

    /// Text export: a header followed by one known voxel per line,
    /// `x y z state`, world coordinates of voxel centers.
    pub fn export_text(&self, origin: Vec3) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# resolution={} origin={:.6} {:.6} {:.6}",
            self.resolution, origin.x, origin.y, origin.z
        );
        for (idx, state) in self.known_voxels() {
            let c = self.index_center(idx);
            let _ = writeln!(out, "{:.6} {:.6} {:.6} {}", c.x, c.y, c.z, state.letter());
        }
        out
    }
}

/// Distance from a point to a segment.
pub fn point_segment_dist(p: Vec3, a: Vec3, b: Vec3) -> f64 {
    let ab = b - a;
    let denom = ab.norm_sq();
    if denom < 1e-18 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / denom).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

fn point_box_dist_sq(p: Vec3, lo: Vec3, hi: Vec3) -> f64 {
    let dx = (lo.x - p.x).max(0.0).max(p.x - hi.x);
    let dy = (lo.y - p.y).max(0.0).max(p.y - hi.y);
    let dz = (lo.z - p.z).max(0.0).max(p.z - hi.z);
    dx * dx + dy * dy + dz * dz
}

/// Squared distance between a segment and an axis-aligned box.
///
/// `t -> dist^2(a + t(b-a), box)` is convex, so a ternary search over `[0,1]`
/// converges to the global minimum.
pub fn segment_box_dist_sq(a: Vec3, b: Vec3, lo: Vec3, hi: Vec3) -> f64 {
    let f = |t: f64| point_box_dist_sq(a.lerp(b, t), lo, hi);
    let mut l = 0.0f64;
    let mut r = 1.0f64;
    for _ in 0..60 {
        let m1 = l + (r - l) / 3.0;
        let m2 = r - (r - l) / 3.0;
        if f(m1) <= f(m2) {
            r = m2;
        } else {
            l = m1;
        }
    }
    f(0.5 * (l + r)).min(f(0.0)).min(f(1.0))
}

/// Visit every voxel the segment `a -> b` intersects, in order, using exact
/// amortized grid stepping. `visit(idx, t_entry)` receives the parameter at
/// which the segment enters the voxel; return false to stop early.
pub fn traverse_segment(
    resolution: f64,
    a: Vec3,
    b: Vec3,
    mut visit: impl FnMut(VoxelIndex, f64) -> bool,
) {
    let floor_idx = |p: Vec3| {
        VoxelIndex::new(
            (p.x / resolution).floor() as i32,
            (p.y / resolution).floor() as i32,
            (p.z / resolution).floor() as i32,
        )
    };
    let mut cur = floor_idx(a);
    let end = floor_idx(b);
    let d = b - a;

    let mut step = [0i32; 3];
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    let cur_arr = [cur.x, cur.y, cur.z];
    let a_arr = a.to_array();
    let d_arr = d.to_array();
    for axis in 0..3 {
        if d_arr[axis] > 0.0 {
            step[axis] = 1;
            let boundary = (cur_arr[axis] + 1) as f64 * resolution;
            t_max[axis] = (boundary - a_arr[axis]) / d_arr[axis];
            t_delta[axis] = resolution / d_arr[axis];
        } else if d_arr[axis] < 0.0 {
            step[axis] = -1;
            let boundary = cur_arr[axis] as f64 * resolution;
            t_max[axis] = (boundary - a_arr[axis]) / d_arr[axis];
            t_delta[axis] = resolution / -d_arr[axis];
        }
    }

    let max_steps = ((cur.x - end.x).abs() + (cur.y - end.y).abs() + (cur.z - end.z).abs()) + 6;
    let mut t_entry = 0.0f64;
    for _ in 0..=max_steps {
        if !visit(cur, t_entry) {
            return;
        }
        if cur == end {
            return;
        }
        // step along the axis whose boundary comes first; ties prefer x, y, z
        let mut axis = 0;
        if t_max[1] < t_max[axis] {
            axis = 1;
        }
        if t_max[2] < t_max[axis] {
            axis = 2;
        }
        if t_max[axis] > 1.0 {
            // numeric edge: b sits exactly on a boundary; finish at end voxel
            if cur != end && visit(end, t_entry) {}
            return;
        }
        t_entry = t_max[axis];
        match axis {
            0 => cur.x += step[0],
            1 => cur.y += step[1],
            _ => cur.z += step[2],
        }
        t_max[axis] += t_delta[axis];
    }
}
