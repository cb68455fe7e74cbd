//! Ground-truth voxelized worlds: procedural generators, hand-built test
//! fixtures, a diffable text file format, and ray casting against the solid
//! geometry.

use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::math::{Configuration, Vec3};
use crate::voxel::{traverse_segment, VoxelIndex};

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("world parameter invalid: {0}")]
    BadParameter(String),
    #[error("generated world failed its connectivity check: {0}")]
    Disconnected(String),
    #[error("spawn configuration is not inside an empty voxel")]
    BadSpawn,
    #[error("world file parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A finite boolean voxel grid: `true` voxels are solid.
pub struct World {
    resolution: f64,
    min: VoxelIndex,
    dims: [i32; 3],
    solid: Vec<bool>,
    spawn: Configuration,
    name: String,
    seed: u64,
}

impl World {
    /// A fully solid block to carve empty space out of.
    pub fn solid_block(name: &str, resolution: f64, min: VoxelIndex, dims: [i32; 3]) -> Self {
        assert!(dims.iter().all(|&d| d > 0), "world dims must be positive");
        let n = dims[0] as usize * dims[1] as usize * dims[2] as usize;
        World {
            resolution,
            min,
            dims,
            solid: vec![true; n],
            spawn: Configuration::default(),
            name: name.to_string(),
            seed: 0,
        }
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    pub fn min_index(&self) -> VoxelIndex {
        self.min
    }

    pub fn max_index(&self) -> VoxelIndex {
        VoxelIndex::new(
            self.min.x + self.dims[0] - 1,
            self.min.y + self.dims[1] - 1,
            self.min.z + self.dims[2] - 1,
        )
    }

    pub fn dims(&self) -> [i32; 3] {
        self.dims
    }

    pub fn spawn(&self) -> Configuration {
        self.spawn
    }

    pub fn set_spawn(&mut self, spawn: Configuration) -> Result<(), WorldError> {
        if self.is_solid(self.index_of(spawn.pos)) {
            return Err(WorldError::BadSpawn);
        }
        self.spawn = spawn;
        Ok(())
    }

    pub fn index_of(&self, p: Vec3) -> VoxelIndex {
        VoxelIndex::new(
            (p.x / self.resolution).floor() as i32,
            (p.y / self.resolution).floor() as i32,
            (p.z / self.resolution).floor() as i32,
        )
    }

    pub fn center_of(&self, idx: VoxelIndex) -> Vec3 {
        Vec3::new(
            (idx.x as f64 + 0.5) * self.resolution,
            (idx.y as f64 + 0.5) * self.resolution,
            (idx.z as f64 + 0.5) * self.resolution,
        )
    }

    fn flat(&self, idx: VoxelIndex) -> Option<usize> {
        let x = idx.x - self.min.x;
        let y = idx.y - self.min.y;
        let z = idx.z - self.min.z;
        if x < 0 || y < 0 || z < 0 || x >= self.dims[0] || y >= self.dims[1] || z >= self.dims[2] {
            return None;
        }
        Some((x as usize * self.dims[1] as usize + y as usize) * self.dims[2] as usize + z as usize)
    }

    /// Out-of-extent voxels count as empty (rays escape the world).
    pub fn is_solid(&self, idx: VoxelIndex) -> bool {
        match self.flat(idx) {
            Some(i) => self.solid[i],
            None => false,
        }
    }

    pub fn set_solid(&mut self, idx: VoxelIndex, solid: bool) {
        if let Some(i) = self.flat(idx) {
            self.solid[i] = solid;
        }
    }

    /// Carve the inclusive index box empty.
    pub fn carve_box(&mut self, lo: VoxelIndex, hi: VoxelIndex) {
        for x in lo.x..=hi.x {
            for y in lo.y..=hi.y {
                for z in lo.z..=hi.z {
                    self.set_solid(VoxelIndex::new(x, y, z), false);
                }
            }
        }
    }

    /// Fill the inclusive index box solid.
    pub fn fill_box(&mut self, lo: VoxelIndex, hi: VoxelIndex) {
        for x in lo.x..=hi.x {
            for y in lo.y..=hi.y {
                for z in lo.z..=hi.z {
                    self.set_solid(VoxelIndex::new(x, y, z), true);
                }
            }
        }
    }

    /// Carve a world-coordinate box (meters) empty.
    pub fn carve_world_box(&mut self, lo: Vec3, hi: Vec3) {
        let eps = self.resolution * 1e-6;
        let lo_i = self.index_of(lo + Vec3::new(eps, eps, eps));
        let hi_i = self.index_of(hi - Vec3::new(eps, eps, eps));
        self.carve_box(lo_i, hi_i);
    }

    pub fn empty_count(&self) -> usize {
        self.solid.iter().filter(|&&s| !s).count()
    }

    /// First solid voxel intersected by the ray, as (entry point, distance).
    pub fn cast_ray(&self, origin: Vec3, dir: Vec3, max_range: f64) -> Option<(Vec3, f64)> {
        let end = origin + dir * max_range;
        let mut out = None;
        traverse_segment(self.resolution, origin, end, |idx, t_entry| {
            if self.is_solid(idx) {
                let d = t_entry * max_range;
                out = Some((origin + dir * d, d));
                false
            } else {
                true
            }
        });
        out
    }

    /// Empty voxels reachable from `seed` by 6-connected flood fill.
    pub fn reachable_empty(&self, seed: VoxelIndex) -> Vec<VoxelIndex> {
        let mut visited = vec![false; self.solid.len()];
        let mut stack = Vec::new();
        let mut out = Vec::new();
        if let Some(i) = self.flat(seed) {
            if !self.solid[i] {
                visited[i] = true;
                stack.push(seed);
            }
        }
        while let Some(idx) = stack.pop() {
            out.push(idx);
            for nb in idx.neighbors6() {
                if let Some(i) = self.flat(nb) {
                    if !visited[i] && !self.solid[i] {
                        visited[i] = true;
                        stack.push(nb);
                    }
                }
            }
        }
        out
    }

    /// Verify the empty region is a single connected component containing the
    /// spawn.
    pub fn check_connected(&self) -> Result<(), WorldError> {
        let spawn_idx = self.index_of(self.spawn.pos);
        if self.is_solid(spawn_idx) {
            return Err(WorldError::BadSpawn);
        }
        let reachable = self.reachable_empty(spawn_idx).len();
        let total = self.empty_count();
        if reachable != total {
            return Err(WorldError::Disconnected(format!(
                "{reachable} of {total} empty voxels reachable from spawn"
            )));
        }
        Ok(())
    }

    /// Serialize to the world text format: a header line, then one solid
    /// voxel index per line or `fill` box runs.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let s = self.spawn;
        let _ = writeln!(
            out,
            "# world resolution={} spawn={:.6} {:.6} {:.6} {:.6}",
            self.resolution, s.pos.x, s.pos.y, s.pos.z, s.yaw
        );
        let _ = writeln!(
            out,
            "# extent min={} {} {} dims={} {} {}",
            self.min.x, self.min.y, self.min.z, self.dims[0], self.dims[1], self.dims[2]
        );
        // run-length encode along z within each (x, y) column
        for x in self.min.x..=self.max_index().x {
            for y in self.min.y..=self.max_index().y {
                let mut z = self.min.z;
                let z_end = self.max_index().z;
                while z <= z_end {
                    if !self.is_solid(VoxelIndex::new(x, y, z)) {
                        z += 1;
                        continue;
                    }
                    let z0 = z;
                    while z <= z_end && self.is_solid(VoxelIndex::new(x, y, z)) {
                        z += 1;
                    }
                    if z - z0 == 1 {
                        let _ = writeln!(out, "{x} {y} {z0}");
                    } else {
                        let _ = writeln!(out, "fill {x} {y} {z0} {x} {y} {}", z - 1);
                    }
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<World, WorldError> {
        let mut resolution = None;
        let mut spawn = None;
        let mut extent: Option<(VoxelIndex, [i32; 3])> = None;
        let mut solids: Vec<(VoxelIndex, VoxelIndex)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |msg: &str| WorldError::Parse { line: lineno + 1, msg: msg.to_string() };
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# world ") {
                for part in rest.split_whitespace() {
                    if let Some(v) = part.strip_prefix("resolution=") {
                        resolution =
                            Some(v.parse::<f64>().map_err(|_| err("bad resolution"))?);
                    } else if let Some(v) = part.strip_prefix("spawn=") {
                        spawn = Some(vec![v
                            .parse::<f64>()
                            .map_err(|_| err("bad spawn"))?]);
                    } else if let Some(s) = spawn.as_mut() {
                        if s.len() < 4 {
                            s.push(part.parse::<f64>().map_err(|_| err("bad spawn"))?);
                        }
                    }
                }
                continue;
            }
            if let Some(rest) = line.strip_prefix("# extent ") {
                let mut vals = Vec::new();
                for part in rest.split_whitespace() {
                    let v = part.split('=').next_back().unwrap_or(part);
                    if let Ok(n) = v.parse::<i32>() {
                        vals.push(n);
                    }
                }
                if vals.len() != 6 {
                    return Err(err("extent needs 6 integers"));
                }
                extent = Some((VoxelIndex::new(vals[0], vals[1], vals[2]), [vals[3], vals[4], vals[5]]));
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.first() == Some(&"fill") {
                if fields.len() != 7 {
                    return Err(err("fill needs 6 integers"));
                }
                let v: Result<Vec<i32>, _> = fields[1..].iter().map(|f| f.parse()).collect();
                let v = v.map_err(|_| err("bad fill integers"))?;
                solids.push((VoxelIndex::new(v[0], v[1], v[2]), VoxelIndex::new(v[3], v[4], v[5])));
            } else {
                if fields.len() != 3 {
                    return Err(err("voxel line needs 3 integers"));
                }
                let v: Result<Vec<i32>, _> = fields.iter().map(|f| f.parse()).collect();
                let v = v.map_err(|_| err("bad voxel integers"))?;
                let idx = VoxelIndex::new(v[0], v[1], v[2]);
                solids.push((idx, idx));
            }
        }
        let resolution = resolution
            .ok_or(WorldError::Parse { line: 0, msg: "missing world header".into() })?;
        let spawn_vals =
            spawn.ok_or(WorldError::Parse { line: 0, msg: "missing spawn".into() })?;
        if spawn_vals.len() != 4 {
            return Err(WorldError::Parse { line: 0, msg: "spawn needs 4 numbers".into() });
        }
        let (min, dims) = match extent {
            Some(e) => e,
            None => {
                // derive from solids hull
                let lo = solids.iter().map(|(a, _)| *a).min().unwrap_or(VoxelIndex::new(0, 0, 0));
                let hi = solids.iter().map(|(_, b)| *b).max().unwrap_or(VoxelIndex::new(0, 0, 0));
                (lo, [hi.x - lo.x + 1, hi.y - lo.y + 1, hi.z - lo.z + 1])
            }
        };
        let mut world = World::solid_block("loaded", resolution, min, dims);
        // start empty, then apply solids
        world.solid.fill(false);
        for (lo, hi) in solids {
            world.fill_box(lo, hi);
        }
        world.set_spawn(Configuration::new(spawn_vals[0], spawn_vals[1], spawn_vals[2], spawn_vals[3]))?;
        Ok(world)
    }
}

/// Kinds of world the generator and the episode configuration understand.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WorldSpec {
    /// Random tree of tunnels with branches, slopes and dead ends.
    TunnelNetwork {
        #[serde(default = "default_extent")]
        extent: [f64; 3],
        #[serde(default = "default_branches")]
        branches: usize,
        #[serde(default = "default_tunnel_width")]
        width: f64,
        #[serde(default = "default_tunnel_height")]
        height: f64,
        #[serde(default = "default_slope")]
        max_slope_deg: f64,
        #[serde(default = "default_resolution")]
        resolution: f64,
    },
    /// A grid of rooms connected by doorways.
    MultiRoom {
        #[serde(default = "default_rooms")]
        rooms: [usize; 2],
        #[serde(default = "default_room_size")]
        room_size: f64,
        #[serde(default = "default_tunnel_height")]
        height: f64,
        #[serde(default = "default_door")]
        door_width: f64,
        #[serde(default = "default_resolution")]
        resolution: f64,
    },
    /// Stacked levels connected by sloped ramps.
    VerticalMine {
        #[serde(default = "default_levels")]
        levels: usize,
        #[serde(default = "default_level_size")]
        level_size: f64,
        #[serde(default = "default_tunnel_height")]
        height: f64,
        #[serde(default = "default_resolution")]
        resolution: f64,
    },
    /// A straight corridor (fixture).
    Corridor {
        length: f64,
        width: f64,
        height: f64,
        #[serde(default = "default_resolution")]
        resolution: f64,
    },
    /// Radial zig-zag branches around a hub (fixture).
    Branches {
        branches: usize,
        branch_length: f64,
        #[serde(default = "default_tunnel_width")]
        width: f64,
        #[serde(default = "default_tunnel_height")]
        height: f64,
        #[serde(default)]
        zigzag: bool,
        #[serde(default = "default_resolution")]
        resolution: f64,
    },
    /// Flat start room, a ramp at a fixed inclination, upper room (fixture).
    Ramp {
        incline_deg: f64,
        #[serde(default = "default_ramp_length")]
        ramp_length: f64,
        #[serde(default = "default_tunnel_width")]
        width: f64,
        #[serde(default = "default_resolution")]
        resolution: f64,
    },
    /// Corridor interrupted by a deep pit (fixture for hanging vertices).
    Pit {
        #[serde(default = "default_pit_corridor")]
        length: f64,
        #[serde(default = "default_pit_span")]
        pit_span: f64,
        #[serde(default = "default_pit_depth")]
        pit_depth: f64,
        #[serde(default = "default_resolution")]
        resolution: f64,
    },
    /// Hub plus a long snaking branch (fixture for comm-loss scenarios).
    Snake {
        #[serde(default = "default_snake_leg")]
        leg_length: f64,
        #[serde(default = "default_snake_legs")]
        legs: usize,
        #[serde(default = "default_resolution")]
        resolution: f64,
    },
    /// Load from a world file.
    File { path: String },
}

fn default_extent() -> [f64; 3] {
    [80.0, 80.0, 12.0]
}
fn default_branches() -> usize {
    4
}
fn default_tunnel_width() -> f64 {
    4.0
}
fn default_tunnel_height() -> f64 {
    3.0
}
fn default_slope() -> f64 {
    15.0
}
fn default_resolution() -> f64 {
    0.3
}
fn default_rooms() -> [usize; 2] {
    [3, 3]
}
fn default_room_size() -> f64 {
    10.0
}
fn default_door() -> f64 {
    2.0
}
fn default_levels() -> usize {
    3
}
fn default_level_size() -> f64 {
    20.0
}
fn default_ramp_length() -> f64 {
    12.0
}
fn default_pit_corridor() -> f64 {
    40.0
}
fn default_pit_span() -> f64 {
    6.0
}
fn default_pit_depth() -> f64 {
    5.0
}
fn default_snake_leg() -> f64 {
    60.0
}
fn default_snake_legs() -> usize {
    5
}

/// Generate a world from a spec, deterministically for a fixed `(spec, seed)`.
pub fn generate_world(spec: &WorldSpec, seed: u64) -> Result<World, WorldError> {
    let mut world = match spec {
        WorldSpec::TunnelNetwork { extent, branches, width, height, max_slope_deg, resolution } => {
            gen_tunnel_network(*extent, *branches, *width, *height, *max_slope_deg, *resolution, seed)?
        }
        WorldSpec::MultiRoom { rooms, room_size, height, door_width, resolution } => {
            gen_multi_room(*rooms, *room_size, *height, *door_width, *resolution)?
        }
        WorldSpec::VerticalMine { levels, level_size, height, resolution } => {
            gen_vertical_mine(*levels, *level_size, *height, *resolution)?
        }
        WorldSpec::Corridor { length, width, height, resolution } => {
            fixtures::corridor(*length, *width, *height, *resolution)?
        }
        WorldSpec::Branches { branches, branch_length, width, height, zigzag, resolution } => {
            fixtures::branch_world(*branches, *branch_length, *width, *height, *zigzag, *resolution)?
        }
        WorldSpec::Ramp { incline_deg, ramp_length, width, resolution } => {
            fixtures::ramp_world(*incline_deg, *ramp_length, *width, *resolution)?
        }
        WorldSpec::Pit { length, pit_span, pit_depth, resolution } => {
            fixtures::pit_world(*length, *pit_span, *pit_depth, *resolution)?
        }
        WorldSpec::Snake { leg_length, legs, resolution } => {
            fixtures::comm_loss_world(*leg_length, *legs, *resolution)?
        }
        WorldSpec::File { path } => {
            let text = std::fs::read_to_string(path)?;
            World::from_text(&text)?
        }
    };
    world.set_seed(seed);
    world.check_connected()?;
    Ok(world)
}

fn positive(v: f64, what: &str) -> Result<f64, WorldError> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(WorldError::BadParameter(format!("{what} must be positive, got {v}")))
    }
}

fn gen_tunnel_network(
    extent: [f64; 3],
    branches: usize,
    width: f64,
    height: f64,
    max_slope_deg: f64,
    resolution: f64,
    seed: u64,
) -> Result<World, WorldError> {
    for (v, what) in [
        (extent[0], "extent.x"),
        (extent[1], "extent.y"),
        (extent[2], "extent.z"),
        (width, "width"),
        (height, "height"),
        (resolution, "resolution"),
    ] {
        positive(v, what)?;
    }
    let mut rng = crate::seeded_rng(seed, crate::stream::WORLD, 0);
    let dims = [
        (extent[0] / resolution).ceil() as i32,
        (extent[1] / resolution).ceil() as i32,
        (extent[2] / resolution).ceil() as i32,
    ];
    let mut world = World::solid_block("tunnel-network", resolution, VoxelIndex::new(0, 0, 0), dims);

    let hub = Vec3::new(extent[0] * 0.5, extent[1] * 0.5, height * 0.5 + resolution);
    carve_room(&mut world, hub, width * 1.5, width * 1.5, height);

    let margin = width;
    let max_slope = max_slope_deg.to_radians().tan();
    // random walk per branch, with occasional sub-branches ending dead
    let mut heads: Vec<(Vec3, f64)> = (0..branches.max(1))
        .map(|i| (hub, i as f64 * std::f64::consts::TAU / branches.max(1) as f64))
        .collect();
    let mut budget = ((extent[0] + extent[1]) * 1.5) as i32;
    while let Some((start, heading)) = heads.pop() {
        let mut pos = start;
        let mut heading = heading;
        let segs = rng.random_range(2..=4);
        for _ in 0..segs {
            if budget <= 0 {
                break;
            }
            let len: f64 = rng.random_range(8.0..18.0);
            let slope = rng.random_range(-max_slope..=max_slope);
            let dir = Vec3::new(heading.cos(), heading.sin(), slope).normalized().unwrap();
            let end = pos + dir * len;
            let end = Vec3::new(
                end.x.clamp(margin, extent[0] - margin),
                end.y.clamp(margin, extent[1] - margin),
                end.z.clamp(height * 0.5 + resolution, extent[2] - height * 0.5 - resolution),
            );
            carve_tunnel(&mut world, pos, end, width, height);
            budget -= (end - pos).norm() as i32;
            pos = end;
            heading += rng.random_range(-0.9..0.9);
            if rng.random_bool(0.35) && heads.len() < branches * 2 {
                heads.push((pos, heading + rng.random_range(1.0..2.2)));
            }
        }
    }

    world.set_spawn(Configuration::from_pos(hub, 0.0))?;
    Ok(world)
}

fn gen_multi_room(
    rooms: [usize; 2],
    room_size: f64,
    height: f64,
    door_width: f64,
    resolution: f64,
) -> Result<World, WorldError> {
    positive(room_size, "room_size")?;
    positive(height, "height")?;
    positive(door_width, "door_width")?;
    positive(resolution, "resolution")?;
    if rooms[0] == 0 || rooms[1] == 0 {
        return Err(WorldError::BadParameter("rooms counts must be positive".into()));
    }
    let wall = 2.0 * resolution;
    let pitch = room_size + wall;
    let ext_x = pitch * rooms[0] as f64 + wall;
    let ext_y = pitch * rooms[1] as f64 + wall;
    let dims = [
        (ext_x / resolution).ceil() as i32,
        (ext_y / resolution).ceil() as i32,
        ((height + 2.0 * wall) / resolution).ceil() as i32,
    ];
    let mut world = World::solid_block("multi-room", resolution, VoxelIndex::new(0, 0, 0), dims);
    let z0 = wall;
    let z1 = wall + height;
    for rx in 0..rooms[0] {
        for ry in 0..rooms[1] {
            let x0 = wall + rx as f64 * pitch;
            let y0 = wall + ry as f64 * pitch;
            world.carve_world_box(Vec3::new(x0, y0, z0), Vec3::new(x0 + room_size, y0 + room_size, z1));
            // doors east and north
            let cx = x0 + room_size * 0.5;
            let cy = y0 + room_size * 0.5;
            if rx + 1 < rooms[0] {
                world.carve_world_box(
                    Vec3::new(x0 + room_size, cy - door_width * 0.5, z0),
                    Vec3::new(x0 + room_size + wall, cy + door_width * 0.5, z1),
                );
            }
            if ry + 1 < rooms[1] {
                world.carve_world_box(
                    Vec3::new(cx - door_width * 0.5, y0 + room_size, z0),
                    Vec3::new(cx + door_width * 0.5, y0 + room_size + wall, z1),
                );
            }
        }
    }
    let spawn = Vec3::new(wall + room_size * 0.5, wall + room_size * 0.5, z0 + height * 0.5);
    world.set_spawn(Configuration::from_pos(spawn, 0.0))?;
    Ok(world)
}

fn gen_vertical_mine(
    levels: usize,
    level_size: f64,
    height: f64,
    resolution: f64,
) -> Result<World, WorldError> {
    positive(level_size, "level_size")?;
    positive(height, "height")?;
    positive(resolution, "resolution")?;
    if levels == 0 {
        return Err(WorldError::BadParameter("levels must be positive".into()));
    }
    let wall = 2.0 * resolution;
    let gap = height; // vertical spacing between level floors
    let ext_z = wall + levels as f64 * (height + gap) + wall;
    let ramp_w = 3.0;
    let ext_x = level_size + ramp_w + 3.0 * wall;
    let dims = [
        (ext_x / resolution).ceil() as i32,
        ((level_size + 2.0 * wall) / resolution).ceil() as i32,
        (ext_z / resolution).ceil() as i32,
    ];
    let mut world = World::solid_block("vertical-mine", resolution, VoxelIndex::new(0, 0, 0), dims);
    for l in 0..levels {
        let z0 = wall + l as f64 * (height + gap);
        world.carve_world_box(
            Vec3::new(wall, wall, z0),
            Vec3::new(wall + level_size, wall + level_size, z0 + height),
        );
        if l + 1 < levels {
            // sloped ramp shaft connecting to the next level along +x side
            let z1 = wall + (l + 1) as f64 * (height + gap);
            let x0 = wall + level_size;
            let steps = ((z1 - z0) / resolution).ceil() as i32;
            for s in 0..=steps {
                let t = s as f64 / steps as f64;
                let z = z0 + t * (z1 - z0);
                let y0 = wall + level_size * 0.5 - ramp_w * 0.5 + t * 0.0;
                world.carve_world_box(
                    Vec3::new(x0 - 1.0, y0, z),
                    Vec3::new(x0 + ramp_w, y0 + ramp_w, z + height),
                );
            }
        }
    }
    let spawn = Vec3::new(wall + level_size * 0.5, wall + level_size * 0.5, wall + height * 0.5);
    world.set_spawn(Configuration::from_pos(spawn, 0.0))?;
    Ok(world)
}

fn carve_room(world: &mut World, center: Vec3, half_x: f64, half_y: f64, height: f64) {
    world.carve_world_box(
        Vec3::new(center.x - half_x, center.y - half_y, center.z - height * 0.5),
        Vec3::new(center.x + half_x, center.y + half_y, center.z + height * 0.5),
    );
}

/// Carve a tunnel of rectangular cross-section between two centerline points.
fn carve_tunnel(world: &mut World, a: Vec3, b: Vec3, width: f64, height: f64) {
    let res = world.resolution();
    let len = (b - a).norm();
    let steps = (len / (res * 0.5)).ceil().max(1.0) as usize;
    let hw = width * 0.5;
    let hh = height * 0.5;
    for i in 0..=steps {
        let p = a.lerp(b, i as f64 / steps as f64);
        world.carve_world_box(
            Vec3::new(p.x - hw, p.y - hw, p.z - hh),
            Vec3::new(p.x + hw, p.y + hw, p.z + hh),
        );
    }
}

/// Deterministic hand-built worlds used by tests and shipped scenarios.
pub mod fixtures {
    use super::*;

    /// Straight corridor along +x with sealed walls.
    pub fn corridor(length: f64, width: f64, height: f64, resolution: f64) -> Result<World, WorldError> {
        positive(length, "length")?;
        positive(width, "width")?;
        positive(height, "height")?;
        positive(resolution, "resolution")?;
        let wall = 2.0 * resolution;
        let dims = [
            ((length + 2.0 * wall) / resolution).ceil() as i32,
            ((width + 2.0 * wall) / resolution).ceil() as i32,
            ((height + 2.0 * wall) / resolution).ceil() as i32,
        ];
        let mut w = World::solid_block("corridor", resolution, VoxelIndex::new(0, 0, 0), dims);
        w.carve_world_box(Vec3::new(wall, wall, wall), Vec3::new(wall + length, wall + width, wall + height));
        let spawn = Vec3::new(wall + 1.0, wall + width * 0.5, wall + height * 0.5);
        w.set_spawn(Configuration::from_pos(spawn, 0.0))?;
        Ok(w)
    }

    /// A closed single empty room.
    pub fn box_room(size: [f64; 3], resolution: f64) -> Result<World, WorldError> {
        let wall = 2.0 * resolution;
        let dims = [
            ((size[0] + 2.0 * wall) / resolution).ceil() as i32,
            ((size[1] + 2.0 * wall) / resolution).ceil() as i32,
            ((size[2] + 2.0 * wall) / resolution).ceil() as i32,
        ];
        let mut w = World::solid_block("box-room", resolution, VoxelIndex::new(0, 0, 0), dims);
        w.carve_world_box(
            Vec3::new(wall, wall, wall),
            Vec3::new(wall + size[0], wall + size[1], wall + size[2]),
        );
        let spawn = Vec3::new(wall + size[0] * 0.5, wall + size[1] * 0.5, wall + size[2] * 0.5);
        w.set_spawn(Configuration::from_pos(spawn, 0.0))?;
        Ok(w)
    }

    /// Hub room with `branches` radial tunnels; `zigzag` bends each branch so
    /// it cannot be seen end-to-end from the hub.
    pub fn branch_world(
        branches: usize,
        branch_length: f64,
        width: f64,
        height: f64,
        zigzag: bool,
        resolution: f64,
    ) -> Result<World, WorldError> {
        if branches == 0 {
            return Err(WorldError::BadParameter("branches must be positive".into()));
        }
        positive(branch_length, "branch_length")?;
        let reach = branch_length + width * 2.0 + 4.0;
        let ext = 2.0 * reach;
        let wall = 2.0 * resolution;
        let dims = [
            (ext / resolution).ceil() as i32,
            (ext / resolution).ceil() as i32,
            ((height + 2.0 * wall + 2.0) / resolution).ceil() as i32,
        ];
        let mut w = World::solid_block("branches", resolution, VoxelIndex::new(0, 0, 0), dims);
        let hub = Vec3::new(reach, reach, wall + height * 0.5);
        carve_room(&mut w, hub, width, width, height);
        for b in 0..branches {
            let heading = b as f64 * std::f64::consts::TAU / branches as f64;
            let dir = Vec3::new(heading.cos(), heading.sin(), 0.0);
            if zigzag {
                // three legs with +-35 degree bends
                let leg = branch_length / 3.0;
                let mut pos = hub;
                let mut h = heading;
                for (i, bend) in [0.0f64, 0.6, -0.6].iter().enumerate() {
                    h += bend;
                    let d = Vec3::new(h.cos(), h.sin(), 0.0);
                    let end = pos + d * leg;
                    carve_tunnel(&mut w, pos, end, width, height);
                    pos = end;
                    let _ = i;
                }
            } else {
                carve_tunnel(&mut w, hub, hub + dir * branch_length, width, height);
            }
        }
        w.set_spawn(Configuration::from_pos(hub, 0.0))?;
        Ok(w)
    }

    /// Start room, constant-slope ramp up, upper room. The ramp surface is a
    /// voxelized incline of the given angle.
    pub fn ramp_world(incline_deg: f64, ramp_length: f64, width: f64, resolution: f64) -> Result<World, WorldError> {
        positive(ramp_length, "ramp_length")?;
        let height = 3.0;
        let wall = 2.0 * resolution;
        let rise = ramp_length * incline_deg.to_radians().tan();
        let room = 10.0;
        let ext_x = room + ramp_length + room + 2.0 * wall;
        let ext_y = width + 2.0 * wall;
        let ext_z = wall + rise + height + wall + 1.0;
        let dims = [
            (ext_x / resolution).ceil() as i32,
            (ext_y / resolution).ceil() as i32,
            (ext_z / resolution).ceil() as i32,
        ];
        let mut w = World::solid_block("ramp", resolution, VoxelIndex::new(0, 0, 0), dims);
        // lower room
        w.carve_world_box(Vec3::new(wall, wall, wall), Vec3::new(wall + room, wall + width, wall + height));
        // ramp: carve columns whose floor rises linearly
        let x0 = wall + room;
        let steps = (ramp_length / (resolution * 0.5)).ceil() as usize;
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            let x = x0 + t * ramp_length;
            let floor = wall + t * rise;
            w.carve_world_box(
                Vec3::new(x - resolution, wall, floor),
                Vec3::new(x + resolution, wall + width, floor + height),
            );
        }
        // upper room
        let x1 = x0 + ramp_length;
        w.carve_world_box(
            Vec3::new(x1, wall, wall + rise),
            Vec3::new(x1 + room, wall + width, wall + rise + height),
        );
        let spawn = Vec3::new(wall + room * 0.3, wall + width * 0.5, wall + 0.8);
        let mut world = w;
        world.set_spawn(Configuration::from_pos(spawn, 0.0))?;
        Ok(world)
    }

    /// Corridor whose middle section has a deep pit: free space continues
    /// above the pit but has no supportive ground, so samples there hang.
    pub fn pit_world(length: f64, pit_span: f64, pit_depth: f64, resolution: f64) -> Result<World, WorldError> {
        positive(length, "length")?;
        positive(pit_span, "pit_span")?;
        positive(pit_depth, "pit_depth")?;
        let width = 4.0;
        let height = 3.0;
        let wall = 2.0 * resolution;
        let dims = [
            ((length + 2.0 * wall) / resolution).ceil() as i32,
            ((width + 2.0 * wall) / resolution).ceil() as i32,
            ((pit_depth + height + 2.0 * wall) / resolution).ceil() as i32,
        ];
        let mut w = World::solid_block("pit", resolution, VoxelIndex::new(0, 0, 0), dims);
        let floor = wall + pit_depth;
        // corridor above pit depth
        w.carve_world_box(
            Vec3::new(wall, wall, floor),
            Vec3::new(wall + length, wall + width, floor + height),
        );
        // the pit itself in the middle
        let pit_x0 = wall + (length - pit_span) * 0.5;
        w.carve_world_box(
            Vec3::new(pit_x0, wall, wall),
            Vec3::new(pit_x0 + pit_span, wall + width, floor),
        );
        let spawn = Vec3::new(wall + 1.5, wall + width * 0.5, floor + 0.8);
        w.set_spawn(Configuration::from_pos(spawn, 0.0))?;
        Ok(w)
    }

    /// Hub in comm range of the origin plus one long staircase branch whose
    /// legs alternate +x and +y, so distance from the hub grows
    /// monotonically and comm never returns until the robot backtracks.
    pub fn comm_loss_world(leg_length: f64, legs: usize, resolution: f64) -> Result<World, WorldError> {
        positive(leg_length, "leg_length")?;
        if legs == 0 {
            return Err(WorldError::BadParameter("legs must be positive".into()));
        }
        let width = 4.0;
        let height = 3.0;
        let wall = 2.0 * resolution;
        let span = (legs as f64 / 2.0).ceil() * leg_length + 20.0;
        let dims = [
            (span / resolution).ceil() as i32,
            (span / resolution).ceil() as i32,
            ((height + 2.0 * wall) / resolution).ceil() as i32,
        ];
        let mut w = World::solid_block("comm-loss", resolution, VoxelIndex::new(0, 0, 0), dims);
        let z = wall + height * 0.5;
        let hub = Vec3::new(8.0, 8.0, z);
        carve_room(&mut w, hub, width, width, height);
        let mut pos = hub;
        for leg in 0..legs {
            let dir = if leg % 2 == 0 {
                Vec3::new(1.0, 0.0, 0.0)
            } else {
                Vec3::new(0.0, 1.0, 0.0)
            };
            let end = pos + dir * leg_length;
            carve_tunnel(&mut w, pos, end, width, height);
            pos = end;
        }
        w.set_spawn(Configuration::from_pos(hub, 0.0))?;
        Ok(w)
    }
}

pub use fixtures::*;

/// Pick a deterministic pseudo-random empty voxel center (used by tests).
pub fn random_empty_point(world: &World, rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let idx = VoxelIndex::new(
            rng.random_range(world.min_index().x..=world.max_index().x),
            rng.random_range(world.min_index().y..=world.max_index().y),
            rng.random_range(world.min_index().z..=world.max_index().z),
        );
        if !world.is_solid(idx) {
            return world.center_of(idx);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corridor_volume_is_analytic() {
        // 50 x 4 x 3 m at 1 m resolution
        let w = fixtures::corridor(50.0, 4.0, 3.0, 1.0).unwrap();
        assert_eq!(w.empty_count(), 50 * 4 * 3);
        w.check_connected().unwrap();
    }

    #[test]
    fn generator_is_deterministic() {
        let spec = WorldSpec::TunnelNetwork {
            extent: [60.0, 60.0, 10.0],
            branches: 3,
            width: 4.0,
            height: 3.0,
            max_slope_deg: 12.0,
            resolution: 0.5,
        };
        let a = generate_world(&spec, 11).unwrap();
        let b = generate_world(&spec, 11).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        let c = generate_world(&spec, 12).unwrap();
        assert_ne!(a.to_text(), c.to_text());
    }

    #[test]
    fn generated_worlds_are_connected() {
        for seed in [1u64, 7, 42] {
            let spec = WorldSpec::TunnelNetwork {
                extent: [50.0, 50.0, 9.0],
                branches: 4,
                width: 3.0,
                height: 2.5,
                max_slope_deg: 10.0,
                resolution: 0.5,
            };
            generate_world(&spec, seed).unwrap().check_connected().unwrap();
        }
        generate_world(
            &WorldSpec::MultiRoom {
                rooms: [2, 2],
                room_size: 8.0,
                height: 3.0,
                door_width: 2.0,
                resolution: 0.5,
            },
            0,
        )
        .unwrap();
        generate_world(
            &WorldSpec::VerticalMine { levels: 2, level_size: 12.0, height: 3.0, resolution: 0.5 },
            0,
        )
        .unwrap();
    }

    #[test]
    fn t_junction_dead_ends() {
        // a 3-branch radial world has exactly 3 dead-end faces; count them by
        // flood-filling the empty region and looking for reachable voxels
        // whose forward neighborhood terminates
        let w = fixtures::branch_world(3, 15.0, 3.0, 2.5, false, 0.5).unwrap();
        w.check_connected().unwrap();
        assert_eq!(count_dead_end_faces(&w), 3);
    }

    /// Boundary-analysis oracle: an empty voxel column is a dead-end face if
    /// the branch direction continues into solid for the whole cross-section.
    fn count_dead_end_faces(w: &World) -> usize {
        // walk each radial branch direction from spawn until the tunnel ends
        let hub = w.spawn().pos;
        let mut count = 0;
        for b in 0..3 {
            let heading = b as f64 * std::f64::consts::TAU / 3.0;
            let dir = Vec3::new(heading.cos(), heading.sin(), 0.0);
            // march until the centerline voxel goes solid; that's a face
            let mut d = 0.0;
            while d < 100.0 {
                let p = hub + dir * d;
                if w.is_solid(w.index_of(p)) {
                    count += 1;
                    break;
                }
                d += w.resolution() * 0.5;
            }
        }
        count
    }

    #[test]
    fn world_text_roundtrip() {
        let w = fixtures::branch_world(3, 10.0, 3.0, 2.5, true, 0.5).unwrap();
        let text = w.to_text();
        let parsed = World::from_text(&text).unwrap();
        assert_eq!(parsed.to_text(), text);
        assert_eq!(parsed.empty_count(), w.empty_count());
        assert_eq!(parsed.spawn(), w.spawn());
    }

    #[test]
    fn ramp_world_has_expected_slope() {
        let w = fixtures::ramp_world(20.0, 12.0, 4.0, 0.2).unwrap();
        w.check_connected().unwrap();
        // probe ground height: descend from inside the carved space until the
        // empty-to-solid transition marks the floor
        let probe = |x: f64| -> f64 {
            // start just under the world ceiling, inside the extent
            let mut z = (w.max_index().z as f64) * w.resolution() - 0.1;
            let mut inside = false;
            while z > 0.0 {
                let solid = w.is_solid(w.index_of(Vec3::new(x, 2.4, z)));
                if !solid {
                    inside = true;
                } else if inside {
                    return z;
                }
                z -= 0.05;
            }
            0.0
        };
        let x0 = 10.5;
        let x1 = 22.0;
        let slope = (probe(x1) - probe(x0)) / (x1 - x0);
        let expect = 20f64.to_radians().tan();
        assert!((slope - expect).abs() < 0.05, "slope {slope} vs {expect}");
    }
}
