//! Random local graph construction: free-space sampling inside the adaptive
//! bound, ground projection with hanging classification, and admissible-edge
//! checks honoring traversability limits.

use rand_chacha::ChaCha8Rng;

use crate::math::{Configuration, Vec3};
use crate::planner::bound::BoundingBox;
use crate::planner::PlannerConfig;
use crate::robot::RobotClass;
use crate::voxel::{GroundParams, OccupancyMap, VoxelState};

/// A sampled configuration in the local graph.
#[derive(Clone, Debug)]
pub struct Vertex {
    pub id: usize,
    pub conf: Configuration,
    /// Free space without supportive ground below (ground robots only).
    pub hanging: bool,
    /// Final gain, attenuated if hanging.
    pub gain: f64,
    /// Gain before this vertex's own hanging attenuation.
    pub raw_gain: f64,
    pub dist_from_root: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub length: f64,
}

/// Connected sampling graph rooted at the robot's configuration.
#[derive(Clone, Debug)]
pub struct LocalGraph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub adj: Vec<Vec<(usize, f64)>>,
    pub root: usize,
    pub bound: BoundingBox,
}

impl LocalGraph {
    fn new(root_conf: Configuration, bound: BoundingBox) -> Self {
        LocalGraph {
            vertices: vec![Vertex {
                id: 0,
                conf: root_conf,
                hanging: false,
                gain: 0.0,
                raw_gain: 0.0,
                dist_from_root: 0.0,
            }],
            edges: Vec::new(),
            adj: vec![Vec::new()],
            root: 0,
            bound,
        }
    }

    fn add_vertex(&mut self, conf: Configuration, hanging: bool) -> usize {
        let id = self.vertices.len();
        self.vertices.push(Vertex { id, conf, hanging, gain: 0.0, raw_gain: 0.0, dist_from_root: f64::INFINITY });
        self.adj.push(Vec::new());
        id
    }

    fn add_edge(&mut self, u: usize, v: usize) {
        let length = self.vertices[u].conf.pos.dist(self.vertices[v].conf.pos);
        self.edges.push(Edge { u, v, length });
        self.adj[u].push((v, length));
        self.adj[v].push((u, length));
    }

    fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].iter().any(|&(w, _)| w == v)
    }

    /// Nearest vertex to `p` by Euclidean distance; ties take the smaller id.
    pub fn nearest_vertex(&self, p: Vec3) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for v in &self.vertices {
            let d = v.conf.pos.dist(p);
            if d < best_d {
                best_d = d;
                best = v.id;
            }
        }
        best
    }

    /// Vertices within `radius` of `p`, ascending id.
    pub fn vertices_within(&self, p: Vec3, radius: f64) -> Vec<usize> {
        self.vertices
            .iter()
            .filter(|v| v.conf.pos.dist(p) <= radius)
            .map(|v| v.id)
            .collect()
    }
}

/// Inclination of the straight segment `a -> b`: |dz| over horizontal run.
/// Vertical segments report infinity.
pub fn segment_inclination_tan(a: Vec3, b: Vec3) -> f64 {
    let dz = (b.z - a.z).abs();
    let run = a.dist_xy(b);
    if run < 1e-9 {
        if dz < 1e-9 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        dz / run
    }
}

/// Height of the supporting surface top in the column below `(x, y)`,
/// scanning down from `z_from` by at most `max_drop`.
fn surface_height(map: &OccupancyMap, x: f64, y: f64, z_from: f64, max_drop: f64) -> Option<f64> {
    let res = map.resolution();
    let base = map.world_to_index(Vec3::new(x, y, z_from));
    let levels = (max_drop / res).ceil().max(1.0) as i32;
    for k in 0..=levels {
        let idx = crate::voxel::VoxelIndex::new(base.x, base.y, base.z - k);
        if map.state(idx) == VoxelState::Occupied {
            return Some((idx.z + 1) as f64 * res);
        }
    }
    None
}

/// Terrain slope under a standing point: the steepest of the two axis
/// gradients measured over a 1 m baseline of mapped surface heights.
/// Missing probes (unmapped or drop-off columns) contribute nothing.
pub fn terrain_slope_tan(map: &OccupancyMap, p: Vec3, prm: &crate::voxel::GroundParams) -> f64 {
    let drop = prm.max_drop + 0.6;
    let h = |dx: f64, dy: f64| surface_height(map, p.x + dx, p.y + dy, p.z + 0.3, drop);
    let mut steepest = 0.0f64;
    if let (Some(a), Some(b)) = (h(-0.5, 0.0), h(0.5, 0.0)) {
        steepest = steepest.max((b - a).abs());
    }
    if let (Some(a), Some(b)) = (h(0.0, -0.5), h(0.0, 0.5)) {
        steepest = steepest.max((b - a).abs());
    }
    steepest
}

/// For ground robots, the projected polyline a ground edge would follow:
/// the segment sampled every `edge_step` with every interior sample projected
/// onto attached ground whose local terrain slope is within the robot's
/// limit. `None` if any sample hangs, projects into non-free space, or
/// stands on terrain steeper than the robot can hold.
pub fn ground_edge_polyline(
    map: &OccupancyMap,
    a: Configuration,
    b: Configuration,
    cfg: &PlannerConfig,
) -> Option<Vec<Vec3>> {
    let prm = cfg.robot.ground_params();
    let max_tan = cfg.robot.max_inclination.tan();
    let len = a.pos.dist(b.pos);
    let n = (len / cfg.edge_step).ceil().max(1.0) as usize;
    let mut pts = Vec::with_capacity(n + 1);
    pts.push(a.pos);
    for i in 1..n {
        let p = a.pos.lerp(b.pos, i as f64 / n as f64);
        if map.state_at(p) != VoxelState::Free {
            return None;
        }
        let g = map.project_to_ground(p, 0.0, &prm);
        if !g.attached {
            return None;
        }
        pts.push(g.projected.pos);
    }
    pts.push(b.pos);
    for p in &pts {
        if terrain_slope_tan(map, *p, &prm) > max_tan {
            return None;
        }
    }
    Some(pts)
}

/// Admissibility of the edge between two configurations.
///
/// Aerial: a collision-free straight segment. Ground: every interior sample
/// must project onto attached ground, consecutive projected samples must be
/// collision-free, and each sub-segment inclination must stay within the
/// robot's limit. Edges incident to a hanging vertex skip the projection and
/// obey only collision and inclination.
pub fn admissible_edge(
    map: &OccupancyMap,
    a: Configuration,
    a_hanging: bool,
    b: Configuration,
    b_hanging: bool,
    cfg: &PlannerConfig,
) -> bool {
    let radius = cfg.robot.radius;
    if cfg.robot.class == RobotClass::Aerial {
        return map.segment_free(a.pos, b.pos, radius);
    }
    let max_tan = cfg.robot.max_inclination.tan();
    if a_hanging || b_hanging {
        return segment_inclination_tan(a.pos, b.pos) <= max_tan
            && map.segment_free(a.pos, b.pos, radius);
    }
    let Some(polyline) = ground_edge_polyline(map, a, b, cfg) else {
        return false;
    };
    for pair in polyline.windows(2) {
        if segment_inclination_tan(pair[0], pair[1]) > max_tan {
            return false;
        }
        if !map.segment_free(pair[0], pair[1], radius) {
            return false;
        }
    }
    true
}

/// Outcome of a graph build, with the sampling effort spent.
#[derive(Clone, Debug)]
pub struct BuildStats {
    pub samples_tried: usize,
    pub vertices: usize,
    pub edges: usize,
}

/// Build the random local graph rooted at `root`.
///
/// Samples configurations uniformly over the known-free voxels inside
/// `bound` (optionally clipped to an assigned exploration volume), projects
/// them to the ground for ground robots (marking hanging ones), connects each
/// accepted sample to its nearest vertex and to all admissible vertices
/// within `delta`, and stops at the vertex/edge caps or after the
/// sampling-attempt cap.
pub fn build_local_graph(
    map: &OccupancyMap,
    root: Configuration,
    bound: BoundingBox,
    clip: Option<&BoundingBox>,
    cfg: &PlannerConfig,
    rng: &mut ChaCha8Rng,
) -> (LocalGraph, BuildStats) {
    let mut graph = LocalGraph::new(root, bound);
    let ground = cfg.robot.class == RobotClass::Ground;
    let hull = graph.bound.hull_aabb();
    // Fresh samples project down through the whole local volume; the tight
    // per-edge drop only applies when walking edges (ditch detection).
    let prm = GroundParams {
        max_drop: (hull.max.z - hull.min.z).max(cfg.robot.ground_params().max_drop),
        ..cfg.robot.ground_params()
    };
    let attempt_cap = cfg.sample_attempt_factor.saturating_mul(cfg.n_v_max.max(1));
    let mut attempts = 0usize;

    // Uniform sampling over box-intersected free space, realized as a draw
    // from the free voxels inside the bound plus in-voxel jitter.
    let candidates = map.free_voxels_in(&hull);
    if candidates.is_empty() {
        let stats = BuildStats { samples_tried: 0, vertices: 1, edges: 0 };
        return (graph, stats);
    }
    let half = map.resolution() * 0.5;

    while graph.vertices.len() < cfg.n_v_max
        && graph.edges.len() < cfg.n_e_max
        && attempts < attempt_cap
    {
        attempts += 1;
        use rand::Rng as _;
        let vox = candidates[rng.random_range(0..candidates.len())];
        let sample = map.index_center(vox)
            + Vec3::new(
                rng.random_range(-half..half),
                rng.random_range(-half..half),
                rng.random_range(-half..half),
            );
        if !graph.bound.contains(sample) {
            continue;
        }
        if let Some(clip) = clip {
            if !clip.contains(sample) {
                continue;
            }
        }
        if map.state_at(sample) != VoxelState::Free {
            continue;
        }
        let (pos, hanging) = if ground {
            let g = map.project_to_ground(sample, 0.0, &prm);
            if g.attached {
                if map.state_at(g.projected.pos) != VoxelState::Free {
                    continue;
                }
                if !graph.bound.contains(g.projected.pos) {
                    continue;
                }
                (g.projected.pos, false)
            } else {
                (sample, true)
            }
        } else {
            (sample, false)
        };

        let nearest = graph.nearest_vertex(pos);
        let near_conf = graph.vertices[nearest].conf;
        // yaw aligned to the incoming edge
        let yaw = Configuration::from_pos(near_conf.pos, 0.0).yaw_toward(pos);
        let conf = Configuration::from_pos(pos, yaw);
        if !admissible_edge(map, near_conf, graph.vertices[nearest].hanging, conf, hanging, cfg) {
            continue;
        }
        let id = graph.add_vertex(conf, hanging);
        graph.add_edge(nearest, id);
        // densify toward all admissible vertices within delta
        for other in graph.vertices_within(pos, cfg.delta) {
            if other == id || other == nearest || graph.has_edge(id, other) {
                continue;
            }
            if graph.edges.len() >= cfg.n_e_max {
                break;
            }
            let o = &graph.vertices[other];
            if admissible_edge(map, o.conf, o.hanging, conf, hanging, cfg) {
                graph.add_edge(other, id);
            }
        }
    }

    let stats = BuildStats {
        samples_tried: attempts,
        vertices: graph.vertices.len(),
        edges: graph.edges.len(),
    };
    (graph, stats)
}
