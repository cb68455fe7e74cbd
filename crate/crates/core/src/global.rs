//! The global exploration layer: a persistent per-robot graph of visited
//! space with remembered frontier vertices, repositioning when the local
//! layer runs dry, and endurance-bounded homing.

use crate::math::{Configuration, Vec3};
use crate::planner::dijkstra::dijkstra;
use crate::planner::gain::volumetric_gain;
use crate::planner::graph::LocalGraph;
use crate::planner::ShortestPathTree;
use crate::sensor::SensorModel;
use crate::voxel::OccupancyMap;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// A remembered configuration in the robot's global graph.
#[derive(Clone, Debug)]
pub struct GlobalVertex {
    pub id: usize,
    pub conf: Configuration,
    /// Last evaluated volumetric gain at this vertex.
    pub stored_gain: f64,
    /// Still considered a frontier worth revisiting.
    pub is_frontier: bool,
}

/// Endurance bookkeeping for homing decisions.
#[derive(Clone, Copy, Debug)]
pub struct EnduranceState {
    pub t_end: f64,
    pub elapsed: f64,
    pub speed: f64,
}

/// Outcome of the homing check.
#[derive(Clone, Debug)]
pub enum HomingDecision {
    Continue,
    GoHome(Vec<Configuration>),
}

/// Persistent global graph of one robot: commanded paths plus pruned
/// high-gain local vertices, rooted at the home configuration.
pub struct GlobalGraphRobot {
    pub vertices: Vec<GlobalVertex>,
    pub adj: Vec<Vec<(usize, f64)>>,
    pub home: usize,
    merge_radius: f64,
    /// Bumped whenever the graph changes; used by callers to cache routes.
    pub version: u64,
}

impl GlobalGraphRobot {
    pub fn new(home: Configuration) -> Self {
        GlobalGraphRobot {
            vertices: vec![GlobalVertex { id: 0, conf: home, stored_gain: 0.0, is_frontier: false }],
            adj: vec![Vec::new()],
            home: 0,
            merge_radius: 0.3,
            version: 0,
        }
    }

    pub fn home_conf(&self) -> Configuration {
        self.vertices[self.home].conf
    }

    pub fn frontier_vertices(&self) -> impl Iterator<Item = &GlobalVertex> {
        self.vertices.iter().filter(|v| v.is_frontier)
    }

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

    /// Insert a configuration, merging with an existing vertex within the
    /// merge radius. Returns the vertex id.
    fn add_or_merge(&mut self, conf: Configuration) -> usize {
        let near = self.nearest_vertex(conf.pos);
        if self.vertices[near].conf.pos.dist(conf.pos) <= self.merge_radius {
            return near;
        }
        let id = self.vertices.len();
        self.vertices.push(GlobalVertex { id, conf, stored_gain: 0.0, is_frontier: false });
        self.adj.push(Vec::new());
        self.version += 1;
        id
    }

    fn connect(&mut self, u: usize, v: usize) {
        if u == v {
            return;
        }
        if self.adj[u].iter().any(|&(w, _)| w == v) {
            return;
        }
        let len = self.vertices[u].conf.pos.dist(self.vertices[v].conf.pos);
        self.adj[u].push((v, len));
        self.adj[v].push((u, len));
        self.version += 1;
    }

    /// Append a chain of configurations starting from the vertex nearest the
    /// first one. Returns the id of the final vertex.
    fn add_chain(&mut self, chain: &[Configuration]) -> Option<usize> {
        let first = chain.first()?;
        let mut prev = self.nearest_vertex(first.pos);
        for conf in chain {
            let id = self.add_or_merge(*conf);
            self.connect(prev, id);
            prev = id;
        }
        Some(prev)
    }
}

/// Fold a finished local planning round into the global graph.
///
/// Stores the commanded path, records local vertices with gain above `g_f`
/// as frontier vertices (connected through their local shortest-path chain),
/// and re-evaluates previously stored frontier vertices that lie near the
/// just-commanded region, dropping those whose gain fell below `g_f`.
pub fn update_global(
    gg: &mut GlobalGraphRobot,
    local: &LocalGraph,
    tree: &ShortestPathTree,
    commanded: &[Configuration],
    map: &OccupancyMap,
    sensor: &SensorModel,
    g_f: f64,
) {
    gg.add_chain(commanded);

    for v in &local.vertices {
        if v.id == local.root || v.gain <= g_f {
            continue;
        }
        let chain: Vec<Configuration> = tree
            .path(v.id)
            .iter()
            .map(|&u| local.vertices[u].conf)
            .collect();
        if let Some(id) = gg.add_chain(&chain) {
            gg.vertices[id].stored_gain = v.gain;
            gg.vertices[id].is_frontier = true;
            gg.version += 1;
        }
    }

    // Gains only change where the map changed: near the region the robot
    // just traversed and scanned.
    let reach = sensor.d_max * 1.5;
    let stale: Vec<usize> = gg
        .vertices
        .iter()
        .filter(|v| {
            v.is_frontier
                && commanded
                    .iter()
                    .chain(local.vertices.first().map(|r| &r.conf))
                    .any(|c| c.pos.dist(v.conf.pos) <= reach)
        })
        .map(|v| v.id)
        .collect();
    #[cfg(feature = "parallel")]
    let gains: Vec<f64> = stale
        .par_iter()
        .map(|&id| volumetric_gain(map, gg.vertices[id].conf, sensor))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let gains: Vec<f64> = stale
        .iter()
        .map(|&id| volumetric_gain(map, gg.vertices[id].conf, sensor))
        .collect();
    for (&id, &gain) in stale.iter().zip(gains.iter()) {
        gg.vertices[id].stored_gain = gain;
        if gain <= g_f {
            gg.vertices[id].is_frontier = false;
            gg.version += 1;
        }
    }
}

/// Re-evaluate stored frontier vertices within `reach` of `near` against the
/// current map, consuming those whose gain fell to `g_f` or below. Distant
/// vertices keep their stored gain (the map cannot have changed there).
pub fn refresh_frontier_vertices(
    gg: &mut GlobalGraphRobot,
    map: &OccupancyMap,
    sensor: &SensorModel,
    g_f: f64,
    near: Vec3,
    reach: f64,
) {
    let stale: Vec<usize> = gg
        .vertices
        .iter()
        .filter(|v| v.is_frontier && v.conf.pos.dist(near) <= reach)
        .map(|v| v.id)
        .collect();
    #[cfg(feature = "parallel")]
    let gains: Vec<f64> = stale
        .par_iter()
        .map(|&id| volumetric_gain(map, gg.vertices[id].conf, sensor))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let gains: Vec<f64> = stale
        .iter()
        .map(|&id| volumetric_gain(map, gg.vertices[id].conf, sensor))
        .collect();
    for (&id, &gain) in stale.iter().zip(gains.iter()) {
        gg.vertices[id].stored_gain = gain;
        if gain <= g_f {
            gg.vertices[id].is_frontier = false;
            gg.version += 1;
        }
    }
}

/// Route to the most promising remembered frontier vertex.
///
/// Ranks reachable frontier vertices by `stored_gain * exp(-lambda_g * d)`
/// with `d` the graph distance from the vertex nearest to `current`, checks
/// the winning route edge by edge against the current map, and falls back to
/// the next candidate when a route fails. `None` when no frontier vertices
/// remain (exploration of the assigned volume is complete).
pub fn plan_reposition(
    gg: &GlobalGraphRobot,
    current: Configuration,
    map: &OccupancyMap,
    robot_radius: f64,
    lambda_g: f64,
    within: Option<&crate::planner::BoundingBox>,
) -> Option<Vec<Configuration>> {
    let start = gg.nearest_vertex(current.pos);
    let tree = dijkstra(&gg.adj, start);
    let mut candidates: Vec<(f64, usize)> = gg
        .frontier_vertices()
        .filter(|v| tree.reachable(v.id))
        .filter(|v| within.map(|b| b.contains(v.conf.pos)).unwrap_or(true))
        .map(|v| (v.stored_gain * (-lambda_g * tree.dist[v.id]).exp(), v.id))
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));

    'candidate: for (_, target) in candidates {
        let ids = tree.path(target);
        let mut path: Vec<Configuration> = ids.iter().map(|&u| gg.vertices[u].conf).collect();
        for pair in path.windows(2) {
            if !map.segment_free(pair[0].pos, pair[1].pos, robot_radius) {
                continue 'candidate;
            }
        }
        for i in 0..path.len().saturating_sub(1) {
            let target_pos = path[i + 1].pos;
            path[i] = Configuration::from_pos(path[i].pos, path[i].yaw_toward(target_pos));
        }
        return Some(path);
    }
    None
}

/// Homing path and its length over the global graph from `current`.
pub fn homing_path(gg: &GlobalGraphRobot, current: Configuration) -> (Vec<Configuration>, f64) {
    let start = gg.nearest_vertex(current.pos);
    let tree = dijkstra(&gg.adj, start);
    if !tree.reachable(gg.home) {
        // home is always in the graph; unreachable only for a degenerate
        // single-vertex graph, where the path is trivial
        return (vec![gg.home_conf()], current.pos.dist(gg.home_conf().pos));
    }
    let approach = current.pos.dist(gg.vertices[start].conf.pos);
    let ids = tree.path(gg.home);
    let path: Vec<Configuration> = ids.iter().map(|&u| gg.vertices[u].conf).collect();
    (path, tree.dist[gg.home] + approach)
}

/// Decide whether the robot must head home now to respect its endurance.
pub fn check_homing(
    gg: &GlobalGraphRobot,
    current: Configuration,
    endurance: &EnduranceState,
    margin: f64,
) -> HomingDecision {
    let (path, length) = homing_path(gg, current);
    if endurance.elapsed + length / endurance.speed + margin >= endurance.t_end {
        HomingDecision::GoHome(path)
    } else {
        HomingDecision::Continue
    }
}
