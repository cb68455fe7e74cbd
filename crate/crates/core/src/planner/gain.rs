//! Volumetric exploration gain: counting the unknown voxels a sensor would
//! observe from a configuration, leaf-clustered gain assignment over the
//! local graph, and path-level gain accumulation.

use std::collections::BTreeSet;

use crate::math::Configuration;
use crate::planner::dijkstra::ShortestPathTree;
use crate::planner::graph::LocalGraph;
use crate::sensor::SensorModel;
use crate::voxel::{HitKind, OccupancyMap, VoxelIndex};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Distinct Unknown voxels that are the first obstruction along some sensor
/// ray from `v`. Rays stop at Occupied voxels and at the first Unknown voxel
/// (visibility through unknown space is not assumed).
pub fn visible_unknown(map: &OccupancyMap, v: Configuration, sensor: &SensorModel) -> BTreeSet<VoxelIndex> {
    let dirs = sensor.directions(v.yaw);
    visible_unknown_dirs(map, v, sensor.d_max, &dirs)
}

fn first_unknown(map: &OccupancyMap, v: Configuration, d_max: f64, dir: crate::math::Vec3) -> Option<VoxelIndex> {
    let hit = map.raycast(v.pos, dir, d_max);
    match hit.kind {
        HitKind::Unknown => hit.voxel,
        _ => None,
    }
}

fn visible_unknown_dirs(
    map: &OccupancyMap,
    v: Configuration,
    d_max: f64,
    dirs: &[crate::math::Vec3],
) -> BTreeSet<VoxelIndex> {
    #[cfg(feature = "parallel")]
    {
        dirs.par_iter()
            .fold(BTreeSet::new, |mut acc, dir| {
                if let Some(idx) = first_unknown(map, v, d_max, *dir) {
                    acc.insert(idx);
                }
                acc
            })
            .reduce(BTreeSet::new, |mut a, b| {
                a.extend(b);
                a
            })
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut acc = BTreeSet::new();
        for dir in dirs {
            if let Some(idx) = first_unknown(map, v, d_max, *dir) {
                acc.insert(idx);
            }
        }
        acc
    }
}

/// Count of unknown voxels observable from `v`; see [`visible_unknown`].
pub fn volumetric_gain(map: &OccupancyMap, v: Configuration, sensor: &SensorModel) -> f64 {
    visible_unknown(map, v, sensor).len() as f64
}

/// Sequential reference path; identical to [`volumetric_gain`].
pub fn volumetric_gain_seq(map: &OccupancyMap, v: Configuration, sensor: &SensorModel) -> f64 {
    let dirs = sensor.directions(v.yaw);
    let mut acc = BTreeSet::new();
    for dir in &dirs {
        if let Some(idx) = first_unknown(map, v, sensor.d_max, *dir) {
            acc.insert(idx);
        }
    }
    acc.len() as f64
}

/// Bookkeeping from a gain pass over the graph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GainStats {
    /// Number of full ray-cast gain evaluations performed.
    pub evaluations: usize,
    pub leaves: usize,
}

/// Assign gains over the graph's shortest-path-tree leaves.
///
/// Walks the leaf list in ascending id order; each unprocessed leaf gets a
/// full evaluation, and every other unprocessed leaf within `rho` inherits
/// the evaluated vertex's (possibly attenuated) gain instead of being
/// evaluated itself. A hanging vertex's gain is scaled by `exp(-gamma_h)`,
/// inherited values included. `rho = 0` disables clustering. Non-leaf
/// vertices keep gain 0.
pub fn compute_graph_gains(
    graph: &mut LocalGraph,
    tree: &ShortestPathTree,
    map: &OccupancyMap,
    sensor: &SensorModel,
    rho: f64,
    gamma_h: f64,
) -> GainStats {
    for v in graph.vertices.iter_mut() {
        v.gain = 0.0;
        v.raw_gain = 0.0;
        v.dist_from_root = f64::INFINITY;
    }
    for (v, d) in tree.dist.iter().enumerate() {
        graph.vertices[v].dist_from_root = *d;
    }

    let mut leaves = tree.leaves();
    leaves.sort_unstable();

    // Cluster assignment depends only on geometry and leaf order, so it can
    // be computed up front and the per-representative evaluations batched.
    let mut pending: Vec<usize> = leaves.clone();
    let mut clusters: Vec<(usize, Vec<usize>)> = Vec::new();
    while let Some(rep) = pending.first().copied() {
        pending.remove(0);
        let mut inherit = Vec::new();
        if rho > 0.0 {
            let rep_pos = graph.vertices[rep].conf.pos;
            pending.retain(|&u| {
                if graph.vertices[u].conf.pos.dist(rep_pos) <= rho {
                    inherit.push(u);
                    false
                } else {
                    true
                }
            });
        }
        clusters.push((rep, inherit));
    }

    let attenuation = (-gamma_h).exp();
    #[cfg(feature = "parallel")]
    let evaluated: Vec<f64> = clusters
        .par_iter()
        .map(|(rep, _)| volumetric_gain(map, graph.vertices[*rep].conf, sensor))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let evaluated: Vec<f64> = clusters
        .iter()
        .map(|(rep, _)| volumetric_gain(map, graph.vertices[*rep].conf, sensor))
        .collect();

    for ((rep, inherit), raw) in clusters.iter().zip(evaluated.iter()) {
        let rep_vertex = &mut graph.vertices[*rep];
        rep_vertex.raw_gain = *raw;
        rep_vertex.gain = if rep_vertex.hanging { raw * attenuation } else { *raw };
        let source_gain = rep_vertex.gain;
        for &u in inherit {
            let v = &mut graph.vertices[u];
            v.raw_gain = source_gain;
            v.gain = if v.hanging { source_gain * attenuation } else { source_gain };
        }
    }

    GainStats { evaluations: clusters.len(), leaves: leaves.len() }
}

/// Accumulated path gain: sum of vertex gains decayed exponentially with
/// distance from the root, `sum_v gain(v) * exp(-lambda * d_root(v))`.
pub fn exploration_gain(graph: &LocalGraph, path: &[usize], lambda: f64) -> f64 {
    path.iter()
        .map(|&v| {
            let vert = &graph.vertices[v];
            vert.gain * (-lambda * vert.dist_from_root).exp()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles;
    use crate::planner::dijkstra::dijkstra;
    use crate::planner::test_support::{map_from_world, planner_config};
    use crate::robot::profile_rmf_obelix;
    use crate::sensor::SensorModel;
    use crate::voxel::VoxelState;
    use crate::world::fixtures;
    use rand::Rng;

    #[test]
    fn fully_known_map_zero_gain() {
        let world = fixtures::box_room([10.0, 10.0, 4.0], 0.5).unwrap();
        let mut map = map_from_world(&world);
        // mark everything known: free interior, occupied hull
        for x in world.min_index().x..=world.max_index().x {
            for y in world.min_index().y..=world.max_index().y {
                for z in world.min_index().z..=world.max_index().z {
                    let idx = crate::voxel::VoxelIndex::new(x, y, z);
                    map.set_state(
                        idx,
                        if world.is_solid(idx) { VoxelState::Occupied } else { VoxelState::Free },
                    );
                }
            }
        }
        let sensor = SensorModel::with_rays(360.0, 90.0, 30.0, 48, 9);
        assert_eq!(volumetric_gain(&map, world.spawn(), &sensor), 0.0);
    }

    #[test]
    fn matches_raymarch_oracle() {
        // a room observed in a ball around its center leaves a wide unknown
        // shell, so probe gains are in the hundreds of voxels
        let world = fixtures::box_room([24.0, 24.0, 8.0], 0.5).unwrap();
        let mut map = crate::voxel::OccupancyMap::new(0.5);
        let mapping = SensorModel::with_rays(360.0, 180.0, 6.0, 240, 81);
        let center = world.spawn();
        let scan = crate::sensor::simulate_scan(&world, &center, &mapping);
        map.integrate_scan(scan.origin, &scan.rays);

        let sensor = SensorModel::with_rays(360.0, 90.0, 25.0, 90, 11);
        let mut rng = crate::seeded_rng(17, crate::stream::TEST, 0);
        for trial in 0..6 {
            // random probe inside the observed free ball
            let probe = loop {
                let offset = crate::math::Vec3::new(
                    rng.random_range(-3.0..3.0),
                    rng.random_range(-3.0..3.0),
                    rng.random_range(-1.5..1.5),
                );
                let p = center.pos + offset;
                if map.state_at(p) == crate::voxel::VoxelState::Free {
                    break Configuration::from_pos(p, rng.random_range(-3.0..3.0));
                }
            };
            let ours = volumetric_gain(&map, probe, &sensor);
            let dirs = sensor.directions(probe.yaw);
            let oracle = oracles::raymarch_gain(&map, probe.pos, &dirs, sensor.d_max) as f64;
            assert!(oracle > 100.0, "fixture should expose a large frontier, got {oracle}");
            assert!(
                (ours - oracle).abs() / oracle <= 0.02,
                "trial {trial}: gain {ours} vs oracle {oracle}"
            );
        }

        // densified grid sees at least as many voxels
        let probe = Configuration::from_pos(center.pos, 0.4);
        let dense = sensor.directions_dense(probe.yaw, 4);
        let dense_set = visible_unknown_dirs(&map, probe, sensor.d_max, &dense);
        let base_set = visible_unknown(&map, probe, &sensor);
        assert!(base_set.is_subset(&dense_set));
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_equals_sequential_gain() {
        let world = fixtures::corridor(20.0, 4.0, 3.0, 0.5).unwrap();
        let mut map = crate::voxel::OccupancyMap::new(0.5);
        let pose = world.spawn();
        let sensor = SensorModel::with_rays(360.0, 60.0, 20.0, 72, 9);
        let scan = crate::sensor::simulate_scan(&world, &pose, &sensor);
        map.integrate_scan(scan.origin, &scan.rays);
        for probe_x in [2.0, 5.0, 9.0] {
            let probe = Configuration::new(probe_x, 3.0, 2.0, 0.3);
            assert_eq!(
                volumetric_gain(&map, probe, &sensor),
                volumetric_gain_seq(&map, probe, &sensor)
            );
        }
    }

    fn scanned_room_graph() -> (crate::voxel::OccupancyMap, LocalGraph, ShortestPathTree, SensorModel) {
        let world = fixtures::box_room([14.0, 14.0, 5.0], 0.5).unwrap();
        let mut map = crate::voxel::OccupancyMap::new(0.5);
        let sensor = SensorModel::with_rays(360.0, 60.0, 10.0, 36, 5);
        let pose = world.spawn();
        let scan = crate::sensor::simulate_scan(&world, &pose, &sensor);
        map.integrate_scan(scan.origin, &scan.rays);
        let mut cfg = planner_config(profile_rmf_obelix());
        cfg.n_v_max = 40;
        let bound = crate::planner::bound::BoundingBox::axis_aligned(
            pose.pos,
            crate::math::Vec3::new(4.0, 4.0, 1.5),
        );
        let mut rng = crate::seeded_rng(11, crate::stream::PLANNER, 0);
        let (graph, _) = crate::planner::graph::build_local_graph(&map, pose, bound, None, &cfg, &mut rng);
        let tree = dijkstra(&graph.adj, graph.root);
        (map, graph, tree, sensor)
    }

    #[test]
    fn rho_zero_is_exact_per_leaf() {
        let (map, mut graph, tree, sensor) = scanned_room_graph();
        let stats = compute_graph_gains(&mut graph, &tree, &map, &sensor, 0.0, 5.0);
        let leaves = tree.leaves();
        assert_eq!(stats.evaluations, leaves.len());
        for &l in &leaves {
            let exact = volumetric_gain(&map, graph.vertices[l].conf, &sensor);
            assert_eq!(graph.vertices[l].raw_gain, exact);
        }
        // non-leaves stay zero
        for v in &graph.vertices {
            if !leaves.contains(&v.id) {
                assert_eq!(v.gain, 0.0);
            }
        }
    }

    #[test]
    fn clustering_inherits_and_saves_evaluations() {
        let (map, mut graph, tree, sensor) = scanned_room_graph();
        let rho = 3.0;
        let stats = compute_graph_gains(&mut graph, &tree, &map, &sensor, rho, 5.0);
        let leaves = tree.leaves();
        assert!(stats.evaluations <= leaves.len());
        // every leaf's raw gain equals the exact raw gain of some leaf within rho
        for &l in &leaves {
            let pos = graph.vertices[l].conf.pos;
            let ok = leaves.iter().any(|&m| {
                graph.vertices[m].conf.pos.dist(pos) <= rho && {
                    let exact = volumetric_gain(&map, graph.vertices[m].conf, &sensor);
                    graph.vertices[l].raw_gain == exact
                }
            });
            assert!(ok, "leaf {l} raw gain has no within-rho witness");
        }
    }

    #[test]
    fn two_close_leaves_single_evaluation() {
        // hand-built: root with two leaves 0.5 m apart, rho = 1
        let world = fixtures::box_room([10.0, 10.0, 4.0], 0.5).unwrap();
        let mut map = crate::voxel::OccupancyMap::new(0.5);
        let sensor = SensorModel::with_rays(360.0, 60.0, 8.0, 24, 5);
        let pose = world.spawn();
        let scan = crate::sensor::simulate_scan(&world, &pose, &sensor);
        map.integrate_scan(scan.origin, &scan.rays);

        let bound = crate::planner::bound::BoundingBox::axis_aligned(
            pose.pos,
            crate::math::Vec3::new(5.0, 5.0, 2.0),
        );
        let mut graph = LocalGraph {
            vertices: Vec::new(),
            edges: Vec::new(),
            adj: Vec::new(),
            root: 0,
            bound,
        };
        // manual construction keeps the two leaves adjacent
        let mk = |pos: crate::math::Vec3| Configuration::from_pos(pos, 0.0);
        let g = &mut graph;
        for (conf, _) in [
            (mk(pose.pos), false),
            (mk(pose.pos + crate::math::Vec3::new(2.0, 0.0, 0.0)), false),
            (mk(pose.pos + crate::math::Vec3::new(2.0, 0.5, 0.0)), false),
        ] {
            let id = g.vertices.len();
            g.vertices.push(crate::planner::graph::Vertex {
                id,
                conf,
                hanging: false,
                gain: 0.0,
                raw_gain: 0.0,
                dist_from_root: f64::INFINITY,
            });
            g.adj.push(Vec::new());
        }
        let len1 = g.vertices[0].conf.pos.dist(g.vertices[1].conf.pos);
        let len2 = g.vertices[0].conf.pos.dist(g.vertices[2].conf.pos);
        g.edges.push(crate::planner::graph::Edge { u: 0, v: 1, length: len1 });
        g.adj[0].push((1, len1));
        g.adj[1].push((0, len1));
        g.edges.push(crate::planner::graph::Edge { u: 0, v: 2, length: len2 });
        g.adj[0].push((2, len2));
        g.adj[2].push((0, len2));

        let tree = dijkstra(&graph.adj, 0);
        let stats = compute_graph_gains(&mut graph, &tree, &map, &sensor, 1.0, 5.0);
        assert_eq!(stats.leaves, 2);
        assert_eq!(stats.evaluations, 1, "second leaf inherits, no second ray cast");
        assert_eq!(graph.vertices[2].raw_gain, graph.vertices[1].gain);
        let exact = volumetric_gain(&map, graph.vertices[1].conf, &sensor);
        assert_eq!(graph.vertices[1].raw_gain, exact);
    }

    #[test]
    fn hanging_attenuation_exact() {
        let (map, mut graph, tree, sensor) = scanned_room_graph();
        // force a couple of vertices hanging to exercise the attenuation path
        let leaves = tree.leaves();
        for &l in leaves.iter().take(2) {
            graph.vertices[l].hanging = true;
        }
        let gamma = 5.0;
        compute_graph_gains(&mut graph, &tree, &map, &sensor, 0.0, gamma);
        let factor = (-gamma).exp();
        let mut saw_hanging = false;
        for v in &graph.vertices {
            if v.hanging && v.raw_gain > 0.0 {
                saw_hanging = true;
                let ratio = v.gain / v.raw_gain;
                assert!((ratio - factor).abs() < 1e-12, "ratio {ratio} vs e^-5 {factor}");
            }
        }
        assert!(saw_hanging, "fixture must exercise hanging attenuation");
    }

    #[test]
    fn exploration_gain_formula() {
        let bound = crate::planner::bound::BoundingBox::axis_aligned(
            crate::math::Vec3::ZERO,
            crate::math::Vec3::new(5.0, 5.0, 5.0),
        );
        let mut graph = LocalGraph {
            vertices: Vec::new(),
            edges: Vec::new(),
            adj: Vec::new(),
            root: 0,
            bound,
        };
        for (gain, dist) in [(0.0, 0.0), (100.0, 10.0)] {
            let id = graph.vertices.len();
            graph.vertices.push(crate::planner::graph::Vertex {
                id,
                conf: Configuration::default(),
                hanging: false,
                gain,
                raw_gain: gain,
                dist_from_root: dist,
            });
        }
        // all-zero gains
        assert_eq!(exploration_gain(&graph, &[0], 0.1), 0.0);
        // single vertex at distance 0 with gain g: e^0 = 1
        graph.vertices[0].gain = 42.0;
        assert_eq!(exploration_gain(&graph, &[0], 0.1), 42.0);
        graph.vertices[0].gain = 0.0;
        // two-vertex path: 100 * e^{-0.1 * 10}
        let g = exploration_gain(&graph, &[0, 1], 0.1);
        assert!((g - 100.0 * (-1.0f64).exp()).abs() < 1e-9);
        assert!((g - 36.787944117144235).abs() < 1e-9);
    }

    #[test]
    fn scaling_gains_preserves_argmax() {
        let (map, mut graph, tree, sensor) = scanned_room_graph();
        compute_graph_gains(&mut graph, &tree, &map, &sensor, 0.0, 5.0);
        let lambda = 0.05;
        let best = |g: &LocalGraph| {
            let mut best_v = None;
            let mut best_g = f64::NEG_INFINITY;
            for v in 1..g.vertices.len() {
                let p = tree.path(v);
                let val = exploration_gain(g, &p, lambda);
                if val > best_g {
                    best_g = val;
                    best_v = Some(v);
                }
            }
            best_v
        };
        let before = best(&graph);
        for v in graph.vertices.iter_mut() {
            v.gain *= 3.5;
        }
        assert_eq!(before, best(&graph));
    }
}
