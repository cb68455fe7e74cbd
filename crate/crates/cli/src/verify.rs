//! Oracle-equivalence suites: each check pits a production code path against
//! an independent reference implementation and dumps a minimized
//! counterexample on mismatch.

use rand::Rng;
use subterra_core::math::{Configuration, Vec3};
use subterra_core::oracles;
use subterra_core::planner::{self, dijkstra::dijkstra};
use subterra_core::sensor::SensorModel;
use subterra_core::voxel::{OccupancyMap, VoxelIndex, VoxelState};
use subterra_core::world::fixtures;
use subterra_core::{seeded_rng, stream};

/// Random connected undirected graph with dyadic-rational weights (exact
/// float sums regardless of accumulation order).
fn random_graph(n: usize, extra_edges: usize, seed: u64) -> Vec<Vec<(usize, f64)>> {
    let mut rng = seeded_rng(seed, stream::TEST, 1);
    let mut adj = vec![Vec::new(); n];
    let add = |adj: &mut Vec<Vec<(usize, f64)>>, u: usize, v: usize, w: f64| {
        adj[u].push((v, w));
        adj[v].push((u, w));
    };
    for v in 1..n {
        let u = rng.random_range(0..v);
        let w = (1 + rng.random_range(0..64)) as f64 / 8.0;
        add(&mut adj, u, v, w);
    }
    for _ in 0..extra_edges {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            let w = (1 + rng.random_range(0..64)) as f64 / 8.0;
            add(&mut adj, u, v, w);
        }
    }
    adj
}

pub fn dijkstra_suite(seeds: &[u64]) -> bool {
    for &seed in seeds {
        let mut rng = seeded_rng(seed, stream::TEST, 2);
        let n = rng.random_range(5..=200);
        let extra = rng.random_range(0..3 * n);
        let adj = random_graph(n, extra, seed);
        let tree = dijkstra(&adj, 0);
        let oracle = oracles::bellman_ford(&adj, 0);
        for v in 0..n {
            if tree.dist[v] != oracle[v] {
                println!(
                    "dijkstra mismatch: seed={seed} n={n} vertex={v} got={} expected={}",
                    tree.dist[v], oracle[v]
                );
                dump_graph(&adj);
                return false;
            }
        }
        println!("dijkstra seed={seed} n={n}: OK");
    }
    true
}

fn dump_graph(adj: &[Vec<(usize, f64)>]) {
    println!("counterexample graph (u v w):");
    for (u, edges) in adj.iter().enumerate() {
        for &(v, w) in edges {
            if v > u {
                println!("  {u} {v} {w}");
            }
        }
    }
}

/// A partially observed room: scanned in a ball around the center so a wide
/// unknown shell remains.
fn ball_scanned_room(seed: u64) -> (OccupancyMap, Vec3) {
    let mut rng = seeded_rng(seed, stream::TEST, 3);
    let sx = rng.random_range(16.0..26.0);
    let sy = rng.random_range(16.0..26.0);
    let sz = rng.random_range(6.0..10.0);
    let world = fixtures::box_room([sx, sy, sz], 0.5).expect("fixture");
    let mut map = OccupancyMap::new(0.5);
    let mapping = SensorModel::with_rays(360.0, 180.0, 6.0, 240, 81);
    let center = world.spawn();
    let scan = subterra_core::sensor::simulate_scan(&world, &center, &mapping);
    map.integrate_scan(scan.origin, &scan.rays);
    (map, center.pos)
}

pub fn gain_suite(seeds: &[u64]) -> bool {
    let sensor = SensorModel::with_rays(360.0, 90.0, 25.0, 90, 11);
    for &seed in seeds {
        let (map, center) = ball_scanned_room(seed);
        let mut rng = seeded_rng(seed, stream::TEST, 4);
        for probe_idx in 0..10 {
            let probe = loop {
                let p = center
                    + Vec3::new(
                        rng.random_range(-3.0..3.0),
                        rng.random_range(-3.0..3.0),
                        rng.random_range(-1.5..1.5),
                    );
                if map.state_at(p) == VoxelState::Free {
                    break Configuration::from_pos(p, rng.random_range(-3.0..3.0));
                }
            };
            let ours = planner::volumetric_gain(&map, probe, &sensor);
            let dirs = sensor.directions(probe.yaw);
            let oracle = oracles::raymarch_gain(&map, probe.pos, &dirs, sensor.d_max) as f64;
            let rel = (ours - oracle).abs() / oracle.max(1.0);
            if rel > 0.02 {
                println!(
                    "gain mismatch: seed={seed} probe={probe_idx} at {:?} got={ours} oracle={oracle} rel={rel:.4}",
                    probe.pos
                );
                return false;
            }
        }
        println!("gain seed={seed}: OK (10 probes within 2%)");
    }
    true
}

pub fn gain_cluster_suite(seeds: &[u64], rho: f64) -> bool {
    let sensor = SensorModel::with_rays(360.0, 90.0, 15.0, 48, 7);
    for &seed in seeds {
        let (map, center) = ball_scanned_room(seed);
        let robot = subterra_core::robot::profile_rmf_obelix();
        let mut cfg = planner::PlannerConfig::new(robot);
        cfg.robot.sensor = sensor.clone();
        cfg.n_v_max = 60;
        let start = Configuration::from_pos(center, 0.0);
        let bound = planner::adaptive_local_bound(center, &[], cfg.mu_v, cfg.bound_clamp);
        let mut rng = seeded_rng(seed, stream::TEST, 5);
        let (mut graph, _) = planner::build_local_graph(&map, start, bound, None, &cfg, &mut rng);
        if graph.vertices.len() < 3 {
            println!("gain-cluster seed={seed}: graph too small, skipped");
            continue;
        }
        let tree = dijkstra(&graph.adj, graph.root);
        let stats = planner::compute_graph_gains(&mut graph, &tree, &map, &sensor, rho, 5.0);
        let leaves = tree.leaves();

        if rho <= 0.0 {
            // exact per-leaf equality
            for &l in &leaves {
                let exact = planner::volumetric_gain(&map, graph.vertices[l].conf, &sensor);
                if graph.vertices[l].raw_gain != exact {
                    println!("gain-cluster mismatch: seed={seed} leaf={l} stored={} exact={exact}", graph.vertices[l].raw_gain);
                    return false;
                }
            }
        } else {
            if stats.evaluations > leaves.len() {
                println!("gain-cluster: more evaluations than leaves (seed={seed})");
                return false;
            }
            for &l in &leaves {
                let pos = graph.vertices[l].conf.pos;
                let witness = leaves.iter().any(|&m| {
                    if graph.vertices[m].conf.pos.dist(pos) > rho {
                        return false;
                    }
                    let exact = planner::volumetric_gain(&map, graph.vertices[m].conf, &sensor);
                    let attenuated = exact * (-5.0f64).exp();
                    graph.vertices[l].raw_gain == exact || graph.vertices[l].raw_gain == attenuated
                });
                if !witness {
                    println!("gain-cluster mismatch: seed={seed} leaf={l} has no within-rho witness");
                    return false;
                }
            }
        }
        println!(
            "gain-cluster seed={seed} rho={rho}: OK ({} leaves, {} evaluations)",
            leaves.len(),
            stats.evaluations
        );
    }
    true
}

pub fn cluster_suite(seeds: &[u64]) -> bool {
    for &seed in seeds {
        let mut rng = seeded_rng(seed, stream::TEST, 6);
        // random blobs of voxel points
        let mut points = Vec::new();
        let blobs = rng.random_range(2..6);
        for _ in 0..blobs {
            let cx = rng.random_range(-40..40);
            let cy = rng.random_range(-40..40);
            let cz = rng.random_range(-5..5);
            let n = rng.random_range(5..120);
            for _ in 0..n {
                points.push(Vec3::new(
                    (cx + rng.random_range(-3..3)) as f64 * 0.4 + 0.2,
                    (cy + rng.random_range(-3..3)) as f64 * 0.4 + 0.2,
                    (cz + rng.random_range(-2..2)) as f64 * 0.4 + 0.2,
                ));
            }
        }
        let gc = subterra_core::cohort::GlobalGraphC::new(4.0, 0.4);
        let frontiers = subterra_core::cohort::recluster_frontiers(&points, 0.4, 1, 4.0, &gc);
        let snapped = subterra_core::cohort::frontier::snap_to_grid(&points, 0.4);
        let oracle = oracles::components_26_unionfind(&snapped);
        if frontiers.len() != oracle.len() {
            println!(
                "cluster mismatch: seed={seed} got {} clusters, oracle {}",
                frontiers.len(),
                oracle.len()
            );
            dump_points(&snapped);
            return false;
        }
        let mut got: Vec<Vec<VoxelIndex>> = frontiers
            .iter()
            .map(|f| {
                let mut v = subterra_core::cohort::frontier::snap_to_grid(&f.points, 0.4);
                v.sort_unstable();
                v
            })
            .collect();
        got.sort_by_key(|g| g[0]);
        if got != oracle {
            println!("cluster membership mismatch: seed={seed}");
            dump_points(&snapped);
            return false;
        }
        // f_min filtering removes exactly the undersized components
        let f_min = 40;
        let filtered = subterra_core::cohort::recluster_frontiers(&points, 0.4, f_min, 4.0, &gc);
        let expected = oracle.iter().filter(|c| c.len() >= f_min).count();
        if filtered.len() != expected {
            println!("cluster f_min mismatch: seed={seed} got {} expected {expected}", filtered.len());
            return false;
        }
        println!("cluster seed={seed}: OK ({} components)", oracle.len());
    }
    true
}

fn dump_points(points: &[VoxelIndex]) {
    println!("counterexample points (x y z):");
    for p in points {
        println!("  {} {} {}", p.x, p.y, p.z);
    }
}

pub fn frontier_suite(seeds: &[u64]) -> bool {
    // enclosed room observed from several poses: zero frontier points
    let world = fixtures::box_room([8.0, 8.0, 3.0], 0.4).expect("fixture");
    let spawn = world.spawn();
    let mut map = OccupancyMap::new(0.4);
    let mapping = SensorModel::with_rays(360.0, 180.0, 15.0, 360, 121);
    let mut seeds_pts = Vec::new();
    for offset in [
        Vec3::ZERO,
        Vec3::new(2.0, 2.0, 0.5),
        Vec3::new(-2.0, -2.0, -0.5),
        Vec3::new(2.0, -2.0, 0.0),
        Vec3::new(-2.0, 2.0, 0.0),
    ] {
        let pose = Configuration::from_pos(spawn.pos + offset, 0.0);
        let scan = subterra_core::sensor::simulate_scan(&world, &pose, &mapping);
        map.integrate_scan(scan.origin, &scan.rays);
        seeds_pts.push(pose.pos);
    }
    let pts = subterra_core::cohort::extract_frontier_points(&map, &seeds_pts);
    let oracle = oracles::frontier_points_exhaustive(&map, &seeds_pts);
    if pts.len() != oracle.len() {
        println!("frontier mismatch on sealed room: got {} oracle {}", pts.len(), oracle.len());
        return false;
    }
    if !pts.is_empty() {
        println!("frontier FAIL: sealed room must have 0 frontier points, got {}", pts.len());
        return false;
    }
    println!("frontiers sealed-room: OK (0 points)");

    // partially observed corridors per seed: exact oracle equality
    for &seed in seeds {
        let mut rng = seeded_rng(seed, stream::TEST, 7);
        let length = rng.random_range(20.0..40.0);
        let world = fixtures::corridor(length, 4.0, 3.0, 0.4).expect("fixture");
        let spawn = world.spawn();
        let mut map = OccupancyMap::new(0.4);
        let model = SensorModel::with_rays(360.0, 120.0, 10.0, 200, 41);
        let mut seeds_pts = Vec::new();
        for dx in [0.0, 2.0, 4.0] {
            let pose = Configuration::from_pos(spawn.pos + Vec3::new(dx, 0.0, 0.0), 0.0);
            let scan = subterra_core::sensor::simulate_scan(&world, &pose, &model);
            map.integrate_scan(scan.origin, &scan.rays);
            seeds_pts.push(pose.pos);
        }
        let pts = subterra_core::cohort::extract_frontier_points(&map, &seeds_pts);
        let oracle = oracles::frontier_points_exhaustive(&map, &seeds_pts);
        let got: Vec<VoxelIndex> = pts.iter().map(|p| map.world_to_index(*p)).collect();
        if got != oracle {
            println!(
                "frontier mismatch: seed={seed} got {} points, oracle {}",
                got.len(),
                oracle.len()
            );
            return false;
        }
        println!("frontiers seed={seed}: OK ({} points match exhaustive oracle)", got.len());
    }
    true
}
