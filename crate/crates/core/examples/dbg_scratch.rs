use rand::Rng;
use subterra_core::math::{Configuration, Vec3};
use subterra_core::planner::*;
use subterra_core::robot::profile_anymal_c;
use subterra_core::sensor::*;
use subterra_core::voxel::*;
use subterra_core::world::fixtures;

fn main() {
    let res = 0.1;
    let world = fixtures::ramp_world(20.0, 12.0, 4.0, res).unwrap();
    let spawn = world.spawn();
    println!("spawn {:?}", spawn.pos);
    let mut spec = profile_anymal_c();
    spec.sensor = SensorModel::with_rays(360.0, 30.0, 10.0, 90, 11);
    let mut cfg = PlannerConfig::new(spec.clone());
    cfg.n_v_max = 250;
    cfg.edge_step = 1.5;
    cfg.g_min = 3.0;
    let mut map = OccupancyMap::new(res);
    for tick in 0..30 {
        let phase = (tick % 8) as f64 / 8.0;
        let scan = simulate_scan_phased(&world, &spawn, &spec.sensor, phase);
        map.integrate_scan(scan.origin, &scan.rays);
        map.clear_ball(spawn.pos, spec.radius + res);
    }
    println!("map free={} occ={}", map.counts().free, map.counts().occupied);
    println!("state at spawn {:?}", map.state_at(spawn.pos));
    let prm = cfg.robot.ground_params();
    println!("ground params {:?}", prm);
    // projection at a nearby point
    for dx in [0.5, 1.5, 3.0] {
        let p = spawn.pos + Vec3::new(dx, 0.0, 0.0);
        let g = map.project_to_ground(p, 0.0, &prm);
        println!("dx={dx}: state={:?} attached={} proj_z={:.2} proj_state={:?}", map.state_at(p), g.attached, g.projected.pos.z, map.state_at(g.projected.pos));
    }
    let bound = adaptive_local_bound(spawn.pos, &[], cfg.mu_v, cfg.bound_clamp);
    let hull = bound.hull_aabb();
    let candidates = map.free_voxels_in(&hull);
    println!("candidates {}", candidates.len());
    let mut rng = subterra_core::seeded_rng(1, subterra_core::stream::PLANNER, 0);
    let mut n_state = 0; let mut n_proj = 0; let mut n_projstate = 0; let mut n_bound = 0; let mut n_edge = 0; let mut n_ok = 0;
    let half = res * 0.5;
    for _ in 0..1500 {
        let vox = candidates[rng.random_range(0..candidates.len())];
        let sample = map.index_center(vox) + Vec3::new(rng.random_range(-half..half), rng.random_range(-half..half), rng.random_range(-half..half));
        if map.state_at(sample) != VoxelState::Free { n_state += 1; continue; }
        let hull_drop = hull.max.z - hull.min.z;
        let sp = GroundParams { max_drop: hull_drop.max(prm.max_drop), ..prm };
        let g = map.project_to_ground(sample, 0.0, &sp);
        let (pos, hanging) = if g.attached {
            if map.state_at(g.projected.pos) != VoxelState::Free { n_projstate += 1; continue; }
            if !bound.contains(g.projected.pos) { n_bound += 1; continue; }
            (g.projected.pos, false)
        } else { (sample, true) };
        let conf = Configuration::from_pos(pos, 0.0);
        if !admissible_edge(&map, spawn, false, conf, hanging, &cfg) { n_edge += 1; continue; }
        n_ok += 1;
    }
    println!("state={n_state} projstate={n_projstate} bound={n_bound} edge={n_edge} ok={n_ok} projfail={n_proj}");
    // single specific edge: spawn -> projected point 1.5 m ahead
    let g = map.project_to_ground(spawn.pos + Vec3::new(1.5, 0.0, 0.0), 0.0, &prm);
    println!("edge spawn->1.5m attached={}: {}", g.attached, admissible_edge(&map, spawn, false, g.projected, false, &cfg));
    // polyline check detail
    if let Some(poly) = subterra_core::planner::ground_edge_polyline(&map, spawn, g.projected, &cfg) {
        for (k, p) in poly.iter().enumerate() { println!("poly {k}: {:.2},{:.2},{:.2} ", p.x, p.y, p.z); }
    } else {
        println!("polyline: NONE");
    }
}
