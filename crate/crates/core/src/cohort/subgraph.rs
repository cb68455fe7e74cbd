//! Per-submap subgraphs and the team-wide coordination graph they merge
//! into.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::cohort::submap::Submap;
use crate::math::{RigidTransform, Vec3};
use crate::voxel::{OccupancyMap, VoxelState};

/// Sampled roadmap inside one submap, in the submap's local frame.
#[derive(Clone, Debug)]
pub struct Subgraph {
    pub vertices: Vec<Vec3>,
    /// Indices into `vertices` plus Euclidean length.
    pub edges: Vec<(usize, usize, f64)>,
    pub robot: usize,
    pub seq: usize,
}

/// Build the submap's subgraph: up to `n_samples` free-space samples inside
/// the observed bound plus trajectory samples every `traj_spacing` meters,
/// with every collision-free pair within `rho` connected. Deterministic for
/// a fixed rng stream; proceeds with fewer samples when free space is scarce.
pub fn build_subgraph(
    submap: &Submap,
    n_samples: usize,
    rho: f64,
    traj_spacing: f64,
    edge_radius: f64,
    rng: &mut ChaCha8Rng,
) -> Subgraph {
    let map = &submap.map;
    let mut vertices: Vec<Vec3> = Vec::new();

    // trajectory anchors: first pose, every `traj_spacing` meters, last pose
    let mut last: Option<Vec3> = None;
    for (_, conf) in &submap.trajectory {
        let take = match last {
            None => true,
            Some(prev) => prev.dist(conf.pos) >= traj_spacing,
        };
        if take {
            vertices.push(conf.pos);
            last = Some(conf.pos);
        }
    }
    if let Some((_, end)) = submap.trajectory.last() {
        if last.map(|p| p.dist(end.pos) > 1e-9).unwrap_or(true) {
            vertices.push(end.pos);
        }
    }

    let candidates = map.free_voxels_in(&submap.bound);
    if !candidates.is_empty() {
        let half = map.resolution() * 0.5;
        let cap = n_samples.saturating_mul(20);
        let mut accepted = 0;
        let mut attempts = 0;
        while accepted < n_samples && attempts < cap {
            attempts += 1;
            let vox = candidates[rng.random_range(0..candidates.len())];
            let p = map.index_center(vox)
                + Vec3::new(
                    rng.random_range(-half..half),
                    rng.random_range(-half..half),
                    rng.random_range(-half..half),
                );
            if map.state_at(p) != VoxelState::Free {
                continue;
            }
            // roadmap vertices need clearance, or no edge can ever reach them
            if !map.segment_free(p, p, edge_radius) {
                continue;
            }
            vertices.push(p);
            accepted += 1;
        }
    }

    let mut edges = Vec::new();
    for i in 0..vertices.len() {
        for j in (i + 1)..vertices.len() {
            let d = vertices[i].dist(vertices[j]);
            if d <= rho && map.segment_free(vertices[i], vertices[j], edge_radius) {
                edges.push((i, j, d));
            }
        }
    }
    Subgraph { vertices, edges, robot: submap.robot, seq: submap.seq }
}

/// A vertex of the team coordination graph, in the team frame.
#[derive(Clone, Debug)]
pub struct CVertex {
    pub id: usize,
    pub pos: Vec3,
    pub robot: usize,
    pub seq: usize,
}

/// Merged roadmap over every robot's subgraphs.
pub struct GlobalGraphC {
    pub vertices: Vec<CVertex>,
    pub adj: Vec<Vec<(usize, f64)>>,
    rho: f64,
    edge_radius: f64,
}

impl GlobalGraphC {
    pub fn new(rho: f64, edge_radius: f64) -> Self {
        GlobalGraphC { vertices: Vec::new(), adj: Vec::new(), rho, edge_radius }
    }

    pub fn nearest_vertex(&self, p: Vec3) -> Option<usize> {
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for v in &self.vertices {
            let d = v.pos.dist(p);
            if d < best_d {
                best_d = d;
                best = Some(v.id);
            }
        }
        best
    }

    /// Vertex ids within `radius` of `p`, ascending id.
    pub fn vertices_within(&self, p: Vec3, radius: f64) -> Vec<usize> {
        self.vertices
            .iter()
            .filter(|v| v.pos.dist(p) <= radius)
            .map(|v| v.id)
            .collect()
    }

    fn add_edge(&mut self, u: usize, v: usize, len: f64) {
        self.adj[u].push((v, len));
        self.adj[v].push((u, len));
    }

    /// Merge a subgraph expressed through `transform` into the team frame.
    ///
    /// Intra-subgraph edges carry over; cross-submap edges connect vertex
    /// pairs within the merge radius that pass a collision check against the
    /// merged coarse map (unknown blocked).
    pub fn merge_subgraph(
        &mut self,
        sub: &Subgraph,
        transform: &RigidTransform,
        merged_map: &OccupancyMap,
    ) {
        let base = self.vertices.len();
        for (i, p) in sub.vertices.iter().enumerate() {
            let id = base + i;
            self.vertices.push(CVertex { id, pos: transform.apply(*p), robot: sub.robot, seq: sub.seq });
            self.adj.push(Vec::new());
        }
        for &(u, v, len) in &sub.edges {
            self.add_edge(base + u, base + v, len);
        }
        // cross-submap stitching
        for i in 0..sub.vertices.len() {
            let id = base + i;
            let pos = self.vertices[id].pos;
            for other in 0..base {
                let o = &self.vertices[other];
                if o.robot == sub.robot && o.seq == sub.seq {
                    continue;
                }
                let d = o.pos.dist(pos);
                if d <= self.rho && merged_map.segment_free(o.pos, pos, self.edge_radius) {
                    self.add_edge(id, other, d);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Configuration;
    use crate::oracles::UnionFind;
    use crate::sensor::{simulate_scan, SensorModel};
    use crate::world::fixtures;

    /// Scan from poses offset by `xs` along +x and cut one submap whose time
    /// window lapses on the final tick.
    fn make_submap(robot: usize, world: &crate::world::World, xs: &[f64]) -> Submap {
        let spawn = world.spawn();
        let window = (xs.len() as f64 - 1.5).max(0.5);
        let mut stream = crate::cohort::submap::SubmapStream::new(robot, 0.4, window, 1e9, spawn, 0.0);
        let model = SensorModel::with_rays(360.0, 120.0, 10.0, 180, 41);
        for (i, &dx) in xs.iter().enumerate() {
            let pose = Configuration::from_pos(spawn.pos + Vec3::new(dx, 0.0, 0.0), 0.0);
            let scan = simulate_scan(world, &pose, &model);
            if let Some(s) = stream.tick(pose, &scan, i as f64, 0.0) {
                return s;
            }
        }
        panic!("window must cut a submap")
    }

    #[test]
    fn empty_room_pairs_within_rho_connect() {
        let world = fixtures::box_room([12.0, 12.0, 4.0], 0.4).unwrap();
        let submap = make_submap(0, &world, &[0.0, 1.0, 2.0]);
        let mut rng = crate::seeded_rng(1, crate::stream::COHORT, 0);
        let sub = build_subgraph(&submap, 60, 4.0, 2.0, 0.4, &mut rng);
        assert!(sub.vertices.len() >= 50);
        // oracle: re-check all pairs
        for i in 0..sub.vertices.len() {
            for j in (i + 1)..sub.vertices.len() {
                let d = sub.vertices[i].dist(sub.vertices[j]);
                let has = sub.edges.iter().any(|&(u, v, _)| (u, v) == (i, j));
                let should = d <= 4.0
                    && submap.map.segment_free(sub.vertices[i], sub.vertices[j], 0.4);
                assert_eq!(has, should, "pair ({i},{j}) at distance {d:.2}");
            }
        }
    }

    #[test]
    fn degenerate_submap_keeps_trajectory_samples() {
        // a submap with no free voxels in bound beyond the trajectory itself
        let world = fixtures::corridor(10.0, 3.0, 2.5, 0.4).unwrap();
        let spawn = world.spawn();
        let mut stream = crate::cohort::submap::SubmapStream::new(0, 0.4, 0.5, 1e9, spawn, 0.0);
        // a zero-ray scan leaves the submap map empty
        let empty_scan = crate::sensor::Scan { origin: spawn.pos, rays: Vec::new() };
        let fin = stream.tick(spawn, &empty_scan, 1.0, 0.0).expect("time window");
        let mut rng = crate::seeded_rng(2, crate::stream::COHORT, 0);
        let sub = build_subgraph(&fin, 50, 4.0, 2.0, 0.4, &mut rng);
        assert_eq!(sub.vertices.len(), 1, "only the trajectory anchor survives");
    }

    #[test]
    fn merge_connects_overlapping_submaps() {
        // short corridor fully observed by both robots, so free space is
        // coherent and the stitched graph must form one component
        let world = fixtures::corridor(14.0, 4.0, 3.0, 0.4).unwrap();
        let a = make_submap(0, &world, &[0.0, 2.0, 4.0]);
        let b = make_submap(1, &world, &[3.0, 5.0, 7.0]);
        let mut rng = crate::seeded_rng(3, crate::stream::COHORT, 0);
        let sga = build_subgraph(&a, 40, 4.0, 2.0, 0.4, &mut rng);
        let sgb = build_subgraph(&b, 40, 4.0, 2.0, 0.4, &mut rng);

        // merged coarse map in the team frame
        let mut merged = OccupancyMap::new(0.4);
        for (sm, t) in [(&a, &a.transform), (&b, &b.transform)] {
            for (idx, s) in sm.map.known_voxels() {
                let p = t.apply(sm.map.index_center(idx));
                merged.set_state(merged.world_to_index(p), s);
            }
        }
        let mut gc = GlobalGraphC::new(4.0, 0.4);
        gc.merge_subgraph(&sga, &a.transform, &merged);
        gc.merge_subgraph(&sgb, &b.transform, &merged);

        // union-find oracle over the merged edge set: one component
        let mut uf = UnionFind::new(gc.vertices.len());
        for (u, edges) in gc.adj.iter().enumerate() {
            for &(v, _) in edges {
                uf.union(u, v);
            }
        }
        let root0 = uf.find(0);
        for v in 1..gc.vertices.len() {
            assert_eq!(uf.find(v), root0, "overlapping submaps must merge into one component");
        }
    }

    #[test]
    fn disjoint_submaps_stay_separate() {
        let world = fixtures::corridor(80.0, 4.0, 3.0, 0.4).unwrap();
        let a = make_submap(0, &world, &[0.0, 2.0]);
        // robot 1 far down the corridor, beyond rho of any of a's vertices
        let b = make_submap(1, &world, &[50.0, 52.0]);
        let mut rng = crate::seeded_rng(4, crate::stream::COHORT, 0);
        let sga = build_subgraph(&a, 30, 4.0, 2.0, 0.4, &mut rng);
        let sgb = build_subgraph(&b, 30, 4.0, 2.0, 0.4, &mut rng);
        let mut merged = OccupancyMap::new(0.4);
        for (sm, t) in [(&a, &a.transform), (&b, &b.transform)] {
            for (idx, s) in sm.map.known_voxels() {
                let p = t.apply(sm.map.index_center(idx));
                merged.set_state(merged.world_to_index(p), s);
            }
        }
        let mut gc = GlobalGraphC::new(4.0, 0.4);
        gc.merge_subgraph(&sga, &a.transform, &merged);
        gc.merge_subgraph(&sgb, &b.transform, &merged);
        let mut uf = UnionFind::new(gc.vertices.len());
        for (u, edges) in gc.adj.iter().enumerate() {
            for &(v, _) in edges {
                uf.union(u, v);
            }
        }
        let roots: std::collections::BTreeSet<usize> =
            (0..gc.vertices.len()).map(|v| uf.find(v)).collect();
        assert!(roots.len() >= 2, "distant submaps must form separate components");
    }
}
