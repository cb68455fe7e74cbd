//! Independent reference implementations used by the verification suites and
//! tests. Each oracle deliberately uses a different algorithm than the code
//! path it checks: dense sampling instead of exact grid stepping,
//! Bellman-Ford instead of Dijkstra, union-find instead of BFS, exhaustive
//! scans instead of incremental bookkeeping.

use std::collections::BTreeSet;

use crate::math::Vec3;
use crate::voxel::{GroundParams, OccupancyMap, VoxelIndex, VoxelState, N_RING};

/// Voxels touched by segment `a -> b`, found by stepping 0.1 voxel along the
/// ray. May miss corner-clipped voxels; always a subset of the exact set.
pub fn segment_voxels_sampled(resolution: f64, a: Vec3, b: Vec3) -> Vec<VoxelIndex> {
    let mut set = BTreeSet::new();
    let len = (b - a).norm();
    let step = resolution * 0.1;
    let n = (len / step).ceil().max(1.0) as usize;
    for i in 0..=n {
        let t = i as f64 / n as f64;
        let p = a.lerp(b, t);
        set.insert(VoxelIndex::new(
            (p.x / resolution).floor() as i32,
            (p.y / resolution).floor() as i32,
            (p.z / resolution).floor() as i32,
        ));
    }
    set.into_iter().collect()
}

/// Brute-force voxel-inclusion check for segment clearance: samples the
/// segment densely, and for every sample enumerates all voxels of the
/// surrounding ball, requiring them Free when the cube truly intersects the
/// capsule.
pub fn segment_free_bruteforce(map: &OccupancyMap, a: Vec3, b: Vec3, radius: f64) -> bool {
    let res = map.resolution();
    let r = radius.max(0.0);
    let reach = (r / res).ceil() as i32 + 1;
    let step = res * 0.25;
    let len = (b - a).norm();
    let n = (len / step).ceil().max(1.0) as usize;
    let mut checked = BTreeSet::new();
    for i in 0..=n {
        let p = a.lerp(b, i as f64 / n as f64);
        let c = map.world_to_index(p);
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    let idx = c.offset(dx, dy, dz);
                    if !checked.insert(idx) {
                        continue;
                    }
                    let lo = map.index_min_corner(idx);
                    let hi = lo + Vec3::new(res, res, res);
                    if crate::voxel::segment_box_dist_sq(a, b, lo, hi) <= r * r
                        && map.state(idx) != VoxelState::Free
                    {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Exhaustive column-and-ring scan deciding whether a point has supportive
/// ground, mirroring the definition rather than the implementation.
pub fn ground_attached_bruteforce(map: &OccupancyMap, p: Vec3, prm: &GroundParams) -> bool {
    let res = map.resolution();
    let base = map.world_to_index(p);
    let levels = (prm.max_drop / res).ceil().max(1.0) as i32;
    for k in 1..=levels {
        let z = base.z - k;
        if map.state(VoxelIndex::new(base.x, base.y, z)) == VoxelState::Occupied {
            return true;
        }
        for j in 0..N_RING {
            let angle = j as f64 * std::f64::consts::TAU / N_RING as f64;
            let q = Vec3::new(p.x + prm.ring_radius * angle.cos(), p.y + prm.ring_radius * angle.sin(), 0.0);
            let mut idx = map.world_to_index(q);
            idx.z = z;
            if map.state(idx) == VoxelState::Occupied {
                return true;
            }
        }
    }
    false
}

/// Bellman-Ford single-source shortest distances over an undirected adjacency
/// list. O(V*E); used as the oracle for Dijkstra.
pub fn bellman_ford(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    dist[source] = 0.0;
    for _ in 0..n {
        let mut changed = false;
        for (u, edges) in adj.iter().enumerate() {
            if !dist[u].is_finite() {
                continue;
            }
            for &(v, w) in edges {
                let cand = dist[u] + w;
                if cand < dist[v] {
                    dist[v] = cand;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

/// Volumetric-gain oracle: marches each ray in 0.02-voxel steps (no grid
/// stepping) and collects the first non-Free voxel per ray, counting the
/// distinct Unknown ones.
pub fn raymarch_gain(map: &OccupancyMap, origin: Vec3, directions: &[Vec3], d_max: f64) -> usize {
    let res = map.resolution();
    let step = res * 0.02;
    let n = (d_max / step).ceil() as usize;
    let mut unknown = BTreeSet::new();
    for dir in directions {
        let mut prev = None;
        for i in 0..=n {
            let t = (i as f64 * step).min(d_max);
            let p = origin + *dir * t;
            let idx = map.world_to_index(p);
            if prev == Some(idx) {
                continue;
            }
            prev = Some(idx);
            match map.state(idx) {
                VoxelState::Free => continue,
                VoxelState::Occupied => break,
                VoxelState::Unknown => {
                    unknown.insert(idx);
                    break;
                }
            }
        }
    }
    unknown.len()
}

/// Disjoint-set forest used for connectivity oracles.
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Connected components of a voxel point set under 26-connectivity, computed
/// with union-find over all pairs. Components are sorted internally and by
/// their smallest member, independent of input order.
pub fn components_26_unionfind(points: &[VoxelIndex]) -> Vec<Vec<VoxelIndex>> {
    let n = points.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let a = points[i];
            let b = points[j];
            if (a.x - b.x).abs() <= 1 && (a.y - b.y).abs() <= 1 && (a.z - b.z).abs() <= 1 {
                uf.union(i, j);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<VoxelIndex>> = Default::default();
    for i in 0..n {
        let root = uf.find(i);
        groups.entry(root).or_default().push(points[i]);
    }
    let mut out: Vec<Vec<VoxelIndex>> = groups.into_values().collect();
    for g in &mut out {
        g.sort_unstable();
    }
    out.sort_by_key(|g| g[0]);
    out
}

/// Connected components under 6-connectivity (for verifying the 26 choice).
pub fn components_6_unionfind(points: &[VoxelIndex]) -> Vec<Vec<VoxelIndex>> {
    let n = points.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let a = points[i];
            let b = points[j];
            if (a.x - b.x).abs() + (a.y - b.y).abs() + (a.z - b.z).abs() == 1 {
                uf.union(i, j);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<VoxelIndex>> = Default::default();
    for i in 0..n {
        let root = uf.find(i);
        groups.entry(root).or_default().push(points[i]);
    }
    let mut out: Vec<Vec<VoxelIndex>> = groups.into_values().collect();
    for g in &mut out {
        g.sort_unstable();
    }
    out.sort_by_key(|g| g[0]);
    out
}

/// Exhaustive frontier oracle: recomputes the reachable free region by
/// fixed-point sweeps (no queue) and scans every Unknown voxel in the hull
/// for 6-adjacency to a reached Free voxel.
pub fn frontier_points_exhaustive(map: &OccupancyMap, seeds: &[Vec3]) -> Vec<VoxelIndex> {
    let known = map.known_voxels();
    if known.is_empty() {
        return Vec::new();
    }
    let mut reached: BTreeSet<VoxelIndex> = seeds
        .iter()
        .map(|p| map.world_to_index(*p))
        .filter(|i| map.state(*i) == VoxelState::Free)
        .collect();
    // fixed-point relaxation: add free neighbors of reached voxels until stable
    loop {
        let mut added = Vec::new();
        for idx in &reached {
            for nb in idx.neighbors6() {
                if map.state(nb) == VoxelState::Free && !reached.contains(&nb) {
                    added.push(nb);
                }
            }
        }
        if added.is_empty() {
            break;
        }
        reached.extend(added);
    }
    let mut frontier = BTreeSet::new();
    for idx in &reached {
        for nb in idx.neighbors6() {
            if map.state(nb) == VoxelState::Unknown {
                frontier.insert(nb);
            }
        }
    }
    frontier.into_iter().collect()
}

/// Hop-graph reachability oracle for the communication model, built on
/// union-find instead of BFS.
pub fn comm_reachable_unionfind(nodes: &[Vec3], from: usize, to: usize, range: f64) -> bool {
    let n = nodes.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if nodes[i].dist(nodes[j]) <= range {
                uf.union(i, j);
            }
        }
    }
    uf.find(from) == uf.find(to)
}
