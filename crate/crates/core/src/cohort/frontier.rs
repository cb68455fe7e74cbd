//! Team-level frontier maintenance: cross-submap occupancy rechecks,
//! 26-connected reclustering on the coordination grid, and minimum-size
//! filtering.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::cohort::subgraph::GlobalGraphC;
use crate::math::{RigidTransform, Vec3};
use crate::voxel::VoxelIndex;

/// A cluster of frontier points in the team frame.
#[derive(Clone, Debug)]
pub struct Frontier {
    pub id: usize,
    /// Distinct frontier voxel centers, team frame, lexicographic order.
    pub points: Vec<Vec3>,
    pub size: usize,
    pub centroid: Vec3,
    /// Coordination-graph vertices near the centroid.
    pub linked_vertices: Vec<usize>,
}

/// Delete every frontier point that lands in a voxel another submap knows.
///
/// The check runs on the common team grid: `team_known[j]` holds submap
/// `j`'s observed voxels re-quantized to that grid, so differently anchored
/// submap lattices cannot produce phantom survivors along quantization
/// seams. A submap never deletes its own points. Returns the number of
/// deleted points.
pub fn recheck_frontiers(
    transforms: &[RigidTransform],
    team_known: &[rustc_hash::FxHashSet<VoxelIndex>],
    team_resolution: f64,
    frontier_points: &mut [Vec<Vec3>],
) -> usize {
    let mut deleted = 0;
    for i in 0..frontier_points.len() {
        let into_team = transforms[i];
        let points = std::mem::take(&mut frontier_points[i]);
        let kept: Vec<Vec3> = points
            .into_iter()
            .filter(|p| {
                let team = into_team.apply(*p);
                let idx = VoxelIndex::new(
                    (team.x / team_resolution).floor() as i32,
                    (team.y / team_resolution).floor() as i32,
                    (team.z / team_resolution).floor() as i32,
                );
                let known = team_known
                    .iter()
                    .enumerate()
                    .any(|(j, set)| j != i && set.contains(&idx));
                if known {
                    deleted += 1;
                }
                !known
            })
            .collect();
        frontier_points[i] = kept;
    }
    deleted
}

/// Cluster team-frame frontier points into [`Frontier`]s.
///
/// Points are snapped to the coordination grid (duplicates collapse),
/// components are found by BFS under 26-connectivity, clusters smaller than
/// `f_min` are discarded, and each survivor links to the coordination-graph
/// vertices within `link_radius` of its centroid. Ordered by size
/// descending, then centroid, so ids are stable for a fixed input.
pub fn recluster_frontiers(
    points_team: &[Vec3],
    resolution: f64,
    f_min: usize,
    link_radius: f64,
    gc: &GlobalGraphC,
) -> Vec<Frontier> {
    let mut voxels: BTreeSet<VoxelIndex> = BTreeSet::new();
    for p in points_team {
        voxels.insert(VoxelIndex::new(
            (p.x / resolution).floor() as i32,
            (p.y / resolution).floor() as i32,
            (p.z / resolution).floor() as i32,
        ));
    }

    let mut unvisited = voxels.clone();
    let mut clusters: Vec<Vec<VoxelIndex>> = Vec::new();
    while let Some(&seed) = unvisited.iter().next() {
        unvisited.remove(&seed);
        let mut cluster = vec![seed];
        let mut queue = VecDeque::from([seed]);
        while let Some(cur) = queue.pop_front() {
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if dx == 0 && dy == 0 && dz == 0 {
                            continue;
                        }
                        let nb = cur.offset(dx, dy, dz);
                        if unvisited.remove(&nb) {
                            cluster.push(nb);
                            queue.push_back(nb);
                        }
                    }
                }
            }
        }
        cluster.sort_unstable();
        clusters.push(cluster);
    }

    let center = |idx: &VoxelIndex| {
        Vec3::new(
            (idx.x as f64 + 0.5) * resolution,
            (idx.y as f64 + 0.5) * resolution,
            (idx.z as f64 + 0.5) * resolution,
        )
    };
    let mut out: Vec<Frontier> = clusters
        .into_iter()
        .filter(|c| c.len() >= f_min)
        .map(|c| {
            let points: Vec<Vec3> = c.iter().map(center).collect();
            let centroid = points.iter().fold(Vec3::ZERO, |a, p| a + *p) / points.len() as f64;
            let mut linked_vertices = gc.vertices_within(centroid, link_radius);
            if linked_vertices.is_empty() {
                // no vertex within the link radius: fall back to the nearest
                // one so the frontier stays routable
                linked_vertices.extend(gc.nearest_vertex(centroid));
            }
            Frontier {
                id: 0,
                size: points.len(),
                linked_vertices,
                points,
                centroid,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.size.cmp(&a.size).then_with(|| {
            a.centroid
                .to_array()
                .partial_cmp(&b.centroid.to_array())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    for (i, f) in out.iter_mut().enumerate() {
        f.id = i;
    }
    out
}

/// Retain only the points of clusters that survived `recluster_frontiers`,
/// mapping survivors back into the per-submap stores. Points of discarded
/// clusters are deleted permanently.
pub fn prune_discarded_points(
    frontiers: &[Frontier],
    resolution: f64,
    transforms: &[RigidTransform],
    frontier_points: &mut [Vec<Vec3>],
) -> usize {
    let surviving: BTreeSet<VoxelIndex> = frontiers
        .iter()
        .flat_map(|f| f.points.iter())
        .map(|p| {
            VoxelIndex::new(
                (p.x / resolution).floor() as i32,
                (p.y / resolution).floor() as i32,
                (p.z / resolution).floor() as i32,
            )
        })
        .collect();
    let mut deleted = 0;
    for (i, points) in frontier_points.iter_mut().enumerate() {
        let into_team = transforms[i];
        let before = points.len();
        points.retain(|p| {
            let team = into_team.apply(*p);
            let idx = VoxelIndex::new(
                (team.x / resolution).floor() as i32,
                (team.y / resolution).floor() as i32,
                (team.z / resolution).floor() as i32,
            );
            surviving.contains(&idx)
        });
        deleted += before - points.len();
    }
    deleted
}

/// Group team-frame points by snapped voxel (used by tests to compare
/// against the union-find oracle).
pub fn snap_to_grid(points: &[Vec3], resolution: f64) -> Vec<VoxelIndex> {
    let set: BTreeMap<VoxelIndex, ()> = points
        .iter()
        .map(|p| {
            (
                VoxelIndex::new(
                    (p.x / resolution).floor() as i32,
                    (p.y / resolution).floor() as i32,
                    (p.z / resolution).floor() as i32,
                ),
                (),
            )
        })
        .collect();
    set.into_keys().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles;

    fn gc_empty() -> GlobalGraphC {
        GlobalGraphC::new(4.0, 0.4)
    }

    fn pts(coords: &[(i32, i32, i32)], res: f64) -> Vec<Vec3> {
        coords
            .iter()
            .map(|&(x, y, z)| {
                Vec3::new(
                    (x as f64 + 0.5) * res,
                    (y as f64 + 0.5) * res,
                    (z as f64 + 0.5) * res,
                )
            })
            .collect()
    }

    #[test]
    fn two_separated_groups_make_two_clusters() {
        let res = 0.4;
        let mut coords = Vec::new();
        for x in 0..3 {
            for y in 0..3 {
                coords.push((x, y, 0));
            }
        }
        for x in 10..13 {
            for y in 0..3 {
                coords.push((x, y, 0));
            }
        }
        let points = pts(&coords, res);
        let frontiers = recluster_frontiers(&points, res, 1, 4.0, &gc_empty());
        assert_eq!(frontiers.len(), 2);
        // union-find oracle agrees on membership
        let snapped = snap_to_grid(&points, res);
        let oracle = oracles::components_26_unionfind(&snapped);
        assert_eq!(oracle.len(), 2);
        let mut got: Vec<Vec<VoxelIndex>> = frontiers
            .iter()
            .map(|f| {
                let mut v = snap_to_grid(&f.points, res);
                v.sort_unstable();
                v
            })
            .collect();
        got.sort_by_key(|g| g[0]);
        assert_eq!(got, oracle);
    }

    #[test]
    fn f_min_filters_small_components() {
        let res = 0.4;
        // 300-voxel slab kept, 200-voxel slab dropped, f_min = 250
        let mut coords = Vec::new();
        for x in 0..30 {
            for y in 0..10 {
                coords.push((x, y, 0));
            }
        }
        for x in 100..120 {
            for y in 0..10 {
                coords.push((x, y, 0));
            }
        }
        let points = pts(&coords, res);
        let frontiers = recluster_frontiers(&points, res, 250, 4.0, &gc_empty());
        assert_eq!(frontiers.len(), 1);
        assert_eq!(frontiers[0].size, 300);
    }

    #[test]
    fn diagonal_chain_connectivity_choice() {
        let res = 0.4;
        // diagonal-only adjacency: one cluster under 26, three under 6
        let coords = [(0, 0, 0), (1, 1, 1), (2, 2, 2)];
        let points = pts(&coords, res);
        let frontiers = recluster_frontiers(&points, res, 1, 4.0, &gc_empty());
        assert_eq!(frontiers.len(), 1, "26-connectivity joins the diagonal chain");
        let snapped = snap_to_grid(&points, res);
        assert_eq!(oracles::components_26_unionfind(&snapped).len(), 1);
        assert_eq!(oracles::components_6_unionfind(&snapped).len(), 3);
    }

    #[test]
    fn recluster_is_idempotent() {
        let res = 0.4;
        let mut coords = Vec::new();
        for x in 0..20 {
            for y in 0..15 {
                coords.push((x, y, 0));
            }
        }
        let points = pts(&coords, res);
        let first = recluster_frontiers(&points, res, 100, 4.0, &gc_empty());
        let surviving: Vec<Vec3> = first.iter().flat_map(|f| f.points.iter().copied()).collect();
        let second = recluster_frontiers(&surviving, res, 100, 4.0, &gc_empty());
        assert_eq!(first.len(), second.len());
        for (a, b) in first.iter().zip(second.iter()) {
            assert_eq!(a.size, b.size);
            assert_eq!(a.points, b.points);
            assert!((a.centroid - b.centroid).norm() < 1e-12);
        }
    }

    #[test]
    fn centroid_is_mean_of_points() {
        let res = 0.5;
        let coords = [(0, 0, 0), (1, 0, 0), (2, 0, 0)];
        let f = recluster_frontiers(&pts(&coords, res), res, 1, 4.0, &gc_empty());
        assert_eq!(f.len(), 1);
        assert!((f[0].centroid - Vec3::new(0.75, 0.25, 0.25)).norm() < 1e-12);
    }
}
