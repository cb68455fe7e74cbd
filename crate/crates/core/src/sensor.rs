//! Simulated depth sensor: a gridded ray fan over the sensor's field of view,
//! cast against the ground-truth world.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::math::{Configuration, Vec3};
use crate::voxel::ScanRay;
use crate::world::World;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Depth sensor model: fields of view in degrees, range, and the angular ray
/// grid used both for scanning and for volumetric-gain evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct SensorModel {
    pub fov_h_deg: f64,
    pub fov_v_deg: f64,
    pub d_max: f64,
    pub rays_h: usize,
    pub rays_v: usize,
}

impl SensorModel {
    /// Default angular density: 0.9 degrees horizontally, 2 degrees
    /// vertically (LiDAR-like).
    pub fn new(fov_h_deg: f64, fov_v_deg: f64, d_max: f64) -> Self {
        let rays_h = (fov_h_deg / 0.9).round().max(1.0) as usize;
        let rays_v = ((fov_v_deg / 2.0).round().max(1.0) as usize).max(1);
        SensorModel { fov_h_deg, fov_v_deg, d_max, rays_h, rays_v }
    }

    pub fn with_rays(fov_h_deg: f64, fov_v_deg: f64, d_max: f64, rays_h: usize, rays_v: usize) -> Self {
        SensorModel { fov_h_deg, fov_v_deg, d_max, rays_h: rays_h.max(1), rays_v: rays_v.max(1) }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.fov_h_deg > 0.0 && self.fov_h_deg <= 360.0) {
            return Err(format!("fov_h must be in (0, 360], got {}", self.fov_h_deg));
        }
        if !(self.fov_v_deg > 0.0 && self.fov_v_deg <= 180.0) {
            return Err(format!("fov_v must be in (0, 180], got {}", self.fov_v_deg));
        }
        if self.d_max <= 0.0 {
            return Err(format!("d_max must be positive, got {}", self.d_max));
        }
        Ok(())
    }

    fn azimuths(&self, yaw: f64, n: usize) -> Vec<f64> {
        if self.fov_h_deg >= 360.0 {
            // full circle: even spacing, no duplicated seam ray
            (0..n).map(|k| yaw + k as f64 * std::f64::consts::TAU / n as f64).collect()
        } else if n == 1 {
            vec![yaw]
        } else {
            let half = self.fov_h_deg.to_radians() * 0.5;
            (0..n)
                .map(|k| yaw - half + k as f64 * (2.0 * half) / (n - 1) as f64)
                .collect()
        }
    }

    fn elevations(&self, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![0.0];
        }
        let half = self.fov_v_deg.to_radians() * 0.5;
        (0..n).map(|k| -half + k as f64 * (2.0 * half) / (n - 1) as f64).collect()
    }

    /// Unit ray directions of the scan grid, elevation-major then azimuth.
    pub fn directions(&self, yaw: f64) -> Vec<Vec3> {
        self.directions_with(yaw, self.rays_h, self.rays_v)
    }

    /// The scan grid shifted by `phase` in [0, 1) of one angular step on both
    /// axes, modeling a nodding/rotating scan pattern: successive phases
    /// sweep the gaps between rays. Phase 0 equals [`Self::directions`];
    /// rays pushed past the field of view are dropped.
    pub fn directions_phased(&self, yaw: f64, phase: f64) -> Vec<Vec3> {
        let phase = phase.rem_euclid(1.0);
        if phase == 0.0 {
            return self.directions(yaw);
        }
        let mut azimuths = self.azimuths(yaw, self.rays_h);
        if self.fov_h_deg >= 360.0 {
            let step = std::f64::consts::TAU / self.rays_h as f64;
            for az in azimuths.iter_mut() {
                *az += phase * step; // wraps naturally on the circle
            }
        } else if self.rays_h > 1 {
            let half = self.fov_h_deg.to_radians() * 0.5;
            let step = 2.0 * half / (self.rays_h - 1) as f64;
            azimuths = azimuths
                .into_iter()
                .map(|az| az + phase * step)
                .filter(|az| *az <= yaw + half + 1e-12)
                .collect();
        }
        let mut elevations = self.elevations(self.rays_v);
        if self.rays_v > 1 {
            let half = self.fov_v_deg.to_radians() * 0.5;
            let step = 2.0 * half / (self.rays_v - 1) as f64;
            elevations = elevations
                .into_iter()
                .map(|el| el + phase * step)
                .filter(|el| *el <= half + 1e-12)
                .collect();
        }
        let mut out = Vec::with_capacity(azimuths.len() * elevations.len());
        for el in &elevations {
            let (sin_el, cos_el) = el.sin_cos();
            for az in &azimuths {
                let (sin_az, cos_az) = az.sin_cos();
                out.push(Vec3::new(cos_el * cos_az, cos_el * sin_az, sin_el));
            }
        }
        out
    }

    /// The same grid densified by an integer factor. The dense grid contains
    /// every direction of the base grid, so visible sets only grow.
    pub fn directions_dense(&self, yaw: f64, factor: usize) -> Vec<Vec3> {
        let nh = if self.fov_h_deg >= 360.0 {
            self.rays_h * factor
        } else {
            (self.rays_h - 1).max(1) * factor + 1
        };
        let nv = if self.rays_v == 1 { 1 } else { (self.rays_v - 1) * factor + 1 };
        self.directions_with(yaw, nh, nv)
    }

    fn directions_with(&self, yaw: f64, nh: usize, nv: usize) -> Vec<Vec3> {
        let azimuths = self.azimuths(yaw, nh);
        let mut out = Vec::with_capacity(nh * nv);
        for el in self.elevations(nv) {
            let (sin_el, cos_el) = el.sin_cos();
            for &az in &azimuths {
                let (sin_az, cos_az) = az.sin_cos();
                out.push(Vec3::new(cos_el * cos_az, cos_el * sin_az, sin_el));
            }
        }
        out
    }
}

/// A depth scan: per-ray endpoints in world frame plus the sensor origin.
#[derive(Clone, Debug)]
pub struct Scan {
    pub origin: Vec3,
    pub rays: Vec<ScanRay>,
}

impl Scan {
    pub fn hit_points(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.rays.iter().filter(|r| r.hit).map(|r| r.endpoint)
    }
}

fn cast_one(world: &World, origin: Vec3, dir: Vec3, d_max: f64) -> ScanRay {
    match world.cast_ray(origin, dir, d_max) {
        Some((point, _)) => ScanRay { endpoint: point, hit: true },
        None => ScanRay { endpoint: origin + dir * d_max, hit: false },
    }
}

/// Cast the sensor's ray grid from `pose` against the world. Deterministic;
/// each ray returns the first solid-voxel intersection within range or a
/// truncation endpoint.
pub fn simulate_scan(world: &World, pose: &Configuration, model: &SensorModel) -> Scan {
    simulate_scan_phased(world, pose, model, 0.0)
}

/// [`simulate_scan`] with a dithered grid phase; see
/// [`SensorModel::directions_phased`].
pub fn simulate_scan_phased(world: &World, pose: &Configuration, model: &SensorModel, phase: f64) -> Scan {
    let origin = pose.pos;
    let dirs = model.directions_phased(pose.yaw, phase);
    #[cfg(feature = "parallel")]
    let rays: Vec<ScanRay> = dirs
        .par_iter()
        .map(|d| cast_one(world, origin, *d, model.d_max))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let rays: Vec<ScanRay> = dirs
        .iter()
        .map(|d| cast_one(world, origin, *d, model.d_max))
        .collect();
    Scan { origin, rays }
}

/// Sequential reference path; identical output to [`simulate_scan`].
pub fn simulate_scan_seq(world: &World, pose: &Configuration, model: &SensorModel) -> Scan {
    let origin = pose.pos;
    let rays = model
        .directions(pose.yaw)
        .into_iter()
        .map(|d| cast_one(world, origin, d, model.d_max))
        .collect();
    Scan { origin, rays }
}

/// Scan with optional Gaussian range noise on surface returns (sigma in
/// meters). `sigma <= 0` is exact. Noisy ranges are clamped to `[0, d_max]`
/// and a return pushed past `d_max` becomes a truncation.
pub fn simulate_scan_noisy(
    world: &World,
    pose: &Configuration,
    model: &SensorModel,
    phase: f64,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Scan {
    let exact = simulate_scan_phased(world, pose, model, phase);
    if sigma <= 0.0 {
        return exact;
    }
    let origin = exact.origin;
    let rays = exact
        .rays
        .into_iter()
        .map(|ray| {
            if !ray.hit {
                return ray;
            }
            let delta = ray.endpoint - origin;
            let range = delta.norm();
            if range < 1e-9 {
                return ray;
            }
            let dir = delta / range;
            // Box-Muller from two uniform draws
            let u1: f64 = rng.random::<f64>().max(1e-12);
            let u2: f64 = rng.random::<f64>();
            let g = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            let noisy = (range + sigma * g).max(0.0);
            if noisy >= model.d_max {
                ScanRay { endpoint: origin + dir * model.d_max, hit: false }
            } else {
                ScanRay { endpoint: origin + dir * noisy, hit: true }
            }
        })
        .collect();
    Scan { origin, rays }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::fixtures;

    #[test]
    fn closed_box_all_rays_hit() {
        let world = fixtures::box_room([10.0, 10.0, 4.0], 0.5).unwrap();
        let model = SensorModel::with_rays(360.0, 30.0, 30.0, 60, 5);
        let scan = simulate_scan(&world, &world.spawn(), &model);
        assert_eq!(scan.rays.len(), 300);
        assert!(scan.rays.iter().all(|r| r.hit), "every ray must return inside a closed box");
    }

    #[test]
    fn wall_at_seven_meters() {
        let world = fixtures::corridor(20.0, 6.0, 4.0, 0.5).unwrap();
        // stand 7 m from the far wall, face it
        let far_x = 1.0 + 20.0; // wall = 2*0.5 = 1.0
        let pose = Configuration::new(far_x - 7.0, 1.0 + 3.0, 1.0 + 2.0, 0.0);
        let model = SensorModel::with_rays(10.0, 2.0, 30.0, 3, 1);
        let scan = simulate_scan(&world, &pose, &model);
        let forward = &scan.rays[1]; // center ray
        assert!(forward.hit);
        let d = (forward.endpoint - pose.pos).norm();
        assert!((d - 7.0).abs() <= 0.5, "hit at {d}, expected 7 +- r_V");
    }

    #[test]
    fn no_hit_beyond_range() {
        let world = fixtures::corridor(60.0, 4.0, 3.0, 0.5).unwrap();
        let pose = Configuration::new(2.0, 3.0, 2.5, 0.0);
        let model = SensorModel::new(360.0, 30.0, 30.0);
        let scan = simulate_scan(&world, &pose, &model);
        for ray in &scan.rays {
            let d = (ray.endpoint - pose.pos).norm();
            assert!(d <= 30.0 + 1e-9, "ray reported {d} m > d_max");
        }
    }

    #[test]
    fn translation_symmetry() {
        // translating world and pose together translates all hit points
        let w1 = fixtures::box_room([8.0, 8.0, 4.0], 0.5).unwrap();
        let model = SensorModel::with_rays(360.0, 60.0, 20.0, 24, 5);
        let p1 = w1.spawn();
        let s1 = simulate_scan(&w1, &p1, &model);

        // same geometry shifted by whole voxels
        let shift = Vec3::new(4.0, -6.0, 2.0);
        let mut w2 = crate::world::World::solid_block(
            "shifted",
            0.5,
            crate::voxel::VoxelIndex::new(
                w1.min_index().x + 8,
                w1.min_index().y - 12,
                w1.min_index().z + 4,
            ),
            w1.dims(),
        );
        for x in w1.min_index().x..=w1.max_index().x {
            for y in w1.min_index().y..=w1.max_index().y {
                for z in w1.min_index().z..=w1.max_index().z {
                    let idx = crate::voxel::VoxelIndex::new(x, y, z);
                    if !w1.is_solid(idx) {
                        w2.set_solid(idx.offset(8, -12, 4), false);
                    }
                }
            }
        }
        let p2 = Configuration::from_pos(p1.pos + shift, p1.yaw);
        let s2 = simulate_scan(&w2, &p2, &model);
        assert_eq!(s1.rays.len(), s2.rays.len());
        for (a, b) in s1.rays.iter().zip(&s2.rays) {
            assert_eq!(a.hit, b.hit);
            assert!((a.endpoint + shift - b.endpoint).norm() < 1e-9);
        }
    }

    #[test]
    fn hits_lie_on_solid_faces() {
        let world = fixtures::box_room([9.0, 7.0, 3.0], 0.5).unwrap();
        let model = SensorModel::with_rays(360.0, 90.0, 30.0, 36, 9);
        let scan = simulate_scan(&world, &world.spawn(), &model);
        for ray in scan.rays.iter().filter(|r| r.hit) {
            let dir = (ray.endpoint - scan.origin).normalized().unwrap();
            let inside = world.index_of(ray.endpoint + dir * 1e-6);
            assert!(world.is_solid(inside), "hit endpoint must enter a solid voxel");
            let before = world.index_of(ray.endpoint - dir * 1e-6);
            assert!(!world.is_solid(before), "hit endpoint must sit on the surface");
        }
    }

    #[test]
    fn dense_grid_contains_base_grid() {
        let model = SensorModel::with_rays(360.0, 90.0, 30.0, 16, 5);
        let base = model.directions(0.3);
        let dense = model.directions_dense(0.3, 4);
        for d in &base {
            assert!(
                dense.iter().any(|e| (*e - *d).norm() < 1e-9),
                "base direction missing from dense grid"
            );
        }
        assert_eq!(dense.len(), (16 * 4) * ((5 - 1) * 4 + 1));
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_equals_sequential() {
        let world = fixtures::box_room([10.0, 6.0, 3.0], 0.5).unwrap();
        let model = SensorModel::with_rays(360.0, 45.0, 25.0, 48, 7);
        let par = simulate_scan(&world, &world.spawn(), &model);
        let seq = simulate_scan_seq(&world, &world.spawn(), &model);
        assert_eq!(par.rays.len(), seq.rays.len());
        for (a, b) in par.rays.iter().zip(&seq.rays) {
            assert_eq!(a.hit, b.hit);
            assert_eq!(a.endpoint, b.endpoint);
        }
    }

    #[test]
    fn phase_sweep_fills_ray_gaps() {
        let model = SensorModel::with_rays(360.0, 90.0, 20.0, 36, 7);
        let base = model.directions_phased(0.0, 0.0);
        let b2 = model.directions(0.0);
        assert_eq!(base.len(), b2.len());
        for (a, b) in base.iter().zip(&b2) {
            assert!((*a - *b).norm() < 1e-12, "phase 0 must equal the base grid");
        }
        // distinct phases produce distinct elevations between the base rings
        let shifted = model.directions_phased(0.0, 0.5);
        let el = |v: &crate::math::Vec3| v.z.asin();
        let base_els: Vec<f64> = base.iter().map(el).collect();
        for d in shifted.iter().take(36) {
            let e = el(d);
            assert!(base_els.iter().all(|b| (b - e).abs() > 1e-6));
        }
    }

    #[test]
    fn noise_is_seeded_and_bounded() {
        let world = fixtures::box_room([10.0, 6.0, 3.0], 0.5).unwrap();
        let model = SensorModel::with_rays(360.0, 30.0, 30.0, 24, 3);
        let mut r1 = crate::seeded_rng(5, crate::stream::NOISE, 0);
        let mut r2 = crate::seeded_rng(5, crate::stream::NOISE, 0);
        let a = simulate_scan_noisy(&world, &world.spawn(), &model, 0.0, 0.05, &mut r1);
        let b = simulate_scan_noisy(&world, &world.spawn(), &model, 0.0, 0.05, &mut r2);
        for (x, y) in a.rays.iter().zip(&b.rays) {
            assert_eq!(x.endpoint, y.endpoint);
        }
    }
}
