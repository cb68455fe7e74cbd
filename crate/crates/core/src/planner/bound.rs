//! Oriented sampling bounds and the adaptive local bound fitted to the
//! recently observed geometry by principal component analysis.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::math::{sym_eigen3, Vec3};

/// An oriented box given by a center, three orthonormal axes and per-axis
/// half extents.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundingBox {
    pub center: Vec3,
    pub axes: [Vec3; 3],
    pub half_extents: Vec3,
}

impl BoundingBox {
    pub fn axis_aligned(center: Vec3, half_extents: Vec3) -> Self {
        BoundingBox {
            center,
            axes: [Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0)],
            half_extents,
        }
    }

    pub fn contains(&self, p: Vec3) -> bool {
        let d = p - self.center;
        d.dot(self.axes[0]).abs() <= self.half_extents.x
            && d.dot(self.axes[1]).abs() <= self.half_extents.y
            && d.dot(self.axes[2]).abs() <= self.half_extents.z
    }

    /// Uniform sample of the box volume.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec3 {
        let u = rng.random_range(-1.0..=1.0) * self.half_extents.x;
        let v = rng.random_range(-1.0..=1.0) * self.half_extents.y;
        let w = rng.random_range(-1.0..=1.0) * self.half_extents.z;
        self.center + self.axes[0] * u + self.axes[1] * v + self.axes[2] * w
    }

    /// Smallest axis-aligned box containing this oriented box.
    pub fn hull_aabb(&self) -> crate::math::Aabb {
        let r = Vec3::new(
            self.axes[0].x.abs() * self.half_extents.x
                + self.axes[1].x.abs() * self.half_extents.y
                + self.axes[2].x.abs() * self.half_extents.z,
            self.axes[0].y.abs() * self.half_extents.x
                + self.axes[1].y.abs() * self.half_extents.y
                + self.axes[2].y.abs() * self.half_extents.z,
            self.axes[0].z.abs() * self.half_extents.x
                + self.axes[1].z.abs() * self.half_extents.y
                + self.axes[2].z.abs() * self.half_extents.z,
        );
        crate::math::Aabb::new(self.center - r, self.center + r)
    }
}

/// Fit the local sampling bound to a point cloud.
///
/// Axes are the covariance eigenvectors; half extents scale `mu_v` by the
/// normalized eigenvalue weights sqrt(lambda_k / sum lambda), clamped per
/// axis. Degenerate clouds (fewer than 4 points or a collapsed covariance)
/// fall back to an axis-aligned box of the maximum clamped extent.
pub fn adaptive_local_bound(
    center: Vec3,
    points: &[Vec3],
    mu_v: f64,
    clamp: (f64, f64),
) -> BoundingBox {
    let (lo, hi) = clamp;
    let fallback = BoundingBox::axis_aligned(center, Vec3::new(hi, hi, hi));
    if points.len() < 4 {
        return fallback;
    }
    let n = points.len() as f64;
    let mean = points.iter().fold(Vec3::ZERO, |acc, p| acc + *p) / n;
    let mut cov = [[0.0f64; 3]; 3];
    for p in points {
        let d = *p - mean;
        let a = d.to_array();
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += a[i] * a[j];
            }
        }
    }
    for row in cov.iter_mut() {
        for v in row.iter_mut() {
            *v /= n;
        }
    }
    let (vals, vecs) = sym_eigen3(cov);
    let total: f64 = vals.iter().map(|v| v.max(0.0)).sum();
    if !total.is_finite() || total < 1e-9 {
        return fallback;
    }
    let mut axes = vecs;
    // keep the frame right-handed
    axes[2] = axes[0].cross(axes[1]);
    let he = Vec3::new(
        (mu_v * (vals[0].max(0.0) / total).sqrt()).clamp(lo, hi),
        (mu_v * (vals[1].max(0.0) / total).sqrt()).clamp(lo, hi),
        (mu_v * (vals[2].max(0.0) / total).sqrt()).clamp(lo, hi),
    );
    BoundingBox { center, axes, half_extents: he }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tunnel_cloud(axis: Vec3, n: usize) -> Vec<Vec3> {
        // points spread along `axis` with slight cross-section jitter
        let mut rng = crate::seeded_rng(1, crate::stream::TEST, 7);
        (0..n)
            .map(|_| {
                let t: f64 = rng.random_range(-20.0..20.0);
                let j1: f64 = rng.random_range(-1.5..1.5);
                let j2: f64 = rng.random_range(-1.0..1.0);
                axis * t + Vec3::new(-axis.y, axis.x, 0.0) * j1 + Vec3::new(0.0, 0.0, 1.0) * j2
            })
            .collect()
    }

    #[test]
    fn tunnel_axis_dominates() {
        let axis = Vec3::new(0.8, 0.6, 0.0);
        let pts = tunnel_cloud(axis, 400);
        let bb = adaptive_local_bound(Vec3::ZERO, &pts, 50.0, (2.0, 50.0));
        let alignment = bb.axes[0].dot(axis).abs();
        assert!(alignment > (5f64.to_radians()).cos(), "dominant axis within 5 degrees");
        assert!(bb.half_extents.x > bb.half_extents.y);
        assert!(bb.half_extents.x > bb.half_extents.z);

        // cross-check against a direct covariance residual: A v = lambda v was
        // already verified in math; here confirm extents order matches spread
        let spread = |dir: Vec3| {
            let m: f64 = pts.iter().map(|p| p.dot(dir)).sum::<f64>() / pts.len() as f64;
            pts.iter().map(|p| (p.dot(dir) - m).powi(2)).sum::<f64>() / pts.len() as f64
        };
        assert!(spread(bb.axes[0]) >= spread(bb.axes[1]) - 1e-9);
        assert!(spread(bb.axes[1]) >= spread(bb.axes[2]) - 1e-9);
    }

    #[test]
    fn isotropic_cloud_gives_even_extents() {
        let mut rng = crate::seeded_rng(2, crate::stream::TEST, 0);
        let pts: Vec<Vec3> = (0..2000)
            .map(|_| {
                // rejection-sample a ball
                loop {
                    let p = Vec3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    );
                    if p.norm_sq() <= 1.0 {
                        return p * 10.0;
                    }
                }
            })
            .collect();
        let bb = adaptive_local_bound(Vec3::ZERO, &pts, 50.0, (1.0, 100.0));
        let he = bb.half_extents;
        let max = he.x.max(he.y).max(he.z);
        let min = he.x.min(he.y).min(he.z);
        assert!(max / min < 1.2, "isotropic extents within 20%: {he:?}");
    }

    #[test]
    fn degenerate_falls_back() {
        let bb = adaptive_local_bound(Vec3::new(1.0, 2.0, 3.0), &[], 50.0, (10.0, 50.0));
        assert_eq!(bb.half_extents, Vec3::new(50.0, 50.0, 50.0));
        assert!(bb.contains(Vec3::new(1.0, 2.0, 3.0)));
        // all-identical points collapse the covariance
        let same = vec![Vec3::new(5.0, 5.0, 5.0); 10];
        let bb2 = adaptive_local_bound(Vec3::ZERO, &same, 50.0, (10.0, 50.0));
        assert_eq!(bb2.half_extents, Vec3::new(50.0, 50.0, 50.0));
    }

    #[test]
    fn sampling_stays_inside() {
        let pts = tunnel_cloud(Vec3::new(1.0, 0.0, 0.0), 100);
        let bb = adaptive_local_bound(Vec3::new(3.0, -2.0, 1.0), &pts, 30.0, (5.0, 30.0));
        let mut rng = crate::seeded_rng(3, crate::stream::TEST, 0);
        for _ in 0..500 {
            let p = bb.sample(&mut rng);
            assert!(bb.contains(p));
        }
    }
}
