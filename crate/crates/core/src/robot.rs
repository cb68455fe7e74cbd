//! Robot models: physical class, geometry, motion limits, sensor and
//! endurance, plus the shipped parameter profiles.

use crate::sensor::SensorModel;
use crate::voxel::GroundParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RobotClass {
    Ground,
    Aerial,
}

/// A robot's physical and sensing parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct RobotSpec {
    pub class: RobotClass,
    /// Collision radius in meters.
    pub radius: f64,
    /// Body height; drives ground-projection clearance for ground robots.
    pub height: f64,
    /// Nominal speed in m/s.
    pub speed: f64,
    /// Max yaw rate in rad/s.
    pub max_yaw_rate: f64,
    /// Max traversable inclination in radians (ground robots).
    pub max_inclination: f64,
    pub sensor: SensorModel,
    /// Endurance in seconds.
    pub t_end: f64,
}

impl RobotSpec {
    pub fn is_ground(&self) -> bool {
        self.class == RobotClass::Ground
    }

    /// Ground-projection parameters derived from the body geometry:
    /// max drop 1.5x height, ring radius 0.5 m, clearance one body height.
    pub fn ground_params(&self) -> GroundParams {
        GroundParams { max_drop: 1.5 * self.height, ring_radius: 0.5, clearance: self.height }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.speed <= 0.0 {
            return Err(format!("speed must be positive, got {}", self.speed));
        }
        if self.max_yaw_rate <= 0.0 {
            return Err(format!("max_yaw_rate must be positive, got {}", self.max_yaw_rate));
        }
        if self.radius <= 0.0 || self.height <= 0.0 {
            return Err("radius and height must be positive".into());
        }
        if self.t_end < 0.0 {
            return Err(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if self.is_ground() && self.max_inclination <= 0.0 {
            return Err("ground robots need a positive max_inclination".into());
        }
        self.sensor.validate()
    }
}

/// Quadruped profile: 0.2 m mapping voxels, 1000-vertex local graphs,
/// [360, 30] degree FoV at 30 m, gain clustering disabled, 70 min endurance.
pub fn profile_anymal_c() -> RobotSpec {
    RobotSpec {
        class: RobotClass::Ground,
        radius: 0.35,
        height: 0.7,
        speed: 1.0,
        max_yaw_rate: 0.9,
        max_inclination: 30f64.to_radians(),
        sensor: SensorModel::new(360.0, 30.0, 30.0),
        t_end: 70.0 * 60.0,
    }
}

/// Lightweight flying robot profile: 0.3 m voxels, 500-vertex graphs,
/// [360, 90] degree FoV at 30 m, 1 m gain clustering, 8.5 min endurance.
pub fn profile_rmf_obelix() -> RobotSpec {
    RobotSpec {
        class: RobotClass::Aerial,
        radius: 0.3,
        height: 0.25,
        speed: 2.0,
        max_yaw_rate: 1.5,
        max_inclination: 0.0,
        sensor: SensorModel::new(360.0, 90.0, 30.0),
        t_end: 8.5 * 60.0,
    }
}

/// Simulated M100-class flying robot with a 2500 s virtual endurance.
pub fn profile_sim_m100() -> RobotSpec {
    RobotSpec {
        class: RobotClass::Aerial,
        radius: 0.4,
        height: 0.3,
        speed: 2.0,
        max_yaw_rate: 1.5,
        max_inclination: 0.0,
        sensor: SensorModel::new(360.0, 90.0, 30.0),
        t_end: 2500.0,
    }
}

/// Look up a shipped profile by name.
pub fn profile_by_name(name: &str) -> Option<RobotSpec> {
    match name {
        "anymal-c" => Some(profile_anymal_c()),
        "rmf-obelix" => Some(profile_rmf_obelix()),
        "sim-m100" => Some(profile_sim_m100()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_validate() {
        for name in ["anymal-c", "rmf-obelix", "sim-m100"] {
            let spec = profile_by_name(name).unwrap();
            spec.validate().unwrap();
        }
        assert!(profile_by_name("nope").is_none());
    }

    #[test]
    fn table_parameters() {
        let anymal = profile_anymal_c();
        assert_eq!(anymal.sensor.fov_h_deg, 360.0);
        assert_eq!(anymal.sensor.fov_v_deg, 30.0);
        assert_eq!(anymal.sensor.d_max, 30.0);
        assert_eq!(anymal.t_end, 4200.0);
        let obelix = profile_rmf_obelix();
        assert_eq!(obelix.sensor.fov_v_deg, 90.0);
        assert_eq!(obelix.t_end, 510.0);
    }
}
