//! Episode configuration: a human-readable TOML schema with shipped robot
//! profiles, exhaustive validation with precise key paths, and dotted-path
//! overrides.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cohort::CohortConfig;
use crate::math::Vec3;
use crate::planner::PlannerConfig;
use crate::robot::{profile_by_name, RobotClass, RobotSpec};
use crate::sensor::SensorModel;
use crate::sim::{CommModel, RobotInit, SimParams};
use crate::world::WorldSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config invalid at {path}: {msg}")]
    Invalid { path: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn invalid(path: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { path: path.to_string(), msg: msg.into() }
}

/// Top-level episode configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeConfig {
    #[serde(default)]
    pub seed: u64,
    /// Simulation tick in seconds.
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_ticks_max")]
    pub ticks_max: u64,
    /// Homing safety margin in seconds.
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Gaussian sensor range noise sigma in meters; 0 disables.
    #[serde(default)]
    pub scan_noise_sigma: f64,
    pub world: WorldSpec,
    pub comm: CommConfig,
    #[serde(default)]
    pub cohort: CohortSection,
    pub robots: Vec<RobotSection>,
}

fn default_dt() -> f64 {
    0.2
}
fn default_ticks_max() -> u64 {
    200_000
}
fn default_margin() -> f64 {
    30.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommConfig {
    pub c2h: [f64; 3],
    pub range: f64,
    #[serde(default)]
    pub relays: Vec<[f64; 3]>,
    #[serde(default = "default_true")]
    pub robots_as_relays: bool,
    #[serde(default)]
    pub line_of_sight: bool,
}

fn default_true() -> bool {
    true
}

/// Coordination parameters; every field falls back to the shipped defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CohortSection {
    pub r_c: f64,
    pub window_time: f64,
    pub window_dist: f64,
    pub n_c: usize,
    pub rho_c: f64,
    pub f_min: usize,
    pub top_percent: f64,
    pub t_c: f64,
    pub t_c_extra: f64,
    pub d_box: [f64; 3],
    pub traj_spacing: f64,
    pub edge_radius: f64,
}

impl Default for CohortSection {
    fn default() -> Self {
        let c = CohortConfig::default();
        CohortSection {
            r_c: c.r_c,
            window_time: c.window_time,
            window_dist: c.window_dist,
            n_c: c.n_c,
            rho_c: c.rho_c,
            f_min: c.f_min,
            top_percent: c.top_percent,
            t_c: c.t_c,
            t_c_extra: c.t_c_extra,
            d_box: c.d_box,
            traj_spacing: c.traj_spacing,
            edge_radius: c.edge_radius,
        }
    }
}

impl CohortSection {
    pub fn to_cohort(&self) -> CohortConfig {
        CohortConfig {
            r_c: self.r_c,
            window_time: self.window_time,
            window_dist: self.window_dist,
            n_c: self.n_c,
            rho_c: self.rho_c,
            f_min: self.f_min,
            top_percent: self.top_percent,
            t_c: self.t_c,
            t_c_extra: self.t_c_extra,
            d_box: self.d_box,
            traj_spacing: self.traj_spacing,
            edge_radius: self.edge_radius,
        }
    }
}

/// One robot: a named profile plus optional field overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSection {
    /// Base profile: `anymal-c`, `rmf-obelix` or `sim-m100`.
    pub profile: String,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub spawn_offset: Option<[f64; 3]>,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub speed: Option<f64>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub max_yaw_rate: Option<f64>,
    #[serde(default)]
    pub max_inclination_deg: Option<f64>,
    /// Planner map voxel edge r_V in meters.
    #[serde(default)]
    pub r_v: Option<f64>,
    #[serde(default)]
    pub planner: Option<PlannerSection>,
    #[serde(default)]
    pub sensor: Option<SensorSection>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerSection {
    pub n_v_max: Option<usize>,
    pub n_e_max: Option<usize>,
    pub mu_v: Option<f64>,
    pub gamma_h: Option<f64>,
    pub rho: Option<f64>,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub g_min: Option<f64>,
    pub edge_step: Option<f64>,
    pub bound_clamp: Option<[f64; 2]>,
    pub g_f: Option<f64>,
    pub lambda_g: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorSection {
    pub fov_h_deg: Option<f64>,
    pub fov_v_deg: Option<f64>,
    pub d_max: Option<f64>,
    pub rays_h: Option<usize>,
    pub rays_v: Option<usize>,
}

/// Default profile extras not carried by [`RobotSpec`] itself.
struct ProfileExtras {
    map_resolution: f64,
    n_v_max: usize,
    rho: f64,
}

fn profile_extras(name: &str) -> Option<ProfileExtras> {
    match name {
        "anymal-c" => Some(ProfileExtras { map_resolution: 0.2, n_v_max: 1000, rho: 0.0 }),
        "rmf-obelix" => Some(ProfileExtras { map_resolution: 0.3, n_v_max: 500, rho: 1.0 }),
        "sim-m100" => Some(ProfileExtras { map_resolution: 0.3, n_v_max: 500, rho: 1.0 }),
        _ => None,
    }
}

impl EpisodeConfig {
    pub fn from_toml(text: &str) -> Result<EpisodeConfig, ConfigError> {
        let cfg: EpisodeConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<EpisodeConfig, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialization cannot fail")
    }

    /// Apply `key=value` overrides with dotted paths, e.g. `cohort.t_c=40`
    /// or `robots.0.t_end=800`.
    pub fn apply_overrides(&self, overrides: &[String]) -> Result<EpisodeConfig, ConfigError> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut value = toml::Value::try_from(self).map_err(|e| invalid("<overrides>", e.to_string()))?;
        for entry in overrides {
            let (path, raw) = entry
                .split_once('=')
                .ok_or_else(|| invalid(entry, "override must look like key=value"))?;
            let mut cursor = &mut value;
            let segments: Vec<&str> = path.split('.').collect();
            for (k, seg) in segments.iter().enumerate() {
                let last = k + 1 == segments.len();
                if last {
                    let parsed: toml::Value = raw
                        .parse::<toml::Value>()
                        .unwrap_or_else(|_| toml::Value::String(raw.to_string()));
                    match cursor {
                        toml::Value::Table(t) => {
                            t.insert(seg.to_string(), parsed);
                        }
                        toml::Value::Array(a) => {
                            let idx: usize = seg
                                .parse()
                                .map_err(|_| invalid(path, "array index expected"))?;
                            if idx >= a.len() {
                                return Err(invalid(path, "array index out of range"));
                            }
                            a[idx] = parsed;
                        }
                        _ => return Err(invalid(path, "cannot descend into scalar")),
                    }
                } else {
                    cursor = match cursor {
                        toml::Value::Table(t) => t
                            .get_mut(*seg)
                            .ok_or_else(|| invalid(path, format!("unknown key `{seg}`")))?,
                        toml::Value::Array(a) => {
                            let idx: usize = seg
                                .parse()
                                .map_err(|_| invalid(path, "array index expected"))?;
                            a.get_mut(idx)
                                .ok_or_else(|| invalid(path, "array index out of range"))?
                        }
                        _ => return Err(invalid(path, "cannot descend into scalar")),
                    };
                }
            }
        }
        let cfg: EpisodeConfig = value.try_into().map_err(|e: toml::de::Error| invalid("<overrides>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.robots.is_empty() {
            return Err(invalid("robots", "at least one robot required"));
        }
        if self.dt <= 0.0 {
            return Err(invalid("dt", "must be positive"));
        }
        if self.margin < 0.0 {
            return Err(invalid("margin", "must be non-negative"));
        }
        if self.comm.range <= 0.0 {
            return Err(invalid("comm.range", "must be positive"));
        }
        self.cohort
            .to_cohort()
            .validate()
            .map_err(|msg| invalid("cohort", msg))?;
        for (i, r) in self.robots.iter().enumerate() {
            let path = format!("robots.{i}");
            if profile_by_name(&r.profile).is_none() {
                return Err(invalid(
                    &format!("{path}.profile"),
                    format!("unknown profile `{}` (anymal-c, rmf-obelix, sim-m100)", r.profile),
                ));
            }
            let (spec, planner, _) = self.build_robot(i)?;
            spec.validate().map_err(|msg| invalid(&path, msg))?;
            planner.validate().map_err(|msg| invalid(&path, msg))?;
        }
        Ok(())
    }

    fn build_robot(&self, i: usize) -> Result<(RobotSpec, PlannerConfig, f64), ConfigError> {
        let section = &self.robots[i];
        let path = format!("robots.{i}");
        let mut spec = profile_by_name(&section.profile)
            .ok_or_else(|| invalid(&format!("{path}.profile"), "unknown profile"))?;
        let extras = profile_extras(&section.profile).expect("profile extras follow names");
        if let Some(v) = section.t_end {
            spec.t_end = v;
        }
        if let Some(v) = section.speed {
            spec.speed = v;
        }
        if let Some(v) = section.radius {
            spec.radius = v;
        }
        if let Some(v) = section.max_yaw_rate {
            spec.max_yaw_rate = v;
        }
        if let Some(v) = section.max_inclination_deg {
            spec.max_inclination = v.to_radians();
        }
        if let Some(s) = &section.sensor {
            let fov_h = s.fov_h_deg.unwrap_or(spec.sensor.fov_h_deg);
            let fov_v = s.fov_v_deg.unwrap_or(spec.sensor.fov_v_deg);
            let d_max = s.d_max.unwrap_or(spec.sensor.d_max);
            let defaults = SensorModel::new(fov_h, fov_v, d_max);
            spec.sensor = SensorModel::with_rays(
                fov_h,
                fov_v,
                d_max,
                s.rays_h.unwrap_or(defaults.rays_h),
                s.rays_v.unwrap_or(defaults.rays_v),
            );
        }
        let mut planner = PlannerConfig::new(spec.clone());
        planner.n_v_max = extras.n_v_max;
        planner.rho = extras.rho;
        let mut g_f = 50.0;
        let mut lambda_g = 0.02;
        if let Some(p) = &section.planner {
            if let Some(v) = p.n_v_max {
                planner.n_v_max = v;
            }
            if let Some(v) = p.n_e_max {
                planner.n_e_max = v;
            }
            if let Some(v) = p.mu_v {
                planner.mu_v = v;
            }
            if let Some(v) = p.gamma_h {
                planner.gamma_h = v;
            }
            if let Some(v) = p.rho {
                planner.rho = v;
            }
            if let Some(v) = p.delta {
                planner.delta = v;
            }
            if let Some(v) = p.lambda {
                planner.lambda = v;
            }
            if let Some(v) = p.g_min {
                planner.g_min = v;
            }
            if let Some(v) = p.edge_step {
                planner.edge_step = v;
            }
            if let Some(v) = p.bound_clamp {
                planner.bound_clamp = (v[0], v[1]);
            }
            if let Some(v) = p.g_f {
                g_f = v;
            }
            if let Some(v) = p.lambda_g {
                lambda_g = v;
            }
        }
        let r_v = section.r_v.unwrap_or(extras.map_resolution);
        if r_v <= 0.0 {
            return Err(invalid(&format!("{path}.r_v"), "must be positive"));
        }
        let _ = (g_f, lambda_g);
        Ok((spec, planner, r_v))
    }

    /// Materialize the per-robot runtime descriptions.
    pub fn robot_inits(&self) -> Result<Vec<RobotInit>, ConfigError> {
        let mut out = Vec::new();
        for (i, section) in self.robots.iter().enumerate() {
            let (spec, planner, r_v) = self.build_robot(i)?;
            let mut g_f = 50.0;
            let mut lambda_g = 0.02;
            if let Some(p) = &section.planner {
                if let Some(v) = p.g_f {
                    g_f = v;
                }
                if let Some(v) = p.lambda_g {
                    lambda_g = v;
                }
            }
            let offset = section.spawn_offset.unwrap_or([0.0; 3]);
            out.push(RobotInit {
                spec,
                planner,
                map_resolution: r_v,
                spawn_offset: Vec3::from_array(offset),
                g_f,
                lambda_g,
            });
        }
        Ok(out)
    }

    pub fn comm_model(&self) -> CommModel {
        CommModel {
            c2h_position: Vec3::from_array(self.comm.c2h),
            range: self.comm.range,
            relays: self.comm.relays.iter().map(|r| Vec3::from_array(*r)).collect(),
            robots_as_relays: self.comm.robots_as_relays,
            line_of_sight: self.comm.line_of_sight,
        }
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams {
            dt: self.dt,
            ticks_max: self.ticks_max,
            margin: self.margin,
            seed: self.seed,
            scan_noise_sigma: self.scan_noise_sigma,
        }
    }

    /// Build the whole episode: generate the world and assemble the
    /// simulation.
    pub fn build_simulation(&self) -> Result<crate::sim::Simulation, ConfigError> {
        let world = crate::world::generate_world(&self.world, self.seed)
            .map_err(|e| invalid("world", e.to_string()))?;
        let robots = self.robot_inits()?;
        crate::sim::Simulation::new(
            world,
            robots,
            self.cohort.to_cohort(),
            self.comm_model(),
            self.sim_params(),
        )
        .map_err(|msg| invalid("<simulation>", msg))
    }
}

/// True when the named profile describes a ground robot.
pub fn profile_is_ground(name: &str) -> bool {
    profile_by_name(name).map(|s| s.class == RobotClass::Ground).unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 7
dt = 0.25

[world]
kind = "corridor"
length = 20.0
width = 4.0
height = 3.0
resolution = 0.4

[comm]
c2h = [2.0, 2.8, 2.3]
range = 50.0

[cohort]
f_min = 20
t_c = 15.0

[[robots]]
profile = "rmf-obelix"
t_end = 120.0

[robots.sensor]
rays_h = 90
rays_v = 15
"#;

    #[test]
    fn parses_and_builds() {
        let cfg = EpisodeConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(cfg.seed, 7);
        let inits = cfg.robot_inits().unwrap();
        assert_eq!(inits.len(), 1);
        assert_eq!(inits[0].spec.t_end, 120.0);
        assert_eq!(inits[0].spec.sensor.rays_h, 90);
        assert_eq!(inits[0].planner.n_v_max, 500);
        assert_eq!(inits[0].planner.rho, 1.0);
        assert_eq!(inits[0].map_resolution, 0.3);
        cfg.build_simulation().unwrap();
    }

    #[test]
    fn profile_table_values() {
        let toml = SAMPLE
            .replace("rmf-obelix", "anymal-c")
            .replace("t_end = 120.0\n", "");
        let cfg = EpisodeConfig::from_toml(&toml).unwrap();
        let inits = cfg.robot_inits().unwrap();
        assert_eq!(inits[0].map_resolution, 0.2);
        assert_eq!(inits[0].planner.n_v_max, 1000);
        assert_eq!(inits[0].planner.rho, 0.0);
        assert_eq!(inits[0].spec.sensor.fov_h_deg, 360.0);
        assert_eq!(inits[0].spec.sensor.fov_v_deg, 30.0);
        assert_eq!(inits[0].spec.sensor.d_max, 30.0);
        assert_eq!(inits[0].spec.t_end, 70.0 * 60.0);
    }

    #[test]
    fn roundtrip_is_identity() {
        let cfg = EpisodeConfig::from_toml(SAMPLE).unwrap();
        let text = cfg.to_toml();
        let again = EpisodeConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn errors_carry_key_paths() {
        let bad = SAMPLE.replace("range = 50.0", "range = -1.0");
        let err = EpisodeConfig::from_toml(&bad).unwrap_err();
        assert!(err.to_string().contains("comm.range"), "got: {err}");

        let unknown = SAMPLE.replace("profile = \"rmf-obelix\"", "profile = \"quadcopter\"");
        let err2 = EpisodeConfig::from_toml(&unknown).unwrap_err();
        assert!(err2.to_string().contains("robots.0.profile"), "got: {err2}");

        let typo = SAMPLE.replace("t_end = 120.0", "t_ennd = 120.0");
        assert!(EpisodeConfig::from_toml(&typo).is_err(), "unknown keys must be rejected");
    }

    #[test]
    fn overrides_apply_by_path() {
        let cfg = EpisodeConfig::from_toml(SAMPLE).unwrap();
        let out = cfg
            .apply_overrides(&[
                "seed=9".to_string(),
                "cohort.t_c=40.0".to_string(),
                "robots.0.t_end=60.0".to_string(),
            ])
            .unwrap();
        assert_eq!(out.seed, 9);
        assert_eq!(out.cohort.t_c, 40.0);
        assert_eq!(out.robots[0].t_end, Some(60.0));
        assert!(cfg.apply_overrides(&["nonsense".to_string()]).is_err());
        assert!(cfg.apply_overrides(&["robots.5.t_end=1".to_string()]).is_err());
    }
}
