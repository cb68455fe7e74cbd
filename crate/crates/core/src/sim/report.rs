//! Episode reports: rendered CSV/log artifacts plus machine-readable stats.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::sim::{RobotSummary, Simulation};

/// Everything an episode produces. All rendered artifacts are deterministic
/// for a fixed (config, seed); wall-clock planning latencies live only in
/// `stats` and never reach the rendered output.
pub struct EpisodeReport {
    /// Filename to content, ready to write to the output directory.
    pub artifacts: BTreeMap<String, String>,
    pub stats: EpisodeStats,
}

#[derive(Clone, Debug, Default)]
pub struct EpisodeStats {
    pub sim_time: f64,
    pub ticks: u64,
    pub invariant_violations: u64,
    pub robots: Vec<RobotStats>,
    pub team_free_voxels: u64,
    pub team_occ_voxels: u64,
}

#[derive(Clone, Debug, Default)]
pub struct RobotStats {
    pub id: usize,
    pub homed: bool,
    pub final_mode: String,
    pub done_reason: String,
    pub free_voxels: u64,
    pub occ_voxels: u64,
    /// Wall-clock local-planning latencies, milliseconds. Not deterministic.
    pub plan_wall_ms: Vec<f64>,
}

impl EpisodeReport {
    /// Concatenation of the deterministic artifacts, for byte-identity
    /// checks between runs.
    pub fn deterministic_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for (name, content) in &self.artifacts {
            out.extend_from_slice(name.as_bytes());
            out.push(0);
            out.extend_from_slice(content.as_bytes());
            out.push(0);
        }
        out
    }

    /// Write every artifact under `dir`.
    pub fn write_to(&self, dir: &std::path::Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, content) in &self.artifacts {
            std::fs::write(dir.join(name), content)?;
        }
        Ok(())
    }
}

pub(crate) fn build_report(sim: Simulation) -> EpisodeReport {
    let (metrics, team_metrics, events, frontier_history, violations, sim_time, ticks, robots, team_map) =
        sim.take_parts();

    let mut artifacts = BTreeMap::new();

    let mut metrics_csv = String::from("t,robot_id,free_voxels,occ_voxels,mode,comm\n");
    for row in &metrics {
        metrics_csv.push_str(row);
        metrics_csv.push('\n');
    }
    artifacts.insert("metrics.csv".to_string(), metrics_csv);

    let mut team_csv = String::from("t,free_voxels,occ_voxels\n");
    for row in &team_metrics {
        team_csv.push_str(row);
        team_csv.push('\n');
    }
    artifacts.insert("metrics_team.csv".to_string(), team_csv);

    let mut events_log = String::new();
    for line in &events {
        events_log.push_str(line);
        events_log.push('\n');
    }
    artifacts.insert("events.log".to_string(), events_log);

    let mut history = String::from("t,frontier_id,size,cx,cy,cz\n");
    for row in &frontier_history {
        history.push_str(row);
        history.push('\n');
    }
    artifacts.insert("frontier_history.csv".to_string(), history);

    // final frontier set, standard frontier export schema
    let mut final_frontiers = String::from("frontier_id,size,cx,cy,cz\n");
    let last_t = frontier_history
        .last()
        .and_then(|row| row.split(',').next().map(str::to_string));
    if let Some(last_t) = last_t {
        let prefix = format!("{last_t},");
        for row in frontier_history.iter().filter(|r| r.starts_with(&prefix)) {
            let rest: Vec<&str> = row.splitn(2, ',').collect();
            final_frontiers.push_str(rest[1]);
            final_frontiers.push('\n');
        }
    }
    artifacts.insert("frontiers.csv".to_string(), final_frontiers);

    // commanded paths, all robots, in command order
    let mut paths_csv = String::from("robot_id,step,x,y,z,yaw\n");
    for r in &robots {
        for (_, _, path) in &r.commanded {
            for (step, c) in path.iter().enumerate() {
                let _ = writeln!(
                    paths_csv,
                    "{},{},{:.6},{:.6},{:.6},{:.6}",
                    r.id, step, c.pos.x, c.pos.y, c.pos.z, c.yaw
                );
            }
        }
    }
    artifacts.insert("paths.csv".to_string(), paths_csv);

    let mut stats = EpisodeStats {
        sim_time,
        ticks,
        invariant_violations: violations,
        robots: Vec::new(),
        team_free_voxels: team_map.counts().free,
        team_occ_voxels: team_map.counts().occupied,
    };
    for r in &robots {
        per_robot_artifacts(&mut artifacts, r);
        stats.robots.push(RobotStats {
            id: r.id,
            homed: r.homed,
            final_mode: r.mode.label().to_string(),
            done_reason: r.done_reason.clone(),
            free_voxels: r.free_voxels,
            occ_voxels: r.occ_voxels,
            plan_wall_ms: r.plan_wall_ms.clone(),
        });
    }
    artifacts.insert(
        "map_team.txt".to_string(),
        team_map.export_text(crate::math::Vec3::ZERO),
    );

    EpisodeReport { artifacts, stats }
}

fn per_robot_artifacts(artifacts: &mut BTreeMap<String, String>, r: &RobotSummary) {
    artifacts.insert(format!("map_robot{}.txt", r.id), r.map_export.clone());
    artifacts.insert(format!("global_graph_robot{}.csv", r.id), r.graph_csv.clone());
    artifacts.insert(format!("trajectory_robot{}.csv", r.id), r.trajectory_csv.clone());
}
