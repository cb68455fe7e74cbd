//! Multi-robot episode orchestration: kinematic motion, per-tick sensing and
//! mapping, planner triggering, the periodic coordination cycle, comm-loss
//! backtracking and endurance-bounded homing.

pub mod comm;
pub mod report;

use std::collections::VecDeque;
use std::fmt::Write as _;

pub use comm::{comm_available, CommModel};
pub use report::EpisodeReport;

use crate::cohort::{CohortConfig, CohortHub, SubmapStream};
use crate::global::{check_homing, homing_path, update_global, EnduranceState, GlobalGraphRobot, HomingDecision};
use crate::math::{wrap_angle, Configuration, RigidTransform, Vec3};
use crate::global::{plan_reposition, refresh_frontier_vertices};
use crate::planner::{plan_local, LocalPlanOutcome, PlannerConfig};
use crate::robot::RobotSpec;
use crate::sensor::{simulate_scan_noisy, simulate_scan_phased};
use crate::voxel::{OccupancyMap, VoxelState};
use crate::world::World;

/// High-level state of one robot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RobotMode {
    Exploring,
    Repositioning,
    Homing,
    Backtracking,
    Done,
}

impl RobotMode {
    pub fn label(self) -> &'static str {
        match self {
            RobotMode::Exploring => "Exploring",
            RobotMode::Repositioning => "Repositioning",
            RobotMode::Homing => "Homing",
            RobotMode::Backtracking => "Backtracking",
            RobotMode::Done => "Done",
        }
    }
}

/// Why a commanded path was issued (kept for post-hoc audits).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathKind {
    Local,
    Reposition,
    Assignment,
    Backtrack,
    Homing,
}

impl PathKind {
    fn label(self) -> &'static str {
        match self {
            PathKind::Local => "local",
            PathKind::Reposition => "reposition",
            PathKind::Assignment => "assignment",
            PathKind::Backtrack => "backtrack",
            PathKind::Homing => "homing",
        }
    }
}

/// Initial description of one robot in an episode.
#[derive(Clone)]
pub struct RobotInit {
    pub spec: RobotSpec,
    pub planner: PlannerConfig,
    /// Planner map voxel edge (r_V).
    pub map_resolution: f64,
    /// Spawn offset from the world spawn.
    pub spawn_offset: Vec3,
    /// Frontier-vertex gain threshold for the global layer.
    pub g_f: f64,
    /// Distance decay of the global frontier ranking, 1/m.
    pub lambda_g: f64,
}

/// Episode-level parameters.
#[derive(Clone, Debug)]
pub struct SimParams {
    pub dt: f64,
    pub ticks_max: u64,
    /// Homing safety margin in seconds.
    pub margin: f64,
    pub seed: u64,
    /// Gaussian range noise sigma for the simulated sensor; 0 disables.
    pub scan_noise_sigma: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams { dt: 0.2, ticks_max: 200_000, margin: 30.0, seed: 0, scan_noise_sigma: 0.0 }
    }
}

struct RobotRuntime {
    id: usize,
    spec: RobotSpec,
    planner: PlannerConfig,
    g_f: f64,
    lambda_g: f64,
    pose: Configuration,
    prev_yaw: f64,
    mode: RobotMode,
    path: VecDeque<Configuration>,
    map: OccupancyMap,
    gg: GlobalGraphRobot,
    submaps: SubmapStream,
    pending_submaps: Vec<crate::cohort::Submap>,
    pca_points: VecDeque<Vec3>,
    last_comm_points: Vec<Configuration>,
    assigned_bound: Option<crate::planner::BoundingBox>,
    /// Team-frame centroid of the active assignment's frontier.
    current_assignment: Option<Vec3>,
    /// Centroids of assignments this robot exhausted; never re-assigned.
    exhausted_frontiers: Vec<Vec3>,
    next_coord_due: f64,
    overtime_since: Option<f64>,
    plan_counter: u64,
    next_plan_at: f64,
    homed: bool,
    done_reason: Option<String>,
    trajectory: Vec<(f64, Configuration)>,
    commanded_log: Vec<(f64, PathKind, Vec<Configuration>)>,
    homing_cache: Option<(u64, Vec3, f64)>,
    plan_wall_ms: Vec<f64>,
}

/// One multi-robot episode over a shared world.
pub struct Simulation {
    pub world: World,
    params: SimParams,
    comm: CommModel,
    robots: Vec<RobotRuntime>,
    pub hub: CohortHub,
    /// Union coverage over all robots, at the finest robot map resolution.
    team_map: OccupancyMap,
    time: f64,
    ticks: u64,
    events: Vec<String>,
    metrics: Vec<String>,
    team_metrics: Vec<String>,
    frontier_history: Vec<String>,
    invariant_violations: u64,
    assigned_frontiers: Vec<(usize, usize)>, // (robot, frontier_id) of the latest cycle
}

impl Simulation {
    pub fn new(
        world: World,
        robots: Vec<RobotInit>,
        cohort: CohortConfig,
        comm: CommModel,
        params: SimParams,
    ) -> Result<Simulation, String> {
        if robots.is_empty() {
            return Err("episode needs at least one robot".into());
        }
        comm.validate()?;
        cohort.validate()?;
        let finest = robots
            .iter()
            .map(|r| r.map_resolution)
            .fold(f64::INFINITY, f64::min);
        let team_map = OccupancyMap::new(finest);
        let hub = CohortHub::new(cohort.clone(), params.seed);

        let mut runtimes = Vec::new();
        for (id, init) in robots.into_iter().enumerate() {
            init.spec.validate().map_err(|e| format!("robot {id}: {e}"))?;
            init.planner.validate().map_err(|e| format!("robot {id}: {e}"))?;
            if init.map_resolution <= 0.0 {
                return Err(format!("robot {id}: map_resolution must be positive"));
            }
            let spawn = Configuration::from_pos(
                world.spawn().pos + init.spawn_offset,
                world.spawn().yaw,
            );
            if world.is_solid(world.index_of(spawn.pos)) {
                return Err(format!("robot {id}: spawn offset lands in a solid voxel"));
            }
            let submaps = SubmapStream::new(id, cohort.r_c, cohort.window_time, cohort.window_dist, spawn, 0.0);
            runtimes.push(RobotRuntime {
                id,
                g_f: init.g_f,
                lambda_g: init.lambda_g,
                pose: spawn,
                prev_yaw: spawn.yaw,
                mode: RobotMode::Exploring,
                path: VecDeque::new(),
                map: OccupancyMap::new(init.map_resolution),
                gg: GlobalGraphRobot::new(spawn),
                submaps,
                pending_submaps: Vec::new(),
                pca_points: VecDeque::new(),
                last_comm_points: Vec::new(),
                assigned_bound: None,
                current_assignment: None,
                exhausted_frontiers: Vec::new(),
                next_coord_due: cohort.t_c,
                overtime_since: None,
                plan_counter: 0,
                next_plan_at: 0.0,
                homed: false,
                done_reason: None,
                trajectory: Vec::new(),
                commanded_log: Vec::new(),
                homing_cache: None,
                plan_wall_ms: Vec::new(),
                spec: init.spec,
                planner: init.planner,
            });
        }

        let mut sim = Simulation {
            world,
            params,
            comm,
            robots: runtimes,
            hub,
            team_map,
            time: 0.0,
            ticks: 0,
            events: Vec::new(),
            metrics: Vec::new(),
            team_metrics: Vec::new(),
            frontier_history: Vec::new(),
            invariant_violations: 0,
            assigned_frontiers: Vec::new(),
        };
        // robots that spawn in comm range get their initial backtrack anchor
        let poses: Vec<Vec3> = sim.robots.iter().map(|r| r.pose.pos).collect();
        for i in 0..sim.robots.len() {
            let others: Vec<Vec3> = poses
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, p)| *p)
                .collect();
            if comm_available(poses[i], &others, &sim.comm, Some(&sim.world)) {
                let pose = sim.robots[i].pose;
                sim.robots[i].last_comm_points.push(pose);
                let d = format!("pos={:.2},{:.2},{:.2}", pose.pos.x, pose.pos.y, pose.pos.z);
                sim.event(0.0, Some(i), "initial_comm_anchor", &d);
            }
        }
        Ok(sim)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    pub fn all_done(&self) -> bool {
        self.robots.iter().all(|r| r.mode == RobotMode::Done)
    }

    fn event(&mut self, t: f64, robot: Option<usize>, kind: &str, detail: &str) {
        let who = match robot {
            Some(id) => id.to_string(),
            None => "-".to_string(),
        };
        let mut line = format!("t={t:.2} robot={who} event={kind}");
        if !detail.is_empty() {
            line.push(' ');
            line.push_str(detail);
        }
        self.events.push(line);
    }

    /// Advance the episode by one tick.
    pub fn step(&mut self) {
        let dt = self.params.dt;
        let t = self.time + dt;
        let pose_snapshot: Vec<Vec3> = self.robots.iter().map(|r| r.pose.pos).collect();

        for i in 0..self.robots.len() {
            if self.robots[i].mode == RobotMode::Done {
                self.metrics_row(t, i, false);
                continue;
            }

            // endurance exhausted is terminal
            if t >= self.robots[i].spec.t_end {
                let at_home = self.robots[i]
                    .pose
                    .pos
                    .dist(self.robots[i].gg.home_conf().pos)
                    < 1.0;
                self.robots[i].mode = RobotMode::Done;
                self.robots[i].done_reason = Some("endurance_exhausted".into());
                self.robots[i].homed = self.robots[i].homed || at_home;
                self.event(t, Some(i), "done", "reason=endurance_exhausted");
                self.metrics_row(t, i, false);
                continue;
            }

            self.guard_path(i, t);
            self.advance_motion(i, dt);
            self.sense(i, t);

            let comm = {
                let others: Vec<Vec3> = pose_snapshot
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i && self.robots[*j].mode != RobotMode::Done)
                    .map(|(_, p)| *p)
                    .collect();
                comm_available(self.robots[i].pose.pos, &others, &self.comm, Some(&self.world))
            };
            if comm && !self.robots[i].pending_submaps.is_empty() {
                let pending = std::mem::take(&mut self.robots[i].pending_submaps);
                for submap in pending {
                    let seq = submap.seq;
                    let summary = self.hub.ingest_submap(submap);
                    self.event(
                        t,
                        Some(i),
                        "submap_ingested",
                        &format!(
                            "seq={seq} subgraph_vertices={} frontiers={} deleted_recheck={} deleted_fmin={}",
                            summary.subgraph_vertices,
                            summary.frontier_count,
                            summary.deleted_by_recheck,
                            summary.deleted_by_fmin
                        ),
                    );
                }
            }

            self.coordination_cycle(i, t, comm);

            if self.robots[i].path.is_empty() && self.robots[i].mode != RobotMode::Done {
                self.on_path_complete(i, t, comm);
            }

            if !matches!(self.robots[i].mode, RobotMode::Homing | RobotMode::Done) {
                self.homing_check(i, t);
            }

            self.audit_invariants(i, t);
            self.metrics_row(t, i, comm);
        }

        // team coverage row
        let counts = self.team_map.counts();
        self.team_metrics.push(format!("{t:.2},{},{}", counts.free, counts.occupied));

        self.time = t;
        self.ticks += 1;
    }

    /// Newly observed surfaces can block a previously clear leg (a
    /// surface-straddling voxel flips to Occupied once a return lands in
    /// it). Re-route the immediate leg when that happens, or drop the path
    /// and replan for modes that may do so.
    fn guard_path(&mut self, i: usize, t: f64) {
        let blocked = {
            let r = &self.robots[i];
            match r.path.front() {
                Some(next) => !r.map.segment_clear_of_occupied(r.pose.pos, next.pos, r.spec.radius),
                None => false,
            }
        };
        if !blocked {
            return;
        }
        let (pose, next, radius) = {
            let r = &self.robots[i];
            (r.pose.pos, r.path.front().copied().unwrap(), r.spec.radius)
        };
        match astar_avoiding_occupied(&self.robots[i].map, pose, next.pos, radius) {
            Some(via) => {
                self.event(t, Some(i), "path_rerouted", &format!("inserted={}", via.len()));
                for p in via.into_iter().rev() {
                    self.robots[i].path.push_front(Configuration::from_pos(p, next.yaw));
                }
            }
            None => match self.robots[i].mode {
                RobotMode::Exploring | RobotMode::Repositioning => {
                    self.event(t, Some(i), "path_blocked", "");
                    self.robots[i].path.clear();
                    self.robots[i].mode = RobotMode::Exploring;
                }
                // homing and backtracking arrivals are semantic: keep going
                _ => {}
            },
        }
    }

    fn advance_motion(&mut self, i: usize, dt: f64) {
        let r = &mut self.robots[i];
        r.prev_yaw = r.pose.yaw;
        let mut budget = r.spec.speed * dt;
        let mut target_yaw = r.pose.yaw;
        while budget > 1e-12 {
            let Some(&next) = r.path.front() else { break };
            let delta = next.pos - r.pose.pos;
            let dist = delta.norm();
            if dist < 1e-9 {
                target_yaw = next.yaw;
                r.path.pop_front();
                continue;
            }
            target_yaw = delta.y.atan2(delta.x);
            if dist <= budget {
                r.pose.pos = next.pos;
                budget -= dist;
                r.path.pop_front();
            } else {
                r.pose.pos += delta * (budget / dist);
                budget = 0.0;
            }
        }
        // yaw-rate-limited heading
        let diff = wrap_angle(target_yaw - r.pose.yaw);
        let max_step = r.spec.max_yaw_rate * dt;
        let step = diff.clamp(-max_step, max_step);
        r.pose = Configuration::from_pos(r.pose.pos, r.pose.yaw + step);
    }

    fn sense(&mut self, i: usize, t: f64) {
        // dithered scan phase sweeps the gaps between rays over 8 ticks,
        // modeling a nodding scan pattern
        let phase = (self.ticks % 8) as f64 / 8.0;
        let scan = {
            let r = &self.robots[i];
            if self.params.scan_noise_sigma > 0.0 {
                let mut rng = crate::seeded_rng(
                    self.params.seed,
                    crate::stream::NOISE,
                    ((i as u64) << 32) | self.ticks,
                );
                simulate_scan_noisy(&self.world, &r.pose, &r.spec.sensor, phase, self.params.scan_noise_sigma, &mut rng)
            } else {
                simulate_scan_phased(&self.world, &r.pose, &r.spec.sensor, phase)
            }
        };
        self.team_map.integrate_scan(scan.origin, &scan.rays);
        let finished = {
            let r = &mut self.robots[i];
            r.map.integrate_scan(scan.origin, &scan.rays);
            // the body volume is traversable by proprioception; the sensor's
            // blind cones never observe it
            let body = r.spec.radius + r.map.resolution();
            r.map.clear_ball(r.pose.pos, body);
            self.team_map.clear_ball(r.pose.pos, body);
            if r.spec.is_ground() {
                // a walking robot feels its footholds: the support surface
                // under the body is ground even when the sensor cannot see it
                mark_foothold(&mut r.map, r.pose.pos, &r.spec);
                mark_foothold(&mut self.team_map, r.pose.pos, &r.spec);
            }
            for p in scan.hit_points() {
                r.pca_points.push_back(p);
                if r.pca_points.len() > 6000 {
                    r.pca_points.pop_front();
                }
            }
            r.trajectory.push((t, r.pose));
            r.submaps.tick(r.pose, &scan, t, body)
        };
        if let Some(finished) = finished {
            let seq = finished.seq;
            let points = finished.frontier_points.len();
            self.robots[i].pending_submaps.push(finished);
            self.event(t, Some(i), "submap_finalized", &format!("seq={seq} frontier_points={points}"));
        }
    }

    fn coordination_cycle(&mut self, i: usize, t: f64, comm: bool) {
        if !matches!(self.robots[i].mode, RobotMode::Exploring | RobotMode::Repositioning) {
            return;
        }
        if t >= self.robots[i].next_coord_due {
            if comm {
                self.do_coordinate(i, t);
            } else if self.robots[i].overtime_since.is_none() {
                self.robots[i].overtime_since = Some(t);
                self.event(t, Some(i), "coordination_no_comm", "");
            }
        }
        if let Some(t0) = self.robots[i].overtime_since {
            if comm {
                self.event(t, Some(i), "comm_restored", "");
                self.do_coordinate(i, t);
            } else if t - t0 >= self.hub.cfg.t_c_extra {
                self.start_backtrack(i, t);
            }
        }
    }

    fn do_coordinate(&mut self, i: usize, t: f64) {
        let pose = self.robots[i].pose;
        let outcome = self.hub.coordinate(
            pose.pos,
            &RigidTransform::identity(),
            &self.robots[i].exhausted_frontiers,
        );
        self.robots[i].overtime_since = None;
        self.robots[i].next_coord_due = t + self.hub.cfg.t_c;
        self.robots[i].last_comm_points.push(pose);
        self.snapshot_frontiers(t);
        match outcome {
            Some(asgn) => {
                if let Some(&(other, fid)) = self
                    .assigned_frontiers
                    .iter()
                    .find(|(r, f)| *r != i && *f == asgn.frontier_id)
                {
                    self.event(
                        t,
                        Some(i),
                        "assignment_conflict",
                        &format!("frontier={fid} also_assigned_to={other}"),
                    );
                }
                self.assigned_frontiers.retain(|(r, _)| *r != i);
                self.assigned_frontiers.push((i, asgn.frontier_id));
                self.event(
                    t,
                    Some(i),
                    "coordination",
                    &format!(
                        "frontier={} size={} dist={:.2} frontiers_total={} pos={:.2},{:.2},{:.2}",
                        asgn.frontier_id,
                        asgn.frontier_size,
                        asgn.distance,
                        self.hub.frontiers().len(),
                        pose.pos.x,
                        pose.pos.y,
                        pose.pos.z
                    ),
                );
                self.robots[i].mode = RobotMode::Repositioning;
                self.robots[i].current_assignment = Some(asgn.bound.center);
                let path = if self.robots[i].spec.is_ground() {
                    // the team graph knows nothing about traversability:
                    // ground robots approach the frontier over their own
                    // feasibility-checked graph instead
                    let target = asgn.path.last().copied().unwrap_or(self.robots[i].pose);
                    self.route_over_gg_toward(i, target)
                } else {
                    asgn.path
                };
                self.robots[i].assigned_bound = Some(asgn.bound);
                self.set_path(i, t, PathKind::Assignment, path);
            }
            None => {
                self.event(
                    t,
                    Some(i),
                    "coordination_none",
                    &format!(
                        "frontiers_total={} pos={:.2},{:.2},{:.2}",
                        self.hub.frontiers().len(),
                        pose.pos.x,
                        pose.pos.y,
                        pose.pos.z
                    ),
                );
            }
        }
    }

    fn snapshot_frontiers(&mut self, t: f64) {
        for f in self.hub.frontiers() {
            self.frontier_history.push(format!(
                "{t:.2},{},{},{:.6},{:.6},{:.6}",
                f.id, f.size, f.centroid.x, f.centroid.y, f.centroid.z
            ));
        }
    }

    fn set_path(&mut self, i: usize, t: f64, kind: PathKind, path: Vec<Configuration>) {
        // paths routed over the team graph may clip obstacles of the robot's
        // finer map; track them with local avoidance
        let path = if kind == PathKind::Assignment {
            refine_against_map(&self.robots[i].map, &path, self.robots[i].spec.radius)
        } else {
            path
        };
        self.event(
            t,
            Some(i),
            "path_commanded",
            &format!("kind={} waypoints={}", kind.label(), path.len()),
        );
        self.robots[i].commanded_log.push((t, kind, path.clone()));
        self.robots[i].path = path.into();
    }

    fn on_path_complete(&mut self, i: usize, t: f64, comm: bool) {
        match self.robots[i].mode {
            RobotMode::Repositioning => {
                self.event(t, Some(i), "reposition_arrived", "");
                self.robots[i].mode = RobotMode::Exploring;
            }
            RobotMode::Exploring => {
                if t >= self.robots[i].next_plan_at {
                    self.plan_cycle(i, t, comm);
                }
            }
            RobotMode::Backtracking => {
                if comm {
                    self.event(t, Some(i), "backtrack_arrived", "comm=1");
                    self.robots[i].mode = RobotMode::Exploring;
                    self.do_coordinate(i, t);
                } else if let Some(target) = self.robots[i].last_comm_points.pop() {
                    self.event(
                        t,
                        Some(i),
                        "backtrack_next",
                        &format!("target={:.2},{:.2},{:.2}", target.pos.x, target.pos.y, target.pos.z),
                    );
                    let path = self.route_over_gg(i, target);
                    self.set_path(i, t, PathKind::Backtrack, path);
                } else {
                    self.event(t, Some(i), "done", "reason=no_comm_anchor");
                    self.robots[i].mode = RobotMode::Done;
                    self.robots[i].done_reason = Some("no_comm_anchor".into());
                }
            }
            RobotMode::Homing => {
                self.event(t, Some(i), "homed", "");
                self.robots[i].mode = RobotMode::Done;
                self.robots[i].homed = true;
                self.robots[i].done_reason = Some("homed".into());
            }
            RobotMode::Done => {}
        }
    }

    fn plan_cycle(&mut self, i: usize, t: f64, comm: bool) {
        let started = std::time::Instant::now();
        let outcome = {
            let r = &self.robots[i];
            let mut rng = crate::seeded_rng(
                self.params.seed,
                crate::stream::PLANNER,
                (r.id as u64) * 1_000_000 + r.plan_counter,
            );
            let pca: Vec<Vec3> = r.pca_points.iter().copied().collect();
            plan_local(&r.map, r.pose, &r.planner, &pca, r.assigned_bound.as_ref(), &mut rng)
        };
        let wall_ms = started.elapsed().as_secs_f64() * 1e3;
        self.robots[i].plan_counter += 1;
        self.robots[i].plan_wall_ms.push(wall_ms);
        self.robots[i].pca_points.clear();

        match outcome {
            LocalPlanOutcome::Plan(plan) => {
                let r = &mut self.robots[i];
                update_global(
                    &mut r.gg,
                    &plan.graph,
                    &plan.tree,
                    &plan.commanded,
                    &r.map,
                    &r.spec.sensor,
                    r.g_f,
                );
                r.homing_cache = None;
                self.event(
                    t,
                    Some(i),
                    "plan_local",
                    &format!(
                        "gain={:.1} vertices={} edges={} leaves={} gain_evals={} waypoints={}",
                        plan.gain,
                        plan.build_stats.vertices,
                        plan.build_stats.edges,
                        plan.gain_stats.leaves,
                        plan.gain_stats.evaluations,
                        plan.commanded.len()
                    ),
                );
                self.set_path(i, t, PathKind::Local, plan.commanded);
            }
            LocalPlanOutcome::Empty => {
                self.event(t, Some(i), "plan_local_empty", "");
                self.robots[i].next_plan_at = t + 1.0;
                {
                    // drop remembered frontier vertices the robot has since
                    // observed away, or repositioning cycles forever
                    let r = &mut self.robots[i];
                    let reach = r.spec.sensor.d_max * 1.5;
                    let near = r.pose.pos;
                    refresh_frontier_vertices(&mut r.gg, &r.map, &r.spec.sensor, r.g_f, near, reach);
                }
                // an infant map (no finished submap yet) says nothing about
                // completeness: keep scanning and retry
                if self.robots[i].submaps.produced() == 0 {
                    self.event(t, Some(i), "bootstrap_wait", "");
                    return;
                }
                let reposition = {
                    let r = &self.robots[i];
                    plan_reposition(
                        &r.gg,
                        r.pose,
                        &r.map,
                        r.spec.radius,
                        r.lambda_g,
                        r.assigned_bound.as_ref(),
                    )
                };
                match reposition {
                    Some(path) => {
                        let target = path.last().copied();
                        self.event(
                            t,
                            Some(i),
                            "reposition",
                            &format!(
                                "target={}",
                                target
                                    .map(|c| format!("{:.2},{:.2},{:.2}", c.pos.x, c.pos.y, c.pos.z))
                                    .unwrap_or_default()
                            ),
                        );
                        self.robots[i].mode = RobotMode::Repositioning;
                        self.set_path(i, t, PathKind::Reposition, path);
                    }
                    None => {
                        self.event(t, Some(i), "reposition_empty", "");
                        if let Some(centroid) = self.robots[i].current_assignment.take() {
                            // the assigned volume is spent; never ask for
                            // this frontier again
                            self.robots[i].exhausted_frontiers.push(centroid);
                            self.robots[i].assigned_bound = None;
                            self.event(
                                t,
                                Some(i),
                                "frontier_exhausted",
                                &format!("centroid={:.2},{:.2},{:.2}", centroid.x, centroid.y, centroid.z),
                            );
                        }
                        if comm {
                            // assigned volume finished: ask for a new one
                            self.do_coordinate(i, t);
                            if self.robots[i].mode == RobotMode::Exploring {
                                // a hub that has not completed a submap
                                // window plus a coordination cycle knows too
                                // little to declare the mission over
                                let mature = t >= self.hub.cfg.window_time + self.hub.cfg.t_c;
                                if mature {
                                    // nothing left anywhere: mission complete
                                    self.event(t, Some(i), "mission_complete", "");
                                    self.go_home(i, t);
                                } else {
                                    self.event(t, Some(i), "bootstrap_wait", "");
                                }
                            }
                        } else {
                            self.start_backtrack(i, t);
                        }
                    }
                }
            }
        }
    }

    fn start_backtrack(&mut self, i: usize, t: f64) {
        self.robots[i].overtime_since = None;
        match self.robots[i].last_comm_points.pop() {
            Some(target) => {
                self.event(
                    t,
                    Some(i),
                    "backtrack_start",
                    &format!("target={:.2},{:.2},{:.2}", target.pos.x, target.pos.y, target.pos.z),
                );
                self.robots[i].mode = RobotMode::Backtracking;
                let path = self.route_over_gg(i, target);
                self.set_path(i, t, PathKind::Backtrack, path);
            }
            None => {
                self.event(t, Some(i), "done", "reason=no_comm_anchor");
                self.robots[i].mode = RobotMode::Done;
                self.robots[i].done_reason = Some("no_comm_anchor".into());
            }
        }
    }

    /// Route over the robot's global graph to `target`, ending exactly there.
    fn route_over_gg(&mut self, i: usize, target: Configuration) -> Vec<Configuration> {
        let mut path = self.route_over_gg_toward(i, target);
        path.push(target);
        for k in 0..path.len().saturating_sub(1) {
            let next = path[k + 1].pos;
            path[k] = Configuration::from_pos(path[k].pos, path[k].yaw_toward(next));
        }
        path
    }

    /// Route over the robot's global graph to the vertex nearest `target`,
    /// without leaving the graph.
    fn route_over_gg_toward(&mut self, i: usize, target: Configuration) -> Vec<Configuration> {
        let r = &self.robots[i];
        let start = r.gg.nearest_vertex(r.pose.pos);
        let goal = r.gg.nearest_vertex(target.pos);
        let tree = crate::planner::dijkstra::dijkstra(&r.gg.adj, start);
        let mut path: Vec<Configuration> = if tree.reachable(goal) {
            tree.path(goal)
                .iter()
                .map(|&u| r.gg.vertices[u].conf)
                .collect()
        } else {
            Vec::new()
        };
        for k in 0..path.len().saturating_sub(1) {
            let next = path[k + 1].pos;
            path[k] = Configuration::from_pos(path[k].pos, path[k].yaw_toward(next));
        }
        path
    }

    fn go_home(&mut self, i: usize, t: f64) {
        let (path, length) = homing_path(&self.robots[i].gg, self.robots[i].pose);
        self.event(t, Some(i), "homing", &format!("path_length={length:.2}"));
        self.robots[i].mode = RobotMode::Homing;
        self.set_path(i, t, PathKind::Homing, path);
    }

    fn homing_check(&mut self, i: usize, t: f64) {
        let needs_update = match &self.robots[i].homing_cache {
            Some((version, pos, _)) => {
                *version != self.robots[i].gg.version || pos.dist(self.robots[i].pose.pos) > 1.0
            }
            None => true,
        };
        if needs_update {
            let (_, length) = homing_path(&self.robots[i].gg, self.robots[i].pose);
            self.robots[i].homing_cache =
                Some((self.robots[i].gg.version, self.robots[i].pose.pos, length));
        }
        let endurance = EnduranceState {
            t_end: self.robots[i].spec.t_end,
            elapsed: t,
            speed: self.robots[i].spec.speed,
        };
        // decision uses a fresh path so the commanded route is current
        let cached_len = self.robots[i].homing_cache.map(|(_, _, l)| l).unwrap_or(0.0);
        if endurance.elapsed + cached_len / endurance.speed + self.params.margin >= endurance.t_end {
            match check_homing(&self.robots[i].gg, self.robots[i].pose, &endurance, self.params.margin) {
                HomingDecision::GoHome(path) => {
                    self.event(t, Some(i), "homing", &format!("path_length={cached_len:.2}"));
                    self.robots[i].mode = RobotMode::Homing;
                    self.set_path(i, t, PathKind::Homing, path);
                }
                HomingDecision::Continue => {}
            }
        }
    }

    fn audit_invariants(&mut self, i: usize, t: f64) {
        let dt = self.params.dt;
        let r = &self.robots[i];

        // commanded motion stays in free space of the robot's own map
        if r.map.state_at(r.pose.pos) != VoxelState::Free {
            self.invariant_violations += 1;
            self.event(t, Some(i), "invariant_violation", "kind=pose_not_free");
        }

        // yaw rate bound
        let dyaw = wrap_angle(self.robots[i].pose.yaw - self.robots[i].prev_yaw).abs();
        if dyaw > self.robots[i].spec.max_yaw_rate * dt + 1e-9 {
            self.invariant_violations += 1;
            self.event(t, Some(i), "invariant_violation", "kind=yaw_rate");
        }

        // endurance: the robot can always still get home (while operating)
        let r = &self.robots[i];
        if r.mode == RobotMode::Done {
            return;
        }
        let remaining = match r.mode {
            RobotMode::Homing => {
                let mut len = 0.0;
                let mut prev = r.pose.pos;
                for c in &r.path {
                    len += prev.dist(c.pos);
                    prev = c.pos;
                }
                len
            }
            _ => r.homing_cache.map(|(_, _, l)| l).unwrap_or(0.0),
        };
        if t + remaining / r.spec.speed > r.spec.t_end + self.params.margin {
            self.invariant_violations += 1;
            self.event(t, Some(i), "invariant_violation", "kind=endurance");
        }
    }

    fn metrics_row(&mut self, t: f64, i: usize, comm: bool) {
        let r = &self.robots[i];
        let counts = r.map.counts();
        self.metrics.push(format!(
            "{t:.2},{},{},{},{},{}",
            r.id,
            counts.free,
            counts.occupied,
            r.mode.label(),
            u8::from(comm)
        ));
    }

    /// Run to completion: all robots done or the tick cap reached.
    pub fn run(&mut self) {
        while !self.all_done() && self.ticks < self.params.ticks_max {
            self.step();
        }
        if !self.all_done() {
            self.event(self.time, None, "tick_cap_reached", &format!("ticks={}", self.ticks));
        }
        let t = self.time;
        for i in 0..self.robots.len() {
            let r = &self.robots[i];
            self.events.push(format!(
                "t={t:.2} robot={} event=final mode={} homed={} reason={}",
                i,
                r.mode.label(),
                u8::from(r.homed),
                r.done_reason.clone().unwrap_or_else(|| "-".into())
            ));
        }
    }

    /// Freeze the episode into its report.
    pub fn into_report(self) -> EpisodeReport {
        report::build_report(self)
    }

    // accessors used by report building and tests
    pub(crate) fn take_parts(
        self,
    ) -> (
        Vec<String>,
        Vec<String>,
        Vec<String>,
        Vec<String>,
        u64,
        f64,
        u64,
        Vec<RobotSummary>,
        OccupancyMap,
    ) {
        let robots = self
            .robots
            .iter()
            .map(|r| RobotSummary {
                id: r.id,
                homed: r.homed,
                mode: r.mode,
                done_reason: r.done_reason.clone().unwrap_or_default(),
                map_export: r.map.export_text(Vec3::ZERO),
                graph_csv: graph_csv(&r.gg),
                trajectory_csv: trajectory_csv(&r.trajectory),
                commanded: r.commanded_log.clone(),
                plan_wall_ms: r.plan_wall_ms.clone(),
                free_voxels: r.map.counts().free,
                occ_voxels: r.map.counts().occupied,
            })
            .collect();
        (
            self.metrics,
            self.team_metrics,
            self.events,
            self.frontier_history,
            self.invariant_violations,
            self.time,
            self.ticks,
            robots,
            self.team_map,
        )
    }

    /// Read-only view of a robot's executed trajectory (testing hook).
    pub fn robot_trajectory(&self, i: usize) -> &[(f64, Configuration)] {
        &self.robots[i].trajectory
    }

    pub fn robot_mode(&self, i: usize) -> RobotMode {
        self.robots[i].mode
    }

    pub fn robot_pose(&self, i: usize) -> Configuration {
        self.robots[i].pose
    }

    pub fn robot_map(&self, i: usize) -> &OccupancyMap {
        &self.robots[i].map
    }

    pub fn robot_commands(&self, i: usize) -> &[(f64, PathKind, Vec<Configuration>)] {
        &self.robots[i].commanded_log
    }

    pub fn invariant_violations(&self) -> u64 {
        self.invariant_violations
    }

    /// Union coverage counts (free, occupied) over all robots.
    pub fn team_map_counts(&self) -> (u64, u64) {
        let c = self.team_map.counts();
        (c.free, c.occupied)
    }
}

/// Final per-robot summary embedded in the report.
#[derive(Clone)]
pub struct RobotSummary {
    pub id: usize,
    pub homed: bool,
    pub mode: RobotMode,
    pub done_reason: String,
    pub map_export: String,
    pub graph_csv: String,
    pub trajectory_csv: String,
    pub commanded: Vec<(f64, PathKind, Vec<Configuration>)>,
    pub plan_wall_ms: Vec<f64>,
    pub free_voxels: u64,
    pub occ_voxels: u64,
}

fn graph_csv(gg: &GlobalGraphRobot) -> String {
    let mut out = String::new();
    for (u, edges) in gg.adj.iter().enumerate() {
        for &(v, _) in edges {
            if v < u {
                continue; // one line per undirected edge
            }
            let a = gg.vertices[u].conf.pos;
            let b = gg.vertices[v].conf.pos;
            let _ = writeln!(
                out,
                "{:.6} {:.6} {:.6} {:.6} {:.6} {:.6}",
                a.x, a.y, a.z, b.x, b.y, b.z
            );
        }
    }
    out
}

fn trajectory_csv(traj: &[(f64, Configuration)]) -> String {
    let mut out = String::from("t,x,y,z,yaw\n");
    for (t, c) in traj {
        let _ = writeln!(out, "{t:.2},{:.6},{:.6},{:.6},{:.6}", c.pos.x, c.pos.y, c.pos.z, c.yaw);
    }
    out
}


/// Mark the support surface under a standing ground robot Occupied where it
/// is still unknown (proprioceptive foothold evidence).
fn mark_foothold(map: &mut OccupancyMap, pose: Vec3, spec: &RobotSpec) {
    let res = map.resolution();
    let foot_z = pose.z - spec.height - res * 0.5;
    let base = map.world_to_index(Vec3::new(pose.x, pose.y, foot_z));
    let reach = (spec.radius / res).ceil() as i32;
    for dx in -reach..=reach {
        for dy in -reach..=reach {
            let idx = base.offset(dx, dy, 0);
            let c = map.index_center(idx);
            if c.dist_xy(pose) <= spec.radius && map.state(idx) == VoxelState::Unknown {
                map.set_state(idx, VoxelState::Occupied);
            }
        }
    }
}

/// Rework a path leg by leg so it keeps `radius` clearance from Occupied
/// voxels of `map`. Blocked legs are re-routed by A* over the voxel grid
/// (Unknown passes; only observed obstacles block); when no route exists the
/// path is truncated at the last clear waypoint and the robot replans from
/// there.
fn refine_against_map(
    map: &OccupancyMap,
    path: &[Configuration],
    radius: f64,
) -> Vec<Configuration> {
    let Some(first) = path.first() else { return Vec::new() };
    let mut out = vec![*first];
    for leg in path.windows(2) {
        let (a, b) = (leg[0], leg[1]);
        if map.segment_clear_of_occupied(a.pos, b.pos, radius) {
            out.push(b);
            continue;
        }
        match astar_avoiding_occupied(map, a.pos, b.pos, radius) {
            Some(via) => {
                for p in via {
                    out.push(Configuration::from_pos(p, b.yaw));
                }
                out.push(b);
            }
            None => break, // stop short; arrival triggers a local replan
        }
    }
    for k in 0..out.len().saturating_sub(1) {
        let next = out[k + 1].pos;
        out[k] = Configuration::from_pos(out[k].pos, out[k].yaw_toward(next));
    }
    out
}

/// 26-connected A* over the map grid between two points, avoiding Occupied
/// voxels by `radius`. Returns intermediate waypoints (voxel centers,
/// shortcut where clear), or `None` when blocked or over budget.
fn astar_avoiding_occupied(
    map: &OccupancyMap,
    from: Vec3,
    to: Vec3,
    radius: f64,
) -> Option<Vec<Vec3>> {
    use std::cmp::Reverse;
    use std::collections::{BinaryHeap, HashMap};

    let res = map.resolution();
    let reach = (radius / res).ceil() as i32;
    let clear = |idx: crate::voxel::VoxelIndex| -> bool {
        let center = map.index_center(idx);
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    let nb = idx.offset(dx, dy, dz);
                    if map.state(nb) == VoxelState::Occupied
                        && map.index_center(nb).dist(center) <= radius + res * 0.87
                    {
                        return false;
                    }
                }
            }
        }
        true
    };

    let start = map.world_to_index(from);
    let goal = map.world_to_index(to);
    if !clear(goal) || !clear(start) {
        return None;
    }

    #[derive(PartialEq)]
    struct Key(f64, u64);
    impl Eq for Key {}
    impl PartialOrd for Key {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Key {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&other.0).then_with(|| self.1.cmp(&other.1))
        }
    }

    let pack = |i: crate::voxel::VoxelIndex| -> u64 {
        ((i.x as u64 & 0x1f_ffff) << 42) | ((i.y as u64 & 0x1f_ffff) << 21) | (i.z as u64 & 0x1f_ffff)
    };
    let mut open = BinaryHeap::new();
    let mut g_score: HashMap<u64, f64> = HashMap::new();
    let mut came: HashMap<u64, crate::voxel::VoxelIndex> = HashMap::new();
    g_score.insert(pack(start), 0.0);
    open.push(Reverse(Key(map.index_center(start).dist(to), pack(start))));
    let mut cur_of: HashMap<u64, crate::voxel::VoxelIndex> = HashMap::new();
    cur_of.insert(pack(start), start);
    let mut expansions = 0usize;

    while let Some(Reverse(Key(_, key))) = open.pop() {
        let cur = cur_of[&key];
        if cur == goal {
            // reconstruct and shortcut
            let mut rev = vec![cur];
            let mut k = key;
            while let Some(prev) = came.get(&k) {
                rev.push(*prev);
                k = pack(*prev);
            }
            rev.reverse();
            let pts: Vec<Vec3> = rev.iter().map(|i| map.index_center(*i)).collect();
            let mut slim: Vec<Vec3> = Vec::new();
            let mut anchor = from;
            for (n, p) in pts.iter().enumerate() {
                let next = pts.get(n + 1);
                let keep = match next {
                    Some(nx) => !map.segment_clear_of_occupied(anchor, *nx, radius),
                    None => false,
                };
                if keep {
                    slim.push(*p);
                    anchor = *p;
                }
            }
            return Some(slim);
        }
        expansions += 1;
        if expansions > 40_000 {
            return None;
        }
        let g_cur = g_score[&key];
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if dx == 0 && dy == 0 && dz == 0 {
                        continue;
                    }
                    let nb = cur.offset(dx, dy, dz);
                    if !clear(nb) {
                        continue;
                    }
                    let nb_key = pack(nb);
                    let step = ((dx * dx + dy * dy + dz * dz) as f64).sqrt() * res;
                    let cand = g_cur + step;
                    if cand < *g_score.get(&nb_key).unwrap_or(&f64::INFINITY) {
                        g_score.insert(nb_key, cand);
                        came.insert(nb_key, cur);
                        cur_of.insert(nb_key, nb);
                        open.push(Reverse(Key(cand + map.index_center(nb).dist(to), nb_key)));
                    }
                }
            }
        }
    }
    None
}
