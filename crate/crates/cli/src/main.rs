//! `subterra`: world generation, episode runs, oracle verification suites and
//! artifact export for the exploration simulator.

mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use subterra_core::config::EpisodeConfig;
use subterra_core::world::{generate_world, WorldSpec};

const EXIT_OK: u8 = 0;
const EXIT_VERIFY_MISMATCH: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

#[derive(Parser)]
#[command(name = "subterra", about = "Deterministic multi-robot subterranean exploration simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a world file.
    GenWorld(GenWorldArgs),
    /// Run an episode from a configuration file.
    Run(RunArgs),
    /// Run an oracle-equivalence verification suite.
    Verify(VerifyArgs),
    /// Re-emit artifacts from a finished episode report.
    Export(ExportArgs),
}

#[derive(Args)]
struct GenWorldArgs {
    /// World kind: tunnel-network, multi-room, vertical-mine, corridor,
    /// branches, ramp, pit.
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Extent in meters, comma separated (tunnel-network).
    #[arg(long, value_delimiter = ',')]
    extent: Option<Vec<f64>>,
    #[arg(long)]
    branches: Option<usize>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    height: Option<f64>,
    #[arg(long)]
    length: Option<f64>,
    #[arg(long)]
    max_slope_deg: Option<f64>,
    #[arg(long)]
    resolution: Option<f64>,
    /// Room grid, e.g. 3,3 (multi-room).
    #[arg(long, value_delimiter = ',')]
    rooms: Option<Vec<usize>>,
    #[arg(long)]
    room_size: Option<f64>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    incline_deg: Option<f64>,
    #[arg(long)]
    zigzag: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Episode configuration file (TOML).
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the report artifacts.
    #[arg(long, default_value = "report")]
    out: PathBuf,
    #[arg(long)]
    ticks_max: Option<u64>,
    /// Replace every robot's base profile.
    #[arg(long)]
    profile: Option<String>,
    /// Dotted-path overrides, e.g. --set cohort.t_c=40.
    #[arg(long = "set")]
    set: Vec<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite: dijkstra, gain, gain-cluster, cluster, frontiers, all.
    suite: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Inclusive seed range `a..b`; overrides --seed.
    #[arg(long)]
    seeds: Option<String>,
    /// Gain-cluster radius for the gain-cluster suite.
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
}

#[derive(Args)]
struct ExportArgs {
    /// Directory holding a finished report.
    #[arg(long)]
    report: PathBuf,
    /// Artifact: map, graph, frontiers, trajectories.
    #[arg(long)]
    what: String,
    #[arg(long)]
    robot: Option<usize>,
    /// Frontier snapshot time; latest at or before this tick.
    #[arg(long)]
    tick: Option<f64>,
    /// Output file (defaults to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; only the native text/csv formats are defined.
    #[arg(long, default_value = "text")]
    format: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::GenWorld(args) => cmd_gen_world(args),
        Command::Run(args) => cmd_run(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Export(args) => cmd_export(args),
    };
    ExitCode::from(code)
}

fn log_verbosity() -> u8 {
    std::env::var("SUBTERRA_LOG")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(1)
}

fn cmd_gen_world(args: GenWorldArgs) -> u8 {
    let spec = match build_world_spec(&args) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_CONFIG;
        }
    };
    match generate_world(&spec, args.seed) {
        Ok(world) => {
            if let Err(e) = std::fs::write(&args.out, world.to_text()) {
                eprintln!("error: cannot write {}: {e}", args.out.display());
                return EXIT_CONFIG;
            }
            if log_verbosity() > 0 {
                println!(
                    "wrote {} ({} empty voxels at {} m)",
                    args.out.display(),
                    world.empty_count(),
                    world.resolution()
                );
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: world generation failed: {e}");
            EXIT_CONFIG
        }
    }
}

fn build_world_spec(args: &GenWorldArgs) -> Result<WorldSpec, String> {
    let res = args.resolution.unwrap_or(0.3);
    let spec = match args.kind.as_str() {
        "tunnel-network" => WorldSpec::TunnelNetwork {
            extent: match &args.extent {
                Some(v) if v.len() == 3 => [v[0], v[1], v[2]],
                Some(_) => return Err("--extent needs three values".into()),
                None => [80.0, 80.0, 12.0],
            },
            branches: args.branches.unwrap_or(4),
            width: args.width.unwrap_or(4.0),
            height: args.height.unwrap_or(3.0),
            max_slope_deg: args.max_slope_deg.unwrap_or(15.0),
            resolution: res,
        },
        "multi-room" => WorldSpec::MultiRoom {
            rooms: match &args.rooms {
                Some(v) if v.len() == 2 => [v[0], v[1]],
                Some(_) => return Err("--rooms needs two values".into()),
                None => [3, 3],
            },
            room_size: args.room_size.unwrap_or(10.0),
            height: args.height.unwrap_or(3.0),
            door_width: args.width.unwrap_or(2.0),
            resolution: res,
        },
        "vertical-mine" => WorldSpec::VerticalMine {
            levels: args.levels.unwrap_or(3),
            level_size: args.room_size.unwrap_or(20.0),
            height: args.height.unwrap_or(3.0),
            resolution: res,
        },
        "corridor" => WorldSpec::Corridor {
            length: args.length.unwrap_or(40.0),
            width: args.width.unwrap_or(4.0),
            height: args.height.unwrap_or(3.0),
            resolution: res,
        },
        "branches" => WorldSpec::Branches {
            branches: args.branches.unwrap_or(3),
            branch_length: args.length.unwrap_or(25.0),
            width: args.width.unwrap_or(4.0),
            height: args.height.unwrap_or(3.0),
            zigzag: args.zigzag,
            resolution: res,
        },
        "ramp" => WorldSpec::Ramp {
            incline_deg: args.incline_deg.unwrap_or(20.0),
            ramp_length: args.length.unwrap_or(12.0),
            width: args.width.unwrap_or(4.0),
            resolution: res,
        },
        "pit" => WorldSpec::Pit {
            length: args.length.unwrap_or(40.0),
            pit_span: args.width.unwrap_or(6.0),
            pit_depth: args.height.unwrap_or(5.0),
            resolution: res,
        },
        "snake" => WorldSpec::Snake {
            leg_length: args.length.unwrap_or(60.0),
            legs: args.branches.unwrap_or(5),
            resolution: res,
        },
        other => return Err(format!("unknown world kind `{other}`")),
    };
    Ok(spec)
}

fn cmd_run(args: RunArgs) -> u8 {
    let mut overrides = args.set.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(ticks) = args.ticks_max {
        overrides.push(format!("ticks_max={ticks}"));
    }
    let base = match EpisodeConfig::from_file(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(profile) = &args.profile {
        for i in 0..base.robots.len() {
            overrides.push(format!("robots.{i}.profile={profile}"));
        }
    }
    let cfg = match base.apply_overrides(&overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let mut sim = match cfg.build_simulation() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    sim.run();
    let report = sim.into_report();
    let violations = report.stats.invariant_violations;
    if let Err(e) = report.write_to(&args.out) {
        eprintln!("error: cannot write report to {}: {e}", args.out.display());
        return EXIT_CONFIG;
    }
    // normalized config echo makes reruns reproducible from the report alone
    if let Err(e) = std::fs::write(args.out.join("config_echo.toml"), cfg.to_toml()) {
        eprintln!("error: cannot write config echo: {e}");
        return EXIT_CONFIG;
    }
    if log_verbosity() > 0 {
        println!(
            "episode finished: t={:.1}s ticks={} robots={} violations={}",
            report.stats.sim_time,
            report.stats.ticks,
            report.stats.robots.len(),
            violations
        );
        for r in &report.stats.robots {
            let median = median_ms(&r.plan_wall_ms);
            println!(
                "robot {}: mode={} homed={} free={} occ={} plans={} median_plan_ms={:.1}",
                r.id,
                r.final_mode,
                r.homed,
                r.free_voxels,
                r.occ_voxels,
                r.plan_wall_ms.len(),
                median
            );
        }
    }
    if violations > 0 {
        eprintln!("invariant violations detected: {violations}");
        return EXIT_INVARIANT;
    }
    EXIT_OK
}

fn median_ms(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    s[s.len() / 2]
}

fn cmd_verify(args: VerifyArgs) -> u8 {
    let seeds: Vec<u64> = match &args.seeds {
        Some(range) => match parse_seed_range(range) {
            Ok(v) => v,
            Err(msg) => {
                eprintln!("error: {msg}");
                return EXIT_CONFIG;
            }
        },
        None => vec![args.seed],
    };
    let ok = match args.suite.as_str() {
        "dijkstra" => verify::dijkstra_suite(&seeds),
        "gain" => verify::gain_suite(&seeds),
        "gain-cluster" => verify::gain_cluster_suite(&seeds, args.rho),
        "cluster" => verify::cluster_suite(&seeds),
        "frontiers" => verify::frontier_suite(&seeds),
        "all" => {
            verify::dijkstra_suite(&seeds)
                && verify::gain_suite(&seeds)
                && verify::gain_cluster_suite(&seeds, args.rho)
                && verify::cluster_suite(&seeds)
                && verify::frontier_suite(&seeds)
        }
        other => {
            eprintln!("error: unknown suite `{other}` (dijkstra, gain, gain-cluster, cluster, frontiers, all)");
            return EXIT_CONFIG;
        }
    };
    if ok {
        println!("verify {}: OK", args.suite);
        EXIT_OK
    } else {
        println!("verify {}: FAIL", args.suite);
        EXIT_VERIFY_MISMATCH
    }
}

fn parse_seed_range(text: &str) -> Result<Vec<u64>, String> {
    let (a, b) = text
        .split_once("..")
        .ok_or_else(|| format!("seed range must look like a..b, got `{text}`"))?;
    let a: u64 = a.trim().parse().map_err(|_| "bad range start".to_string())?;
    let b: u64 = b.trim().parse().map_err(|_| "bad range end".to_string())?;
    if b < a {
        return Err("range end before start".into());
    }
    Ok((a..=b).collect())
}

fn cmd_export(args: ExportArgs) -> u8 {
    if !matches!(args.format.as_str(), "text" | "csv") {
        eprintln!("error: unknown format `{}` (text, csv)", args.format);
        return EXIT_CONFIG;
    }
    let content = match export_content(&args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_CONFIG;
        }
    };
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, content) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_CONFIG;
            }
        }
        None => print!("{content}"),
    }
    EXIT_OK
}

fn export_content(args: &ExportArgs) -> Result<String, String> {
    let read = |name: String| -> Result<String, String> {
        std::fs::read_to_string(args.report.join(&name))
            .map_err(|_| format!("missing artifact `{name}` in {}", args.report.display()))
    };
    match args.what.as_str() {
        "map" => match args.robot {
            Some(i) => read(format!("map_robot{i}.txt")),
            None => read("map_team.txt".to_string()),
        },
        "graph" => {
            let robot = args.robot.unwrap_or(0);
            read(format!("global_graph_robot{robot}.csv"))
        }
        "trajectories" => match args.robot {
            Some(i) => read(format!("trajectory_robot{i}.csv")),
            None => {
                // concatenate every robot's trajectory, id order
                let mut out = String::from("robot_id,t,x,y,z,yaw\n");
                let mut found = false;
                for i in 0..64 {
                    let Ok(text) = read(format!("trajectory_robot{i}.csv")) else { break };
                    found = true;
                    for line in text.lines().skip(1) {
                        out.push_str(&format!("{i},{line}\n"));
                    }
                }
                if !found {
                    return Err("no trajectory artifacts found".into());
                }
                Ok(out)
            }
        },
        "frontiers" => {
            let history = read("frontier_history.csv".to_string())?;
            let mut best_t: Option<f64> = None;
            for line in history.lines().skip(1) {
                let Some((t, _)) = line.split_once(',') else { continue };
                let Ok(t) = t.parse::<f64>() else { continue };
                if args.tick.map(|cap| t <= cap).unwrap_or(true)
                    && best_t.map(|b| t > b).unwrap_or(true)
                {
                    best_t = Some(t);
                }
            }
            let Some(best_t) = best_t else {
                return Ok("frontier_id,size,cx,cy,cz\n".to_string());
            };
            let mut out = String::from("frontier_id,size,cx,cy,cz\n");
            let prefix = format!("{best_t:.2},");
            for line in history.lines().skip(1) {
                if let Some(rest) = line.strip_prefix(&prefix) {
                    out.push_str(rest);
                    out.push('\n');
                }
            }
            Ok(out)
        }
        other => Err(format!("unknown export `{other}` (map, graph, frontiers, trajectories)")),
    }
}
