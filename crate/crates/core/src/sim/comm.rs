//! Communication model: multi-hop reachability to the hub through
//! breadcrumbed relays and (optionally) other robots.

use crate::math::Vec3;
use crate::world::World;

/// Range-disc communication with optional line-of-sight occlusion.
#[derive(Clone, Debug)]
pub struct CommModel {
    pub c2h_position: Vec3,
    pub range: f64,
    pub relays: Vec<Vec3>,
    pub robots_as_relays: bool,
    /// When set, each hop additionally requires a clear ray through the
    /// world.
    pub line_of_sight: bool,
}

impl CommModel {
    pub fn validate(&self) -> Result<(), String> {
        if self.range <= 0.0 {
            return Err(format!("comm range must be positive, got {}", self.range));
        }
        Ok(())
    }
}

fn hop_ok(a: Vec3, b: Vec3, model: &CommModel, world: Option<&World>) -> bool {
    let d = a.dist(b);
    if d > model.range {
        return false;
    }
    if model.line_of_sight {
        if let Some(world) = world {
            if d > 1e-9 {
                let dir = (b - a) / d;
                if let Some((_, hit_d)) = world.cast_ray(a, dir, d) {
                    if hit_d < d - 1e-9 {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// True iff a hop chain of pairwise links within range exists from the robot
/// through relays (and other robots, when enabled) to the hub.
pub fn comm_available(
    robot_pos: Vec3,
    other_robots: &[Vec3],
    model: &CommModel,
    world: Option<&World>,
) -> bool {
    let mut nodes = vec![robot_pos];
    nodes.extend(model.relays.iter().copied());
    if model.robots_as_relays {
        nodes.extend(other_robots.iter().copied());
    }
    nodes.push(model.c2h_position);
    let hub = nodes.len() - 1;

    let mut reached = vec![false; nodes.len()];
    let mut stack = vec![0usize];
    reached[0] = true;
    while let Some(u) = stack.pop() {
        if u == hub {
            return true;
        }
        for v in 0..nodes.len() {
            if !reached[v] && hop_ok(nodes[u], nodes[v], model, world) {
                reached[v] = true;
                stack.push(v);
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles;

    fn model(range: f64, relays: Vec<Vec3>) -> CommModel {
        CommModel {
            c2h_position: Vec3::ZERO,
            range,
            relays,
            robots_as_relays: true,
            line_of_sight: false,
        }
    }

    #[test]
    fn direct_and_out_of_range() {
        let m = model(10.0, vec![]);
        assert!(comm_available(Vec3::new(9.0, 0.0, 0.0), &[], &m, None));
        assert!(!comm_available(Vec3::new(11.0, 0.0, 0.0), &[], &m, None));
    }

    #[test]
    fn relay_chain_matches_oracle() {
        let m = model(10.0, vec![Vec3::new(9.0, 0.0, 0.0), Vec3::new(18.0, 0.0, 0.0)]);
        let robot = Vec3::new(26.0, 0.0, 0.0);
        assert!(comm_available(robot, &[], &m, None));
        // union-find oracle over the same node set
        let mut nodes = vec![robot];
        nodes.extend(m.relays.iter().copied());
        nodes.push(m.c2h_position);
        assert!(oracles::comm_reachable_unionfind(&nodes, 0, nodes.len() - 1, 10.0));

        // all nodes too far apart
        let sparse = model(5.0, vec![Vec3::new(9.0, 0.0, 0.0)]);
        assert!(!comm_available(robot, &[], &sparse, None));
    }

    #[test]
    fn robots_relay_when_enabled() {
        let mut m = model(10.0, vec![]);
        let robot = Vec3::new(18.0, 0.0, 0.0);
        let helper = [Vec3::new(9.0, 0.0, 0.0)];
        assert!(comm_available(robot, &helper, &m, None));
        m.robots_as_relays = false;
        assert!(!comm_available(robot, &helper, &m, None));
    }

    #[test]
    fn line_of_sight_blocks_through_walls() {
        let world = crate::world::fixtures::corridor(20.0, 4.0, 3.0, 0.5).unwrap();
        // hub outside the corridor wall; robot inside
        let mut m = model(15.0, vec![]);
        m.line_of_sight = true;
        m.c2h_position = Vec3::new(5.0, -3.0, 2.5); // beyond the y=1 wall
        let robot = Vec3::new(5.0, 3.0, 2.5);
        assert!(!comm_available(robot, &[], &m, Some(&world)));
        m.line_of_sight = false;
        assert!(comm_available(robot, &[], &m, Some(&world)));
    }
}
