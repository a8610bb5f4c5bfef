use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::world::{step_pose, Action, Locomotion, Pose, World};

/// Sub-cell resolution of the planner's state key, per axis.
const SUBDIV: usize = 4;

/// Shortest action sequence that brings the agent into the cell containing
/// `to`. Breadth-first over (cell, heading) states, with each cell split into
/// `SUBDIV²` bins so drift from off-axis moves is not merged away; the first
/// pose to reach a state represents it. Expansion order is forward, left,
/// right, and forward moves that leave the pose unchanged are not edges.
pub fn plan_to_cell(world: &World, from: &Pose, to: (f64, f64), loco: &Locomotion) -> Result<Vec<Action>> {
    let (tc, tr) = world.cell_of(to.0, to.1);
    if !world.is_free_cell(tc, tr) {
        return Err(Error::NoPath(format!("target ({:.3}, {:.3}) is not free", to.0, to.1)));
    }
    if !from.is_valid(world) {
        return Err(Error::NoPath(format!("start ({:.3}, {:.3}) is not free", from.x, from.y)));
    }
    let target = world.index(tc as usize, tr as usize);
    let cell_index = |p: &Pose| {
        let (c, r) = world.cell_of(p.x, p.y);
        world.index(c as usize, r as usize)
    };
    if cell_index(from) == target {
        return Ok(Vec::new());
    }

    let headings = 360 / loco.turn as usize;
    let fine = world.cell_size() / SUBDIV as f64;
    let fine_w = world.width() * SUBDIV;
    let key = |p: &Pose| {
        let fx = ((p.x / fine).floor() as usize).min(fine_w - 1);
        let fy = (p.y / fine).floor() as usize;
        (fy * fine_w + fx) * headings + (p.heading / loco.turn) as usize
    };
    // Parent links: (pose, parent node, action from parent).
    let mut nodes: Vec<(Pose, usize, Action)> = vec![(*from, usize::MAX, Action::Forward)];
    let mut seen = vec![false; world.cells().len() * SUBDIV * SUBDIV * headings];
    // Off-lattice headings still get a slot via integer division, which is
    // fine because every pose on a path shares the start's residue.
    seen[key(from)] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(n) = queue.pop_front() {
        let pose = nodes[n].0;
        for action in Action::ALL {
            let next = step_pose(world, &pose, action, loco);
            if next == pose {
                continue;
            }
            let k = key(&next);
            if seen[k] {
                continue;
            }
            seen[k] = true;
            nodes.push((next, n, action));
            let id = nodes.len() - 1;
            if cell_index(&next) == target {
                return Ok(unwind(&nodes, id));
            }
            queue.push_back(id);
        }
    }
    Err(Error::NoPath(format!(
        "cell ({tc}, {tr}) unreachable from ({:.3}, {:.3})",
        from.x, from.y
    )))
}

fn unwind(nodes: &[(Pose, usize, Action)], mut id: usize) -> Vec<Action> {
    let mut actions = Vec::new();
    while nodes[id].1 != usize::MAX {
        actions.push(nodes[id].2);
        id = nodes[id].1;
    }
    actions.reverse();
    actions
}

/// Applies actions in order and returns every pose, start included.
pub fn replay(world: &World, start: &Pose, actions: &[Action], loco: &Locomotion) -> Vec<Pose> {
    let mut poses = Vec::with_capacity(actions.len() + 1);
    let mut p = *start;
    poses.push(p);
    for &a in actions {
        p = step_pose(world, &p, a, loco);
        poses.push(p);
    }
    poses
}
