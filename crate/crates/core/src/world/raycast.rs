use super::kinematics::unit_vector;
use super::{Cell, Observation, Pose, World};

pub const RAY_COUNT: usize = 72;
pub const RAY_SPACING_DEG: u32 = 5;
pub const MAX_RANGE: f64 = 5.0;
/// Texture class reported for rays that reach `MAX_RANGE` without a hit.
pub const MISS_TEXTURE: u8 = 8;

/// Casts the 72 world-aligned rays from the pose's position.
pub fn raycast_observe(world: &World, pose: &Pose) -> Observation {
    let mut depths = Vec::with_capacity(RAY_COUNT);
    let mut textures = Vec::with_capacity(RAY_COUNT);
    for i in 0..RAY_COUNT {
        let (ux, uy) = unit_vector(i as u32 * RAY_SPACING_DEG);
        let (d, t) = cast(world, pose.x, pose.y, ux, uy);
        depths.push(d);
        textures.push(t);
    }
    Observation {
        depths,
        textures,
        heading: pose.heading,
    }
}

/// Grid ray marching; returns the distance to the boundary of the first wall
/// cell and that wall's texture.
fn cast(world: &World, px: f64, py: f64, ux: f64, uy: f64) -> (f64, u8) {
    const MIN_DEPTH: f64 = 1e-9;
    let s = world.cell_size();
    let (mut cx, mut cy) = world.cell_of(px, py);
    if let Cell::Wall(t) = world.cell(cx, cy) {
        return (MIN_DEPTH, t);
    }
    let step_x: i64 = if ux > 0.0 { 1 } else if ux < 0.0 { -1 } else { 0 };
    let step_y: i64 = if uy > 0.0 { 1 } else if uy < 0.0 { -1 } else { 0 };
    let boundary = |c: i64, d: i64| if d > 0 { (c + 1) as f64 * s } else { c as f64 * s };
    let mut t_max_x = if step_x != 0 { (boundary(cx, step_x) - px) / ux } else { f64::INFINITY };
    let mut t_max_y = if step_y != 0 { (boundary(cy, step_y) - py) / uy } else { f64::INFINITY };
    let t_dx = if step_x != 0 { s / ux.abs() } else { f64::INFINITY };
    let t_dy = if step_y != 0 { s / uy.abs() } else { f64::INFINITY };
    loop {
        let t = t_max_x.min(t_max_y);
        if t > MAX_RANGE {
            return (MAX_RANGE, MISS_TEXTURE);
        }
        if (t_max_x - t_max_y).abs() <= 1e-12 {
            // Through a vertex: either side cell stops the ray.
            for (c, r) in [(cx + step_x, cy), (cx, cy + step_y)] {
                if let Cell::Wall(tex) = world.cell(c, r) {
                    return (t.max(MIN_DEPTH), tex);
                }
            }
            cx += step_x;
            cy += step_y;
            t_max_x += t_dx;
            t_max_y += t_dy;
        } else if t_max_x < t_max_y {
            cx += step_x;
            t_max_x += t_dx;
        } else {
            cy += step_y;
            t_max_y += t_dy;
        }
        if let Cell::Wall(tex) = world.cell(cx, cy) {
            return (t.max(MIN_DEPTH), tex);
        }
    }
}
