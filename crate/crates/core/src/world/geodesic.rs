use std::collections::VecDeque;

use super::World;

/// Breadth-first hop counts over 4-connected free cells from a source cell.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub source: usize,
    hops: Vec<u32>,
    cell_size: f64,
}

impl DistanceField {
    pub const UNREACHABLE: u32 = u32::MAX;

    pub fn hops(&self, idx: usize) -> Option<u32> {
        match self.hops[idx] {
            Self::UNREACHABLE => None,
            h => Some(h),
        }
    }

    pub fn meters(&self, idx: usize) -> Option<f64> {
        self.hops(idx).map(|h| h as f64 * self.cell_size)
    }

    pub fn reachable(&self) -> impl Iterator<Item = usize> + '_ {
        self.hops.iter().enumerate().filter(|(_, &h)| h != Self::UNREACHABLE).map(|(i, _)| i)
    }
}

pub fn distance_field(world: &World, source: usize) -> DistanceField {
    distance_field_bounded(world, source, u32::MAX - 1)
}

/// Stops expanding beyond `max_hops`.
pub(crate) fn distance_field_bounded(world: &World, source: usize, max_hops: u32) -> DistanceField {
    let mut hops = vec![DistanceField::UNREACHABLE; world.cells().len()];
    let mut queue = VecDeque::new();
    if world.cells()[source].is_free() {
        hops[source] = 0;
        queue.push_back(source);
    }
    let w = world.width();
    while let Some(i) = queue.pop_front() {
        let h = hops[i];
        if h >= max_hops {
            continue;
        }
        let (c, r) = (i % w, i / w);
        let mut visit = |j: usize| {
            if hops[j] == DistanceField::UNREACHABLE && world.cells()[j].is_free() {
                hops[j] = h + 1;
                queue.push_back(j);
            }
        };
        // Boundary cells are walls, so interior neighbours are in range.
        if c > 0 {
            visit(i - 1);
        }
        if c + 1 < w {
            visit(i + 1);
        }
        if r > 0 {
            visit(i - w);
        }
        if r + 1 < world.height() {
            visit(i + w);
        }
    }
    DistanceField {
        source,
        hops,
        cell_size: world.cell_size(),
    }
}

/// Shortest 4-connected path length between the cells containing `a` and
/// `b`, or `None` when they are not connected.
pub fn geodesic_distance(world: &World, a: (f64, f64), b: (f64, f64)) -> Option<f64> {
    let (ac, ar) = world.cell_of(a.0, a.1);
    let (bc, br) = world.cell_of(b.0, b.1);
    if !world.is_free_cell(ac, ar) || !world.is_free_cell(bc, br) {
        return None;
    }
    let field = distance_field(world, world.index(ac as usize, ar as usize));
    field.meters(world.index(bc as usize, br as usize))
}
