use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::world::geodesic::distance_field_bounded;
use crate::world::distance_field;
use crate::world::World;

pub const DEFAULT_SPACING: f64 = 1.5;

/// Waypoints the expert visits, as free-cell indices plus their centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSet {
    pub cells: Vec<usize>,
    pub positions: Vec<(f64, f64)>,
    pub spacing: f64,
}

impl AnchorSet {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn merge_radius(&self) -> f64 {
        self.spacing / 2.0
    }
}

/// Cells reachable from the start marker, or the largest 4-connected
/// component when the world has none. Returned as a mask over all cells.
pub fn reachable_mask(world: &World) -> Result<Vec<bool>> {
    if world.free_cell_count() == 0 {
        return Err(Error::Structural("world has no free space".into()));
    }
    let source = match world.start() {
        Some((c, r)) => world.index(c, r),
        None => largest_component_seed(world),
    };
    let field = distance_field(world, source);
    let mut mask = vec![false; world.cells().len()];
    for i in field.reachable() {
        mask[i] = true;
    }
    Ok(mask)
}

fn largest_component_seed(world: &World) -> usize {
    let mut seen = vec![false; world.cells().len()];
    let mut best = (0usize, usize::MAX);
    for i in world.free_cells() {
        if seen[i] {
            continue;
        }
        let field = distance_field(world, i);
        let mut size = 0;
        for j in field.reachable() {
            seen[j] = true;
            size += 1;
        }
        if size > best.0 {
            best = (size, i);
        }
    }
    best.1
}

/// One jittered candidate per `spacing`-sized stratum, snapped to the nearest
/// reachable free cell inside the stratum, then merged greedily so no two
/// anchors are closer than `spacing / 2` along the grid.
pub fn sample_anchors(world: &World, spacing: f64, seed: u64) -> Result<AnchorSet> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::Structural(format!("anchor spacing {spacing} must be positive")));
    }
    let mask = reachable_mask(world)?;
    let s = world.cell_size();
    let extent_x = world.width() as f64 * s;
    let extent_y = world.height() as f64 * s;
    let nx = (extent_x / spacing).ceil() as usize;
    let ny = (extent_y / spacing).ceil() as usize;
    let mut rng = rng::seeded(seed);

    let mut candidates = Vec::new();
    for sy in 0..ny {
        for sx in 0..nx {
            let x0 = sx as f64 * spacing;
            let y0 = sy as f64 * spacing;
            let jx = x0 + rng.random::<f64>() * spacing;
            let jy = y0 + rng.random::<f64>() * spacing;
            let c0 = (x0 / s).floor() as usize;
            let r0 = (y0 / s).floor() as usize;
            let c1 = (((x0 + spacing) / s).ceil() as usize).min(world.width());
            let r1 = (((y0 + spacing) / s).ceil() as usize).min(world.height());
            let mut best: Option<(f64, usize)> = None;
            for r in r0..r1 {
                for c in c0..c1 {
                    let (cx, cy) = world.cell_center(c, r);
                    // Stratum membership by cell centre keeps strata disjoint.
                    if cx < x0 || cx >= x0 + spacing || cy < y0 || cy >= y0 + spacing {
                        continue;
                    }
                    let idx = world.index(c, r);
                    if !mask[idx] {
                        continue;
                    }
                    let d = (cx - jx).powi(2) + (cy - jy).powi(2);
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, idx));
                    }
                }
            }
            if let Some((_, idx)) = best {
                candidates.push(idx);
            }
        }
    }

    let radius = spacing / 2.0;
    // A cell at h hops is too close when h·s < radius.
    let max_hops = ((radius / s).ceil() as u32).saturating_sub(1);
    let mut blocked = vec![false; world.cells().len()];
    let mut cells = Vec::new();
    for idx in candidates {
        if blocked[idx] {
            continue;
        }
        let field = distance_field_bounded(world, idx, max_hops);
        for j in field.reachable() {
            if (field.hops(j).unwrap() as f64) * s < radius {
                blocked[j] = true;
            }
        }
        cells.push(idx);
    }
    if cells.is_empty() {
        // Strata coarser than the free region can miss it entirely.
        let first = mask.iter().position(|&m| m).expect("mask has a free cell");
        cells.push(first);
    }
    let positions = cells
        .iter()
        .map(|&i| {
            let (c, r) = world.col_row(i);
            world.cell_center(c, r)
        })
        .collect();
    Ok(AnchorSet {
        cells,
        positions,
        spacing,
    })
}
