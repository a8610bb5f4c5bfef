//! Seeded procedural worlds: binary-space-partitioned rooms joined by
//! doorways, furniture blocks, and walls painted in short textured segments.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::geodesic::distance_field;
use super::{Cell, World, DEFAULT_CELL_SIZE, TEXTURE_CLASSES};
use crate::error::Result;
use crate::rng::{seeded, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    /// Grid size in cells, boundary included.
    pub width: usize,
    pub height: usize,
    /// Smallest room side in cells.
    pub min_room: usize,
    pub max_depth: u32,
    pub door_width: usize,
    pub max_furniture: usize,
    /// Wall runs are painted in segments of this many cells (inclusive range).
    pub segment_min: usize,
    pub segment_max: usize,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            width: 64,
            height: 48,
            min_room: 14,
            max_depth: 3,
            door_width: 4,
            max_furniture: 2,
            segment_min: 6,
            segment_max: 12,
        }
    }
}

impl GeneratorParams {
    /// A 10 m × 8 m floor plan for quick tests.
    pub fn small() -> Self {
        GeneratorParams {
            width: 40,
            height: 32,
            min_room: 12,
            max_depth: 2,
            ..Self::default()
        }
    }
}

struct Canvas<'a> {
    w: usize,
    cells: Vec<Cell>,
    params: &'a GeneratorParams,
    rng: Rng,
}

#[derive(Clone, Copy)]
struct Rect {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
}

impl Rect {
    fn width(&self) -> usize {
        self.x1 - self.x0
    }
    fn height(&self) -> usize {
        self.y1 - self.y0
    }
}

impl Canvas<'_> {
    fn idx(&self, c: usize, r: usize) -> usize {
        r * self.w + c
    }

    fn is_free(&self, c: usize, r: usize) -> bool {
        self.cells[self.idx(c, r)].is_free()
    }

    fn texture(&mut self) -> u8 {
        self.rng.random_range(0..TEXTURE_CLASSES)
    }

    /// Walls a run of cells, switching texture every few cells.
    fn paint_run(&mut self, run: &[(usize, usize)]) {
        let mut left = 0;
        let mut tex = 0;
        for &(c, r) in run {
            if left == 0 {
                tex = self.texture();
                left = self.rng.random_range(self.params.segment_min..=self.params.segment_max);
            }
            let i = self.idx(c, r);
            self.cells[i] = Cell::Wall(tex);
            left -= 1;
        }
    }

    fn split(&mut self, rect: Rect, depth: u32) {
        let p = self.params;
        let can_v = rect.width() >= 2 * p.min_room + 1;
        let can_h = rect.height() >= 2 * p.min_room + 1;
        if depth >= p.max_depth || !(can_v || can_h) {
            self.furnish(rect);
            return;
        }
        if depth > 0 && self.rng.random_bool(0.2) {
            self.furnish(rect);
            return;
        }
        let vertical = match (can_v, can_h) {
            (true, true) => {
                if rect.width() == rect.height() {
                    self.rng.random_bool(0.5)
                } else {
                    rect.width() > rect.height()
                }
            }
            (v, _) => v,
        };
        let (lo, hi) = if vertical {
            (rect.x0 + p.min_room, rect.x1 - p.min_room)
        } else {
            (rect.y0 + p.min_room, rect.y1 - p.min_room)
        };
        // A new wall must not end inside an existing doorway.
        let mut pos = None;
        for _ in 0..16 {
            let cand = self.rng.random_range(lo..hi);
            let blocked = if vertical {
                self.is_free(cand, rect.y0 - 1) || self.is_free(cand, rect.y1)
            } else {
                self.is_free(rect.x0 - 1, cand) || self.is_free(rect.x1, cand)
            };
            if !blocked {
                pos = Some(cand);
                break;
            }
        }
        let Some(pos) = pos else {
            self.furnish(rect);
            return;
        };
        let line: Vec<(usize, usize)> = if vertical {
            (rect.y0..rect.y1).map(|r| (pos, r)).collect()
        } else {
            (rect.x0..rect.x1).map(|c| (c, pos)).collect()
        };
        let doors = if line.len() > 28 { 2 } else { 1 };
        let dw = p.door_width.min(line.len().saturating_sub(2)).max(1);
        let mut gap = vec![false; line.len()];
        for k in 0..doors {
            let span = line.len() / doors;
            let lo = k * span + 1;
            let hi = ((k + 1) * span).saturating_sub(dw + 1).max(lo + 1);
            let at = self.rng.random_range(lo..hi);
            for g in gap.iter_mut().skip(at).take(dw) {
                *g = true;
            }
        }
        let mut run = Vec::new();
        for (cell, open) in line.iter().zip(&gap) {
            if *open {
                self.paint_run(&run);
                run.clear();
            } else {
                run.push(*cell);
            }
        }
        self.paint_run(&run);
        let (a, b) = if vertical {
            (Rect { x1: pos, ..rect }, Rect { x0: pos + 1, ..rect })
        } else {
            (Rect { y1: pos, ..rect }, Rect { y0: pos + 1, ..rect })
        };
        self.split(a, depth + 1);
        self.split(b, depth + 1);
    }

    fn furnish(&mut self, room: Rect) {
        const CLEARANCE: usize = 3;
        let count = self.rng.random_range(0..=self.params.max_furniture);
        for _ in 0..count {
            let fw = self.rng.random_range(2..=4usize);
            let fh = self.rng.random_range(2..=4usize);
            if room.width() < fw + 2 * CLEARANCE + 1 || room.height() < fh + 2 * CLEARANCE + 1 {
                continue;
            }
            let c0 = self.rng.random_range(room.x0 + CLEARANCE..=room.x1 - CLEARANCE - fw);
            let r0 = self.rng.random_range(room.y0 + CLEARANCE..=room.y1 - CLEARANCE - fh);
            let tex = self.texture();
            for r in r0..r0 + fh {
                for c in c0..c0 + fw {
                    let i = self.idx(c, r);
                    self.cells[i] = Cell::Wall(tex);
                }
            }
        }
    }
}

/// Builds a connected world from `seed`; unreachable pockets are filled in
/// and the start marker sits on a random free cell.
pub fn generate_world(params: &GeneratorParams, seed: u64, name: &str) -> Result<World> {
    let (w, h) = (params.width.max(5), params.height.max(5));
    let mut canvas = Canvas {
        w,
        cells: vec![Cell::Free; w * h],
        params,
        rng: seeded(seed),
    };
    let mut perimeter: Vec<(usize, usize)> = (0..w).map(|c| (c, 0)).collect();
    perimeter.extend((1..h).map(|r| (w - 1, r)));
    perimeter.extend((0..w - 1).rev().map(|c| (c, h - 1)));
    perimeter.extend((1..h - 1).rev().map(|r| (0, r)));
    canvas.paint_run(&perimeter);
    canvas.split(
        Rect {
            x0: 1,
            y0: 1,
            x1: w - 1,
            y1: h - 1,
        },
        0,
    );

    // Keep the largest 4-connected free component.
    let provisional = World::new(name, w, h, DEFAULT_CELL_SIZE, canvas.cells.clone(), None)?;
    let mut label = vec![usize::MAX; w * h];
    let mut best: Option<(usize, usize)> = None;
    for i in provisional.free_cells() {
        if label[i] != usize::MAX {
            continue;
        }
        let field = distance_field(&provisional, i);
        let members: Vec<usize> = field.reachable().collect();
        for &m in &members {
            label[m] = i;
        }
        if best.is_none_or(|(_, n)| members.len() > n) {
            best = Some((i, members.len()));
        }
    }
    let (keep, _) = best.expect("generated world has free space");
    for i in 0..w * h {
        if canvas.cells[i].is_free() && label[i] != keep {
            canvas.cells[i] = Cell::Wall(0);
        }
    }
    let free: Vec<usize> = canvas.cells.iter().enumerate().filter(|(_, c)| c.is_free()).map(|(i, _)| i).collect();
    let s = free[canvas.rng.random_range(0..free.len())];
    World::new(name, w, h, DEFAULT_CELL_SIZE, canvas.cells, Some((s % w, s / w)))
}
