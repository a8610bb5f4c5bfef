use super::World;

/// A free cell counts as covered once its centre has been within this many
/// metres of the agent with an unobstructed line of sight.
pub const COVERAGE_RADIUS: f64 = 3.2;

#[derive(Debug, Clone)]
pub struct CoverageTracker {
    covered: Vec<bool>,
    covered_cells: usize,
    cell_area: f64,
    total_free_area: f64,
    curve: Vec<f64>,
    last: Option<(f64, f64)>,
}

impl CoverageTracker {
    pub fn new(world: &World) -> Self {
        let s = world.cell_size();
        CoverageTracker {
            covered: vec![false; world.cells().len()],
            covered_cells: 0,
            cell_area: s * s,
            total_free_area: world.total_free_area(),
            curve: Vec::new(),
            last: None,
        }
    }

    /// Marks visible cells around `(x, y)`, appends the cumulative covered
    /// area to the curve and returns the newly covered area in m².
    pub fn update(&mut self, world: &World, x: f64, y: f64) -> f64 {
        // Turning in place cannot reveal anything new.
        if self.last == Some((x, y)) {
            self.curve.push(self.covered_area());
            return 0.0;
        }
        self.last = Some((x, y));
        let s = world.cell_size();
        let reach = (COVERAGE_RADIUS / s).ceil() as i64 + 1;
        let (pc, pr) = world.cell_of(x, y);
        let r2 = COVERAGE_RADIUS * COVERAGE_RADIUS;
        let mut gained = 0usize;
        for row in (pr - reach).max(0)..=(pr + reach).min(world.height() as i64 - 1) {
            for col in (pc - reach).max(0)..=(pc + reach).min(world.width() as i64 - 1) {
                let idx = world.index(col as usize, row as usize);
                if self.covered[idx] || !world.cells()[idx].is_free() {
                    continue;
                }
                let (cx, cy) = world.cell_center(col as usize, row as usize);
                let d2 = (cx - x) * (cx - x) + (cy - y) * (cy - y);
                if d2 < r2 && world.segment_clear(x, y, cx, cy) {
                    self.covered[idx] = true;
                    gained += 1;
                }
            }
        }
        self.covered_cells += gained;
        self.curve.push(self.covered_area());
        gained as f64 * self.cell_area
    }

    pub fn covered_area(&self) -> f64 {
        self.covered_cells as f64 * self.cell_area
    }

    pub fn total_free_area(&self) -> f64 {
        self.total_free_area
    }

    pub fn ratio(&self) -> f64 {
        if self.total_free_area > 0.0 {
            self.covered_area() / self.total_free_area
        } else {
            0.0
        }
    }

    pub fn curve(&self) -> &[f64] {
        &self.curve
    }

    pub fn is_covered(&self, idx: usize) -> bool {
        self.covered[idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{load_world, Cell};

    fn open_room(interior: usize) -> World {
        let n = interior + 2;
        let mut cells = vec![Cell::Free; n * n];
        for r in 0..n {
            for c in 0..n {
                if r == 0 || c == 0 || r == n - 1 || c == n - 1 {
                    cells[r * n + c] = Cell::Wall(0);
                }
            }
        }
        World::new("open", n, n, 0.25, cells, None).unwrap()
    }

    #[test]
    fn repeated_position_gains_nothing() {
        let w = open_room(20);
        let mut t = CoverageTracker::new(&w);
        let (x, y) = w.cell_center(5, 5);
        assert!(t.update(&w, x, y) > 0.0);
        assert_eq!(t.update(&w, x, y), 0.0);
        assert_eq!(t.curve().len(), 2);
        assert_eq!(t.curve()[0], t.curve()[1]);
    }

    #[test]
    fn small_open_room_is_fully_covered_from_centre() {
        let w = open_room(12); // 3 m × 3 m
        let mut t = CoverageTracker::new(&w);
        // Rasterisation oracle: every free cell centre lies within 3.2 m.
        let (x, y) = (0.25 + 1.5, 0.25 + 1.5);
        let visible = w
            .free_cells()
            .filter(|&i| {
                let (c, r) = w.col_row(i);
                let (cx, cy) = w.cell_center(c, r);
                (cx - x).hypot(cy - y) < COVERAGE_RADIUS
            })
            .count();
        assert_eq!(visible, w.free_cell_count());
        t.update(&w, x, y);
        assert_eq!(t.ratio(), 1.0);
    }

    #[test]
    fn occluded_cell_stays_uncovered() {
        // Agent at column 1; a wall at column 5 (1 m away); target behind it.
        let w = load_world(
            "000000000000\n\
             0...0......0\n\
             0...0......0\n\
             0...0......0\n\
             000000000000\n",
        )
        .unwrap();
        let mut t = CoverageTracker::new(&w);
        let (x, y) = w.cell_center(1, 2);
        t.update(&w, x, y);
        let behind = w.index(9, 2); // 2 m away, behind the wall
        assert!(!t.is_covered(behind));
        assert!(t.is_covered(w.index(3, 2)));
    }
}
