//! Deterministic 2-D metric environment.
//!
//! World coordinates are metres with `x` growing along columns and `y` along
//! rows; cell `(col, row)` covers `[col·s, (col+1)·s) × [row·s, (row+1)·s)`.
//! Headings are integer degrees measured counter-clockwise from `+x`.

mod coverage;
mod generate;
pub(crate) mod geodesic;
mod io;
mod kinematics;
mod raycast;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use coverage::{CoverageTracker, COVERAGE_RADIUS};
pub use generate::{generate_world, GeneratorParams};
pub use geodesic::{distance_field, geodesic_distance, DistanceField};
pub use io::{load_world, save_world};
pub use kinematics::{step_pose, unit_vector};
pub use raycast::{raycast_observe, MAX_RANGE, MISS_TEXTURE, RAY_COUNT, RAY_SPACING_DEG};

pub const DEFAULT_CELL_SIZE: f64 = 0.25;
pub const TEXTURE_CLASSES: u8 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    Free,
    Wall(u8),
}

impl Cell {
    pub fn is_free(self) -> bool {
        matches!(self, Cell::Free)
    }
}

/// Immutable occupancy and texture grid.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub name: String,
    width: usize,
    height: usize,
    cell_size: f64,
    cells: Vec<Cell>,
    start: Option<(usize, usize)>,
}

impl World {
    /// Validates the grid, walling any free boundary cell.
    pub fn new(
        name: impl Into<String>,
        width: usize,
        height: usize,
        cell_size: f64,
        mut cells: Vec<Cell>,
        start: Option<(usize, usize)>,
    ) -> Result<Self> {
        if width == 0 || height == 0 || cells.len() != width * height {
            return Err(Error::Structural(format!(
                "grid of {width}x{height} cells needs {} entries, got {}",
                width * height,
                cells.len()
            )));
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::Structural(format!("cell size {cell_size} must be positive")));
        }
        for row in 0..height {
            for col in 0..width {
                let idx = row * width + col;
                let boundary = row == 0 || col == 0 || row + 1 == height || col + 1 == width;
                match cells[idx] {
                    Cell::Wall(t) if t >= TEXTURE_CLASSES => {
                        return Err(Error::Structural(format!(
                            "texture id {t} at ({col}, {row}) exceeds {}",
                            TEXTURE_CLASSES - 1
                        )))
                    }
                    Cell::Free if boundary => cells[idx] = Cell::Wall(0),
                    _ => {}
                }
            }
        }
        if !cells.iter().any(|c| c.is_free()) {
            return Err(Error::Structural("world has no free cell".into()));
        }
        if let Some((c, r)) = start {
            if c >= width || r >= height || !cells[r * width + c].is_free() {
                return Err(Error::Structural(format!("start marker ({c}, {r}) is not a free cell")));
            }
        }
        Ok(World {
            name: name.into(),
            width,
            height,
            cell_size,
            cells,
            start,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn start(&self) -> Option<(usize, usize)> {
        self.start
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.width + col
    }

    pub fn col_row(&self, idx: usize) -> (usize, usize) {
        (idx % self.width, idx / self.width)
    }

    /// Out-of-range coordinates read as walls.
    pub fn cell(&self, col: i64, row: i64) -> Cell {
        if col < 0 || row < 0 || col as usize >= self.width || row as usize >= self.height {
            Cell::Wall(0)
        } else {
            self.cells[row as usize * self.width + col as usize]
        }
    }

    pub fn is_free_cell(&self, col: i64, row: i64) -> bool {
        self.cell(col, row).is_free()
    }

    /// Cell containing a metric point (floor semantics).
    pub fn cell_of(&self, x: f64, y: f64) -> (i64, i64) {
        ((x / self.cell_size).floor() as i64, (y / self.cell_size).floor() as i64)
    }

    pub fn is_free_point(&self, x: f64, y: f64) -> bool {
        let (c, r) = self.cell_of(x, y);
        self.is_free_cell(c, r)
    }

    pub fn cell_center(&self, col: usize, row: usize) -> (f64, f64) {
        ((col as f64 + 0.5) * self.cell_size, (row as f64 + 0.5) * self.cell_size)
    }

    pub fn free_cell_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_free()).count()
    }

    pub fn total_free_area(&self) -> f64 {
        self.free_cell_count() as f64 * self.cell_size * self.cell_size
    }

    /// Indices of all free cells in row-major order.
    pub fn free_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().enumerate().filter(|(_, c)| c.is_free()).map(|(i, _)| i)
    }

    /// True when the straight segment `a → b` crosses only free cells. A
    /// segment passing exactly through a grid vertex must clear both cells
    /// beside the vertex.
    pub fn segment_clear(&self, ax: f64, ay: f64, bx: f64, by: f64) -> bool {
        let s = self.cell_size;
        let (mut cx, mut cy) = self.cell_of(ax, ay);
        if !self.is_free_cell(cx, cy) {
            return false;
        }
        let (ex, ey) = self.cell_of(bx, by);
        let dx = bx - ax;
        let dy = by - ay;
        let step_x: i64 = if dx > 0.0 { 1 } else if dx < 0.0 { -1 } else { 0 };
        let step_y: i64 = if dy > 0.0 { 1 } else if dy < 0.0 { -1 } else { 0 };
        let boundary = |c: i64, d: i64| if d > 0 { (c + 1) as f64 * s } else { c as f64 * s };
        let mut t_max_x = if step_x != 0 { (boundary(cx, step_x) - ax) / dx } else { f64::INFINITY };
        let mut t_max_y = if step_y != 0 { (boundary(cy, step_y) - ay) / dy } else { f64::INFINITY };
        let t_dx = if step_x != 0 { s / dx.abs() } else { f64::INFINITY };
        let t_dy = if step_y != 0 { s / dy.abs() } else { f64::INFINITY };
        let limit = (ex - cx).abs() + (ey - cy).abs() + 2;
        for _ in 0..limit {
            if (cx, cy) == (ex, ey) {
                break;
            }
            let t_next = t_max_x.min(t_max_y);
            if t_next > 1.0 {
                break;
            }
            if (t_max_x - t_max_y).abs() <= 1e-12 {
                if !self.is_free_cell(cx + step_x, cy) || !self.is_free_cell(cx, cy + step_y) {
                    return false;
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
            if !self.is_free_cell(cx, cy) {
                return false;
            }
        }
        self.is_free_cell(ex, ey)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Forward,
    TurnLeft,
    TurnRight,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Forward, Action::TurnLeft, Action::TurnRight];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Forward => "forward",
            Action::TurnLeft => "left",
            Action::TurnRight => "right",
        }
    }

    pub fn is_turn(self) -> bool {
        !matches!(self, Action::Forward)
    }

    /// The opposite turn; `None` for forward, which has no in-place inverse.
    pub fn inverse_turn(self) -> Option<Action> {
        match self {
            Action::Forward => None,
            Action::TurnLeft => Some(Action::TurnRight),
            Action::TurnRight => Some(Action::TurnLeft),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" | "move_forward" | "F" => Ok(Action::Forward),
            "left" | "turn_left" | "L" => Ok(Action::TurnLeft),
            "right" | "turn_right" | "R" => Ok(Action::TurnRight),
            other => Err(Error::Format(format!("unknown action `{other}`"))),
        }
    }
}

/// Step length and turn angle of the agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Locomotion {
    pub step: f64,
    pub turn: u16,
}

impl Locomotion {
    pub const FINE: Locomotion = Locomotion { step: 0.25, turn: 10 };
    pub const COARSE: Locomotion = Locomotion { step: 0.30, turn: 30 };

    pub fn new(step: f64, turn: u16) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Structural(format!("step size {step} must be positive")));
        }
        if turn == 0 || 360 % turn != 0 {
            return Err(Error::Structural(format!("turn angle {turn} must divide 360")));
        }
        Ok(Locomotion { step, turn })
    }

    /// Number of turns for a half revolution.
    pub fn half_turn(&self) -> usize {
        180 / self.turn as usize
    }
}

impl Default for Locomotion {
    fn default() -> Self {
        Locomotion::FINE
    }
}

impl fmt::Display for Locomotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}:{}", self.step, self.turn)
    }
}

impl FromStr for Locomotion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| Error::Format(format!("locomotion `{s}` is not step:turn")))?;
        let step = a.trim().parse().map_err(|_| Error::Format(format!("bad step size `{a}`")))?;
        let turn = b.trim().parse().map_err(|_| Error::Format(format!("bad turn angle `{b}`")))?;
        Locomotion::new(step, turn)
    }
}

/// Agent state: continuous position and a heading in whole degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: u16,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: u16) -> Self {
        Pose {
            x,
            y,
            heading: heading % 360,
        }
    }

    pub fn at_cell(world: &World, col: usize, row: usize, heading: u16) -> Self {
        let (x, y) = world.cell_center(col, row);
        Pose::new(x, y, heading)
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    pub fn distance_to(&self, other: &Pose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_valid(&self, world: &World) -> bool {
        self.heading < 360 && world.is_free_point(self.x, self.y)
    }
}

/// Panoramic range scan taken at a pose.
///
/// Rays are indexed by absolute world bearing (`ray i` points at `5°·i`). The
/// agent's heading at capture time is kept so the egocentric panorama a
/// body-mounted camera would see can be recovered with [`Observation::egocentric`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub depths: Vec<f64>,
    pub textures: Vec<u8>,
    pub heading: u16,
}

impl Observation {
    /// Rays re-indexed relative to the heading: ray 0 looks straight ahead.
    pub fn egocentric(&self) -> (Vec<f64>, Vec<u8>) {
        let n = self.depths.len();
        let shift = (self.heading as usize / RAY_SPACING_DEG as usize) % n.max(1);
        let depths = (0..n).map(|i| self.depths[(i + shift) % n]).collect();
        let textures = (0..n).map(|i| self.textures[(i + shift) % n]).collect();
        (depths, textures)
    }

    /// Depth along the current heading.
    pub fn forward_depth(&self) -> f64 {
        let shift = self.heading as usize / RAY_SPACING_DEG as usize;
        self.depths[shift % self.depths.len()]
    }
}
