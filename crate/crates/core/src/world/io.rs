use std::fmt::Write as _;

use super::{Cell, World, DEFAULT_CELL_SIZE};
use crate::error::{Error, Result};

/// Parses an ASCII grid: `.` free, `0`-`7` textured wall, `S` free start cell.
/// Leading `#` lines are comments; `# world <name>` and `# cell-size <m>` are
/// recognised.
pub fn load_world(text: &str) -> Result<World> {
    let mut name = String::from("world");
    let mut cell_size = DEFAULT_CELL_SIZE;
    let mut rows: Vec<(usize, &str)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim_end_matches('\r');
        if rows.is_empty() && line.starts_with('#') {
            let body = line.trim_start_matches('#').trim();
            if let Some(n) = body.strip_prefix("world ") {
                name = n.trim().to_string();
            } else if let Some(s) = body.strip_prefix("cell-size ") {
                cell_size = s
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(line_no, 1, format!("bad cell size `{}`", s.trim())))?;
            }
            continue;
        }
        if line.is_empty() {
            if rows.is_empty() {
                continue;
            }
            // Blank lines may only trail the grid.
            rows.push((line_no, line));
            continue;
        }
        rows.push((line_no, line));
    }
    while rows.last().is_some_and(|(_, l)| l.is_empty()) {
        rows.pop();
    }
    let Some(&(_, first)) = rows.first() else {
        return Err(Error::parse(1, 1, "no grid rows"));
    };
    let width = first.chars().count();
    let height = rows.len();
    let mut cells = Vec::with_capacity(width * height);
    let mut start = None;
    for (r, &(line_no, line)) in rows.iter().enumerate() {
        let len = line.chars().count();
        if len != width {
            return Err(Error::parse(
                line_no,
                len.min(width) + 1,
                format!("ragged row: expected {width} columns, found {len}"),
            ));
        }
        for (c, ch) in line.chars().enumerate() {
            let cell = match ch {
                '.' => Cell::Free,
                'S' => {
                    if start.replace((c, r)).is_some() {
                        return Err(Error::parse(line_no, c + 1, "second start marker `S`"));
                    }
                    Cell::Free
                }
                '0'..='7' => Cell::Wall(ch as u8 - b'0'),
                other => return Err(Error::parse(line_no, c + 1, format!("unknown character `{other}`"))),
            };
            cells.push(cell);
        }
    }
    World::new(name, width, height, cell_size, cells, start)
}

pub fn save_world(world: &World) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# world {}", world.name);
    let _ = writeln!(out, "# cell-size {}", world.cell_size());
    for r in 0..world.height() {
        for c in 0..world.width() {
            let ch = match world.cells()[world.index(c, r)] {
                Cell::Free if world.start() == Some((c, r)) => 'S',
                Cell::Free => '.',
                Cell::Wall(t) => (b'0' + t) as char,
            };
            out.push(ch);
        }
        out.push('\n');
    }
    out
}
