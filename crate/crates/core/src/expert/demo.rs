use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng;
use crate::world::{distance_field, raycast_observe, step_pose, Action, Locomotion, Observation, Pose, World, RAY_COUNT};

use super::anchors::AnchorSet;
use super::planner::{plan_to_cell, replay};

/// Observation/action pairs recorded by the expert. The last step holds the
/// terminal observation and no action.
#[derive(Debug, Clone, PartialEq)]
pub struct Demonstration {
    pub world_id: String,
    pub seed: u64,
    pub locomotion: Locomotion,
    pub start: Pose,
    pub steps: Vec<(Observation, Option<Action>)>,
    /// Anchor indices in the order they were targeted.
    pub visit_order: Vec<usize>,
    /// Free-form header entries carried through the file format.
    pub meta: BTreeMap<String, String>,
}

impl Demonstration {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn actions(&self) -> Vec<Action> {
        self.steps.iter().filter_map(|(_, a)| *a).collect()
    }

    pub fn observations(&self) -> Vec<&Observation> {
        self.steps.iter().map(|(o, _)| o).collect()
    }

    /// Poses visited, recomputed from the start pose.
    pub fn poses(&self, world: &World) -> Vec<Pose> {
        replay(world, &self.start, &self.actions(), &self.locomotion)
    }
}

/// Walks to the geodesically nearest unvisited anchor until all are visited.
pub fn generate_demonstration(world: &World, anchors: &AnchorSet, seed: u64, loco: &Locomotion) -> Result<Demonstration> {
    if anchors.is_empty() {
        return Err(Error::Structural("demonstration needs at least one anchor".into()));
    }
    let mut rng = rng::seeded(seed);
    let first = rng.random_range(0..anchors.len());
    let heading_slots = 360 / loco.turn;
    let heading = rng.random_range(0..heading_slots) * loco.turn;
    let (sx, sy) = anchors.positions[first];
    let start = Pose::new(sx, sy, heading);

    let mut visited = vec![false; anchors.len()];
    visited[first] = true;
    let mut visit_order = vec![first];
    let mut pose = start;
    let mut steps = Vec::new();
    let mut current = anchors.cells[first];
    while let Some(next) = nearest_unvisited(world, current, anchors, &visited) {
        let plan = plan_to_cell(world, &pose, anchors.positions[next], loco)?;
        for action in plan {
            steps.push((raycast_observe(world, &pose), Some(action)));
            pose = step_pose(world, &pose, action, loco);
        }
        visited[next] = true;
        visit_order.push(next);
        current = anchors.cells[next];
    }
    steps.push((raycast_observe(world, &pose), None));
    Ok(Demonstration {
        world_id: world.name.clone(),
        seed,
        locomotion: *loco,
        start,
        steps,
        visit_order,
        meta: BTreeMap::new(),
    })
}

fn nearest_unvisited(world: &World, from: usize, anchors: &AnchorSet, visited: &[bool]) -> Option<usize> {
    let field = distance_field(world, from);
    let mut best: Option<(u32, usize)> = None;
    for (i, &cell) in anchors.cells.iter().enumerate() {
        if visited[i] {
            continue;
        }
        let Some(h) = field.hops(cell) else { continue };
        if best.is_none_or(|(bh, _)| h < bh) {
            best = Some((h, i));
        }
    }
    best.map(|(_, i)| i)
}

const DEMO_MAGIC: &str = "topowalk-demo";

pub fn write_demonstration(demo: &Demonstration) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "{DEMO_MAGIC} world={} seed={} locomotion={} start={},{},{} steps={}",
        demo.world_id,
        demo.seed,
        demo.locomotion,
        demo.start.x,
        demo.start.y,
        demo.start.heading,
        demo.steps.len()
    );
    if !demo.visit_order.is_empty() {
        let order: Vec<String> = demo.visit_order.iter().map(|i| i.to_string()).collect();
        let _ = write!(out, " visits={}", order.join(","));
    }
    for (k, v) in &demo.meta {
        let _ = write!(out, " {k}={v}");
    }
    out.push_str("\nstep,action\n");
    for (i, (_, a)) in demo.steps.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", a.map_or("-", |a| a.name()));
    }
    out.push_str("observations\n");
    for (i, (o, _)) in demo.steps.iter().enumerate() {
        write_observation(&mut out, i, o);
    }
    out
}

/// `index heading | depths | textures` on one line.
pub(crate) fn write_observation(out: &mut String, index: usize, o: &Observation) {
    let _ = write!(out, "{index} {} |", o.heading);
    for d in &o.depths {
        let _ = write!(out, " {d}");
    }
    out.push_str(" |");
    for t in &o.textures {
        let _ = write!(out, " {t}");
    }
    out.push('\n');
}

pub(crate) fn parse_observation(line: &str, lineno: usize, expect: usize) -> Result<Observation> {
    let mut parts = line.split('|');
    let (head, depths, textures) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
        (Some(h), Some(d), Some(t), None) => (h, d, t),
        _ => return Err(Error::parse(lineno, 1, "observation needs three `|`-separated fields")),
    };
    let mut head = head.split_whitespace();
    let index: usize = head
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(lineno, 1, "missing step index"))?;
    if index != expect {
        return Err(Error::parse(lineno, 1, format!("step {index} out of order, expected {expect}")));
    }
    let heading: u16 = head
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(lineno, 1, "missing heading"))?;
    let depths: Vec<f64> = depths
        .split_whitespace()
        .map(|s| s.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::parse(lineno, 1, format!("bad depth: {e}")))?;
    let textures: Vec<u8> = textures
        .split_whitespace()
        .map(|s| s.parse::<u8>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::parse(lineno, 1, format!("bad texture: {e}")))?;
    if depths.len() != RAY_COUNT || textures.len() != RAY_COUNT {
        return Err(Error::parse(lineno, 1, format!("expected {RAY_COUNT} depths and textures")));
    }
    if depths.iter().any(|d| !d.is_finite()) {
        return Err(Error::parse(lineno, 1, "non-finite depth"));
    }
    Ok(Observation { depths, textures, heading })
}

/// Splits `magic k=v k=v ...` into a map.
pub(crate) fn parse_header(line: &str, magic: &str) -> Result<BTreeMap<String, String>> {
    let mut fields = line.split_whitespace();
    if fields.next() != Some(magic) {
        return Err(Error::parse(1, 1, format!("expected `{magic}` header")));
    }
    let mut map = BTreeMap::new();
    for f in fields {
        let (k, v) = f
            .split_once('=')
            .ok_or_else(|| Error::parse(1, 1, format!("header field `{f}` is not key=value")))?;
        map.insert(k.to_string(), v.to_string());
    }
    Ok(map)
}

pub(crate) fn take<T: std::str::FromStr>(map: &mut BTreeMap<String, String>, key: &str) -> Result<T> {
    let v = map.remove(key).ok_or_else(|| Error::parse(1, 1, format!("header lacks `{key}`")))?;
    v.parse().map_err(|_| Error::parse(1, 1, format!("header `{key}` has bad value `{v}`")))
}

pub fn read_demonstration(text: &str) -> Result<Demonstration> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, 1, "empty demonstration file"))?;
    let mut map = parse_header(header, DEMO_MAGIC)?;
    let world_id: String = take(&mut map, "world")?;
    let seed: u64 = take(&mut map, "seed")?;
    let locomotion: Locomotion = take(&mut map, "locomotion")?;
    let start: String = take(&mut map, "start")?;
    let n: usize = take(&mut map, "steps")?;
    let s: Vec<&str> = start.split(',').collect();
    let start = match s.as_slice() {
        [x, y, h] => match (x.parse(), y.parse(), h.parse()) {
            (Ok(x), Ok(y), Ok(h)) => Pose::new(x, y, h),
            _ => return Err(Error::parse(1, 1, "bad start pose")),
        },
        _ => return Err(Error::parse(1, 1, "start pose needs x,y,heading")),
    };
    let visit_order = match map.remove("visits") {
        Some(v) => v
            .split(',')
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(1, 1, "bad visit order"))?,
        None => Vec::new(),
    };
    match lines.next() {
        Some((_, "step,action")) => {}
        Some((l, _)) => return Err(Error::parse(l, 1, "expected `step,action`")),
        None => return Err(Error::parse(2, 1, "truncated demonstration")),
    }
    let mut actions = Vec::with_capacity(n);
    for i in 0..n {
        let (l, line) = lines.next().ok_or_else(|| Error::parse(i + 3, 1, "missing action row"))?;
        let (idx, a) = line.split_once(',').ok_or_else(|| Error::parse(l, 1, "expected `step,action`"))?;
        if idx.parse::<usize>().ok() != Some(i) {
            return Err(Error::parse(l, 1, format!("expected step {i}")));
        }
        let action = match a {
            "-" => None,
            other => Some(other.parse::<Action>().map_err(|e| Error::parse(l, idx.len() + 2, e.to_string()))?),
        };
        actions.push(action);
    }
    match lines.next() {
        Some((_, "observations")) => {}
        Some((l, _)) => return Err(Error::parse(l, 1, "expected `observations`")),
        None => return Err(Error::parse(n + 3, 1, "missing observation block")),
    }
    let mut steps = Vec::with_capacity(n);
    for (i, action) in actions.into_iter().enumerate() {
        let (l, line) = lines.next().ok_or_else(|| Error::parse(n + 4 + i, 1, "missing observation"))?;
        steps.push((parse_observation(line, l, i)?, action));
    }
    if let Some((l, line)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::parse(l, 1, format!("trailing content `{line}`")));
    }
    Ok(Demonstration {
        world_id,
        seed,
        locomotion,
        start,
        steps,
        visit_order,
        meta: map,
    })
}
