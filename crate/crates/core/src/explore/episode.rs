use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::expert::{parse_header, parse_observation, take, write_observation};
use crate::world::{Action, Locomotion, Observation, Pose};

/// One exploration run. `poses[t]` is where `observations[t]` was taken and
/// `coverage[t]` the covered area (m²) after visiting it; `actions[t]` was
/// then executed.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub seed: u64,
    pub world_id: String,
    pub locomotion: Locomotion,
    /// Supervision mode name, `random-walk` or `bootstrap`.
    pub policy: String,
    pub poses: Vec<Pose>,
    pub actions: Vec<Action>,
    pub observations: Vec<Observation>,
    pub coverage: Vec<f64>,
    pub total_free_area: f64,
    pub meta: BTreeMap<String, String>,
}

impl EpisodeLog {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn final_coverage(&self) -> f64 {
        self.coverage.last().copied().unwrap_or(0.0)
    }

    pub fn final_ratio(&self) -> f64 {
        if self.total_free_area > 0.0 {
            self.final_coverage() / self.total_free_area
        } else {
            0.0
        }
    }

    /// Coverage ratio after each step.
    pub fn ratio_curve(&self) -> Vec<f64> {
        self.coverage.iter().map(|c| c / self.total_free_area).collect()
    }
}

const EPISODE_MAGIC: &str = "topowalk-episode";

pub fn write_episode(log: &EpisodeLog) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "{EPISODE_MAGIC} world={} seed={} locomotion={} policy={} steps={} free_area={}",
        log.world_id,
        log.seed,
        log.locomotion,
        log.policy,
        log.actions.len(),
        log.total_free_area
    );
    for (k, v) in &log.meta {
        let _ = write!(out, " {k}={v}");
    }
    out.push_str("\nstep,x,y,heading,action,covered\n");
    for (i, a) in log.actions.iter().enumerate() {
        let p = &log.poses[i];
        let _ = writeln!(out, "{i},{},{},{},{},{}", p.x, p.y, p.heading, a.name(), log.coverage[i]);
    }
    out.push_str("observations\n");
    for (i, o) in log.observations.iter().enumerate() {
        write_observation(&mut out, i, o);
    }
    out
}

pub fn read_episode(text: &str) -> Result<EpisodeLog> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, 1, "empty episode file"))?;
    let mut map = parse_header(header, EPISODE_MAGIC)?;
    let world_id: String = take(&mut map, "world")?;
    let seed: u64 = take(&mut map, "seed")?;
    let locomotion: Locomotion = take(&mut map, "locomotion")?;
    let policy: String = take(&mut map, "policy")?;
    let n: usize = take(&mut map, "steps")?;
    let total_free_area: f64 = take(&mut map, "free_area")?;
    match lines.next() {
        Some((_, "step,x,y,heading,action,covered")) => {}
        Some((l, _)) => return Err(Error::parse(l, 1, "expected trajectory header")),
        None => return Err(Error::parse(2, 1, "truncated episode")),
    }
    let mut poses = Vec::with_capacity(n);
    let mut actions = Vec::with_capacity(n);
    let mut coverage = Vec::with_capacity(n);
    for i in 0..n {
        let (l, line) = lines.next().ok_or_else(|| Error::parse(i + 3, 1, "missing trajectory row"))?;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(Error::parse(l, 1, format!("expected 6 fields, got {}", f.len())));
        }
        if f[0].parse::<usize>().ok() != Some(i) {
            return Err(Error::parse(l, 1, format!("expected step {i}")));
        }
        let num = |k: usize| -> Result<f64> {
            f[k].parse().map_err(|_| Error::parse(l, 1, format!("bad number `{}`", f[k])))
        };
        let heading: u16 = f[3].parse().map_err(|_| Error::parse(l, 1, format!("bad heading `{}`", f[3])))?;
        poses.push(Pose::new(num(1)?, num(2)?, heading));
        actions.push(f[4].parse::<Action>().map_err(|e| Error::parse(l, 1, e.to_string()))?);
        coverage.push(num(5)?);
    }
    match lines.next() {
        Some((_, "observations")) => {}
        Some((l, _)) => return Err(Error::parse(l, 1, "expected `observations`")),
        None => return Err(Error::parse(n + 3, 1, "missing observation block")),
    }
    let mut observations = Vec::with_capacity(n);
    for i in 0..n {
        let (l, line) = lines.next().ok_or_else(|| Error::parse(n + 4 + i, 1, "missing observation"))?;
        observations.push(parse_observation(line, l, i)?);
    }
    if let Some((l, line)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::parse(l, 1, format!("trailing content `{line}`")));
    }
    Ok(EpisodeLog {
        seed,
        world_id,
        locomotion,
        policy,
        poses,
        actions,
        observations,
        coverage,
        total_free_area,
        meta: map,
    })
}
