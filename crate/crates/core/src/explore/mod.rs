//! Exploration episodes: a forward-biased bootstrap, the learned
//! hallucinate-then-act loop with a short-range collision override, and the
//! uniform random-walk baseline.

mod episode;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::expert::reachable_mask;
use crate::model::ModelBundle;
use crate::rng::{self, Rng};
use crate::world::{raycast_observe, step_pose, Action, CoverageTracker, Locomotion, Observation, Pose, World};

pub use episode::{read_episode, write_episode, EpisodeLog};

/// Label recorded for random-walk episodes.
pub const RANDOM_WALK: &str = "random-walk";

const START_STREAM: u64 = 0;
const COIN_STREAM: u64 = 1;

/// Seeded start pose: the world's start marker when present, else a uniformly
/// chosen reachable cell centre; heading uniform over the turn lattice.
pub fn episode_start(world: &World, seed: u64, loco: &Locomotion) -> Result<Pose> {
    let mut rng = rng::stream(seed, START_STREAM);
    let heading = rng.random_range(0..360 / loco.turn) * loco.turn;
    if let Some((c, r)) = world.start() {
        return Ok(Pose::at_cell(world, c, r, heading));
    }
    let mask = reachable_mask(world)?;
    let cells: Vec<usize> = mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect();
    let idx = cells[rng.random_range(0..cells.len())];
    let (c, r) = world.col_row(idx);
    Ok(Pose::at_cell(world, c, r, heading))
}

/// Mutable state shared by every policy.
struct Recorder<'w> {
    world: &'w World,
    loco: Locomotion,
    pose: Pose,
    tracker: CoverageTracker,
    log: EpisodeLog,
}

impl<'w> Recorder<'w> {
    fn new(world: &'w World, start: Pose, loco: Locomotion, seed: u64, policy: &str) -> Self {
        Recorder {
            world,
            loco,
            pose: start,
            tracker: CoverageTracker::new(world),
            log: EpisodeLog {
                seed,
                world_id: world.name.clone(),
                locomotion: loco,
                policy: policy.to_string(),
                poses: Vec::new(),
                actions: Vec::new(),
                observations: Vec::new(),
                coverage: Vec::new(),
                total_free_area: world.total_free_area(),
                meta: Default::default(),
            },
        }
    }

    /// Observes at the current pose, records `action` and applies it.
    fn observe(&mut self) -> &Observation {
        let obs = raycast_observe(self.world, &self.pose);
        self.tracker.update(self.world, self.pose.x, self.pose.y);
        self.log.poses.push(self.pose);
        self.log.observations.push(obs);
        self.log.coverage.push(self.tracker.covered_area());
        self.log.observations.last().unwrap()
    }

    fn act(&mut self, action: Action) -> Pose {
        let before = self.pose;
        self.log.actions.push(action);
        self.pose = step_pose(self.world, &self.pose, action, &self.loco);
        before
    }

    fn coin_turn(rng: &mut Rng) -> Action {
        if rng.random_bool(0.5) {
            Action::TurnLeft
        } else {
            Action::TurnRight
        }
    }
}

/// Forward until a forward move is obstructed (it slides or stays put), then
/// one seeded coin-flip turn. Records exactly `m` steps.
pub fn bootstrap(world: &World, start: &Pose, m: usize, seed: u64, loco: &Locomotion) -> Result<EpisodeLog> {
    if !start.is_valid(world) {
        return Err(Error::Structural(format!("start pose ({:.3}, {:.3}) is not free", start.x, start.y)));
    }
    let mut rec = Recorder::new(world, *start, *loco, seed, "bootstrap");
    let mut coins = rng::stream(seed, COIN_STREAM);
    run_bootstrap(&mut rec, m, &mut coins);
    Ok(rec.log)
}

fn run_bootstrap(rec: &mut Recorder<'_>, m: usize, coins: &mut Rng) {
    let mut blocked = false;
    for _ in 0..m {
        rec.observe();
        let action = if blocked { Recorder::coin_turn(coins) } else { Action::Forward };
        let before = rec.act(action);
        blocked = action == Action::Forward && before.distance_to(&rec.pose) < rec.loco.step * (1.0 - 1e-9);
    }
}

/// Learned exploration for `budget` steps, bootstrap included.
pub fn run_exploration(
    world: &World,
    bundle: &ModelBundle,
    budget: usize,
    seed: u64,
    loco: &Locomotion,
) -> Result<EpisodeLog> {
    let start = episode_start(world, seed, loco)?;
    run_exploration_from(world, bundle, &start, budget, seed, loco)
}

pub fn run_exploration_from(
    world: &World,
    bundle: &ModelBundle,
    start: &Pose,
    budget: usize,
    seed: u64,
    loco: &Locomotion,
) -> Result<EpisodeLog> {
    let m = bundle.memory();
    if budget <= m {
        return Err(Error::Structural(format!("budget {budget} must exceed the {m}-step bootstrap")));
    }
    let mut rec = Recorder::new(world, *start, *loco, seed, bundle.mode.name());
    let mut coins = rng::stream(seed, COIN_STREAM);
    run_bootstrap(&mut rec, m, &mut coins);
    let mut features: Vec<Vec<f64>> = rec.log.observations.iter().map(|o| bundle.encode(o)).collect();
    let mut overrides = 0usize;
    for t in m..budget {
        let obs = rec.observe();
        let forward_depth = obs.forward_depth();
        features.push(bundle.encode(obs));
        let window = &features[t + 1 - m..=t];
        let history = if bundle.mode.uses_history() {
            bundle.history_feature(&features[..t + 1 - m])
        } else {
            None
        };
        let mut action = bundle.act(window, history.as_deref())?;
        if action == Action::Forward && forward_depth < 2.0 * loco.step {
            action = Recorder::coin_turn(&mut coins);
            overrides += 1;
        }
        rec.act(action);
    }
    rec.log.meta.insert("overrides".into(), overrides.to_string());
    Ok(rec.log)
}

/// Uniformly random actions from the seeded generator.
pub fn run_random_walk(world: &World, budget: usize, seed: u64, loco: &Locomotion) -> Result<EpisodeLog> {
    if budget == 0 {
        return Err(Error::Structural("random walk needs a positive budget".into()));
    }
    let start = episode_start(world, seed, loco)?;
    let mut rec = Recorder::new(world, start, *loco, seed, RANDOM_WALK);
    let mut rng = rng::stream(seed, COIN_STREAM);
    for _ in 0..budget {
        rec.observe();
        let action = Action::ALL[rng.random_range(0..3)];
        rec.act(action);
    }
    Ok(rec.log)
}

/// Replays a fixed action list, recording an episode of `actions.len()` steps.
pub fn run_scripted(world: &World, start: &Pose, actions: &[Action], seed: u64, loco: &Locomotion) -> Result<EpisodeLog> {
    if !start.is_valid(world) {
        return Err(Error::Structural(format!("start pose ({:.3}, {:.3}) is not free", start.x, start.y)));
    }
    let mut rec = Recorder::new(world, *start, *loco, seed, "scripted");
    for &a in actions {
        rec.observe();
        rec.act(a);
    }
    Ok(rec.log)
}
