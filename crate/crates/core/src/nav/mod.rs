//! Image-goal navigation over a completed topological map.

mod route;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expert::reachable_mask;
use crate::rng;
use crate::topo::{sector_descriptors, vlad_encode, BallTree, TopoGraph};
use crate::world::{geodesic_distance, raycast_observe, Locomotion, Observation, Pose, World};

pub use route::{edge_weight, execute_route, plan_route, route_actions, Execution, Route, RouteStep};

pub const SUCCESS_RADIUS: f64 = 0.5;
pub const MIN_GEODESIC: f64 = 2.0;

/// Place recognition against a map's stored VLADs.
pub struct Localizer<'g> {
    graph: &'g TopoGraph,
    tree: BallTree,
}

impl<'g> Localizer<'g> {
    pub fn new(graph: &'g TopoGraph) -> Result<Self> {
        if graph.is_empty() {
            return Err(Error::Structural("cannot localize on an empty map".into()));
        }
        Ok(Localizer {
            graph,
            tree: graph.ball_tree()?,
        })
    }

    /// Nearest node by VLAD distance; ties go to the lower id.
    pub fn localize(&self, obs: &Observation) -> Result<usize> {
        let v = vlad_encode(&sector_descriptors(obs), &self.graph.codebook)?;
        Ok(self.tree.query(&v.values, 1)?[0].0)
    }
}

pub fn localize(graph: &TopoGraph, obs: &Observation) -> Result<usize> {
    Localizer::new(graph)?.localize(obs)
}

/// How start and goal nodes are found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Localization {
    /// Start and goal are map nodes, placed at their recorded poses; the
    /// node ids are known exactly.
    SelfRetrieval,
    /// Random reachable poses, localized from their observations.
    Visual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavEpisode {
    pub start: Pose,
    pub goal: Pose,
    pub src: usize,
    pub dst: usize,
    /// Geodesic start-goal distance (m).
    pub l: f64,
    /// Executed path length (m).
    pub p: f64,
    pub success: bool,
    pub actions: usize,
}

impl NavEpisode {
    pub fn spl(&self) -> f64 {
        spl_term(self.success, self.l, self.p)
    }
}

pub fn spl_term(success: bool, l: f64, p: f64) -> f64 {
    if success {
        l / p.max(l)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavMetrics {
    pub success_rate: f64,
    pub spl: f64,
    pub episodes: Vec<NavEpisode>,
}

impl NavMetrics {
    pub fn from_episodes(episodes: Vec<NavEpisode>) -> Self {
        let n = episodes.len().max(1) as f64;
        NavMetrics {
            success_rate: episodes.iter().filter(|e| e.success).count() as f64 / n,
            spl: episodes.iter().map(NavEpisode::spl).sum::<f64>() / n,
            episodes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavConfig {
    pub episodes: usize,
    pub seed: u64,
    pub localization: Localization,
    pub uniform_weights: bool,
    pub locomotion: Locomotion,
}

const MAX_RESAMPLES: usize = 10_000;

/// Samples start/goal pairs at least [`MIN_GEODESIC`] apart, routes between
/// their nodes and executes open loop; success means ending within
/// [`SUCCESS_RADIUS`] of the goal.
pub fn evaluate_navigation(world: &World, graph: &TopoGraph, config: &NavConfig) -> Result<NavMetrics> {
    let localizer = Localizer::new(graph)?;
    let free: Vec<usize> = reachable_mask(world)?.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect();
    let loco = &config.locomotion;
    let mut out = Vec::with_capacity(config.episodes);
    for i in 0..config.episodes {
        let mut r = rng::stream(config.seed, i as u64);
        let mut sampled = None;
        for _ in 0..MAX_RESAMPLES {
            let (start, goal, src, dst) = match config.localization {
                Localization::SelfRetrieval => {
                    let (s, g) = (r.random_range(0..graph.len()), r.random_range(0..graph.len()));
                    (graph.debug_pose(s), graph.debug_pose(g), Some(s), Some(g))
                }
                Localization::Visual => {
                    let mut pick = || {
                        let (c, row) = world.col_row(free[r.random_range(0..free.len())]);
                        let heading = r.random_range(0..360 / loco.turn) * loco.turn;
                        Pose::at_cell(world, c, row, heading)
                    };
                    (pick(), pick(), None, None)
                }
            };
            match geodesic_distance(world, start.position(), goal.position()) {
                Some(l) if l >= MIN_GEODESIC => {
                    sampled = Some((start, goal, src, dst, l));
                    break;
                }
                _ => continue,
            }
        }
        let (start, goal, src, dst, l) =
            sampled.ok_or_else(|| Error::Structural(format!("no start/goal pair {MIN_GEODESIC} m apart")))?;
        let src = match src {
            Some(s) => s,
            None => localizer.localize(&raycast_observe(world, &start))?,
        };
        let dst = match dst {
            Some(d) => d,
            None => localizer.localize(&raycast_observe(world, &goal))?,
        };
        let episode = match plan_route(graph, src, dst, config.uniform_weights) {
            Ok(route) => {
                let exec = execute_route(world, &start, &route, loco);
                let end = exec.terminal();
                NavEpisode {
                    start,
                    goal,
                    src,
                    dst,
                    l,
                    p: exec.path_length,
                    success: (end.x - goal.x).hypot(end.y - goal.y) <= SUCCESS_RADIUS,
                    actions: exec.actions.len(),
                }
            }
            Err(Error::NoRoute { .. }) => NavEpisode {
                start,
                goal,
                src,
                dst,
                l,
                p: 0.0,
                success: false,
                actions: 0,
            },
            Err(e) => return Err(e),
        };
        out.push(episode);
    }
    Ok(NavMetrics::from_episodes(out))
}

pub fn write_metrics(metrics: &NavMetrics) -> Result<String> {
    Ok(serde_json::to_string_pretty(metrics)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explore::{run_random_walk, run_scripted};
    use crate::model::{ModelBundle, ModelDims, SupervisionMode};
    use crate::topo::{build_map, VprParams};
    use crate::world::{load_world, Action};
    use proptest::prelude::*;

    fn bundle() -> ModelBundle {
        ModelBundle::new(ModelDims::reduced(8), SupervisionMode::Full, &mut rng::seeded(3))
    }

    #[test]
    fn spl_formula() {
        assert_eq!(spl_term(true, 4.0, 5.0), 0.8);
        assert_eq!(spl_term(true, 4.0, 4.0), 1.0);
        assert_eq!(spl_term(false, 4.0, 4.0), 0.0);
        let m = NavMetrics::from_episodes(Vec::new());
        assert_eq!((m.success_rate, m.spl), (0.0, 0.0));
    }

    proptest! {
        #[test]
        fn spl_never_exceeds_success(runs in prop::collection::vec((any::<bool>(), 0.1f64..20.0, 0.0f64..40.0), 1..50)) {
            let eps: Vec<NavEpisode> = runs.iter().map(|&(s, l, p)| NavEpisode {
                start: Pose::new(0.0, 0.0, 0), goal: Pose::new(0.0, 0.0, 0), src: 0, dst: 0, l, p, success: s, actions: 0,
            }).collect();
            let m = NavMetrics::from_episodes(eps);
            prop_assert!(m.spl <= m.success_rate + 1e-12);
            prop_assert!(m.success_rate <= 1.0);
        }
    }

    #[test]
    fn self_localization_is_identity() {
        let w = load_world("0000000000\n0........0\n0..1..2..0\n0........0\n0....3...0\n0000000000\n").unwrap();
        let ep = run_random_walk(&w, 150, 2, &Locomotion::FINE).unwrap();
        let g = build_map(&ep, &bundle(), &VprParams::default(), 1).unwrap();
        let loc = Localizer::new(&g).unwrap();
        for (i, obs) in ep.observations.iter().enumerate() {
            let found = loc.localize(obs).unwrap();
            // Identical observations share a VLAD; the lowest id wins.
            assert_eq!(g.nodes[found].vlad, g.nodes[i].vlad);
            assert!(found <= i);
        }
    }

    #[test]
    fn straight_corridor_replay() {
        let w = load_world(&format!("{}\n0{}0\n0{}0\n{}\n", "0".repeat(40), ".".repeat(38), ".".repeat(38), "0".repeat(40)))
            .unwrap();
        let loco = Locomotion::FINE;
        let start = Pose::new(0.5, 0.4, 0);
        let mut actions = vec![Action::Forward; 20];
        actions.extend([Action::TurnLeft, Action::TurnLeft, Action::Forward]);
        let ep = run_scripted(&w, &start, &actions, 0, &loco).unwrap();
        let g = build_map(&ep, &bundle(), &VprParams::default(), 1).unwrap();
        let last = g.len() - 1;
        let route = plan_route(&g, 0, last, false).unwrap();
        let exec = execute_route(&w, &start, &route, &loco);
        assert_eq!(exec.actions.len(), last);
        assert_eq!(exec.trace.len(), last + 1);
        let (x, y) = g.debug_position(last);
        assert!((exec.terminal().x - x).hypot(exec.terminal().y - y) < 0.25);
        // And back again along the chain.
        let back = plan_route(&g, last, 0, false).unwrap();
        let exec = execute_route(&w, &g.debug_pose(last), &back, &loco);
        assert!(exec.terminal().distance_to(&start) < 0.25);
        assert_eq!(exec.terminal().heading, start.heading);
        let empty = execute_route(&w, &start, &Route::default(), &loco);
        assert_eq!(empty.terminal(), start);
    }
}
