use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::topo::{EdgeKind, TopoGraph};
use crate::world::{step_pose, Action, Locomotion, Pose, World};

/// One traversed edge. `reversed` marks a temporal edge walked backwards.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteStep {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
    pub reversed: bool,
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Route {
    pub steps: Vec<RouteStep>,
    pub weight: u64,
}

impl Route {
    pub fn nodes(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.steps.iter().map(|s| s.from).collect();
        out.extend(self.steps.last().map(|s| s.to));
        out
    }
}

pub fn edge_weight(actions: &[Action], uniform: bool) -> u64 {
    if uniform {
        1
    } else {
        actions.len().max(1) as u64
    }
}

/// Traversable arcs per node: every stored edge forwards, temporal edges
/// also backwards at the same weight.
fn arcs(graph: &TopoGraph, uniform: bool) -> Vec<Vec<(usize, u64, usize, bool)>> {
    let mut adj = vec![Vec::new(); graph.len()];
    for (i, e) in graph.edges.iter().enumerate() {
        let w = edge_weight(&e.actions, uniform);
        adj[e.from].push((e.to, w, i, false));
        if e.kind == EdgeKind::Temporal {
            adj[e.to].push((e.from, w, i, true));
        }
    }
    for a in &mut adj {
        a.sort_by_key(|&(to, w, i, rev)| (to, w, i, rev));
    }
    adj
}

/// Dijkstra over the map. Equal-weight alternatives resolve to the one whose
/// predecessor was settled first (lower distance, then lower node id).
pub fn plan_route(graph: &TopoGraph, src: usize, dst: usize, uniform: bool) -> Result<Route> {
    let n = graph.len();
    if src >= n || dst >= n {
        return Err(Error::Structural(format!("route endpoints {src}, {dst} outside a {n}-node map")));
    }
    if src == dst {
        return Ok(Route::default());
    }
    let adj = arcs(graph, uniform);
    let mut dist = vec![u64::MAX; n];
    let mut prev: Vec<Option<(usize, usize, bool)>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::from([Reverse((0u64, src))]);
    dist[src] = 0;
    while let Some(Reverse((d, u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == dst {
            break;
        }
        for &(v, w, e, rev) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                prev[v] = Some((u, e, rev));
                heap.push(Reverse((nd, v)));
            }
        }
    }
    if dist[dst] == u64::MAX {
        return Err(Error::NoRoute { from: src, to: dst });
    }
    let mut steps = Vec::new();
    let mut at = dst;
    while let Some((u, e, rev)) = prev[at] {
        let edge = &graph.edges[e];
        steps.push(RouteStep {
            from: u,
            to: at,
            kind: edge.kind,
            reversed: rev,
            actions: edge.actions.clone(),
        });
        at = u;
    }
    steps.reverse();
    Ok(Route { steps, weight: dist[dst] })
}

/// Flat action list for a route. A run of backwards temporal edges is undone
/// by inverting its turns in reverse order; when the run contains forward
/// moves the agent first turns around and turns back at the end.
pub fn route_actions(route: &Route, loco: &Locomotion) -> Vec<Action> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < route.steps.len() {
        if !route.steps[i].reversed {
            out.extend(&route.steps[i].actions);
            i += 1;
            continue;
        }
        let mut run = Vec::new();
        while i < route.steps.len() && route.steps[i].reversed {
            run.extend(route.steps[i].actions.iter().rev());
            i += 1;
        }
        let turn_around = run.contains(&Action::Forward);
        if turn_around {
            out.extend(std::iter::repeat_n(Action::TurnLeft, loco.half_turn()));
        }
        out.extend(run.into_iter().map(|a| a.inverse_turn().unwrap_or(Action::Forward)));
        if turn_around {
            out.extend(std::iter::repeat_n(Action::TurnLeft, loco.half_turn()));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub actions: Vec<Action>,
    /// Poses after each action, start first.
    pub trace: Vec<Pose>,
    pub path_length: f64,
}

impl Execution {
    pub fn terminal(&self) -> Pose {
        *self.trace.last().expect("trace holds the start pose")
    }
}

/// Open-loop execution of the route's actions from `start`.
pub fn execute_route(world: &World, start: &Pose, route: &Route, loco: &Locomotion) -> Execution {
    let actions = route_actions(route, loco);
    let mut trace = Vec::with_capacity(actions.len() + 1);
    trace.push(*start);
    let mut path_length = 0.0;
    let mut pose = *start;
    for &a in &actions {
        let next = step_pose(world, &pose, a, loco);
        path_length += pose.distance_to(&next);
        pose = next;
        trace.push(pose);
    }
    Execution {
        actions,
        trace,
        path_length,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::topo::{synthetic_graph, Edge, VprParams};
    use rand::Rng as _;

    fn chain(n: usize) -> TopoGraph {
        synthetic_graph(vec![vec![0.0]; n], VprParams::default())
    }

    #[test]
    fn trivial_routes() {
        let g = chain(3);
        assert_eq!(plan_route(&g, 1, 1, false).unwrap(), Route::default());
        let r = plan_route(&g, 0, 2, false).unwrap();
        assert_eq!(r.weight, 2);
        assert_eq!(r.nodes(), vec![0, 1, 2]);
        let back = plan_route(&g, 2, 0, false).unwrap();
        assert!(back.steps.iter().all(|s| s.reversed));
        assert!(plan_route(&g, 0, 3, false).is_err());
    }

    #[test]
    fn disconnected_is_no_route() {
        let mut g = chain(4);
        g.edges.remove(1);
        assert!(matches!(plan_route(&g, 0, 3, false), Err(Error::NoRoute { .. })));
    }

    fn random_graph(n: usize, seed: u64) -> TopoGraph {
        let mut r = rng::seeded(seed);
        let mut g = chain(n);
        for e in &mut g.edges {
            e.actions = vec![Action::Forward; r.random_range(0..4)];
        }
        for _ in 0..r.random_range(0..2 * n) {
            let (a, b) = (r.random_range(0..n), r.random_range(0..n));
            if a != b {
                let len = r.random_range(0..7);
                g.edges.push(Edge {
                    from: a,
                    to: b,
                    kind: EdgeKind::Loop,
                    actions: vec![Action::TurnLeft; len],
                });
            }
        }
        g
    }

    /// Minimum weight over all simple paths by exhaustive DFS.
    fn brute_force(g: &TopoGraph, src: usize, dst: usize, uniform: bool) -> Option<u64> {
        let adj = arcs(g, uniform);
        fn dfs(adj: &[Vec<(usize, u64, usize, bool)>], u: usize, dst: usize, seen: &mut Vec<bool>, acc: u64, best: &mut Option<u64>) {
            if u == dst {
                *best = Some(best.map_or(acc, |b| b.min(acc)));
                return;
            }
            for &(v, w, _, _) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    dfs(adj, v, dst, seen, acc + w, best);
                    seen[v] = false;
                }
            }
        }
        let mut seen = vec![false; g.len()];
        seen[src] = true;
        let mut best = None;
        dfs(&adj, src, dst, &mut seen, 0, &mut best);
        best
    }

    #[test]
    fn dijkstra_matches_enumeration() {
        for seed in 0..200 {
            let mut r = rng::seeded(1000 + seed);
            let n = r.random_range(2..=12);
            let g = random_graph(n, seed);
            let (s, d) = (r.random_range(0..n), r.random_range(0..n));
            for uniform in [false, true] {
                let route = plan_route(&g, s, d, uniform).unwrap();
                assert_eq!(Some(route.weight), brute_force(&g, s, d, uniform), "seed {seed}");
                let summed: u64 = route.steps.iter().map(|st| edge_weight(&st.actions, uniform)).sum();
                assert_eq!(summed, route.weight);
            }
        }
    }

    #[test]
    fn loop_edges_never_lengthen_routes() {
        for seed in 0..20 {
            let g = random_graph(12, seed);
            let mut base = g.clone();
            base.edges.retain(|e| e.kind == EdgeKind::Temporal);
            let mut r = rng::seeded(seed);
            let (s, d) = (r.random_range(0..12), r.random_range(0..12));
            assert!(plan_route(&g, s, d, false).unwrap().weight <= plan_route(&base, s, d, false).unwrap().weight);
        }
    }

    #[test]
    fn unit_weights_give_hop_counts() {
        let g = random_graph(12, 77);
        for d in 0..12 {
            let r = plan_route(&g, 0, d, true).unwrap();
            assert_eq!(r.weight as usize, r.steps.len());
        }
    }

    #[test]
    fn reverse_runs_turn_around_only_for_forwards() {
        let loco = Locomotion::COARSE;
        let mut g = chain(3);
        g.edges[0].actions = vec![Action::TurnLeft];
        g.edges[1].actions = vec![Action::TurnLeft];
        let r = plan_route(&g, 2, 0, false).unwrap();
        assert_eq!(route_actions(&r, &loco), vec![Action::TurnRight; 2]);
        g.edges[1].actions = vec![Action::Forward];
        let r = plan_route(&g, 2, 0, false).unwrap();
        let mut want = vec![Action::TurnLeft; 6];
        want.extend([Action::Forward, Action::TurnRight]);
        want.extend(vec![Action::TurnLeft; 6]);
        assert_eq!(route_actions(&r, &loco), want);
    }
}
