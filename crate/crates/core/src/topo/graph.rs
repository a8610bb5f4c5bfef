use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::balltree::BallTree;
use super::descriptors::sector_descriptors;
use super::kmeans::{kmeans_fit, KMeans};
use super::vlad::{vlad_encode, Vlad};
use crate::error::{Error, Result};
use crate::explore::EpisodeLog;
use crate::model::{ActionAssigner, ModelBundle};
use crate::world::{Action, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VprParams {
    pub k: usize,
    pub kmeans_iters: usize,
    pub leaf_size: usize,
    pub threshold: f64,
    pub top_n: usize,
    pub temporal_gap: usize,
}

impl Default for VprParams {
    fn default() -> Self {
        VprParams {
            k: 16,
            kmeans_iters: 25,
            leaf_size: super::DEFAULT_LEAF_SIZE,
            threshold: 1.15,
            top_n: 5,
            temporal_gap: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Temporal,
    Loop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub step: usize,
    pub feature: Vec<f64>,
    pub vlad: Vlad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
    pub actions: Vec<Action>,
}

/// Nodes are episode steps; temporal edges chain them in order, loop edges
/// are added in both directions by place recognition.
#[derive(Debug, Clone, PartialEq)]
pub struct TopoGraph {
    pub world_id: String,
    pub episode_seed: u64,
    pub params: VprParams,
    /// Visual-word centroids the node VLADs were encoded with.
    pub codebook: Vec<Vec<f64>>,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub meta: BTreeMap<String, String>,
    /// Ground-truth poses for evaluation only; nothing that plans or
    /// localizes reads them.
    debug_poses: Vec<Pose>,
}

impl TopoGraph {
    /// Assembles a graph, checking that node ids are positions, every edge
    /// endpoint exists and each node has a debug pose.
    pub fn from_parts(
        world_id: String,
        episode_seed: u64,
        params: VprParams,
        codebook: Vec<Vec<f64>>,
        nodes: Vec<Node>,
        edges: Vec<Edge>,
        debug_poses: Vec<Pose>,
    ) -> Result<Self> {
        let n = nodes.len();
        if let Some((i, node)) = nodes.iter().enumerate().find(|(i, node)| node.id != *i) {
            return Err(Error::Format(format!("node {i} carries id {}", node.id)));
        }
        if let Some(e) = edges.iter().find(|e| e.from >= n || e.to >= n) {
            return Err(Error::Format(format!("edge {} → {} references a missing node", e.from, e.to)));
        }
        if debug_poses.len() != n {
            return Err(Error::Format(format!("{n} nodes but {} debug poses", debug_poses.len())));
        }
        Ok(TopoGraph {
            world_id,
            episode_seed,
            params,
            codebook,
            nodes,
            edges,
            meta: BTreeMap::new(),
            debug_poses,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn debug_position(&self, id: usize) -> (f64, f64) {
        self.debug_poses[id].position()
    }

    pub fn debug_pose(&self, id: usize) -> Pose {
        self.debug_poses[id]
    }

    pub fn temporal_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Temporal)
    }

    pub fn loop_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Loop)
    }

    pub fn loop_edge_count(&self) -> usize {
        self.loop_edges().count()
    }

    /// Loop edges as unordered node pairs.
    pub fn loop_pairs(&self) -> BTreeSet<(usize, usize)> {
        self.loop_edges().map(|e| (e.from.min(e.to), e.from.max(e.to))).collect()
    }

    pub fn vlad_matrix(&self) -> Vec<Vec<f64>> {
        self.nodes.iter().map(|n| n.vlad.values.clone()).collect()
    }

    pub fn ball_tree(&self) -> Result<BallTree> {
        BallTree::build(self.vlad_matrix(), self.params.leaf_size)
    }

    /// Nodes reachable from node 0 ignoring edge direction.
    pub fn reachable_from(&self, start: usize) -> Vec<bool> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            adj[e.from].push(e.to);
            adj[e.to].push(e.from);
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(n) = queue.pop_front() {
            for &m in &adj[n] {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        seen
    }
}

/// Codebook fitted on the sector descriptors of every episode observation.
pub fn fit_codebook(episode: &EpisodeLog, params: &VprParams, seed: u64) -> Result<KMeans> {
    let descs: Vec<Vec<f64>> = episode.observations.iter().flat_map(sector_descriptors).collect();
    kmeans_fit(&descs, params.k, params.kmeans_iters, seed)
}

/// One node per episode step, temporal edge `i → i+1` carrying action `i`.
/// Node features come from the bundle's assigner when it has one (they only
/// feed loop-edge labelling), else from the planner encoder.
pub fn build_chain_graph(
    episode: &EpisodeLog,
    bundle: &ModelBundle,
    codebook: &[Vec<f64>],
    params: &VprParams,
) -> Result<TopoGraph> {
    if episode.observations.is_empty() {
        return Err(Error::Structural("cannot build a map from an empty episode".into()));
    }
    let mut nodes = Vec::with_capacity(episode.observations.len());
    for (i, obs) in episode.observations.iter().enumerate() {
        nodes.push(Node {
            id: i,
            step: i,
            feature: match &bundle.assigner {
                Some(a) => a.embed(obs),
                None => bundle.encode(obs),
            },
            vlad: vlad_encode(&sector_descriptors(obs), codebook)?,
        });
    }
    let edges = (0..nodes.len() - 1)
        .map(|i| Edge {
            from: i,
            to: i + 1,
            kind: EdgeKind::Temporal,
            actions: vec![episode.actions[i]],
        })
        .collect();
    Ok(TopoGraph {
        world_id: episode.world_id.clone(),
        episode_seed: episode.seed,
        params: *params,
        codebook: codebook.to_vec(),
        nodes,
        edges,
        meta: BTreeMap::new(),
        debug_poses: episode.poses.clone(),
    })
}

/// Adds a loop edge pair for every top-N neighbour closer than the threshold
/// and at least `temporal_gap` steps away. Returns the number of new pairs.
pub fn close_loops(graph: &mut TopoGraph) -> Result<usize> {
    let tree = graph.ball_tree()?;
    let radius = graph.params.threshold;
    close_loops_with(graph, |v, n| tree.query_within(v, n, radius))
}

/// Same edges as [`close_loops`], found by scanning every node pair.
pub fn close_loops_exhaustive(graph: &mut TopoGraph) -> Result<usize> {
    let points = graph.vlad_matrix();
    close_loops_with(graph, |v, n| Ok(super::balltree::linear_scan(&points, v, n)))
}

fn close_loops_with<F>(graph: &mut TopoGraph, mut query: F) -> Result<usize>
where
    F: FnMut(&[f64], usize) -> Result<Vec<(usize, f64)>>,
{
    let p = graph.params;
    let mut present = graph.loop_pairs();
    let n = p.top_n.min(graph.nodes.len());
    let mut added = Vec::new();
    for node in &graph.nodes {
        for (j, d) in query(&node.vlad.values, n)? {
            let other = &graph.nodes[j];
            let key = (node.id.min(j), node.id.max(j));
            if d < p.threshold && node.step.abs_diff(other.step) >= p.temporal_gap && present.insert(key) {
                added.push(key);
            }
        }
    }
    for &(a, b) in &added {
        for (from, to) in [(a, b), (b, a)] {
            graph.edges.push(Edge {
                from,
                to,
                kind: EdgeKind::Loop,
                actions: Vec::new(),
            });
        }
    }
    Ok(added.len())
}

/// Labels each loop edge direction with the assigner's action list.
pub fn assign_loop_actions(graph: &mut TopoGraph, assigner: &ActionAssigner) -> Result<()> {
    for e in graph.edges.iter_mut().filter(|e| e.kind == EdgeKind::Loop) {
        e.actions = assigner.predict_actions(&graph.nodes[e.from].feature, &graph.nodes[e.to].feature)?;
    }
    Ok(())
}

/// Codebook, chain, loop closing and (when the bundle has one) assigner labels.
pub fn build_map(episode: &EpisodeLog, bundle: &ModelBundle, params: &VprParams, seed: u64) -> Result<TopoGraph> {
    let codebook = fit_codebook(episode, params, seed)?;
    let mut graph = build_chain_graph(episode, bundle, &codebook.centroids, params)?;
    graph.meta.insert("kmeans_objective".into(), format!("{}", codebook.objective()));
    close_loops(&mut graph)?;
    if let Some(assigner) = &bundle.assigner {
        assign_loop_actions(&mut graph, assigner)?;
    } else {
        log::warn!("bundle has no action assigner; loop edges keep empty action lists");
    }
    Ok(graph)
}

const GRAPH_FORMAT: &str = "topowalk-graph";

#[derive(Serialize, Deserialize)]
struct GraphFile {
    format: String,
    version: u32,
    world: String,
    episode_seed: u64,
    params: VprParams,
    meta: BTreeMap<String, String>,
    codebook: Vec<Vec<f64>>,
    nodes: Vec<NodeRecord>,
    edges: Vec<Edge>,
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    id: usize,
    step: usize,
    vlad: Vec<f64>,
    vlad_zero: bool,
    feature: Vec<f64>,
    debug_pose: Pose,
}

pub fn write_graph(graph: &TopoGraph) -> Result<String> {
    let file = GraphFile {
        format: GRAPH_FORMAT.into(),
        version: 1,
        world: graph.world_id.clone(),
        episode_seed: graph.episode_seed,
        params: graph.params,
        meta: graph.meta.clone(),
        codebook: graph.codebook.clone(),
        nodes: graph
            .nodes
            .iter()
            .map(|n| NodeRecord {
                id: n.id,
                step: n.step,
                vlad: n.vlad.values.clone(),
                vlad_zero: n.vlad.zero,
                feature: n.feature.clone(),
                debug_pose: graph.debug_poses[n.id],
            })
            .collect(),
        edges: graph.edges.clone(),
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn read_graph(text: &str) -> Result<TopoGraph> {
    let file: GraphFile = serde_json::from_str(text)?;
    if file.format != GRAPH_FORMAT || file.version != 1 {
        return Err(Error::Format(format!("not a version 1 {GRAPH_FORMAT} file")));
    }
    let debug_poses = file.nodes.iter().map(|r| r.debug_pose).collect();
    let nodes = file
        .nodes
        .into_iter()
        .map(|r| Node {
            id: r.id,
            step: r.step,
            feature: r.feature,
            vlad: Vlad {
                values: r.vlad,
                zero: r.vlad_zero,
            },
        })
        .collect();
    let mut graph = TopoGraph::from_parts(
        file.world,
        file.episode_seed,
        file.params,
        file.codebook,
        nodes,
        file.edges,
        debug_poses,
    )?;
    graph.meta = file.meta;
    Ok(graph)
}

#[cfg(test)]
pub(crate) fn synthetic_graph(vlads: Vec<Vec<f64>>, params: VprParams) -> TopoGraph {
    let n = vlads.len();
    TopoGraph {
        world_id: "synthetic".into(),
        episode_seed: 0,
        params,
        codebook: Vec::new(),
        nodes: vlads
            .into_iter()
            .enumerate()
            .map(|(i, v)| Node {
                id: i,
                step: i,
                feature: vec![0.0; 4],
                vlad: Vlad { values: v, zero: false },
            })
            .collect(),
        edges: (0..n.saturating_sub(1))
            .map(|i| Edge {
                from: i,
                to: i + 1,
                kind: EdgeKind::Temporal,
                actions: vec![Action::Forward],
            })
            .collect(),
        meta: BTreeMap::new(),
        debug_poses: vec![Pose::new(0.0, 0.0, 0); n],
    }
}
