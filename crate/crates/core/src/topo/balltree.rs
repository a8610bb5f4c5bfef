use std::cmp::Ordering;

use super::kmeans::sq_dist;
use crate::error::{Error, Result};

pub const DEFAULT_LEAF_SIZE: usize = 60;

#[derive(Debug, Clone)]
struct BallNode {
    centroid: Vec<f64>,
    radius: f64,
    kind: BallKind,
}

#[derive(Debug, Clone)]
enum BallKind {
    Leaf(Vec<usize>),
    Split(usize, usize),
}

/// Exact k-nearest-neighbour index over fixed points. Point ids are their
/// positions in the build slice.
#[derive(Debug, Clone)]
pub struct BallTree {
    points: Vec<Vec<f64>>,
    nodes: Vec<BallNode>,
    leaf_size: usize,
}

/// Work done by one query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryStats {
    pub nodes_visited: usize,
    pub distance_evals: usize,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

impl BallTree {
    pub fn build(points: Vec<Vec<f64>>, leaf_size: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Structural("ball tree needs at least one point".into()));
        }
        if leaf_size == 0 {
            return Err(Error::Structural("leaf size must be positive".into()));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Shape("ball tree points differ in length".into()));
        }
        let mut tree = BallTree {
            points,
            nodes: Vec::new(),
            leaf_size,
        };
        let ids: Vec<usize> = (0..tree.points.len()).collect();
        tree.build_node(ids);
        Ok(tree)
    }

    fn build_node(&mut self, ids: Vec<usize>) -> usize {
        let dim = self.points[0].len();
        let mut centroid = vec![0.0; dim];
        for &i in &ids {
            for (c, v) in centroid.iter_mut().zip(&self.points[i]) {
                *c += v;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= ids.len() as f64);
        let radius = ids.iter().map(|&i| dist(&centroid, &self.points[i])).fold(0.0, f64::max);
        let slot = self.nodes.len();
        self.nodes.push(BallNode {
            centroid,
            radius,
            kind: BallKind::Leaf(Vec::new()),
        });
        if ids.len() <= self.leaf_size {
            self.nodes[slot].kind = BallKind::Leaf(ids);
            return slot;
        }
        // Split direction: from the point farthest from the centroid to the
        // point farthest from that one. Ties go to the lower id.
        let farthest = |from: &[f64]| {
            ids.iter()
                .copied()
                .max_by(|&a, &b| dist(from, &self.points[a]).total_cmp(&dist(from, &self.points[b])).then(b.cmp(&a)))
                .unwrap_or(ids[0])
        };
        let a = farthest(&self.nodes[slot].centroid);
        let b = farthest(&self.points[a]);
        let dir: Vec<f64> = self.points[b].iter().zip(&self.points[a]).map(|(x, y)| x - y).collect();
        let proj = |i: usize| -> f64 { self.points[i].iter().zip(&dir).map(|(x, d)| x * d).sum() };
        let mut keyed: Vec<(f64, usize)> = ids.iter().map(|&i| (proj(i), i)).collect();
        keyed.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let mut ids: Vec<usize> = keyed.into_iter().map(|(_, i)| i).collect();
        let right = ids.split_off(ids.len() / 2);
        let l = self.build_node(ids);
        let r = self.build_node(right);
        self.nodes[slot].kind = BallKind::Split(l, r);
        slot
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    pub fn point(&self, id: usize) -> &[f64] {
        &self.points[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// `(depth, ids)` of every leaf.
    pub fn leaves(&self) -> Vec<(usize, &[usize])> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, 0usize)];
        while let Some((n, depth)) = stack.pop() {
            match &self.nodes[n].kind {
                BallKind::Leaf(ids) => out.push((depth, ids.as_slice())),
                BallKind::Split(l, r) => {
                    stack.push((*r, depth + 1));
                    stack.push((*l, depth + 1));
                }
            }
        }
        out
    }

    /// Balls enclosing point `id`, root first, as `(centroid, radius)`.
    pub fn ancestors(&self, id: usize) -> Vec<(&[f64], f64)> {
        fn walk<'a>(t: &'a BallTree, n: usize, id: usize, path: &mut Vec<(&'a [f64], f64)>) -> bool {
            let node = &t.nodes[n];
            path.push((&node.centroid, node.radius));
            let found = match &node.kind {
                BallKind::Leaf(ids) => ids.contains(&id),
                BallKind::Split(l, r) => walk(t, *l, id, path) || walk(t, *r, id, path),
            };
            if !found {
                path.pop();
            }
            found
        }
        let mut path = Vec::new();
        walk(self, 0, id, &mut path);
        path
    }

    pub fn query(&self, v: &[f64], n: usize) -> Result<Vec<(usize, f64)>> {
        self.query_with_stats(v, n).map(|(r, _)| r)
    }

    /// The `n` nearest points by Euclidean distance, ascending, ties broken
    /// by lower id; identical to a linear scan.
    pub fn query_with_stats(&self, v: &[f64], n: usize) -> Result<(Vec<(usize, f64)>, QueryStats)> {
        self.query_within_stats(v, n, f64::INFINITY)
    }

    /// Those of the `n` nearest points strictly closer than `radius`. Balls
    /// entirely outside the radius are skipped.
    pub fn query_within(&self, v: &[f64], n: usize, radius: f64) -> Result<Vec<(usize, f64)>> {
        self.query_within_stats(v, n, radius).map(|(r, _)| r)
    }

    pub fn query_within_stats(&self, v: &[f64], n: usize, radius: f64) -> Result<(Vec<(usize, f64)>, QueryStats)> {
        if n > self.points.len() {
            return Err(Error::Structural(format!("asked for {n} neighbours of {} points", self.points.len())));
        }
        if v.len() != self.points[0].len() {
            return Err(Error::Shape(format!("query has {} dims, tree {}", v.len(), self.points[0].len())));
        }
        let mut best: Vec<(usize, f64)> = Vec::with_capacity(n + 1);
        let mut stats = QueryStats::default();
        if n > 0 {
            self.search(0, v, n, radius, &mut best, &mut stats);
        }
        Ok((best, stats))
    }

    fn search(&self, node: usize, v: &[f64], n: usize, radius: f64, best: &mut Vec<(usize, f64)>, stats: &mut QueryStats) {
        stats.nodes_visited += 1;
        match &self.nodes[node].kind {
            BallKind::Leaf(ids) => {
                for &i in ids {
                    stats.distance_evals += 1;
                    let d = dist(v, &self.points[i]);
                    if d < radius {
                        insert(best, n, (i, d));
                    }
                }
            }
            BallKind::Split(l, r) => {
                let bound = |c: usize| {
                    let b = &self.nodes[c];
                    dist(v, &b.centroid) - b.radius
                };
                let (bl, br) = (bound(*l), bound(*r));
                let order = if bl <= br { [(*l, bl), (*r, br)] } else { [(*r, br), (*l, bl)] };
                for (child, lb) in order {
                    // Small slack so rounding in the bound never prunes a tie.
                    let limit = if best.len() == n { best[n - 1].1.min(radius) } else { radius };
                    if lb > limit + 1e-9 * (1.0 + limit) {
                        continue;
                    }
                    self.search(child, v, n, radius, best, stats);
                }
            }
        }
    }
}

fn cmp_hit(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))
}

fn insert(best: &mut Vec<(usize, f64)>, n: usize, hit: (usize, f64)) {
    if best.len() == n && cmp_hit(&hit, &best[n - 1]) != Ordering::Less {
        return;
    }
    let at = best.partition_point(|b| cmp_hit(b, &hit) == Ordering::Less);
    best.insert(at, hit);
    best.truncate(n);
}

/// Reference answer by exhaustive scan, same ordering as [`BallTree::query`].
pub fn linear_scan(points: &[Vec<f64>], v: &[f64], n: usize) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = points.iter().enumerate().map(|(i, p)| (i, dist(v, p))).collect();
    all.sort_by(cmp_hit);
    all.truncate(n);
    all
}
