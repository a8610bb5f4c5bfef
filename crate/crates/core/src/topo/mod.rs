//! Topological maps: a temporal chain of episode steps completed with loop
//! edges found by VLAD place recognition over ray-sector descriptors.

mod balltree;
mod calibrate;
mod descriptors;
mod graph;
mod kmeans;
mod vlad;

pub use balltree::{linear_scan, BallTree, QueryStats, DEFAULT_LEAF_SIZE};
pub use calibrate::{calibrate_threshold, FALSE_LOOP_DISTANCE, LOOSE_LOOP_DISTANCE, THRESHOLD_GRID};
pub use descriptors::{sector_descriptors, LOCAL_DIM, RAYS_PER_SECTOR, SECTORS};
pub use graph::{
    assign_loop_actions, build_chain_graph, build_map, close_loops, close_loops_exhaustive, fit_codebook, read_graph,
    write_graph, Edge, EdgeKind, Node, TopoGraph, VprParams,
};
pub use kmeans::{kmeans_fit, KMeans};
pub use vlad::{vlad_encode, Vlad};

#[cfg(test)]
pub(crate) use graph::synthetic_graph;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explore::{run_random_walk, run_scripted};
    use crate::expert::plan_to_cell;
    use crate::model::{ActionAssigner, ModelBundle, ModelDims, SupervisionMode};
    use crate::rng;
    use crate::world::{load_world, Locomotion, Pose, World};

    fn bundle() -> ModelBundle {
        let mut b = ModelBundle::new(ModelDims::reduced(8), SupervisionMode::Full, &mut rng::seeded(4));
        b.assigner = Some(ActionAssigner::new(8, &mut rng::seeded(5)));
        b
    }

    fn room() -> World {
        load_world(
            "0000000000000\n0...........0\n0...........0\n0....12.....0\n0...........0\n0.....3.....0\n0...........0\n0000000000000\n",
        )
        .unwrap()
    }

    #[test]
    fn chain_shape() {
        let w = room();
        let ep = run_random_walk(&w, 120, 1, &Locomotion::FINE).unwrap();
        let params = VprParams::default();
        let cb = fit_codebook(&ep, &params, 2).unwrap();
        let g = build_chain_graph(&ep, &bundle(), &cb.centroids, &params).unwrap();
        assert_eq!(g.len(), 120);
        assert_eq!(g.temporal_edges().count(), 119);
        for (i, e) in g.temporal_edges().enumerate() {
            assert_eq!((e.from, e.to), (i, i + 1));
            assert_eq!(e.actions, vec![ep.actions[i]]);
        }
        assert!(g.reachable_from(0).iter().all(|&r| r));
        assert!(g.nodes.iter().all(|n| n.vlad.values.len() == 16 * LOCAL_DIM));
    }

    fn random_vlads(n: usize, seed: u64) -> Vec<Vec<f64>> {
        use rand::Rng as _;
        let mut r = rng::seeded(seed);
        (0..n)
            .map(|_| {
                let v: Vec<f64> = (0..6).map(|_| r.random_range(-1.0..1.0)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.into_iter().map(|x| x / norm).collect()
            })
            .collect()
    }

    #[test]
    fn zero_threshold_adds_nothing() {
        let mut g = synthetic_graph(random_vlads(300, 1), VprParams { threshold: 0.0, ..Default::default() });
        assert_eq!(close_loops(&mut g).unwrap(), 0);
        assert_eq!(g.loop_edge_count(), 0);
    }

    #[test]
    fn loop_edges_are_symmetric_and_respect_the_gap() {
        let params = VprParams {
            threshold: 0.6,
            temporal_gap: 20,
            ..Default::default()
        };
        let mut g = synthetic_graph(random_vlads(400, 2), params);
        let pairs = close_loops(&mut g).unwrap();
        assert!(pairs > 0);
        assert_eq!(g.loop_edge_count(), 2 * pairs);
        let directed: std::collections::BTreeSet<(usize, usize)> = g.loop_edges().map(|e| (e.from, e.to)).collect();
        for &(a, b) in &directed {
            assert!(directed.contains(&(b, a)));
            assert!(g.nodes[a].step.abs_diff(g.nodes[b].step) >= 20);
        }
        // Re-running finds nothing new.
        assert_eq!(close_loops(&mut g).unwrap(), 0);
        let mut h = synthetic_graph(random_vlads(400, 2), params);
        close_loops_exhaustive(&mut h).unwrap();
        assert_eq!(g.loop_pairs(), h.loop_pairs());
    }

    #[test]
    fn assigner_labels_only_loop_edges() {
        let mut g = synthetic_graph(random_vlads(200, 3), VprParams { threshold: 0.8, temporal_gap: 10, ..Default::default() });
        close_loops(&mut g).unwrap();
        assert!(g.loop_edge_count() > 0);
        let before: Vec<Edge> = g.temporal_edges().cloned().collect();
        assign_loop_actions(&mut g, &ActionAssigner::new(4, &mut rng::seeded(6))).unwrap();
        assert!(g.loop_edges().all(|e| e.actions.len() <= 6));
        assert_eq!(before, g.temporal_edges().cloned().collect::<Vec<_>>());
    }

    /// Two laps around a ring corridor.
    fn ring_episode() -> (World, crate::explore::EpisodeLog) {
        let mut rows = Vec::new();
        let (w, h) = (36, 24);
        for r in 0..h {
            let row: String = (0..w)
                .map(|c| {
                    let border = r == 0 || c == 0 || r == h - 1 || c == w - 1;
                    let inner = (5..h - 5).contains(&r) && (5..w - 5).contains(&c);
                    if border || inner {
                        char::from(b'0' + ((c / 6 + r / 6) % 8) as u8)
                    } else {
                        '.'
                    }
                })
                .collect();
            rows.push(row);
        }
        let world = load_world(&(rows.join("\n") + "\n")).unwrap();
        let loco = Locomotion::COARSE;
        let corners = [(2usize, 2usize), (w - 3, 2), (w - 3, h - 3), (2, h - 3)];
        let start = Pose::at_cell(&world, 2, 2, 0);
        let mut pose = start;
        let mut actions = Vec::new();
        for _lap in 0..2 {
            for &(c, r) in corners[1..].iter().chain(&corners[..1]) {
                let plan = plan_to_cell(&world, &pose, world.cell_center(c, r), &loco).unwrap();
                pose = *crate::expert::replay(&world, &pose, &plan, &loco).last().unwrap();
                actions.extend(plan);
            }
        }
        let ep = run_scripted(&world, &start, &actions, 0, &loco).unwrap();
        (world, ep)
    }

    #[test]
    fn planted_loop_is_closed() {
        let (_, ep) = ring_episode();
        let params = VprParams::default();
        let b = bundle();
        let mut g = build_map(&ep, &b, &params, 7).unwrap();
        let near = g.loop_pairs().into_iter().any(|(a, c)| {
            let (pa, pc) = (g.debug_position(a), g.debug_position(c));
            (pa.0 - pc.0).hypot(pa.1 - pc.1) < 1.0
        });
        assert!(near, "{} loop pairs, none within 1 m", g.loop_pairs().len());
        g.meta.insert("k".into(), "v".into());
        let text = write_graph(&g).unwrap();
        assert_eq!(read_graph(&text).unwrap(), g);
    }
}
