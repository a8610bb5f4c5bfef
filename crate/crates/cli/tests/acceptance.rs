//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails. Runs without the libtest harness.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use rand::Rng as _;
use topowalk::expert::{generate_demonstration, plan_to_cell, replay, sample_anchors, DEFAULT_SPACING};
use topowalk::explore::{read_episode, run_scripted, EpisodeLog};
use topowalk::model::{window_loss, ModelBundle, ModelDims, PlannerParams, SupervisionMode, MEMORY, WINDOW_ACTIONS, WINDOW_OBS};
use topowalk::nav::{edge_weight, plan_route, spl_term};
use topowalk::nn::{gradient_check, Checkpoint, Parameterized};
use topowalk::topo::{
    build_map, kmeans_fit, linear_scan, BallTree, Edge, EdgeKind, Node, TopoGraph, Vlad, VprParams, DEFAULT_LEAF_SIZE,
};
use topowalk::world::{generate_world, load_world, GeneratorParams};
use topowalk::{rng, Action, Locomotion, Observation, Pose, World};
use topowalk_cli::pipeline::{MODEL_FILE, NAV_FILE};
use topowalk_cli::stats::{median, sign_test};
use topowalk_cli::{Pipeline, RunConfig, Stage};

mod common;
use common::{config, differing, snapshot, toy};

type Check = Result<String, String>;

fn ensure(cond: bool, detail: String) -> Check {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

// ---------------------------------------------------------------- 1

fn gradient_integrity() -> Check {
    let t = Instant::now();
    let loco = Locomotion::FINE;
    let world = generate_world(&GeneratorParams::small(), 3, "grad").map_err(err)?;
    let anchors = sample_anchors(&world, DEFAULT_SPACING, 3).map_err(err)?;
    let demo = generate_demonstration(&world, &anchors, 3, &loco).map_err(err)?;
    let obs = demo.observations();
    let actions = demo.actions();
    if obs.len() < MEMORY + WINDOW_OBS {
        return Err(format!("demonstration too short ({} frames)", obs.len()));
    }
    let window: Vec<&Observation> = obs[MEMORY..MEMORY + WINDOW_OBS].to_vec();
    let acts = &actions[MEMORY..MEMORY + WINDOW_ACTIONS];
    let history: Vec<&Observation> = obs[..MEMORY].to_vec();

    let mode = SupervisionMode::Full;
    let base = PlannerParams::new(&ModelDims::reduced(8), &mut rng::seeded(11));
    let point = base.flatten();
    let mut scratch = base.clone();
    let report = gradient_check(
        |p| {
            scratch.unflatten(p).expect("same layout");
            let mut grads = scratch.zeros_like();
            let loss = window_loss(&scratch, mode, &window, acts, &history, Some(&mut grads)).expect("finite loss");
            (loss.total(), grads.flatten())
        },
        &point,
        1e-4,
    );
    let secs = t.elapsed().as_secs_f64();
    ensure(
        report.max_relative_error < 1e-4 && secs < 60.0,
        format!(
            "max relative error {:.2e} over {} parameters (limit 1e-4), {secs:.1} s (limit 60 s)",
            report.max_relative_error,
            point.len()
        ),
    )
}

// ---------------------------------------------------------------- 2

fn random_points(rng: &mut rng::Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect()
}

/// Reference shortest path: exhaustive search over simple paths, with
/// temporal edges walkable both ways and loop edges only forwards.
fn brute_force_weight(graph: &TopoGraph, src: usize, dst: usize, uniform: bool) -> Option<u64> {
    let mut adj = vec![Vec::new(); graph.len()];
    for e in &graph.edges {
        let w = if uniform { 1 } else { e.actions.len().max(1) as u64 };
        adj[e.from].push((e.to, w));
        if e.kind == EdgeKind::Temporal {
            adj[e.to].push((e.from, w));
        }
    }
    fn dfs(adj: &[Vec<(usize, u64)>], at: usize, dst: usize, acc: u64, seen: &mut [bool], best: &mut Option<u64>) {
        if at == dst {
            *best = Some(best.map_or(acc, |b| b.min(acc)));
            return;
        }
        for &(v, w) in &adj[at] {
            if !seen[v] {
                seen[v] = true;
                dfs(adj, v, dst, acc + w, seen, best);
                seen[v] = false;
            }
        }
    }
    let mut seen = vec![false; graph.len()];
    seen[src] = true;
    let mut best = None;
    dfs(&adj, src, dst, 0, &mut seen, &mut best);
    best
}

fn random_graph(rng: &mut rng::Rng) -> TopoGraph {
    let n = rng.random_range(1..=12);
    let nodes: Vec<Node> = (0..n)
        .map(|id| Node {
            id,
            step: id,
            feature: vec![0.0],
            vlad: Vlad { values: vec![0.0], zero: true },
        })
        .collect();
    let random_actions = |rng: &mut rng::Rng, max: usize| -> Vec<Action> {
        let len = rng.random_range(0..=max);
        (0..len).map(|_| Action::from_index(rng.random_range(0..3)).unwrap()).collect()
    };
    let mut edges = Vec::new();
    for i in 1..n {
        if rng.random_bool(0.8) {
            let actions = random_actions(rng, 4);
            edges.push(Edge { from: i - 1, to: i, kind: EdgeKind::Temporal, actions });
        }
    }
    for _ in 0..rng.random_range(0..=2 * n) {
        let (from, to) = (rng.random_range(0..n), rng.random_range(0..n));
        if from != to {
            let actions = random_actions(rng, 6);
            edges.push(Edge { from, to, kind: EdgeKind::Loop, actions });
        }
    }
    let poses = (0..n).map(|i| Pose::new(i as f64, 0.0, 0)).collect();
    TopoGraph::from_parts("random".into(), 0, VprParams::default(), vec![vec![0.0]], nodes, edges, poses).unwrap()
}

/// The route must be a walk over real arcs whose weights add up.
fn route_is_consistent(graph: &TopoGraph, route: &topowalk::nav::Route, src: usize, dst: usize, uniform: bool) -> bool {
    if src == dst {
        return route.steps.is_empty() && route.weight == 0;
    }
    let nodes = route.nodes();
    if nodes.first() != Some(&src) || nodes.last() != Some(&dst) {
        return false;
    }
    let mut total = 0;
    for s in &route.steps {
        let exists = graph.edges.iter().any(|e| {
            e.actions == s.actions
                && e.kind == s.kind
                && if s.reversed {
                    e.kind == EdgeKind::Temporal && e.from == s.to && e.to == s.from
                } else {
                    e.from == s.from && e.to == s.to
                }
        });
        if !exists {
            return false;
        }
        total += edge_weight(&s.actions, uniform);
    }
    route.steps.windows(2).all(|w| w[0].to == w[1].from) && total == route.weight
}

fn exact_structures() -> Check {
    let t = Instant::now();
    let mut rng = rng::seeded(2024);

    let points = random_points(&mut rng, 500, 32);
    let tree = BallTree::build(points.clone(), DEFAULT_LEAF_SIZE).map_err(err)?;
    let mut tree_mismatch = 0;
    for _ in 0..100 {
        let q: Vec<f64> = (0..32).map(|_| rng.random::<f64>()).collect();
        for n in [1, 5, 20] {
            if tree.query(&q, n).map_err(err)? != linear_scan(&points, &q, n) {
                tree_mismatch += 1;
            }
        }
    }

    let (mut graphs, mut queries, mut route_mismatch) = (0, 0, 0);
    for _ in 0..200 {
        let g = random_graph(&mut rng);
        graphs += 1;
        for uniform in [false, true] {
            for src in 0..g.len() {
                for dst in 0..g.len() {
                    queries += 1;
                    let expected = brute_force_weight(&g, src, dst, uniform);
                    let ok = match (plan_route(&g, src, dst, uniform), expected) {
                        (Ok(r), Some(w)) => r.weight == w && route_is_consistent(&g, &r, src, dst, uniform),
                        (Err(_), None) => true,
                        _ => false,
                    };
                    route_mismatch += usize::from(!ok);
                }
            }
        }
    }

    let mut kmeans_runs = 0;
    let mut kmeans_increases = 0;
    for seed in 0..30u64 {
        let mut prng = rng::seeded(seed);
        let dim = 3 + (seed as usize % 10);
        let centers = random_points(&mut prng, 8, dim);
        let pts: Vec<Vec<f64>> = (0..300)
            .map(|i| centers[i % 8].iter().map(|c| c + 0.3 * (prng.random::<f64>() - 0.5)).collect())
            .collect();
        let km = kmeans_fit(&pts, 16, 25, seed).map_err(err)?;
        kmeans_runs += 1;
        kmeans_increases += km.objective_history.windows(2).filter(|w| w[1] > w[0]).count();
    }

    let secs = t.elapsed().as_secs_f64();
    ensure(
        tree_mismatch == 0 && route_mismatch == 0 && kmeans_increases == 0 && secs < 120.0,
        format!(
            "ball tree {tree_mismatch}/300 mismatches, Dijkstra {route_mismatch}/{queries} mismatches on {graphs} graphs, \
             k-means {kmeans_increases} increases over {kmeans_runs} runs, {secs:.1} s (limit 120 s)"
        ),
    )
}

// ---------------------------------------------------------------- 3, 4

fn finals(out: &Path, policy: &str, cfg: &RunConfig, seeds: std::ops::Range<u64>) -> Result<Vec<f64>, String> {
    let mut v = Vec::new();
    for j in 0..cfg.worlds_heldout {
        for seed in seeds.clone() {
            let rel = format!("explore/{policy}-heldout-{j:02}-s{seed:03}.episode");
            let text = std::fs::read_to_string(out.join(&rel)).map_err(|e| format!("{rel}: {e}"))?;
            v.push(read_episode(&text).map_err(err)?.final_ratio());
        }
    }
    Ok(v)
}

fn baseline_ordering(a: &RunConfig, through_explore_secs: f64) -> Check {
    let seeds = a.seed..a.seed + a.episodes as u64;
    let agent = finals(&a.out, "agent", a, seeds.clone())?;
    let random = finals(&a.out, "random", a, seeds)?;
    let (ma, mr) = (median(&agent), median(&random));
    let st = sign_test(&agent, &random);
    ensure(
        agent.len() == 50 && ma >= mr + 0.15 && st.p_value < 0.05 && through_explore_secs < 1200.0,
        format!(
            "median coverage {ma:.3} vs random walk {mr:.3} (need gap >= 0.15) over {} paired episodes, \
             sign test {}-{} p = {:.2e} (limit 0.05), {through_explore_secs:.0} s through explore (limit 1200 s)",
            agent.len(),
            st.wins,
            st.losses,
            st.p_value
        ),
    )
}

fn ablation_ordering(a: &RunConfig) -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    let b = config(
        "mode = no-deep-sup\nepisodes = 6\nassigner.enabled = false\nvpr.threshold = auto\n",
        dir.path(),
    );
    Pipeline::new(b.clone())
        .run(&[Stage::GenWorlds, Stage::GenDemos, Stage::Train, Stage::Explore])
        .map_err(err)?;
    let seeds = b.seed..b.seed + b.episodes as u64;
    let full = finals(&a.out, "agent", a, seeds.clone())?;
    let nds = finals(&b.out, "agent", &b, seeds)?;
    let (mf, mn) = (median(&full), median(&nds));
    let st = sign_test(&full, &nds);
    ensure(
        full.len() == 30 && mf >= mn && st.p_value < 0.1,
        format!(
            "median coverage full {mf:.3} vs no-deep-sup {mn:.3} over {} paired episodes, sign test {}-{} p = {:.3} (limit 0.1)",
            full.len(),
            st.wins,
            st.losses,
            st.p_value
        ),
    )
}

// ---------------------------------------------------------------- 5

/// A ring corridor around a solid block, walked twice through its corners.
fn ring_world() -> Result<(World, EpisodeLog), String> {
    let (w, h) = (36usize, 24usize);
    let mut text = String::from("# world ring\n");
    for r in 0..h {
        for c in 0..w {
            let border = r == 0 || c == 0 || r == h - 1 || c == w - 1;
            let inner = (5..h - 5).contains(&r) && (5..w - 5).contains(&c);
            text.push(if border || inner { char::from(b'0' + ((c / 6 + r / 6) % 8) as u8) } else { '.' });
        }
        text.push('\n');
    }
    let world = load_world(&text).map_err(err)?;
    let loco = Locomotion::FINE;
    let corners = [(w - 3, 2), (w - 3, h - 3), (2, h - 3), (2, 2)];
    let start = Pose::at_cell(&world, 2, 2, 0);
    let mut pose = start;
    let mut actions = Vec::new();
    for _lap in 0..2 {
        for &(c, r) in &corners {
            let plan = plan_to_cell(&world, &pose, world.cell_center(c, r), &loco).map_err(err)?;
            pose = *replay(&world, &pose, &plan, &loco).last().unwrap();
            actions.extend(plan);
        }
    }
    let ep = run_scripted(&world, &start, &actions, 0, &loco).map_err(err)?;
    Ok((world, ep))
}

fn loop_closing(a: &RunConfig) -> Check {
    let text = std::fs::read_to_string(a.out.join("map/calibration.json")).map_err(err)?;
    let cal: serde_json::Value = serde_json::from_str(&text).map_err(err)?;
    let threshold = cal["threshold"].as_f64().ok_or("calibration has no threshold")?;
    let ck = Checkpoint::parse(&std::fs::read_to_string(a.out.join(MODEL_FILE)).map_err(err)?).map_err(err)?;
    let bundle = ModelBundle::from_checkpoint(&ck).map_err(err)?;
    let (_, ep) = ring_world()?;
    let graph = build_map(&ep, &bundle, &a.vpr_params(threshold), a.map_seed).map_err(err)?;
    let (mut close, mut far, mut total) = (0, 0, 0);
    for e in graph.loop_edges() {
        total += 1;
        let (p, q) = (graph.debug_position(e.from), graph.debug_position(e.to));
        let d = (p.0 - q.0).hypot(p.1 - q.1);
        let gap = graph.nodes[e.from].step.abs_diff(graph.nodes[e.to].step);
        close += usize::from(d < 1.0 && gap >= 50);
        far += usize::from(d > 3.0);
    }
    ensure(
        close >= 1 && far == 0,
        format!(
            "{} steps, calibrated threshold {threshold}: {total} loop edges, {close} within 1 m and >= 50 steps apart (need >= 1), \
             {far} over 3 m (need 0)",
            ep.len()
        ),
    )
}

// ---------------------------------------------------------------- 6

fn navigation_sanity(a: &RunConfig) -> Check {
    let text = std::fs::read_to_string(a.out.join(NAV_FILE)).map_err(err)?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(err)?;
    let success = v["success_rate"].as_f64().ok_or("no success_rate")?;
    let spl = v["spl"].as_f64().ok_or("no spl")?;
    let episodes = v["episodes"].as_array().ok_or("no episodes")?;
    let mut violations = 0;
    for e in episodes {
        let ok = e["success"].as_bool().unwrap_or(false);
        let term = spl_term(ok, e["l"].as_f64().unwrap_or(f64::NAN), e["p"].as_f64().unwrap_or(f64::NAN));
        violations += usize::from(!(term <= f64::from(u8::from(ok))));
    }
    ensure(
        episodes.len() == 50 && success >= 0.9 && spl >= 0.6 && spl <= success && violations == 0,
        format!(
            "{} episodes, {} localization: success {success:.3} (need >= 0.9), SPL {spl:.3} (need >= 0.6), \
             {violations} episodes with SPL above success",
            episodes.len(),
            v["localization"].as_str().unwrap_or("?")
        ),
    )
}

// ---------------------------------------------------------------- 7

fn determinism(a: &RunConfig) -> Check {
    let (x, y) = (tempfile::tempdir().map_err(err)?, tempfile::tempdir().map_err(err)?);
    for dir in [&x, &y] {
        Pipeline::new(toy(dir.path())).run(&Stage::ALL).map_err(err)?;
    }
    let (sx, sy) = (snapshot(x.path()), snapshot(y.path()));
    let toy_diff = differing(&sx, &sy);

    let before = snapshot(&a.out);
    let rerun = [Stage::GenWorlds, Stage::GenDemos, Stage::Navigate, Stage::Eval, Stage::Render];
    Pipeline::new(a.clone()).run(&rerun).map_err(err)?;
    let main_diff = differing(&before, &snapshot(&a.out));
    ensure(
        toy_diff.is_empty() && main_diff.is_empty(),
        format!(
            "toy run twice: {} artifacts, differing {toy_diff:?}; main run with {} stages repeated: {} artifacts, differing {main_diff:?}",
            sx.len(),
            rerun.len(),
            before.len()
        ),
    )
}

// ---------------------------------------------------------------- 8

fn bench_vpr(a: &RunConfig) -> Check {
    let (_, o) = Pipeline::new(a.clone()).bench_vpr().map_err(err)?;
    ensure(
        o.nodes == 5000 && o.tree_secs < o.exhaustive_secs && o.identical,
        format!(
            "{} nodes: ball tree {:.2} s, exhaustive {:.2} s, {} loop pairs, identical {}",
            o.nodes, o.tree_secs, o.exhaustive_secs, o.pairs, o.identical
        ),
    )
}

// ----------------------------------------------------------------

fn run(id: u32, name: &str, f: impl FnOnce() -> Check) -> bool {
    let t = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .map_or("panicked".into(), |m| format!("panicked: {m}")))
    });
    let secs = t.elapsed().as_secs_f64();
    let (tag, detail) = match &result {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("[{tag}] {id} {name}: {detail} [{secs:.0} s]");
    result.is_ok()
}

const NAMES: [&str; 8] = [
    "gradient integrity",
    "exact structures",
    "baseline ordering",
    "ablation ordering",
    "loop closing",
    "navigation sanity",
    "determinism",
    "bench-vpr",
];

/// `cargo test --test acceptance -- 2 5` runs criteria 2 and 5 only.
fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        return;
    }
    let picked: Vec<u32> = args.iter().filter_map(|a| a.parse().ok()).collect();
    let wanted = |id: u32| picked.is_empty() || picked.contains(&id);
    let name = |id: u32| NAMES[id as usize - 1];

    let mut ok = Vec::new();
    if wanted(1) {
        ok.push(run(1, name(1), gradient_integrity));
    }
    if wanted(2) {
        ok.push(run(2, name(2), exact_structures));
    }
    if (3..=8).any(wanted) {
        let dir = tempfile::tempdir().expect("temp dir");
        let a = config("vpr.threshold = auto\n", dir.path());
        let main_run = || -> Result<f64, String> {
            let p = Pipeline::new(a.clone());
            let t = Instant::now();
            p.run(&[Stage::GenWorlds, Stage::GenDemos, Stage::Train, Stage::Explore]).map_err(err)?;
            let secs = t.elapsed().as_secs_f64();
            p.run(&[Stage::Map, Stage::Navigate, Stage::Eval, Stage::Render]).map_err(err)?;
            Ok(secs)
        };
        let t = Instant::now();
        match catch_unwind(AssertUnwindSafe(main_run)).unwrap_or_else(|_| Err("panicked".into())) {
            Ok(secs) => {
                println!("main pipeline ready in {:.0} s", t.elapsed().as_secs_f64());
                let checks: [(u32, Box<dyn Fn() -> Check + '_>); 6] = [
                    (3, Box::new(|| baseline_ordering(&a, secs))),
                    (4, Box::new(|| ablation_ordering(&a))),
                    (5, Box::new(|| loop_closing(&a))),
                    (6, Box::new(|| navigation_sanity(&a))),
                    (7, Box::new(|| determinism(&a))),
                    (8, Box::new(|| bench_vpr(&a))),
                ];
                for (id, f) in checks {
                    if wanted(id) {
                        ok.push(run(id, name(id), f));
                    }
                }
            }
            Err(e) => {
                for id in (3..=8).filter(|&i| wanted(i)) {
                    println!("[FAIL] {id} {}: main pipeline failed: {e}", name(id));
                    ok.push(false);
                }
            }
        }
    }
    let passed = ok.iter().filter(|&&b| b).count();
    println!("acceptance: {passed}/{} criteria passed", ok.len());
    if passed != ok.len() {
        std::process::exit(1);
    }
}
