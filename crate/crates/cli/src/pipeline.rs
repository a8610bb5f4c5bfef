//! Stage implementations. Each stage reads its upstream artifacts (checking
//! their config stamps), writes its own, and logs every seeded artifact to
//! the registry.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;
use topowalk::explore::{read_episode, run_exploration, run_random_walk, write_episode, EpisodeLog};
use topowalk::expert::{generate_demonstration, read_demonstration, sample_anchors, write_demonstration, Demonstration};
use topowalk::model::{train_assigner, training_log_csv, EpochLog, ModelBundle, Trainer};
use topowalk::nav::{evaluate_navigation, NavMetrics};
use topowalk::nn::Checkpoint;
use topowalk::topo::{
    build_chain_graph, build_map, calibrate_threshold, close_loops, close_loops_exhaustive, fit_codebook, read_graph,
    write_graph, TopoGraph, THRESHOLD_GRID,
};
use topowalk::world::{generate_world, load_world, save_world};
use topowalk::World;

use crate::config::{RunConfig, Threshold};
use crate::error::CliError;
use crate::render::{render_graph, render_svg};
use crate::stage::Stage;
use crate::stats::{mean, median, sign_test, SignTest};
use crate::store::{RegistryRecord, Store};

/// Share of calibration loop pairs allowed beyond the loose distance.
pub const CALIBRATION_MAX_LOOSE: f64 = 0.01;

pub const MODEL_FILE: &str = "model/model.ckpt";
pub const TRAIN_STATE_FILE: &str = "model/state.ckpt";
pub const MAP_FILE: &str = "map/map.json";
pub const NAV_FILE: &str = "nav/metrics.json";
pub const EVAL_FILE: &str = "eval/metrics.json";
pub const BENCH_FILE: &str = "bench/vpr.json";

/// What one stage did.
#[derive(Debug, Clone, Default)]
pub struct StageReport {
    pub artifacts: Vec<String>,
    pub lines: Vec<String>,
}

/// Wall-clock comparison of the two loop detectors on one map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOutcome {
    pub nodes: usize,
    pub tree_secs: f64,
    pub exhaustive_secs: f64,
    pub pairs: usize,
    pub identical: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorldRole {
    Train,
    Heldout,
}

/// Name and generator seed of a world.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldSpec {
    pub name: String,
    pub seed: u64,
    pub role: WorldRole,
}

impl WorldSpec {
    fn file(&self) -> String {
        format!("worlds/{}.world", self.name)
    }
}

pub fn world_specs(cfg: &RunConfig) -> Vec<WorldSpec> {
    let train = (0..cfg.worlds_train).map(|i| WorldSpec {
        name: format!("train-{i:02}"),
        seed: cfg.worlds_seed + i as u64,
        role: WorldRole::Train,
    });
    let heldout = (0..cfg.worlds_heldout).map(|j| WorldSpec {
        name: format!("heldout-{j:02}"),
        seed: cfg.worlds_seed + 100 + j as u64,
        role: WorldRole::Heldout,
    });
    train.chain(heldout).collect()
}

/// World file text as gen-worlds writes it.
pub fn world_text(cfg: &RunConfig, spec: &WorldSpec) -> Result<String, CliError> {
    let world = generate_world(&cfg.worlds_size.params(), spec.seed, &spec.name)?;
    Ok(format!("# config_hash={}\n{}", cfg.stage_hash(Stage::GenWorlds), save_world(&world)))
}

fn episode_file(policy: &str, world: &str, seed: u64) -> String {
    format!("explore/{policy}-{world}-s{seed:03}.episode")
}

const AGENT: &str = "agent";
const RANDOM: &str = "random";

pub struct Pipeline {
    pub cfg: RunConfig,
    pub store: Store,
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Self {
        let store = Store::new(cfg.out.clone());
        Pipeline { cfg, store }
    }

    fn hash(&self, stage: Stage) -> String {
        self.cfg.stage_hash(stage)
    }

    /// Writes an artifact and records it in the registry.
    fn emit(&self, stage: Stage, rel: &str, text: &str, world: &str, seed: u64, report: &mut StageReport) -> Result<(), CliError> {
        let sha = self.store.write(rel, text)?;
        self.store.append_record(&RegistryRecord {
            stage: stage.name().into(),
            artifact: rel.into(),
            world: world.into(),
            seed: seed.to_string(),
            sha256: sha,
        })?;
        report.artifacts.push(rel.into());
        Ok(())
    }

    fn read(&self, consumer: Stage, producer: Stage, rel: &str) -> Result<String, CliError> {
        self.store.read_checked(consumer, producer, rel, &self.hash(producer))
    }

    fn load_world(&self, consumer: Stage, spec: &WorldSpec) -> Result<World, CliError> {
        Ok(load_world(&self.read(consumer, Stage::GenWorlds, &spec.file())?)?)
    }

    fn load_model(&self, consumer: Stage) -> Result<ModelBundle, CliError> {
        let text = self.read(consumer, Stage::Train, MODEL_FILE)?;
        Ok(ModelBundle::from_checkpoint(&Checkpoint::parse(&text)?)?)
    }

    fn load_graph(&self, consumer: Stage) -> Result<TopoGraph, CliError> {
        Ok(read_graph(&self.read(consumer, Stage::Map, MAP_FILE)?)?)
    }

    fn specs(&self, role: WorldRole) -> Vec<WorldSpec> {
        world_specs(&self.cfg).into_iter().filter(|s| s.role == role).collect()
    }

    fn map_world(&self) -> WorldSpec {
        self.specs(WorldRole::Train).swap_remove(self.cfg.map_world)
    }

    pub fn run(&self, stages: &[Stage]) -> Result<Vec<(Stage, StageReport)>, CliError> {
        for w in stages.windows(2) {
            if w[0] > w[1] {
                return Err(CliError::Config(format!("stage `{}` listed after `{}`", w[1], w[0])));
            }
        }
        let mut out = Vec::new();
        for &s in stages {
            log::info!("stage {s}");
            out.push((s, self.run_stage(s)?));
        }
        Ok(out)
    }

    pub fn run_stage(&self, stage: Stage) -> Result<StageReport, CliError> {
        match stage {
            Stage::GenWorlds => self.gen_worlds(),
            Stage::GenDemos => self.gen_demos(),
            Stage::Train => self.train(),
            Stage::Explore => self.explore(),
            Stage::Map => self.map(),
            Stage::Navigate => self.navigate(),
            Stage::Eval => self.eval(),
            Stage::Render => self.render(),
            Stage::BenchVpr => self.bench_vpr().map(|(r, _)| r),
        }
    }

    fn gen_worlds(&self) -> Result<StageReport, CliError> {
        let mut rep = StageReport::default();
        for spec in world_specs(&self.cfg) {
            let text = world_text(&self.cfg, &spec)?;
            self.emit(Stage::GenWorlds, &spec.file(), &text, &spec.name, spec.seed, &mut rep)?;
        }
        rep.lines.push(format!(
            "{} training and {} held-out worlds",
            self.cfg.worlds_train, self.cfg.worlds_heldout
        ));
        Ok(rep)
    }

    fn gen_demos(&self) -> Result<StageReport, CliError> {
        let mut rep = StageReport::default();
        let hash = self.hash(Stage::GenDemos);
        let mut steps = 0;
        for spec in self.specs(WorldRole::Train) {
            let world = self.load_world(Stage::GenDemos, &spec)?;
            let anchors = sample_anchors(&world, self.cfg.demo_spacing, spec.seed)?;
            let mut demo = generate_demonstration(&world, &anchors, spec.seed, &self.cfg.locomotion)?;
            demo.meta.insert("config_hash".into(), hash.clone());
            steps += demo.len();
            let rel = format!("demos/{}.demo", spec.name);
            self.emit(Stage::GenDemos, &rel, &write_demonstration(&demo), &spec.name, spec.seed, &mut rep)?;
        }
        rep.lines.push(format!("{steps} demonstration steps"));
        Ok(rep)
    }

    fn load_demos(&self) -> Result<Vec<Demonstration>, CliError> {
        self.specs(WorldRole::Train)
            .iter()
            .map(|s| Ok(read_demonstration(&self.read(Stage::Train, Stage::GenDemos, &format!("demos/{}.demo", s.name))?)?))
            .collect()
    }

    /// Trains the planner (resuming from a matching state checkpoint when
    /// one exists), then the action assigner.
    fn train(&self) -> Result<StageReport, CliError> {
        let mut rep = StageReport::default();
        let hash = self.hash(Stage::Train);
        let demos = self.load_demos()?;
        let config = self.cfg.train_config();
        let mut trainer = match self.store.read_checked(Stage::Train, Stage::Train, TRAIN_STATE_FILE, &hash) {
            Ok(text) => {
                let t = Trainer::from_checkpoint(&Checkpoint::parse(&text)?, &demos)?;
                if t.config != config {
                    return Err(CliError::dependency(Stage::Train, "state checkpoint disagrees with the config"));
                }
                log::info!("resuming training at epoch {}", t.epoch);
                rep.lines.push(format!("resumed at epoch {}", t.epoch));
                t
            }
            Err(_) => {
                let mut t = Trainer::new(&demos, config)?;
                t.bundle.meta.insert("config_hash".into(), hash.clone());
                t
            }
        };
        while !trainer.is_done() {
            let e = trainer.run_epoch(&demos)?;
            log::info!("epoch {}/{}: L_T {:.4} L_M {:.4}", e.epoch, trainer.config.epochs, e.task, e.motion);
            self.store.write(TRAIN_STATE_FILE, &trainer.checkpoint().to_text())?;
        }
        let outcome = trainer.finish();
        let mut bundle = outcome.bundle;
        let mut assigner_log: Vec<EpochLog> = Vec::new();
        if self.cfg.assigner_enabled {
            let (a, log) = train_assigner(&bundle, &demos, &self.cfg.assigner_config())?;
            bundle.assigner = Some(a);
            assigner_log = log;
        }
        let seed = self.cfg.train_seed;
        self.emit(Stage::Train, MODEL_FILE, &bundle.to_checkpoint().to_text(), "-", seed, &mut rep)?;
        let stamp = format!("# config_hash={hash}\n");
        let csv = stamp.clone() + &training_log_csv(&outcome.log);
        self.emit(Stage::Train, "model/training_log.csv", &csv, "-", seed, &mut rep)?;
        if self.cfg.assigner_enabled {
            let mut csv = stamp + "epoch,loss,lr\n";
            for e in &assigner_log {
                csv.push_str(&format!("{},{},{}\n", e.epoch, e.motion, e.lr));
            }
            self.emit(Stage::Train, "model/assigner_log.csv", &csv, "-", seed, &mut rep)?;
        }
        self.store.remove(TRAIN_STATE_FILE)?;
        if let Some(last) = outcome.log.last() {
            rep.lines.push(format!(
                "{} epochs, final L_T {:.4} L_M {:.4}",
                last.epoch, last.task, last.motion
            ));
        }
        Ok(rep)
    }

    fn explore(&self) -> Result<StageReport, CliError> {
        let mut rep = StageReport::default();
        let heldout = self.specs(WorldRole::Heldout);
        if heldout.is_empty() {
            return Err(CliError::Config("explore needs at least one held-out world (worlds.heldout)".into()));
        }
        let bundle = self.load_model(Stage::Explore)?;
        let hash = self.hash(Stage::Explore);
        let loco = self.cfg.locomotion;
        let (mut agent, mut random) = (Vec::new(), Vec::new());
        for spec in &heldout {
            let world = self.load_world(Stage::Explore, spec)?;
            for e in 0..self.cfg.episodes {
                let seed = self.cfg.seed + e as u64;
                for (policy, finals) in [(AGENT, &mut agent), (RANDOM, &mut random)] {
                    let mut log = if policy == AGENT {
                        run_exploration(&world, &bundle, self.cfg.budget, seed, &loco)?
                    } else {
                        run_random_walk(&world, self.cfg.budget, seed, &loco)?
                    };
                    log.meta.insert("config_hash".into(), hash.clone());
                    finals.push(log.final_ratio());
                    let rel = episode_file(policy, &spec.name, seed);
                    self.emit(Stage::Explore, &rel, &write_episode(&log), &spec.name, seed, &mut rep)?;
                }
            }
        }
        rep.lines.push(format!(
            "median coverage: {} {:.3}, random walk {:.3} over {} episodes",
            bundle.mode.name(),
            median(&agent),
            median(&random),
            agent.len()
        ));
        Ok(rep)
    }

    /// Calibration maps for every training world, closed at the top of the
    /// grid. Returns them with the map world's exploration episode.
    fn calibration_maps(&self, bundle: &ModelBundle) -> Result<(Vec<TopoGraph>, EpisodeLog), CliError> {
        let top = THRESHOLD_GRID[THRESHOLD_GRID.len() - 1];
        let params = self.cfg.vpr_params(top);
        let mut maps = Vec::new();
        let mut map_episode = None;
        for (i, spec) in self.specs(WorldRole::Train).iter().enumerate() {
            let world = self.load_world(Stage::Map, spec)?;
            let ep = run_exploration(&world, bundle, self.cfg.map_budget, self.cfg.map_seed, &self.cfg.locomotion)?;
            let codebook = fit_codebook(&ep, &params, self.cfg.map_seed)?;
            let mut g = build_chain_graph(&ep, bundle, &codebook.centroids, &params)?;
            close_loops(&mut g)?;
            maps.push(g);
            if i == self.cfg.map_world {
                map_episode = Some(ep);
            }
        }
        Ok((maps, map_episode.expect("map world is a training world")))
    }

    fn map(&self) -> Result<StageReport, CliError> {
        let mut rep = StageReport::default();
        let bundle = self.load_model(Stage::Map)?;
        let hash = self.hash(Stage::Map);
        let spec = self.map_world();
        let (threshold, episode) = match self.cfg.vpr_threshold {
            Threshold::Fixed(t) => {
                let world = self.load_world(Stage::Map, &spec)?;
                let ep = run_exploration(&world, &bundle, self.cfg.map_budget, self.cfg.map_seed, &self.cfg.locomotion)?;
                (t, ep)
            }
            Threshold::Auto => {
                let (maps, ep) = self.calibration_maps(&bundle)?;
                let t = calibrate_threshold(&maps, CALIBRATION_MAX_LOOSE)?;
                #[derive(Serialize)]
                struct Calibration<'a> {
                    config_hash: &'a str,
                    threshold: f64,
                    grid: &'a [f64],
                    max_loose_fraction: f64,
                    maps: usize,
                }
                let text = serde_json::to_string_pretty(&Calibration {
                    config_hash: &hash,
                    threshold: t,
                    grid: &THRESHOLD_GRID,
                    max_loose_fraction: CALIBRATION_MAX_LOOSE,
                    maps: maps.len(),
                })?;
                self.emit(Stage::Map, "map/calibration.json", &text, "-", self.cfg.map_seed, &mut rep)?;
                rep.lines.push(format!("calibrated threshold {t}"));
                (t, ep)
            }
        };
        let mut episode = episode;
        episode.meta.insert("config_hash".into(), hash.clone());
        let mut graph = build_map(&episode, &bundle, &self.cfg.vpr_params(threshold), self.cfg.map_seed)?;
        graph.meta.insert("config_hash".into(), hash);
        self.emit(Stage::Map, "map/episode.episode", &write_episode(&episode), &spec.name, self.cfg.map_seed, &mut rep)?;
        self.emit(Stage::Map, MAP_FILE, &write_graph(&graph)?, &spec.name, self.cfg.map_seed, &mut rep)?;
        rep.lines.push(format!(
            "{} nodes, {} loop edges at threshold {threshold}",
            graph.len(),
            graph.loop_edge_count()
        ));
        Ok(rep)
    }

    fn navigate(&self) -> Result<StageReport, CliError> {
        let mut rep = StageReport::default();
        let graph = self.load_graph(Stage::Navigate)?;
        let world = self.load_world(Stage::Navigate, &self.map_world())?;
        let metrics = evaluate_navigation(&world, &graph, &self.cfg.nav_config())?;
        #[derive(Serialize)]
        struct NavFile<'a> {
            config_hash: String,
            localization: topowalk::nav::Localization,
            uniform_weights: bool,
            #[serde(flatten)]
            metrics: &'a NavMetrics,
        }
        let text = serde_json::to_string_pretty(&NavFile {
            config_hash: self.hash(Stage::Navigate),
            localization: self.cfg.nav_localization,
            uniform_weights: self.cfg.nav_uniform,
            metrics: &metrics,
        })?;
        self.emit(Stage::Navigate, NAV_FILE, &text, &world.name, self.cfg.nav_seed, &mut rep)?;
        rep.lines.push(format!(
            "success {:.3}, SPL {:.3} over {} episodes",
            metrics.success_rate,
            metrics.spl,
            metrics.episodes.len()
        ));
        Ok(rep)
    }

    fn eval(&self) -> Result<StageReport, CliError> {
        let mut rep = StageReport::default();
        let mut finals: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        let mut curves: BTreeMap<&str, Vec<Vec<f64>>> = BTreeMap::new();
        let mut episodes = Vec::new();
        for spec in self.specs(WorldRole::Heldout) {
            for e in 0..self.cfg.episodes {
                let seed = self.cfg.seed + e as u64;
                let mut pair = [0.0; 2];
                for (k, policy) in [AGENT, RANDOM].into_iter().enumerate() {
                    let text = self.read(Stage::Eval, Stage::Explore, &episode_file(policy, &spec.name, seed))?;
                    let log = read_episode(&text)?;
                    pair[k] = log.final_ratio();
                    finals.entry(policy).or_default().push(log.final_ratio());
                    curves.entry(policy).or_default().push(log.ratio_curve());
                }
                episodes.push(EpisodeRecord {
                    world: spec.name.clone(),
                    seed,
                    agent: pair[0],
                    random: pair[1],
                });
            }
        }
        let summarize = |p: &str| {
            let f = &finals[p];
            let c = &curves[p];
            let steps = c.iter().map(Vec::len).min().unwrap_or(0);
            PolicySummary {
                median: median(f),
                mean: mean(f),
                mean_curve: (0..steps).map(|t| c.iter().map(|v| v[t]).sum::<f64>() / c.len() as f64).collect(),
            }
        };
        let (agent, random) = (summarize(AGENT), summarize(RANDOM));
        let graph = self.load_graph(Stage::Eval)?;
        let nav_text = self.read(Stage::Eval, Stage::Navigate, NAV_FILE)?;
        let nav: NavMetrics = serde_json::from_str(&nav_text)?;
        let metrics = EvalMetrics {
            config_hash: self.hash(Stage::Eval),
            mode: self.cfg.mode.name().into(),
            locomotion: self.cfg.locomotion.to_string(),
            budget: self.cfg.budget,
            coverage: CoverageSummary {
                sign_test: sign_test(&finals[AGENT], &finals[RANDOM]),
                median_gap: agent.median - random.median,
                agent,
                random,
                episodes,
            },
            map: MapSummary {
                world: graph.world_id.clone(),
                nodes: graph.len(),
                loop_edges: graph.loop_edge_count(),
                threshold: graph.params.threshold,
            },
            navigation: NavSummary {
                success_rate: nav.success_rate,
                spl: nav.spl,
                episodes: nav.episodes.len(),
            },
        };
        let text = serde_json::to_string_pretty(&metrics)?;
        self.emit(Stage::Eval, EVAL_FILE, &text, "-", self.cfg.seed, &mut rep)?;
        rep.lines.push(format!(
            "coverage median {:.3} vs random {:.3} (sign test p {:.4}); navigation success {:.3}, SPL {:.3}",
            metrics.coverage.agent.median,
            metrics.coverage.random.median,
            metrics.coverage.sign_test.p_value,
            metrics.navigation.success_rate,
            metrics.navigation.spl
        ));
        Ok(rep)
    }

    fn render(&self) -> Result<StageReport, CliError> {
        let mut rep = StageReport::default();
        let hash = self.hash(Stage::Render);
        let graph = self.load_graph(Stage::Render)?;
        let spec = self.map_world();
        let world = self.load_world(Stage::Render, &spec)?;
        self.emit(Stage::Render, "render/map.svg", &render_graph(&world, &graph, &hash), &spec.name, self.cfg.map_seed, &mut rep)?;
        for spec in self.specs(WorldRole::Heldout) {
            let world = self.load_world(Stage::Render, &spec)?;
            for policy in [AGENT, RANDOM] {
                let rel = episode_file(policy, &spec.name, self.cfg.seed);
                let log = read_episode(&self.read(Stage::Render, Stage::Explore, &rel)?)?;
                let svg = render_svg(&world, &log.poses, &[], &hash);
                let out = format!("render/{policy}-{}-s{:03}.svg", spec.name, self.cfg.seed);
                self.emit(Stage::Render, &out, &svg, &spec.name, self.cfg.seed, &mut rep)?;
            }
        }
        rep.lines.push(format!("{} images", rep.artifacts.len()));
        Ok(rep)
    }

    /// Times ball-tree against exhaustive loop detection on a fresh
    /// `bench.nodes`-step map at the mapping threshold. Timings go to the
    /// report only, so the artifact stays reproducible.
    pub fn bench_vpr(&self) -> Result<(StageReport, BenchOutcome), CliError> {
        let mut rep = StageReport::default();
        let bundle = self.load_model(Stage::BenchVpr)?;
        let threshold = self.load_graph(Stage::BenchVpr)?.params.threshold;
        let spec = self.map_world();
        let world = self.load_world(Stage::BenchVpr, &spec)?;
        let params = self.cfg.vpr_params(threshold);
        let ep = run_exploration(&world, &bundle, self.cfg.bench_nodes, self.cfg.map_seed, &self.cfg.locomotion)?;
        let codebook = fit_codebook(&ep, &params, self.cfg.map_seed)?;
        let chain = build_chain_graph(&ep, &bundle, &codebook.centroids, &params)?;
        let outcome = time_loop_detection(&chain)?;
        #[derive(Serialize)]
        struct BenchFile {
            config_hash: String,
            world: String,
            nodes: usize,
            threshold: f64,
            loop_pairs: usize,
            identical: bool,
        }
        let text = serde_json::to_string_pretty(&BenchFile {
            config_hash: self.hash(Stage::BenchVpr),
            world: spec.name.clone(),
            nodes: outcome.nodes,
            threshold,
            loop_pairs: outcome.pairs,
            identical: outcome.identical,
        })?;
        self.emit(Stage::BenchVpr, BENCH_FILE, &text, &spec.name, self.cfg.map_seed, &mut rep)?;
        rep.lines.push(format!(
            "{} nodes: ball tree {:.3} s, exhaustive {:.3} s ({:.2}x), {} loop pairs, identical: {}",
            outcome.nodes,
            outcome.tree_secs,
            outcome.exhaustive_secs,
            outcome.exhaustive_secs / outcome.tree_secs,
            outcome.pairs,
            outcome.identical
        ));
        Ok((rep, outcome))
    }
}

/// Best of two runs of each detector on copies of `chain`.
pub fn time_loop_detection(chain: &TopoGraph) -> Result<BenchOutcome, CliError> {
    let mut tree_secs = f64::INFINITY;
    let mut exhaustive_secs = f64::INFINITY;
    let (mut by_tree, mut by_scan) = (chain.clone(), chain.clone());
    for _ in 0..2 {
        let mut g = chain.clone();
        let t = Instant::now();
        close_loops(&mut g)?;
        tree_secs = tree_secs.min(t.elapsed().as_secs_f64());
        by_tree = g;
        let mut g = chain.clone();
        let t = Instant::now();
        close_loops_exhaustive(&mut g)?;
        exhaustive_secs = exhaustive_secs.min(t.elapsed().as_secs_f64());
        by_scan = g;
    }
    Ok(BenchOutcome {
        nodes: chain.len(),
        tree_secs,
        exhaustive_secs,
        pairs: by_tree.loop_pairs().len(),
        identical: by_tree.loop_pairs() == by_scan.loop_pairs(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EpisodeRecord {
    pub world: String,
    pub seed: u64,
    pub agent: f64,
    pub random: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PolicySummary {
    pub median: f64,
    pub mean: f64,
    /// Coverage ratio after each step, averaged over episodes.
    pub mean_curve: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageSummary {
    pub agent: PolicySummary,
    pub random: PolicySummary,
    pub median_gap: f64,
    pub sign_test: SignTest,
    pub episodes: Vec<EpisodeRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MapSummary {
    pub world: String,
    pub nodes: usize,
    pub loop_edges: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NavSummary {
    pub success_rate: f64,
    pub spl: f64,
    pub episodes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalMetrics {
    pub config_hash: String,
    pub mode: String,
    pub locomotion: String,
    pub budget: usize,
    pub coverage: CoverageSummary,
    pub map: MapSummary,
    pub navigation: NavSummary,
}
