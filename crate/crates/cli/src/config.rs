//! `key = value` run configuration.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use topowalk::model::{AssignerConfig, ModelDims, SupervisionMode, TrainConfig};
use topowalk::nav::{Localization, NavConfig};
use topowalk::nn::AdamConfig;
use topowalk::topo::VprParams;
use topowalk::world::GeneratorParams;
use topowalk::Locomotion;

use crate::error::CliError;
use crate::stage::Stage;

/// Floor-plan preset for generated worlds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorldSize {
    Default,
    Small,
}

impl WorldSize {
    pub fn params(self) -> GeneratorParams {
        match self {
            WorldSize::Default => GeneratorParams::default(),
            WorldSize::Small => GeneratorParams::small(),
        }
    }
}

/// Loop-closing threshold: fixed, or calibrated on the training worlds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Fixed(f64),
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub worlds_train: usize,
    pub worlds_heldout: usize,
    pub worlds_seed: u64,
    pub worlds_size: WorldSize,
    pub locomotion: Locomotion,
    pub demo_spacing: f64,
    pub mode: SupervisionMode,
    pub train_epochs: u32,
    pub train_lr: f64,
    pub train_batch: usize,
    pub train_clip: f64,
    pub train_decay_every: u32,
    pub train_decay_factor: f64,
    pub train_d: usize,
    pub train_seed: u64,
    pub assigner_enabled: bool,
    pub assigner_epochs: u32,
    pub assigner_draws: Option<usize>,
    pub seed: u64,
    pub budget: usize,
    pub episodes: usize,
    pub map_world: usize,
    pub map_budget: usize,
    pub map_seed: u64,
    pub vpr_k: usize,
    pub vpr_iters: usize,
    pub vpr_leaf: usize,
    pub vpr_threshold: Threshold,
    pub vpr_top_n: usize,
    pub vpr_gap: usize,
    pub nav_episodes: usize,
    pub nav_seed: u64,
    pub nav_localization: Localization,
    pub nav_uniform: bool,
    pub bench_nodes: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        let vpr = VprParams::default();
        RunConfig {
            worlds_train: 12,
            worlds_heldout: 5,
            worlds_seed: 0,
            worlds_size: WorldSize::Default,
            locomotion: Locomotion::FINE,
            demo_spacing: topowalk::expert::DEFAULT_SPACING,
            mode: SupervisionMode::Full,
            train_epochs: 70,
            train_lr: adam.lr,
            train_batch: 32,
            train_clip: 5.0,
            train_decay_every: adam.decay_every,
            train_decay_factor: adam.decay_factor,
            train_d: 64,
            train_seed: 0,
            assigner_enabled: true,
            assigner_epochs: 70,
            assigner_draws: None,
            seed: 0,
            budget: 1000,
            episodes: 10,
            map_world: 0,
            map_budget: 2000,
            map_seed: 0,
            vpr_k: vpr.k,
            vpr_iters: vpr.kmeans_iters,
            vpr_leaf: vpr.leaf_size,
            vpr_threshold: Threshold::Fixed(vpr.threshold),
            vpr_top_n: vpr.top_n,
            vpr_gap: vpr.temporal_gap,
            nav_episodes: 50,
            nav_seed: 0,
            nav_localization: Localization::SelfRetrieval,
            nav_uniform: false,
            bench_nodes: 5000,
            out: PathBuf::from("runs/default"),
        }
    }
}

/// Every key with the stage that owns it. `out` is owned by none: it never
/// changes what a stage computes.
pub const KEYS: &[(&str, Option<Stage>)] = &[
    ("worlds.train", Some(Stage::GenWorlds)),
    ("worlds.heldout", Some(Stage::GenWorlds)),
    ("worlds.seed", Some(Stage::GenWorlds)),
    ("worlds.size", Some(Stage::GenWorlds)),
    ("locomotion", Some(Stage::GenDemos)),
    ("demo.spacing", Some(Stage::GenDemos)),
    ("mode", Some(Stage::Train)),
    ("train.epochs", Some(Stage::Train)),
    ("train.lr", Some(Stage::Train)),
    ("train.batch", Some(Stage::Train)),
    ("train.clip", Some(Stage::Train)),
    ("train.decay_every", Some(Stage::Train)),
    ("train.decay_factor", Some(Stage::Train)),
    ("train.d", Some(Stage::Train)),
    ("train.seed", Some(Stage::Train)),
    ("assigner.enabled", Some(Stage::Train)),
    ("assigner.epochs", Some(Stage::Train)),
    ("assigner.draws", Some(Stage::Train)),
    ("seed", Some(Stage::Explore)),
    ("budget", Some(Stage::Explore)),
    ("episodes", Some(Stage::Explore)),
    ("map.world", Some(Stage::Map)),
    ("map.budget", Some(Stage::Map)),
    ("map.seed", Some(Stage::Map)),
    ("vpr.k", Some(Stage::Map)),
    ("vpr.iters", Some(Stage::Map)),
    ("vpr.leaf", Some(Stage::Map)),
    ("vpr.threshold", Some(Stage::Map)),
    ("vpr.top_n", Some(Stage::Map)),
    ("vpr.gap", Some(Stage::Map)),
    ("nav.episodes", Some(Stage::Navigate)),
    ("nav.seed", Some(Stage::Navigate)),
    ("nav.localization", Some(Stage::Navigate)),
    ("nav.uniform", Some(Stage::Navigate)),
    ("bench.nodes", Some(Stage::BenchVpr)),
    ("out", None),
];

fn parse_value<T: FromStr>(key: &str, value: &str, what: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("key `{key}`: expected {what}, got `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("key `{key}`: expected true or false, got `{value}`"))),
    }
}

impl RunConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        match key {
            "worlds.train" => self.worlds_train = parse_value(key, v, "a count")?,
            "worlds.heldout" => self.worlds_heldout = parse_value(key, v, "a count")?,
            "worlds.seed" => self.worlds_seed = parse_value(key, v, "an integer seed")?,
            "worlds.size" => {
                self.worlds_size = match v {
                    "default" => WorldSize::Default,
                    "small" => WorldSize::Small,
                    _ => return Err(CliError::Config(format!("key `{key}`: expected default or small, got `{v}`"))),
                }
            }
            "locomotion" => {
                self.locomotion = v
                    .parse()
                    .map_err(|e| CliError::Config(format!("key `{key}`: {e}")))?
            }
            "demo.spacing" => self.demo_spacing = parse_value(key, v, "a length in metres")?,
            "mode" => {
                self.mode = v.parse().map_err(|_| {
                    let names: Vec<&str> = SupervisionMode::ALL.iter().map(|m| m.name()).collect();
                    CliError::Config(format!("key `{key}`: expected one of {}, got `{v}`", names.join("|")))
                })?
            }
            "train.epochs" => self.train_epochs = parse_value(key, v, "an epoch count")?,
            "train.lr" => self.train_lr = parse_value(key, v, "a number")?,
            "train.batch" => self.train_batch = parse_value(key, v, "a count")?,
            "train.clip" => self.train_clip = parse_value(key, v, "a number")?,
            "train.decay_every" => self.train_decay_every = parse_value(key, v, "an epoch count")?,
            "train.decay_factor" => self.train_decay_factor = parse_value(key, v, "a number")?,
            "train.d" => self.train_d = parse_value(key, v, "a feature width")?,
            "train.seed" => self.train_seed = parse_value(key, v, "an integer seed")?,
            "assigner.enabled" => self.assigner_enabled = parse_bool(key, v)?,
            "assigner.epochs" => self.assigner_epochs = parse_value(key, v, "an epoch count")?,
            "assigner.draws" => {
                self.assigner_draws = if v == "auto" {
                    None
                } else {
                    Some(parse_value(key, v, "a count or `auto`")?)
                }
            }
            "seed" => self.seed = parse_value(key, v, "an integer seed")?,
            "budget" => self.budget = parse_value(key, v, "a step count")?,
            "episodes" => self.episodes = parse_value(key, v, "a count")?,
            "map.world" => self.map_world = parse_value(key, v, "a training world index")?,
            "map.budget" => self.map_budget = parse_value(key, v, "a step count")?,
            "map.seed" => self.map_seed = parse_value(key, v, "an integer seed")?,
            "vpr.k" => self.vpr_k = parse_value(key, v, "a cluster count")?,
            "vpr.iters" => self.vpr_iters = parse_value(key, v, "an iteration count")?,
            "vpr.leaf" => self.vpr_leaf = parse_value(key, v, "a leaf size")?,
            "vpr.threshold" => {
                self.vpr_threshold = if v == "auto" {
                    Threshold::Auto
                } else {
                    Threshold::Fixed(parse_value(key, v, "a distance or `auto`")?)
                }
            }
            "vpr.top_n" => self.vpr_top_n = parse_value(key, v, "a count")?,
            "vpr.gap" => self.vpr_gap = parse_value(key, v, "a step count")?,
            "nav.episodes" => self.nav_episodes = parse_value(key, v, "a count")?,
            "nav.seed" => self.nav_seed = parse_value(key, v, "an integer seed")?,
            "nav.localization" => {
                self.nav_localization = match v {
                    "self-retrieval" => Localization::SelfRetrieval,
                    "visual" => Localization::Visual,
                    _ => {
                        return Err(CliError::Config(format!(
                            "key `{key}`: expected self-retrieval or visual, got `{v}`"
                        )))
                    }
                }
            }
            "nav.uniform" => self.nav_uniform = parse_bool(key, v)?,
            "bench.nodes" => self.bench_nodes = parse_value(key, v, "a node count")?,
            "out" => self.out = PathBuf::from(v),
            _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Text form of one key, in the syntax `set` accepts.
    pub fn get(&self, key: &str) -> Option<String> {
        let s = match key {
            "worlds.train" => self.worlds_train.to_string(),
            "worlds.heldout" => self.worlds_heldout.to_string(),
            "worlds.seed" => self.worlds_seed.to_string(),
            "worlds.size" => match self.worlds_size {
                WorldSize::Default => "default".into(),
                WorldSize::Small => "small".into(),
            },
            "locomotion" => self.locomotion.to_string(),
            "demo.spacing" => self.demo_spacing.to_string(),
            "mode" => self.mode.name().into(),
            "train.epochs" => self.train_epochs.to_string(),
            "train.lr" => self.train_lr.to_string(),
            "train.batch" => self.train_batch.to_string(),
            "train.clip" => self.train_clip.to_string(),
            "train.decay_every" => self.train_decay_every.to_string(),
            "train.decay_factor" => self.train_decay_factor.to_string(),
            "train.d" => self.train_d.to_string(),
            "train.seed" => self.train_seed.to_string(),
            "assigner.enabled" => self.assigner_enabled.to_string(),
            "assigner.epochs" => self.assigner_epochs.to_string(),
            "assigner.draws" => self.assigner_draws.map_or("auto".into(), |d| d.to_string()),
            "seed" => self.seed.to_string(),
            "budget" => self.budget.to_string(),
            "episodes" => self.episodes.to_string(),
            "map.world" => self.map_world.to_string(),
            "map.budget" => self.map_budget.to_string(),
            "map.seed" => self.map_seed.to_string(),
            "vpr.k" => self.vpr_k.to_string(),
            "vpr.iters" => self.vpr_iters.to_string(),
            "vpr.leaf" => self.vpr_leaf.to_string(),
            "vpr.threshold" => match self.vpr_threshold {
                Threshold::Fixed(t) => t.to_string(),
                Threshold::Auto => "auto".into(),
            },
            "vpr.top_n" => self.vpr_top_n.to_string(),
            "vpr.gap" => self.vpr_gap.to_string(),
            "nav.episodes" => self.nav_episodes.to_string(),
            "nav.seed" => self.nav_seed.to_string(),
            "nav.localization" => match self.nav_localization {
                Localization::SelfRetrieval => "self-retrieval".into(),
                Localization::Visual => "visual".into(),
            },
            "nav.uniform" => self.nav_uniform.to_string(),
            "bench.nodes" => self.bench_nodes.to_string(),
            "out" => self.out.display().to_string(),
            _ => return None,
        };
        Some(s)
    }

    /// Parses a config file body, then applies `overrides` in order.
    pub fn parse(text: &str, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key=value, got `{line}`", i + 1)))?;
            let k = k.trim();
            if !seen.insert(k.to_string()) {
                return Err(CliError::Config(format!("line {}: key `{k}` given twice", i + 1)));
            }
            cfg.set(k, v).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("line {}: {m}", i + 1)),
                other => other,
            })?;
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |k: &str, why: &str| Err(CliError::Config(format!("key `{k}`: {why}")));
        if self.worlds_train == 0 || self.worlds_train > 100 {
            return bad("worlds.train", "must be in 1..=100");
        }
        if self.worlds_heldout > 100 {
            return bad("worlds.heldout", "must be at most 100");
        }
        if self.map_world >= self.worlds_train {
            return bad("map.world", "must index a training world");
        }
        if !(self.demo_spacing > 0.0) {
            return bad("demo.spacing", "must be positive");
        }
        if self.train_d == 0 {
            return bad("train.d", "must be positive");
        }
        if self.train_batch == 0 {
            return bad("train.batch", "must be positive");
        }
        if self.budget <= topowalk::model::MEMORY {
            return bad("budget", "must exceed the bootstrap length");
        }
        if self.map_budget <= topowalk::model::MEMORY {
            return bad("map.budget", "must exceed the bootstrap length");
        }
        if self.bench_nodes <= topowalk::model::MEMORY {
            return bad("bench.nodes", "must exceed the bootstrap length");
        }
        if self.vpr_k == 0 || self.vpr_leaf == 0 || self.vpr_top_n == 0 {
            return bad("vpr", "k, leaf and top_n must be positive");
        }
        if let Threshold::Fixed(t) = self.vpr_threshold {
            if !(t >= 0.0) {
                return bad("vpr.threshold", "must be non-negative");
            }
        }
        Ok(())
    }

    /// Canonical `key=value` text of every key.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, _) in KEYS {
            let _ = writeln!(out, "{k}={}", self.get(k).expect("listed key"));
        }
        out
    }

    /// Hash of the keys that can change `stage`'s output: its own and those
    /// of every stage feeding it.
    pub fn stage_hash(&self, stage: Stage) -> String {
        let inputs = stage.hash_inputs();
        let mut h = Sha256::new();
        h.update(b"topowalk-config-v1\n");
        for (k, owner) in KEYS {
            if owner.is_some_and(|o| inputs.contains(&o)) {
                h.update(format!("{k}={}\n", self.get(k).expect("listed key")).as_bytes());
            }
        }
        hex::encode(&h.finalize()[..8])
    }

    pub fn model_dims(&self) -> ModelDims {
        let d = self.train_d;
        ModelDims {
            feature: d,
            encoder_hidden: 2 * d,
            lstm_hidden: d,
            motion_hidden: d,
        }
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.train_lr,
            decay_every: self.train_decay_every,
            decay_factor: self.train_decay_factor,
            ..AdamConfig::default()
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            mode: self.mode,
            epochs: self.train_epochs,
            adam: self.adam(),
            batch: self.train_batch,
            clip_norm: self.train_clip,
            seed: self.train_seed,
            dims: self.model_dims(),
        }
    }

    pub fn assigner_config(&self) -> AssignerConfig {
        AssignerConfig {
            epochs: self.assigner_epochs,
            adam: self.adam(),
            batch: self.train_batch,
            clip_norm: self.train_clip,
            seed: self.train_seed,
            epoch_draws: self.assigner_draws,
            ..AssignerConfig::default()
        }
    }

    /// VPR parameters with `threshold` standing in for an `auto` setting.
    pub fn vpr_params(&self, threshold: f64) -> VprParams {
        VprParams {
            k: self.vpr_k,
            kmeans_iters: self.vpr_iters,
            leaf_size: self.vpr_leaf,
            threshold,
            top_n: self.vpr_top_n,
            temporal_gap: self.vpr_gap,
        }
    }

    pub fn nav_config(&self) -> NavConfig {
        NavConfig {
            episodes: self.nav_episodes,
            seed: self.nav_seed,
            localization: self.nav_localization,
            uniform_weights: self.nav_uniform,
            locomotion: self.locomotion,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::parse("", &[]).unwrap(), RunConfig::default());
        assert_eq!(RunConfig::parse("# nothing\n\n", &[]).unwrap(), RunConfig::default());
    }

    #[test]
    fn every_key_round_trips() {
        let cfg = RunConfig::default();
        let again = RunConfig::parse(&cfg.to_text(), &[]).unwrap();
        assert_eq!(again, cfg);
        for (k, _) in KEYS {
            assert!(cfg.get(k).is_some(), "{k}");
        }
    }

    #[test]
    fn unknown_key_is_named() {
        match RunConfig::parse("budget=10\nvpr.kk=3\n", &[]) {
            Err(CliError::Config(m)) => assert!(m.contains("vpr.kk") && m.contains("line 2"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn type_mismatch_is_named() {
        match RunConfig::parse("vpr.k=sixteen\n", &[]) {
            Err(CliError::Config(m)) => assert!(m.contains("vpr.k"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flags_override_file() {
        let cfg = RunConfig::parse("budget=1000\n", &[("budget".into(), "500".into())]).unwrap();
        assert_eq!(cfg.budget, 500);
    }

    #[test]
    fn vpr_k_reaches_map_params() {
        let cfg = RunConfig::parse("vpr.k=16\nvpr.threshold=0.4\n", &[]).unwrap();
        let p = cfg.vpr_params(0.4);
        assert_eq!(p.k, 16);
        assert_eq!(cfg.vpr_threshold, Threshold::Fixed(0.4));
    }

    #[test]
    fn stage_hash_tracks_only_inputs() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.nav_episodes = 7;
        assert_eq!(a.stage_hash(Stage::Train), b.stage_hash(Stage::Train));
        assert_eq!(a.stage_hash(Stage::Map), b.stage_hash(Stage::Map));
        assert_ne!(a.stage_hash(Stage::Navigate), b.stage_hash(Stage::Navigate));
        b.out = "elsewhere".into();
        assert_eq!(a.stage_hash(Stage::GenWorlds), b.stage_hash(Stage::GenWorlds));
        let mut c = a.clone();
        c.worlds_seed = 9;
        assert_ne!(a.stage_hash(Stage::Eval), c.stage_hash(Stage::Eval));
    }
}
