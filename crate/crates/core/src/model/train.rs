use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::bundle::{encoder_input, history_indices, normalize, ModelBundle, ModelDims, PlannerParams};
use super::windows::WindowSampler;
use super::{SupervisionMode, WINDOW_ACTIONS, WINDOW_OBS};
use crate::error::{Error, Result};
use crate::expert::Demonstration;
use crate::nn::{
    clip_global_norm, cross_entropy_loss, l2_loss, AdamConfig, AdamState, Checkpoint, LossReport, MlpTrace,
    ParamTensor, Parameterized,
};
use crate::rng;
use crate::world::{Action, Observation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: SupervisionMode,
    pub epochs: u32,
    pub adam: AdamConfig,
    pub batch: usize,
    pub clip_norm: f64,
    pub seed: u64,
    pub dims: ModelDims,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: SupervisionMode::Full,
            epochs: 70,
            adam: AdamConfig::default(),
            batch: 32,
            clip_norm: 5.0,
            seed: 0,
            dims: ModelDims::default(),
        }
    }
}

/// Epoch-mean losses; `epoch` counts from 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: u32,
    pub task: f64,
    pub motion: f64,
    pub lr: f64,
}

pub fn training_log_csv(log: &[EpochLog]) -> String {
    let mut out = String::from("epoch,L_T,L_M,lr\n");
    for e in log {
        let _ = writeln!(out, "{},{},{},{}", e.epoch, e.task, e.motion, e.lr);
    }
    out
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub bundle: ModelBundle,
    pub log: Vec<EpochLog>,
}

struct Encoded {
    trace: MlpTrace,
    feature: Vec<f64>,
    norm: f64,
}

fn encode_traced(params: &PlannerParams, obs: &Observation) -> Encoded {
    let trace = params.encoder.trace(&encoder_input(obs));
    let (feature, norm) = normalize(trace.output());
    Encoded { trace, feature, norm }
}

/// Backpropagates `df` through the normalisation and the encoder.
fn encoder_backward(params: &PlannerParams, enc: &Encoded, df: &[f64], grads: &mut PlannerParams) {
    if enc.norm == 0.0 {
        return;
    }
    let dot: f64 = enc.feature.iter().zip(df).map(|(f, g)| f * g).sum();
    let dz: Vec<f64> = enc.feature.iter().zip(df).map(|(f, g)| (g - f * dot) / enc.norm).collect();
    params.encoder.backward(&enc.trace, &dz, &mut grads.encoder);
}

/// Loss of one window under `mode`; accumulates parameter gradients into
/// `grads` when given. `obs` holds `WINDOW_OBS` frames, `actions` the
/// `WINDOW_ACTIONS` expert actions, and `history` the frames whose mean
/// feature seeds the first LSTM layer (history mode only).
pub fn window_loss(
    params: &PlannerParams,
    mode: SupervisionMode,
    obs: &[&Observation],
    actions: &[Action],
    history: &[&Observation],
    grads: Option<&mut PlannerParams>,
) -> Result<LossReport> {
    window_loss_with_targets(params, mode, obs, actions, history, None, grads)
}

/// `window_loss` with the regression targets optionally replaced by fixed
/// vectors (`targets[k]` stands in for the feature of frame `k + 1`).
pub(crate) fn window_loss_with_targets(
    params: &PlannerParams,
    mode: SupervisionMode,
    obs: &[&Observation],
    actions: &[Action],
    history: &[&Observation],
    targets: Option<&[Vec<f64>]>,
    grads: Option<&mut PlannerParams>,
) -> Result<LossReport> {
    if obs.len() != WINDOW_OBS || actions.len() != WINDOW_ACTIONS {
        return Err(Error::Shape(format!(
            "window needs {WINDOW_OBS} observations and {WINDOW_ACTIONS} actions, got {} and {}",
            obs.len(),
            actions.len()
        )));
    }
    let d = params.head.fan_out();
    let enc: Vec<Encoded> = obs.iter().map(|o| encode_traced(params, o)).collect();
    let hist: Vec<Encoded> = if mode.uses_history() {
        history.iter().map(|o| encode_traced(params, o)).collect()
    } else {
        Vec::new()
    };
    let h0 = if hist.is_empty() {
        None
    } else {
        let mut m = vec![0.0; d];
        for e in &hist {
            for (a, b) in m.iter_mut().zip(&e.feature) {
                *a += b;
            }
        }
        m.iter_mut().for_each(|v| *v /= hist.len() as f64);
        Some(m)
    };

    let inputs: Vec<Vec<f64>> = enc[..WINDOW_ACTIONS].iter().map(|e| e.feature.clone()).collect();
    let lstm = params.task.trace(&inputs, h0.as_deref());
    let hidden = lstm.outputs();
    let hall: Vec<Vec<f64>> = hidden.iter().map(|h| params.head.apply(h)).collect();

    let mut report = LossReport::default();
    let mut d_feat = vec![vec![0.0; d]; WINDOW_OBS];
    let mut d_hall = vec![vec![0.0; d]; WINDOW_ACTIONS];
    let mut d_hidden = vec![vec![0.0; params.task.hidden()]; WINDOW_ACTIONS];

    for k in mode.task_steps() {
        let target = targets.map_or(&enc[k + 1].feature, |t| &t[k]);
        let (l, g) = l2_loss(&hall[k], target)?;
        report.task += l;
        for j in 0..d {
            d_hall[k][j] += g[j];
            if targets.is_none() {
                d_feat[k + 1][j] -= g[j];
            }
        }
    }
    let mut motion_traces = Vec::new();
    for k in mode.motion_steps() {
        let mut x = Vec::with_capacity(2 * d);
        x.extend_from_slice(&enc[k].feature);
        x.extend_from_slice(&hall[k]);
        let tr = params.motion.trace(&x);
        let (l, g) = cross_entropy_loss(tr.output(), actions[k].index())?;
        report.motion += l;
        motion_traces.push((k, tr, g));
    }
    let mut head_terms = Vec::new();
    if mode.uses_action_head() {
        for k in 0..WINDOW_ACTIONS {
            let logits = params.action_head.apply(&hidden[k]);
            let (l, g) = cross_entropy_loss(&logits, actions[k].index())?;
            report.motion += l;
            head_terms.push((k, g));
        }
    }
    if !report.is_finite() {
        return Err(Error::Numeric(format!("window loss {report:?}")));
    }
    let Some(grads) = grads else { return Ok(report) };

    for (k, tr, g) in &motion_traces {
        let dx = params.motion.backward(tr, g, &mut grads.motion);
        for j in 0..d {
            d_feat[*k][j] += dx[j];
            d_hall[*k][j] += dx[d + j];
        }
    }
    for (k, g) in &head_terms {
        let dh = params.action_head.backward(&hidden[*k], g, &mut grads.action_head);
        for (a, b) in d_hidden[*k].iter_mut().zip(dh) {
            *a += b;
        }
    }
    for k in 0..WINDOW_ACTIONS {
        if d_hall[k].iter().any(|v| *v != 0.0) {
            let dh = params.head.backward(&hidden[k], &d_hall[k], &mut grads.head);
            for (a, b) in d_hidden[k].iter_mut().zip(dh) {
                *a += b;
            }
        }
    }
    let (d_inputs, dh0) = params.task.backward(&lstm, &d_hidden, &mut grads.task);
    for (k, di) in d_inputs.iter().enumerate() {
        for (a, b) in d_feat[k].iter_mut().zip(di) {
            *a += b;
        }
    }
    for (e, df) in enc.iter().zip(&d_feat) {
        encoder_backward(params, e, df, grads);
    }
    if !hist.is_empty() {
        let share: Vec<f64> = dh0.iter().map(|v| v / hist.len() as f64).collect();
        for e in &hist {
            encoder_backward(params, e, &share, grads);
        }
    }
    Ok(report)
}

/// Resumable training loop. Batch `b` draws its windows from
/// `rng::stream(seed, b)`, so the sequence of updates depends only on the
/// seed and the batch counter.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub config: TrainConfig,
    pub bundle: ModelBundle,
    pub adam: AdamState,
    sampler: WindowSampler,
    /// Zero-based epoch in progress.
    pub epoch: u32,
    /// Windows drawn so far in the current epoch.
    pub drawn: usize,
    pub global_batch: u64,
    pub log: Vec<EpochLog>,
    acc: (f64, f64, usize),
}

const INIT_STREAM: u64 = u64::MAX;

impl Trainer {
    pub fn new(demos: &[Demonstration], config: TrainConfig) -> Result<Self> {
        let sampler = WindowSampler::new(demos)?;
        let mut init = rng::stream(config.seed, INIT_STREAM);
        let mut bundle = ModelBundle::new(config.dims, config.mode, &mut init);
        bundle.meta.insert("seed".into(), config.seed.to_string());
        let adam = AdamState::new(config.adam, &bundle.params.tensors());
        Ok(Trainer {
            config,
            bundle,
            adam,
            sampler,
            epoch: 0,
            drawn: 0,
            global_batch: 0,
            log: Vec::new(),
            acc: (0.0, 0.0, 0),
        })
    }

    pub fn is_done(&self) -> bool {
        self.epoch >= self.config.epochs
    }

    pub fn sampler(&self) -> &WindowSampler {
        &self.sampler
    }

    /// One optimiser step. Returns the batch-mean losses.
    pub fn step(&mut self, demos: &[Demonstration]) -> Result<LossReport> {
        let per_epoch = self.sampler.epoch_draws();
        let n = self.config.batch.min(per_epoch - self.drawn);
        let mut rng = rng::stream(self.config.seed, self.global_batch);
        let mut grads = self.bundle.params.zeros_like();
        let mut total = LossReport::default();
        for _ in 0..n {
            let w = self.sampler.draw(&mut rng);
            let obs = w.observations(demos);
            let actions = w.actions(demos);
            let history: Vec<&Observation> = if self.config.mode.uses_history() {
                history_indices(w.start).iter().map(|&i| &demos[w.demo].steps[i].0).collect()
            } else {
                Vec::new()
            };
            let r = window_loss(&self.bundle.params, self.config.mode, &obs, &actions, &history, Some(&mut grads))
                .map_err(|e| self.diverged(e.to_string()))?;
            total.task += r.task;
            total.motion += r.motion;
        }
        let scale = 1.0 / n as f64;
        total.task *= scale;
        total.motion *= scale;
        for t in grads.tensors_mut() {
            t.values.iter_mut().for_each(|v| *v *= scale);
        }
        clip_global_norm(grads.tensors_mut(), self.config.clip_norm);
        if let Err(e) = self.adam.step(self.bundle.params.tensors_mut(), grads.tensors(), self.epoch) {
            return Err(self.diverged(e.to_string()));
        }
        self.global_batch += 1;
        self.drawn += n;
        self.acc.0 += total.task * n as f64;
        self.acc.1 += total.motion * n as f64;
        self.acc.2 += n;
        if self.drawn >= per_epoch {
            let k = self.acc.2 as f64;
            self.log.push(EpochLog {
                epoch: self.epoch + 1,
                task: self.acc.0 / k,
                motion: self.acc.1 / k,
                lr: self.config.adam.effective_lr(self.epoch),
            });
            self.acc = (0.0, 0.0, 0);
            self.drawn = 0;
            self.epoch += 1;
        }
        Ok(total)
    }

    fn diverged(&self, message: String) -> Error {
        Error::Diverged {
            epoch: self.epoch,
            batch: self.global_batch,
            message,
            checkpoint: Box::new(self.checkpoint()),
        }
    }

    pub fn run_epoch(&mut self, demos: &[Demonstration]) -> Result<EpochLog> {
        let start = self.epoch;
        while self.epoch == start {
            self.step(demos)?;
        }
        Ok(*self.log.last().expect("epoch completed"))
    }

    pub fn run(mut self, demos: &[Demonstration]) -> Result<TrainOutcome> {
        while !self.is_done() {
            let e = self.run_epoch(demos)?;
            log::info!(
                "{} epoch {}/{}: L_T {:.4} L_M {:.4} lr {:.2e}",
                self.config.mode,
                e.epoch,
                self.config.epochs,
                e.task,
                e.motion,
                e.lr
            );
        }
        Ok(self.finish())
    }

    pub fn finish(mut self) -> TrainOutcome {
        self.bundle.meta.insert("epochs".into(), self.epoch.to_string());
        TrainOutcome {
            bundle: self.bundle,
            log: self.log,
        }
    }

    /// Full training state: parameters, optimiser moments, counters and log.
    pub fn checkpoint(&self) -> Checkpoint {
        let mut ck = self.bundle.to_checkpoint();
        let c = &self.config;
        let h = &mut ck.header;
        h.insert("train.seed".into(), c.seed.to_string());
        h.insert("train.epochs".into(), c.epochs.to_string());
        h.insert("train.batch".into(), c.batch.to_string());
        h.insert("train.clip".into(), c.clip_norm.to_string());
        h.insert("train.lr".into(), c.adam.lr.to_string());
        h.insert("train.beta1".into(), c.adam.beta1.to_string());
        h.insert("train.beta2".into(), c.adam.beta2.to_string());
        h.insert("train.eps".into(), c.adam.eps.to_string());
        h.insert("train.decay_every".into(), c.adam.decay_every.to_string());
        h.insert("train.decay_factor".into(), c.adam.decay_factor.to_string());
        h.insert("state.epoch".into(), self.epoch.to_string());
        h.insert("state.drawn".into(), self.drawn.to_string());
        h.insert("state.batch".into(), self.global_batch.to_string());
        h.insert("state.adam_steps".into(), self.adam.step_count.to_string());
        h.insert("state.acc".into(), format!("{},{},{}", self.acc.0, self.acc.1, self.acc.2));
        let log: Vec<String> = self
            .log
            .iter()
            .map(|e| format!("{}:{}:{}:{}", e.epoch, e.task, e.motion, e.lr))
            .collect();
        h.insert("state.log".into(), if log.is_empty() { "-".into() } else { log.join(";") });
        for (t, (m, v)) in self
            .bundle
            .params
            .tensors()
            .iter()
            .zip(self.adam.first_moment.iter().zip(&self.adam.second_moment))
        {
            ck.tensors.push(ParamTensor {
                name: format!("adam.m.{}", t.name),
                shape: t.shape.clone(),
                values: m.clone(),
            });
            ck.tensors.push(ParamTensor {
                name: format!("adam.v.{}", t.name),
                shape: t.shape.clone(),
                values: v.clone(),
            });
        }
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint, demos: &[Demonstration]) -> Result<Self> {
        let mut bundle = ModelBundle::from_checkpoint(ck)?;
        let adam_cfg = AdamConfig {
            lr: ck.get_parsed("train.lr")?,
            beta1: ck.get_parsed("train.beta1")?,
            beta2: ck.get_parsed("train.beta2")?,
            eps: ck.get_parsed("train.eps")?,
            decay_every: ck.get_parsed("train.decay_every")?,
            decay_factor: ck.get_parsed("train.decay_factor")?,
        };
        let config = TrainConfig {
            mode: bundle.mode,
            epochs: ck.get_parsed("train.epochs")?,
            adam: adam_cfg,
            batch: ck.get_parsed("train.batch")?,
            clip_norm: ck.get_parsed("train.clip")?,
            seed: ck.get_parsed("train.seed")?,
            dims: bundle.dims,
        };
        let mut adam = AdamState::new(adam_cfg, &bundle.params.tensors());
        adam.step_count = ck.get_parsed("state.adam_steps")?;
        for (k, t) in bundle.params.tensors().iter().enumerate() {
            adam.first_moment[k] = ck.tensor(&format!("adam.m.{}", t.name))?.values.clone();
            adam.second_moment[k] = ck.tensor(&format!("adam.v.{}", t.name))?.values.clone();
        }
        let acc_raw = ck.get("state.acc")?;
        let acc: Vec<&str> = acc_raw.split(',').collect();
        let bad = || Error::Format(format!("malformed training accumulator `{acc_raw}`"));
        let acc = match acc.as_slice() {
            [a, b, c] => (
                a.parse().map_err(|_| bad())?,
                b.parse().map_err(|_| bad())?,
                c.parse().map_err(|_| bad())?,
            ),
            _ => return Err(bad()),
        };
        let mut log = Vec::new();
        let raw_log = ck.get("state.log")?;
        if raw_log != "-" {
            for rec in raw_log.split(';') {
                let f: Vec<&str> = rec.split(':').collect();
                let bad = || Error::Format(format!("malformed training log entry `{rec}`"));
                if f.len() != 4 {
                    return Err(bad());
                }
                log.push(EpochLog {
                    epoch: f[0].parse().map_err(|_| bad())?,
                    task: f[1].parse().map_err(|_| bad())?,
                    motion: f[2].parse().map_err(|_| bad())?,
                    lr: f[3].parse().map_err(|_| bad())?,
                });
            }
        }
        for k in bundle.meta.keys().cloned().collect::<Vec<_>>() {
            if k.starts_with("train.") || k.starts_with("state.") {
                bundle.meta.remove(&k);
            }
        }
        Ok(Trainer {
            config,
            bundle,
            adam,
            sampler: WindowSampler::new(demos)?,
            epoch: ck.get_parsed("state.epoch")?,
            drawn: ck.get_parsed("state.drawn")?,
            global_batch: ck.get_parsed("state.batch")?,
            log,
            acc,
        })
    }
}

/// Trains a planner from scratch for `config.epochs` epochs.
pub fn train(demos: &[Demonstration], config: TrainConfig) -> Result<TrainOutcome> {
    Trainer::new(demos, config)?.run(demos)
}
