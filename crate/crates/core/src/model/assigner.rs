use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::bundle::{argmax, encoder_input, normalize, ModelBundle, INPUT_DIM};
use super::train::EpochLog;
use super::WINDOW_ACTIONS;
use crate::error::{Error, Result};
use crate::expert::Demonstration;
use crate::nn::{
    clip_global_norm, cross_entropy_loss, AdamConfig, AdamState, BiLstm, Dense, LstmLayer, Mlp, MlpTrace,
    ParamTensor, Parameterized,
};
use crate::rng::{self, Rng};
use crate::world::{Action, Observation};

/// Output positions of the assigner.
pub const ASSIGNER_LEN: usize = 6;
const TRUNK: usize = 64;
const SLOT: usize = 16;
const CLASSES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AssignerToken {
    Act(Action),
    Stop,
}

impl AssignerToken {
    pub fn index(self) -> usize {
        match self {
            AssignerToken::Act(a) => a.index(),
            AssignerToken::Stop => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            3 => Some(AssignerToken::Stop),
            _ => Action::from_index(i).map(AssignerToken::Act),
        }
    }
}

/// Pads an action list with STOP to `ASSIGNER_LEN` tokens.
pub fn assigner_targets(actions: &[Action]) -> Result<[AssignerToken; ASSIGNER_LEN]> {
    if actions.len() > ASSIGNER_LEN {
        return Err(Error::Shape(format!("{} actions exceed {ASSIGNER_LEN} slots", actions.len())));
    }
    let mut t = [AssignerToken::Stop; ASSIGNER_LEN];
    for (slot, a) in t.iter_mut().zip(actions) {
        *slot = AssignerToken::Act(*a);
    }
    Ok(t)
}

/// Predicts the short action list linking two observations: its own
/// unit-norm feature encoder, a shared trunk over both features, one
/// projection per output slot, a bidirectional LSTM across the slots and a
/// shared 4-way classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionAssigner {
    pub encoder: Mlp,
    pub trunk: Dense,
    pub slots: Vec<Dense>,
    pub recurrent: BiLstm,
    pub classifier: Dense,
}

struct AssignerTrace {
    input: Vec<f64>,
    trunk_out: Vec<f64>,
    bi: crate::nn::BiLstmTrace,
    logits: Vec<Vec<f64>>,
}

impl ActionAssigner {
    /// Encoder widths follow the planner's: `INPUT_DIM → 2·feature → feature`.
    pub fn new(feature: usize, rng: &mut Rng) -> Self {
        ActionAssigner {
            encoder: Mlp::new("assigner.encoder", &[INPUT_DIM, 2 * feature, feature], rng),
            trunk: Dense::new("assigner.trunk", 2 * feature, TRUNK, rng),
            slots: (0..ASSIGNER_LEN)
                .map(|p| Dense::new(&format!("assigner.slot{p}"), TRUNK, SLOT, rng))
                .collect(),
            recurrent: BiLstm::new("assigner.bilstm", SLOT, SLOT, rng),
            classifier: Dense::new("assigner.classifier", 2 * SLOT, CLASSES, rng),
        }
    }

    pub fn zeros(feature: usize) -> Self {
        ActionAssigner {
            encoder: Mlp::zeros("assigner.encoder", &[INPUT_DIM, 2 * feature, feature]),
            trunk: Dense::zeros("assigner.trunk", 2 * feature, TRUNK),
            slots: (0..ASSIGNER_LEN)
                .map(|p| Dense::zeros(&format!("assigner.slot{p}"), TRUNK, SLOT))
                .collect(),
            recurrent: BiLstm {
                forward: LstmLayer::zeros("assigner.bilstm.fwd", SLOT, SLOT),
                backward: LstmLayer::zeros("assigner.bilstm.bwd", SLOT, SLOT),
            },
            classifier: Dense::zeros("assigner.classifier", 2 * SLOT, CLASSES),
        }
    }

    /// Unit-norm feature the assigner compares.
    pub fn embed(&self, obs: &Observation) -> Vec<f64> {
        normalize(&self.encoder.apply(&encoder_input(obs))).0
    }

    fn trace(&self, f_i: &[f64], f_j: &[f64]) -> AssignerTrace {
        let mut input = Vec::with_capacity(f_i.len() + f_j.len());
        input.extend_from_slice(f_i);
        input.extend_from_slice(f_j);
        let mut trunk_out = self.trunk.apply(&input);
        trunk_out.iter_mut().for_each(|v| *v = v.tanh());
        let slots: Vec<Vec<f64>> = self.slots.iter().map(|s| s.apply(&trunk_out)).collect();
        let bi = self.recurrent.trace(&slots);
        let logits = bi.outputs.iter().map(|o| self.classifier.apply(o)).collect();
        AssignerTrace {
            input,
            trunk_out,
            bi,
            logits,
        }
    }

    /// Per-slot logits over forward, left, right, STOP.
    pub fn logits(&self, f_i: &[f64], f_j: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check(f_i, f_j)?;
        Ok(self.trace(f_i, f_j).logits)
    }

    fn check(&self, f_i: &[f64], f_j: &[f64]) -> Result<()> {
        if f_i.len() + f_j.len() != self.trunk.fan_in() || f_i.len() != f_j.len() {
            return Err(Error::Shape(format!("assigner expects two {}-d features", self.trunk.fan_in() / 2)));
        }
        Ok(())
    }

    /// Exactly `ASSIGNER_LEN` tokens.
    pub fn predict(&self, f_i: &[f64], f_j: &[f64]) -> Result<Vec<AssignerToken>> {
        Ok(self
            .logits(f_i, f_j)?
            .iter()
            .map(|l| AssignerToken::from_index(argmax(l)).expect("four classes"))
            .collect())
    }

    /// Executable prefix: the tokens before the first STOP.
    pub fn predict_actions(&self, f_i: &[f64], f_j: &[f64]) -> Result<Vec<Action>> {
        Ok(self
            .predict(f_i, f_j)?
            .into_iter()
            .map_while(|t| match t {
                AssignerToken::Act(a) => Some(a),
                AssignerToken::Stop => None,
            })
            .collect())
    }

    /// Summed per-slot cross-entropy on two features; accumulates gradients
    /// of everything but the encoder when asked.
    pub fn loss(
        &self,
        f_i: &[f64],
        f_j: &[f64],
        target: &[AssignerToken; ASSIGNER_LEN],
        grads: Option<&mut ActionAssigner>,
    ) -> Result<f64> {
        self.feature_loss(f_i, f_j, target, grads).map(|(l, _)| l)
    }

    /// Loss on two observations, encoder included.
    pub fn observation_loss(
        &self,
        o_i: &Observation,
        o_j: &Observation,
        target: &[AssignerToken; ASSIGNER_LEN],
        grads: Option<&mut ActionAssigner>,
    ) -> Result<f64> {
        let enc = |o: &Observation| {
            let tr = self.encoder.trace(&encoder_input(o));
            let (f, n) = normalize(tr.output());
            (tr, f, n)
        };
        let (ti, fi, ni) = enc(o_i);
        let (tj, fj, nj) = enc(o_j);
        let Some(grads) = grads else {
            return self.feature_loss(&fi, &fj, target, None).map(|(l, _)| l);
        };
        let (loss, d_in) = self.feature_loss(&fi, &fj, target, Some(grads))?;
        let d = fi.len();
        self.encoder_backward(&ti, &fi, ni, &d_in[..d], grads);
        self.encoder_backward(&tj, &fj, nj, &d_in[d..], grads);
        Ok(loss)
    }

    fn encoder_backward(&self, trace: &MlpTrace, f: &[f64], norm: f64, df: &[f64], grads: &mut ActionAssigner) {
        if norm == 0.0 {
            return;
        }
        let dot: f64 = f.iter().zip(df).map(|(a, b)| a * b).sum();
        let dz: Vec<f64> = f.iter().zip(df).map(|(a, g)| (g - a * dot) / norm).collect();
        self.encoder.backward(trace, &dz, &mut grads.encoder);
    }

    /// Loss and, when accumulating, the gradient with respect to `[f_i, f_j]`.
    fn feature_loss(
        &self,
        f_i: &[f64],
        f_j: &[f64],
        target: &[AssignerToken; ASSIGNER_LEN],
        grads: Option<&mut ActionAssigner>,
    ) -> Result<(f64, Vec<f64>)> {
        self.check(f_i, f_j)?;
        let tr = self.trace(f_i, f_j);
        let mut total = 0.0;
        let mut d_logits = Vec::with_capacity(ASSIGNER_LEN);
        for (l, t) in tr.logits.iter().zip(target) {
            let (loss, g) = cross_entropy_loss(l, t.index())?;
            total += loss;
            d_logits.push(g);
        }
        if !total.is_finite() {
            return Err(Error::Numeric(format!("assigner loss {total}")));
        }
        let Some(grads) = grads else { return Ok((total, Vec::new())) };
        let d_out: Vec<Vec<f64>> = tr
            .bi
            .outputs
            .iter()
            .zip(&d_logits)
            .map(|(o, g)| self.classifier.backward(o, g, &mut grads.classifier))
            .collect();
        let d_slots = self.recurrent.backward_pass(&tr.bi, &d_out, &mut grads.recurrent);
        let mut d_trunk = vec![0.0; TRUNK];
        for (p, ds) in d_slots.iter().enumerate() {
            self.slots[p].backward_into(&tr.trunk_out, ds, &mut grads.slots[p], Some(&mut d_trunk));
        }
        for (d, a) in d_trunk.iter_mut().zip(&tr.trunk_out) {
            *d *= 1.0 - a * a;
        }
        let d_input = self.trunk.backward(&tr.input, &d_trunk, &mut grads.trunk);
        Ok((total, d_input))
    }
}

impl Parameterized for ActionAssigner {
    fn tensors(&self) -> Vec<&ParamTensor> {
        let mut v = self.encoder.tensors();
        v.extend(self.trunk.tensors());
        for s in &self.slots {
            v.extend(s.tensors());
        }
        v.extend(self.recurrent.tensors());
        v.extend(self.classifier.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut ParamTensor> {
        let mut v = self.encoder.tensors_mut();
        v.extend(self.trunk.tensors_mut());
        for s in &mut self.slots {
            v.extend(s.tensors_mut());
        }
        v.extend(self.recurrent.tensors_mut());
        v.extend(self.classifier.tensors_mut());
        v
    }
}

/// Frames `i` and `j` of demonstration `demo`, `j - i` in `0..=6`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AssignerPair {
    pub demo: usize,
    pub i: usize,
    pub j: usize,
}

/// Every pair with `1 <= j - i <= max_gap`, plus `(i, i)` for every frame
/// when `identity` is set.
pub fn mine_pairs(demos: &[Demonstration], max_gap: usize, identity: bool) -> Vec<AssignerPair> {
    let mut pairs = Vec::new();
    for (demo, d) in demos.iter().enumerate() {
        let lo = if identity { 0 } else { 1 };
        for g in lo..=max_gap {
            for i in 0..d.len().saturating_sub(g) {
                pairs.push(AssignerPair { demo, i, j: i + g });
            }
        }
    }
    pairs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignerConfig {
    pub epochs: u32,
    pub adam: AdamConfig,
    pub batch: usize,
    pub clip_norm: f64,
    pub seed: u64,
    /// Include zero-gap pairs whose target is all STOP.
    pub identity_pairs: bool,
    /// Pairs drawn per epoch; `None` uses the planner's one per
    /// `WINDOW_ACTIONS` transitions.
    pub epoch_draws: Option<usize>,
}

impl Default for AssignerConfig {
    fn default() -> Self {
        AssignerConfig {
            epochs: 70,
            adam: AdamConfig::default(),
            batch: 32,
            clip_norm: 5.0,
            seed: 0,
            identity_pairs: true,
            epoch_draws: None,
        }
    }
}

const ASSIGNER_STREAM_TAG: u64 = 0xA551_6E;

/// Trains an assigner, its encoder included, on mined demonstration pairs.
/// An epoch draws one pair per `WINDOW_ACTIONS` transitions, matching the
/// planner schedule; the feature width follows the bundle.
pub fn train_assigner(
    bundle: &ModelBundle,
    demos: &[Demonstration],
    config: &AssignerConfig,
) -> Result<(ActionAssigner, Vec<EpochLog>)> {
    let pairs = mine_pairs(demos, ASSIGNER_LEN, config.identity_pairs);
    if pairs.is_empty() {
        return Err(Error::Structural("no demonstration pairs to train the assigner on".into()));
    }
    let targets: Vec<[AssignerToken; ASSIGNER_LEN]> = pairs
        .iter()
        .map(|p| {
            let acts: Vec<Action> = demos[p.demo].steps[p.i..p.j].iter().map(|(_, a)| a.expect("non-terminal")).collect();
            assigner_targets(&acts)
        })
        .collect::<Result<_>>()?;
    let transitions: usize = demos.iter().map(|d| d.len().saturating_sub(1)).sum();
    let per_epoch = config.epoch_draws.unwrap_or(transitions / WINDOW_ACTIONS).max(1);

    let seed = rng::derive(config.seed, ASSIGNER_STREAM_TAG);
    let mut model = ActionAssigner::new(bundle.dims.feature, &mut rng::stream(seed, u64::MAX));
    let mut adam = AdamState::new(config.adam, &model.tensors());
    let mut log = Vec::new();
    let mut batch_index = 0u64;
    for epoch in 0..config.epochs {
        let mut drawn = 0;
        let mut sum = 0.0;
        while drawn < per_epoch {
            let n = config.batch.min(per_epoch - drawn);
            let mut rng = rng::stream(seed, batch_index);
            let mut grads = model.zeros_like();
            for _ in 0..n {
                let k = rng.random_range(0..pairs.len());
                let p = pairs[k];
                let steps = &demos[p.demo].steps;
                sum += model.observation_loss(&steps[p.i].0, &steps[p.j].0, &targets[k], Some(&mut grads))?;
            }
            let scale = 1.0 / n as f64;
            for t in grads.tensors_mut() {
                t.values.iter_mut().for_each(|v| *v *= scale);
            }
            clip_global_norm(grads.tensors_mut(), config.clip_norm);
            adam.step(model.tensors_mut(), grads.tensors(), epoch)?;
            drawn += n;
            batch_index += 1;
        }
        let e = EpochLog {
            epoch: epoch + 1,
            task: 0.0,
            motion: sum / per_epoch as f64,
            lr: config.adam.effective_lr(epoch),
        };
        log::info!("assigner epoch {}/{}: loss {:.4}", e.epoch, config.epochs, e.motion);
        log.push(e);
    }
    Ok((model, log))
}
