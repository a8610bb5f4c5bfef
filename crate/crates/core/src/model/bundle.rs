use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::assigner::ActionAssigner;
use super::{SupervisionMode, MEMORY};
use crate::error::{Error, Result};
use crate::nn::{Checkpoint, Dense, Lstm, Mlp, ParamTensor, Parameterized};
use crate::rng::Rng;
use crate::world::{Action, Observation, MAX_RANGE, MISS_TEXTURE, RAY_COUNT};

/// Encoder input width: egocentric depths then texture ids.
pub const INPUT_DIM: usize = 2 * RAY_COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub feature: usize,
    pub encoder_hidden: usize,
    pub lstm_hidden: usize,
    pub motion_hidden: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims {
            feature: 64,
            encoder_hidden: 128,
            lstm_hidden: 64,
            motion_hidden: 64,
        }
    }
}

impl ModelDims {
    /// Small widths for finite-difference checks.
    pub fn reduced(d: usize) -> Self {
        ModelDims {
            feature: d,
            encoder_hidden: 2 * d,
            lstm_hidden: d,
            motion_hidden: 2 * d,
        }
    }
}

/// Trainable planner parameters, in optimiser order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    pub encoder: Mlp,
    pub task: Lstm,
    pub head: Dense,
    pub motion: Mlp,
    /// Per-step action classifier on LSTM states; only some modes train it.
    pub action_head: Dense,
}

impl PlannerParams {
    pub fn new(dims: &ModelDims, rng: &mut Rng) -> Self {
        let d = dims.feature;
        PlannerParams {
            encoder: Mlp::new("encoder", &[INPUT_DIM, dims.encoder_hidden, d], rng),
            task: Lstm::new("task", d, dims.lstm_hidden, 2, rng),
            head: Dense::new("head", dims.lstm_hidden, d, rng),
            motion: Mlp::new("motion", &[2 * d, dims.motion_hidden, 3], rng),
            action_head: Dense::new("action_head", dims.lstm_hidden, 3, rng),
        }
    }

    pub fn zeros(dims: &ModelDims) -> Self {
        let d = dims.feature;
        PlannerParams {
            encoder: Mlp::zeros("encoder", &[INPUT_DIM, dims.encoder_hidden, d]),
            task: Lstm::zeros("task", d, dims.lstm_hidden, 2),
            head: Dense::zeros("head", dims.lstm_hidden, d),
            motion: Mlp::zeros("motion", &[2 * d, dims.motion_hidden, 3]),
            action_head: Dense::zeros("action_head", dims.lstm_hidden, 3),
        }
    }
}

impl Parameterized for PlannerParams {
    fn tensors(&self) -> Vec<&ParamTensor> {
        let mut v = self.encoder.tensors();
        v.extend(self.task.tensors());
        v.extend(self.head.tensors());
        v.extend(self.motion.tensors());
        v.extend(self.action_head.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut ParamTensor> {
        let mut v = self.encoder.tensors_mut();
        v.extend(self.task.tensors_mut());
        v.extend(self.head.tensors_mut());
        v.extend(self.motion.tensors_mut());
        v.extend(self.action_head.tensors_mut());
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub dims: ModelDims,
    pub mode: SupervisionMode,
    pub params: PlannerParams,
    pub assigner: Option<ActionAssigner>,
    /// Extra checkpoint header entries (seed, config hash, ...).
    pub meta: BTreeMap<String, String>,
}

/// Egocentric panorama scaled to roughly unit range.
pub fn encoder_input(obs: &Observation) -> Vec<f64> {
    let (depths, textures) = obs.egocentric();
    let mut x = Vec::with_capacity(INPUT_DIM);
    x.extend(depths.iter().map(|d| d / MAX_RANGE));
    x.extend(textures.iter().map(|&t| t as f64 / MISS_TEXTURE as f64));
    x
}

/// L2 normalisation; a zero vector maps to the first basis vector.
pub(crate) fn normalize(z: &[f64]) -> (Vec<f64>, f64) {
    let n = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 1e-12 && n.is_finite() {
        (z.iter().map(|v| v / n).collect(), n)
    } else {
        let mut e = vec![0.0; z.len()];
        e[0] = 1.0;
        (e, 0.0)
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Ten evenly spaced indices into `[0, start)`, empty when `start == 0`.
pub(crate) fn history_indices(start: usize) -> Vec<usize> {
    if start == 0 {
        return Vec::new();
    }
    (0..MEMORY).map(|j| j * start / MEMORY).collect()
}

pub(crate) fn mean_feature(feats: &[&[f64]], d: usize) -> Option<Vec<f64>> {
    if feats.is_empty() {
        return None;
    }
    let mut m = vec![0.0; d];
    for f in feats {
        for (a, b) in m.iter_mut().zip(f.iter()) {
            *a += b;
        }
    }
    let k = feats.len() as f64;
    m.iter_mut().for_each(|v| *v /= k);
    Some(m)
}

impl ModelBundle {
    pub fn new(dims: ModelDims, mode: SupervisionMode, rng: &mut Rng) -> Self {
        ModelBundle {
            dims,
            mode,
            params: PlannerParams::new(&dims, rng),
            assigner: None,
            meta: BTreeMap::new(),
        }
    }

    pub fn zeros(dims: ModelDims, mode: SupervisionMode) -> Self {
        ModelBundle {
            dims,
            mode,
            params: PlannerParams::zeros(&dims),
            assigner: None,
            meta: BTreeMap::new(),
        }
    }

    pub fn memory(&self) -> usize {
        MEMORY
    }

    /// Unit-norm feature of one observation.
    pub fn encode(&self, obs: &Observation) -> Vec<f64> {
        let z = self.params.encoder.apply(&encoder_input(obs));
        normalize(&z).0
    }

    /// One hallucinated next feature per window step; the last one is the
    /// estimate for the step after the window.
    pub fn hallucinate(&self, window: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.hallucinate_with(window, None)
    }

    /// As [`hallucinate`](Self::hallucinate), with an optional initial hidden
    /// state for the first LSTM layer.
    pub fn hallucinate_with(&self, window: &[Vec<f64>], h0: Option<&[f64]>) -> Result<Vec<Vec<f64>>> {
        let hidden = self.recurrent_states(window, h0)?;
        Ok(hidden.iter().map(|h| self.params.head.apply(h)).collect())
    }

    fn recurrent_states(&self, window: &[Vec<f64>], h0: Option<&[f64]>) -> Result<Vec<Vec<f64>>> {
        if window.len() != MEMORY {
            return Err(Error::Shape(format!("planner window needs {MEMORY} features, got {}", window.len())));
        }
        self.params.task.forward(window, h0)
    }

    /// Logits over forward, left, right for the current feature and the
    /// hallucinated next one.
    pub fn classify_action(&self, f_t: &[f64], f_next: &[f64]) -> Result<Vec<f64>> {
        let d = self.dims.feature;
        if f_t.len() != d || f_next.len() != d {
            return Err(Error::Shape(format!("classify_action needs two {d}-d features")));
        }
        let mut x = Vec::with_capacity(2 * d);
        x.extend_from_slice(f_t);
        x.extend_from_slice(f_next);
        self.params.motion.forward(&x)
    }

    /// Action for the newest feature of `window`. `history` is the mean
    /// historical feature, consulted only by history-aware bundles.
    pub fn act(&self, window: &[Vec<f64>], history: Option<&[f64]>) -> Result<Action> {
        let h0 = if self.mode.uses_history() { history } else { None };
        let hidden = self.recurrent_states(window, h0)?;
        let last = hidden.last().expect("window is non-empty");
        let logits = if self.mode == SupervisionMode::NoFeatHallu {
            self.params.action_head.apply(last)
        } else {
            let f_next = self.params.head.apply(last);
            self.classify_action(window.last().unwrap(), &f_next)?
        };
        Ok(Action::from_index(argmax(&logits)).expect("three logits"))
    }

    /// Mean of ten evenly spaced features from `past` (everything before the
    /// current window).
    pub fn history_feature(&self, past: &[Vec<f64>]) -> Option<Vec<f64>> {
        let idx = history_indices(past.len());
        let picked: Vec<&[f64]> = idx.iter().map(|&i| past[i].as_slice()).collect();
        mean_feature(&picked, self.dims.feature)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut header = self.meta.clone();
        header.insert("mode".into(), self.mode.name().into());
        header.insert("d".into(), self.dims.feature.to_string());
        header.insert("encoder_hidden".into(), self.dims.encoder_hidden.to_string());
        header.insert("lstm_hidden".into(), self.dims.lstm_hidden.to_string());
        header.insert("motion_hidden".into(), self.dims.motion_hidden.to_string());
        header.insert("memory".into(), MEMORY.to_string());
        header.insert("assigner".into(), self.assigner.is_some().to_string());
        let mut tensors: Vec<ParamTensor> = self.params.tensors().into_iter().cloned().collect();
        if let Some(a) = &self.assigner {
            tensors.extend(a.tensors().into_iter().cloned());
        }
        Checkpoint::new(header, tensors)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let memory: usize = ck.get_parsed("memory")?;
        if memory != MEMORY {
            return Err(Error::Format(format!("checkpoint memory {memory} differs from {MEMORY}")));
        }
        let dims = ModelDims {
            feature: ck.get_parsed("d")?,
            encoder_hidden: ck.get_parsed("encoder_hidden")?,
            lstm_hidden: ck.get_parsed("lstm_hidden")?,
            motion_hidden: ck.get_parsed("motion_hidden")?,
        };
        let mode: SupervisionMode = ck.get("mode")?.parse()?;
        let mut params = PlannerParams::zeros(&dims);
        load_tensors(&mut params, ck)?;
        let assigner = if ck.get_parsed::<bool>("assigner")? {
            let mut a = ActionAssigner::zeros(dims.feature);
            load_tensors(&mut a, ck)?;
            Some(a)
        } else {
            None
        };
        let mut meta = ck.header.clone();
        for k in ["mode", "d", "encoder_hidden", "lstm_hidden", "motion_hidden", "memory", "assigner"] {
            meta.remove(k);
        }
        Ok(ModelBundle {
            dims,
            mode,
            params,
            assigner,
            meta,
        })
    }
}

/// Copies tensors by name, checking shapes.
pub(crate) fn load_tensors<P: Parameterized>(target: &mut P, ck: &Checkpoint) -> Result<()> {
    for t in target.tensors_mut() {
        let src = ck.tensor(&t.name)?;
        if src.shape != t.shape {
            return Err(Error::Shape(format!(
                "tensor {} has shape {:?} in the checkpoint, expected {:?}",
                t.name, src.shape, t.shape
            )));
        }
        t.values.copy_from_slice(&src.values);
    }
    Ok(())
}
