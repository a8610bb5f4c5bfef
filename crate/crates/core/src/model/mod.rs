//! Learned planning stack: observation encoder, recurrent feature
//! hallucination, action classification, and the loop-edge action assigner.

mod assigner;
mod bundle;
mod train;
mod windows;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use assigner::{
    assigner_targets, mine_pairs, train_assigner, ActionAssigner, AssignerConfig, AssignerPair, AssignerToken,
    ASSIGNER_LEN,
};
pub use bundle::{argmax, encoder_input, ModelBundle, ModelDims, PlannerParams, INPUT_DIM};
pub use train::{
    train, training_log_csv, window_loss, EpochLog, TrainConfig, TrainOutcome, Trainer,
};
pub use windows::{make_training_windows, TrainingWindow, WindowSampler};

/// Features in the planner's sliding window.
pub const MEMORY: usize = 10;
/// Observations per training window; the extra frame supplies the last target.
pub const WINDOW_OBS: usize = MEMORY + 2;
/// Supervised actions per training window.
pub const WINDOW_ACTIONS: usize = MEMORY + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SupervisionMode {
    Full,
    NoDeepSup,
    NoFeatDeepSup,
    NoActDeepSup,
    LstmActRegu,
    NoFeatHallu,
    WithHistory,
}

impl SupervisionMode {
    pub const ALL: [SupervisionMode; 7] = [
        SupervisionMode::Full,
        SupervisionMode::NoDeepSup,
        SupervisionMode::NoFeatDeepSup,
        SupervisionMode::NoActDeepSup,
        SupervisionMode::LstmActRegu,
        SupervisionMode::NoFeatHallu,
        SupervisionMode::WithHistory,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SupervisionMode::Full => "full",
            SupervisionMode::NoDeepSup => "no-deep-sup",
            SupervisionMode::NoFeatDeepSup => "no-feat-deep-sup",
            SupervisionMode::NoActDeepSup => "no-act-deep-sup",
            SupervisionMode::LstmActRegu => "lstm-act-regu",
            SupervisionMode::NoFeatHallu => "no-feat-hallu",
            SupervisionMode::WithHistory => "with-history",
        }
    }

    /// Window steps whose hallucination is regressed onto the next feature.
    pub(crate) fn task_steps(self) -> std::ops::Range<usize> {
        let last = WINDOW_ACTIONS - 1;
        match self {
            SupervisionMode::Full | SupervisionMode::NoActDeepSup | SupervisionMode::WithHistory => 0..WINDOW_ACTIONS,
            SupervisionMode::NoDeepSup | SupervisionMode::NoFeatDeepSup => last..WINDOW_ACTIONS,
            SupervisionMode::LstmActRegu | SupervisionMode::NoFeatHallu => 0..0,
        }
    }

    /// Window steps whose motion-planner action is supervised.
    pub(crate) fn motion_steps(self) -> std::ops::Range<usize> {
        let last = WINDOW_ACTIONS - 1;
        match self {
            SupervisionMode::Full
            | SupervisionMode::NoFeatDeepSup
            | SupervisionMode::LstmActRegu
            | SupervisionMode::WithHistory => 0..WINDOW_ACTIONS,
            SupervisionMode::NoDeepSup | SupervisionMode::NoActDeepSup => last..WINDOW_ACTIONS,
            SupervisionMode::NoFeatHallu => 0..0,
        }
    }

    /// Whether the recurrent action head is trained (and, for
    /// `NoFeatHallu`, used at inference).
    pub(crate) fn uses_action_head(self) -> bool {
        matches!(self, SupervisionMode::LstmActRegu | SupervisionMode::NoFeatHallu)
    }

    pub fn uses_history(self) -> bool {
        self == SupervisionMode::WithHistory
    }
}

impl fmt::Display for SupervisionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SupervisionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SupervisionMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Format(format!("unknown supervision mode `{s}`")))
    }
}
