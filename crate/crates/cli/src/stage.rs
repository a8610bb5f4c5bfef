use std::fmt;
use std::str::FromStr;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    GenWorlds,
    GenDemos,
    Train,
    Explore,
    Map,
    Navigate,
    Eval,
    Render,
    BenchVpr,
}

impl Stage {
    /// Dependency order.
    pub const ALL: [Stage; 9] = [
        Stage::GenWorlds,
        Stage::GenDemos,
        Stage::Train,
        Stage::Explore,
        Stage::Map,
        Stage::Navigate,
        Stage::Eval,
        Stage::Render,
        Stage::BenchVpr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::GenWorlds => "gen-worlds",
            Stage::GenDemos => "gen-demos",
            Stage::Train => "train",
            Stage::Explore => "explore",
            Stage::Map => "map",
            Stage::Navigate => "navigate",
            Stage::Eval => "eval",
            Stage::Render => "render",
            Stage::BenchVpr => "bench-vpr",
        }
    }

    /// Stages whose artifacts this one reads.
    pub fn requires(self) -> &'static [Stage] {
        match self {
            Stage::GenWorlds => &[],
            Stage::GenDemos => &[Stage::GenWorlds],
            Stage::Train => &[Stage::GenDemos],
            Stage::Explore => &[Stage::GenWorlds, Stage::Train],
            Stage::Map => &[Stage::GenWorlds, Stage::Train],
            Stage::Navigate => &[Stage::GenWorlds, Stage::Map],
            Stage::Eval => &[Stage::Explore, Stage::Map, Stage::Navigate],
            Stage::Render => &[Stage::GenWorlds, Stage::Explore, Stage::Map],
            Stage::BenchVpr => &[Stage::GenWorlds, Stage::Train, Stage::Map],
        }
    }

    /// This stage and every stage it transitively reads from.
    pub fn hash_inputs(self) -> Vec<Stage> {
        let mut out = vec![self];
        let mut i = 0;
        while i < out.len() {
            for &d in out[i].requires() {
                if !out.contains(&d) {
                    out.push(d);
                }
            }
            i += 1;
        }
        out.sort();
        out
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown stage `{s}`")))
    }
}
