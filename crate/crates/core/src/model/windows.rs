use rand::Rng as _;

use super::{WINDOW_ACTIONS, WINDOW_OBS};
use crate::error::{Error, Result};
use crate::expert::Demonstration;
use crate::rng::Rng;
use crate::world::{Action, Observation};

/// `WINDOW_OBS` consecutive observations of one demonstration, starting at
/// `start`, with the `WINDOW_ACTIONS` actions taken between them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrainingWindow {
    pub demo: usize,
    pub start: usize,
}

impl TrainingWindow {
    pub fn observations<'a>(&self, demos: &'a [Demonstration]) -> Vec<&'a Observation> {
        demos[self.demo].steps[self.start..self.start + WINDOW_OBS].iter().map(|(o, _)| o).collect()
    }

    pub fn actions(&self, demos: &[Demonstration]) -> Vec<Action> {
        demos[self.demo].steps[self.start..self.start + WINDOW_ACTIONS]
            .iter()
            .map(|(_, a)| a.expect("window actions precede the terminal step"))
            .collect()
    }
}

/// Uniform sampler over every valid (demonstration, start) pair.
#[derive(Debug, Clone)]
pub struct WindowSampler {
    /// (demo index, number of valid starts), usable demos only.
    spans: Vec<(usize, usize)>,
    total_windows: usize,
    transitions: usize,
}

impl WindowSampler {
    pub fn new(demos: &[Demonstration]) -> Result<Self> {
        let mut spans = Vec::new();
        let mut transitions = 0;
        for (i, d) in demos.iter().enumerate() {
            if d.len() < WINDOW_OBS {
                log::warn!("demonstration {i} ({}) has {} steps, fewer than {WINDOW_OBS}; skipped", d.world_id, d.len());
                continue;
            }
            spans.push((i, d.len() - WINDOW_OBS + 1));
            transitions += d.len() - 1;
        }
        if spans.is_empty() {
            return Err(Error::Structural(format!("no demonstration has {WINDOW_OBS} steps")));
        }
        let total_windows = spans.iter().map(|s| s.1).sum();
        Ok(WindowSampler {
            spans,
            total_windows,
            transitions,
        })
    }

    pub fn total_windows(&self) -> usize {
        self.total_windows
    }

    /// Draws per epoch: one per `WINDOW_ACTIONS` transitions.
    pub fn epoch_draws(&self) -> usize {
        (self.transitions / WINDOW_ACTIONS).max(1)
    }

    pub fn draw(&self, rng: &mut Rng) -> TrainingWindow {
        let mut k = rng.random_range(0..self.total_windows);
        for &(demo, n) in &self.spans {
            if k < n {
                return TrainingWindow { demo, start: k };
            }
            k -= n;
        }
        unreachable!("index below total window count")
    }
}

/// `count` windows drawn uniformly from the usable demonstrations.
pub fn make_training_windows(demos: &[Demonstration], count: usize, seed: u64) -> Result<Vec<TrainingWindow>> {
    let sampler = WindowSampler::new(demos)?;
    let mut rng = crate::rng::seeded(seed);
    Ok((0..count).map(|_| sampler.draw(&mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::world::{Locomotion, Pose, RAY_COUNT};

    pub(crate) fn synthetic_demo(len: usize) -> Demonstration {
        let steps = (0..len)
            .map(|i| {
                let obs = Observation {
                    depths: vec![1.0 + i as f64 * 1e-3; RAY_COUNT],
                    textures: vec![(i % 8) as u8; RAY_COUNT],
                    heading: 0,
                };
                (obs, (i + 1 < len).then_some(Action::Forward))
            })
            .collect();
        Demonstration {
            world_id: "synthetic".into(),
            seed: 0,
            locomotion: Locomotion::FINE,
            start: Pose::new(0.5, 0.5, 0),
            steps,
            visit_order: vec![0],
            meta: BTreeMap::new(),
        }
    }

    #[test]
    fn exact_length_has_one_window() {
        let demos = vec![synthetic_demo(12)];
        let s = WindowSampler::new(&demos).unwrap();
        assert_eq!(s.total_windows(), 1);
        let w = make_training_windows(&demos, 20, 1).unwrap();
        assert!(w.iter().all(|w| w.start == 0));
        assert_eq!(w[0].observations(&demos).len(), 12);
        assert_eq!(w[0].actions(&demos).len(), 11);
    }

    #[test]
    fn short_demos_are_skipped() {
        let demos = vec![synthetic_demo(5), synthetic_demo(30)];
        let s = WindowSampler::new(&demos).unwrap();
        assert_eq!(s.total_windows(), 19);
        assert_eq!(s.epoch_draws(), 29 / 11);
        assert!(WindowSampler::new(&[synthetic_demo(11)]).is_err());
    }

    #[test]
    fn indices_stay_in_range() {
        let demos = vec![synthetic_demo(12), synthetic_demo(40), synthetic_demo(13)];
        for w in make_training_windows(&demos, 100_000, 7).unwrap() {
            assert!(w.start + WINDOW_OBS <= demos[w.demo].len());
        }
    }

    #[test]
    fn starts_are_uniform() {
        // Chi-square goodness of fit against the uniform distribution over
        // all 41 valid windows; the 0.99 quantile with 40 dof is 63.69.
        let demos = vec![synthetic_demo(31), synthetic_demo(32)];
        let n = 100_000;
        let mut counts = BTreeMap::new();
        for w in make_training_windows(&demos, n, 11).unwrap() {
            *counts.entry((w.demo, w.start)).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 41);
        let expected = n as f64 / 41.0;
        let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 63.69, "chi2 = {chi2}");
    }
}
