//! Wire and element delays.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DelayMode {
    /// Every wire and every fabric element takes the same number of ticks.
    Uniform { wire: u64, element: u64 },
    /// Independent draws in `min..=max` per wire segment and per element.
    Jitter { seed: u64, min: u64, max: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayModel {
    pub mode: DelayMode,
    /// Fixed delay for every segment of the named wire, whatever the mode.
    pub wire_overrides: HashMap<String, u64>,
}

impl Default for DelayModel {
    fn default() -> Self {
        DelayModel::uniform(1)
    }
}

impl DelayModel {
    pub fn uniform(ticks: u64) -> Self {
        DelayModel {
            mode: DelayMode::Uniform {
                wire: ticks.max(1),
                element: ticks.max(1),
            },
            wire_overrides: HashMap::new(),
        }
    }

    pub fn jitter(seed: u64) -> Self {
        DelayModel {
            mode: DelayMode::Jitter { seed, min: 1, max: 8 },
            wire_overrides: HashMap::new(),
        }
    }

    pub fn with_override(mut self, wire: &str, ticks: u64) -> Self {
        self.wire_overrides.insert(wire.to_string(), ticks.max(1));
        self
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.mode, DelayMode::Uniform { .. }) && self.wire_overrides.is_empty()
    }

    pub fn sampler(&self) -> DelaySampler<'_> {
        let rng = match self.mode {
            DelayMode::Jitter { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
            DelayMode::Uniform { .. } => None,
        };
        DelaySampler { model: self, rng }
    }
}

/// Draws delays in a fixed order so one seed always yields the same fabric.
pub struct DelaySampler<'a> {
    model: &'a DelayModel,
    rng: Option<ChaCha8Rng>,
}

impl DelaySampler<'_> {
    fn draw(&mut self, uniform: impl Fn(&DelayMode) -> u64) -> u64 {
        match (&self.model.mode, &mut self.rng) {
            (DelayMode::Jitter { min, max, .. }, Some(rng)) => rng.gen_range((*min).max(1)..=(*max).max(*min).max(1)),
            (mode, _) => uniform(mode),
        }
    }

    pub fn wire(&mut self, name: &str) -> u64 {
        let d = self.draw(|m| match m {
            DelayMode::Uniform { wire, .. } => *wire,
            _ => 1,
        });
        self.model.wire_overrides.get(name).copied().unwrap_or(d)
    }

    pub fn element(&mut self) -> u64 {
        self.draw(|m| match m {
            DelayMode::Uniform { element, .. } => *element,
            _ => 1,
        })
    }
}
