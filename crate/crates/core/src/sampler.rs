//! Balanced assignment of interpretation conditions.
//!
//! Each draw for player `P` picks combo `C` with weight `N - #(C, P)`,
//! clamped at zero, where `N` is the per-combo quota. Over `8N` draws every
//! combo is therefore seen exactly `N` times.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interpretations::ConditionCombo;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SamplerError {
    #[error("player {player:?} was already assigned a condition for question {question:?}")]
    DuplicateAssignment { player: String, question: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExposureHistory {
    quota: u32,
    counts: BTreeMap<String, [u32; 8]>,
    assigned: BTreeSet<(String, String)>,
}

impl ExposureHistory {
    /// `quota` is the expected number of times each player sees each combo.
    pub fn new(quota: u32) -> Self {
        Self {
            quota,
            ..Self::default()
        }
    }

    /// Quota for a question set: the question count divided by eight,
    /// rounded up so a player can finish every question before all weights
    /// hit zero.
    pub fn for_questions(questions: usize) -> Self {
        Self::new(questions.div_ceil(8) as u32)
    }

    pub fn quota(&self) -> u32 {
        self.quota
    }

    /// `#(C, P)`.
    pub fn count(&self, player: &str, combo: ConditionCombo) -> u32 {
        self.counts.get(player).map_or(0, |c| c[combo.index()])
    }

    pub fn counts(&self, player: &str) -> [u32; 8] {
        self.counts.get(player).copied().unwrap_or_default()
    }

    /// Number of assignments made to `player`.
    pub fn answered(&self, player: &str) -> u32 {
        self.counts(player).iter().sum()
    }

    /// Whether `player` already has a combo for `question`.
    pub fn has_seen(&self, player: &str, question: &str) -> bool {
        self.assigned.contains(&(player.to_string(), question.to_string()))
    }

    pub fn players(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }

    /// Unnormalized draw weights `max(N - #(C, P), 0)`, indexed by
    /// [`ConditionCombo::index`].
    pub fn weights(&self, player: &str) -> [u32; 8] {
        self.counts(player).map(|c| self.quota.saturating_sub(c))
    }

    fn record(&mut self, player: &str, combo: ConditionCombo) {
        self.counts.entry(player.to_string()).or_default()[combo.index()] += 1;
    }
}

/// Draws a combo for `player` and records it. Uniform when every weight is
/// zero.
pub fn sample_condition<R: Rng + ?Sized>(
    history: &mut ExposureHistory,
    player: &str,
    rng: &mut R,
) -> ConditionCombo {
    let weights = history.weights(player);
    let total: u32 = weights.iter().sum();
    let index = if total == 0 {
        rng.gen_range(0..8)
    } else {
        let mut r = rng.gen_range(0..total);
        weights
            .iter()
            .position(|&w| {
                if r < w {
                    true
                } else {
                    r -= w;
                    false
                }
            })
            .expect("r < total")
    };
    let combo = ConditionCombo::from_index(index);
    history.record(player, combo);
    combo
}

/// Like [`sample_condition`], but refuses a second assignment for the same
/// (player, question) pair.
pub fn assign<R: Rng + ?Sized>(
    history: &mut ExposureHistory,
    player: &str,
    question: &str,
    rng: &mut R,
) -> Result<ConditionCombo, SamplerError> {
    let key = (player.to_string(), question.to_string());
    if history.assigned.contains(&key) {
        return Err(SamplerError::DuplicateAssignment {
            player: key.0,
            question: key.1,
        });
    }
    let combo = sample_condition(history, player, rng);
    history.assigned.insert(key);
    Ok(combo)
}

/// Independent draws for every player in a room, in the given order.
pub fn assign_for_room<'a, R: Rng + ?Sized>(
    history: &mut ExposureHistory,
    players: impl IntoIterator<Item = &'a str>,
    rng: &mut R,
) -> BTreeMap<String, ConditionCombo> {
    players
        .into_iter()
        .map(|p| (p.to_string(), sample_condition(history, p, rng)))
        .collect()
}

/// Room assignment for one question, rejecting repeats.
pub fn assign_room_for_question<'a, R: Rng + ?Sized>(
    history: &mut ExposureHistory,
    question: &str,
    players: impl IntoIterator<Item = &'a str>,
    rng: &mut R,
) -> Result<BTreeMap<String, ConditionCombo>, SamplerError> {
    players
        .into_iter()
        .map(|p| assign(history, p, question, rng).map(|c| (p.to_string(), c)))
        .collect()
}
