//! Per player, per question gameplay records: the input to the regression.

use alloc::string::String;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Outcome, CORRECT_POINTS, WRONG_POINTS};
use crate::interpretations::ConditionCombo;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Expert,
    Novice,
}

impl Group {
    pub fn name(self) -> &'static str {
        match self {
            Group::Expert => "expert",
            Group::Novice => "novice",
        }
    }
}

impl core::str::FromStr for Group {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "expert" => Ok(Group::Expert),
            "novice" => Ok(Group::Novice),
            other => Err(alloc::format!("unknown group {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub player_id: String,
    pub question_id: String,
    pub group: Group,
    pub combo: ConditionCombo,
    /// Fraction of the question revealed at the buzz; 1.0 when the player
    /// never buzzed.
    pub buzz_position_frac: f64,
    pub answered: bool,
    pub correct: bool,
    pub points: i32,
    pub active_players: u32,
    /// Accuracy so far of the highest-scoring active player. Experts only;
    /// 0 for novices, whose group is the flag.
    pub top_active_accuracy: f64,
    pub guess_shown: Option<String>,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("record marked correct but not answered")]
    CorrectWithoutAnswer,
    #[error("points {points} inconsistent with answered={answered} correct={correct}")]
    Points { points: i32, answered: bool, correct: bool },
    #[error("buzz position outside [0, 1]")]
    BuzzPosition,
    #[error("unanswered record must have buzz position 1.0")]
    UnansweredPosition,
    #[error("top active accuracy outside [0, 1]")]
    TopAccuracy,
    #[error("novice records carry no competition features")]
    NoviceCompetition,
    #[error("empty player or question id")]
    EmptyId,
}

impl GameRecord {
    pub fn from_outcome(
        outcome: &Outcome,
        question_id: &str,
        group: Group,
        combo: ConditionCombo,
        top_active_accuracy: f64,
        timestamp: u64,
    ) -> Self {
        let (active_players, top_active_accuracy) = match group {
            Group::Expert => (outcome.active_players as u32, top_active_accuracy),
            Group::Novice => (1, 0.0),
        };
        Self {
            player_id: outcome.player.clone(),
            question_id: question_id.into(),
            group,
            combo,
            buzz_position_frac: outcome.buzz_position_frac,
            answered: outcome.answered,
            correct: outcome.correct,
            points: outcome.points,
            active_players,
            top_active_accuracy,
            guess_shown: outcome.guess_shown.clone(),
            timestamp,
        }
    }

    pub fn validate(&self) -> Result<(), RecordError> {
        if self.player_id.is_empty() || self.question_id.is_empty() {
            return Err(RecordError::EmptyId);
        }
        if self.correct && !self.answered {
            return Err(RecordError::CorrectWithoutAnswer);
        }
        let expected = match (self.answered, self.correct) {
            (true, true) => CORRECT_POINTS,
            (true, false) => WRONG_POINTS,
            (false, _) => 0,
        };
        if self.points != expected {
            return Err(RecordError::Points {
                points: self.points,
                answered: self.answered,
                correct: self.correct,
            });
        }
        if !(0.0..=1.0).contains(&self.buzz_position_frac) {
            return Err(RecordError::BuzzPosition);
        }
        if !self.answered && self.buzz_position_frac != 1.0 {
            return Err(RecordError::UnansweredPosition);
        }
        if !(0.0..=1.0).contains(&self.top_active_accuracy) {
            return Err(RecordError::TopAccuracy);
        }
        if self.group == Group::Novice && (self.top_active_accuracy != 0.0 || self.active_players != 1) {
            return Err(RecordError::NoviceCompetition);
        }
        Ok(())
    }
}
