//! Wire schema for live rooms. See `docs/room-messages.md` for the field
//! by field description.

use coopqa_core::engine::{EndReason, EngineConfig, Mode};
use coopqa_core::guesser::{EvidenceSnippet, Guess};
use coopqa_core::{ConditionCombo, InterpretationPayload};
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

/// A server-to-client message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomMessage {
    /// Schema version.
    pub v: u32,
    pub room: String,
    /// Per-room sequence number, strictly increasing across every message
    /// the room emits. A client sees a subsequence.
    pub seq: u64,
    /// Room clock in milliseconds since the room opened.
    pub at: u64,
    /// The player this message concerns. Private messages (`start`,
    /// `interpretations`, `error`) go only to this player.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub player: Option<String>,
    #[serde(flatten)]
    pub body: MessageBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum MessageBody {
    Join(JoinPayload),
    Start(StartPayload),
    Reveal(RevealPayload),
    Interpretations(InterpretationsPayload),
    Buzz(BuzzPayload),
    FloorGranted(FloorPayload),
    Answer(AnswerPayload),
    Result(ResultPayload),
    Scoreboard(ScoreboardPayload),
    Error(ErrorPayload),
}

impl MessageBody {
    pub fn kind(&self) -> &'static str {
        match self {
            MessageBody::Join(_) => "join",
            MessageBody::Start(_) => "start",
            MessageBody::Reveal(_) => "reveal",
            MessageBody::Interpretations(_) => "interpretations",
            MessageBody::Buzz(_) => "buzz",
            MessageBody::FloorGranted(_) => "floor_granted",
            MessageBody::Answer(_) => "answer",
            MessageBody::Result(_) => "result",
            MessageBody::Scoreboard(_) => "scoreboard",
            MessageBody::Error(_) => "error",
        }
    }

    /// Whether the message is addressed to one player only.
    pub fn is_private(&self) -> bool {
        matches!(
            self,
            MessageBody::Start(_) | MessageBody::Interpretations(_) | MessageBody::Error(_)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinPayload {
    /// Everyone in the room after the join, in join order.
    pub players: Vec<String>,
    pub capacity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartPayload {
    pub question_id: String,
    /// 1-based position in the room's question set.
    pub question_number: usize,
    pub question_count: usize,
    /// Words in the question.
    pub length: usize,
    pub mode: Mode,
    /// Everyone playing this question, in seat order.
    pub players: Vec<String>,
    /// The recipient's own condition for this question.
    pub combo: ConditionCombo,
    pub ms_per_word: u64,
    /// Game seed and engine settings, enough to rebuild the game from the
    /// message log.
    pub seed: u64,
    pub engine: EngineConfig,
    /// Canonical answer labels the answer box may offer.
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevealPayload {
    /// 1-based count of words shown so far.
    pub position: usize,
    pub word: String,
}

/// One player's view of a guesser refresh. Absent fields are outside the
/// player's condition and are never sent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretationsPayload {
    pub revealed: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guesses: Option<Vec<Guess>>,
    /// Evidence snippets; their `highlighted` lists are empty unless the
    /// player also has highlights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<Vec<EvidenceSnippet>>,
    /// 0-based positions of highlighted question words.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question_highlights: Option<Vec<usize>>,
}

impl InterpretationsPayload {
    pub fn from_payload(revealed: usize, p: InterpretationPayload) -> Self {
        let evidence = p.evidence.map(|mut snippets| {
            if !p.evidence_highlights_visible {
                for s in &mut snippets {
                    s.highlighted.clear();
                }
            }
            snippets
        });
        Self {
            revealed,
            guesses: p.guesses.map(|g| g.guesses),
            evidence,
            question_highlights: p.question_highlights.map(|h| h.into_iter().collect()),
        }
    }

    /// The combo these fields amount to.
    pub fn exposed(&self) -> ConditionCombo {
        let evidence_marks = self
            .evidence
            .as_ref()
            .is_some_and(|e| e.iter().any(|s| !s.highlighted.is_empty()));
        ConditionCombo::new(
            self.guesses.is_some(),
            self.question_highlights.is_some() || evidence_marks,
            self.evidence.is_some(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuzzPayload {
    /// Words revealed at the buzz.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorPayload {
    /// Room time by which the answer must arrive.
    pub deadline: u64,
    pub answer_window_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerPayload {
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResultPayload {
    /// The floor holder's answer was scored.
    Answer { answer: String, correct: bool, points: i32 },
    /// The floor holder ran out of time or left.
    Timeout { points: i32 },
    /// The player left the room.
    Left,
    /// The question is over.
    QuestionEnd {
        question_id: String,
        reason: EndReason,
        answer: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub player: String,
    pub points: i32,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreboardPayload {
    pub scores: Vec<ScoreEntry>,
    /// True once the room has played its last question.
    pub final_standings: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub code: String,
    pub message: String,
}

/// A client-to-server message. Clients never send scores or outcomes;
/// unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Join(ClientJoin),
    Start,
    Buzz,
    Answer(ClientAnswer),
    Leave,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientJoin {
    pub player: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientAnswer {
    pub answer: String,
}

/// A message plus its recipient: one player, or everyone in the room.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
    pub message: RoomMessage,
}

impl Envelope {
    pub fn reaches(&self, player: &str) -> bool {
        self.to.as_deref().is_none_or(|t| t == player)
    }
}
