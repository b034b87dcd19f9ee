//! Rebuilds the games of a room from its message log alone.
//!
//! Inputs (reveals, buzzes, answers, departures, expiries) are re-applied
//! to a fresh engine; everything derived (scores, interpretation payloads,
//! question ends) is checked against what the engine produces. The
//! resulting engine logs then go through [`coopqa_core::engine::replay`].

use coopqa_core::engine::{replay, EventKind, GameSetup, GuessSource, Phase, PlayerSetup, ReplayError};
use coopqa_core::sim::GameLog;
use coopqa_core::{Game, Question};
use thiserror::Error;

use super::protocol::{InterpretationsPayload, MessageBody, ResultPayload, RoomMessage, StartPayload};

#[derive(Debug, Error)]
pub enum MessageReplayError {
    #[error("message {seq}: question {question:?} is not in the question set")]
    UnknownQuestion { seq: u64, question: String },
    #[error("message {seq}: sequence numbers must increase")]
    Sequence { seq: u64 },
    #[error("message {seq}: {kind} outside a question")]
    NoGame { seq: u64, kind: &'static str },
    #[error("message {seq}: the engine rejected it: {message}")]
    Rejected { seq: u64, message: String },
    #[error("message {seq}: {detail}")]
    Mismatch { seq: u64, detail: String },
    #[error("message {seq}: start messages disagree")]
    StartMismatch { seq: u64 },
    #[error("rebuilt game for {question:?} does not replay: {source}")]
    Replay { question: String, source: ReplayError },
    #[error("the log ends with {0:?} unfinished")]
    Unfinished(String),
}

struct Pending {
    first: StartPayload,
    players: Vec<PlayerSetup>,
}

/// The engine logs behind a room's message log, in play order. `messages`
/// may hold every envelope the room sent (private ones included).
pub fn rebuild_games<S: GuessSource + ?Sized>(
    messages: &[RoomMessage],
    questions: &[Question],
    source: &S,
) -> Result<Vec<GameLog>, MessageReplayError> {
    let mut out = Vec::new();
    let mut pending: Option<Pending> = None;
    let mut game: Option<Game> = None;
    let mut last_seq = None;

    for m in messages {
        let seq = m.seq;
        if last_seq.is_some_and(|l| seq <= l) {
            return Err(MessageReplayError::Sequence { seq });
        }
        last_seq = Some(seq);
        let mismatch = |detail: String| MessageReplayError::Mismatch { seq, detail };
        let rejected = |e: coopqa_core::engine::EngineError| MessageReplayError::Rejected {
            seq,
            message: e.to_string(),
        };

        if let MessageBody::Start(s) = &m.body {
            let p = pending.get_or_insert_with(|| Pending {
                first: s.clone(),
                players: Vec::new(),
            });
            let same = p.first.question_id == s.question_id
                && p.first.players == s.players
                && p.first.seed == s.seed
                && p.first.engine == s.engine
                && p.first.mode == s.mode;
            let recipient = m.player.clone().unwrap_or_default();
            if !same || !s.players.contains(&recipient) || p.players.iter().any(|x| x.id == recipient) {
                return Err(MessageReplayError::StartMismatch { seq });
            }
            p.players.push(PlayerSetup {
                id: recipient,
                condition: s.combo,
            });
            if p.players.len() == s.players.len() {
                let p = pending.take().expect("just filled");
                let question = questions
                    .iter()
                    .find(|q| q.id() == p.first.question_id)
                    .ok_or_else(|| MessageReplayError::UnknownQuestion {
                        seq,
                        question: p.first.question_id.clone(),
                    })?;
                let mut players = p.players;
                players.sort_by_key(|x| p.first.players.iter().position(|id| *id == x.id));
                let setup = GameSetup {
                    question_id: p.first.question_id.clone(),
                    players,
                    mode: p.first.mode,
                    seed: p.first.seed,
                    config: p.first.engine,
                };
                game = Some(Game::create(question.clone(), setup).map_err(rejected)?);
            }
            continue;
        }

        let needs_game = !matches!(m.body, MessageBody::Join(_) | MessageBody::Scoreboard(_) | MessageBody::Error(_))
            && !matches!(m.body, MessageBody::Result(ResultPayload::Left) if game.is_none());
        if !needs_game {
            continue;
        }
        let g = game.as_mut().ok_or(MessageReplayError::NoGame {
            seq,
            kind: m.body.kind(),
        })?;
        let player = m.player.as_deref().unwrap_or_default();
        let last = |g: &Game| g.events().last().map(|e| (e.at, e.player.clone(), e.kind.clone()));

        match &m.body {
            MessageBody::Reveal(r) => {
                g.advance(source, m.at).map_err(rejected)?;
                if g.revealed() != r.position || g.question().words()[r.position - 1] != r.word {
                    return Err(mismatch(format!("reveal of word {} does not match", r.position)));
                }
            }
            MessageBody::Interpretations(i) => {
                let expected = g
                    .payload_for(player)
                    .map(|p| InterpretationsPayload::from_payload(g.revealed(), p));
                if expected.as_ref() != Some(i) {
                    return Err(mismatch(format!("interpretations for {player:?} differ from the engine")));
                }
            }
            MessageBody::Buzz(b) => {
                g.buzz(player, m.at).map_err(rejected)?;
                if g.revealed() != b.position {
                    return Err(mismatch("buzz position differs".into()));
                }
            }
            MessageBody::FloorGranted(f) => match g.phase() {
                Phase::Buzzed { player: h, deadline } if h == player && *deadline == f.deadline => {}
                _ => return Err(mismatch("floor grant differs from the engine".into())),
            },
            MessageBody::Answer(a) => {
                g.submit_answer(player, &a.answer, m.at).map_err(rejected)?;
            }
            MessageBody::Result(ResultPayload::Answer { answer, correct, points }) => {
                let scored = g.events().iter().rev().find(|e| matches!(e.kind, EventKind::SubmitAnswer { .. }));
                let expected = EventKind::SubmitAnswer {
                    answer: answer.clone(),
                    correct: *correct,
                    points: *points,
                };
                let ok = scored.is_some_and(|e| e.player.as_deref() == Some(player) && e.kind == expected);
                if !ok {
                    return Err(mismatch("answer result differs from the engine".into()));
                }
            }
            MessageBody::Result(ResultPayload::Timeout { points }) => {
                let already = g.events().iter().rev().take(3).any(|e| {
                    e.at == m.at
                        && e.player.as_deref() == Some(player)
                        && e.kind == EventKind::AnswerTimeout { points: *points }
                });
                if !already {
                    if !g.expire(m.at).map_err(rejected)? {
                        return Err(mismatch("timeout before the deadline".into()));
                    }
                    if !matches!(last_timeout(g), Some(e) if e.player.as_deref() == Some(player)) {
                        return Err(mismatch("timeout for a different player".into()));
                    }
                }
            }
            MessageBody::Result(ResultPayload::Left) => {
                if g.players().iter().any(|p| p.id == player && p.active) {
                    g.leave(player, m.at).map_err(rejected)?;
                }
            }
            MessageBody::Result(ResultPayload::QuestionEnd { question_id, reason, .. }) => {
                if !g.is_finished() && !g.expire(m.at).map_err(rejected)? {
                    return Err(mismatch("question end before any deadline".into()));
                }
                let ended = matches!(
                    last(g),
                    Some((at, None, EventKind::QuestionEnd { reason: r })) if at == m.at && r == *reason
                );
                if !ended || question_id != g.question().id() {
                    return Err(mismatch("question end differs from the engine".into()));
                }
                let done = game.take().expect("checked above");
                let log = GameLog {
                    setup: done.setup().clone(),
                    events: done.events().to_vec(),
                };
                replay(&log.setup, questions, source, &log.events).map_err(|source| {
                    MessageReplayError::Replay {
                        question: log.setup.question_id.clone(),
                        source,
                    }
                })?;
                out.push(log);
            }
            MessageBody::Join(_) | MessageBody::Start(_) | MessageBody::Scoreboard(_) | MessageBody::Error(_) => {}
        }
    }
    if let Some(g) = game {
        return Err(MessageReplayError::Unfinished(g.question().id().to_string()));
    }
    Ok(out)
}

fn last_timeout(g: &Game) -> Option<&coopqa_core::GameEvent> {
    g.events()
        .iter()
        .rev()
        .find(|e| matches!(e.kind, EventKind::AnswerTimeout { .. }))
}
