//! One live room as a pure state machine. Client messages and clock ticks
//! go in; addressed [`RoomMessage`]s come out. The server feeds it
//! wall-clock milliseconds, tests feed it any monotone clock.
//!
//! Every engine event is translated into messages as soon as it happens,
//! so the message log mirrors the engine log and can rebuild it.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use coopqa_core::engine::{EngineConfig, EventKind, GameSetup, GuessSource, Phase, PlayerSetup};
use coopqa_core::sampler::{assign_room_for_question, ExposureHistory};
use coopqa_core::sim::GameLog;
use coopqa_core::{ConditionCombo, Game, GameRecord, Group, Mode, Question};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::protocol::*;

/// Default readout pace: four words per second.
pub const DEFAULT_MS_PER_WORD: u64 = 250;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoomConfig {
    pub mode: Mode,
    pub capacity: usize,
    pub ms_per_word: u64,
    /// Gap between the end of one question and the start of the next.
    pub pause_ms: u64,
    /// Stop after this many questions; `None` plays the whole set.
    pub question_limit: Option<usize>,
    pub engine: EngineConfig,
    pub seed: u64,
}

impl RoomConfig {
    pub fn new(mode: Mode, seed: u64) -> Self {
        Self {
            mode,
            capacity: match mode {
                Mode::NoviceSolo => 1,
                Mode::ExpertCompetitive => 8,
            },
            ms_per_word: DEFAULT_MS_PER_WORD,
            pause_ms: 3_000,
            question_limit: None,
            engine: EngineConfig::default(),
            seed,
        }
    }

    pub fn group(&self) -> Group {
        match self.mode {
            Mode::NoviceSolo => Group::Novice,
            Mode::ExpertCompetitive => Group::Expert,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoomError {
    #[error("a room needs at least one question")]
    NoQuestions,
    #[error("pacing must be positive")]
    ZeroPacing,
    #[error("capacity must be positive, and 1 for solo rooms")]
    Capacity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seat {
    pub id: String,
    pub points: i32,
    pub answered: u32,
    pub correct: u32,
    pub active: bool,
}

struct Live {
    game: Game,
    combos: BTreeMap<String, ConditionCombo>,
    /// When the next word is due; `None` while the floor is held.
    next_reveal: Option<u64>,
    top_accuracy: f64,
    /// Engine events already turned into messages.
    synced: usize,
}

enum Stage {
    Lobby,
    Playing(Box<Live>),
    Between { next_at: u64 },
    Done,
}

pub struct Room<S> {
    id: String,
    config: RoomConfig,
    questions: Arc<[Question]>,
    order: Vec<usize>,
    cursor: usize,
    played: usize,
    labels: Arc<[String]>,
    source: S,
    history: Arc<Mutex<ExposureHistory>>,
    rng: ChaCha8Rng,
    seats: Vec<Seat>,
    stage: Stage,
    seq: u64,
    log: Vec<Envelope>,
    records: Vec<GameRecord>,
    games: Vec<GameLog>,
}

impl<S: GuessSource> Room<S> {
    /// A room over `questions`, played in a seeded shuffled order. Combos
    /// come from `history`, which rooms may share.
    pub fn new(
        id: impl Into<String>,
        config: RoomConfig,
        questions: Arc<[Question]>,
        labels: Arc<[String]>,
        source: S,
        history: Arc<Mutex<ExposureHistory>>,
    ) -> Result<Self, RoomError> {
        if questions.is_empty() {
            return Err(RoomError::NoQuestions);
        }
        if config.ms_per_word == 0 {
            return Err(RoomError::ZeroPacing);
        }
        if config.capacity == 0 || (config.mode == Mode::NoviceSolo && config.capacity != 1) {
            return Err(RoomError::Capacity);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut order: Vec<usize> = (0..questions.len()).collect();
        for i in (1..order.len()).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            order.swap(i, j);
        }
        Ok(Self {
            id: id.into(),
            config,
            questions,
            order,
            cursor: 0,
            played: 0,
            labels,
            source,
            history,
            rng,
            seats: Vec::new(),
            stage: Stage::Lobby,
            seq: 0,
            log: Vec::new(),
            records: Vec::new(),
            games: Vec::new(),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &RoomConfig {
        &self.config
    }

    pub fn seats(&self) -> &[Seat] {
        &self.seats
    }

    pub fn is_seated(&self, player: &str) -> bool {
        self.seats.iter().any(|s| s.id == player)
    }

    pub fn is_done(&self) -> bool {
        matches!(self.stage, Stage::Done)
    }

    /// Every message emitted so far, in sequence order.
    pub fn log(&self) -> &[Envelope] {
        &self.log
    }

    /// Records of finished questions not yet taken.
    pub fn take_records(&mut self) -> Vec<GameRecord> {
        std::mem::take(&mut self.records)
    }

    /// Engine logs of finished questions not yet taken.
    pub fn take_games(&mut self) -> Vec<GameLog> {
        std::mem::take(&mut self.games)
    }

    /// The earliest time at which [`Room::tick`] has work to do.
    pub fn next_deadline(&self) -> Option<u64> {
        match &self.stage {
            Stage::Playing(live) => Self::due(live),
            Stage::Between { next_at } => Some(*next_at),
            Stage::Lobby | Stage::Done => None,
        }
    }

    fn due(live: &Live) -> Option<u64> {
        match live.game.phase() {
            Phase::Buzzed { deadline, .. } => Some(deadline + 1),
            Phase::Finished => None,
            Phase::Reading => match (live.next_reveal, live.game.grace_deadline()) {
                (Some(t), _) => Some(t),
                (None, Some(g)) => Some(g + 1),
                (None, None) => None,
            },
        }
    }

    /// Fires every timer due by `now`, each at its own scheduled time.
    pub fn tick(&mut self, now: u64) -> Vec<Envelope> {
        let mut out = Vec::new();
        while let Some(t) = self.next_deadline().filter(|&t| t <= now) {
            match &mut self.stage {
                Stage::Between { .. } => self.begin_question(t, &mut out),
                Stage::Playing(live) => {
                    let result = match (live.game.phase(), live.next_reveal) {
                        (Phase::Reading, Some(_)) => {
                            live.next_reveal = None;
                            live.game.advance(&self.source, t)
                        }
                        _ => live.game.expire(t).map(|_| ()),
                    };
                    result.expect("timers fire only when the engine accepts them");
                    self.sync(&mut out);
                }
                Stage::Lobby | Stage::Done => unreachable!("no timers outside play"),
            }
        }
        out
    }

    /// Handles one client message from `player` (the connection's
    /// identity; for `join`, the id being claimed).
    pub fn handle(&mut self, player: &str, msg: ClientMessage, now: u64) -> Vec<Envelope> {
        let mut out = self.tick(now);
        match msg {
            ClientMessage::Join(ClientJoin { player: name }) => self.join(&name, now, &mut out),
            _ if !self.is_seated(player) => {
                self.error(player, now, "not_joined", "join the room first", &mut out)
            }
            ClientMessage::Start => match self.stage {
                Stage::Lobby => self.begin_question(now, &mut out),
                _ => self.error(player, now, "already_started", "the room has already started", &mut out),
            },
            ClientMessage::Buzz => {
                let r = self.with_game(|g, _| g.buzz(player, now));
                self.after_input(player, now, r, &mut out);
            }
            ClientMessage::Answer(ClientAnswer { answer }) => {
                let r = self.with_game(|g, _| g.submit_answer(player, &answer, now).map(|_| ()));
                self.after_input(player, now, r, &mut out);
            }
            ClientMessage::Leave => self.leave(player, now, &mut out),
        }
        out
    }

    /// Sends `player` an error without touching the game.
    pub fn reject(&mut self, player: &str, code: &str, message: &str, now: u64) -> Vec<Envelope> {
        let mut out = self.tick(now);
        self.error(player, now, code, message, &mut out);
        out
    }

    /// A dropped connection counts as leaving.
    pub fn disconnect(&mut self, player: &str, now: u64) -> Vec<Envelope> {
        let mut out = self.tick(now);
        if self.is_seated(player) {
            self.leave(player, now, &mut out);
        }
        out
    }

    fn with_game(
        &mut self,
        f: impl FnOnce(&mut Game, &S) -> Result<(), coopqa_core::engine::EngineError>,
    ) -> Option<Result<(), String>> {
        match &mut self.stage {
            Stage::Playing(live) => Some(f(&mut live.game, &self.source).map_err(|e| e.to_string())),
            _ => None,
        }
    }

    fn after_input(&mut self, player: &str, now: u64, r: Option<Result<(), String>>, out: &mut Vec<Envelope>) {
        match r {
            None => self.error(player, now, "not_playing", "no question is in play", out),
            Some(Err(e)) => self.error(player, now, "rejected", &e, out),
            Some(Ok(())) => self.sync(out),
        }
    }

    fn join(&mut self, name: &str, now: u64, out: &mut Vec<Envelope>) {
        if name.trim().is_empty() {
            return self.error(name, now, "bad_player", "player id must not be empty", out);
        }
        if self.is_seated(name) {
            return self.error(name, now, "duplicate_player", "that player id is taken", out);
        }
        if !matches!(self.stage, Stage::Lobby) {
            return self.error(name, now, "already_started", "the room has already started", out);
        }
        if self.seats.len() >= self.config.capacity {
            let msg = format!("the room holds {} players", self.config.capacity);
            return self.error(name, now, "room_full", &msg, out);
        }
        self.seats.push(Seat {
            id: name.to_string(),
            points: 0,
            answered: 0,
            correct: 0,
            active: true,
        });
        self.broadcast_join(Some(name), now, out);
    }

    fn broadcast_join(&mut self, player: Option<&str>, now: u64, out: &mut Vec<Envelope>) {
        let body = MessageBody::Join(JoinPayload {
            players: self.seats.iter().map(|s| s.id.clone()).collect(),
            capacity: self.config.capacity,
        });
        self.emit(None, player, now, body, out);
    }

    fn leave(&mut self, player: &str, now: u64, out: &mut Vec<Envelope>) {
        match &mut self.stage {
            Stage::Lobby => {
                self.seats.retain(|s| s.id != player);
                self.broadcast_join(Some(player), now, out);
            }
            Stage::Playing(live) => {
                let in_game = live.game.players().iter().any(|p| p.id == player && p.active);
                if in_game {
                    live_leave(live, player, now);
                }
                self.set_inactive(player);
                if in_game {
                    self.sync(out);
                } else {
                    self.emit(None, Some(player), now, MessageBody::Result(ResultPayload::Left), out);
                }
            }
            Stage::Between { .. } | Stage::Done => {
                self.set_inactive(player);
                self.emit(None, Some(player), now, MessageBody::Result(ResultPayload::Left), out);
            }
        }
    }

    fn set_inactive(&mut self, player: &str) {
        if let Some(s) = self.seats.iter_mut().find(|s| s.id == player) {
            s.active = false;
        }
    }

    fn error(&mut self, player: &str, now: u64, code: &str, message: &str, out: &mut Vec<Envelope>) {
        let body = MessageBody::Error(ErrorPayload {
            code: code.into(),
            message: message.into(),
        });
        self.emit(Some(player), Some(player), now, body, out);
    }

    fn emit(&mut self, to: Option<&str>, player: Option<&str>, at: u64, body: MessageBody, out: &mut Vec<Envelope>) {
        let env = Envelope {
            to: to.map(str::to_string),
            message: RoomMessage {
                v: PROTOCOL_VERSION,
                room: self.id.clone(),
                seq: self.seq,
                at,
                player: player.map(str::to_string),
                body,
            },
        };
        self.seq += 1;
        self.log.push(env.clone());
        out.push(env);
    }

    /// Accuracy so far of the highest-scoring active seat.
    fn top_active_accuracy(&self) -> f64 {
        let top = self
            .seats
            .iter()
            .filter(|s| s.active)
            .max_by(|a, b| a.points.cmp(&b.points).then_with(|| b.id.cmp(&a.id)));
        match top {
            Some(s) if s.answered > 0 => f64::from(s.correct) / f64::from(s.answered),
            _ => 0.0,
        }
    }

    fn next_question(&mut self, players: &[String]) -> Option<usize> {
        if self.config.question_limit.is_some_and(|l| self.played >= l) {
            return None;
        }
        let history = self.history.lock().expect("history lock");
        while self.cursor < self.order.len() {
            let q = &self.questions[self.order[self.cursor]];
            self.cursor += 1;
            if !players.iter().any(|p| history.has_seen(p, q.id())) {
                return Some(self.order[self.cursor - 1]);
            }
        }
        None
    }

    fn begin_question(&mut self, now: u64, out: &mut Vec<Envelope>) {
        let players: Vec<String> = self.seats.iter().filter(|s| s.active).map(|s| s.id.clone()).collect();
        let next = if players.is_empty() {
            None
        } else {
            self.next_question(&players)
        };
        let Some(qi) = next else {
            self.stage = Stage::Done;
            return self.scoreboard(now, true, out);
        };
        let question = self.questions[qi].clone();
        let combos = {
            let mut history = self.history.lock().expect("history lock");
            assign_room_for_question(&mut history, question.id(), players.iter().map(String::as_str), &mut self.rng)
                .expect("unseen questions take fresh assignments")
        };
        let setup = GameSetup {
            question_id: question.id().to_string(),
            players: players
                .iter()
                .map(|p| PlayerSetup {
                    id: p.clone(),
                    condition: combos[p],
                })
                .collect(),
            mode: self.config.mode,
            seed: self.rng.next_u64(),
            config: self.config.engine,
        };
        let top_accuracy = self.top_active_accuracy();
        let total = self
            .config
            .question_limit
            .map_or(self.questions.len(), |l| l.min(self.questions.len()));
        for p in &players {
            let body = MessageBody::Start(StartPayload {
                question_id: question.id().to_string(),
                question_number: self.played + 1,
                question_count: total,
                length: question.len(),
                mode: self.config.mode,
                players: players.clone(),
                combo: combos[p],
                ms_per_word: self.config.ms_per_word,
                seed: setup.seed,
                engine: setup.config,
                labels: self.labels.to_vec(),
            });
            self.emit(Some(p), Some(p), now, body, out);
        }
        let game = Game::create(question, setup).expect("room setups are valid");
        self.stage = Stage::Playing(Box::new(Live {
            game,
            combos,
            next_reveal: Some(now + self.config.ms_per_word),
            top_accuracy,
            synced: 0,
        }));
    }

    /// Turns new engine events into messages and reschedules the readout.
    fn sync(&mut self, out: &mut Vec<Envelope>) {
        let Stage::Playing(live) = &mut self.stage else {
            return;
        };
        let new: Vec<_> = live.game.events()[live.synced..].to_vec();
        live.synced = live.game.events().len();
        let mut pending = Vec::new();
        let mut ended = None;
        for ev in new {
            let player = ev.player.as_deref();
            match ev.kind {
                EventKind::RevealWord { position } => pending.push((
                    None,
                    None,
                    ev.at,
                    MessageBody::Reveal(RevealPayload {
                        position,
                        word: live.game.question().words()[position - 1].clone(),
                    }),
                )),
                EventKind::RefreshGuesses { revealed, .. } => {
                    for p in live.game.players().iter().filter(|p| p.active) {
                        let payload = live.game.payload_for(&p.id).expect("refresh sets a guess state");
                        pending.push((
                            Some(p.id.clone()),
                            Some(p.id.clone()),
                            ev.at,
                            MessageBody::Interpretations(InterpretationsPayload::from_payload(revealed, payload)),
                        ));
                    }
                }
                EventKind::Buzz { position } => {
                    let who = player.map(str::to_string);
                    pending.push((None, who.clone(), ev.at, MessageBody::Buzz(BuzzPayload { position })));
                    let window = live.game.setup().config.answer_window_ms;
                    pending.push((
                        None,
                        who,
                        ev.at,
                        MessageBody::FloorGranted(FloorPayload {
                            deadline: ev.at + window,
                            answer_window_ms: window,
                        }),
                    ));
                }
                EventKind::SubmitAnswer { answer, correct, points } => {
                    let who = player.map(str::to_string);
                    pending.push((
                        None,
                        who.clone(),
                        ev.at,
                        MessageBody::Answer(AnswerPayload { answer: answer.clone() }),
                    ));
                    pending.push((
                        None,
                        who,
                        ev.at,
                        MessageBody::Result(ResultPayload::Answer { answer, correct, points }),
                    ));
                }
                EventKind::AnswerTimeout { points } => pending.push((
                    None,
                    player.map(str::to_string),
                    ev.at,
                    MessageBody::Result(ResultPayload::Timeout { points }),
                )),
                EventKind::PlayerLeft => pending.push((
                    None,
                    player.map(str::to_string),
                    ev.at,
                    MessageBody::Result(ResultPayload::Left),
                )),
                EventKind::QuestionEnd { reason } => {
                    pending.push((
                        None,
                        None,
                        ev.at,
                        MessageBody::Result(ResultPayload::QuestionEnd {
                            question_id: live.game.question().id().to_string(),
                            reason,
                            answer: live.game.question().answer().to_string(),
                        }),
                    ));
                    ended = Some(ev.at);
                }
            }
        }
        if matches!(live.game.phase(), Phase::Buzzed { .. }) {
            live.next_reveal = None;
        }
        if ended.is_none() && *live.game.phase() == Phase::Reading && live.next_reveal.is_none() {
            let n = live.game.question().len();
            if live.game.revealed() < n {
                live.next_reveal = Some(live.game.clock() + self.config.ms_per_word);
            }
        }
        for (to, player, at, body) in pending {
            self.emit(to.as_deref(), player.as_deref(), at, body, out);
        }
        if let Some(at) = ended {
            self.finish_question(at, out);
        }
    }

    fn finish_question(&mut self, at: u64, out: &mut Vec<Envelope>) {
        let Stage::Playing(live) = std::mem::replace(&mut self.stage, Stage::Between { next_at: 0 }) else {
            return;
        };
        let group = self.config.group();
        let qid = live.game.question().id().to_string();
        for o in live.game.outcomes() {
            self.records.push(GameRecord::from_outcome(
                o,
                &qid,
                group,
                live.combos[&o.player],
                live.top_accuracy,
                o.at,
            ));
            if let Some(s) = self.seats.iter_mut().find(|s| s.id == o.player) {
                s.points += o.points;
                if o.answered {
                    s.answered += 1;
                    s.correct += u32::from(o.correct);
                }
            }
        }
        self.games.push(GameLog {
            setup: live.game.setup().clone(),
            events: live.game.events().to_vec(),
        });
        self.played += 1;
        self.stage = Stage::Between {
            next_at: at + self.config.pause_ms,
        };
        self.scoreboard(at, false, out);
    }

    fn scoreboard(&mut self, at: u64, final_standings: bool, out: &mut Vec<Envelope>) {
        let scores = self
            .seats
            .iter()
            .map(|s| ScoreEntry {
                player: s.id.clone(),
                points: s.points,
                active: s.active,
            })
            .collect();
        self.emit(
            None,
            None,
            at,
            MessageBody::Scoreboard(ScoreboardPayload { scores, final_standings }),
            out,
        );
    }
}

fn live_leave(live: &mut Live, player: &str, now: u64) {
    live.game
        .leave(player, now)
        .expect("an active player in an unfinished game may leave");
}
