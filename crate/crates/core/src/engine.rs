//! Toss-up game engine.
//!
//! A [`Game`] reveals a question word by word, refreshes the guesser every
//! few words, and arbitrates buzzes: one floor at a time, one answer per
//! player, +10 for a correct answer and -5 for a wrong or late one. Time is
//! a logical millisecond clock supplied by the caller, and every state
//! change is recorded as a [`GameEvent`] so a game can be rebuilt with
//! [`replay`].

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cell::RefCell;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Question;
use crate::guesser::Guesser;
use crate::interpretations::{render, ConditionCombo, GuessState, InterpretationPayload};

pub const CORRECT_POINTS: i32 = 10;
pub const WRONG_POINTS: i32 = -5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// The guesser refreshes after every `refresh_every` revealed words and
    /// after the final word.
    pub refresh_every: usize,
    pub answer_window_ms: u64,
    /// How long buzzing stays open once the whole question is shown.
    pub grace_ms: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            refresh_every: 4,
            answer_window_ms: 8_000,
            grace_ms: 8_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    NoviceSolo,
    ExpertCompetitive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerSetup {
    pub id: String,
    pub condition: ConditionCombo,
}

/// Everything needed to start (or replay) a game besides the question text
/// and the guesser.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameSetup {
    pub question_id: String,
    pub players: Vec<PlayerSetup>,
    pub mode: Mode,
    pub seed: u64,
    #[serde(default)]
    pub config: EngineConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("a game needs at least one player")]
    NoPlayers,
    #[error("solo mode takes exactly one player, got {0}")]
    SoloWithMany(usize),
    #[error("duplicate player {0:?}")]
    DuplicatePlayer(String),
    #[error("setup is for question {expected:?}, got {got:?}")]
    WrongQuestion { expected: String, got: String },
    #[error("refresh interval must be positive")]
    ZeroRefresh,
    #[error("game is finished")]
    Finished,
    #[error("{0:?} holds the floor")]
    FloorHeld(String),
    #[error("the whole question is already revealed")]
    ReadoutComplete,
    #[error("unknown player {0:?}")]
    UnknownPlayer(String),
    #[error("player {0:?} has left")]
    Inactive(String),
    #[error("player {0:?} already answered this question")]
    AlreadyAnswered(String),
    #[error("no words revealed yet")]
    NothingRevealed,
    #[error("buzzing closed at {0} ms")]
    GraceExpired(u64),
    #[error("player {0:?} does not hold the floor")]
    NotYourFloor(String),
    #[error("clock went backwards: {now} < {clock}")]
    ClockRegression { now: u64, clock: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    Correct,
    /// Readout finished with nobody left who may buzz.
    Exhausted,
    GraceExpired,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    RevealWord { position: usize },
    RefreshGuesses { revealed: usize, top_guess: Option<String> },
    Buzz { position: usize },
    SubmitAnswer { answer: String, correct: bool, points: i32 },
    AnswerTimeout { points: i32 },
    PlayerLeft,
    QuestionEnd { reason: EndReason },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameEvent {
    pub seq: u64,
    /// Logical time in milliseconds.
    pub at: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub player: Option<String>,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// One player's result on one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub player: String,
    pub answered: bool,
    pub correct: bool,
    /// Words revealed at the buzz; the question length when never buzzed.
    pub buzz_position_words: usize,
    pub buzz_position_frac: f64,
    pub points: i32,
    pub answer: Option<String>,
    /// Top guess on screen at the buzz.
    pub guess_shown: Option<String>,
    pub active_players: usize,
    pub at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    Reading,
    Buzzed { player: String, deadline: u64 },
    Finished,
}

#[derive(Debug, Clone, PartialEq)]
struct BuzzInfo {
    position: usize,
    guess_shown: Option<String>,
    active_players: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerState {
    pub id: String,
    pub condition: ConditionCombo,
    pub buzzed: bool,
    pub active: bool,
    pub points: i32,
    buzz: Option<BuzzInfo>,
    answered: bool,
}

/// Source of guess states for a question prefix.
pub trait GuessSource {
    fn guess_state(&self, question: &Question, revealed: usize) -> Arc<GuessState>;
}

impl GuessSource for Guesser {
    fn guess_state(&self, question: &Question, revealed: usize) -> Arc<GuessState> {
        Arc::new(Guesser::guess_state(self, &question.prefix_tokens(revealed)))
    }
}

impl<T: GuessSource + ?Sized> GuessSource for &T {
    fn guess_state(&self, question: &Question, revealed: usize) -> Arc<GuessState> {
        (**self).guess_state(question, revealed)
    }
}

impl<T: GuessSource + ?Sized> GuessSource for Arc<T> {
    fn guess_state(&self, question: &Question, revealed: usize) -> Arc<GuessState> {
        (**self).guess_state(question, revealed)
    }
}

/// Memoizes guess states per (question, revealed) pair.
pub struct CachedGuesser<S> {
    inner: S,
    cache: RefCell<BTreeMap<(String, usize), Arc<GuessState>>>,
}

impl<S: GuessSource> CachedGuesser<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            cache: RefCell::new(BTreeMap::new()),
        }
    }
}

impl<S: GuessSource> GuessSource for CachedGuesser<S> {
    fn guess_state(&self, question: &Question, revealed: usize) -> Arc<GuessState> {
        let key = (question.id().to_string(), revealed);
        if let Some(s) = self.cache.borrow().get(&key) {
            return Arc::clone(s);
        }
        let s = self.inner.guess_state(question, revealed);
        self.cache.borrow_mut().insert(key, Arc::clone(&s));
        s
    }
}

/// Case-insensitive comparison of canonical answer labels.
pub fn labels_match(a: &str, b: &str) -> bool {
    a.trim().to_lowercase() == b.trim().to_lowercase()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    question: Question,
    setup: GameSetup,
    revealed: usize,
    phase: Phase,
    players: Vec<PlayerState>,
    latest: Option<Arc<GuessState>>,
    refreshes: usize,
    clock: u64,
    grace_deadline: Option<u64>,
    events: Vec<GameEvent>,
    outcomes: Vec<Outcome>,
}

impl Game {
    pub fn create(question: Question, setup: GameSetup) -> Result<Self, EngineError> {
        if setup.question_id != question.id() {
            return Err(EngineError::WrongQuestion {
                expected: setup.question_id.clone(),
                got: question.id().to_string(),
            });
        }
        if setup.players.is_empty() {
            return Err(EngineError::NoPlayers);
        }
        if setup.mode == Mode::NoviceSolo && setup.players.len() != 1 {
            return Err(EngineError::SoloWithMany(setup.players.len()));
        }
        if setup.config.refresh_every == 0 {
            return Err(EngineError::ZeroRefresh);
        }
        for (i, p) in setup.players.iter().enumerate() {
            if setup.players[..i].iter().any(|q| q.id == p.id) {
                return Err(EngineError::DuplicatePlayer(p.id.clone()));
            }
        }
        let players = setup
            .players
            .iter()
            .map(|p| PlayerState {
                id: p.id.clone(),
                condition: p.condition,
                buzzed: false,
                active: true,
                points: 0,
                buzz: None,
                answered: false,
            })
            .collect();
        Ok(Self {
            question,
            setup,
            revealed: 0,
            phase: Phase::Reading,
            players,
            latest: None,
            refreshes: 0,
            clock: 0,
            grace_deadline: None,
            events: Vec::new(),
            outcomes: Vec::new(),
        })
    }

    pub fn question(&self) -> &Question {
        &self.question
    }

    pub fn setup(&self) -> &GameSetup {
        &self.setup
    }

    pub fn revealed(&self) -> usize {
        self.revealed
    }

    pub fn phase(&self) -> &Phase {
        &self.phase
    }

    pub fn is_finished(&self) -> bool {
        self.phase == Phase::Finished
    }

    pub fn players(&self) -> &[PlayerState] {
        &self.players
    }

    pub fn active_players(&self) -> usize {
        self.players.iter().filter(|p| p.active).count()
    }

    pub fn latest_guess_state(&self) -> Option<&GuessState> {
        self.latest.as_deref()
    }

    /// Number of guesser refreshes so far.
    pub fn refreshes(&self) -> usize {
        self.refreshes
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn grace_deadline(&self) -> Option<u64> {
        self.grace_deadline
    }

    pub fn events(&self) -> &[GameEvent] {
        &self.events
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    /// Players who may still buzz.
    pub fn eligible_players(&self) -> impl Iterator<Item = &PlayerState> {
        self.players.iter().filter(|p| p.active && !p.buzzed)
    }

    /// The latest guess state masked by `player`'s condition; `None` before
    /// the first refresh or for an unknown player.
    pub fn payload_for(&self, player: &str) -> Option<InterpretationPayload> {
        let p = self.players.iter().find(|p| p.id == player)?;
        Some(render(self.latest.as_deref()?, p.condition))
    }

    fn tick(&self, now: u64) -> Result<(), EngineError> {
        if now < self.clock {
            return Err(EngineError::ClockRegression {
                now,
                clock: self.clock,
            });
        }
        Ok(())
    }

    fn emit(&mut self, at: u64, player: Option<&str>, kind: EventKind) {
        self.clock = at;
        self.events.push(GameEvent {
            seq: self.events.len() as u64,
            at,
            player: player.map(ToString::to_string),
            kind,
        });
    }

    fn player_index(&self, id: &str) -> Result<usize, EngineError> {
        self.players
            .iter()
            .position(|p| p.id == id)
            .ok_or_else(|| EngineError::UnknownPlayer(id.to_string()))
    }

    /// Reveals the next word, refreshing the guesser on schedule.
    pub fn advance<S: GuessSource + ?Sized>(&mut self, source: &S, now: u64) -> Result<(), EngineError> {
        self.tick(now)?;
        match &self.phase {
            Phase::Finished => return Err(EngineError::Finished),
            Phase::Buzzed { player, .. } => return Err(EngineError::FloorHeld(player.clone())),
            Phase::Reading => {}
        }
        let n = self.question.len();
        if self.revealed == n {
            return Err(EngineError::ReadoutComplete);
        }
        self.revealed += 1;
        self.emit(now, None, EventKind::RevealWord { position: self.revealed });

        if self.revealed.is_multiple_of(self.setup.config.refresh_every) || self.revealed == n {
            let state = source.guess_state(&self.question, self.revealed);
            let top_guess = state.guesses.top().map(|g| g.label.clone());
            self.latest = Some(state);
            self.refreshes += 1;
            self.emit(
                now,
                None,
                EventKind::RefreshGuesses {
                    revealed: self.revealed,
                    top_guess,
                },
            );
        }
        if self.revealed == n {
            self.after_readout(now);
        }
        Ok(())
    }

    fn after_readout(&mut self, now: u64) {
        if self.eligible_players().next().is_none() {
            self.finish(EndReason::Exhausted, now);
        } else {
            self.grace_deadline = Some(now + self.setup.config.grace_ms);
        }
    }

    /// Claims the floor for `player`. Rejections leave the state unchanged.
    pub fn buzz(&mut self, player: &str, now: u64) -> Result<(), EngineError> {
        self.tick(now)?;
        match &self.phase {
            Phase::Finished => return Err(EngineError::Finished),
            Phase::Buzzed { player, .. } => return Err(EngineError::FloorHeld(player.clone())),
            Phase::Reading => {}
        }
        let i = self.player_index(player)?;
        let p = &self.players[i];
        if !p.active {
            return Err(EngineError::Inactive(player.to_string()));
        }
        if p.buzzed {
            return Err(EngineError::AlreadyAnswered(player.to_string()));
        }
        if self.revealed == 0 {
            return Err(EngineError::NothingRevealed);
        }
        if let Some(deadline) = self.grace_deadline {
            if now > deadline {
                return Err(EngineError::GraceExpired(deadline));
            }
        }

        let info = BuzzInfo {
            position: self.revealed,
            guess_shown: self
                .latest
                .as_ref()
                .and_then(|s| s.guesses.top())
                .map(|g| g.label.clone()),
            active_players: self.active_players(),
        };
        let p = &mut self.players[i];
        p.buzzed = true;
        p.buzz = Some(info);
        self.phase = Phase::Buzzed {
            player: player.to_string(),
            deadline: now + self.setup.config.answer_window_ms,
        };
        self.emit(now, Some(player), EventKind::Buzz { position: self.revealed });
        Ok(())
    }

    /// Scores the floor holder's answer. Answers after the deadline count
    /// as wrong.
    pub fn submit_answer(&mut self, player: &str, answer: &str, now: u64) -> Result<Outcome, EngineError> {
        self.tick(now)?;
        let deadline = match &self.phase {
            Phase::Buzzed { player: holder, deadline } if holder == player => *deadline,
            Phase::Finished => return Err(EngineError::Finished),
            _ => return Err(EngineError::NotYourFloor(player.to_string())),
        };
        let correct = now <= deadline && labels_match(answer, self.question.answer());
        let points = if correct { CORRECT_POINTS } else { WRONG_POINTS };
        self.emit(
            now,
            Some(player),
            EventKind::SubmitAnswer {
                answer: answer.to_string(),
                correct,
                points,
            },
        );
        Ok(self.resolve(player, Some(answer), correct, now))
    }

    /// Applies whichever deadline has passed by `now`: the floor holder's
    /// answer window, or the post-readout grace window. Returns whether
    /// anything happened.
    pub fn expire(&mut self, now: u64) -> Result<bool, EngineError> {
        self.tick(now)?;
        match self.phase.clone() {
            Phase::Buzzed { player, deadline } if now > deadline => {
                self.emit(now, Some(&player), EventKind::AnswerTimeout { points: WRONG_POINTS });
                self.resolve(&player, None, false, now);
                Ok(true)
            }
            Phase::Reading if self.grace_deadline.is_some_and(|d| now > d) => {
                self.finish(EndReason::GraceExpired, now);
                Ok(true)
            }
            _ => Ok(false),
        }
    }

    /// Marks a player inactive. A player leaving while holding the floor
    /// forfeits the answer.
    pub fn leave(&mut self, player: &str, now: u64) -> Result<(), EngineError> {
        self.tick(now)?;
        if self.is_finished() {
            return Err(EngineError::Finished);
        }
        let i = self.player_index(player)?;
        if !self.players[i].active {
            return Err(EngineError::Inactive(player.to_string()));
        }
        self.players[i].active = false;
        self.emit(now, Some(player), EventKind::PlayerLeft);
        let holds_floor = matches!(&self.phase, Phase::Buzzed { player: h, .. } if h == player);
        if holds_floor {
            self.emit(now, Some(player), EventKind::AnswerTimeout { points: WRONG_POINTS });
            self.resolve(player, None, false, now);
        } else if self.revealed == self.question.len()
            && self.phase == Phase::Reading
            && self.eligible_players().next().is_none()
        {
            self.finish(EndReason::Exhausted, now);
        }
        Ok(())
    }

    fn resolve(&mut self, player: &str, answer: Option<&str>, correct: bool, now: u64) -> Outcome {
        let n = self.question.len();
        let i = self.players.iter().position(|p| p.id == player).expect("floor holder exists");
        let points = if correct { CORRECT_POINTS } else { WRONG_POINTS };
        let p = &mut self.players[i];
        p.points += points;
        p.answered = true;
        let info = p.buzz.clone().expect("floor holder buzzed");
        let outcome = Outcome {
            player: player.to_string(),
            answered: true,
            correct,
            buzz_position_words: info.position,
            buzz_position_frac: info.position as f64 / n as f64,
            points,
            answer: answer.map(ToString::to_string),
            guess_shown: info.guess_shown,
            active_players: info.active_players,
            at: now,
        };
        self.outcomes.push(outcome.clone());

        if correct {
            self.finish(EndReason::Correct, now);
        } else {
            self.phase = Phase::Reading;
            if self.revealed == n {
                self.after_readout(now);
            }
        }
        outcome
    }

    fn finish(&mut self, reason: EndReason, now: u64) {
        let n = self.question.len();
        let active = self.active_players();
        for p in self.players.iter().filter(|p| !p.answered) {
            self.outcomes.push(Outcome {
                player: p.id.clone(),
                answered: false,
                correct: false,
                buzz_position_words: n,
                buzz_position_frac: 1.0,
                points: 0,
                answer: None,
                guess_shown: None,
                active_players: active,
                at: now,
            });
        }
        self.phase = Phase::Finished;
        self.grace_deadline = None;
        self.emit(now, None, EventKind::QuestionEnd { reason });
    }

    /// Advances through the rest of the question, then closes the grace
    /// window. Used by batch callers that have no more buzzes to make.
    pub fn run_out<S: GuessSource + ?Sized>(
        &mut self,
        source: &S,
        mut now: u64,
        ms_per_word: u64,
    ) -> Result<u64, EngineError> {
        while !self.is_finished() && self.revealed < self.question.len() {
            now += ms_per_word;
            self.advance(source, now)?;
        }
        if let Some(d) = self.grace_deadline {
            now = now.max(d + 1);
            self.expire(now)?;
        }
        Ok(now)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("event {index} has seq {seq}")]
    BadSequence { index: usize, seq: u64 },
    #[error("event {seq} is earlier than its predecessor")]
    TimeRegression { seq: u64 },
    #[error("event {seq} rejected by the engine: {source}")]
    Rejected { seq: u64, source: EngineError },
    #[error("event {seq} does not match the replayed game")]
    Divergence { seq: u64 },
    #[error("setup names question {0:?} which is not in the question set")]
    UnknownQuestion(String),
    #[error(transparent)]
    Setup(EngineError),
}

/// Rebuilds a game from its setup and event log. Inputs (reveals, buzzes,
/// answers, departures, expiries) are re-applied; derived events are
/// checked against what the engine produces.
pub fn replay<S: GuessSource + ?Sized>(
    setup: &GameSetup,
    questions: &[Question],
    source: &S,
    events: &[GameEvent],
) -> Result<Game, ReplayError> {
    let question = questions
        .iter()
        .find(|q| q.id() == setup.question_id)
        .ok_or_else(|| ReplayError::UnknownQuestion(setup.question_id.clone()))?;
    let mut game = Game::create(question.clone(), setup.clone()).map_err(ReplayError::Setup)?;

    for (index, ev) in events.iter().enumerate() {
        if ev.seq != index as u64 {
            return Err(ReplayError::BadSequence { index, seq: ev.seq });
        }
        if index > 0 && ev.at < events[index - 1].at {
            return Err(ReplayError::TimeRegression { seq: ev.seq });
        }
        if game.events.len() <= index {
            let rejected = |source| ReplayError::Rejected { seq: ev.seq, source };
            let player = ev.player.as_deref();
            let need_player = || player.ok_or(ReplayError::Divergence { seq: ev.seq });
            match &ev.kind {
                EventKind::RevealWord { .. } => game.advance(source, ev.at).map_err(rejected)?,
                EventKind::Buzz { .. } => game.buzz(need_player()?, ev.at).map_err(rejected)?,
                EventKind::SubmitAnswer { answer, .. } => {
                    game.submit_answer(need_player()?, answer, ev.at)
                        .map_err(rejected)?;
                }
                EventKind::PlayerLeft => game.leave(need_player()?, ev.at).map_err(rejected)?,
                EventKind::AnswerTimeout { .. } | EventKind::QuestionEnd { .. } => {
                    if !game.expire(ev.at).map_err(rejected)? {
                        return Err(ReplayError::Divergence { seq: ev.seq });
                    }
                }
                EventKind::RefreshGuesses { .. } => {
                    return Err(ReplayError::Divergence { seq: ev.seq })
                }
            }
        }
        if game.events.get(index) != Some(ev) {
            return Err(ReplayError::Divergence { seq: ev.seq });
        }
    }
    if game.events.len() != events.len() {
        // the last input produced derived events the log does not have
        return Err(ReplayError::Divergence {
            seq: events.len() as u64,
        });
    }
    Ok(game)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guesser::{Guess, GuessList};
    use alloc::format;
    use alloc::vec;
    use alloc::vec::Vec;

    /// Always guesses "Thoreau" and counts calls.
    struct Fixed(RefCell<Vec<usize>>);

    impl GuessSource for Fixed {
        fn guess_state(&self, _q: &Question, revealed: usize) -> Arc<GuessState> {
            self.0.borrow_mut().push(revealed);
            Arc::new(GuessState {
                guesses: GuessList {
                    guesses: vec![Guess {
                        label: "Thoreau".into(),
                        score: 3.0,
                        source_doc: "d".into(),
                    }],
                    query_len: revealed,
                },
                ..GuessState::default()
            })
        }
    }

    fn fixed() -> Fixed {
        Fixed(RefCell::new(Vec::new()))
    }

    fn question(n: usize) -> Question {
        let text = (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
        Question::new("q", &text, "Thoreau").unwrap()
    }

    fn setup(players: &[&str], mode: Mode) -> GameSetup {
        GameSetup {
            question_id: "q".into(),
            players: players
                .iter()
                .map(|p| PlayerSetup {
                    id: p.to_string(),
                    condition: ConditionCombo::ALL,
                })
                .collect(),
            mode,
            seed: 7,
            config: EngineConfig::default(),
        }
    }

    fn game(n: usize, players: &[&str]) -> Game {
        let mode = if players.len() == 1 { Mode::NoviceSolo } else { Mode::ExpertCompetitive };
        Game::create(question(n), setup(players, mode)).unwrap()
    }

    fn advance_to(g: &mut Game, s: &Fixed, words: usize) {
        while g.revealed() < words {
            let t = g.clock() + 250;
            g.advance(s, t).unwrap();
        }
    }

    #[test]
    fn create_checks_players() {
        assert!(game(5, &["a"]).phase() == &Phase::Reading);
        let g = game(5, &["a", "b", "c", "d", "e"]);
        assert_eq!(g.active_players(), 5);
        assert_eq!(g.revealed(), 0);
        assert!(g.latest_guess_state().is_none());
        assert_eq!(
            Game::create(question(5), setup(&["a", "b"], Mode::NoviceSolo)),
            Err(EngineError::SoloWithMany(2))
        );
        assert_eq!(
            Game::create(question(5), setup(&[], Mode::ExpertCompetitive)),
            Err(EngineError::NoPlayers)
        );
    }

    #[test]
    fn refresh_every_four_words() {
        let s = fixed();
        let mut g = game(12, &["a"]);
        advance_to(&mut g, &s, 12);
        assert_eq!(*s.0.borrow(), [4, 8, 12]);
        assert_eq!(g.refreshes(), 3);
        let err = g.advance(&s, g.clock() + 1);
        assert_eq!(err, Err(EngineError::ReadoutComplete));
    }

    #[test]
    fn final_word_always_refreshes() {
        let s = fixed();
        let mut g = game(6, &["a"]);
        advance_to(&mut g, &s, 6);
        assert_eq!(*s.0.borrow(), [4, 6]);
    }

    #[test]
    fn correct_answer_scores_ten_and_finishes() {
        let s = fixed();
        let mut g = game(120, &["a", "b"]);
        advance_to(&mut g, &s, 36);
        g.buzz("a", 10_000).unwrap();
        let o = g.submit_answer("a", "thoreau ", 12_000).unwrap();
        assert!(o.correct);
        assert_eq!(o.points, 10);
        assert_eq!(o.buzz_position_frac, 0.3);
        assert_eq!(o.guess_shown.as_deref(), Some("Thoreau"));
        assert!(g.is_finished());
        let b = g.outcomes().iter().find(|o| o.player == "b").unwrap();
        assert_eq!((b.answered, b.points, b.buzz_position_frac), (false, 0, 1.0));
    }

    #[test]
    fn wrong_answer_locks_out_only_answerer() {
        let s = fixed();
        let mut g = game(20, &["a", "b", "c"]);
        advance_to(&mut g, &s, 5);
        g.buzz("a", 2_000).unwrap();
        assert_eq!(g.buzz("b", 2_001), Err(EngineError::FloorHeld("a".into())));
        let o = g.submit_answer("a", "Emerson", 3_000).unwrap();
        assert_eq!((o.correct, o.points), (false, -5));
        assert_eq!(g.phase(), &Phase::Reading);
        assert_eq!(g.buzz("a", 3_100), Err(EngineError::AlreadyAnswered("a".into())));
        assert_eq!(g.eligible_players().count(), 2);
        g.advance(&s, 3_200).unwrap();
        g.buzz("b", 3_300).unwrap();
        assert_eq!(g.buzz_position_of("b"), Some(6));
    }

    impl Game {
        fn buzz_position_of(&self, p: &str) -> Option<usize> {
            self.players.iter().find(|x| x.id == p)?.buzz.as_ref().map(|b| b.position)
        }
    }

    #[test]
    fn late_answer_is_wrong() {
        let s = fixed();
        let mut g = game(8, &["a"]);
        advance_to(&mut g, &s, 2);
        g.buzz("a", 1_000).unwrap();
        let o = g.submit_answer("a", "Thoreau", 1_000 + 8_000 + 1).unwrap();
        assert!(!o.correct);
        assert_eq!(o.points, -5);
    }

    #[test]
    fn answer_at_deadline_counts() {
        let s = fixed();
        let mut g = game(8, &["a"]);
        advance_to(&mut g, &s, 2);
        g.buzz("a", 1_000).unwrap();
        assert!(g.submit_answer("a", "Thoreau", 9_000).unwrap().correct);
    }

    #[test]
    fn timeout_via_expire() {
        let s = fixed();
        let mut g = game(8, &["a", "b"]);
        advance_to(&mut g, &s, 2);
        g.buzz("a", 1_000).unwrap();
        assert!(!g.expire(9_000).unwrap());
        assert!(g.expire(9_001).unwrap());
        assert_eq!(g.outcomes()[0].points, -5);
        assert_eq!(g.phase(), &Phase::Reading);
    }

    #[test]
    fn submit_by_non_holder_rejected() {
        let s = fixed();
        let mut g = game(8, &["a", "b"]);
        advance_to(&mut g, &s, 2);
        g.buzz("a", 1_000).unwrap();
        let before = g.clone();
        assert_eq!(
            g.submit_answer("b", "Thoreau", 1_500),
            Err(EngineError::NotYourFloor("b".into()))
        );
        assert_eq!(g, before);
    }

    #[test]
    fn advance_while_buzzed_rejected() {
        let s = fixed();
        let mut g = game(8, &["a"]);
        advance_to(&mut g, &s, 2);
        g.buzz("a", 1_000).unwrap();
        assert_eq!(g.advance(&s, 1_100), Err(EngineError::FloorHeld("a".into())));
    }

    #[test]
    fn buzz_before_first_word_rejected() {
        let mut g = game(8, &["a"]);
        assert_eq!(g.buzz("a", 0), Err(EngineError::NothingRevealed));
    }

    #[test]
    fn grace_window_then_end() {
        let s = fixed();
        let mut g = game(4, &["a"]);
        advance_to(&mut g, &s, 4);
        let end = g.clock();
        assert_eq!(g.grace_deadline(), Some(end + 8_000));
        assert!(!g.expire(end + 8_000).unwrap());
        g.buzz("a", end + 8_000).unwrap();
        g.submit_answer("a", "no", end + 8_500).unwrap();
        // nobody left to buzz after the readout
        assert!(g.is_finished());
        assert_eq!(
            g.events().last().unwrap().kind,
            EventKind::QuestionEnd { reason: EndReason::Exhausted }
        );
    }

    #[test]
    fn grace_expiry_without_buzz() {
        let s = fixed();
        let mut g = game(4, &["a", "b"]);
        let end = g.run_out(&s, 0, 250).unwrap();
        assert!(g.is_finished());
        assert_eq!(end, 1_000 + 8_001);
        assert!(g.outcomes().iter().all(|o| o.points == 0 && !o.answered));
        assert_eq!(g.outcomes().len(), 2);
    }

    #[test]
    fn lockout_during_readout_finishes_at_last_word() {
        let s = fixed();
        let mut g = game(6, &["a"]);
        advance_to(&mut g, &s, 2);
        g.buzz("a", 600).unwrap();
        g.submit_answer("a", "x", 700).unwrap();
        assert_eq!(g.phase(), &Phase::Reading);
        advance_to(&mut g, &s, 6);
        assert!(g.is_finished());
    }

    #[test]
    fn leaving_with_floor_forfeits() {
        let s = fixed();
        let mut g = game(8, &["a", "b"]);
        advance_to(&mut g, &s, 3);
        g.buzz("a", 1_000).unwrap();
        g.leave("a", 1_200).unwrap();
        assert_eq!(g.active_players(), 1);
        assert_eq!(g.outcomes()[0].points, -5);
        assert_eq!(g.phase(), &Phase::Reading);
    }

    #[test]
    fn clock_cannot_go_back() {
        let s = fixed();
        let mut g = game(8, &["a"]);
        g.advance(&s, 500).unwrap();
        assert_eq!(
            g.advance(&s, 400),
            Err(EngineError::ClockRegression { now: 400, clock: 500 })
        );
    }

    #[test]
    fn replay_reproduces_live_game() {
        let s = fixed();
        let mut g = game(10, &["a", "b"]);
        advance_to(&mut g, &s, 5);
        g.buzz("b", 2_000).unwrap();
        g.expire(10_001).unwrap();
        advance_to(&mut g, &s, 10);
        g.buzz("a", 12_000).unwrap();
        g.submit_answer("a", "Thoreau", 13_000).unwrap();

        let qs = [question(10)];
        let r = replay(g.setup(), &qs, &s, g.events()).unwrap();
        assert_eq!(r, g);
        assert_eq!(r.outcomes(), g.outcomes());
    }

    #[test]
    fn replay_empty_log_is_initial_state() {
        let s = fixed();
        let qs = [question(10)];
        let st = setup(&["a"], Mode::NoviceSolo);
        let r = replay(&st, &qs, &s, &[]).unwrap();
        assert_eq!(r, Game::create(question(10), st).unwrap());
    }

    #[test]
    fn replay_rejects_bad_order() {
        let s = fixed();
        let mut g = game(10, &["a"]);
        advance_to(&mut g, &s, 3);
        let mut evs = g.events().to_vec();
        evs.swap(0, 1);
        let qs = [question(10)];
        assert!(matches!(
            replay(g.setup(), &qs, &s, &evs),
            Err(ReplayError::BadSequence { .. })
        ));
        let mut evs = g.events().to_vec();
        evs[2].at = 0;
        assert!(matches!(
            replay(g.setup(), &qs, &s, &evs),
            Err(ReplayError::TimeRegression { .. })
        ));
    }

    #[test]
    fn replay_detects_tampered_outcome() {
        let s = fixed();
        let mut g = game(10, &["a"]);
        advance_to(&mut g, &s, 3);
        g.buzz("a", 1_000).unwrap();
        g.submit_answer("a", "Emerson", 1_500).unwrap();
        let mut evs = g.events().to_vec();
        let last = evs.iter_mut().rev().find(|e| matches!(e.kind, EventKind::SubmitAnswer { .. })).unwrap();
        last.kind = EventKind::SubmitAnswer {
            answer: "Emerson".into(),
            correct: true,
            points: 10,
        };
        let qs = [question(10)];
        assert!(matches!(
            replay(g.setup(), &qs, &s, &evs),
            Err(ReplayError::Divergence { .. })
        ));
    }
}
