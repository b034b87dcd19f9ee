//! Simulated players.
//!
//! Synthetic players stand in for human participants. Each one buzzes at a
//! position drawn around its own baseline, shifted by the planted effect of
//! the condition it was assigned, and answers correctly with probability
//! `sigmoid(skill - question difficulty + planted log-odds + buzz slope *
//! buzz position + trust * [guesser right at the buzz])`. Every record is
//! produced by driving a real [`Game`] through the engine.

mod synth;

pub use synth::{pseudo_word, synthetic_corpus, SynthParams};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Question;
use crate::engine::{labels_match, EngineConfig, EngineError, Game, GameEvent, GameSetup, GuessSource, Mode, PlayerSetup};
use crate::interpretations::ConditionCombo;
use crate::record::{GameRecord, Group};
use crate::sampler::{assign, assign_room_for_question, ExposureHistory, SamplerError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimPlayerProfile {
    pub id: String,
    /// Latent ability, in log-odds.
    pub skill: f64,
    /// Extra log-odds of answering correctly when the guesser's top guess
    /// is right at the buzz. Within `[0, 1]`.
    pub trust: f64,
    /// Baseline share of the question a player lets go by is
    /// `1 - aggressiveness`.
    pub aggressiveness: f64,
}

/// Planted per-combo effects on correctness (log-odds) and on the buzz
/// position (fraction of the question).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Effect {
    pub log_odds: f64,
    pub buzz_shift: f64,
}

/// Effects keyed by combo; serialized as a map from combo name. Missing
/// combos have no effect.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, Effect>", into = "BTreeMap<String, Effect>")]
pub struct PlantedEffects {
    by_combo: [Effect; 8],
}

impl PlantedEffects {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn with(mut self, combo: ConditionCombo, effect: Effect) -> Self {
        self.by_combo[combo.index()] = effect;
        self
    }

    pub fn get(&self, combo: ConditionCombo) -> Effect {
        self.by_combo[combo.index()]
    }

    /// Buzz shift applied to every combo that includes highlight, and so on
    /// for the other flags; shifts add up across flags.
    pub fn with_flag_shift(mut self, flag: fn(ConditionCombo) -> bool, shift: f64) -> Self {
        for c in ConditionCombo::all() {
            if flag(c) {
                self.by_combo[c.index()].buzz_shift += shift;
            }
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("planted effect for unknown combo {0:?}")]
    UnknownCombo(String),
    #[error("planted effects must be finite")]
    NonFinite,
    #[error("trust must lie in [0, 1] for player {0:?}")]
    Trust(String),
    #[error("no questions to play")]
    NoQuestions,
    #[error("no players")]
    NoPlayers,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

impl TryFrom<BTreeMap<String, Effect>> for PlantedEffects {
    type Error = SimError;

    fn try_from(map: BTreeMap<String, Effect>) -> Result<Self, Self::Error> {
        let mut out = Self::default();
        for (name, e) in map {
            let combo: ConditionCombo = name.parse().map_err(|_| SimError::UnknownCombo(name))?;
            if !(e.log_odds.is_finite() && e.buzz_shift.is_finite()) {
                return Err(SimError::NonFinite);
            }
            out.by_combo[combo.index()] = e;
        }
        Ok(out)
    }
}

impl From<PlantedEffects> for BTreeMap<String, Effect> {
    fn from(p: PlantedEffects) -> Self {
        ConditionCombo::all()
            .into_iter()
            .map(|c| (c.name().to_string(), p.get(c)))
            .collect()
    }
}

/// Either explicit profiles or a count to draw from the group's default
/// population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlayerSpec {
    Profiles(Vec<SimPlayerProfile>),
    Generate { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub group: Group,
    pub players: PlayerSpec,
    pub planted: PlantedEffects,
    /// Log-odds gained per unit of buzz position (later buzzes are easier).
    pub buzz_slope: f64,
    /// Log-odds lost per unit of the question's difficulty fraction.
    pub difficulty_scale: f64,
    /// Standard deviation of the buzz position around its target.
    pub buzz_noise: f64,
    /// Log-odds per active player and per unit of the top player's
    /// accuracy. Experts only.
    pub active_players_coef: f64,
    pub top_accuracy_coef: f64,
    pub ms_per_word: u64,
    pub answer_delay_ms: u64,
    pub engine: EngineConfig,
    /// Keep each game's event log in the output.
    pub keep_logs: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            group: Group::Novice,
            players: PlayerSpec::Generate { count: 30, seed: 0 },
            planted: PlantedEffects::none(),
            buzz_slope: 1.0,
            difficulty_scale: 2.0,
            buzz_noise: 0.1,
            active_players_coef: 0.0,
            top_accuracy_coef: 0.0,
            ms_per_word: 250,
            answer_delay_ms: 2_000,
            engine: EngineConfig::default(),
            keep_logs: false,
        }
    }
}

impl SimConfig {
    pub fn profiles(&self) -> Vec<SimPlayerProfile> {
        match &self.players {
            PlayerSpec::Profiles(p) => p.clone(),
            PlayerSpec::Generate { count, seed } => default_profiles(self.group, *count, *seed),
        }
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-z))
}

/// A population of players: experts are stronger, more aggressive and less
/// trusting of the computer than novices.
pub fn default_profiles(group: Group, count: usize, seed: u64) -> Vec<SimPlayerProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (skill_mean, skill_sd, trust, aggr) = match group {
        Group::Expert => (0.5, 0.7, 0.2, 0.45),
        Group::Novice => (-0.5, 0.5, 0.6, 0.3),
    };
    (0..count)
        .map(|i| SimPlayerProfile {
            id: format!("{}-{i:03}", group.name()),
            skill: skill_mean + skill_sd * normal(&mut rng),
            trust,
            aggressiveness: (aggr + 0.1 * normal(&mut rng)).clamp(0.05, 0.9),
        })
        .collect()
}

/// Share of a question the guesser needs before the answer first ranks
/// on top, checked at every refresh point; 1.0 if it never does.
pub fn guesser_difficulty<S: GuessSource + ?Sized>(question: &Question, source: &S, refresh_every: usize) -> f64 {
    let n = question.len();
    let step = refresh_every.max(1);
    let mut points: Vec<usize> = (step..=n).step_by(step).collect();
    if points.last() != Some(&n) {
        points.push(n);
    }
    points
        .into_iter()
        .find(|&r| {
            source
                .guess_state(question, r)
                .guesses
                .top()
                .is_some_and(|g| labels_match(&g.label, question.answer()))
        })
        .map_or(1.0, |r| r as f64 / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameLog {
    pub setup: GameSetup,
    pub events: Vec<GameEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub records: Vec<GameRecord>,
    pub history: ExposureHistory,
    pub logs: Vec<GameLog>,
    /// Difficulty fraction per question id.
    pub difficulty: BTreeMap<String, f64>,
}

struct Plan {
    player: usize,
    word: usize,
    correct: bool,
}

struct RunningScore {
    points: i32,
    answered: u32,
    correct: u32,
}

/// Plays every question with every player.
///
/// Novices play solo games, one per (player, question). Experts share a
/// competitive room per question; the first correct answer ends it for
/// everyone.
pub fn simulate<S: GuessSource + ?Sized>(
    questions: &[Question],
    source: &S,
    config: &SimConfig,
    seed: u64,
) -> Result<SimOutput, SimError> {
    if questions.is_empty() {
        return Err(SimError::NoQuestions);
    }
    let profiles = config.profiles();
    if profiles.is_empty() {
        return Err(SimError::NoPlayers);
    }
    if let Some(p) = profiles.iter().find(|p| !(0.0..=1.0).contains(&p.trust)) {
        return Err(SimError::Trust(p.id.clone()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut history = ExposureHistory::for_questions(questions.len());
    let difficulty: BTreeMap<String, f64> = questions
        .iter()
        .map(|q| (q.id().to_string(), guesser_difficulty(q, source, config.engine.refresh_every)))
        .collect();

    let mut sim = Sim {
        config,
        source,
        profiles: &profiles,
        records: Vec::new(),
        logs: Vec::new(),
        clock: 0,
        scores: profiles
            .iter()
            .map(|_| RunningScore {
                points: 0,
                answered: 0,
                correct: 0,
            })
            .collect(),
    };

    for q in questions {
        let diff = difficulty[q.id()];
        match config.group {
            Group::Novice => {
                for (i, p) in profiles.iter().enumerate() {
                    let combo = assign(&mut history, &p.id, q.id(), &mut rng)?;
                    sim.play(q, diff, &[(i, combo)], Mode::NoviceSolo, seed, &mut rng)?;
                }
            }
            Group::Expert => {
                let ids = profiles.iter().map(|p| p.id.as_str());
                let combos = assign_room_for_question(&mut history, q.id(), ids, &mut rng)?;
                let room: Vec<(usize, ConditionCombo)> = profiles
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i, combos[&p.id]))
                    .collect();
                sim.play(q, diff, &room, Mode::ExpertCompetitive, seed, &mut rng)?;
            }
        }
    }

    Ok(SimOutput {
        records: sim.records,
        history,
        logs: sim.logs,
        difficulty,
    })
}

struct Sim<'a, S: ?Sized> {
    config: &'a SimConfig,
    source: &'a S,
    profiles: &'a [SimPlayerProfile],
    records: Vec<GameRecord>,
    logs: Vec<GameLog>,
    clock: u64,
    scores: Vec<RunningScore>,
}

impl<S: GuessSource + ?Sized> Sim<'_, S> {
    /// Accuracy of the highest-scoring player in the room so far.
    fn top_active_accuracy(&self, room: &[(usize, ConditionCombo)]) -> f64 {
        let top = room.iter().map(|&(i, _)| i).max_by(|&a, &b| {
            self.scores[a]
                .points
                .cmp(&self.scores[b].points)
                .then_with(|| self.profiles[b].id.cmp(&self.profiles[a].id))
        });
        match top {
            Some(i) if self.scores[i].answered > 0 => {
                f64::from(self.scores[i].correct) / f64::from(self.scores[i].answered)
            }
            _ => 0.0,
        }
    }

    fn play(
        &mut self,
        q: &Question,
        difficulty: f64,
        room: &[(usize, ConditionCombo)],
        mode: Mode,
        seed: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<(), SimError> {
        let cfg = self.config;
        let n = q.len();
        let expert = mode == Mode::ExpertCompetitive;
        let top_accuracy = if expert { self.top_active_accuracy(room) } else { 0.0 };

        let setup = GameSetup {
            question_id: q.id().to_string(),
            players: room
                .iter()
                .map(|&(i, condition)| PlayerSetup {
                    id: self.profiles[i].id.clone(),
                    condition,
                })
                .collect(),
            mode,
            seed,
            config: cfg.engine,
        };
        let mut game = Game::create(q.clone(), setup)?;

        let mut plans: Vec<Plan> = room
            .iter()
            .map(|&(i, combo)| {
                let p = &self.profiles[i];
                let target = 1.0 - p.aggressiveness + cfg.planted.get(combo).buzz_shift + cfg.buzz_noise * normal(rng);
                let word = (libm::round(target * n as f64) as i64).clamp(1, n as i64) as usize;
                Plan {
                    player: i,
                    word,
                    correct: false,
                }
            })
            .collect();
        // arrival order among players buzzing on the same word
        plans.shuffle(rng);
        plans.sort_by_key(|p| p.word);

        let mut now = 0;
        let mut next = 0;
        while !game.is_finished() && next < plans.len() {
            let plan = &mut plans[next];
            while game.revealed() < plan.word {
                now += cfg.ms_per_word;
                game.advance(self.source, now)?;
            }
            if game.is_finished() {
                break;
            }
            let profile = &self.profiles[plan.player];
            let combo = room.iter().find(|r| r.0 == plan.player).expect("in room").1;
            let guess_right = game
                .latest_guess_state()
                .and_then(|s| s.guesses.top())
                .is_some_and(|g| labels_match(&g.label, q.answer()));
            let mut logit = profile.skill - cfg.difficulty_scale * difficulty
                + cfg.planted.get(combo).log_odds
                + cfg.buzz_slope * (plan.word as f64 / n as f64)
                + profile.trust * f64::from(u8::from(guess_right));
            if expert {
                logit += cfg.active_players_coef * game.active_players() as f64 + cfg.top_accuracy_coef * top_accuracy;
            }
            plan.correct = rng.gen::<f64>() < sigmoid(logit);

            let answer = if plan.correct {
                q.answer().to_string()
            } else {
                wrong_answer(&game, q)
            };
            game.buzz(&profile.id, now)?;
            now += cfg.answer_delay_ms;
            game.submit_answer(&profile.id, &answer, now)?;
            next += 1;
        }
        if !game.is_finished() {
            game.run_out(self.source, now, cfg.ms_per_word)?;
        }

        let group = if expert { Group::Expert } else { Group::Novice };
        for o in game.outcomes() {
            let &(i, combo) = room
                .iter()
                .find(|(i, _)| self.profiles[*i].id == o.player)
                .expect("outcome for a room member");
            self.records.push(GameRecord::from_outcome(
                o,
                q.id(),
                group,
                combo,
                top_accuracy,
                self.clock + o.at,
            ));
            let s = &mut self.scores[i];
            s.points += o.points;
            if o.answered {
                s.answered += 1;
                s.correct += u32::from(o.correct);
            }
        }
        self.clock += game.clock() + 1_000;
        if cfg.keep_logs {
            self.logs.push(GameLog {
                setup: game.setup().clone(),
                events: game.events().to_vec(),
            });
        }
        Ok(())
    }
}

/// Something other than the right answer: the computer's top guess when it
/// is wrong, otherwise its runner-up, otherwise a pass.
fn wrong_answer(game: &Game, q: &Question) -> String {
    game.latest_guess_state()
        .into_iter()
        .flat_map(|s| s.guesses.guesses.iter())
        .map(|g| g.label.as_str())
        .find(|l| !labels_match(l, q.answer()))
        .unwrap_or("pass")
        .to_string()
}
