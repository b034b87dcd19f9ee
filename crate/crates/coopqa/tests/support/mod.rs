#![allow(dead_code)]

use std::sync::{Arc, Mutex};

use coopqa::service::protocol::{ClientAnswer, ClientJoin, ClientMessage, Envelope, MessageBody};
use coopqa::service::room::{Room, RoomConfig};
use coopqa_core::engine::CachedGuesser;
use coopqa_core::guesser::Guesser;
use coopqa_core::sampler::ExposureHistory;
use coopqa_core::sim::{synthetic_corpus, SynthParams};
use coopqa_core::{Index, Mode, Question};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type TestRoom = Room<CachedGuesser<Arc<Guesser>>>;

pub struct Corpus {
    pub questions: Arc<[Question]>,
    pub labels: Arc<[String]>,
    pub guesser: Arc<Guesser>,
}

pub fn corpus(answers: usize, seed: u64) -> Corpus {
    let params = SynthParams {
        answers,
        ..SynthParams::default()
    };
    let (questions, documents) = synthetic_corpus(&params, &mut ChaCha8Rng::seed_from_u64(seed));
    let mut labels: Vec<String> = questions.iter().map(|q| q.answer().to_string()).collect();
    labels.sort();
    Corpus {
        questions: questions.into(),
        labels: labels.into(),
        guesser: Arc::new(Guesser::new(Index::build(documents).unwrap())),
    }
}

impl Corpus {
    pub fn room(&self, config: RoomConfig) -> TestRoom {
        self.room_with_history(config, Arc::new(Mutex::new(ExposureHistory::for_questions(self.questions.len()))))
    }

    pub fn room_with_history(&self, config: RoomConfig, history: Arc<Mutex<ExposureHistory>>) -> TestRoom {
        Room::new(
            "r1",
            config,
            Arc::clone(&self.questions),
            Arc::clone(&self.labels),
            CachedGuesser::new(Arc::clone(&self.guesser)),
            history,
        )
        .unwrap()
    }

    pub fn source(&self) -> CachedGuesser<Arc<Guesser>> {
        CachedGuesser::new(Arc::clone(&self.guesser))
    }
}

pub fn expert_config(seed: u64, questions: usize) -> RoomConfig {
    RoomConfig {
        question_limit: Some(questions),
        ..RoomConfig::new(Mode::ExpertCompetitive, seed)
    }
}

pub fn join(room: &mut TestRoom, player: &str, now: u64) -> Vec<Envelope> {
    room.handle(
        player,
        ClientMessage::Join(ClientJoin {
            player: player.to_string(),
        }),
        now,
    )
}

pub fn answer(room: &mut TestRoom, player: &str, text: &str, now: u64) -> Vec<Envelope> {
    room.handle(
        player,
        ClientMessage::Answer(ClientAnswer { answer: text.to_string() }),
        now,
    )
}

/// Seats `players`, starts the room and plays it to the end with random
/// buzzes, answers, timeouts and the occasional departure. Returns the
/// final clock.
pub fn play_bots(room: &mut TestRoom, questions: &[Question], players: &[String], seed: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut now = 0;
    for p in players {
        join(room, p, now);
    }
    room.handle(&players[0], ClientMessage::Start, now);
    let labels: Vec<String> = room
        .log()
        .iter()
        .find_map(|e| match &e.message.body {
            MessageBody::Start(s) => Some(s.labels.clone()),
            _ => None,
        })
        .unwrap_or_default();
    let mut left = std::collections::BTreeSet::new();

    while let Some(t) = room.next_deadline() {
        now = t;
        room.tick(now);
        if room.is_done() {
            break;
        }
        let mut order: Vec<&String> = players.iter().filter(|p| !left.contains(*p)).collect();
        order.shuffle(&mut rng);
        for p in order {
            let r: f64 = rng.gen();
            if r < 0.002 {
                room.disconnect(p, now);
                left.insert(p.clone());
            } else if r < 0.04 {
                let out = room.handle(p, ClientMessage::Buzz, now);
                let granted = out
                    .iter()
                    .any(|e| matches!(e.message.body, MessageBody::FloorGranted(_)) && e.message.player.as_deref() == Some(p));
                if !granted {
                    continue;
                }
                let roll: f64 = rng.gen();
                if roll < 0.1 {
                    // let the window lapse
                    break;
                }
                now += rng.gen_range(200..7_000);
                room.tick(now);
                let text = if roll < 0.55 {
                    let q = current_question(room);
                    let key = questions.iter().find(|x| Some(x.id()) == q.as_deref());
                    key.map_or_else(|| "pass".into(), |x| x.answer().to_string())
                } else {
                    labels.choose(&mut rng).cloned().unwrap_or_else(|| "pass".into())
                };
                answer(room, p, &text, now);
                break;
            }
        }
    }
    now
}

fn current_question(room: &TestRoom) -> Option<String> {
    room.log().iter().rev().find_map(|e| match &e.message.body {
        MessageBody::Start(s) => Some(s.question_id.clone()),
        _ => None,
    })
}
