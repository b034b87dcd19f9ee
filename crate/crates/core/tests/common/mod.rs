//! Random instance generators and brute-force reference implementations
//! shared by the property tests and the acceptance suite. Nothing here
//! calls into the code under test except to build inputs.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use coopqa_core::analysis::Dataset;
use coopqa_core::corpus::{Document, DocumentKind, Question, Token};
use coopqa_core::engine::{GameSetup, GuessSource, Mode, PlayerSetup};
use coopqa_core::guesser::IndexConfig;
use coopqa_core::{ConditionCombo, Game};
use rand::seq::SliceRandom;
use rand::Rng;

const DECORATIONS: [(&str, &str); 6] = [("", ""), ("", ","), ("\"", "\""), ("(", ")"), ("", "."), ("", "!")];

fn vocab_word(i: usize) -> String {
    format!("w{i}")
}

/// A word as it might appear in running text: random case and
/// punctuation around a vocabulary item.
fn decorate<R: Rng + ?Sized>(rng: &mut R, word: &str) -> String {
    let (pre, post) = DECORATIONS[rng.gen_range(0..DECORATIONS.len())];
    let word = if rng.gen_bool(0.2) { word.to_uppercase() } else { word.to_string() };
    format!("{pre}{word}{post}")
}

pub struct RandomCorpus {
    pub documents: Vec<Document>,
    pub vocab: usize,
}

/// Up to `max_docs` documents over at most `max_labels` labels, each with
/// at most `max_tokens` words drawn from a vocabulary of random size.
pub fn random_corpus<R: Rng + ?Sized>(rng: &mut R, max_docs: usize, max_labels: usize, max_tokens: usize) -> RandomCorpus {
    let vocab = rng.gen_range(5..=200);
    let labels = rng.gen_range(1..=max_labels);
    let docs = rng.gen_range(1..=max_docs);
    // skewed draws so some terms are frequent enough to be stopwords
    let skew: f64 = rng.gen_range(1.0..3.0);
    let mut documents = Vec::with_capacity(docs);
    for d in 0..docs {
        let len = rng.gen_range(0..=max_tokens);
        let words: Vec<String> = (0..len)
            .map(|_| {
                let u: f64 = rng.gen();
                let w = ((u.powf(skew)) * vocab as f64) as usize;
                decorate(rng, &vocab_word(w.min(vocab - 1)))
            })
            .collect();
        let label = format!("Label {}", rng.gen_range(0..labels));
        let kind = if rng.gen_bool(0.5) { DocumentKind::Wikipedia } else { DocumentKind::PastQuestion };
        // ids are not in index order so id tie-breaks are exercised
        let id = format!("d{:03}", (d * 37) % 101);
        documents.push(Document::new(id, kind, label, words.join(" ")).expect("valid document"));
    }
    RandomCorpus { documents, vocab }
}

/// A question text over the corpus vocabulary plus a few unseen words.
pub fn random_question_text<R: Rng + ?Sized>(rng: &mut R, vocab: usize, len: usize) -> String {
    (0..len)
        .map(|_| {
            if rng.gen_bool(0.1) {
                format!("unseen{}", rng.gen_range(0..5))
            } else if rng.gen_bool(0.05) {
                "--".to_string()
            } else {
                let w = vocab_word(rng.gen_range(0..vocab));
                decorate(rng, &w)
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Independent tokenizer: lowercase, then strip non-alphanumeric
/// characters from both ends; empty pieces keep their position.
pub fn oracle_tokens(text: &str) -> Vec<(String, usize)> {
    text.split_whitespace()
        .enumerate()
        .filter_map(|(i, w)| {
            let lower = w.to_lowercase();
            let s: String = lower.trim_matches(|c: char| !c.is_alphanumeric()).to_string();
            (!s.is_empty()).then_some((s, i))
        })
        .collect()
}

/// Brute-force BM25 statistics recomputed from raw documents.
pub struct OracleIndex {
    pub ids: Vec<String>,
    pub labels: Vec<String>,
    pub docs: Vec<Vec<String>>,
    pub avgdl: f64,
    pub stopwords: BTreeSet<String>,
    pub k1: f64,
    pub b: f64,
}

impl OracleIndex {
    pub fn new(documents: &[Document], config: &IndexConfig) -> Self {
        let docs: Vec<Vec<String>> = documents
            .iter()
            .map(|d| oracle_tokens(d.text()).into_iter().map(|(s, _)| s).collect())
            .collect();
        let total: usize = docs.iter().map(Vec::len).sum();
        let avgdl = total as f64 / docs.len() as f64;
        let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
        for d in &docs {
            for t in d {
                *freq.entry(t).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = freq.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let stopwords = ranked
            .iter()
            .take(config.stopword_count)
            .map(|(t, _)| t.to_string())
            .collect();
        Self {
            ids: documents.iter().map(|d| d.id().to_string()).collect(),
            labels: documents.iter().map(|d| d.label().to_string()).collect(),
            docs,
            avgdl,
            stopwords,
            k1: config.k1,
            b: config.b,
        }
    }

    pub fn tf(&self, doc: usize, term: &str) -> usize {
        self.docs[doc].iter().filter(|t| *t == term).count()
    }

    pub fn df(&self, term: &str) -> usize {
        (0..self.docs.len()).filter(|&d| self.tf(d, term) > 0).count()
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.docs.len() as f64;
        let df = self.df(term) as f64;
        libm::log(1.0 + (n - df + 0.5) / (df + 0.5))
    }

    /// One query term's BM25 contribution to `doc`.
    pub fn term_score(&self, doc: usize, term: &str) -> f64 {
        let tf = self.tf(doc, term);
        if tf == 0 {
            return 0.0;
        }
        let tf = tf as f64;
        let dl = self.docs[doc].len() as f64;
        self.idf(term) * (tf * (self.k1 + 1.0)) / (tf + self.k1 * (1.0 - self.b + self.b * (dl / self.avgdl)))
    }

    /// Direct formula over every query token, stopwords included.
    pub fn bm25(&self, doc: usize, query: &[String]) -> f64 {
        query.iter().map(|t| self.term_score(doc, t)).sum()
    }

    /// Score-all, group-by-label, sort: the reference for `Index::query`.
    /// Returns (label, score, best document id).
    pub fn query(&self, query: &[String], k: usize) -> Vec<(String, f64, String)> {
        let terms: Vec<&String> = query.iter().filter(|t| !self.stopwords.contains(*t)).collect();
        let scores: Vec<f64> = (0..self.docs.len())
            .map(|d| terms.iter().fold(0.0, |acc, t| acc + self.term_score(d, t)))
            .collect();
        let mut best: BTreeMap<&str, (f64, &str)> = BTreeMap::new();
        for (d, &score) in scores.iter().enumerate() {
            if score <= 0.0 {
                continue;
            }
            let cand = (score, self.ids[d].as_str());
            let e = best.entry(&self.labels[d]).or_insert(cand);
            if cand.0 > e.0 || (cand.0 == e.0 && cand.1 < e.1) {
                *e = cand;
            }
        }
        let mut out: Vec<(String, f64, String)> = best
            .into_iter()
            .map(|(l, (s, id))| (l.to_string(), s, id.to_string()))
            .collect();
        out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        out.truncate(k);
        out
    }
}

/// Exhaustive scan over every window start: (start, hit count) of the
/// first window with the most hits.
pub fn oracle_window(tokens: &[String], query: &BTreeSet<String>, width: usize) -> (usize, usize) {
    let width = width.min(tokens.len());
    let mut best = (0, 0);
    for start in 0..=tokens.len() - width {
        let hits = tokens[start..start + width].iter().filter(|t| query.contains(*t)).count();
        if hits > best.1 {
            best = (start, hits);
        }
    }
    best
}

pub fn random_dataset<R: Rng + ?Sized>(rng: &mut R) -> (Dataset, Vec<f64>, f64, f64) {
    let d = rng.gen_range(1..=8);
    let m = rng.gen_range(2..=40);
    let rows: Vec<Vec<(usize, f64)>> = (0..m)
        .map(|_| {
            let mut row = Vec::new();
            for j in 0..d {
                if rng.gen_bool(0.6) {
                    row.push((j, if rng.gen_bool(0.5) { 1.0 } else { rng.gen_range(-2.0..2.0) }));
                }
            }
            row
        })
        .collect();
    // both classes present, so the unpenalized bias has a finite optimum
    let labels = (0..m)
        .map(|i| match i {
            0 => 1.0,
            1 => 0.0,
            _ => f64::from(u8::from(rng.gen_bool(0.5))),
        })
        .collect();
    let names = (0..d).map(|j| format!("f{j}")).collect();
    let weights = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let bias = rng.gen_range(-1.0..1.0);
    let l2 = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..0.5) };
    (Dataset { names, rows, labels }, weights, bias, l2)
}

/// Central finite differences of `f` at `x`.
pub fn numeric_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[i] += h;
            down[i] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

/// `|a - b| / max(|a|, |b|)` over whole vectors; 0 when both are zero.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

/// A scripted input to a game.
#[derive(Debug, Clone)]
pub enum Action {
    Advance,
    Buzz(usize),
    Answer { correct: bool },
    Leave(usize),
    Expire,
    Wait(u64),
}

pub fn random_actions<R: Rng + ?Sized>(rng: &mut R, players: usize, len: usize) -> Vec<Action> {
    (0..len)
        .map(|_| match rng.gen_range(0..100) {
            0..=49 => Action::Advance,
            50..=64 => Action::Buzz(rng.gen_range(0..players)),
            65..=77 => Action::Answer { correct: rng.gen_bool(0.4) },
            78..=80 => Action::Leave(rng.gen_range(0..players)),
            81..=88 => Action::Expire,
            _ => Action::Wait(*[500u64, 4_000, 9_000].choose(rng).unwrap()),
        })
        .collect()
}

pub fn setup_for(question: &Question, players: usize, seed: u64) -> GameSetup {
    GameSetup {
        question_id: question.id().to_string(),
        players: (0..players)
            .map(|i| PlayerSetup {
                id: format!("p{i}"),
                condition: ConditionCombo::from_index((i * 3 + seed as usize) % 8),
            })
            .collect(),
        mode: if players == 1 { Mode::NoviceSolo } else { Mode::ExpertCompetitive },
        seed,
        config: Default::default(),
    }
}

/// Drives a game with a script, ignoring rejected inputs. Each action
/// happens 250 ms after the previous one. The answer given is the floor
/// holder's.
pub fn play_script<S: GuessSource + ?Sized>(game: &mut Game, source: &S, actions: &[Action]) -> usize {
    let mut now = 0;
    let mut accepted = 0;
    for a in actions {
        now += 250;
        let ok = match a {
            Action::Advance => game.advance(source, now).is_ok(),
            Action::Buzz(i) => game.buzz(&format!("p{i}"), now).is_ok(),
            Action::Answer { correct } => {
                let holder = match game.phase() {
                    coopqa_core::engine::Phase::Buzzed { player, .. } => Some(player.clone()),
                    _ => None,
                };
                match holder {
                    Some(p) => {
                        let ans = if *correct { game.question().answer().to_string() } else { "nonsense".into() };
                        game.submit_answer(&p, &ans, now).is_ok()
                    }
                    None => false,
                }
            }
            Action::Leave(i) => game.leave(&format!("p{i}"), now).is_ok(),
            Action::Expire => game.expire(now).unwrap_or(false),
            Action::Wait(ms) => {
                now += ms;
                false
            }
        };
        accepted += usize::from(ok);
    }
    accepted
}

/// Independent bookkeeping over a finished or running game's events.
pub struct Ledger {
    pub points: BTreeMap<String, i32>,
    pub answers: BTreeMap<String, usize>,
    pub correct: usize,
}

pub fn ledger(events: &[coopqa_core::GameEvent]) -> Ledger {
    use coopqa_core::engine::EventKind;
    let mut l = Ledger {
        points: BTreeMap::new(),
        answers: BTreeMap::new(),
        correct: 0,
    };
    for e in events {
        let p = e.player.clone().unwrap_or_default();
        match &e.kind {
            EventKind::SubmitAnswer { correct, .. } => {
                *l.points.entry(p.clone()).or_default() += if *correct { 10 } else { -5 };
                *l.answers.entry(p).or_default() += 1;
                l.correct += usize::from(*correct);
            }
            EventKind::AnswerTimeout { .. } => {
                *l.points.entry(p.clone()).or_default() -= 5;
                *l.answers.entry(p).or_default() += 1;
            }
            _ => {}
        }
    }
    l
}

/// Oracle token list as plain surfaces, for the retrieval checks.
pub fn surfaces(tokens: &[Token]) -> Vec<String> {
    tokens.iter().map(|t| t.surface.clone()).collect()
}
