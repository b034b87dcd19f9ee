//! Synthetic pyramidal question sets with a matching training corpus.
//!
//! Each answer owns a few unique "easy" clue terms and borrows "hard" clue
//! terms from a pool shared with other answers. Questions open with mostly
//! hard clues and end with mostly easy ones, so the guesser converges on
//! the answer as more of the question is revealed.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, DocumentKind, Question};

const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "ren", "tu", "sha", "vor", "el", "dan", "pi", "qua", "zo", "bel", "nor", "ith", "gar",
];

const FUNCTION_WORDS: [&str; 60] = [
    "the", "of", "and", "a", "in", "to", "this", "was", "for", "his", "by", "with", "that", "is", "as", "on",
    "its", "from", "he", "which", "an", "at", "one", "after", "who", "name", "work", "it", "were", "are",
    "her", "these", "be", "they", "their", "first", "also", "into", "has", "had", "but", "when", "during",
    "some", "other", "two", "while", "where", "can", "than", "such", "many", "most", "more", "only", "over",
    "under", "about", "before", "through",
];

/// Deterministic pronounceable word for an index.
pub fn pseudo_word(mut index: usize) -> String {
    let mut out = String::new();
    for _ in 0..4 {
        out.push_str(SYLLABLES[index % SYLLABLES.len()]);
        index /= SYLLABLES.len();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub answers: usize,
    pub question_words: usize,
    pub wiki_words: usize,
    pub past_questions: usize,
    pub past_question_words: usize,
    pub hard_pool: usize,
    pub hard_per_answer: usize,
    pub easy_per_answer: usize,
    /// Probability that a word is a function word rather than a clue.
    pub filler_rate: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            answers: 160,
            question_words: 40,
            wiki_words: 120,
            past_questions: 2,
            past_question_words: 40,
            hard_pool: 240,
            hard_per_answer: 12,
            easy_per_answer: 12,
            filler_rate: 0.4,
        }
    }
}

struct Answer {
    label: String,
    hard: Vec<String>,
    easy: Vec<String>,
}

fn filler<R: Rng + ?Sized>(rng: &mut R) -> &'static str {
    // Zipf-like: rank r drawn with weight 1/(r+1)
    let total: f64 = (1..=FUNCTION_WORDS.len()).map(|r| 1.0 / r as f64).sum();
    let mut u = rng.gen::<f64>() * total;
    for (r, w) in FUNCTION_WORDS.iter().enumerate() {
        u -= 1.0 / (r + 1) as f64;
        if u <= 0.0 {
            return w;
        }
    }
    FUNCTION_WORDS[FUNCTION_WORDS.len() - 1]
}

fn pick<'a, R: Rng + ?Sized>(rng: &mut R, words: &'a [String]) -> &'a str {
    &words[rng.gen_range(0..words.len())]
}

fn text<R: Rng + ?Sized>(rng: &mut R, len: usize, p: &SynthParams, answer: &Answer, easy_rate: impl Fn(usize) -> f64) -> String {
    let mut words = Vec::with_capacity(len);
    for i in 0..len {
        let w = if rng.gen::<f64>() < p.filler_rate {
            filler(rng)
        } else if rng.gen::<f64>() < easy_rate(i) {
            pick(rng, &answer.easy)
        } else {
            pick(rng, &answer.hard)
        };
        words.push(w);
    }
    words.join(" ")
}

/// One question per answer plus its training documents: a long
/// encyclopedia-style page and a few past questions.
pub fn synthetic_corpus<R: Rng + ?Sized>(p: &SynthParams, rng: &mut R) -> (Vec<Question>, Vec<Document>) {
    let hard_pool: Vec<String> = (0..p.hard_pool).map(|i| pseudo_word(1000 + i)).collect();
    let answers: Vec<Answer> = (0..p.answers)
        .map(|a| {
            let mut label = pseudo_word(20_000 + a);
            label[..1].make_ascii_uppercase();
            Answer {
                label,
                hard: (0..p.hard_per_answer)
                    .map(|_| pick(rng, &hard_pool).into())
                    .collect(),
                easy: (0..p.easy_per_answer)
                    .map(|k| pseudo_word(40_000 + a * p.easy_per_answer + k))
                    .collect(),
            }
        })
        .collect();

    let mut documents = Vec::new();
    let mut questions = Vec::new();
    for (a, answer) in answers.iter().enumerate() {
        let wiki = text(rng, p.wiki_words, p, answer, |_| 0.5);
        documents.push(
            Document::new(format!("wiki-{a:04}"), DocumentKind::Wikipedia, answer.label.clone(), wiki)
                .expect("generated label is non-empty"),
        );
        for k in 0..p.past_questions {
            let n = p.past_question_words;
            let past = text(rng, n, p, answer, |i| pyramid(i, n));
            documents.push(
                Document::new(format!("pq-{a:04}-{k}"), DocumentKind::PastQuestion, answer.label.clone(), past)
                    .expect("generated label is non-empty"),
            );
        }
        let n = p.question_words;
        let q = text(rng, n, p, answer, |i| pyramid(i, n));
        questions.push(Question::new(format!("q{a:04}"), &q, answer.label.clone()).expect("non-empty question"));
    }
    (questions, documents)
}

/// Share of easy clues at word `i` of `n`: rises from 0 to 1.
fn pyramid(i: usize, n: usize) -> f64 {
    let f = (i as f64 + 0.5) / n as f64;
    f * f
}
