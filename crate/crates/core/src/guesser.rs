//! Retrieval guesser: a BM25 inverted index over labeled documents, label
//! aggregation into ranked guesses, and evidence snippets with term
//! highlights.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{normalize, tokenize, validate_documents, Document, Token};
use crate::interpretations::GuessState;

/// Number of guesses shown to players.
pub const DEFAULT_TOP_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GuesserError {
    #[error("cannot build an index over an empty corpus")]
    EmptyCorpus,
    #[error("unknown document {0:?}")]
    UnknownDocument(String),
    #[error("duplicate document id {0:?}")]
    DuplicateDocument(String),
    #[error("inconsistent index: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexConfig {
    pub k1: f64,
    pub b: f64,
    /// The most frequent corpus terms (by total occurrences) are ignored when
    /// scoring, though they still count as matches for highlighting.
    pub stopword_count: usize,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self {
            k1: 1.2,
            b: 0.75,
            stopword_count: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: usize,
    pub tf: u32,
}

/// Inverted index over an immutable document corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IndexParts", into = "IndexParts")]
pub struct Index {
    config: IndexConfig,
    documents: Vec<Document>,
    postings: BTreeMap<String, Vec<Posting>>,
    doc_lengths: Vec<usize>,
    avg_doc_length: f64,
    stopwords: BTreeSet<String>,
    // derived, rebuilt on load
    doc_tokens: Vec<Vec<Token>>,
    doc_words: Vec<Vec<String>>,
    by_id: BTreeMap<String, usize>,
}

/// Serialized form of an [`Index`]. Token caches are rebuilt on load and
/// the stored statistics are checked against the documents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexParts {
    pub config: IndexConfig,
    pub documents: Vec<Document>,
    pub postings: BTreeMap<String, Vec<Posting>>,
    pub doc_lengths: Vec<usize>,
    pub avg_doc_length: f64,
    pub stopwords: BTreeSet<String>,
}

impl From<Index> for IndexParts {
    fn from(ix: Index) -> Self {
        IndexParts {
            config: ix.config,
            documents: ix.documents,
            postings: ix.postings,
            doc_lengths: ix.doc_lengths,
            avg_doc_length: ix.avg_doc_length,
            stopwords: ix.stopwords,
        }
    }
}

impl TryFrom<IndexParts> for Index {
    type Error = GuesserError;

    fn try_from(parts: IndexParts) -> Result<Self, Self::Error> {
        let rebuilt = Index::build_with(parts.documents, parts.config)?;
        let bad = |what: &str| Err(GuesserError::Inconsistent(what.to_string()));
        if rebuilt.postings != parts.postings {
            return bad("postings do not match documents");
        }
        if rebuilt.doc_lengths != parts.doc_lengths {
            return bad("document lengths do not match documents");
        }
        if rebuilt.avg_doc_length.to_bits() != parts.avg_doc_length.to_bits() {
            return bad("average document length does not match");
        }
        if rebuilt.stopwords != parts.stopwords {
            return bad("stopword list does not match corpus frequencies");
        }
        Ok(rebuilt)
    }
}

/// A candidate answer with its unnormalized retrieval score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Guess {
    pub label: String,
    pub score: f64,
    pub source_doc: String,
}

/// Distinct labels ranked by score descending, label ascending on ties.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GuessList {
    pub guesses: Vec<Guess>,
    pub query_len: usize,
}

impl GuessList {
    pub fn top(&self) -> Option<&Guess> {
        self.guesses.first()
    }

    pub fn is_empty(&self) -> bool {
        self.guesses.is_empty()
    }
}

/// A window of document words with the positions (relative to the window)
/// that match a query term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceSnippet {
    pub doc_id: String,
    /// Token offset of the window within the document.
    pub start: usize,
    pub words: Vec<String>,
    pub highlighted: Vec<usize>,
}

impl EvidenceSnippet {
    /// Normalized surfaces of the highlighted words.
    pub fn highlighted_surfaces(&self) -> impl Iterator<Item = String> + '_ {
        self.highlighted.iter().map(|&i| normalize(&self.words[i]))
    }
}

impl Index {
    pub fn build(documents: Vec<Document>) -> Result<Self, GuesserError> {
        Self::build_with(documents, IndexConfig::default())
    }

    pub fn build_with(documents: Vec<Document>, config: IndexConfig) -> Result<Self, GuesserError> {
        if documents.is_empty() {
            return Err(GuesserError::EmptyCorpus);
        }
        if let Err(crate::corpus::CorpusError::DuplicateId { id }) = validate_documents(&documents) {
            return Err(GuesserError::DuplicateDocument(id));
        }

        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut collection_freq: BTreeMap<&str, u64> = BTreeMap::new();
        let mut doc_tokens = Vec::with_capacity(documents.len());
        let mut doc_words = Vec::with_capacity(documents.len());
        let mut doc_lengths = Vec::with_capacity(documents.len());

        for (doc, d) in documents.iter().enumerate() {
            let tokens = tokenize(d.text());
            let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
            for t in &tokens {
                *tf.entry(t.surface.as_str()).or_default() += 1;
            }
            for (term, count) in tf {
                postings
                    .entry(term.to_string())
                    .or_default()
                    .push(Posting { doc, tf: count });
            }
            doc_lengths.push(tokens.len());
            doc_words.push(d.text().split_whitespace().map(ToString::to_string).collect());
            doc_tokens.push(tokens);
        }
        for tokens in &doc_tokens {
            for t in tokens {
                *collection_freq.entry(t.surface.as_str()).or_default() += 1;
            }
        }

        let mut by_freq: Vec<(&str, u64)> = collection_freq.into_iter().collect();
        by_freq.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let stopwords = by_freq
            .iter()
            .take(config.stopword_count)
            .map(|(t, _)| t.to_string())
            .collect();

        let total: usize = doc_lengths.iter().sum();
        let avg_doc_length = total as f64 / documents.len() as f64;
        let by_id = documents
            .iter()
            .enumerate()
            .map(|(i, d)| (d.id().to_string(), i))
            .collect();

        Ok(Self {
            config,
            documents,
            postings,
            doc_lengths,
            avg_doc_length,
            stopwords,
            doc_tokens,
            doc_words,
            by_id,
        })
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn doc_count(&self) -> usize {
        self.documents.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_length(&self, doc_id: &str) -> Option<usize> {
        self.by_id.get(doc_id).map(|&i| self.doc_lengths[i])
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn is_stopword(&self, term: &str) -> bool {
        self.stopwords.contains(term)
    }

    pub fn doc_tokens(&self, doc_id: &str) -> Option<&[Token]> {
        self.by_id.get(doc_id).map(|&i| self.doc_tokens[i].as_slice())
    }

    /// Document frequency of `term`.
    pub fn df(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    /// Inverse document frequency, `ln(1 + (N - df + 0.5) / (df + 0.5))`.
    /// Strictly positive for every term.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.doc_count() as f64;
        let df = self.df(term) as f64;
        libm::log(1.0 + (n - df + 0.5) / (df + 0.5))
    }

    fn term_weight(&self, idf: f64, tf: u32, doc: usize) -> f64 {
        let IndexConfig { k1, b, .. } = self.config;
        let tf = f64::from(tf);
        let len_ratio = self.doc_lengths[doc] as f64 / self.avg_doc_length;
        idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * len_ratio))
    }

    /// BM25 score of one document, summed over every query token (repeated
    /// tokens count again). Stopwords are not filtered here.
    pub fn score_doc(&self, query: &[Token], doc_id: &str) -> Result<f64, GuesserError> {
        let doc = *self
            .by_id
            .get(doc_id)
            .ok_or_else(|| GuesserError::UnknownDocument(doc_id.to_string()))?;
        let mut score = 0.0;
        for t in query {
            let postings = self.postings(&t.surface);
            if let Ok(i) = postings.binary_search_by(|p| p.doc.cmp(&doc)) {
                score += self.term_weight(self.idf(&t.surface), postings[i].tf, doc);
            }
        }
        Ok(score)
    }

    /// Scores of every document for the non-stopword query tokens, plus
    /// whether each document matched at least one of them.
    fn score_all(&self, query: &[Token]) -> (Vec<f64>, Vec<bool>) {
        let mut scores = vec![0.0; self.doc_count()];
        let mut matched = vec![false; self.doc_count()];
        for t in query.iter().filter(|t| !self.is_stopword(&t.surface)) {
            let postings = self.postings(&t.surface);
            if postings.is_empty() {
                continue;
            }
            let idf = self.idf(&t.surface);
            for p in postings {
                scores[p.doc] += self.term_weight(idf, p.tf, p.doc);
                matched[p.doc] = true;
            }
        }
        (scores, matched)
    }

    /// Top `k` distinct labels for a question prefix. A label's score is the
    /// best score among the documents carrying it.
    pub fn query(&self, prefix: &[Token], k: usize) -> GuessList {
        let query_len = prefix.last().map_or(0, |t| t.position + 1);
        let (scores, matched) = self.score_all(prefix);

        let mut best: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in (0..self.doc_count()).filter(|&d| matched[d]) {
            let label = self.documents[doc].label();
            match best.get(label) {
                Some(&cur) if self.doc_order(&scores, cur, doc) != Ordering::Greater => {}
                _ => {
                    best.insert(label, doc);
                }
            }
        }

        let mut guesses: Vec<Guess> = best
            .into_iter()
            .map(|(label, doc)| Guess {
                label: label.to_string(),
                score: scores[doc],
                source_doc: self.documents[doc].id().to_string(),
            })
            .collect();
        guesses.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.label.cmp(&b.label))
        });
        guesses.truncate(k);
        GuessList { guesses, query_len }
    }

    /// `Greater` when `b` should replace `a` as the best document: higher
    /// score, or equal score and smaller id.
    fn doc_order(&self, scores: &[f64], a: usize, b: usize) -> Ordering {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| self.documents[a].id().cmp(self.documents[b].id()))
    }

    /// Snippets from the best-scoring documents labeled with the top guess.
    pub fn evidence(
        &self,
        prefix: &[Token],
        top_guess: &Guess,
        max_snippets: usize,
        window: usize,
    ) -> Vec<EvidenceSnippet> {
        let (scores, matched) = self.score_all(prefix);
        let mut docs: Vec<usize> = (0..self.doc_count())
            .filter(|&d| matched[d] && self.documents[d].label() == top_guess.label)
            .collect();
        docs.sort_by(|&a, &b| self.doc_order(&scores, a, b));
        docs.truncate(max_snippets);

        let surfaces: BTreeSet<&str> = prefix.iter().map(|t| t.surface.as_str()).collect();
        docs.into_iter()
            .map(|d| self.snippet(d, &surfaces, window))
            .collect()
    }

    /// The `window`-token span of a document with the most query-term
    /// matches, earliest on ties. Falls back to the first window with no
    /// highlights when nothing matches.
    pub fn best_window(
        &self,
        doc_id: &str,
        query_surfaces: &BTreeSet<&str>,
        window: usize,
    ) -> Result<EvidenceSnippet, GuesserError> {
        let doc = *self
            .by_id
            .get(doc_id)
            .ok_or_else(|| GuesserError::UnknownDocument(doc_id.to_string()))?;
        Ok(self.snippet(doc, query_surfaces, window))
    }

    fn snippet(&self, doc: usize, surfaces: &BTreeSet<&str>, window: usize) -> EvidenceSnippet {
        let tokens = &self.doc_tokens[doc];
        let hits: Vec<bool> = tokens
            .iter()
            .map(|t| surfaces.contains(t.surface.as_str()))
            .collect();
        let width = window.min(tokens.len());

        let mut start = 0;
        if width > 0 {
            let mut count = hits[..width].iter().filter(|&&h| h).count();
            let mut best = count;
            for s in 1..=tokens.len() - width {
                count += usize::from(hits[s + width - 1]);
                count -= usize::from(hits[s - 1]);
                if count > best {
                    best = count;
                    start = s;
                }
            }
        }

        let span = &tokens[start..start + width];
        let words = span
            .iter()
            .map(|t| self.doc_words[doc][t.position].clone())
            .collect();
        let highlighted = (0..width).filter(|&i| hits[start + i]).collect();
        EvidenceSnippet {
            doc_id: self.documents[doc].id().to_string(),
            start,
            words,
            highlighted,
        }
    }
}

/// Question word positions whose normalized surface matches a highlighted
/// evidence word.
pub fn question_highlights(prefix: &[Token], snippets: &[EvidenceSnippet]) -> BTreeSet<usize> {
    let marked: BTreeSet<String> = snippets
        .iter()
        .flat_map(EvidenceSnippet::highlighted_surfaces)
        .collect();
    prefix
        .iter()
        .filter(|t| marked.contains(&t.surface))
        .map(|t| t.position)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuesserConfig {
    pub top_k: usize,
    pub max_snippets: usize,
    pub window: usize,
}

impl Default for GuesserConfig {
    fn default() -> Self {
        Self {
            top_k: DEFAULT_TOP_K,
            max_snippets: 4,
            window: 30,
        }
    }
}

/// An index plus display settings; produces the full guess state for a
/// revealed prefix.
#[derive(Debug, Clone)]
pub struct Guesser {
    pub index: Index,
    pub config: GuesserConfig,
}

impl Guesser {
    pub fn new(index: Index) -> Self {
        Self {
            index,
            config: GuesserConfig::default(),
        }
    }

    pub fn guess_state(&self, prefix: &[Token]) -> GuessState {
        let guesses = self.index.query(prefix, self.config.top_k);
        let evidence = match guesses.top() {
            Some(top) => self
                .index
                .evidence(prefix, top, self.config.max_snippets, self.config.window),
            None => Vec::new(),
        };
        let question_highlights = question_highlights(prefix, &evidence);
        GuessState {
            guesses,
            evidence,
            question_highlights,
        }
    }
}
