//! Questions, training documents and the token normalization shared by
//! retrieval and highlighting.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("question {id:?} has no words")]
    EmptyQuestion { id: String },
    #[error("record {id:?} has an empty answer label")]
    EmptyLabel { id: String },
    #[error("record has an empty id")]
    EmptyId,
    #[error("duplicate id {id:?}")]
    DuplicateId { id: String },
}

/// A toss-up question: the words in display order plus its canonical answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "QuestionRecord", into = "QuestionRecord")]
pub struct Question {
    id: String,
    words: Vec<String>,
    answer: String,
}

/// On-disk shape of a question: the text is split on whitespace into words.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct QuestionRecord {
    id: String,
    text: String,
    answer: String,
}

impl Question {
    pub fn new(
        id: impl Into<String>,
        text: &str,
        answer: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        let id = id.into();
        let answer = answer.into();
        if id.is_empty() {
            return Err(CorpusError::EmptyId);
        }
        let words: Vec<String> = text.split_whitespace().map(ToString::to_string).collect();
        if words.is_empty() {
            return Err(CorpusError::EmptyQuestion { id });
        }
        if answer.trim().is_empty() {
            return Err(CorpusError::EmptyLabel { id });
        }
        Ok(Self { id, words, answer })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn answer(&self) -> &str {
        &self.answer
    }

    /// Number of words, `n`. Always at least one.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn text(&self) -> String {
        self.words.join(" ")
    }

    /// Normalized tokens of the first `revealed` words.
    pub fn prefix_tokens(&self, revealed: usize) -> Vec<Token> {
        let revealed = revealed.min(self.words.len());
        tokenize_words(self.words[..revealed].iter().map(String::as_str))
    }
}

impl TryFrom<QuestionRecord> for Question {
    type Error = CorpusError;

    fn try_from(r: QuestionRecord) -> Result<Self, Self::Error> {
        Question::new(r.id, &r.text, r.answer)
    }
}

impl From<Question> for QuestionRecord {
    fn from(q: Question) -> Self {
        QuestionRecord {
            text: q.text(),
            id: q.id,
            answer: q.answer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocumentKind {
    Wikipedia,
    PastQuestion,
}

/// A labeled training example: retrieving it votes for its label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DocumentRecord", into = "DocumentRecord")]
pub struct Document {
    id: String,
    kind: DocumentKind,
    label: String,
    text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DocumentRecord {
    id: String,
    kind: DocumentKind,
    label: String,
    text: String,
}

impl Document {
    pub fn new(
        id: impl Into<String>,
        kind: DocumentKind,
        label: impl Into<String>,
        text: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        let id = id.into();
        let label = label.into();
        if id.is_empty() {
            return Err(CorpusError::EmptyId);
        }
        if label.trim().is_empty() {
            return Err(CorpusError::EmptyLabel { id });
        }
        Ok(Self {
            id,
            kind,
            label,
            text: text.into(),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> DocumentKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

impl TryFrom<DocumentRecord> for Document {
    type Error = CorpusError;

    fn try_from(r: DocumentRecord) -> Result<Self, Self::Error> {
        Document::new(r.id, r.kind, r.label, r.text)
    }
}

impl From<Document> for DocumentRecord {
    fn from(d: Document) -> Self {
        DocumentRecord {
            id: d.id,
            kind: d.kind,
            label: d.label,
            text: d.text,
        }
    }
}

/// Checks that question ids are unique.
pub fn validate_questions(questions: &[Question]) -> Result<(), CorpusError> {
    unique_ids(questions.iter().map(Question::id))
}

/// Checks that document ids are unique.
pub fn validate_documents(documents: &[Document]) -> Result<(), CorpusError> {
    unique_ids(documents.iter().map(Document::id))
}

fn unique_ids<'a>(ids: impl Iterator<Item = &'a str>) -> Result<(), CorpusError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(CorpusError::DuplicateId { id: id.to_string() });
        }
    }
    Ok(())
}

/// A normalized word and its index in the whitespace-split source.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub position: usize,
}

/// Splits on whitespace, lowercases, and strips leading and trailing
/// non-alphanumeric characters. Pieces that end up empty are dropped but
/// still consume a position.
pub fn tokenize(text: &str) -> Vec<Token> {
    tokenize_words(text.split_whitespace())
}

fn tokenize_words<'a>(words: impl Iterator<Item = &'a str>) -> Vec<Token> {
    words
        .enumerate()
        .filter_map(|(position, word)| {
            let surface = normalize(word);
            (!surface.is_empty()).then_some(Token { surface, position })
        })
        .collect()
}

/// Normalized surface of a single word; empty when nothing alphanumeric
/// remains.
pub fn normalize(word: &str) -> String {
    let lower = word.to_lowercase();
    lower
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_string()
}
