//! Core algorithms for human-computer cooperative quizbowl play.
//!
//! Everything here is `no_std` (with `alloc`): retrieval over a labeled
//! document corpus, the three interpretation forms derived from it, the
//! toss-up game engine, balanced condition assignment, the logistic
//! regression used to measure interpretation effects, and a simulated
//! player harness that exercises all of the above.
//!
//! File formats, persistence, the CLI and the live game service live in the
//! `coopqa` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod corpus;
pub mod engine;
pub mod guesser;
pub mod interpretations;
pub mod record;
pub mod sampler;
pub mod sim;

pub use corpus::{tokenize, Document, DocumentKind, Question, Token};
pub use engine::{Game, GameEvent, Mode, Outcome};
pub use guesser::{EvidenceSnippet, Guess, GuessList, Index, IndexConfig};
pub use interpretations::{ConditionCombo, GuessState, InterpretationPayload};
pub use record::{GameRecord, Group};
