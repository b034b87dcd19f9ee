//! Interpretation conditions and the per-player payload built from a guess
//! state.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::guesser::{EvidenceSnippet, GuessList};

/// Which of the three interpretations a player sees.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConditionCombo {
    pub guesses: bool,
    pub highlight: bool,
    pub evidence: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown condition {0:?}")]
pub struct UnknownCondition(pub String);

impl ConditionCombo {
    pub const NONE: Self = Self::new(false, false, false);
    pub const ALL: Self = Self::new(true, true, true);

    pub const fn new(guesses: bool, highlight: bool, evidence: bool) -> Self {
        Self {
            guesses,
            highlight,
            evidence,
        }
    }

    /// All eight combinations; index `i` has bit 0 = guesses, bit 1 =
    /// highlight, bit 2 = evidence.
    pub fn all() -> [Self; 8] {
        core::array::from_fn(Self::from_index)
    }

    pub fn from_index(i: usize) -> Self {
        Self::new(i & 1 != 0, i & 2 != 0, i & 4 != 0)
    }

    pub fn index(self) -> usize {
        usize::from(self.guesses) | usize::from(self.highlight) << 1 | usize::from(self.evidence) << 2
    }

    pub fn is_null(self) -> bool {
        self == Self::NONE
    }

    /// Number of interpretations enabled.
    pub fn count(self) -> usize {
        usize::from(self.guesses) + usize::from(self.highlight) + usize::from(self.evidence)
    }

    /// The single-interpretation combos this one is made of.
    pub fn components(self) -> Vec<Self> {
        let mut out = Vec::new();
        if self.guesses {
            out.push(Self::new(true, false, false));
        }
        if self.highlight {
            out.push(Self::new(false, true, false));
        }
        if self.evidence {
            out.push(Self::new(false, false, true));
        }
        out
    }

    /// True when every interpretation enabled in `self` is enabled in `other`.
    pub fn is_subset_of(self, other: Self) -> bool {
        (!self.guesses || other.guesses)
            && (!self.highlight || other.highlight)
            && (!self.evidence || other.evidence)
    }

    /// Canonical name: `none`, or the enabled parts joined by `+` in the
    /// order guesses, highlight, evidence.
    pub fn name(self) -> &'static str {
        [
            "none",
            "guesses",
            "highlight",
            "guesses+highlight",
            "evidence",
            "guesses+evidence",
            "highlight+evidence",
            "guesses+highlight+evidence",
        ][self.index()]
    }
}

impl fmt::Display for ConditionCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConditionCombo {
    type Err = UnknownCondition;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::all()
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| UnknownCondition(s.into()))
    }
}

/// Everything the guesser produced at one refresh.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GuessState {
    pub guesses: GuessList,
    pub evidence: Vec<EvidenceSnippet>,
    pub question_highlights: BTreeSet<usize>,
}

/// The guess state as one player is allowed to see it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InterpretationPayload {
    pub guesses: Option<GuessList>,
    pub evidence: Option<Vec<EvidenceSnippet>>,
    pub question_highlights: Option<BTreeSet<usize>>,
    pub evidence_highlights_visible: bool,
}

impl InterpretationPayload {
    /// The combo this payload exposes, read off its fields.
    pub fn exposed(&self) -> ConditionCombo {
        ConditionCombo::new(
            self.guesses.is_some(),
            self.question_highlights.is_some() || self.evidence_highlights_visible,
            self.evidence.is_some(),
        )
    }

    /// True when every field present in `self` is present, with identical
    /// content, in `other`.
    pub fn is_field_subset_of(&self, other: &Self) -> bool {
        fn sub<T: PartialEq>(a: &Option<T>, b: &Option<T>) -> bool {
            a.is_none() || a == b
        }
        sub(&self.guesses, &other.guesses)
            && sub(&self.evidence, &other.evidence)
            && sub(&self.question_highlights, &other.question_highlights)
            && (!self.evidence_highlights_visible || other.evidence_highlights_visible)
    }
}

/// Masks a guess state down to what `combo` permits. Highlights inside
/// evidence are only visible when both highlight and evidence are on.
pub fn render(state: &GuessState, combo: ConditionCombo) -> InterpretationPayload {
    InterpretationPayload {
        guesses: combo.guesses.then(|| state.guesses.clone()),
        evidence: combo.evidence.then(|| state.evidence.clone()),
        question_highlights: combo.highlight.then(|| state.question_highlights.clone()),
        evidence_highlights_visible: combo.highlight && combo.evidence,
    }
}
