use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::interpretations::ConditionCombo;
use crate::record::GameRecord;

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    /// With and without each of guesses, highlight, evidence.
    Interpretation,
    /// Each of the eight combos.
    Condition,
}

/// Mean buzz position of the buzzes in one cell; `None` when the cell has
/// no buzzes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuzzCell {
    pub facet: String,
    pub level: String,
    pub count: usize,
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub facet: String,
    pub level: String,
    pub outcome: String,
    pub bin: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuzzSummary {
    pub cells: Vec<BuzzCell>,
    pub histograms: Vec<HistogramRow>,
}

impl BuzzSummary {
    pub fn cell(&self, facet: &str, level: &str) -> Option<&BuzzCell> {
        self.cells.iter().find(|c| c.facet == facet && c.level == level)
    }
}

#[derive(Clone, Copy)]
enum Member {
    All,
    Combo(ConditionCombo),
    Flag(Flag, bool),
}

impl Member {
    fn contains(self, combo: ConditionCombo) -> bool {
        match self {
            Member::All => true,
            Member::Combo(c) => c == combo,
            Member::Flag(flag, on) => flag(combo) == on,
        }
    }
}

fn bin_of(frac: f64) -> usize {
    ((frac * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)
}

type Flag = fn(ConditionCombo) -> bool;

/// Buzz-position statistics over answered records. Unanswered records did
/// not buzz and are left out.
pub fn buzz_stats(records: &[GameRecord], group_by: GroupBy) -> BuzzSummary {
    let buzzes: Vec<&GameRecord> = records.iter().filter(|r| r.answered).collect();

    let mut groups: Vec<(String, String, Member)> = vec![("all".into(), "all".into(), Member::All)];
    match group_by {
        GroupBy::Interpretation => {
            let flags: [(&str, Flag); 3] = [
                ("guesses", |c| c.guesses),
                ("highlight", |c| c.highlight),
                ("evidence", |c| c.evidence),
            ];
            for (name, flag) in flags {
                groups.push((name.into(), "on".into(), Member::Flag(flag, true)));
                groups.push((name.into(), "off".into(), Member::Flag(flag, false)));
            }
        }
        GroupBy::Condition => {
            for c in ConditionCombo::all() {
                groups.push(("combo".into(), c.name().to_string(), Member::Combo(c)));
            }
        }
    }

    let mut summary = BuzzSummary::default();
    for (facet, level, member) in groups {
        let cell: Vec<&&GameRecord> = buzzes.iter().filter(|r| member.contains(r.combo)).collect();
        let mean = (!cell.is_empty())
            .then(|| cell.iter().map(|r| r.buzz_position_frac).sum::<f64>() / cell.len() as f64);
        summary.cells.push(BuzzCell {
            facet: facet.clone(),
            level: level.clone(),
            count: cell.len(),
            mean,
        });

        for (outcome, correct) in [("correct", true), ("wrong", false)] {
            let mut counts = [0usize; HISTOGRAM_BINS];
            for r in cell.iter().filter(|r| r.correct == correct) {
                counts[bin_of(r.buzz_position_frac)] += 1;
            }
            for (bin, count) in counts.into_iter().enumerate() {
                summary.histograms.push(HistogramRow {
                    facet: facet.clone(),
                    level: level.clone(),
                    outcome: outcome.into(),
                    bin,
                    lo: bin as f64 / HISTOGRAM_BINS as f64,
                    hi: (bin + 1) as f64 / HISTOGRAM_BINS as f64,
                    count,
                });
            }
        }
    }
    summary
}
