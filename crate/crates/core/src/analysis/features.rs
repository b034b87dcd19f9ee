use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::AnalysisError;
use crate::interpretations::ConditionCombo;
use crate::record::{GameRecord, Group};

pub const BUZZ_FEATURE: &str = "buzz_position";
pub const ACTIVE_PLAYERS_FEATURE: &str = "active_players";
pub const TOP_ACCURACY_FEATURE: &str = "top_active_accuracy";

/// Feature name of a non-null combo, e.g. `combo:guesses+evidence`.
pub fn combo_feature(combo: ConditionCombo) -> String {
    format!("combo:{}", combo.name())
}

fn player_feature(id: &str) -> String {
    format!("player:{id}")
}

fn question_feature(id: &str) -> String {
    format!("question:{id}")
}

/// Named sparse features of one record. The null condition has no combo
/// entry; it is absorbed by the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub entries: Vec<(String, f64)>,
    pub label: f64,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

pub fn extract_features(
    record: &GameRecord,
    setting: Group,
    include_buzz: bool,
) -> Result<FeatureVector, AnalysisError> {
    if record.group != setting {
        return Err(AnalysisError::GroupMismatch {
            player: record.player_id.clone(),
            question: record.question_id.clone(),
            expected: setting,
            found: record.group,
        });
    }
    let mut entries = Vec::with_capacity(6);
    if !record.combo.is_null() {
        entries.push((combo_feature(record.combo), 1.0));
    }
    entries.push((player_feature(&record.player_id), 1.0));
    entries.push((question_feature(&record.question_id), 1.0));
    if include_buzz {
        entries.push((BUZZ_FEATURE.to_string(), record.buzz_position_frac));
    }
    if setting == Group::Expert {
        entries.push((ACTIVE_PLAYERS_FEATURE.to_string(), f64::from(record.active_players)));
        entries.push((TOP_ACCURACY_FEATURE.to_string(), record.top_active_accuracy));
    }
    Ok(FeatureVector {
        entries,
        label: if record.correct { 1.0 } else { 0.0 },
    })
}

/// Design matrix in sparse row form with a fixed feature ordering: the
/// seven combo indicators, the game-condition features, then player and
/// question indicators sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub names: Vec<String>,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub labels: Vec<f64>,
}

impl Dataset {
    pub fn from_records(
        records: &[GameRecord],
        setting: Group,
        include_buzz: bool,
    ) -> Result<Self, AnalysisError> {
        let vectors = records
            .iter()
            .map(|r| extract_features(r, setting, include_buzz))
            .collect::<Result<Vec<_>, _>>()?;

        let mut names: Vec<String> = ConditionCombo::all()[1..]
            .iter()
            .map(|&c| combo_feature(c))
            .collect();
        if include_buzz {
            names.push(BUZZ_FEATURE.into());
        }
        if setting == Group::Expert {
            names.push(ACTIVE_PLAYERS_FEATURE.into());
            names.push(TOP_ACCURACY_FEATURE.into());
        }
        let players: BTreeSet<&str> = records.iter().map(|r| r.player_id.as_str()).collect();
        let questions: BTreeSet<&str> = records.iter().map(|r| r.question_id.as_str()).collect();
        names.extend(players.into_iter().map(player_feature));
        names.extend(questions.into_iter().map(question_feature));

        let lookup: BTreeMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let mut rows = Vec::with_capacity(vectors.len());
        let mut labels = Vec::with_capacity(vectors.len());
        for v in &vectors {
            rows.push(v.entries.iter().map(|(n, x)| (lookup[n.as_str()], *x)).collect());
            labels.push(v.label);
        }
        Ok(Self { names, rows, labels })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.names.len()
    }

    /// The same data with feature `j` moved to position `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut names = alloc::vec![String::new(); self.names.len()];
        for (j, n) in self.names.iter().enumerate() {
            names[perm[j]] = n.clone();
        }
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&(j, x)| (perm[j], x)).collect())
            .collect();
        Self {
            names,
            rows,
            labels: self.labels.clone(),
        }
    }
}
