//! Condition privacy audit over a room's message log.
//!
//! Works on the serialized JSON, i.e. what actually goes over the wire,
//! and checks it against the combos the engine was set up with.

use std::collections::BTreeMap;

use coopqa_core::engine::GameSetup;
use coopqa_core::ConditionCombo;
use serde_json::Value;

use super::protocol::Envelope;

/// Keys that carry interpretation content.
const INTERPRETATION_KEYS: [&str; 3] = ["guesses", "evidence", "question_highlights"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub seq: u64,
    pub recipient: Option<String>,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuditReport {
    pub messages: usize,
    /// Interpretation fields (and evidence highlight lists) inspected.
    pub fields_checked: usize,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

fn contains_key(v: &Value, keys: &[&str]) -> Option<String> {
    match v {
        Value::Object(m) => m.iter().find_map(|(k, v)| {
            if keys.contains(&k.as_str()) {
                Some(k.clone())
            } else {
                contains_key(v, keys)
            }
        }),
        Value::Array(a) => a.iter().find_map(|v| contains_key(v, keys)),
        _ => None,
    }
}

/// Audits `log` against the true assignments in `setups`.
pub fn audit(log: &[Envelope], setups: &[GameSetup]) -> AuditReport {
    let truth: BTreeMap<(&str, &str), ConditionCombo> = setups
        .iter()
        .flat_map(|s| {
            s.players
                .iter()
                .map(move |p| ((s.question_id.as_str(), p.id.as_str()), p.condition))
        })
        .collect();
    let mut current: BTreeMap<String, String> = BTreeMap::new();
    let mut report = AuditReport::default();

    for env in log {
        report.messages += 1;
        let wire = serde_json::to_value(env).expect("envelopes serialize");
        let msg = &wire["message"];
        let seq = env.message.seq;
        let kind = msg["type"].as_str().unwrap_or_default();
        let mut flag = |detail: String| {
            report.violations.push(Violation {
                seq,
                recipient: env.to.clone(),
                detail,
            })
        };

        let Some(to) = env.to.as_deref() else {
            if matches!(kind, "start" | "interpretations") {
                flag(format!("{kind} broadcast to the whole room"));
            }
            if let Some(k) = contains_key(&msg["payload"], &[&INTERPRETATION_KEYS[..], &["combo"]].concat()) {
                flag(format!("broadcast {kind} carries {k:?}"));
            }
            continue;
        };
        if msg["player"].as_str() != Some(to) {
            flag("private message about another player".into());
        }
        match kind {
            "start" => {
                let qid = msg["payload"]["question_id"].as_str().unwrap_or_default().to_string();
                let sent: Option<ConditionCombo> = serde_json::from_value(msg["payload"]["combo"].clone()).ok();
                match truth.get(&(qid.as_str(), to)) {
                    Some(c) if sent == Some(*c) => {}
                    _ => flag(format!("start for {qid:?} does not carry the recipient's own combo")),
                }
                current.insert(to.to_string(), qid);
            }
            "interpretations" => {
                let Some(combo) = current
                    .get(to)
                    .and_then(|q| truth.get(&(q.as_str(), to)))
                    .copied()
                else {
                    flag("interpretations before the recipient's start".into());
                    continue;
                };
                let payload = msg["payload"].as_object().cloned().unwrap_or_default();
                for key in payload.keys() {
                    let allowed = match key.as_str() {
                        "revealed" => true,
                        "guesses" => combo.guesses,
                        "evidence" => combo.evidence,
                        "question_highlights" => combo.highlight,
                        _ => false,
                    };
                    if key != "revealed" {
                        report.fields_checked += 1;
                    }
                    if !allowed {
                        flag(format!("{key:?} sent to a player with combo {}", combo.name()));
                    }
                }
                for snippet in payload.get("evidence").and_then(Value::as_array).into_iter().flatten() {
                    report.fields_checked += 1;
                    let marked = snippet["highlighted"].as_array().is_some_and(|h| !h.is_empty());
                    if marked && !combo.highlight {
                        flag(format!("evidence highlights sent to a player with combo {}", combo.name()));
                    }
                }
            }
            _ => {
                if let Some(k) = contains_key(&msg["payload"], &INTERPRETATION_KEYS) {
                    flag(format!("private {kind} carries {k:?}"));
                }
            }
        }
    }
    report
}
