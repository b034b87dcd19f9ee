//! Simulation runs driven by a JSON config file.
//!
//! ```json
//! {
//!   "corpus": {"source": "synthetic", "seed": 0},
//!   "group": "novice",
//!   "players": {"count": 30, "seed": 1},
//!   "planted": {"highlight": {"log_odds": 0.5, "buzz_shift": -0.1}}
//! }
//! ```
//!
//! Every [`SimConfig`] field may appear at the top level. `corpus` may
//! instead name files: `{"source": "files", "questions": "q.jsonl",
//! "index": "index.json"}` (or `"documents"` in place of `"index"`).
//! Relative paths are resolved against the config file's directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use coopqa_core::engine::CachedGuesser;
use coopqa_core::guesser::Guesser;
use coopqa_core::sim::{simulate, synthetic_corpus, SimConfig, SimOutput, SynthParams};
use coopqa_core::{Index, Question};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eventlog::write_event_log;
use crate::io::{load_documents, load_index, load_questions};
use crate::logstore::{save_history, RecordStore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum CorpusSource {
    Synthetic {
        #[serde(default)]
        params: SynthParams,
        #[serde(default)]
        seed: u64,
    },
    Files {
        questions: PathBuf,
        #[serde(default)]
        index: Option<PathBuf>,
        #[serde(default)]
        documents: Option<PathBuf>,
    },
}

impl Default for CorpusSource {
    fn default() -> Self {
        CorpusSource::Synthetic {
            params: SynthParams::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    #[serde(default)]
    pub corpus: CorpusSource,
    #[serde(flatten)]
    pub sim: SimConfig,
}

impl SimulationConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let Some(base) = path.parent() {
            config.resolve_paths(base);
        }
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let CorpusSource::Files {
            questions,
            index,
            documents,
        } = &mut self.corpus
        {
            for p in std::iter::once(questions).chain(index.as_mut()).chain(documents.as_mut()) {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
    }
}

/// Loads or generates the questions and the guesser behind them.
pub fn load_corpus(source: &CorpusSource) -> anyhow::Result<(Vec<Question>, Guesser)> {
    match source {
        CorpusSource::Synthetic { params, seed } => {
            let (questions, documents) = synthetic_corpus(params, &mut ChaCha8Rng::seed_from_u64(*seed));
            Ok((questions, Guesser::new(Index::build(documents)?)))
        }
        CorpusSource::Files {
            questions,
            index,
            documents,
        } => {
            let qs = load_questions(questions)?;
            let index = match (index, documents) {
                (Some(i), _) => load_index(i)?,
                (None, Some(d)) => Index::build(load_documents(d)?)?,
                (None, None) => bail!("corpus needs an index or a documents file"),
            };
            Ok((qs, Guesser::new(index)))
        }
    }
}

pub fn run(config: &SimulationConfig, seed: u64) -> anyhow::Result<SimOutput> {
    let (questions, guesser) = load_corpus(&config.corpus)?;
    let source = CachedGuesser::new(guesser);
    Ok(simulate(&questions, &source, &config.sim, seed)?)
}

/// Writes the records to a fresh store at `out`, the exposure history to
/// `<out>.history.json`, and any kept event logs to `<out>.events/`.
pub fn write_output(out: &Path, output: &SimOutput) -> anyhow::Result<()> {
    if out.exists() {
        std::fs::remove_file(out).with_context(|| format!("replacing {}", out.display()))?;
    }
    let mut store = RecordStore::open(out)?;
    store.append_all(&output.records)?;
    save_history(&sidecar(out, "history.json"), &output.history)?;
    if !output.logs.is_empty() {
        let dir = sidecar(out, "events");
        std::fs::create_dir_all(&dir)?;
        for (i, log) in output.logs.iter().enumerate() {
            let name = format!("{i:05}-{}.jsonl", log.setup.question_id);
            write_event_log(&dir.join(name), &log.setup, &log.events)?;
        }
    }
    Ok(())
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(suffix);
    out.with_file_name(name)
}
