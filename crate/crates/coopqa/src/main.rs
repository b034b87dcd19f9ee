use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use coopqa::analyze::{analyze, write_report};
use coopqa::io::{load_documents, load_index, load_questions, save_index};
use coopqa::logstore::{read_all, RecordFilter};
use coopqa::service::room::RoomConfig;
use coopqa::service::server::{serve, ServerState};
use coopqa::simulate::{run, write_output, SimulationConfig};
use coopqa_core::analysis::Hyperparams;
use coopqa_core::guesser::Guesser;
use coopqa_core::{Group, Index, Mode};

#[derive(Parser)]
#[command(name = "coopqa", version, about = "Cooperative quizbowl: retrieval, games, simulation and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupArg {
    Expert,
    Novice,
}

impl From<GroupArg> for Group {
    fn from(g: GroupArg) -> Self {
        match g {
            GroupArg::Expert => Group::Expert,
            GroupArg::Novice => Group::Novice,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate question and document files and build a retrieval index.
    Ingest {
        #[arg(long)]
        questions: PathBuf,
        #[arg(long)]
        documents: PathBuf,
        /// Index file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run simulated players and write their gameplay records.
    Simulate {
        /// JSON simulation config; omit for the built-in defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Record file to write (replaced if present).
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the interpretation effect model and summarize buzz positions.
    Analyze {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_enum)]
        group: GroupArg,
        /// Leave the buzz-position feature out of the model.
        #[arg(long)]
        no_buzz_feature: bool,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        l2: Option<f64>,
        /// Directory for the CSV outputs.
        #[arg(long)]
        out: PathBuf,
    },
    /// Host live rooms over websockets.
    Serve {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        questions: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, value_enum)]
        mode: GroupArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Readout pace.
        #[arg(long, default_value_t = 4.0)]
        words_per_second: f64,
        /// Players per expert room.
        #[arg(long)]
        capacity: Option<usize>,
        /// Questions per room; the whole set by default.
        #[arg(long)]
        questions_per_room: Option<usize>,
        /// Where records, history and room logs go.
        #[arg(long, default_value = "coopqa-data")]
        data_dir: PathBuf,
    },
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Ingest { questions, documents, out } => {
            let qs = load_questions(&questions)?;
            let docs = load_documents(&documents)?;
            let n_docs = docs.len();
            let index = Index::build(docs)?;
            let unknown: Vec<&str> = {
                let labels: std::collections::BTreeSet<&str> = index.documents().iter().map(|d| d.label()).collect();
                qs.iter().map(|q| q.answer()).filter(|a| !labels.contains(a)).collect()
            };
            save_index(&out, &index)?;
            println!(
                "{} questions, {} documents, {} terms -> {}",
                qs.len(),
                n_docs,
                index.terms().count(),
                out.display()
            );
            if !unknown.is_empty() {
                eprintln!("warning: {} answers have no document with that label", unknown.len());
            }
        }
        Command::Simulate { config, seed, out } => {
            let config = match config {
                Some(path) => SimulationConfig::load(&path)?,
                None => SimulationConfig::default(),
            };
            let output = run(&config, seed)?;
            write_output(&out, &output)?;
            println!("{} records -> {}", output.records.len(), out.display());
        }
        Command::Analyze {
            records,
            group,
            no_buzz_feature,
            epochs,
            l2,
            out,
        } => {
            let group = Group::from(group);
            let rs = read_all(&records, &RecordFilter::group(group))?;
            let defaults = Hyperparams::default();
            let hp = Hyperparams {
                epochs: epochs.unwrap_or(defaults.epochs),
                l2: l2.unwrap_or(defaults.l2),
                ..defaults
            };
            let report = analyze(&rs, group, !no_buzz_feature, &hp)
                .with_context(|| format!("analyzing {} {} records", rs.len(), group.name()))?;
            write_report(&out, &report)?;
            println!("{} {} records -> {}", report.records, group.name(), out.display());
            for (combo, effect) in &report.effects {
                println!("  {combo:>24} {effect:+.4}");
            }
        }
        Command::Serve {
            index,
            questions,
            port,
            mode,
            seed,
            words_per_second,
            capacity,
            questions_per_room,
            data_dir,
        } => {
            anyhow::ensure!(
                words_per_second.is_finite() && words_per_second > 0.0,
                "--words-per-second must be positive"
            );
            let qs = load_questions(&questions)?;
            let guesser = Guesser::new(load_index(&index)?);
            let mode = match mode {
                GroupArg::Novice => Mode::NoviceSolo,
                GroupArg::Expert => Mode::ExpertCompetitive,
            };
            let mut template = RoomConfig::new(mode, seed);
            template.ms_per_word = ((1000.0 / words_per_second).round() as u64).max(1);
            if let Some(c) = capacity {
                template.capacity = c;
            }
            template.question_limit = questions_per_room;
            let state = Arc::new(ServerState::new(qs, guesser, template, data_dir)?);
            let addr = SocketAddr::from(([0, 0, 0, 0], port));
            tokio::runtime::Runtime::new()?.block_on(serve(state, addr))?;
        }
    }
    Ok(())
}
