//! Regression and buzz statistics over a record file, written as CSV.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;
use coopqa_core::analysis::{buzz_stats, combo_effects, fit, AnalysisError, BuzzSummary, FitResult, GroupBy, Hyperparams};
use coopqa_core::{GameRecord, Group};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub group: Group,
    pub records: usize,
    pub fit: FitResult,
    /// Combo gain (positive) or loss (negative) by combo name.
    pub effects: BTreeMap<String, f64>,
    /// Buzz positions with and without each interpretation, and per combo.
    pub buzz: BuzzSummary,
}

/// Fits one group's records. Records from the other group are ignored.
pub fn analyze(
    records: &[GameRecord],
    group: Group,
    include_buzz: bool,
    hp: &Hyperparams,
) -> Result<AnalysisReport, AnalysisError> {
    let mine: Vec<GameRecord> = records.iter().filter(|r| r.group == group).cloned().collect();
    let fit = fit(&mine, group, include_buzz, hp)?;
    let effects = combo_effects(&fit)?;
    let mut buzz = buzz_stats(&mine, GroupBy::Interpretation);
    let by_combo = buzz_stats(&mine, GroupBy::Condition);
    // the "all" cell and its histograms are already present
    buzz.cells.extend(by_combo.cells.into_iter().filter(|c| c.facet != "all"));
    buzz.histograms
        .extend(by_combo.histograms.into_iter().filter(|h| h.facet != "all"));
    Ok(AnalysisReport {
        group,
        records: mine.len(),
        fit,
        effects,
        buzz,
    })
}

#[derive(Serialize)]
struct CoefficientRow<'a> {
    feature: &'a str,
    coefficient: f64,
}

#[derive(Serialize)]
struct EffectRow<'a> {
    combo: &'a str,
    effect: f64,
    kind: &'static str,
}

#[derive(Serialize)]
struct BuzzRow<'a> {
    facet: &'a str,
    level: &'a str,
    count: usize,
    mean: Option<f64>,
}

#[derive(Serialize)]
struct FitSummary<'a> {
    group: Group,
    records: usize,
    bias: f64,
    final_loss: f64,
    hyperparams: &'a Hyperparams,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `coefficients.csv`, `combo_effects.csv`, `buzz_stats.csv`,
/// `histograms.csv` and `fit.json` into `dir`.
pub fn write_report(dir: &Path, report: &AnalysisReport) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let bias = CoefficientRow {
        feature: "bias",
        coefficient: report.fit.bias,
    };
    write_csv(
        &dir.join("coefficients.csv"),
        std::iter::once(bias).chain(report.fit.coefficients.iter().map(|(f, c)| CoefficientRow {
            feature: f,
            coefficient: *c,
        })),
    )?;
    write_csv(
        &dir.join("combo_effects.csv"),
        report.effects.iter().map(|(c, e)| EffectRow {
            combo: c,
            effect: *e,
            kind: if *e >= 0.0 { "gain" } else { "loss" },
        }),
    )?;
    write_csv(
        &dir.join("buzz_stats.csv"),
        report.buzz.cells.iter().map(|c| BuzzRow {
            facet: &c.facet,
            level: &c.level,
            count: c.count,
            mean: c.mean,
        }),
    )?;
    write_csv(&dir.join("histograms.csv"), &report.buzz.histograms)?;
    let summary = FitSummary {
        group: report.group,
        records: report.records,
        bias: report.fit.bias,
        final_loss: report.fit.final_loss,
        hyperparams: &report.fit.hyperparams,
    };
    std::fs::write(dir.join("fit.json"), serde_json::to_vec_pretty(&summary)?)?;
    Ok(())
}
