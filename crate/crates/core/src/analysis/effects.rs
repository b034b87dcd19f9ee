use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};

use super::features::combo_feature;
use super::logreg::FitResult;
use super::AnalysisError;
use crate::interpretations::ConditionCombo;

/// Combo gain (positive) or loss (negative) for every multi-interpretation
/// combo: its coefficient minus the sum of its components' coefficients.
/// Keyed by combo name.
pub fn combo_effects(fit: &FitResult) -> Result<BTreeMap<String, f64>, AnalysisError> {
    let coef = |c: ConditionCombo| {
        let name = combo_feature(c);
        fit.coefficient(&name)
            .ok_or(AnalysisError::MissingCoefficient(name))
    };
    let mut out = BTreeMap::new();
    for combo in ConditionCombo::all().into_iter().filter(|c| c.count() >= 2) {
        let mut parts = 0.0;
        for c in combo.components() {
            parts += coef(c)?;
        }
        out.insert(combo.name().to_string(), coef(combo)? - parts);
    }
    Ok(out)
}
