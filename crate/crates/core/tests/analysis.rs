mod common;

use std::collections::BTreeMap;

use common::{numeric_gradient, random_dataset, relative_error};
use coopqa_core::analysis::{
    buzz_stats, combo_effects, combo_feature, fit, fit_dataset, gradient, loss, FitResult, GroupBy, Hyperparams,
};
use coopqa_core::{ConditionCombo, GameRecord, Group};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn hand_fit(coefs: &[f64; 7]) -> FitResult {
    FitResult {
        coefficients: (1..8)
            .map(|i| (combo_feature(ConditionCombo::from_index(i)), coefs[i - 1]))
            .collect(),
        bias: 0.0,
        hyperparams: Hyperparams::default(),
        final_loss: 0.0,
        loss_history: vec![],
    }
}

fn record(player: usize, question: usize, combo: ConditionCombo, frac: f64, correct: bool) -> GameRecord {
    GameRecord {
        player_id: format!("p{player}"),
        question_id: format!("q{question}"),
        group: Group::Novice,
        combo,
        buzz_position_frac: frac,
        answered: true,
        correct,
        points: if correct { 10 } else { -5 },
        active_players: 1,
        top_active_accuracy: 0.0,
        guess_shown: None,
        timestamp: 0,
    }
}

fn random_records(rng: &mut ChaCha8Rng, n: usize) -> Vec<GameRecord> {
    (0..n)
        .map(|i| {
            let combo = ConditionCombo::from_index(rng.gen_range(0..8));
            let frac = rng.gen_range(0.05..=1.0);
            let p = 0.3 + 0.1 * combo.count() as f64;
            record(i % 7, i % 11, combo, frac, rng.gen_bool(p))
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ds, w, b, l2) = random_dataset(&mut rng);
        let (gw, gb) = gradient(&ds, &w, b, l2);
        let mut analytic = gw;
        analytic.push(gb);
        let mut x = w.clone();
        x.push(b);
        let d = w.len();
        let numeric = numeric_gradient(|v| loss(&ds, &v[..d], v[d], l2), &x, 1e-5);
        prop_assert!(relative_error(&analytic, &numeric) <= 1e-6, "{analytic:?} vs {numeric:?}");
    }

    #[test]
    fn combo_effects_are_coefficient_minus_parts(coefs in prop::array::uniform7(-3.0f64..3.0)) {
        let [g, h, gh, e, ge, he, ghe] = coefs;
        let got = combo_effects(&hand_fit(&coefs)).unwrap();
        let want: BTreeMap<String, f64> = [
            ("guesses+highlight", gh - (g + h)),
            ("guesses+evidence", ge - (g + e)),
            ("highlight+evidence", he - (h + e)),
            ("guesses+highlight+evidence", ghe - (g + h + e)),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        prop_assert_eq!(got.len(), 4);
        for (k, v) in want {
            prop_assert!((got[&k] - v).abs() <= 1e-12);
        }
    }

    #[test]
    fn combo_effects_scale_with_coefficients(
        coefs in prop::array::uniform7(-3.0f64..3.0),
        alpha in -4.0f64..4.0,
    ) {
        let base = combo_effects(&hand_fit(&coefs)).unwrap();
        let scaled = combo_effects(&hand_fit(&coefs.map(|c| alpha * c))).unwrap();
        for (k, v) in &base {
            prop_assert!((scaled[k] - alpha * v).abs() <= 1e-9 * (1.0 + v.abs()), "{k}");
        }
    }

    #[test]
    fn fit_ignores_feature_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ds, _, _, _) = random_dataset(&mut rng);
        let d = ds.num_features();
        let mut perm: Vec<usize> = (0..d).collect();
        perm.reverse();
        let hp = Hyperparams { epochs: 20_000, l2: 0.05, ..Hyperparams::default() };
        let a = fit_dataset(&ds, &hp).unwrap();
        let b = fit_dataset(&ds.permuted(&perm), &hp).unwrap();
        for (name, w) in &a.coefficients {
            prop_assert!((w - b.coefficients[name]).abs() < 1e-6, "{name}: {w} vs {}", b.coefficients[name]);
        }
        prop_assert!((a.bias - b.bias).abs() < 1e-6);
    }

    #[test]
    fn stronger_l2_never_grows_weights(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ds, _, _, _) = random_dataset(&mut rng);
        let mut last = f64::INFINITY;
        for l2 in [0.01, 0.03, 0.1, 0.3, 1.0] {
            let hp = Hyperparams { epochs: 20_000, l2, ..Hyperparams::default() };
            let norm = fit_dataset(&ds, &hp).unwrap().weight_norm();
            prop_assert!(norm <= last + 1e-6, "l2 {l2}: {norm} > {last}");
            last = norm;
        }
    }

    #[test]
    fn plain_gradient_descent_decreases_loss(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ds, _, _, l2) = random_dataset(&mut rng);
        let hp = Hyperparams { learning_rate: 0.05, epochs: 300, l2, preconditioned: false, ..Hyperparams::default() };
        let f = fit_dataset(&ds, &hp).unwrap();
        for w in f.loss_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn buzz_means_match_direct_average(seed in any::<u64>(), n in 1usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut records = random_records(&mut rng, n);
        for r in records.iter_mut().step_by(5) {
            r.answered = false;
            r.correct = false;
            r.points = 0;
            r.buzz_position_frac = 1.0;
        }
        let summary = buzz_stats(&records, GroupBy::Interpretation);
        let mean = |pred: &dyn Fn(&GameRecord) -> bool| {
            let xs: Vec<f64> = records.iter().filter(|r| r.answered && pred(r)).map(|r| r.buzz_position_frac).collect();
            (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
        };
        let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(x), Some(y)) => (x - y).abs() < 1e-12,
            (None, None) => true,
            _ => false,
        };
        prop_assert!(close(summary.cell("highlight", "on").unwrap().mean, mean(&|r| r.combo.highlight)));
        prop_assert!(close(summary.cell("highlight", "off").unwrap().mean, mean(&|r| !r.combo.highlight)));
        prop_assert!(close(summary.cell("all", "all").unwrap().mean, mean(&|_| true)));
        let hist_total: usize = summary
            .histograms
            .iter()
            .filter(|h| h.facet == "all")
            .map(|h| h.count)
            .sum();
        prop_assert_eq!(hist_total, records.iter().filter(|r| r.answered).count());
    }
}

#[test]
fn fitting_recovers_a_clear_effect() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let records: Vec<GameRecord> = (0..8000)
        .map(|i| {
            let combo = ConditionCombo::from_index(rng.gen_range(0..8));
            let logit: f64 = if combo.guesses { 1.0 } else { 0.0 };
            let p = 1.0 / (1.0 + (-logit).exp());
            record(i % 20, i % 40, combo, 0.5, rng.gen_bool(p))
        })
        .collect();
    let f = fit(&records, Group::Novice, false, &Hyperparams::default()).unwrap();
    let g = f.coefficient("combo:guesses").unwrap();
    let h = f.coefficient("combo:highlight").unwrap();
    assert!((g - 1.0).abs() < 0.25, "{g}");
    assert!(h.abs() < 0.25, "{h}");
}
