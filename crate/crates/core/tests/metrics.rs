mod support;

use evoscore_core::corpus::{ConceptId, ConceptKind, ConceptScores};
use evoscore_core::evalmetrics::{
    agreement_pct, assign_folds, confusion, kappa, meets_thresholds, precision_recall_f1, spearman, AgreementReport,
    ConfusionMatrix, EvalError,
};
use evoscore_core::reasoning::{classify_model, key_concept_total, naive_total, ReasoningModel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::rank_oracle;

fn cm(tp: u64, fp: u64, fn_: u64, tn: u64) -> ConfusionMatrix {
    ConfusionMatrix { tp, fp, fn_, tn }
}

#[test]
fn confusion_tallies() {
    assert_eq!(confusion(&[true, false, true], &[true, false, true]).unwrap(), cm(2, 0, 0, 1));
    assert_eq!(confusion(&[true, true], &[false, false]).unwrap(), cm(0, 2, 0, 0));
    assert_eq!(confusion(&[true, false, false, true], &[true, true, false, false]).unwrap(), cm(1, 1, 1, 1));
    assert!(matches!(confusion(&[], &[]), Err(EvalError::Empty)));
    assert!(matches!(confusion(&[true], &[true, false]), Err(EvalError::LengthMismatch(1, 2))));
}

#[test]
fn kappa_hand_values() {
    assert!((kappa(&cm(3, 0, 0, 3)).unwrap() - 1.0).abs() < 1e-9);
    // p0 = 0.8, pe = 0.5
    assert!((kappa(&cm(40, 10, 10, 40)).unwrap() - 0.6).abs() < 1e-9);
    assert!(kappa(&cm(25, 25, 25, 25)).unwrap().abs() < 1e-9);
    assert_eq!(kappa(&cm(5, 0, 0, 0)).unwrap(), 1.0);
    assert!((agreement_pct(&cm(40, 10, 10, 40)).unwrap() - 80.0).abs() < 1e-12);
}

#[test]
fn undefined_precision_is_explicit() {
    let prf = precision_recall_f1(&cm(0, 0, 5, 3)).unwrap();
    assert_eq!(prf.precision, None);
    assert_eq!(prf.recall, Some(0.0));
    assert_eq!(prf.f1, None);
}

#[test]
fn spearman_hand_values() {
    assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap() - 1.0).abs() < 1e-12);
    assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
    assert!((spearman(&[0.0, 1.0, 1.0, 2.0], &[0.0, 1.0, 2.0, 2.0]).unwrap() - 0.8333).abs() < 1e-4);
    assert!(matches!(spearman(&[1.0, 1.0], &[1.0, 2.0]), Err(EvalError::ConstantList)));
}

#[test]
fn spearman_matches_rank_oracle_on_tied_lists() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut compared = 0;
    while compared < 1000 {
        let n = rng.random_range(2..=12);
        let xs: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..5u8))).collect();
        let ys: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..5u8))).collect();
        let Some(expected) = rank_oracle::spearman(&xs, &ys) else {
            assert!(spearman(&xs, &ys).is_err());
            continue;
        };
        let got = spearman(&xs, &ys).unwrap();
        assert!((got - expected).abs() <= 1e-9, "{xs:?} {ys:?}: {got} vs {expected}");
        compared += 1;
    }
}

#[test]
fn thresholds_inclusive() {
    let report = |k: f64, a: f64| AgreementReport { kappa: k, agreement_pct: a, ..AgreementReport::from_confusion(cm(1, 0, 0, 1)).unwrap() };
    assert!(meets_thresholds(&report(0.903, 95.6)));
    assert!(!meets_thresholds(&report(0.651, 95.1)));
    assert!(meets_thresholds(&report(0.8, 90.0)));
    assert!(!meets_thresholds(&report(0.95, 89.99)));
}

#[test]
fn reasoning_truth_table() {
    for bits in 0u16..512 {
        let s = ConceptScores::from_bits(bits);
        let key = ConceptId::ALL.iter().filter(|c| c.kind() == ConceptKind::KeyConcept && s.get(**c)).count();
        let naive = ConceptId::ALL.iter().filter(|c| c.kind() == ConceptKind::NaiveIdea && s.get(**c)).count();
        let expected = match (key > 0, naive > 0) {
            (true, false) => ReasoningModel::PureScientific,
            (true, true) => ReasoningModel::Mixed,
            (false, true) => ReasoningModel::PureNaive,
            (false, false) => ReasoningModel::NoModel,
        };
        assert_eq!(classify_model(&s), expected, "bits {bits:09b}");
        assert_eq!(usize::from(key_concept_total(&s)), key);
        assert_eq!(usize::from(naive_total(&s)), naive);
    }
}

#[test]
fn fold_examples() {
    let folds = assign_folds(100, 10, 1).unwrap();
    assert!(folds.iter().all(|f| f.len() == 10));
    assert!(matches!(assign_folds(5, 10, 1), Err(EvalError::CorpusSmallerThanK { n: 5, k: 10 })));
    assert!(matches!(assign_folds(5, 1, 1), Err(EvalError::TooFewFolds(1))));
    assert_eq!(assign_folds(37, 4, 9).unwrap(), assign_folds(37, 4, 9).unwrap());
}

fn matrix() -> impl Strategy<Value = ConfusionMatrix> {
    (0u64..60, 0u64..60, 0u64..60, 0u64..60)
        .prop_filter("non-empty", |&(a, b, c, d)| a + b + c + d > 0)
        .prop_map(|(tp, fp, fn_, tn)| cm(tp, fp, fn_, tn))
}

proptest! {
    #[test]
    fn kappa_at_most_one(m in matrix()) {
        prop_assert!(kappa(&m).unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn kappa_one_iff_no_disagreement(m in matrix()) {
        prop_assume!(m.tp + m.fn_ > 0 && m.fp + m.tn > 0);
        let perfect = m.fp == 0 && m.fn_ == 0;
        prop_assert_eq!((kappa(&m).unwrap() - 1.0).abs() < 1e-12, perfect);
    }

    #[test]
    fn kappa_scale_invariant(m in matrix(), s in 2u64..6) {
        let scaled = cm(m.tp * s, m.fp * s, m.fn_ * s, m.tn * s);
        prop_assert!((kappa(&m).unwrap() - kappa(&scaled).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn rater_order_symmetry(m in matrix()) {
        let t = m.transpose();
        prop_assert!((kappa(&m).unwrap() - kappa(&t).unwrap()).abs() < 1e-12);
        prop_assert_eq!(agreement_pct(&m).unwrap(), agreement_pct(&t).unwrap());
    }

    #[test]
    fn f1_equals_precision_and_recall_when_errors_balance(tp in 1u64..50, e in 0u64..50, tn in 0u64..50) {
        let prf = precision_recall_f1(&cm(tp, e, e, tn)).unwrap();
        let (p, r, f) = (prf.precision.unwrap(), prf.recall.unwrap(), prf.f1.unwrap());
        prop_assert!((p - r).abs() < 1e-12 && (f - p).abs() < 1e-12);
    }

    #[test]
    fn spearman_invariant_under_increasing_maps(
        pairs in prop::collection::vec((0u8..6, 0u8..6), 2..12)
    ) {
        let xs: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
        if let Ok(base) = spearman(&xs, &ys) {
            let xt: Vec<f64> = xs.iter().map(|x| x.powi(3) + 2.0).collect();
            let yt: Vec<f64> = ys.iter().map(|y| y.exp()).collect();
            prop_assert!((spearman(&xt, &yt).unwrap() - base).abs() < 1e-9);
        }
    }

    #[test]
    fn folds_partition(n in 2usize..200, k in 2usize..12, seed in any::<u64>()) {
        prop_assume!(n >= k);
        let folds = assign_folds(n, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }
}
