use std::sync::OnceLock;

use evoscore_core::corpus::{parse_response_batch, ConceptId, ConceptScores};
use evoscore_core::service::{
    build_model_set, execute_run, generate_report, parse_result_csv, render_bubble_chart, score_batch,
    write_result_csv, ConceptConfigs, ModelSet, Registry, ResultRow, RunStatus, ScoringRun, ServiceError,
};
use evoscore_core::smo::SmoParams;
use evoscore_core::synthetic::{synthetic_batch, synthetic_corpus};
use evoscore_core::textpipe::vectorize;
use proptest::prelude::*;

fn model_set() -> &'static ModelSet {
    static SET: OnceLock<ModelSet> = OnceLock::new();
    SET.get_or_init(|| {
        let corpus = synthetic_corpus(600, 3, 0.0, 31);
        build_model_set(&corpus, &ConceptConfigs::default(), &SmoParams::default(), 5, 2).unwrap().0
    })
}

#[test]
fn publish_retains_and_switches_active() {
    let dir = tempfile::tempdir().unwrap();
    let reg = Registry::open(dir.path()).unwrap();
    assert_eq!(reg.active_version().unwrap(), None);
    assert!(matches!(reg.load_active(), Err(ServiceError::NoActiveVersion)));
    assert_eq!(reg.publish(model_set(), None).unwrap(), 1);
    assert_eq!(reg.active_version().unwrap(), Some(1));
    assert_eq!(reg.publish(model_set(), None).unwrap(), 2);
    assert_eq!(reg.active_version().unwrap(), Some(2));
    assert_eq!(reg.versions().unwrap(), vec![1, 2]);
    assert_eq!(reg.load(1).unwrap().version(), 1);
    assert!(matches!(reg.load(9), Err(ServiceError::UnknownVersion(9))));
    let v1 = std::fs::read(reg.version_dir(1).join("variation.clf")).unwrap();
    let v2 = std::fs::read(reg.version_dir(2).join("variation.clf")).unwrap();
    assert_eq!(v1, v2);
}

#[test]
fn reload_preserves_predictions_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let reg = Registry::open(dir.path()).unwrap();
    let v = reg.publish(model_set(), None).unwrap();
    let loaded = reg.load(v).unwrap();
    let (probe, _) = synthetic_batch(20, 1, 0.0, 77);
    let before = score_batch(&probe, model_set());
    let after = score_batch(&probe, &loaded);
    assert_eq!(before, after);
    for (a, b) in model_set().bundles().iter().zip(loaded.bundles()) {
        assert_eq!(a.classifier.weights(), b.classifier.weights());
        assert_eq!(a.classifier.bias().to_bits(), b.classifier.bias().to_bits());
        assert_eq!(a.dictionary, b.dictionary);
    }
}

#[test]
fn no_hidden_staging_left_behind() {
    let dir = tempfile::tempdir().unwrap();
    let reg = Registry::open(dir.path()).unwrap();
    reg.publish(model_set(), None).unwrap();
    let names: Vec<String> =
        std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert!(names.iter().all(|n| !n.starts_with('.')), "{names:?}");
}

#[test]
fn out_of_vocabulary_answer_scored_by_bias_sign() {
    let batch = parse_response_batch(b"student_id,q1\ns1,qwxz plorf\n").unwrap();
    let rows = score_batch(&batch, model_set());
    assert_eq!(rows.len(), 1);
    for c in ConceptId::ALL {
        let b = model_set().bundle(c);
        assert!(vectorize("qwxz plorf", &b.dictionary).is_empty());
        assert_eq!(rows[0].scores.get(c), b.classifier.bias() > 0.0);
    }
}

#[test]
fn rows_follow_row_then_item_order() {
    let batch = parse_response_batch(b"student_id,q1,q2\na,x y,z w\nb,mutation,genes\nc,food,drift\n").unwrap();
    let rows = score_batch(&batch, model_set());
    let keys: Vec<(&str, &str)> = rows.iter().map(|r| (r.student_id.as_str(), r.item_id.as_str())).collect();
    assert_eq!(keys, [("a", "q1"), ("a", "q2"), ("b", "q1"), ("b", "q2"), ("c", "q1"), ("c", "q2")]);
}

#[test]
fn implanted_batch_matches_oracle_labels() {
    let (batch, truth) = synthetic_batch(60, 4, 0.25, 12);
    let rows = score_batch(&batch, model_set());
    assert_eq!(rows.len(), batch.answer_count());
    for (row, expected) in rows.iter().zip(&truth) {
        assert_eq!(&row.scores, expected, "{} {}", row.student_id, row.item_id);
        assert!(row.is_consistent());
    }
}

#[test]
fn run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let (batch, _) = synthetic_batch(25, 3, 0.1, 4);
    let mut run = ScoringRun::new(batch.clone(), model_set().version());
    let mut seen = vec![run.status];
    let artifacts = execute_run(&mut run, model_set(), dir.path(), |r| seen.push(r.status)).unwrap();
    assert_eq!(seen, [RunStatus::Pending, RunStatus::Scoring, RunStatus::Reporting, RunStatus::Done]);
    let csv = std::fs::read(&artifacts.results_csv).unwrap();
    assert_eq!(csv, write_result_csv(&score_batch(&batch, model_set())).unwrap());
    assert_eq!(parse_result_csv(&csv).unwrap(), run.results);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&artifacts.report_json).unwrap()).unwrap();
    assert_eq!(report["n_responses"], batch.answer_count());
    for kind in ["bar", "pie", "bubble"] {
        let svg = std::fs::read_to_string(artifacts.chart(kind).unwrap()).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}

#[test]
fn run_on_empty_batch_fails() {
    let dir = tempfile::tempdir().unwrap();
    let batch = evoscore_core::corpus::ResponseBatch { item_ids: vec!["q".into()], rows: vec![] };
    let mut run = ScoringRun::new(batch, 0);
    let mut last = None;
    assert!(execute_run(&mut run, model_set(), dir.path(), |r| last = Some(r.status)).is_err());
    assert_eq!(last, Some(RunStatus::Failed));
    assert!(run.error.is_some());
}

fn rows() -> impl Strategy<Value = Vec<ResultRow>> {
    prop::collection::vec((0u16..512, 0usize..3), 1..60).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (bits, item))| {
                ResultRow::from_scores(format!("s{i}"), format!("q{item}"), ConceptScores::from_bits(bits))
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn report_conserves_counts(rows in rows()) {
        let r = generate_report(&rows).unwrap();
        let n = rows.len();
        prop_assert_eq!(r.summary.n_responses, n);
        prop_assert_eq!(r.summary.model_distribution.total(), n);
        prop_assert_eq!(r.summary.bubbles.iter().map(|b| b.count).sum::<usize>(), n);
        prop_assert_eq!(r.per_item.iter().map(|i| i.summary.n_responses).sum::<usize>(), n);
        let svg = render_bubble_chart(&r).unwrap();
        prop_assert_eq!(svg.matches("<circle").count(), r.summary.bubbles.len());
    }

    #[test]
    fn result_csv_round_trip(rows in rows()) {
        prop_assert_eq!(parse_result_csv(&write_result_csv(&rows).unwrap()).unwrap(), rows);
    }
}
