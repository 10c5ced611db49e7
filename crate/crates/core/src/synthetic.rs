//! Synthetic labelled corpora and batches. Each concept is signalled by
//! implanting one of its marker words into otherwise neutral text, so the
//! true labels are known exactly.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{BatchRow, ConceptId, ConceptScores, LabeledResponse, ResponseBatch, TrainingCorpus};

const FILLER: &[&str] = &[
    "the", "a", "of", "and", "in", "over", "time", "population", "species", "birds", "beak", "island",
    "lizards", "color", "plants", "animals", "snails", "shell", "bacteria", "cheetahs", "speed", "fish",
    "ancestors", "environment", "long", "became", "today", "many", "larger", "smaller", "faster", "trait",
    "legs", "wings", "fur", "ago", "ocean", "desert", "forest", "river",
];

/// Marker words for a concept. Stems never collide across concepts or with filler.
pub fn markers(concept: ConceptId) -> &'static [&'static str] {
    match concept {
        ConceptId::Variation => &["mutation", "variation", "differences"],
        ConceptId::Heritability => &["inherited", "heritable", "genes", "offspring"],
        ConceptId::Competition => &["compete", "competition", "rivals"],
        ConceptId::LimitedResources => &["food", "scarce", "nutrients"],
        ConceptId::DifferentialSurvival => &["survived", "reproduce", "fittest"],
        ConceptId::NonAdaptive => &["drift", "randomly", "founder"],
        ConceptId::NeedsGoals => &["needed", "wanted", "purpose"],
        ConceptId::UseDisuse => &["disuse", "exercised", "unused"],
        ConceptId::AdaptAcclimation => &["adapted", "acclimated", "adjusted"],
    }
}

/// Concept prevalence used by the generators, spread over 0.15..=0.45.
pub fn prevalence(concept: ConceptId) -> f64 {
    0.15 + 0.3 * concept.index() as f64 / (ConceptId::COUNT - 1) as f64
}

fn draw_labels(rng: &mut ChaCha8Rng) -> ConceptScores {
    let mut s = ConceptScores::default();
    for c in ConceptId::ALL {
        s.set(c, rng.random_bool(prevalence(c)));
    }
    s
}

/// Neutral filler with one marker word per present concept inserted at random positions.
pub fn implant_text(labels: &ConceptScores, rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(6..=14);
    let mut words: Vec<&str> = (0..n).map(|_| *FILLER.choose(rng).unwrap()).collect();
    for (c, present) in labels.iter() {
        if present {
            let m = *markers(c).choose(rng).unwrap();
            let at = rng.random_range(0..=words.len());
            words.insert(at, m);
        }
    }
    let mut text = words.join(" ");
    if let Some(first) = text.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    text.push('.');
    text
}

/// A training corpus of `n` responses over `items` item ids. Each recorded
/// label is flipped independently with probability `label_noise`; the text
/// always reflects the unflipped labels.
pub fn synthetic_corpus(n: usize, items: usize, label_noise: f64, seed: u64) -> TrainingCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let responses = (0..n)
        .map(|i| {
            let truth = draw_labels(&mut rng);
            let text = implant_text(&truth, &mut rng);
            let mut labels = truth;
            for c in ConceptId::ALL {
                if rng.random_bool(label_noise) {
                    labels.set(c, !labels.get(c));
                }
            }
            LabeledResponse {
                response_id: format!("r{:05}", i + 1),
                item_id: format!("item{}", i % items.max(1) + 1),
                text,
                labels,
            }
        })
        .collect();
    TrainingCorpus::new(responses)
}

/// A batch of `students` rows over `items` item columns, with roughly
/// `blank_rate` of answer cells left empty (every row keeps at least one
/// answer). Returns the batch plus the implanted labels for every non-empty
/// cell in (row, item) order.
pub fn synthetic_batch(
    students: usize,
    items: usize,
    blank_rate: f64,
    seed: u64,
) -> (ResponseBatch, Vec<ConceptScores>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let item_ids: Vec<String> = (1..=items).map(|i| format!("item{i}")).collect();
    let mut truth = Vec::new();
    let mut rows = Vec::with_capacity(students);
    for s in 0..students {
        let mut filled: Vec<bool> = (0..items).map(|_| !rng.random_bool(blank_rate)).collect();
        if !filled.iter().any(|&f| f) {
            let keep = rng.random_range(0..items);
            filled[keep] = true;
        }
        let answers = filled
            .into_iter()
            .map(|f| {
                f.then(|| {
                    let labels = draw_labels(&mut rng);
                    truth.push(labels);
                    implant_text(&labels, &mut rng)
                })
            })
            .collect();
        rows.push(BatchRow { student_id: format!("s{:05}", s + 1), answers });
    }
    (ResponseBatch { item_ids, rows }, truth)
}

/// Writes a batch in the upload CSV layout.
pub fn batch_to_csv(batch: &ResponseBatch) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["student_id".to_string()];
    header.extend(batch.item_ids.iter().cloned());
    w.write_record(&header).expect("write to memory");
    for r in &batch.rows {
        let mut rec = vec![r.student_id.clone()];
        rec.extend(r.answers.iter().map(|a| a.clone().unwrap_or_default()));
        w.write_record(&rec).expect("write to memory");
    }
    w.into_inner().expect("flush to memory")
}

/// Shuffles response order; handy for checking order independence.
pub fn shuffled(corpus: &TrainingCorpus, seed: u64) -> TrainingCorpus {
    let mut responses = corpus.responses.clone();
    responses.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    TrainingCorpus::new(responses)
}
