//! Bag-of-words feature extraction.
//!
//! Pipeline order is fixed: tokenize, drop stopwords (if enabled), stem (if
//! enabled), then emit unigrams plus adjacent-pair bigrams (if enabled).
//! Bigrams are formed over the filtered token sequence and joined with `_`.

mod porter;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::ConceptId;
use crate::smo::SparseVector;

pub use porter::stem;

/// The shipped stopword list, one word per line.
pub const STOPWORDS: &str = include_str!("stopwords.txt");

pub const DEFAULT_MIN_CORPUS_FREQUENCY: u32 = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TextError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("no terms reach the corpus frequency cutoff of {0}")]
    NoSurvivingTerms(u32),
    #[error("min_corpus_frequency must be at least 1")]
    ZeroCutoff,
    #[error("dictionary line {line}: {detail}")]
    Parse { line: usize, detail: String },
}

/// Feature-extraction settings for one concept model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub use_bigrams: bool,
    pub use_stemming: bool,
    pub remove_stopwords: bool,
    pub min_corpus_frequency: u32,
    /// Consumed by the training pipeline, not by extraction.
    pub remove_misclassified: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            use_bigrams: false,
            use_stemming: true,
            remove_stopwords: true,
            min_corpus_frequency: DEFAULT_MIN_CORPUS_FREQUENCY,
            remove_misclassified: false,
        }
    }
}

impl FeatureConfig {
    /// The tuned per-concept settings shipped as defaults.
    pub fn for_concept(concept: ConceptId) -> Self {
        use ConceptId::*;
        let (use_bigrams, remove_stopwords, remove_misclassified) = match concept {
            Variation => (false, true, true),
            Heritability => (true, true, true),
            Competition => (false, true, false),
            LimitedResources => (false, true, true),
            DifferentialSurvival => (true, true, false),
            NonAdaptive => (false, true, false),
            AdaptAcclimation => (true, true, true),
            NeedsGoals => (true, false, true),
            UseDisuse => (true, true, false),
        };
        Self {
            use_bigrams,
            use_stemming: true,
            remove_stopwords,
            min_corpus_frequency: DEFAULT_MIN_CORPUS_FREQUENCY,
            remove_misclassified,
        }
    }

    pub fn validate(&self) -> Result<(), TextError> {
        if self.min_corpus_frequency == 0 {
            return Err(TextError::ZeroCutoff);
        }
        Ok(())
    }

    fn header_line(&self) -> String {
        format!(
            "#dictionary\tbigrams={}\tstemming={}\tstopwords={}\tmin_frequency={}\tremove_misclassified={}",
            u8::from(self.use_bigrams),
            u8::from(self.use_stemming),
            u8::from(self.remove_stopwords),
            self.min_corpus_frequency,
            u8::from(self.remove_misclassified),
        )
    }

    fn parse_header(line: &str) -> Result<Self, String> {
        let mut fields = line.split('\t');
        if fields.next() != Some("#dictionary") {
            return Err("missing #dictionary header".into());
        }
        let mut value = |key: &str| -> Result<&str, String> {
            let field = fields.next().ok_or_else(|| format!("missing {key}"))?;
            field
                .strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| format!("expected {key}=..., got {field:?}"))
        };
        let flag = |v: &str| match v {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(format!("flag must be 0 or 1, got {v:?}")),
        };
        let use_bigrams = flag(value("bigrams")?)?;
        let use_stemming = flag(value("stemming")?)?;
        let remove_stopwords = flag(value("stopwords")?)?;
        let min_corpus_frequency = value("min_frequency")?
            .parse::<u32>()
            .map_err(|e| format!("min_frequency: {e}"))?;
        let remove_misclassified = flag(value("remove_misclassified")?)?;
        if fields.next().is_some() {
            return Err("trailing header fields".into());
        }
        let cfg = Self {
            use_bigrams,
            use_stemming,
            remove_stopwords,
            min_corpus_frequency,
            remove_misclassified,
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

fn stopword_set() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS.lines().map(str::trim).filter(|w| !w.is_empty()).collect())
}

pub fn is_stopword(token: &str) -> bool {
    stopword_set().contains(token)
}

/// Lowercased maximal runs of ASCII letters and digits. Everything else,
/// including `_` and non-ASCII characters, separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_ascii_lowercase())
        .collect()
}

pub fn remove_stopwords(tokens: Vec<String>) -> Vec<String> {
    tokens.into_iter().filter(|t| !is_stopword(t)).collect()
}

/// Unigrams in order, followed by adjacent-pair bigrams when enabled.
pub fn extract_terms(tokens: &[String], config: &FeatureConfig) -> Vec<String> {
    let mut terms = tokens.to_vec();
    if config.use_bigrams {
        terms.extend(tokens.windows(2).map(|pair| format!("{}_{}", pair[0], pair[1])));
    }
    terms
}

/// Runs the whole configured pipeline on one text.
pub fn analyze(text: &str, config: &FeatureConfig) -> Vec<String> {
    let mut tokens = tokenize(text);
    if config.remove_stopwords {
        tokens = remove_stopwords(tokens);
    }
    if config.use_stemming {
        tokens = tokens.iter().map(|t| stem(t)).collect();
    }
    extract_terms(&tokens, config)
}

/// Content hash of a dictionary, carried by every vector built from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DictionaryId(pub u64);

/// Indexed vocabulary of terms that survived the corpus frequency cutoff.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureDictionary {
    terms: Vec<String>,
    frequencies: Vec<u64>,
    index: HashMap<String, u32>,
    config: FeatureConfig,
    id: DictionaryId,
}

impl FeatureDictionary {
    fn from_parts(terms: Vec<String>, frequencies: Vec<u64>, config: FeatureConfig) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        let mut dict = Self { terms, frequencies, index, config, id: DictionaryId(0) };
        let digest = Sha256::digest(dict.to_text().as_bytes());
        dict.id = DictionaryId(u64::from_be_bytes(digest[..8].try_into().unwrap()));
        dict
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn id(&self) -> DictionaryId {
        self.id
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.index.contains_key(term)
    }

    pub fn frequency(&self, term: &str) -> Option<u64> {
        self.index_of(term).map(|i| self.frequencies[i as usize])
    }

    /// Line-oriented form: a config header, then `term<TAB>index<TAB>frequency` lines.
    pub fn to_text(&self) -> String {
        let mut out = self.config.header_line();
        out.push('\n');
        for (i, (term, freq)) in self.terms.iter().zip(&self.frequencies).enumerate() {
            writeln!(out, "{term}\t{i}\t{freq}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TextError> {
        let mut lines = text.split_inclusive('\n');
        let err = |line: usize, detail: String| TextError::Parse { line, detail };
        let header = lines.next().ok_or_else(|| err(1, "empty input".into()))?;
        let header = header.strip_suffix('\n').ok_or_else(|| err(1, "unterminated line".into()))?;
        let config = FeatureConfig::parse_header(header).map_err(|d| err(1, d))?;

        let mut terms = Vec::new();
        let mut frequencies = Vec::new();
        let mut seen = HashSet::new();
        for (n, raw) in lines.enumerate() {
            let line_no = n + 2;
            let line = raw.strip_suffix('\n').ok_or_else(|| err(line_no, "unterminated line".into()))?;
            let parts: Vec<&str> = line.split('\t').collect();
            let [term, index, freq] = parts[..] else {
                return Err(err(line_no, format!("expected 3 tab-separated fields, got {}", parts.len())));
            };
            if term.is_empty() || !term.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_') {
                return Err(err(line_no, format!("invalid term {term:?}")));
            }
            let index: usize = index.parse().map_err(|e| err(line_no, format!("index: {e}")))?;
            if index != terms.len() || index.to_string() != parts[1] {
                return Err(err(line_no, format!("expected index {}, got {}", terms.len(), parts[1])));
            }
            let freq: u64 = freq.parse().map_err(|e| err(line_no, format!("frequency: {e}")))?;
            if freq < u64::from(config.min_corpus_frequency) || freq.to_string() != parts[2] {
                return Err(err(line_no, format!("frequency {freq} below cutoff or not canonical")));
            }
            if !seen.insert(term) {
                return Err(err(line_no, format!("duplicate term {term:?}")));
            }
            terms.push(term.to_string());
            frequencies.push(freq);
        }
        Ok(Self::from_parts(terms, frequencies, config))
    }
}

/// Counts terms over `texts` and keeps those reaching the cutoff, indexed in
/// first-appearance order.
pub fn build_dictionary<'a, I>(texts: I, config: &FeatureConfig) -> Result<FeatureDictionary, TextError>
where
    I: IntoIterator<Item = &'a str>,
{
    config.validate()?;
    let mut order: Vec<String> = Vec::new();
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut n_texts = 0usize;
    for text in texts {
        n_texts += 1;
        for term in analyze(text, config) {
            let c = counts.entry(term).or_insert_with_key(|t| {
                order.push(t.clone());
                0
            });
            *c += 1;
        }
    }
    if n_texts == 0 {
        return Err(TextError::EmptyCorpus);
    }
    let cutoff = u64::from(config.min_corpus_frequency);
    let (terms, frequencies): (Vec<_>, Vec<_>) = order
        .into_iter()
        .filter_map(|t| {
            let f = counts[&t];
            (f >= cutoff).then_some((t, f))
        })
        .unzip();
    if terms.is_empty() {
        return Err(TextError::NoSurvivingTerms(config.min_corpus_frequency));
    }
    Ok(FeatureDictionary::from_parts(terms, frequencies, *config))
}

/// Sparse raw term counts of one response over a dictionary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVector {
    entries: Vec<(u32, u32)>,
    dim: usize,
    dictionary: DictionaryId,
}

impl FeatureVector {
    /// `(index, count)` pairs in ascending index order; counts are positive.
    pub fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dictionary(&self) -> DictionaryId {
        self.dictionary
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_count(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| u64::from(c)).sum()
    }

    pub fn get(&self, index: u32) -> u32 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|p| self.entries[p].1)
            .unwrap_or(0)
    }

    pub fn to_sparse(&self) -> SparseVector {
        SparseVector::from_sorted(self.entries.iter().map(|&(i, c)| (i as usize, f64::from(c))).collect())
    }
}

/// Term counts for the dictionary terms present in `text`; unknown terms are dropped.
pub fn vectorize(text: &str, dict: &FeatureDictionary) -> FeatureVector {
    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    for term in analyze(text, &dict.config) {
        if let Some(i) = dict.index_of(&term) {
            *counts.entry(i).or_default() += 1;
        }
    }
    FeatureVector { entries: counts.into_iter().collect(), dim: dict.len(), dictionary: dict.id }
}
