//! Paraphrase-count labeling and scorer-model training.
//!
//! Supervision signal: paraphrase a text N times, and for each token count
//! the number of paraphrases in which it still appears (presence per
//! paraphrase, not total occurrences, so counts are bounded by N). Tokens
//! that survive paraphrasing are the ones carrying the meaning. From one
//! counts pass both datasets fall out:
//!
//! * classification label = 1(n_t > 0)
//! * regression label     = n_t / N
//!
//! The built-in paraphrase oracle is rule-based and seeded: synonym
//! substitution from a user-supplied table, stopword dropout, and adjacent
//! swaps. The trained scorer is a generalized linear model over the feature
//! vector defined in the scoring module, fit by full-batch gradient descent
//! with squared loss (regression) or logistic loss (classification).

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::prf::{absorb, SplitMix64};
use crate::scoring::{scorer_features, sigmoid, HashedEmbedding, IdfTable};
use crate::text::{surface_tokens, tokenize, Corpus, Vocabulary};
use crate::{Result, WisError};

/// Closed-class words eligible for dropout, sorted for binary search.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "after", "also", "an", "and", "are", "as", "at", "be", "before", "between",
    "but", "by", "can", "could", "did", "do", "does", "during", "each", "few", "for", "from",
    "had", "has", "have", "he", "her", "his", "if", "in", "into", "is", "it", "its", "just",
    "may", "might", "more", "most", "no", "nor", "not", "of", "on", "only", "or", "other",
    "over", "own", "same", "she", "should", "so", "some", "such", "than", "that", "the",
    "their", "them", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "very", "was", "we", "were", "will", "with", "would", "you",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// text -> one paraphrase, deterministic given the seed.
pub trait ParaphraseOracle {
    fn paraphrase(&self, text: &str, seed: u64) -> String;
}

/// Rule-based paraphraser: per-token synonym substitution, stopword dropout,
/// then a left-to-right adjacent-swap pass. All probabilities configurable;
/// the defaults perturb a typical sentence in several positions without
/// destroying most of its tokens.
#[derive(Debug, Clone)]
pub struct RuleOracle {
    synonyms: BTreeMap<String, Vec<String>>,
    pub p_synonym: f64,
    pub p_dropout: f64,
    pub p_swap: f64,
}

impl RuleOracle {
    pub const DEFAULT_P_SYNONYM: f64 = 0.3;
    pub const DEFAULT_P_DROPOUT: f64 = 0.2;
    pub const DEFAULT_P_SWAP: f64 = 0.1;

    pub fn new(synonyms: BTreeMap<String, Vec<String>>) -> Self {
        RuleOracle {
            synonyms,
            p_synonym: Self::DEFAULT_P_SYNONYM,
            p_dropout: Self::DEFAULT_P_DROPOUT,
            p_swap: Self::DEFAULT_P_SWAP,
        }
    }

    /// Synonym table JSON: {"token": ["alternative", ...], ...}
    pub fn from_json_str(s: &str) -> Result<Self> {
        let synonyms: BTreeMap<String, Vec<String>> = serde_json::from_str(s)?;
        Ok(Self::new(synonyms))
    }

    /// Number of entries in the synonym table.
    pub fn table_len(&self) -> usize {
        self.synonyms.len()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| WisError::io(path.display().to_string(), e))?;
        Self::from_json_str(&s)
    }

    pub fn with_probs(mut self, p_synonym: f64, p_dropout: f64, p_swap: f64) -> Self {
        self.p_synonym = p_synonym;
        self.p_dropout = p_dropout;
        self.p_swap = p_swap;
        self
    }
}

impl ParaphraseOracle for RuleOracle {
    fn paraphrase(&self, text: &str, seed: u64) -> String {
        let mut rng = SplitMix64::new(seed);
        let mut out: Vec<String> = Vec::new();
        for tok in surface_tokens(text) {
            let mut t = tok;
            if let Some(syns) = self.synonyms.get(&t) {
                if !syns.is_empty() && rng.next_bool(self.p_synonym) {
                    t = syns[rng.next_range(syns.len())].clone();
                }
            }
            if is_stopword(&t) && rng.next_bool(self.p_dropout) {
                continue;
            }
            out.push(t);
        }
        let mut i = 0;
        while i + 1 < out.len() {
            if rng.next_bool(self.p_swap) {
                out.swap(i, i + 1);
                i += 2;
            } else {
                i += 1;
            }
        }
        out.join(" ")
    }
}

/// N paraphrases of one text; each gets an independently derived seed.
pub fn paraphrase_n(
    oracle: &dyn ParaphraseOracle,
    text: &str,
    n: usize,
    seed: u64,
) -> Vec<String> {
    (0..n)
        .map(|i| oracle.paraphrase(text, absorb(seed, i as u64)))
        .collect()
}

/// For each position t of `s`, the number of paraphrases in which the token
/// id s_t appears at least once.
pub fn count_appearances(s: &[u32], paraphrases: &[Vec<u32>]) -> Vec<u32> {
    let sets: Vec<HashSet<u32>> = paraphrases
        .iter()
        .map(|p| p.iter().copied().collect())
        .collect();
    s.iter()
        .map(|id| sets.iter().filter(|set| set.contains(id)).count() as u32)
        .collect()
}

/// One labeled sequence: token ids and their per-token appearance counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub tokens: Vec<u32>,
    pub counts: Vec<u32>,
}

/// Token sequences with paraphrase-appearance counts out of `n` paraphrases.
/// Both label kinds are views over the same counts.
#[derive(Debug, Clone)]
pub struct LabeledCorpus {
    pub records: Vec<LabeledRecord>,
    pub n: u32,
}

/// JSONL line shape: {"tokens": [...], "counts": [...], "N": n}.
#[derive(Serialize, Deserialize)]
struct LabeledLine<'a> {
    tokens: std::borrow::Cow<'a, [u32]>,
    counts: std::borrow::Cow<'a, [u32]>,
    #[serde(rename = "N")]
    n: u32,
}

impl LabeledCorpus {
    pub fn classification_label(count: u32) -> f64 {
        if count > 0 {
            1.0
        } else {
            0.0
        }
    }

    pub fn regression_label(count: u32, n: u32) -> f64 {
        count as f64 / n as f64
    }

    pub fn to_jsonl_string(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            let line = LabeledLine {
                tokens: (&r.tokens[..]).into(),
                counts: (&r.counts[..]).into(),
                n: self.n,
            };
            out.push_str(&serde_json::to_string(&line)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_jsonl_string()?)
            .map_err(|e| WisError::io(path.display().to_string(), e))
    }

    pub fn from_jsonl_str(s: &str) -> Result<Self> {
        let mut records = Vec::new();
        let mut n: Option<u32> = None;
        for (i, line) in s.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: LabeledLine = serde_json::from_str(line).map_err(|e| {
                WisError::Malformed {
                    line: i + 1,
                    msg: e.to_string(),
                }
            })?;
            let bad = parsed.tokens.len() != parsed.counts.len()
                || parsed.counts.iter().any(|&c| c > parsed.n)
                || parsed.n == 0;
            if bad {
                return Err(WisError::Malformed {
                    line: i + 1,
                    msg: "counts must align with tokens and lie in 0..=N".to_string(),
                });
            }
            match n {
                None => n = Some(parsed.n),
                Some(existing) if existing != parsed.n => {
                    return Err(WisError::Malformed {
                        line: i + 1,
                        msg: format!("inconsistent N: {} vs {}", existing, parsed.n),
                    });
                }
                _ => {}
            }
            records.push(LabeledRecord {
                tokens: parsed.tokens.into_owned(),
                counts: parsed.counts.into_owned(),
            });
        }
        let n = n.ok_or_else(|| WisError::config("labeled corpus is empty"))?;
        Ok(LabeledCorpus { records, n })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| WisError::io(path.display().to_string(), e))?;
        Self::from_jsonl_str(&s)
    }
}

/// Paraphrase every document N times and record per-token appearance counts.
pub fn build_labels(
    corpus: &Corpus,
    vocab: &Vocabulary,
    oracle: &dyn ParaphraseOracle,
    n: usize,
    seed: u64,
) -> Result<LabeledCorpus> {
    if corpus.is_empty() {
        return Err(WisError::EmptyCorpus);
    }
    if n < 1 {
        return Err(WisError::config("paraphrase count N must be >= 1"));
    }
    let mut records = Vec::with_capacity(corpus.docs.len());
    for (i, doc) in corpus.docs.iter().enumerate() {
        let ids = tokenize(&doc.text, vocab).ids;
        let paraphrases: Vec<Vec<u32>> = paraphrase_n(oracle, &doc.text, n, absorb(seed, i as u64))
            .iter()
            .map(|p| tokenize(p, vocab).ids)
            .collect();
        let counts = count_appearances(&ids, &paraphrases);
        records.push(LabeledRecord {
            tokens: ids,
            counts,
        });
    }
    Ok(LabeledCorpus {
        records,
        n: n as u32,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Regression,
    Classification,
}

impl std::fmt::Display for ScorerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScorerKind::Regression => "regression",
            ScorerKind::Classification => "classification",
        })
    }
}

impl std::str::FromStr for ScorerKind {
    type Err = WisError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regression" => Ok(ScorerKind::Regression),
            "classification" => Ok(ScorerKind::Classification),
            other => Err(WisError::config(format!(
                "unknown scorer kind '{other}' (expected regression or classification)"
            ))),
        }
    }
}

mod hex_u64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v:016x}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<u64, D::Error> {
        let s = String::deserialize(d)?;
        u64::from_str_radix(s.trim_start_matches("0x"), 16).map_err(serde::de::Error::custom)
    }
}

/// Everything inference needs to rebuild the exact training-time features.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub embed_dim: usize,
    #[serde(with = "hex_u64")]
    pub embed_key: u64,
    pub window: usize,
    /// Relative-position denominator at inference (the intended generation
    /// length); during training the record's own length is used.
    pub horizon: usize,
    pub vocab_size: usize,
    pub idf: Vec<f64>,
    pub idf_default: f64,
}

/// A trained generalized linear scorer: score = sigmoid(weights · x + bias).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScorerModel {
    pub kind: ScorerKind,
    pub feature_spec: FeatureSpec,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub r0_default: f64,
}

impl ScorerModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json).map_err(|e| WisError::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| WisError::io(path.display().to_string(), e))?;
        Ok(serde_json::from_str(&s)?)
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainOpts {
    pub epochs: usize,
    pub learning_rate: f64,
    pub window: usize,
    pub horizon: usize,
    pub embed_dim: usize,
    pub embed_key: u64,
    pub r0_default: f64,
}

impl Default for TrainOpts {
    fn default() -> Self {
        TrainOpts {
            epochs: 300,
            learning_rate: 0.5,
            window: crate::scoring::DEFAULT_WINDOW,
            horizon: 100,
            embed_dim: crate::scoring::DEFAULT_FEATURE_EMBED_DIM,
            embed_key: crate::scoring::EMBED_KEY,
            r0_default: crate::scoring::DEFAULT_R0_REGRESSION,
        }
    }
}

/// Mean loss and its gradient at (weights, bias) over a feature matrix.
///
/// Regression: squared error on the sigmoid output,
///   d/dz (yhat - y)^2 = 2 (yhat - y) yhat (1 - yhat).
/// Classification: logistic loss, d/dz = yhat - y.
pub fn loss_and_grad(
    kind: ScorerKind,
    xs: &[Vec<f64>],
    ys: &[f64],
    weights: &[f64],
    bias: f64,
) -> (f64, Vec<f64>, f64) {
    assert_eq!(xs.len(), ys.len());
    let m = xs.len() as f64;
    let dim = weights.len();
    let mut loss = 0.0;
    let mut gw = vec![0.0; dim];
    let mut gb = 0.0;
    for (x, &y) in xs.iter().zip(ys.iter()) {
        let z: f64 = weights.iter().zip(x.iter()).map(|(w, xi)| w * xi).sum::<f64>() + bias;
        let yhat = sigmoid(z);
        let dz = match kind {
            ScorerKind::Regression => {
                loss += (yhat - y) * (yhat - y);
                2.0 * (yhat - y) * yhat * (1.0 - yhat)
            }
            ScorerKind::Classification => {
                let p = yhat.clamp(1e-12, 1.0 - 1e-12);
                loss += -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
                yhat - y
            }
        };
        for (g, xi) in gw.iter_mut().zip(x.iter()) {
            *g += dz * xi;
        }
        gb += dz;
    }
    loss /= m;
    for g in gw.iter_mut() {
        *g /= m;
    }
    gb /= m;
    (loss, gw, gb)
}

/// Feature matrix + labels for one labeled corpus and label kind.
pub fn training_set(
    labeled: &LabeledCorpus,
    kind: ScorerKind,
    emb: &HashedEmbedding,
    window: usize,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for record in &labeled.records {
        let t_total = record.tokens.len();
        for t in 0..t_total {
            let rel_pos = (t as f64 + 1.0) / t_total as f64;
            xs.push(scorer_features(
                emb,
                window,
                &record.tokens[..t],
                record.tokens[t],
                rel_pos,
            ));
            let y = match kind {
                ScorerKind::Regression => {
                    LabeledCorpus::regression_label(record.counts[t], labeled.n)
                }
                ScorerKind::Classification => LabeledCorpus::classification_label(record.counts[t]),
            };
            ys.push(y);
        }
    }
    (xs, ys)
}

/// Full-batch gradient descent from zero initialization. Deterministic:
/// features, labels, and update order are all fixed by the inputs.
pub fn train_scorer(
    labeled: &LabeledCorpus,
    kind: ScorerKind,
    idf: &IdfTable,
    vocab_size: usize,
    opts: &TrainOpts,
) -> Result<ScorerModel> {
    if labeled.records.is_empty() {
        return Err(WisError::config("labeled corpus has no records"));
    }
    let emb = HashedEmbedding::new(vocab_size, opts.embed_dim, opts.embed_key, idf.clone());
    let (xs, ys) = training_set(labeled, kind, &emb, opts.window);
    if xs.is_empty() {
        return Err(WisError::config("labeled corpus has no token positions"));
    }
    let dim = 2 * opts.embed_dim + 2;
    let mut weights = vec![0.0; dim];
    let mut bias = 0.0;
    for _ in 0..opts.epochs {
        let (_, gw, gb) = loss_and_grad(kind, &xs, &ys, &weights, bias);
        for (w, g) in weights.iter_mut().zip(gw.iter()) {
            *w -= opts.learning_rate * g;
        }
        bias -= opts.learning_rate * gb;
    }
    Ok(ScorerModel {
        kind,
        feature_spec: FeatureSpec {
            embed_dim: opts.embed_dim,
            embed_key: opts.embed_key,
            window: opts.window,
            horizon: opts.horizon,
            vocab_size,
            idf: idf.values().to_vec(),
            idf_default: idf.default_value(),
        },
        weights,
        bias,
        r0_default: opts.r0_default,
    })
}
