//! Importance scoring: f(prefix, candidate) -> [0, 1].
//!
//! Three scorer families share the [`ImportanceScorer`] trait:
//!
//! * [`PerturbationScorer`] — training-free: how much does appending the
//!   candidate move the prefix embedding? Scored as 1 - cosine between the
//!   prefix embedding and the extended-prefix embedding, clamped to [0, 1],
//!   so 0 means "no semantic change" and 1 means "maximal change". A
//!   raw-cosine variant is available for comparison experiments.
//! * [`ModelScorer`] — inference over a trained generalized linear model
//!   (see the labeling module for training); predicts the paraphrase-count
//!   label via a sigmoid.
//! * [`WindowedScorer`] — wraps any scorer, truncating the prefix to its
//!   last `window` tokens before scoring.
//!
//! Embeddings are deterministic hashed token vectors (entries ±1/sqrt(d)
//! from a keyed PRF) combined by IDF-weighted mean, so content words move a
//! sequence embedding more than stopwords — the property perturbation
//! scoring relies on.

use crate::labeling::ScorerModel;
use crate::prf::{absorb, mix64, SplitMix64};
use crate::text::{surface_tokens, Corpus, Vocabulary};
use crate::{Result, WisError};

/// Default importance thresholds per scorer family.
pub const DEFAULT_R0_PERTURBATION: f64 = 0.02;
pub const DEFAULT_R0_REGRESSION: f64 = 0.9;
pub const DEFAULT_R0_CLASSIFICATION: f64 = 0.5;

/// Default sliding-window width for scoring prefixes.
pub const DEFAULT_WINDOW: usize = 16;

/// Default hashed-embedding dimensions: perturbation scoring / scorer-model
/// features.
pub const DEFAULT_EMBED_DIM: usize = 256;
pub const DEFAULT_FEATURE_EMBED_DIM: usize = 64;

/// Fixed public key for hashed embeddings. Embeddings are not secret — only
/// the greenlist key is — and a fixed key keeps scores stable across
/// processes.
pub const EMBED_KEY: u64 = 0x7769_735f_656d_6264; // "wis_emb"

/// phi: token sequence -> R^d, deterministic.
pub trait EmbeddingProvider {
    fn dim(&self) -> usize;
    fn embed(&self, seq: &[u32]) -> Vec<f64>;
}

/// Inverse document frequency per token id, from document-level presence
/// counts: idf = ln((1 + m) / (1 + df)) + 1 over m documents. Ids beyond the
/// table (or never seen) get the df = 0 value.
#[derive(Debug, Clone)]
pub struct IdfTable {
    values: Vec<f64>,
    default: f64,
}

impl IdfTable {
    pub fn from_corpus(corpus: &Corpus, vocab: &Vocabulary) -> Self {
        let m = corpus.docs.len();
        let mut df = vec![0u64; vocab.size()];
        let mut seen = vec![usize::MAX; vocab.size()];
        for (doc_idx, doc) in corpus.docs.iter().enumerate() {
            for tok in surface_tokens(&doc.text) {
                if let Some(id) = vocab.id_of(&tok) {
                    if seen[id as usize] != doc_idx {
                        seen[id as usize] = doc_idx;
                        df[id as usize] += 1;
                    }
                }
            }
        }
        let idf = |d: u64| ((1.0 + m as f64) / (1.0 + d as f64)).ln() + 1.0;
        IdfTable {
            values: df.into_iter().map(idf).collect(),
            default: idf(0),
        }
    }

    /// All weights 1 (plain mean embedding).
    pub fn uniform(vocab_size: usize) -> Self {
        IdfTable {
            values: vec![1.0; vocab_size],
            default: 1.0,
        }
    }

    pub fn from_values(values: Vec<f64>, default: f64) -> Self {
        IdfTable { values, default }
    }

    #[inline]
    pub fn get(&self, id: u32) -> f64 {
        self.values.get(id as usize).copied().unwrap_or(self.default)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn default_value(&self) -> f64 {
        self.default
    }
}

/// Deterministic hashed token embeddings with IDF-weighted mean pooling.
#[derive(Debug, Clone)]
pub struct HashedEmbedding {
    d: usize,
    idf: IdfTable,
    vecs: Vec<Vec<f64>>,
}

impl HashedEmbedding {
    /// Precomputes one ±1/sqrt(d) vector per vocabulary id from the keyed
    /// PRF, so lookups on the generation hot path are table reads.
    pub fn new(vocab_size: usize, d: usize, key: u64, idf: IdfTable) -> Self {
        assert!(d >= 1);
        let scale = 1.0 / (d as f64).sqrt();
        let vecs = (0..vocab_size)
            .map(|id| {
                let mut rng = SplitMix64::new(absorb(mix64(key), id as u64 + 1));
                let mut v = Vec::with_capacity(d);
                while v.len() < d {
                    let word = rng.next_u64();
                    for b in 0..64 {
                        if v.len() == d {
                            break;
                        }
                        v.push(if (word >> b) & 1 == 1 { scale } else { -scale });
                    }
                }
                v
            })
            .collect();
        HashedEmbedding { d, idf, vecs }
    }

    pub fn token_vec(&self, id: u32) -> &[f64] {
        &self.vecs[id as usize]
    }

    pub fn idf(&self) -> &IdfTable {
        &self.idf
    }
}

impl EmbeddingProvider for HashedEmbedding {
    fn dim(&self) -> usize {
        self.d
    }

    /// IDF-weighted mean of token vectors; the zero vector for an empty
    /// sequence.
    fn embed(&self, seq: &[u32]) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        let mut weight_sum = 0.0;
        for &id in seq {
            let w = self.idf.get(id);
            weight_sum += w;
            for (o, x) in out.iter_mut().zip(self.vecs[id as usize].iter()) {
                *o += w * x;
            }
        }
        if weight_sum > 0.0 {
            for o in out.iter_mut() {
                *o /= weight_sum;
            }
        }
        out
    }
}

/// Cosine similarity; 0 when either vector has zero norm (degenerate input).
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Importance scoring interface: deterministic, output in [0, 1].
pub trait ImportanceScorer {
    fn score(&self, prefix: &[u32], candidate: u32) -> f64;
}

impl<S: ImportanceScorer + ?Sized> ImportanceScorer for &S {
    fn score(&self, prefix: &[u32], candidate: u32) -> f64 {
        (**self).score(prefix, candidate)
    }
}

impl<S: ImportanceScorer + ?Sized> ImportanceScorer for Box<S> {
    fn score(&self, prefix: &[u32], candidate: u32) -> f64 {
        (**self).score(prefix, candidate)
    }
}

/// Embedding-perturbation importance: how much does appending the candidate
/// change the prefix embedding?
pub struct PerturbationScorer<E: EmbeddingProvider> {
    emb: E,
    raw_cosine: bool,
}

impl<E: EmbeddingProvider> PerturbationScorer<E> {
    pub fn new(emb: E) -> Self {
        PerturbationScorer {
            emb,
            raw_cosine: false,
        }
    }

    /// Alternative sign convention: score = cosine itself (clamped to
    /// [0, 1]), i.e. high means "the embedding barely moved". Provided for
    /// comparison runs; the default dissimilarity reading is what makes a
    /// small threshold like r0 = 0.02 meaningful.
    pub fn with_raw_cosine(emb: E) -> Self {
        PerturbationScorer {
            emb,
            raw_cosine: true,
        }
    }

    pub fn embedding(&self) -> &E {
        &self.emb
    }
}

impl<E: EmbeddingProvider> ImportanceScorer for PerturbationScorer<E> {
    fn score(&self, prefix: &[u32], candidate: u32) -> f64 {
        if prefix.is_empty() && !self.raw_cosine {
            // No prefix to compare against: maximal change by convention.
            return 1.0;
        }
        let before = self.emb.embed(prefix);
        let mut extended = Vec::with_capacity(prefix.len() + 1);
        extended.extend_from_slice(prefix);
        extended.push(candidate);
        let after = self.emb.embed(&extended);
        let c = cosine(&before, &after);
        if self.raw_cosine {
            c.clamp(0.0, 1.0)
        } else {
            (1.0 - c).clamp(0.0, 1.0)
        }
    }
}

/// Truncate the prefix to its last `window` tokens before scoring.
pub struct WindowedScorer<S> {
    pub inner: S,
    pub window: usize,
}

impl<S: ImportanceScorer> WindowedScorer<S> {
    pub fn new(inner: S, window: usize) -> Self {
        assert!(window >= 1, "window must be >= 1");
        WindowedScorer { inner, window }
    }
}

impl<S: ImportanceScorer> ImportanceScorer for WindowedScorer<S> {
    fn score(&self, prefix: &[u32], candidate: u32) -> f64 {
        let start = prefix.len().saturating_sub(self.window);
        self.inner.score(&prefix[start..], candidate)
    }
}

/// Score position `t` (0-indexed) of a sequence with a `w`-token window:
/// f([s_{t-w} .. s_{t-1}], s_t), clipped at the sequence start.
pub fn windowed_score(f: &dyn ImportanceScorer, s: &[u32], t: usize, w: usize) -> f64 {
    assert!(t < s.len(), "position out of range");
    assert!(w >= 1, "window must be >= 1");
    let start = t.saturating_sub(w);
    f.score(&s[start..t], s[t])
}

/// The importance gate: f(prefix, candidate) >= r0.
pub fn important(f: &dyn ImportanceScorer, prefix: &[u32], candidate: u32, r0: f64) -> bool {
    f.score(prefix, candidate) >= r0
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Feature vector for the trained scorer models, shared verbatim between
/// training and inference: candidate token embedding, IDF-weighted mean
/// embedding of the last `window` prefix ids, the candidate's IDF, and the
/// relative position. Length 2·dim + 2.
pub fn scorer_features(
    emb: &HashedEmbedding,
    window: usize,
    prefix: &[u32],
    candidate: u32,
    rel_pos: f64,
) -> Vec<f64> {
    let d = emb.dim();
    let mut x = Vec::with_capacity(2 * d + 2);
    x.extend_from_slice(emb.token_vec(candidate));
    let start = prefix.len().saturating_sub(window);
    x.extend_from_slice(&emb.embed(&prefix[start..]));
    x.push(emb.idf().get(candidate));
    x.push(rel_pos);
    x
}

/// Inference wrapper for a trained [`ScorerModel`]: score = sigmoid(w·x + b),
/// the predicted paraphrase-survival probability (classification) or
/// sigmoid-bounded predicted count fraction (regression).
pub struct ModelScorer {
    model: ScorerModel,
    emb: HashedEmbedding,
}

impl ModelScorer {
    pub fn new(model: ScorerModel) -> Result<Self> {
        let spec = &model.feature_spec;
        let expected = 2 * spec.embed_dim + 2;
        if model.weights.len() != expected {
            return Err(WisError::config(format!(
                "scorer model has {} weights, feature spec implies {expected}",
                model.weights.len()
            )));
        }
        if spec.idf.len() != spec.vocab_size {
            return Err(WisError::config(
                "scorer model idf table length does not match vocab_size",
            ));
        }
        let idf = IdfTable::from_values(spec.idf.clone(), spec.idf_default);
        let emb = HashedEmbedding::new(spec.vocab_size, spec.embed_dim, spec.embed_key, idf);
        Ok(ModelScorer { model, emb })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::new(ScorerModel::load(path)?)
    }

    pub fn model(&self) -> &ScorerModel {
        &self.model
    }
}

impl ImportanceScorer for ModelScorer {
    fn score(&self, prefix: &[u32], candidate: u32) -> f64 {
        let spec = &self.model.feature_spec;
        // Mid-generation the final length is unknown; the spec's horizon
        // (the intended generation length) stands in for it.
        let rel_pos = ((prefix.len() as f64 + 1.0) / spec.horizon.max(1) as f64).min(1.0);
        let x = scorer_features(&self.emb, spec.window, prefix, candidate, rel_pos);
        let z: f64 = self
            .model
            .weights
            .iter()
            .zip(x.iter())
            .map(|(w, xi)| w * xi)
            .sum::<f64>()
            + self.model.bias;
        sigmoid(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::{FeatureSpec, ScorerKind};
    use crate::text::{build_vocab, Document};

    struct ConstEmb(Vec<f64>);
    impl EmbeddingProvider for ConstEmb {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn embed(&self, _seq: &[u32]) -> Vec<f64> {
            self.0.clone()
        }
    }

    fn test_embedding(vocab_size: usize, d: usize) -> HashedEmbedding {
        HashedEmbedding::new(vocab_size, d, EMBED_KEY, IdfTable::uniform(vocab_size))
    }

    #[test]
    fn cosine_basics() {
        assert!((cosine(&[1.0, 0.0], &[0.0, 1.0])).abs() < 1e-12);
        assert!((cosine(&[2.0, 0.0], &[5.0, 0.0]) - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn constant_embedding_scores_zero() {
        let s = PerturbationScorer::new(ConstEmb(vec![0.3, -0.7, 0.1]));
        for cand in 0..10 {
            // Parallel means and new-mean are identical up to rounding.
            assert!(s.score(&[1, 2, 3], cand) < 1e-12);
        }
    }

    #[test]
    fn empty_prefix_is_maximal_change() {
        let s = PerturbationScorer::new(test_embedding(16, 64));
        assert_eq!(s.score(&[], 5), 1.0);
    }

    #[test]
    fn repeating_the_dominant_token_scores_zero() {
        // Prefix of ten copies of one token; appending the same token leaves
        // the (weighted mean) embedding identical.
        let emb = test_embedding(16, 64);
        let s = PerturbationScorer::new(emb);
        let prefix = vec![7u32; 10];
        assert!(s.score(&prefix, 7) < 1e-12);
    }

    #[test]
    fn perturbation_matches_hand_rolled_cosine() {
        let d = 256;
        let vocab_size = 64;
        let emb = test_embedding(vocab_size, d);
        let prefix: Vec<u32> = vec![3, 9, 14, 27, 3, 41, 8, 30, 12, 5];
        let cand = 33u32;

        // Independent computation from the raw token vectors.
        let mean = |ids: &[u32]| -> Vec<f64> {
            let mut v = vec![0.0; d];
            for &id in ids {
                for (o, x) in v.iter_mut().zip(emb.token_vec(id)) {
                    *o += x;
                }
            }
            for o in v.iter_mut() {
                *o /= ids.len() as f64;
            }
            v
        };
        let e1 = mean(&prefix);
        let mut ext = prefix.clone();
        ext.push(cand);
        let e2 = mean(&ext);
        let dot: f64 = e1.iter().zip(&e2).map(|(a, b)| a * b).sum();
        let n1: f64 = e1.iter().map(|a| a * a).sum::<f64>().sqrt();
        let n2: f64 = e2.iter().map(|a| a * a).sum::<f64>().sqrt();
        let expected = (1.0 - dot / (n1 * n2)).clamp(0.0, 1.0);

        let s = PerturbationScorer::new(emb);
        assert!((s.score(&prefix, cand) - expected).abs() < 1e-12);
    }

    #[test]
    fn scores_stay_in_unit_interval() {
        let emb = test_embedding(32, 64);
        let s = PerturbationScorer::new(emb);
        let mut rng = crate::prf::SplitMix64::new(400);
        for _ in 0..500 {
            let len = rng.next_range(12);
            let prefix: Vec<u32> = (0..len).map(|_| rng.next_range(32) as u32).collect();
            let v = s.score(&prefix, rng.next_range(32) as u32);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn windowed_scoring_matches_direct_recomputation() {
        let emb = test_embedding(48, 64);
        let s = PerturbationScorer::new(emb);
        let mut rng = crate::prf::SplitMix64::new(97);
        let seq: Vec<u32> = (0..30).map(|_| rng.next_range(48) as u32).collect();
        for t in 1..seq.len() {
            for w in [1, 10, 16, 64] {
                let got = windowed_score(&s, &seq, t, w);
                let start = t.saturating_sub(w);
                let expected = s.score(&seq[start..t], seq[t]);
                assert_eq!(got, expected);
                if w >= t {
                    assert_eq!(got, s.score(&seq[..t], seq[t]), "w >= t is full prefix");
                }
            }
            // w=1: the prefix is exactly the single preceding token.
            assert_eq!(windowed_score(&s, &seq, t, 1), s.score(&seq[t - 1..t], seq[t]));
        }
        // The wrapper type agrees with the positional helper.
        let emb2 = test_embedding(48, 64);
        let wrapped = WindowedScorer::new(PerturbationScorer::new(emb2), 10);
        for t in 1..seq.len() {
            assert_eq!(wrapped.score(&seq[..t], seq[t]), windowed_score(&s, &seq, t, 10));
        }
    }

    #[test]
    fn importance_gate_shrinks_as_threshold_grows() {
        let corpus = Corpus {
            docs: vec![Document {
                text: "the station crew recorded a sharp rise in pressure near the ridge \
                       and the survey team confirmed a gradual drop during the evening sweep"
                    .to_string(),
                reference: None,
            }],
        };
        let vocab = build_vocab(&corpus, 64).unwrap();
        let idf = IdfTable::from_corpus(&corpus, &vocab);
        let emb = HashedEmbedding::new(vocab.size(), 256, EMBED_KEY, idf);
        let s = PerturbationScorer::new(emb);
        let seq = crate::text::tokenize(
            "the survey team confirmed a gradual drop during the evening sweep near the ridge",
            &vocab,
        )
        .ids;
        let mut previous = usize::MAX;
        for r0 in [0.0, 0.02, 0.1, 0.5] {
            let fired = (1..seq.len())
                .filter(|&t| important(&s, &seq[..t], seq[t], r0))
                .count();
            assert!(fired <= previous, "gate grew as r0 rose to {r0}");
            previous = fired;
        }
        // r0 = 0 fires everywhere.
        assert!(previous < seq.len());
        let all = (1..seq.len())
            .filter(|&t| important(&s, &seq[..t], seq[t], 0.0))
            .count();
        assert_eq!(all, seq.len() - 1);
    }

    #[test]
    fn idf_prefers_rare_tokens() {
        let docs = ["the cat", "the dog", "the fox jumped"];
        let corpus = Corpus {
            docs: docs
                .iter()
                .map(|t| Document {
                    text: t.to_string(),
                    reference: None,
                })
                .collect(),
        };
        let vocab = build_vocab(&corpus, 32).unwrap();
        let idf = IdfTable::from_corpus(&corpus, &vocab);
        let the = vocab.id_of("the").unwrap();
        let fox = vocab.id_of("fox").unwrap();
        // the: df=3 -> ln(4/4)+1 = 1; fox: df=1 -> ln(4/2)+1.
        assert!((idf.get(the) - 1.0).abs() < 1e-12);
        assert!((idf.get(fox) - (2.0f64.ln() + 1.0)).abs() < 1e-12);
        assert!(idf.get(fox) > idf.get(the));
        // Unseen id falls back to the df=0 default.
        assert!((idf.get(9999) - (4.0f64.ln() + 1.0)).abs() < 1e-12);
    }

    fn toy_model(weights: Vec<f64>, bias: f64, embed_dim: usize, vocab_size: usize) -> ScorerModel {
        ScorerModel {
            kind: ScorerKind::Regression,
            feature_spec: FeatureSpec {
                embed_dim,
                embed_key: EMBED_KEY,
                window: 16,
                horizon: 100,
                vocab_size,
                idf: vec![1.0; vocab_size],
                idf_default: 1.0,
            },
            weights,
            bias,
            r0_default: DEFAULT_R0_REGRESSION,
        }
    }

    #[test]
    fn zero_weight_model_scores_half() {
        let d = 8;
        let model = toy_model(vec![0.0; 2 * d + 2], 0.0, d, 16);
        let s = ModelScorer::new(model).unwrap();
        for cand in 0..16 {
            assert_eq!(s.score(&[1, 2, 3], cand), 0.5);
        }
    }

    #[test]
    fn model_scorer_matches_dot_product_oracle() {
        let d = 16;
        let vocab_size = 40;
        let mut rng = crate::prf::SplitMix64::new(88);
        let weights: Vec<f64> = (0..2 * d + 2).map(|_| rng.next_f64() * 2.0 - 1.0).collect();
        let bias = 0.37;
        let model = toy_model(weights.clone(), bias, d, vocab_size);
        let s = ModelScorer::new(model).unwrap();
        let emb = HashedEmbedding::new(vocab_size, d, EMBED_KEY, IdfTable::uniform(vocab_size));
        for _ in 0..1000 {
            let len = rng.next_range(20);
            let prefix: Vec<u32> = (0..len).map(|_| rng.next_range(vocab_size) as u32).collect();
            let cand = rng.next_range(vocab_size) as u32;
            let rel = ((prefix.len() as f64 + 1.0) / 100.0).min(1.0);
            let x = scorer_features(&emb, 16, &prefix, cand, rel);
            let z: f64 = weights.iter().zip(&x).map(|(w, xi)| w * xi).sum::<f64>() + bias;
            let expected = sigmoid(z);
            assert!((s.score(&prefix, cand) - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn model_scorer_rejects_malformed_models() {
        let model = toy_model(vec![0.0; 5], 0.0, 8, 16);
        assert!(ModelScorer::new(model).is_err());
    }

    #[test]
    fn embeddings_are_stable_across_construction() {
        let a = test_embedding(32, 64);
        let b = test_embedding(32, 64);
        for id in 0..32u32 {
            assert_eq!(a.token_vec(id), b.token_vec(id));
        }
        assert_eq!(a.embed(&[1, 5, 9]), b.embed(&[1, 5, 9]));
    }
}
