//! Logits providers and generation.
//!
//! The built-in language model is an add-k smoothed n-gram model: simple,
//! fully deterministic, and with full support over the vocabulary — every
//! token has nonzero probability in every context, which the watermark's
//! additive logit boost requires (a zero-probability greenlist token must be
//! promotable).
//!
//! Generation is deterministic beam search over transformed logits. The
//! transform hook (`LogitTransform`) is where the watermark plugs in; the
//! identity transform yields plain unwatermarked decoding. Ties are broken
//! explicitly (higher score, then lower token id, then lower beam index) so
//! the same inputs always produce byte-identical output. No length
//! normalization is applied; finished beams keep their accumulated score.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::text::{tokenize, Corpus, TokenSeq, Vocabulary};
use crate::{Result, WisError};

/// Per-candidate scores at one generation step, natural-log scale, one entry
/// per vocabulary id.
pub type LogitsVector = Vec<f64>;

/// Anything that can score next-token candidates for a prefix.
pub trait LogitsProvider {
    fn vocab_size(&self) -> usize;
    /// Logits for every vocabulary id given the prefix (full sequence so
    /// far; the provider decides how much context it uses).
    fn logits(&self, prefix: &[u32]) -> LogitsVector;
}

/// A per-step logit modification applied before normalization.
pub trait LogitTransform {
    fn transform(&self, prefix: &[u32], logits: &mut LogitsVector);
}

/// The no-op transform: plain unwatermarked decoding.
pub struct IdentityTransform;

impl LogitTransform for IdentityTransform {
    fn transform(&self, _prefix: &[u32], _logits: &mut LogitsVector) {}
}

/// Index of the maximal logit; ties break toward the lowest id.
pub fn argmax_token(logits: &[f64]) -> u32 {
    let mut best = 0usize;
    for i in 1..logits.len() {
        if logits[i] > logits[best] {
            best = i;
        }
    }
    best as u32
}

/// Numerically stable log(sum(exp(xs))), ignoring -inf entries (masked ids).
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs
        .iter()
        .copied()
        .filter(|x| x.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return f64::NEG_INFINITY;
    }
    let s: f64 = xs
        .iter()
        .filter(|x| x.is_finite())
        .map(|&x| (x - m).exp())
        .sum();
    m + s.ln()
}

/// softmax(logits), for tests and diagnostics. Masked (-inf) ids get 0.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(xs);
    xs.iter()
        .map(|&x| if x.is_finite() { (x - lse).exp() } else { 0.0 })
        .collect()
}

/// Counts for one observed context, with items sorted by token id.
#[derive(Debug, Clone)]
struct CtxCounts {
    total: u64,
    items: Vec<(u32, u32)>,
}

/// Add-k smoothed n-gram language model.
///
/// `order` is the n-gram order: each token is predicted from the previous
/// `order - 1` ids (BOS-padded at sequence start). Probabilities are
/// (count + k) / (total + k|V|), so unseen contexts fall back to uniform.
#[derive(Debug, Clone)]
pub struct NGramLM {
    order: usize,
    k: f64,
    vocab_size: usize,
    table: HashMap<Vec<u32>, CtxCounts>,
}

/// On-disk model layout: counts as (context ids, token id, count) triples in
/// sorted order, plus the path of the vocabulary file the ids refer to.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    order: usize,
    k: f64,
    vocab_file: String,
    counts: Vec<(Vec<u32>, u32, u32)>,
}

/// Count all order-grams of the BOS-padded, EOS-terminated tokenized corpus.
/// Only the `text` field of each document is trained on.
pub fn train_ngram(corpus: &Corpus, vocab: &Vocabulary, order: usize, k: f64) -> Result<NGramLM> {
    if corpus.is_empty() {
        return Err(WisError::EmptyCorpus);
    }
    if !(1..=5).contains(&order) {
        return Err(WisError::config("n-gram order must be in 1..=5"));
    }
    if k <= 0.0 || k.is_nan() {
        return Err(WisError::config("smoothing constant k must be > 0"));
    }
    let ctx_len = order - 1;
    let mut raw: HashMap<Vec<u32>, HashMap<u32, u32>> = HashMap::new();
    for doc in &corpus.docs {
        let mut seq = vec![Vocabulary::BOS; ctx_len];
        seq.extend_from_slice(&tokenize(&doc.text, vocab).ids);
        seq.push(Vocabulary::EOS);
        for t in ctx_len..seq.len() {
            let ctx = seq[t - ctx_len..t].to_vec();
            *raw.entry(ctx).or_default().entry(seq[t]).or_insert(0) += 1;
        }
    }
    let table = raw
        .into_iter()
        .map(|(ctx, m)| {
            let mut items: Vec<(u32, u32)> = m.into_iter().collect();
            items.sort_unstable();
            let total = items.iter().map(|&(_, c)| c as u64).sum();
            (ctx, CtxCounts { total, items })
        })
        .collect();
    Ok(NGramLM {
        order,
        k,
        vocab_size: vocab.size(),
        table,
    })
}

impl NGramLM {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// The conditioning context for a prefix: its last `order - 1` ids,
    /// BOS-padded on the left when the prefix is shorter than that.
    pub fn context_of(&self, prefix: &[u32]) -> Vec<u32> {
        let c = self.order - 1;
        let mut ctx = Vec::with_capacity(c);
        if prefix.len() < c {
            ctx.resize(c - prefix.len(), Vocabulary::BOS);
        }
        let start = prefix.len().saturating_sub(c);
        ctx.extend_from_slice(&prefix[start..]);
        ctx
    }

    /// Raw count of (context, token), mostly for tests and diagnostics.
    pub fn count(&self, ctx: &[u32], token: u32) -> u32 {
        self.table
            .get(ctx)
            .and_then(|c| {
                c.items
                    .binary_search_by_key(&token, |&(t, _)| t)
                    .ok()
                    .map(|i| c.items[i].1)
            })
            .unwrap_or(0)
    }

    /// Serialize next to its vocabulary: the model JSON stores `vocab_file`
    /// (kept as given; relative paths resolve against the model's directory
    /// at load time).
    pub fn save(&self, path: &Path, vocab_file: &str) -> Result<()> {
        let mut counts: Vec<(Vec<u32>, u32, u32)> = Vec::new();
        let mut ctxs: Vec<&Vec<u32>> = self.table.keys().collect();
        ctxs.sort();
        for ctx in ctxs {
            for &(tok, count) in &self.table[ctx].items {
                counts.push((ctx.clone(), tok, count));
            }
        }
        let file = ModelFile {
            order: self.order,
            k: self.k,
            vocab_file: vocab_file.to_string(),
            counts,
        };
        let json = serde_json::to_string(&file)?;
        std::fs::write(path, json).map_err(|e| WisError::io(path.display().to_string(), e))
    }

    /// Load a model and its vocabulary.
    pub fn load(path: &Path) -> Result<(NGramLM, Vocabulary)> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| WisError::io(path.display().to_string(), e))?;
        let file: ModelFile = serde_json::from_str(&s)?;
        if !(1..=5).contains(&file.order) {
            return Err(WisError::config("model order must be in 1..=5"));
        }
        if file.k <= 0.0 || file.k.is_nan() {
            return Err(WisError::config("model smoothing constant k must be > 0"));
        }
        let vocab_path = {
            let p = Path::new(&file.vocab_file);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                path.parent().unwrap_or(Path::new(".")).join(p)
            }
        };
        let vocab = Vocabulary::load(&vocab_path)?;
        let ctx_len = file.order - 1;
        let mut raw: HashMap<Vec<u32>, Vec<(u32, u32)>> = HashMap::new();
        for (ctx, tok, count) in file.counts {
            if ctx.len() != ctx_len {
                return Err(WisError::config(format!(
                    "count entry has context length {}, expected {ctx_len}",
                    ctx.len()
                )));
            }
            for &id in ctx.iter().chain([&tok]) {
                if id as usize >= vocab.size() {
                    return Err(WisError::IdOutOfRange {
                        id,
                        size: vocab.size(),
                    });
                }
            }
            if count == 0 {
                return Err(WisError::config("count entries must be >= 1"));
            }
            raw.entry(ctx).or_default().push((tok, count));
        }
        let table = raw
            .into_iter()
            .map(|(ctx, mut items)| {
                items.sort_unstable();
                let total = items.iter().map(|&(_, c)| c as u64).sum();
                (ctx, CtxCounts { total, items })
            })
            .collect();
        Ok((
            NGramLM {
                order: file.order,
                k: file.k,
                vocab_size: vocab.size(),
                table,
            },
            vocab,
        ))
    }
}

impl LogitsProvider for NGramLM {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// values[i] = ln(count(ctx, i) + k) - ln(total(ctx) + k|V|), so softmax
    /// of the returned vector is exactly the add-k probability distribution.
    fn logits(&self, prefix: &[u32]) -> LogitsVector {
        let ctx = self.context_of(prefix);
        let v = self.vocab_size as f64;
        match self.table.get(&ctx) {
            None => {
                // Unseen context: uniform.
                vec![-v.ln(); self.vocab_size]
            }
            Some(c) => {
                let denom_ln = (c.total as f64 + self.k * v).ln();
                let floor = self.k.ln() - denom_ln;
                let mut out = vec![floor; self.vocab_size];
                for &(tok, count) in &c.items {
                    out[tok as usize] = (count as f64 + self.k).ln() - denom_ln;
                }
                out
            }
        }
    }
}

/// Beam search settings.
///
/// `min_tokens` masks EOS until that many tokens have been generated; set it
/// equal to `max_len` for fixed-length generation (the benchmark protocol).
/// BOS and UNK are never candidates.
#[derive(Debug, Clone)]
pub struct BeamParams {
    pub beam_width: usize,
    pub max_len: usize,
    pub min_tokens: usize,
}

impl Default for BeamParams {
    fn default() -> Self {
        BeamParams {
            beam_width: 2,
            max_len: 100,
            min_tokens: 0,
        }
    }
}

struct Beam {
    ids: Vec<u32>,
    score: f64,
    finished: bool,
}

/// Marker for "carry a finished beam forward" in the candidate pool; sorts
/// after every real token id on score ties.
const CARRY: u32 = u32::MAX;

/// Deterministic beam search over transformed logits.
///
/// At each step every live beam's logits are produced by `provider`, passed
/// through `transform`, masked (BOS/UNK always; EOS while under
/// `min_tokens`), and normalized; candidates across beams are ranked by
/// cumulative log-probability with ties broken by lower token id, then lower
/// beam index. A beam finishes when it selects EOS (EOS is not emitted into
/// the output ids) or when `max_len` tokens have been generated. Finished
/// beams keep their score and are carried forward. The returned sequence is
/// prompt + generated ids with `prefix_len` marking the boundary.
pub fn beam_generate(
    provider: &dyn LogitsProvider,
    transform: &dyn LogitTransform,
    prompt: &[u32],
    params: &BeamParams,
) -> TokenSeq {
    assert!(params.beam_width >= 1, "beam_width must be >= 1");
    assert!(
        provider.vocab_size() > Vocabulary::UNK as usize + 1,
        "vocabulary must contain at least one non-reserved token"
    );
    let mut beams = vec![Beam {
        ids: Vec::new(),
        score: 0.0,
        finished: false,
    }];
    for _ in 0..params.max_len {
        if beams.iter().all(|b| b.finished) {
            break;
        }
        // (cumulative score, token id, beam index)
        let mut cands: Vec<(f64, u32, usize)> = Vec::new();
        for (bi, beam) in beams.iter().enumerate() {
            if beam.finished {
                cands.push((beam.score, CARRY, bi));
                continue;
            }
            let mut prefix = Vec::with_capacity(prompt.len() + beam.ids.len());
            prefix.extend_from_slice(prompt);
            prefix.extend_from_slice(&beam.ids);
            let mut logits = provider.logits(&prefix);
            transform.transform(&prefix, &mut logits);
            logits[Vocabulary::BOS as usize] = f64::NEG_INFINITY;
            logits[Vocabulary::UNK as usize] = f64::NEG_INFINITY;
            if beam.ids.len() < params.min_tokens {
                logits[Vocabulary::EOS as usize] = f64::NEG_INFINITY;
            }
            let lse = log_sum_exp(&logits);
            for (id, &x) in logits.iter().enumerate() {
                if x.is_finite() {
                    cands.push((beam.score + (x - lse), id as u32, bi));
                }
            }
        }
        cands.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .expect("logits must be NaN-free")
                .then_with(|| a.1.cmp(&b.1))
                .then_with(|| a.2.cmp(&b.2))
        });
        cands.truncate(params.beam_width);
        beams = cands
            .into_iter()
            .map(|(score, tok, bi)| {
                if tok == CARRY || tok == Vocabulary::EOS {
                    Beam {
                        ids: beams[bi].ids.clone(),
                        score,
                        finished: true,
                    }
                } else {
                    let mut ids = beams[bi].ids.clone();
                    ids.push(tok);
                    Beam {
                        ids,
                        score,
                        finished: false,
                    }
                }
            })
            .collect();
    }
    // Beams emerge from selection already ordered best-first under the
    // (score, token, beam-index) rule.
    let best = beams.into_iter().next().expect("at least one beam");
    let mut ids = prompt.to_vec();
    ids.extend_from_slice(&best.ids);
    TokenSeq::with_prefix(ids, prompt.len())
}
