//! Word-level tokenization, vocabulary construction, and corpus I/O.
//!
//! The tokenizer is deliberately simple: lowercase, split on whitespace,
//! split punctuation off as single-character tokens. Word-level (rather than
//! subword) tokens keep paraphrase-appearance counting well defined: "the
//! same token appears in a paraphrase" is an exact id match.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Result, WisError};

/// Bidirectional token-string <-> token-id map with three reserved ids.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub const BOS: u32 = 0;
    pub const EOS: u32 = 1;
    pub const UNK: u32 = 2;

    /// Surface forms for the reserved ids. Angle brackets tokenize as
    /// punctuation, so no real corpus token can collide with these.
    pub const RESERVED: [&'static str; 3] = ["<bos>", "<eos>", "<unk>"];

    fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary { tokens, index }
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_reserved(id: u32) -> bool {
        id <= Self::UNK
    }

    pub fn token(&self, id: u32) -> Result<&str> {
        self.tokens
            .get(id as usize)
            .map(String::as_str)
            .ok_or(WisError::IdOutOfRange {
                id,
                size: self.tokens.len(),
            })
    }

    pub fn id_of(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    /// Id for a surface token, falling back to UNK.
    pub fn id_or_unk(&self, token: &str) -> u32 {
        self.id_of(token).unwrap_or(Self::UNK)
    }

    /// One token per line; the line number is the id.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for t in &self.tokens {
            let _ = writeln!(out, "{t}");
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_file_string())
            .map_err(|e| WisError::io(path.display().to_string(), e))
    }

    pub fn from_file_string(s: &str) -> Result<Self> {
        let tokens: Vec<String> = s.lines().map(|l| l.to_string()).collect();
        if tokens.len() < 3 || tokens[..3] != Self::RESERVED {
            return Err(WisError::config(
                "vocabulary file must start with the reserved tokens <bos>, <eos>, <unk>",
            ));
        }
        Ok(Vocabulary::from_tokens(tokens))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| WisError::io(path.display().to_string(), e))?;
        Self::from_file_string(&s)
    }
}

/// A token-id sequence with a marked prompt boundary.
///
/// Positions `0..prefix_len` are prompt/context; positions `prefix_len..`
/// are the scored (generated) region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSeq {
    pub ids: Vec<u32>,
    pub prefix_len: usize,
}

impl TokenSeq {
    pub fn new(ids: Vec<u32>) -> Self {
        TokenSeq { ids, prefix_len: 0 }
    }

    pub fn with_prefix(ids: Vec<u32>, prefix_len: usize) -> Self {
        assert!(prefix_len <= ids.len(), "prefix_len exceeds sequence length");
        TokenSeq { ids, prefix_len }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Number of scored (non-prompt) tokens.
    pub fn generated_len(&self) -> usize {
        self.ids.len() - self.prefix_len
    }

    /// The scored region.
    pub fn generated(&self) -> &[u32] {
        &self.ids[self.prefix_len..]
    }
}

/// One raw corpus record: a text, optionally paired with a reference text
/// used for quality scoring.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
}

/// A list of raw text records.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub docs: Vec<Document>,
}

impl Corpus {
    /// Parse JSONL: one {"text": ..., "reference": ...} object per line.
    /// Blank lines are skipped; malformed lines are reported with their
    /// 1-based line number.
    pub fn from_jsonl_str(s: &str) -> Result<Self> {
        let mut docs = Vec::new();
        for (i, line) in s.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let doc: Document = serde_json::from_str(line).map_err(|e| WisError::Malformed {
                line: i + 1,
                msg: e.to_string(),
            })?;
            docs.push(doc);
        }
        Ok(Corpus { docs })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| WisError::io(path.display().to_string(), e))?;
        Self::from_jsonl_str(&s)
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\''
}

/// Split a text into lowercased surface tokens: maximal alphanumeric (plus
/// apostrophe) runs, and every other non-whitespace character as its own
/// single-character token.
pub fn surface_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for c in text.chars() {
        if is_word_char(c) {
            word.extend(c.to_lowercase());
        } else {
            if !word.is_empty() {
                out.push(std::mem::take(&mut word));
            }
            if !c.is_whitespace() {
                out.push(c.to_string());
            }
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

/// Build a vocabulary from the corpus: the three reserved tokens plus up to
/// `max_size - 3` most frequent surface tokens (both text and reference
/// fields count). Frequency ties break lexicographically.
pub fn build_vocab(corpus: &Corpus, max_size: usize) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(WisError::EmptyCorpus);
    }
    if max_size < 4 {
        return Err(WisError::config("vocabulary max_size must be at least 4"));
    }
    let mut freq: HashMap<String, u64> = HashMap::new();
    for doc in &corpus.docs {
        for tok in surface_tokens(&doc.text) {
            *freq.entry(tok).or_insert(0) += 1;
        }
        if let Some(r) = &doc.reference {
            for tok in surface_tokens(r) {
                *freq.entry(tok).or_insert(0) += 1;
            }
        }
    }
    let mut entries: Vec<(String, u64)> = freq.into_iter().collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    entries.truncate(max_size - 3);

    let mut tokens: Vec<String> = Vocabulary::RESERVED.iter().map(|s| s.to_string()).collect();
    tokens.extend(entries.into_iter().map(|(t, _)| t));
    Ok(Vocabulary::from_tokens(tokens))
}

/// Tokenize a text against a vocabulary. Out-of-vocabulary surface forms map
/// to UNK; no BOS/EOS are inserted.
pub fn tokenize(text: &str, vocab: &Vocabulary) -> TokenSeq {
    let ids = surface_tokens(text)
        .iter()
        .map(|t| vocab.id_or_unk(t))
        .collect();
    TokenSeq::new(ids)
}

/// Space-join token strings, omitting reserved ids. Errors on invalid ids.
pub fn detokenize(ids: &[u32], vocab: &Vocabulary) -> Result<String> {
    let mut parts = Vec::with_capacity(ids.len());
    for &id in ids {
        let tok = vocab.token(id)?;
        if !Vocabulary::is_reserved(id) {
            parts.push(tok);
        }
    }
    Ok(parts.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prf::SplitMix64;

    fn corpus_of(texts: &[&str]) -> Corpus {
        Corpus {
            docs: texts
                .iter()
                .map(|t| Document {
                    text: t.to_string(),
                    reference: None,
                })
                .collect(),
        }
    }

    #[test]
    fn surface_tokens_lowercase_and_split_punctuation() {
        assert_eq!(
            surface_tokens("The crew, it's FINE."),
            vec!["the", "crew", ",", "it's", "fine", "."]
        );
        assert_eq!(surface_tokens(""), Vec::<String>::new());
        assert_eq!(surface_tokens("  a\tb\n"), vec!["a", "b"]);
    }

    #[test]
    fn build_vocab_keeps_most_frequent_with_forced_order() {
        let vocab = build_vocab(&corpus_of(&["a b a"]), 5).unwrap();
        assert_eq!(vocab.size(), 5);
        assert_eq!(vocab.token(3).unwrap(), "a");
        assert_eq!(vocab.token(4).unwrap(), "b");

        let vocab = build_vocab(&corpus_of(&["x"]), 4).unwrap();
        assert_eq!(vocab.size(), 4);
        assert_eq!(vocab.token(3).unwrap(), "x");
    }

    #[test]
    fn build_vocab_rejects_empty_corpus() {
        let err = build_vocab(&Corpus::default(), 10).unwrap_err();
        assert!(matches!(err, WisError::EmptyCorpus));
    }

    #[test]
    fn build_vocab_truncation_matches_brute_force_tally() {
        // 100 distinct tokens with distinct frequencies, capped vocabulary:
        // the survivors must be exactly the top (max_size - 3) by frequency,
        // checked against an independent tally.
        let mut text = String::new();
        for i in 0..100 {
            for _ in 0..=(i % 17) {
                let _ = write!(text, "w{i} ");
            }
        }
        let corpus = corpus_of(&[&text]);
        let vocab = build_vocab(&corpus, 10).unwrap();
        assert_eq!(vocab.size(), 10);

        // Independent tally over the same text.
        let mut tally: HashMap<String, u64> = HashMap::new();
        for tok in text.split_whitespace() {
            *tally.entry(tok.to_string()).or_insert(0) += 1;
        }
        let mut ranked: Vec<(String, u64)> = tally.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        for (rank, (tok, _)) in ranked.iter().take(7).enumerate() {
            assert_eq!(vocab.token(rank as u32 + 3).unwrap(), tok.as_str());
        }
    }

    #[test]
    fn build_vocab_is_deterministic() {
        let corpus = corpus_of(&["c b a", "b a", "a"]);
        let v1 = build_vocab(&corpus, 6).unwrap();
        let v2 = build_vocab(&corpus, 6).unwrap();
        assert_eq!(v1.to_file_string(), v2.to_file_string());
        // Frequency order a(3) > b(2) > c(1).
        assert_eq!(v1.token(3).unwrap(), "a");
        assert_eq!(v1.token(5).unwrap(), "c");
    }

    #[test]
    fn tokenize_maps_oov_to_unk_and_empty_to_empty() {
        let vocab = build_vocab(&corpus_of(&["a b"]), 8).unwrap();
        assert!(tokenize("", &vocab).is_empty());
        let seq = tokenize("a b", &vocab);
        assert_eq!(
            seq.ids,
            vec![vocab.id_of("a").unwrap(), vocab.id_of("b").unwrap()]
        );
        let seq = tokenize("a zzz", &vocab);
        assert_eq!(seq.ids[1], Vocabulary::UNK);
    }

    #[test]
    fn detokenize_basics_and_range_check() {
        let vocab = build_vocab(&corpus_of(&["a b"]), 8).unwrap();
        assert_eq!(detokenize(&[], &vocab).unwrap(), "");
        let a = vocab.id_of("a").unwrap();
        let b = vocab.id_of("b").unwrap();
        assert_eq!(detokenize(&[a, b], &vocab).unwrap(), "a b");
        // Reserved ids are omitted.
        assert_eq!(detokenize(&[Vocabulary::BOS, a], &vocab).unwrap(), "a");
        let err = detokenize(&[999], &vocab).unwrap_err();
        assert!(matches!(err, WisError::IdOutOfRange { id: 999, .. }));
    }

    #[test]
    fn tokenize_detokenize_round_trip_on_random_sequences() {
        // For any sequence free of reserved ids, tokenize(detokenize(s)) = s.
        let corpus = corpus_of(&["alpha beta gamma delta , . epsilon zeta it's"]);
        let vocab = build_vocab(&corpus, 32).unwrap();
        let mut rng = SplitMix64::new(1234);
        for _ in 0..200 {
            let len = rng.next_range(20);
            let ids: Vec<u32> = (0..len)
                .map(|_| 3 + rng.next_range(vocab.size() - 3) as u32)
                .collect();
            let text = detokenize(&ids, &vocab).unwrap();
            assert_eq!(tokenize(&text, &vocab).ids, ids);
        }
    }

    #[test]
    fn vocab_file_round_trip() {
        let vocab = build_vocab(&corpus_of(&["a b c"]), 8).unwrap();
        let s = vocab.to_file_string();
        let reloaded = Vocabulary::from_file_string(&s).unwrap();
        assert_eq!(reloaded.size(), vocab.size());
        for id in 0..vocab.size() as u32 {
            assert_eq!(reloaded.token(id).unwrap(), vocab.token(id).unwrap());
            assert_eq!(reloaded.id_of(vocab.token(id).unwrap()), Some(id));
        }
    }

    #[test]
    fn corpus_jsonl_reports_line_numbers() {
        let ok = Corpus::from_jsonl_str("{\"text\": \"a\"}\n\n{\"text\": \"b\", \"reference\": \"c\"}\n").unwrap();
        assert_eq!(ok.docs.len(), 2);
        assert_eq!(ok.docs[1].reference.as_deref(), Some("c"));
        let err = Corpus::from_jsonl_str("{\"text\": \"a\"}\nnot json\n").unwrap_err();
        match err {
            WisError::Malformed { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error: {other}"),
        }
    }
}
