//! Bundled sample dataset: a synthetic field-station log corpus, prompt
//! records for benchmarking, and a synonym table for the rule paraphraser.
//!
//! The files are generated by `tools/gen_sample_data.py` and committed so
//! the library, CLI, and tests work out of the box with no downloads. See
//! that script for how the corpus is shaped.

use crate::bench::{load_prompts_str, PromptRecord};
use crate::text::Corpus;
use crate::Result;

/// Training/IDF corpus, JSONL of `{"text": ...}` documents.
pub const SAMPLE_CORPUS_JSONL: &str = include_str!("../data/sample_corpus.jsonl");

/// Short single-sentence documents for paraphrase labeling. Kept separate
/// from the training corpus so that most tokens occur once per document,
/// which keeps paraphrase-survival counts informative per word class.
pub const SAMPLE_LABELING_JSONL: &str = include_str!("../data/sample_labeling.jsonl");

/// Benchmark input, JSONL of `{"prompt": ..., "reference": ...}` records.
pub const SAMPLE_PROMPTS_JSONL: &str = include_str!("../data/sample_prompts.jsonl");

/// Synonym map for the rule paraphraser, JSON `{token: [token, ...]}`.
pub const SYNONYMS_JSON: &str = include_str!("../data/synonyms.json");

pub fn sample_corpus() -> Corpus {
    Corpus::from_jsonl_str(SAMPLE_CORPUS_JSONL).expect("bundled corpus is valid")
}

pub fn sample_labeling_corpus() -> Corpus {
    Corpus::from_jsonl_str(SAMPLE_LABELING_JSONL).expect("bundled labeling corpus is valid")
}

pub fn sample_prompts() -> Vec<PromptRecord> {
    load_prompts_str(SAMPLE_PROMPTS_JSONL).expect("bundled prompts are valid")
}

pub fn sample_synonyms() -> crate::labeling::RuleOracle {
    crate::labeling::RuleOracle::from_json_str(SYNONYMS_JSON).expect("bundled synonyms are valid")
}

/// Convenience for tests and the demo: vocabulary and trigram model built
/// from the bundled corpus with the standard settings (order 3, k = 0.5).
pub fn sample_model() -> Result<(crate::lm::NGramLM, crate::text::Vocabulary)> {
    let corpus = sample_corpus();
    let vocab = crate::text::build_vocab(&corpus, 4096)?;
    let lm = crate::lm::train_ngram(&corpus, &vocab, 3, 0.5)?;
    Ok((lm, vocab))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_files_parse_and_have_expected_shape() {
        let corpus = sample_corpus();
        assert_eq!(corpus.docs.len(), 500);
        let prompts = sample_prompts();
        assert_eq!(prompts.len(), 250);
        assert!(prompts.iter().all(|p| !p.reference.is_empty()));
        let oracle = sample_synonyms();
        assert!(oracle.table_len() >= 50);
    }

    #[test]
    fn bundled_model_trains_and_covers_the_prompts() {
        let (lm, vocab) = sample_model().unwrap();
        assert_eq!(lm.order(), 3);
        assert!(vocab.size() > 100);
        // Prompts were generated from the same pools, so none should
        // tokenize to <unk>.
        for p in sample_prompts() {
            let ids = crate::text::tokenize(&p.prompt, &vocab).ids;
            assert!(!ids.is_empty());
            assert!(ids.iter().all(|&id| id != crate::text::Vocabulary::UNK));
        }
    }
}
