//! Browser demo: three operations over the bundled sample model, exported
//! through wasm-bindgen. Every function returns a JSON string — either the
//! result object or `{"error": "..."}` — so the page never needs to handle
//! thrown exceptions and the functions stay directly callable from native
//! tests.

use std::sync::OnceLock;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use wis_core::bench::rouge1;
use wis_core::data;
use wis_core::detect::{detect_seq, green_mask};
use wis_core::lm::{BeamParams, NGramLM};
use wis_core::scoring::{
    HashedEmbedding, IdfTable, ImportanceScorer, PerturbationScorer, WindowedScorer,
    DEFAULT_EMBED_DIM, DEFAULT_R0_PERTURBATION, DEFAULT_WINDOW, EMBED_KEY,
};
use wis_core::text::{tokenize, TokenSeq, Vocabulary};
use wis_core::watermark::{generate_watermarked, parse_key_hex, Mode, WatermarkParams};
use wis_core::{Result, WisError};

const THRESHOLD: f64 = 4.0;

struct Shared {
    lm: NGramLM,
    vocab: Vocabulary,
    scorer: WindowedScorer<PerturbationScorer<HashedEmbedding>>,
}

fn shared() -> &'static Shared {
    static SHARED: OnceLock<Shared> = OnceLock::new();
    SHARED.get_or_init(|| {
        let (lm, vocab) = data::sample_model().expect("bundled model trains");
        let idf = IdfTable::from_corpus(&data::sample_corpus(), &vocab);
        let emb = HashedEmbedding::new(vocab.size(), DEFAULT_EMBED_DIM, EMBED_KEY, idf);
        let scorer = WindowedScorer::new(PerturbationScorer::new(emb), DEFAULT_WINDOW);
        Shared { lm, vocab, scorer }
    })
}

#[derive(Serialize)]
struct TokenInfo {
    token: String,
    green: bool,
}

#[derive(Serialize)]
struct Completion {
    output: String,
    z: f64,
    verdict: String,
    green_count: usize,
    token_count: usize,
    tokens: Vec<TokenInfo>,
}

#[derive(Serialize)]
struct CompareOut {
    unwatermarked: Completion,
    baseline: Completion,
    wis: Completion,
    rouge1_baseline: f64,
    rouge1_wis: f64,
}

fn token_infos(seq: &TokenSeq, params: &WatermarkParams, vocab: &Vocabulary) -> Vec<TokenInfo> {
    green_mask(seq, params)
        .into_iter()
        .zip(seq.generated())
        .map(|(green, &id)| TokenInfo {
            token: vocab.token(id).unwrap_or("?").to_string(),
            green,
        })
        .collect()
}

fn completion(seq: &TokenSeq, params: &WatermarkParams, vocab: &Vocabulary) -> Result<Completion> {
    let det = detect_seq(seq, params, THRESHOLD)?;
    Ok(Completion {
        output: wis_core::text::detokenize(seq.generated(), vocab)?,
        z: det.z,
        verdict: det.verdict.to_string(),
        green_count: det.green_count,
        token_count: det.token_count,
        tokens: token_infos(seq, params, vocab),
    })
}

fn params_for(key_hex: &str, gamma: f64, delta: f64, mode: Mode) -> Result<WatermarkParams> {
    let params = WatermarkParams {
        key: parse_key_hex(key_hex)?,
        gamma,
        delta,
        context_width: 1,
        mode,
    };
    params.validate()?;
    Ok(params)
}

fn beam(max_len: usize) -> Result<BeamParams> {
    if !(1..=400).contains(&max_len) {
        return Err(WisError::config("max_len must be in 1..=400"));
    }
    Ok(BeamParams {
        beam_width: 2,
        max_len,
        min_tokens: max_len,
    })
}

fn json_or_error<T: Serialize>(result: Result<T>) -> String {
    #[derive(Serialize)]
    struct ErrorOut {
        error: String,
    }
    match result {
        Ok(v) => serde_json::to_string(&v)
            .unwrap_or_else(|e| format!(r#"{{"error":"serialize: {e}"}}"#)),
        Err(e) => serde_json::to_string(&ErrorOut {
            error: e.to_string(),
        })
        .expect("error object serializes"),
    }
}

fn run_generate(
    prompt: &str,
    gamma: f64,
    delta: f64,
    mode: &str,
    key_hex: &str,
    max_len: usize,
) -> Result<Completion> {
    let s = shared();
    let mode: Mode = mode.parse()?;
    let params = params_for(key_hex, gamma, delta, mode)?;
    let gate: Option<(&dyn ImportanceScorer, f64)> = match mode {
        Mode::Wis => Some((&s.scorer, DEFAULT_R0_PERTURBATION)),
        Mode::Baseline => None,
    };
    let ids = tokenize(prompt, &s.vocab).ids;
    let seq = generate_watermarked(&s.lm, &params, gate, &ids, &beam(max_len)?)?;
    completion(&seq, &params, &s.vocab)
}

fn run_detect(text: &str, gamma: f64, key_hex: &str, threshold: f64) -> Result<Completion> {
    let s = shared();
    let params = params_for(key_hex, gamma, 0.0, Mode::Baseline)?;
    let seq = tokenize(text, &s.vocab);
    if seq.len() < 2 {
        return Err(WisError::TextTooShort(seq.len()));
    }
    let det = detect_seq(&seq, &params, threshold)?;
    Ok(Completion {
        output: text.to_string(),
        z: det.z,
        verdict: det.verdict.to_string(),
        green_count: det.green_count,
        token_count: det.token_count,
        tokens: token_infos(&seq, &params, &s.vocab),
    })
}

fn run_compare(
    prompt: &str,
    gamma: f64,
    delta: f64,
    key_hex: &str,
    max_len: usize,
) -> Result<CompareOut> {
    let s = shared();
    let ids = tokenize(prompt, &s.vocab).ids;
    let beam = beam(max_len)?;

    let plain_params = params_for(key_hex, gamma, 0.0, Mode::Baseline)?;
    let plain = generate_watermarked(&s.lm, &plain_params, None, &ids, &beam)?;

    let base_params = params_for(key_hex, gamma, delta, Mode::Baseline)?;
    let base = generate_watermarked(&s.lm, &base_params, None, &ids, &beam)?;

    let wis_params = params_for(key_hex, gamma, delta, Mode::Wis)?;
    let gate: Option<(&dyn ImportanceScorer, f64)> =
        Some((&s.scorer, DEFAULT_R0_PERTURBATION));
    let wis = generate_watermarked(&s.lm, &wis_params, gate, &ids, &beam)?;

    Ok(CompareOut {
        rouge1_baseline: rouge1(base.generated(), plain.generated())?.f1,
        rouge1_wis: rouge1(wis.generated(), plain.generated())?.f1,
        unwatermarked: completion(&plain, &plain_params, &s.vocab)?,
        baseline: completion(&base, &base_params, &s.vocab)?,
        wis: completion(&wis, &wis_params, &s.vocab)?,
    })
}

/// Generate a completion for `prompt` with the given watermark settings.
/// `mode` is "baseline" or "wis" (wis uses the perturbation scorer).
#[wasm_bindgen]
pub fn generate(
    prompt: &str,
    gamma: f64,
    delta: f64,
    mode: &str,
    key_hex: &str,
    max_len: usize,
) -> String {
    json_or_error(run_generate(prompt, gamma, delta, mode, key_hex, max_len))
}

/// Score arbitrary text against a key: z-score, verdict, and per-token
/// greenlist membership for highlighting.
#[wasm_bindgen]
pub fn detect(text: &str, gamma: f64, key_hex: &str, threshold: f64) -> String {
    json_or_error(run_detect(text, gamma, key_hex, threshold))
}

/// Side-by-side: unwatermarked vs baseline vs WIS for one prompt, with
/// ROUGE-1 of each watermarked output against the unwatermarked one.
#[wasm_bindgen]
pub fn compare(prompt: &str, gamma: f64, delta: f64, key_hex: &str, max_len: usize) -> String {
    json_or_error(run_compare(prompt, gamma, delta, key_hex, max_len))
}

/// A few prompts from the bundled set, for the page's example picker.
#[wasm_bindgen]
pub fn example_prompts() -> String {
    let prompts: Vec<String> = data::sample_prompts()
        .into_iter()
        .take(8)
        .map(|r| r.prompt)
        .collect();
    serde_json::to_string(&prompts).expect("prompts serialize")
}
