//! Token-level greenlist watermarking for generated text, with an
//! importance-scoring extension that preserves semantically critical tokens.
//!
//! The pipeline, end to end:
//!
//! 1. [`text`] — word-level tokenizer, vocabulary construction, corpus I/O.
//! 2. [`lm`] — an add-k smoothed n-gram language model behind the
//!    [`lm::LogitsProvider`] trait, plus deterministic beam search that
//!    accepts a pluggable logit transform (the watermark hook).
//! 3. [`watermark`] — keyed pseudorandom greenlist partitioning and the two
//!    logit-modification rules: the plain green boost and the
//!    importance-gated variant (WIS) that also boosts the model's
//!    unwatermarked top choice when it scores as important.
//! 4. [`scoring`] — importance scorers: embedding-perturbation scoring over
//!    hashed IDF-weighted embeddings, a sliding-window wrapper, and inference
//!    for trained linear scorer models.
//! 5. [`labeling`] — paraphrase-count label construction and gradient-descent
//!    training of the regression / classification scorer models.
//! 6. [`detect`] — the one-sided z-test detector over green-token counts.
//! 7. [`bench`] — (gamma, delta, method) sweep harness producing
//!    detection-rate / quality trade-off tables as CSV + JSON.
//!
//! Everything is deterministic given the secret key and the configured
//! parameters: the greenlist comes from a keyed 64-bit mixing PRF, beam
//! search breaks ties by token id, and training is full-batch.

pub mod bench;
pub mod data;
pub mod detect;
pub mod error;
pub mod labeling;
pub mod lm;
pub mod prf;
pub mod scoring;
pub mod text;
pub mod watermark;

pub use error::WisError;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, WisError>;
