//! Watermark detection: count green tokens, standardize, threshold.
//!
//! Under the null hypothesis (text generated without knowledge of the key)
//! each scored token is green with probability exactly gamma, so the green
//! count over T tokens is Binomial(T, gamma) and
//!
//!   z = (green_count - gamma T) / sqrt(T gamma (1 - gamma))
//!
//! is approximately standard normal. The test is one-sided: only an excess
//! of green tokens (z above the threshold) counts as watermarked.
//!
//! Scoring starts at the first generated position; prompt tokens, when the
//! prompt is known, contribute context only. When no prompt boundary is
//! known (an adversary's text), every token is scored and the first
//! positions take BOS-padded contexts — exactly how generation seeds them.

use serde::{Deserialize, Serialize};

use crate::text::{tokenize, TokenSeq, Vocabulary};
use crate::watermark::{context_window, is_green, WatermarkParams};
use crate::{Result, WisError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "watermarked")]
    Watermarked,
    #[serde(rename = "not-watermarked")]
    NotWatermarked,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Watermarked => "watermarked",
            Verdict::NotWatermarked => "not-watermarked",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionResult {
    pub token_count: usize,
    pub green_count: usize,
    pub z: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

/// Per-position greenlist membership over the scored region
/// (`prefix_len..len`), using the same context rule as generation: the last
/// `context_width` ids of everything before the position, BOS-padded.
pub fn green_mask(seq: &TokenSeq, params: &WatermarkParams) -> Vec<bool> {
    (seq.prefix_len..seq.len())
        .map(|t| {
            let ctx = context_window(&seq.ids[..t], params.context_width);
            is_green(params, &ctx, seq.ids[t])
        })
        .collect()
}

/// Number of green tokens in the scored region; errors when nothing is
/// scored.
pub fn count_green(seq: &TokenSeq, params: &WatermarkParams) -> Result<usize> {
    if seq.generated_len() == 0 {
        return Err(WisError::NothingToScore);
    }
    Ok(green_mask(seq, params).iter().filter(|&&g| g).count())
}

/// The test statistic: (green_count - gamma T) / sqrt(T gamma (1 - gamma)).
pub fn z_score(green_count: usize, token_count: usize, gamma: f64) -> f64 {
    assert!(token_count >= 1, "token_count must be >= 1");
    assert!(gamma > 0.0 && gamma < 1.0, "gamma must be in (0, 1)");
    let t = token_count as f64;
    (green_count as f64 - gamma * t) / (t * gamma * (1.0 - gamma)).sqrt()
}

/// Detect on an id sequence whose prompt boundary is already known.
pub fn detect_seq(
    seq: &TokenSeq,
    params: &WatermarkParams,
    threshold: f64,
) -> Result<DetectionResult> {
    params.validate()?;
    let green_count = count_green(seq, params)?;
    let token_count = seq.generated_len();
    let z = z_score(green_count, token_count, params.gamma);
    Ok(DetectionResult {
        token_count,
        green_count,
        z,
        threshold,
        verdict: if z > threshold {
            Verdict::Watermarked
        } else {
            Verdict::NotWatermarked
        },
    })
}

/// Detect on raw text with no known prompt: every token is scored.
pub fn detect(
    text: &str,
    vocab: &Vocabulary,
    params: &WatermarkParams,
    threshold: f64,
) -> Result<DetectionResult> {
    let seq = tokenize(text, vocab);
    if seq.len() < 2 {
        return Err(WisError::TextTooShort(seq.len()));
    }
    detect_seq(&seq, params, threshold)
}
