//! Keyed greenlist partitioning and watermarked generation.
//!
//! At each generation step the vocabulary is pseudorandomly partitioned into
//! a greenlist (expected fraction `gamma`) and a redlist, seeded by the
//! secret key and the last `context_width` tokens of the prefix. Green
//! tokens get their logit raised by `delta` before normalization.
//!
//! Two boost rules:
//!
//! * baseline — boost exactly the green candidates;
//! * WIS — additionally boost the model's unwatermarked top choice (the
//!   argmax of the *original* logits) when an importance scorer rates it at
//!   or above the threshold `r0`, even if it is red. The boost is applied at
//!   most once per candidate, and the scorer runs at most once per step.
//!
//! Membership is a per-candidate threshold test on a keyed PRF score, so
//! detection needs no vocabulary-wide shuffle: any observed (context, token)
//! pair can be re-classified in O(1). Under the null each token is green
//! with probability exactly gamma; the greenlist *size* per step is
//! therefore Binomial(|V|, gamma) rather than exactly gamma·|V|, which the
//! z-test is indifferent to.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::lm::{argmax_token, beam_generate, BeamParams, LogitTransform, LogitsProvider, LogitsVector};
use crate::prf::{hash_ids, unit_f64};
use crate::scoring::ImportanceScorer;
use crate::text::{TokenSeq, Vocabulary};
use crate::{Result, WisError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Baseline,
    Wis,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Baseline => "baseline",
            Mode::Wis => "wis",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = WisError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Mode::Baseline),
            "wis" => Ok(Mode::Wis),
            other => Err(WisError::config(format!(
                "unknown mode '{other}' (expected baseline or wis)"
            ))),
        }
    }
}

/// Watermark configuration. `context_width` is the number of trailing prefix
/// tokens hashed into the greenlist seed (BOS-padded when fewer exist).
#[derive(Debug, Clone, PartialEq)]
pub struct WatermarkParams {
    pub key: u64,
    pub gamma: f64,
    pub delta: f64,
    pub context_width: usize,
    pub mode: Mode,
}

impl Default for WatermarkParams {
    fn default() -> Self {
        WatermarkParams {
            key: 0,
            gamma: 0.25,
            delta: 2.5,
            context_width: 1,
            mode: Mode::Baseline,
        }
    }
}

/// Serialized shape of [`WatermarkParams`]; the key travels as hex.
#[derive(Serialize, Deserialize)]
struct ParamsFile {
    key_hex: String,
    gamma: f64,
    delta: f64,
    context_width: usize,
    mode: Mode,
}

/// Parse a 64-bit key from hex (optional 0x prefix).
pub fn parse_key_hex(s: &str) -> Result<u64> {
    let t = s.trim().trim_start_matches("0x");
    u64::from_str_radix(t, 16)
        .map_err(|_| WisError::config(format!("invalid hex key '{s}'")))
}

pub fn key_to_hex(key: u64) -> String {
    format!("{key:016x}")
}

impl WatermarkParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(WisError::config("gamma must be in (0, 1)"));
        }
        if self.delta < 0.0 || self.delta.is_nan() {
            return Err(WisError::config("delta must be >= 0"));
        }
        if self.context_width < 1 {
            return Err(WisError::config("context_width must be >= 1"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        Ok(serde_json::to_string_pretty(&ParamsFile {
            key_hex: key_to_hex(self.key),
            gamma: self.gamma,
            delta: self.delta,
            context_width: self.context_width,
            mode: self.mode,
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: ParamsFile = serde_json::from_str(s)?;
        let params = WatermarkParams {
            key: parse_key_hex(&f.key_hex)?,
            gamma: f.gamma,
            delta: f.delta,
            context_width: f.context_width,
            mode: f.mode,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| WisError::io(path.display().to_string(), e))?;
        Self::from_json(&s)
    }
}

/// The greenlist seed context for a position: the last `h` ids of `prefix`,
/// left-padded with BOS to exactly `h`. Generation and detection both build
/// contexts through this function, which is what keeps their verdicts equal.
pub fn context_window(prefix: &[u32], h: usize) -> Vec<u32> {
    let mut ctx = Vec::with_capacity(h);
    if prefix.len() < h {
        ctx.resize(h - prefix.len(), Vocabulary::BOS);
    }
    ctx.extend_from_slice(&prefix[prefix.len().saturating_sub(h)..]);
    ctx
}

/// Keyed PRF score in [0, 1), uniform over candidates for a fixed
/// (key, context).
#[inline]
pub fn green_score(key: u64, context: &[u32], candidate: u32) -> f64 {
    unit_f64(hash_ids(key, context, candidate))
}

/// Greenlist membership: score < gamma, so P(green) = gamma under the null.
#[inline]
pub fn is_green(params: &WatermarkParams, context: &[u32], candidate: u32) -> bool {
    green_score(params.key, context, candidate) < params.gamma
}

/// Shared boost kernel. Mutates `logits`; when `wis` is set, applies the
/// importance-gated extra boost to the original argmax. Returns nothing the
/// callers need beyond the mutation.
fn boost_in_place(
    logits: &mut [f64],
    params: &WatermarkParams,
    prefix: &[u32],
    wis: Option<(&dyn ImportanceScorer, f64)>,
) {
    let ctx = context_window(prefix, params.context_width);
    // The unwatermarked choice must be read off before any boosting.
    let a = argmax_token(logits) as usize;
    let mut a_green = false;
    for (i, x) in logits.iter_mut().enumerate() {
        if is_green(params, &ctx, i as u32) {
            *x += params.delta;
            if i == a {
                a_green = true;
            }
        }
    }
    if let Some((scorer, r0)) = wis {
        // First-match single boost: a green argmax was already boosted above,
        // so the gate (and the scorer call) only applies to a red argmax.
        if !a_green && scorer.score(prefix, a as u32) >= r0 {
            logits[a] += params.delta;
        }
    }
}

/// Baseline rule: out[i] = logits[i] + delta for green i, else unchanged.
pub fn apply_baseline_boost(
    logits: &[f64],
    params: &WatermarkParams,
    prefix: &[u32],
) -> LogitsVector {
    let mut out = logits.to_vec();
    boost_in_place(&mut out, params, prefix, None);
    out
}

/// WIS rule: baseline, plus the original argmax is boosted when red but
/// rated important (score >= r0). At most one scorer invocation per call.
pub fn apply_wis_boost(
    logits: &[f64],
    params: &WatermarkParams,
    prefix: &[u32],
    scorer: &dyn ImportanceScorer,
    r0: f64,
) -> LogitsVector {
    let mut out = logits.to_vec();
    boost_in_place(&mut out, params, prefix, Some((scorer, r0)));
    out
}

/// The beam-search transform for a watermark configuration.
pub struct WatermarkTransform<'a> {
    params: &'a WatermarkParams,
    wis: Option<(&'a dyn ImportanceScorer, f64)>,
}

impl<'a> WatermarkTransform<'a> {
    /// `scorer` is (scorer, r0); required in WIS mode, ignored in baseline.
    pub fn new(
        params: &'a WatermarkParams,
        scorer: Option<(&'a dyn ImportanceScorer, f64)>,
    ) -> Result<Self> {
        params.validate()?;
        let wis = match params.mode {
            Mode::Baseline => None,
            Mode::Wis => match scorer {
                Some(s) => Some(s),
                None => {
                    return Err(WisError::config(
                        "wis mode requires an importance scorer",
                    ))
                }
            },
        };
        Ok(WatermarkTransform { params, wis })
    }
}

impl LogitTransform for WatermarkTransform<'_> {
    fn transform(&self, prefix: &[u32], logits: &mut LogitsVector) {
        boost_in_place(logits, self.params, prefix, self.wis);
    }
}

/// Watermarked beam search: the configured boost rule is applied inside
/// every step, with the greenlist context taken from each beam's own prefix.
pub fn generate_watermarked(
    provider: &dyn LogitsProvider,
    params: &WatermarkParams,
    scorer: Option<(&dyn ImportanceScorer, f64)>,
    prompt: &[u32],
    beam: &BeamParams,
) -> Result<TokenSeq> {
    let transform = WatermarkTransform::new(params, scorer)?;
    Ok(beam_generate(provider, &transform, prompt, beam))
}
