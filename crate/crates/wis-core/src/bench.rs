//! Sweep harness: the detection-rate / quality trade-off at desk scale.
//!
//! For every (gamma, delta, method) cell the harness generates one
//! completion per prompt, detects on it, and scores quality two ways:
//!
//! * `rouge1_ref` — ROUGE-1 F1 against the dataset reference (depends on the
//!   underlying language model, reported for information);
//! * `rouge1_self` — ROUGE-1 F1 against the *same model's unwatermarked*
//!   completion of the same prompt. This is the model-independent quality
//!   signal: it measures exactly what the watermark changed.
//!
//! Unwatermarked completions are computed once per prompt and shared across
//! the whole grid, so a sweep costs |gammas|·|deltas|·|methods|+1
//! generations per prompt. Rows are emitted in configuration order and the
//! whole run is deterministic.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detect::detect_seq;
use crate::lm::{beam_generate, BeamParams, IdentityTransform, LogitsProvider};
use crate::scoring::ImportanceScorer;
use crate::text::{tokenize, Vocabulary};
use crate::watermark::{generate_watermarked, Mode, WatermarkParams};
use crate::{Result, WisError};

/// Clipped unigram-overlap scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rouge {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// ROUGE-1 of a candidate against a reference, counted over token ids with
/// per-type clipping: overlap = sum over types of min(count_cand, count_ref).
pub fn rouge1(candidate: &[u32], reference: &[u32]) -> Result<Rouge> {
    if reference.is_empty() {
        return Err(WisError::config("empty reference in rouge1"));
    }
    let mut ref_counts: HashMap<u32, u32> = HashMap::new();
    for &id in reference {
        *ref_counts.entry(id).or_insert(0) += 1;
    }
    let mut cand_counts: HashMap<u32, u32> = HashMap::new();
    for &id in candidate {
        *cand_counts.entry(id).or_insert(0) += 1;
    }
    let overlap: u32 = cand_counts
        .iter()
        .map(|(id, &c)| c.min(ref_counts.get(id).copied().unwrap_or(0)))
        .sum();
    let precision = if candidate.is_empty() {
        0.0
    } else {
        overlap as f64 / candidate.len() as f64
    };
    let recall = overlap as f64 / reference.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Rouge {
        precision,
        recall,
        f1,
    })
}

/// Fraction of z scores strictly above the threshold.
pub fn detection_rate(zs: &[f64], threshold: f64) -> f64 {
    if zs.is_empty() {
        return 0.0;
    }
    zs.iter().filter(|&&z| z > threshold).count() as f64 / zs.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "baseline")]
    Baseline,
    #[serde(rename = "wis-perturbation")]
    WisPerturbation,
    #[serde(rename = "wis-regression")]
    WisRegression,
    #[serde(rename = "wis-classification")]
    WisClassification,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Baseline,
        Method::WisPerturbation,
        Method::WisRegression,
        Method::WisClassification,
    ];

    pub fn mode(self) -> Mode {
        match self {
            Method::Baseline => Mode::Baseline,
            _ => Mode::Wis,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Baseline => "baseline",
            Method::WisPerturbation => "wis-perturbation",
            Method::WisRegression => "wis-regression",
            Method::WisClassification => "wis-classification",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = WisError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Method::Baseline),
            "wis-perturbation" => Ok(Method::WisPerturbation),
            "wis-regression" => Ok(Method::WisRegression),
            "wis-classification" => Ok(Method::WisClassification),
            other => Err(WisError::config(format!(
                "unknown method '{other}' (expected baseline, wis-perturbation, \
                 wis-regression, or wis-classification)"
            ))),
        }
    }
}

/// One prompt/reference pair from the benchmark input
/// (JSONL: {"prompt": ..., "reference": ...}).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PromptRecord {
    pub prompt: String,
    pub reference: String,
}

pub fn load_prompts_str(s: &str) -> Result<Vec<PromptRecord>> {
    let mut out = Vec::new();
    for (i, line) in s.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: PromptRecord = serde_json::from_str(line).map_err(|e| WisError::Malformed {
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn load_prompts(path: &Path) -> Result<Vec<PromptRecord>> {
    let s =
        std::fs::read_to_string(path).map_err(|e| WisError::io(path.display().to_string(), e))?;
    load_prompts_str(&s)
}

/// The sweep grid and shared generation/detection settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub gammas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub methods: Vec<Method>,
    pub r0_perturbation: f64,
    pub r0_regression: f64,
    pub r0_classification: f64,
    pub context_width: usize,
    pub max_len: usize,
    pub min_tokens: usize,
    pub beam_width: usize,
    pub threshold: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            gammas: vec![0.25],
            deltas: vec![1.5, 2.0, 2.5, 3.0, 4.0],
            methods: vec![Method::Baseline],
            r0_perturbation: crate::scoring::DEFAULT_R0_PERTURBATION,
            r0_regression: crate::scoring::DEFAULT_R0_REGRESSION,
            r0_classification: crate::scoring::DEFAULT_R0_CLASSIFICATION,
            context_width: 1,
            max_len: 100,
            min_tokens: 100,
            beam_width: 2,
            threshold: 4.0,
        }
    }
}

/// Importance scorers for the WIS methods, already windowed by the caller.
/// Only the methods actually present in the grid need to be provided.
#[derive(Default)]
pub struct SweepScorers<'a> {
    pub perturbation: Option<&'a dyn ImportanceScorer>,
    pub regression: Option<&'a dyn ImportanceScorer>,
    pub classification: Option<&'a dyn ImportanceScorer>,
}

impl<'a> SweepScorers<'a> {
    fn resolve(
        &self,
        method: Method,
        cfg: &SweepConfig,
    ) -> Result<Option<(&'a dyn ImportanceScorer, f64)>> {
        let missing = |name: &str| {
            WisError::config(format!("method {name} requires an importance scorer"))
        };
        match method {
            Method::Baseline => Ok(None),
            Method::WisPerturbation => self
                .perturbation
                .map(|s| Some((s, cfg.r0_perturbation)))
                .ok_or_else(|| missing("wis-perturbation")),
            Method::WisRegression => self
                .regression
                .map(|s| Some((s, cfg.r0_regression)))
                .ok_or_else(|| missing("wis-regression")),
            Method::WisClassification => self
                .classification
                .map(|s| Some((s, cfg.r0_classification)))
                .ok_or_else(|| missing("wis-classification")),
        }
    }
}

/// One grid cell's aggregated results.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub delta: f64,
    pub method: Method,
    pub detection_rate: f64,
    pub rouge1_ref: f64,
    pub rouge1_self: f64,
    pub mean_z: f64,
    pub n_samples: usize,
}

/// Run the full grid. `key` is the watermark secret; it is deliberately not
/// part of [`SweepConfig`] so serialized configs and summaries never carry
/// it.
pub fn run_sweep(
    provider: &dyn LogitsProvider,
    vocab: &Vocabulary,
    prompts: &[PromptRecord],
    key: u64,
    config: &SweepConfig,
    scorers: &SweepScorers,
) -> Result<Vec<SweepRow>> {
    if config.gammas.is_empty() || config.deltas.is_empty() || config.methods.is_empty() {
        return Err(WisError::config(
            "sweep needs non-empty gammas, deltas, and methods",
        ));
    }
    if prompts.is_empty() {
        return Err(WisError::config("sweep needs at least one prompt"));
    }
    // Fail fast on missing scorers, before burning generation time.
    for &m in &config.methods {
        scorers.resolve(m, config)?;
    }
    let beam = BeamParams {
        beam_width: config.beam_width,
        max_len: config.max_len,
        min_tokens: config.min_tokens.clamp(1, config.max_len),
    };

    let prompt_ids: Vec<Vec<u32>> = prompts
        .iter()
        .map(|p| tokenize(&p.prompt, vocab).ids)
        .collect();
    let reference_ids: Vec<Vec<u32>> = prompts
        .iter()
        .map(|p| tokenize(&p.reference, vocab).ids)
        .collect();
    for (i, r) in reference_ids.iter().enumerate() {
        if r.is_empty() {
            return Err(WisError::config(format!(
                "prompt record {} has an empty reference",
                i + 1
            )));
        }
    }

    // Unwatermarked completions, shared by every cell.
    let plain: Vec<Vec<u32>> = prompt_ids
        .iter()
        .map(|p| {
            beam_generate(provider, &IdentityTransform, p, &beam)
                .generated()
                .to_vec()
        })
        .collect();

    let mut rows = Vec::new();
    for &gamma in &config.gammas {
        for &delta in &config.deltas {
            for &method in &config.methods {
                let params = WatermarkParams {
                    key,
                    gamma,
                    delta,
                    context_width: config.context_width,
                    mode: method.mode(),
                };
                let scorer = scorers.resolve(method, config)?;
                let mut zs = Vec::with_capacity(prompts.len());
                let mut ref_f1 = 0.0;
                let mut self_f1 = 0.0;
                for i in 0..prompts.len() {
                    let out =
                        generate_watermarked(provider, &params, scorer, &prompt_ids[i], &beam)?;
                    let det = detect_seq(&out, &params, config.threshold)?;
                    zs.push(det.z);
                    ref_f1 += rouge1(out.generated(), &reference_ids[i])?.f1;
                    self_f1 += rouge1(out.generated(), &plain[i])?.f1;
                }
                let n = prompts.len();
                rows.push(SweepRow {
                    gamma,
                    delta,
                    method,
                    detection_rate: detection_rate(&zs, config.threshold),
                    rouge1_ref: ref_f1 / n as f64,
                    rouge1_self: self_f1 / n as f64,
                    mean_z: zs.iter().sum::<f64>() / n as f64,
                    n_samples: n,
                });
            }
        }
    }
    Ok(rows)
}

/// CSV with the fixed header
/// `gamma,delta,method,detection_rate,rouge1_ref,rouge1_self,mean_z,n_samples`.
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out =
        String::from("gamma,delta,method,detection_rate,rouge1_ref,rouge1_self,mean_z,n_samples\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{}",
            r.gamma, r.delta, r.method, r.detection_rate, r.rouge1_ref, r.rouge1_self, r.mean_z,
            r.n_samples
        );
    }
    out
}

/// JSON summary: the grid settings plus all rows (never the key).
#[derive(Serialize)]
struct Summary<'a> {
    config: &'a SweepConfig,
    n_prompts: usize,
    rows: &'a [SweepRow],
}

pub fn summary_json(config: &SweepConfig, n_prompts: usize, rows: &[SweepRow]) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Summary {
        config,
        n_prompts,
        rows,
    })?)
}
