//! The six subcommands. Each resolves its settings as flag > config file >
//! default, validates, runs the corresponding library call, and writes
//! either to --out or stdout. The watermark key is never written to any
//! output.

use std::io::Read;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use wis_core::bench::{
    load_prompts, rows_to_csv, run_sweep, summary_json, Method, PromptRecord, SweepConfig,
    SweepScorers,
};
use wis_core::data;
use wis_core::detect::{detect, detect_seq, DetectionResult};
use wis_core::labeling::{build_labels, train_scorer, RuleOracle, ScorerKind, TrainOpts};
use wis_core::lm::{train_ngram, BeamParams, NGramLM};
use wis_core::scoring::{
    HashedEmbedding, IdfTable, ImportanceScorer, ModelScorer, PerturbationScorer, WindowedScorer,
    DEFAULT_EMBED_DIM, DEFAULT_R0_PERTURBATION, DEFAULT_WINDOW, EMBED_KEY,
};
use wis_core::text::{build_vocab, detokenize, tokenize, Corpus, Vocabulary};
use wis_core::watermark::{generate_watermarked, parse_key_hex, Mode, WatermarkParams};
use wis_core::{Result, WisError};

use crate::config::{load_config, pick, pick_opt, resolve_key};

/// Importance-scorer family selectable at generation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ScorerChoice {
    /// Embedding-perturbation scoring (no training needed)
    Perturbation,
    /// Trained paraphrase-count regression model (needs --scorer-model)
    Regression,
    /// Trained paraphrase-survival classification model (needs --scorer-model)
    Classification,
}

impl ScorerChoice {
    fn kind(self) -> Option<ScorerKind> {
        match self {
            ScorerChoice::Perturbation => None,
            ScorerChoice::Regression => Some(ScorerKind::Regression),
            ScorerChoice::Classification => Some(ScorerKind::Classification),
        }
    }
}

fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| WisError::io(p.display().to_string(), e)),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Load the model named by flag or config, falling back to the bundled
/// sample model. The flag tells callers whether IDF statistics may also
/// default to the bundled corpus.
fn load_model(path: Option<&Path>) -> Result<(NGramLM, Vocabulary, bool)> {
    match path {
        Some(p) => {
            let (lm, vocab) = NGramLM::load(p)?;
            Ok((lm, vocab, false))
        }
        None => {
            let (lm, vocab) = data::sample_model()?;
            Ok((lm, vocab, true))
        }
    }
}

/// IDF table for the perturbation scorer. A custom model must bring its own
/// corpus; silently reusing the bundled corpus against a foreign vocabulary
/// would skew every importance score.
fn idf_table(
    vocab: &Vocabulary,
    corpus: Option<&Path>,
    bundled_model: bool,
    what: &str,
) -> Result<IdfTable> {
    match corpus {
        Some(p) => Ok(IdfTable::from_corpus(&Corpus::load(p)?, vocab)),
        None if bundled_model => Ok(IdfTable::from_corpus(&data::sample_corpus(), vocab)),
        None => Err(WisError::config(format!(
            "{what} needs --corpus to compute IDF statistics for a custom model"
        ))),
    }
}

fn perturbation_scorer(
    vocab: &Vocabulary,
    corpus: Option<&Path>,
    bundled_model: bool,
    window: usize,
) -> Result<Box<dyn ImportanceScorer>> {
    let idf = idf_table(vocab, corpus, bundled_model, "the perturbation scorer")?;
    let emb = HashedEmbedding::new(vocab.size(), DEFAULT_EMBED_DIM, EMBED_KEY, idf);
    Ok(Box::new(WindowedScorer::new(
        PerturbationScorer::new(emb),
        window,
    )))
}

fn trained_scorer(path: &Path, expected: ScorerKind) -> Result<ModelScorer> {
    let scorer = ModelScorer::load(path)?;
    let kind = scorer.model().kind;
    if kind != expected {
        return Err(WisError::config(format!(
            "scorer model {} is kind {kind}, expected {expected}",
            path.display()
        )));
    }
    Ok(scorer)
}

// ---------------------------------------------------------------- train-lm

#[derive(Args, Debug)]
pub struct TrainLmArgs {
    /// Training corpus: JSONL lines {"text": "...", "reference": "..."?}
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Maximum vocabulary size (default 4096)
    #[arg(long)]
    vocab_size: Option<usize>,
    /// N-gram order in 1..=5 (default 3)
    #[arg(long)]
    order: Option<usize>,
    /// Add-k smoothing constant (default 0.5)
    #[arg(long)]
    k: Option<f64>,
    /// Output model file (JSON)
    #[arg(long)]
    out: PathBuf,
    /// Output vocabulary file (default: <out> with extension "vocab")
    #[arg(long)]
    vocab_out: Option<PathBuf>,
    /// JSON config file; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn train_lm(args: &TrainLmArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let corpus_path = pick_opt(args.corpus.clone(), cfg.corpus.clone())
        .ok_or_else(|| WisError::config("train-lm needs --corpus"))?;
    let vocab_size = pick(args.vocab_size, None, 4096);
    let order = pick(args.order, None, 3);
    let k = pick(args.k, None, 0.5);

    let corpus = Corpus::load(&corpus_path)?;
    let vocab = build_vocab(&corpus, vocab_size)?;
    let lm = train_ngram(&corpus, &vocab, order, k)?;

    let vocab_out = args
        .vocab_out
        .clone()
        .unwrap_or_else(|| args.out.with_extension("vocab"));
    vocab.save(&vocab_out)?;
    // Reference the vocabulary by bare file name when it sits next to the
    // model, so the pair stays loadable after the directory moves.
    let vocab_ref = if vocab_out.parent() == args.out.parent() {
        vocab_out
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| vocab_out.display().to_string())
    } else {
        vocab_out.display().to_string()
    };
    lm.save(&args.out, &vocab_ref)?;
    println!(
        "trained {order}-gram model on {} docs (vocab {}) -> {} (vocabulary {})",
        corpus.docs.len(),
        vocab.size(),
        args.out.display(),
        vocab_out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------- generate

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Model file from train-lm (default: the bundled sample model)
    #[arg(long)]
    model: Option<PathBuf>,
    /// Prompt text; repeat the flag for several prompts
    #[arg(long)]
    prompt: Vec<String>,
    /// JSONL prompts file ({"prompt": "..."} per line; extra fields ignored)
    #[arg(long)]
    prompt_file: Option<PathBuf>,
    /// Greenlist fraction in (0, 1) (default 0.25)
    #[arg(long)]
    gamma: Option<f64>,
    /// Green logit boost >= 0 (default 2.5)
    #[arg(long)]
    delta: Option<f64>,
    /// Boost rule: plain greenlist or importance-gated (default baseline)
    #[arg(long)]
    mode: Option<Mode>,
    /// Importance scorer for --mode wis
    #[arg(long)]
    scorer: Option<ScorerChoice>,
    /// Importance threshold (default: scorer-specific)
    #[arg(long)]
    r0: Option<f64>,
    /// Scoring window for the perturbation scorer (default 16)
    #[arg(long)]
    window: Option<usize>,
    /// Greenlist context width in tokens (default 1)
    #[arg(long)]
    context_width: Option<usize>,
    /// Completion length cap in tokens (default 100)
    #[arg(long)]
    max_len: Option<usize>,
    /// Tokens to force before end-of-text is allowed (default: max-len)
    #[arg(long)]
    min_tokens: Option<usize>,
    /// Beam width (default 2)
    #[arg(long)]
    beam: Option<usize>,
    /// Detection threshold used for the reported z_self (default 4.0)
    #[arg(long)]
    threshold: Option<f64>,
    /// Watermark key as hex (falls back to WIS_KEY, then the config file)
    #[arg(long)]
    key: Option<String>,
    /// IDF corpus for the perturbation scorer (default: bundled corpus
    /// when the bundled model is used)
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Trained scorer file for --scorer regression/classification
    #[arg(long)]
    scorer_model: Option<PathBuf>,
    /// Output JSONL file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Serialize)]
struct GenRecord {
    prompt: String,
    output: String,
    z_self: f64,
}

#[derive(Deserialize)]
struct PromptLine {
    prompt: String,
}

fn read_prompt_file(path: &Path) -> Result<Vec<String>> {
    let s =
        std::fs::read_to_string(path).map_err(|e| WisError::io(path.display().to_string(), e))?;
    let mut prompts = Vec::new();
    for (i, line) in s.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: PromptLine = serde_json::from_str(line).map_err(|e| WisError::Malformed {
            line: i + 1,
            msg: e.to_string(),
        })?;
        prompts.push(rec.prompt);
    }
    Ok(prompts)
}

fn scorer_choice_from_cfg(s: &str) -> Result<ScorerChoice> {
    match s {
        "perturbation" => Ok(ScorerChoice::Perturbation),
        "regression" => Ok(ScorerChoice::Regression),
        "classification" => Ok(ScorerChoice::Classification),
        other => Err(WisError::config(format!(
            "unknown scorer '{other}' (expected perturbation, regression, or classification)"
        ))),
    }
}

pub fn generate(args: &GenerateArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let key = resolve_key(args.key.as_deref(), &cfg)?;
    let mode = match (&args.mode, &cfg.mode) {
        (Some(m), _) => *m,
        (None, Some(s)) => s.parse()?,
        (None, None) => Mode::Baseline,
    };
    let params = WatermarkParams {
        key,
        gamma: pick(args.gamma, cfg.gamma, 0.25),
        delta: pick(args.delta, cfg.delta, 2.5),
        context_width: pick(args.context_width, cfg.context_width, 1),
        mode,
    };
    params.validate()?;
    let max_len = pick(args.max_len, cfg.max_len, 100);
    let min_tokens = pick(args.min_tokens, cfg.min_tokens, max_len);
    if min_tokens < 1 || min_tokens > max_len {
        return Err(WisError::config(format!(
            "min-tokens must be in 1..={max_len} (got {min_tokens})"
        )));
    }
    let beam = BeamParams {
        beam_width: pick(args.beam, cfg.beam, 2),
        max_len,
        min_tokens,
    };
    let threshold = pick(args.threshold, cfg.threshold, 4.0);

    let scorer_choice = match (&args.scorer, &cfg.scorer) {
        (Some(c), _) => Some(*c),
        (None, Some(s)) => Some(scorer_choice_from_cfg(s)?),
        (None, None) => None,
    };
    match (mode, scorer_choice) {
        (Mode::Wis, None) => {
            return Err(WisError::config(
                "mode wis requires --scorer (perturbation, regression, or classification)",
            ))
        }
        (Mode::Baseline, Some(_)) => {
            return Err(WisError::config("--scorer given but --mode is baseline"))
        }
        _ => {}
    }

    let model_path = pick_opt(args.model.clone(), cfg.model.clone());
    let (lm, vocab, bundled) = load_model(model_path.as_deref())?;

    let corpus_path = pick_opt(args.corpus.clone(), cfg.corpus.clone());
    let window = pick(args.window, cfg.window, DEFAULT_WINDOW);
    let (scorer, default_r0): (Option<Box<dyn ImportanceScorer>>, f64) = match scorer_choice {
        None => (None, 0.0),
        Some(ScorerChoice::Perturbation) => (
            Some(perturbation_scorer(
                &vocab,
                corpus_path.as_deref(),
                bundled,
                window,
            )?),
            DEFAULT_R0_PERTURBATION,
        ),
        Some(choice) => {
            let path = pick_opt(args.scorer_model.clone(), cfg.scorer_model.clone())
                .ok_or_else(|| {
                    WisError::config(
                        "trained scorers need --scorer-model (a file from train-scorer)",
                    )
                })?;
            let scorer = trained_scorer(&path, choice.kind().expect("trained kinds only"))?;
            let r0 = scorer.model().r0_default;
            (Some(Box::new(scorer)), r0)
        }
    };
    let r0 = pick(args.r0, cfg.r0, default_r0);

    let mut prompts: Vec<String> = args.prompt.clone();
    if let Some(pf) = pick_opt(args.prompt_file.clone(), cfg.prompts.clone()) {
        if !prompts.is_empty() {
            return Err(WisError::config("use --prompt or --prompt-file, not both"));
        }
        prompts = read_prompt_file(&pf)?;
    }
    if prompts.is_empty() {
        return Err(WisError::config("no prompts: pass --prompt or --prompt-file"));
    }

    let mut out = String::new();
    for prompt in prompts {
        let ids = tokenize(&prompt, &vocab).ids;
        let gate = scorer.as_deref().map(|s| (s, r0));
        let seq = generate_watermarked(&lm, &params, gate, &ids, &beam)?;
        let record = GenRecord {
            output: detokenize(seq.generated(), &vocab)?,
            z_self: detect_seq(&seq, &params, threshold)?.z,
            prompt,
        };
        out.push_str(&serde_json::to_string(&record)?);
        out.push('\n');
    }
    write_output(args.out.as_deref(), &out)
}

// ------------------------------------------------------------------ detect

#[derive(Args, Debug)]
pub struct DetectArgs {
    /// Model file whose vocabulary tokenizes the text (default: bundled)
    #[arg(long)]
    model: Option<PathBuf>,
    /// Text to score, inline
    #[arg(long)]
    text: Option<String>,
    /// File whose entire content is one text to score
    #[arg(long)]
    text_file: Option<PathBuf>,
    /// JSONL stream to score line by line ({"output": "..."} as produced
    /// by generate; "-" reads stdin)
    #[arg(long)]
    input: Option<String>,
    /// Greenlist fraction in (0, 1) (default 0.25)
    #[arg(long)]
    gamma: Option<f64>,
    /// Greenlist context width in tokens (default 1)
    #[arg(long)]
    context_width: Option<usize>,
    /// Verdict threshold on the z-score (default 4.0)
    #[arg(long)]
    threshold: Option<f64>,
    /// Watermark key as hex (falls back to WIS_KEY, then the config file)
    #[arg(long)]
    key: Option<String>,
    /// Output file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Deserialize)]
struct DetectLine {
    #[serde(alias = "text")]
    output: String,
}

pub fn detect_cmd(args: &DetectArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let params = WatermarkParams {
        key: resolve_key(args.key.as_deref(), &cfg)?,
        gamma: pick(args.gamma, cfg.gamma, 0.25),
        delta: 0.0, // unused by detection
        context_width: pick(args.context_width, cfg.context_width, 1),
        mode: Mode::Baseline, // unused by detection
    };
    params.validate()?;
    let threshold = pick(args.threshold, cfg.threshold, 4.0);
    let model_path = pick_opt(args.model.clone(), cfg.model.clone());
    let (_, vocab, _) = load_model(model_path.as_deref())?;

    let sources =
        args.text.iter().count() + args.text_file.iter().count() + args.input.iter().count();
    if sources != 1 {
        return Err(WisError::config(
            "detect needs exactly one of --text, --text-file, --input",
        ));
    }

    let mut out = String::new();
    if let Some(text) = &args.text {
        let r = detect(text, &vocab, &params, threshold)?;
        out.push_str(&serde_json::to_string(&r)?);
        out.push('\n');
    } else if let Some(path) = &args.text_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| WisError::io(path.display().to_string(), e))?;
        let r = detect(&text, &vocab, &params, threshold)?;
        out.push_str(&serde_json::to_string(&r)?);
        out.push('\n');
    } else if let Some(spec) = &args.input {
        let content = if spec == "-" {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| WisError::io("<stdin>".to_string(), e))?;
            s
        } else {
            std::fs::read_to_string(spec).map_err(|e| WisError::io(spec.clone(), e))?
        };
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: DetectLine = serde_json::from_str(line).map_err(|e| WisError::Malformed {
                line: i + 1,
                msg: e.to_string(),
            })?;
            let r: DetectionResult = detect(&rec.output, &vocab, &params, threshold)?;
            out.push_str(&serde_json::to_string(&r)?);
            out.push('\n');
        }
    }
    write_output(args.out.as_deref(), &out)
}

// ------------------------------------------------------------ build-labels

#[derive(Args, Debug)]
pub struct BuildLabelsArgs {
    /// Corpus to paraphrase and label (default: bundled labeling corpus)
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Synonym table JSON {"token": ["alternative", ...]} (default: bundled)
    #[arg(long)]
    synonyms: Option<PathBuf>,
    /// Model file supplying the vocabulary (default: bundled)
    #[arg(long)]
    model: Option<PathBuf>,
    /// Paraphrases per document (default 8)
    #[arg(long)]
    n: Option<usize>,
    /// Seed for the paraphrase oracle (default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Per-token synonym substitution probability (default 0.3)
    #[arg(long)]
    p_synonym: Option<f64>,
    /// Per-token dropout probability (default 0.2)
    #[arg(long)]
    p_dropout: Option<f64>,
    /// Adjacent-pair swap probability (default 0.1)
    #[arg(long)]
    p_swap: Option<f64>,
    /// Output labels file (JSONL)
    #[arg(long)]
    out: PathBuf,
    /// JSON config file; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn build_labels_cmd(args: &BuildLabelsArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let corpus = match pick_opt(args.corpus.clone(), cfg.corpus.clone()) {
        Some(p) => Corpus::load(&p)?,
        None => data::sample_labeling_corpus(),
    };
    let oracle = match pick_opt(args.synonyms.clone(), cfg.synonyms.clone()) {
        Some(p) => RuleOracle::load(&p)?,
        None => data::sample_synonyms(),
    };
    let oracle = oracle.with_probs(
        pick(args.p_synonym, None, RuleOracle::DEFAULT_P_SYNONYM),
        pick(args.p_dropout, None, RuleOracle::DEFAULT_P_DROPOUT),
        pick(args.p_swap, None, RuleOracle::DEFAULT_P_SWAP),
    );
    let model_path = pick_opt(args.model.clone(), cfg.model.clone());
    let (_, vocab, _) = load_model(model_path.as_deref())?;
    let n = pick(args.n, None, 8);
    let seed = pick(args.seed, cfg.seed, 0);

    let labeled = build_labels(&corpus, &vocab, &oracle, n, seed)?;
    labeled.save(&args.out)?;
    let positions: usize = labeled.records.iter().map(|r| r.tokens.len()).sum();
    println!(
        "labeled {} records ({positions} token positions) with N={} paraphrases -> {}",
        labeled.records.len(),
        labeled.n,
        args.out.display()
    );
    Ok(())
}

// ------------------------------------------------------------ train-scorer

#[derive(Args, Debug)]
pub struct TrainScorerArgs {
    /// Labels file from build-labels (JSONL)
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Which scorer to train
    #[arg(long)]
    kind: ScorerKind,
    /// Model file supplying the vocabulary (default: bundled)
    #[arg(long)]
    model: Option<PathBuf>,
    /// IDF corpus (default: bundled corpus when the bundled model is used)
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Gradient-descent epochs (default 300)
    #[arg(long)]
    epochs: Option<usize>,
    /// Learning rate (default 0.5)
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Feature window over the prefix (default 16)
    #[arg(long)]
    window: Option<usize>,
    /// Relative-position denominator at inference (default 100)
    #[arg(long)]
    horizon: Option<usize>,
    /// Feature embedding dimension (default 64)
    #[arg(long)]
    embed_dim: Option<usize>,
    /// Feature-hash key as hex (not secret; default fixed)
    #[arg(long)]
    embed_key: Option<String>,
    /// Default importance threshold stored in the model
    /// (default 0.9 regression / 0.5 classification)
    #[arg(long)]
    r0_default: Option<f64>,
    /// Output scorer file (JSON)
    #[arg(long)]
    out: PathBuf,
    /// JSON config file; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn train_scorer_cmd(args: &TrainScorerArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let labels_path = pick_opt(args.labels.clone(), cfg.labels.clone())
        .ok_or_else(|| WisError::config("train-scorer needs --labels"))?;
    let labeled = wis_core::labeling::LabeledCorpus::load(&labels_path)?;
    let model_path = pick_opt(args.model.clone(), cfg.model.clone());
    let (_, vocab, bundled) = load_model(model_path.as_deref())?;
    let corpus_path = pick_opt(args.corpus.clone(), cfg.corpus.clone());
    let idf = idf_table(&vocab, corpus_path.as_deref(), bundled, "train-scorer")?;

    let defaults = TrainOpts::default();
    let kind_r0 = match args.kind {
        ScorerKind::Regression => wis_core::scoring::DEFAULT_R0_REGRESSION,
        ScorerKind::Classification => wis_core::scoring::DEFAULT_R0_CLASSIFICATION,
    };
    let opts = TrainOpts {
        epochs: pick(args.epochs, None, defaults.epochs),
        learning_rate: pick(args.learning_rate, None, defaults.learning_rate),
        window: pick(args.window, cfg.window, defaults.window),
        horizon: pick(args.horizon, None, defaults.horizon),
        embed_dim: pick(args.embed_dim, None, defaults.embed_dim),
        embed_key: match &args.embed_key {
            Some(s) => parse_key_hex(s)?,
            None => defaults.embed_key,
        },
        r0_default: pick(args.r0_default, None, kind_r0),
    };
    let model = train_scorer(&labeled, args.kind, &idf, vocab.size(), &opts)?;
    model.save(&args.out)?;
    println!(
        "trained {} scorer on {} records ({} weights, r0 default {}) -> {}",
        args.kind,
        labeled.records.len(),
        model.weights.len(),
        model.r0_default,
        args.out.display()
    );
    Ok(())
}

// ------------------------------------------------------------------- bench

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Model file from train-lm (default: the bundled sample model)
    #[arg(long)]
    model: Option<PathBuf>,
    /// IDF corpus for the perturbation scorer (default: bundled corpus
    /// when the bundled model is used)
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Prompts file: JSONL {"prompt": "...", "reference": "..."}
    /// (default: bundled prompts)
    #[arg(long)]
    prompts: Option<PathBuf>,
    /// Grid gamma; repeat the flag (default 0.25)
    #[arg(long = "gamma", value_name = "GAMMA")]
    gammas: Vec<f64>,
    /// Grid delta; repeat the flag (default 1.5 2 2.5 3 4)
    #[arg(long = "delta", value_name = "DELTA")]
    deltas: Vec<f64>,
    /// Grid method; repeat the flag (baseline, wis-perturbation,
    /// wis-regression, wis-classification; default baseline)
    #[arg(long = "method", value_name = "METHOD")]
    methods: Vec<Method>,
    /// Importance threshold for wis-perturbation (default 0.02)
    #[arg(long)]
    r0_perturbation: Option<f64>,
    /// Importance threshold for wis-regression (default 0.9)
    #[arg(long)]
    r0_regression: Option<f64>,
    /// Importance threshold for wis-classification (default 0.5)
    #[arg(long)]
    r0_classification: Option<f64>,
    /// Scoring window for the perturbation scorer (default 16)
    #[arg(long)]
    window: Option<usize>,
    /// Greenlist context width in tokens (default 1)
    #[arg(long)]
    context_width: Option<usize>,
    /// Completion length cap in tokens (default 100)
    #[arg(long)]
    max_len: Option<usize>,
    /// Tokens to force before end-of-text is allowed (default 100)
    #[arg(long)]
    min_tokens: Option<usize>,
    /// Beam width (default 2)
    #[arg(long)]
    beam: Option<usize>,
    /// Detection threshold (default 4.0)
    #[arg(long)]
    threshold: Option<f64>,
    /// Use only the first N prompts
    #[arg(long)]
    limit: Option<usize>,
    /// Trained scorer file for the wis-regression method
    #[arg(long)]
    regression_model: Option<PathBuf>,
    /// Trained scorer file for the wis-classification method
    #[arg(long)]
    classification_model: Option<PathBuf>,
    /// Watermark key as hex (falls back to WIS_KEY, then the config file)
    #[arg(long)]
    key: Option<String>,
    /// Output CSV file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a JSON summary (config grid + rows) to this file
    #[arg(long)]
    summary: Option<PathBuf>,
    /// JSON config file; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn bench(args: &BenchArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let key = resolve_key(args.key.as_deref(), &cfg)?;
    let d = SweepConfig::default();
    let methods = if !args.methods.is_empty() {
        args.methods.clone()
    } else if let Some(names) = &cfg.methods {
        names
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Method>>>()?
    } else {
        d.methods.clone()
    };
    let sweep_cfg = SweepConfig {
        gammas: if !args.gammas.is_empty() {
            args.gammas.clone()
        } else {
            cfg.gammas.clone().unwrap_or(d.gammas)
        },
        deltas: if !args.deltas.is_empty() {
            args.deltas.clone()
        } else {
            cfg.deltas.clone().unwrap_or(d.deltas)
        },
        methods,
        r0_perturbation: pick(args.r0_perturbation, cfg.r0_perturbation, d.r0_perturbation),
        r0_regression: pick(args.r0_regression, cfg.r0_regression, d.r0_regression),
        r0_classification: pick(
            args.r0_classification,
            cfg.r0_classification,
            d.r0_classification,
        ),
        context_width: pick(args.context_width, cfg.context_width, d.context_width),
        max_len: pick(args.max_len, cfg.max_len, d.max_len),
        min_tokens: pick(args.min_tokens, cfg.min_tokens, d.min_tokens),
        beam_width: pick(args.beam, cfg.beam, d.beam_width),
        threshold: pick(args.threshold, cfg.threshold, d.threshold),
    };

    let model_path = pick_opt(args.model.clone(), cfg.model.clone());
    let (lm, vocab, bundled) = load_model(model_path.as_deref())?;
    let mut prompts: Vec<PromptRecord> = match pick_opt(args.prompts.clone(), cfg.prompts.clone())
    {
        Some(p) => load_prompts(&p)?,
        None => data::sample_prompts(),
    };
    if let Some(limit) = pick_opt(args.limit, cfg.limit) {
        prompts.truncate(limit);
    }

    let window = pick(args.window, cfg.window, DEFAULT_WINDOW);
    let needs = |m: Method| sweep_cfg.methods.contains(&m);
    let pert: Option<Box<dyn ImportanceScorer>> = if needs(Method::WisPerturbation) {
        Some(perturbation_scorer(
            &vocab,
            pick_opt(args.corpus.clone(), cfg.corpus.clone()).as_deref(),
            bundled,
            window,
        )?)
    } else {
        None
    };
    let load_trained = |flag: &Option<PathBuf>,
                            cfg_path: &Option<PathBuf>,
                            method: Method,
                            kind: ScorerKind,
                            flag_name: &str|
     -> Result<Option<Box<dyn ImportanceScorer>>> {
        if !needs(method) {
            return Ok(None);
        }
        let path = pick_opt(flag.clone(), cfg_path.clone()).ok_or_else(|| {
            WisError::config(format!("method {method} requires --{flag_name}"))
        })?;
        Ok(Some(Box::new(trained_scorer(&path, kind)?)))
    };
    let reg = load_trained(
        &args.regression_model,
        &cfg.regression_model,
        Method::WisRegression,
        ScorerKind::Regression,
        "regression-model",
    )?;
    let cls = load_trained(
        &args.classification_model,
        &cfg.classification_model,
        Method::WisClassification,
        ScorerKind::Classification,
        "classification-model",
    )?;
    let scorers = SweepScorers {
        perturbation: pert.as_deref(),
        regression: reg.as_deref(),
        classification: cls.as_deref(),
    };

    let rows = run_sweep(&lm, &vocab, &prompts, key, &sweep_cfg, &scorers)?;
    if let Some(path) = &args.summary {
        let json = summary_json(&sweep_cfg, prompts.len(), &rows)?;
        std::fs::write(path, json).map_err(|e| WisError::io(path.display().to_string(), e))?;
    }
    write_output(args.out.as_deref(), &rows_to_csv(&rows))
}
