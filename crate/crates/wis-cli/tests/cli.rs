//! End-to-end tests of the `wis` binary: exit codes, determinism, the
//! generate -> detect pipeline, key sourcing, and config/flag precedence.

use std::path::Path;
use std::process::{Command, Output};

const KEY: &str = "0123456789abcdef";

fn wis(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wis"));
    // Tests control the key explicitly; never inherit one from the
    // environment.
    cmd.env_remove("WIS_KEY");
    cmd.args(args);
    cmd
}

fn run(args: &[&str]) -> Output {
    wis(args).output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn first_json(s: &str) -> serde_json::Value {
    serde_json::from_str(s.lines().next().expect("at least one line")).expect("valid JSON line")
}

#[test]
fn generate_then_detect_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("gen.jsonl");
    let out_str = out_path.to_str().unwrap();

    let gen = run(&[
        "generate",
        "--prompt",
        "the plateau berth logged this",
        "--key",
        KEY,
        "--delta",
        "2.5",
        "--out",
        out_str,
    ]);
    assert!(gen.status.success());
    let line = std::fs::read_to_string(&out_path).unwrap();
    let rec = first_json(&line);
    assert!(rec["output"].as_str().unwrap().split_whitespace().count() >= 50);
    assert!(rec["z_self"].as_f64().unwrap() > 4.0);

    // Right key: watermarked.
    let det = stdout_of(&run(&["detect", "--input", out_str, "--key", KEY]));
    let v = first_json(&det);
    assert_eq!(v["verdict"], "watermarked");
    assert_eq!(v["token_count"], 100);

    // Wrong key: the same text looks null.
    let det = stdout_of(&run(&[
        "detect",
        "--input",
        out_str,
        "--key",
        "aaaaaaaaaaaaaaaa",
    ]));
    let v = first_json(&det);
    assert_eq!(v["verdict"], "not-watermarked");
    assert!(v["z"].as_f64().unwrap() < 4.0);
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = [
        "generate",
        "--prompt",
        "a gradual drop in humidity",
        "--key",
        KEY,
        "--mode",
        "wis",
        "--scorer",
        "perturbation",
        "--max-len",
        "60",
    ];
    let a = stdout_of(&run(&args));
    let b = stdout_of(&run(&args));
    assert_eq!(a, b);
    assert!(!a.trim().is_empty());
}

#[test]
fn delta_zero_output_is_key_independent() {
    // With no boost the watermark key cannot influence the beam search.
    let gen = |key: &str| {
        let out = stdout_of(&run(&[
            "generate",
            "--prompt",
            "the plateau berth logged this",
            "--key",
            key,
            "--delta",
            "0",
            "--max-len",
            "40",
        ]));
        first_json(&out)["output"].as_str().unwrap().to_string()
    };
    assert_eq!(gen(KEY), gen("aaaaaaaaaaaaaaaa"));
}

#[test]
fn wis_key_environment_variable_is_honored() {
    let mut cmd = wis(&[
        "generate",
        "--prompt",
        "the plateau berth logged this",
        "--delta",
        "1000",
        "--max-len",
        "50",
    ]);
    cmd.env("WIS_KEY", KEY);
    let out = cmd.output().unwrap();
    let text = stdout_of(&out);
    // Saturating delta: everything green, z = sqrt(T(1-gamma)/gamma).
    let z = first_json(&text)["z_self"].as_f64().unwrap();
    assert!((z - (50.0_f64 * 3.0).sqrt()).abs() < 1e-9, "z={z}");
}

#[test]
fn missing_key_is_a_config_error() {
    let out = run(&[
        "generate",
        "--prompt",
        "the plateau berth logged this",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("WIS_KEY"), "{err}");
}

#[test]
fn missing_corpus_file_exits_2_and_names_the_path() {
    let out = run(&[
        "train-lm",
        "--corpus",
        "/no/such/corpus.jsonl",
        "--out",
        "/tmp/unused-model.json",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("/no/such/corpus.jsonl"), "{err}");
}

#[test]
fn wis_mode_without_scorer_exits_2() {
    let out = run(&[
        "generate",
        "--prompt",
        "x",
        "--key",
        KEY,
        "--mode",
        "wis",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--scorer"), "{err}");
}

#[test]
fn invalid_bench_method_exits_2() {
    let out = run(&["bench", "--key", KEY, "--method", "bogus", "--limit", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn detect_requires_exactly_one_source() {
    let out = run(&["detect", "--key", KEY]);
    assert_eq!(out.status.code(), Some(2));
    let both = run(&["detect", "--key", KEY, "--text", "a b", "--input", "x"]);
    assert_eq!(both.status.code(), Some(2));
}

#[test]
fn detect_plain_text_is_not_watermarked() {
    let out = stdout_of(&run(&[
        "detect",
        "--text",
        "the station crew logged a sharp rise in pressure during the morning \
         watch and confirmed the reading before the second sweep through the \
         eastern ridge while the relay recorded a gradual drop in humidity",
        "--key",
        KEY,
    ]));
    assert_eq!(first_json(&out)["verdict"], "not-watermarked");
}

#[test]
fn train_lm_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    std::fs::write(
        &corpus,
        concat!(
            r#"{"text": "the station crew logged a sharp rise in pressure"}"#,
            "\n",
            r#"{"text": "a gradual drop in humidity followed the evening storm"}"#,
            "\n",
        ),
    )
    .unwrap();
    // Same output name in two directories: the files embed the vocabulary
    // file name, so only the directory may differ.
    let model_of = |subdir: &str| -> Vec<u8> {
        let out_dir = dir.path().join(subdir);
        std::fs::create_dir(&out_dir).unwrap();
        let out_path = out_dir.join("model.json");
        let out = run(&[
            "train-lm",
            "--corpus",
            corpus.to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        std::fs::read(&out_path).unwrap()
    };
    assert_eq!(model_of("a"), model_of("b"));
}

#[test]
fn trained_model_round_trips_through_generate() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    let mut lines = String::new();
    for i in 0..20 {
        lines.push_str(&format!(
            "{{\"text\": \"the crew logged reading {i} before the sweep and \
             the relay recorded a drop near marker {i}\"}}\n"
        ));
    }
    std::fs::write(&corpus, lines).unwrap();
    let model = dir.path().join("model.json");
    assert!(run(&[
        "train-lm",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
    ])
    .status
    .success());

    let out = stdout_of(&run(&[
        "generate",
        "--model",
        model.to_str().unwrap(),
        "--prompt",
        "the crew logged",
        "--key",
        KEY,
        "--delta",
        "1000",
        "--max-len",
        "30",
    ]));
    let z = first_json(&out)["z_self"].as_f64().unwrap();
    assert!((z - (30.0_f64 * 3.0).sqrt()).abs() < 1e-9, "z={z}");
}

#[test]
fn labels_and_scorer_pipeline_runs() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels.jsonl");
    let scorer = dir.path().join("reg.json");
    let out = run(&[
        "build-labels",
        "--n",
        "4",
        "--seed",
        "7",
        "--out",
        labels.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let out = run(&[
        "train-scorer",
        "--labels",
        labels.to_str().unwrap(),
        "--kind",
        "regression",
        "--epochs",
        "20",
        "--out",
        scorer.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    // The trained file drives wis-mode generation...
    let gen = run(&[
        "generate",
        "--prompt",
        "the plateau berth logged this",
        "--key",
        KEY,
        "--mode",
        "wis",
        "--scorer",
        "regression",
        "--scorer-model",
        scorer.to_str().unwrap(),
        "--max-len",
        "40",
    ]);
    assert!(gen.status.success());

    // ...but only under its own kind.
    let mismatched = run(&[
        "generate",
        "--prompt",
        "x",
        "--key",
        KEY,
        "--mode",
        "wis",
        "--scorer",
        "classification",
        "--scorer-model",
        scorer.to_str().unwrap(),
    ]);
    assert_eq!(mismatched.status.code(), Some(2));
    let err = String::from_utf8_lossy(&mismatched.stderr);
    assert!(err.contains("regression"), "{err}");
}

#[test]
fn config_file_fills_in_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        format!(r#"{{"key_hex": "{KEY}", "gamma": 0.5, "delta": 1000, "max_len": 50}}"#),
    )
    .unwrap();
    let z_of = |extra: &[&str]| {
        let mut args = vec![
            "generate",
            "--prompt",
            "the plateau berth logged this",
            "--config",
            cfg.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        let out = stdout_of(&run(&args));
        first_json(&out)["z_self"].as_f64().unwrap()
    };
    // Saturated z depends only on gamma: sqrt(T(1-gamma)/gamma).
    let from_config = z_of(&[]);
    assert!((from_config - (50.0_f64).sqrt()).abs() < 1e-9, "{from_config}");
    let overridden = z_of(&["--gamma", "0.25"]);
    assert!((overridden - (150.0_f64).sqrt()).abs() < 1e-9, "{overridden}");
}

#[test]
fn config_validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    // Unknown field.
    std::fs::write(&cfg, r#"{"gammma": 0.25}"#).unwrap();
    let out = run(&["detect", "--text", "a b", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gammma"));

    // Referenced file missing; error names the field.
    std::fs::write(&cfg, r#"{"model": "/definitely/not/here.json"}"#).unwrap();
    let out = run(&["detect", "--text", "a b", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("'model'"));
}

#[test]
fn bench_smoke_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("summary.json");
    let out = stdout_of(&run(&[
        "bench",
        "--key",
        KEY,
        "--delta",
        "4",
        "--method",
        "baseline",
        "--limit",
        "5",
        "--max-len",
        "50",
        "--min-tokens",
        "50",
        "--summary",
        summary.to_str().unwrap(),
    ]));
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "gamma,delta,method,detection_rate,rouge1_ref,rouge1_self,mean_z,n_samples"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("0.25,4,baseline,"), "{row}");
    assert!(row.ends_with(",5"), "{row}");

    let summary_text = std::fs::read_to_string(&summary).unwrap();
    let v: serde_json::Value = serde_json::from_str(&summary_text).unwrap();
    assert_eq!(v["n_prompts"], 5);
    assert_eq!(v["rows"].as_array().unwrap().len(), 1);
    // The secret never lands in any output.
    assert!(!out.contains(KEY));
    assert!(!summary_text.contains(KEY));
}

#[test]
fn help_lists_all_subcommands() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in [
        "train-lm",
        "generate",
        "detect",
        "build-labels",
        "train-scorer",
        "bench",
    ] {
        assert!(text.contains(sub), "help is missing {sub}");
    }
}

/// Regression guard: outputs must never contain the key in any spelling.
#[test]
fn key_never_appears_in_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let gen_path = dir.path().join("gen.jsonl");
    assert!(run(&[
        "generate",
        "--prompt",
        "the plateau berth logged this",
        "--key",
        KEY,
        "--max-len",
        "30",
        "--out",
        gen_path.to_str().unwrap(),
    ])
    .status
    .success());
    let gen = std::fs::read_to_string(&gen_path).unwrap();
    assert!(!gen.to_lowercase().contains(KEY));
    assert!(!gen.contains("key"));
    assert!(Path::new(&gen_path).exists());
}
