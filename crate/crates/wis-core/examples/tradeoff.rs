//! Sweep the bundled model over a small delta grid and print the
//! detection/quality trade-off as CSV.
//!
//!   cargo run --release -p wis-core --example tradeoff

use wis_core::bench::{rows_to_csv, run_sweep, Method, SweepConfig, SweepScorers};
use wis_core::data;
use wis_core::scoring::{
    HashedEmbedding, IdfTable, PerturbationScorer, WindowedScorer, DEFAULT_EMBED_DIM,
    DEFAULT_WINDOW, EMBED_KEY,
};

fn main() -> wis_core::Result<()> {
    let (lm, vocab) = data::sample_model()?;
    let prompts = data::sample_prompts();
    let idf = IdfTable::from_corpus(&data::sample_corpus(), &vocab);
    let embedding = HashedEmbedding::new(vocab.size(), DEFAULT_EMBED_DIM, EMBED_KEY, idf);
    let perturbation = WindowedScorer::new(PerturbationScorer::new(embedding), DEFAULT_WINDOW);

    let config = SweepConfig {
        deltas: vec![2.0, 4.0],
        methods: vec![Method::Baseline, Method::WisPerturbation],
        ..SweepConfig::default()
    };
    let scorers = SweepScorers {
        perturbation: Some(&perturbation),
        ..SweepScorers::default()
    };
    let key = 0x0123_4567_89ab_cdef;
    let rows = run_sweep(&lm, &vocab, &prompts[..50], key, &config, &scorers)?;
    print!("{}", rows_to_csv(&rows));
    Ok(())
}
