// Every stage end to end: calibrate β, score under a trigram prior and the
// uniform baseline, analyze, and write CSVs plus a manifest.

use std::error::Error;
use std::path::PathBuf;

use cdl::pipeline::{run_pipeline, NgramWindow, PriorSpec, RunConfig};
use cdl::priors::DEFAULT_BACKOFF;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let out = tempfile::tempdir()?;
    let mut cfg = RunConfig::new(fixture("toy_corpus.jsonl"), fixture("toy_lexicon.tsv"), out.path());
    cfg.prior_vocab = Some(fixture("toy_whitelist.txt"));
    cfg.prior = PriorSpec::Ngram {
        order: 3,
        window: NgramWindow::OneUtt,
        backoff: DEFAULT_BACKOFF,
        train_corpus: None,
    };
    cfg.calibrate = true;
    cfg.seed = 1;

    let manifest = run_pipeline(&cfg)?;
    println!(
        "beta {} ({}), |V| = {}",
        manifest.beta, manifest.beta_source, manifest.vocab_size
    );
    println!("{:?}", manifest.tokens);
    for (file, sha) in &manifest.outputs {
        println!("{file:28} {}", &sha[..12]);
    }
    print!(
        "{}",
        std::fs::read_to_string(out.path().join("surprisal_by_model.csv"))?
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
