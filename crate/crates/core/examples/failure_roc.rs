// Does posterior entropy separate communicative failures from successes?

use std::error::Error;
use std::path::PathBuf;

use cdl::analysis::{mann_whitney_auc, roc_failures};
use cdl::likelihood::DistanceCache;
use cdl::pipeline::{self, PriorSpec, RunConfig};
use cdl::posterior::ScoreConfig;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut cfg = RunConfig::new(fixture("toy_corpus.jsonl"), fixture("toy_lexicon.tsv"), ".");
    cfg.prior = PriorSpec::Unigram;
    let inputs = pipeline::load_inputs(&cfg)?;
    let sel = pipeline::select(&inputs, &cfg);
    let vocab = pipeline::build_vocabulary(&inputs, &cfg)?;
    let prior = pipeline::build_prior(&cfg, &inputs);
    let scored = pipeline::score_all(
        &sel.tokens,
        prior.as_ref(),
        &vocab,
        &ScoreConfig::default(),
        &DistanceCache::new(),
    )?;

    let (successes, failures): (Vec<_>, Vec<_>) = scored.scores.iter().partition(|s| s.is_success());
    let h = |v: &[&cdl::posterior::TokenScore]| v.iter().map(|s| s.posterior_entropy).collect::<Vec<_>>();
    let roc = roc_failures(&h(&successes), &h(&failures))?;
    print!("{}", roc.to_csv());
    println!("AUC {:.3}", roc.auc);
    assert!((roc.auc - mann_whitney_auc(&h(&successes), &h(&failures))?).abs() < 1e-12);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
