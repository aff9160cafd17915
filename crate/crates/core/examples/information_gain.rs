// Bits gained over a uniform guess from the prior, the data, and both,
// binned by child age.

use std::error::Error;
use std::path::PathBuf;

use cdl::analysis::{information_gain_by_age, Condition, GainObservation};
use cdl::likelihood::DistanceCache;
use cdl::pipeline::{self, NgramWindow, PriorSpec, RunConfig};
use cdl::posterior::ScoreConfig;
use cdl::priors::{UniformPrior, DEFAULT_BACKOFF};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut cfg = RunConfig::new(fixture("toy_corpus.jsonl"), fixture("toy_lexicon.tsv"), ".");
    cfg.prior = PriorSpec::Ngram {
        order: 2,
        window: NgramWindow::OneUtt,
        backoff: DEFAULT_BACKOFF,
        train_corpus: None,
    };
    let inputs = pipeline::load_inputs(&cfg)?;
    let sel = pipeline::select(&inputs, &cfg);
    let vocab = pipeline::build_vocabulary(&inputs, &cfg)?;
    let fitted = pipeline::build_prior(&cfg, &inputs);
    let cache = DistanceCache::new();
    let score_cfg = ScoreConfig::default();
    let with_prior = pipeline::score_all(&sel.tokens, fitted.as_ref(), &vocab, &score_cfg, &cache)?;
    let uniform = pipeline::score_all(&sel.tokens, &UniformPrior, &vocab, &score_cfg, &cache)?;

    let obs = GainObservation::pair_scores(&with_prior.scores, &uniform.scores)?;
    let report = information_gain_by_age(&obs, 6);
    for r in &report.records {
        println!(
            "{:>2}-{:<2} months  prior {:.2}  data {:.2}  both {:.2}  ({} tokens)",
            r.age_lo,
            r.age_hi,
            r.mean_bits(Condition::Prior),
            r.mean_bits(Condition::Data),
            r.mean_bits(Condition::Both),
            r.n_tokens
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
