// Posterior surprisal and entropy for each selected token.

use std::collections::HashSet;
use std::error::Error;
use std::path::PathBuf;

use cdl::corpus::{load_corpus, select_tokens, SelectOptions};
use cdl::likelihood::DistanceCache;
use cdl::phonology::load_lexicon;
use cdl::posterior::{score_token, ScoreConfig};
use cdl::priors::{UnigramModel, UnigramPrior};
use cdl::vocabulary::{build_vocab, count_glosses};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let corpus = load_corpus(fixture("toy_corpus.jsonl"))?.value;
    let lexicon = load_lexicon(fixture("toy_lexicon.tsv"))?.value;
    let whitelist: HashSet<String> = lexicon.iter().map(|e| e.word.clone()).collect();
    let vocab = build_vocab(&lexicon, &corpus, &whitelist, 3)?;
    let sel = select_tokens(&corpus, &lexicon, &whitelist, &SelectOptions::default());
    let prior = UnigramPrior {
        model: UnigramModel::from_counts(&count_glosses(&corpus)),
    };
    let cache = DistanceCache::new();
    let cfg = ScoreConfig::default();

    for token in &sel.tokens {
        let r = score_token(token, &prior, &vocab, &cfg, Some(&cache))?;
        let (top, p) = &r.top_k[0];
        match r.posterior_surprisal_bits {
            Some(s) => println!(
                "{:8} heard {:10} meant {:5} -> {top} ({p:.2}), surprisal {s:.2} bits",
                r.token_id,
                token.observed.to_spaced(),
                token.kind.gloss().unwrap_or("")
            ),
            None => println!(
                "{:8} heard {:10} failure  -> {top} ({p:.2}), entropy {:.2} bits",
                r.token_id,
                token.observed.to_spaced(),
                r.posterior_entropy_bits
            ),
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
