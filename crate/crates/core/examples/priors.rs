// Uniform, unigram and trigram priors for one masked slot.

use std::collections::HashSet;
use std::error::Error;
use std::path::PathBuf;

use cdl::corpus::{load_corpus, select_tokens, SelectOptions};
use cdl::phonology::load_lexicon;
use cdl::posterior::entropy;
use cdl::priors::{
    ContextMode, NgramModel, NgramPrior, PriorSource, UniformPrior, UnigramModel, UnigramPrior, DEFAULT_BACKOFF,
};
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

    let counts = count_glosses(&corpus);
    let unigram = UnigramModel::from_counts(&counts);
    let sources: Vec<Box<dyn PriorSource>> = vec![
        Box::new(UniformPrior),
        Box::new(UnigramPrior { model: unigram.clone() }),
        Box::new(NgramPrior {
            model: NgramModel::train(&corpus, 3, DEFAULT_BACKOFF, unigram),
            mode: ContextMode::Utterance,
        }),
    ];

    // "I want to ___": the slot after "to".
    let token = sel
        .tokens
        .iter()
        .find(|t| t.context.left_of_mask() == ["i", "want", "to"])
        .ok_or("no such slot")?;
    println!("context: {}", token.context.masked_gloss().join(" "));
    for source in &sources {
        let prior = source.prior(&token.context, &vocab)?;
        let best = (0..vocab.len())
            .max_by(|&a, &b| prior.probs()[a].total_cmp(&prior.probs()[b]))
            .unwrap();
        println!(
            "{:8} H = {:.3} bits, mode {} ({:.3})",
            source.kind().to_string(),
            entropy(prior.probs()),
            vocab.word(best),
            prior.probs()[best]
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
