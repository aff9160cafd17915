// Load a transcript corpus and pronunciation lexicon, then pick out child
// productions: glossed successes and phonology-only failures.

use std::collections::HashSet;
use std::error::Error;
use std::path::PathBuf;

use cdl::corpus::{load_corpus, select_tokens, SelectOptions};
use cdl::phonology::load_lexicon;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let corpus = load_corpus(fixture("toy_corpus.jsonl"))?.value;
    let lexicon = load_lexicon(fixture("toy_lexicon.tsv"))?.value;
    let whitelist: HashSet<String> = lexicon.iter().map(|e| e.word.clone()).collect();

    let sel = select_tokens(&corpus, &lexicon, &whitelist, &SelectOptions::default());
    for t in &sel.tokens {
        println!("{:8} {:8} {}", t.id, t.kind.label(), t.observed.to_spaced());
    }
    for (reason, n) in sel.exclusion_counts() {
        println!("excluded {:24} {n}", reason.code());
    }
    assert_eq!(sel.failures().count(), 2);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
