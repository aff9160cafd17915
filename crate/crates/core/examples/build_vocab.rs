// The candidate vocabulary: short lexicon words that the prior model knows
// and that occur often enough in the corpus.

use std::collections::HashSet;
use std::error::Error;
use std::path::PathBuf;

use cdl::corpus::load_corpus;
use cdl::phonology::load_lexicon;
use cdl::vocabulary::build_vocab;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let corpus = load_corpus(fixture("toy_corpus.jsonl"))?.value;
    let lexicon = load_lexicon(fixture("toy_lexicon.tsv"))?.value;
    let whitelist: HashSet<String> = std::fs::read_to_string(fixture("toy_whitelist.txt"))?
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.trim().to_string())
        .collect();

    let vocab = build_vocab(&lexicon, &corpus, &whitelist, 3)?;
    vocab.write_tsv(std::io::stdout().lock())?;
    assert!(!vocab.contains("go"), "not in the prior whitelist");
    assert!(!vocab.contains("banana"), "three syllables");
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
