// Compare priors by mean surprisal of the intended word, overall and by
// edit distance, on a synthetic corpus with real bigram structure.

use std::error::Error;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cdl::analysis::{surprisal_report, DistanceBins};
use cdl::likelihood::{DistanceCache, LikelihoodConfig};
use cdl::pipeline::score_all;
use cdl::posterior::ScoreConfig;
use cdl::priors::{
    ContextMode, NgramModel, NgramPrior, PriorSource, UniformPrior, UnigramModel, UnigramPrior, DEFAULT_BACKOFF,
};
use cdl::synthetic::{bigram_corpus, random_vocab, BigramProcess, NoiseChannel};
use cdl::vocabulary::count_glosses;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let vocab = random_vocab(40, &mut rng);
    let process = BigramProcess::random(vocab.len(), &mut rng);
    let channel = NoiseChannel::new(&vocab, 2.5);
    let train = bigram_corpus(&vocab, &process, &channel, 40, 50, 0, 1);
    let test = bigram_corpus(&vocab, &process, &channel, 4, 50, 0, 2);

    let unigram = UnigramModel::from_counts(&count_glosses(&train.corpus));
    let priors: Vec<(&str, Box<dyn PriorSource>)> = vec![
        (
            "bigram",
            Box::new(NgramPrior {
                model: NgramModel::train(&train.corpus, 2, DEFAULT_BACKOFF, unigram.clone()),
                mode: ContextMode::Utterance,
            }),
        ),
        ("unigram", Box::new(UnigramPrior { model: unigram })),
        ("uniform", Box::new(UniformPrior)),
    ];
    let cfg = ScoreConfig {
        likelihood: LikelihoodConfig::with_beta(2.5)?,
        ..ScoreConfig::default()
    };
    let cache = DistanceCache::new();
    let mut models = Vec::new();
    for (name, prior) in &priors {
        let scored = score_all(&test.tokens, prior.as_ref(), &vocab, &cfg, &cache)?;
        models.push((name.to_string(), scored.scores));
    }

    let report = surprisal_report(&models, DistanceBins::default())?;
    print!("{}", report.by_model_csv());
    print!("{}", report.by_distance_csv());
    print!("{}", report.paired_csv());
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
