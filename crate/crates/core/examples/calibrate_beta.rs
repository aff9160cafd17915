// Recover the noise scale of a known channel by grid search.

use std::error::Error;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cdl::likelihood::{calibrate_beta, CalibrationOptions};
use cdl::priors::{PriorSource, UniformPrior};
use cdl::synthetic::{beta_recovery_tokens, random_vocab, NoiseChannel};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let vocab = random_vocab(50, &mut rng);
    let channel = NoiseChannel::new(&vocab, 2.5);
    let tokens = beta_recovery_tokens(&vocab, &channel, 1000, 5);

    let opts = CalibrationOptions {
        sample_size: tokens.len(),
        ..CalibrationOptions::default()
    };
    let prior: &dyn PriorSource = &UniformPrior;
    let result = calibrate_beta(&tokens, &[prior], &vocab, &opts, None)?;
    for (beta, score) in result.curve.iter().step_by(5) {
        println!("beta {beta:.1}  geometric mean posterior {score:.4}");
    }
    println!("generating beta {}, estimate {}", channel.beta(), result.best_beta);
    assert!((result.best_beta - 2.5).abs() <= 0.2);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
