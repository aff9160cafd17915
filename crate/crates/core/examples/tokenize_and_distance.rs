// IPA tokenization and phoneme edit distance.

use std::error::Error;

use cdl::phonology::{edit_distance, tokenize_ipa};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    // Stress marks are dropped; length and rhoticity stay on their vowel.
    let target = tokenize_ipa("ˈwɔːtɚ")?;
    let produced = tokenize_ipa("wɑdə")?;
    println!("target   {}", target.to_spaced());
    println!("produced {}", produced.to_spaced());
    println!("distance {}", edit_distance(&target, &produced));

    // A tie bar makes an affricate one segment.
    let church = tokenize_ipa("t͡ʃɝt͡ʃ")?;
    assert_eq!(church.len(), 3);
    assert_eq!(edit_distance(&church, &church), 0);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
