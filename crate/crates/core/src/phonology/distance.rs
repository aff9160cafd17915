use super::PhonemeSeq;

/// Unit-cost Levenshtein distance over arbitrary token slices.
pub fn levenshtein<T: PartialEq>(source: &[T], target: &[T]) -> usize {
    if source.is_empty() {
        return target.len();
    }
    if target.is_empty() {
        return source.len();
    }

    let mut row: Vec<usize> = (0..=target.len()).collect();
    for (i, s) in source.iter().enumerate() {
        let mut diag = i;
        row[0] = i + 1;
        for (j, t) in target.iter().enumerate() {
            let best = (row[j].min(row[j + 1]) + 1).min(diag + usize::from(s != t));
            diag = row[j + 1];
            row[j + 1] = best;
        }
    }
    row[target.len()]
}

/// Phoneme edit distance: insertions, deletions and substitutions of whole
/// segments, so a diphthong or affricate counts as one unit.
pub fn edit_distance(a: &PhonemeSeq, b: &PhonemeSeq) -> u32 {
    levenshtein(a.segments(), b.segments()) as u32
}
