use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use tracing::{debug, warn};

use super::{tokenize_ipa, PhonemeSeq, PhonologyError};
use crate::ingest::{IngestReport, Loaded};

pub const LEXICON_HEADER: [&str; 3] = ["word", "ipa", "syllables"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PronunciationEntry {
    pub word: String,
    pub citation: PhonemeSeq,
    pub syllables: u32,
}

/// Word to citation form. Words are lowercased; the first entry for a word wins.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PronunciationLexicon {
    entries: BTreeMap<String, PronunciationEntry>,
}

impl PronunciationLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts unless the word is already present. Returns whether it was inserted.
    pub fn insert(&mut self, entry: PronunciationEntry) -> bool {
        use std::collections::btree_map::Entry;
        match self.entries.entry(entry.word.clone()) {
            Entry::Occupied(_) => false,
            Entry::Vacant(v) => {
                v.insert(entry);
                true
            }
        }
    }

    pub fn get(&self, word: &str) -> Option<&PronunciationEntry> {
        self.entries.get(word)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in lexicographic word order.
    pub fn iter(&self) -> impl Iterator<Item = &PronunciationEntry> {
        self.entries.values()
    }

    /// Parses the `word<TAB>ipa<TAB>syllables` format. The header must be the
    /// first non-blank line.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Loaded<PronunciationLexicon>, PhonologyError> {
        let mut lexicon = PronunciationLexicon::new();
        let mut report = IngestReport::default();
        let mut saw_header = false;

        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() {
                continue;
            }
            if !saw_header {
                let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
                if cols != LEXICON_HEADER {
                    return Err(PhonologyError::Format(format!(
                        "expected header `word\\tipa\\tsyllables`, found {line:?}"
                    )));
                }
                saw_header = true;
                continue;
            }
            report.lines_read += 1;
            match parse_line(line) {
                Ok(entry) => {
                    let word = entry.word.clone();
                    if lexicon.insert(entry) {
                        report.accepted += 1;
                    } else {
                        debug!(line = lineno + 1, %word, "duplicate lexicon entry ignored");
                        report.skip("duplicate");
                    }
                }
                Err(reason) => {
                    warn!(line = lineno + 1, reason, "malformed lexicon line skipped");
                    report.skip(reason);
                }
            }
        }
        if !saw_header {
            return Err(PhonologyError::Format("missing header row".into()));
        }
        Ok(Loaded { value: lexicon, report })
    }
}

fn parse_line(line: &str) -> Result<PronunciationEntry, &'static str> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 3 {
        return Err("field_count");
    }
    let word = cols[0].trim().to_lowercase();
    if word.is_empty() {
        return Err("empty_word");
    }
    let citation = tokenize_ipa(cols[1].trim()).map_err(|_| "empty_ipa")?;
    let syllables: u32 = cols[2].trim().parse().map_err(|_| "bad_syllables")?;
    if syllables == 0 {
        return Err("bad_syllables");
    }
    Ok(PronunciationEntry {
        word,
        citation,
        syllables,
    })
}

/// Reads a lexicon TSV from disk.
pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Loaded<PronunciationLexicon>, PhonologyError> {
    let file = File::open(path.as_ref())?;
    PronunciationLexicon::from_reader(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Loaded<PronunciationLexicon>, PhonologyError> {
        PronunciationLexicon::from_reader(text.as_bytes())
    }

    #[test]
    fn reads_entries() {
        let lex = parse("word\tipa\tsyllables\nread\tɹ i d\t1\nweed\tw i d\t1\n")
            .unwrap()
            .value;
        let read = lex.get("read").unwrap();
        assert_eq!(read.citation, PhonemeSeq::from_symbols(&["ɹ", "i", "d"]).unwrap());
        assert_eq!(read.syllables, 1);
        assert_eq!(lex.get("weed").unwrap().citation.to_spaced(), "w i d");
    }

    #[test]
    fn header_only_is_empty() {
        let loaded = parse("word\tipa\tsyllables\n").unwrap();
        assert!(loaded.value.is_empty());
        assert_eq!(loaded.report.skipped_total(), 0);
    }

    #[test]
    fn missing_header_is_format_error() {
        assert!(matches!(parse("read\tɹ i d\t1\n"), Err(PhonologyError::Format(_))));
        assert!(matches!(parse(""), Err(PhonologyError::Format(_))));
    }

    #[test]
    fn malformed_and_duplicates_counted() {
        let loaded = parse(
            "word\tipa\tsyllables\n\
             Read\tɹ i d\t1\n\
             read\tw i d\t1\n\
             bad line\n\
             zero\tz i\t0\n\
             blank\t \t1\n",
        )
        .unwrap();
        assert_eq!(loaded.value.len(), 1);
        assert_eq!(loaded.value.get("read").unwrap().citation.to_spaced(), "ɹ i d");
        assert_eq!(loaded.report.skipped["duplicate"], 1);
        assert_eq!(loaded.report.skipped["field_count"], 1);
        assert_eq!(loaded.report.skipped["bad_syllables"], 1);
        assert_eq!(loaded.report.skipped["empty_ipa"], 1);
    }

    #[test]
    fn unreadable_file_is_io() {
        assert!(matches!(
            load_lexicon("/nonexistent/lexicon.tsv"),
            Err(PhonologyError::Io(_))
        ));
    }
}
