use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use tracing::warn;

use super::{normalize_gloss, CorpusError, Speaker, Utterance};
use crate::ingest::{IngestReport, Loaded};
use crate::phonology::{tokenize_ipa, PhonemeSeq};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct UtteranceRecord {
    transcript_id: String,
    utterance_index: u64,
    speaker: String,
    #[serde(default)]
    age_months: Option<f64>,
    gloss: Vec<String>,
    #[serde(default)]
    phon: Option<Vec<Vec<String>>>,
}

/// Utterances ordered by transcript id, then utterance index.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    utterances: Vec<Arc<Utterance>>,
}

impl Corpus {
    /// Sorts and de-duplicates; a repeated `(transcript, index)` keeps the first.
    pub fn new(utterances: Vec<Utterance>) -> Self {
        Self::build(utterances, &mut IngestReport::default())
    }

    fn build(utterances: Vec<Utterance>, report: &mut IngestReport) -> Self {
        let mut keyed: BTreeMap<(String, u64), Arc<Utterance>> = BTreeMap::new();
        for u in utterances {
            let key = (u.transcript_id.clone(), u.utterance_index);
            if keyed.contains_key(&key) {
                report.skip("duplicate_index");
                report.accepted -= report.accepted.min(1);
                continue;
            }
            keyed.insert(key, Arc::new(u));
        }
        Corpus {
            utterances: keyed.into_values().collect(),
        }
    }

    pub fn utterances(&self) -> &[Arc<Utterance>] {
        &self.utterances
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    /// Contiguous per-transcript slices.
    pub fn transcripts(&self) -> impl Iterator<Item = &[Arc<Utterance>]> {
        self.utterances.chunk_by(|a, b| a.transcript_id == b.transcript_id)
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Loaded<Corpus>, CorpusError> {
        let mut report = IngestReport::default();
        let mut utterances = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            report.lines_read += 1;
            match parse_record(&line) {
                Ok(u) => {
                    report.accepted += 1;
                    utterances.push(u);
                }
                Err(reason) => {
                    warn!(line = lineno + 1, reason, "corpus line skipped");
                    report.skip(reason);
                }
            }
        }
        let value = Corpus::build(utterances, &mut report);
        Ok(Loaded { value, report })
    }
}

fn parse_record(line: &str) -> Result<Utterance, &'static str> {
    let rec: UtteranceRecord = serde_json::from_str(line).map_err(|_| "malformed_json")?;
    if let Some(age) = rec.age_months {
        if !(age.is_finite() && age > 0.0) {
            return Err("bad_age");
        }
    }
    let phon_tokens = match rec.phon {
        None => None,
        Some(phon) => {
            if phon.len() != rec.gloss.len() {
                return Err("misaligned_phon");
            }
            let seqs = phon
                .iter()
                .map(|tok| tokenize_ipa(&tok.join(" ")))
                .collect::<Result<Vec<PhonemeSeq>, _>>()
                .map_err(|_| "bad_phon")?;
            Some(seqs)
        }
    };
    Ok(Utterance {
        transcript_id: rec.transcript_id,
        utterance_index: rec.utterance_index,
        speaker: Speaker::from_code(&rec.speaker),
        gloss_tokens: rec.gloss.iter().map(|g| normalize_gloss(g)).collect(),
        phon_tokens,
        age_months: rec.age_months,
    })
}

/// Reads a JSON-lines corpus. Bad lines are skipped and counted in the report.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Loaded<Corpus>, CorpusError> {
    let file = File::open(path.as_ref())?;
    Corpus::from_reader(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Loaded<Corpus> {
        Corpus::from_reader(text.as_bytes()).unwrap()
    }

    #[test]
    fn two_lines_in_order() {
        let loaded = load(concat!(
            r#"{"transcript_id":"a","utterance_index":1,"speaker":"MOT","age_months":null,"gloss":["no"],"phon":null}"#,
            "\n",
            r#"{"transcript_id":"a","utterance_index":0,"speaker":"CHI","age_months":14.5,"gloss":["hi"],"phon":[["h","a","ɪ"]]}"#,
            "\n"
        ));
        let utts = loaded.value.utterances();
        assert_eq!(utts.len(), 2);
        assert_eq!(utts[0].utterance_index, 0);
        assert_eq!(utts[0].speaker, Speaker::Child);
        assert_eq!(utts[1].speaker, Speaker::Caregiver);
        assert_eq!(loaded.report.accepted, 2);
    }

    #[test]
    fn misaligned_line_skipped() {
        let loaded = load(
            r#"{"transcript_id":"a","utterance_index":0,"speaker":"CHI","age_months":null,"gloss":["a","b"],"phon":[["a"]]}"#,
        );
        assert!(loaded.value.is_empty());
        assert_eq!(loaded.report.skipped["misaligned_phon"], 1);
    }

    #[test]
    fn non_json_line_skipped() {
        let loaded = load("not json\n");
        assert_eq!(loaded.report.skipped["malformed_json"], 1);
    }

    #[test]
    fn aligned_utterance_with_unsegmented_phon() {
        let loaded = load(
            r#"{"transcript_id":"p","utterance_index":3,"speaker":"CHI","age_months":20,"gloss":["I","want","to","<read>"],"phon":[["ɑə"],["wɑn"],["də"],["wid"]]}"#,
        );
        let u = &loaded.value.utterances()[0];
        assert_eq!(u.gloss_tokens, ["i", "want", "to", "read"]);
        let phon = u.phon_tokens.as_ref().unwrap();
        assert_eq!(phon.len(), 4);
        assert_eq!(phon[3].to_spaced(), "w i d");
        assert_eq!(phon[0].to_spaced(), "ɑ ə");
    }

    #[test]
    fn duplicate_index_keeps_first() {
        let loaded = load(concat!(
            r#"{"transcript_id":"a","utterance_index":0,"speaker":"CHI","gloss":["first"]}"#,
            "\n",
            r#"{"transcript_id":"a","utterance_index":0,"speaker":"CHI","gloss":["second"]}"#,
        ));
        assert_eq!(loaded.value.len(), 1);
        assert_eq!(loaded.value.utterances()[0].gloss_tokens, ["first"]);
        assert_eq!(loaded.report.skipped["duplicate_index"], 1);
        assert_eq!(loaded.report.accepted, 1);
    }

    #[test]
    fn transcripts_are_grouped() {
        let loaded = load(concat!(
            r#"{"transcript_id":"b","utterance_index":0,"speaker":"CHI","gloss":["x"]}"#,
            "\n",
            r#"{"transcript_id":"a","utterance_index":0,"speaker":"CHI","gloss":["y"]}"#,
            "\n",
            r#"{"transcript_id":"a","utterance_index":1,"speaker":"CHI","gloss":["z"]}"#,
        ));
        let sizes: Vec<usize> = loaded.value.transcripts().map(<[_]>::len).collect();
        assert_eq!(sizes, [2, 1]);
    }
}
