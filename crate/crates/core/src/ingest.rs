//! Bookkeeping shared by the line-oriented file loaders.

use std::collections::BTreeMap;

/// Counts of what happened to each line of an ingested file.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct IngestReport {
    pub lines_read: usize,
    pub accepted: usize,
    /// Skipped lines keyed by a short reason code.
    pub skipped: BTreeMap<String, usize>,
}

impl IngestReport {
    pub fn skip(&mut self, reason: &str) {
        *self.skipped.entry(reason.to_string()).or_insert(0) += 1;
    }

    pub fn skipped_total(&self) -> usize {
        self.skipped.values().sum()
    }
}

/// A loaded value together with its ingest report.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub value: T,
    pub report: IngestReport,
}
