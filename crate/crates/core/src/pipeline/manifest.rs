use std::collections::BTreeMap;

use serde::Serialize;

use super::RunConfig;
use crate::corpus::Selection;
use crate::ingest::IngestReport;
use crate::likelihood::CalibrationObjective;

/// What happened to corpus tokens between selection and scoring.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TokenCounts {
    pub selected_successes: usize,
    pub selected_failures: usize,
    /// Unselected tokens by reason code.
    pub excluded: BTreeMap<String, usize>,
    pub scored_successes: usize,
    pub scored_failures: usize,
    /// Selected tokens that could not be scored, by reason code.
    pub scoring_excluded: BTreeMap<String, usize>,
}

impl TokenCounts {
    pub fn from_selection(sel: &Selection) -> Self {
        TokenCounts {
            selected_successes: sel.successes().count(),
            selected_failures: sel.failures().count(),
            excluded: sel
                .exclusion_counts()
                .into_iter()
                .map(|(r, n)| (r.code().to_string(), n))
                .collect(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationSummary {
    pub objective: CalibrationObjective,
    pub sample_size: usize,
    pub skipped: usize,
    pub seed: u64,
    /// Prior sources pooled into the objective.
    pub priors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisSummary {
    pub models: Vec<String>,
    pub auc: Option<f64>,
    /// Why an analysis produced no output, keyed by output file.
    pub skipped: BTreeMap<String, String>,
    pub surprisal_averaging: String,
    pub age_bin_months: u32,
    pub infogain_missing_age: usize,
}

/// Everything needed to audit or reproduce a run. Only `timestamp_unix`
/// differs between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub fold_table_version: String,
    pub config: RunConfig,
    pub input_sha256: BTreeMap<String, String>,
    pub ingest: BTreeMap<String, IngestReport>,
    pub vocab_size: usize,
    /// Whose gloss tokens count toward the vocabulary threshold.
    pub vocab_counts: String,
    pub beta: f64,
    /// `fixed` or `calibrated`.
    pub beta_source: String,
    pub calibration: Option<CalibrationSummary>,
    pub tokens: TokenCounts,
    pub analysis: AnalysisSummary,
    /// Output file name to SHA-256 of its bytes.
    pub outputs: BTreeMap<String, String>,
    pub timestamp_unix: u64,
}
