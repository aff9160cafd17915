//! End-to-end runs: ingest, select, build the vocabulary, optionally calibrate
//! β, score every selected token under the configured prior and a uniform
//! baseline, and write the analyses. Every file is written atomically and
//! described in `manifest.json`.

mod manifest;
mod scores;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tracing::{info, warn};

pub use manifest::{AnalysisSummary, CalibrationSummary, RunManifest, TokenCounts};
pub use scores::{read_scores, write_scores, ScoreFileError};

use crate::analysis::{
    information_gain_by_age, roc_failures, surprisal_report, DistanceBins, GainObservation, InfoGainReport, RocCurve,
    SurprisalReport,
};
use crate::corpus::{load_corpus, normalize_gloss, select_tokens, Corpus, ProductionToken, SelectOptions, Selection};
use crate::ingest::IngestReport;
use crate::likelihood::{
    calibrate_beta, BetaGrid, CalibrationObjective, CalibrationOptions, CalibrationResult, DistanceCache,
    LikelihoodConfig, DEFAULT_BETA, DEFAULT_SAMPLE_SIZE,
};
use crate::phonology::{load_lexicon, PronunciationLexicon, FOLD_TABLE_VERSION};
use crate::posterior::{score_token, ScoreConfig, ScoreError, TokenScore, DEFAULT_TOP_K};
use crate::priors::{
    ContextMode, ExternalPrior, NgramModel, NgramPrior, PriorError, PriorSource, UniformPrior, UnigramModel,
    UnigramPrior,
};
use crate::vocabulary::{build_vocab, count_glosses, CandidateVocab};

pub const DEFAULT_WINDOW: usize = 20;
pub const DEFAULT_MIN_COUNT: u64 = 3;
pub const DEFAULT_AGE_BIN_MONTHS: u32 = 6;
pub const DEFAULT_PROVIDER_TIMEOUT_MS: u64 = 30_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Ingest,
    Select,
    Vocabulary,
    Calibrate,
    Score,
    Analyze,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Select => "select",
            Stage::Vocabulary => "vocabulary",
            Stage::Calibrate => "calibrate",
            Stage::Score => "score",
            Stage::Analyze => "analyze",
            Stage::Write => "write",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{stage}: {message}")]
    Data { stage: Stage, message: String },
    #[error("{stage}: token {token_id}: {message}")]
    Provider {
        stage: Stage,
        token_id: String,
        message: String,
    },
}

impl PipelineError {
    pub fn data(stage: Stage, e: impl fmt::Display) -> Self {
        PipelineError::Data {
            stage,
            message: e.to_string(),
        }
    }

    pub fn stage(&self) -> Stage {
        match self {
            PipelineError::Config(_) => Stage::Config,
            PipelineError::Data { stage, .. } | PipelineError::Provider { stage, .. } => *stage,
        }
    }

    /// 2 for configuration, 3 for data, 4 for prior-provider failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Data { .. } => 3,
            PipelineError::Provider { .. } => 4,
        }
    }
}

/// How much discourse an n-gram prior sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum NgramWindow {
    /// Only the masked utterance.
    #[value(name = "one_utt")]
    OneUtt,
    /// The preceding utterances of the window as well.
    Context,
}

impl From<NgramWindow> for ContextMode {
    fn from(w: NgramWindow) -> Self {
        match w {
            NgramWindow::OneUtt => ContextMode::Utterance,
            NgramWindow::Context => ContextMode::Discourse,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    Uniform,
    Unigram,
    Ngram {
        order: usize,
        window: NgramWindow,
        backoff: f64,
        /// Training transcripts; the scored corpus when absent.
        train_corpus: Option<PathBuf>,
    },
    External {
        endpoint: String,
        timeout_ms: u64,
    },
}

impl PriorSpec {
    /// Model name used in reports.
    pub fn name(&self) -> String {
        match self {
            PriorSpec::Uniform => "uniform".into(),
            PriorSpec::Unigram => "unigram".into(),
            PriorSpec::Ngram { order, window, .. } => match window {
                NgramWindow::OneUtt => format!("ngram{order}_one_utt"),
                NgramWindow::Context => format!("ngram{order}_context"),
            },
            PriorSpec::External { .. } => "external".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub lexicon: PathBuf,
    /// One word per line; every lexicon word when absent.
    pub prior_vocab: Option<PathBuf>,
    pub prior: PriorSpec,
    /// Fixed β; ignored when `calibrate` is set.
    pub beta: Option<f64>,
    pub calibrate: bool,
    /// Fit one β jointly for the configured prior and the uniform baseline.
    pub calibrate_across: bool,
    pub grid: BetaGrid,
    pub calibration_sample: usize,
    pub objective: CalibrationObjective,
    pub seed: u64,
    pub window: usize,
    pub min_count: u64,
    pub include_vowelless: bool,
    pub top_k: usize,
    pub age_bin_months: u32,
    /// First edit distance pooled into the open-ended bin.
    pub distance_open_from: u32,
    pub threads: Option<usize>,
    /// Not part of the snapshot so that runs into different directories compare equal.
    #[serde(skip)]
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn new(corpus: impl Into<PathBuf>, lexicon: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            corpus: corpus.into(),
            lexicon: lexicon.into(),
            prior_vocab: None,
            prior: PriorSpec::Uniform,
            beta: None,
            calibrate: false,
            calibrate_across: false,
            grid: BetaGrid::default(),
            calibration_sample: DEFAULT_SAMPLE_SIZE,
            objective: CalibrationObjective::GeometricMean,
            seed: 0,
            window: DEFAULT_WINDOW,
            min_count: DEFAULT_MIN_COUNT,
            include_vowelless: false,
            top_k: DEFAULT_TOP_K,
            age_bin_months: DEFAULT_AGE_BIN_MONTHS,
            distance_open_from: DistanceBins::default().open_from,
            threads: None,
            out_dir: out_dir.into(),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        if let Some(b) = self.beta {
            if self.calibrate {
                return bad("give either a fixed beta or calibrate, not both");
            }
            if !(b.is_finite() && b > 0.0) {
                return bad("beta must be positive");
            }
        }
        BetaGrid::new(self.grid.lo, self.grid.hi, self.grid.step).map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.calibration_sample == 0 {
            return bad("calibration sample must be positive");
        }
        if self.top_k == 0 || self.age_bin_months == 0 || self.distance_open_from == 0 {
            return bad("top_k, age bin width and distance bins must be positive");
        }
        if self.threads == Some(0) {
            return bad("threads must be positive");
        }
        match &self.prior {
            PriorSpec::Ngram { order, backoff, .. } => {
                if *order == 0 {
                    return bad("n-gram order must be at least 1");
                }
                if !(*backoff > 0.0 && *backoff <= 1.0) {
                    return bad("backoff must be in (0, 1]");
                }
            }
            PriorSpec::External { endpoint, .. } if endpoint.is_empty() => {
                return bad("external prior needs an endpoint");
            }
            _ => {}
        }
        Ok(())
    }

    fn select_options(&self) -> SelectOptions {
        SelectOptions {
            window: self.window,
            include_vowelless: self.include_vowelless,
            ..SelectOptions::default()
        }
    }

    fn score_config(&self, beta: f64) -> Result<ScoreConfig, PipelineError> {
        let mut likelihood = LikelihoodConfig::with_beta(beta).map_err(|e| PipelineError::Config(e.to_string()))?;
        likelihood.grid = self.grid;
        Ok(ScoreConfig {
            likelihood,
            top_k: self.top_k,
        })
    }

    fn calibration_options(&self) -> CalibrationOptions {
        CalibrationOptions {
            grid: self.grid,
            sample_size: self.calibration_sample,
            seed: self.seed,
            objective: self.objective,
        }
    }
}

/// Loaded input files with their ingest reports and content hashes.
pub struct Inputs {
    pub corpus: Corpus,
    pub lexicon: PronunciationLexicon,
    pub prior_vocab: HashSet<String>,
    pub train_corpus: Option<Corpus>,
    pub ingest: BTreeMap<String, IngestReport>,
    pub sha256: BTreeMap<String, String>,
}

fn sha256_file(path: &Path) -> Result<String, PipelineError> {
    let bytes = fs::read(path).map_err(|e| PipelineError::data(Stage::Ingest, format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn read_whitelist(path: &Path) -> Result<HashSet<String>, PipelineError> {
    let text =
        fs::read_to_string(path).map_err(|e| PipelineError::data(Stage::Ingest, format!("{}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(normalize_gloss)
        .filter(|w| !w.is_empty())
        .collect())
}

pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs, PipelineError> {
    let mut ingest = BTreeMap::new();
    let mut sha = BTreeMap::new();
    let ingest_err =
        |path: &Path, e: &dyn fmt::Display| PipelineError::data(Stage::Ingest, format!("{}: {e}", path.display()));

    sha.insert("lexicon".to_string(), sha256_file(&cfg.lexicon)?);
    let lex = load_lexicon(&cfg.lexicon).map_err(|e| ingest_err(&cfg.lexicon, &e))?;
    ingest.insert("lexicon".to_string(), lex.report);

    sha.insert("corpus".to_string(), sha256_file(&cfg.corpus)?);
    let corpus = load_corpus(&cfg.corpus).map_err(|e| ingest_err(&cfg.corpus, &e))?;
    ingest.insert("corpus".to_string(), corpus.report);

    let prior_vocab = match &cfg.prior_vocab {
        Some(p) => {
            sha.insert("prior_vocab".to_string(), sha256_file(p)?);
            read_whitelist(p)?
        }
        None => lex.value.iter().map(|e| e.word.clone()).collect(),
    };

    let train_corpus = match &cfg.prior {
        PriorSpec::Ngram {
            train_corpus: Some(p), ..
        } => {
            sha.insert("train_corpus".to_string(), sha256_file(p)?);
            let c = load_corpus(p).map_err(|e| ingest_err(p, &e))?;
            ingest.insert("train_corpus".to_string(), c.report);
            Some(c.value)
        }
        _ => None,
    };

    for (name, r) in &ingest {
        if r.skipped_total() > 0 {
            warn!(file = %name, skipped = ?r.skipped, "malformed lines skipped");
        }
    }
    Ok(Inputs {
        corpus: corpus.value,
        lexicon: lex.value,
        prior_vocab,
        train_corpus,
        ingest,
        sha256: sha,
    })
}

pub fn select(inputs: &Inputs, cfg: &RunConfig) -> Selection {
    select_tokens(
        &inputs.corpus,
        &inputs.lexicon,
        &inputs.prior_vocab,
        &cfg.select_options(),
    )
}

pub fn build_vocabulary(inputs: &Inputs, cfg: &RunConfig) -> Result<CandidateVocab, PipelineError> {
    build_vocab(&inputs.lexicon, &inputs.corpus, &inputs.prior_vocab, cfg.min_count)
        .map_err(|e| PipelineError::data(Stage::Vocabulary, e))
}

/// The configured prior. Count-based priors are estimated from the training
/// corpus when one is given, else from the scored corpus.
pub fn build_prior(cfg: &RunConfig, inputs: &Inputs) -> Box<dyn PriorSource> {
    let train = inputs.train_corpus.as_ref().unwrap_or(&inputs.corpus);
    match &cfg.prior {
        PriorSpec::Uniform => Box::new(UniformPrior),
        PriorSpec::Unigram => Box::new(UnigramPrior {
            model: UnigramModel::from_counts(&count_glosses(train)),
        }),
        PriorSpec::Ngram {
            order, window, backoff, ..
        } => {
            let unigram = UnigramModel::from_counts(&count_glosses(train));
            Box::new(NgramPrior {
                model: NgramModel::train(train, *order, *backoff, unigram),
                mode: (*window).into(),
            })
        }
        PriorSpec::External { endpoint, timeout_ms } => {
            Box::new(ExternalPrior::http(endpoint, Duration::from_millis(*timeout_ms)))
        }
    }
}

pub fn calibrate(
    cfg: &RunConfig,
    tokens: &[ProductionToken],
    priors: &[&dyn PriorSource],
    vocab: &CandidateVocab,
    cache: &DistanceCache,
) -> Result<CalibrationResult, PipelineError> {
    let successes: Vec<ProductionToken> = tokens.iter().filter(|t| t.is_success()).cloned().collect();
    let res = calibrate_beta(&successes, priors, vocab, &cfg.calibration_options(), Some(cache))
        .map_err(|e| PipelineError::data(Stage::Calibrate, e))?;
    let edges = (res.curve.first().map(|c| c.0), res.curve.last().map(|c| c.0));
    if edges.0 == Some(res.best_beta) || edges.1 == Some(res.best_beta) {
        warn!(beta = res.best_beta, "calibrated beta is at the edge of the grid");
    }
    Ok(res)
}

/// Scores of one model plus the tokens it could not score.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoredSet {
    pub scores: Vec<TokenScore>,
    /// `(token id, reason code)` in token order.
    pub excluded: Vec<(String, String)>,
}

/// Scores tokens in parallel, in token order. An unreachable provider aborts;
/// any other per-token failure excludes that token with a reason code.
pub fn score_all(
    tokens: &[ProductionToken],
    prior: &dyn PriorSource,
    vocab: &CandidateVocab,
    cfg: &ScoreConfig,
    cache: &DistanceCache,
) -> Result<ScoredSet, PipelineError> {
    let results: Vec<Result<TokenScore, (String, String)>> = tokens
        .par_iter()
        .map(|t| match score_token(t, prior, vocab, cfg, Some(cache)) {
            Ok(r) => Ok(Ok(r.to_score())),
            Err(ScoreError::Prior {
                source: e @ PriorError::ProviderUnreachable(_),
                ..
            }) => Err(PipelineError::Provider {
                stage: Stage::Score,
                token_id: t.id.clone(),
                message: e.to_string(),
            }),
            Err(e) => {
                warn!(token = %t.id, error = %e, "token not scored");
                Ok(Err((t.id.clone(), e.code().to_string())))
            }
        })
        .collect::<Result<_, _>>()?;
    let mut set = ScoredSet::default();
    for r in results {
        match r {
            Ok(s) => set.scores.push(s),
            Err(x) => set.excluded.push(x),
        }
    }
    Ok(set)
}

fn keep_common(a: &mut Vec<TokenScore>, b: &mut Vec<TokenScore>) {
    let ida: HashSet<String> = a.iter().map(|t| t.token_id.clone()).collect();
    let idb: HashSet<String> = b.iter().map(|t| t.token_id.clone()).collect();
    a.retain(|t| idb.contains(&t.token_id));
    b.retain(|t| ida.contains(&t.token_id));
}

/// Entropy ROC over scored successes and failures.
pub fn classify(scores: &[TokenScore]) -> Result<RocCurve, PipelineError> {
    let (s, f): (Vec<&TokenScore>, Vec<&TokenScore>) = scores.iter().partition(|t| t.is_success());
    let s: Vec<f64> = s.iter().map(|t| t.posterior_entropy).collect();
    let f: Vec<f64> = f.iter().map(|t| t.posterior_entropy).collect();
    roc_failures(&s, &f).map_err(|e| PipelineError::data(Stage::Analyze, e))
}

/// Information gain by age from fitted-prior and uniform-prior scores of the same tokens.
pub fn infogain(
    fitted: &[TokenScore],
    uniform: &[TokenScore],
    bin_width: u32,
) -> Result<InfoGainReport, PipelineError> {
    let obs = GainObservation::pair_scores(fitted, uniform).map_err(|e| PipelineError::data(Stage::Analyze, e))?;
    Ok(information_gain_by_age(&obs, bin_width))
}

pub fn report(models: &[(String, Vec<TokenScore>)], open_from: u32) -> Result<SurprisalReport, PipelineError> {
    surprisal_report(models, DistanceBins { open_from }).map_err(|e| PipelineError::data(Stage::Analyze, e))
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

struct OutputWriter<'a> {
    dir: &'a Path,
    hashes: BTreeMap<String, String>,
}

impl OutputWriter<'_> {
    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        write_atomic(&self.dir.join(name), bytes)
            .map_err(|e| PipelineError::data(Stage::Write, format!("{name}: {e}")))?;
        self.hashes.insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    }
}

fn scores_bytes(scores: &[TokenScore], top_k: usize) -> Result<Vec<u8>, PipelineError> {
    let mut buf = Vec::new();
    write_scores(&mut buf, scores, top_k).map_err(|e| PipelineError::data(Stage::Write, e))?;
    Ok(buf)
}

fn exclusions_bytes(sel: &Selection) -> Result<Vec<u8>, PipelineError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| PipelineError::data(Stage::Write, e);
    w.write_record(["transcript_id", "utterance_index", "token_index", "gloss", "reason"])
        .map_err(err)?;
    for x in &sel.exclusions {
        w.write_record([
            x.transcript_id.as_str(),
            &x.utterance_index.to_string(),
            &x.token_index.to_string(),
            &x.gloss,
            x.reason.code(),
        ])
        .map_err(err)?;
    }
    w.into_inner().map_err(|e| PipelineError::data(Stage::Write, e))
}

/// Runs every stage and writes into `cfg.out_dir`:
/// `vocab.tsv`, `exclusions.csv`, `calibration.csv` (when calibrating),
/// `scores.csv`, `scores_uniform.csv`, `roc.csv`, `infogain.csv`,
/// `surprisal_by_model.csv`, `surprisal_by_distance.csv`, `surprisal_paired.csv`
/// and finally `manifest.json`.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunManifest, PipelineError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    pool.install(|| run_stages(cfg))
}

fn run_stages(cfg: &RunConfig) -> Result<RunManifest, PipelineError> {
    fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| PipelineError::data(Stage::Write, format!("{}: {e}", cfg.out_dir.display())))?;
    let mut out = OutputWriter {
        dir: &cfg.out_dir,
        hashes: BTreeMap::new(),
    };

    let inputs = load_inputs(cfg)?;
    info!(
        utterances = inputs.corpus.len(),
        lexicon = inputs.lexicon.len(),
        "inputs loaded"
    );
    let selection = select(&inputs, cfg);
    let mut counts = TokenCounts::from_selection(&selection);
    info!(
        successes = counts.selected_successes,
        failures = counts.selected_failures,
        excluded = selection.exclusions.len(),
        "tokens selected"
    );
    out.put("exclusions.csv", &exclusions_bytes(&selection)?)?;

    let vocab = build_vocabulary(&inputs, cfg)?;
    let mut vocab_tsv = Vec::new();
    vocab
        .write_tsv(&mut vocab_tsv)
        .map_err(|e| PipelineError::data(Stage::Write, e))?;
    out.put("vocab.tsv", &vocab_tsv)?;

    let prior = build_prior(cfg, &inputs);
    let fitted_is_uniform = cfg.prior == PriorSpec::Uniform;
    let uniform = UniformPrior;
    let cache = DistanceCache::new();

    let (beta, calibration) = if cfg.calibrate {
        let mut priors: Vec<&dyn PriorSource> = vec![prior.as_ref()];
        if cfg.calibrate_across && !fitted_is_uniform {
            priors.push(&uniform);
        }
        let res = calibrate(cfg, &selection.tokens, &priors, &vocab, &cache)?;
        out.put("calibration.csv", res.to_csv().as_bytes())?;
        info!(beta = res.best_beta, "beta calibrated");
        let summary = CalibrationSummary {
            objective: cfg.objective,
            sample_size: res.sample_size,
            skipped: res.skipped,
            seed: res.seed,
            priors: priors.iter().map(|p| p.kind().to_string()).collect(),
        };
        (res.best_beta, Some(summary))
    } else {
        (cfg.beta.unwrap_or(DEFAULT_BETA), None)
    };
    let score_cfg = cfg.score_config(beta)?;

    let fitted = score_all(&selection.tokens, prior.as_ref(), &vocab, &score_cfg, &cache)?;
    let baseline = if fitted_is_uniform {
        fitted.clone()
    } else {
        score_all(&selection.tokens, &uniform, &vocab, &score_cfg, &cache)?
    };
    // one reason per token, the fitted model's first
    let mut reasons: BTreeMap<&str, &str> = BTreeMap::new();
    for (id, code) in fitted.excluded.iter().chain(&baseline.excluded) {
        reasons.entry(id).or_insert(code);
    }
    for code in reasons.values() {
        *counts.scoring_excluded.entry(code.to_string()).or_insert(0) += 1;
    }
    let mut fitted_scores = fitted.scores;
    let mut uniform_scores = baseline.scores;
    keep_common(&mut fitted_scores, &mut uniform_scores);
    counts.scored_successes = fitted_scores.iter().filter(|t| t.is_success()).count();
    counts.scored_failures = fitted_scores.len() - counts.scored_successes;
    out.put("scores.csv", &scores_bytes(&fitted_scores, cfg.top_k)?)?;
    out.put("scores_uniform.csv", &scores_bytes(&uniform_scores, cfg.top_k)?)?;

    let mut skipped = BTreeMap::new();
    let auc = match classify(&fitted_scores) {
        Ok(roc) => {
            out.put("roc.csv", roc.to_csv().as_bytes())?;
            Some(roc.auc)
        }
        Err(e) => {
            warn!(error = %e, "roc skipped");
            skipped.insert("roc.csv".to_string(), e.to_string());
            None
        }
    };

    let gains = infogain(&fitted_scores, &uniform_scores, cfg.age_bin_months)?;
    out.put("infogain.csv", gains.to_csv().as_bytes())?;

    let fitted_name = cfg.prior.name();
    let mut models = vec![(fitted_name.clone(), fitted_scores)];
    if !fitted_is_uniform {
        models.push(("uniform".to_string(), uniform_scores));
    }
    let model_names = models.iter().map(|m| m.0.clone()).collect();
    let surprisal = report(&models, cfg.distance_open_from)?;
    out.put("surprisal_by_model.csv", surprisal.by_model_csv().as_bytes())?;
    out.put("surprisal_by_distance.csv", surprisal.by_distance_csv().as_bytes())?;
    out.put("surprisal_paired.csv", surprisal.paired_csv().as_bytes())?;

    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        fold_table_version: FOLD_TABLE_VERSION.to_string(),
        config: cfg.clone(),
        input_sha256: inputs.sha256,
        ingest: inputs.ingest,
        vocab_size: vocab.len(),
        vocab_counts: "all_speakers".into(),
        beta,
        beta_source: if cfg.calibrate { "calibrated" } else { "fixed" }.to_string(),
        calibration,
        tokens: counts,
        analysis: AnalysisSummary {
            models: model_names,
            auc,
            skipped,
            surprisal_averaging: surprisal.averaging.to_string(),
            age_bin_months: cfg.age_bin_months,
            infogain_missing_age: gains.missing_age,
        },
        outputs: out.hashes.clone(),
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| PipelineError::data(Stage::Write, e))?;
    write_atomic(&cfg.out_dir.join("manifest.json"), &json)
        .map_err(|e| PipelineError::data(Stage::Write, format!("manifest.json: {e}")))?;
    Ok(manifest)
}
